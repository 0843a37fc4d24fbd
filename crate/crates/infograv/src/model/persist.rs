//! Versioned JSON persistence for trained models.
//!
//! Layout (all map keys deterministically ordered so equal models produce
//! byte-identical files):
//!
//! ```json
//! {
//!   "baseline": {"observed": {"1": ["1", "2"], "2": ["1 2"]},
//!                "total_tokens": 5,
//!                "unigram": [0.1, 0.55, 0.35]},
//!   "counts": {"2": {"1": {"2": 2}, "2": {"1": 2}}},
//!   "discount": 0.75,
//!   "order": 2,
//!   "version": 1,
//!   "vocab": ["<unk>", "a", "b"]
//! }
//! ```
//!
//! Context keys and observed windows are token ids joined by single spaces.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BaselineStats, ContextTable, LanguageModel, Vocabulary};

/// Format version this build reads and writes.
const FORMAT_VERSION: u32 = 1;

// Field order is alphabetical so the emitted JSON has sorted keys.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    baseline: BaselineFile,
    counts: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>>,
    discount: f64,
    order: usize,
    version: u32,
    vocab: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct BaselineFile {
    observed: BTreeMap<String, Vec<String>>,
    total_tokens: u64,
    unigram: Vec<f64>,
}

fn key_of(ids: &[u32]) -> String {
    ids.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_key(key: &str, vocab_len: usize) -> Result<Vec<u32>> {
    key.split(' ')
        .map(|part| {
            let id: u32 = part
                .parse()
                .map_err(|_| Error::Validation(format!("bad token id {part:?} in model file")))?;
            if id as usize >= vocab_len {
                return Err(Error::Validation(format!(
                    "token id {id} outside vocabulary of size {vocab_len}"
                )));
            }
            Ok(id)
        })
        .collect()
}

impl LanguageModel {
    /// Serializes the model to canonical JSON bytes (sorted keys, stable
    /// float formatting), so equal models produce byte-identical output.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut counts = BTreeMap::new();
        for (i, table) in self.context_tables().iter().enumerate() {
            let order = i + 2;
            let mut per_ctx = BTreeMap::new();
            for (ctx, entry) in table {
                let conts: BTreeMap<String, u64> = entry
                    .continuations
                    .iter()
                    .map(|(&tok, &c)| (tok.to_string(), c))
                    .collect();
                per_ctx.insert(key_of(ctx), conts);
            }
            counts.insert(order.to_string(), per_ctx);
        }

        let mut observed = BTreeMap::new();
        for order in 1..=self.baseline().max_order() {
            let set = self.baseline().observed_set(order).expect("order tracked");
            let mut grams: Vec<String> = set.iter().map(|g| key_of(g)).collect();
            grams.sort();
            observed.insert(order.to_string(), grams);
        }

        let file = ModelFile {
            baseline: BaselineFile {
                observed,
                total_tokens: self.baseline().total_tokens(),
                unigram: self.baseline().unigram().to_vec(),
            },
            counts,
            discount: self.discount(),
            order: self.order(),
            version: FORMAT_VERSION,
            vocab: self.vocab().surfaces().to_vec(),
        };
        let mut bytes = serde_json::to_vec(&file)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Reconstructs a model from bytes written by [`Self::to_json_bytes`].
    pub fn from_json_bytes(bytes: &[u8]) -> Result<LanguageModel> {
        let value: serde_json::Value = serde_json::from_slice(bytes)?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Validation("model file lacks a version field".into()))?;
        if version != FORMAT_VERSION as u64 {
            return Err(Error::Version(version as u32));
        }
        let file: ModelFile = serde_json::from_value(value)?;

        if !(1..=5).contains(&file.order) {
            return Err(Error::Validation(format!("bad model order {}", file.order)));
        }
        let vocab = Vocabulary::from_surfaces(file.vocab)?;
        if file.baseline.unigram.len() != vocab.len() {
            return Err(Error::Validation(
                "unigram length does not match vocabulary size".into(),
            ));
        }

        let mut contexts: Vec<HashMap<Vec<u32>, ContextTable>> =
            vec![HashMap::new(); file.order - 1];
        for (order_key, per_ctx) in &file.counts {
            let order: usize = order_key
                .parse()
                .map_err(|_| Error::Validation(format!("bad count order key {order_key:?}")))?;
            if !(2..=file.order).contains(&order) {
                return Err(Error::Validation(format!(
                    "count order {order} outside 2..={}",
                    file.order
                )));
            }
            let table = &mut contexts[order - 2];
            for (ctx_key, conts) in per_ctx {
                let ctx = parse_key(ctx_key, vocab.len())?;
                if ctx.len() != order - 1 {
                    return Err(Error::Validation(format!(
                        "context {ctx_key:?} has wrong length for order {order}"
                    )));
                }
                let mut entry = ContextTable::default();
                for (tok_key, &c) in conts {
                    let tok = parse_key(tok_key, vocab.len())?;
                    if tok.len() != 1 {
                        return Err(Error::Validation(format!(
                            "continuation key {tok_key:?} must be a single id"
                        )));
                    }
                    entry.continuations.insert(tok[0], c);
                    entry.total += c;
                }
                table.insert(ctx, entry);
            }
        }

        let mut observed: Vec<HashSet<Vec<u32>>> = vec![HashSet::new(); file.order];
        for (order_key, grams) in &file.baseline.observed {
            let order: usize = order_key
                .parse()
                .map_err(|_| Error::Validation(format!("bad observed order key {order_key:?}")))?;
            if !(1..=file.order).contains(&order) {
                return Err(Error::Validation(format!(
                    "observed order {order} outside 1..={}",
                    file.order
                )));
            }
            for gram in grams {
                let ids = parse_key(gram, vocab.len())?;
                if ids.len() != order {
                    return Err(Error::Validation(format!(
                        "observed window {gram:?} has wrong length for order {order}"
                    )));
                }
                observed[order - 1].insert(ids);
            }
        }

        let baseline =
            BaselineStats::new(file.baseline.unigram, observed, file.baseline.total_tokens)?;
        Ok(LanguageModel::from_parts(
            file.order,
            file.discount,
            vocab,
            contexts,
            baseline,
        ))
    }

    /// Writes the model to a file (see [`Self::to_json_bytes`] for the format).
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_bytes()?)?;
        Ok(())
    }

    /// Reads a model written by [`Self::save`].
    pub fn load(path: &Path) -> Result<LanguageModel> {
        let bytes = std::fs::read(path)?;
        LanguageModel::from_json_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::train;

    fn probe_contexts(m: &LanguageModel) -> Vec<Vec<crate::model::TokenId>> {
        vec![
            vec![],
            m.encode("the"),
            m.encode("the cat"),
            m.encode("never seen before"),
            m.encode("sat ."),
        ]
    }

    #[test]
    fn roundtrip_preserves_every_probed_distribution() {
        let m = train("the cat sat . the dog sat . the cat ran fast", 3, 0.75).unwrap();
        let bytes = m.to_json_bytes().unwrap();
        let back = LanguageModel::from_json_bytes(&bytes).unwrap();
        for ctx in probe_contexts(&m) {
            let before = m.next_dist(&ctx);
            let after = back.next_dist(&ctx);
            for (a, b) in before.probs().iter().zip(after.probs()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
        assert_eq!(back.order(), 3);
        assert_eq!(back.discount(), 0.75);
    }

    #[test]
    fn serialization_is_byte_deterministic() {
        let a = train("a b c a b c a", 3, 0.6).unwrap();
        let b = train("a b c a b c a", 3, 0.6).unwrap();
        assert_eq!(a.to_json_bytes().unwrap(), b.to_json_bytes().unwrap());
    }

    #[test]
    fn saved_then_reloaded_file_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = train("x y z x y z", 2, 0.75).unwrap();
        m.save(&path).unwrap();
        let reloaded = LanguageModel::load(&path).unwrap();
        assert_eq!(
            m.to_json_bytes().unwrap(),
            reloaded.to_json_bytes().unwrap()
        );
    }

    #[test]
    fn unknown_version_is_rejected() {
        let m = train("a b a", 2, 0.75).unwrap();
        let mut value: serde_json::Value =
            serde_json::from_slice(&m.to_json_bytes().unwrap()).unwrap();
        value["version"] = serde_json::json!(99);
        let bytes = serde_json::to_vec(&value).unwrap();
        assert!(matches!(
            LanguageModel::from_json_bytes(&bytes),
            Err(Error::Version(99))
        ));
    }

    #[test]
    fn corrupt_ids_are_rejected() {
        let m = train("a b a", 2, 0.75).unwrap();
        let text = String::from_utf8(m.to_json_bytes().unwrap()).unwrap();
        // point a context key at an id beyond the vocabulary
        let bad = text.replace("\"1\":", "\"7\":");
        assert!(LanguageModel::from_json_bytes(bad.as_bytes()).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = LanguageModel::load(Path::new("/nonexistent/model.json")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
        assert_eq!(err.exit_code(), 3);
    }
}
