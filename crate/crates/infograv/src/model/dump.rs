//! Replay adapter for JSONL logprob dumps exported from external models.
//!
//! One line per generation step:
//! `{"pos":0,"chosen":"the","cands":[["the",-0.51],["a",-0.92]],"vocab_size":50257}`
//! where `cands` holds top-k `[surface, logprob-in-nats]` pairs and
//! `vocab_size` is optional.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{DistSource, DistributionView};

/// Surface of the synthetic token that absorbs probability mass the
/// top-k candidates do not cover.
pub const OTHER_SURFACE: &str = "<other>";

#[derive(Deserialize)]
struct RawStep {
    pos: usize,
    chosen: String,
    cands: Vec<(String, f64)>,
    #[serde(default)]
    vocab_size: Option<usize>,
}

/// One replayed generation step with its renormalized top-k distribution.
#[derive(Debug, Clone)]
pub struct DumpStep {
    position: usize,
    chosen: String,
    candidates: Vec<(String, f64)>,
    /// One probability per candidate plus a final slot for [`OTHER_SURFACE`].
    probs: Vec<f64>,
}

impl DumpStep {
    fn from_raw(raw: RawStep, line: usize) -> Result<Self> {
        if raw.cands.is_empty() {
            return Err(Error::Validation(format!(
                "dump step at position {} has no candidates",
                raw.pos
            )));
        }
        for (surface, lp) in &raw.cands {
            if !lp.is_finite() || *lp > 0.0 {
                return Err(Error::Validation(format!(
                    "line {line}: candidate {surface:?} has logprob {lp}, expected finite and <= 0"
                )));
            }
        }
        let mut probs: Vec<f64> = raw.cands.iter().map(|(_, lp)| lp.exp()).collect();
        let covered: f64 = probs.iter().sum();
        if covered >= 1.0 {
            // top-k already covers everything (within float error): rescale
            for p in probs.iter_mut() {
                *p /= covered;
            }
            probs.push(0.0);
        } else {
            probs.push(1.0 - covered);
        }
        Ok(DumpStep {
            position: raw.pos,
            chosen: raw.chosen,
            candidates: raw.cands,
            probs,
        })
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// Surface the external model actually emitted at this step.
    pub fn chosen(&self) -> &str {
        &self.chosen
    }

    /// Top-k `[surface, logprob]` pairs as read from the dump.
    pub fn candidates(&self) -> &[(String, f64)] {
        &self.candidates
    }

    /// Step-local surfaces: the candidates followed by [`OTHER_SURFACE`].
    pub fn local_vocab(&self) -> Vec<String> {
        let mut v: Vec<String> = self.candidates.iter().map(|(s, _)| s.clone()).collect();
        v.push(OTHER_SURFACE.to_string());
        v
    }

    /// Index of the chosen surface in [`Self::local_vocab`]; the final
    /// "other" slot when the chosen token was outside the top-k.
    pub fn chosen_index(&self) -> usize {
        self.candidates
            .iter()
            .position(|(s, _)| s == &self.chosen)
            .unwrap_or(self.candidates.len())
    }

    /// Renormalized step distribution over [`Self::local_vocab`].
    pub fn distribution(&self) -> DistributionView {
        DistributionView::new(
            format!("dump step {}", self.position),
            self.probs.clone(),
            DistSource::DumpReplay,
        )
        .expect("dump step probabilities are valid weights")
    }
}

/// A validated sequence of replayed steps.
#[derive(Debug, Clone)]
pub struct DumpSession {
    steps: Vec<DumpStep>,
    declared_vocab_size: Option<usize>,
}

impl DumpSession {
    pub fn steps(&self) -> &[DumpStep] {
        &self.steps
    }

    /// Vocabulary size the dump declared, when any line carried one.
    pub fn declared_vocab_size(&self) -> Option<usize> {
        self.declared_vocab_size
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Reads a JSONL dump, validating per-line syntax and step numbering
/// (positions must run 0, 1, 2, ... with no gaps).
pub fn load_dump(path: &Path) -> Result<DumpSession> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut steps = Vec::new();
    let mut declared_vocab_size = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawStep = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        if raw.pos != steps.len() {
            return Err(Error::Validation(format!(
                "line {line_no}: position {} out of order, expected {}",
                raw.pos,
                steps.len()
            )));
        }
        if declared_vocab_size.is_none() {
            declared_vocab_size = raw.vocab_size;
        }
        steps.push(DumpStep::from_raw(raw, line_no)?);
    }
    Ok(DumpSession {
        steps,
        declared_vocab_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_dump(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn full_coverage_candidates_keep_their_probabilities() {
        let f = write_dump(&format!(
            r#"{{"pos":0,"chosen":"a","cands":[["a",{}],["b",{}]]}}"#,
            0.6f64.ln(),
            0.4f64.ln()
        ));
        let session = load_dump(f.path()).unwrap();
        let step = &session.steps()[0];
        let d = step.distribution();
        assert!((d.probs()[0] - 0.6).abs() < 1e-9);
        assert!((d.probs()[1] - 0.4).abs() < 1e-9);
        assert!(d.probs()[2] < 1e-9); // "other" carries (almost) nothing
        assert_eq!(step.chosen_index(), 0);
    }

    #[test]
    fn partial_coverage_gives_mass_to_other() {
        let f = write_dump(&format!(
            r#"{{"pos":0,"chosen":"x","cands":[["a",{}],["b",{}]]}}"#,
            0.5f64.ln(),
            0.4f64.ln()
        ));
        let session = load_dump(f.path()).unwrap();
        let step = &session.steps()[0];
        let d = step.distribution();
        assert!((d.probs()[2] - 0.1).abs() < 1e-9);
        // chosen surface absent from top-k → maps to the "other" slot
        assert_eq!(step.chosen_index(), 2);
        assert_eq!(step.local_vocab()[2], OTHER_SURFACE);
    }

    #[test]
    fn skipped_positions_are_rejected() {
        let f = write_dump(concat!(
            r#"{"pos":0,"chosen":"a","cands":[["a",-0.1]]}"#,
            "\n",
            r#"{"pos":2,"chosen":"b","cands":[["b",-0.1]]}"#,
        ));
        assert!(matches!(load_dump(f.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let f = write_dump(concat!(
            r#"{"pos":0,"chosen":"a","cands":[["a",-0.1]]}"#,
            "\n",
            "{not json",
        ));
        match load_dump(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn positive_logprobs_are_rejected() {
        let f = write_dump(r#"{"pos":0,"chosen":"a","cands":[["a",0.25]]}"#);
        assert!(matches!(load_dump(f.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn declared_vocab_size_is_kept() {
        let f = write_dump(r#"{"pos":0,"chosen":"a","cands":[["a",-0.1]],"vocab_size":50257}"#);
        let session = load_dump(f.path()).unwrap();
        assert_eq!(session.declared_vocab_size(), Some(50257));
    }

    #[test]
    fn step_distributions_sum_to_one() {
        let f = write_dump(&format!(
            r#"{{"pos":0,"chosen":"a","cands":[["a",{}],["b",{}],["c",{}]]}}"#,
            0.2f64.ln(),
            0.3f64.ln(),
            0.1f64.ln()
        ));
        let session = load_dump(f.path()).unwrap();
        let d = session.steps()[0].distribution();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((d.probs()[3] - 0.4).abs() < 1e-9);
        assert_eq!(d.source(), DistSource::DumpReplay);
    }
}
