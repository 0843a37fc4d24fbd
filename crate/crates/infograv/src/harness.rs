//! Experiment plumbing: JSON run configuration, the mass-versus-voids
//! experiment, landscape rendering to CSV/SVG, and the manifest that pins
//! every run to its inputs, seeds, and toolkit version.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{build_embedding, curvature_metric, landscape_grid, potential, EmbeddingConfig};
use crate::mass::{analyze_query, MassReport, MassWeights};
use crate::metrics::{hallucination_proxy, stability};
use crate::model::{train, LanguageModel, TokenId};
use crate::sampler::{generate, Temperature, RNG_ALGORITHM};
use crate::stats;
use crate::stats::csv_escape;

fn default_order() -> usize {
    3
}

fn default_discount() -> f64 {
    0.75
}

fn default_gen_len() -> usize {
    32
}

fn default_resolution() -> usize {
    64
}

/// One experiment run, loadable from a JSON document with the same field
/// names. `corpus` and every arm path must exist when the run starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Plain-text training corpus.
    pub corpus: PathBuf,
    /// Model order (n-gram length), defaults to 3.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Absolute discount, defaults to 0.75.
    #[serde(default = "default_discount")]
    pub discount: f64,
    /// Mass component weights, defaults to (1, 1, 1).
    #[serde(default)]
    pub weights: MassWeights,
    /// Embedding settings, defaults to 32 dims / window 2 / 16 neighbors.
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    /// Sampling temperature grid, strictly ascending.
    pub temperatures: Vec<f64>,
    /// Generation seeds; at least one.
    pub seeds: Vec<u64>,
    /// Tokens generated per (query, temperature, seed) cell, defaults to 32.
    #[serde(default = "default_gen_len")]
    pub gen_len: usize,
    /// N-gram order for the out-of-support check; defaults to
    /// `min(2, order)`.
    #[serde(default)]
    pub proxy_order: Option<usize>,
    /// Landscape grid resolution, defaults to 64.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Experiment arms: name → query file. Each file holds one query per
    /// line; text before a `|||` separator lists context segments, the
    /// part after the last `|||` is the query itself.
    #[serde(default)]
    pub arms: BTreeMap<String, PathBuf>,
    /// Default output directory; the CLI `--out` flag overrides it.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Loads and parses a JSON config file.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        Ok(cfg)
    }

    /// Checks the invariants every run relies on: referenced paths exist,
    /// the temperature grid is strictly ascending, and at least one seed
    /// is present.
    pub fn validate(&self) -> Result<()> {
        if !self.corpus.exists() {
            return Err(Error::Config(format!(
                "corpus file {} does not exist",
                self.corpus.display()
            )));
        }
        for (arm, path) in &self.arms {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "query file {} for arm '{arm}' does not exist",
                    path.display()
                )));
            }
        }
        if self.temperatures.is_empty() {
            return Err(Error::Config("temperature grid must not be empty".into()));
        }
        if self.temperatures.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("temperatures must be finite".into()));
        }
        if self.temperatures.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("temperatures must be strictly ascending".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.gen_len == 0 {
            return Err(Error::Config("gen_len must be at least 1".into()));
        }
        if let Some(p) = self.proxy_order {
            if p == 0 || p > self.order {
                return Err(Error::Config(format!(
                    "proxy_order must be in 1..={}, got {p}",
                    self.order
                )));
            }
        }
        self.weights.validate()?;
        Ok(())
    }

    /// N-gram order used by the out-of-support proxy.
    pub fn resolved_proxy_order(&self) -> usize {
        self.proxy_order.unwrap_or_else(|| self.order.min(2))
    }
}

/// One parsed query line: optional context segments plus the query itself.
#[derive(Debug, Clone)]
pub struct QuerySpec {
    /// The raw query text (after the last `|||`, trimmed).
    pub text: String,
    pub tokens: Vec<TokenId>,
    pub segments: Vec<Vec<TokenId>>,
}

/// Parses one query line. Parts separated by `|||` are context segments;
/// the final part is the query.
pub fn parse_query_line(model: &LanguageModel, line: &str) -> Result<QuerySpec> {
    let mut parts: Vec<&str> = line.split("|||").map(str::trim).collect();
    let text = parts.pop().unwrap_or("").to_string();
    let tokens = model.encode(&text);
    if tokens.is_empty() {
        return Err(Error::Validation(format!("query line has no tokens: {line:?}")));
    }
    let mut segments = Vec::new();
    for part in parts {
        let seg = model.encode(part);
        if seg.is_empty() {
            return Err(Error::Validation(format!(
                "empty context segment in query line: {line:?}"
            )));
        }
        segments.push(seg);
    }
    Ok(QuerySpec { text, tokens, segments })
}

/// Parses a query file: one query per line, blank lines skipped.
pub fn parse_queries(model: &LanguageModel, text: &str) -> Result<Vec<QuerySpec>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| parse_query_line(model, l))
        .collect()
}

/// One (query, temperature) cell of the experiment, with proxy scores
/// averaged over seeds.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub arm: String,
    pub query: String,
    pub temperature: f64,
    #[serde(rename = "entropy_H")]
    pub entropy_h: f64,
    #[serde(rename = "depth_D")]
    pub depth_d: f64,
    #[serde(rename = "novelty_N")]
    pub novelty_n: f64,
    #[serde(rename = "mass_M")]
    pub mass_m: f64,
    pub oos_rate: f64,
    pub mean_surprisal: f64,
    pub curvature: f64,
    pub stability: f64,
}

/// Rank correlations between each mass component and the per-query mean
/// out-of-support rate, within one arm. `None` when undefined (fewer than
/// two queries, or a component without variation).
#[derive(Debug, Clone, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    #[serde(rename = "spearman_entropy_H")]
    pub spearman_entropy: Option<f64>,
    #[serde(rename = "spearman_depth_D")]
    pub spearman_depth: Option<f64>,
    #[serde(rename = "spearman_novelty_N")]
    pub spearman_novelty: Option<f64>,
    #[serde(rename = "spearman_mass_M")]
    pub spearman_mass: Option<f64>,
    /// True when any correlation above is undefined.
    pub degenerate: bool,
}

/// Full experiment output: one row per (query, temperature) plus per-arm
/// correlation summaries.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub summaries: Vec<ArmSummary>,
}

impl ExperimentReport {
    /// Flat CSV, one row per (query, temperature).
    pub fn rows_csv(&self) -> String {
        let mut out = String::from(
            "arm,query,temperature,entropy_H,depth_D,novelty_N,mass_M,oos_rate,mean_surprisal,curvature,stability\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_escape(&r.arm),
                csv_escape(&r.query),
                r.temperature,
                r.entropy_h,
                r.depth_d,
                r.novelty_n,
                r.mass_m,
                r.oos_rate,
                r.mean_surprisal,
                r.curvature,
                r.stability
            ));
        }
        out
    }

    /// Pretty JSON bytes with a trailing newline; byte-stable for equal
    /// reports.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

/// All single-token-deletion variants of a query, used as the stability
/// perturbation set.
fn leave_one_out(tokens: &[TokenId]) -> Vec<Vec<TokenId>> {
    (0..tokens.len())
        .map(|i| {
            let mut t = tokens.to_vec();
            t.remove(i);
            t
        })
        .collect()
}

struct QueryCell {
    arm: String,
    spec: QuerySpec,
    mass: MassReport,
    curvature: f64,
    stability: f64,
}

/// Runs the mass-versus-voids experiment: per query, computes the mass
/// report, field curvature, and perturbation stability, then generates at
/// every (temperature, seed) cell and scores the out-of-support proxy.
/// Per arm, summarizes with Spearman rank correlations between each mass
/// component and the per-query mean out-of-support rate.
///
/// Generation cells run in parallel and merge back in grid order, so equal
/// configs produce byte-identical reports.
pub fn run_mass_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.arms.is_empty() {
        return Err(Error::Config("experiment needs at least one query arm".into()));
    }
    let corpus = fs::read_to_string(&cfg.corpus)?;
    let model = train(&corpus, cfg.order, cfg.discount)?;
    let space = build_embedding(&model, &cfg.embedding)?;
    let proxy_order = cfg.resolved_proxy_order();

    let mut cells: Vec<QueryCell> = Vec::new();
    for (arm, path) in &cfg.arms {
        let text = fs::read_to_string(path)?;
        let specs = parse_queries(&model, &text)?;
        if specs.is_empty() {
            return Err(Error::Config(format!("query arm '{arm}' has no queries")));
        }
        for spec in specs {
            let mass = analyze_query(&model, model.baseline(), &spec.tokens, &spec.segments, cfg.weights)?;
            let field = potential(&model.next_dist(&spec.tokens));
            let curvature = curvature_metric(&field, &space)?;
            let perturbations = leave_one_out(&spec.tokens);
            let stab = stability(&model, &spec.tokens, &perturbations)?;
            cells.push(QueryCell { arm: arm.clone(), spec, mass, curvature, stability: stab });
        }
    }

    let temps: Vec<Temperature> = cfg
        .temperatures
        .iter()
        .map(|&t| Temperature::new(t))
        .collect::<Result<_>>()?;
    let grid: Vec<(usize, usize, u64)> = (0..cells.len())
        .flat_map(|qi| {
            let seeds = &cfg.seeds;
            (0..temps.len()).flat_map(move |ti| seeds.iter().map(move |&s| (qi, ti, s)))
        })
        .collect();
    let scores: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&(qi, ti, seed)| {
            let traj = generate(&model, &cells[qi].spec.tokens, temps[ti], cfg.gen_len, seed)?;
            let p = hallucination_proxy(&traj, model.baseline(), proxy_order)?;
            Ok((p.oos_rate, p.mean_surprisal))
        })
        .collect::<Result<_>>()?;

    let n_seeds = cfg.seeds.len();
    let mut rows = Vec::with_capacity(cells.len() * temps.len());
    for (qi, cell) in cells.iter().enumerate() {
        for (ti, &t) in cfg.temperatures.iter().enumerate() {
            let base = (qi * temps.len() + ti) * n_seeds;
            let slice = &scores[base..base + n_seeds];
            let oos = slice.iter().map(|s| s.0).sum::<f64>() / n_seeds as f64;
            let surprisal = slice.iter().map(|s| s.1).sum::<f64>() / n_seeds as f64;
            rows.push(ExperimentRow {
                arm: cell.arm.clone(),
                query: cell.spec.text.clone(),
                temperature: t,
                entropy_h: cell.mass.entropy_h,
                depth_d: cell.mass.depth_d,
                novelty_n: cell.mass.novelty_n,
                mass_m: cell.mass.mass_m,
                oos_rate: oos,
                mean_surprisal: surprisal,
                curvature: cell.curvature,
                stability: cell.stability,
            });
        }
    }

    let mut summaries = Vec::new();
    for arm in cfg.arms.keys() {
        let members: Vec<(usize, &QueryCell)> = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| &c.arm == arm)
            .collect();
        let per_cell = temps.len() * n_seeds;
        let mean_oos: Vec<f64> = members
            .iter()
            .map(|&(qi, _)| {
                let slice = &scores[qi * per_cell..(qi + 1) * per_cell];
                slice.iter().map(|s| s.0).sum::<f64>() / per_cell as f64
            })
            .collect();
        let component = |f: fn(&MassReport) -> f64| -> Vec<f64> {
            members.iter().map(|&(_, c)| f(&c.mass)).collect()
        };
        let spearman_entropy = stats::spearman(&component(|m| m.entropy_h), &mean_oos);
        let spearman_depth = stats::spearman(&component(|m| m.depth_d), &mean_oos);
        let spearman_novelty = stats::spearman(&component(|m| m.novelty_n), &mean_oos);
        let spearman_mass = stats::spearman(&component(|m| m.mass_m), &mean_oos);
        let degenerate = [spearman_entropy, spearman_depth, spearman_novelty, spearman_mass]
            .iter()
            .any(Option::is_none);
        summaries.push(ArmSummary {
            arm: arm.clone(),
            spearman_entropy,
            spearman_depth,
            spearman_novelty,
            spearman_mass,
            degenerate,
        });
    }

    Ok(ExperimentReport { rows, summaries })
}

/// Writes `report.json` and `rows.csv` into `out`, creating it if needed.
pub fn write_experiment_outputs(report: &ExperimentReport, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let json_path = out.join("report.json");
    fs::write(&json_path, report.to_json_bytes()?)?;
    let csv_path = out.join("rows.csv");
    fs::write(&csv_path, report.rows_csv())?;
    Ok(vec![json_path, csv_path])
}

/// Renders one potential landscape per query into `out` as paired CSV and
/// SVG files (`landscape_q<i>.{csv,svg}`), plus `difference.csv` holding
/// the per-cell spread (max − min of cell means) across all queries.
///
/// Queries use the same line syntax as experiment arms; context segments
/// before `|||` are accepted but do not condition the field.
pub fn render_landscape(
    cfg: &ExperimentConfig,
    queries: &[String],
    out: &Path,
) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if queries.is_empty() {
        return Err(Error::Argument("landscape rendering needs at least one query".into()));
    }
    let corpus = fs::read_to_string(&cfg.corpus)?;
    let model = train(&corpus, cfg.order, cfg.discount)?;
    let space = build_embedding(&model, &cfg.embedding)?;
    fs::create_dir_all(out)?;

    let mut grids = Vec::with_capacity(queries.len());
    let mut written = Vec::new();
    for (i, line) in queries.iter().enumerate() {
        let spec = parse_query_line(&model, line)?;
        let field = potential(&model.next_dist(&spec.tokens));
        let grid = landscape_grid(&[field], &space, cfg.resolution)?;

        let csv_path = out.join(format!("landscape_q{i}.csv"));
        fs::write(&csv_path, grid.to_csv())?;
        written.push(csv_path);
        let svg_path = out.join(format!("landscape_q{i}.svg"));
        fs::write(&svg_path, grid.to_svg())?;
        written.push(svg_path);
        grids.push(grid);
    }

    // all grids share the embedding and projection, hence cell occupancy
    let res = grids[0].resolution();
    let mut diff = String::from("cell_x,cell_y,delta_phi\n");
    for y in 0..res {
        for x in 0..res {
            if let Some(first) = grids[0].mean(x, y) {
                let mut lo = first;
                let mut hi = first;
                for g in &grids[1..] {
                    if let Some(m) = g.mean(x, y) {
                        lo = lo.min(m);
                        hi = hi.max(m);
                    }
                }
                diff.push_str(&format!("{x},{y},{}\n", hi - lo));
            }
        }
    }
    let diff_path = out.join("difference.csv");
    fs::write(&diff_path, diff)?;
    written.push(diff_path);
    Ok(written)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    rng: &'a str,
    seeds: &'a [u64],
    version: &'a str,
}

/// Writes `manifest.json` into `out`: the command name, a SHA-256 of the
/// effective configuration, the RNG family, the seeds, and the toolkit
/// version. Contains nothing run-dependent, so equal runs produce equal
/// manifests.
pub fn write_manifest(
    out: &Path,
    command: &str,
    config_bytes: &[u8],
    seeds: &[u64],
) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let digest = Sha256::digest(config_bytes);
    let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    let manifest = Manifest {
        command,
        config_sha256,
        rng: RNG_ALGORITHM,
        seeds,
        version: env!("CARGO_PKG_VERSION"),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    let path = out.join("manifest.json");
    fs::write(&path, bytes)?;
    Ok(path)
}
