//! Command-line front end: train models, score queries, sample
//! trajectories, sweep temperatures, and run full experiments. Every
//! command that writes into an output directory also writes a manifest
//! pinning the run to its configuration and seeds.

use std::fs;
use std::path::PathBuf;
use std::process::exit;

use clap::{Args, Parser, Subcommand};

use infograv::harness::{
    parse_query_line, render_landscape, run_mass_experiment, write_experiment_outputs,
    write_manifest, ExperimentConfig,
};
use infograv::mass::{analyze_query, MassWeights};
use infograv::metrics::{sensitivity, temperature_sweep};
use infograv::model::{train, LanguageModel, TokenPredictor};
use infograv::sampler::{generate, Temperature};
use infograv::{Error, Result};

#[derive(Parser)]
#[command(
    name = "infograv",
    version,
    about = "Potential-field analysis of n-gram text generation"
)]
struct Cli {
    /// Trained model file (JSON).
    #[arg(long, global = true)]
    model: Option<PathBuf>,

    /// Run configuration file (JSON, same shape as ExperimentConfig).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; when set, reports and a manifest are written here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Sampling seed for commands that take a single seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an n-gram model on a plain-text corpus and save it to --model.
    Train(TrainArgs),
    /// Print the information-mass report for one query.
    Analyze(AnalyzeArgs),
    /// Sample a token trajectory starting from a query.
    Generate(GenerateArgs),
    /// Sweep sampling temperatures; report entropy and output diversity.
    Sweep(SweepArgs),
    /// Report how a perturbed query shifts the potential landscape.
    Sensitivity(SensitivityArgs),
    /// Render potential-landscape maps for the queries in a file.
    Landscape(LandscapeArgs),
    /// Run the mass-versus-voids experiment described by --config.
    Experiment,
}

#[derive(Args)]
struct TrainArgs {
    /// Plain-text training corpus.
    #[arg(long)]
    corpus: PathBuf,

    /// N-gram order (1..=5).
    #[arg(long, default_value_t = 3)]
    order: usize,

    /// Absolute discount in (0, 1).
    #[arg(long, default_value_t = 0.75)]
    discount: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Query text; context segments may precede it, separated by `|||`.
    #[arg(long)]
    query: String,

    /// Weight of the entropy component.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    /// Weight of the context-depth component.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    /// Weight of the novelty component.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

#[derive(Args)]
struct GenerateArgs {
    /// Query text the trajectory starts from.
    #[arg(long)]
    query: String,

    /// Sampling temperature.
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,

    /// Maximum number of generated tokens.
    #[arg(long, default_value_t = 32)]
    len: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Query text conditioning the sweep.
    #[arg(long)]
    query: String,

    /// Ascending temperature grid, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    temperatures: Vec<f64>,

    /// Generation seeds, comma-separated; defaults to the global --seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,

    /// Tokens generated per (temperature, seed) cell.
    #[arg(long, default_value_t = 16)]
    len: usize,
}

#[derive(Args)]
struct SensitivityArgs {
    /// Base query.
    #[arg(long)]
    query: String,

    /// Perturbed query to compare against.
    #[arg(long)]
    perturbed: String,
}

#[derive(Args)]
struct LandscapeArgs {
    /// File with one query per line.
    #[arg(long)]
    queries: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(cli, args),
        Command::Analyze(args) => cmd_analyze(cli, args),
        Command::Generate(args) => cmd_generate(cli, args),
        Command::Sweep(args) => cmd_sweep(cli, args),
        Command::Sensitivity(args) => cmd_sensitivity(cli, args),
        Command::Landscape(args) => cmd_landscape(cli, args),
        Command::Experiment => cmd_experiment(cli),
    }
}

fn require_model(cli: &Cli) -> Result<LanguageModel> {
    let path = cli
        .model
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --model".into()))?;
    LanguageModel::load(path)
}

/// The config file plus its raw bytes (hashed into the manifest).
fn require_config(cli: &Cli) -> Result<(ExperimentConfig, Vec<u8>)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let bytes = fs::read(path)?;
    let cfg = ExperimentConfig::load(path)?;
    Ok((cfg, bytes))
}

fn resolve_out(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Option<PathBuf> {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    // tolerate downstream consumers (head, grep -m) closing the pipe early
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(Error::from),
    }
}

/// Canonical byte form of a command's effective settings, used as the
/// manifest's config hash input when no config file is involved.
fn args_bytes(value: serde_json::Value) -> Vec<u8> {
    serde_json::to_vec(&value).expect("static JSON serializes")
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let model_path = cli
        .model
        .as_ref()
        .ok_or_else(|| Error::Config("train needs --model as the output path".into()))?;
    let corpus = fs::read_to_string(&args.corpus)?;
    let model = train(&corpus, args.order, args.discount)?;
    model.save(model_path)?;

    if let Some(out) = resolve_out(cli, None) {
        let bytes = args_bytes(serde_json::json!({
            "command": "train",
            "corpus": args.corpus.display().to_string(),
            "discount": args.discount,
            "order": args.order,
        }));
        write_manifest(&out, "train", &bytes, &[])?;
    }
    print_json(&serde_json::json!({
        "model": model_path.display().to_string(),
        "order": args.order,
        "vocab_size": model.vocab_size(),
    }))
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<()> {
    let model = require_model(cli)?;
    let spec = parse_query_line(&model, &args.query)?;
    let weights = MassWeights { alpha: args.alpha, beta: args.beta, gamma: args.gamma };
    let report = analyze_query(&model, model.baseline(), &spec.tokens, &spec.segments, weights)?;

    if let Some(out) = resolve_out(cli, None) {
        fs::create_dir_all(&out)?;
        fs::write(out.join("mass.json"), serde_json::to_vec_pretty(&report)?)?;
        let bytes = args_bytes(serde_json::json!({
            "alpha": args.alpha,
            "beta": args.beta,
            "command": "analyze",
            "gamma": args.gamma,
            "query": args.query,
        }));
        write_manifest(&out, "analyze", &bytes, &[])?;
    }
    print_json(&report)
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let model = require_model(cli)?;
    let spec = parse_query_line(&model, &args.query)?;
    let temperature = Temperature::new(args.temperature)?;
    let traj = generate(&model, &spec.tokens, temperature, args.len, cli.seed)?;
    let json = traj.to_json();

    if let Some(out) = resolve_out(cli, None) {
        fs::create_dir_all(&out)?;
        fs::write(out.join("trajectory.json"), serde_json::to_vec_pretty(&json)?)?;
        let bytes = args_bytes(serde_json::json!({
            "command": "generate",
            "len": args.len,
            "query": args.query,
            "temperature": args.temperature,
        }));
        write_manifest(&out, "generate", &bytes, &[cli.seed])?;
    }
    print_json(&json)
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let model = require_model(cli)?;
    let spec = parse_query_line(&model, &args.query)?;
    let seeds = if args.seeds.is_empty() { vec![cli.seed] } else { args.seeds.clone() };
    let report = temperature_sweep(&model, &spec.tokens, &args.temperatures, &seeds, args.len)?;

    if let Some(out) = resolve_out(cli, None) {
        fs::create_dir_all(&out)?;
        fs::write(out.join("sweep.json"), serde_json::to_vec_pretty(&report)?)?;
        fs::write(out.join("sweep.csv"), report.to_csv())?;
        let bytes = args_bytes(serde_json::json!({
            "command": "sweep",
            "len": args.len,
            "query": args.query,
            "temperatures": args.temperatures,
        }));
        write_manifest(&out, "sweep", &bytes, &seeds)?;
    }
    print_json(&report)
}

fn cmd_sensitivity(cli: &Cli, args: &SensitivityArgs) -> Result<()> {
    let model = require_model(cli)?;
    let base = parse_query_line(&model, &args.query)?;
    let perturbed = parse_query_line(&model, &args.perturbed)?;
    let report = sensitivity(&model, &base.tokens, &perturbed.tokens)?;

    if let Some(out) = resolve_out(cli, None) {
        fs::create_dir_all(&out)?;
        fs::write(out.join("sensitivity.json"), serde_json::to_vec_pretty(&report)?)?;
        fs::write(out.join("sensitivity.csv"), report.to_csv(&model))?;
        let bytes = args_bytes(serde_json::json!({
            "command": "sensitivity",
            "perturbed": args.perturbed,
            "query": args.query,
        }));
        write_manifest(&out, "sensitivity", &bytes, &[])?;
    }
    print_json(&report)
}

fn cmd_landscape(cli: &Cli, args: &LandscapeArgs) -> Result<()> {
    let (cfg, cfg_bytes) = require_config(cli)?;
    let out = resolve_out(cli, Some(&cfg))
        .ok_or_else(|| Error::Config("landscape needs --out or out_dir in the config".into()))?;
    let text = fs::read_to_string(&args.queries)?;
    let queries: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();

    let written = render_landscape(&cfg, &queries, &out)?;
    write_manifest(&out, "landscape", &cfg_bytes, &cfg.seeds)?;
    let names: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    print_json(&serde_json::json!({ "written": names }))
}

fn cmd_experiment(cli: &Cli) -> Result<()> {
    let (cfg, cfg_bytes) = require_config(cli)?;
    let out = resolve_out(cli, Some(&cfg))
        .ok_or_else(|| Error::Config("experiment needs --out or out_dir in the config".into()))?;

    let report = run_mass_experiment(&cfg)?;
    write_experiment_outputs(&report, &out)?;
    write_manifest(&out, "experiment", &cfg_bytes, &cfg.seeds)?;
    print_json(&report.summaries)
}
