//! Reproducible experiment runner for `bnlab-core`.
//!
//! Each subcommand resolves a flat key-value configuration, runs one
//! experiment and writes CSV/JSON files plus a `manifest.json` that is
//! enough to run it again.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use bnlab_core::RNG_ALGORITHM;
use clap::{Args, Parser};
use serde::{Deserialize, Serialize};

pub mod commands;
pub mod error;
pub mod output;
pub mod params;

pub use commands::Subcommand;
pub use error::{CliError, CliResult, STRICT_FAILURE};
pub use output::Format;
pub use params::Params;

use output::{write_artifacts, Artifact};
use params::{parse_assignment, parse_config_text};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "BNLAB_OUT";
pub const TOOL: &str = "bnlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "bnlab", version, about = "Batch normalization simulation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Push a Gaussian batch through random layers and record geometry.
    Propagate(RunArgs),
    /// Estimate the smallest sign-pattern class probability of a batch.
    Gamma(RunArgs),
    /// Count random neurons needed for full rank.
    RankProbe(RunArgs),
    /// Evolve the cluster tree and check the angle statements.
    Tree(RunArgs),
    /// Monte Carlo moments of one layer on an invariant batch.
    Invariant(RunArgs),
    /// Re-run an experiment from its manifest.
    Replay(ReplayArgs),
    /// List the parameters of a subcommand with their defaults.
    Keys { subcommand: String },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat `key = value` file; `#` starts a comment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one parameter; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma list of csv and json.
    #[arg(long)]
    pub format: Option<String>,
    /// Exit with code 5 when a theorem check fails.
    #[arg(long)]
    pub strict: bool,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub params: Params,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub rng: String,
    pub formats: Vec<String>,
    pub params: BTreeMap<String, String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub checks_passed: Option<bool>,
}

/// Keys handled by the harness itself rather than the experiment.
const HARNESS_KEYS: [&str; 3] = ["seed", "format", "out"];

fn build_params(cmd: Subcommand, user: &[(String, String)]) -> CliResult<Params> {
    let keys = cmd.keys();
    for (k, _) in user {
        if !keys.iter().any(|key| key.name == k) {
            let names: Vec<&str> = keys.iter().map(|key| key.name).collect();
            return Err(CliError::Config(format!(
                "unknown key `{k}` for {}; known keys: {}",
                cmd.name(),
                names.join(", ")
            )));
        }
    }
    let mut map: BTreeMap<String, String> =
        keys.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect();
    let preset = user.iter().rev().find(|(k, _)| k == "preset").map(|(_, v)| v.as_str()).unwrap_or("none");
    for (k, v) in cmd.preset(preset)? {
        map.insert(k.to_string(), v.to_string());
    }
    for (k, v) in user {
        map.insert(k.clone(), v.clone());
    }
    Ok(Params::new(map))
}

/// Merges defaults, preset, config file and `--set` overrides, in that order.
///
/// The output directory comes from `--out`, then `env_out`, then the config
/// file's `out`, then `bnlab-out/<subcommand>`.
pub fn resolve(cmd: Subcommand, args: &RunArgs, env_out: Option<&str>) -> CliResult<ExperimentConfig> {
    let mut user = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        user.extend(parse_config_text(&text, &path.display().to_string())?);
    }
    for s in &args.set {
        user.push(parse_assignment(s).map_err(|e| CliError::Config(format!("--set {s}: {e}")))?);
    }
    let mut harness: BTreeMap<&str, String> = BTreeMap::new();
    user.retain(|(k, v)| match HARNESS_KEYS.iter().find(|h| **h == k) {
        Some(h) => {
            harness.insert(h, v.clone());
            false
        }
        None => true,
    });
    let master_seed = match (args.seed, harness.get("seed")) {
        (Some(s), _) => s,
        (None, Some(s)) => s
            .parse()
            .map_err(|_| CliError::Config(format!("`seed = {s}`: expected a nonnegative integer")))?,
        (None, None) => 0,
    };
    let formats = Format::parse_list(
        args.format.as_deref().or(harness.get("format").map(String::as_str)).unwrap_or("csv,json"),
    )?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| env_out.filter(|s| !s.is_empty()).map(PathBuf::from))
        .or_else(|| harness.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bnlab-out").join(cmd.name()));
    Ok(ExperimentConfig { subcommand: cmd, params: build_params(cmd, &user)?, out_dir, formats, master_seed })
}

/// Rebuilds the configuration recorded in a manifest.
pub fn config_from_manifest(m: &Manifest, out_dir: PathBuf) -> CliResult<ExperimentConfig> {
    if m.tool != TOOL {
        return Err(CliError::Config(format!("manifest was written by `{}`, not {TOOL}", m.tool)));
    }
    let cmd = Subcommand::from_name(&m.subcommand)
        .ok_or_else(|| CliError::Config(format!("manifest names unknown subcommand `{}`", m.subcommand)))?;
    let user: Vec<(String, String)> = m.params.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    Ok(ExperimentConfig {
        subcommand: cmd,
        params: build_params(cmd, &user)?,
        out_dir,
        formats: Format::parse_list(&m.formats.join(","))?,
        master_seed: m.seed,
    })
}

pub fn read_manifest(path: &Path) -> CliResult<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{} is not a manifest: {e}", path.display())))
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be >= 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {t} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the experiment and writes its files and manifest.
pub fn execute(cfg: &ExperimentConfig, threads: Option<usize>) -> CliResult<Outcome> {
    let out = in_pool(threads, || cfg.subcommand.run(&cfg.params, cfg.master_seed))??;
    let artifacts: Vec<Artifact> = out.artifacts.into_iter().filter(|a| cfg.formats.contains(&a.format)).collect();
    let mut files: Vec<String> = artifacts.iter().map(|a| a.name.clone()).collect();
    files.sort();
    let manifest = Manifest {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        subcommand: cfg.subcommand.name().to_string(),
        seed: cfg.master_seed,
        rng: RNG_ALGORITHM.to_string(),
        formats: cfg.formats.iter().map(|f| f.name().to_string()).collect(),
        params: cfg.params.map().clone(),
        files: files.clone(),
    };
    let mut all = artifacts;
    all.push(Artifact::json(MANIFEST, &manifest)?);
    write_artifacts(&cfg.out_dir, &all)?;
    files.push(MANIFEST.to_string());
    Ok(Outcome { out_dir: cfg.out_dir.clone(), files, checks_passed: out.checks_passed })
}

fn run_as(cmd: Subcommand, cfg: &ExperimentConfig) -> CliResult<Outcome> {
    if cfg.subcommand != cmd {
        return Err(CliError::Config(format!("config is for {}, not {}", cfg.subcommand.name(), cmd.name())));
    }
    execute(cfg, None)
}

pub fn run_propagate(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    run_as(Subcommand::Propagate, cfg)
}

pub fn run_gamma(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    run_as(Subcommand::Gamma, cfg)
}

pub fn run_rank_probe(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    run_as(Subcommand::RankProbe, cfg)
}

pub fn run_tree(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    run_as(Subcommand::Tree, cfg)
}

pub fn run_invariant(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    run_as(Subcommand::Invariant, cfg)
}

fn dispatch(cli: Cli, verbose: bool) -> CliResult<u8> {
    let env_out = std::env::var(OUT_ENV).ok();
    let (cfg, strict, threads) = match cli.command {
        Command::Keys { subcommand } => {
            let cmd = Subcommand::from_name(&subcommand)
                .ok_or_else(|| CliError::Config(format!("unknown subcommand `{subcommand}`")))?;
            for k in cmd.keys() {
                println!("{:<18} {:<24} {}", k.name, k.default, k.help);
            }
            return Ok(0);
        }
        Command::Replay(r) => {
            let m = read_manifest(&r.manifest)?;
            let out = r
                .out
                .clone()
                .or_else(|| env_out.as_deref().filter(|s| !s.is_empty()).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("bnlab-out").join(format!("replay-{}", m.subcommand)));
            if m.version != VERSION {
                eprintln!("warning: manifest is from {TOOL} {}, running {VERSION}", m.version);
            }
            (config_from_manifest(&m, out)?, r.strict, r.threads)
        }
        Command::Propagate(a) => (resolve(Subcommand::Propagate, &a, env_out.as_deref())?, a.strict, a.threads),
        Command::Gamma(a) => (resolve(Subcommand::Gamma, &a, env_out.as_deref())?, a.strict, a.threads),
        Command::RankProbe(a) => (resolve(Subcommand::RankProbe, &a, env_out.as_deref())?, a.strict, a.threads),
        Command::Tree(a) => (resolve(Subcommand::Tree, &a, env_out.as_deref())?, a.strict, a.threads),
        Command::Invariant(a) => (resolve(Subcommand::Invariant, &a, env_out.as_deref())?, a.strict, a.threads),
    };
    let outcome = execute(&cfg, threads)?;
    if verbose {
        println!("wrote {} files to {}", outcome.files.len(), outcome.out_dir.display());
        if outcome.checks_passed == Some(false) {
            eprintln!("theorem checks failed; see the report");
        }
    }
    Ok(if strict && outcome.checks_passed == Some(false) { STRICT_FAILURE } else { 0 })
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_args(args, true)
}

/// Like [`main_with`] but prints only errors.
pub fn run_quiet<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_args(args, false)
}

fn run_args<I, T>(args: I, verbose: bool) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    match dispatch(cli, verbose) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
