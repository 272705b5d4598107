//! Subcommand registry: parameter tables, presets and the runners.

use bnlab_core::batch::{gaussian_matrix, Batch};
use bnlab_core::rank_probe::circle_batch;
use bnlab_core::SeedSpec;

use crate::error::{CliError, CliResult};
use crate::output::Artifact;
use crate::params::Params;

pub mod gamma;
pub mod invariant;
pub mod propagate;
pub mod rank;
pub mod tree;

/// A parameter with its default and a one-line description.
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Propagate,
    Gamma,
    RankProbe,
    Tree,
    Invariant,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] =
        [Subcommand::Propagate, Subcommand::Gamma, Subcommand::RankProbe, Subcommand::Tree, Subcommand::Invariant];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Propagate => "propagate",
            Subcommand::Gamma => "gamma",
            Subcommand::RankProbe => "rank-probe",
            Subcommand::Tree => "tree",
            Subcommand::Invariant => "invariant",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn keys(self) -> &'static [Key] {
        match self {
            Subcommand::Propagate => propagate::KEYS,
            Subcommand::Gamma => gamma::KEYS,
            Subcommand::RankProbe => rank::KEYS,
            Subcommand::Tree => tree::KEYS,
            Subcommand::Invariant => invariant::KEYS,
        }
    }

    /// Values a named preset substitutes for the defaults.
    pub fn preset(self, name: &str) -> CliResult<&'static [(&'static str, &'static str)]> {
        match self {
            Subcommand::Propagate => propagate::preset(name),
            _ if name == "none" => Ok(&[]),
            _ => Err(CliError::Config(format!("`{}` has no presets", self.name()))),
        }
    }

    pub fn run(self, p: &Params, seed: u64) -> CliResult<RunOutput> {
        match self {
            Subcommand::Propagate => propagate::run(p, seed),
            Subcommand::Gamma => gamma::run(p, seed),
            Subcommand::RankProbe => rank::run(p, seed),
            Subcommand::Tree => tree::run(p, seed),
            Subcommand::Invariant => invariant::run(p, seed),
        }
    }
}

pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Overall result of the theorem checks, when the subcommand makes any.
    pub checks_passed: Option<bool>,
}

/// Stream layout under the master seed.
pub(crate) fn experiment_seed(seed: u64) -> SeedSpec {
    SeedSpec::new(seed, 0).child(1)
}

pub(crate) fn input_seed(seed: u64) -> SeedSpec {
    SeedSpec::new(seed, 0).child(2)
}

pub(crate) fn auxiliary_seed(seed: u64) -> SeedSpec {
    SeedSpec::new(seed, 0).child(3)
}

/// Input batch for `gamma` and `rank-probe`.
///
/// `circle` places `n` unit vectors at angles `2 pi i / n` in the first two
/// coordinates; `gaussian` draws a `k x n` standard normal matrix; `points`
/// reads columns from `points = x1,y1;x2,y2;...`.
pub(crate) fn probe_batch(p: &Params, seed: u64) -> CliResult<Batch> {
    let n = p.usize("n")?;
    let k = p.usize("k")?;
    match p.choice("batch", &["circle", "gaussian", "points"])? {
        "circle" => {
            if k < 2 {
                return Err(CliError::Config("circle batch needs k >= 2".into()));
            }
            let c = circle_batch(n)?;
            let mut cols = Vec::with_capacity(n);
            for j in 0..n {
                let mut v = c.column(j).to_vec();
                v.resize(k, 0.0);
                cols.push(v);
            }
            Ok(Batch::from_columns(&cols)?)
        }
        "gaussian" => Ok(gaussian_matrix(k, n, 1.0, input_seed(seed))?),
        _ => {
            let raw = p.str("points")?;
            let cols: Vec<Vec<f64>> = raw
                .split(';')
                .map(|c| {
                    c.split(',')
                        .map(|v| v.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                        .collect::<Option<Vec<f64>>>()
                })
                .collect::<Option<_>>()
                .ok_or_else(|| CliError::Config(format!("`points = {raw}`: expected `x,y;x,y;...`")))?;
            if cols.len() != n || cols.iter().any(|c| c.len() != k) {
                return Err(CliError::Config(format!("`points` must hold n = {n} columns of length k = {k}")));
            }
            Ok(Batch::from_columns(&cols)?)
        }
    }
}
