use bnlab_core::rank_probe::{rank_probe_experiment, AlphaRow, GammaEstimate, NeuronCount, ProbeOptions};
use serde::Serialize;

use super::{experiment_seed, key, probe_batch, Key, RunOutput};
use crate::error::{CliError, CliResult};
use crate::output::{cell, Artifact};
use crate::params::Params;

pub const KEYS: &[Key] = &[
    key("batch", "circle", "circle, gaussian or points"),
    key("n", "5", "batch size"),
    key("k", "2", "dimension"),
    key("points", "", "columns as x,y;x,y;... when batch = points"),
    key("trials", "1000", "independent neuron sequences"),
    key("alphas", "3,5", "widths alpha n / gamma at which rank failure is counted"),
    key("with_bn", "false", "recentre each new neuron's preactivations over the batch"),
    key("gamma_samples", "100000", "Monte Carlo draws for gamma when k != 2"),
    key("collinearity_tol", "1e-12", "columns with |cos| >= 1 - tol are rejected as collinear"),
];

#[derive(Serialize)]
struct RankSummary {
    n: usize,
    k: usize,
    with_bn: bool,
    /// Batch on which gamma was measured.
    gamma_batch: &'static str,
    gamma: GammaEstimate,
    n_over_gamma: f64,
    trials: usize,
    exhausted: usize,
    max_width: usize,
    mean_y: f64,
    std_dev: f64,
    std_err: f64,
    ci_low: f64,
    ci_high: f64,
    mean_within_bound: bool,
    per_alpha: Vec<AlphaRow>,
    failure_nonincreasing: bool,
    pass: bool,
}

pub fn run(p: &Params, seed: u64) -> CliResult<RunOutput> {
    let b = probe_batch(p, seed)?;
    let trials = p.usize("trials")?;
    if trials == 0 {
        return Err(CliError::Config("`trials` must be >= 1".into()));
    }
    let alphas = p.f64_list("alphas")?;
    let with_bn = p.bool("with_bn")?;
    let opts = ProbeOptions {
        collinearity_tol: p.f64("collinearity_tol")?,
        gamma_samples: p.u64("gamma_samples")?,
        ..ProbeOptions::default()
    };
    let r = rank_probe_experiment(&b, trials, &alphas, with_bn, experiment_seed(seed), &opts)?;
    let rows = r.ys.iter().enumerate().map(|(t, y)| match *y {
        NeuronCount::Reached(v) => vec![cell(t), cell(v), cell(true)],
        NeuronCount::Exhausted(v) => vec![cell(t), cell(v), cell(false)],
    });
    let csv = Artifact::csv("rank_probe.csv", &["trial", "y", "reached"], rows)?;
    let pass = r.mean_within_bound && r.failure_nonincreasing && r.per_alpha.iter().all(|a| a.pass);
    let s = RankSummary {
        n: r.n,
        k: r.k,
        with_bn,
        gamma_batch: if with_bn { "recentred" } else { "input" },
        gamma: r.gamma,
        n_over_gamma: r.n_over_gamma,
        trials,
        exhausted: r.exhausted,
        max_width: r.max_width,
        mean_y: r.y.mean,
        std_dev: r.y.std_dev,
        std_err: r.y.std_err,
        ci_low: r.ci_low,
        ci_high: r.ci_high,
        mean_within_bound: r.mean_within_bound,
        per_alpha: r.per_alpha,
        failure_nonincreasing: r.failure_nonincreasing,
        pass,
    };
    Ok(RunOutput { artifacts: vec![csv, Artifact::json("summary.json", &s)?], checks_passed: Some(pass) })
}
