use bnlab_core::rank_probe::{estimate_gamma_exact_2d, estimate_gamma_mc, gamma_for, GammaEstimate};
use serde::Serialize;

use super::{experiment_seed, key, probe_batch, Key, RunOutput};
use crate::error::{CliError, CliResult};
use crate::output::{cell, num, Artifact};
use crate::params::Params;

pub const KEYS: &[Key] = &[
    key("batch", "circle", "circle, gaussian or points"),
    key("n", "5", "batch size"),
    key("k", "2", "dimension"),
    key("points", "", "columns as x,y;x,y;... when batch = points"),
    key("method", "auto", "exact2d, mc, or auto (exact2d when k = 2)"),
    key("samples", "100000", "Monte Carlo draws"),
];

#[derive(Serialize)]
struct GammaReport {
    n: usize,
    k: usize,
    method: &'static str,
    gamma_hat: f64,
    ci_low: f64,
    ci_high: f64,
    classes_observed: usize,
    samples: u64,
    caveat_small_classes: bool,
    exact: bool,
    discarded: u64,
}

pub fn run(p: &Params, seed: u64) -> CliResult<RunOutput> {
    let b = probe_batch(p, seed)?;
    let samples = p.u64("samples")?;
    let method = match p.choice("method", &["auto", "exact2d", "mc"])? {
        "auto" if b.rows() == 2 => "exact2d",
        "auto" | "mc" => "mc",
        _ => "exact2d",
    };
    let est: GammaEstimate = if method == "exact2d" {
        if b.rows() == 2 {
            gamma_for(&b, experiment_seed(seed), samples)?
        } else {
            estimate_gamma_exact_2d(&b)?
        }
    } else {
        if samples == 0 {
            return Err(CliError::Config("`samples` must be >= 1".into()));
        }
        estimate_gamma_mc(&b, samples, experiment_seed(seed))?
    };
    let r = GammaReport {
        n: b.cols(),
        k: b.rows(),
        method,
        gamma_hat: est.gamma_hat,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        classes_observed: est.classes_observed,
        samples: est.samples,
        caveat_small_classes: est.caveat_small_classes,
        exact: est.exact,
        discarded: est.discarded,
    };
    let csv = Artifact::csv(
        "gamma.csv",
        &["n", "k", "method", "gamma_hat", "ci_low", "ci_high", "classes_observed", "samples", "caveat_small_classes"],
        [vec![
            cell(r.n),
            cell(r.k),
            cell(r.method),
            num(r.gamma_hat),
            num(r.ci_low),
            num(r.ci_high),
            cell(r.classes_observed),
            cell(r.samples),
            cell(r.caveat_small_classes),
        ]],
    )?;
    Ok(RunOutput { artifacts: vec![Artifact::json("gamma.json", &r)?, csv], checks_passed: None })
}
