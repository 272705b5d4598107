use bnlab_core::invariant::{
    alpha_invariant, alpha_stability, expected_relu_norm_sq, make_invariant, mc_layer_expectation,
    perturbed_invariant, KernelParams, LayerExpectationReport,
};
use bnlab_core::stats::Summary;
use serde::Serialize;

use super::{experiment_seed, input_seed, key, Key, RunOutput};
use crate::error::{CliError, CliResult};
use crate::output::{cell, num, Artifact};
use crate::params::Params;

pub const KEYS: &[Key] = &[
    key("mode", "perturbed", "invariant (exact invariant batch) or perturbed"),
    key("n", "5", "batch size"),
    key("k", "5", "input dimension"),
    key("d", "512", "layer width"),
    key("trials", "4000", "weight draws"),
    key("radius", "2", "distance of x_1 from the cluster center (perturbed mode)"),
    key("spread", "0.02", "largest offset of a cluster column (perturbed mode)"),
    key("alpha", "auto", "variance scale, sigma^2 = 2 alpha / d; auto picks the mode's own alpha"),
    key("sigmas", "3", "standard errors allowed in the moment and contraction checks"),
];

#[derive(Serialize)]
struct MomentCheck {
    target: f64,
    measured: Summary,
    pass: bool,
}

#[derive(Serialize)]
struct ContractionCheck {
    pairs: usize,
    contracting: usize,
    pass: bool,
}

#[derive(Serialize)]
struct InvariantReport {
    mode: String,
    k: usize,
    alpha: f64,
    #[serde(flatten)]
    report: LayerExpectationReport,
    norm_x1: MomentCheck,
    norm_nu_hat: MomentCheck,
    orthogonality_pass: bool,
    contraction: ContractionCheck,
    pass: bool,
}

fn minus(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn run(p: &Params, seed: u64) -> CliResult<RunOutput> {
    let n = p.usize("n")?;
    let k = p.usize("k")?;
    let d = p.usize("d")?;
    let trials = p.usize("trials")?;
    if trials == 0 {
        return Err(CliError::Config("`trials` must be >= 1".into()));
    }
    let sigmas = p.f64("sigmas")?;
    let mode = p.choice("mode", &["invariant", "perturbed"])?;
    let b = if mode == "invariant" {
        make_invariant(n, k, input_seed(seed))?.batch
    } else {
        perturbed_invariant(n, k, p.f64("radius")?, p.f64("spread")?, input_seed(seed))?
    };
    let alpha = match p.str("alpha")?.trim() {
        "auto" if mode == "invariant" => alpha_invariant(n)?,
        "auto" => alpha_stability(n, p.f64("radius")?)?,
        _ => p.f64("alpha")?,
    };
    let params = KernelParams::alpha_scaled(d, alpha)?;
    let report = mc_layer_expectation(&b, params, trials, experiment_seed(seed))?;

    // Expected squared norms after one layer follow from the recentred inputs.
    let mu: Vec<f64> = (0..b.rows()).map(|r| b.row(r).iter().sum::<f64>() / n as f64).collect();
    let nu: Vec<f64> = (0..b.rows()).map(|r| (1..n).map(|i| b.get(r, i)).sum::<f64>() / (n - 1) as f64).collect();
    let target_x1 = expected_relu_norm_sq(&minus(b.column(0), &mu), params);
    let target_nu = expected_relu_norm_sq(&minus(&nu, &mu), params);
    let norm_x1 = MomentCheck {
        target: target_x1,
        measured: report.column_norm_sq[0],
        pass: report.column_norm_sq[0].within(target_x1, sigmas),
    };
    let norm_nu_hat = MomentCheck {
        target: target_nu,
        measured: report.nu_hat_norm_sq,
        pass: report.nu_hat_norm_sq.within(target_nu, sigmas),
    };
    let measured: Vec<_> = report.distances.iter().filter(|pd| pd.output.count > 0).collect();
    let contracting = measured.iter().filter(|pd| pd.contracts(sigmas)).count();
    let contraction = ContractionCheck { pairs: measured.len(), contracting, pass: contracting == measured.len() };
    let orthogonality_pass = report.orthogonality_violations == 0;
    let pass = norm_x1.pass && norm_nu_hat.pass && orthogonality_pass && contraction.pass;

    let csv = Artifact::csv(
        "distances.csv",
        &["a", "b", "input_sq", "output_mean_sq", "output_std_err", "skipped"],
        report.distances.iter().map(|pd| {
            vec![
                cell(pd.a),
                cell(pd.b),
                num(pd.input_sq),
                num(pd.output.mean),
                num(pd.output.std_err),
                cell(pd.skipped),
            ]
        }),
    )?;
    let out = InvariantReport {
        mode: mode.to_string(),
        k,
        alpha,
        report,
        norm_x1,
        norm_nu_hat,
        orthogonality_pass,
        contraction,
        pass,
    };
    Ok(RunOutput {
        artifacts: vec![csv, Artifact::json("invariant_report.json", &out)?],
        checks_passed: Some(pass),
    })
}
