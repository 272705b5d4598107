use bnlab_core::batch::{gaussian_matrix, random_projection_2d, RankTol};
use bnlab_core::layers::{
    angle_scatter, median, neuron_activity_histogram, propagate, ComponentSet, LayerMetrics, NetworkConfig,
    VarianceScheme,
};
use serde::Serialize;

use super::{auxiliary_seed, experiment_seed, input_seed, key, Key, RunOutput};
use crate::error::{CliError, CliResult};
use crate::output::{cell, num, Artifact};
use crate::params::Params;

pub const KEYS: &[Key] = &[
    key("preset", "none", "named desk-scale configuration applied beneath explicit settings"),
    key("n", "64", "batch size (columns)"),
    key("k", "32", "input dimension (rows of X0)"),
    key("width", "256", "width of every layer"),
    key("depth", "30", "number of layers"),
    key("components", "V", "I..V, or a list from nl, rc, rs such as nl+rs"),
    key("variance", "he", "he, alpha-invariant, alpha-stability:R, or a fixed number"),
    key("eps", "0", "rescale epsilon"),
    key("rank_tol", "auto", "auto or an absolute singular value threshold"),
    key("layer_in", "0", "reference layer of the angle scatter"),
    key("layer_out", "last", "compared layer of the angle scatter"),
    key("histogram_layer", "last", "layer whose neuron activities are histogrammed"),
    key("histogram_bins", "10", "bins per neuron histogram"),
    key("escape_factor", "5", "a column escapes when its norm is this multiple of the median"),
];

// Every preset is a desk-scale stand-in: the source figures do not state
// their batch size, widths or input data, so each uses a synthetic Gaussian
// batch of 64 columns in 32 dimensions pushed through 30 layers of width 256.
// Only the component set and rescale epsilon differ.

/// Escape of a single column under recentering plus ReLU (row III).
const FIG3: &[(&str, &str)] = &[("components", "III"), ("eps", "0")];
/// Angles between inputs and outputs with recentering in the layer.
const FIG5_WITH_RC: &[(&str, &str)] = &[("components", "V"), ("eps", "1e-5")];
/// Same as `fig5-with-rc` without recentering.
const FIG5_WITHOUT_RC: &[(&str, &str)] = &[("components", "nl+rs"), ("eps", "1e-5")];
/// Per-neuron activity histograms after full batch normalization.
const FIG6: &[(&str, &str)] = &[("components", "V"), ("eps", "1e-5")];
/// Numerical rank along a ReLU network without normalization.
const FIG2B_RANK: &[(&str, &str)] = &[("components", "I"), ("eps", "0")];

const PROVENANCE: &str = "desk-scale synthetic configuration; the source figure does not state its setup";

pub fn preset(name: &str) -> CliResult<&'static [(&'static str, &'static str)]> {
    Ok(match name {
        "none" => &[],
        "fig3" => FIG3,
        "fig5-with-rc" => FIG5_WITH_RC,
        "fig5-without-rc" => FIG5_WITHOUT_RC,
        "fig6" => FIG6,
        "fig2b-rank" => FIG2B_RANK,
        other => {
            return Err(CliError::Config(format!(
                "unknown preset `{other}`; expected fig3, fig5-with-rc, fig5-without-rc, fig6 or fig2b-rank"
            )))
        }
    })
}

fn parse_variance(p: &Params) -> CliResult<VarianceScheme> {
    let raw = p.str("variance")?.trim();
    let bad = || CliError::Config(format!("`variance = {raw}`: expected he, alpha-invariant, alpha-stability:R or a positive number"));
    Ok(match raw {
        "he" => VarianceScheme::He,
        "alpha-invariant" => VarianceScheme::AlphaInvariant,
        _ => {
            if let Some(r) = raw.strip_prefix("alpha-stability:") {
                let radius: f64 = r.trim().parse().map_err(|_| bad())?;
                VarianceScheme::AlphaStability { radius }
            } else {
                let v: f64 = raw.parse().map_err(|_| bad())?;
                if !(v > 0.0) || !v.is_finite() {
                    return Err(bad());
                }
                VarianceScheme::Fixed(v)
            }
        }
    })
}

fn parse_rank_tol(p: &Params) -> CliResult<RankTol> {
    match p.str("rank_tol")?.trim() {
        "auto" => Ok(RankTol::Auto),
        _ => {
            let t = p.f64("rank_tol")?;
            if t < 0.0 {
                return Err(CliError::Config("`rank_tol` must be nonnegative".into()));
            }
            Ok(RankTol::Absolute(t))
        }
    }
}

fn layer_index(p: &Params, name: &str, depth: usize) -> CliResult<usize> {
    let l = if p.str(name)?.trim() == "last" { depth } else { p.usize(name)? };
    if l > depth {
        return Err(CliError::Config(format!("`{name} = {l}` exceeds depth {depth}")));
    }
    Ok(l)
}

#[derive(Serialize)]
struct AngleSummary {
    layer_in: usize,
    layer_out: usize,
    pairs: usize,
    dropped_pairs: usize,
    median_angle_in_deg: Option<f64>,
    median_angle_out_deg: Option<f64>,
}

#[derive(Serialize)]
struct EscapeSummary {
    layer: usize,
    factor: f64,
    max_norm_column: usize,
    max_norm: f64,
    median_norm: f64,
    max_over_median: Option<f64>,
    escaped_columns: usize,
}

#[derive(Serialize)]
struct HistogramSummary {
    layer: usize,
    bins: usize,
    neurons: usize,
    /// Neurons with at least half the batch in the lowest bin.
    quiet_neurons: usize,
    quiet_fraction: f64,
}

#[derive(Serialize)]
struct TrajectoryReport {
    preset: String,
    provenance: &'static str,
    n: usize,
    k: usize,
    width: usize,
    depth: usize,
    components: String,
    variance: VarianceScheme,
    eps: f64,
    layers: Vec<LayerMetrics>,
    angles: AngleSummary,
    escape: EscapeSummary,
    histograms: HistogramSummary,
}

pub fn run(p: &Params, seed: u64) -> CliResult<RunOutput> {
    let n = p.usize("n")?;
    let k = p.usize("k")?;
    let width = p.usize("width")?;
    let depth = p.usize("depth")?;
    if n < 2 || k == 0 || width == 0 {
        return Err(CliError::Config("need n >= 2, k >= 1 and width >= 1".into()));
    }
    let raw_components = p.str("components")?;
    let components = ComponentSet::parse(raw_components)
        .ok_or_else(|| CliError::Config(format!("`components = {raw_components}`: expected I..V or nl/rc/rs")))?;
    let eps = p.f64("eps")?;
    let escape_factor = p.f64("escape_factor")?;
    let bins = p.usize("histogram_bins")?;
    let layer_in = layer_index(p, "layer_in", depth)?;
    let layer_out = layer_index(p, "layer_out", depth)?;
    let hist_layer = layer_index(p, "histogram_layer", depth)?;

    let mut cfg = NetworkConfig::constant_width(depth, width, components, experiment_seed(seed));
    cfg.variance = parse_variance(p)?;
    cfg.rescale_epsilon = eps;
    cfg.rank_tol = parse_rank_tol(p)?;
    let x0 = gaussian_matrix(k, n, 1.0, input_seed(seed))?;
    let tr = propagate(&x0, &cfg)?;

    let scatter = angle_scatter(&tr, layer_in, layer_out)?;
    let mut ins: Vec<f64> = scatter.pairs.iter().map(|a| a.angle_in).collect();
    let angles = AngleSummary {
        layer_in,
        layer_out,
        pairs: scatter.pairs.len(),
        dropped_pairs: scatter.dropped,
        median_angle_in_deg: median(&mut ins).map(f64::to_degrees),
        median_angle_out_deg: scatter.median_out().map(f64::to_degrees),
    };
    let angles_csv = Artifact::csv(
        "angles.csv",
        &["layer_in", "layer_out", "i", "j", "angle_in_rad", "angle_out_rad"],
        scatter.pairs.iter().map(|a| {
            vec![cell(layer_in), cell(layer_out), cell(a.i), cell(a.j), num(a.angle_in), num(a.angle_out)]
        }),
    )?;

    let last = tr.last();
    let norms = last.column_norms();
    let argmax = norms
        .iter()
        .enumerate()
        .fold(0, |best, (j, &v)| if v > norms[best] { j } else { best });
    let median_norm = median(&mut norms.clone()).unwrap_or(0.0);
    let escape = EscapeSummary {
        layer: depth,
        factor: escape_factor,
        max_norm_column: argmax,
        max_norm: norms[argmax],
        median_norm,
        max_over_median: (median_norm > 0.0).then(|| norms[argmax] / median_norm),
        escaped_columns: norms.iter().filter(|&&v| v >= escape_factor * median_norm).count(),
    };
    let projection = random_projection_2d(last, auxiliary_seed(seed))?;
    let projection_csv = Artifact::csv(
        "projection_2d.csv",
        &["col_index", "u", "v", "is_escaped"],
        (0..n).map(|j| vec![cell(j), num(projection.get(0, j)), num(projection.get(1, j)), cell(j == argmax)]),
    )?;

    let neurons = tr.layers[hist_layer].rows();
    let mut hist_rows = Vec::with_capacity(neurons * bins);
    let mut quiet = 0;
    for neuron in 0..neurons {
        let h = neuron_activity_histogram(&tr, hist_layer, neuron, bins)?;
        if h.lowest_bin_fraction() >= 0.5 {
            quiet += 1;
        }
        for (b, &count) in h.counts.iter().enumerate() {
            hist_rows.push(vec![cell(hist_layer), cell(neuron), num(h.edges[b]), num(h.edges[b + 1]), cell(count)]);
        }
    }
    let histograms_csv = Artifact::csv("histograms.csv", &["layer", "neuron", "bin_lo", "bin_hi", "count"], hist_rows)?;
    let histograms = HistogramSummary {
        layer: hist_layer,
        bins,
        neurons,
        quiet_neurons: quiet,
        quiet_fraction: quiet as f64 / neurons as f64,
    };

    let ranks_csv = Artifact::csv(
        "ranks.csv",
        &["layer", "numerical_rank", "tol"],
        tr.metrics.iter().map(|m| vec![cell(m.layer), cell(m.numerical_rank), num(m.rank_tol)]),
    )?;

    let report = TrajectoryReport {
        preset: p.str("preset")?.to_string(),
        provenance: PROVENANCE,
        n,
        k,
        width,
        depth,
        components: components.label(),
        variance: cfg.variance,
        eps,
        layers: tr.metrics.clone(),
        angles,
        escape,
        histograms,
    };
    Ok(RunOutput {
        artifacts: vec![
            Artifact::json("trajectory_metrics.json", &report)?,
            angles_csv,
            projection_csv,
            histograms_csv,
            ranks_csv,
        ],
        checks_passed: None,
    })
}
