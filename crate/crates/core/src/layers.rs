//! Forward propagation through random layers that apply any subset of
//! recentering (RC), rescaling (RS) and ReLU (NL), plus the per-layer
//! measurements used for the figure reproductions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::batch::{angle_between, gaussian_matrix, numerical_rank_with_tol, Batch, RankTol};
use crate::error::{Error, Result};
use crate::invariant::{alpha_invariant, alpha_stability};
use crate::seed::SeedSpec;

/// Which normalization components a layer applies after the matmul.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentSet {
    pub apply_nl: bool,
    pub apply_rc: bool,
    pub apply_rs: bool,
}

impl ComponentSet {
    /// Row I: ReLU only.
    pub const NL: Self = Self { apply_nl: true, apply_rc: false, apply_rs: false };
    /// Row II: recentering only (linear).
    pub const RC: Self = Self { apply_nl: false, apply_rc: true, apply_rs: false };
    /// Row III: recentering followed by ReLU.
    pub const NL_RC: Self = Self { apply_nl: true, apply_rc: true, apply_rs: false };
    /// Row IV: rescaling only (linear).
    pub const RS: Self = Self { apply_nl: false, apply_rc: false, apply_rs: true };
    /// Row V: full batch normalization followed by ReLU.
    pub const FULL_BN: Self = Self { apply_nl: true, apply_rc: true, apply_rs: true };
    /// Batch normalization without recentering.
    pub const NL_RS: Self = Self { apply_nl: true, apply_rc: false, apply_rs: true };
    pub const LINEAR: Self = Self { apply_nl: false, apply_rc: false, apply_rs: false };

    /// Looks up a preset by roman numeral (`I`..`V`).
    pub fn from_roman(name: &str) -> Option<Self> {
        Some(match name {
            "I" => Self::NL,
            "II" => Self::RC,
            "III" => Self::NL_RC,
            "IV" => Self::RS,
            "V" => Self::FULL_BN,
            _ => return None,
        })
    }

    /// Parses `I`..`V` or a comma list drawn from `nl`, `rc`, `rs`
    /// (`linear` or `none` for the empty set).
    pub fn parse(spec: &str) -> Option<Self> {
        let spec = spec.trim();
        if let Some(c) = Self::from_roman(spec) {
            return Some(c);
        }
        if spec.eq_ignore_ascii_case("linear") || spec.eq_ignore_ascii_case("none") {
            return Some(Self::LINEAR);
        }
        let mut c = Self::LINEAR;
        for part in spec.split(['+', ',']) {
            match part.trim().to_ascii_lowercase().as_str() {
                "nl" | "relu" => c.apply_nl = true,
                "rc" => c.apply_rc = true,
                "rs" => c.apply_rs = true,
                _ => return None,
            }
        }
        Some(c)
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.apply_nl {
            parts.push("nl");
        }
        if self.apply_rc {
            parts.push("rc");
        }
        if self.apply_rs {
            parts.push("rs");
        }
        if parts.is_empty() {
            "linear".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Weight variance per layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarianceScheme {
    /// `2 / fan_in`.
    He,
    Fixed(f64),
    /// `2 * alpha / fan_out` with `alpha = n^2 / (n^2 - 2n + 2)`.
    AlphaInvariant,
    /// `2 * alpha / fan_out` with `alpha = n^2 / ((n-1)^2 R^2)`.
    AlphaStability { radius: f64 },
}

impl VarianceScheme {
    pub fn variance(&self, fan_in: usize, fan_out: usize, batch_size: usize) -> Result<f64> {
        Ok(match *self {
            VarianceScheme::He => 2.0 / fan_in as f64,
            VarianceScheme::Fixed(v) => v,
            VarianceScheme::AlphaInvariant => 2.0 * alpha_invariant(batch_size)? / fan_out as f64,
            VarianceScheme::AlphaStability { radius } => {
                2.0 * alpha_stability(batch_size, radius)? / fan_out as f64
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Output width of each layer; its length is the depth.
    pub widths: Vec<usize>,
    pub variance: VarianceScheme,
    pub components: ComponentSet,
    pub seed: SeedSpec,
    pub rescale_epsilon: f64,
    pub rank_tol: RankTol,
}

impl NetworkConfig {
    pub fn constant_width(depth: usize, width: usize, components: ComponentSet, seed: SeedSpec) -> Self {
        Self {
            widths: vec![width; depth],
            variance: VarianceScheme::He,
            components,
            seed,
            rescale_epsilon: 0.0,
            rank_tol: RankTol::Auto,
        }
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    /// Stream that draws the weights of layer `t` (1-based).
    pub fn layer_seed(&self, t: usize) -> SeedSpec {
        self.seed.child(t as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerMetrics {
    pub layer: usize,
    pub width: usize,
    pub numerical_rank: usize,
    pub rank_tol: f64,
    pub median_angle_rad: Option<f64>,
    pub mean_column_norm: f64,
    pub max_column_norm: f64,
    pub median_column_norm: f64,
    pub max_abs_column_sum: f64,
}

impl LayerMetrics {
    pub fn measure(layer: usize, x: &Batch, tol: RankTol) -> Self {
        let (rank, resolved) = numerical_rank_with_tol(x, tol);
        let norms = x.column_norms();
        let mut angles = Vec::new();
        for i in 0..x.cols() {
            for j in i + 1..x.cols() {
                if let Ok(a) = angle_between(x.column(i), x.column(j)) {
                    angles.push(a);
                }
            }
        }
        Self {
            layer,
            width: x.rows(),
            numerical_rank: rank,
            rank_tol: resolved,
            median_angle_rad: median(&mut angles),
            mean_column_norm: norms.iter().sum::<f64>() / norms.len() as f64,
            max_column_norm: norms.iter().copied().fold(0.0, f64::max),
            median_column_norm: median(&mut norms.clone()).unwrap_or(0.0),
            max_abs_column_sum: x.column_sum().iter().fold(0.0f64, |a, v| a.max(v.abs())),
        }
    }
}

/// Representations `X^(0) .. X^(T)` with their per-layer metrics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub layers: Vec<Batch>,
    pub metrics: Vec<LayerMetrics>,
}

impl Trajectory {
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn last(&self) -> &Batch {
        self.layers.last().expect("trajectory holds the input layer")
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) })
}

/// Recentering and rescaling of pre-activations, in place, row by row.
///
/// Rescaling divides by `max(sigma, eps)` with `sigma` the population
/// standard deviation of the row.
pub fn normalize_rows(z: &mut DMatrix<f64>, recenter: bool, rescale: bool, eps: f64) -> Result<()> {
    let n = z.ncols() as f64;
    for i in 0..z.nrows() {
        let mut row = z.row_mut(i);
        let mean = row.sum() / n;
        if recenter {
            row.iter_mut().for_each(|v| *v -= mean);
        }
        if rescale {
            let centre = if recenter { 0.0 } else { mean };
            let var = row.iter().map(|v| (v - centre).powi(2)).sum::<f64>() / n;
            let sigma = var.sqrt();
            let denom = sigma.max(eps);
            if denom == 0.0 {
                return Err(Error::DegenerateStd { row: i });
            }
            row.iter_mut().for_each(|v| *v /= denom);
        }
    }
    Ok(())
}

/// One layer: `Z = W X`, then RC, RS and ReLU in that order for whichever
/// components are enabled.
pub fn layer_forward(x: &Batch, w: &Batch, c: ComponentSet, eps: f64) -> Result<Batch> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter(format!("rescale epsilon {eps} < 0")));
    }
    let mut z = w.matmul(x)?.into_matrix();
    normalize_rows(&mut z, c.apply_rc, c.apply_rs, eps)?;
    if c.apply_nl {
        z.apply(|v| *v = v.max(0.0));
    }
    Batch::from_matrix(z)
}

/// Propagates `x0` through `cfg.depth()` fresh random layers.
pub fn propagate(x0: &Batch, cfg: &NetworkConfig) -> Result<Trajectory> {
    if x0.cols() < 2 {
        return Err(Error::InvalidParameter(format!("batch size must be >= 2, got {}", x0.cols())));
    }
    if cfg.rescale_epsilon < 0.0 {
        return Err(Error::InvalidParameter("rescale epsilon must be >= 0".into()));
    }
    if let Some(&w) = cfg.widths.iter().find(|&&w| w == 0) {
        return Err(Error::InvalidParameter(format!("layer width {w}")));
    }
    let n = x0.cols();
    let mut layers = vec![x0.clone()];
    let mut metrics = vec![LayerMetrics::measure(0, x0, cfg.rank_tol)];
    for (idx, &width) in cfg.widths.iter().enumerate() {
        let t = idx + 1;
        let prev = layers.last().expect("non-empty");
        let var = cfg.variance.variance(prev.rows(), width, n)?;
        let w = gaussian_matrix(width, prev.rows(), var, cfg.layer_seed(t))?;
        let next = layer_forward(prev, &w, cfg.components, cfg.rescale_epsilon)?;
        metrics.push(LayerMetrics::measure(t, &next, cfg.rank_tol));
        layers.push(next);
    }
    Ok(Trajectory { layers, metrics })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnglePair {
    pub i: usize,
    pub j: usize,
    pub angle_in: f64,
    pub angle_out: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleScatter {
    pub layer_in: usize,
    pub layer_out: usize,
    pub pairs: Vec<AnglePair>,
    /// Pairs skipped because a column had zero norm at either layer.
    pub dropped: usize,
}

impl AngleScatter {
    pub fn median_out(&self) -> Option<f64> {
        median(&mut self.pairs.iter().map(|p| p.angle_out).collect::<Vec<_>>())
    }
}

/// Angles of every pair `i < j` at two layers of a trajectory.
pub fn angle_scatter(tr: &Trajectory, layer_in: usize, layer_out: usize) -> Result<AngleScatter> {
    let depth = tr.depth();
    if layer_in > depth || layer_out > depth {
        return Err(Error::InvalidParameter(format!(
            "layers ({layer_in}, {layer_out}) outside 0..={depth}"
        )));
    }
    let (a, b) = (&tr.layers[layer_in], &tr.layers[layer_out]);
    let mut pairs = Vec::new();
    let mut dropped = 0;
    for i in 0..a.cols() {
        for j in i + 1..a.cols() {
            match (angle_between(a.column(i), a.column(j)), angle_between(b.column(i), b.column(j))) {
                (Ok(angle_in), Ok(angle_out)) => pairs.push(AnglePair { i, j, angle_in, angle_out }),
                _ => dropped += 1,
            }
        }
    }
    Ok(AngleScatter { layer_in, layer_out, pairs, dropped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` edges spanning `[min, max]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Fraction of samples in the first (lowest-value) bin.
    pub fn lowest_bin_fraction(&self) -> f64 {
        self.counts[0] as f64 / self.total() as f64
    }
}

/// Equal-width histogram of `values`; the last bin is closed on the right.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be >= 1".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidParameter("no values".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + width * k as f64 })
        .collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Histogram of one neuron's activations across the batch at `layer`.
pub fn neuron_activity_histogram(tr: &Trajectory, layer: usize, neuron: usize, bins: usize) -> Result<Histogram> {
    let x = tr
        .layers
        .get(layer)
        .ok_or_else(|| Error::InvalidParameter(format!("layer {layer} outside 0..={}", tr.depth())))?;
    if neuron >= x.rows() {
        return Err(Error::InvalidParameter(format!("neuron {neuron} >= width {}", x.rows())));
    }
    histogram(&x.row(neuron), bins)
}
