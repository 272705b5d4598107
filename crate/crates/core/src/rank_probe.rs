//! Sign-pattern cell volumes and the ReLU rank-growth experiment.
//!
//! Two weight rows are equivalent relative to a batch when they induce the
//! same sign on every datapoint. `gamma` is the smallest positive Gaussian
//! volume among the resulting cells; it controls how many random ReLU neurons
//! a batch needs before its representation becomes full rank.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::batch::{column_mean, numerical_rank, Batch, RankTol};
use crate::error::{Error, Result};
use crate::seed::SeedSpec;
use crate::stats::{wilson_interval, Summary};

/// Signs of `w . x_i` over a batch, packed two bits per column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignPattern {
    len: usize,
    words: Vec<u64>,
}

const POS: u64 = 0b01;
const NEG: u64 = 0b10;

impl SignPattern {
    pub fn from_signs(signs: &[i8]) -> Self {
        let mut words = vec![0u64; signs.len().div_ceil(32)];
        for (i, &s) in signs.iter().enumerate() {
            let bits = match s.signum() {
                1 => POS,
                -1 => NEG,
                _ => 0,
            };
            words[i / 32] |= bits << (2 * (i % 32));
        }
        Self { len: signs.len(), words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> i8 {
        match (self.words[i / 32] >> (2 * (i % 32))) & 0b11 {
            POS => 1,
            NEG => -1,
            _ => 0,
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn negated(&self) -> Self {
        let flipped: Vec<i8> = self.signs().into_iter().map(|s| -s).collect();
        Self::from_signs(&flipped)
    }

    pub fn zero_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i) == 0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sign of `w . x_i` for every column; an exact zero maps to 0.
pub fn sign_pattern(w: &[f64], b: &Batch) -> Result<SignPattern> {
    if w.len() != b.rows() {
        return Err(Error::Shape(format!("row of length {} against k = {}", w.len(), b.rows())));
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidParameter("weight row is zero".into()));
    }
    let signs: Vec<i8> = (0..b.cols())
        .map(|i| {
            let s = dot(w, b.column(i));
            if s > 0.0 {
                1
            } else if s < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    Ok(SignPattern::from_signs(&signs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    pub classes_observed: usize,
    pub samples: u64,
    /// 95% interval for the smallest observed class frequency.
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact: bool,
    /// Draws that hit a cell boundary and were redrawn.
    pub discarded: u64,
    /// `samples * gamma_hat < 50`: small classes may be unobserved.
    pub caveat_small_classes: bool,
}

const MC_CHUNK: u64 = 4096;

/// Monte Carlo estimate of `gamma` from `samples` Gaussian rows.
///
/// Columns that are exactly zero always produce sign 0 and are ignored;
/// any other zero sign is a boundary hit and the row is redrawn.
pub fn estimate_gamma_mc(b: &Batch, samples: u64, seed: SeedSpec) -> Result<GammaEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let k = b.rows();
    let live: Vec<usize> = (0..b.cols()).filter(|&i| b.column_norm(i) > 0.0).collect();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<(BTreeMap<SignPattern, u64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut rng = seed.child(c).rng();
            let mut classes = BTreeMap::new();
            let mut discarded = 0u64;
            let mut w = vec![0.0; k];
            let mut taken = 0;
            while taken < count {
                w.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                let Ok(p) = sign_pattern(&w, b) else {
                    discarded += 1;
                    continue;
                };
                if live.iter().any(|&i| p.get(i) == 0) {
                    discarded += 1;
                    continue;
                }
                *classes.entry(p).or_insert(0u64) += 1;
                taken += 1;
            }
            (classes, discarded)
        })
        .collect();
    let mut classes: BTreeMap<SignPattern, u64> = BTreeMap::new();
    let mut discarded = 0;
    for (part, d) in partials {
        discarded += d;
        for (p, c) in part {
            *classes.entry(p).or_insert(0) += c;
        }
    }
    let min_count = classes.values().copied().min().unwrap_or(0);
    let gamma_hat = min_count as f64 / samples as f64;
    let (ci_low, ci_high) = wilson_interval(min_count, samples);
    Ok(GammaEstimate {
        gamma_hat,
        classes_observed: classes.len(),
        samples,
        ci_low,
        ci_high,
        exact: false,
        discarded,
        caveat_small_classes: samples as f64 * gamma_hat < 50.0,
    })
}

/// Exact `gamma` for a planar batch.
///
/// Each column `x` contributes the two unit directions orthogonal to it;
/// between consecutive boundary directions the sign pattern is constant, so
/// the cells are arcs and their Gaussian volume is the arc length over `2 pi`.
pub fn estimate_gamma_exact_2d(b: &Batch) -> Result<GammaEstimate> {
    if b.rows() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, got: b.rows() });
    }
    if let Some(i) = (0..b.cols()).find(|&i| b.column_norm(i) == 0.0) {
        return Err(Error::DegenerateColumn { index: i });
    }
    let arcs = planar_cell_arcs(b);
    let smallest = arcs.iter().copied().fold(f64::INFINITY, f64::min);
    let gamma = smallest / TAU;
    Ok(GammaEstimate {
        gamma_hat: gamma,
        classes_observed: arcs.len(),
        samples: 0,
        ci_low: gamma,
        ci_high: gamma,
        exact: true,
        discarded: 0,
        caveat_small_classes: false,
    })
}

/// Arc lengths of the sign cells of a planar batch, in boundary order.
pub fn planar_cell_arcs(b: &Batch) -> Vec<f64> {
    let mut bounds: Vec<f64> = Vec::with_capacity(2 * b.cols());
    for i in 0..b.cols() {
        let c = b.column(i);
        let theta = c[1].atan2(c[0]);
        for shift in [PI / 2.0, -PI / 2.0] {
            bounds.push((theta + shift).rem_euclid(TAU));
        }
    }
    bounds.sort_by(f64::total_cmp);
    // Collinear columns share boundaries.
    let tol = 1e-12;
    let mut distinct: Vec<f64> = Vec::with_capacity(bounds.len());
    for v in bounds {
        if distinct.last().is_none_or(|&last| v - last > tol) {
            distinct.push(v);
        }
    }
    if distinct.len() > 1 && distinct[0] + TAU - distinct[distinct.len() - 1] <= tol {
        distinct.pop();
    }
    let m = distinct.len();
    (0..m)
        .map(|i| if i + 1 < m { distinct[i + 1] - distinct[i] } else { distinct[0] + TAU - distinct[m - 1] })
        .collect()
}

/// `n` equally spaced unit vectors at angles `2 pi i / n`, `i = 1..n`.
pub fn circle_batch(n: usize) -> Result<Batch> {
    let cols: Vec<Vec<f64>> = (1..=n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            vec![t.cos(), t.sin()]
        })
        .collect();
    Batch::from_columns(&cols)
}

/// The batch with its column mean subtracted from every column.
pub fn recentred(b: &Batch) -> Batch {
    let mu = column_mean(b);
    Batch::from_matrix(b.matrix().map_with_location(|i, _, v| v - mu[i])).expect("finite")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    /// Columns with `|cos| >= 1 - collinearity_tol` count as collinear.
    pub collinearity_tol: f64,
    pub rank_tol: RankTol,
    /// Monte Carlo draws used for `gamma` when the batch is not planar.
    pub gamma_samples: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { collinearity_tol: 1e-12, rank_tol: RankTol::Auto, gamma_samples: 100_000 }
    }
}

/// First collinear pair of columns, if any.
pub fn find_collinear_pair(b: &Batch, tol: f64) -> Option<(usize, usize)> {
    let norms = b.column_norms();
    for i in 0..b.cols() {
        for j in i + 1..b.cols() {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                return Some((i, j));
            }
            let cos = dot(b.column(i), b.column(j)) / (norms[i] * norms[j]);
            if cos.abs() >= 1.0 - tol {
                return Some((i, j));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NeuronCount {
    Reached(usize),
    Exhausted(usize),
}

impl NeuronCount {
    pub fn reached(self) -> Option<usize> {
        match self {
            NeuronCount::Reached(y) => Some(y),
            NeuronCount::Exhausted(_) => None,
        }
    }
}

fn relu_features(w: &[f64], b: &Batch, with_bn: bool) -> Vec<f64> {
    let mut z: Vec<f64> = (0..b.cols()).map(|i| dot(w, b.column(i))).collect();
    if with_bn {
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        z.iter_mut().for_each(|v| *v -= mean);
        let sigma = (z.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        // A zero-variance row is all zeros after recentering.
        if sigma > 0.0 {
            z.iter_mut().for_each(|v| *v /= sigma);
        }
    }
    z.iter_mut().for_each(|v| *v = v.max(0.0));
    z
}

/// Appends `N(0, I_k)` rows until `R(W X)` (or `R(BN(W X))`) has rank `n`.
pub fn min_neurons_to_full_rank(b: &Batch, with_bn: bool, max_d: usize, seed: SeedSpec) -> Result<NeuronCount> {
    min_neurons_to_full_rank_with(b, with_bn, max_d, seed, &ProbeOptions::default())
}

pub fn min_neurons_to_full_rank_with(
    b: &Batch,
    with_bn: bool,
    max_d: usize,
    seed: SeedSpec,
    opts: &ProbeOptions,
) -> Result<NeuronCount> {
    let n = b.cols();
    if let Some((i, j)) = find_collinear_pair(b, opts.collinearity_tol) {
        return Err(Error::Collinear { i, j });
    }
    if max_d < n {
        return Err(Error::Precondition(format!("max_d = {max_d} is below n = {n}")));
    }
    let k = b.rows();
    let mut rng = seed.rng();
    let mut rows: Vec<f64> = Vec::with_capacity(max_d * n);
    let mut count = 0usize;
    let mut rank = 0usize;
    let mut w = vec![0.0; k];
    for d in 1..=max_d {
        w.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let feat = relu_features(&w, b, with_bn);
        let zero_row = feat.iter().all(|&v| v == 0.0);
        rows.extend(feat);
        count += 1;
        // A zero row cannot raise the rank, and rank <= number of rows.
        if zero_row || count < n {
            continue;
        }
        let m = Batch::from_matrix(DMatrix::from_row_slice(count, n, &rows))?;
        rank = rank.max(numerical_rank(&m, opts.rank_tol));
        if rank == n {
            return Ok(NeuronCount::Reached(d));
        }
    }
    Ok(NeuronCount::Exhausted(max_d))
}

/// `exp(-n (alpha - 1 - ln alpha))`.
pub fn rank_failure_bound(n: usize, alpha: f64) -> f64 {
    (-(n as f64) * (alpha - 1.0 - alpha.ln())).exp()
}

/// Chernoff tail of a sum of `n` geometric(`gamma`) variables beyond
/// `alpha n / gamma`, in closed form.
pub fn rank_failure_bound_chernoff(n: usize, alpha: f64, gamma: f64) -> f64 {
    let r = alpha / gamma;
    let exponent = r * (1.0 / alpha).ln() + (r - 1.0) * ((alpha - gamma) / (1.0 - gamma)).ln();
    (-(n as f64) * exponent).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    /// Width `ceil(alpha n / gamma)` at which the rank is tested.
    pub width: usize,
    pub failures: usize,
    pub failure_frequency: f64,
    pub failure_std_err: f64,
    pub bound: f64,
    pub chernoff_bound: f64,
    /// Three binomial standard deviations of a frequency at the bound.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankProbeReport {
    pub n: usize,
    pub k: usize,
    pub with_bn: bool,
    pub gamma: GammaEstimate,
    pub n_over_gamma: f64,
    pub trials: usize,
    pub exhausted: usize,
    pub max_width: usize,
    pub y: Summary,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_within_bound: bool,
    pub per_alpha: Vec<AlphaRow>,
    pub failure_nonincreasing: bool,
    #[serde(skip)]
    pub ys: Vec<NeuronCount>,
}

/// Exact `gamma` for planar batches, Monte Carlo otherwise.
pub fn gamma_for(b: &Batch, seed: SeedSpec, samples: u64) -> Result<GammaEstimate> {
    if b.rows() == 2 {
        let live: Vec<Vec<f64>> = (0..b.cols())
            .filter(|&i| b.column_norm(i) > 0.0)
            .map(|i| b.column(i).to_vec())
            .collect();
        estimate_gamma_exact_2d(&Batch::from_columns(&live)?)
    } else {
        estimate_gamma_mc(b, samples, seed)
    }
}

/// Runs `trials` independent incremental-neuron experiments.
///
/// With `with_bn`, `gamma` is measured on the recentred batch.
pub fn rank_probe_experiment(
    b: &Batch,
    trials: usize,
    alphas: &[f64],
    with_bn: bool,
    seed: SeedSpec,
    opts: &ProbeOptions,
) -> Result<RankProbeReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a > 2.0)) {
        return Err(Error::Precondition(format!("alpha = {a} must exceed 2")));
    }
    if let Some((i, j)) = find_collinear_pair(b, opts.collinearity_tol) {
        return Err(Error::Collinear { i, j });
    }
    let n = b.cols();
    let gamma_batch = if with_bn { recentred(b) } else { b.clone() };
    let gamma = gamma_for(&gamma_batch, seed.child(u64::MAX), opts.gamma_samples)?;
    if !(gamma.gamma_hat > 0.0) {
        return Err(Error::Precondition("gamma estimate is zero".into()));
    }
    let n_over_gamma = n as f64 / gamma.gamma_hat;
    let width_for = |alpha: f64| (alpha * n_over_gamma).ceil() as usize;
    let max_alpha = alphas.iter().copied().fold(5.0, f64::max);
    let max_width = width_for(max_alpha).max(n);

    let ys: Vec<NeuronCount> = (0..trials)
        .into_par_iter()
        .map(|t| min_neurons_to_full_rank_with(b, with_bn, max_width, seed.child(t as u64), opts))
        .collect::<Result<_>>()?;

    let reached: Vec<f64> = ys.iter().filter_map(|y| y.reached()).map(|y| y as f64).collect();
    let exhausted = trials - reached.len();
    let y = Summary::of(&reached);
    let ci = 1.959_963_984_540_054 * y.std_err;

    let per_alpha: Vec<AlphaRow> = alphas
        .iter()
        .map(|&alpha| {
            let width = width_for(alpha);
            let failures = ys
                .iter()
                .filter(|y| match y {
                    NeuronCount::Reached(v) => *v > width,
                    NeuronCount::Exhausted(_) => true,
                })
                .count();
            let freq = failures as f64 / trials as f64;
            let bound = rank_failure_bound(n, alpha);
            let slack = 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
            AlphaRow {
                alpha,
                width,
                failures,
                failure_frequency: freq,
                failure_std_err: (freq * (1.0 - freq) / trials as f64).sqrt(),
                bound,
                chernoff_bound: rank_failure_bound_chernoff(n, alpha, gamma.gamma_hat),
                slack,
                pass: freq <= bound + slack,
            }
        })
        .collect();

    let mut order: Vec<&AlphaRow> = per_alpha.iter().collect();
    order.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let failure_nonincreasing = order.windows(2).all(|w| {
        let slack = 3.0 * (w[0].failure_std_err.powi(2) + w[1].failure_std_err.powi(2)).sqrt();
        w[1].failure_frequency <= w[0].failure_frequency + slack
    });

    Ok(RankProbeReport {
        n,
        k: b.rows(),
        with_bn,
        n_over_gamma,
        trials,
        exhausted,
        max_width,
        ci_low: y.mean - ci,
        ci_high: y.mean + ci,
        mean_within_bound: exhausted == 0 && y.mean <= n_over_gamma + 3.0 * y.std_err,
        y,
        gamma,
        per_alpha,
        failure_nonincreasing,
        ys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cols(c: &[[f64; 2]]) -> Batch {
        Batch::from_columns(&c.iter().map(|v| v.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn pattern_packing_roundtrip() {
        let signs: Vec<i8> = (0..70).map(|i| [1, -1, 0][i % 3]).collect();
        let p = SignPattern::from_signs(&signs);
        assert_eq!(p.signs(), signs);
        assert_eq!(p.len(), 70);
        assert_eq!(p.zero_positions().count(), 23);
    }

    #[test]
    fn sign_pattern_examples() {
        let b = cols(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(sign_pattern(&[1.0, 0.0], &b).unwrap().signs(), vec![1, 0]);
        let w = [0.3, -1.7];
        let p = sign_pattern(&w, &b).unwrap();
        assert_eq!(sign_pattern(&[0.6, -3.4], &b).unwrap(), p);
        assert_eq!(sign_pattern(&[-0.3, 1.7], &b).unwrap(), p.negated());
        assert!(matches!(sign_pattern(&[0.0, 0.0], &b), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn exact_quadrants() {
        let g = estimate_gamma_exact_2d(&cols(&[[1.0, 0.0], [0.0, 1.0]])).unwrap();
        assert!((g.gamma_hat - 0.25).abs() < 1e-15);
        assert_eq!(g.classes_observed, 4);
        assert!(g.exact);
    }

    #[test]
    fn exact_collinear_columns_share_a_line() {
        let g = estimate_gamma_exact_2d(&cols(&[[1.0, 2.0], [2.0, 4.0]])).unwrap();
        assert!((g.gamma_hat - 0.5).abs() < 1e-12);
        assert_eq!(g.classes_observed, 2);
        let opposite = estimate_gamma_exact_2d(&cols(&[[1.0, 2.0], [-3.0, -6.0]])).unwrap();
        assert!((opposite.gamma_hat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_circle_cells() {
        // Odd n: no antipodal pairs, so n distinct lines cut 2n equal arcs.
        let g = estimate_gamma_exact_2d(&circle_batch(5).unwrap()).unwrap();
        assert_eq!(g.classes_observed, 10);
        assert!((g.gamma_hat - 0.1).abs() < 1e-12, "{}", g.gamma_hat);
        // Even n: antipodal pairs share lines, leaving n arcs of volume 1/n.
        let g6 = estimate_gamma_exact_2d(&circle_batch(6).unwrap()).unwrap();
        assert_eq!(g6.classes_observed, 6);
        assert!((g6.gamma_hat - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn exact_rejects_other_dimensions_and_zero_columns() {
        let b3 = Batch::from_columns(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(estimate_gamma_exact_2d(&b3).unwrap_err(), Error::UnsupportedDimension { expected: 2, got: 3 });
        assert!(matches!(
            estimate_gamma_exact_2d(&cols(&[[1.0, 0.0], [0.0, 0.0]])),
            Err(Error::DegenerateColumn { index: 1 })
        ));
    }

    #[test]
    fn mc_quadrants_and_half_plane() {
        let g = estimate_gamma_mc(&cols(&[[1.0, 0.0], [0.0, 1.0]]), 100_000, SeedSpec::new(1, 0)).unwrap();
        assert!((0.24..=0.26).contains(&g.gamma_hat), "{}", g.gamma_hat);
        assert_eq!(g.classes_observed, 4);
        assert!(g.ci_low <= g.gamma_hat && g.gamma_hat <= g.ci_high);

        let h = estimate_gamma_mc(&Batch::from_columns(&[vec![1.0, 0.0]]).unwrap(), 100_000, SeedSpec::new(2, 0)).unwrap();
        assert!((0.49..=0.51).contains(&h.gamma_hat), "{}", h.gamma_hat);
        assert_eq!(h.classes_observed, 2);
    }

    #[test]
    fn mc_circle_sees_ten_cells() {
        let g = estimate_gamma_mc(&circle_batch(5).unwrap(), 100_000, SeedSpec::new(3, 0)).unwrap();
        assert_eq!(g.classes_observed, 10);
        assert!((0.095..=0.105).contains(&g.gamma_hat), "{}", g.gamma_hat);
    }

    #[test]
    fn mc_flags_small_sample() {
        let g = estimate_gamma_mc(&circle_batch(5).unwrap(), 10, SeedSpec::new(4, 0)).unwrap();
        assert!(g.caveat_small_classes);
    }

    #[test]
    fn mc_ignores_zero_columns() {
        let g = estimate_gamma_mc(&cols(&[[1.0, 0.0], [0.0, 0.0]]), 5000, SeedSpec::new(5, 0)).unwrap();
        assert_eq!(g.classes_observed, 2);
    }

    #[test]
    fn single_column_needs_geometric_neurons() {
        // y ~ Geometric(1/2): mean 2.
        let x = Batch::from_columns(&[vec![0.3, -1.2]]).unwrap();
        let ys: Vec<f64> = (0..10_000)
            .map(|t| min_neurons_to_full_rank(&x, false, 200, SeedSpec::new(6, t)).unwrap().reached().unwrap() as f64)
            .collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        assert!((1.9..=2.1).contains(&mean), "{mean}");
    }

    #[test]
    fn collinear_columns_rejected() {
        let b = cols(&[[1.0, 1.0], [0.0, 1.0], [-2.0, -2.0]]);
        assert_eq!(min_neurons_to_full_rank(&b, false, 10, SeedSpec::new(1, 0)), Err(Error::Collinear { i: 0, j: 2 }));
    }

    #[test]
    fn max_d_below_n_rejected() {
        let b = circle_batch(5).unwrap();
        assert!(matches!(min_neurons_to_full_rank(&b, false, 4, SeedSpec::new(1, 0)), Err(Error::Precondition(_))));
    }

    #[test]
    fn circle_mean_neurons_within_bound() {
        let b = circle_batch(5).unwrap();
        let r = rank_probe_experiment(&b, 1000, &[3.0, 5.0], false, SeedSpec::new(7, 0), &ProbeOptions::default()).unwrap();
        assert!(r.y.mean <= 25.0, "{}", r.y.mean);
        assert!(r.mean_within_bound);
        assert!(r.per_alpha.iter().all(|a| a.pass));
        assert!(r.failure_nonincreasing);
    }

    #[test]
    fn single_trial_report() {
        let b = circle_batch(5).unwrap();
        let r = rank_probe_experiment(&b, 1, &[3.0], false, SeedSpec::new(8, 0), &ProbeOptions::default()).unwrap();
        assert_eq!(r.ys.len(), 1);
        assert_eq!(r.y.mean, r.ys[0].reached().unwrap() as f64);
    }

    #[test]
    fn batch_norm_variant_uses_recentred_gamma() {
        let b = cols(&[[1.0, 0.2], [0.4, 1.0], [2.0, 1.5], [-0.5, 0.7]]);
        let r = rank_probe_experiment(&b, 300, &[3.0], true, SeedSpec::new(9, 0), &ProbeOptions::default()).unwrap();
        let g = estimate_gamma_exact_2d(&recentred(&b)).unwrap();
        assert_eq!(r.gamma.gamma_hat, g.gamma_hat);
        assert!(r.y.mean <= r.n_over_gamma);
    }

    #[test]
    fn bounds_agree_as_gamma_vanishes() {
        let simple = rank_failure_bound(5, 3.0);
        let tight = rank_failure_bound_chernoff(5, 3.0, 1e-6);
        assert!((simple - tight).abs() < 1e-4 * simple, "{simple} {tight}");
        let at_check = rank_failure_bound_chernoff(5, 3.0, 0.1);
        assert!((at_check - 0.0077).abs() < 1e-4, "{at_check}");
        assert!(rank_failure_bound_chernoff(5, 3.0, 0.1) <= simple);
    }

    fn planar_batch() -> impl Strategy<Value = Batch> {
        prop::collection::vec((0.0f64..std::f64::consts::PI, 0.2f64..3.0), 2..6).prop_filter_map("distinct lines", |v| {
            let mut angles: Vec<f64> = v.iter().map(|p| p.0).collect();
            angles.sort_by(f64::total_cmp);
            if angles.windows(2).any(|w| w[1] - w[0] < 1e-3) || angles[angles.len() - 1] - angles[0] > std::f64::consts::PI - 1e-3 {
                return None;
            }
            let cols: Vec<Vec<f64>> = v.iter().map(|&(t, r)| vec![r * t.cos(), r * t.sin()]).collect();
            Batch::from_columns(&cols).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gamma_invariant_under_scaling_and_rotation(b in planar_batch(), rot in 0.0f64..6.28, scales in prop::collection::vec(0.1f64..10.0, 6)) {
            let g = estimate_gamma_exact_2d(&b).unwrap().gamma_hat;
            let (c, s) = (rot.cos(), rot.sin());
            let moved: Vec<Vec<f64>> = (0..b.cols()).map(|i| {
                let v = b.column(i);
                vec![scales[i] * (c * v[0] - s * v[1]), scales[i] * (s * v[0] + c * v[1])]
            }).collect();
            let g2 = estimate_gamma_exact_2d(&Batch::from_columns(&moved).unwrap()).unwrap().gamma_hat;
            prop_assert!((g - g2).abs() < 1e-9);
        }

        #[test]
        fn neuron_count_never_below_n(b in planar_batch(), s in 0u64..1000) {
            if let NeuronCount::Reached(y) = min_neurons_to_full_rank(&b, false, 2000, SeedSpec::new(s, 1)).unwrap() {
                prop_assert!(y >= b.cols());
            }
        }

        #[test]
        fn volumes_sum_to_one(b in planar_batch()) {
            let total: f64 = planar_cell_arcs(&b).iter().sum();
            prop_assert!((total - TAU).abs() < 1e-9);
        }
    }
}
