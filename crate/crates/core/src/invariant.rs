//! Invariant representations under recentering and ReLU.
//!
//! An invariant batch has one unit "odd" column orthogonal to `n - 1` copies
//! of a cluster center of norm `1/(n-1)`. With weights of variance
//! `2 alpha / d`, a random layer maps it to another invariant batch in
//! expectation; a perturbed copy contracts towards one.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::batch::{clamped_acos, Batch};
use crate::error::{Error, Result};
use crate::seed::SeedSpec;
use crate::stats::Summary;

/// `n^2 / (n^2 - 2n + 2)`.
pub fn alpha_invariant(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}; need n >= 2")));
    }
    let n = n as f64;
    Ok(n * n / (n * n - 2.0 * n + 2.0))
}

/// `n^2 / ((n-1)^2 R^2)`, defined for `R > n/(n-1)`.
pub fn alpha_stability(n: usize, radius: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}; need n >= 2")));
    }
    let nf = n as f64;
    if !(radius > nf / (nf - 1.0)) {
        return Err(Error::Precondition(format!("R = {radius} must exceed n/(n-1) = {}", nf / (nf - 1.0))));
    }
    Ok(nf * nf / ((nf - 1.0) * (nf - 1.0) * radius * radius))
}

/// Squared norms of the recentred odd column and of the recentred cluster
/// center for the unit invariant batch.
pub fn recentred_norms_sq(n: usize) -> (f64, f64) {
    let n = n as f64;
    let odd = (n * n - 2.0 * n + 2.0) / (n * n);
    (odd, odd / ((n - 1.0) * (n - 1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantRep {
    pub n: usize,
    pub k: usize,
    pub batch: Batch,
    pub x1: Vec<f64>,
    pub nu_c: Vec<f64>,
}

fn gaussian_vec(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.sample(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthonormal_pair(k: usize, seed: SeedSpec) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seed.rng();
    loop {
        let a = gaussian_vec(&mut rng, k);
        let b = gaussian_vec(&mut rng, k);
        let na = norm(&a);
        if na == 0.0 {
            continue;
        }
        let u: Vec<f64> = a.iter().map(|v| v / na).collect();
        let proj = dot(&b, &u);
        let mut v: Vec<f64> = b.iter().zip(&u).map(|(b, u)| b - proj * u).collect();
        // A second pass removes the rounding left by the first.
        let proj2 = dot(&v, &u);
        v.iter_mut().zip(&u).for_each(|(v, u)| *v -= proj2 * u);
        let nv = norm(&v);
        if nv > 1e-6 {
            v.iter_mut().for_each(|x| *x /= nv);
            return (u, v);
        }
    }
}

/// Unit odd column `u` followed by `n - 1` copies of `v / (n - 1)`, with
/// `u`, `v` a random orthonormal pair.
pub fn make_invariant(n: usize, k: usize, seed: SeedSpec) -> Result<InvariantRep> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n = {n}; need n >= 3")));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k}; an orthogonal pair needs k >= 2")));
    }
    let (u, v) = orthonormal_pair(k, seed);
    let nu_c: Vec<f64> = v.iter().map(|x| x / (n - 1) as f64).collect();
    let mut cols = vec![u.clone()];
    cols.extend(std::iter::repeat_n(nu_c.clone(), n - 1));
    Ok(InvariantRep { n, k, batch: Batch::from_columns(&cols)?, x1: u, nu_c })
}

/// An invariant batch scaled so that `|x1 - nu_c| = R`, with each cluster
/// column moved off `nu_c` by at most `spread`.
///
/// The offsets are Gaussian, recentred to sum to zero so `nu_c` stays the
/// exact cluster mean, and scaled so the largest has norm `spread`.
pub fn perturbed_invariant(n: usize, k: usize, radius: f64, spread: f64, seed: SeedSpec) -> Result<Batch> {
    alpha_stability(n, radius)?;
    let nf = n as f64;
    if !(0.0..1.0 / (nf * nf)).contains(&spread) {
        return Err(Error::InvalidParameter(format!("spread = {spread} outside [0, 1/n^2)")));
    }
    if k < 3 {
        return Err(Error::InvalidParameter(format!("k = {k}; need k >= 3")));
    }
    let base = make_invariant(n, k, seed.child(0))?;
    let s = radius / (1.0 + 1.0 / ((nf - 1.0) * (nf - 1.0))).sqrt();
    let x1: Vec<f64> = base.x1.iter().map(|v| v * s).collect();
    let nu: Vec<f64> = base.nu_c.iter().map(|v| v * s).collect();

    let mut rng = seed.child(1).rng();
    let mut eps: Vec<Vec<f64>> = (1..n).map(|_| gaussian_vec(&mut rng, k)).collect();
    let m = n - 1;
    for r in 0..k {
        let mean = eps.iter().map(|e| e[r]).sum::<f64>() / m as f64;
        eps.iter_mut().for_each(|e| e[r] -= mean);
    }
    let largest = eps.iter().map(|e| norm(e)).fold(0.0, f64::max);
    let scale = if largest > 0.0 { spread / largest } else { 0.0 };

    let mut cols = vec![x1];
    for e in &eps {
        cols.push(nu.iter().zip(e).map(|(c, d)| c + scale * d).collect());
    }
    Batch::from_columns(&cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams {
    pub d: usize,
    pub sigma_sq: f64,
}

impl KernelParams {
    pub fn new(d: usize, sigma_sq: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be positive".into()));
        }
        if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma_sq = {sigma_sq} must be positive")));
        }
        Ok(Self { d, sigma_sq })
    }

    /// `sigma^2 = 2 alpha / d`.
    pub fn alpha_scaled(d: usize, alpha: f64) -> Result<Self> {
        Self::new(d, 2.0 * alpha / d as f64)
    }
}

/// `E |R(W x)|^2 = d sigma^2 |x|^2 / 2`.
pub fn expected_relu_norm_sq(x: &[f64], p: KernelParams) -> f64 {
    p.d as f64 * p.sigma_sq / 2.0 * dot(x, x)
}

/// `E R(W x) . R(W y)` in closed form.
pub fn arccos_kernel(x: &[f64], y: &[f64], p: KernelParams) -> Result<f64> {
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 {
        return Err(Error::DegenerateColumn { index: 0 });
    }
    if ny == 0.0 {
        return Err(Error::DegenerateColumn { index: 1 });
    }
    let rho = (dot(x, y) / (nx * ny)).clamp(-1.0, 1.0);
    let shape = ((1.0 - rho * rho).sqrt() + (PI - clamped_acos(rho)) * rho) / PI;
    Ok(p.d as f64 * p.sigma_sq * nx * ny / 2.0 * shape)
}

/// Whether `K(x, y) > x . y` with `sigma^2 = 2/d`.
pub fn kernel_contraction_check(x: &[f64], y: &[f64], d: usize) -> Result<bool> {
    if x == y {
        return Err(Error::Precondition("x and y coincide".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Shape(format!("lengths {} and {}", x.len(), y.len())));
    }
    let k = arccos_kernel(x, y, KernelParams::new(d, 2.0 / d as f64)?)?;
    Ok(k > dot(x, y))
}

fn draw_weights(rng: &mut impl Rng, d: usize, k: usize, sigma: f64) -> DMatrix<f64> {
    // Filled row by row so a wider draw extends a narrower one.
    let values: Vec<f64> = (0..d * k).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    DMatrix::from_row_slice(d, k, &values)
}

fn relu_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.max(0.0) * y.max(0.0)).sum()
}

/// Monte Carlo samples of `R(W x) . R(W y)` for `trials` independent `W`.
pub fn mc_relu_inner(x: &[f64], y: &[f64], p: KernelParams, trials: usize, seed: SeedSpec) -> Result<Summary> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Shape(format!("lengths {} and {}", x.len(), y.len())));
    }
    let k = x.len();
    let sigma = p.sigma_sq.sqrt();
    let xv = nalgebra::DVector::from_column_slice(x);
    let yv = nalgebra::DVector::from_column_slice(y);
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = draw_weights(&mut seed.child(t as u64).rng(), p.d, k, sigma);
            relu_dot((&w * &xv).as_slice(), (&w * &yv).as_slice())
        })
        .collect();
    Ok(Summary::of(&samples))
}

/// Expected squared distance between two tracked vectors after one layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDistance {
    /// Column indices; `n` stands for the cluster center `nu_c`.
    pub a: usize,
    pub b: usize,
    pub input_sq: f64,
    pub output: Summary,
    /// Trials where both outputs coincided and were left out.
    pub skipped: usize,
}

impl PairDistance {
    /// Output mean below the input by more than `k` standard errors.
    pub fn contracts(&self, k: f64) -> bool {
        self.output.mean < self.input_sq - k * self.output.std_err
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerExpectationReport {
    pub n: usize,
    pub trials: usize,
    pub seed: SeedSpec,
    pub params: KernelParams,
    /// Squared norms of the output columns.
    pub column_norm_sq: Vec<Summary>,
    pub nu_hat_norm_sq: Summary,
    /// Trials where `x1' . nu_hat` was not exactly zero.
    pub orthogonality_violations: usize,
    pub max_abs_orthogonality: f64,
    /// Pairs among columns `2..n` and `nu_c`.
    pub distances: Vec<PairDistance>,
}

struct TrialOutcome {
    norms: Vec<f64>,
    nu_norm: f64,
    ortho: f64,
    dists: Vec<Option<f64>>,
}

/// One random layer `R(W X - mu)` applied `trials` times.
///
/// `nu_c` is the mean of columns `2..n` and is pushed through the same layer
/// as `R(W nu_c - mu)`.
pub fn mc_layer_expectation(b: &Batch, p: KernelParams, trials: usize, seed: SeedSpec) -> Result<LayerExpectationReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let n = b.cols();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two columns".into()));
    }
    let k = b.rows();
    let nu: Vec<f64> = (0..k).map(|r| (1..n).map(|i| b.get(r, i)).sum::<f64>() / (n - 1) as f64).collect();
    // Tracked vectors: columns 2..n, then nu_c.
    let mut tracked: Vec<Vec<f64>> = (1..n).map(|i| b.column(i).to_vec()).collect();
    tracked.push(nu.clone());
    let index_of = |t: usize| t + 1;
    let pairs: Vec<(usize, usize)> =
        (0..tracked.len()).flat_map(|i| (i + 1..tracked.len()).map(move |j| (i, j))).collect();
    let input_sq: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| tracked[i].iter().zip(&tracked[j]).map(|(u, v)| (u - v).powi(2)).sum())
        .collect();

    let sigma = p.sigma_sq.sqrt();
    let mut with_nu = b.matrix().clone().insert_column(n, 0.0);
    with_nu.set_column(n, &nalgebra::DVector::from_column_slice(&nu));

    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = draw_weights(&mut seed.child(t as u64).rng(), p.d, k, sigma);
            let mut z = &w * &with_nu;
            for r in 0..p.d {
                let mu = (0..n).map(|i| z[(r, i)]).sum::<f64>() / n as f64;
                for i in 0..=n {
                    z[(r, i)] = (z[(r, i)] - mu).max(0.0);
                }
            }
            let col = |i: usize| z.column(i);
            let norms = (0..n).map(|i| col(i).norm_squared()).collect();
            let nu_norm = col(n).norm_squared();
            let ortho = col(0).dot(&col(n));
            let dists = pairs
                .iter()
                .map(|&(i, j)| {
                    let (a, b) = (col(index_of(i)), col(index_of(j)));
                    if a == b {
                        None
                    } else {
                        Some((a - b).norm_squared())
                    }
                })
                .collect();
            TrialOutcome { norms, nu_norm, ortho, dists }
        })
        .collect();

    let column_norm_sq = (0..n)
        .map(|i| Summary::of(&outcomes.iter().map(|o| o.norms[i]).collect::<Vec<_>>()))
        .collect();
    let nu_hat_norm_sq = Summary::of(&outcomes.iter().map(|o| o.nu_norm).collect::<Vec<_>>());
    let orthogonality_violations = outcomes.iter().filter(|o| o.ortho != 0.0).count();
    let max_abs_orthogonality = outcomes.iter().map(|o| o.ortho.abs()).fold(0.0, f64::max);
    let distances = pairs
        .iter()
        .enumerate()
        .map(|(q, &(i, j))| {
            let kept: Vec<f64> = outcomes.iter().filter_map(|o| o.dists[q]).collect();
            PairDistance {
                a: index_of(i),
                b: index_of(j),
                input_sq: input_sq[q],
                skipped: trials - kept.len(),
                output: Summary::of(&kept),
            }
        })
        .collect();
    Ok(LayerExpectationReport {
        n,
        trials,
        seed,
        params: p,
        column_norm_sq,
        nu_hat_norm_sq,
        orthogonality_violations,
        max_abs_orthogonality,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS10: f64 = 10.0 * f64::EPSILON;

    #[test]
    fn alpha_values() {
        assert_eq!(alpha_invariant(2).unwrap(), 2.0);
        assert!((alpha_invariant(10).unwrap() - 100.0 / 82.0).abs() < 1e-15);
        let mut prev = alpha_invariant(2).unwrap();
        for n in 3..10_000 {
            let a = alpha_invariant(n).unwrap();
            assert!(a > 1.0 && a < prev);
            prev = a;
        }
        assert!((alpha_stability(4, 2.0).unwrap() - 16.0 / 36.0).abs() < 1e-15);
        assert!(matches!(alpha_stability(4, 4.0 / 3.0), Err(Error::Precondition(_))));
        for (n, r) in [(3, 1.6), (5, 1.26), (20, 1.1), (100, 7.0)] {
            assert!(alpha_stability(n, r).unwrap() < 1.0);
        }
    }

    #[test]
    fn alpha_undoes_recentering() {
        for n in 2..200 {
            let (odd, _) = recentred_norms_sq(n);
            let d = 64.0;
            assert!((alpha_invariant(n).unwrap() * (d / 2.0) * (2.0 / d) * odd - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn invariant_definition_holds() {
        let rep = make_invariant(4, 2, SeedSpec::new(3, 0)).unwrap();
        let b = &rep.batch;
        assert!(dot(b.column(0), b.column(1)).abs() < EPS10);
        assert!((b.column_norm(1) - 1.0 / 3.0).abs() < EPS10);
        assert!((b.column_norm(0) - 1.0).abs() < EPS10);
        for i in 1..4 {
            assert_eq!(b.column(i), rep.nu_c.as_slice());
        }
    }

    #[test]
    fn invariant_mean_and_recentred_norms() {
        for n in [3, 5, 9] {
            let rep = make_invariant(n, 6, SeedSpec::new(n as u64, 1)).unwrap();
            let mean = crate::batch::column_mean(&rep.batch);
            let nf = n as f64;
            for r in 0..6 {
                let want = rep.x1[r] / nf + (nf - 1.0) / nf * rep.nu_c[r];
                assert!((mean[r] - want).abs() < EPS10);
            }
            let t1: Vec<f64> = rep.x1.iter().zip(&mean).map(|(a, m)| a - m).collect();
            let tn: Vec<f64> = rep.nu_c.iter().zip(&mean).map(|(a, m)| a - m).collect();
            let (odd, centre) = recentred_norms_sq(n);
            assert!((dot(&t1, &t1) - odd).abs() < EPS10);
            assert!((dot(&tn, &tn) - centre).abs() < EPS10);
        }
    }

    #[test]
    fn invariant_rejects_small_shapes() {
        assert!(matches!(make_invariant(4, 1, SeedSpec::new(1, 0)), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_invariant(2, 3, SeedSpec::new(1, 0)), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn perturbed_construction() {
        let n = 5;
        let b = perturbed_invariant(n, 4, 2.0, 1.0 / 50.0, SeedSpec::new(4, 0)).unwrap();
        let nu: Vec<f64> = (0..4).map(|r| (1..n).map(|i| b.get(r, i)).sum::<f64>() / 4.0).collect();
        let diff: Vec<f64> = b.column(0).iter().zip(&nu).map(|(a, c)| a - c).collect();
        assert!((norm(&diff) - 2.0).abs() < 1e-14);
        assert!(dot(b.column(0), &nu).abs() < 1e-14);
        for i in 1..n {
            for j in i + 1..n {
                let d: Vec<f64> = b.column(i).iter().zip(b.column(j)).map(|(a, c)| a - c).collect();
                assert!(norm(&d) < 2.0 / 25.0);
            }
        }
        let still = perturbed_invariant(n, 4, 2.0, 0.0, SeedSpec::new(4, 0)).unwrap();
        for i in 2..n {
            assert_eq!(still.column(i), still.column(1));
        }
        assert!(perturbed_invariant(n, 4, 1.25, 0.01, SeedSpec::new(4, 0)).is_err());
        assert!(perturbed_invariant(n, 4, 2.0, 0.04, SeedSpec::new(4, 0)).is_err());
    }

    #[test]
    fn kernel_closed_forms() {
        let p = KernelParams::new(8, 0.5).unwrap();
        let x = [1.0, 2.0, -1.0];
        let y2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let nx = norm(&x);
        assert!((arccos_kernel(&x, &y2, p).unwrap() - p.d as f64 * p.sigma_sq / 2.0 * nx * (2.0 * nx)).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(arccos_kernel(&x, &neg, p).unwrap().abs() < 1e-15);
        let k0 = arccos_kernel(&[1.0, 0.0], &[0.0, 3.0], p).unwrap();
        assert!((k0 - 8.0 * 0.5 / 2.0 * 3.0 / PI).abs() < 1e-15);
        assert!(matches!(arccos_kernel(&[0.0, 0.0], &[1.0, 0.0], p), Err(Error::DegenerateColumn { .. })));
    }

    #[test]
    fn expected_norm_examples() {
        assert_eq!(expected_relu_norm_sq(&[1.0, 0.0], KernelParams::new(2, 1.0).unwrap()), 1.0);
        assert_eq!(expected_relu_norm_sq(&[0.0, 0.0], KernelParams::new(2, 1.0).unwrap()), 0.0);
    }

    #[test]
    fn relu_norm_half_gaussian_moment() {
        let p = KernelParams::new(1000, 2.0 / 1000.0).unwrap();
        let (u, _) = orthonormal_pair(7, SeedSpec::new(5, 0));
        let s = mc_relu_inner(&u, &u, p, 10_000, SeedSpec::new(5, 1)).unwrap();
        assert!((0.97..=1.03).contains(&s.mean), "{}", s.mean);
    }

    #[test]
    fn kernel_matches_simulation() {
        let p = KernelParams::new(64, 2.0 / 64.0).unwrap();
        let mut rng = SeedSpec::new(6, 0).rng();
        for t in 0..10 {
            let x = gaussian_vec(&mut rng, 3);
            let y = gaussian_vec(&mut rng, 3);
            let s = mc_relu_inner(&x, &y, p, 4000, SeedSpec::new(6, t + 1)).unwrap();
            assert!(s.within(arccos_kernel(&x, &y, p).unwrap(), 3.5), "{s:?}");
        }
    }

    #[test]
    fn contraction_examples() {
        assert!(kernel_contraction_check(&[1.0, 0.0], &[0.0, 1.0], 16).unwrap());
        assert!(kernel_contraction_check(&[1.0, 0.0], &[-1.0, 0.0], 16).unwrap());
        assert!(matches!(kernel_contraction_check(&[1.0, 2.0], &[1.0, 2.0], 16), Err(Error::Precondition(_))));
        // Positively parallel pairs meet the dot product with equality.
        assert!(!kernel_contraction_check(&[1.0, 2.0], &[2.0, 4.0], 16).unwrap());
    }

    #[test]
    fn invariant_layer_moments() {
        let n = 4;
        let rep = make_invariant(n, 4, SeedSpec::new(7, 0)).unwrap();
        let p = KernelParams::alpha_scaled(512, alpha_invariant(n).unwrap()).unwrap();
        let r = mc_layer_expectation(&rep.batch, p, 4000, SeedSpec::new(7, 1)).unwrap();
        assert!(r.column_norm_sq[0].within(1.0, 3.0), "{:?}", r.column_norm_sq[0]);
        assert!(r.nu_hat_norm_sq.within(1.0 / 9.0, 3.0), "{:?}", r.nu_hat_norm_sq);
        assert_eq!(r.orthogonality_violations, 0);
        // Identical cluster columns give identical outputs.
        assert!(r.distances.iter().all(|d| d.skipped == 4000));
    }

    #[test]
    fn perturbed_layer_contracts() {
        let (n, radius) = (5, 2.0);
        let b = perturbed_invariant(n, 5, radius, 1.0 / 50.0, SeedSpec::new(8, 0)).unwrap();
        let p = KernelParams::alpha_scaled(512, alpha_stability(n, radius).unwrap()).unwrap();
        let r = mc_layer_expectation(&b, p, 4000, SeedSpec::new(8, 1)).unwrap();
        assert_eq!(r.distances.len(), 10);
        for d in &r.distances {
            assert!(d.contracts(3.0), "{d:?}");
        }
        assert!(r.column_norm_sq[0].within(1.0, 3.0), "{:?}", r.column_norm_sq[0]);
        assert!(r.nu_hat_norm_sq.within(1.0 / 16.0, 3.0), "{:?}", r.nu_hat_norm_sq);
        assert_eq!(r.orthogonality_violations, 0);
    }

    #[test]
    fn second_moments_scale_with_variance() {
        let rep = make_invariant(5, 3, SeedSpec::new(9, 0)).unwrap();
        let p = KernelParams::new(32, 0.1).unwrap();
        let q = KernelParams::new(32, 0.1 * 3.0).unwrap();
        let a = mc_layer_expectation(&rep.batch, p, 200, SeedSpec::new(9, 1)).unwrap();
        let b = mc_layer_expectation(&rep.batch, q, 200, SeedSpec::new(9, 1)).unwrap();
        for (x, y) in a.column_norm_sq.iter().zip(&b.column_norm_sq) {
            assert!((y.mean - 3.0 * x.mean).abs() <= 1e-12 * y.mean);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kernel_exceeds_dot(x in prop::collection::vec(-5.0f64..5.0, 2..16), y in prop::collection::vec(-5.0f64..5.0, 16), d in 1usize..1024) {
            let y = &y[..x.len()];
            prop_assume!(x.as_slice() != y && norm(&x) > 1e-6 && norm(y) > 1e-6);
            prop_assert!(kernel_contraction_check(&x, y, d).unwrap());
        }
    }
}
