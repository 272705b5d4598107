use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::Serialize;

use super::cluster::{Branch, ClusterVector};
use super::scalar::Scalar;
use super::state::{TreeMode, TreeOptions, TreeState};
use crate::batch::clamped_acos;
use crate::error::{Error, Result};

/// Gram matrix of the columns, summed over rows with their counts.
pub fn gram_exact<S: Scalar>(ts: &TreeState<S>) -> Vec<Vec<S>> {
    let n = ts.n();
    let mut gram = vec![vec![S::zero(); n]; n];
    for (row, count) in ts.rows() {
        let w = S::from_count(*count);
        let e = row.entries();
        let live: Vec<usize> = (0..n).filter(|&i| e[i] > S::zero()).collect();
        for &i in &live {
            let wi = w.clone() * e[i].clone();
            for &j in &live {
                if j >= i {
                    gram[i][j] = gram[i][j].clone() + wi.clone() * e[j].clone();
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[i][j] = gram[j][i].clone();
        }
    }
    gram
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnGeometry {
    pub gram: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    /// `None` where either column is zero.
    pub angles: Vec<Vec<Option<f64>>>,
}

impl ColumnGeometry {
    pub fn from_gram(gram: Vec<Vec<f64>>) -> Self {
        let n = gram.len();
        let norms: Vec<f64> = (0..n).map(|i| gram[i][i].max(0.0).sqrt()).collect();
        let angles = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if norms[i] > 0.0 && norms[j] > 0.0 {
                            Some(clamped_acos(gram[i][j] / (norms[i] * norms[j])))
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        Self { gram, norms, angles }
    }

    /// Largest angle between two interior columns, `None` if any is undefined.
    pub fn max_interior_angle(&self) -> Option<f64> {
        let n = self.norms.len();
        let mut best: Option<f64> = None;
        for i in 1..n.saturating_sub(1) {
            for j in i + 1..n - 1 {
                let a = self.angles[i][j]?;
                best = Some(best.map_or(a, |b: f64| b.max(a)));
            }
        }
        best
    }
}

pub fn column_geometry<S: Scalar>(ts: &TreeState<S>) -> ColumnGeometry {
    let gram = gram_exact(ts).into_iter().map(|r| r.iter().map(S::to_f64).collect()).collect();
    ColumnGeometry::from_gram(gram)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilityTrace {
    /// First position along the word with at most 3 clusters.
    pub t0: Option<usize>,
    pub horizon: usize,
    /// Cluster count before the first symbol and after each one.
    pub cluster_counts: Vec<usize>,
}

impl StabilityTrace {
    pub fn is_monotone(&self) -> bool {
        self.cluster_counts.windows(2).all(|w| w[1] <= w[0])
    }
}

pub const STABLE_CLUSTERS: usize = 3;

/// Follows one path of the tree and reports when the row becomes stable.
pub fn stability_time<S: Scalar>(x0: &[S], word: &[Branch]) -> Result<StabilityTrace> {
    let ts = TreeState::new(x0, TreeMode::Full, u128::MAX)?;
    let mut row: ClusterVector<S> = ts.rows()[0].0.clone();
    let mut counts = Vec::with_capacity(word.len() + 1);
    counts.push(row.cluster_count());
    for &b in word {
        row = row.transform(b);
        counts.push(row.cluster_count());
    }
    let t0 = counts.iter().position(|&c| c <= STABLE_CLUSTERS);
    Ok(StabilityTrace { t0, horizon: word.len(), cluster_counts: counts })
}

/// Positive-cluster coordinate of a two-cluster row after `depth` steps, `k`
/// of which left a zero cluster of size `n0`.
pub fn two_cluster_coordinate(c: f64, n0: usize, n: usize, k: usize, depth: usize) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c = {c} must be positive")));
    }
    if n0 == 0 || n0 >= n {
        return Err(Error::InvalidParameter(format!("n0 = {n0} outside 1..{n}")));
    }
    if k > depth {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds depth {depth}")));
    }
    let p = n0 as f64 / n as f64;
    let q = (n - n0) as f64 / n as f64;
    Ok(p.powi(k as i32) * q.powi((depth - k) as i32) * c)
}

/// Squared largest coordinates grouped by row composition.
///
/// Compositions are read along the sorted columns: `a` is `(1, n-1)`, `b` is
/// `(n-1, 1)`, `c2` is `(2, n-2)`, `d2` is `(n-2, 2)`, `c3` is `(1, 1, n-2)`
/// and `d3` is `(n-2, 1, 1)`. Each row adds `count * max^2` to its class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClusterCensus {
    pub a: f64,
    pub b: f64,
    pub c2: f64,
    pub d2: f64,
    pub c3: f64,
    pub d3: f64,
    pub residual: f64,
}

impl ClusterCensus {
    pub fn total(&self) -> f64 {
        self.a + self.b + self.c2 + self.d2 + self.c3 + self.d3 + self.residual
    }

    pub fn tracked(&self) -> f64 {
        self.a + self.b + self.c2 + self.d2 + self.c3 + self.d3
    }
}

pub fn census<S: Scalar>(ts: &TreeState<S>) -> ClusterCensus {
    census_rows(ts.n(), ts.rows())
}

pub fn census_rows<S: Scalar>(n: usize, rows: &[(ClusterVector<S>, u64)]) -> ClusterCensus {
    let mut out = ClusterCensus::default();
    for (row, count) in rows {
        let m = row.max_value().to_f64();
        let q = *count as f64 * m * m;
        let comp = row.composition();
        let slot = match comp.as_slice() {
            [1, r] if *r == n - 1 => &mut out.a,
            [l, 1] if *l == n - 1 => &mut out.b,
            [2, r] if *r == n - 2 => &mut out.c2,
            [l, 2] if *l == n - 2 => &mut out.d2,
            [1, 1, r] if *r == n - 2 => &mut out.c3,
            [l, 1, 1] if *l == n - 2 => &mut out.d3,
            _ => &mut out.residual,
        };
        *slot += q;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Extreme {
    First,
    Last,
}

/// Next-level norms and inner products implied by a census, for column 1,
/// column n and a generic interior column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticGeometry {
    pub norm_interior_sq: f64,
    pub norm_first_sq: f64,
    pub norm_last_sq: f64,
    pub inner_interior_first: f64,
    pub inner_interior_last: f64,
    /// `(A + C) / (B + D)`, infinite when the denominator vanishes.
    pub ratio: f64,
    pub selected: Extreme,
}

impl AsymptoticGeometry {
    pub fn angle_interior_first(&self) -> f64 {
        clamped_acos(self.inner_interior_first / (self.norm_interior_sq * self.norm_first_sq).sqrt())
    }

    pub fn angle_interior_last(&self) -> f64 {
        clamped_acos(self.inner_interior_last / (self.norm_interior_sq * self.norm_last_sq).sqrt())
    }
}

/// Ratios within this of 1 select the first column.
pub const RATIO_TIE_TOL: f64 = 1e-9;

/// Evaluates the two-cluster contributions of the last census in the series.
///
/// The children of a `(1, n-1)` row with coordinate `c` add
/// `((n-1)/n)^2 c^2` to column 1 and `c^2/n^2` to every other column; `(2, n-2)`
/// rows add `((n-2)/n)^2 c^2` and `4 c^2/n^2`. The mirrored compositions act
/// on column n.
pub fn asymptotic_geometry(census_series: &[ClusterCensus], n: usize) -> Result<AsymptoticGeometry> {
    let last = census_series.last().ok_or(Error::InsufficientDepth)?;
    let (a, b, c, d) = (last.a, last.b, last.c2, last.d2);
    if !(a + b + c + d > 0.0) {
        return Err(Error::InsufficientDepth);
    }
    let nf = n as f64;
    let n2 = nf * nf;
    let p1 = ((nf - 1.0) / nf).powi(2);
    let p2 = ((nf - 2.0) / nf).powi(2);
    let ratio = if b + d > 0.0 { (a + c) / (b + d) } else { f64::INFINITY };
    Ok(AsymptoticGeometry {
        norm_interior_sq: (a + b + 4.0 * c + 4.0 * d) / n2,
        norm_first_sq: p1 * a + b / n2 + p2 * c + 4.0 * d / n2,
        norm_last_sq: a / n2 + p1 * b + 4.0 * c / n2 + p2 * d,
        inner_interior_first: (b + 4.0 * d) / n2,
        inner_interior_last: (a + 4.0 * c) / n2,
        ratio,
        selected: if ratio >= 1.0 - RATIO_TIE_TOL { Extreme::First } else { Extreme::Last },
    })
}

pub fn norm_ratio_bound(n: usize) -> f64 {
    3.0 / (n as f64 - 2.0)
}

pub fn escape_angle_bound(n: usize) -> f64 {
    FRAC_PI_2 - SQRT_2 * PI / (n as f64 - 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub rows: usize,
    pub max_clusters: usize,
    /// `<x_1, x_n>` as a float; exactly zero when item 1 holds.
    pub extreme_inner: f64,
    pub max_interior_angle: Option<f64>,
    pub census: ClusterCensus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleTheoremReport {
    pub n: usize,
    pub depth: usize,
    pub mode: TreeMode,
    pub levels: Vec<LevelRecord>,
    pub item1_exact: bool,
    pub item2_final: Option<f64>,
    pub item2_decreasing: bool,
    /// No pair of interior columns.
    pub item2_vacuous: bool,
    pub census_ratio: f64,
    pub selected: Extreme,
    /// Largest `|x_i| / |x_e|` over interior columns.
    pub item3_ratio: f64,
    pub item3_bound: f64,
    pub item3_pass: bool,
    /// Below five columns the norm and angle bounds say nothing.
    pub item3_vacuous: bool,
    /// Smallest angle between an interior column and the selected extreme.
    pub item4_angle: f64,
    pub item4_bound: f64,
    pub item4_vacuous: bool,
    pub item4_pass: bool,
    pub predicted: AsymptoticGeometry,
    pub geometry: ColumnGeometry,
    pub pass: bool,
}

/// Levels over which the interior angle trend is checked.
pub const TREND_LEVELS: usize = 4;

/// Runs the tree to `depth` and checks the four angle statements.
///
/// The extreme column for the norm and angle bounds is chosen from the
/// census one level above `depth`, which predicts the geometry at `depth`.
pub fn verify_angle_theorem<S: Scalar>(x0: &[S], depth: usize, opts: &TreeOptions) -> Result<AngleTheoremReport> {
    let n = x0.len();
    if n < 3 {
        return Err(Error::Precondition(format!("n = {n}; need an interior column")));
    }
    if depth < TREND_LEVELS - 1 {
        return Err(Error::InsufficientDepth);
    }
    let mode = opts.resolve(depth);
    let mut ts = TreeState::new(x0, mode, opts.budget_bytes)?;
    let mut levels = Vec::with_capacity(depth + 1);
    let mut item1_exact = true;
    let mut geometry;
    loop {
        let gram = gram_exact(&ts);
        // Level 0 is the raw input, not a ReLU output.
        if ts.level() > 0 {
            item1_exact &= gram[0][n - 1].is_zero();
        }
        geometry = ColumnGeometry::from_gram(gram.into_iter().map(|r| r.iter().map(S::to_f64).collect()).collect());
        levels.push(LevelRecord {
            level: ts.level(),
            rows: ts.rows().len(),
            max_clusters: ts.max_cluster_count(),
            extreme_inner: geometry.gram[0][n - 1],
            max_interior_angle: geometry.max_interior_angle(),
            census: census(&ts),
        });
        if ts.level() == depth {
            break;
        }
        ts.step()?;
    }

    let tail: Vec<Option<f64>> = levels[depth + 1 - TREND_LEVELS..].iter().map(|l| l.max_interior_angle).collect();
    let item2_vacuous = n < 4;
    let item2_decreasing =
        item2_vacuous || tail.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b < a));
    let item2_final = levels[depth].max_interior_angle;

    let series: Vec<ClusterCensus> = levels[..depth].iter().map(|l| l.census).collect();
    let predicted = asymptotic_geometry(&series, n)?;
    let e = match predicted.selected {
        Extreme::First => 0,
        Extreme::Last => n - 1,
    };
    let norm_e = geometry.norms[e];
    let interior = 1..n - 1;
    let item3_ratio = interior.clone().map(|i| geometry.norms[i] / norm_e).fold(0.0, f64::max);
    let item4_angle = interior
        .map(|i| geometry.angles[i][e].unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    let item3_bound = norm_ratio_bound(n);
    let item4_bound = escape_angle_bound(n);
    let bounds_vacuous = n < 5;
    let item3_pass = bounds_vacuous || item3_ratio <= item3_bound;
    let item4_pass = bounds_vacuous || item4_angle >= item4_bound;
    Ok(AngleTheoremReport {
        n,
        depth,
        mode,
        item1_exact,
        item2_final,
        item2_decreasing,
        item2_vacuous,
        census_ratio: predicted.ratio,
        selected: predicted.selected,
        item3_ratio,
        item3_bound,
        item3_pass,
        item3_vacuous: bounds_vacuous,
        item4_angle,
        item4_bound,
        item4_vacuous: bounds_vacuous,
        item4_pass,
        pass: item1_exact && item2_decreasing && item3_pass && item4_pass,
        levels,
        predicted,
        geometry,
    })
}
