use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cluster::ClusterVector;
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeMode {
    /// Every row is stored; row `2r` is the positive child of row `r` of the
    /// previous level and `2r + 1` its negative child.
    Full,
    /// Identical rows are merged and carry occurrence counts.
    Pruned,
}

/// Deepest level stored in full mode when the caller does not choose.
pub const AUTO_FULL_MAX_DEPTH: usize = 20;
pub const DEFAULT_BUDGET_BYTES: u128 = 2 << 30;
/// Counts are `u64`, so `2^depth` must fit.
pub const MAX_DEPTH: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeOptions {
    pub mode: Option<TreeMode>,
    pub budget_bytes: u128,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self { mode: None, budget_bytes: DEFAULT_BUDGET_BYTES }
    }
}

impl TreeOptions {
    pub fn full() -> Self {
        Self { mode: Some(TreeMode::Full), ..Self::default() }
    }

    pub fn pruned() -> Self {
        Self { mode: Some(TreeMode::Pruned), ..Self::default() }
    }

    pub fn resolve(&self, depth: usize) -> TreeMode {
        self.mode.unwrap_or(if depth > AUTO_FULL_MAX_DEPTH { TreeMode::Pruned } else { TreeMode::Full })
    }
}

fn full_mode_bytes<S>(level: usize, n: usize) -> u128 {
    let per_entry = (std::mem::size_of::<S>() + std::mem::size_of::<usize>()) as u128;
    (1u128 << level) * n as u128 * per_entry
}

/// All rows of the tree at one level.
///
/// Columns are the entries of `x0` sorted ascending; `permutation[j]` is the
/// index in the caller's `x0` of sorted column `j`.
#[derive(Debug, Clone)]
pub struct TreeState<S> {
    level: usize,
    n: usize,
    mode: TreeMode,
    budget_bytes: u128,
    permutation: Vec<usize>,
    rows: Vec<(ClusterVector<S>, u64)>,
}

impl<S: Scalar> TreeState<S> {
    /// Level 0: the single row `x0`, which needs pairwise distinct entries.
    pub fn new(x0: &[S], mode: TreeMode, budget_bytes: u128) -> Result<Self> {
        let n = x0.len();
        if n == 0 {
            return Err(Error::InvalidParameter("x0 is empty".into()));
        }
        let mut permutation: Vec<usize> = (0..n).collect();
        let mut incomparable = false;
        permutation.sort_by(|&a, &b| {
            x0[a].partial_cmp(&x0[b]).unwrap_or_else(|| {
                incomparable = true;
                std::cmp::Ordering::Equal
            })
        });
        if incomparable {
            return Err(Error::InvalidParameter("x0 contains NaN".into()));
        }
        let sorted: Vec<S> = permutation.iter().map(|&i| x0[i].clone()).collect();
        if let Some(w) = sorted.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "x0 entries {} and {} coincide",
                permutation[w],
                permutation[w + 1]
            )));
        }
        // Exact grouping: distinct inputs never merge at level 0.
        let values = sorted.clone();
        let row = ClusterVector::from_entries(&values)?;
        if row.cluster_count() != n {
            return Err(Error::InvalidParameter("x0 entries are too close to separate".into()));
        }
        Ok(Self { level: 0, n, mode, budget_bytes, permutation, rows: vec![(row, 1)] })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> TreeMode {
        self.mode
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Rows with their occurrence counts; counts are 1 in full mode.
    pub fn rows(&self) -> &[(ClusterVector<S>, u64)] {
        &self.rows
    }

    pub fn total_count(&self) -> u128 {
        self.rows.iter().map(|r| r.1 as u128).sum()
    }

    pub fn max_cluster_count(&self) -> usize {
        self.rows.iter().map(|r| r.0.cluster_count()).max().unwrap_or(0)
    }

    /// Advances one level.
    pub fn step(&mut self) -> Result<()> {
        let next = self.level + 1;
        if next > MAX_DEPTH {
            return Err(Error::InvalidParameter(format!("depth above {MAX_DEPTH}")));
        }
        match self.mode {
            TreeMode::Full => {
                let needed = full_mode_bytes::<S>(next, self.n);
                if needed > self.budget_bytes {
                    return Err(Error::BudgetExceeded { needed, budget: self.budget_bytes });
                }
                self.rows = self
                    .rows
                    .par_iter()
                    .flat_map_iter(|(r, c)| [(r.positive(), *c), (r.negative(), *c)])
                    .collect();
            }
            TreeMode::Pruned => {
                let mut children: Vec<(Vec<S::Key>, ClusterVector<S>, u64)> = self
                    .rows
                    .par_iter()
                    .flat_map_iter(|(r, c)| [(r.positive(), *c), (r.negative(), *c)])
                    .map(|(r, c)| (r.column_keys(), r, c))
                    .collect();
                children.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));
                let mut merged: Vec<(Vec<S::Key>, ClusterVector<S>, u64)> = Vec::with_capacity(children.len());
                for child in children {
                    match merged.last_mut() {
                        Some(last) if last.0 == child.0 => last.2 += child.2,
                        _ => merged.push(child),
                    }
                }
                self.rows = merged.into_iter().map(|(_, r, c)| (r, c)).collect();
            }
        }
        self.level = next;
        Ok(())
    }
}

/// Runs the tree model from `x0` down to level `depth`.
pub fn evolve_tree<S: Scalar>(x0: &[S], depth: usize, opts: &TreeOptions) -> Result<TreeState<S>> {
    let mode = opts.resolve(depth);
    if depth > MAX_DEPTH {
        return Err(Error::InvalidParameter(format!("depth above {MAX_DEPTH}")));
    }
    if mode == TreeMode::Full {
        let needed = full_mode_bytes::<S>(depth, x0.len());
        if needed > opts.budget_bytes {
            return Err(Error::BudgetExceeded { needed, budget: opts.budget_bytes });
        }
    }
    let mut ts = TreeState::new(x0, mode, opts.budget_bytes)?;
    for _ in 0..depth {
        ts.step()?;
    }
    Ok(ts)
}
