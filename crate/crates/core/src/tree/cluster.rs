use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// One of the two children of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `R(x - mean)`
    Positive,
    /// `R(mean - x)`
    Negative,
}

impl Branch {
    pub fn symbol(self) -> char {
        match self {
            Branch::Positive => '+',
            Branch::Negative => '-',
        }
    }

    pub fn parse_word(word: &str) -> Result<Vec<Branch>> {
        word.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '+' => Ok(Branch::Positive),
                '-' => Ok(Branch::Negative),
                other => Err(Error::InvalidParameter(format!("transform symbol {other:?}"))),
            })
            .collect()
    }
}

/// A row of the tree model stored by its distinct values.
///
/// `values` ascend strictly, `multiplicities[j]` counts the columns sitting
/// in cluster `j`, and `assignment[i]` is the cluster of column `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterVector<S> {
    values: Vec<S>,
    multiplicities: Vec<usize>,
    assignment: Vec<usize>,
}

impl<S: Scalar> ClusterVector<S> {
    /// Groups equal entries into clusters.
    pub fn from_entries(entries: &[S]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("empty row".into()));
        }
        let mut order: Vec<usize> = (0..entries.len()).collect();
        let mut bad = false;
        order.sort_by(|&a, &b| {
            entries[a].partial_cmp(&entries[b]).unwrap_or_else(|| {
                bad = true;
                std::cmp::Ordering::Equal
            })
        });
        if bad {
            return Err(Error::InvalidParameter("row entries must be comparable".into()));
        }
        let max = entries[order[order.len() - 1]].clone();
        let mut values: Vec<S> = Vec::new();
        let mut multiplicities = Vec::new();
        let mut assignment = vec![0; entries.len()];
        for &i in &order {
            match values.last() {
                Some(last) if S::same_cluster(last, &entries[i], &max) => {
                    *multiplicities.last_mut().unwrap() += 1;
                }
                _ => {
                    values.push(entries[i].clone());
                    multiplicities.push(1);
                }
            }
            assignment[i] = values.len() - 1;
        }
        Ok(Self { values, multiplicities, assignment })
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Number of columns.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Number of distinct entries.
    pub fn cluster_count(&self) -> usize {
        self.values.len()
    }

    pub fn entry(&self, column: usize) -> &S {
        &self.values[self.assignment[column]]
    }

    pub fn entries(&self) -> Vec<S> {
        self.assignment.iter().map(|&a| self.values[a].clone()).collect()
    }

    pub fn max_value(&self) -> &S {
        &self.values[self.values.len() - 1]
    }

    pub fn mean(&self) -> S {
        let total = self
            .values
            .iter()
            .zip(&self.multiplicities)
            .fold(S::zero(), |acc, (v, &m)| acc + v.clone() * S::from_count(m as u64));
        total.div_count(self.len())
    }

    /// Cluster sizes read along the columns, first column first.
    pub fn composition(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut prev = usize::MAX;
        for &a in &self.assignment {
            if a == prev {
                *runs.last_mut().unwrap() += 1;
            } else {
                runs.push(1);
                prev = a;
            }
        }
        runs
    }

    pub fn positive(&self) -> Self {
        self.transform(Branch::Positive)
    }

    pub fn negative(&self) -> Self {
        self.transform(Branch::Negative)
    }

    pub fn transform(&self, branch: Branch) -> Self {
        let c = self.values.len();
        if c == 1 {
            return Self { values: vec![S::zero()], multiplicities: vec![self.len()], assignment: vec![0; self.len()] };
        }
        // Rounding must not push the mean outside the range of the entries.
        let mut mean = self.mean();
        if mean < self.values[0] {
            mean = self.values[0].clone();
        } else if mean > self.values[c - 1] {
            mean = self.values[c - 1].clone();
        }
        let raw: Vec<S> = self
            .values
            .iter()
            .map(|v| {
                let d = match branch {
                    Branch::Positive => v.clone() - mean.clone(),
                    Branch::Negative => mean.clone() - v.clone(),
                };
                if d > S::zero() {
                    d
                } else {
                    S::zero()
                }
            })
            .collect();
        // Both maps are monotone, so sorted order is the old order or its reverse.
        let order: Vec<usize> = match branch {
            Branch::Positive => (0..c).collect(),
            Branch::Negative => (0..c).rev().collect(),
        };
        let max = raw[order[c - 1]].clone();
        let mut values: Vec<S> = Vec::with_capacity(c);
        let mut multiplicities = Vec::with_capacity(c);
        let mut remap = vec![0; c];
        for j in order {
            match values.last() {
                Some(last) if S::same_cluster(last, &raw[j], &max) => {
                    *multiplicities.last_mut().unwrap() += self.multiplicities[j];
                }
                _ => {
                    values.push(raw[j].clone());
                    multiplicities.push(self.multiplicities[j]);
                }
            }
            remap[j] = values.len() - 1;
        }
        let assignment = self.assignment.iter().map(|&a| remap[a]).collect();
        Self { values, multiplicities, assignment }
    }

    pub(crate) fn column_keys(&self) -> Vec<S::Key> {
        self.assignment.iter().map(|&a| self.values[a].key()).collect()
    }
}
