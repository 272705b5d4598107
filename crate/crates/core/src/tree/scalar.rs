use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Arithmetic needed by the tree model, implemented for `f64` and exact
/// rationals.
pub trait Scalar:
    Clone + PartialOrd + Debug + Send + Sync + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    type Key: Ord + Clone + Debug + Send + Sync;

    fn from_count(n: u64) -> Self;
    fn div_count(&self, n: usize) -> Self;
    fn to_f64(&self) -> f64;
    /// Whether two nonnegative values belong to the same cluster, given the
    /// largest value present.
    fn same_cluster(a: &Self, b: &Self, max: &Self) -> bool;
    fn key(&self) -> Self::Key;
}

/// Relative merge tolerance for floating point clusters.
pub const MERGE_TOL: f64 = 1e-12;

impl Scalar for f64 {
    type Key = u64;

    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn div_count(&self, n: usize) -> Self {
        self / n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn same_cluster(a: &Self, b: &Self, max: &Self) -> bool {
        (a - b).abs() <= MERGE_TOL * max
    }

    // Values are nonnegative, so the bit pattern orders like the number.
    fn key(&self) -> u64 {
        self.to_bits()
    }
}

impl Scalar for BigRational {
    type Key = BigRational;

    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn div_count(&self, n: usize) -> Self {
        self / BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn same_cluster(a: &Self, b: &Self, _max: &Self) -> bool {
        a == b
    }

    fn key(&self) -> BigRational {
        self.clone()
    }
}

/// Exact rational with the same value as a finite float.
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}
