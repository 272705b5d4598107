//! The `+I / -I` branching model.
//!
//! Starting from a scalar feature per datapoint, every row spawns a positive
//! child `R(x - mean)` and a negative child `R(mean - x)`. Rows are stored by
//! their clusters of equal entries; rows that coincide can be merged with
//! counts, which keeps deep trees tractable.

mod analysis;
mod cluster;
mod scalar;
mod state;

pub use analysis::{
    asymptotic_geometry, census, census_rows, column_geometry, escape_angle_bound, gram_exact, norm_ratio_bound,
    stability_time, two_cluster_coordinate, verify_angle_theorem, AngleTheoremReport, AsymptoticGeometry,
    ClusterCensus, ColumnGeometry, Extreme, LevelRecord, StabilityTrace, RATIO_TIE_TOL, STABLE_CLUSTERS,
    TREND_LEVELS,
};
pub use cluster::{Branch, ClusterVector};
pub use scalar::{rational_from_f64, Scalar, MERGE_TOL};
pub use state::{evolve_tree, TreeMode, TreeOptions, TreeState, AUTO_FULL_MAX_DEPTH, DEFAULT_BUDGET_BYTES, MAX_DEPTH};
