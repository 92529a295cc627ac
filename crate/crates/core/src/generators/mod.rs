//! Specification generators.
//!
//! Each generator carves the input space into boxes and hands every box to
//! [`extract_specification`](crate::spec::extract_specification). Output
//! order is canonical (cell index, cluster id, DFS leaf order) regardless of
//! internal parallelism.

mod cluster;
mod grid;
mod human;
mod tree;

pub use cluster::{gen_cluster, kmeans, ClusterParams, KMeans};
pub use grid::{gen_grid, GridLayout, GridParams, DEFAULT_CELL_CAP};
pub use human::{gen_human_throughput, ols_extrapolate, HUMAN_WINDOW};
pub use tree::{gen_tree, train_tree, DecisionTree, Node, SplitCriterion, TreeParams};
