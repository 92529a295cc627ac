//! Data-driven specification mining for learned components.
//!
//! A specification pairs a closed hyperrectangle over the input features with
//! a constraint on the output (a single class label or a real interval). This
//! crate mines such specifications from a dataset with three generators
//! (uniform grid, k-means boxes, decision-tree leaf boxes), scores a set of
//! specifications against held-out data with precision/recall/F1, and checks
//! small feedforward ReLU networks against them using interval bound
//! propagation plus sampling-based falsification.
//!
//! ```
//! use specforge::dataset::synth_spiral;
//! use specforge::generators::{gen_tree, TreeParams};
//! use specforge::evaluation::evaluate;
//!
//! let data = synth_spiral(50, 3, 0.2, 7).unwrap();
//! let (gen, eval) = data.split(0.9, 1).unwrap();
//! let specs = gen_tree(&gen, &TreeParams::default()).unwrap();
//! let report = evaluate(&specs, &eval, 0.1, &data.stats()).unwrap();
//! assert_eq!(report.fn_, 0);
//! ```

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod generators;
pub mod spec;
pub mod verifier;

pub use dataset::{Dataset, DatasetStats, Label, Labels, TaskKind};
pub use error::{Error, Result};
pub use evaluation::{evaluate, EvalReport, PointVerdict, Verdict};
pub use spec::{Hyperrectangle, OutputConstraint, SpecSet, Specification};
pub use verifier::{IntervalVector, Network, VerifyResult};
