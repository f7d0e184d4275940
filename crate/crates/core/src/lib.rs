//! Unit-wise capacity measurement for two-layer ReLU networks.
//!
//! The crate trains networks of the form `f(x) = V [U x]_+`, measures the
//! per-unit quantities that drive the capacity bound (unit capacity
//! `beta_i = ||u_i - u_i^0||_2` and unit impact `alpha_i = ||v_i||_2`),
//! evaluates the exact-constant generalization bounds next to six comparator
//! norm measures, and certifies the Rademacher lower bound through an explicit
//! Hadamard-based construction.
//!
//! Module map:
//!
//! - [`linalg`]: dense row-major matrix, norms, power iteration, Hadamard matrices.
//! - [`nn`]: network, margin operator, ramp loss, checkpoint format.
//! - [`train`]: SGD with momentum and the width sweep.
//! - [`data`]: IDX/CSV loaders, synthetic data, label corruption.
//! - [`measures`]: per-unit and per-layer measurement panels.
//! - [`bounds`]: bound evaluation, comparator measures, covering numbers.
//! - [`lowerbound`]: adversarial instance, exact/sampled Rademacher estimates,
//!   brute-force oracles.
//! - [`exec`]: sequential / rayon execution strategy used by the batch loops.
//! - [`fsio`]: atomic file writes.
//!
//! Data-parallel loops go through [`exec::Strategy`]. With the `parallel`
//! feature (default) they run on rayon; without it every strategy falls back
//! to the sequential path. Reductions always combine fixed-size chunks in
//! index order, so results are bit-identical between the two paths.

pub mod bounds;
pub mod data;
pub mod exec;
pub mod fsio;
pub mod linalg;
pub mod lowerbound;
pub mod measures;
pub mod nn;
pub mod rng;
pub mod train;

pub use linalg::Matrix;
pub use nn::{LabeledDataset, TwoLayerNet};
