//! Dense linear algebra, MLP building blocks, reverse-mode differentiation
//! and the Adam optimizer used by every trainable and guided component.
//!
//! Two gradient paths coexist:
//!
//! * [`mlp`] carries hand-derived batched backpropagation (GEMM-based) for
//!   the training loops, where throughput matters;
//! * [`tape`] records arbitrary compositions of a small primitive set
//!   (affine maps, ReLU, elementwise arithmetic, 3×3 matrix products,
//!   norms, cross products, clamps) and replays them in reverse. The
//!   guidance losses run on the tape because they traverse
//!   orthogonalisation, forward kinematics and capsule distances.
//!
//! The two paths cross-check each other in tests.

pub mod adam;
pub mod linalg;
pub mod mlp;
pub mod tape;

pub use adam::{AdamConfig, AdamState};
pub use linalg::Matrix;
pub use mlp::{mlp_forward, Activation, DenseLayer, Mlp};
pub use tape::{Gradients, Tape, Var};
