//! Quantum extreme reservoir computation (QERC).
//!
//! Images are compressed with PCA, written into single-qubit rotation angles,
//! evolved through a fixed reservoir unitary, read out as computational-basis
//! distributions and classified with a softmax layer trained by AdaGrad.

// Negated float comparisons below deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod datasets;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod gates;
pub mod linalg;
pub mod metrics;
pub mod mlayer;
pub mod reservoir;
pub mod rng;
pub mod state;
pub mod unitary;

pub use error::{ErrorClass, QercError, Result};
pub use state::{ProbVector, StateVector};
pub use unitary::{HamiltonianMatrix, UnitaryMatrix, UnitaryMeta};
