//! Numerical workbench for consistent-histories quantum theory on
//! finite-dimensional Hilbert spaces.
//!
//! History propositions are represented as projectors on temporally-labelled
//! tensor-product spaces. The crate provides:
//!
//! - [`matrix`] — dense complex matrices, Kronecker products, traces.
//! - [`operators`] — projectors, density matrices, Hamiltonians, unitary
//!   evolution, and the cyclic shift operator that turns operator-product
//!   traces into tensor-product traces.
//! - [`histories`] — the orthoalgebra of history projectors: homogeneous
//!   history construction, `⊕`/`¬`/`≤`/`⊥`, partitions of unity, and an
//!   axiom-verification harness.
//! - [`decoherence`] — decoherence functionals in class-operator and
//!   X-operator form, the ILS condition checks, consistency certification,
//!   and probability extraction.
//! - [`pathspace`] — a finite, discrete-time realization of the
//!   path-integral decoherence functional with cross-validation against the
//!   operator formalism.
//!
//! All values are immutable after construction and all operations are pure;
//! everything is `Send + Sync` without further coordination.

pub mod decoherence;
pub mod histories;
pub mod matrix;
pub mod operators;
pub mod pathspace;
pub mod report;
pub mod sampling;

pub use matrix::{CMatrix, Complex64, LinalgError};
pub use operators::{cyclic_shift, evolution_operator, DensityMatrix, HermitianMatrix, Projector};
pub use report::{AxiomReport, AxiomViolation};
