//! Compilation toolkit for qudit quantum circuits: arbitrary unitaries over
//! registers of d-level systems go in, circuits over a small universal gate
//! set come out.
//!
//! The pieces fit together as a pipeline. [`linalg`] supplies the dense
//! complex kernels (QR, SVD, eigendecompositions, matrix functions) that
//! everything else leans on. [`gates`] defines the generalized Pauli, Fourier
//! and phase gates with their d-dimensional conventions pinned down, and
//! [`pauli`] handles the Weyl-Heisenberg group and Clifford membership
//! checks. [`ir`] is the circuit representation: builder, validation, DAG.
//! [`synth`] holds the two synthesis passes, an exact cosine-sine
//! factorization and a gate-word approximation over a finite basis, and
//! [`pipeline`] chains them with payload caching and dimension retargeting.
//! [`sim`] contracts or simulates circuits, with seeded sampling.
//!
//! Everything numeric is generic over the scalar through [`Real`]
//! (instantiable at `f32` or `f64`); the aliases below fix the common
//! double-precision choices.

pub mod error;
pub mod gates;
pub mod ir;
pub mod linalg;
pub mod matrix;
pub mod pauli;
pub mod pipeline;
pub mod scalar;
pub mod sim;
pub mod synth;
pub mod tol;

pub use error::{Error, Result};
pub use matrix::Mat;
pub use scalar::{Real, C};
pub use tol::Tolerances;

/// Double-precision complex matrix.
pub type Mat64 = Mat<f64>;
/// Double-precision complex scalar.
pub type C64 = C<f64>;
/// Double-precision circuit.
pub type Circuit64 = ir::Circuit<f64>;
/// Double-precision gate-word approximation table.
pub type Table64 = synth::ApproximationTable<f64>;
/// Double-precision tolerance bundle.
pub type Tolerances64 = Tolerances<f64>;
