//! Unitary synthesis: exact cosine-sine decomposition into controlled
//! single-qudit gates, and Solovay-Kitaev approximation of those gates over
//! a finite basis.

pub mod csd;
pub mod sk;

pub use csd::{csd2, csd_qudit, lower_to_circuit, Csd2, CsdFactor};
pub use sk::{
    approx_decompose, build_table, default_basis, solovay_kitaev, solovay_kitaev_traced,
    ApproximationTable, GateWord,
};
