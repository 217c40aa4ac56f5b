//! Centralized tolerance record.
//!
//! Every numerical threshold used by the kernels, the synthesizers, and the
//! simulator lives here; no module hard-codes its own magic numbers. The
//! defaults are tuned for `f64`; the whole record scales uniformly via the
//! `QUDCOMP_TOL` environment variable (a multiplicative factor on all
//! tolerances, useful when running the pipeline at reduced precision).

use crate::scalar::Real;

/// Tolerance and guard configuration.
///
/// A single instance is threaded through the pipeline. `Default` reads
/// `QUDCOMP_TOL` once per call, so tests may override per-process.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T: Real> {
    /// Max |U†U − I| accepted when validating unitary inputs.
    pub unitarity_tol: T,
    /// Round-trip bound for su_exp(su_log(U)) against U.
    pub exp_log_tol: T,
    /// Eigenphase distance to ±π at which the matrix log refuses (branch cut).
    pub branch_tol: T,
    /// Reconstruction residual bound for cosine-sine factorizations.
    pub csd_tol: T,
    /// Contraction distance bound for circuits lowered from CSD factors.
    pub lower_tol: T,
    /// Phase-invariant distance under which two unitaries are considered the
    /// same entry (table dedup, payload cache).
    pub dedup_tol: T,
    /// Entrywise bound when matching conjugated generators to Pauli matrices.
    pub clifford_tol: T,
    /// Allowed state-norm drift after each gate application.
    pub norm_tol: T,
    /// Amplitude reproduction bound for retargeted circuits (before SK).
    pub retarget_tol: T,
    /// Largest dist(Δ, I) accepted by the balanced-commutator split.
    pub balance_threshold: T,
    /// Pauli group enumeration guard (d^{2n+1} entries).
    pub enumerate_guard: usize,
    /// Dense contraction guard (total Hilbert dimension).
    pub contract_guard: usize,
    /// Approximation-table entry cap.
    pub table_cap: usize,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        let scale = std::env::var("QUDCOMP_TOL")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s > 0.0)
            .unwrap_or(1.0);
        let t = |x: f64| T::lit(x * scale);
        Tolerances {
            unitarity_tol: t(1e-10),
            exp_log_tol: t(1e-9),
            branch_tol: t(1e-8),
            csd_tol: t(1e-9),
            lower_tol: t(1e-8),
            dedup_tol: t(1e-8),
            clifford_tol: t(1e-8),
            norm_tol: t(1e-10),
            retarget_tol: t(1e-8),
            balance_threshold: T::lit(0.5),
            enumerate_guard: 1_000_000,
            contract_guard: 1 << 14,
            table_cap: 4_000_000,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_documented_values() {
        let tol: Tolerances<f64> = Tolerances::default();
        assert_eq!(tol.unitarity_tol, 1e-10);
        assert_eq!(tol.csd_tol, 1e-9);
        assert_eq!(tol.dedup_tol, 1e-8);
        assert_eq!(tol.balance_threshold, 0.5);
        assert_eq!(tol.contract_guard, 16384);
    }
}
