//! The su(d) algebra: generalized Gell-Mann basis, structure constants, and
//! the log/exp maps between SU(d)-with-phase and traceless Hermitian
//! generators.
//!
//! Basis ordering: all symmetric pair matrices E_jk + E_kj for j < k in
//! lexicographic order, then all antisymmetric -i(E_jk - E_kj), then the
//! d - 1 diagonal matrices. For d = 2 this is exactly (sigma_x, sigma_y,
//! sigma_z). Every element satisfies tr(L_a L_b) = 2 delta_ab.

use crate::error::{Error, Result};
use crate::linalg::{eig_unitary, eigh};
use crate::matrix::Mat;
use crate::scalar::{cis, C, Real};
use crate::tol::Tolerances;

/// Generalized Gell-Mann matrices for su(d); length d*d - 1.
pub fn gellmann_basis<T: Real>(d: usize) -> Vec<Mat<T>> {
    assert!(d >= 2, "su(d) needs d >= 2");
    let one = C::new(T::one(), T::zero());
    let mi = C::new(T::zero(), -T::one());
    let mut basis = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = Mat::zeros(d, d);
            m[(j, k)] = one;
            m[(k, j)] = one;
            basis.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = Mat::zeros(d, d);
            m[(j, k)] = mi;
            m[(k, j)] = -mi;
            basis.push(m);
        }
    }
    for l in 1..d {
        let norm = T::lit((2.0 / (l * (l + 1)) as f64).sqrt());
        let mut m = Mat::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = C::new(norm, T::zero());
        }
        m[(l, l)] = C::new(-norm * T::from_usize(l).unwrap(), T::zero());
        basis.push(m);
    }
    basis
}

/// Antisymmetric (f) and symmetric (d) structure constants of su(d), stored
/// dense over all index triples.
///
/// f_jkl = tr([L_j, L_k] L_l) / 4i and d_jkl = tr({L_j, L_k} L_l) / 4, so
/// L_j L_k = (2/d) delta_jk I + (d_jkl + i f_jkl) L_l.
pub struct StructureConstants<T: Real> {
    dim: usize,
    n: usize,
    f: Vec<T>,
    d: Vec<T>,
}

impl<T: Real> StructureConstants<T> {
    pub fn new(dim: usize) -> Self {
        let basis = gellmann_basis::<T>(dim);
        let n = basis.len();
        let mut f = vec![T::zero(); n * n * n];
        let mut dsym = vec![T::zero(); n * n * n];
        let quarter = T::lit(0.25);
        for j in 0..n {
            for k in 0..n {
                let jk = &basis[j] * &basis[k];
                let kj = &basis[k] * &basis[j];
                for l in 0..n {
                    let comm_tr = (&(&jk - &kj) * &basis[l]).trace();
                    let anti_tr = (&(&jk + &kj) * &basis[l]).trace();
                    // tr([.,.] L) is purely imaginary, tr({.,.} L) purely real.
                    f[(j * n + k) * n + l] = comm_tr.im * quarter;
                    dsym[(j * n + k) * n + l] = anti_tr.re * quarter;
                }
            }
        }
        StructureConstants { dim, n, f, d: dsym }
    }

    /// Matrix dimension d of su(d).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators, d*d - 1.
    pub fn generators(&self) -> usize {
        self.n
    }

    pub fn f(&self, j: usize, k: usize, l: usize) -> T {
        self.f[(j * self.n + k) * self.n + l]
    }

    pub fn d(&self, j: usize, k: usize, l: usize) -> T {
        self.d[(j * self.n + k) * self.n + l]
    }

    /// Antisymmetric product (a x b)_l = sum_jk f_jkl a_j b_k; for d = 2
    /// this is the ordinary cross product.
    pub fn cross(&self, a: &[T], b: &[T]) -> Vec<T> {
        self.bilinear(&self.f, a, b)
    }

    /// Symmetric product (a . b)_l = sum_jk d_jkl a_j b_k.
    pub fn dot_sym(&self, a: &[T], b: &[T]) -> Vec<T> {
        self.bilinear(&self.d, a, b)
    }

    fn bilinear(&self, table: &[T], a: &[T], b: &[T]) -> Vec<T> {
        assert_eq!(a.len(), self.n);
        assert_eq!(b.len(), self.n);
        let mut out = vec![T::zero(); self.n];
        for j in 0..self.n {
            if a[j] == T::zero() {
                continue;
            }
            for k in 0..self.n {
                let ab = a[j] * b[k];
                if ab == T::zero() {
                    continue;
                }
                let row = (j * self.n + k) * self.n;
                for (l, o) in out.iter_mut().enumerate() {
                    *o += table[row + l] * ab;
                }
            }
        }
        out
    }
}

/// Expansion coefficients a_j = tr(M L_j) / 2 (real parts; exact for
/// Hermitian traceless M).
pub fn coeffs<T: Real>(basis: &[Mat<T>], m: &Mat<T>) -> Vec<T> {
    basis
        .iter()
        .map(|l| (m * l).trace().re * T::lit(0.5))
        .collect()
}

/// sum_j a_j L_j.
pub fn from_coeffs<T: Real>(basis: &[Mat<T>], a: &[T]) -> Mat<T> {
    assert_eq!(basis.len(), a.len());
    let d = basis[0].dim();
    let mut m = Mat::zeros(d, d);
    for (l, &aj) in basis.iter().zip(a) {
        m = &m + &l.scale(C::new(aj, T::zero()));
    }
    m
}

/// Split a unitary as U = e^{i gamma} e^{iA} with A traceless Hermitian.
///
/// Eigenphases near +-pi make the splitting discontinuous (the branch cut of
/// the logarithm), so those inputs are rejected rather than silently mapped
/// to a far-away generator.
pub fn su_log<T: Real>(u: &Mat<T>, tol: &Tolerances<T>) -> Result<(T, Mat<T>)> {
    u.require_unitary(tol.unitarity_tol)?;
    let (phases, q) = eig_unitary(u, tol.exp_log_tol)?;
    let pi = T::PI();
    for &p in &phases {
        if p.abs() > pi - tol.branch_tol {
            return Err(Error::BranchCut { phase: p.to_f64().unwrap_or(f64::NAN) });
        }
    }
    let d = T::from_usize(phases.len()).unwrap();
    let gamma = phases.iter().fold(T::zero(), |a, &b| a + b) / d;
    let centered: Vec<C<T>> = phases.iter().map(|&p| C::new(p - gamma, T::zero())).collect();
    let a = &(&q * &Mat::from_diag(&centered)) * &q.dagger();
    // Average away the O(eps) anti-Hermitian residue from the eigenbasis.
    let a = Mat::from_fn(a.dim(), a.dim(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * T::lit(0.5));
    Ok((gamma, a))
}

/// e^{i gamma} e^{iA} for Hermitian A.
pub fn su_exp<T: Real>(gamma: T, a: &Mat<T>) -> Result<Mat<T>> {
    let (vals, q) = eigh(a)?;
    let exps: Vec<C<T>> = vals.iter().map(|&v| cis(v)).collect();
    let u = &(&q * &Mat::from_diag(&exps)) * &q.dagger();
    Ok(u.scale(cis(gamma)))
}

/// Max entrywise deviation from Hermitian symmetry.
pub fn hermitian_deviation<T: Real>(m: &Mat<T>) -> T {
    m.max_abs_diff(&m.dagger())
}
