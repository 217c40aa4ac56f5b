//! Numerical kernels for small dense complex matrices.
//!
//! Everything here is written for the matrix sizes synthesis actually
//! produces (d ≤ 5 single-qudit blocks, d^n ≤ 2¹⁴ contracted circuits), so
//! the kernels favour determinism and readable invariants over peak speed:
//! Householder QR, cyclic Jacobi for Hermitian eigenproblems, a two-stage
//! eigendecomposition for unitaries, and one-sided Jacobi SVD. Jacobi
//! methods converge unconditionally on Hermitian input and keep degenerate
//! subspaces orthonormal to machine precision, which the cosine-sine
//! decomposition depends on.

pub mod su;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::{cis, cone, czero, C, Real};

const MAX_SWEEPS: usize = 100;

/// Householder QR: `a = q * r` with `q` square unitary and `r` upper
/// triangular (diagonal entries are complex, not phase-normalized).
pub fn qr<T: Real>(a: &Mat<T>) -> (Mat<T>, Mat<T>) {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let steps = m.min(n);
    // Store reflector vectors; each acts on rows k..m.
    let mut reflectors: Vec<Vec<C<T>>> = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut v: Vec<C<T>> = (k..m).map(|i| r[(i, k)]).collect();
        let norm = v
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |s, x| s + x)
            .sqrt();
        if norm <= T::eps() * T::lit(16.0) {
            reflectors.push(Vec::new());
            continue;
        }
        // alpha = -e^{i arg(v0)} * ||v|| avoids cancellation in v0 - alpha.
        let phase = if v[0].norm() > T::zero() { v[0] / v[0].norm() } else { C::new(T::one(), T::zero()) };
        let alpha = -phase * norm;
        v[0] = v[0] - alpha;
        let vnorm = v
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |s, x| s + x)
            .sqrt();
        if vnorm <= T::eps() * T::lit(16.0) {
            reflectors.push(Vec::new());
            continue;
        }
        for z in &mut v {
            *z = *z / vnorm;
        }
        apply_reflector_left(&mut r, &v, k);
        reflectors.push(v);
    }
    // q = H_0 H_1 ... H_{s-1}; build by applying reflectors to I in reverse.
    let mut q = Mat::identity(m);
    for (k, v) in reflectors.iter().enumerate().rev() {
        if !v.is_empty() {
            apply_reflector_left(&mut q, v, k);
        }
    }
    // Clean the mathematically-zero lower triangle.
    for i in 0..m {
        for j in 0..n.min(i) {
            r[(i, j)] = czero();
        }
    }
    (q, r)
}

/// m -= 2 v (v† m) where v lives on rows `offset..`.
fn apply_reflector_left<T: Real>(m: &mut Mat<T>, v: &[C<T>], offset: usize) {
    let cols = m.cols();
    for j in 0..cols {
        let mut dot = czero();
        for (i, vi) in v.iter().enumerate() {
            dot += vi.conj() * m[(offset + i, j)];
        }
        let two_dot = dot * T::lit(2.0);
        for (i, vi) in v.iter().enumerate() {
            let upd = *vi * two_dot;
            m[(offset + i, j)] -= upd;
        }
    }
}

/// Complex Jacobi rotation diagonalizing the Hermitian 2x2
/// [[a, b], [conj(b), d]]; returns (c, s) for G = [[c, s], [-conj(s), c]]
/// with c real and G† M G diagonal.
fn jacobi_rotation<T: Real>(a: T, d: T, b: C<T>) -> (T, C<T>) {
    let babs = b.norm();
    let tau = (d - a) / (babs * T::lit(2.0));
    let hyp = (T::one() + tau * tau).sqrt();
    let t = if tau >= T::zero() { T::one() / (tau + hyp) } else { T::one() / (tau - hyp) };
    let c = T::one() / (T::one() + t * t).sqrt();
    let sigma = t * c;
    let s = (b / babs) * sigma;
    (c, s)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi.
///
/// Returns eigenvalues ascending and a unitary `q` with
/// `h = q * diag(vals) * q†`. Only the Hermitian part of the input is read.
pub fn eigh<T: Real>(h: &Mat<T>) -> Result<(Vec<T>, Mat<T>)> {
    let n = h.dim();
    // Work on the exact Hermitian average so tiny asymmetries cannot drift.
    let mut m = Mat::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * T::lit(0.5));
    let mut q = Mat::identity(n);
    let scale = m.max_abs().max(T::one());
    let skip_tol = T::eps() * scale;

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for r in (p + 1)..n {
                let b = m[(p, r)];
                if b.norm() <= skip_tol {
                    continue;
                }
                rotated = true;
                let (c, s) = jacobi_rotation(m[(p, p)].re, m[(r, r)].re, b);
                // m <- G† m G on rows/cols p, r.
                for j in 0..n {
                    let (xp, xr) = (m[(p, j)], m[(r, j)]);
                    m[(p, j)] = xp * c - xr * s;
                    m[(r, j)] = xp * s.conj() + xr * c;
                }
                for i in 0..n {
                    let (xp, xr) = (m[(i, p)], m[(i, r)]);
                    m[(i, p)] = xp * c - xr * s.conj();
                    m[(i, r)] = xp * s + xr * c;
                }
                m[(p, r)] = czero();
                m[(r, p)] = czero();
                for i in 0..n {
                    let (xp, xr) = (q[(i, p)], q[(i, r)]);
                    q[(i, p)] = xp * c - xr * s.conj();
                    q[(i, r)] = xp * s + xr * c;
                }
            }
        }
        if !rotated {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| {
                m[(i, i)].re.partial_cmp(&m[(j, j)].re).expect("finite eigenvalues")
            });
            let vals = order.iter().map(|&i| m[(i, i)].re).collect();
            let qs = Mat::from_fn(n, n, |i, j| q[(i, order[j])]);
            return Ok((vals, qs));
        }
    }
    Err(Error::NumericalFailure {
        context: "Jacobi eigensolver did not converge".into(),
        residual: m.max_abs().to_f64().unwrap_or(f64::NAN),
        tolerance: skip_tol.to_f64().unwrap_or(f64::NAN),
    })
}

/// Eigendecomposition of a unitary: `u = q * diag(exp(i*phases)) * q†` with
/// `q` unitary and every phase in (-pi, pi].
///
/// A unitary's Hermitian part H = (U+U†)/2 has eigenvalue cos(phi), which
/// cannot tell phi from -phi. So after diagonalizing H, eigenvalue clusters
/// are re-diagonalized against K = (U-U†)/2i (eigenvalue sin(phi)), which
/// splits the pair. Cluster widths are widened until the reconstruction
/// residual passes `tol`.
pub fn eig_unitary<T: Real>(u: &Mat<T>, tol: T) -> Result<(Vec<T>, Mat<T>)> {
    let n = u.dim();
    let ud = u.dagger();
    let h = Mat::from_fn(n, n, |i, j| (u[(i, j)] + ud[(i, j)]) * T::lit(0.5));
    let k = Mat::from_fn(n, n, |i, j| {
        (u[(i, j)] - ud[(i, j)]) * C::new(T::zero(), T::lit(-0.5))
    });
    let (hvals, hq) = eigh(&h)?;

    let ladder = [
        T::lit(1e-8).max(T::eps() * T::lit(10.0)),
        T::lit(1e-6).max(T::eps() * T::lit(100.0)),
        T::lit(1e-4),
    ];
    let mut last_residual = T::infinity();
    for gap in ladder {
        let mut q = hq.clone();
        // Consecutive hvals within `gap` belong to one cos-degenerate cluster.
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && hvals[end] - hvals[end - 1] <= gap {
                end += 1;
            }
            if end - start > 1 {
                let cols: Vec<usize> = (start..end).collect();
                let sub = project_block(&k, &q, &cols);
                let (_, v) = eigh(&sub)?;
                replace_cols(&mut q, &cols, &v);
            }
            start = end;
        }
        let mut phases = Vec::with_capacity(n);
        for j in 0..n {
            let col = q.col(j);
            let ucol = u.mul_vec(&col);
            let mut w: C<T> = czero();
            for (a, b) in col.iter().zip(&ucol) {
                w += a.conj() * b;
            }
            phases.push(w.im.atan2(w.re));
        }
        let recon = reconstruct_from_phases(&q, &phases);
        let residual = recon.max_abs_diff(u);
        if residual <= tol {
            return Ok((phases, q));
        }
        last_residual = residual;
    }
    Err(Error::NumericalFailure {
        context: "unitary eigendecomposition residual".into(),
        residual: last_residual.to_f64().unwrap_or(f64::NAN),
        tolerance: tol.to_f64().unwrap_or(f64::NAN),
    })
}

/// q * diag(exp(i*phases)) * q†.
pub fn reconstruct_from_phases<T: Real>(q: &Mat<T>, phases: &[T]) -> Mat<T> {
    let d = Mat::from_diag(&phases.iter().map(|&p| cis(p)).collect::<Vec<_>>());
    &(q * &d) * &q.dagger()
}

/// Hermitian block Qc† K Qc for the selected columns of q.
fn project_block<T: Real>(k: &Mat<T>, q: &Mat<T>, cols: &[usize]) -> Mat<T> {
    let n = q.rows();
    let w = cols.len();
    let mut qc = Mat::zeros(n, w);
    for (jj, &j) in cols.iter().enumerate() {
        for i in 0..n {
            qc[(i, jj)] = q[(i, j)];
        }
    }
    &(&qc.dagger() * k) * &qc
}

/// q[:, cols] <- q[:, cols] * v.
fn replace_cols<T: Real>(q: &mut Mat<T>, cols: &[usize], v: &Mat<T>) {
    let n = q.rows();
    let w = cols.len();
    let mut block = Mat::zeros(n, w);
    for (jj, &j) in cols.iter().enumerate() {
        for i in 0..n {
            block[(i, jj)] = q[(i, j)];
        }
    }
    let rotated = &block * v;
    for (jj, &j) in cols.iter().enumerate() {
        for i in 0..n {
            q[(i, j)] = rotated[(i, jj)];
        }
    }
}

/// Full singular value decomposition `a = u * diag(s) * v†` by one-sided
/// Jacobi; `u` is rows×rows, `v` is cols×cols, singular values descending.
pub fn svd<T: Real>(a: &Mat<T>) -> Result<(Mat<T>, Vec<T>, Mat<T>)> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let (u, s, v) = svd(&a.dagger())?;
        return Ok((v, s, u));
    }
    let mut b = a.clone();
    let mut v = Mat::identity(n);
    let scale = b.max_abs().max(T::one());
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for r in (p + 1)..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = czero();
                for i in 0..m {
                    let (bp, br) = (b[(i, p)], b[(i, r)]);
                    alpha += bp.norm_sqr();
                    beta += br.norm_sqr();
                    gamma += bp.conj() * br;
                }
                let denom = (alpha * beta).sqrt();
                if denom <= T::zero() || gamma.norm() <= T::eps() * denom.max(T::eps() * scale) {
                    continue;
                }
                rotated = true;
                let (c, s) = jacobi_rotation(alpha, beta, gamma);
                for i in 0..m {
                    let (bp, br) = (b[(i, p)], b[(i, r)]);
                    b[(i, p)] = bp * c - br * s.conj();
                    b[(i, r)] = bp * s + br * c;
                }
                for i in 0..n {
                    let (vp, vr) = (v[(i, p)], v[(i, r)]);
                    v[(i, p)] = vp * c - vr * s.conj();
                    v[(i, r)] = vp * s + vr * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure {
            context: "one-sided Jacobi SVD did not converge".into(),
            residual: f64::NAN,
            tolerance: (T::eps() * scale).to_f64().unwrap_or(f64::NAN),
        });
    }

    let mut cols: Vec<(T, Vec<C<T>>)> = (0..n)
        .map(|j| {
            let col = b.col(j);
            let norm = col.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, x| a + x).sqrt();
            (norm, col)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cols[j].0.partial_cmp(&cols[i].0).expect("finite singular values"));
    let rank_tol = T::eps() * scale * T::from_usize(m).unwrap();
    let mut s_vals = Vec::with_capacity(n);
    let mut u_cols: Vec<Vec<C<T>>> = Vec::with_capacity(n);
    let vs = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    for &j in &order {
        let (norm, col) = &mut cols[j];
        if *norm > rank_tol {
            s_vals.push(*norm);
            u_cols.push(col.iter().map(|z| *z / *norm).collect());
        } else {
            s_vals.push(T::zero());
        }
    }
    let mut u_partial = Mat::zeros(m, u_cols.len());
    for (j, col) in u_cols.iter().enumerate() {
        u_partial.set_col(j, col);
    }
    let u = complete_unitary(&u_partial)?;
    Ok((u, s_vals, vs))
}

/// Extend a matrix with orthonormal columns to a full unitary.
///
/// New columns come from the orthogonal projector P = I - QQ†, taking the
/// largest remaining column each round (column pivoting keeps the pick well
/// conditioned).
pub fn complete_unitary<T: Real>(q: &Mat<T>) -> Result<Mat<T>> {
    let (m, k) = (q.rows(), q.cols());
    assert!(k <= m);
    let mut out = Mat::zeros(m, m);
    for j in 0..k {
        let col = q.col(j);
        out.set_col(j, &col);
    }
    for j in k..m {
        // P e_c restricted to the span built so far, for every candidate c.
        let mut best: Option<(T, Vec<C<T>>)> = None;
        for c in 0..m {
            let mut col: Vec<C<T>> = vec![czero(); m];
            col[c] = C::new(T::one(), T::zero());
            for built in 0..j {
                let mut dot = czero();
                for i in 0..m {
                    dot += out[(i, built)].conj() * col[i];
                }
                for i in 0..m {
                    let sub = out[(i, built)] * dot;
                    col[i] -= sub;
                }
            }
            let norm = col.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, x| a + x).sqrt();
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
                best = Some((norm, col));
            }
        }
        let (norm, mut col) = best.expect("nonempty candidate set");
        if norm <= T::eps() * T::lit(64.0) {
            return Err(Error::NumericalFailure {
                context: "orthonormal completion found no independent direction".into(),
                residual: norm.to_f64().unwrap_or(f64::NAN),
                tolerance: (T::eps() * T::lit(64.0)).to_f64().unwrap_or(f64::NAN),
            });
        }
        for z in &mut col {
            *z = *z / norm;
        }
        // One re-orthogonalization pass tightens the result to machine precision.
        for built in 0..j {
            let mut dot = czero();
            for i in 0..m {
                dot += out[(i, built)].conj() * col[i];
            }
            for i in 0..m {
                let sub = out[(i, built)] * dot;
                col[i] -= sub;
            }
        }
        let norm2 = col.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, x| a + x).sqrt();
        for z in &mut col {
            *z = *z / norm2;
        }
        out.set_col(j, &col);
    }
    Ok(out)
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the R-diagonal
/// phase ambiguity fixed, which makes the distribution exactly Haar.
pub fn haar_unitary<T: Real>(n: usize, rng: &mut impl Rng) -> Mat<T> {
    let g = Mat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C::new(T::lit(re), T::lit(im))
    });
    let (q, r) = qr(&g);
    let phase_fix: Vec<C<T>> = (0..n)
        .map(|j| {
            let d = r[(j, j)];
            if d.norm() > T::zero() { d / d.norm() } else { C::new(T::one(), T::zero()) }
        })
        .collect();
    &q * &Mat::from_diag(&phase_fix)
}

/// Global-phase-invariant distance sqrt(max(0, 1 - |tr(U†V)|/d)).
///
/// This is the Frobenius distance between the projective classes of U and V
/// up to a factor sqrt(2d), so it satisfies the triangle inequality, which
/// nearest-neighbour pruning relies on. Evaluating 1 - |tr|/d directly
/// floors out around sqrt(eps), so the equivalent phase-aligned form
/// min_phi ||U - e^{i phi} V||_F / sqrt(2d) is used instead; it stays
/// accurate all the way down to machine epsilon.
pub fn dist<T: Real>(u: &Mat<T>, v: &Mat<T>) -> T {
    let mut t: C<T> = czero();
    for (a, b) in u.data().iter().zip(v.data()) {
        t += a.conj() * b;
    }
    let phase = if t.norm() > T::zero() { t.conj() / t.norm() } else { cone() };
    let mut acc = T::zero();
    for (a, b) in u.data().iter().zip(v.data()) {
        acc += (a - b * phase).norm_sqr();
    }
    let d = T::from_usize(u.dim()).unwrap();
    (acc / (T::lit(2.0) * d)).sqrt()
}
