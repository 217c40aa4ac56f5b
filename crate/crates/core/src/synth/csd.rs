//! Cosine-Sine decomposition of qudit unitaries.
//!
//! A d^n unitary is peeled into an alternating product of block-diagonal
//! factors (one block per leading-qudit basis value) and cosine-sine factors
//! (two-level rotations between adjacent leading-qudit values, with one
//! angle per trailing basis value). Lowering recurses on the blocks until
//! every emitted gate is a value-controlled single-qudit operation.

use std::collections::BTreeMap;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gates::GateRef;
use crate::ir::{Circuit, Op, QuditDecl};
use crate::linalg::{complete_unitary, svd};
use crate::matrix::Mat;
use crate::scalar::{C, Real};
use crate::tol::Tolerances;

/// Two-block cosine-sine decomposition: U = diag(L1, L2) Σ diag(R1, R2)
/// with partition (r, m-r). Σ couples index i with index r+i for
/// i < min(r, m-r) via [[cos, -sin], [sin, cos]] and is identity elsewhere.
#[derive(Clone, Debug)]
pub struct Csd2<T: Real> {
    pub l1: Mat<T>,
    pub l2: Mat<T>,
    pub theta: Vec<T>,
    pub r1: Mat<T>,
    pub r2: Mat<T>,
}

/// The Σ factor for partition (p, q) with the given angles.
pub fn cs_matrix<T: Real>(p: usize, q: usize, theta: &[T]) -> Mat<T> {
    let m = p.min(q);
    assert_eq!(theta.len(), m);
    let mut out = Mat::identity(p + q);
    for (i, &th) in theta.iter().enumerate() {
        let (s, c) = th.sin_cos();
        out[(i, i)] = C::new(c, T::zero());
        out[(p + i, p + i)] = C::new(c, T::zero());
        out[(i, p + i)] = C::new(-s, T::zero());
        out[(p + i, i)] = C::new(s, T::zero());
    }
    out
}

/// Fill a square unitary from columns pinned at specific positions; the
/// remaining positions take orthonormal completion columns in index order.
fn place_and_complete<T: Real>(
    n: usize,
    known: &[(usize, Vec<C<T>>)],
) -> Result<Mat<T>> {
    let mut partial = Mat::zeros(n, known.len());
    for (j, (_, col)) in known.iter().enumerate() {
        partial.set_col(j, col);
    }
    let full = complete_unitary(&partial)?;
    let mut out = Mat::zeros(n, n);
    let taken: Vec<usize> = known.iter().map(|(pos, _)| *pos).collect();
    for (j, &pos) in taken.iter().enumerate() {
        out.set_col(pos, &full.col(j));
    }
    let mut next = known.len();
    for pos in 0..n {
        if !taken.contains(&pos) {
            out.set_col(pos, &full.col(next));
            next += 1;
        }
    }
    Ok(out)
}

/// Divide each row of `m` (taken from rows of a product equation) by the
/// better-conditioned of the cosine or sine coefficient.
fn solve_rows<T: Real>(
    p: usize,
    q: usize,
    c: &[T],
    s: &[T],
    cos_side: &Mat<T>,
    sin_side: &Mat<T>,
    sin_sign: T,
) -> Mat<T> {
    // Rows 0..min(p,q) obey cos_side_i = c_i x_i and sin_side_i = sin_sign
    // s_i x_i; rows min(p,q).. obey cos_side_i = x_i directly.
    let m = p.min(q);
    let n = cos_side.cols();
    let rows = cos_side.rows();
    Mat::from_fn(rows, n, |i, j| {
        if i < m {
            if c[i] >= s[i] {
                cos_side[(i, j)] / c[i]
            } else {
                sin_side[(i, j)] / (sin_sign * s[i])
            }
        } else {
            cos_side[(i, j)]
        }
    })
}

/// Cosine-sine decomposition of a unitary at partition r.
pub fn csd2<T: Real>(u: &Mat<T>, r: usize, tol: &Tolerances<T>) -> Result<Csd2<T>> {
    let m = u.dim();
    if r == 0 || r >= m {
        return Err(Error::InvalidDimension(format!(
            "partition {r} must split a {m}-dimensional unitary"
        )));
    }
    u.require_unitary(tol.csd_tol)?;
    let (p, q) = (r, m - r);
    let tiny = T::eps().sqrt(); // ~1e-8 for f64: rank cut for sines

    let u11 = u.block(0, 0, p, p);
    let u12 = u.block(0, p, p, q);
    let u21 = u.block(p, 0, q, p);
    let u22 = u.block(p, p, q, q);

    let (l1, l2, theta, r1, r2);
    if p <= q {
        // Singular values of U11 are the cosines, descending, so the angles
        // come out ascending.
        let (sl1, sigma, sr1) = svd(&u11)?;
        let c: Vec<T> = sigma.iter().map(|&x| x.min(T::one())).collect();
        let w = &u21 * &sr1;
        let s: Vec<T> = (0..p).map(|i| vec_norm(&w.col(i))).collect();
        theta = (0..p).map(|i| s[i].atan2(c[i])).collect::<Vec<T>>();
        let known: Vec<(usize, Vec<C<T>>)> = (0..p)
            .filter(|&i| s[i] > tiny)
            .map(|i| (i, scale_col(&w.col(i), T::one() / s[i])))
            .collect();
        let sl2 = place_and_complete(q, &known)?;
        // R2 rows: L2† U22 = diag(C, I) R2 and L1† U12 = [-S 0] R2.
        let cos_side = &sl2.dagger() * &u22;
        let sin_side = &sl1.dagger() * &u12;
        let r2_rows = solve_rows(p, q, &c, &s, &cos_side, &sin_side, -T::one());
        l1 = sl1;
        l2 = sl2;
        r1 = sr1.dagger();
        r2 = r2_rows;
    } else {
        // Mirror: U22 carries the cosines.
        let (sl2, sigma, sr2) = svd(&u22)?;
        let c: Vec<T> = sigma.iter().map(|&x| x.min(T::one())).collect();
        let w = &u12 * &sr2;
        let s: Vec<T> = (0..q).map(|i| vec_norm(&w.col(i))).collect();
        theta = (0..q).map(|i| s[i].atan2(c[i])).collect::<Vec<T>>();
        let known: Vec<(usize, Vec<C<T>>)> = (0..q)
            .filter(|&i| s[i] > tiny)
            .map(|i| (i, scale_col(&w.col(i), -T::one() / s[i])))
            .collect();
        let sl1 = place_and_complete(p, &known)?;
        // R1 rows: L1† U11 = diag(C, I) R1 and L2† U21 = [S 0] R1.
        let cos_side = &sl1.dagger() * &u11;
        let sin_side = &sl2.dagger() * &u21;
        let r1_rows = solve_rows(p, q, &c, &s, &cos_side, &sin_side, T::one());
        l1 = sl1;
        l2 = sl2;
        r1 = r1_rows;
        r2 = sr2.dagger();
    }

    for b in [&l1, &l2, &r1, &r2] {
        b.require_unitary(tol.csd_tol)?;
    }
    debug_assert!(theta.windows(2).all(|w| w[0] <= w[1] + T::lit(1e-9)));
    let rec = &(&direct_sum2(&l1, &l2) * &cs_matrix(p, q, &theta)) * &direct_sum2(&r1, &r2);
    let residual = rec.max_abs_diff(u);
    if residual > tol.csd_tol {
        return Err(Error::NumericalFailure {
            context: "csd2 reconstruction",
            residual: residual.to_f64().unwrap_or(f64::NAN),
            tolerance: tol.csd_tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(Csd2 { l1, l2, theta, r1, r2 })
}

fn vec_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|x| x.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

fn scale_col<T: Real>(v: &[C<T>], f: T) -> Vec<C<T>> {
    v.iter().map(|x| x * f).collect()
}

fn direct_sum2<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a.direct_sum(b)
}

/// One factor of the peeled decomposition over the full d^n space.
#[derive(Clone, Debug)]
pub enum CsdFactor<T: Real> {
    /// One block of size d^{n-1} per leading-qudit basis value.
    BlockDiag { blocks: Vec<Mat<T>> },
    /// Rotation between leading-qudit levels (level, level+1); theta[t] is
    /// the angle applied when the trailing register reads t.
    CosineSine { level: usize, theta: Vec<T> },
}

impl<T: Real> Serialize for CsdFactor<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CsdFactor::BlockDiag { blocks } => {
                let mut st = serializer.serialize_struct("CsdFactor", 2)?;
                st.serialize_field("kind", "BlockDiag")?;
                st.serialize_field("blocks", blocks)?;
                st.end()
            }
            CsdFactor::CosineSine { level, theta } => {
                let mut st = serializer.serialize_struct("CsdFactor", 3)?;
                st.serialize_field("kind", "CosineSine")?;
                st.serialize_field("level", level)?;
                let angles: Vec<f64> =
                    theta.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
                st.serialize_field("theta", &angles)?;
                st.end()
            }
        }
    }
}

impl<T: Real> CsdFactor<T> {
    /// Row/column range the factor acts on nontrivially within the full
    /// matrix of the given size.
    pub fn span(&self, dim: usize) -> (usize, usize) {
        match self {
            CsdFactor::BlockDiag { .. } => (0, dim),
            CsdFactor::CosineSine { level, theta } => {
                let r0 = theta.len();
                (level * r0, (level + 2) * r0)
            }
        }
    }

    /// Materialize the factor as a full matrix of the given size.
    pub fn matrix(&self, dim: usize) -> Mat<T> {
        match self {
            CsdFactor::BlockDiag { blocks } => {
                let mut out = blocks[0].clone();
                for b in &blocks[1..] {
                    out = out.direct_sum(b);
                }
                assert_eq!(out.dim(), dim);
                out
            }
            CsdFactor::CosineSine { level, theta } => {
                let r0 = theta.len();
                assert!((level + 2) * r0 <= dim);
                let mut out = Mat::identity(dim);
                for (t, &th) in theta.iter().enumerate() {
                    let (s, c) = th.sin_cos();
                    let a = level * r0 + t;
                    let b = (level + 1) * r0 + t;
                    out[(a, a)] = C::new(c, T::zero());
                    out[(b, b)] = C::new(c, T::zero());
                    out[(a, b)] = C::new(-s, T::zero());
                    out[(b, a)] = C::new(s, T::zero());
                }
                out
            }
        }
    }
}

/// Number of qudits for a matrix of the given size, erroring when the size
/// is not a d power.
pub fn qudit_count(dim: usize, d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("dimension {d} is not a qudit size")));
    }
    let mut n = 0usize;
    let mut x = dim;
    while x > 1 {
        if x % d != 0 {
            return Err(Error::InvalidDimension(format!("size {dim} is not a power of {d}")));
        }
        x /= d;
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidDimension(format!("size {dim} is not a power of {d}")));
    }
    Ok(n)
}

/// Peel a d^n unitary into 2^d - 1 alternating factors (a single leaf for
/// n = 1). The product of the factors in list order reproduces the input.
pub fn csd_qudit<T: Real>(u: &Mat<T>, d: usize, tol: &Tolerances<T>) -> Result<Vec<CsdFactor<T>>> {
    let n = qudit_count(u.dim(), d)?;
    u.require_unitary(tol.csd_tol)?;
    if n == 1 {
        return Ok(vec![CsdFactor::BlockDiag { blocks: vec![u.clone()] }]);
    }
    let r0 = u.dim() / d;
    let factors = peel(u, d, r0, tol)?;
    // Reconstruction guard: a corrupted factor list must never escape.
    let mut rec = Mat::identity(u.dim());
    for f in &factors {
        rec = &rec * &f.matrix(u.dim());
    }
    let residual = rec.max_abs_diff(u);
    if residual > tol.csd_tol {
        return Err(Error::NumericalFailure {
            context: "csd_qudit reassembly",
            residual: residual.to_f64().unwrap_or(f64::NAN),
            tolerance: tol.csd_tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(factors)
}

/// Recursive peel over k leading blocks of size r0. Factors are emitted in
/// matrix-product order and the first factor is always block-diagonal, so a
/// parent can fold its L1/R1 block into the child list.
fn peel<T: Real>(m: &Mat<T>, k: usize, r0: usize, tol: &Tolerances<T>) -> Result<Vec<CsdFactor<T>>> {
    if k == 1 {
        return Ok(vec![CsdFactor::BlockDiag { blocks: vec![m.clone()] }]);
    }
    let split = csd2(m, r0, tol)?;
    let left = embed(peel(&split.l2, k - 1, r0, tol)?, split.l1);
    let right = embed(peel(&split.r2, k - 1, r0, tol)?, split.r1);
    let mut out = left;
    out.push(CsdFactor::CosineSine { level: 0, theta: split.theta });
    out.extend(right);
    Ok(out)
}

/// Shift a factor list up by one leading block and fold `head` into the
/// first factor's new leading slot (identity for the rest).
fn embed<T: Real>(factors: Vec<CsdFactor<T>>, head: Mat<T>) -> Vec<CsdFactor<T>> {
    let r0 = head.dim();
    let mut head = Some(head);
    factors
        .into_iter()
        .map(|f| match f {
            CsdFactor::BlockDiag { blocks } => {
                let lead = head.take().unwrap_or_else(|| Mat::identity(r0));
                let mut all = vec![lead];
                all.extend(blocks);
                CsdFactor::BlockDiag { blocks: all }
            }
            CsdFactor::CosineSine { level, theta } => {
                CsdFactor::CosineSine { level: level + 1, theta }
            }
        })
        .collect()
}

/// Two-level rotation R_{(b, b+1)}(theta) on a single d-level system.
pub fn two_level_rotation<T: Real>(d: usize, b: usize, theta: T) -> Mat<T> {
    assert!(b + 1 < d);
    let (s, c) = theta.sin_cos();
    let mut out = Mat::identity(d);
    out[(b, b)] = C::new(c, T::zero());
    out[(b + 1, b + 1)] = C::new(c, T::zero());
    out[(b, b + 1)] = C::new(-s, T::zero());
    out[(b + 1, b)] = C::new(s, T::zero());
    out
}

fn is_identity<T: Real>(m: &Mat<T>) -> bool {
    m.max_abs_diff(&Mat::identity(m.dim())) < T::lit(1e-13)
}

/// Lower a factor list to a circuit of value-controlled single-qudit gates.
/// Wire 0 is the leading qudit (the select wire of every block-diagonal
/// factor); multiplexer ops list their control wires first, target last.
pub fn lower_to_circuit<T: Real>(
    factors: &[CsdFactor<T>],
    d: usize,
    n: usize,
    tol: &Tolerances<T>,
) -> Result<Circuit<T>> {
    let qudits: Vec<QuditDecl> = (0..n).map(|id| QuditDecl { id, dim: d }).collect();
    let mut ops: Vec<Op<T>> = Vec::new();
    let wires: Vec<usize> = (0..n).collect();
    // Factors multiply left to right, so the rightmost factor acts first
    // and must be emitted first.
    for f in factors.iter().rev() {
        emit_factor(f, d, &wires, &[], &mut ops, tol)?;
    }
    let circuit = Circuit { qudits, ops };
    circuit.validate()?;
    Ok(circuit)
}

/// Emit one factor over the wire set `wires` (wires[0] = leading), under
/// already-fixed control values on outer wires.
fn emit_factor<T: Real>(
    f: &CsdFactor<T>,
    d: usize,
    wires: &[usize],
    fixed: &[(usize, usize)],
    ops: &mut Vec<Op<T>>,
    tol: &Tolerances<T>,
) -> Result<()> {
    match f {
        CsdFactor::BlockDiag { blocks } => {
            if blocks.len() == 1 {
                // Leaf: a bare single-qudit unitary on wires[0].
                emit_single(&blocks[0], wires[0], fixed, d, ops);
                return Ok(());
            }
            for (j, block) in blocks.iter().enumerate() {
                if is_identity(block) {
                    continue;
                }
                let mut inner_fixed = fixed.to_vec();
                inner_fixed.push((wires[0], j));
                if wires.len() == 2 {
                    emit_single(block, wires[1], &inner_fixed, d, ops);
                } else {
                    let sub = csd_qudit(block, d, tol)?;
                    for g in sub.iter().rev() {
                        emit_factor(g, d, &wires[1..], &inner_fixed, ops, tol)?;
                    }
                }
            }
        }
        CsdFactor::CosineSine { level, theta } => {
            // One gate per trailing basis value; the rotation lands on the
            // leading wire, selected by everything else.
            let trailing = &wires[1..];
            let trailing_dims: Vec<usize> = trailing.iter().map(|_| d).collect();
            for (t, &th) in theta.iter().enumerate() {
                if th.abs() < T::lit(1e-13) {
                    continue;
                }
                let rot = two_level_rotation(d, *level, th);
                let mut controls: Vec<(usize, usize)> = fixed.to_vec();
                let tdigits = crate::sim::digits_of(t, &trailing_dims);
                controls.extend(trailing.iter().copied().zip(tdigits));
                push_multiplexed(rot, wires[0], &controls, d, ops);
            }
        }
    }
    Ok(())
}

/// A single-qudit gate on `target`, promoted to a multiplexer when control
/// values are pinned.
fn emit_single<T: Real>(
    u: &Mat<T>,
    target: usize,
    fixed: &[(usize, usize)],
    d: usize,
    ops: &mut Vec<Op<T>>,
) {
    if is_identity(u) {
        return;
    }
    if fixed.is_empty() {
        ops.push(Op::Gate { gate: GateRef::custom(vec![d], u.clone()), targets: vec![target] });
    } else {
        push_multiplexed(u.clone(), target, fixed, d, ops);
    }
}

fn push_multiplexed<T: Real>(
    payload: Mat<T>,
    target: usize,
    controls: &[(usize, usize)],
    d: usize,
    ops: &mut Vec<Op<T>>,
) {
    let sel: usize = controls.iter().fold(0, |acc, &(_, v)| acc * d + v);
    let total: usize = d.pow(controls.len() as u32);
    let mut map = BTreeMap::new();
    let pd = payload.dim();
    for v in 0..total {
        map.insert(v, if v == sel { payload.clone() } else { Mat::identity(pd) });
    }
    let gate = GateRef::multiplexer(total, map);
    let mut targets: Vec<usize> = controls.iter().map(|&(w, _)| w).collect();
    targets.push(target);
    ops.push(Op::Gate { gate, targets });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::sum_gate;
    use crate::linalg::{dist, haar_unitary};
    use crate::sim::contract_to_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type M = Mat<f64>;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn reassemble(factors: &[CsdFactor<f64>], dim: usize) -> M {
        let mut rec = M::identity(dim);
        for f in factors {
            rec = &rec * &f.matrix(dim);
        }
        rec
    }

    #[test]
    fn csd2_identity_and_cnot() {
        let c = csd2(&M::identity(4), 2, &tol()).unwrap();
        assert!(c.theta.iter().all(|&t| t.abs() < 1e-12));

        let cnot: M = sum_gate(2, 2).unwrap();
        let c = csd2(&cnot, 2, &tol()).unwrap();
        assert!(c.theta.iter().all(|&t| t.abs() < 1e-12));
        let rec = &(&c.l1.direct_sum(&c.l2) * &cs_matrix(2, 2, &c.theta))
            * &c.r1.direct_sum(&c.r2);
        assert!(rec.max_abs_diff(&cnot) < 1e-12);
    }

    #[test]
    fn csd2_random_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let u: M = haar_unitary(8, &mut rng);
            let c = csd2(&u, 4, &tol()).unwrap();
            assert!(c.theta.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            assert!(c.theta.iter().all(|&t| (-1e-12..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&t)));
        }
    }

    #[test]
    fn csd2_unbalanced_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for &(m, r) in &[(9usize, 3usize), (9, 6), (8, 2), (8, 6), (6, 1), (6, 5)] {
            let u: M = haar_unitary(m, &mut rng);
            let c = csd2(&u, r, &tol()).unwrap();
            assert_eq!(c.theta.len(), r.min(m - r));
            assert_eq!(c.l1.dim(), r);
            assert_eq!(c.r2.dim(), m - r);
        }
    }

    #[test]
    fn csd2_rejects_bad_input() {
        assert!(csd2(&M::identity(4), 0, &tol()).is_err());
        assert!(csd2(&M::identity(4), 4, &tol()).is_err());
        let mut not_unitary = M::identity(4);
        not_unitary[(0, 0)] = C::new(2.0, 0.0);
        assert!(csd2(&not_unitary, 2, &tol()).is_err());
    }

    #[test]
    fn peel_identity_gives_identity_factors() {
        let factors = csd_qudit(&M::identity(4), 2, &tol()).unwrap();
        assert_eq!(factors.len(), 3);
        for f in &factors {
            assert!(f.matrix(4).max_abs_diff(&M::identity(4)) < 1e-12);
        }
    }

    #[test]
    fn qutrit_pair_has_seven_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u: M = haar_unitary(9, &mut rng);
        let factors = csd_qudit(&u, 3, &tol()).unwrap();
        assert_eq!(factors.len(), 7);
        let kinds: Vec<bool> = factors
            .iter()
            .map(|f| matches!(f, CsdFactor::BlockDiag { .. }))
            .collect();
        assert_eq!(kinds, [true, false, true, false, true, false, true]);
        for (i, f) in factors.iter().enumerate() {
            if let CsdFactor::BlockDiag { blocks } = f {
                assert_eq!(blocks.len(), 3);
                for b in blocks {
                    assert_eq!(b.dim(), 3);
                    assert!(b.unitarity_deviation() < 1e-10);
                }
                // The third and seventh factors keep a structural identity
                // in their leading block.
                if i == 2 || i == 6 {
                    assert!(blocks[0].max_abs_diff(&M::identity(3)) < 1e-12);
                }
            }
        }
        assert!(reassemble(&factors, 9).max_abs_diff(&u) < 1e-9);
    }

    #[test]
    fn reconstruction_across_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for &(d, n) in &[(2usize, 2usize), (2, 3), (3, 2)] {
            let dim = d.pow(n as u32);
            for _ in 0..20 {
                let u: M = haar_unitary(dim, &mut rng);
                let factors = csd_qudit(&u, d, &tol()).unwrap();
                assert!(
                    reassemble(&factors, dim).max_abs_diff(&u) < 1e-9,
                    "reconstruction failed for d={d}, n={n}"
                );
            }
        }
    }

    #[test]
    fn factor_counts_follow_the_block_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        // 2^d - 1 factors at the top level, independent of n.
        for &(d, n) in &[(2usize, 2usize), (2, 3), (3, 2), (4, 2)] {
            let u: M = haar_unitary(d.pow(n as u32), &mut rng);
            let factors = csd_qudit(&u, d, &tol()).unwrap();
            assert_eq!(factors.len(), (1 << d) - 1, "d={d}");
        }
    }

    #[test]
    fn rejects_non_power_sizes() {
        assert!(csd_qudit(&M::identity(6), 2, &tol()).is_err());
        assert!(csd_qudit(&M::identity(6), 3, &tol()).is_err());
        assert!(qudit_count(8, 2).is_ok());
        assert!(qudit_count(12, 2).is_err());
    }

    #[test]
    fn lower_single_qudit_is_one_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u: M = haar_unitary(3, &mut rng);
        let factors = csd_qudit(&u, 3, &tol()).unwrap();
        let circuit = lower_to_circuit(&factors, 3, 1, &tol()).unwrap();
        assert_eq!(circuit.ops.len(), 1);
        let got = contract_to_unitary(&circuit, &tol()).unwrap();
        assert!(dist(&got, &u) < 1e-10);
    }

    #[test]
    fn lower_cnot_matches_up_to_phase() {
        let cnot: M = sum_gate(2, 2).unwrap();
        let factors = csd_qudit(&cnot, 2, &tol()).unwrap();
        let circuit = lower_to_circuit(&factors, 2, 2, &tol()).unwrap();
        let got = contract_to_unitary(&circuit, &tol()).unwrap();
        assert!(dist(&got, &cnot) < 1e-8);
    }

    #[test]
    fn lower_random_qutrit_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let u: M = haar_unitary(9, &mut rng);
        let factors = csd_qudit(&u, 3, &tol()).unwrap();
        let circuit = lower_to_circuit(&factors, 3, 2, &tol()).unwrap();
        let got = contract_to_unitary(&circuit, &tol()).unwrap();
        assert!(dist(&got, &u) < 1e-8);
        // Every op is a one- or two-qudit value-controlled gate here.
        for op in &circuit.ops {
            assert!(op.targets().len() <= 2);
        }
    }

    #[test]
    fn lower_three_qubits_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let u: M = haar_unitary(8, &mut rng);
        let factors = csd_qudit(&u, 2, &tol()).unwrap();
        let circuit = lower_to_circuit(&factors, 2, 3, &tol()).unwrap();
        let got = contract_to_unitary(&circuit, &tol()).unwrap();
        assert!(dist(&got, &u) < 1e-8);
    }

    #[test]
    fn factor_json_has_kind_tags() {
        let factors = csd_qudit(&M::identity(4), 2, &tol()).unwrap();
        let v = serde_json::to_value(&factors).unwrap();
        assert_eq!(v[0]["kind"], "BlockDiag");
        assert_eq!(v[1]["kind"], "CosineSine");
        assert!(v[1]["theta"].as_array().unwrap().len() == 2);
        let (lo, hi) = factors[1].span(4);
        assert_eq!((lo, hi), (0, 4));
    }
}
