//! Elementary qudit gates and the symbolic `GateRef` descriptor.
//!
//! Conventions: X is the literal ket-bra sum over |j><j+1|, so X|j> =
//! |j-1 mod d> and the familiar transpose is X^{d-1}. Z = diag(omega^j) with
//! omega = exp(2 pi i / d). With these definitions XZ = omega ZX; note the
//! factor sits on the ZX side because of the X direction above. H is the
//! d-dimensional Fourier matrix and T the diagonal phase ladder
//! diag(exp(2 pi i j / d^3)), which reduces to the standard T at d = 2.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::{cis, omega, C, Real};

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::InvalidDimension(format!("qudit dimension must be >= 2, got {d}")))
    } else {
        Ok(())
    }
}

/// Generalized Pauli X: entry 1 at (j, (j+1) mod d), so X|j> = |j-1 mod d>.
pub fn pauli_x<T: Real>(d: usize) -> Result<Mat<T>> {
    check_dim(d)?;
    let one = C::new(T::one(), T::zero());
    let mut m = Mat::zeros(d, d);
    for j in 0..d {
        m[(j, (j + 1) % d)] = one;
    }
    Ok(m)
}

/// Generalized Pauli Z = diag(1, omega, ..., omega^{d-1}).
pub fn pauli_z<T: Real>(d: usize) -> Result<Mat<T>> {
    check_dim(d)?;
    let w: C<T> = omega(d);
    Ok(Mat::from_diag(&(0..d).map(|j| w.powu(j as u32)).collect::<Vec<_>>()))
}

/// Generalized Pauli Y: the product X Z with a global phase exp(i pi / d)
/// chosen so the determinant is real; reduces to sigma_y at d = 2.
pub fn pauli_y<T: Real>(d: usize) -> Result<Mat<T>> {
    let xz = &pauli_x(d)? * &pauli_z(d)?;
    Ok(xz.scale(cis(T::PI() / T::from_usize(d).unwrap())))
}

/// Generalized Hadamard: the Fourier matrix F[j,k] = omega^{jk} / sqrt(d).
pub fn hadamard<T: Real>(d: usize) -> Result<Mat<T>> {
    check_dim(d)?;
    let w: C<T> = omega(d);
    let norm = T::one() / T::from_usize(d).unwrap().sqrt();
    Ok(Mat::from_fn(d, d, |j, k| w.powu(((j * k) % d) as u32) * norm))
}

/// Phase-ladder T gate diag(exp(2 pi i j / d^3)); standard T at d = 2.
pub fn tgate<T: Real>(d: usize) -> Result<Mat<T>> {
    check_dim(d)?;
    let step = T::lit(2.0) * T::PI() / T::from_usize(d * d * d).unwrap();
    Ok(Mat::from_diag(
        &(0..d).map(|j| cis(step * T::from_usize(j).unwrap())).collect::<Vec<_>>(),
    ))
}

/// SUM gate |i, j> -> |i, (i + j) mod d_target>; CNOT at d = 2. Mixed
/// control dimensions reduce the control value mod the target dimension.
pub fn sum_gate<T: Real>(d_control: usize, d_target: usize) -> Result<Mat<T>> {
    check_dim(d_control)?;
    check_dim(d_target)?;
    let n = d_control * d_target;
    let one = C::new(T::one(), T::zero());
    let mut m = Mat::zeros(n, n);
    for i in 0..d_control {
        for j in 0..d_target {
            let col = i * d_target + j;
            let row = i * d_target + (i + j) % d_target;
            m[(row, col)] = one;
        }
    }
    Ok(m)
}

/// Controlled power diag(U^0, U^1, ..., U^{d_control-1}): control value j
/// applies U^j.
pub fn controlled_power<T: Real>(u: &Mat<T>, d_control: usize, tol: T) -> Result<Mat<T>> {
    check_dim(d_control)?;
    u.require_unitary(tol)?;
    let dt = u.dim();
    let mut m = Mat::zeros(d_control * dt, d_control * dt);
    let mut power = Mat::identity(dt);
    for i in 0..d_control {
        m.set_block(i * dt, i * dt, &power);
        power = &power * u;
    }
    Ok(m)
}

/// Quantum multiplexer: block-diagonal direct sum, one block per control
/// basis value ("if the control is |v>, apply blocks[v]").
pub fn multiplexer<T: Real>(blocks: &[Mat<T>], tol: T) -> Result<Mat<T>> {
    if blocks.len() < 2 {
        return Err(Error::InvalidDimension(format!(
            "multiplexer needs one block per control value (>= 2), got {}",
            blocks.len()
        )));
    }
    let dt = blocks[0].dim();
    let mut m = Mat::zeros(blocks.len() * dt, blocks.len() * dt);
    for (i, b) in blocks.iter().enumerate() {
        if !b.is_square() || b.dim() != dt {
            return Err(Error::InvalidDimension("multiplexer blocks must share one square size".into()));
        }
        b.require_unitary(tol)?;
        m.set_block(i * dt, i * dt, b);
    }
    Ok(m)
}

/// Gate families a `GateRef` can name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Z,
    Y,
    H,
    Hdag,
    T,
    Tdag,
    #[serde(rename = "SUM")]
    Sum,
    ControlledU,
    Multiplexer,
    Custom,
}

/// Symbolic gate descriptor: a named family, per-qudit dimensions, a
/// repetition exponent, and (for the data-carrying kinds) an explicit matrix
/// payload or per-control-value block map.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GateRef<T: Real> {
    pub kind: GateKind,
    pub dims: Vec<usize>,
    pub power: i64,
    #[serde(default)]
    pub payload: Option<Mat<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "control_map_codec")]
    pub control_map: Option<BTreeMap<usize, Mat<T>>>,
}

/// Control-value keys travel as JSON strings. Serde buffers untagged enum
/// content with string keys, so an integer-keyed map would serialize fine
/// but fail to re-parse inside `Op`; keeping the conversion explicit makes
/// the round trip unconditional.
mod control_map_codec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer, T: Real>(
        v: &Option<BTreeMap<usize, Mat<T>>>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let as_strings: Option<BTreeMap<String, &Mat<T>>> =
            v.as_ref().map(|m| m.iter().map(|(k, mat)| (k.to_string(), mat)).collect());
        as_strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Real>(
        d: D,
    ) -> std::result::Result<Option<BTreeMap<usize, Mat<T>>>, D::Error> {
        use serde::de::Error as _;
        let as_strings: Option<BTreeMap<String, Mat<T>>> = Option::deserialize(d)?;
        as_strings
            .map(|m| {
                m.into_iter()
                    .map(|(k, mat)| {
                        k.parse::<usize>().map(|key| (key, mat)).map_err(D::Error::custom)
                    })
                    .collect()
            })
            .transpose()
    }
}

impl<T: Real> GateRef<T> {
    fn plain(kind: GateKind, dims: Vec<usize>) -> Self {
        GateRef { kind, dims, power: 1, payload: None, control_map: None }
    }

    pub fn x(d: usize) -> Self {
        Self::plain(GateKind::X, vec![d])
    }

    pub fn z(d: usize) -> Self {
        Self::plain(GateKind::Z, vec![d])
    }

    pub fn y(d: usize) -> Self {
        Self::plain(GateKind::Y, vec![d])
    }

    pub fn h(d: usize) -> Self {
        Self::plain(GateKind::H, vec![d])
    }

    pub fn h_dag(d: usize) -> Self {
        Self::plain(GateKind::Hdag, vec![d])
    }

    pub fn t(d: usize) -> Self {
        Self::plain(GateKind::T, vec![d])
    }

    pub fn t_dag(d: usize) -> Self {
        Self::plain(GateKind::Tdag, vec![d])
    }

    pub fn sum(d_control: usize, d_target: usize) -> Self {
        Self::plain(GateKind::Sum, vec![d_control, d_target])
    }

    pub fn controlled(u: Mat<T>, d_control: usize) -> Self {
        let dt = u.dim();
        GateRef {
            kind: GateKind::ControlledU,
            dims: vec![d_control, dt],
            power: 1,
            payload: Some(u),
            control_map: None,
        }
    }

    pub fn multiplexer(d_control: usize, map: BTreeMap<usize, Mat<T>>) -> Self {
        let dt = map.values().next().map_or(0, Mat::dim);
        GateRef {
            kind: GateKind::Multiplexer,
            dims: vec![d_control, dt],
            power: 1,
            payload: None,
            control_map: Some(map),
        }
    }

    pub fn custom(dims: Vec<usize>, m: Mat<T>) -> Self {
        GateRef { kind: GateKind::Custom, dims, power: 1, payload: Some(m), control_map: None }
    }

    /// Same gate with the exponent multiplied by `k`.
    pub fn pow(mut self, k: i64) -> Self {
        self.power *= k;
        self
    }

    /// The inverse gate (exponent negated).
    pub fn inverse(&self) -> Self {
        let mut g = self.clone();
        g.power = -g.power;
        g
    }

    /// Total Hilbert dimension this gate acts on.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Resolve to a concrete matrix of size `total_dim()`.
    pub fn matrix(&self, tol: T) -> Result<Mat<T>> {
        if self.dims.is_empty() {
            return Err(Error::InvalidDimension("gate has no dims".into()));
        }
        for &d in &self.dims {
            check_dim(d)?;
        }
        let single = |expect: usize| -> Result<usize> {
            if self.dims.len() != expect {
                Err(Error::InvalidDimension(format!(
                    "{:?} expects {} dim entries, got {:?}",
                    self.kind, expect, self.dims
                )))
            } else {
                Ok(self.dims[0])
            }
        };
        let base = match self.kind {
            GateKind::X => pauli_x(single(1)?)?,
            GateKind::Z => pauli_z(single(1)?)?,
            GateKind::Y => pauli_y(single(1)?)?,
            GateKind::H => hadamard(single(1)?)?,
            GateKind::Hdag => hadamard(single(1)?)?.dagger(),
            GateKind::T => tgate(single(1)?)?,
            GateKind::Tdag => tgate(single(1)?)?.dagger(),
            GateKind::Sum => {
                single(2).map_err(|_| {
                    Error::InvalidDimension(format!("SUM expects two dims, got {:?}", self.dims))
                })?;
                sum_gate(self.dims[0], self.dims[1])?
            }
            GateKind::ControlledU => {
                let u = self.payload.as_ref().ok_or_else(|| {
                    Error::InvalidDimension("ControlledU needs a payload matrix".into())
                })?;
                if self.dims.len() != 2 || u.dim() != self.dims[1] {
                    return Err(Error::InvalidDimension(format!(
                        "ControlledU dims {:?} do not match payload size {}",
                        self.dims,
                        u.dim()
                    )));
                }
                controlled_power(u, self.dims[0], tol)?
            }
            GateKind::Multiplexer => {
                let map = self.control_map.as_ref().ok_or_else(|| {
                    Error::InvalidDimension("Multiplexer needs a control map".into())
                })?;
                if self.dims.len() != 2 {
                    return Err(Error::InvalidDimension(format!(
                        "Multiplexer expects two dims, got {:?}",
                        self.dims
                    )));
                }
                let dc = self.dims[0];
                let mut blocks = Vec::with_capacity(dc);
                for v in 0..dc {
                    let b = map.get(&v).ok_or_else(|| {
                        Error::InvalidDimension(format!(
                            "Multiplexer control map missing value {v} (one block per control value)"
                        ))
                    })?;
                    if b.dim() != self.dims[1] {
                        return Err(Error::InvalidDimension(format!(
                            "Multiplexer block for value {v} has size {}, expected {}",
                            b.dim(),
                            self.dims[1]
                        )));
                    }
                    blocks.push(b.clone());
                }
                if map.len() != dc {
                    return Err(Error::InvalidDimension(format!(
                        "Multiplexer control map has {} entries for control dimension {dc}",
                        map.len()
                    )));
                }
                multiplexer(&blocks, tol)?
            }
            GateKind::Custom => {
                let u = self.payload.as_ref().ok_or_else(|| {
                    Error::InvalidDimension("Custom gate needs a payload matrix".into())
                })?;
                if u.dim() != self.total_dim() {
                    return Err(Error::InvalidDimension(format!(
                        "Custom payload size {} does not match dims {:?}",
                        u.dim(),
                        self.dims
                    )));
                }
                u.require_unitary(tol)?;
                u.clone()
            }
        };
        Ok(apply_power(&base, self.power))
    }
}

fn apply_power<T: Real>(base: &Mat<T>, power: i64) -> Mat<T> {
    if power >= 0 {
        base.powi(power as u64)
    } else {
        base.dagger().powi(power.unsigned_abs())
    }
}
