//! Dense state-vector simulation for mixed-dimension qudit registers.
//!
//! Amplitudes are stored in mixed-radix order with qudit 0 as the most
//! significant digit: |a, b, c> lives at index (a * d_b + b) * d_c + c. All
//! outcome labels in serialized output are digit tuples, never flat indices.
//! Gates apply to arbitrary (possibly non-adjacent, possibly reordered) axis
//! subsets by stride arithmetic; every application is followed by a norm
//! check against the configured tolerance.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ir::{Circuit, CircuitDag, Op};
use crate::matrix::Mat;
use crate::scalar::{czero, C, Real};
use crate::tol::Tolerances;

/// Decompose a flat index into per-qudit digits (qudit 0 most significant).
pub fn digits_of(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0usize; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        digits[k] = index % d;
        index /= d;
    }
    digits
}

/// Flat index of a digit tuple.
pub fn index_of(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&v, &d)| acc * d + v)
}

/// Dense state vector over a mixed-dimension register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    dims: Vec<usize>,
    amps: Vec<C<T>>,
}

impl<T: Real> StateVector<T> {
    /// |0...0> over the given dims.
    pub fn zero_state(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidDimension(format!("bad register dims {dims:?}")));
        }
        let n: usize = dims.iter().product();
        let mut amps = vec![czero(); n];
        amps[0] = C::new(T::one(), T::zero());
        Ok(StateVector { dims: dims.to_vec(), amps })
    }

    /// Basis state |digits>.
    pub fn basis_state(dims: &[usize], digits: &[usize]) -> Result<Self> {
        let mut s = Self::zero_state(dims)?;
        if digits.len() != dims.len() || digits.iter().zip(dims).any(|(&v, &d)| v >= d) {
            return Err(Error::InvalidDimension(format!(
                "digits {digits:?} out of range for dims {dims:?}"
            )));
        }
        s.amps[0] = czero();
        s.amps[index_of(digits, dims)] = C::new(T::one(), T::zero());
        Ok(s)
    }

    pub fn from_amplitudes(dims: &[usize], amps: Vec<C<T>>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.is_empty() || dims.iter().any(|&d| d < 2) || amps.len() != n {
            return Err(Error::InvalidDimension(format!(
                "amplitude count {} does not match dims {dims:?}",
                amps.len()
            )));
        }
        Ok(StateVector { dims: dims.to_vec(), amps })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn amplitude(&self, digits: &[usize]) -> C<T> {
        self.amps[index_of(digits, &self.dims)]
    }

    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |s, x| s + x)
            .sqrt()
    }

    fn stride(&self, axis: usize) -> usize {
        self.dims[axis + 1..].iter().product()
    }

    /// Apply a unitary on the given axes; `axes[0]` is the gate's most
    /// significant digit. Axes may be non-adjacent and in any order.
    pub fn apply_matrix(&mut self, u: &Mat<T>, axes: &[usize]) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for &a in axes {
            if a >= self.dims.len() || !seen.insert(a) {
                return Err(Error::InvalidDimension(format!(
                    "bad gate axes {axes:?} for {} qudits",
                    self.dims.len()
                )));
            }
        }
        let gate_dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let m: usize = gate_dims.iter().product();
        if u.dim() != m {
            return Err(Error::InvalidDimension(format!(
                "gate size {} does not match axes {axes:?} (product {m})",
                u.dim()
            )));
        }
        // Flat offset of each gate basis value.
        let mut offsets = vec![0usize; m];
        for (g, off) in offsets.iter_mut().enumerate() {
            let digits = digits_of(g, &gate_dims);
            *off = digits
                .iter()
                .zip(axes)
                .map(|(&v, &a)| v * self.stride(a))
                .sum();
        }
        let rest_axes: Vec<usize> =
            (0..self.dims.len()).filter(|a| !axes.contains(a)).collect();
        let rest_dims: Vec<usize> = rest_axes.iter().map(|&a| self.dims[a]).collect();
        let rest: usize = rest_dims.iter().product();

        let mut scratch = vec![czero(); m];
        for r in 0..rest {
            let rdigits = digits_of(r, &rest_dims);
            let base: usize = rdigits
                .iter()
                .zip(&rest_axes)
                .map(|(&v, &a)| v * self.stride(a))
                .sum();
            for (g, s) in scratch.iter_mut().enumerate() {
                *s = self.amps[base + offsets[g]];
            }
            let out = u.mul_vec(&scratch);
            for (g, o) in out.into_iter().enumerate() {
                self.amps[base + offsets[g]] = o;
            }
        }
        Ok(())
    }
}

impl<T: Real> Serialize for StateVector<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            dims: &'a [usize],
            re: Vec<f64>,
            im: Vec<f64>,
        }
        Wire {
            dims: &self.dims,
            re: self.amps.iter().map(|a| a.re.to_f64().unwrap()).collect(),
            im: self.amps.iter().map(|a| a.im.to_f64().unwrap()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for StateVector<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            dims: Vec<usize>,
            re: Vec<f64>,
            im: Vec<f64>,
        }
        let w = Wire::deserialize(deserializer)?;
        let n: usize = w.dims.iter().product();
        if w.re.len() != n || w.im.len() != n {
            return Err(D::Error::custom("amplitude count does not match dims"));
        }
        if w.re.iter().chain(&w.im).any(|x| !x.is_finite()) {
            return Err(D::Error::custom("amplitudes must be finite"));
        }
        let amps = w
            .re
            .iter()
            .zip(&w.im)
            .map(|(&re, &im)| C::new(T::lit(re), T::lit(im)))
            .collect();
        StateVector::from_amplitudes(&w.dims, amps).map_err(D::Error::custom)
    }
}

/// Execute a circuit DAG from |0...0> (or a caller-supplied state).
pub fn run_statevector<T: Real>(
    dag: &CircuitDag<T>,
    initial: Option<StateVector<T>>,
    tol: &Tolerances<T>,
) -> Result<StateVector<T>> {
    let dims = dag.circuit.qudit_dims();
    let mut state = match initial {
        Some(s) => {
            if s.dims() != dims.as_slice() {
                return Err(Error::InvalidDimension(format!(
                    "initial state dims {:?} do not match circuit dims {dims:?}",
                    s.dims()
                )));
            }
            s
        }
        None => StateVector::zero_state(&dims)?,
    };
    let axis_of: std::collections::HashMap<usize, usize> =
        dag.circuit.qudits.iter().enumerate().map(|(i, q)| (q.id, i)).collect();
    for op in &dag.circuit.ops {
        let Op::Gate { gate, targets } = op else { continue };
        let u = gate.matrix(tol.unitarity_tol)?;
        let axes: Vec<usize> = targets.iter().map(|id| axis_of[id]).collect();
        state.apply_matrix(&u, &axes)?;
        let drift = (state.norm() - T::one()).abs();
        if drift > tol.norm_tol {
            return Err(Error::NormDrift { drift: drift.to_f64().unwrap_or(f64::NAN) });
        }
    }
    Ok(state)
}

/// Measurement histogram with the sampling provenance needed to reproduce
/// it: shot count, seed, and the RNG algorithm identifier.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountsResult {
    pub shots: u64,
    pub seed: u64,
    pub rng: String,
    /// Outcome digit tuple (comma-joined, one digit per measured qudit,
    /// in the order passed to `sample`) -> occurrence count.
    pub counts: BTreeMap<String, u64>,
}

/// Sample measurement outcomes for the given qudits from the exact marginal
/// distribution. The state is not collapsed; measurement is terminal in the
/// IR so nothing ever observes a post-measurement state.
pub fn sample<T: Real>(
    state: &StateVector<T>,
    measured: &[usize],
    shots: u64,
    seed: u64,
) -> Result<CountsResult> {
    if shots == 0 {
        return Err(Error::InvalidDimension("need at least one shot".into()));
    }
    if measured.is_empty() {
        return Err(Error::InvalidDimension("no qudits to measure".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &id in measured {
        if id >= state.dims().len() || !seen.insert(id) {
            return Err(Error::InvalidDimension(format!("bad measured qudit id {id}")));
        }
    }
    let mdims: Vec<usize> = measured.iter().map(|&id| state.dims()[id]).collect();
    let outcomes: usize = mdims.iter().product();
    let mut marginal = vec![T::zero(); outcomes];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let digits = digits_of(i, state.dims());
        let key: Vec<usize> = measured.iter().map(|&id| digits[id]).collect();
        marginal[index_of(&key, &mdims)] += a.norm_sqr();
    }
    // Cumulative distribution; the final entry is clamped to cover any
    // sub-1e-10 norm deficit so a draw of u ~ 1 cannot fall off the end.
    let mut cdf = Vec::with_capacity(outcomes);
    let mut acc = T::zero();
    for &p in &marginal {
        acc += p;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies = vec![0u64; outcomes];
    for _ in 0..shots {
        let u: f64 = rng.gen_range(0.0..1.0);
        let u = T::lit(u);
        let idx = cdf.partition_point(|&c| c <= u).min(outcomes - 1);
        tallies[idx] += 1;
    }
    let mut counts = BTreeMap::new();
    for (idx, &n) in tallies.iter().enumerate() {
        if n > 0 {
            let digits = digits_of(idx, &mdims);
            let key = digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
            counts.insert(key, n);
        }
    }
    Ok(CountsResult { shots, seed, rng: "chacha8".into(), counts })
}

/// Contract a measurement-free circuit to its full unitary by running every
/// basis state through it.
pub fn contract_to_unitary<T: Real>(c: &Circuit<T>, tol: &Tolerances<T>) -> Result<Mat<T>> {
    let n = c.total_dim();
    if n > tol.contract_guard {
        return Err(Error::GuardExceeded {
            what: "contraction dimension".into(),
            value: n,
            limit: tol.contract_guard,
        });
    }
    let dims = c.qudit_dims();
    let axis_of: std::collections::HashMap<usize, usize> =
        c.qudits.iter().enumerate().map(|(i, q)| (q.id, i)).collect();
    // Resolve every gate once.
    let mut resolved: Vec<(Mat<T>, Vec<usize>)> = Vec::with_capacity(c.ops.len());
    for op in &c.ops {
        match op {
            Op::Measure { .. } => {
                return Err(Error::Circuit("cannot contract a circuit with measurements".into()))
            }
            Op::Gate { gate, targets } => {
                let u = gate.matrix(tol.unitarity_tol)?;
                let axes = targets.iter().map(|id| axis_of[id]).collect();
                resolved.push((u, axes));
            }
        }
    }
    let mut out = Mat::zeros(n, n);
    for col in 0..n {
        let digits = digits_of(col, &dims);
        let mut state = StateVector::basis_state(&dims, &digits)?;
        for (u, axes) in &resolved {
            state.apply_matrix(u, axes)?;
        }
        out.set_col(col, state.amplitudes());
    }
    out.require_unitary(tol.unitarity_tol.max(T::lit(1e-10)))?;
    Ok(out)
}
