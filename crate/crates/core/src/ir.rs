//! Circuit construction with linear-use qudit handles.
//!
//! A `QuditHandle` is consumed by every operation that touches it and a
//! fresh handle (same id, next generation) is returned, so stale handles are
//! rejected at construction time: the runtime analogue of enforcing
//! no-cloning through a borrow checker. Registers may mix dimensions freely;
//! qudit 0 is the most significant digit in all state indexing.
//!
//! `Circuit` is the immutable result; `CircuitDag` is its graph form where
//! vertices are qudit states (id, generation) and each two-qudit gate joins
//! its output vertices with two incoming edges.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{GateKind, GateRef};
use crate::matrix::Mat;
use crate::scalar::{C, Real};

/// Linear-use reference to one qudit at one point in circuit time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuditHandle {
    id: usize,
    dim: usize,
    generation: u64,
}

impl QuditHandle {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }
}

/// Declared qudit: stable id plus dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuditDecl {
    pub id: usize,
    pub dim: usize,
}

/// One circuit operation: a gate application or a measurement marker.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged, bound = "")]
pub enum Op<T: Real> {
    Gate { gate: GateRef<T>, targets: Vec<usize> },
    Measure { measure: Vec<usize> },
}

impl<T: Real> Op<T> {
    pub fn targets(&self) -> &[usize] {
        match self {
            Op::Gate { targets, .. } => targets,
            Op::Measure { measure } => measure,
        }
    }
}

/// An immutable, finished circuit.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Circuit<T: Real> {
    pub qudits: Vec<QuditDecl>,
    pub ops: Vec<Op<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn qudit_dims(&self) -> Vec<usize> {
        self.qudits.iter().map(|q| q.dim).collect()
    }

    pub fn dim_of(&self, id: usize) -> Option<usize> {
        self.qudits.iter().find(|q| q.id == id).map(|q| q.dim)
    }

    /// Total Hilbert-space dimension.
    pub fn total_dim(&self) -> usize {
        self.qudits.iter().map(|q| q.dim).product()
    }

    /// Measured qudit ids in marker order.
    pub fn measurement_order(&self) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        for op in &self.ops {
            if let Op::Measure { measure } = op {
                for &id in measure {
                    if seen.insert(id) {
                        order.push(id);
                    }
                }
            }
        }
        order
    }

    /// Structural checks for circuits from outside the builder: known ids,
    /// dims matching, nothing operating on a measured qudit.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for q in &self.qudits {
            if q.dim < 2 {
                return Err(Error::InvalidDimension(format!("qudit {} has dim {}", q.id, q.dim)));
            }
            if !ids.insert(q.id) {
                return Err(Error::Circuit(format!("duplicate qudit id {}", q.id)));
            }
        }
        let mut measured: BTreeSet<usize> = BTreeSet::new();
        for (i, op) in self.ops.iter().enumerate() {
            let targets = op.targets();
            if targets.is_empty() {
                return Err(Error::Circuit(format!("op {i} has no targets")));
            }
            let mut seen_in_op = BTreeSet::new();
            for &id in targets {
                if self.dim_of(id).is_none() {
                    return Err(Error::Circuit(format!("op {i} targets unknown qudit {id}")));
                }
                if !seen_in_op.insert(id) {
                    return Err(Error::Circuit(format!("op {i} targets qudit {id} twice")));
                }
                if measured.contains(&id) {
                    return Err(Error::Circuit(format!("op {i} uses measured qudit {id}")));
                }
            }
            match op {
                Op::Gate { gate, targets } => {
                    check_gate_dims(gate, &targets.iter().map(|&id| self.dim_of(id).unwrap()).collect::<Vec<_>>())?;
                }
                Op::Measure { measure } => {
                    measured.extend(measure.iter().copied());
                }
            }
        }
        Ok(())
    }

    /// Rewrite every recognized arity-3 op into two-qudit gates (the qutrit
    /// CCNOT construction); errors on any other op wider than two qudits.
    pub fn lower_arity(&self) -> Result<Circuit<T>> {
        let mut ops = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            match op {
                Op::Gate { gate, targets } if targets.len() > 2 => {
                    let lowered = lower_wide_gate(gate, targets)?;
                    ops.extend(lowered);
                }
                other => ops.push(other.clone()),
            }
        }
        Ok(Circuit { qudits: self.qudits.clone(), ops })
    }

    /// Convert to the DAG form (lowering wide gates first).
    pub fn to_dag(&self) -> Result<CircuitDag<T>> {
        let lowered = self.lower_arity()?;
        CircuitDag::from_lowered(lowered)
    }
}

fn check_gate_dims<T: Real>(gate: &GateRef<T>, target_dims: &[usize]) -> Result<()> {
    // ControlledU covers its whole target space with one payload, so its
    // dims are [control, product-of-targets]; a Multiplexer may select on
    // the joint value of several control wires (listed first, target last);
    // everything else matches the target dims entry for entry.
    let ok = match gate.kind {
        GateKind::ControlledU => {
            gate.dims.len() == 2
                && !target_dims.is_empty()
                && gate.dims[0] == target_dims[0]
                && gate.dims[1] == target_dims[1..].iter().product::<usize>()
        }
        GateKind::Multiplexer => {
            gate.dims.len() == 2
                && target_dims.len() >= 2
                && gate.dims[0]
                    == target_dims[..target_dims.len() - 1].iter().product::<usize>()
                && gate.dims[1] == *target_dims.last().unwrap()
        }
        _ => gate.dims == target_dims,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Circuit(format!(
            "gate dims {:?} do not match target dims {:?}",
            gate.dims, target_dims
        )))
    }
}

/// The arity-3 permutation |c1, q, t> -> |c1, q, t xor [c1 = 1 and q = 1]>
/// over (qubit, qutrit, qubit) that `Builder::ccnot` stores.
fn ccnot_payload<T: Real>() -> Mat<T> {
    let one = C::new(T::one(), T::zero());
    let mut m = Mat::zeros(12, 12);
    for c1 in 0..2usize {
        for q in 0..3usize {
            for t in 0..2usize {
                let flip = if c1 == 1 && q == 1 { 1 - t } else { t };
                let col = (c1 * 3 + q) * 2 + t;
                let row = (c1 * 3 + q) * 2 + flip;
                m[(row, col)] = one;
            }
        }
    }
    m
}

/// Swap |1> and |2> of a qutrit; used to promote the second CCNOT control.
fn promote_12<T: Real>() -> Mat<T> {
    let one = C::new(T::one(), T::zero());
    let mut m = Mat::zeros(3, 3);
    m[(0, 0)] = one;
    m[(1, 2)] = one;
    m[(2, 1)] = one;
    m
}

fn lower_wide_gate<T: Real>(gate: &GateRef<T>, targets: &[usize]) -> Result<Vec<Op<T>>> {
    let is_ccnot = gate.kind == GateKind::Custom
        && gate.dims == [2, 3, 2]
        && gate.power == 1
        && gate
            .payload
            .as_ref()
            .map_or(false, |p| p.max_abs_diff(&ccnot_payload()) < T::lit(1e-12));
    if !is_ccnot {
        return Err(Error::Circuit(format!(
            "cannot lower {:?} on {} qudits to two-qudit gates",
            gate.kind,
            targets.len()
        )));
    }
    let (c1, q, t) = (targets[0], targets[1], targets[2]);
    let mut promote = std::collections::BTreeMap::new();
    promote.insert(0usize, Mat::identity(3));
    promote.insert(1, promote_12::<T>());
    let promote_gate = GateRef::multiplexer(2, promote);

    let mut fire = std::collections::BTreeMap::new();
    fire.insert(0usize, Mat::identity(2));
    fire.insert(1, Mat::identity(2));
    fire.insert(2, crate::gates::pauli_x::<T>(2)?);
    let fire_gate = GateRef::multiplexer(3, fire);

    Ok(vec![
        Op::Gate { gate: promote_gate.clone(), targets: vec![c1, q] },
        Op::Gate { gate: fire_gate, targets: vec![q, t] },
        Op::Gate { gate: promote_gate, targets: vec![c1, q] },
    ])
}

/// Incremental circuit builder enforcing linear handle use.
pub struct Builder<T: Real> {
    qudits: Vec<QuditDecl>,
    ops: Vec<Op<T>>,
    generation: Vec<u64>,
    measured: Vec<bool>,
}

impl<T: Real> Default for Builder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Builder<T> {
    pub fn new() -> Self {
        Builder { qudits: Vec::new(), ops: Vec::new(), generation: Vec::new(), measured: Vec::new() }
    }

    pub fn qudit_count(&self) -> usize {
        self.qudits.len()
    }

    /// Fresh qudit in |0>.
    pub fn alloc_qudit(&mut self, d: usize) -> Result<QuditHandle> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("cannot allocate a dim-{d} qudit")));
        }
        let id = self.qudits.len();
        self.qudits.push(QuditDecl { id, dim: d });
        self.generation.push(0);
        self.measured.push(false);
        Ok(QuditHandle { id, dim: d, generation: 0 })
    }

    /// n fresh qudits of equal dimension.
    pub fn alloc_register(&mut self, d: usize, n: usize) -> Result<Vec<QuditHandle>> {
        if n == 0 {
            return Err(Error::InvalidDimension("register size must be >= 1".into()));
        }
        (0..n).map(|_| self.alloc_qudit(d)).collect()
    }

    fn consume(&mut self, h: &QuditHandle, allow_measured: bool) -> Result<()> {
        let id = h.id;
        if id >= self.qudits.len() || self.qudits[id].dim != h.dim {
            return Err(Error::Circuit(format!("handle {id} does not belong to this builder")));
        }
        if self.measured[id] && !allow_measured {
            return Err(Error::Circuit(format!("qudit {id} was already measured")));
        }
        if h.generation != self.generation[id] {
            return Err(Error::LinearityViolation(format!(
                "qudit {id} handle generation {} is stale (current {})",
                h.generation, self.generation[id]
            )));
        }
        self.generation[id] += 1;
        Ok(())
    }

    fn reissue(&self, h: &QuditHandle) -> QuditHandle {
        QuditHandle { id: h.id, dim: h.dim, generation: self.generation[h.id] }
    }

    /// Apply a gate; consumed handles are invalidated and reissued.
    pub fn apply(&mut self, gate: GateRef<T>, targets: Vec<QuditHandle>) -> Result<Vec<QuditHandle>> {
        if targets.is_empty() {
            return Err(Error::Circuit("gate needs at least one target".into()));
        }
        let mut ids = BTreeSet::new();
        for h in &targets {
            if !ids.insert(h.id) {
                return Err(Error::Circuit(format!("gate targets qudit {} twice", h.id)));
            }
        }
        check_gate_dims(&gate, &targets.iter().map(|h| h.dim).collect::<Vec<_>>())?;
        for h in &targets {
            self.consume(h, false)?;
        }
        let fresh = targets.iter().map(|h| self.reissue(h)).collect();
        self.ops.push(Op::Gate { gate, targets: targets.iter().map(|h| h.id).collect() });
        Ok(fresh)
    }

    /// Measure; terminal per qudit (no later operation may touch these ids).
    pub fn measure(&mut self, targets: Vec<QuditHandle>) -> Result<Vec<QuditHandle>> {
        if targets.is_empty() {
            return Err(Error::Circuit("measurement needs at least one target".into()));
        }
        for h in &targets {
            self.consume(h, false)?;
        }
        for h in &targets {
            self.measured[h.id] = true;
        }
        let fresh = targets.iter().map(|h| self.reissue(h)).collect();
        self.ops.push(Op::Measure { measure: targets.iter().map(|h| h.id).collect() });
        Ok(fresh)
    }

    /// Toffoli over (qubit, qutrit, qubit): the middle control rides the
    /// qutrit's third level. Stored as one op; `to_dag` lowers it.
    pub fn ccnot(
        &mut self,
        c1: QuditHandle,
        q: QuditHandle,
        t: QuditHandle,
    ) -> Result<(QuditHandle, QuditHandle, QuditHandle)> {
        if c1.dim != 2 || q.dim != 3 || t.dim != 2 {
            return Err(Error::InvalidDimension(format!(
                "ccnot wants dims (2, 3, 2), got ({}, {}, {})",
                c1.dim, q.dim, t.dim
            )));
        }
        let gate = GateRef::custom(vec![2, 3, 2], ccnot_payload());
        let mut out = self.apply(gate, vec![c1, q, t])?;
        let t = out.pop().unwrap();
        let q = out.pop().unwrap();
        let c1 = out.pop().unwrap();
        Ok((c1, q, t))
    }

    /// Quantum Fourier transform over a uniform-dimension register:
    /// Hadamard plus controlled-phase ladder, then index reversal by swaps.
    /// The block equals the d^n Fourier matrix (qudit 0 most significant).
    pub fn qft_block(&mut self, targets: Vec<QuditHandle>) -> Result<Vec<QuditHandle>> {
        let d = match targets.first() {
            Some(h) => h.dim,
            None => return Err(Error::Circuit("qft needs at least one qudit".into())),
        };
        if targets.iter().any(|h| h.dim != d) {
            return Err(Error::InvalidDimension("qft register must have uniform dimension".into()));
        }
        let n = targets.len();
        let mut hs: Vec<QuditHandle> = targets;
        for j in 0..n {
            let hj = hs[j].clone();
            hs[j] = self.apply(GateRef::h(d), vec![hj])?.pop().unwrap();
            for k in (j + 1)..n {
                let gate = controlled_phase_gate::<T>(d, k - j + 1);
                let (hk, hj2) = (hs[k].clone(), hs[j].clone());
                let mut out = self.apply(gate, vec![hk, hj2])?;
                hs[j] = out.pop().unwrap();
                hs[k] = out.pop().unwrap();
            }
        }
        self.reverse_register(&mut hs)?;
        Ok(hs)
    }

    /// Adjoint of `qft_block` (used by phase estimation).
    pub fn qft_block_inverse(&mut self, targets: Vec<QuditHandle>) -> Result<Vec<QuditHandle>> {
        let d = match targets.first() {
            Some(h) => h.dim,
            None => return Err(Error::Circuit("qft needs at least one qudit".into())),
        };
        if targets.iter().any(|h| h.dim != d) {
            return Err(Error::InvalidDimension("qft register must have uniform dimension".into()));
        }
        let n = targets.len();
        let mut hs: Vec<QuditHandle> = targets;
        self.reverse_register(&mut hs)?;
        for j in (0..n).rev() {
            for k in ((j + 1)..n).rev() {
                let gate = controlled_phase_gate::<T>(d, k - j + 1).inverse();
                let (hk, hj) = (hs[k].clone(), hs[j].clone());
                let mut out = self.apply(gate, vec![hk, hj])?;
                hs[j] = out.pop().unwrap();
                hs[k] = out.pop().unwrap();
            }
            let hj = hs[j].clone();
            hs[j] = self.apply(GateRef::h_dag(d), vec![hj])?.pop().unwrap();
        }
        Ok(hs)
    }

    fn reverse_register(&mut self, hs: &mut [QuditHandle]) -> Result<()> {
        let n = hs.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let d = hs[i].dim;
            let gate = GateRef::custom(vec![d, d], swap_matrix::<T>(d));
            let (a, b) = (hs[i].clone(), hs[j].clone());
            let mut out = self.apply(gate, vec![a, b])?;
            // A swap gate exchanges the logical contents, so the handle for
            // wire i now tracks what wire j carried and vice versa; handles
            // stay bound to their wires.
            hs[j] = out.pop().unwrap();
            hs[i] = out.pop().unwrap();
        }
        Ok(())
    }

    /// Phase estimation: Hadamards on the controls, the controlled-U^{d^k}
    /// ladder (control 0 carries the most significant digit), then the
    /// inverse Fourier transform on the controls.
    pub fn qpe_block(
        &mut self,
        u: &Mat<T>,
        controls: Vec<QuditHandle>,
        targets: Vec<QuditHandle>,
        tol: T,
    ) -> Result<(Vec<QuditHandle>, Vec<QuditHandle>)> {
        let d = match controls.first() {
            Some(h) => h.dim,
            None => return Err(Error::Circuit("qpe needs at least one control".into())),
        };
        if controls.iter().any(|h| h.dim != d) {
            return Err(Error::InvalidDimension("qpe controls must have uniform dimension".into()));
        }
        let t_dim: usize = targets.iter().map(|h| h.dim).product();
        if u.dim() != t_dim {
            return Err(Error::InvalidDimension(format!(
                "qpe unitary size {} does not match target space {}",
                u.dim(),
                t_dim
            )));
        }
        u.require_unitary(tol)?;
        let m = controls.len();
        let mut cs: Vec<QuditHandle> = controls;
        let mut ts: Vec<QuditHandle> = targets;
        for c in cs.iter_mut() {
            let h = c.clone();
            *c = self.apply(GateRef::h(d), vec![h])?.pop().unwrap();
        }
        for k in 0..m {
            // Control k weights the eigenphase by d^(m-1-k).
            let reps = (d as u64).pow((m - 1 - k) as u32);
            let u_pow = u.powi(reps);
            let gate = GateRef::controlled(u_pow, d);
            let mut handles = vec![cs[k].clone()];
            handles.extend(ts.iter().cloned());
            let mut out = self.apply(gate, handles)?;
            let new_ts = out.split_off(1);
            cs[k] = out.pop().unwrap();
            ts = new_ts;
        }
        let cs = self.qft_block_inverse(cs)?;
        Ok((cs, ts))
    }

    /// Finish and return the immutable circuit.
    pub fn build(self) -> Circuit<T> {
        Circuit { qudits: self.qudits, ops: self.ops }
    }
}

/// Two-qudit phase gate |a, b> -> omega^{ab} |a, b> with omega the
/// d^level-th root of unity, expressed as a controlled diagonal.
fn controlled_phase_gate<T: Real>(d: usize, level: usize) -> GateRef<T> {
    let m = (d as u64).pow(level as u32);
    let step = T::lit(2.0) * T::PI() / T::lit(m as f64);
    let diag: Vec<C<T>> = (0..d)
        .map(|b| crate::scalar::cis(step * T::from_usize(b).unwrap()))
        .collect();
    GateRef::controlled(Mat::from_diag(&diag), d)
}

fn swap_matrix<T: Real>(d: usize) -> Mat<T> {
    let one = C::new(T::one(), T::zero());
    let mut m = Mat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] = one;
        }
    }
    m
}

/// A qudit-state node: `qudit` id after `generation` operations on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagVertex {
    pub qudit: usize,
    pub generation: u64,
}

/// Directed edge produced by op `op_index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagEdge {
    pub from: usize,
    pub to: usize,
    pub op_index: usize,
}

/// Circuit as a DAG over qudit states. Single-qudit ops extend one chain;
/// two-qudit ops join both chains, giving each output vertex two incoming
/// edges. Ops appear in a valid topological order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CircuitDag<T: Real> {
    pub circuit: Circuit<T>,
    pub vertices: Vec<DagVertex>,
    pub edges: Vec<DagEdge>,
}

impl<T: Real> CircuitDag<T> {
    fn from_lowered(circuit: Circuit<T>) -> Result<Self> {
        circuit.validate()?;
        let nq = circuit.qudits.len();
        let mut vertices: Vec<DagVertex> = Vec::new();
        let mut frontier: Vec<usize> = Vec::with_capacity(nq);
        let mut generation = vec![0u64; nq];
        let index_of: std::collections::HashMap<usize, usize> =
            circuit.qudits.iter().enumerate().map(|(i, q)| (q.id, i)).collect();
        for q in &circuit.qudits {
            vertices.push(DagVertex { qudit: q.id, generation: 0 });
            frontier.push(vertices.len() - 1);
        }
        let mut edges = Vec::new();
        for (op_index, op) in circuit.ops.iter().enumerate() {
            let targets = op.targets();
            let joins = matches!(op, Op::Gate { .. });
            if joins && targets.len() > 2 {
                return Err(Error::Circuit(format!(
                    "op {op_index} still touches {} qudits after lowering",
                    targets.len()
                )));
            }
            let slots: Vec<usize> = targets.iter().map(|id| index_of[id]).collect();
            let ins: Vec<usize> = slots.iter().map(|&s| frontier[s]).collect();
            let mut outs = Vec::with_capacity(slots.len());
            for &s in &slots {
                generation[s] += 1;
                vertices.push(DagVertex { qudit: circuit.qudits[s].id, generation: generation[s] });
                let v = vertices.len() - 1;
                frontier[s] = v;
                outs.push(v);
            }
            if joins {
                for &from in &ins {
                    for &to in &outs {
                        edges.push(DagEdge { from, to, op_index });
                    }
                }
            } else {
                // Measurement markers record outcomes per qudit and do not
                // join wires: each measured chain just gets a terminal vertex.
                for (&from, &to) in ins.iter().zip(&outs) {
                    edges.push(DagEdge { from, to, op_index });
                }
            }
        }
        Ok(CircuitDag { circuit, vertices, edges })
    }

    /// Incoming edge count per vertex (allocation vertices have none).
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.vertices.len()];
        for e in &self.edges {
            deg[e.to] += 1;
        }
        deg
    }
}
