//! Dense statevector simulation for few-qubit circuits.
//!
//! Wire 0 is the most significant bit of the amplitude index, so on two
//! qubits the basis order is `|00>, |01>, |10>, |11>` with the left label
//! belonging to wire 0. Rotations follow `R_P(theta) = exp(-i theta P / 2)`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One complex amplitude of a statevector.
pub type ComplexAmp = Complex64;

pub const MAX_QUBITS: usize = 16;

const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<ComplexAmp>,
}

impl Statevector {
    /// `|0...0>` on `n_qubits` wires.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        let mut amps = vec![ComplexAmp::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = ComplexAmp::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two and the
    /// vector must already be normalized.
    pub fn from_amplitudes(amps: Vec<ComplexAmp>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Input(format!("amplitude count {len} is not 2^n")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Input("non-finite amplitude".into()));
        }
        let state = Self { n_qubits, amps };
        if (state.norm_sqr() - 1.0).abs() > NORM_TOL {
            return Err(Error::Input(format!(
                "state is not normalized (norm^2 = {})",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amps(&self) -> &[ComplexAmp] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.n_qubits {
            Err(Error::Index {
                wire,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Applies `op` in place with the given rotation angle (ignored for CNOT).
    fn apply_with_angle(&mut self, kind: GateKind, wires: Wires, angle: f64) -> Result<()> {
        match (kind, wires) {
            (GateKind::Cnot, Wires::Pair { control, target }) => {
                self.check_wire(control)?;
                self.check_wire(target)?;
                if control == target {
                    return Err(Error::InvalidGate("CNOT control equals target".into()));
                }
                let cm = self.mask(control);
                let tm = self.mask(target);
                for i in 0..self.amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
                Ok(())
            }
            (GateKind::Cnot, Wires::Single(_)) => {
                Err(Error::InvalidGate("CNOT needs a control and a target".into()))
            }
            (_, Wires::Pair { .. }) => Err(Error::InvalidGate(format!(
                "{kind:?} acts on a single wire"
            ))),
            (rot, Wires::Single(wire)) => {
                self.check_wire(wire)?;
                if !angle.is_finite() {
                    return Err(Error::InvalidGate(format!("non-finite angle {angle}")));
                }
                let u = rotation_matrix(rot, angle);
                self.apply_single(wire, &u);
                Ok(())
            }
        }
    }

    fn apply_single(&mut self, wire: usize, u: &[[ComplexAmp; 2]; 2]) {
        let m = self.mask(wire);
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let j = i | m;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = u[0][0] * a + u[0][1] * b;
                self.amps[j] = u[1][0] * a + u[1][1] * b;
            }
        }
    }

    /// Applies a gate whose angle is fixed (or absent, for CNOT).
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        let angle = match (op.kind, op.angle) {
            (GateKind::Cnot, _) => 0.0,
            (_, Some(a)) => a,
            (_, None) => {
                return Err(Error::InvalidGate(
                    "trainable rotation applied without a parameter vector".into(),
                ))
            }
        };
        self.apply_with_angle(op.kind, op.wires, angle)
    }

    /// `<psi| P |psi>` for a single-qubit Pauli on one wire.
    pub fn expectation(&self, obs: Observable) -> Result<f64> {
        self.check_wire(obs.wire)?;
        let m = self.mask(obs.wire);
        let mut acc = ComplexAmp::new(0.0, 0.0);
        for i in 0..self.amps.len() {
            let a = self.amps[i];
            let bit = i & m != 0;
            // (P psi)_i
            let p_psi = match obs.axis {
                PauliAxis::Z => {
                    if bit {
                        -a
                    } else {
                        a
                    }
                }
                PauliAxis::X => self.amps[i ^ m],
                PauliAxis::Y => {
                    // Y = [[0, -i], [i, 0]]
                    let other = self.amps[i ^ m];
                    if bit {
                        ComplexAmp::i() * other
                    } else {
                        -ComplexAmp::i() * other
                    }
                }
            };
            acc += a.conj() * p_psi;
        }
        debug_assert!(acc.im.abs() < NORM_TOL, "imaginary expectation {}", acc.im);
        Ok(acc.re.clamp(-1.0, 1.0))
    }
}

fn rotation_matrix(kind: GateKind, angle: f64) -> [[ComplexAmp; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    let zero = ComplexAmp::new(0.0, 0.0);
    match kind {
        GateKind::Rx => [
            [ComplexAmp::new(c, 0.0), ComplexAmp::new(0.0, -s)],
            [ComplexAmp::new(0.0, -s), ComplexAmp::new(c, 0.0)],
        ],
        GateKind::Ry => [
            [ComplexAmp::new(c, 0.0), ComplexAmp::new(-s, 0.0)],
            [ComplexAmp::new(s, 0.0), ComplexAmp::new(c, 0.0)],
        ],
        GateKind::Rz => [
            [ComplexAmp::new(c, -s), zero],
            [zero, ComplexAmp::new(c, s)],
        ],
        GateKind::Cnot => unreachable!("CNOT has no rotation matrix"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        !matches!(self, GateKind::Cnot)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wires {
    Single(usize),
    Pair { control: usize, target: usize },
}

/// A gate in a circuit. Rotations carry either a fixed `angle` or a
/// `param_index` into the circuit's trainable parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub wires: Wires,
    pub angle: Option<f64>,
    pub param_index: Option<usize>,
}

impl GateOp {
    pub fn rotation(kind: GateKind, wire: usize, angle: f64) -> Self {
        Self {
            kind,
            wires: Wires::Single(wire),
            angle: Some(angle),
            param_index: None,
        }
    }

    pub fn trainable(kind: GateKind, wire: usize, param_index: usize) -> Self {
        Self {
            kind,
            wires: Wires::Single(wire),
            angle: None,
            param_index: Some(param_index),
        }
    }

    pub fn rx(wire: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Rx, wire, angle)
    }

    pub fn ry(wire: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Ry, wire, angle)
    }

    pub fn rz(wire: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Rz, wire, angle)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            wires: Wires::Pair { control, target },
            angle: None,
            param_index: None,
        }
    }

    /// The inverse gate: negated angle for rotations, itself for CNOT.
    pub fn inverse(&self) -> Self {
        Self {
            angle: self.angle.map(|a| -a),
            ..*self
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |wire: usize| {
            if wire >= n_qubits {
                Err(Error::Index { wire, n_qubits })
            } else {
                Ok(())
            }
        };
        match (self.kind, self.wires) {
            (GateKind::Cnot, Wires::Pair { control, target }) => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(Error::InvalidGate("CNOT control equals target".into()));
                }
                if self.angle.is_some() {
                    return Err(Error::InvalidGate("CNOT takes no angle".into()));
                }
            }
            (GateKind::Cnot, Wires::Single(_)) => {
                return Err(Error::InvalidGate("CNOT needs a control and a target".into()))
            }
            (kind, Wires::Pair { .. }) => {
                return Err(Error::InvalidGate(format!("{kind:?} acts on a single wire")))
            }
            (_, Wires::Single(w)) => {
                check(w)?;
                match (self.angle, self.param_index) {
                    (Some(a), None) if a.is_finite() => {}
                    (Some(a), None) => {
                        return Err(Error::InvalidGate(format!("non-finite angle {a}")))
                    }
                    (None, Some(_)) => {}
                    _ => {
                        return Err(Error::InvalidGate(
                            "rotation needs exactly one of angle or param_index".into(),
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observable {
    pub axis: PauliAxis,
    pub wire: usize,
}

impl Observable {
    pub fn new(axis: PauliAxis, wire: usize) -> Self {
        Self { axis, wire }
    }
}

/// An ordered gate list plus the observables measured at the end.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    n_qubits: usize,
    ops: Vec<GateOp>,
    observables: Vec<Observable>,
    n_params: usize,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize, ops: Vec<GateOp>, observables: Vec<Observable>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        for op in &ops {
            op.validate(n_qubits)?;
        }
        for obs in &observables {
            if obs.wire >= n_qubits {
                return Err(Error::Index {
                    wire: obs.wire,
                    n_qubits,
                });
            }
        }
        let mut seen: Vec<usize> = ops.iter().filter_map(|op| op.param_index).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::InvalidGate(
                "param_index values must form a contiguous range starting at 0".into(),
            ));
        }
        Ok(Self {
            n_qubits,
            ops,
            observables,
            n_params: seen.len(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::Arity {
                expected: self.n_params,
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Final state, optionally shifting the angle of a single op by `delta`.
    fn bound_angle(&self, op: &GateOp, params: &[f64]) -> f64 {
        match op.param_index {
            Some(k) if op.kind.is_rotation() => params[k],
            _ => op.angle.unwrap_or(0.0),
        }
    }

    fn evolve(&self, params: &[f64]) -> Result<Statevector> {
        let mut state = Statevector::zero(self.n_qubits)?;
        for op in &self.ops {
            state.apply_with_angle(op.kind, op.wires, self.bound_angle(op, params))?;
        }
        Ok(state)
    }

    /// The statevector right before measurement.
    pub fn final_state(&self, params: &[f64]) -> Result<Statevector> {
        self.check_params(params)?;
        self.evolve(params)
    }

    fn measure(&self, state: &Statevector) -> Result<Vec<f64>> {
        self.observables
            .iter()
            .map(|&obs| state.expectation(obs))
            .collect()
    }

    fn trainable_ops(&self) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for (i, op) in self.ops.iter().enumerate() {
            if let Some(k) = op.param_index {
                if !op.kind.is_rotation() {
                    return Err(Error::UnsupportedGate(i));
                }
                out.push((i, k));
            }
        }
        Ok(out)
    }
}

pub fn new_zero_state(n_qubits: usize) -> Result<Statevector> {
    Statevector::zero(n_qubits)
}

pub fn apply_gate(state: &Statevector, op: &GateOp) -> Result<Statevector> {
    let mut next = state.clone();
    next.apply(op)?;
    Ok(next)
}

pub fn expectation(state: &Statevector, obs: Observable) -> Result<f64> {
    state.expectation(obs)
}

/// Runs `spec` from `|0...0>` and returns one expectation per observable.
pub fn run_circuit(spec: &CircuitSpec, params: &[f64]) -> Result<Vec<f64>> {
    let state = spec.final_state(params)?;
    spec.measure(&state)
}

/// Parameter-shift Jacobian: `jac[o][k] = d<O_o>/d param_k`.
///
/// Every occurrence of a parameter is shifted separately by `+-pi/2` and
/// the contributions are summed, so shared parameters are handled exactly.
pub fn parameter_shift_jacobian(spec: &CircuitSpec, params: &[f64]) -> Result<Vec<Vec<f64>>> {
    spec.check_params(params)?;
    let trainable = spec.trainable_ops()?;
    let mut jac = vec![vec![0.0; spec.n_params]; spec.observables.len()];
    // The state before each shifted op is shared by both shifts, so it is
    // advanced once and branched from.
    let mut prefix = Statevector::zero(spec.n_qubits)?;
    let mut done = 0;
    for (op_index, k) in trainable {
        for op in &spec.ops[done..op_index] {
            prefix.apply_with_angle(op.kind, op.wires, spec.bound_angle(op, params))?;
        }
        done = op_index;
        let shifted = |delta: f64| -> Result<Vec<f64>> {
            let mut state = prefix.clone();
            let op = &spec.ops[op_index];
            state.apply_with_angle(op.kind, op.wires, spec.bound_angle(op, params) + delta)?;
            for op in &spec.ops[op_index + 1..] {
                state.apply_with_angle(op.kind, op.wires, spec.bound_angle(op, params))?;
            }
            spec.measure(&state)
        };
        let plus = shifted(FRAC_PI_2)?;
        let minus = shifted(-FRAC_PI_2)?;
        for (row, (p, m)) in jac.iter_mut().zip(plus.iter().zip(&minus)) {
            row[k] += 0.5 * (p - m);
        }
    }
    Ok(jac)
}

/// Gradient of observable `obs_index` with respect to every parameter.
pub fn parameter_shift_grad(
    spec: &CircuitSpec,
    params: &[f64],
    obs_index: usize,
) -> Result<Vec<f64>> {
    if obs_index >= spec.observables.len() {
        return Err(Error::Index {
            wire: obs_index,
            n_qubits: spec.observables.len(),
        });
    }
    let mut jac = parameter_shift_jacobian(spec, params)?;
    Ok(jac.swap_remove(obs_index))
}

/// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
pub fn bloch_state(theta: f64, phi: f64) -> Result<Statevector> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} not in [0, pi]")));
    }
    if !phi.is_finite() {
        return Err(Error::Domain(format!("phi = {phi} is not finite")));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(Statevector {
        n_qubits: 1,
        amps: vec![
            ComplexAmp::new(c, 0.0),
            ComplexAmp::from_polar(s, phi),
        ],
    })
}
