//! The 4-qubit variational policy circuit and its softmax action head.
//!
//! Layout (one gate per line, wires `0..4`):
//!
//! ```text
//! RY(pi * s_i)                 encoding, each wire
//! layer(W[0]); CNOT chain      RX, RY, RZ per wire, then CNOT(0,1) (1,2) (2,3)
//! layer(W[1]); CNOT chain
//! layer(W[2]); CNOT chain
//! layer(W[3])
//! CNOT(0,2); CNOT(1,3)
//! measure <Y_2>, <Y_3>
//! ```

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{
    parameter_shift_jacobian, run_circuit, CircuitSpec, GateKind, GateOp, Observable, PauliAxis,
};

pub const N_QUBITS: usize = 4;
pub const N_LAYERS: usize = 4;
pub const N_AXES: usize = 3;
pub const N_PARAMS: usize = N_LAYERS * N_QUBITS * N_AXES;
pub const N_ACTIONS: usize = 2;

/// Per-component scale applied before clamping: cart position, cart
/// velocity, pole angle, pole angular velocity.
pub const OBS_BOUNDS: [f64; 4] = [2.4, 3.0, 0.2095, 3.0];

/// Trainable angles `W[layer][qubit][axis]`, axis order (X, Y, Z),
/// flattened row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolicyParams([f64; N_PARAMS]);

impl PolicyParams {
    pub fn zeros() -> Self {
        Self([0.0; N_PARAMS])
    }

    /// Uniform on `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut w = [0.0; N_PARAMS];
        for x in w.iter_mut() {
            *x = rng.gen::<f64>();
        }
        Self(w)
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != N_PARAMS {
            return Err(Error::Arity {
                expected: N_PARAMS,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("policy parameters must be finite".into()));
        }
        let mut w = [0.0; N_PARAMS];
        w.copy_from_slice(values);
        Ok(Self(w))
    }

    pub fn index(layer: usize, qubit: usize, axis: usize) -> usize {
        (layer * N_QUBITS + qubit) * N_AXES + axis
    }

    pub fn get(&self, layer: usize, qubit: usize, axis: usize) -> f64 {
        self.0[Self::index(layer, qubit, axis)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl TryFrom<Vec<f64>> for PolicyParams {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::from_slice(&v)
    }
}

impl From<PolicyParams> for Vec<f64> {
    fn from(p: PolicyParams) -> Self {
        p.0.to_vec()
    }
}

/// Encoding angles, each in `[-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncodedState([f64; N_QUBITS]);

impl EncodedState {
    pub fn angles(&self) -> &[f64; N_QUBITS] {
        &self.0
    }
}

pub fn encode_state(obs: &[f64; 4]) -> Result<EncodedState> {
    let mut angles = [0.0; N_QUBITS];
    for (i, (&x, &bound)) in obs.iter().zip(&OBS_BOUNDS).enumerate() {
        if !x.is_finite() {
            return Err(Error::Input(format!("observation component {i} is {x}")));
        }
        angles[i] = PI * (x / bound).clamp(-1.0, 1.0);
    }
    Ok(EncodedState(angles))
}

/// The policy ansatz for one encoded state. Trainable angles are bound at
/// run time through [`PolicyParams::as_slice`].
pub fn build_policy_circuit(enc: &EncodedState) -> CircuitSpec {
    let mut ops = Vec::with_capacity(63);
    for (wire, &angle) in enc.0.iter().enumerate() {
        ops.push(GateOp::ry(wire, angle));
    }
    for layer in 0..N_LAYERS {
        for qubit in 0..N_QUBITS {
            for (axis, kind) in [GateKind::Rx, GateKind::Ry, GateKind::Rz].into_iter().enumerate() {
                ops.push(GateOp::trainable(kind, qubit, PolicyParams::index(layer, qubit, axis)));
            }
        }
        if layer + 1 < N_LAYERS {
            for i in 0..N_QUBITS - 1 {
                ops.push(GateOp::cnot(i, i + 1));
            }
        }
    }
    ops.push(GateOp::cnot(0, 2));
    ops.push(GateOp::cnot(1, 3));
    let observables = vec![
        Observable::new(PauliAxis::Y, 2),
        Observable::new(PauliAxis::Y, 3),
    ];
    CircuitSpec::new(N_QUBITS, ops, observables).expect("policy circuit is well formed")
}

/// `(<Y_2>, <Y_3>)` for the given observation.
pub fn expectations(params: &PolicyParams, obs: &[f64; 4]) -> Result<[f64; 2]> {
    let spec = build_policy_circuit(&encode_state(obs)?);
    let e = run_circuit(&spec, params.as_slice())?;
    Ok([e[0], e[1]])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionDistribution {
    pub probs: [f64; N_ACTIONS],
}

impl ActionDistribution {
    pub fn new(probs: [f64; N_ACTIONS]) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("{probs:?} is not a distribution")));
        }
        Ok(Self { probs })
    }

    pub fn argmax(&self) -> usize {
        if self.probs[1] > self.probs[0] {
            1
        } else {
            0
        }
    }
}

pub fn softmax(logits: [f64; N_ACTIONS], temperature: f64) -> ActionDistribution {
    let z = [logits[0] / temperature, logits[1] / temperature];
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let s = e[0] + e[1];
    ActionDistribution {
        probs: [e[0] / s, e[1] / s],
    }
}

pub fn policy_forward(params: &PolicyParams, obs: &[f64; 4]) -> Result<ActionDistribution> {
    policy_forward_with_temperature(params, obs, 1.0)
}

pub fn policy_forward_with_temperature(
    params: &PolicyParams,
    obs: &[f64; 4],
    temperature: f64,
) -> Result<ActionDistribution> {
    Ok(softmax(expectations(params, obs)?, temperature))
}

pub fn sample_action<R: Rng + ?Sized>(dist: &ActionDistribution, rng: &mut R) -> usize {
    if rng.gen::<f64>() < dist.probs[0] {
        0
    } else {
        1
    }
}

/// Log-probabilities of both actions together with their gradients.
#[derive(Clone, Debug)]
pub struct PolicyScore {
    pub dist: ActionDistribution,
    pub log_probs: [f64; N_ACTIONS],
    pub grad_log_probs: [[f64; N_PARAMS]; N_ACTIONS],
}

/// Chains the softmax Jacobian `(delta_ab - p_b) / T` with the
/// parameter-shift Jacobian of the two expectations.
pub fn policy_score(params: &PolicyParams, obs: &[f64; 4], temperature: f64) -> Result<PolicyScore> {
    let spec = build_policy_circuit(&encode_state(obs)?);
    let e = run_circuit(&spec, params.as_slice())?;
    let jac = parameter_shift_jacobian(&spec, params.as_slice())?;
    let dist = softmax([e[0], e[1]], temperature);
    let p = dist.probs;
    let mut grad_log_probs = [[0.0; N_PARAMS]; N_ACTIONS];
    for (a, grad) in grad_log_probs.iter_mut().enumerate() {
        let coef = [
            (if a == 0 { 1.0 } else { 0.0 } - p[0]) / temperature,
            (if a == 1 { 1.0 } else { 0.0 } - p[1]) / temperature,
        ];
        for (k, g) in grad.iter_mut().enumerate() {
            *g = coef[0] * jac[0][k] + coef[1] * jac[1][k];
        }
    }
    Ok(PolicyScore {
        dist,
        log_probs: [p[0].ln(), p[1].ln()],
        grad_log_probs,
    })
}

pub fn log_prob_and_grad(
    params: &PolicyParams,
    obs: &[f64; 4],
    action: usize,
    temperature: f64,
) -> Result<(f64, [f64; N_PARAMS])> {
    if action >= N_ACTIONS {
        return Err(Error::Input(format!("action {action} out of range")));
    }
    let score = policy_score(params, obs, temperature)?;
    Ok((score.log_probs[action], score.grad_log_probs[action]))
}
