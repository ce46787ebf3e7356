//! Dense-matrix oracles and random instance generators shared by the
//! integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qrl_core::qsim::{CircuitSpec, GateKind, GateOp, Observable, PauliAxis, Wires};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(axis: PauliAxis) -> CMat {
    match axis {
        PauliAxis::X => CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        PauliAxis::Y => CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        PauliAxis::Z => CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    }
}

/// exp(-i theta P / 2) = cos(theta/2) I - i sin(theta/2) P
pub fn rotation(axis: PauliAxis, theta: f64) -> CMat {
    CMat::identity(2, 2) * c((theta / 2.0).cos(), 0.0) - pauli(axis) * c(0.0, (theta / 2.0).sin())
}

/// Places one-qubit operators on the listed wires (identity elsewhere),
/// wire 0 leftmost in the Kronecker product.
pub fn embed(n: usize, ops: &[(usize, CMat)]) -> CMat {
    let mut full = CMat::identity(1, 1);
    for w in 0..n {
        let local = ops
            .iter()
            .find(|(wire, _)| *wire == w)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| CMat::identity(2, 2));
        full = full.kronecker(&local);
    }
    full
}

pub fn dense_gate(n: usize, op: &GateOp, angle: f64) -> CMat {
    let p0 = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
    let p1 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
    match (op.kind, op.wires) {
        (GateKind::Cnot, Wires::Pair { control, target }) => {
            embed(n, &[(control, p0)]) + embed(n, &[(control, p1), (target, pauli(PauliAxis::X))])
        }
        (kind, Wires::Single(w)) => {
            let axis = match kind {
                GateKind::Rx => PauliAxis::X,
                GateKind::Ry => PauliAxis::Y,
                _ => PauliAxis::Z,
            };
            embed(n, &[(w, rotation(axis, angle))])
        }
        _ => unreachable!(),
    }
}

pub fn dense_unitary(spec: &CircuitSpec, params: &[f64]) -> CMat {
    let n = spec.n_qubits();
    let mut u = CMat::identity(1 << n, 1 << n);
    for op in spec.ops() {
        let angle = op.param_index.map(|k| params[k]).or(op.angle).unwrap_or(0.0);
        u = dense_gate(n, op, angle) * u;
    }
    u
}

pub fn dense_state(spec: &CircuitSpec, params: &[f64]) -> DVector<Complex64> {
    let mut zero = DVector::from_element(1 << spec.n_qubits(), c(0.0, 0.0));
    zero[0] = c(1.0, 0.0);
    dense_unitary(spec, params) * zero
}

pub fn dense_expectation(n: usize, psi: &DVector<Complex64>, obs: Observable) -> f64 {
    let p = embed(n, &[(obs.wire, pauli(obs.axis))]);
    (psi.adjoint() * p * psi)[(0, 0)].re
}

pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, len: usize) -> (CircuitSpec, Vec<f64>) {
    let mut ops = Vec::with_capacity(len);
    let mut n_params = 0;
    for _ in 0..len {
        let pick = rng.gen_range(0..4);
        if pick == 3 && n > 1 {
            let control = rng.gen_range(0..n);
            let mut target = rng.gen_range(0..n - 1);
            if target >= control {
                target += 1;
            }
            ops.push(GateOp::cnot(control, target));
        } else {
            let kind = [GateKind::Rx, GateKind::Ry, GateKind::Rz][pick % 3];
            let wire = rng.gen_range(0..n);
            if rng.gen_bool(0.5) {
                ops.push(GateOp::trainable(kind, wire, n_params));
                n_params += 1;
            } else {
                ops.push(GateOp::rotation(kind, wire, rng.gen_range(-6.3..6.3)));
            }
        }
    }
    let observables = (0..n)
        .flat_map(|w| [PauliAxis::X, PauliAxis::Y, PauliAxis::Z].map(|a| Observable::new(a, w)))
        .collect();
    let params = (0..n_params).map(|_| rng.gen_range(-6.3..6.3)).collect();
    (CircuitSpec::new(n, ops, observables).unwrap(), params)
}

pub fn random_obs(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [
        rng.gen_range(-2.4..2.4),
        rng.gen_range(-3.0..3.0),
        rng.gen_range(-0.21..0.21),
        rng.gen_range(-3.0..3.0),
    ]
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[k] += h;
            minus[k] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}
