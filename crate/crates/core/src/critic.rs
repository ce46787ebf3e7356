//! State-value network `V(s) = w2 . relu(W1 s + b1) + b2` with a 256-wide
//! hidden layer and hand-written backprop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INPUT: usize = 4;
pub const HIDDEN: usize = 256;

const W1: std::ops::Range<usize> = 0..HIDDEN * INPUT;
const B1: std::ops::Range<usize> = W1.end..W1.end + HIDDEN;
const W2: std::ops::Range<usize> = B1.end..B1.end + HIDDEN;
const B2: usize = W2.end;
pub const N_CRITIC_PARAMS: usize = B2 + 1;

/// All critic weights in one contiguous buffer: `W1` (row-major,
/// `HIDDEN x INPUT`), `b1`, `w2`, `b2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CriticRepr", into = "CriticRepr")]
pub struct CriticParams {
    flat: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CriticRepr {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl From<CriticParams> for CriticRepr {
    fn from(p: CriticParams) -> Self {
        Self {
            w1: p.w1().to_vec(),
            b1: p.b1().to_vec(),
            w2: p.w2().to_vec(),
            b2: p.b2(),
        }
    }
}

impl TryFrom<CriticRepr> for CriticParams {
    type Error = Error;

    fn try_from(r: CriticRepr) -> Result<Self> {
        for (name, len, want) in [
            ("w1", r.w1.len(), W1.len()),
            ("b1", r.b1.len(), HIDDEN),
            ("w2", r.w2.len(), HIDDEN),
        ] {
            if len != want {
                return Err(Error::Checkpoint(format!("critic {name} has {len} entries, expected {want}")));
            }
        }
        let mut flat = Vec::with_capacity(N_CRITIC_PARAMS);
        flat.extend(r.w1);
        flat.extend(r.b1);
        flat.extend(r.w2);
        flat.push(r.b2);
        Self::from_flat(flat)
    }
}

impl CriticParams {
    pub fn zeros() -> Self {
        Self {
            flat: vec![0.0; N_CRITIC_PARAMS],
        }
    }

    /// Fan-in uniform initialization: hidden layer `U(-1/2, 1/2)`, output
    /// layer `U(-1/16, 1/16)`.
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let hidden_bound = 1.0 / (INPUT as f64).sqrt();
        let out_bound = 1.0 / (HIDDEN as f64).sqrt();
        let mut flat = Vec::with_capacity(N_CRITIC_PARAMS);
        for _ in 0..B1.end {
            flat.push(rng.gen_range(-hidden_bound..hidden_bound));
        }
        for _ in B1.end..N_CRITIC_PARAMS {
            flat.push(rng.gen_range(-out_bound..out_bound));
        }
        Self { flat }
    }

    pub fn from_flat(flat: Vec<f64>) -> Result<Self> {
        if flat.len() != N_CRITIC_PARAMS {
            return Err(Error::Arity {
                expected: N_CRITIC_PARAMS,
                got: flat.len(),
            });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("critic parameters must be finite".into()));
        }
        Ok(Self { flat })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn w1(&self) -> &[f64] {
        &self.flat[W1]
    }

    pub fn b1(&self) -> &[f64] {
        &self.flat[B1]
    }

    pub fn w2(&self) -> &[f64] {
        &self.flat[W2]
    }

    pub fn b2(&self) -> f64 {
        self.flat[B2]
    }

    pub fn w1_mut(&mut self) -> &mut [f64] {
        &mut self.flat[W1]
    }

    pub fn b1_mut(&mut self) -> &mut [f64] {
        &mut self.flat[B1]
    }

    pub fn w2_mut(&mut self) -> &mut [f64] {
        &mut self.flat[W2]
    }

    pub fn set_b2(&mut self, v: f64) {
        self.flat[B2] = v;
    }

    fn preactivation(&self, obs: &[f64; INPUT], r: usize) -> f64 {
        let row = &self.w1()[r * INPUT..(r + 1) * INPUT];
        self.b1()[r] + row.iter().zip(obs).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn forward(&self, obs: &[f64; INPUT]) -> f64 {
        let w2 = self.w2();
        let mut v = self.b2();
        for (r, &w) in w2.iter().enumerate() {
            let z = self.preactivation(obs, r);
            if z > 0.0 {
                v += w * z;
            }
        }
        v
    }

    /// Gradient of `loss_grad * V(obs)` with respect to every parameter.
    /// The ReLU derivative at exactly zero is taken as 0.
    pub fn backward(&self, obs: &[f64; INPUT], loss_grad: f64) -> CriticParams {
        let mut grad = CriticParams::zeros();
        self.accumulate_grad(obs, loss_grad, &mut grad);
        grad
    }

    /// Adds the gradient of `loss_grad * V(obs)` into `grad`.
    pub fn accumulate_grad(&self, obs: &[f64; INPUT], loss_grad: f64, grad: &mut CriticParams) {
        if loss_grad == 0.0 {
            return;
        }
        for r in 0..HIDDEN {
            let z = self.preactivation(obs, r);
            if z > 0.0 {
                grad.flat[W2.start + r] += loss_grad * z;
                let dz = loss_grad * self.w2()[r];
                grad.flat[B1.start + r] += dz;
                for (i, x) in obs.iter().enumerate() {
                    grad.flat[r * INPUT + i] += dz * x;
                }
            }
        }
        grad.flat[B2] += loss_grad;
    }
}

pub fn critic_forward(params: &CriticParams, obs: &[f64; INPUT]) -> f64 {
    params.forward(obs)
}

pub fn critic_backward(params: &CriticParams, obs: &[f64; INPUT], loss_grad: f64) -> CriticParams {
    params.backward(obs, loss_grad)
}
