//! CartPole-v0 dynamics with explicit Euler integration and a 200-step cap.

use rand::Rng;

use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
/// Half the pole length.
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const POLE_MASS_LENGTH: f64 = POLE_MASS * POLE_HALF_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const MAX_STEPS: u32 = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub steps: u32,
    pub terminated: bool,
}

impl EnvState {
    pub fn new(x: f64, x_dot: f64, theta: f64, theta_dot: f64) -> Self {
        Self {
            x,
            x_dot,
            theta,
            theta_dot,
            steps: 0,
            terminated: false,
        }
    }

    pub fn obs(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub obs: [f64; 4],
    pub reward: f64,
    pub done: bool,
}

/// Each component uniform on `[-0.05, 0.05)`.
pub fn env_reset<R: Rng + ?Sized>(rng: &mut R) -> EnvState {
    let mut draw = || rng.gen_range(-0.05..0.05);
    EnvState::new(draw(), draw(), draw(), draw())
}

/// Action 1 pushes right, action 0 pushes left.
pub fn env_step(state: &EnvState, action: usize) -> Result<(EnvState, StepResult)> {
    if state.terminated {
        return Err(Error::Usage("step called on a terminated episode".into()));
    }
    let force = match action {
        0 => -FORCE_MAG,
        1 => FORCE_MAG,
        _ => return Err(Error::Input(format!("action {action} out of range"))),
    };
    let (sin_t, cos_t) = state.theta.sin_cos();
    let temp = (force + POLE_MASS_LENGTH * state.theta_dot * state.theta_dot * sin_t) / TOTAL_MASS;
    let theta_acc = (GRAVITY * sin_t - cos_t * temp)
        / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t * cos_t / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS;

    let x = state.x + TAU * state.x_dot;
    let x_dot = state.x_dot + TAU * x_acc;
    let theta = state.theta + TAU * state.theta_dot;
    let theta_dot = state.theta_dot + TAU * theta_acc;
    let steps = state.steps + 1;

    let done = !(-X_THRESHOLD..=X_THRESHOLD).contains(&x)
        || !(-THETA_THRESHOLD..=THETA_THRESHOLD).contains(&theta)
        || steps >= MAX_STEPS;
    let next = EnvState {
        x,
        x_dot,
        theta,
        theta_dot,
        steps,
        terminated: done,
    };
    Ok((
        next,
        StepResult {
            obs: next.obs(),
            reward: 1.0,
            done,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reset_bounds_and_determinism() {
        for seed in 0..50 {
            let s = env_reset(&mut ChaCha8Rng::seed_from_u64(seed));
            assert!(s.obs().iter().all(|v| v.abs() <= 0.05));
            assert_eq!(s.steps, 0);
            assert_eq!(s, env_reset(&mut ChaCha8Rng::seed_from_u64(seed)));
        }
        let a = env_reset(&mut ChaCha8Rng::seed_from_u64(1));
        let b = env_reset(&mut ChaCha8Rng::seed_from_u64(2));
        assert_ne!(a, b);
    }

    #[test]
    fn single_push_right_from_rest() {
        let (s, r) = env_step(&EnvState::new(0.0, 0.0, 0.0, 0.0), 1).unwrap();
        assert_abs_diff_eq!(s.x_dot, 0.19512, epsilon = 1e-3);
        assert_abs_diff_eq!(s.theta_dot, -0.29268, epsilon = 1e-3);
        assert_eq!(s.x, 0.0);
        assert_eq!(s.theta, 0.0);
        assert_eq!(r.reward, 1.0);
        assert!(!r.done);
    }

    #[test]
    fn tilted_pole_ends_episode() {
        let (_, r) = env_step(&EnvState::new(0.0, 0.0, 0.22, 0.0), 0).unwrap();
        assert!(r.done);
    }

    #[test]
    fn stepping_after_done_is_usage_error() {
        let (s, _) = env_step(&EnvState::new(0.0, 0.0, 0.22, 0.0), 0).unwrap();
        assert!(matches!(env_step(&s, 0), Err(Error::Usage(_))));
        assert!(matches!(env_step(&EnvState::new(0.0, 0.0, 0.0, 0.0), 2), Err(Error::Input(_))));
    }

    #[test]
    fn episode_caps_at_200() {
        // Balance with a bang-bang controller on the pole's angular state.
        let mut s = EnvState::new(0.0, 0.0, 0.0, 0.0);
        let mut total = 0.0;
        loop {
            let a = usize::from(s.theta + 0.5 * s.theta_dot > 0.0);
            let (next, r) = env_step(&s, a).unwrap();
            total += r.reward;
            s = next;
            if r.done {
                break;
            }
        }
        assert_eq!(total, 200.0);
        assert_eq!(s.steps, 200);
    }

    #[test]
    fn mirrored_trajectory_is_exact_negation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let mut s = env_reset(&mut rng);
            let mut m = EnvState::new(-s.x, -s.x_dot, -s.theta, -s.theta_dot);
            loop {
                let a = rng.gen_range(0..2);
                let (ns, rs) = env_step(&s, a).unwrap();
                let (nm, rm) = env_step(&m, 1 - a).unwrap();
                assert_eq!(nm.obs(), ns.obs().map(|v| -v));
                assert_eq!((rm.reward, rm.done), (rs.reward, rs.done));
                if rs.done {
                    break;
                }
                (s, m) = (ns, nm);
            }
        }
    }
}
