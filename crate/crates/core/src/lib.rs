//! Quantum reinforcement learning on CartPole: a 4-qubit variational
//! policy circuit simulated exactly, trained with PPO against a small
//! classical critic.
//!
//! * [`qsim`]: dense statevector simulator with parameter-shift gradients
//! * [`policy`]: the policy ansatz, state encoding and softmax head
//! * [`critic`]: 4-256-1 ReLU value network
//! * [`optim`]: the Adam optimizer
//! * [`cartpole`]: CartPole-v0 dynamics
//! * [`ppo`]: rollouts, TD targets, GAE, clipped surrogate updates
//! * [`io`]: CSV curves, checkpoints and run manifests

pub mod cartpole;
pub mod critic;
pub mod error;
pub mod io;
pub mod optim;
pub mod policy;
pub mod ppo;
pub mod qsim;

pub use cartpole::{env_reset, env_step, EnvState, StepResult};
pub use critic::{critic_backward, critic_forward, CriticParams};
pub use error::{Error, Result};
pub use io::{Checkpoint, RunManifest};
pub use optim::{adam_step, AdamState};
pub use policy::{
    build_policy_circuit, encode_state, log_prob_and_grad, policy_forward, sample_action,
    ActionDistribution, EncodedState, PolicyParams,
};
pub use ppo::{
    collect_episode, compute_gae, evaluate, ppo_update, random_baseline, td_targets, train,
    train_with, AgentState, EpisodeRecord, EvalMode, RolloutBuffer, TdTargetMode, TrainerConfig,
    TrainingRun, Transition,
};
pub use qsim::{
    apply_gate, bloch_state, expectation, new_zero_state, parameter_shift_grad, run_circuit,
    CircuitSpec, GateKind, GateOp, Observable, PauliAxis, Statevector,
};
