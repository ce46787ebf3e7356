//! PPO training loop for the quantum actor and classical critic.
//!
//! By default one update phase per episode: the episode's transitions are
//! collected on-policy, `k_epochs` passes of clipped-surrogate and L1-critic
//! updates run over them in order, then the buffer is cleared.
//! `update_every` adds update phases inside long episodes.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cartpole::{env_reset, env_step, TAU};
use crate::critic::CriticParams;
use crate::error::{Error, Result};
use crate::optim::AdamState;
use crate::policy::{
    expectations, policy_forward_with_temperature, policy_score, sample_action,
    ActionDistribution, PolicyParams, N_ACTIONS, N_PARAMS,
};

pub const MOVING_AVG_WINDOW: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TdTargetMode {
    /// `y = R + gamma * V(s')`
    CriticV,
    /// `y = R + gamma * max_a <Y_a>(s')` using the policy circuit outputs.
    MaxQ,
}

impl std::str::FromStr for TdTargetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "critic_v" => Ok(Self::CriticV),
            "max_q" => Ok(Self::MaxQ),
            other => Err(Error::Config(format!("unknown td target mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub lam: f64,
    pub clip_eps: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub k_epochs: usize,
    pub episodes: usize,
    pub seed: u64,
    pub td_target_mode: TdTargetMode,
    pub softmax_temperature: f64,
    /// Probability of replacing the policy's action by a uniform one; 0 disables.
    pub epsilon_greedy: f64,
    /// Run an update phase after this many steps as well as at episode
    /// end; 0 updates only at episode end.
    #[serde(default)]
    pub update_every: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.98,
            lam: 0.95,
            clip_eps: 0.01,
            lr_actor: 1e-3,
            lr_critic: 1e-5,
            k_epochs: 10,
            episodes: 2000,
            seed: 0,
            td_target_mode: TdTargetMode::CriticV,
            softmax_temperature: 1.0,
            epsilon_greedy: 0.0,
            update_every: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("lam", self.lam)?;
        unit("epsilon_greedy", self.epsilon_greedy)?;
        if !(self.clip_eps.is_finite() && self.clip_eps > 0.0) {
            return Err(Error::Config(format!("clip_eps must be > 0, got {}", self.clip_eps)));
        }
        for (name, lr) in [("lr_actor", self.lr_actor), ("lr_critic", self.lr_critic)] {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {lr}")));
            }
        }
        if self.k_epochs == 0 {
            return Err(Error::Config("k_epochs must be at least 1".into()));
        }
        if !(self.softmax_temperature.is_finite() && self.softmax_temperature > 0.0) {
            return Err(Error::Config(format!(
                "softmax_temperature must be > 0, got {}",
                self.softmax_temperature
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub s: [f64; 4],
    pub a: usize,
    pub reward: f64,
    pub s_next: [f64; 4],
    /// Behavior probability of `a` when it was taken.
    pub prob_a: f64,
    pub done: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBuffer {
    transitions: Vec<Transition>,
}

impl RolloutBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn extend(&mut self, other: RolloutBuffer) {
        self.transitions.extend(other.transitions);
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }
}

impl FromIterator<Transition> for RolloutBuffer {
    fn from_iter<I: IntoIterator<Item = Transition>>(iter: I) -> Self {
        Self {
            transitions: iter.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_return: f64,
    pub moving_avg: f64,
    /// Simulated episode duration (`steps * tau`).
    pub seconds: f64,
    /// Wall-clock time spent on the episode, including its update phase.
    pub wall_seconds: f64,
}

/// Anything that turns an observation into an action distribution.
pub trait Behavior {
    fn distribution(&mut self, obs: &[f64; 4], rng: &mut ChaCha8Rng) -> Result<ActionDistribution>;
}

/// The trained circuit, optionally mixed with uniform exploration.
pub struct CircuitPolicy<'a> {
    pub params: &'a PolicyParams,
    pub temperature: f64,
    pub epsilon_greedy: f64,
}

impl Behavior for CircuitPolicy<'_> {
    fn distribution(&mut self, obs: &[f64; 4], _rng: &mut ChaCha8Rng) -> Result<ActionDistribution> {
        let d = policy_forward_with_temperature(self.params, obs, self.temperature)?;
        Ok(mix_uniform(d, self.epsilon_greedy))
    }
}

/// Draws a fresh uniform `[0, 1)` parameter block at every step.
pub struct RandomCircuit {
    pub temperature: f64,
}

impl Behavior for RandomCircuit {
    fn distribution(&mut self, obs: &[f64; 4], rng: &mut ChaCha8Rng) -> Result<ActionDistribution> {
        let params = PolicyParams::random(rng);
        policy_forward_with_temperature(&params, obs, self.temperature)
    }
}

/// A state-independent distribution.
pub struct FixedDistribution(pub ActionDistribution);

impl Behavior for FixedDistribution {
    fn distribution(&mut self, _obs: &[f64; 4], _rng: &mut ChaCha8Rng) -> Result<ActionDistribution> {
        Ok(self.0)
    }
}

fn mix_uniform(d: ActionDistribution, eps: f64) -> ActionDistribution {
    if eps == 0.0 {
        return d;
    }
    let u = 1.0 / N_ACTIONS as f64;
    ActionDistribution {
        probs: [(1.0 - eps) * d.probs[0] + eps * u, (1.0 - eps) * d.probs[1] + eps * u],
    }
}

/// Runs one episode from a fresh reset and returns its transitions.
pub fn collect_episode<B: Behavior + ?Sized>(
    behavior: &mut B,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutBuffer> {
    let mut state = env_reset(rng);
    let mut buffer = RolloutBuffer::new();
    loop {
        let s = state.obs();
        let dist = behavior.distribution(&s, rng)?;
        let a = sample_action(&dist, rng);
        let (next, step) = env_step(&state, a)?;
        buffer.push(Transition {
            s,
            a,
            reward: step.reward,
            s_next: step.obs,
            prob_a: dist.probs[a],
            done: step.done,
        });
        state = next;
        if step.done {
            return Ok(buffer);
        }
    }
}

pub fn td_targets(
    buffer: &RolloutBuffer,
    critic: &CriticParams,
    policy: &PolicyParams,
    config: &TrainerConfig,
) -> Result<Vec<f64>> {
    buffer
        .transitions()
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.reward);
            }
            let next_value = match config.td_target_mode {
                TdTargetMode::CriticV => critic.forward(&t.s_next),
                TdTargetMode::MaxQ => {
                    let e = expectations(policy, &t.s_next)?;
                    e[0].max(e[1])
                }
            };
            Ok(t.reward + config.gamma * next_value)
        })
        .collect()
}

/// `delta_j = y_j - V(s_j)` accumulated backward with factor `gamma * lam`,
/// restarting at every `done`.
pub fn compute_gae(
    buffer: &RolloutBuffer,
    critic: &CriticParams,
    targets: &[f64],
    config: &TrainerConfig,
) -> Vec<f64> {
    let ts = buffer.transitions();
    assert_eq!(ts.len(), targets.len(), "one target per transition");
    let decay = config.gamma * config.lam;
    let mut adv = vec![0.0; ts.len()];
    let mut running = 0.0;
    for j in (0..ts.len()).rev() {
        if ts[j].done {
            running = 0.0;
        }
        let delta = targets[j] - critic.forward(&ts[j].s);
        running = delta + decay * running;
        adv[j] = running;
    }
    adv
}

/// Clipped surrogate for one sample and whether the gradient flows
/// through the unclipped branch.
pub fn clipped_objective(ratio: f64, advantage: f64, clip_eps: f64) -> (f64, bool) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    let active = if advantage >= 0.0 {
        ratio <= 1.0 + clip_eps
    } else {
        ratio >= 1.0 - clip_eps
    };
    (unclipped.min(clipped), active)
}

/// Parameters and optimizer state of a learning agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub policy: PolicyParams,
    pub critic: CriticParams,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
}

impl AgentState {
    /// Policy from `U[0,1)`, then the critic, both drawn from `rng`.
    pub fn init(config: &TrainerConfig, rng: &mut ChaCha8Rng) -> Self {
        let policy = PolicyParams::random(rng);
        let critic = CriticParams::init(rng);
        Self::from_parts(policy, critic, config)
    }

    pub fn from_parts(policy: PolicyParams, critic: CriticParams, config: &TrainerConfig) -> Self {
        Self {
            actor_opt: AdamState::new(N_PARAMS, config.lr_actor),
            critic_opt: AdamState::new(critic.as_slice().len(), config.lr_critic),
            policy,
            critic,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
}

/// Per-sample pieces of the actor gradient for one epoch.
pub struct ActorTerms {
    pub ratios: Vec<f64>,
    pub actor_loss: f64,
    pub grad: [f64; N_PARAMS],
    pub clip_fraction: f64,
}

/// Clipped-surrogate loss `-mean(min(r A, clip(r) A))` and its gradient.
pub fn actor_terms(
    policy: &PolicyParams,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    config: &TrainerConfig,
) -> Result<ActorTerms> {
    let n = buffer.len() as f64;
    let eps_greedy = config.epsilon_greedy;
    let mut grad = [0.0; N_PARAMS];
    let mut ratios = Vec::with_capacity(buffer.len());
    let mut objective = 0.0;
    let mut clipped = 0usize;
    for (t, &adv) in buffer.transitions().iter().zip(advantages) {
        let score = policy_score(policy, &t.s, config.softmax_temperature)?;
        let p = score.dist.probs[t.a];
        let prob = (1.0 - eps_greedy) * p + eps_greedy / N_ACTIONS as f64;
        let ratio = prob / t.prob_a;
        let (obj, active) = clipped_objective(ratio, adv, config.clip_eps);
        objective += obj;
        ratios.push(ratio);
        if !active {
            clipped += 1;
            continue;
        }
        if adv == 0.0 {
            continue;
        }
        // d(-r A)/dtheta = -A r grad log pi
        let scale = -adv * ratio * (1.0 - eps_greedy) * p / prob / n;
        for (g, d) in grad.iter_mut().zip(&score.grad_log_probs[t.a]) {
            *g += scale * d;
        }
    }
    Ok(ActorTerms {
        ratios,
        actor_loss: -objective / n,
        grad,
        clip_fraction: clipped as f64 / n,
    })
}

/// `mean |V(s) - y|` and its gradient with respect to the critic.
pub fn critic_terms(critic: &CriticParams, buffer: &RolloutBuffer, targets: &[f64]) -> (f64, CriticParams) {
    let n = buffer.len() as f64;
    let mut grad = CriticParams::zeros();
    let mut loss = 0.0;
    for (t, &y) in buffer.transitions().iter().zip(targets) {
        let diff = critic.forward(&t.s) - y;
        loss += diff.abs();
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        critic.accumulate_grad(&t.s, sign / n, &mut grad);
    }
    (loss / n, grad)
}

/// Runs `k_epochs` clipped-PPO passes over `buffer`, then clears it.
pub fn ppo_update(
    agent: &mut AgentState,
    buffer: &mut RolloutBuffer,
    config: &TrainerConfig,
) -> Result<Vec<EpochStats>> {
    if buffer.is_empty() {
        return Err(Error::Usage("ppo_update called with an empty buffer".into()));
    }
    let mut stats = Vec::with_capacity(config.k_epochs);
    for _ in 0..config.k_epochs {
        let targets = td_targets(buffer, &agent.critic, &agent.policy, config)?;
        let advantages = compute_gae(buffer, &agent.critic, &targets, config);
        let actor = actor_terms(&agent.policy, buffer, &advantages, config)?;
        let (critic_loss, critic_grad) = critic_terms(&agent.critic, buffer, &targets);

        agent.actor_opt.step(agent.policy.as_mut_slice(), &actor.grad)?;
        agent
            .critic_opt
            .step(agent.critic.as_mut_slice(), critic_grad.as_slice())?;

        stats.push(EpochStats {
            actor_loss: actor.actor_loss,
            critic_loss,
            mean_ratio: actor.ratios.iter().sum::<f64>() / actor.ratios.len() as f64,
            clip_fraction: actor.clip_fraction,
        });
    }
    buffer.clear();
    Ok(stats)
}

/// Tracks returns and produces [`EpisodeRecord`]s with a trailing average.
#[derive(Clone, Debug, Default)]
pub struct ReturnTracker {
    returns: Vec<f64>,
}

impl ReturnTracker {
    pub fn record(&mut self, total_return: f64, steps: usize, wall_seconds: f64) -> EpisodeRecord {
        self.returns.push(total_return);
        let window = &self.returns[self.returns.len().saturating_sub(MOVING_AVG_WINDOW)..];
        EpisodeRecord {
            episode: self.returns.len(),
            total_return,
            moving_avg: window.iter().sum::<f64>() / window.len() as f64,
            seconds: steps as f64 * TAU,
            wall_seconds,
        }
    }
}

pub struct TrainingRun {
    pub records: Vec<EpisodeRecord>,
    pub initial: AgentState,
    pub agent: AgentState,
}

pub fn train(config: &TrainerConfig) -> Result<TrainingRun> {
    train_with(config, |_, _| {})
}

/// Like [`train`], calling `on_episode` after every update phase.
pub fn train_with<F>(config: &TrainerConfig, mut on_episode: F) -> Result<TrainingRun>
where
    F: FnMut(&EpisodeRecord, &[EpochStats]),
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut agent = AgentState::init(config, &mut rng);
    let initial = agent.clone();
    let mut tracker = ReturnTracker::default();
    let mut records = Vec::with_capacity(config.episodes);
    for _ in 0..config.episodes {
        let start = Instant::now();
        let mut state = env_reset(&mut rng);
        let mut buffer = RolloutBuffer::new();
        let mut total = 0.0;
        let mut stats = Vec::new();
        loop {
            let s = state.obs();
            let dist = CircuitPolicy {
                params: &agent.policy,
                temperature: config.softmax_temperature,
                epsilon_greedy: config.epsilon_greedy,
            }
            .distribution(&s, &mut rng)?;
            let a = sample_action(&dist, &mut rng);
            let (next, step) = env_step(&state, a)?;
            total += step.reward;
            buffer.push(Transition {
                s,
                a,
                reward: step.reward,
                s_next: step.obs,
                prob_a: dist.probs[a],
                done: step.done,
            });
            state = next;
            if step.done || buffer.len() == config.update_every {
                stats = ppo_update(&mut agent, &mut buffer, config)?;
            }
            if step.done {
                break;
            }
        }
        let record = tracker.record(total, state.steps as usize, start.elapsed().as_secs_f64());
        on_episode(&record, &stats);
        records.push(record);
    }
    Ok(TrainingRun {
        records,
        initial,
        agent,
    })
}

/// Episodes driven by a freshly drawn random parameter block at every step.
pub fn random_baseline(config: &TrainerConfig) -> Result<Vec<EpisodeRecord>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut behavior = RandomCircuit {
        temperature: config.softmax_temperature,
    };
    let mut tracker = ReturnTracker::default();
    (0..config.episodes)
        .map(|_| {
            let start = Instant::now();
            let buffer = collect_episode(&mut behavior, &mut rng)?;
            let total: f64 = buffer.transitions().iter().map(|t| t.reward).sum();
            Ok(tracker.record(total, buffer.len(), start.elapsed().as_secs_f64()))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Sample,
    Argmax,
}

/// Episode returns of a fixed policy; no learning.
pub fn evaluate(
    params: &PolicyParams,
    temperature: f64,
    episodes: usize,
    seed: u64,
    mode: EvalMode,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..episodes)
        .map(|_| {
            let mut state = env_reset(&mut rng);
            let mut total = 0.0;
            loop {
                let dist = policy_forward_with_temperature(params, &state.obs(), temperature)?;
                let a = match mode {
                    EvalMode::Sample => sample_action(&dist, &mut rng),
                    EvalMode::Argmax => dist.argmax(),
                };
                let (next, step) = env_step(&state, a)?;
                total += step.reward;
                state = next;
                if step.done {
                    return Ok(total);
                }
            }
        })
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
