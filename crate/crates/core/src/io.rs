//! On-disk formats: learning-curve CSVs, cross-seed summaries, checkpoints
//! and run manifests. Everything is UTF-8 text.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! parsing a file back yields the exact values that were written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::critic::CriticParams;
use crate::error::{Error, Result};
use crate::optim::AdamState;
use crate::policy::{PolicyParams, N_AXES, N_LAYERS, N_QUBITS};
use crate::ppo::{mean_std, AgentState, EpisodeRecord, TrainerConfig, MOVING_AVG_WINDOW};

pub const CURVE_HEADER: &str = "episode,return,moving_avg_100,seconds";
pub const SUMMARY_HEADER: &str =
    "episode,mean_return,std_return,mean_moving_avg_100,window_std_100";
pub const STATS_HEADER: &str = "seed,episodes,mean_return,std_return,final100_mean,final100_std";
pub const CHECKPOINT_FORMAT: &str = "qrl-checkpoint/1";

pub fn curve_csv(records: &[EpisodeRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{},{},{},{}", r.episode, r.total_return, r.moving_avg, r.seconds).unwrap();
    }
    out
}

pub fn write_curve_csv(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    fs::write(path, curve_csv(records))?;
    Ok(())
}

/// One parsed data row of a learning-curve CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub episode: usize,
    pub total_return: f64,
    pub moving_avg: f64,
    pub seconds: f64,
}

pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CURVE_HEADER => {}
        other => return Err(Error::Input(format!("unexpected curve header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            let bad = || Error::Input(format!("malformed curve row {}: {line:?}", i + 1));
            if fields.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(CurveRow {
                episode: fields[0].parse().map_err(|_| bad())?,
                total_return: num(fields[1])?,
                moving_avg: num(fields[2])?,
                seconds: num(fields[3])?,
            })
        })
        .collect()
}

fn trailing(values: &[f64], end: usize) -> &[f64] {
    &values[(end + 1).saturating_sub(MOVING_AVG_WINDOW)..=end]
}

/// Per-episode aggregate across seeds: mean and std of the returns, mean
/// moving average, and the mean over seeds of the trailing-window std.
pub fn summary_csv(curves: &[Vec<EpisodeRecord>]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    let returns: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| c.iter().map(|r| r.total_return).collect())
        .collect();
    for i in 0..len {
        let at: Vec<f64> = returns.iter().map(|r| r[i]).collect();
        let (mean, std) = mean_std(&at);
        let ma: Vec<f64> = curves.iter().map(|c| c[i].moving_avg).collect();
        let window_std: Vec<f64> = returns.iter().map(|r| mean_std(trailing(r, i)).1).collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            i + 1,
            mean,
            std,
            mean_std(&ma).0,
            mean_std(&window_std).0
        )
        .unwrap();
    }
    out
}

/// One row per seed with overall and final-window statistics.
pub fn stats_csv(seeds: &[u64], curves: &[Vec<EpisodeRecord>]) -> String {
    let mut out = String::new();
    out.push_str(STATS_HEADER);
    out.push('\n');
    let mut all = Vec::new();
    for (seed, curve) in seeds.iter().zip(curves) {
        let returns: Vec<f64> = curve.iter().map(|r| r.total_return).collect();
        let (m, s) = mean_std(&returns);
        let (fm, fs) = mean_std(&returns[returns.len().saturating_sub(MOVING_AVG_WINDOW)..]);
        writeln!(out, "{seed},{},{m},{s},{fm},{fs}", returns.len()).unwrap();
        all.extend(returns);
    }
    let (m, s) = mean_std(&all);
    writeln!(out, "all,{},{m},{s},,", all.len()).unwrap();
    out
}

/// Git-style content hash (`blob <len>\0<bytes>`, SHA-256) of the
/// canonical JSON form of the config.
pub fn config_hash(config: &TrainerConfig) -> String {
    let body = serde_json::to_string(config).expect("config serializes");
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySection {
    pub shape: [usize; 3],
    pub values: PolicyParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSection {
    pub actor: AdamState,
    pub critic: AdamState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub seed: u64,
    pub episode: usize,
    pub config_hash: String,
    pub policy: PolicySection,
    pub critic: CriticParams,
    pub optimizers: OptimizerSection,
}

impl Checkpoint {
    pub fn new(agent: &AgentState, config: &TrainerConfig, episode: usize) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            seed: config.seed,
            episode,
            config_hash: config_hash(config),
            policy: PolicySection {
                shape: [N_LAYERS, N_QUBITS, N_AXES],
                values: agent.policy.clone(),
            },
            critic: agent.critic.clone(),
            optimizers: OptimizerSection {
                actor: agent.actor_opt.clone(),
                critic: agent.critic_opt.clone(),
            },
        }
    }

    pub fn agent(&self) -> AgentState {
        AgentState {
            policy: self.policy.values.clone(),
            critic: self.critic.clone(),
            actor_opt: self.optimizers.actor.clone(),
            critic_opt: self.optimizers.critic.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format {:?}", ckpt.format)));
        }
        if ckpt.policy.shape != [N_LAYERS, N_QUBITS, N_AXES] {
            return Err(Error::Checkpoint(format!("policy shape {:?}", ckpt.policy.shape)));
        }
        let opt_ok = |o: &AdamState, n: usize| o.m.len() == n && o.v.len() == n;
        if !opt_ok(&ckpt.optimizers.actor, ckpt.policy.values.as_slice().len())
            || !opt_ok(&ckpt.optimizers.critic, ckpt.critic.as_slice().len())
        {
            return Err(Error::Checkpoint("optimizer state does not match parameters".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Written before a run starts; enough to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: TrainerConfig,
    pub seeds: Vec<u64>,
    pub start_time: String,
    pub artifacts: Vec<PathBuf>,
    pub config_hash: String,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
