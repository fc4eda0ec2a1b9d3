use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, ValueTarget};
use crate::error::{Error, Result};
use crate::nhpi::NhpiConfig;

/// Everything a training or reference run needs. Defaults target the
/// 8-event USI task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub task: String,
    /// Seed of the ground-truth task parameters (shared by all run seeds).
    pub task_seed: u64,
    pub seed: u64,
    pub max_env_steps: u64,
    pub warmup_trajectories: usize,
    pub warmup_nhpi_epochs: usize,
    /// NHPI gradient steps after each training episode.
    pub nhpi_refresh_steps: usize,
    pub nhpi_batch: usize,
    /// Monte-Carlo integral samples per sequence; 0 integrates by quadrature.
    pub nhpi_mc_samples: usize,
    pub nhpi_lr: f64,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub model_lr: f64,
    pub value_hidden: Vec<usize>,
    pub policy_hidden: Vec<usize>,
    pub transition_hidden: Vec<usize>,
    pub reward_hidden: Vec<usize>,
    pub heads: usize,
    pub attn_layers: usize,
    pub key_dim: usize,
    pub value_dim: usize,
    pub embed_dim: usize,
    pub max_len: usize,
    pub rho: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub trajectory_capacity: usize,
    pub polyak: f64,
    pub temperature: f64,
    pub temperature_decay: f64,
    pub temperature_min: f64,
    pub value_target: ValueTarget,
    pub imagine_tau: bool,
    pub max_grad_norm: f64,
    /// Loss rows are averaged over this many updates.
    pub log_every: u64,
    /// Frozen-policy evaluation every this many training episodes (0 = never).
    pub eval_every: u64,
    pub eval_episodes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: "8usi".into(),
            task_seed: 0,
            seed: 0,
            max_env_steps: 150_000,
            warmup_trajectories: 64,
            warmup_nhpi_epochs: 5,
            nhpi_refresh_steps: 5,
            nhpi_batch: 8,
            nhpi_mc_samples: 256,
            nhpi_lr: 1e-4,
            policy_lr: 1e-4,
            value_lr: 1e-4,
            model_lr: 1e-4,
            value_hidden: vec![128, 64],
            policy_hidden: vec![128, 64],
            transition_hidden: vec![128],
            reward_hidden: vec![128],
            heads: 1,
            attn_layers: 2,
            key_dim: 16,
            value_dim: 16,
            embed_dim: 64,
            max_len: 512,
            rho: 0.01,
            batch_size: 64,
            buffer_capacity: 100_000,
            trajectory_capacity: 1000,
            polyak: 0.005,
            temperature: 1.0,
            temperature_decay: 1.0,
            temperature_min: 0.3,
            value_target: ValueTarget::Real,
            imagine_tau: true,
            max_grad_norm: 10.0,
            log_every: 100,
            eval_every: 0,
            eval_episodes: 5,
        }
    }
}

const LR_GRID: [f64; 3] = [1e-4, 3e-4, 1e-3];
const DIM_GRID: [usize; 3] = [16, 32, 64];
const RHO_GRID: [f64; 2] = [0.01, 0.1];

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !crate::env::TASK_NAMES.contains(&self.task.as_str()) {
            return Err(Error::UnknownTask(self.task.clone()));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity must be >= batch_size >= 1".into());
        }
        if self.trajectory_capacity == 0 || self.nhpi_batch == 0 {
            return bad("trajectory_capacity and nhpi_batch must be >= 1".into());
        }
        if self.warmup_trajectories == 0 {
            return bad("warmup_trajectories must be >= 1".into());
        }
        if self.log_every == 0 {
            return bad("log_every must be >= 1".into());
        }
        if !(self.nhpi_lr >= 0.0) || !(self.max_grad_norm > 0.0) {
            return bad("nhpi_lr must be >= 0 and max_grad_norm > 0".into());
        }
        self.nhpi_config(2).validate()?;
        self.agent_config(1, 2).validate()
    }

    /// Fields whose values lie outside the documented search grid.
    pub fn off_grid(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut lr = |name: &str, v: f64| {
            if !LR_GRID.iter().any(|g| (g - v).abs() < 1e-15) {
                out.push(format!("{name}={v}"));
            }
        };
        lr("policy_lr", self.policy_lr);
        lr("value_lr", self.value_lr);
        lr("model_lr", self.model_lr);
        lr("nhpi_lr", self.nhpi_lr);
        let mlp_ok = |h: &[usize]| h == [128, 64] || h == [256, 128] || h == [64, 32];
        if !mlp_ok(&self.value_hidden) {
            out.push(format!("value_hidden={:?}", self.value_hidden));
        }
        if !mlp_ok(&self.policy_hidden) {
            out.push(format!("policy_hidden={:?}", self.policy_hidden));
        }
        for (name, h) in [("transition_hidden", &self.transition_hidden), ("reward_hidden", &self.reward_hidden)] {
            if !(h.len() == 1 && [64, 128, 256].contains(&h[0])) {
                out.push(format!("{name}={h:?}"));
            }
        }
        if !DIM_GRID.contains(&self.key_dim) || self.key_dim != self.value_dim {
            out.push(format!("key_dim={}, value_dim={}", self.key_dim, self.value_dim));
        }
        if !(1..=2).contains(&self.heads) || self.attn_layers != 2 {
            out.push(format!("heads={}, attn_layers={}", self.heads, self.attn_layers));
        }
        if self.embed_dim != 64 {
            out.push(format!("embed_dim={}", self.embed_dim));
        }
        if !RHO_GRID.iter().any(|g| (g - self.rho).abs() < 1e-15) {
            out.push(format!("rho={}", self.rho));
        }
        out
    }

    pub fn nhpi_config(&self, num_types: usize) -> NhpiConfig {
        NhpiConfig {
            num_types,
            embed_dim: self.embed_dim,
            action_dim: 16,
            action_hidden: 16,
            attn_layers: self.attn_layers,
            heads: self.heads,
            key_dim: self.key_dim,
            value_dim: self.value_dim,
            ffn_hidden: self.embed_dim,
            max_len: self.max_len,
        }
    }

    pub fn agent_config(&self, state_dim: usize, num_choices: usize) -> AgentConfig {
        AgentConfig {
            state_dim,
            num_choices,
            value_hidden: self.value_hidden.clone(),
            policy_hidden: self.policy_hidden.clone(),
            transition_hidden: self.transition_hidden.clone(),
            reward_hidden: self.reward_hidden.clone(),
            rho: self.rho,
            policy_lr: self.policy_lr,
            value_lr: self.value_lr,
            model_lr: self.model_lr,
            polyak: self.polyak,
            temperature: self.temperature,
            temperature_decay: self.temperature_decay,
            temperature_min: self.temperature_min,
            value_target: self.value_target,
            imagine_tau: self.imagine_tau,
            max_grad_norm: Some(self.max_grad_norm),
            straight_through: true,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
