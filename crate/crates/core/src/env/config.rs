//! Task configuration and the synthetic fake-news mitigation tasks.
//!
//! Config files are flat TOML:
//!
//! ```toml
//! num_types = 8
//! action_set = [5, 6, 7, 8]
//! mu = [0.3, ...]            # K base rates
//! beta = [[...], ...]        # K x K, row j = effect of type j
//! zeta = 1.0
//! lambda_target = [0.3, 0.3, 0.3, 0.3]
//! horizon = 100.0
//! cost_weight = 0.1
//! action_cost = 1.0
//! schedule = "usi"           # "si" or "usi"
//! spacing = 0.1              # grid step (si) or clock tick (usi)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EpisodeSpec, Schedule, TrackingReward};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::tpp::HawkesParams;

pub const TASK_NAMES: [&str; 4] = ["8si", "8usi", "16si", "16usi"];

pub const SI_SPACING: f64 = 0.5;
pub const USI_TICK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Si,
    Usi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub num_types: usize,
    pub action_set: Vec<usize>,
    pub mu: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub zeta: f64,
    pub lambda_target: Vec<f64>,
    pub horizon: f64,
    pub cost_weight: f64,
    pub action_cost: f64,
    pub schedule: ScheduleKind,
    pub spacing: f64,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.hawkes_params()?;
        if p.num_types() != self.num_types {
            return Err(Error::InvalidParams(format!(
                "num_types {} but {} base rates",
                self.num_types,
                p.num_types()
            )));
        }
        self.episode_spec().validate(self.num_types)?;
        if self.lambda_target.is_empty() || self.lambda_target.len() > self.num_types {
            return Err(Error::InvalidParams("lambda_target length outside 1..=K".into()));
        }
        if self.lambda_target.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParams("lambda_target entries must be >= 0".into()));
        }
        if !(self.cost_weight >= 0.0) || !(self.action_cost >= 0.0) {
            return Err(Error::InvalidParams("costs must be >= 0".into()));
        }
        Ok(())
    }

    pub fn hawkes_params(&self) -> Result<HawkesParams> {
        HawkesParams::new(self.mu.clone(), self.beta.clone(), self.zeta)
    }

    pub fn schedule_value(&self) -> Schedule {
        match self.schedule {
            ScheduleKind::Si => Schedule::Synchronized { delta: self.spacing },
            ScheduleKind::Usi => Schedule::Unsynchronized { tick: self.spacing },
        }
    }

    pub fn episode_spec(&self) -> EpisodeSpec {
        EpisodeSpec {
            horizon: self.horizon,
            schedule: self.schedule_value(),
            action_set: self.action_set.clone(),
        }
    }

    pub fn reward(&self) -> TrackingReward {
        TrackingReward {
            lambda_target: self.lambda_target.clone(),
            cost_weight: self.cost_weight,
            action_cost: self.action_cost,
        }
    }

    /// Number of observed (non-action) types.
    pub fn num_observed(&self) -> usize {
        self.lambda_target.len()
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

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

/// Largest branching ratio a generated task may have.
const MAX_BRANCHING: f64 = 0.8;

/// Builds one of the synthetic tasks. The first half of the types are
/// observed (fake) types, the second half are valid types the agent may
/// insert. Valid types have no spontaneous rate, inhibit every observed
/// type and mildly excite each other.
pub fn make_synthetic_task(name: &str, seed: u64) -> Result<EnvConfig> {
    let (k, schedule, spacing) = match name {
        "8si" => (8, ScheduleKind::Si, SI_SPACING),
        "8usi" => (8, ScheduleKind::Usi, USI_TICK),
        "16si" => (16, ScheduleKind::Si, SI_SPACING),
        "16usi" => (16, ScheduleKind::Usi, USI_TICK),
        _ => return Err(Error::UnknownTask(name.to_string())),
    };
    let obs = k / 2;
    let lambda_target = if k == 8 {
        vec![0.3; 4]
    } else {
        vec![0.4, 0.3, 0.2, 0.1, 0.4, 0.3, 0.2, 0.1]
    };
    let mut rng = stream(seed, 0x7a5c);
    let zeta = 1.0;
    let mut mu = vec![0.0; k];
    for m in mu.iter_mut().take(obs) {
        *m = rng.gen_range(0.25..0.35);
    }
    let mut beta = vec![vec![0.0; k]; k];
    let off = 0.3 / (obs - 1) as f64;
    for j in 0..obs {
        for kk in 0..obs {
            beta[j][kk] = if j == kk {
                rng.gen_range(0.25..0.35)
            } else {
                rng.gen_range(0.0..off)
            };
        }
    }
    for j in obs..k {
        for kk in 0..obs {
            beta[j][kk] = -rng.gen_range(0.05..0.15);
        }
        for kk in obs..k {
            beta[j][kk] = rng.gen_range(0.0..0.1 / (k - obs) as f64);
        }
    }
    let mut params = HawkesParams { mu, beta, zeta };
    let r = params.branching_ratio();
    if r > MAX_BRANCHING {
        let s = MAX_BRANCHING / r;
        params.beta.iter_mut().flatten().for_each(|b| *b *= s);
    }
    let config = EnvConfig {
        num_types: k,
        action_set: (obs + 1..=k).collect(),
        mu: params.mu,
        beta: params.beta,
        zeta,
        lambda_target,
        horizon: 100.0,
        cost_weight: 0.1,
        action_cost: 1.0,
        schedule,
        spacing,
    };
    config.validate()?;
    Ok(config)
}
