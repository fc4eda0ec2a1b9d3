//! Intervened point-process environments with SI / USI decision schedules.

mod config;
mod learned;

use serde::{Deserialize, Serialize};

pub use config::{make_synthetic_task, EnvConfig, ScheduleKind, TASK_NAMES};
pub use learned::{learned_env_adapter, LearnedEnv};

use crate::error::{Error, Result};
use crate::nhpi::NhpiSimulator;
use crate::rng::{seeded, SimRng};
use crate::tpp::{next_event, Event, EventSequence, HawkesProcess, PointProcess};

/// A point process that also accepts interventions at decision times.
pub trait Simulator: PointProcess {
    fn reset_state(&mut self);
    /// Applies action `a` (0 = no-op) at time `t`.
    fn intervene(&mut self, t: f64, a: usize) -> Result<()>;
}

impl Simulator for HawkesProcess {
    fn reset_state(&mut self) {
        self.reset();
    }

    /// A nonzero action is recorded as an event of its own type.
    fn intervene(&mut self, t: f64, a: usize) -> Result<()> {
        if a > 0 {
            self.record(t, a);
        }
        Ok(())
    }
}

impl<M: std::borrow::Borrow<crate::nhpi::NhpiModel>> Simulator for NhpiSimulator<M> {
    fn reset_state(&mut self) {
        self.reset();
    }

    /// The decision enters the stream as a marker carrying the action.
    fn intervene(&mut self, t: f64, a: usize) -> Result<()> {
        self.push(Event::new(t, 0, a))
    }
}

/// When decisions happen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    /// Decisions at `Δ, 2Δ, …`.
    Synchronized { delta: f64 },
    /// A decision at the first clock tick strictly after each event that
    /// follows the previous decision.
    Unsynchronized { tick: f64 },
}

impl Schedule {
    pub fn spacing(&self) -> f64 {
        match *self {
            Schedule::Synchronized { delta } => delta,
            Schedule::Unsynchronized { tick } => tick,
        }
    }
}

/// Smallest multiple of `tick` strictly greater than `t`.
pub fn next_tick(t: f64, tick: f64) -> f64 {
    let mut n = (t / tick).floor() + 1.0;
    while n * tick <= t {
        n += 1.0;
    }
    n * tick
}

pub trait RewardFn {
    /// Reward for taking `action` when the post-insertion intensity is `lambda`.
    fn reward(&self, lambda: &[f64], action: usize) -> f64;
}

impl<F: Fn(&[f64], usize) -> f64> RewardFn for F {
    fn reward(&self, lambda: &[f64], action: usize) -> f64 {
        self(lambda, action)
    }
}

/// `−‖λ_target − λ_obs‖² − w·cost(a)` over the first `lambda_target.len()` types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReward {
    pub lambda_target: Vec<f64>,
    pub cost_weight: f64,
    pub action_cost: f64,
}

impl RewardFn for TrackingReward {
    fn reward(&self, lambda: &[f64], action: usize) -> f64 {
        let err: f64 = self
            .lambda_target
            .iter()
            .zip(lambda)
            .map(|(t, l)| (t - l) * (t - l))
            .sum();
        let cost = if action == 0 { 0.0 } else { self.action_cost };
        -err - self.cost_weight * cost
    }
}

/// Episode-level settings shared by every simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub horizon: f64,
    pub schedule: Schedule,
    /// Types the agent may insert (1-based); 0 is always allowed.
    pub action_set: Vec<usize>,
}

impl EpisodeSpec {
    pub fn validate(&self, num_types: usize) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParams(format!("bad horizon {}", self.horizon)));
        }
        let s = self.schedule.spacing();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParams(format!("bad schedule spacing {s}")));
        }
        if self.action_set.is_empty() {
            return Err(Error::InvalidParams("empty action set".into()));
        }
        if self.action_set.iter().any(|&a| a == 0 || a > num_types) {
            return Err(Error::InvalidParams(format!(
                "action set {:?} outside 1..={num_types}",
                self.action_set
            )));
        }
        Ok(())
    }

    /// Number of choices including the no-op.
    pub fn num_choices(&self) -> usize {
        self.action_set.len() + 1
    }

    /// Action type for choice index `c` (0 = no-op).
    pub fn choice_to_action(&self, c: usize) -> usize {
        if c == 0 {
            0
        } else {
            self.action_set[c - 1]
        }
    }
}

/// First decision after a reset.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Events before the first decision.
    pub events: Vec<Event>,
    pub decision_time: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    /// Environment events generated between this decision and the next.
    pub events: Vec<Event>,
    pub reward: f64,
    pub done: bool,
    /// Time until the next decision, or until the horizon when done.
    pub tau: f64,
    /// Next decision time (the horizon when done).
    pub decision_time: f64,
}

impl EnvStep {
    /// Most recent generated event.
    pub fn observation(&self) -> Option<&Event> {
        self.events.last()
    }
}

/// An episode driver over any [`Simulator`].
#[derive(Debug, Clone)]
pub struct Env<S, R> {
    sim: S,
    reward: R,
    spec: EpisodeSpec,
    rng: SimRng,
    stream: EventSequence,
    rewards: Vec<Option<f64>>,
    decision: Option<f64>,
    grid_index: u64,
    done: bool,
}

pub type HawkesEnv = Env<HawkesProcess, TrackingReward>;

impl<S: Simulator, R: RewardFn> Env<S, R> {
    pub fn new(sim: S, reward: R, spec: EpisodeSpec) -> Result<Self> {
        spec.validate(sim.num_types())?;
        let stream = EventSequence::new(sim.num_types(), spec.horizon);
        Ok(Self {
            sim,
            reward,
            spec,
            rng: seeded(0),
            stream,
            rewards: Vec::new(),
            decision: None,
            grid_index: 0,
            done: true,
        })
    }

    pub fn spec(&self) -> &EpisodeSpec {
        &self.spec
    }

    pub fn num_types(&self) -> usize {
        self.sim.num_types()
    }

    pub fn simulator(&self) -> &S {
        &self.sim
    }

    pub fn simulator_mut(&mut self) -> &mut S {
        &mut self.sim
    }

    pub fn reward_fn(&self) -> &R {
        &self.reward
    }

    /// Events and decision markers `(t_d, 0, a)` of the current episode.
    pub fn stream(&self) -> &EventSequence {
        &self.stream
    }

    /// Reward attached to each stream entry (markers only).
    pub fn rewards(&self) -> &[Option<f64>] {
        &self.rewards
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn decision_time(&self) -> Option<f64> {
        self.decision
    }

    /// Current simulator intensities at `t` (not before the last entry).
    pub fn intensities(&mut self, t: f64) -> Vec<f64> {
        self.sim.intensities(t)
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        self.sim.reset_state();
        self.rng = seeded(seed);
        self.stream = EventSequence::new(self.sim.num_types(), self.spec.horizon);
        self.rewards.clear();
        self.grid_index = 0;
        self.done = false;
        self.decision = None;
        let (events, next) = self.advance(0.0)?;
        self.set_next(next);
        Ok(Observation {
            events,
            decision_time: next.unwrap_or(self.spec.horizon),
            done: self.done,
        })
    }

    pub fn step(&mut self, action: usize) -> Result<EnvStep> {
        let td = match (self.done, self.decision) {
            (false, Some(t)) => t,
            _ => return Err(Error::EpisodeDone),
        };
        if action != 0 && !self.spec.action_set.contains(&action) {
            return Err(Error::InvalidAction {
                action,
                allowed: self.spec.action_set.clone(),
            });
        }
        self.sim.intervene(td, action)?;
        self.stream.push(Event::new(td, 0, action))?;
        let lambda = self.sim.intensities(td);
        let reward = self.reward.reward(&lambda, action);
        if !reward.is_finite() {
            return Err(Error::NonFinite(format!("reward at t={td}")));
        }
        self.rewards.push(Some(reward));
        let (events, next) = self.advance(td)?;
        self.set_next(next);
        let decision_time = next.unwrap_or(self.spec.horizon);
        Ok(EnvStep {
            events,
            reward,
            done: self.done,
            tau: decision_time - td,
            decision_time,
        })
    }

    fn set_next(&mut self, next: Option<f64>) {
        self.decision = next;
        self.done = next.is_none();
    }

    fn emit(&mut self, t: f64, k: usize, out: &mut Vec<Event>) -> Result<()> {
        self.sim.observe(t, k);
        let e = Event::new(t, k, 0);
        self.stream.push(e)?;
        self.rewards.push(None);
        out.push(e);
        Ok(())
    }

    /// Simulates events in `(from, end)` without stopping.
    fn run_until(&mut self, from: f64, end: f64, out: &mut Vec<Event>) -> Result<()> {
        let mut t = from;
        while let Some((tn, k)) = next_event(&mut self.sim, t, end, &mut self.rng)? {
            self.emit(tn, k, out)?;
            t = tn;
        }
        Ok(())
    }

    /// Runs from `from` to the next decision time; `None` once the horizon
    /// is reached first.
    fn advance(&mut self, from: f64) -> Result<(Vec<Event>, Option<f64>)> {
        let horizon = self.spec.horizon;
        let mut out = Vec::new();
        match self.spec.schedule {
            Schedule::Synchronized { delta } => {
                self.grid_index += 1;
                let next = self.grid_index as f64 * delta;
                let end = next.min(horizon);
                self.run_until(from, end, &mut out)?;
                Ok((out, (next < horizon).then_some(next)))
            }
            Schedule::Unsynchronized { tick } => {
                let Some((te, k)) = next_event(&mut self.sim, from, horizon, &mut self.rng)? else {
                    return Ok((out, None));
                };
                self.emit(te, k, &mut out)?;
                let next = next_tick(te, tick);
                let end = next.min(horizon);
                self.run_until(te, end, &mut out)?;
                Ok((out, (next < horizon).then_some(next)))
            }
        }
    }

    /// Runs a whole episode with `policy(env, decision_time) -> action` and
    /// returns the total reward.
    pub fn rollout(&mut self, seed: u64, mut policy: impl FnMut(&mut Self, f64) -> usize) -> Result<f64> {
        let mut obs = self.reset(seed)?;
        let mut total = 0.0;
        let mut done = obs.done;
        while !done {
            let a = policy(self, obs.decision_time);
            let s = self.step(a)?;
            total += s.reward;
            done = s.done;
            obs.decision_time = s.decision_time;
        }
        Ok(total)
    }

    pub fn write_log(&self, w: &mut impl std::io::Write) -> Result<()> {
        crate::tpp::jsonl::write_episode(w, &self.stream, &self.rewards)
    }
}

impl HawkesEnv {
    pub fn from_config(config: &EnvConfig) -> Result<Self> {
        config.validate()?;
        Env::new(
            HawkesProcess::new(config.hawkes_params()?),
            config.reward(),
            config.episode_spec(),
        )
    }
}
