//! Marked temporal point processes: event sequences, closed-form Hawkes
//! intensities, the jump-SDE view, thinning and likelihood evaluation.

pub mod hawkes;
pub mod jsonl;
pub mod likelihood;
pub mod sde;
pub mod thinning;

pub use hawkes::{hawkes_intensity, HawkesParams, HawkesProcess};
pub use likelihood::{log_likelihood, mc_integral, IntegralMode, IntensityModel, PoissonModel};
pub use sde::{intervened_intensity_step, sde_intensity_trajectory, CountingIncrement, IntensityPath};
pub use thinning::{next_event, thinning_sample, FnProcess, PointProcess};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied inside every logarithm of an intensity.
pub const LOG_FLOOR: f64 = 1e-9;

/// One entry of an event-action stream.
///
/// `k` is the event type in `1..=K`; `k == 0` marks a decision point that
/// carries an action but no environment event. `a` is the action taken at
/// this entry, `0` for none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub k: usize,
    pub a: usize,
}

impl Event {
    pub fn new(t: f64, k: usize, a: usize) -> Self {
        Self { t, k, a }
    }

    pub fn is_marker(&self) -> bool {
        self.k == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    pub events: Vec<Event>,
    pub horizon: f64,
    pub num_types: usize,
}

impl EventSequence {
    pub fn new(num_types: usize, horizon: f64) -> Self {
        Self {
            events: Vec::new(),
            horizon,
            num_types,
        }
    }

    pub fn from_events(num_types: usize, horizon: f64, events: Vec<Event>) -> Result<Self> {
        let seq = Self {
            events,
            horizon,
            num_types,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.t)
    }

    /// Number of real (non-marker) events.
    pub fn event_count(&self) -> usize {
        self.events.iter().filter(|e| !e.is_marker()).count()
    }

    /// Entries strictly before `t`.
    pub fn prefix_before(&self, t: f64) -> &[Event] {
        let n = self.events.partition_point(|e| e.t < t);
        &self.events[..n]
    }

    pub fn push(&mut self, event: Event) -> Result<()> {
        self.check_event(self.events.last(), &event)?;
        self.events.push(event);
        Ok(())
    }

    fn check_event(&self, prev: Option<&Event>, e: &Event) -> Result<()> {
        if !e.t.is_finite() || e.t < 0.0 {
            return Err(Error::InvalidSequence(format!("bad timestamp {}", e.t)));
        }
        if e.t >= self.horizon {
            return Err(Error::InvalidSequence(format!(
                "timestamp {} not before horizon {}",
                e.t, self.horizon
            )));
        }
        if let Some(p) = prev {
            if e.t <= p.t {
                return Err(Error::InvalidSequence(format!(
                    "timestamps not strictly increasing: {} after {}",
                    e.t, p.t
                )));
            }
        }
        if e.k > self.num_types {
            return Err(Error::InvalidSequence(format!(
                "event type {} outside 1..={}",
                e.k, self.num_types
            )));
        }
        if e.a > self.num_types {
            return Err(Error::InvalidSequence(format!(
                "action {} outside 0..={}",
                e.a, self.num_types
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidSequence(format!("bad horizon {}", self.horizon)));
        }
        if self.num_types == 0 {
            return Err(Error::InvalidSequence("zero event types".into()));
        }
        let mut prev = None;
        for e in &self.events {
            self.check_event(prev, e)?;
            prev = Some(e);
        }
        Ok(())
    }
}
