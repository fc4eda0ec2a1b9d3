//! Forward simulation of a fitted model by thinning.

use std::borrow::Borrow;
use std::sync::Arc;

use super::{HeadParams, IncrementalEncoder, NhpiModel};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::tpp::{next_event, Event, EventSequence, PointProcess};

/// A model rolled forward one entry at a time. The intensity between
/// entries comes from the head anchored at the most recent entry.
#[derive(Debug, Clone)]
pub struct NhpiSimulator<M: Borrow<NhpiModel> = Arc<NhpiModel>> {
    model: M,
    encoder: IncrementalEncoder,
    head: HeadParams,
    anchor: f64,
}

impl<M: Borrow<NhpiModel>> NhpiSimulator<M> {
    pub fn new(model: M) -> Self {
        let encoder = IncrementalEncoder::new(model.borrow(), 0.0);
        let head = model.borrow().head_params(encoder.last_hidden());
        Self {
            model,
            encoder,
            head,
            anchor: 0.0,
        }
    }

    pub fn model(&self) -> &NhpiModel {
        self.model.borrow()
    }

    pub fn reset(&mut self) {
        self.encoder = IncrementalEncoder::new(self.model.borrow(), 0.0);
        self.head = self.model.borrow().head_params(self.encoder.last_hidden());
        self.anchor = 0.0;
    }

    pub fn push(&mut self, event: Event) -> Result<()> {
        let model = self.model.borrow();
        self.encoder.push(model, event)?;
        self.head = model.head_params(self.encoder.last_hidden());
        self.anchor = event.t;
        Ok(())
    }

    pub fn head(&self) -> &HeadParams {
        &self.head
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }
}

impl<M: Borrow<NhpiModel>> PointProcess for NhpiSimulator<M> {
    fn num_types(&self) -> usize {
        self.model.borrow().num_types()
    }

    fn intensities(&mut self, t: f64) -> Vec<f64> {
        self.head.intensity(t - self.anchor)
    }

    fn upper_bound(&mut self, _t: f64) -> f64 {
        self.head.bound()
    }

    fn observe(&mut self, t: f64, k: usize) {
        self.push(Event::new(t, k, 0))
            .expect("thinning proposes strictly increasing times");
    }
}

/// Continues `prefix` up to `horizon`. After each accepted event of type
/// `k` at time `t`, `policy(history, t, k)` returns the action attached to
/// that event. Only the continuation is returned.
pub fn nhpi_thinning_sample(
    model: &NhpiModel,
    prefix: &EventSequence,
    mut policy: impl FnMut(&[Event], f64, usize) -> usize,
    horizon: f64,
    seed: u64,
) -> Result<EventSequence> {
    prefix.validate()?;
    let start = prefix.last_time().unwrap_or(0.0);
    if !(horizon > start) {
        return Err(Error::InvalidParams(format!("horizon {horizon} not after prefix end {start}")));
    }
    let mut sim = NhpiSimulator::new(model);
    for e in &prefix.events {
        sim.push(*e)?;
    }
    let mut history = prefix.events.clone();
    let mut out = EventSequence::new(model.num_types(), horizon);
    let mut rng = seeded(seed);
    let mut t = start;
    while let Some((tn, k)) = next_event(&mut sim, t, horizon, &mut rng)? {
        let a = policy(&history, tn, k);
        if a > model.num_types() {
            return Err(Error::InvalidAction {
                action: a,
                allowed: (1..=model.num_types()).collect(),
            });
        }
        let e = Event::new(tn, k, a);
        sim.push(e)?;
        history.push(e);
        out.push(e)?;
        t = tn;
    }
    Ok(out)
}
