//! Ogata thinning.
//!
//! Candidates are proposed from a homogeneous process at the current upper
//! bound, accepted with probability `λ(t)/bound`, and assigned type `k` with
//! probability `λ_k(t)/λ(t)`. The bound is re-queried after every proposal.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{Event, EventSequence};
use crate::error::{Error, Result};
use crate::rng::{seeded, SimRng};

/// A process that can be simulated forward by thinning.
pub trait PointProcess {
    fn num_types(&self) -> usize;

    /// Intensities at `t`, not earlier than the last observed event.
    fn intensities(&mut self, t: f64) -> Vec<f64>;

    /// Bound on the total intensity over `[t, next observed event)`.
    fn upper_bound(&mut self, t: f64) -> f64;

    /// Records an event of type `k` (1-based) at `t`.
    fn observe(&mut self, t: f64, k: usize);
}

/// Relative slack allowed before a proposal counts as a bound violation.
const BOUND_SLACK: f64 = 1e-9;

/// First accepted event in `(start, end)`, or `None` when the window is
/// exhausted. Does not call [`PointProcess::observe`].
pub fn next_event<P: PointProcess + ?Sized>(
    process: &mut P,
    start: f64,
    end: f64,
    rng: &mut SimRng,
) -> Result<Option<(f64, usize)>> {
    let mut t = start;
    loop {
        let bound = process.upper_bound(t);
        if !bound.is_finite() || bound < 0.0 {
            return Err(Error::NonFinite(format!("thinning bound {bound} at t={t}")));
        }
        if bound == 0.0 {
            return Ok(None);
        }
        let wait: f64 = Exp1.sample(rng);
        t += wait / bound;
        if t >= end {
            return Ok(None);
        }
        let lam = process.intensities(t);
        let total: f64 = lam.iter().sum();
        if total > bound * (1.0 + BOUND_SLACK) {
            return Err(Error::BoundViolation {
                t,
                intensity: total,
                bound,
            });
        }
        let u: f64 = rng.gen::<f64>() * bound;
        if u < total {
            let mut pick = rng.gen::<f64>() * total;
            let mut k = lam.len();
            for (i, l) in lam.iter().enumerate() {
                if pick < *l {
                    k = i + 1;
                    break;
                }
                pick -= l;
            }
            // rounding can leave `pick` just past the last positive rate
            if k == lam.len() + 1 || lam[k - 1] == 0.0 {
                k = lam.iter().rposition(|l| *l > 0.0).unwrap() + 1;
            }
            return Ok(Some((t, k)));
        }
    }
}

/// Samples a full sequence on `[0, horizon)`.
pub fn thinning_sample<P: PointProcess + ?Sized>(
    process: &mut P,
    horizon: f64,
    seed: u64,
) -> Result<EventSequence> {
    let mut rng = seeded(seed);
    sample_with(process, 0.0, horizon, &mut rng)
}

/// Continues `process` from `start` until `horizon`, observing every event.
pub fn sample_with<P: PointProcess + ?Sized>(
    process: &mut P,
    start: f64,
    horizon: f64,
    rng: &mut SimRng,
) -> Result<EventSequence> {
    let mut seq = EventSequence::new(process.num_types(), horizon);
    let mut t = start;
    while let Some((tn, k)) = next_event(process, t, horizon, rng)? {
        process.observe(tn, k);
        seq.push(Event::new(tn, k, 0))?;
        t = tn;
    }
    Ok(seq)
}

/// Adapts history-based intensity and bound closures to [`PointProcess`].
pub struct FnProcess<F, B> {
    num_types: usize,
    history: Vec<Event>,
    intensity: F,
    bound: B,
}

impl<F, B> FnProcess<F, B>
where
    F: FnMut(&[Event], f64) -> Vec<f64>,
    B: FnMut(&[Event], f64) -> f64,
{
    pub fn new(num_types: usize, intensity: F, bound: B) -> Self {
        Self {
            num_types,
            history: Vec::new(),
            intensity,
            bound,
        }
    }

    pub fn history(&self) -> &[Event] {
        &self.history
    }
}

impl<F, B> PointProcess for FnProcess<F, B>
where
    F: FnMut(&[Event], f64) -> Vec<f64>,
    B: FnMut(&[Event], f64) -> f64,
{
    fn num_types(&self) -> usize {
        self.num_types
    }

    fn intensities(&mut self, t: f64) -> Vec<f64> {
        (self.intensity)(&self.history, t)
    }

    fn upper_bound(&mut self, t: f64) -> f64 {
        (self.bound)(&self.history, t)
    }

    fn observe(&mut self, t: f64, k: usize) {
        self.history.push(Event::new(t, k, 0));
    }
}
