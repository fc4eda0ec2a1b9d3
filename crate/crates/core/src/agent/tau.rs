use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::env::{next_tick, Schedule};
use crate::nhpi::HeadParams;
use crate::rng::SimRng;

/// Imagined time to the next decision from a decision at `t` whose
/// post-action intensity is `head` (anchored at `t`). Returns the interval
/// and whether another decision happens before `horizon`.
pub fn sample_tau(head: &HeadParams, t: f64, schedule: Schedule, horizon: f64, rng: &mut SimRng) -> (f64, bool) {
    let remaining = horizon - t;
    let next = match schedule {
        Schedule::Synchronized { delta } => t + delta,
        Schedule::Unsynchronized { tick } => {
            let bound = head.bound();
            let mut dt = 0.0;
            loop {
                if bound <= 0.0 {
                    return (remaining, false);
                }
                let w: f64 = Exp1.sample(rng);
                dt += w / bound;
                if dt >= remaining {
                    return (remaining, false);
                }
                let total: f64 = head.intensity(dt).iter().sum();
                if rng.gen::<f64>() * bound < total {
                    break;
                }
            }
            next_tick(t + dt, tick)
        }
    };
    if next >= horizon {
        (remaining, false)
    } else {
        (next - t, true)
    }
}
