//! Point-process log-likelihood with an exact or Monte-Carlo compensator.

use rand::Rng;

use super::{Event, EventSequence, LOG_FLOOR};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// History-conditioned intensity. `history` holds the entries strictly
/// before `t`.
pub trait IntensityModel {
    fn num_types(&self) -> usize;

    fn intensity(&self, history: &[Event], t: f64) -> Vec<f64>;

    /// `∫_{t0}^{t1} Σ_k λ_k(t) dt` in closed form, when available.
    /// `history` may extend past `t0`; entries in `[t0, t1)` take effect as
    /// they occur.
    fn exact_integral(&self, _history: &[Event], _t0: f64, _t1: f64) -> Option<f64> {
        None
    }
}

/// Homogeneous Poisson process with per-type rates.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonModel {
    pub rates: Vec<f64>,
}

impl PoissonModel {
    /// Maximum-likelihood rates `n_k / T` pooled over `sequences`.
    pub fn fit(sequences: &[EventSequence], num_types: usize) -> Self {
        let mut counts = vec![0.0; num_types];
        let mut exposure = 0.0;
        for s in sequences {
            exposure += s.horizon;
            for e in s.events.iter().filter(|e| !e.is_marker()) {
                counts[e.k - 1] += 1.0;
            }
        }
        Self {
            rates: counts.into_iter().map(|c| c / exposure).collect(),
        }
    }
}

impl IntensityModel for PoissonModel {
    fn num_types(&self) -> usize {
        self.rates.len()
    }

    fn intensity(&self, _history: &[Event], _t: f64) -> Vec<f64> {
        self.rates.clone()
    }

    fn exact_integral(&self, _history: &[Event], t0: f64, t1: f64) -> Option<f64> {
        Some(self.rates.iter().sum::<f64>() * (t1 - t0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Unbiased estimate `(T/n) Σ f(u_j)`, `u_j ~ Uniform(0, T)`.
pub fn mc_integral(mut f: impl FnMut(f64) -> f64, horizon: f64, n: usize, seed: u64) -> f64 {
    assert!(n >= 1, "need at least one sample");
    let mut rng = seeded(seed);
    let total: f64 = (0..n).map(|_| f(rng.gen::<f64>() * horizon)).sum();
    horizon / n as f64 * total
}

/// `Σ_{i: t_i < T} log λ_{k_i}(t_i) − ∫_0^T λ(t) dt`.
///
/// Decision markers are skipped in the event sum but remain in the history
/// handed to the model.
pub fn log_likelihood<M: IntensityModel + ?Sized>(
    model: &M,
    sequence: &EventSequence,
    mode: IntegralMode,
) -> Result<f64> {
    sequence.validate()?;
    let horizon = sequence.horizon;
    let events = &sequence.events;
    let mut log_sum = 0.0;
    for (i, e) in events.iter().enumerate() {
        if e.is_marker() || e.t >= horizon {
            continue;
        }
        let lam = model.intensity(&events[..i], e.t);
        log_sum += lam[e.k - 1].max(LOG_FLOOR).ln();
    }
    let integral = match mode {
        IntegralMode::Exact => model.exact_integral(events, 0.0, horizon).ok_or_else(|| {
            Error::Incompatible("model has no closed-form integral".into())
        })?,
        IntegralMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParams("mc_samples must be >= 1".into()));
            }
            mc_integral(
                |u| model.intensity(sequence.prefix_before(u), u).iter().sum(),
                horizon,
                samples,
                seed,
            )
        }
    };
    Ok(log_sum - integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tpp::HawkesParams;

    fn poisson_seq(n: usize, horizon: f64) -> EventSequence {
        let events = (0..n)
            .map(|i| Event::new(horizon * (i as f64 + 0.5) / n as f64, 1, 0))
            .collect();
        EventSequence::from_events(1, horizon, events).unwrap()
    }

    #[test]
    fn poisson_exact_matches_closed_form() {
        let lam = 1.7;
        let seq = poisson_seq(13, 9.0);
        let ll = log_likelihood(&PoissonModel { rates: vec![lam] }, &seq, IntegralMode::Exact).unwrap();
        let expect = 13.0 * lam.ln() - lam * 9.0;
        assert!((ll - expect).abs() < 1e-10);
    }

    #[test]
    fn empty_sequence_is_minus_compensator() {
        let seq = EventSequence::new(1, 4.0);
        let ll = log_likelihood(&PoissonModel { rates: vec![0.5] }, &seq, IntegralMode::Exact).unwrap();
        assert!((ll + 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_integrand_is_exact() {
        for n in [1, 7, 100] {
            assert!((mc_integral(|_| 2.5, 3.0, n, 4) - 7.5).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_integrand_converges() {
        // ∫_0^2 t dt = 2; std of one draw is 2/sqrt(3)·... -> sd(mean) ≈ 1.155/sqrt(n)
        let n = 200_000;
        let est = mc_integral(|t| t, 2.0, n, 8);
        assert!((est - 2.0).abs() < 4.0 * 1.1548 / (n as f64).sqrt());
    }

    #[test]
    fn variance_shrinks_like_one_over_n() {
        let var_for = |n: usize| {
            let reps = 400;
            let xs: Vec<f64> = (0..reps)
                .map(|r| mc_integral(|t| t * t, 1.0, n, 1000 + r as u64))
                .collect();
            let m = xs.iter().sum::<f64>() / reps as f64;
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1) as f64
        };
        let ratio = var_for(10) / var_for(40);
        assert!(ratio > 2.8 && ratio < 5.5, "ratio {ratio}");
    }

    #[test]
    fn hawkes_mc_agrees_with_exact_mode() {
        let p = HawkesParams::new(vec![0.4, 0.2], vec![vec![0.3, -0.2], vec![0.5, 0.1]], 1.5).unwrap();
        let seq = EventSequence::from_events(
            2,
            6.0,
            vec![Event::new(0.5, 1, 0), Event::new(1.2, 2, 0), Event::new(3.3, 1, 0)],
        )
        .unwrap();
        let exact = log_likelihood(&p, &seq, IntegralMode::Exact).unwrap();
        let mc = log_likelihood(&p, &seq, IntegralMode::MonteCarlo { samples: 200_000, seed: 2 }).unwrap();
        assert!((exact - mc).abs() < 0.02, "{exact} vs {mc}");
    }

    #[test]
    fn zero_mc_samples_rejected() {
        let seq = EventSequence::new(1, 1.0);
        let m = PoissonModel { rates: vec![1.0] };
        assert!(log_likelihood(&m, &seq, IntegralMode::MonteCarlo { samples: 0, seed: 0 }).is_err());
    }
}
