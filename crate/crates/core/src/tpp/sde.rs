//! Euler integration of the Hawkes intensity written as a jump SDE:
//! `dλ_k = a_k dt + ζ(μ_k − λ_k) dt + Σ_j β_jk dN_j(t)`.

use super::HawkesParams;
use crate::error::{Error, Result};

/// A jump of counter `N_j` at time `t` (`j` is 1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingIncrement {
    pub t: f64,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPath {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// One Euler step from `lambda`. `jumps` lists the counter types that fire
/// inside this step; `action_rate` is the exogenous drift `a_k(t)`.
pub fn intervened_intensity_step(
    params: &HawkesParams,
    lambda: &[f64],
    jumps: &[usize],
    action_rate: &[f64],
    dt: f64,
) -> Vec<f64> {
    let mut next: Vec<f64> = lambda
        .iter()
        .zip(&params.mu)
        .zip(action_rate)
        .map(|((l, m), a)| l + a * dt + params.zeta * (m - l) * dt)
        .collect();
    for &j in jumps {
        for (n, b) in next.iter_mut().zip(&params.beta[j - 1]) {
            *n += b;
        }
    }
    next
}

/// Euler path on the grid `0, dt, 2dt, …` up to `horizon`, starting from
/// `λ(0) = μ`. An increment at `t` fires in the step `(t_n, t_{n+1}]` that
/// contains it.
pub fn sde_intensity_trajectory(
    params: &HawkesParams,
    increments: &[CountingIncrement],
    dt: f64,
    horizon: f64,
) -> Result<IntensityPath> {
    sde_with_actions(params, increments, |_| vec![0.0; params.num_types()], dt, horizon)
}

/// As [`sde_intensity_trajectory`] with an exogenous drift `a(t)`
/// evaluated at the left end of each step.
pub fn sde_with_actions(
    params: &HawkesParams,
    increments: &[CountingIncrement],
    mut action_rate: impl FnMut(f64) -> Vec<f64>,
    dt: f64,
    horizon: f64,
) -> Result<IntensityPath> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if increments.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::InvalidParams("increments must be time-sorted".into()));
    }
    if increments.iter().any(|inc| inc.j == 0 || inc.j > params.num_types()) {
        return Err(Error::InvalidParams("increment type out of range".into()));
    }
    let steps = (horizon / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut lambda = params.mu.clone();
    times.push(0.0);
    values.push(lambda.clone());
    let mut cursor = 0;
    // increments at exactly t = 0 fire in the first step
    for n in 0..steps {
        let t0 = n as f64 * dt;
        let t1 = (n + 1) as f64 * dt;
        let mut jumps = Vec::new();
        while cursor < increments.len() && increments[cursor].t <= t1 {
            jumps.push(increments[cursor].j);
            cursor += 1;
        }
        lambda = intervened_intensity_step(params, &lambda, &jumps, &action_rate(t0), dt);
        times.push(t1);
        values.push(lambda.clone());
    }
    Ok(IntensityPath { times, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_increments_stays_at_base_rate() {
        let p = HawkesParams::new(vec![0.2, 0.5], vec![vec![0.1, 0.2], vec![0.0, 0.3]], 1.0).unwrap();
        let path = sde_intensity_trajectory(&p, &[], 0.01, 5.0).unwrap();
        for v in &path.values {
            assert!((v[0] - 0.2).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn single_jump_decays_like_kernel() {
        let p = HawkesParams::univariate(0.2, 0.5, 1.0).unwrap();
        let path = sde_intensity_trajectory(&p, &[CountingIncrement { t: 1.0, j: 1 }], 1e-3, 3.0).unwrap();
        let idx = path.times.iter().position(|t| (t - 2.0).abs() < 1e-9).unwrap();
        let expect = 0.2 + 0.5 * (-1.0f64).exp();
        assert!((path.values[idx][0] - expect).abs() < 1e-2);
    }

    #[test]
    fn zero_action_step_is_plain_step() {
        let p = HawkesParams::univariate(0.2, 0.5, 1.0).unwrap();
        let a = intervened_intensity_step(&p, &[0.9], &[1], &[0.0], 0.01);
        let expected = 0.9 + 1.0 * (0.2 - 0.9) * 0.01 + 0.5;
        assert!((a[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn pure_drift_integrates_linearly() {
        let p = HawkesParams {
            mu: vec![0.3],
            beta: vec![vec![0.0]],
            zeta: 0.0,
        };
        let c = 0.25;
        let path = sde_with_actions(&p, &[], |_| vec![c], 1e-3, 4.0).unwrap();
        let last = path.values.last().unwrap()[0];
        assert!((last - (0.3 + c * 4.0)).abs() < 1e-9);
    }

    #[test]
    fn constant_control_steers_to_target() {
        let p = HawkesParams::univariate(0.2, 0.0, 1.0).unwrap();
        let target = 0.6;
        let a = p.zeta * (target - p.mu[0]);
        let path = sde_with_actions(&p, &[], |_| vec![a], 1e-3, 20.0).unwrap();
        assert!((path.values.last().unwrap()[0] - target).abs() < 1e-6);
    }

    fn max_error_against_closed_form(dt: f64) -> f64 {
        use crate::tpp::{hawkes_intensity, Event};
        use rand::Rng;
        let p = HawkesParams::new(vec![0.5, 0.3], vec![vec![0.4, 0.2], vec![0.1, 0.5]], 1.5).unwrap();
        let mut rng = crate::rng::seeded(20);
        let mut times: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..8.0)).collect();
        times.sort_by(f64::total_cmp);
        let history: Vec<Event> = times.iter().enumerate().map(|(i, &t)| Event::new(t, 1 + i % 2, 0)).collect();
        let incs: Vec<CountingIncrement> = history.iter().map(|e| CountingIncrement { t: e.t, j: e.k }).collect();
        let path = sde_intensity_trajectory(&p, &incs, dt, 10.0).unwrap();
        let mut worst = 0.0f64;
        for (t, v) in path.times.iter().zip(&path.values) {
            let upto = history.partition_point(|e| e.t <= *t);
            let exact = hawkes_intensity(&p, &history[..upto], *t).unwrap();
            for (a, b) in v.iter().zip(&exact) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    #[test]
    fn euler_matches_closed_form_at_first_order() {
        let e1 = max_error_against_closed_form(1e-3);
        let e2 = max_error_against_closed_form(5e-4);
        assert!(e1 < 1e-2, "error {e1}");
        let ratio = e1 / e2;
        assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
    }

    #[test]
    fn bad_inputs_rejected() {
        let p = HawkesParams::univariate(0.2, 0.5, 1.0).unwrap();
        assert!(sde_intensity_trajectory(&p, &[], 0.0, 1.0).is_err());
        let unsorted = [CountingIncrement { t: 2.0, j: 1 }, CountingIncrement { t: 1.0, j: 1 }];
        assert!(sde_intensity_trajectory(&p, &unsorted, 0.1, 3.0).is_err());
    }
}
