//! Negative log-likelihood of an event stream under the model.

use rand::Rng;

use super::NhpiModel;
use crate::autodiff::{Mat, Tape, Var};
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::tpp::{EventSequence, IntegralMode, LOG_FLOOR};

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Intensities (rows × K) at anchors `idx` shifted by `dt`.
fn head_at(tape: &mut Tape, head: (Var, Var, Var), idx: &[usize], dt: Vec<f64>) -> Var {
    let (mu, eta, zeta) = head;
    let m = tape.select_rows(mu, idx);
    let e = tape.select_rows(eta, idx);
    let z = tape.select_rows(zeta, idx);
    let d = tape.constant(Mat::col_vector(dt));
    let zd = tape.mul_col(z, d);
    let nz = tape.scale(zd, -1.0);
    let decay = tape.exp(nz);
    let diff = tape.sub(e, m);
    let g = tape.mul(diff, decay);
    let arg = tape.add(m, g);
    tape.softplus(arg)
}

/// Records `-log L` on `tape` and returns the scalar node.
pub(crate) fn nll_on_tape(
    model: &NhpiModel,
    tape: &mut Tape,
    bound: &crate::autodiff::Bound,
    sequence: &EventSequence,
    mode: IntegralMode,
) -> Result<Var> {
    sequence.validate()?;
    if sequence.num_types != model.num_types() {
        return Err(Error::Incompatible(format!(
            "sequence has K={}, model has K={}",
            sequence.num_types,
            model.num_types()
        )));
    }
    let horizon = sequence.horizon;
    let windows = model.windows(sequence);

    // Monte-Carlo points are drawn once over [0, T) and routed to windows.
    let mut mc_points: Vec<f64> = Vec::new();
    let mc_weight = match mode {
        IntegralMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParams("mc_samples must be >= 1".into()));
            }
            let mut rng = seeded(seed);
            mc_points = (0..samples).map(|_| rng.gen::<f64>() * horizon).collect();
            horizon / samples as f64
        }
        IntegralMode::Exact => 0.0,
    };

    let k = model.num_types();
    let mut terms: Vec<Var> = Vec::new();
    for (start, entries, end) in windows {
        let inputs = model.window_inputs(entries, start);
        let times = inputs.times.clone();
        let hidden = model.forward_window(tape, bound, &inputs);
        let head = model.head_vars(tape, bound, hidden);

        let mut idx = Vec::new();
        let mut dt = Vec::new();
        let mut pick = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            if e.k == 0 || e.t >= horizon {
                continue;
            }
            idx.push(i);
            dt.push(e.t - times[i]);
            let mut row = vec![0.0; k];
            row[e.k - 1] = 1.0;
            pick.extend(row);
        }
        if !idx.is_empty() {
            let n = idx.len();
            let lam = head_at(tape, head, &idx, dt);
            let mask = tape.constant(Mat::from_vec(n, k, pick));
            let chosen = tape.mul(lam, mask);
            let chosen = tape.sum_cols(chosen);
            let chosen = tape.clamp_min(chosen, LOG_FLOOR);
            let logs = tape.log(chosen);
            let ll = tape.sum(logs);
            terms.push(tape.scale(ll, -1.0));
        }

        let mut qidx = Vec::new();
        let mut qdt = Vec::new();
        let mut qw = Vec::new();
        match mode {
            IntegralMode::Exact => {
                for p in 0..times.len() {
                    let a = times[p];
                    let b = if p + 1 < times.len() { times[p + 1] } else { end };
                    if b <= a {
                        continue;
                    }
                    let half = 0.5 * (b - a);
                    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                        qidx.push(p);
                        qdt.push(half * (x + 1.0));
                        qw.push(half * w);
                    }
                }
            }
            IntegralMode::MonteCarlo { .. } => {
                for &u in mc_points.iter().filter(|&&u| u >= start && u < end) {
                    let p = times.partition_point(|&t| t < u).saturating_sub(1);
                    qidx.push(p);
                    qdt.push(u - times[p]);
                    qw.push(mc_weight);
                }
            }
        }
        if !qidx.is_empty() {
            let lam = head_at(tape, head, &qidx, qdt);
            let total = tape.sum_cols(lam);
            let w = tape.constant(Mat::col_vector(qw));
            let weighted = tape.mul(total, w);
            terms.push(tape.sum(weighted));
        }
    }
    let mut loss = match terms.first() {
        Some(&t) => t,
        None => tape.constant(Mat::scalar(0.0)),
    };
    for &t in &terms[1.min(terms.len())..] {
        loss = tape.add(loss, t);
    }
    Ok(loss)
}

/// `-[Σ_i log λ_{k_i}(t_i) − ∫_0^T Σ_k λ_k]` and its gradient for every
/// parameter tensor, in [`crate::autodiff::ParamSet`] order.
pub fn nhpi_nll(model: &NhpiModel, sequence: &EventSequence, mode: IntegralMode) -> Result<(f64, Vec<Mat>)> {
    let mut tape = Tape::new();
    let bound = model.params.bind(&mut tape);
    let loss = nll_on_tape(model, &mut tape, &bound, sequence, mode)?;
    let value = tape.value(loss).item();
    if !value.is_finite() {
        return Err(Error::NonFinite("nhpi loss".into()));
    }
    let grads = tape.backward(loss);
    Ok((value, model.params.grads(&grads, &bound)))
}

impl NhpiModel {
    /// Loss value only.
    pub fn nll(&self, sequence: &EventSequence, mode: IntegralMode) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let loss = nll_on_tape(self, &mut tape, &bound, sequence, mode)?;
        Ok(tape.value(loss).item())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{check_gradients, GradCheckConfig};
    use crate::nhpi::NhpiConfig;
    use crate::tpp::Event;

    fn small_seq() -> EventSequence {
        EventSequence::from_events(
            2,
            6.0,
            vec![
                Event::new(0.3, 1, 0),
                Event::new(0.9, 2, 1),
                Event::new(1.6, 0, 2),
                Event::new(2.2, 1, 0),
                Event::new(4.1, 2, 0),
            ],
        )
        .unwrap()
    }

    /// Random biases keep every ReLU away from its kink at zero.
    pub(crate) fn jitter_biases(model: &mut NhpiModel, seed: u64) {
        let mut rng = seeded(seed);
        let ids: Vec<usize> = (0..model.params.len())
            .filter(|&i| model.params.names()[i].contains(".b"))
            .collect();
        for i in ids {
            let t = model.params.get_mut(crate::autodiff::ParamId(i));
            t.data.iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut model = NhpiModel::new(NhpiConfig::small(2), 5).unwrap();
        jitter_biases(&mut model, 6);
        let seq = small_seq();
        for mode in [IntegralMode::Exact, IntegralMode::MonteCarlo { samples: 32, seed: 3 }] {
            let (_, grads) = nhpi_nll(&model, &seq, mode).unwrap();
            let report = check_gradients(
                &model.params,
                &grads,
                |p| {
                    let mut m = model.clone();
                    m.params = p.clone();
                    m.nll(&seq, mode).unwrap()
                },
                GradCheckConfig::default(),
            );
            assert!(report.passed(), "{:?}", report.failures.first());
            assert_eq!(report.checked, model.params.num_scalars());
        }
    }

    #[test]
    fn constant_head_reduces_to_poisson() {
        let rate = 1.3;
        let model = NhpiModel::new(NhpiConfig::small(1), 2)
            .unwrap()
            .with_constant_head(vec![rate])
            .unwrap();
        let events: Vec<Event> = [0.5, 1.7, 2.0, 6.3, 8.8].iter().map(|&t| Event::new(t, 1, 0)).collect();
        let n = events.len() as f64;
        let seq = EventSequence::from_events(1, 10.0, events).unwrap();
        let nll = model.nll(&seq, IntegralMode::Exact).unwrap();
        let expect = -(n * rate.ln() - rate * 10.0);
        assert!((nll - expect).abs() < 1e-8, "{nll} vs {expect}");
    }

    #[test]
    fn empty_sequence_loss_is_the_integral() {
        let model = NhpiModel::new(NhpiConfig::small(2), 2).unwrap();
        let seq = EventSequence::new(2, 3.0);
        let nll = model.nll(&seq, IntegralMode::Exact).unwrap();
        assert!(nll > 0.0);
        let h = model.encode_window(&[], 0.0).unwrap();
        let hp = model.head_params(&h[0]);
        // fine midpoint rule as an independent check
        let n = 30_000;
        let dt = 3.0 / n as f64;
        let quad: f64 = (0..n)
            .map(|i| hp.intensity((i as f64 + 0.5) * dt).iter().sum::<f64>() * dt)
            .sum();
        assert!((nll - quad).abs() < 1e-7);
    }

    #[test]
    fn mc_matches_quadrature_in_expectation() {
        let model = NhpiModel::new(NhpiConfig::small(2), 8).unwrap();
        let seq = small_seq();
        let exact = model.nll(&seq, IntegralMode::Exact).unwrap();
        let reps = 200;
        let est: Vec<f64> = (0..reps)
            .map(|r| model.nll(&seq, IntegralMode::MonteCarlo { samples: 16, seed: r }).unwrap())
            .collect();
        let mean = est.iter().sum::<f64>() / reps as f64;
        let sd = (est.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * sd / (reps as f64).sqrt() + 1e-12);
    }

    #[test]
    fn windows_tile_the_horizon() {
        let mut cfg = NhpiConfig::small(2);
        cfg.max_len = 4;
        let model = NhpiModel::new(cfg, 1).unwrap();
        let events: Vec<Event> = (0..10).map(|i| Event::new(0.5 + i as f64, 1 + i % 2, 0)).collect();
        let seq = EventSequence::from_events(2, 12.0, events).unwrap();
        let w = model.windows(&seq);
        assert_eq!(w.len(), 4);
        assert_eq!(w[0].0, 0.0);
        for pair in w.windows(2) {
            assert_eq!(pair[0].2, pair[1].0);
        }
        assert_eq!(w.last().unwrap().2, 12.0);
        // long sequences still get finite losses and gradients
        let (l, g) = nhpi_nll(&model, &seq, IntegralMode::Exact).unwrap();
        assert!(l.is_finite() && g.iter().all(|m| m.is_finite()));
    }
}
