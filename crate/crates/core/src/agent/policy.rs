use rand::Rng;

use super::losses::normal_noise;
use super::{state_rows, AgentNets, TransitionTuple};
use crate::autodiff::mat::softmax_in_place;
use crate::autodiff::{Mat, Tape};
use crate::error::{Error, Result};
use crate::rng::SimRng;

fn gumbel(rng: &mut SimRng) -> f64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    -(-u.ln()).ln()
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Relaxed sample `softmax((logits + G) / temperature)` and its argmax.
pub fn gumbel_action(nets: &AgentNets, s: &[f64], temperature: f64, rng: &mut SimRng) -> (Vec<f64>, usize) {
    assert!(temperature > 0.0, "temperature must be positive");
    let mut y: Vec<f64> = nets.logits(s).into_iter().map(|l| (l + gumbel(rng)) / temperature).collect();
    softmax_in_place(&mut y);
    let hard = argmax(&y);
    (y, hard)
}

/// Frozen noise for one policy step.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNoise {
    pub gumbel: Mat,
    /// Reward-model noise ξ, one column.
    pub xi: Mat,
    /// Transition-model noise ε.
    pub eps: Mat,
}

impl PolicyNoise {
    pub fn sample(rows: usize, nets: &AgentNets, rng: &mut SimRng) -> Self {
        let c = nets.num_choices();
        let gumbel = Mat::from_vec(rows, c, (0..rows * c).map(|_| gumbel(rng)).collect());
        Self {
            gumbel,
            xi: normal_noise(rows, 1, rng),
            eps: normal_noise(rows, nets.state_dim(), rng),
        }
    }

    /// Hard actions the noise selects under the current policy.
    pub fn hard_actions(&self, nets: &AgentNets, states: &Mat) -> Vec<usize> {
        let logits = nets.pi.eval(states);
        (0..states.rows)
            .map(|r| {
                let z: Vec<f64> = logits.row(r).iter().zip(self.gumbel.row(r)).map(|(l, g)| l + g).collect();
                argmax(&z)
            })
            .collect()
    }
}

/// One-step imagined return `mean[(1 − e^{−ρτ})/ρ · r̂ + e^{−ρτ} V(ŝ')]`
/// and its gradient with respect to the policy parameters only. The
/// environment-facing action is the hard sample; gradients pass through
/// the relaxed sample (straight-through). `continues[i] = false` drops the
/// bootstrap term.
pub fn policy_objective(
    nets: &AgentNets,
    states: &Mat,
    taus: &[f64],
    continues: &[bool],
    noise: &PolicyNoise,
) -> Result<(f64, Vec<Mat>)> {
    let n = states.rows;
    let rho = nets.config.rho;
    let mut tape = Tape::new();
    let pb = nets.pi.params.bind(&mut tape);
    let gb = nets.g.net.params.bind_frozen(&mut tape);
    let kb = nets.kappa.net.params.bind_frozen(&mut tape);
    let vb = nets.v.params.bind_frozen(&mut tape);

    let s = tape.constant(states.clone());
    let logits = nets.pi.forward(&mut tape, &pb, s);
    let g = tape.constant(noise.gumbel.clone());
    let z = tape.add(logits, g);
    let z = tape.scale(z, 1.0 / nets.temperature);
    let y = tape.softmax_rows(z);
    let yv = tape.value(y).clone();
    let mut shift = Mat::zeros(n, yv.cols);
    for r in 0..n {
        let hard = argmax(yv.row(r));
        for (c, o) in shift.row_mut(r).iter_mut().enumerate() {
            *o = if c == hard { 1.0 } else { 0.0 } - yv.get(r, c);
        }
    }
    let a = if nets.config.straight_through {
        let shift = tape.constant(shift);
        tape.add(y, shift)
    } else {
        y
    };

    let x = tape.concat_cols(&[s, a]);
    let r_hat = nets.kappa.sample(&mut tape, &kb, x, &noise.xi);
    let s_next = nets.g.sample(&mut tape, &gb, x, &noise.eps);
    let v_next = nets.v.forward(&mut tape, &vb, s_next);

    let reward_w: Vec<f64> = taus.iter().map(|&t| -(-rho * t).exp_m1() / rho).collect();
    let value_w: Vec<f64> = taus
        .iter()
        .zip(continues)
        .map(|(&t, &c)| if c { (-rho * t).exp() } else { 0.0 })
        .collect();
    let rw = tape.constant(Mat::col_vector(reward_w));
    let vw = tape.constant(Mat::col_vector(value_w));
    let a1 = tape.mul(r_hat, rw);
    let a2 = tape.mul(v_next, vw);
    let total = tape.add(a1, a2);
    let j = tape.mean(total);
    let value = tape.value(j).item();
    if !value.is_finite() {
        return Err(Error::NonFinite("policy objective".into()));
    }
    let grads = tape.backward(j);
    Ok((value, nets.pi.params.grads(&grads, &pb)))
}

/// One ascent step on the imagined one-step return over the states of
/// `batch`. `tau_fn(tuple, choice, rng)` supplies the imagined interval and
/// whether the episode continues. Returns the objective before the step.
pub fn policy_improvement(
    nets: &mut AgentNets,
    batch: &[TransitionTuple],
    mut tau_fn: impl FnMut(&TransitionTuple, usize, &mut SimRng) -> (f64, bool),
    rng: &mut SimRng,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("state batch".into()));
    }
    let states: Vec<&[f64]> = batch.iter().map(|b| b.s.s.as_slice()).collect();
    let x = state_rows(&states);
    let noise = PolicyNoise::sample(batch.len(), nets, rng);
    let hard = noise.hard_actions(nets, &x);
    let (taus, continues): (Vec<f64>, Vec<bool>) = batch.iter().zip(&hard).map(|(b, &a)| tau_fn(b, a, rng)).unzip();
    let (j, mut grads) = policy_objective(nets, &x, &taus, &continues, &noise)?;
    grads.iter_mut().for_each(|g| g.scale_assign(-1.0));
    nets.pi.descend(&grads);
    nets.anneal();
    Ok(j)
}
