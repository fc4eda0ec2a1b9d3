use rand_distr::{Distribution, StandardNormal};

use super::{smdp_value_target, state_action_rows, state_rows, AgentNets, GaussianNet, TransitionTuple, ValueTarget};
use crate::autodiff::mat::softmax_in_place;
use crate::autodiff::{Mat, Tape};
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub fn normal_noise(rows: usize, cols: usize, rng: &mut SimRng) -> Mat {
    Mat::from_vec(rows, cols, (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect())
}

fn non_empty(batch: &[TransitionTuple]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("transition batch".into()));
    }
    Ok(())
}

fn finite(loss: f64, what: &str) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Mean over rows of `‖target − (mean + std ⊙ noise)‖²`.
fn gaussian_regression(net: &GaussianNet, x: Mat, target: Mat, noise: &Mat, what: &str) -> Result<(f64, Vec<Mat>)> {
    let mut tape = Tape::new();
    let bound = net.net.params.bind(&mut tape);
    let xv = tape.constant(x);
    let pred = net.sample(&mut tape, &bound, xv, noise);
    let y = tape.constant(target);
    let d = tape.sub(y, pred);
    let sq = tape.square(d);
    let per_row = tape.sum_cols(sq);
    let loss = tape.mean(per_row);
    let value = finite(tape.value(loss).item(), what)?;
    let grads = tape.backward(loss);
    Ok((value, net.net.params.grads(&grads, &bound)))
}

/// Transition-model loss with explicit noise (rows = non-terminal tuples).
pub fn transition_loss_with_noise(nets: &AgentNets, batch: &[TransitionTuple], noise: &Mat) -> Result<(f64, Vec<Mat>)> {
    non_empty(batch)?;
    let live: Vec<&TransitionTuple> = batch.iter().filter(|b| !b.done).collect();
    if live.is_empty() {
        let zeros = nets.g.net.params.tensors().iter().map(|t| Mat::zeros(t.rows, t.cols)).collect();
        return Ok((0.0, zeros));
    }
    let states: Vec<&[f64]> = live.iter().map(|b| b.s.s.as_slice()).collect();
    let actions: Vec<usize> = live.iter().map(|b| b.a).collect();
    let next: Vec<&[f64]> = live.iter().map(|b| b.s_next.s.as_slice()).collect();
    let x = state_action_rows(&states, &actions, nets.num_choices());
    gaussian_regression(&nets.g, x, state_rows(&next), noise, "transition loss")
}

/// Mean of `‖s' − g(s, a, ε)‖²` over non-terminal tuples and its gradient
/// for the parameters of g.
pub fn transition_loss(nets: &AgentNets, batch: &[TransitionTuple], rng: &mut SimRng) -> Result<(f64, Vec<Mat>)> {
    let rows = batch.iter().filter(|b| !b.done).count();
    let noise = normal_noise(rows, nets.state_dim(), rng);
    transition_loss_with_noise(nets, batch, &noise)
}

pub fn reward_loss_with_noise(nets: &AgentNets, batch: &[TransitionTuple], noise: &Mat) -> Result<(f64, Vec<Mat>)> {
    non_empty(batch)?;
    let states: Vec<&[f64]> = batch.iter().map(|b| b.s.s.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|b| b.a).collect();
    let x = state_action_rows(&states, &actions, nets.num_choices());
    let r = Mat::col_vector(batch.iter().map(|b| b.r).collect());
    gaussian_regression(&nets.kappa, x, r, noise, "reward loss")
}

/// Mean of `(r − κ(s, a, ξ))²` and its gradient for the parameters of κ.
pub fn reward_loss(nets: &AgentNets, batch: &[TransitionTuple], rng: &mut SimRng) -> Result<(f64, Vec<Mat>)> {
    let noise = normal_noise(batch.len(), 1, rng);
    reward_loss_with_noise(nets, batch, &noise)
}

/// Mean of `(Q(s, a) − y)²` with `y` built from `V_target` and held fixed.
/// Gradients are for the parameters of Q only.
pub fn q_update(nets: &AgentNets, batch: &[TransitionTuple], rng: &mut SimRng) -> Result<(f64, Vec<Mat>)> {
    non_empty(batch)?;
    let c = nets.num_choices();
    let rho = nets.config.rho;
    let states: Vec<&[f64]> = batch.iter().map(|b| b.s.s.as_slice()).collect();
    let targets: Vec<f64> = match nets.config.value_target {
        ValueTarget::Real => {
            let next: Vec<&[f64]> = batch.iter().map(|b| b.s_next.s.as_slice()).collect();
            let v = nets.target_values(&state_rows(&next));
            batch
                .iter()
                .zip(v)
                .map(|(b, v)| smdp_value_target(b.r, b.tau, if b.done { 0.0 } else { v }, rho))
                .collect()
        }
        ValueTarget::Imagined => {
            let actions: Vec<usize> = batch.iter().map(|b| b.a).collect();
            let x = state_action_rows(&states, &actions, c);
            let (rm, rs) = nets.kappa.eval(&x);
            let xi = normal_noise(batch.len(), 1, rng);
            let (sm, ss) = nets.g.eval(&x);
            let eps = normal_noise(batch.len(), nets.state_dim(), rng);
            let next = sm.zip_map(&ss.zip_map(&eps, |s, e| s * e), |m, n| m + n);
            let v = nets.target_values(&next);
            batch
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let r = rm.data[i] + rs.data[i] * xi.data[i];
                    smdp_value_target(r, b.tau, if b.done { 0.0 } else { v[i] }, rho)
                })
                .collect()
        }
    };
    let mut mask = Mat::zeros(batch.len(), c);
    for (i, b) in batch.iter().enumerate() {
        mask.set(i, b.a, 1.0);
    }
    let mut tape = Tape::new();
    let bound = nets.q.params.bind(&mut tape);
    let xv = tape.constant(state_rows(&states));
    let qall = nets.q.forward(&mut tape, &bound, xv);
    let m = tape.constant(mask);
    let picked = tape.mul(qall, m);
    let qa = tape.sum_cols(picked);
    let y = tape.constant(Mat::col_vector(targets));
    let d = tape.sub(qa, y);
    let sq = tape.square(d);
    let loss = tape.mean(sq);
    let value = finite(tape.value(loss).item(), "q loss")?;
    let grads = tape.backward(loss);
    Ok((value, nets.q.params.grads(&grads, &bound)))
}

/// Mean of `(V(s) − Σ_a π(a|s) Q(s, a))²` with the right side held fixed.
/// Gradients are for the parameters of V only.
pub fn v_update(nets: &AgentNets, batch: &[TransitionTuple]) -> Result<(f64, Vec<Mat>)> {
    non_empty(batch)?;
    let states: Vec<&[f64]> = batch.iter().map(|b| b.s.s.as_slice()).collect();
    let x = state_rows(&states);
    let q = nets.q.eval(&x);
    let logits = nets.pi.eval(&x);
    let c = nets.num_choices();
    let targets: Vec<f64> = (0..batch.len())
        .map(|i| {
            let mut p = logits.row(i).to_vec();
            softmax_in_place(&mut p);
            p.iter().zip(q.row(i)).map(|(p, q)| p * q).sum()
        })
        .collect();
    debug_assert_eq!(q.cols, c);
    let mut tape = Tape::new();
    let bound = nets.v.params.bind(&mut tape);
    let xv = tape.constant(x);
    let v = nets.v.forward(&mut tape, &bound, xv);
    let y = tape.constant(Mat::col_vector(targets));
    let d = tape.sub(v, y);
    let sq = tape.square(d);
    let loss = tape.mean(sq);
    let value = finite(tape.value(loss).item(), "v loss")?;
    let grads = tape.backward(loss);
    Ok((value, nets.v.params.grads(&grads, &bound)))
}
