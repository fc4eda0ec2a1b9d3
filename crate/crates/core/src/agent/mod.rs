//! Latent transition and reward models, continuous-time value learning and
//! one-step stochastic value gradient policy improvement.

mod losses;
mod nets;
mod policy;
mod tau;

use serde::{Deserialize, Serialize};

pub use losses::{normal_noise, q_update, reward_loss, reward_loss_with_noise, transition_loss, transition_loss_with_noise, v_update};
pub use nets::{AgentNets, GaussianNet, Net};
pub use policy::{gumbel_action, policy_improvement, policy_objective, PolicyNoise};
pub use tau::sample_tau;

use crate::autodiff::Mat;
use crate::rng::SimRng;
use crate::nhpi::HeadParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub s: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTuple {
    pub s: LatentState,
    /// Choice index: 0 is the no-op, `c > 0` the `c`-th allowed action.
    pub a: usize,
    pub tau: f64,
    pub r: f64,
    pub s_next: LatentState,
    /// The episode ended before another decision.
    pub done: bool,
    /// Intensity heads after each candidate choice at `s.t`, used to
    /// imagine the next decision time. Empty when unavailable.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub heads: Vec<HeadRecord>,
}

/// Serializable copy of [`HeadParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadRecord {
    pub mu: Vec<f64>,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl From<&HeadParams> for HeadRecord {
    fn from(h: &HeadParams) -> Self {
        Self {
            mu: h.mu.clone(),
            eta: h.eta.clone(),
            zeta: h.zeta.clone(),
        }
    }
}

impl From<&HeadRecord> for HeadParams {
    fn from(h: &HeadRecord) -> Self {
        HeadParams {
            mu: h.mu.clone(),
            eta: h.eta.clone(),
            zeta: h.zeta.clone(),
        }
    }
}

/// Where value targets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueTarget {
    /// Observed reward, interval and next state from the step buffer.
    Real,
    /// Reward and next state imagined by κ and g.
    Imagined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub state_dim: usize,
    /// Number of choices including the no-op.
    pub num_choices: usize,
    pub value_hidden: Vec<usize>,
    pub policy_hidden: Vec<usize>,
    pub transition_hidden: Vec<usize>,
    pub reward_hidden: Vec<usize>,
    pub rho: f64,
    /// Policy step size α.
    pub policy_lr: f64,
    pub value_lr: f64,
    pub model_lr: f64,
    pub polyak: f64,
    pub temperature: f64,
    /// Multiplicative temperature decay per policy step (1 keeps it fixed).
    pub temperature_decay: f64,
    pub temperature_min: f64,
    pub value_target: ValueTarget,
    /// Imagine τ from the intensity model; otherwise reuse the buffer τ.
    pub imagine_tau: bool,
    pub max_grad_norm: Option<f64>,
    /// Feed the hard one-hot forward while differentiating the relaxed
    /// sample; otherwise the relaxed sample is used on both passes.
    pub straight_through: bool,
}

impl AgentConfig {
    pub fn new(state_dim: usize, num_choices: usize) -> Self {
        Self {
            state_dim,
            num_choices,
            value_hidden: vec![128, 64],
            policy_hidden: vec![128, 64],
            transition_hidden: vec![128],
            reward_hidden: vec![128],
            rho: 0.01,
            policy_lr: 1e-4,
            value_lr: 1e-4,
            model_lr: 1e-4,
            polyak: 0.005,
            temperature: 1.0,
            temperature_decay: 1.0,
            temperature_min: 0.3,
            value_target: ValueTarget::Real,
            imagine_tau: true,
            max_grad_norm: Some(10.0),
            straight_through: true,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidParams(m.into()));
        if self.state_dim == 0 || self.num_choices < 2 {
            return bad("state_dim must be >= 1 and num_choices >= 2");
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return bad("rho must be > 0");
        }
        if !(self.temperature > 0.0) || !(self.temperature_min > 0.0) {
            return bad("temperature must be > 0");
        }
        if !(0.0..=1.0).contains(&self.polyak) {
            return bad("polyak rate must be in [0, 1]");
        }
        if [self.policy_lr, self.value_lr, self.model_lr].iter().any(|x| !(*x >= 0.0)) {
            return bad("learning rates must be >= 0");
        }
        Ok(())
    }
}

/// Losses of one [`AgentNets::update`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateLosses {
    pub transition: f64,
    pub reward: f64,
    pub q: f64,
    pub v: f64,
    pub policy_objective: f64,
}

impl AgentNets {
    /// One update of every network on `batch`: g, κ, Q, V, then π, then
    /// the Polyak step of `V_target`.
    pub fn update(
        &mut self,
        batch: &[TransitionTuple],
        tau_fn: impl FnMut(&TransitionTuple, usize, &mut SimRng) -> (f64, bool),
        rng: &mut SimRng,
    ) -> crate::Result<UpdateLosses> {
        let (transition, grads) = transition_loss(self, batch, rng)?;
        self.g.net.descend(&grads);
        let (reward, grads) = reward_loss(self, batch, rng)?;
        self.kappa.net.descend(&grads);
        let (q, grads) = q_update(self, batch, rng)?;
        self.q.descend(&grads);
        let (v, grads) = v_update(self, batch)?;
        self.v.descend(&grads);
        let policy_objective = policy_improvement(self, batch, tau_fn, rng)?;
        self.update_target();
        if !self.is_finite() {
            return Err(crate::Error::NonFinite("agent weights".into()));
        }
        Ok(UpdateLosses {
            transition,
            reward,
            q,
            v,
            policy_objective,
        })
    }
}

/// Reuses the recorded interval and terminal flag of a tuple.
pub fn buffer_tau(t: &TransitionTuple, _choice: usize, _rng: &mut SimRng) -> (f64, bool) {
    (t.tau, !t.done)
}

/// `(1 − e^{−ρτ})/ρ · r + e^{−ρτ} · v_next`.
pub fn smdp_value_target(r: f64, tau: f64, v_next: f64, rho: f64) -> f64 {
    let d = (-rho * tau).exp();
    // (1 - e^{-x}) / ρ without cancellation for small ρτ
    -(-rho * tau).exp_m1() / rho * r + d * v_next
}

/// Rows `[s | onehot(a)]` for a batch.
pub fn state_action_rows(states: &[&[f64]], actions: &[usize], num_choices: usize) -> Mat {
    let d = states.first().map_or(0, |s| s.len());
    let mut m = Mat::zeros(states.len(), d + num_choices);
    for (r, (s, &a)) in states.iter().zip(actions).enumerate() {
        let row = m.row_mut(r);
        row[..d].copy_from_slice(s);
        row[d + a] = 1.0;
    }
    m
}

pub fn state_rows(states: &[&[f64]]) -> Mat {
    let d = states.first().map_or(0, |s| s.len());
    let mut m = Mat::zeros(states.len(), d);
    for (r, s) in states.iter().enumerate() {
        m.row_mut(r).copy_from_slice(s);
    }
    m
}
