use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AgentConfig;
use crate::autodiff::mat::{softmax_in_place, softplus};
use crate::autodiff::{Adam, Bound, Mat, ParamSet, Tape, Var};
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::rng::stream;

/// An MLP with its own parameters and optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub mlp: Mlp,
    pub params: ParamSet,
    pub opt: Adam,
}

impl Net {
    pub fn new(prefix: &str, input: usize, hidden: &[usize], output: usize, lr: f64, clip: Option<f64>, seed: u64) -> Self {
        let mut params = ParamSet::new();
        let mut rng = stream(seed, 0);
        let mlp = Mlp::new(&mut params, prefix, input, hidden, output, &mut rng);
        let opt = match clip {
            Some(c) => Adam::new(lr).with_max_grad_norm(c),
            None => Adam::new(lr),
        };
        Self { mlp, params, opt }
    }

    pub fn eval(&self, x: &Mat) -> Mat {
        self.mlp.eval(&self.params, x)
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Var {
        self.mlp.forward(tape, bound, x)
    }

    /// Gradient descent step.
    pub fn descend(&mut self, grads: &[Mat]) {
        self.opt.step(&mut self.params, grads);
    }
}

/// A network emitting a Gaussian: mean and softplus standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNet {
    pub net: Net,
    pub dim: usize,
}

impl GaussianNet {
    pub fn new(prefix: &str, input: usize, hidden: &[usize], dim: usize, lr: f64, clip: Option<f64>, seed: u64) -> Self {
        Self {
            net: Net::new(prefix, input, hidden, 2 * dim, lr, clip, seed),
            dim,
        }
    }

    /// `(mean, std)` on the tape.
    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> (Var, Var) {
        let out = self.net.forward(tape, bound, x);
        let mean = tape.slice_cols(out, 0, self.dim);
        let raw = tape.slice_cols(out, self.dim, self.dim);
        (mean, tape.softplus(raw))
    }

    /// Reparameterized sample `mean + std ⊙ noise`.
    pub fn sample(&self, tape: &mut Tape, bound: &Bound, x: Var, noise: &Mat) -> Var {
        let (mean, std) = self.forward(tape, bound, x);
        let n = tape.constant(noise.clone());
        let scaled = tape.mul(std, n);
        tape.add(mean, scaled)
    }

    pub fn eval(&self, x: &Mat) -> (Mat, Mat) {
        let out = self.net.eval(x);
        let mean = out.slice_cols(0, self.dim);
        let std = out.slice_cols(self.dim, self.dim).map(softplus);
        (mean, std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentNets {
    pub config: AgentConfig,
    /// Transition model g.
    pub g: GaussianNet,
    /// Reward model κ.
    pub kappa: GaussianNet,
    pub v: Net,
    pub q: Net,
    pub pi: Net,
    pub v_target: ParamSet,
    /// Current Gumbel temperature.
    pub temperature: f64,
}

impl AgentNets {
    pub fn new(config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (s, c) = (config.state_dim, config.num_choices);
        let clip = config.max_grad_norm;
        let g = GaussianNet::new("g", s + c, &config.transition_hidden, s, config.model_lr, clip, seed ^ 1);
        let kappa = GaussianNet::new("kappa", s + c, &config.reward_hidden, 1, config.model_lr, clip, seed ^ 2);
        let v = Net::new("v", s, &config.value_hidden, 1, config.value_lr, clip, seed ^ 3);
        let q = Net::new("q", s, &config.value_hidden, c, config.value_lr, clip, seed ^ 4);
        let pi = Net::new("pi", s, &config.policy_hidden, c, config.policy_lr, clip, seed ^ 5);
        let v_target = v.params.clone();
        Ok(Self {
            temperature: config.temperature,
            config,
            g,
            kappa,
            v,
            q,
            pi,
            v_target,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.config.state_dim
    }

    pub fn num_choices(&self) -> usize {
        self.config.num_choices
    }

    pub fn logits(&self, s: &[f64]) -> Vec<f64> {
        self.pi.eval(&Mat::row_vector(s.to_vec())).data
    }

    pub fn policy_probs(&self, s: &[f64]) -> Vec<f64> {
        let mut p = self.logits(s);
        softmax_in_place(&mut p);
        p
    }

    pub fn q_values(&self, s: &[f64]) -> Vec<f64> {
        self.q.eval(&Mat::row_vector(s.to_vec())).data
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        self.v.eval(&Mat::row_vector(s.to_vec())).item()
    }

    pub fn target_value(&self, s: &[f64]) -> f64 {
        self.v.mlp.eval(&self.v_target, &Mat::row_vector(s.to_vec())).item()
    }

    /// Batched `V_target` over the rows of `x`.
    pub fn target_values(&self, x: &Mat) -> Vec<f64> {
        self.v.mlp.eval(&self.v_target, x).data
    }

    pub fn update_target(&mut self) {
        self.v_target.polyak_from(&self.v.params, self.config.polyak);
    }

    pub fn anneal(&mut self) {
        self.temperature = (self.temperature * self.config.temperature_decay).max(self.config.temperature_min);
    }

    pub fn is_finite(&self) -> bool {
        [&self.g.net.params, &self.kappa.net.params, &self.v.params, &self.q.params, &self.pi.params, &self.v_target]
            .iter()
            .all(|p| p.is_finite())
    }

    pub fn save_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn load_json(r: impl Read) -> Result<Self> {
        let nets: Self = serde_json::from_reader(r)?;
        nets.config.validate()?;
        if !nets.is_finite() {
            return Err(Error::NonFinite("agent checkpoint".into()));
        }
        Ok(nets)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_json(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_json(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
