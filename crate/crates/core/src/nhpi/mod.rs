//! Neural Hawkes process with interventions.
//!
//! Event-action streams are embedded as `[type + time, action]`, passed
//! through causally masked self-attention blocks, and each hidden row
//! parameterizes a decaying per-type intensity.

mod encode;
mod incremental;
mod loss;
mod sample;
mod train;

pub use encode::{encode_sequence, HiddenTrajectory};
pub use incremental::{IncrementalEncoder, Probe};
pub use loss::nhpi_nll;
pub use sample::{nhpi_thinning_sample, NhpiSimulator};
pub use train::{mean_nll, nhpi_gradient_step, train_nhpi, TrainConfig, TrainReport};

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::mat::softplus;
use crate::autodiff::{Mat, ParamId, ParamSet};
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::rng::seeded;
use crate::tpp::{Event, EventSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NhpiConfig {
    /// Event types `K`.
    pub num_types: usize,
    /// Type/time embedding width `M`; also the hidden width.
    pub embed_dim: usize,
    /// Action embedding width `N`.
    pub action_dim: usize,
    pub action_hidden: usize,
    pub attn_layers: usize,
    pub heads: usize,
    pub key_dim: usize,
    pub value_dim: usize,
    pub ffn_hidden: usize,
    /// Positions per attention window, including the start token.
    pub max_len: usize,
}

impl NhpiConfig {
    /// Defaults for the 8-event tasks.
    pub fn for_types(num_types: usize) -> Self {
        Self {
            num_types,
            embed_dim: 64,
            action_dim: 16,
            action_hidden: 16,
            attn_layers: 2,
            heads: 1,
            key_dim: 16,
            value_dim: 16,
            ffn_hidden: 64,
            max_len: 512,
        }
    }

    pub fn small(num_types: usize) -> Self {
        Self {
            num_types,
            embed_dim: 8,
            action_dim: 4,
            action_hidden: 4,
            attn_layers: 1,
            heads: 1,
            key_dim: 4,
            value_dim: 4,
            ffn_hidden: 8,
            max_len: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.num_types,
            self.embed_dim,
            self.action_dim,
            self.action_hidden,
            self.attn_layers,
            self.heads,
            self.key_dim,
            self.value_dim,
            self.ffn_hidden,
        ];
        if dims.contains(&0) {
            return Err(Error::InvalidParams("all nhpi dimensions must be >= 1".into()));
        }
        if self.max_len < 2 {
            return Err(Error::InvalidParams("max_len must be >= 2".into()));
        }
        Ok(())
    }

    /// `ω_m = 1 / 10000^{(m-1)/M}` for `m = 1..=M`.
    pub fn omega(&self) -> Vec<f64> {
        let m = self.embed_dim as f64;
        (0..self.embed_dim)
            .map(|j| 1.0 / 10000f64.powf(j as f64 / m))
            .collect()
    }

    pub(crate) fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embed_dim + self.action_dim
        } else {
            self.embed_dim
        }
    }
}

/// Component `m` (1-based) is `cos(ω_m t + ω_m i)` for even `m` and
/// `sin(ω_m t + ω_m i)` for odd `m`.
pub fn temporal_encoding(t: f64, i: usize, omega: &[f64]) -> Vec<f64> {
    omega
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let x = w * t + w * i as f64;
            if (j + 1) % 2 == 0 {
                x.cos()
            } else {
                x.sin()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LayerIds {
    pub wq: ParamId,
    pub wk: ParamId,
    pub wv: ParamId,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct NhpiIds {
    pub type_embed: ParamId,
    pub action: Mlp,
    pub layers: Vec<LayerIds>,
    pub w_mu: ParamId,
    pub w_eta: ParamId,
    pub w_zeta: ParamId,
}

/// Per-type head outputs at one anchor position.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub mu: Vec<f64>,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl HeadParams {
    /// Intensities `dt` after the anchor.
    pub fn intensity(&self, dt: f64) -> Vec<f64> {
        self.mu
            .iter()
            .zip(&self.eta)
            .zip(&self.zeta)
            .map(|((m, e), z)| softplus(m + (e - m) * (-z * dt).exp()))
            .collect()
    }

    /// `Σ_k softplus(max(μ_k, η_k))`, which dominates the head for all `dt ≥ 0`.
    pub fn bound(&self) -> f64 {
        self.mu
            .iter()
            .zip(&self.eta)
            .map(|(m, e)| softplus(m.max(*e)))
            .sum()
    }

    fn constant(rates: &[f64]) -> Self {
        let pre: Vec<f64> = rates.iter().map(|&c| inverse_softplus(c)).collect();
        Self {
            mu: pre.clone(),
            eta: pre,
            zeta: vec![1.0; rates.len()],
        }
    }
}

pub(crate) fn inverse_softplus(c: f64) -> f64 {
    if c > 30.0 {
        c
    } else {
        c.exp_m1().ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NhpiModel {
    pub config: NhpiConfig,
    pub params: ParamSet,
    pub(crate) ids: NhpiIds,
    /// Replaces the learned head with fixed per-type rates when set.
    pub head_override: Option<Vec<f64>>,
}

impl NhpiModel {
    pub fn new(config: NhpiConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded(seed);
        let mut params = ParamSet::new();
        let (k, m) = (config.num_types, config.embed_dim);
        let type_embed = params.add_weight("type_embed", k, m, &mut rng);
        let action = Mlp::new(&mut params, "action", k, &[config.action_hidden], config.action_dim, &mut rng);
        let mut layers = Vec::with_capacity(config.attn_layers);
        let attn_out = config.heads * config.value_dim;
        for l in 0..config.attn_layers {
            let d_in = config.layer_input(l);
            layers.push(LayerIds {
                wq: params.add_weight(format!("layer{l}.wq"), d_in, config.heads * config.key_dim, &mut rng),
                wk: params.add_weight(format!("layer{l}.wk"), d_in, config.heads * config.key_dim, &mut rng),
                wv: params.add_weight(format!("layer{l}.wv"), d_in, attn_out, &mut rng),
                w1: params.add_weight(format!("layer{l}.w1"), attn_out, config.ffn_hidden, &mut rng),
                b1: params.add_bias(format!("layer{l}.b1"), config.ffn_hidden),
                w2: params.add_weight(format!("layer{l}.w2"), config.ffn_hidden, m, &mut rng),
                b2: params.add_bias(format!("layer{l}.b2"), m),
            });
        }
        let w_mu = params.add_weight("head.mu", m, k, &mut rng);
        let w_eta = params.add_weight("head.eta", m, k, &mut rng);
        let w_zeta = params.add_weight("head.zeta", m, k, &mut rng);
        Ok(Self {
            config,
            params,
            ids: NhpiIds {
                type_embed,
                action,
                layers,
                w_mu,
                w_eta,
                w_zeta,
            },
            head_override: None,
        })
    }

    pub fn num_types(&self) -> usize {
        self.config.num_types
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.embed_dim
    }

    /// Fixes the head to constant per-type rates.
    pub fn with_constant_head(mut self, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != self.num_types() || rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParams("constant head needs K positive rates".into()));
        }
        self.head_override = Some(rates);
        Ok(self)
    }

    pub fn head_params(&self, h: &[f64]) -> HeadParams {
        if let Some(rates) = &self.head_override {
            return HeadParams::constant(rates);
        }
        let hm = Mat::row_vector(h.to_vec());
        let lin = |id: ParamId| hm.matmul(self.params.get(id)).data;
        HeadParams {
            mu: lin(self.ids.w_mu).into_iter().map(|x| x.max(0.0)).collect(),
            eta: lin(self.ids.w_eta).into_iter().map(|x| x.max(0.0)).collect(),
            zeta: lin(self.ids.w_zeta).into_iter().map(softplus).collect(),
        }
    }

    /// `λ_k(t)` from hidden row `h` anchored at `t_i`.
    pub fn intensity_head(&self, h: &[f64], t_i: f64, t: f64) -> Result<Vec<f64>> {
        if t < t_i {
            return Err(Error::TimeBeforeHistory { query: t, last: t_i });
        }
        Ok(self.head_params(h).intensity(t - t_i))
    }

    /// Splits a sequence into attention windows of at most `max_len - 1`
    /// entries. Each window is `(start_time, entries, end_time)`; windows
    /// tile `[0, horizon)`.
    pub(crate) fn windows<'a>(&self, seq: &'a EventSequence) -> Vec<(f64, &'a [Event], f64)> {
        let cap = self.config.max_len - 1;
        let events = &seq.events;
        if events.is_empty() {
            return vec![(0.0, events.as_slice(), seq.horizon)];
        }
        let mut out = Vec::new();
        let mut start = 0.0;
        let chunks: Vec<&[Event]> = events.chunks(cap).collect();
        for (i, chunk) in chunks.iter().enumerate() {
            let end = if i + 1 == chunks.len() {
                seq.horizon
            } else {
                chunk.last().unwrap().t
            };
            out.push((start, *chunk, end));
            start = end;
        }
        out
    }

    pub fn save_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn load_json(r: impl Read) -> Result<Self> {
        let model: Self = serde_json::from_reader(r)?;
        model.config.validate()?;
        if !model.params.is_finite() {
            return Err(Error::NonFinite("checkpoint weights".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.save_json(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::load_json(f)
    }
}
