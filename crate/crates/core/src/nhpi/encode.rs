//! Full-window forward pass on a [`Tape`].

use super::{IncrementalEncoder, NhpiModel};
use crate::autodiff::{Bound, Mat, Tape, Var};
use crate::error::{Error, Result};
use crate::tpp::{Event, EventSequence};

/// Hidden rows of every entry of a sequence (the start token excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenTrajectory {
    pub times: Vec<f64>,
    pub h: Vec<Vec<f64>>,
    /// `h` recomputed with the entry's own action set to zero.
    pub h_tilde: Vec<Vec<f64>>,
}

/// Input rows of a window: a start token at `t0` followed by `entries`.
pub(crate) struct WindowInputs {
    pub types: Mat,
    pub time_enc: Mat,
    pub actions: Mat,
    pub times: Vec<f64>,
}

impl NhpiModel {
    pub(crate) fn window_inputs(&self, entries: &[Event], t0: f64) -> WindowInputs {
        let k = self.config.num_types;
        let m = self.config.embed_dim;
        let omega = self.config.omega();
        let len = entries.len() + 1;
        let mut types = Mat::zeros(len, k);
        let mut actions = Mat::zeros(len, k);
        let mut time_enc = Mat::zeros(len, m);
        let mut times = Vec::with_capacity(len);
        times.push(t0);
        time_enc.row_mut(0).copy_from_slice(&super::temporal_encoding(t0, 0, &omega));
        for (i, e) in entries.iter().enumerate() {
            let p = i + 1;
            if e.k > 0 {
                types.set(p, e.k - 1, 1.0);
            }
            if e.a > 0 {
                actions.set(p, e.a - 1, 1.0);
            }
            time_enc
                .row_mut(p)
                .copy_from_slice(&super::temporal_encoding(e.t, p, &omega));
            times.push(e.t);
        }
        WindowInputs {
            types,
            time_enc,
            actions,
            times,
        }
    }

    /// Hidden matrix `H` (positions × M) of one window.
    pub(crate) fn forward_window(&self, tape: &mut Tape, bound: &Bound, inputs: &WindowInputs) -> Var {
        let cfg = &self.config;
        let y = tape.constant(inputs.types.clone());
        let emb = tape.matmul(y, bound.get(self.ids.type_embed));
        let z = tape.constant(inputs.time_enc.clone());
        let typed = tape.add(emb, z);
        let a = tape.constant(inputs.actions.clone());
        let act = self.ids.action.forward(tape, bound, a);
        let mut x = tape.concat_cols(&[typed, act]);
        let scale = 1.0 / (cfg.key_dim as f64).sqrt();
        for layer in &self.ids.layers {
            let q = tape.matmul(x, bound.get(layer.wq));
            let k = tape.matmul(x, bound.get(layer.wk));
            let v = tape.matmul(x, bound.get(layer.wv));
            let mut outs = Vec::with_capacity(cfg.heads);
            for h in 0..cfg.heads {
                let (qh, kh, vh) = if cfg.heads == 1 {
                    (q, k, v)
                } else {
                    (
                        tape.slice_cols(q, h * cfg.key_dim, cfg.key_dim),
                        tape.slice_cols(k, h * cfg.key_dim, cfg.key_dim),
                        tape.slice_cols(v, h * cfg.value_dim, cfg.value_dim),
                    )
                };
                let s = tape.matmul_t(qh, kh);
                let s = tape.scale(s, scale);
                let p = tape.causal_softmax_rows(s);
                outs.push(tape.matmul(p, vh));
            }
            let att = if outs.len() == 1 { outs[0] } else { tape.concat_cols(&outs) };
            let f = tape.matmul(att, bound.get(layer.w1));
            let f = tape.add_row(f, bound.get(layer.b1));
            let f = tape.relu(f);
            let o = tape.matmul(f, bound.get(layer.w2));
            x = tape.add_row(o, bound.get(layer.b2));
        }
        x
    }

    /// Head matrices `(μ, η, ζ)`, each positions × K.
    pub(crate) fn head_vars(&self, tape: &mut Tape, bound: &Bound, hidden: Var) -> (Var, Var, Var) {
        let rows = tape.value(hidden).rows;
        if let Some(rates) = &self.head_override {
            let hp = super::HeadParams::constant(rates);
            let tile = |v: &[f64]| {
                let mut m = Mat::zeros(rows, v.len());
                for r in 0..rows {
                    m.row_mut(r).copy_from_slice(v);
                }
                m
            };
            let mu = tape.constant(tile(&hp.mu));
            let eta = tape.constant(tile(&hp.eta));
            let zeta = tape.constant(tile(&hp.zeta));
            return (mu, eta, zeta);
        }
        let mu = tape.matmul(hidden, bound.get(self.ids.w_mu));
        let mu = tape.relu(mu);
        let eta = tape.matmul(hidden, bound.get(self.ids.w_eta));
        let eta = tape.relu(eta);
        let zeta = tape.matmul(hidden, bound.get(self.ids.w_zeta));
        let zeta = tape.softplus(zeta);
        (mu, eta, zeta)
    }

    /// Hidden rows of a window computed in one tape pass, start token first.
    pub fn encode_window(&self, entries: &[Event], t0: f64) -> Result<Vec<Vec<f64>>> {
        if entries.len() + 1 > self.config.max_len {
            return Err(Error::SequenceTooLong {
                len: entries.len(),
                max: self.config.max_len - 1,
            });
        }
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let inputs = self.window_inputs(entries, t0);
        let h = self.forward_window(&mut tape, &bound, &inputs);
        let hv = tape.value(h);
        Ok((0..hv.rows).map(|r| hv.row(r).to_vec()).collect())
    }
}

/// Encodes a sequence that fits in one window, producing `h` and the
/// action-toggled `h̃` for every entry.
pub fn encode_sequence(model: &NhpiModel, sequence: &EventSequence) -> Result<HiddenTrajectory> {
    sequence.validate()?;
    if sequence.len() + 1 > model.config.max_len {
        return Err(Error::SequenceTooLong {
            len: sequence.len(),
            max: model.config.max_len - 1,
        });
    }
    let mut enc = IncrementalEncoder::new(model, 0.0);
    let mut out = HiddenTrajectory {
        times: Vec::with_capacity(sequence.len()),
        h: Vec::with_capacity(sequence.len()),
        h_tilde: Vec::with_capacity(sequence.len()),
    };
    for e in &sequence.events {
        let toggled = enc.probe(model, &Event::new(e.t, e.k, 0))?;
        let actual = if e.a == 0 { toggled.clone() } else { enc.probe(model, e)? };
        out.times.push(e.t);
        out.h_tilde.push(toggled.hidden.clone());
        out.h.push(actual.hidden.clone());
        enc.commit(actual);
    }
    Ok(out)
}
