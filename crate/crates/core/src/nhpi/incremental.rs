//! Row-at-a-time encoder with cached keys and values.
//!
//! Appending one entry attends over the cached rows of every layer, which
//! gives exactly the rows a full causal pass would produce. When the window
//! is full, the oldest half is dropped and the rest is re-encoded behind a
//! fresh start token.

use super::NhpiModel;
use crate::autodiff::mat::{relu, softmax_in_place};
use crate::autodiff::Mat;
use crate::error::{Error, Result};
use crate::tpp::Event;

#[derive(Debug, Clone)]
pub struct IncrementalEncoder {
    t0: f64,
    window: Vec<Event>,
    hidden: Vec<Vec<f64>>,
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

/// Result of encoding one candidate entry without appending it.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub event: Event,
    pub hidden: Vec<f64>,
    position: usize,
    rows: Vec<(Vec<f64>, Vec<f64>)>,
}

impl IncrementalEncoder {
    pub fn new(model: &NhpiModel, t0: f64) -> Self {
        let layers = model.config.attn_layers;
        let mut enc = Self {
            t0,
            window: Vec::new(),
            hidden: Vec::new(),
            keys: vec![Vec::new(); layers],
            values: vec![Vec::new(); layers],
        };
        let start = enc.compute(model, &Event::new(t0, 0, 0), 0);
        enc.apply(start);
        enc
    }

    pub fn window(&self) -> &[Event] {
        &self.window
    }

    pub fn window_start(&self) -> f64 {
        self.t0
    }

    pub fn last_time(&self) -> f64 {
        self.window.last().map_or(self.t0, |e| e.t)
    }

    pub fn last_hidden(&self) -> &[f64] {
        self.hidden.last().unwrap()
    }

    pub fn hidden_rows(&self) -> &[Vec<f64>] {
        &self.hidden
    }

    /// Hidden row the candidate `event` would receive if appended now.
    pub fn probe(&mut self, model: &NhpiModel, event: &Event) -> Result<Probe> {
        if !(event.t > self.last_time()) || !event.t.is_finite() {
            return Err(Error::InvalidSequence(format!(
                "entry at {} does not follow {}",
                event.t,
                self.last_time()
            )));
        }
        if event.k > model.num_types() || event.a > model.num_types() {
            return Err(Error::InvalidSequence(format!("entry {event:?} out of range")));
        }
        if self.hidden.len() >= model.config.max_len {
            self.shrink(model);
        }
        Ok(self.compute(model, event, self.hidden.len()))
    }

    /// Appends a probed entry. Panics if the encoder moved since the probe.
    pub fn commit(&mut self, probe: Probe) {
        assert_eq!(probe.position, self.hidden.len(), "stale probe");
        self.window.push(probe.event);
        self.apply(probe);
    }

    pub fn push(&mut self, model: &NhpiModel, event: Event) -> Result<&[f64]> {
        let p = self.probe(model, &event)?;
        self.commit(p);
        Ok(self.last_hidden())
    }

    fn apply(&mut self, probe: Probe) {
        for (l, (k, v)) in probe.rows.into_iter().enumerate() {
            self.keys[l].extend(k);
            self.values[l].extend(v);
        }
        self.hidden.push(probe.hidden);
    }

    fn shrink(&mut self, model: &NhpiModel) {
        let keep = (model.config.max_len - 1) / 2;
        let drop = self.window.len() - keep;
        let t0 = self.window[drop - 1].t;
        let kept: Vec<Event> = self.window[drop..].to_vec();
        *self = Self::new(model, t0);
        for e in kept {
            let p = self.compute(model, &e, self.hidden.len());
            self.window.push(e);
            self.apply(p);
        }
    }

    fn compute(&self, model: &NhpiModel, event: &Event, position: usize) -> Probe {
        let cfg = &model.config;
        let params = &model.params;
        let omega = cfg.omega();
        let mut x = super::temporal_encoding(event.t, position, &omega);
        if event.k > 0 {
            let u = params.get(model.ids.type_embed);
            for (xi, ui) in x.iter_mut().zip(u.row(event.k - 1)) {
                *xi += ui;
            }
        }
        let mut onehot = Mat::zeros(1, cfg.num_types);
        if event.a > 0 {
            onehot.set(0, event.a - 1, 1.0);
        }
        x.extend(model.ids.action.eval(params, &onehot).data);

        let scale = 1.0 / (cfg.key_dim as f64).sqrt();
        let (hk, hv) = (cfg.heads * cfg.key_dim, cfg.heads * cfg.value_dim);
        let mut rows = Vec::with_capacity(cfg.attn_layers);
        for (l, ids) in model.ids.layers.iter().enumerate() {
            let xm = Mat::row_vector(x);
            let q = xm.matmul(params.get(ids.wq)).data;
            let k = xm.matmul(params.get(ids.wk)).data;
            let v = xm.matmul(params.get(ids.wv)).data;
            let (ck, cv) = (&self.keys[l], &self.values[l]);
            let mut att = vec![0.0; hv];
            let mut scores = vec![0.0; position + 1];
            for h in 0..cfg.heads {
                let qh = &q[h * cfg.key_dim..(h + 1) * cfg.key_dim];
                for (j, s) in scores.iter_mut().enumerate() {
                    let kj = if j < position {
                        &ck[j * hk + h * cfg.key_dim..j * hk + (h + 1) * cfg.key_dim]
                    } else {
                        &k[h * cfg.key_dim..(h + 1) * cfg.key_dim]
                    };
                    *s = qh.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                }
                softmax_in_place(&mut scores);
                let out = &mut att[h * cfg.value_dim..(h + 1) * cfg.value_dim];
                for (j, &p) in scores.iter().enumerate() {
                    let vj = if j < position {
                        &cv[j * hv + h * cfg.value_dim..j * hv + (h + 1) * cfg.value_dim]
                    } else {
                        &v[h * cfg.value_dim..(h + 1) * cfg.value_dim]
                    };
                    for (o, vv) in out.iter_mut().zip(vj) {
                        *o += p * vv;
                    }
                }
            }
            let f = Mat::row_vector(att)
                .matmul(params.get(ids.w1))
                .add_row(params.get(ids.b1))
                .map(relu);
            x = f.matmul(params.get(ids.w2)).add_row(params.get(ids.b2)).data;
            rows.push((k, v));
        }
        Probe {
            event: *event,
            hidden: x,
            position,
            rows,
        }
    }
}
