//! Mini-batch maximum-likelihood training.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::nhpi_nll;
use super::NhpiModel;
use crate::autodiff::{Adam, Mat};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::tpp::{EventSequence, IntegralMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Monte-Carlo samples per sequence; `None` integrates by quadrature.
    pub mc_samples: Option<usize>,
    pub max_grad_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            epochs: 10,
            batch_size: 8,
            mc_samples: Some(256),
            max_grad_norm: Some(10.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn optimizer(&self) -> Adam {
        let adam = Adam::new(self.lr);
        match self.max_grad_norm {
            Some(n) => adam.with_max_grad_norm(n),
            None => adam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-sequence NLL seen during each epoch.
    pub epoch_nll: Vec<f64>,
}

/// Runs `config.epochs` passes over `data`, stepping `optimizer` once per
/// mini-batch on the batch-mean NLL.
pub fn train_nhpi(
    model: &mut NhpiModel,
    data: &[EventSequence],
    config: &TrainConfig,
    optimizer: &mut Adam,
) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::Empty("trajectory buffer".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidParams("batch_size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_nll = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut rng = seeded(derive_seed(config.seed, epoch as u64));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let seqs: Vec<&EventSequence> = batch.iter().map(|&i| &data[i]).collect();
            let modes: Vec<IntegralMode> = batch
                .iter()
                .map(|&i| match config.mc_samples {
                    Some(samples) => IntegralMode::MonteCarlo {
                        samples,
                        seed: derive_seed(config.seed, (epoch * data.len() + i) as u64 + (1 << 32)),
                    },
                    None => IntegralMode::Exact,
                })
                .collect();
            total += nhpi_gradient_step(model, &seqs, &modes, optimizer)? * batch.len() as f64;
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("nhpi loss at epoch {epoch}")));
        }
        epoch_nll.push(mean);
    }
    Ok(TrainReport { epoch_nll })
}

/// One optimizer step on the mean NLL of `batch`; `modes[i]` sets the
/// integral estimator for `batch[i]`. Returns the mean loss before the step.
pub fn nhpi_gradient_step(
    model: &mut NhpiModel,
    batch: &[&EventSequence],
    modes: &[IntegralMode],
    optimizer: &mut Adam,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("nhpi batch".into()));
    }
    let mut total = 0.0;
    let mut acc: Option<Vec<Mat>> = None;
    for (seq, mode) in batch.iter().zip(modes) {
        let (loss, grads) = nhpi_nll(model, seq, *mode)?;
        total += loss;
        match &mut acc {
            None => acc = Some(grads),
            Some(a) => a.iter_mut().zip(&grads).for_each(|(x, g)| x.add_assign(g)),
        }
    }
    let mut grads = acc.unwrap();
    let inv = 1.0 / batch.len() as f64;
    grads.iter_mut().for_each(|g| g.scale_assign(inv));
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("nhpi gradient".into()));
    }
    optimizer.step(&mut model.params, &grads);
    Ok(total * inv)
}

/// Mean per-sequence NLL with quadrature integrals.
pub fn mean_nll(model: &NhpiModel, data: &[EventSequence]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set".into()));
    }
    let mut total = 0.0;
    for s in data {
        total += model.nll(s, IntegralMode::Exact)?;
    }
    Ok(total / data.len() as f64)
}
