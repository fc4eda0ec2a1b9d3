//! A fitted intensity model used as the environment.

use std::sync::Arc;

use super::{Env, EpisodeSpec, RewardFn};
use crate::error::Result;
use crate::nhpi::{NhpiModel, NhpiSimulator};

pub type LearnedEnv<R> = Env<NhpiSimulator<Arc<NhpiModel>>, R>;

/// Wraps `model` so it generates events by thinning under the same step
/// contract as the ground-truth environment.
pub fn learned_env_adapter<R: RewardFn>(model: Arc<NhpiModel>, reward: R, spec: EpisodeSpec) -> Result<LearnedEnv<R>> {
    Env::new(NhpiSimulator::new(model), reward, spec)
}
