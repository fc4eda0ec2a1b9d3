use std::sync::Arc;

use sedrl_core::env::{learned_env_adapter, make_synthetic_task};
use sedrl_core::harness::{run_reference, run_sedrl, ReferencePolicy, RunConfig};

fn tiny() -> RunConfig {
    RunConfig {
        max_env_steps: 300,
        warmup_trajectories: 2,
        warmup_nhpi_epochs: 1,
        nhpi_refresh_steps: 1,
        nhpi_batch: 2,
        nhpi_mc_samples: 16,
        value_hidden: vec![16],
        policy_hidden: vec![16],
        transition_hidden: vec![16],
        reward_hidden: vec![16],
        embed_dim: 16,
        batch_size: 8,
        ..RunConfig::default()
    }
}

#[test]
fn trained_world_model_drives_a_learned_environment() {
    let out = run_sedrl(&tiny()).unwrap();
    let task = make_synthetic_task("8usi", 0).unwrap();
    let model = Arc::new(out.checkpoint.nhpi.clone());
    let mut env = learned_env_adapter(model, task.reward(), task.episode_spec()).unwrap();
    let ret = env.rollout(5, |_, _| 0).unwrap();
    assert!(ret.is_finite());
    assert!(env.is_done());
}

#[test]
fn every_task_trains_and_references_run() {
    for task in ["8si", "16usi"] {
        let cfg = RunConfig { task: task.into(), ..tiny() };
        let out = run_sedrl(&cfg).unwrap();
        assert!(out.checkpoint.agent.is_finite());
        let refs = run_reference(&cfg, ReferencePolicy::Random).unwrap();
        assert!(!refs.episode_returns().is_empty());
    }
}
