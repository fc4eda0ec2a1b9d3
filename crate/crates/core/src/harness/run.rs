use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffers::{StepBuffer, TrajectoryBuffer};
use super::config::RunConfig;
use super::metrics::{LossAverager, MetricsLog};
use super::stats::mean_std;
use crate::agent::{buffer_tau, gumbel_action, sample_tau, AgentNets, HeadRecord, LatentState, TransitionTuple};
use crate::autodiff::Adam;
use crate::env::{make_synthetic_task, EnvConfig, EpisodeSpec, HawkesEnv};
use crate::error::{Error, Result};
use crate::nhpi::{nhpi_gradient_step, train_nhpi, HeadParams, IncrementalEncoder, NhpiModel, Probe, TrainConfig};
use crate::rng::{derive_seed, stream, SimRng};
use crate::tpp::jsonl::EpisodeRecord;
use crate::tpp::{Event, IntegralMode};

const NHPI_INIT: u64 = 1;
const AGENT_INIT: u64 = 2;
const AGENT_RNG: u64 = 3;
const NHPI_RNG: u64 = 4;
const EVAL_RNG: u64 = 5;
const WARMUP_EPISODES: u64 = 1 << 20;
const TRAIN_EPISODES: u64 = 2 << 20;
const EVAL_EPISODES: u64 = 3 << 20;

/// Encodes the live episode and proposes decision states.
struct Actor<'a> {
    model: &'a NhpiModel,
    spec: &'a EpisodeSpec,
    encoder: IncrementalEncoder,
}

struct Decision {
    s: Vec<f64>,
    probes: Vec<Option<Probe>>,
    heads: Vec<HeadRecord>,
}

impl<'a> Actor<'a> {
    fn new(model: &'a NhpiModel, spec: &'a EpisodeSpec) -> Self {
        Self {
            model,
            spec,
            encoder: IncrementalEncoder::new(model, 0.0),
        }
    }

    fn observe(&mut self, events: &[Event]) -> Result<()> {
        for e in events {
            self.encoder.push(self.model, *e)?;
        }
        Ok(())
    }

    /// State `h̃` at a decision at `t`; with `all`, every candidate choice
    /// is probed and its intensity head kept.
    fn decide(&mut self, t: f64, all: bool) -> Result<Decision> {
        let n = if all { self.spec.num_choices() } else { 1 };
        let mut probes = Vec::with_capacity(self.spec.num_choices());
        let mut heads = Vec::new();
        for c in 0..n {
            let p = self.encoder.probe(self.model, &Event::new(t, 0, self.spec.choice_to_action(c)))?;
            if all {
                heads.push(HeadRecord::from(&self.model.head_params(&p.hidden)));
            }
            probes.push(Some(p));
        }
        probes.resize(self.spec.num_choices(), None);
        let s = probes[0].as_ref().unwrap().hidden.clone();
        Ok(Decision { s, probes, heads })
    }

    fn commit(&mut self, mut d: Decision, choice: usize, t: f64) -> Result<()> {
        let p = match d.probes[choice].take() {
            Some(p) => p,
            None => self.encoder.probe(self.model, &Event::new(t, 0, self.spec.choice_to_action(choice)))?,
        };
        self.encoder.commit(p);
        Ok(())
    }
}

/// One episode acting on NHPI states; returns (return, steps, actions taken).
fn policy_episode(
    env: &mut HawkesEnv,
    model: &NhpiModel,
    seed: u64,
    mut choose: impl FnMut(&[f64]) -> usize,
) -> Result<(f64, u64, u64)> {
    let spec = env.spec().clone();
    let obs = env.reset(seed)?;
    let mut actor = Actor::new(model, &spec);
    actor.observe(&obs.events)?;
    let (mut t, mut done) = (obs.decision_time, obs.done);
    let (mut ret, mut steps, mut acts) = (0.0, 0, 0);
    while !done {
        let d = actor.decide(t, false)?;
        let c = choose(&d.s);
        actor.commit(d, c, t)?;
        let st = env.step(spec.choice_to_action(c))?;
        actor.observe(&st.events)?;
        ret += st.reward;
        steps += 1;
        acts += u64::from(c != 0);
        t = st.decision_time;
        done = st.done;
    }
    Ok((ret, steps, acts))
}

/// Trained models plus the run's metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub nhpi: NhpiModel,
    pub agent: AgentNets,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        serde_json::to_writer(std::io::BufWriter::new(std::fs::File::create(path)?), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let c: Self = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if !c.agent.is_finite() || !c.nhpi.params.is_finite() {
            return Err(Error::NonFinite("checkpoint".into()));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: MetricsLog,
    pub checkpoint: Checkpoint,
}

impl RunOutput {
    /// Writes `metrics.csv`, `config.json` and `checkpoint.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.metrics.save(dir.join("metrics.csv"))?;
        write_sidecar(dir, &self.checkpoint.config, "sedrl")?;
        self.checkpoint.save(dir.join("checkpoint.json"))
    }
}

/// JSON sidecar holding the resolved config.
pub fn write_sidecar(dir: &Path, config: &RunConfig, method: &str) -> Result<()> {
    let side = serde_json::json!({
        "method": method,
        "config": config,
        "off_grid": config.off_grid(),
    });
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

fn task_env(config: &RunConfig) -> Result<(EnvConfig, HawkesEnv)> {
    let task = make_synthetic_task(&config.task, config.task_seed)?;
    let env = HawkesEnv::from_config(&task)?;
    Ok((task, env))
}

fn mc_mode(config: &RunConfig, seed: u64) -> IntegralMode {
    match config.nhpi_mc_samples {
        0 => IntegralMode::Exact,
        samples => IntegralMode::MonteCarlo { samples, seed },
    }
}

/// Warm-up, NHPI fit, then one agent update per environment step with an
/// NHPI refresh after every finished episode.
pub fn run_sedrl(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let seed = config.seed;
    let (task, mut env) = task_env(config)?;
    let spec = task.episode_spec();
    let mut nhpi = NhpiModel::new(config.nhpi_config(task.num_types), derive_seed(seed, NHPI_INIT))?;
    let mut agent = AgentNets::new(
        config.agent_config(config.embed_dim, spec.num_choices()),
        derive_seed(seed, AGENT_INIT),
    )?;
    let mut rng = stream(seed, AGENT_RNG);
    let mut nrng = stream(seed, NHPI_RNG);
    let mut metrics = MetricsLog::new();
    let mut trajectories = TrajectoryBuffer::new(config.trajectory_capacity);

    for i in 0..config.warmup_trajectories as u64 {
        let temp = agent.temperature;
        policy_episode(&mut env, &nhpi, derive_seed(seed, WARMUP_EPISODES + i), |s| {
            gumbel_action(&agent, s, temp, &mut rng).1
        })?;
        trajectories.push(env.stream().clone(), true)?;
    }
    let mut nhpi_opt = Adam::new(config.nhpi_lr).with_max_grad_norm(config.max_grad_norm);
    let warm: Vec<_> = trajectories.iter().cloned().collect();
    let fit = TrainConfig {
        lr: config.nhpi_lr,
        epochs: config.warmup_nhpi_epochs,
        batch_size: config.nhpi_batch,
        mc_samples: (config.nhpi_mc_samples > 0).then_some(config.nhpi_mc_samples),
        max_grad_norm: Some(config.max_grad_norm),
        seed: nrng.gen(),
    };
    let report = train_nhpi(&mut nhpi, &warm, &fit, &mut nhpi_opt)?;
    for (e, v) in report.epoch_nll.iter().enumerate() {
        metrics.push("nhpi", 0, e as u64, "nll", *v)?;
    }

    let need_heads = config.imagine_tau;
    let (schedule, horizon) = (spec.schedule, spec.horizon);
    let tau_fn = |t: &TransitionTuple, c: usize, r: &mut SimRng| {
        if t.heads.is_empty() {
            buffer_tau(t, c, r)
        } else {
            sample_tau(&HeadParams::from(&t.heads[c]), t.s.t, schedule, horizon, r)
        }
    };
    let mut buffer = StepBuffer::new(config.buffer_capacity);
    let mut losses = LossAverager::default();
    let mut steps = 0u64;
    let mut episode = 0u64;
    while steps < config.max_env_steps {
        let obs = env.reset(derive_seed(seed, TRAIN_EPISODES + episode))?;
        let mut actor = Actor::new(&nhpi, &spec);
        actor.observe(&obs.events)?;
        let (mut t, mut done) = (obs.decision_time, obs.done);
        let (mut ret, mut acts) = (0.0, 0u64);
        let mut pending: Option<TransitionTuple> = None;
        while !done && steps < config.max_env_steps {
            let d = actor.decide(t, need_heads)?;
            if let Some(mut p) = pending.take() {
                p.s_next = LatentState { s: d.s.clone(), t };
                buffer.push(p);
            }
            let choice = gumbel_action(&agent, &d.s, agent.temperature, &mut rng).1;
            let s = LatentState { s: d.s.clone(), t };
            let heads = d.heads.clone();
            actor.commit(d, choice, t)?;
            let st = env.step(spec.choice_to_action(choice))?;
            actor.observe(&st.events)?;
            steps += 1;
            ret += st.reward;
            acts += u64::from(choice != 0);
            let tuple = TransitionTuple {
                s_next: LatentState {
                    s: s.s.clone(),
                    t: st.decision_time,
                },
                s,
                a: choice,
                tau: st.tau,
                r: st.reward,
                done: st.done,
                heads,
            };
            if st.done {
                buffer.push(tuple);
            } else {
                pending = Some(tuple);
            }
            if buffer.len() >= config.batch_size {
                let batch = buffer.sample(config.batch_size, &mut rng)?;
                let l = agent.update(&batch, tau_fn, &mut rng)?;
                losses.add(&[
                    ("transition", l.transition),
                    ("reward", l.reward),
                    ("q", l.q),
                    ("v", l.v),
                    ("policy_objective", l.policy_objective),
                ]);
                if losses.count() as u64 >= config.log_every {
                    losses.flush(&mut metrics, steps, episode)?;
                }
            }
            t = st.decision_time;
            done = st.done;
        }
        drop(actor);
        if !done {
            break;
        }
        metrics.push("episode", steps, episode, "return", ret)?;
        metrics.push("episode", steps, episode, "actions", acts as f64)?;
        trajectories.push(env.stream().clone(), true)?;
        if config.nhpi_refresh_steps > 0 {
            let mut total = 0.0;
            for _ in 0..config.nhpi_refresh_steps {
                let batch = trajectories.sample(config.nhpi_batch, &mut nrng);
                let modes: Vec<IntegralMode> = batch.iter().map(|_| mc_mode(config, nrng.gen())).collect();
                total += nhpi_gradient_step(&mut nhpi, &batch, &modes, &mut nhpi_opt)?;
            }
            metrics.push("nhpi", steps, episode, "nll", total / config.nhpi_refresh_steps as f64)?;
        }
        if config.eval_every > 0 && (episode + 1).is_multiple_of(config.eval_every) {
            let ck = Checkpoint {
                config: config.clone(),
                nhpi: nhpi.clone(),
                agent: agent.clone(),
            };
            let summary = evaluate(&ck, &config.task, config.eval_episodes, derive_seed(seed, episode))?;
            metrics.push("eval", steps, episode, "return_mean", summary.mean)?;
        }
        episode += 1;
    }
    losses.flush(&mut metrics, steps, episode)?;
    Ok(RunOutput {
        metrics,
        checkpoint: Checkpoint {
            config: config.clone(),
            nhpi,
            agent,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferencePolicy {
    Random,
    Noop,
}

impl std::str::FromStr for ReferencePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "noop" => Ok(Self::Noop),
            _ => Err(Error::Parse(format!("unknown reference policy `{s}`"))),
        }
    }
}

fn reference_choice(policy: ReferencePolicy, choices: usize, rng: &mut SimRng) -> usize {
    match policy {
        ReferencePolicy::Noop => 0,
        ReferencePolicy::Random => rng.gen_range(0..choices),
    }
}

/// One reference episode; returns (return, steps, actions taken).
fn reference_episode(env: &mut HawkesEnv, policy: ReferencePolicy, seed: u64, budget: u64, rng: &mut SimRng) -> Result<Option<(f64, u64, u64)>> {
    let spec = env.spec().clone();
    let obs = env.reset(seed)?;
    let mut done = obs.done;
    let (mut ret, mut steps, mut acts) = (0.0, 0, 0);
    while !done {
        if steps == budget {
            return Ok(None);
        }
        let c = reference_choice(policy, spec.num_choices(), rng);
        let st = env.step(spec.choice_to_action(c))?;
        ret += st.reward;
        steps += 1;
        acts += u64::from(c != 0);
        done = st.done;
    }
    Ok(Some((ret, steps, acts)))
}

/// Uniform-random or always-no-op episodes over the same step budget and
/// episode seeds as [`run_sedrl`].
pub fn run_reference(config: &RunConfig, policy: ReferencePolicy) -> Result<MetricsLog> {
    config.validate()?;
    let (_, mut env) = task_env(config)?;
    let mut rng = stream(config.seed, AGENT_RNG);
    let mut metrics = MetricsLog::new();
    let mut steps = 0u64;
    let mut episode = 0u64;
    while steps < config.max_env_steps {
        let seed = derive_seed(config.seed, TRAIN_EPISODES + episode);
        let Some((ret, n, acts)) = reference_episode(&mut env, policy, seed, config.max_env_steps - steps, &mut rng)? else {
            break;
        };
        steps += n;
        metrics.push("episode", steps, episode, "return", ret)?;
        metrics.push("episode", steps, episode, "actions", acts as f64)?;
        episode += 1;
    }
    Ok(metrics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single episode.
    pub std: f64,
    pub returns: Vec<f64>,
}

impl EvalSummary {
    fn from_returns(returns: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&returns);
        Self { mean, std, returns }
    }
}

/// Frozen-policy episodes of a trained checkpoint on `task`.
pub fn evaluate(checkpoint: &Checkpoint, task: &str, episodes: usize, seed: u64) -> Result<EvalSummary> {
    let cfg = make_synthetic_task(task, checkpoint.config.task_seed)?;
    let spec = cfg.episode_spec();
    if checkpoint.nhpi.num_types() != cfg.num_types
        || checkpoint.agent.num_choices() != spec.num_choices()
        || checkpoint.agent.state_dim() != checkpoint.nhpi.hidden_dim()
    {
        return Err(Error::Incompatible(format!(
            "checkpoint (K={}, choices={}) does not fit task {task} (K={}, choices={})",
            checkpoint.nhpi.num_types(),
            checkpoint.agent.num_choices(),
            cfg.num_types,
            spec.num_choices()
        )));
    }
    let mut env = HawkesEnv::from_config(&cfg)?;
    let mut rng = stream(seed, EVAL_RNG);
    let agent = &checkpoint.agent;
    let mut returns = Vec::with_capacity(episodes);
    for i in 0..episodes as u64 {
        let (r, _, _) = policy_episode(&mut env, &checkpoint.nhpi, derive_seed(seed, EVAL_EPISODES + i), |s| {
            gumbel_action(agent, s, agent.temperature, &mut rng).1
        })?;
        returns.push(r);
    }
    Ok(EvalSummary::from_returns(returns))
}

/// Reference-policy episodes with the same episode seeds as [`evaluate`].
pub fn evaluate_reference(task: &str, task_seed: u64, policy: ReferencePolicy, episodes: usize, seed: u64) -> Result<EvalSummary> {
    let cfg = make_synthetic_task(task, task_seed)?;
    let mut env = HawkesEnv::from_config(&cfg)?;
    let mut rng = stream(seed, EVAL_RNG);
    let mut returns = Vec::with_capacity(episodes);
    for i in 0..episodes as u64 {
        let (r, _, _) = reference_episode(&mut env, policy, derive_seed(seed, EVAL_EPISODES + i), u64::MAX, &mut rng)?
            .expect("unbounded budget");
        returns.push(r);
    }
    Ok(EvalSummary::from_returns(returns))
}

/// Ground-truth rollouts under a reference policy, with per-decision rewards.
pub fn simulate_episodes(
    task: &str,
    task_seed: u64,
    policy: ReferencePolicy,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeRecord>> {
    let cfg = make_synthetic_task(task, task_seed)?;
    let mut env = HawkesEnv::from_config(&cfg)?;
    let mut rng = stream(seed, AGENT_RNG);
    let mut out = Vec::with_capacity(episodes);
    for i in 0..episodes as u64 {
        reference_episode(&mut env, policy, derive_seed(seed, TRAIN_EPISODES + i), u64::MAX, &mut rng)?;
        out.push(EpisodeRecord {
            sequence: env.stream().clone(),
            rewards: env.rewards().to_vec(),
        });
    }
    Ok(out)
}
