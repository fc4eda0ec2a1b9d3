use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sedrl_core::harness::{
    evaluate, evaluate_reference, export_plot_data, run_reference, run_sedrl, simulate_episodes, write_plot_csv,
    write_sidecar, Checkpoint, MetricsLog, ReferencePolicy, RunConfig,
};
use sedrl_core::nhpi::{mean_nll, train_nhpi, NhpiModel, TrainConfig};
use sedrl_core::tpp::jsonl::{read_sequences, write_episode};

#[derive(Parser)]
#[command(name = "sedrl", about = "Event-driven model-based RL over marked point processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Task name: 8si, 8usi, 16si or 16usi.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Environment-step budget.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => RunConfig::default(),
        };
        if let Some(t) = &self.task {
            c.task = t.clone();
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(s) = self.steps {
            c.max_env_steps = s;
        }
        c.validate()?;
        Ok(c)
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().context("--out is required")
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ground-truth Hawkes rollouts to JSONL.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "random")]
        policy: String,
    },
    /// Fit an NHPI model to a JSONL file.
    FitNhpi {
        #[command(flatten)]
        common: Common,
        data: PathBuf,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
    },
    /// Train SEDRL.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint or a reference policy.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        policy: Option<String>,
    },
    /// Run a random or no-op reference over the training budget.
    Reference {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: String,
    },
    /// Learning-curve table from metrics files.
    PlotData {
        #[command(flatten)]
        common: Common,
        logs: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[arg(long, default_value = "sedrl")]
        method: String,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { common, policy } => {
            let c = common.run_config()?;
            let policy: ReferencePolicy = policy.parse()?;
            let episodes = simulate_episodes(&c.task, c.task_seed, policy, common.episodes.unwrap_or(10), c.seed)?;
            let mut w = BufWriter::new(File::create(common.out()?)?);
            for e in &episodes {
                write_episode(&mut w, &e.sequence, &e.rewards)?;
            }
            w.flush()?;
        }
        Command::FitNhpi { common, data, epochs } => {
            let c = common.run_config()?;
            let seqs = read_sequences(BufReader::new(File::open(&data)?))?;
            let Some(first) = seqs.first() else {
                bail!("{} holds no trajectories", data.display());
            };
            let mut model = NhpiModel::new(c.nhpi_config(first.num_types), c.seed)?;
            let fit = TrainConfig {
                lr: c.nhpi_lr,
                epochs,
                batch_size: c.nhpi_batch,
                mc_samples: (c.nhpi_mc_samples > 0).then_some(c.nhpi_mc_samples),
                max_grad_norm: Some(c.max_grad_norm),
                seed: c.seed,
            };
            let mut opt = fit.optimizer();
            let report = train_nhpi(&mut model, &seqs, &fit, &mut opt)?;
            let dir = common.out()?;
            std::fs::create_dir_all(dir)?;
            model.save(dir.join("nhpi.json"))?;
            let mut w = BufWriter::new(File::create(dir.join("nll.csv"))?);
            writeln!(w, "epoch,nll")?;
            for (e, v) in report.epoch_nll.iter().enumerate() {
                writeln!(w, "{e},{v}")?;
            }
            println!("final mean NLL {}", mean_nll(&model, &seqs)?);
        }
        Command::Train { common } => {
            let c = common.run_config()?;
            for k in c.off_grid() {
                eprintln!("warning: {k} is outside the documented search grid");
            }
            let out = run_sedrl(&c)?;
            out.write(common.out()?)?;
            if let Some(m) = out.metrics.final_mean_return(c.max_env_steps, 0.1) {
                println!("final 10% mean return {m}");
            }
        }
        Command::Evaluate { common, checkpoint, policy } => {
            let c = common.run_config()?;
            let episodes = common.episodes.unwrap_or(c.eval_episodes);
            let summary = match (checkpoint, policy) {
                (Some(p), None) => {
                    let ck = Checkpoint::load(&p)?;
                    let task = common.task.clone().unwrap_or_else(|| ck.config.task.clone());
                    evaluate(&ck, &task, episodes, c.seed)?
                }
                (None, Some(p)) => evaluate_reference(&c.task, c.task_seed, p.parse()?, episodes, c.seed)?,
                _ => bail!("pass exactly one of --checkpoint or --policy"),
            };
            println!("mean {} std {}", summary.mean, summary.std);
            if let Some(out) = &common.out {
                std::fs::write(out, serde_json::to_string_pretty(&summary)?)?;
            }
        }
        Command::Reference { common, policy } => {
            let c = common.run_config()?;
            let log = run_reference(&c, policy.parse()?)?;
            let dir = common.out()?;
            std::fs::create_dir_all(dir)?;
            log.save(dir.join("metrics.csv"))?;
            write_sidecar(dir, &c, &policy)?;
            if let Some(m) = log.final_mean_return(c.max_env_steps, 0.1) {
                println!("final 10% mean return {m}");
            }
        }
        Command::PlotData { common, logs, window, method } => {
            let logs = logs.iter().map(MetricsLog::load).collect::<Result<Vec<_>, _>>()?;
            let rows = export_plot_data(&logs, window)?;
            let mut w = BufWriter::new(File::create(common.out()?)?);
            write_plot_csv(&mut w, &method, &rows)?;
            w.flush()?;
        }
    }
    Ok(())
}
