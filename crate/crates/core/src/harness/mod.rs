//! Training loop, reference policies, evaluation and run artefacts.

mod buffers;
mod config;
mod metrics;
mod plot;
mod run;
pub mod stats;

pub use buffers::{StepBuffer, TrajectoryBuffer};
pub use config::RunConfig;
pub use metrics::{MetricRow, MetricsLog, HEADER};
pub use plot::{export_plot_data, write_plot_csv, PlotRow};
pub use run::{
    evaluate, evaluate_reference, run_reference, run_sedrl, simulate_episodes, write_sidecar, Checkpoint, EvalSummary, ReferencePolicy,
    RunOutput,
};
