//! Learning-curve export: moving-average returns, mean and spread over runs.

use std::io::Write;

use super::metrics::MetricsLog;
use super::stats::mean_std;
use crate::error::{Error, Result};
use crate::tpp::jsonl::format_f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub step: u64,
    pub mean: f64,
    pub std: f64,
}

fn smoothed(log: &MetricsLog, window: usize) -> Vec<(u64, f64)> {
    let returns = log.episode_returns();
    let mut out = Vec::with_capacity(returns.len());
    let mut sum = 0.0;
    for (i, &(step, r)) in returns.iter().enumerate() {
        sum += r;
        if i >= window {
            sum -= returns[i - window].1;
        }
        out.push((step, sum / (i + 1).min(window) as f64));
    }
    out
}

/// Moving average of episode returns over `window` episodes, sampled at the
/// first log's episode ends and aggregated across logs (sample std).
pub fn export_plot_data(logs: &[MetricsLog], window: usize) -> Result<Vec<PlotRow>> {
    if logs.is_empty() {
        return Err(Error::Empty("no metrics logs".into()));
    }
    if window == 0 {
        return Err(Error::InvalidParams("window must be positive".into()));
    }
    let curves: Vec<_> = logs.iter().map(|l| smoothed(l, window)).collect();
    if let Some(i) = curves.iter().position(|c| c.is_empty()) {
        return Err(Error::Incompatible(format!("log {i} has no episode returns")));
    }
    let mut rows = Vec::with_capacity(curves[0].len());
    let mut cursor = vec![0usize; curves.len()];
    for &(step, _) in &curves[0] {
        let mut values = Vec::with_capacity(curves.len());
        for (c, pos) in curves.iter().zip(cursor.iter_mut()) {
            while *pos + 1 < c.len() && c[*pos + 1].0 <= step {
                *pos += 1;
            }
            if c[*pos].0 <= step {
                values.push(c[*pos].1);
            }
        }
        if values.len() == curves.len() {
            let (mean, std) = mean_std(&values);
            rows.push(PlotRow { step, mean, std });
        }
    }
    Ok(rows)
}

pub fn write_plot_csv(w: &mut impl Write, method: &str, rows: &[PlotRow]) -> Result<()> {
    writeln!(w, "method,step,mean,std")?;
    for r in rows {
        writeln!(w, "{method},{},{},{}", r.step, format_f64(r.mean), format_f64(r.std))?;
    }
    Ok(())
}
