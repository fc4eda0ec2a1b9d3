//! Metrics files: CSV rows `record,step,episode,name,value`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::tpp::jsonl::format_f64;

pub const HEADER: &str = "record,step,episode,name,value";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub record: String,
    pub step: u64,
    pub episode: u64,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsLog {
    pub rows: Vec<MetricRow>,
}

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; non-finite values are rejected.
    pub fn push(&mut self, record: &str, step: u64, episode: u64, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("{record}/{name} at step {step}, episode {episode}")));
        }
        self.rows.push(MetricRow {
            record: record.into(),
            step,
            episode,
            name: name.into(),
            value,
        });
        Ok(())
    }

    pub fn records<'a>(&'a self, record: &'a str, name: &'a str) -> impl Iterator<Item = &'a MetricRow> + 'a {
        self.rows.iter().filter(move |r| r.record == record && r.name == name)
    }

    /// `(end step, return)` per training episode.
    pub fn episode_returns(&self) -> Vec<(u64, f64)> {
        self.records("episode", "return").map(|r| (r.step, r.value)).collect()
    }

    /// Mean return of episodes ending after `frac` of `total_steps`.
    pub fn final_mean_return(&self, total_steps: u64, frac: f64) -> Option<f64> {
        let cut = (total_steps as f64 * (1.0 - frac)).floor() as u64;
        let tail: Vec<f64> = self.episode_returns().into_iter().filter(|(s, _)| *s > cut).map(|(_, r)| r).collect();
        (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.record, r.step, r.episode, r.name, format_f64(r.value))?;
        }
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some(HEADER) {
            return Err(Error::Parse(format!("metrics header must be `{HEADER}`")));
        }
        let mut log = Self::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse(format!("metrics line {}: `{line}`", i + 2));
            if f.len() != 5 {
                return Err(bad());
            }
            let step = f[1].parse().map_err(|_| bad())?;
            let episode = f[2].parse().map_err(|_| bad())?;
            let value: f64 = f[4].parse().map_err(|_| bad())?;
            log.push(f[0], step, episode, f[3], value)?;
        }
        Ok(log)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Running means of per-update losses, flushed every `every` updates.
#[derive(Debug, Clone, Default)]
pub(crate) struct LossAverager {
    sums: Vec<(String, f64)>,
    count: usize,
}

impl LossAverager {
    pub fn add(&mut self, values: &[(&str, f64)]) {
        if self.sums.is_empty() {
            self.sums = values.iter().map(|(n, _)| (n.to_string(), 0.0)).collect();
        }
        for ((_, s), (_, v)) in self.sums.iter_mut().zip(values) {
            *s += v;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn flush(&mut self, log: &mut MetricsLog, step: u64, episode: u64) -> Result<()> {
        if self.count == 0 {
            return Ok(());
        }
        for (n, s) in &self.sums {
            log.push("loss", step, episode, n, s / self.count as f64)?;
        }
        self.sums.iter_mut().for_each(|(_, s)| *s = 0.0);
        self.count = 0;
        Ok(())
    }
}
