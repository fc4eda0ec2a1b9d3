//! Central finite-difference checks of analytic parameter gradients.

use super::mat::Mat;
use super::params::ParamSet;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub step: f64,
    pub rel_tolerance: f64,
    /// Denominator floor for the relative error, so gradients that are
    /// zero on both sides compare as equal.
    pub denom_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            rel_tolerance: 1e-4,
            denom_floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradMismatch {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub failures: Vec<GradMismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares `analytic` (one matrix per tensor of `params`) against central
/// differences of `loss` over every scalar parameter.
pub fn check_gradients(
    params: &ParamSet,
    analytic: &[Mat],
    mut loss: impl FnMut(&ParamSet) -> f64,
    config: GradCheckConfig,
) -> GradCheckReport {
    let flat: Vec<f64> = analytic.iter().flat_map(|m| m.data.iter().copied()).collect();
    assert_eq!(flat.len(), params.num_scalars(), "analytic gradient size mismatch");
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        failures: Vec::new(),
    };
    for (i, &a) in flat.iter().enumerate() {
        let x = params.scalar(i);
        probe.set_scalar(i, x + config.step);
        let plus = loss(&probe);
        probe.set_scalar(i, x - config.step);
        let minus = loss(&probe);
        probe.set_scalar(i, x);
        let numeric = (plus - minus) / (2.0 * config.step);
        let rel = relative_error(a, numeric, config.denom_floor);
        report.checked += 1;
        report.max_rel_error = report.max_rel_error.max(rel);
        if rel > config.rel_tolerance || !rel.is_finite() {
            report.failures.push(GradMismatch {
                tensor: params.scalar_owner(i).to_string(),
                index: i,
                analytic: a,
                numeric,
                rel_error: rel,
            });
        }
    }
    report
}
