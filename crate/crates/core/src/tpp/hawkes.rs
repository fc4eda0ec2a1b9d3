//! Multivariate Hawkes processes with a shared exponential decay.
//!
//! `beta[j][k]` is the jump that a type-`j+1` event adds to the type-`k+1`
//! intensity. Weights may be negative (inhibition); the intensity is the
//! kernel sum rectified at zero.

use serde::{Deserialize, Serialize};

use super::likelihood::IntensityModel;
use super::thinning::PointProcess;
use super::Event;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    pub mu: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub zeta: f64,
}

impl HawkesParams {
    pub fn new(mu: Vec<f64>, beta: Vec<Vec<f64>>, zeta: f64) -> Result<Self> {
        let p = Self { mu, beta, zeta };
        p.validate()?;
        Ok(p)
    }

    pub fn univariate(mu: f64, beta: f64, zeta: f64) -> Result<Self> {
        Self::new(vec![mu], vec![vec![beta]], zeta)
    }

    pub fn num_types(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.mu.len();
        if k == 0 {
            return Err(Error::InvalidParams("no event types".into()));
        }
        if !(self.zeta > 0.0) || !self.zeta.is_finite() {
            return Err(Error::InvalidParams(format!("decay must be positive, got {}", self.zeta)));
        }
        if self.mu.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidParams("base rates must be finite and >= 0".into()));
        }
        if self.beta.len() != k || self.beta.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParams(format!("excitation matrix must be {k}x{k}")));
        }
        if self.beta.iter().flatten().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParams("excitation weights must be finite".into()));
        }
        let rho = self.branching_ratio();
        if !(rho < 1.0) {
            return Err(Error::InvalidParams(format!(
                "supercritical: spectral radius of |beta|/zeta is {rho:.4}"
            )));
        }
        Ok(())
    }

    /// Upper bound on the spectral radius of `|beta| / zeta` (Collatz-Wielandt
    /// bound after power iteration; tight for irreducible matrices).
    pub fn branching_ratio(&self) -> f64 {
        let k = self.mu.len();
        let a: Vec<Vec<f64>> = self
            .beta
            .iter()
            .map(|r| r.iter().map(|b| b.abs() / self.zeta).collect())
            .collect();
        // Perturb with a tiny positive matrix so the iterate stays positive.
        let eps = 1e-12;
        let mut x = vec![1.0; k];
        let mut upper = f64::INFINITY;
        for _ in 0..2000 {
            let mut y = vec![0.0; k];
            for (j, row) in a.iter().enumerate() {
                for (kk, v) in row.iter().enumerate() {
                    // influence flows from j to kk: y = A^T x
                    y[kk] += (v + eps) * x[j];
                }
            }
            upper = y
                .iter()
                .zip(&x)
                .map(|(yi, xi)| yi / xi)
                .fold(0.0, f64::max);
            let norm = y.iter().cloned().fold(0.0, f64::max);
            if norm == 0.0 {
                return 0.0;
            }
            x = y.into_iter().map(|v| v / norm).collect();
        }
        upper
    }

    /// Unrectified kernel sum for type index `k` (0-based) at `t`.
    fn raw_intensity(&self, history: &[Event], t: f64, k: usize) -> f64 {
        let mut s = self.mu[k];
        for h in history {
            if h.t < t && !h.is_marker() {
                s += self.beta[h.k - 1][k] * (-self.zeta * (t - h.t)).exp();
            }
        }
        s
    }

    /// Stationary mean intensity `(I - B^T/zeta)^{-1} mu` of the unrectified
    /// process (valid when no rectification occurs, e.g. nonnegative beta).
    pub fn stationary_rates(&self) -> Vec<f64> {
        let k = self.num_types();
        // Solve (I - A) x = mu with A[kk][j] = beta[j][kk] / zeta by Gaussian elimination.
        let mut m = vec![vec![0.0; k + 1]; k];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().take(k).enumerate() {
                *cell = if r == c { 1.0 } else { 0.0 } - self.beta[c][r] / self.zeta;
            }
            row[k] = self.mu[r];
        }
        for col in 0..k {
            let pivot = (col..k)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .unwrap();
            m.swap(col, pivot);
            let p = m[col][col];
            for c in col..=k {
                m[col][c] /= p;
            }
            for r in 0..k {
                if r != col {
                    let f = m[r][col];
                    for c in col..=k {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
        m.into_iter().map(|row| row[k]).collect()
    }
}

/// Closed-form intensity vector at `t` given `history`.
///
/// Only entries strictly before `t` contribute; decision markers never do.
pub fn hawkes_intensity(params: &HawkesParams, history: &[Event], t: f64) -> Result<Vec<f64>> {
    if let Some(last) = history.last() {
        if t < last.t {
            return Err(Error::TimeBeforeHistory { query: t, last: last.t });
        }
    }
    Ok((0..params.num_types())
        .map(|k| params.raw_intensity(history, t, k).max(0.0))
        .collect())
}

/// Exact `∫_{t0}^{t1} max(0, μ + c·e^{-ζ(t-s)}) dt` over one inter-event
/// interval starting at `s = t0`.
fn rectified_segment_integral(mu: f64, c: f64, zeta: f64, len: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let full = |len: f64, c: f64| mu * len + c / zeta * (1.0 - (-zeta * len).exp());
    if c >= 0.0 || mu + c >= 0.0 {
        return full(len, c);
    }
    // Negative start; intensity rises monotonically toward mu.
    if mu <= 0.0 {
        return 0.0;
    }
    let cross = (-c / mu).ln() / zeta;
    if cross >= len {
        return 0.0;
    }
    full(len - cross, -mu)
}

impl IntensityModel for HawkesParams {
    fn num_types(&self) -> usize {
        self.mu.len()
    }

    fn intensity(&self, history: &[Event], t: f64) -> Vec<f64> {
        (0..self.mu.len())
            .map(|k| self.raw_intensity(history, t, k).max(0.0))
            .collect()
    }

    fn exact_integral(&self, history: &[Event], t0: f64, t1: f64) -> Option<f64> {
        let k = self.mu.len();
        let mut total = 0.0;
        let mut excite = vec![0.0; k];
        let mut now = 0.0_f64;
        let mut events = history.iter().filter(|e| !e.is_marker()).peekable();
        // Fold in events up to t0.
        while let Some(e) = events.peek() {
            if e.t > t0 {
                break;
            }
            let decay = (-self.zeta * (e.t - now)).exp();
            for (x, b) in excite.iter_mut().zip(&self.beta[e.k - 1]) {
                *x = *x * decay + b;
            }
            now = e.t;
            events.next();
        }
        let decay = (-self.zeta * (t0 - now)).exp();
        excite.iter_mut().for_each(|x| *x *= decay);
        let mut cursor = t0;
        loop {
            let next = events.peek().map(|e| e.t.min(t1)).unwrap_or(t1);
            let len = next - cursor;
            for kk in 0..k {
                total += rectified_segment_integral(self.mu[kk], excite[kk], self.zeta, len);
            }
            let decay = (-self.zeta * len).exp();
            excite.iter_mut().for_each(|x| *x *= decay);
            cursor = next;
            match events.next() {
                Some(e) if e.t < t1 => {
                    for (x, b) in excite.iter_mut().zip(&self.beta[e.k - 1]) {
                        *x += b;
                    }
                }
                _ => break,
            }
        }
        Some(total)
    }
}

/// Hawkes process with O(K) recursive state, for simulation.
///
/// Tracks the signed kernel sum and its positive part at the time of the
/// last observation; both decay at the shared rate between events.
#[derive(Debug, Clone)]
pub struct HawkesProcess {
    params: HawkesParams,
    now: f64,
    excite: Vec<f64>,
    positive: Vec<f64>,
}

impl HawkesProcess {
    pub fn new(params: HawkesParams) -> Self {
        let k = params.num_types();
        Self {
            params,
            now: 0.0,
            excite: vec![0.0; k],
            positive: vec![0.0; k],
        }
    }

    pub fn params(&self) -> &HawkesParams {
        &self.params
    }

    pub fn reset(&mut self) {
        self.now = 0.0;
        self.excite.iter_mut().for_each(|x| *x = 0.0);
        self.positive.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    fn decay_to(&self, t: f64) -> f64 {
        (-self.params.zeta * (t - self.now)).exp()
    }

    /// Rectified intensities at `t >= now`.
    pub fn intensities_at(&self, t: f64) -> Vec<f64> {
        let d = self.decay_to(t);
        self.params
            .mu
            .iter()
            .zip(&self.excite)
            .map(|(m, x)| (m + x * d).max(0.0))
            .collect()
    }

    /// Adds an event of type `k` (1-based) at `t >= now`.
    pub fn record(&mut self, t: f64, k: usize) {
        assert!(t >= self.now, "events must be recorded in time order");
        let d = self.decay_to(t);
        let row = &self.params.beta[k - 1];
        for ((x, p), b) in self.excite.iter_mut().zip(self.positive.iter_mut()).zip(row) {
            *x = *x * d + b;
            *p = *p * d + b.max(0.0);
        }
        self.now = t;
    }
}

impl PointProcess for HawkesProcess {
    fn num_types(&self) -> usize {
        self.params.num_types()
    }

    fn intensities(&mut self, t: f64) -> Vec<f64> {
        self.intensities_at(t)
    }

    /// Positive kernel parts only decay and negative parts only rise toward
    /// zero, so `Σ_k max(0, μ_k + P_k(t))` dominates until the next event.
    fn upper_bound(&mut self, t: f64) -> f64 {
        let d = self.decay_to(t);
        self.params
            .mu
            .iter()
            .zip(&self.positive)
            .map(|(m, p)| (m + p * d).max(0.0))
            .sum()
    }

    fn observe(&mut self, t: f64, k: usize) {
        self.record(t, k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn base_rate_with_empty_history() {
        let p = HawkesParams::new(vec![0.2, 0.5], vec![vec![0.1, 0.0], vec![0.0, 0.1]], 1.0).unwrap();
        assert_eq!(hawkes_intensity(&p, &[], 3.7).unwrap(), vec![0.2, 0.5]);
    }

    #[test]
    fn single_event_kernel_values() {
        let p = HawkesParams::univariate(0.2, 0.5, 1.0).unwrap();
        let h = [Event::new(1.0, 1, 0)];
        // right-limit at the event time: 0.2 + 0.5
        let at = hawkes_intensity(&p, &h, 1.0 + 1e-15).unwrap()[0];
        assert!(close(at, 0.7, 1e-12));
        let later = hawkes_intensity(&p, &h, 1.0 + std::f64::consts::LN_2).unwrap()[0];
        assert!(close(later, 0.45, 1e-12));
    }

    #[test]
    fn query_before_history_is_rejected() {
        let p = HawkesParams::univariate(0.2, 0.5, 1.0).unwrap();
        let h = [Event::new(2.0, 1, 0)];
        assert!(matches!(
            hawkes_intensity(&p, &h, 1.0),
            Err(Error::TimeBeforeHistory { .. })
        ));
    }

    #[test]
    fn inhibition_is_rectified() {
        let p = HawkesParams::new(vec![0.1, 0.3], vec![vec![0.0, -0.8], vec![0.0, 0.0]], 1.0).unwrap();
        let h = [Event::new(0.0, 1, 0)];
        let lam = hawkes_intensity(&p, &h, 0.1).unwrap();
        assert_eq!(lam[1], 0.0);
    }

    #[test]
    fn supercritical_params_rejected() {
        assert!(HawkesParams::univariate(0.5, 1.2, 1.0).is_err());
        assert!(HawkesParams::univariate(0.5, -1.2, 1.0).is_err());
        assert!(HawkesParams::univariate(0.5, 0.8, 0.0).is_err());
        assert!(HawkesParams::univariate(-0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn branching_ratio_of_known_matrix() {
        // eigenvalues of [[0.3,0.2],[0.1,0.4]] are 0.5 and 0.2
        let p = HawkesParams::new(vec![0.1, 0.1], vec![vec![0.3, 0.2], vec![0.1, 0.4]], 1.0).unwrap();
        assert!(close(p.branching_ratio(), 0.5, 1e-6));
    }

    #[test]
    fn exact_integral_matches_fine_quadrature_with_inhibition() {
        let p = HawkesParams::new(
            vec![0.3, 0.2],
            vec![vec![0.4, -0.6], vec![-0.5, 0.2]],
            1.3,
        )
        .unwrap();
        let h = [
            Event::new(0.4, 1, 0),
            Event::new(0.9, 2, 0),
            Event::new(1.0, 1, 0),
            Event::new(2.5, 1, 0),
        ];
        let (t0, t1) = (0.2, 4.0);
        let exact = p.exact_integral(&h, t0, t1).unwrap();
        // midpoint rule on each piece between jumps
        let mut knots = vec![t0];
        knots.extend(h.iter().map(|e| e.t).filter(|&t| t > t0 && t < t1));
        knots.push(t1);
        let mut quad = 0.0;
        for w in knots.windows(2) {
            let n = 100_000;
            let dt = (w[1] - w[0]) / n as f64;
            for i in 0..n {
                let t = w[0] + (i as f64 + 0.5) * dt;
                quad += p.intensity(&h, t).iter().sum::<f64>() * dt;
            }
        }
        assert!(close(exact, quad, 1e-6), "exact {exact} quad {quad}");
    }

    #[test]
    fn recursive_state_matches_closed_form() {
        let p = HawkesParams::new(
            vec![0.3, 0.2],
            vec![vec![0.4, -0.6], vec![-0.5, 0.2]],
            1.3,
        )
        .unwrap();
        let h = [Event::new(0.4, 1, 0), Event::new(0.9, 2, 0), Event::new(1.0, 1, 0)];
        let mut proc = HawkesProcess::new(p.clone());
        for e in &h {
            proc.record(e.t, e.k);
        }
        for t in [1.0 + 1e-9, 1.5, 3.0] {
            let a = proc.intensities_at(t);
            let b = hawkes_intensity(&p, &h, t).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!(close(*x, *y, 1e-12));
            }
            assert!(proc.upper_bound(t) >= a.iter().sum::<f64>());
        }
    }

    #[test]
    fn stationary_rate_univariate() {
        let p = HawkesParams::univariate(0.5, 0.8, 1.0).unwrap();
        assert!(close(p.stationary_rates()[0], 2.5, 1e-12));
    }
}
