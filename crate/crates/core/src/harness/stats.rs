//! Small statistical tests used to judge runs.

/// One-sided exact Wilcoxon signed-rank p-value for `H1: median(d) > 0`.
/// Zero differences are dropped; tied magnitudes get average ranks.
pub fn wilcoxon_signed_rank_greater(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    let w: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    // enumerate all 2^n sign assignments
    assert!(n <= 20, "exact test limited to 20 pairs");
    let total = 1u64 << n;
    let mut at_least = 0u64;
    for mask in 0..total {
        let s: f64 = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| ranks[k]).sum();
        if s >= w - 1e-9 {
            at_least += 1;
        }
    }
    at_least as f64 / total as f64
}

/// Kolmogorov–Smirnov statistic of `samples` against the continuous `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilcoxon_all_positive_of_five() {
        assert!((wilcoxon_signed_rank_greater(&[1.0, 2.0, 0.5, 3.0, 4.0]) - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_matches_hand_count() {
        // W+ = 2 + 3 + 4 = 9; count rank subsets reaching it
        let d = [-1.0, 2.0, 3.0, 4.0];
        let mut count = 0;
        for mask in 0..16u32 {
            let s: u32 = (0..4).filter(|k| mask & (1 << k) != 0).map(|k| k + 1).sum();
            if s >= 9 {
                count += 1;
            }
        }
        assert_eq!(wilcoxon_signed_rank_greater(&d), count as f64 / 16.0);
        assert_eq!(wilcoxon_signed_rank_greater(&[-1.0, -2.0]), 1.0);
    }

    #[test]
    fn ks_against_exact_uniform_grid() {
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!((ks_statistic(&xs, |x| x) - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn single_value_has_zero_spread() {
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
