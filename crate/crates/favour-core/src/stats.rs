//! Summary statistics and the one-sided two-sample Kolmogorov-Smirnov test.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two
/// observations.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Outcome of a one-sided two-sample KS test.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KsTest {
    /// `D+ = sup_x (F_b(x) - F_a(x))`, evidence that sample `a` is
    /// stochastically larger than sample `b`.
    pub statistic: f64,
    /// Asymptotic one-sided p-value `exp(-2 m n D^2 / (m + n))`.
    pub p_value: f64,
}

/// One-sided two-sample KS test of the alternative "sample `a` is
/// stochastically larger than sample `b`".
pub fn ks_test_one_sided(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::config("KS test requires two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::numeric("KS test samples must be finite"));
    }
    let mut sorted_a = a.to_vec();
    let mut sorted_b = b.to_vec();
    sorted_a.sort_unstable_by(f64::total_cmp);
    sorted_b.sort_unstable_by(f64::total_cmp);

    let (m, n) = (sorted_a.len(), sorted_b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut statistic = 0.0f64;
    while i < m || j < n {
        let threshold = match (sorted_a.get(i), sorted_b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < m && sorted_a[i] <= threshold {
            i += 1;
        }
        while j < n && sorted_b[j] <= threshold {
            j += 1;
        }
        let f_a = i as f64 / m as f64;
        let f_b = j as f64 / n as f64;
        statistic = statistic.max(f_b - f_a);
    }
    statistic = statistic.max(0.0);

    let mn = (m as f64) * (n as f64);
    let p_value = (-2.0 * mn * statistic * statistic / (m as f64 + n as f64))
        .exp()
        .min(1.0);
    Ok(KsTest { statistic, p_value })
}
