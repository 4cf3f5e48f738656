//! Monte Carlo plumbing: deterministic parallel trials and summary statistics.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

/// Runs `f(0), ..., f(trials - 1)` on the current rayon pool and returns the
/// results in trial order, so downstream reductions do not depend on the
/// number of worker threads.
pub fn run_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Sample mean and variance with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub se_mean: f64,
    /// Large-sample standard error of the sample variance,
    /// `sqrt((m4 - s^4) / N)`.
    pub se_var: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return Self { count, mean: f64::NAN, var: f64::NAN, se_mean: f64::NAN, se_var: f64::NAN };
        }
        let nf = count as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
        let var = if count > 1 { m2 * nf / (nf - 1.0) } else { 0.0 };
        Self {
            count,
            mean,
            var,
            se_mean: (var / nf).sqrt(),
            se_var: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
        }
    }

    pub fn of_counts(xs: &[u64]) -> Self {
        let v: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        Self::of(&v)
    }
}

pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

pub fn binomial_pmf(k: u64, m: u64, p: f64) -> f64 {
    if k > m {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == m { 1.0 } else { 0.0 };
    }
    let (kf, mf) = (k as f64, m as f64);
    (ln_gamma(mf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(mf - kf + 1.0)
        + kf * p.ln()
        + (mf - kf) * (-p).ln_1p())
    .exp()
}

/// Pearson goodness of fit of integer samples against `Pois(lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Bins are `{0}, {1}, ...` merged left-to-right until each holds expected
/// mass at least 5; the last bin absorbs the upper tail.
pub fn poisson_chi_square(samples: &[u64], lambda: f64) -> ChiSquareFit {
    let n = samples.len() as f64;
    let max = samples.iter().copied().max().unwrap_or(0);
    let mut observed = vec![0f64; max as usize + 1];
    for &s in samples {
        observed[s as usize] += 1.0;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp, mut cum) = (0.0, 0.0, 0.0);
    let mut k = 0u64;
    loop {
        let pk = poisson_pmf(k, lambda);
        obs += observed.get(k as usize).copied().unwrap_or(0.0);
        exp += n * pk;
        cum += pk;
        let tail = (1.0 - cum).max(0.0) * n;
        if exp >= 5.0 && tail >= 5.0 {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        } else if tail < 5.0 && k >= max {
            // Close the final bin with the remaining tail mass.
            let rest: f64 = observed.iter().skip(k as usize + 1).sum();
            bins.push((obs + rest, exp + tail));
            break;
        }
        k += 1;
    }
    if bins.len() >= 2 && bins.last().unwrap().1 < 5.0 {
        let (o, e) = bins.pop().unwrap();
        let last = bins.last_mut().unwrap();
        last.0 += o;
        last.1 += e;
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    };
    ChiSquareFit { statistic, dof, p_value }
}

/// Median plus a distribution-free standard error taken from the order
/// statistics at ranks `N/2 ± sqrt(N)/2`. Infinite entries are allowed and
/// sort last.
pub fn median_with_se(xs: &[f64]) -> (f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    let half = (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(0.0)) as usize;
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).min(n - 1);
    (median, 0.5 * (v[hi] - v[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basic() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.var - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pmfs_normalize() {
        let tot: f64 = (0..60).map(|k| poisson_pmf(k, 4.5)).sum();
        assert!((tot - 1.0).abs() < 1e-12);
        let tot: f64 = (0..=30).map(|k| binomial_pmf(k, 30, 0.2)).sum();
        assert!((tot - 1.0).abs() < 1e-12);
        assert!((binomial_pmf(1, 2, 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chi_square_accepts_exact_frequencies() {
        // Samples laid out exactly proportional to the pmf.
        let lambda = 3.0;
        let mut xs = Vec::new();
        for k in 0..15u64 {
            let c = (poisson_pmf(k, lambda) * 10_000.0).round() as usize;
            xs.extend(std::iter::repeat_n(k, c));
        }
        let fit = poisson_chi_square(&xs, lambda);
        assert!(fit.p_value > 0.99, "{fit:?}");
        let shifted: Vec<u64> = xs.iter().map(|x| x + 2).collect();
        assert!(poisson_chi_square(&shifted, lambda).p_value < 1e-6);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median_with_se(&[3.0, 1.0, 2.0]).0, 2.0);
        assert_eq!(median_with_se(&[4.0, 1.0, 2.0, 3.0]).0, 2.5);
        let (m, _) = median_with_se(&[1.0, f64::INFINITY, 0.5]);
        assert_eq!(m, 1.0);
    }

    #[test]
    fn trials_keep_order() {
        let v = run_trials(100, |i| i * 2);
        assert_eq!(v, (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }
}
