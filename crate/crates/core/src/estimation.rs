//! Cycle-count estimators for `(a, b)` and the planted-vs-null test.
//!
//! With `d = (a+b)/2` and `f = (a-b)/2`, the limiting mean of `2k X_k` is
//! `d^k + f^k`. The per-graph estimator is
//!
//! ```text
//! d_hat = 2|E|/n,   f_hat = (2k X_k - d_hat^k)^(1/k),   a_hat = d_hat + f_hat,   b_hat = d_hat - f_hat.
//! ```
//!
//! Everything here takes a bare [`Graph`]: the estimators never see labels.

use serde::Serialize;

use crate::cycles::{count_cycles, null_cycle_mean, sample_model, CensusMethod, CountMethod, Model};
use crate::error::{Error, Result};
use crate::graph::{Graph, ModelParams};
use crate::rng::RngStream;
use crate::stats::{run_trials, Summary};

/// `max(3, floor((ln n)^(1/4)))`.
pub fn default_k(n: usize) -> usize {
    let k = (n.max(1) as f64).ln().max(0.0).powf(0.25).floor() as usize;
    k.max(3)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateFlags {
    /// `2k X_k - d_hat^k <= 0`: no real k-th root, `f_hat` left undefined.
    pub f_undefined: bool,
    /// The cycle census was flagged approximate.
    pub census_approximate: bool,
    /// `k` was not supplied and [`default_k`] was used.
    pub k_defaulted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub n: usize,
    pub edges: usize,
    pub d_hat: f64,
    pub f_hat: Option<f64>,
    pub a_hat: Option<f64>,
    pub b_hat: Option<f64>,
    pub k_used: usize,
    pub x_k: u64,
    /// `2k X_k - d_hat^k`.
    pub raw_statistic: f64,
    pub census_method: CensusMethod,
    pub flags: EstimateFlags,
}

/// `(raw, f_hat)` from a cycle count and a degree estimate.
pub fn f_hat_from(x_k: u64, d_hat: f64, k: usize) -> (f64, Option<f64>) {
    let raw = 2.0 * k as f64 * x_k as f64 - d_hat.powi(k as i32);
    let f = (raw > 0.0).then(|| raw.powf(1.0 / k as f64));
    (raw, f)
}

pub fn estimate_params(g: &Graph, k: Option<usize>) -> Result<Estimate> {
    estimate_params_with(g, k, CountMethod::Auto)
}

pub fn estimate_params_with(g: &Graph, k: Option<usize>, method: CountMethod) -> Result<Estimate> {
    let n = g.n();
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 vertices, got {n}")));
    }
    let k_used = k.unwrap_or_else(|| default_k(n));
    if k_used < 3 {
        return Err(Error::invalid(format!("cycle length must be at least 3, got {k_used}")));
    }
    let d_hat = 2.0 * g.edge_count() as f64 / n as f64;
    let census = count_cycles(g, k_used, method)?;
    let x_k = census.count(k_used);
    let (raw_statistic, f_hat) = f_hat_from(x_k, d_hat, k_used);
    Ok(Estimate {
        n,
        edges: g.edge_count(),
        d_hat,
        f_hat,
        a_hat: f_hat.map(|f| d_hat + f),
        b_hat: f_hat.map(|f| d_hat - f),
        k_used,
        x_k,
        raw_statistic,
        census_method: census.method,
        flags: EstimateFlags {
            f_undefined: f_hat.is_none(),
            census_approximate: census.approximate,
            k_defaulted: k.is_none(),
        },
    })
}

/// Validation-only variant: averages `2k X_k - d_hat^k` over independent
/// graphs before taking the k-th root. Not a single-graph estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PooledEstimate {
    pub k: usize,
    pub trials: usize,
    pub mean_raw: f64,
    pub se_raw: f64,
    pub mean_d_hat: f64,
    pub f_hat: Option<f64>,
    pub a_hat: Option<f64>,
    pub b_hat: Option<f64>,
}

pub fn pooled_estimate(per_graph: &[Estimate]) -> Result<PooledEstimate> {
    let first = per_graph
        .first()
        .ok_or_else(|| Error::invalid("pooled estimate needs at least one graph"))?;
    let k = first.k_used;
    if per_graph.iter().any(|e| e.k_used != k) {
        return Err(Error::invalid("pooled estimates must share k"));
    }
    let raw: Vec<f64> = per_graph.iter().map(|e| e.raw_statistic).collect();
    let d: Vec<f64> = per_graph.iter().map(|e| e.d_hat).collect();
    let s = Summary::of(&raw);
    let mean_d_hat = Summary::of(&d).mean;
    let f_hat = (s.mean > 0.0).then(|| s.mean.powf(1.0 / k as f64));
    Ok(PooledEstimate {
        k,
        trials: per_graph.len(),
        mean_raw: s.mean,
        se_raw: s.se_mean,
        mean_d_hat,
        f_hat,
        a_hat: f_hat.map(|f| mean_d_hat + f),
        b_hat: f_hat.map(|f| mean_d_hat - f),
    })
}

/// Per-graph estimates on `trials` independent planted-model samples.
pub fn estimate_study(
    params: &ModelParams,
    k: Option<usize>,
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<Estimate>> {
    params.validate()?;
    run_trials(trials, |i| {
        let g = sample_model(params, Model::Sbm, &mut rng.child(0, i as u32))?;
        estimate_params(&g, k)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    ErLike,
    SbmLike,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistinguishResult {
    pub k: usize,
    pub x_k: u64,
    /// Exact finite-n null mean of `X_k`.
    pub mean_er: f64,
    /// `mean_er + rho^k`.
    pub threshold: f64,
    pub rho: f64,
    pub rho_interval: (f64, f64),
    pub decision: Decision,
    /// `(X_k - mean_er) / sqrt(mean_er)`.
    pub zscore: f64,
}

/// The separating exponent base: geometric mean of `sqrt(d)` and `f`, which
/// lies strictly inside `(sqrt(d), f)` whenever `f^2 > d`, i.e.
/// `(a-b)^2 > 2(a+b)`.
pub fn choose_rho(a: f64, b: f64) -> Result<(f64, (f64, f64))> {
    let lhs = (a - b).powi(2);
    let rhs = 2.0 * (a + b);
    if !(lhs > rhs) {
        return Err(Error::Indistinguishable { lhs, rhs });
    }
    let lo = ((a + b) / 2.0).sqrt();
    let hi = (a - b) / 2.0;
    Ok(((lo * hi).sqrt(), (lo, hi)))
}

/// Declares the graph planted-like when `X_k` exceeds the null mean by more
/// than `rho^k`.
pub fn distinguish(g: &Graph, a: f64, b: f64, k: usize) -> Result<DistinguishResult> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid("a and b must be positive"));
    }
    let (rho, rho_interval) = choose_rho(a, b)?;
    if k < 3 {
        return Err(Error::invalid(format!("cycle length must be at least 3, got {k}")));
    }
    let x_k = count_cycles(g, k, CountMethod::Auto)?.count(k);
    let mean_er = null_cycle_mean(g.n(), (a + b) / 2.0, k);
    let threshold = mean_er + rho.powi(k as i32);
    Ok(DistinguishResult {
        k,
        x_k,
        mean_er,
        threshold,
        rho,
        rho_interval,
        decision: if x_k as f64 > threshold {
            Decision::SbmLike
        } else {
            Decision::ErLike
        },
        zscore: (x_k as f64 - mean_er) / mean_er.sqrt(),
    })
}

/// Paired Monte Carlo of `X_k` under the planted model and the null.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapStudy {
    pub k: usize,
    pub trials: usize,
    pub sbm: Summary,
    pub er: Summary,
    pub gap: f64,
    pub se_gap: f64,
    /// `f^k / (2k)`.
    pub predicted_gap: f64,
    /// Fraction of planted samples with z-score above `z_cut`.
    pub power: f64,
    /// Fraction of null samples with z-score above `z_cut`.
    pub size: f64,
    pub z_cut: f64,
}

pub fn gap_study(
    params: &ModelParams,
    k: usize,
    trials: usize,
    z_cut: f64,
    rng: &RngStream,
) -> Result<GapStudy> {
    params.validate()?;
    if k < 3 {
        return Err(Error::invalid(format!("cycle length must be at least 3, got {k}")));
    }
    let draw = |model: Model, arm: u32| -> Result<Vec<u64>> {
        run_trials(trials, |i| {
            let g = sample_model(params, model, &mut rng.child(arm, i as u32))?;
            Ok(count_cycles(&g, k, CountMethod::Auto)?.count(k))
        })
        .into_iter()
        .collect()
    };
    let xs_sbm = draw(Model::Sbm, 0)?;
    let xs_er = draw(Model::Er, 1)?;
    let mean_er = null_cycle_mean(params.n, params.d(), k);
    let z = |x: u64| (x as f64 - mean_er) / mean_er.sqrt();
    let rate = |xs: &[u64]| xs.iter().filter(|&&x| z(x) > z_cut).count() as f64 / xs.len() as f64;
    let sbm = Summary::of_counts(&xs_sbm);
    let er = Summary::of_counts(&xs_er);
    Ok(GapStudy {
        k,
        trials,
        sbm,
        er,
        gap: sbm.mean - er.mean,
        se_gap: (sbm.se_mean.powi(2) + er.se_mean.powi(2)).sqrt(),
        predicted_gap: params.f().powi(k as i32) / (2.0 * k as f64),
        power: rate(&xs_sbm),
        size: rate(&xs_er),
        z_cut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_k_is_three_at_desk_scale() {
        for n in [3, 100, 10_000, 100_000, 1_000_000_000] {
            assert_eq!(default_k(n), 3);
        }
    }

    #[test]
    fn degree_estimate_on_k4() {
        let mut e = Vec::new();
        for u in 0..4 {
            for v in u + 1..4 {
                e.push((u, v));
            }
        }
        let g = Graph::from_edges(4, e).unwrap();
        let est = estimate_params(&g, Some(3)).unwrap();
        assert_eq!(est.d_hat, 3.0);
        assert_eq!(est.x_k, 4);
        // 2*3*4 - 27 < 0
        assert!(est.flags.f_undefined);
        assert!(est.a_hat.is_none());
    }

    #[test]
    fn f_hat_arithmetic() {
        let (raw, f) = f_hat_from(6, 2.0, 3);
        assert_eq!(raw, 28.0);
        assert!((f.unwrap() - 3.036_588_971_875_662_6).abs() < 1e-12);
        assert_eq!(f_hat_from(0, 1.0, 3).1, None);
    }

    #[test]
    fn rho_choice() {
        let (rho, (lo, hi)) = choose_rho(5.0, 1.0).unwrap();
        assert!((lo - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(hi, 2.0);
        assert!((rho - (2.0 * 3f64.sqrt()).sqrt()).abs() < 1e-15);
        assert!((rho - 1.861_209_718_204_198_6).abs() < 1e-12);
    }

    #[test]
    fn contiguous_regime_is_rejected() {
        let g = Graph::empty(10);
        match distinguish(&g, 3.0, 1.0, 4) {
            Err(Error::Indistinguishable { lhs, rhs }) => {
                assert_eq!((lhs, rhs), (4.0, 8.0));
            }
            other => panic!("expected contiguous-regime error, got {other:?}"),
        }
        assert!(distinguish(&g, 5.0, 1.0, 2).is_err());
    }

    #[test]
    fn tiny_graph_is_rejected() {
        assert!(estimate_params(&Graph::empty(2), None).is_err());
    }
}
