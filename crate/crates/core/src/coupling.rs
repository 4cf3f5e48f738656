//! Measurements of how closely graph neighborhoods follow the broadcast tree.
//!
//! For a uniform root `rho` and radius `R` we record whether `B(rho, R)` is a
//! tree, the two ways it can fail to be one (a vertex at distance `r` with two
//! neighbors at distance `r-1`, or an edge inside a level), level sizes, and
//! the same/opposite-label offspring split of every non-boundary vertex, which
//! should follow `Pois(a/2) x Pois(b/2)`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ModelParams;
use crate::rng::RngStream;
use crate::sample::sample_sbm;
use crate::stats::{binomial_pmf, poisson_chi_square, poisson_pmf, run_trials, ChiSquareFit};

/// What one sampled `(graph, root)` pair looked like.
#[derive(Clone, Debug, PartialEq)]
pub struct BallOutcome {
    pub is_tree: bool,
    /// Some vertex at distance `r <= R` has two or more neighbors at `r-1`.
    pub shared_child: bool,
    /// Some edge joins two vertices at the same distance `r <= R`.
    pub level_edge: bool,
    /// `|∂G_s|` for `s = 0..=R`.
    pub boundary: Vec<usize>,
    /// `(same, opposite)` child counts of vertices at depth `< R`; only
    /// filled when the ball is a tree.
    pub splits: Vec<(u32, u32)>,
    /// `||V+| - |V-||`.
    pub imbalance: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingReport {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub r: usize,
    pub trials: usize,
    pub tree_fraction: f64,
    pub a_violation_rate: f64,
    pub b_violation_rate: f64,
    /// Total variation between the empirical `(same, opposite)` offspring
    /// split and `Pois(a/2) x Pois(b/2)`.
    pub offspring_tv: f64,
    pub offspring_samples: usize,
    /// Same-label child counts against `Pois(a/2)`.
    pub same_fit: Option<ChiSquareFit>,
    /// `max_s |∂G_s| / (2^s (a+b)^s ln n)` over all trials.
    pub boundary_ratio_max: f64,
    pub max_boundary: usize,
    /// `floor(ln n / (10 ln(2(a+b))))`.
    pub paper_r: usize,
    /// Mean of `||V+| - |V-|| / n^(3/4)`.
    pub mean_balance: f64,
}

impl CouplingReport {
    pub const CSV_HEADER: &'static str =
        "n,a,b,R,trials,tree_fraction,A_violation_rate,B_violation_rate,offspring_tv,paper_R";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.a,
            self.b,
            self.r,
            self.trials,
            self.tree_fraction,
            self.a_violation_rate,
            self.b_violation_rate,
            self.offspring_tv,
            self.paper_r
        )
    }
}

/// Radius at which tree coupling is guaranteed asymptotically; 0 or 1 for
/// any practical `n`.
pub fn coupling_radius(n: usize, a: f64, b: f64) -> usize {
    let r = (n as f64).ln() / (10.0 * (2.0 * (a + b)).ln());
    r.floor().max(0.0) as usize
}

/// Samples one planted graph and inspects the ball around a uniform root.
pub fn inspect_ball(params: &ModelParams, r: usize, rng: &mut RngStream) -> Result<BallOutcome> {
    let lg = sample_sbm(params, rng)?;
    let root = rng.random_range(0..params.n);
    let g = lg.graph();
    let labels = lg.labels();
    let order = g.bfs_within(root, r);
    let dist: std::collections::HashMap<usize, usize> = order.iter().copied().collect();

    let mut boundary = vec![0usize; r + 1];
    let mut shared_child = false;
    let mut level_edge = false;
    let mut edges_twice = 0usize;
    for &(u, du) in &order {
        boundary[du] += 1;
        let mut up = 0;
        for w in g.neighbors(u) {
            if let Some(&dw) = dist.get(w) {
                edges_twice += 1;
                if dw + 1 == du {
                    up += 1;
                } else if dw == du {
                    level_edge = true;
                }
            }
        }
        if up >= 2 {
            shared_child = true;
        }
    }
    let is_tree = edges_twice / 2 + 1 == order.len();
    let mut splits = Vec::new();
    if is_tree {
        for &(u, du) in order.iter().filter(|&&(_, du)| du < r) {
            let (mut same, mut opp) = (0u32, 0u32);
            for w in g.neighbors(u) {
                if dist.get(w) == Some(&(du + 1)) {
                    if labels[*w] == labels[u] {
                        same += 1;
                    } else {
                        opp += 1;
                    }
                }
            }
            splits.push((same, opp));
        }
    }
    Ok(BallOutcome {
        is_tree,
        shared_child,
        level_edge,
        boundary,
        splits,
        imbalance: lg.label_imbalance().unsigned_abs(),
    })
}

pub fn tree_likeness(
    params: &ModelParams,
    r: usize,
    trials: usize,
    rng: &RngStream,
) -> Result<CouplingReport> {
    params.validate()?;
    if trials < 100 {
        return Err(Error::invalid(format!("need at least 100 trials, got {trials}")));
    }
    let outcomes = run_trials(trials, |i| inspect_ball(params, r, &mut rng.child(0, i as u32)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(params, r, &outcomes))
}

fn summarize(params: &ModelParams, r: usize, outcomes: &[BallOutcome]) -> CouplingReport {
    let trials = outcomes.len();
    let frac = |f: &dyn Fn(&BallOutcome) -> bool| {
        outcomes.iter().filter(|o| f(o)).count() as f64 / trials as f64
    };
    let (a, b, n) = (params.a, params.b, params.n);
    let splits: Vec<(u32, u32)> = outcomes.iter().flat_map(|o| o.splits.iter().copied()).collect();
    let offspring_tv = split_tv(&splits, a / 2.0, b / 2.0);
    let same: Vec<u64> = splits.iter().map(|s| u64::from(s.0)).collect();
    let same_fit = (!same.is_empty()).then(|| poisson_chi_square(&same, a / 2.0));

    let ln_n = (n as f64).ln();
    let mut ratio_max: f64 = 0.0;
    let mut max_boundary = 0;
    for o in outcomes {
        for (s, &size) in o.boundary.iter().enumerate() {
            let envelope = (2.0 * (a + b)).powi(s as i32) * ln_n;
            ratio_max = ratio_max.max(size as f64 / envelope);
            max_boundary = max_boundary.max(size);
        }
    }
    let scale = (n as f64).powf(0.75);
    let mean_balance =
        outcomes.iter().map(|o| o.imbalance as f64 / scale).sum::<f64>() / trials as f64;

    CouplingReport {
        n,
        a,
        b,
        r,
        trials,
        tree_fraction: frac(&|o| o.is_tree),
        a_violation_rate: frac(&|o| o.shared_child),
        b_violation_rate: frac(&|o| o.level_edge),
        offspring_tv,
        offspring_samples: splits.len(),
        same_fit,
        boundary_ratio_max: ratio_max,
        max_boundary,
        paper_r: coupling_radius(n, a, b),
        mean_balance,
    }
}

/// Total variation between the empirical law of `splits` and the product of
/// `Pois(mean_same)` and `Pois(mean_opp)`. Zero samples give 1.
pub fn split_tv(splits: &[(u32, u32)], mean_same: f64, mean_opp: f64) -> f64 {
    if splits.is_empty() {
        return 1.0;
    }
    let mut hist = std::collections::BTreeMap::<(u32, u32), usize>::new();
    for &s in splits {
        *hist.entry(s).or_default() += 1;
    }
    let total = splits.len() as f64;
    let mut covered = 0.0;
    let mut diff = 0.0;
    for (&(x, y), &count) in &hist {
        let p = poisson_pmf(u64::from(x), mean_same) * poisson_pmf(u64::from(y), mean_opp);
        covered += p;
        diff += (count as f64 / total - p).abs();
    }
    // Cells never observed contribute their full model mass.
    (0.5 * (diff + (1.0 - covered).max(0.0))).min(1.0)
}

/// Exact `|| Binom(m, c/n) - Pois(c) ||_TV`, summing until both tails are
/// below `1e-17` per term (total neglected mass well under `1e-12`).
pub fn binom_pois_tv(m: u64, n: u64, c: f64) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("m and n must be positive"));
    }
    if !(c >= 0.0) || c > n as f64 {
        return Err(Error::invalid(format!("need 0 <= c <= n, got c = {c}, n = {n}")));
    }
    let p = c / n as f64;
    let peak = (m as f64 * p).max(c);
    let mut sum = 0.0;
    let mut k = 0u64;
    loop {
        let bk = binomial_pmf(k, m, p);
        let pk = poisson_pmf(k, c);
        sum += (bk - pk).abs();
        if k as f64 > peak && bk < 1e-17 && pk < 1e-17 {
            break;
        }
        k += 1;
    }
    Ok((0.5 * sum).clamp(0.0, 1.0))
}
