//! Exact small-n checks of the likelihood-ratio moment identities.
//!
//! For a graph `G` and labeling `sigma`, every vertex pair gets a weight
//!
//! | pair            | edge present | edge absent              |
//! |-----------------|--------------|--------------------------|
//! | same label      | `2a/(a+b)`   | `(n-a)/(n-(a+b)/2)`      |
//! | different label | `2b/(a+b)`   | `(n-b)/(n-(a+b)/2)`      |
//!
//! and `Y(G) = 2^-n sum_sigma prod_pairs W_uv(G, sigma)` is the likelihood
//! ratio of the planted model against `G(n, (a+b)/(2n))`. Its null mean is 1;
//! its second moment tends to `exp(-t/2 - t^2/4) / sqrt(1-t)` for `t < 1`.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::cycles::{count_cycles_exact, null_cycle_mean, PoissonPrediction};
use crate::error::{Error, Result};
use crate::graph::{snr, Graph, Label};
use crate::rng::RngStream;
use crate::sample::sample_er;
use crate::stats::{run_trials, Summary};

/// Largest vertex count for exhaustive labeling sums.
pub const MAX_EXACT_N: usize = 24;

/// The four values of `W_uv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeWeightSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub present_same: f64,
    pub present_diff: f64,
    pub absent_same: f64,
    pub absent_diff: f64,
}

impl EdgeWeightSpec {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        let nf = n as f64;
        let d = (a + b) / 2.0;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::invalid(format!("need a, b > 0, got a = {a}, b = {b}")));
        }
        if !(nf > d) || a > nf || b > nf {
            return Err(Error::invalid(format!(
                "need n > (a+b)/2 and a, b <= n, got n = {n}, a = {a}, b = {b}"
            )));
        }
        Ok(Self {
            a,
            b,
            n,
            present_same: 2.0 * a / (a + b),
            present_diff: 2.0 * b / (a + b),
            absent_same: (nf - a) / (nf - d),
            absent_diff: (nf - b) / (nf - d),
        })
    }

    pub fn weight(&self, present: bool, same_label: bool) -> f64 {
        match (present, same_label) {
            (true, true) => self.present_same,
            (true, false) => self.present_diff,
            (false, true) => self.absent_same,
            (false, false) => self.absent_diff,
        }
    }

    /// Null edge probability `(a+b)/(2n)`.
    pub fn null_edge_prob(&self) -> f64 {
        (self.a + self.b) / (2.0 * self.n as f64)
    }

    /// `E W_uv` over edge presence under the null, for a fixed labeling.
    pub fn expected_weight(&self, same_label: bool) -> f64 {
        let p = self.null_edge_prob();
        self.weight(true, same_label) * p + self.weight(false, same_label) * (1.0 - p)
    }

    /// `E W_uv V_uv` where `W` uses `sigma` and `V` uses `tau`.
    pub fn pair_cross_moment(&self, sigma_same: bool, tau_same: bool) -> f64 {
        let p = self.null_edge_prob();
        self.weight(true, sigma_same) * self.weight(true, tau_same) * p
            + self.weight(false, sigma_same) * self.weight(false, tau_same) * (1.0 - p)
    }
}

pub fn edge_weight(present: bool, same_label: bool, a: f64, b: f64, n: usize) -> Result<f64> {
    Ok(EdgeWeightSpec::new(a, b, n)?.weight(present, same_label))
}

/// Counts of labelings by `(|V+|, same-label edges)`, with vertex 0 pinned to
/// `+` (the other half follows by global flip symmetry).
struct LabelingHistogram {
    n: usize,
    edges: usize,
    /// `counts[n_plus * (edges + 1) + same_edges]`.
    counts: Vec<u64>,
}

impl LabelingHistogram {
    fn get(&self, n_plus: usize, same: usize) -> u64 {
        self.counts[n_plus * (self.edges + 1) + same]
    }
}

fn labeling_histogram(g: &Graph) -> Result<LabelingHistogram> {
    let n = g.n();
    if n == 0 {
        return Err(Error::invalid("graph has no vertices"));
    }
    if n > MAX_EXACT_N {
        return Err(Error::BudgetExceeded {
            what: "labeling enumeration (vertex count)",
            budget: MAX_EXACT_N as u64,
        });
    }
    let adj: Vec<u32> = (0..n)
        .map(|u| g.neighbors(u).iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();
    let m = g.edge_count();
    let free = n - 1;
    let low_bits = free.min(12);
    let high_bits = free - low_bits;
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };

    let chunk = |c: u32| -> Vec<u64> {
        let mut counts = vec![0u64; (n + 1) * (m + 1)];
        // Vertex 0 is always +; bits 1..=free encode the rest. Low bits run
        // through a Gray code, high bits are fixed per chunk.
        let mut plus: u32 = 1 | (c << (1 + low_bits));
        let mut same: i64 = g
            .edges()
            .iter()
            .filter(|&&(u, v)| ((plus >> u) & 1) == ((plus >> v) & 1))
            .count() as i64;
        let mut n_plus = plus.count_ones() as usize;
        counts[n_plus * (m + 1) + same as usize] += 1;
        for step in 1u32..(1u32 << low_bits) {
            let i = 1 + step.trailing_zeros() as usize;
            let bit = 1u32 << i;
            let mates = if plus & bit != 0 { plus } else { !plus & full };
            let s_i = (adj[i] & mates).count_ones() as i64;
            same += adj[i].count_ones() as i64 - 2 * s_i;
            if plus & bit != 0 {
                n_plus -= 1;
            } else {
                n_plus += 1;
            }
            plus ^= bit;
            counts[n_plus * (m + 1) + same as usize] += 1;
        }
        counts
    };

    let chunks = 1u32 << high_bits;
    let parts: Vec<Vec<u64>> = if n >= 18 {
        (0..chunks).into_par_iter().map(chunk).collect()
    } else {
        (0..chunks).map(chunk).collect()
    };
    let mut counts = vec![0u64; (n + 1) * (m + 1)];
    for p in parts {
        for (acc, x) in counts.iter_mut().zip(p) {
            *acc += x;
        }
    }
    Ok(LabelingHistogram { n, edges: m, counts })
}

/// Kahan-compensated running sum.
#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// `count * ln(w)`, treating `0 * ln(0)` as 0.
fn scaled_log(count: usize, w: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * w.ln()
    }
}

/// Exact likelihood ratio `Y(G)` by summing over all `2^n` labelings.
///
/// Labelings are grouped by `(|V+|, same-label edges)`, which determines the
/// product of pair weights; each group's product is formed in log space and
/// exponentiated once, and the groups are combined with compensated
/// summation.
pub fn exact_y(g: &Graph, a: f64, b: f64) -> Result<f64> {
    let spec = EdgeWeightSpec::new(a, b, g.n())?;
    let h = labeling_histogram(g)?;
    let n = h.n;
    let m = h.edges;
    let mut total = Kahan::default();
    for n_plus in 0..=n {
        let n_minus = n - n_plus;
        let same_pairs = n_plus * n_plus.saturating_sub(1) / 2 + n_minus * n_minus.saturating_sub(1) / 2;
        let cross_pairs = n_plus * n_minus;
        for same in 0..=m {
            let count = h.get(n_plus, same);
            if count == 0 {
                continue;
            }
            let cross = m - same;
            let log_w = scaled_log(same, spec.present_same)
                + scaled_log(cross, spec.present_diff)
                + scaled_log(same_pairs - same, spec.absent_same)
                + scaled_log(cross_pairs - cross, spec.absent_diff);
            total.add(count as f64 * log_w.exp());
        }
    }
    // Pinning vertex 0 halves the labeling space.
    Ok(2.0 * total.sum / 2f64.powi(n as i32))
}

/// `sum_sigma prod_{(u,v) in E(h)} w_uv(sigma)` with `w = 2a/(a+b)` on
/// agreeing edges and `2b/(a+b)` on disagreeing ones.
pub fn cycle_weight_sum(h: &Graph, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid(format!("need a, b > 0, got a = {a}, b = {b}")));
    }
    let hist = labeling_histogram(h)?;
    let m = hist.edges;
    let (w_same, w_diff) = (2.0 * a / (a + b), 2.0 * b / (a + b));
    let mut by_same = vec![0u64; m + 1];
    for n_plus in 0..=hist.n {
        for (same, slot) in by_same.iter_mut().enumerate() {
            *slot += hist.get(n_plus, same);
        }
    }
    let mut total = Kahan::default();
    for (same, &count) in by_same.iter().enumerate() {
        if count > 0 {
            total.add(count as f64 * w_same.powi(same as i32) * w_diff.powi((m - same) as i32));
        }
    }
    Ok(2.0 * total.sum)
}

/// `exp(-t/2 - t^2/4) / sqrt(1 - t)`, the limit of `E Y_n^2` below threshold.
pub fn second_moment_limit(t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::invalid(format!(
            "second moment limit needs 0 <= t < 1, got {t}; it diverges at the threshold"
        )));
    }
    Ok((-t / 2.0 - t * t / 4.0).exp() / (1.0 - t).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossCase {
    /// `sigma_u sigma_v tau_u tau_v = +1`.
    Agree,
    /// `sigma_u sigma_v tau_u tau_v = -1`.
    Disagree,
}

/// Exact `E W_uv V_uv` from the weight table. `Agree` uses
/// `sigma_u sigma_v = tau_u tau_v = +1`; the `-1, -1` configuration differs
/// only at order `n^-3` (see [`EdgeWeightSpec::pair_cross_moment`]).
pub fn cross_moment(case: CrossCase, a: f64, b: f64, n: usize) -> Result<f64> {
    let spec = EdgeWeightSpec::new(a, b, n)?;
    Ok(match case {
        CrossCase::Agree => spec.pair_cross_moment(true, true),
        CrossCase::Disagree => spec.pair_cross_moment(true, false),
    })
}

/// Second-order expansion `1 ± (t/n + (a-b)^2/(4 n^2))`.
pub fn cross_moment_expansion(case: CrossCase, a: f64, b: f64, n: usize) -> f64 {
    let nf = n as f64;
    let term = snr(a, b) / nf + (a - b).powi(2) / (4.0 * nf * nf);
    match case {
        CrossCase::Agree => 1.0 + term,
        CrossCase::Disagree => 1.0 - term,
    }
}

/// Exact `E exp(s Z^2 / 2)` for `Z = n^(-1/2) sum_i xi_i` with i.i.d. signs.
pub fn mgf_binomial(n: u64, s: f64) -> Result<f64> {
    if n == 0 || n > 1_000_000 {
        return Err(Error::invalid(format!("need 1 <= n <= 10^6, got {n}")));
    }
    if !(s < 1.0) || !s.is_finite() {
        return Err(Error::invalid(format!("need s < 1, got {s}")));
    }
    let nf = n as f64;
    let ln_norm = ln_gamma(nf + 1.0) - nf * std::f64::consts::LN_2;
    let log_terms: Vec<f64> = (0..=n)
        .map(|j| {
            let jf = j as f64;
            let z = 2.0 * jf - nf;
            ln_norm - ln_gamma(jf + 1.0) - ln_gamma(nf - jf + 1.0) + s * z * z / (2.0 * nf)
        })
        .collect();
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = Kahan::default();
    for l in log_terms {
        total.add((l - max).exp());
    }
    Ok(max.exp() * total.sum)
}

/// `lambda_k = ((a+b)/2)^k / (2k)`.
pub fn lambda_k(a: f64, b: f64, k: usize) -> f64 {
    PoissonPrediction::new(a, b, k).mean_er
}

/// `delta_k = ((a-b)/(a+b))^k`.
pub fn delta_k(a: f64, b: f64, k: usize) -> f64 {
    PoissonPrediction::new(a, b, k).delta_k
}

/// `sum_{k=3}^{k_max} lambda_k delta_k^2`, built from the two sequences.
pub fn lambda_delta_sq_partial(a: f64, b: f64, k_max: usize) -> f64 {
    // Products are formed in log space; `lambda_k` alone overflows for large k.
    (3..=k_max)
        .map(|k| {
            let ln_lambda = k as f64 * ((a + b) / 2.0).ln() - (2.0 * k as f64).ln();
            let ln_delta_sq = 2.0 * delta_k(a, b, 1).abs().ln() * k as f64;
            (ln_lambda + ln_delta_sq).exp()
        })
        .sum()
}

/// `-(1/2)(ln(1-t) + t + t^2/2) = sum_{k>=3} t^k/(2k)`.
pub fn lambda_delta_sq_closed_form(t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::invalid(format!("series converges for 0 <= t < 1, got {t}")));
    }
    Ok(-0.5 * ((-t).ln_1p() + t + t * t / 2.0))
}

/// `(1/n) sum_i sigma_i tau_i`.
pub fn overlap(sigma: &[Label], tau: &[Label]) -> Result<f64> {
    if sigma.len() != tau.len() || sigma.is_empty() {
        return Err(Error::invalid("labelings must be nonempty and of equal length"));
    }
    let dot: i64 = sigma
        .iter()
        .zip(tau)
        .map(|(s, t)| i64::from(s.as_i8()) * i64::from(t.as_i8()))
        .sum();
    Ok(dot as f64 / sigma.len() as f64)
}

/// One row of the moment-check CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentCheckRow {
    pub check: String,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub k: usize,
    pub trials: usize,
    pub observed: f64,
    pub predicted: f64,
    pub stderr: f64,
    pub pass: bool,
}

impl MomentCheckRow {
    pub const CSV_HEADER: &'static str = "check,n,a,b,t,k,trials,observed,predicted,stderr,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.check, self.n, self.a, self.b, self.t, self.k, self.trials, self.observed,
            self.predicted, self.stderr, self.pass
        )
    }
}

/// Monte Carlo of `Y`, `Y^2` and `Y X_k` over null graphs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub k: usize,
    pub trials: usize,
    pub t: f64,
    pub y: Summary,
    pub y_squared: Summary,
    /// `exp(-t/2 - t^2/4)/sqrt(1-t)`.
    pub y_squared_limit: f64,
    pub yx: Summary,
    pub x: Summary,
    /// Finite-n null mean `C(n,k) (k-1)!/2 ((a+b)/(2n))^k`.
    pub lambda_k_n: f64,
    pub delta_k: f64,
    /// `lambda_k_n (1 + delta_k)`.
    pub predicted_yx: f64,
    /// `E[Y X_k] / predicted_yx`.
    pub ratio: f64,
    pub ratio_se: f64,
    pub y_values: Vec<f64>,
}

impl MomentReport {
    /// Tolerance band for the conditioned-mean ratio at small n.
    pub const RATIO_BAND: (f64, f64) = (0.8, 1.2);

    pub fn rows(&self) -> Vec<MomentCheckRow> {
        let row = |check: &str, observed: f64, predicted: f64, stderr: f64, pass: bool| MomentCheckRow {
            check: check.to_string(),
            n: self.n,
            a: self.a,
            b: self.b,
            t: self.t,
            k: self.k,
            trials: self.trials,
            observed,
            predicted,
            stderr,
            pass,
        };
        vec![
            row(
                "mean_y",
                self.y.mean,
                1.0,
                self.y.se_mean,
                (self.y.mean - 1.0).abs() <= 3.0 * self.y.se_mean,
            ),
            row(
                "y_times_x_ratio",
                self.ratio,
                1.0,
                self.ratio_se,
                (Self::RATIO_BAND.0..=Self::RATIO_BAND.1).contains(&self.ratio),
            ),
            row(
                "mean_y_squared",
                self.y_squared.mean,
                self.y_squared_limit,
                self.y_squared.se_mean,
                self.y_squared.mean.is_finite() && self.y_squared.mean <= 2.0 * self.y_squared_limit,
            ),
        ]
    }
}

/// Samples null graphs `G(n, (a+b)/(2n))`, computes `Y` exactly on each and
/// compares `E[Y X_k]` with `lambda_k^(n) (1 + delta_k)`.
pub fn conditioned_moment_check(
    a: f64,
    b: f64,
    n: usize,
    k: usize,
    trials: usize,
    rng: &RngStream,
) -> Result<MomentReport> {
    let t = snr(a, b);
    let y_squared_limit = second_moment_limit(t)?;
    EdgeWeightSpec::new(a, b, n)?;
    if n > MAX_EXACT_N {
        return Err(Error::BudgetExceeded {
            what: "labeling enumeration (vertex count)",
            budget: MAX_EXACT_N as u64,
        });
    }
    if k < 3 || trials == 0 {
        return Err(Error::invalid("need k >= 3 and at least one trial"));
    }
    let c = (a + b) / 2.0;
    let draws = run_trials(trials, |i| -> Result<(f64, u64)> {
        let g = sample_er(n, c, &mut rng.child(0, i as u32))?.into_parts().0;
        Ok((exact_y(&g, a, b)?, count_cycles_exact(&g, k)?.count(k)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let y_values: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let y2: Vec<f64> = y_values.iter().map(|y| y * y).collect();
    let yx: Vec<f64> = draws.iter().map(|&(y, x)| y * x as f64).collect();
    let xs: Vec<f64> = draws.iter().map(|&(_, x)| x as f64).collect();
    let lambda_k_n = null_cycle_mean(n, c, k);
    let delta = delta_k(a, b, k);
    let predicted_yx = lambda_k_n * (1.0 + delta);
    let yx_summary = Summary::of(&yx);
    Ok(MomentReport {
        n,
        a,
        b,
        k,
        trials,
        t,
        y: Summary::of(&y_values),
        y_squared: Summary::of(&y2),
        y_squared_limit,
        yx: yx_summary,
        x: Summary::of(&xs),
        lambda_k_n,
        delta_k: delta,
        predicted_yx,
        ratio: yx_summary.mean / predicted_yx,
        ratio_se: yx_summary.se_mean / predicted_yx,
        y_values,
    })
}

/// Deterministic identity checks at `(a, b, n)`: first moments of `W`, the
/// cross-moment expansion, the second-moment limit, the binomial MGF limit
/// and the `lambda_k delta_k^2` series.
pub fn identity_checks(a: f64, b: f64, n: usize) -> Result<Vec<MomentCheckRow>> {
    let spec = EdgeWeightSpec::new(a, b, n)?;
    let t = snr(a, b);
    let nf = n as f64;
    let row = |check: &str, observed: f64, predicted: f64, tol: f64| MomentCheckRow {
        check: check.to_string(),
        n,
        a,
        b,
        t,
        k: 0,
        trials: 0,
        observed,
        predicted,
        stderr: 0.0,
        pass: (observed - predicted).abs() <= tol,
    };
    let mut rows = vec![
        row("first_moment_same", spec.expected_weight(true), 1.0, 4.0 * f64::EPSILON),
        row("first_moment_diff", spec.expected_weight(false), 1.0, 4.0 * f64::EPSILON),
    ];
    for (name, case) in [("cross_moment_agree", CrossCase::Agree), ("cross_moment_disagree", CrossCase::Disagree)] {
        // Remainder is O(n^-3); allow a generous constant.
        let tol = 100.0 * (1.0 + a + b).powi(3) / nf.powi(3);
        rows.push(row(
            name,
            cross_moment(case, a, b, n)?,
            cross_moment_expansion(case, a, b, n),
            tol,
        ));
    }
    if t < 1.0 {
        let series = lambda_delta_sq_partial(a, b, 2000);
        rows.push(row("lambda_delta_sq_series", series, lambda_delta_sq_closed_form(t)?, 1e-8));
        rows.push(row(
            "mgf_binomial_1000",
            mgf_binomial(1000, t)?,
            1.0 / (1.0 - t).sqrt(),
            0.02 / (1.0 - t).sqrt(),
        ));
    }
    Ok(rows)
}
