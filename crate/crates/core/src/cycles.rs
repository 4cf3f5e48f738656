//! Short-cycle census.
//!
//! Two counters are provided:
//!
//! * [`count_cycles_exact`] enumerates simple cycles by depth-first search,
//!   rooting each cycle at its smallest vertex and fixing its direction, so
//!   every cycle is seen exactly once. It is the oracle.
//! * [`count_cycles_nb`] works one vertex at a time on the ball `B(v, r)`.
//!   It runs the non-backtracking walk recurrence
//!   `A_2 = A^2 - D`, `A_j = A_{j-1} A - A_{j-2} (D - I)` on the ball to get
//!   the number `C_v(j)` of closed non-backtracking walks of length `j` at `v`.
//!
//! Closed non-backtracking walks also include "tadpoles" (walk out along a
//! path, around a cycle, back along the path) and repeated traversals of a
//! shorter cycle. Writing `W(j) = sum_v C_v(j)`, the number of closed walks
//! whose final step reverses the first one satisfies
//!
//! ```text
//! Tailed(j) = sum_u (deg(u) - 2) C_u(j - 2) + Tailed(j - 2),   Tailed(1) = Tailed(2) = 0
//! ```
//!
//! (strip the first and last edge of such a walk and count the ways to put
//! them back). `W(j) - Tailed(j)` counts cyclically reduced closed walks; when
//! no ball contains two independent cycles these are exactly the traversals
//! of simple cycles, so
//!
//! ```text
//! X_j = (W(j) - Tailed(j) - sum_{l | j, 3 <= l < j} 2 l X_l) / (2 j).
//! ```
//!
//! The identity fails only through closed walks whose support holds two
//! independent cycles. Such a walk has length at least 6: the smallest
//! leafless bicyclic simple graph is `K_4` minus an edge, whose two odd
//! vertices rule out a closed walk of length 5 covering it. So for `k <= 5`
//! the count is exact on every graph. For `k >= 6` a vertex is flagged when
//! some closed non-backtracking walk of length `<= k` at it has a bicyclic
//! support, and the census is then marked approximate. The search only runs
//! when the edges such walks can reach (those `{x, y}` with
//! `d(v,x) + d(v,y) + 1 <= k`) hold two or more independent cycles, and falls
//! back to flagging if it exceeds its step budget. Literal mode flags any ball with two or
//! more independent cycles.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, ModelParams};
use crate::rng::RngStream;
use crate::sample::{sample_er, sample_sbm};
use crate::stats::{poisson_chi_square, run_trials, ChiSquareFit, Summary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusMethod {
    Exact,
    NbWalk,
}

/// Cycle counts `X_k` for `k` in `3..=k_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleCensus {
    pub counts: BTreeMap<usize, u64>,
    pub method: CensusMethod,
    /// Vertices whose ball contained at least two independent cycles
    /// (non-backtracking method only).
    pub flagged_vertices: Vec<usize>,
    /// Set when the counts may differ from the true cycle counts.
    pub approximate: bool,
}

impl CycleCensus {
    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn flagged(&self) -> bool {
        !self.flagged_vertices.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactOptions {
    /// Maximum number of DFS extensions before aborting.
    pub node_budget: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            node_budget: 2_000_000_000,
        }
    }
}

pub fn count_cycles_exact(g: &Graph, k_max: usize) -> Result<CycleCensus> {
    count_cycles_exact_with(g, k_max, ExactOptions::default())
}

pub fn count_cycles_exact_with(g: &Graph, k_max: usize, opts: ExactOptions) -> Result<CycleCensus> {
    if k_max < 3 {
        return Err(Error::invalid(format!("k_max must be at least 3, got {k_max}")));
    }
    let n = g.n();
    let mut hits = vec![0u64; k_max + 1];
    let mut on_path = vec![false; n];
    let mut path = Vec::with_capacity(k_max);
    let mut steps = 0u64;

    for root in 0..n {
        path.clear();
        path.push(root);
        on_path[root] = true;
        // Explicit stack of (vertex, next neighbor index).
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(top) = stack.last_mut() {
            let (u, idx) = *top;
            let nb = g.neighbors(u);
            if idx == nb.len() {
                stack.pop();
                on_path[u] = false;
                path.pop();
                continue;
            }
            top.1 += 1;
            let w = nb[idx];
            if w == root {
                // Count each cycle in one direction only.
                if path.len() >= 3 && path[1] < u {
                    hits[path.len()] += 1;
                }
                continue;
            }
            if w < root || on_path[w] || path.len() == k_max {
                continue;
            }
            steps += 1;
            if steps > opts.node_budget {
                return Err(Error::BudgetExceeded {
                    what: "exact cycle enumeration",
                    budget: opts.node_budget,
                });
            }
            on_path[w] = true;
            path.push(w);
            stack.push((w, 0));
        }
    }
    Ok(CycleCensus {
        counts: (3..=k_max).map(|k| (k, hits[k])).collect(),
        method: CensusMethod::Exact,
        flagged_vertices: Vec::new(),
        approximate: false,
    })
}

/// Which non-backtracking recurrence to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NbMode {
    /// `A_j = A_{j-1} A - A_{j-2}(D - I)`, ball radius `ceil(k/2)`, with the
    /// tadpole and repeated-cycle corrections.
    #[default]
    Standard,
    /// `A_j = A_{j-1} A - D A_{j-2}` for every `j >= 2`, ball radius `k`, and
    /// `X_k = sum_v C_v / (2k)` with no corrections. Kept for comparison; it
    /// disagrees with the oracle from `k = 4` on.
    Literal,
}

/// Per-length closed-walk totals from the non-backtracking pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NbWalkTotals {
    pub mode: NbMode,
    pub k: usize,
    /// `W(j) = sum_v C_v(j)` for `j = 0..=k`.
    pub closed_walks: Vec<i64>,
    /// `Tailed(j)` for `j = 0..=k` (all zero in literal mode).
    pub tailed: Vec<i64>,
    pub flagged_vertices: Vec<usize>,
}

pub fn count_cycles_nb(g: &Graph, k: usize) -> Result<CycleCensus> {
    count_cycles_nb_with(g, k, NbMode::Standard)
}

pub fn count_cycles_nb_with(g: &Graph, k: usize, mode: NbMode) -> Result<CycleCensus> {
    let totals = nb_walk_totals(g, k, mode)?;
    let mut counts = BTreeMap::new();
    let mut approximate = !totals.flagged_vertices.is_empty();
    match mode {
        NbMode::Standard => {
            for j in 3..=k {
                let mut rest = totals.closed_walks[j] - totals.tailed[j];
                for l in 3..j {
                    if j % l == 0 {
                        rest -= 2 * l as i64 * counts[&l] as i64;
                    }
                }
                let denom = 2 * j as i64;
                if rest < 0 || rest % denom != 0 {
                    approximate = true;
                }
                counts.insert(j, (rest.max(0) / denom) as u64);
            }
        }
        NbMode::Literal => {
            let w = totals.closed_walks[k];
            let denom = 2 * k as i64;
            if w < 0 || w % denom != 0 {
                approximate = true;
            }
            counts.insert(k, (w.max(0) / denom) as u64);
        }
    }
    Ok(CycleCensus {
        counts,
        method: CensusMethod::NbWalk,
        flagged_vertices: totals.flagged_vertices,
        approximate,
    })
}

/// Runs the per-vertex recurrence and aggregates `W(j)` and `Tailed(j)`.
pub fn nb_walk_totals(g: &Graph, k: usize, mode: NbMode) -> Result<NbWalkTotals> {
    if k < 3 {
        return Err(Error::invalid(format!("cycle length must be at least 3, got {k}")));
    }
    let radius = match mode {
        NbMode::Standard => k.div_ceil(2),
        NbMode::Literal => k,
    };
    let n = g.n();
    let per_vertex: Vec<Result<(Vec<i64>, bool)>> = (0..n)
        .into_par_iter()
        .with_min_len(1024)
        .map_init(
            || BallWorkspace::new(n),
            |ws, v| ws.closed_walks(g, v, k, radius, mode),
        )
        .collect();

    let mut closed_walks = vec![0i64; k + 1];
    let mut weighted = vec![0i64; k + 1];
    let mut flagged_vertices = Vec::new();
    for (v, r) in per_vertex.into_iter().enumerate() {
        let (c, flagged) = r?;
        if flagged {
            flagged_vertices.push(v);
        }
        let excess = g.degree(v) as i64 - 2;
        for j in 0..=k {
            closed_walks[j] = closed_walks[j].checked_add(c[j]).ok_or(Error::Overflow("walk total"))?;
            let term = excess.checked_mul(c[j]).ok_or(Error::Overflow("tail term"))?;
            weighted[j] = weighted[j].checked_add(term).ok_or(Error::Overflow("tail term"))?;
        }
    }
    let mut tailed = vec![0i64; k + 1];
    if mode == NbMode::Standard {
        for j in 3..=k {
            tailed[j] = weighted[j - 2] + tailed[j - 2];
        }
    }
    Ok(NbWalkTotals {
        mode,
        k,
        closed_walks,
        tailed,
        flagged_vertices,
    })
}

/// Step limit for the per-vertex search for bicyclic closed walks; past it
/// the vertex is flagged without proof.
const BICYCLIC_SEARCH_BUDGET: usize = 1 << 20;

/// Reusable scratch space for ball extraction on a fixed graph.
struct BallWorkspace {
    local: Vec<u32>,
    verts: Vec<usize>,
    level: Vec<u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl BallWorkspace {
    fn new(n: usize) -> Self {
        Self {
            local: vec![u32::MAX; n],
            verts: Vec::new(),
            level: Vec::new(),
            offsets: Vec::new(),
            targets: Vec::new(),
        }
    }

    /// Cyclomatic number of the part of the current ball that closed walks of
    /// length `<= k` from the center can use. That part is connected: the
    /// tree edge above any used vertex is itself usable.
    fn reachable_cyclomatic(&self, k: usize) -> usize {
        let mut edges = 0usize;
        let mut touched = 1usize;
        for i in 1..self.verts.len() {
            let li = self.level[i] as usize;
            let mut used = false;
            for &t in &self.targets[self.offsets[i]..self.offsets[i + 1]] {
                if li + (self.level[t as usize] as usize) < k {
                    used = true;
                    if (t as usize) < i {
                        edges += 1;
                    }
                }
            }
            touched += usize::from(used);
        }
        (edges + 1).saturating_sub(touched)
    }

    /// Whether some closed non-backtracking walk of length `<= k` at the
    /// center has a support with two independent cycles. `None` when the
    /// search exceeds `budget` steps.
    fn bicyclic_walk(&self, k: usize, budget: usize) -> Option<bool> {
        let mut steps = 0usize;
        // (vertex, previous vertex, next neighbor slot)
        let mut stack: Vec<(u32, u32, usize)> = vec![(0, u32::MAX, self.offsets[0])];
        let mut walk: Vec<(u32, u32)> = Vec::with_capacity(k);
        let mut support: Vec<(u32, u32)> = Vec::with_capacity(k);
        let mut touched: Vec<u32> = Vec::with_capacity(k + 1);
        while let Some(top) = stack.last_mut() {
            let (x, prev, slot) = *top;
            if slot == self.offsets[x as usize + 1] {
                stack.pop();
                walk.pop();
                continue;
            }
            top.2 += 1;
            let y = self.targets[slot];
            if y == prev {
                continue;
            }
            let len = walk.len() + 1;
            // The walk must still be able to get back to the center.
            if self.level[y as usize] as usize > k - len {
                continue;
            }
            steps += 1;
            if steps > budget {
                return None;
            }
            walk.push((x.min(y), x.max(y)));
            if y == 0 && len >= 6 {
                support.clear();
                support.extend_from_slice(&walk);
                support.sort_unstable();
                support.dedup();
                touched.clear();
                touched.extend(support.iter().flat_map(|&(p, q)| [p, q]));
                touched.sort_unstable();
                touched.dedup();
                if support.len() + 1 >= touched.len() + 2 {
                    return Some(true);
                }
            }
            if len < k {
                stack.push((y, x, self.offsets[y as usize]));
            } else {
                walk.pop();
            }
        }
        Some(false)
    }

    /// `C_v(j)` for `j = 0..=k` on `B(v, radius)`, and whether the ball has
    /// two or more independent cycles.
    fn closed_walks(
        &mut self,
        g: &Graph,
        v: usize,
        k: usize,
        radius: usize,
        mode: NbMode,
    ) -> Result<(Vec<i64>, bool)> {
        // BFS, recording local indices.
        self.verts.clear();
        self.level.clear();
        self.verts.push(v);
        self.level.push(0);
        self.local[v] = 0;
        let mut level_start = 0;
        for depth in 1..=radius as u32 {
            let level_end = self.verts.len();
            if level_start == level_end {
                break;
            }
            for i in level_start..level_end {
                let u = self.verts[i];
                for &w in g.neighbors(u) {
                    if self.local[w] == u32::MAX {
                        self.local[w] = self.verts.len() as u32;
                        self.verts.push(w);
                        self.level.push(depth);
                    }
                }
            }
            level_start = level_end;
        }
        // Induced adjacency in local indices.
        self.offsets.clear();
        self.targets.clear();
        self.offsets.push(0);
        for &u in &self.verts {
            for &w in g.neighbors(u) {
                let lw = self.local[w];
                if lw != u32::MAX {
                    self.targets.push(lw);
                }
            }
            self.offsets.push(self.targets.len());
        }
        let size = self.verts.len();
        let flagged = match mode {
            NbMode::Standard => {
                k >= 6
                    && self.reachable_cyclomatic(k) >= 2
                    && self.bicyclic_walk(k, BICYCLIC_SEARCH_BUDGET).unwrap_or(true)
            }
            NbMode::Literal => self.targets.len() / 2 > size,
        };
        for &u in &self.verts {
            self.local[u] = u32::MAX;
        }

        let deg = |i: usize| (self.offsets[i + 1] - self.offsets[i]) as i64;
        let center_deg = deg(0);
        let mut out = vec![0i64; k + 1];
        let mut older = vec![0i64; size];
        let mut old = vec![0i64; size];
        let mut cur = vec![0i64; size];
        old[0] = 1;
        out[0] = 1;
        for j in 1..=k {
            // cur = old * A
            cur.iter_mut().for_each(|x| *x = 0);
            for i in 0..size {
                let x = old[i];
                if x == 0 {
                    continue;
                }
                for &t in &self.targets[self.offsets[i]..self.offsets[i + 1]] {
                    let slot = &mut cur[t as usize];
                    *slot = slot.checked_add(x).ok_or(Error::Overflow("walk recurrence"))?;
                }
            }
            if j >= 2 {
                for i in 0..size {
                    let y = older[i];
                    if y == 0 {
                        continue;
                    }
                    let coef = match mode {
                        NbMode::Standard if j == 2 => deg(i),
                        NbMode::Standard => deg(i) - 1,
                        NbMode::Literal => center_deg,
                    };
                    let sub = y.checked_mul(coef).ok_or(Error::Overflow("walk recurrence"))?;
                    cur[i] = cur[i].checked_sub(sub).ok_or(Error::Overflow("walk recurrence"))?;
                }
            }
            out[j] = cur[0];
            std::mem::swap(&mut older, &mut old);
            std::mem::swap(&mut old, &mut cur);
        }
        Ok((out, flagged))
    }
}

/// Limiting Poisson means of `X_k` under the planted model and the null.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoissonPrediction {
    pub k: usize,
    /// `((a+b)^k + (a-b)^k) / (k 2^(k+1))`.
    pub mean_sbm: f64,
    /// `((a+b)/2)^k / (2k)`.
    pub mean_er: f64,
    /// `((a-b)/(a+b))^k`.
    pub delta_k: f64,
}

impl PoissonPrediction {
    pub fn new(a: f64, b: f64, k: usize) -> Self {
        let kf = k as f64;
        let ki = k as i32;
        Self {
            k,
            mean_sbm: ((a + b).powi(ki) + (a - b).powi(ki)) / (kf * 2f64.powi(ki + 1)),
            mean_er: ((a + b) / 2.0).powi(ki) / (2.0 * kf),
            delta_k: ((a - b) / (a + b)).powi(ki),
        }
    }
}

/// `C(n,k) (k-1)!/2 / n^k = n(n-1)...(n-k+1) / (2k n^k)`: number of potential
/// k-cycles in `K_n`, scaled by `n^-k`.
fn cycle_slots_scaled(n: usize, k: usize) -> f64 {
    if k > n || k < 3 {
        return 0.0;
    }
    let nf = n as f64;
    let falling: f64 = (0..k).map(|i| (nf - i as f64) / nf).product();
    falling / (2.0 * k as f64)
}

/// Exact finite-n mean of `X_k` under the planted model:
/// `C(n,k) (k-1)!/2 (2n)^-k ((a+b)^k + (a-b)^k)`.
pub fn planted_cycle_mean(n: usize, a: f64, b: f64, k: usize) -> f64 {
    let ki = k as i32;
    cycle_slots_scaled(n, k) * ((a + b).powi(ki) + (a - b).powi(ki)) / 2f64.powi(ki)
}

/// Exact finite-n mean of `X_k` under `G(n, c/n)`.
pub fn null_cycle_mean(n: usize, c: f64, k: usize) -> f64 {
    cycle_slots_scaled(n, k) * c.powi(k as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Sbm,
    Er,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Sbm => "sbm",
            Model::Er => "er",
        })
    }
}

/// Samples one graph from the planted model or its mean-degree-matched null.
pub fn sample_model(params: &ModelParams, model: Model, rng: &mut RngStream) -> Result<Graph> {
    let g = match model {
        Model::Sbm => sample_sbm(params, rng)?,
        Model::Er => sample_er(params.n, params.null_intensity(), rng)?,
    };
    Ok(g.into_parts().0)
}

/// Counting strategy for Monte Carlo drivers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    Exact,
    NbWalk,
    /// Exact for `n <= 200`, non-backtracking otherwise.
    #[default]
    Auto,
}

pub const EXACT_FALLBACK_MAX_N: usize = 200;

pub fn count_cycles(g: &Graph, k: usize, method: CountMethod) -> Result<CycleCensus> {
    match method {
        CountMethod::Exact => count_cycles_exact(g, k),
        CountMethod::NbWalk => count_cycles_nb(g, k),
        CountMethod::Auto if g.n() <= EXACT_FALLBACK_MAX_N => count_cycles_exact(g, k),
        CountMethod::Auto => count_cycles_nb(g, k),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonCheckReport {
    pub model: Model,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub k: usize,
    pub trials: usize,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub se_mean: f64,
    pub se_var: f64,
    /// Exact finite-n mean of `X_k` for the sampled model.
    pub pred_mean: f64,
    /// Limiting Poisson mean.
    pub asymptotic_mean: f64,
    pub flagged_fraction: f64,
    pub chi_square: ChiSquareFit,
    pub pass: bool,
    pub samples: Vec<u64>,
}

impl PoissonCheckReport {
    pub const CSV_HEADER: &'static str =
        "model,n,a,b,k,trials,emp_mean,emp_var,pred_mean,flagged_fraction,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.n,
            self.a,
            self.b,
            self.k,
            self.trials,
            self.emp_mean,
            self.emp_var,
            self.pred_mean,
            self.flagged_fraction,
            self.pass
        )
    }
}

/// Samples `trials` graphs and compares the law of `X_k` with its Poisson
/// prediction. Passes when both the empirical mean and variance lie within
/// four standard errors of the predicted mean.
pub fn poisson_law_check(
    params: &ModelParams,
    model: Model,
    k: usize,
    trials: usize,
    method: CountMethod,
    rng: &RngStream,
) -> Result<PoissonCheckReport> {
    params.validate()?;
    if trials < 100 {
        return Err(Error::invalid(format!("need at least 100 trials, got {trials}")));
    }
    if k < 3 {
        return Err(Error::invalid(format!("cycle length must be at least 3, got {k}")));
    }
    let arm = match model {
        Model::Sbm => 0,
        Model::Er => 1,
    };
    let results = run_trials(trials, |i| -> Result<(u64, bool)> {
        let g = sample_model(params, model, &mut rng.child(arm, i as u32))?;
        let census = count_cycles(&g, k, method)?;
        Ok((census.count(k), census.flagged()))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let samples: Vec<u64> = results.iter().map(|r| r.0).collect();
    let flagged = results.iter().filter(|r| r.1).count();

    let (pred_mean, asymptotic_mean) = match model {
        Model::Sbm => (
            planted_cycle_mean(params.n, params.a, params.b, k),
            PoissonPrediction::new(params.a, params.b, k).mean_sbm,
        ),
        Model::Er => (
            null_cycle_mean(params.n, params.null_intensity(), k),
            PoissonPrediction::new(params.a, params.b, k).mean_er,
        ),
    };
    let s = Summary::of_counts(&samples);
    let pass = (s.mean - pred_mean).abs() <= 4.0 * s.se_mean
        && (s.var - pred_mean).abs() <= 4.0 * s.se_var;
    Ok(PoissonCheckReport {
        model,
        n: params.n,
        a: params.a,
        b: params.b,
        k,
        trials,
        emp_mean: s.mean,
        emp_var: s.var,
        se_mean: s.se_mean,
        se_var: s.se_var,
        pred_mean,
        asymptotic_mean,
        flagged_fraction: flagged as f64 / trials as f64,
        chi_square: poisson_chi_square(&samples, pred_mean),
        pass,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        Graph::from_edges(n, e).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn exact_small_graphs() {
        let t = count_cycles_exact(&complete(3), 6).unwrap();
        assert_eq!(t.count(3), 1);
        assert!((4..=6).all(|k| t.count(k) == 0));
        let k4 = count_cycles_exact(&complete(4), 4).unwrap();
        assert_eq!((k4.count(3), k4.count(4)), (4, 3));
        let c4 = count_cycles_exact(&cycle(4), 5).unwrap();
        assert_eq!((c4.count(3), c4.count(4)), (0, 1));
        // K5: C(5,k)(k-1)!/2 = 10, 15, 12.
        let k5 = count_cycles_exact(&complete(5), 7).unwrap();
        assert_eq!((k5.count(3), k5.count(4), k5.count(5), k5.count(6)), (10, 15, 12, 0));
    }

    #[test]
    fn exact_rejects_short_kmax_and_respects_budget() {
        assert!(count_cycles_exact(&complete(3), 2).is_err());
        let err = count_cycles_exact_with(&complete(8), 8, ExactOptions { node_budget: 100 });
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn nb_on_triangle_and_square() {
        let t = nb_walk_totals(&complete(3), 3, NbMode::Standard).unwrap();
        assert_eq!(t.closed_walks[3], 6);
        assert_eq!(count_cycles_nb(&complete(3), 3).unwrap().count(3), 1);
        let s = nb_walk_totals(&cycle(4), 4, NbMode::Standard).unwrap();
        assert_eq!(s.closed_walks[4], 8);
        assert_eq!(count_cycles_nb(&cycle(4), 4).unwrap().count(4), 1);
    }

    #[test]
    fn nb_corrects_tadpoles() {
        // Triangle 0-1-2 with a pendant vertex 3 on 0: closed walks
        // 3-0-1-2-0-3 and 3-0-2-1-0-3 are non-backtracking but not cycles.
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (0, 3)]).unwrap();
        let t = nb_walk_totals(&g, 5, NbMode::Standard).unwrap();
        assert_eq!(t.closed_walks[5], 2);
        assert_eq!(t.tailed[5], 2);
        let c = count_cycles_nb(&g, 5).unwrap();
        assert_eq!((c.count(3), c.count(4), c.count(5)), (1, 0, 0));
        assert!(!c.approximate);
    }

    #[test]
    fn nb_corrects_repeated_triangle() {
        // Going twice around a triangle is a closed non-backtracking walk of
        // length 6.
        let c = count_cycles_nb(&complete(3), 6).unwrap();
        assert_eq!(c.count(6), 0);
        assert_eq!(c.count(3), 1);
        let c6 = count_cycles_nb(&cycle(6), 6).unwrap();
        assert_eq!(c6.count(6), 1);
    }

    #[test]
    fn nb_is_exact_below_six_even_on_dense_graphs() {
        let c = count_cycles_nb(&complete(5), 5).unwrap();
        assert!(!c.flagged() && !c.approximate);
        assert_eq!([c.count(3), c.count(4), c.count(5)], [10, 15, 12]);
    }

    #[test]
    fn nb_flags_figure_eight_at_six() {
        let bowtie = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]).unwrap();
        let c = count_cycles_nb(&bowtie, 6).unwrap();
        assert!(c.flagged() && c.approximate);
        assert_eq!(c.count(3), 2);
        // A 6-cycle with a distant pendant triangle stays exact.
        let far = Graph::from_edges(
            12,
            [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (5, 6), (6, 7), (7, 8), (8, 9), (9, 10), (10, 11), (11, 9)],
        )
        .unwrap();
        let c = count_cycles_nb(&far, 6).unwrap();
        assert!(!c.approximate);
        assert_eq!(c.count(6), 1);
        assert_eq!(c.count(3), 1);
    }

    #[test]
    fn literal_mode_diverges_at_length_four() {
        // Literal recurrence: diagonal of A_4 is (A^4)_vv - 2 d_v^2 = 8 - 8 = 0 on C4.
        let lit = nb_walk_totals(&cycle(4), 4, NbMode::Literal).unwrap();
        assert_eq!(lit.closed_walks[4], 0);
        // At length 3 both recurrences agree.
        let lit3 = nb_walk_totals(&complete(3), 3, NbMode::Literal).unwrap();
        assert_eq!(lit3.closed_walks[3], 6);
    }

    #[test]
    fn predictions() {
        let p = PoissonPrediction::new(5.0, 1.0, 3);
        assert!((p.mean_sbm - 35.0 / 6.0).abs() < 1e-12);
        assert!((p.mean_er - 4.5).abs() < 1e-12);
        assert!((p.mean_sbm / p.mean_er - 1.0 - p.delta_k).abs() < 1e-12);
        assert!((planted_cycle_mean(6, 2.0, 2.0, 3) - 20.0 / 27.0).abs() < 1e-15);
        assert_eq!(planted_cycle_mean(4, 2.0, 1.0, 5), 0.0);
    }

    #[test]
    fn poisson_check_rejects_few_trials() {
        let p = ModelParams::new(100, 3.0, 1.0).unwrap();
        let r = poisson_law_check(&p, Model::Sbm, 3, 10, CountMethod::Auto, &RngStream::new(0, 0));
        assert!(r.is_err());
    }
}
