//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p sbmlab-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use sbmlab_core::broadcast::{ks_check, reconstruction_curve, Reconstructability, ThresholdQuery};
use sbmlab_core::cycles::{
    count_cycles_exact, count_cycles_nb, planted_cycle_mean, poisson_law_check, CountMethod, Model,
};
use sbmlab_core::estimation::{distinguish, estimate_study, gap_study, pooled_estimate};
use sbmlab_core::moments::{
    conditioned_moment_check, cycle_weight_sum, lambda_delta_sq_closed_form, lambda_delta_sq_partial,
    mgf_binomial, second_moment_limit, EdgeWeightSpec,
};
use sbmlab_core::stats::median_with_se;
use sbmlab_core::{sample_sbm, Error, Graph, ModelParams, RngStream};

/// Lower bound on the mean root bias at depth 8 for `(a, b) = (5, 1)`. The
/// first run with seed 6001 and 2000 trials measured 0.2606 (standard error
/// 0.0034); the floor is frozen at the conservative 0.05.
const KS_PLATEAU_FLOOR: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("oracle equivalence of cycle counts", c1_oracle),
        ("Poisson law of X_3", c2_poisson),
        ("finite-n mean identity by brute force", c3_finite_mean),
        ("cycle-based estimator", c4_estimator),
        ("distinguishing gap and contiguous regime", c5_distinguish),
        ("Kesten-Stigum dichotomy on trees", c6_kesten_stigum),
        ("moment identities", c7_moments),
        ("conditioned moments", c8_conditioned),
        ("reproducibility across thread counts", c9_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} [{status}] {name}: {} ({:.1}s)",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn c1_oracle() -> Outcome {
    let start = Instant::now();
    let p = ModelParams::new(60, 5.0, 1.0).unwrap();
    let base = RngStream::new(1001, 0);
    let mut compared = [0usize; 7];
    let mut mismatches = Vec::new();
    for i in 0..200u32 {
        let g = sample_sbm(&p, &mut base.child(0, i)).unwrap().into_parts().0;
        let exact = count_cycles_exact(&g, 6).unwrap();
        for (k, seen) in compared.iter_mut().enumerate().skip(3) {
            let nb = count_cycles_nb(&g, k).unwrap();
            if nb.approximate {
                continue;
            }
            *seen += 1;
            if nb.count(k) != exact.count(k) {
                mismatches.push((i, k));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && secs < 60.0,
        format!(
            "unflagged instances compared for k=3..6: {:?}, mismatches: {}, runtime {secs:.1}s",
            &compared[3..],
            mismatches.len()
        ),
    )
}

fn c2_poisson() -> Outcome {
    let p = ModelParams::new(2000, 5.0, 1.0).unwrap();
    let rng = RngStream::new(2001, 0);
    let mut pass = true;
    let mut parts = Vec::new();
    for (model, target) in [(Model::Sbm, 35.0 / 6.0), (Model::Er, 4.5)] {
        let r = poisson_law_check(&p, model, 3, 500, CountMethod::NbWalk, &rng).unwrap();
        let mean_ok = (r.emp_mean - target).abs() <= 4.0 * r.se_mean;
        let var_ok = (r.emp_var - r.emp_mean).abs() <= 4.0 * r.se_var;
        pass &= mean_ok && var_ok;
        parts.push(format!(
            "{model}: mean {:.3} (target {target:.3}, se {:.3}), var {:.3} (se {:.3})",
            r.emp_mean, r.se_mean, r.emp_var, r.se_var
        ));
    }
    outcome(pass, parts.join("; "))
}

/// Counts `k`-cycles for every `k` at once by dynamic programming over
/// vertex subsets (paths from the smallest vertex, closed at the end).
fn cycle_counts_dp(adj: &[u32], n: usize) -> Vec<u64> {
    let mut out = vec![0u64; n + 1];
    let mut dp = vec![0u64; (1 << n) * n];
    for s in 0..n {
        dp.iter_mut().for_each(|x| *x = 0);
        dp[(1 << s) * n + s] = 1;
        for mask in (1usize << s)..(1 << n) {
            if mask & (1 << s) == 0 || mask & ((1 << s) - 1) != 0 {
                continue;
            }
            let len = mask.count_ones() as usize;
            for v in 0..n {
                let ways = dp[mask * n + v];
                if ways == 0 {
                    continue;
                }
                if len >= 3 && adj[v] >> s & 1 == 1 {
                    out[len] += ways;
                }
                let mut next = adj[v] & !(mask as u32) & !((1u32 << (s + 1)) - 1);
                while next != 0 {
                    let w = next.trailing_zeros() as usize;
                    next &= next - 1;
                    dp[(mask | (1 << w)) * n + w] += ways;
                }
            }
        }
    }
    out.iter().map(|x| x / 2).collect()
}

/// `E X_k` for every k: all graphs on `n` vertices, all labelings.
fn mean_by_graph_enumeration(n: usize, a: f64, b: f64) -> Vec<f64> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let (p, q) = (a / n as f64, b / n as f64);
    let mut means = vec![0.0; n + 1];
    let mut adj = vec![0u32; n];
    for mask in 0u64..(1 << pairs.len()) {
        adj.iter_mut().for_each(|x| *x = 0);
        for (i, &(u, v)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
        }
        let counts = cycle_counts_dp(&adj, n);
        if counts.iter().all(|&c| c == 0) {
            continue;
        }
        let mut prob = 0.0;
        for sigma in 0u32..(1 << n) {
            let mut w = 1.0;
            for (i, &(u, v)) in pairs.iter().enumerate() {
                let r = if (sigma >> u & 1) == (sigma >> v & 1) { p } else { q };
                w *= if mask >> i & 1 == 1 { r } else { 1.0 - r };
            }
            prob += w;
        }
        prob /= f64::from(1u32 << n);
        for k in 3..=n {
            means[k] += prob * counts[k] as f64;
        }
    }
    means
}

/// `E X_k` by summing, over every labeling and every potential cycle of
/// `K_n`, the probability that all its edges are present.
fn mean_by_cycle_enumeration(n: usize, a: f64, b: f64) -> Vec<f64> {
    fn extend(path: &mut Vec<usize>, used: u32, n: usize, out: &mut Vec<Vec<usize>>) {
        let s = path[0];
        if path.len() >= 3 && path[1] < *path.last().unwrap() {
            out.push(path.clone());
        }
        for w in s + 1..n {
            if used >> w & 1 == 0 {
                path.push(w);
                extend(path, used | 1 << w, n, out);
                path.pop();
            }
        }
    }
    let mut cycles = Vec::new();
    for s in 0..n {
        extend(&mut vec![s], 1 << s, n, &mut cycles);
    }
    let (p, q) = (a / n as f64, b / n as f64);
    let mut means = vec![0.0; n + 1];
    for sigma in 0u32..(1 << n) {
        for c in &cycles {
            let prob: f64 = (0..c.len())
                .map(|i| {
                    let (u, v) = (c[i], c[(i + 1) % c.len()]);
                    if (sigma >> u & 1) == (sigma >> v & 1) {
                        p
                    } else {
                        q
                    }
                })
                .product();
            means[c.len()] += prob / f64::from(1u32 << n);
        }
    }
    means
}

fn c3_finite_mean() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let params = [(3.0, 1.0), (2.0, 0.5), (2.9, 2.2), (1.0, 1.0)];
    for n in 3..=8 {
        for &(a, b) in &params {
            let by_cycles = mean_by_cycle_enumeration(n, a, b);
            let by_graphs = (n <= 6).then(|| mean_by_graph_enumeration(n, a, b));
            for k in 3..=n {
                let formula = planted_cycle_mean(n, a, b, k);
                let mut rel = (by_cycles[k] - formula).abs() / formula;
                if let Some(g) = &by_graphs {
                    rel = rel.max((g[k] - formula).abs() / formula);
                }
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    outcome(
        worst < 1e-10,
        format!("{checked} (n, a, b, k) cases, all graphs for n <= 6, all potential cycles for n <= 8; worst relative error {worst:.2e}"),
    )
}

fn c4_estimator() -> Outcome {
    let rng = RngStream::new(4001, 0);
    let big = ModelParams::new(100_000, 5.0, 1.0).unwrap();
    let per_graph = estimate_study(&big, Some(5), 500, &rng).unwrap();
    let pooled = pooled_estimate(&per_graph).unwrap();
    let f = pooled.f_hat.unwrap_or(f64::NAN);
    let pooled_ok = (f - 2.0).abs() <= 0.2;

    // Median |a_hat - a| over 200 graphs at each size; undefined estimates
    // count as infinitely wrong.
    let error = |e: &sbmlab_core::Estimate| e.a_hat.map_or(f64::INFINITY, |a| (a - 5.0).abs());
    let mut medians = Vec::new();
    for n in [1_000usize, 10_000] {
        let p = ModelParams::new(n, 5.0, 1.0).unwrap();
        let est = estimate_study(&p, Some(5), 200, &rng.child(1, n as u32)).unwrap();
        medians.push(median_with_se(&est.iter().map(error).collect::<Vec<_>>()));
    }
    medians.push(median_with_se(&per_graph[..200].iter().map(error).collect::<Vec<_>>()));
    let mut inversions = 0;
    let mut trend_ok = true;
    for w in medians.windows(2) {
        if w[1].0 > w[0].0 {
            inversions += 1;
            let se = (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
            trend_ok &= w[1].0 - w[0].0 <= se;
        }
    }
    trend_ok &= inversions <= 1;
    outcome(
        pooled_ok && trend_ok,
        format!(
            "pooled f_hat {f:.4} (a_hat {:.3}, b_hat {:.3}); median |a_hat - 5| at n=1e3,1e4,1e5: {}",
            pooled.a_hat.unwrap_or(f64::NAN),
            pooled.b_hat.unwrap_or(f64::NAN),
            medians
                .iter()
                .map(|(m, se)| format!("{m:.3}±{se:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn c5_distinguish() -> Outcome {
    let p = ModelParams::new(2000, 5.0, 1.0).unwrap();
    let s = gap_study(&p, 4, 500, 3.0, &RngStream::new(5001, 0)).unwrap();
    let gap_ok = (s.gap - 2.0).abs() <= 4.0 * s.se_gap;
    let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let refused = matches!(distinguish(&g, 3.0, 1.0, 4), Err(Error::Indistinguishable { .. }));
    outcome(
        gap_ok && refused,
        format!(
            "gap {:.3} (se {:.3}, target 2); (3,1) rejected as contiguous: {refused}; z>3 power {:.3}, size {:.3}",
            s.gap, s.se_gap, s.power, s.size
        ),
    )
}

fn c6_kesten_stigum() -> Outcome {
    let below = reconstruction_curve(3.0, 1.0, 8, 2000, &RngStream::new(6001, 0)).unwrap();
    let above = reconstruction_curve(5.0, 1.0, 8, 2000, &RngStream::new(6001, 0)).unwrap();
    let (b2, b8) = (below.at(2).unwrap().mean_abs_bias, below.at(8).unwrap().mean_abs_bias);
    let a8 = above.at(8).unwrap();
    let decay_ok = b2 >= 2.0 * b8;
    let plateau_ok = a8.mean_abs_bias >= KS_PLATEAU_FLOOR;

    let mut rng = StdRng::seed_from_u64(6002);
    let mut disagreements = 0;
    for _ in 0..1000 {
        let a: f64 = rng.random_range(0.01..30.0);
        let b = a * rng.random_range(0.001..1.0);
        let verdict = ks_check(&ThresholdQuery::from_model(a, b).unwrap());
        let expected = if (a - b).powi(2) > 2.0 * (a + b) {
            Reconstructability::Reconstructable
        } else {
            Reconstructability::NonReconstructable
        };
        disagreements += usize::from(verdict != expected);
    }
    outcome(
        decay_ok && plateau_ok && disagreements == 0,
        format!(
            "(3,1): bias R=2 {b2:.4}, R=8 {b8:.4} (ratio {:.2}); (5,1): bias R=8 {:.4} ± {:.4} (floor {KS_PLATEAU_FLOOR}); ks_check disagreements {disagreements}/1000",
            b2 / b8,
            a8.mean_abs_bias,
            a8.stderr
        ),
    )
}

fn c7_moments() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7001);
    let mut worst_w: f64 = 0.0;
    for _ in 0..100 {
        let a: f64 = rng.random_range(0.1..20.0);
        let b = a * rng.random_range(0.01..1.0);
        let n = rng.random_range(21..1_000_000usize);
        let s = EdgeWeightSpec::new(a, b, n).unwrap();
        worst_w = worst_w.max((s.expected_weight(true) - 1.0).abs());
        worst_w = worst_w.max((s.expected_weight(false) - 1.0).abs());
    }
    let w_ok = worst_w <= 1e-12;

    let r = conditioned_moment_check(3.0, 1.0, 12, 3, 5000, &RngStream::new(7002, 0)).unwrap();
    let y_ok = (r.y.mean - 1.0).abs() <= 3.0 * r.y.se_mean;

    let triangle = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let tri = cycle_weight_sum(&triangle, 3.0, 1.0).unwrap();
    let tri_ok = tri == 9.0;

    let mgf = mgf_binomial(1000, 0.5).unwrap();
    let mgf_ok = (mgf / 2f64.sqrt() - 1.0).abs() <= 0.02;

    // exp(-t/2 - t^2/4 - ln(1-t)/2) with ln(1-t) from its power series.
    let t: f64 = 0.5;
    let log_series: f64 = -(1..400).map(|j| t.powi(j) / j as f64).sum::<f64>();
    let rederived = (-t / 2.0 - t * t / 4.0 - 0.5 * log_series).exp();
    let limit = second_moment_limit(t).unwrap();
    let limit_ok = (limit - rederived).abs() <= 1e-12 && (limit - 1.03466).abs() < 1e-5;

    let partial = lambda_delta_sq_partial(3.0, 1.0, 200);
    let closed = lambda_delta_sq_closed_form(t).unwrap();
    let series_ok = (partial - closed).abs() <= 1e-8;

    outcome(
        w_ok && y_ok && tri_ok && mgf_ok && limit_ok && series_ok,
        format!(
            "max |E W - 1| {worst_w:.1e}; E Y at n=12 {:.4} ± {:.4}; triangle sum {tri}; mgf(1000, 0.5) {mgf:.5}; limit(0.5) {limit:.6}; series {partial:.10} vs {closed:.10}",
            r.y.mean, r.y.se_mean
        ),
    )
}

fn c8_conditioned() -> Outcome {
    let r = conditioned_moment_check(3.0, 1.0, 14, 3, 20_000, &RngStream::new(8001, 0)).unwrap();
    let (lo, hi) = sbmlab_core::moments::MomentReport::RATIO_BAND;
    outcome(
        (lo..=hi).contains(&r.ratio),
        format!(
            "E[Y X_3] {:.4} vs lambda_3^(14)(1+delta_3) = {:.4}: ratio {:.4} ± {:.4} (band [{lo}, {hi}], delta_3 {}); E Y^2 {:.4} vs limit {:.4}",
            r.yx.mean, r.predicted_yx, r.ratio, r.ratio_se, r.delta_k, r.y_squared.mean, r.y_squared_limit
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str], threads: usize, out: &str) -> Vec<u8> {
    let path = dir.join(out);
    let status = Command::new(env!("CARGO_BIN_EXE_sbmlab"))
        .args(args)
        .args(["--threads", &threads.to_string(), "-o"])
        .arg(&path)
        .current_dir(dir)
        .status()
        .expect("run sbmlab");
    assert!(status.success(), "sbmlab {args:?} failed");
    std::fs::read(path).unwrap()
}

fn c9_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_cli(d, &["generate", "--n", "3000", "--a", "5", "--b", "1", "--seed", "9"], 1, "g.txt");
    let experiments: Vec<Vec<&str>> = vec![
        vec!["generate", "--n", "3000", "--a", "5", "--b", "1", "--seed", "9"],
        vec!["cycles", "--input", "g.txt", "--k", "5", "--method", "nb"],
        vec!["estimate", "--input", "g.txt", "--k", "3"],
        vec!["distinguish", "--input", "g.txt", "--a", "5", "--b", "1", "--k", "4"],
        vec!["poisson-check", "--n", "2000", "--a", "5", "--b", "1", "--trials", "200", "--seed", "3"],
        vec!["tree-recon", "--a", "5", "--b", "1", "--r-max", "6", "--trials", "500", "--seed", "3"],
        vec!["coupling", "--n", "5000", "--a", "5", "--b", "1", "--r", "3", "--trials", "200", "--seed", "3"],
        vec!["moments", "--n", "10", "--a", "3", "--b", "1", "--trials", "400", "--seed", "3"],
    ];
    let mut differing = Vec::new();
    for (i, args) in experiments.iter().enumerate() {
        let one = run_cli(d, args, 1, &format!("e{i}_t1.out"));
        let four = run_cli(d, args, 4, &format!("e{i}_t4.out"));
        let again = run_cli(d, args, 4, &format!("e{i}_t4b.out"));
        if one != four || four != again || one.is_empty() {
            differing.push(args[0]);
        }
    }
    outcome(
        differing.is_empty(),
        format!(
            "{} subcommands run with 1, 4 and 4 threads; differing outputs: {:?}",
            experiments.len(),
            differing
        ),
    )
}
