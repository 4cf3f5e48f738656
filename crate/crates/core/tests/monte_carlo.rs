//! Statistical checks of samplers and experiment drivers at desk scale.
//!
//! Every check runs on fixed seeds, so each outcome is deterministic.

use sbmlab_core::broadcast::{reconstruction_curve, root_posterior, sample_broadcast};
use sbmlab_core::coupling::{binom_pois_tv, tree_likeness};
use sbmlab_core::cycles::{
    count_cycles_exact, planted_cycle_mean, poisson_law_check, CountMethod, Model,
};
use sbmlab_core::estimation::{choose_rho, distinguish, estimate_params, f_hat_from, gap_study};
use sbmlab_core::moments::{conditioned_moment_check, exact_y};
use sbmlab_core::stats::{poisson_pmf, run_trials, Summary};
use sbmlab_core::{sample_er, sample_sbm, Error, Graph, Label, ModelParams, RngStream};

fn edge_counts(trials: usize, f: impl Fn(&mut RngStream) -> usize + Sync, seed: u64) -> Vec<u64> {
    let base = RngStream::new(seed, 0);
    run_trials(trials, |i| f(&mut base.child(0, i as u32)) as u64)
}

#[test]
fn saturated_pair_always_joined() {
    let p = ModelParams::new(2, 2.0, 2.0).unwrap();
    let mut seen = [false; 2];
    for s in 0..200 {
        let lg = sample_sbm(&p, &mut RngStream::new(s, 0)).unwrap();
        assert_eq!(lg.graph().edge_count(), 1);
        seen[usize::from(lg.labels()[0] == lg.labels()[1])] = true;
        let er = sample_er(2, 2.0, &mut RngStream::new(s, 1)).unwrap();
        assert_eq!(er.graph().edge_count(), 1);
    }
    assert_eq!(seen, [true, true]);
}

#[test]
fn tiny_intensity_gives_empty_graphs() {
    let p = ModelParams::new(4, 1e-4, 1e-4).unwrap();
    let counts = edge_counts(10_000, |r| sample_sbm(&p, r).unwrap().graph().edge_count(), 3);
    let empty = counts.iter().filter(|&&c| c == 0).count();
    assert!(empty as f64 >= 0.999 * counts.len() as f64);
}

#[test]
fn edge_count_mean() {
    let p = ModelParams::new(2000, 5.0, 1.0).unwrap();
    let counts = edge_counts(500, |r| sample_sbm(&p, r).unwrap().graph().edge_count(), 5);
    let s = Summary::of_counts(&counts);
    // E|E| = sum over pairs of the label-averaged edge probability.
    let pairs = 2000.0 * 1999.0 / 2.0;
    let expected = pairs * (p.p_in() + p.p_out()) / 2.0;
    assert!((s.mean - expected).abs() <= 3.0 * s.se_mean, "{} vs {expected}", s.mean);
}

#[test]
fn null_mean_degree() {
    let counts = edge_counts(500, |r| sample_er(1000, 3.0, r).unwrap().graph().edge_count(), 6);
    let degrees: Vec<f64> = counts.iter().map(|&m| 2.0 * m as f64 / 1000.0).collect();
    let s = Summary::of(&degrees);
    // Exact mean degree is (n-1) c / n.
    assert!((s.mean - 2.997).abs() <= 3.0 * s.se_mean, "{}", s.mean);
}

fn empirical_law(xs: &[u64], support: usize) -> Vec<f64> {
    let mut h = vec![0.0; support];
    for &x in xs {
        h[x as usize] += 1.0 / xs.len() as f64;
    }
    h
}

#[test]
fn equal_intensities_match_the_null() {
    let p = ModelParams::new(5, 3.0, 3.0).unwrap();
    let sbm = edge_counts(100_000, |r| sample_sbm(&p, r).unwrap().graph().edge_count(), 7);
    let er = edge_counts(100_000, |r| sample_er(5, 3.0, r).unwrap().graph().edge_count(), 8);
    let (hs, he) = (empirical_law(&sbm, 11), empirical_law(&er, 11));
    let tv: f64 = hs.iter().zip(&he).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
    assert!(tv <= 0.02, "tv = {tv}");

    // Both are Binomial(10, 3/5); chi-square against it over 11 cells.
    let stat = |h: &[f64]| -> f64 {
        (0..=10u64)
            .map(|k| {
                let e = sbmlab_core::stats::binomial_pmf(k, 10, 0.6) * 100_000.0;
                (h[k as usize] * 100_000.0 - e).powi(2) / e
            })
            .sum()
    };
    // 99.9% quantile of chi-square with 10 degrees of freedom.
    assert!(stat(&hs) < 29.59 && stat(&he) < 29.59);
}

#[test]
fn six_vertex_mean_by_enumeration() {
    // All 2^15 graphs on 6 vertices with edge probability 1/3.
    let pairs: Vec<(usize, usize)> = (0..6).flat_map(|u| (u + 1..6).map(move |v| (u, v))).collect();
    let p: f64 = 2.0 / 6.0;
    let mut mean = 0.0;
    for mask in 0u32..(1 << 15) {
        let edges: Vec<_> = (0..15).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
        let m = edges.len() as i32;
        let g = Graph::from_edges(6, edges).unwrap();
        mean += p.powi(m) * (1.0 - p).powi(15 - m) * count_cycles_exact(&g, 3).unwrap().count(3) as f64;
    }
    assert!((mean - 20.0 / 27.0).abs() < 1e-12);
    assert!((planted_cycle_mean(6, 2.0, 2.0, 3) - mean).abs() < 1e-12);

    let params = ModelParams::new(6, 2.0, 2.0).unwrap();
    let r = poisson_law_check(&params, Model::Sbm, 3, 4000, CountMethod::Exact, &RngStream::new(9, 0)).unwrap();
    assert!((r.emp_mean - mean).abs() <= 4.0 * r.se_mean, "{}", r.emp_mean);
}

#[test]
fn estimator_examples() {
    let k4 = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
    assert_eq!(estimate_params(&k4, Some(3)).unwrap().d_hat, 3.0);
    let (raw, f) = f_hat_from(6, 2.0, 3);
    assert_eq!(raw, 28.0);
    assert!((f.unwrap() - 3.036_588_971_875_662).abs() < 1e-12);
    let (rho, (lo, hi)) = choose_rho(5.0, 1.0).unwrap();
    assert!((lo - 3f64.sqrt()).abs() < 1e-15 && hi == 2.0);
    assert!((rho - 1.861_209_718_204_199).abs() < 1e-12);
    assert!(matches!(distinguish(&k4, 3.0, 1.0, 4), Err(Error::Indistinguishable { .. })));
}

#[test]
fn zscore_rule_power_and_size() {
    let p = ModelParams::new(2000, 5.0, 1.0).unwrap();
    let study = gap_study(&p, 4, 500, 3.0, &RngStream::new(12, 0)).unwrap();
    assert!((study.gap - 2.0).abs() <= 4.0 * study.se_gap, "gap {}", study.gap);

    // Power pinned to the Poisson tail P(X_4 > cut) under the planted mean.
    let mean_er = sbmlab_core::cycles::null_cycle_mean(2000, 3.0, 4);
    let cut = mean_er + 3.0 * mean_er.sqrt();
    let tail = |lambda: f64| 1.0 - (0..=cut.floor() as u64).map(|x| poisson_pmf(x, lambda)).sum::<f64>();
    let power = tail(planted_cycle_mean(2000, 5.0, 1.0, 4));
    let se = (power * (1.0 - power) / 500.0).sqrt();
    assert!((study.power - power).abs() <= 4.0 * se, "power {} vs {power}", study.power);
    assert!(study.size <= 0.01, "size {}", study.size);
}

#[test]
fn broadcast_offspring_law() {
    let base = RngStream::new(13, 0);
    let stats = run_trials(10_000, |i| {
        let t = sample_broadcast(5.0, 1.0, 6, &mut base.child(0, i as u32)).unwrap();
        let root = t.node(0);
        (t.level(1).len() as f64, root.opposite as f64, (root.same + root.opposite) as f64)
    });
    let level1: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let s = Summary::of(&level1);
    assert!((s.mean - 3.0).abs() <= 3.0 * s.se_mean);
    let flips: f64 = stats.iter().map(|s| s.1).sum();
    let children: f64 = stats.iter().map(|s| s.2).sum();
    let eps = flips / children;
    let se = (eps * (1.0 - eps) / children).sqrt();
    assert!((eps - 1.0 / 6.0).abs() <= 3.0 * se, "eps {eps}");

    let roots: Vec<Label> = (0..2000)
        .map(|i| sample_broadcast(5.0, 1.0, 0, &mut base.child(1, i)).unwrap().label(0))
        .collect();
    let plus = roots.iter().filter(|&&l| l == Label::Plus).count();
    assert!((plus as f64 - 1000.0).abs() <= 3.0 * (2000.0f64 * 0.25).sqrt());
}

#[test]
fn curves_decay_without_signal() {
    let flat = reconstruction_curve(2.0, 2.0, 4, 500, &RngStream::new(14, 0)).unwrap();
    for p in &flat.points[1..] {
        assert_eq!(p.mean_abs_bias, 0.0);
    }
    let tree = sample_broadcast(3.0, 3.0, 3, &mut RngStream::new(14, 1)).unwrap();
    assert_eq!(root_posterior(&tree, &tree.observe(3), 0.5).unwrap(), 0.5);

    for (a, b) in [(3.0, 1.0), (5.0, 1.0)] {
        let c = reconstruction_curve(a, b, 8, 1000, &RngStream::new(15, 0)).unwrap();
        for w in c.points.windows(2) {
            let slack = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            assert!(w[1].mean_abs_bias <= w[0].mean_abs_bias + slack, "({a},{b}) R={}", w[1].r);
        }
    }
}

#[test]
fn large_graph_balls_are_trees() {
    let p = ModelParams::new(100_000, 5.0, 1.0).unwrap();
    let rep = tree_likeness(&p, 3, 500, &RngStream::new(16, 0)).unwrap();
    assert!(rep.tree_fraction >= 1.0 - 50.0 * 3f64.powi(6) / 1e5, "{}", rep.tree_fraction);
    let fit = rep.same_fit.unwrap();
    assert!(fit.p_value > 0.01, "offspring fit {fit:?}");
    assert!(rep.offspring_tv < 0.1, "{}", rep.offspring_tv);
}

#[test]
fn tree_fraction_falls_with_radius() {
    let p = ModelParams::new(2000, 5.0, 1.0).unwrap();
    let fractions: Vec<f64> = (0..=4)
        .map(|r| tree_likeness(&p, r, 300, &RngStream::new(17, 0)).unwrap().tree_fraction)
        .collect();
    assert_eq!(fractions[0], 1.0);
    assert!(fractions.windows(2).all(|w| w[1] <= w[0]), "{fractions:?}");
}

#[test]
fn violation_rates_decay() {
    let rates = |n: usize| {
        let p = ModelParams::new(n, 5.0, 1.0).unwrap();
        let r = tree_likeness(&p, 3, 2000, &RngStream::new(18, 0)).unwrap();
        (r.a_violation_rate, r.b_violation_rate)
    };
    let (a4, b4) = rates(10_000);
    let (a5, b5) = rates(100_000);
    assert!(a4 > 0.0 && b4 > 0.0, "no violations at n = 10^4");
    let shrink = 10f64.powf(-0.75);
    assert!(a5 <= 10.0 * a4 * shrink, "A: {a4} -> {a5}");
    assert!(b5 <= 10.0 * b4 * shrink, "B: {b4} -> {b5}");
}

#[test]
fn binomial_poisson_envelope() {
    assert!(binom_pois_tv(100, 100, 1.0).unwrap() <= 0.01);
    for n in [100u64, 1_000, 10_000] {
        let tv = binom_pois_tv(n / 2, n, 1.0).unwrap();
        let envelope = 2.0 * (n - n / 2) as f64 / n as f64;
        assert!(tv <= envelope, "n = {n}: {tv}");
    }
}

#[test]
fn likelihood_ratio_has_unit_mean() {
    let r = conditioned_moment_check(3.0, 1.0, 12, 3, 5000, &RngStream::new(19, 0)).unwrap();
    assert!((r.y.mean - 1.0).abs() <= 3.0 * r.y.se_mean, "{:?}", r.y);

    // Without signal Y is 1 on every graph, so E[Y X_k] is E[X_k].
    let flat = conditioned_moment_check(2.0, 2.0, 10, 3, 500, &RngStream::new(19, 1)).unwrap();
    assert!(flat.y_values.iter().all(|&y| (y - 1.0).abs() < 1e-13));
    assert!((flat.yx.mean - flat.x.mean).abs() < 1e-12);

    let g = sample_er(14, 2.0, &mut RngStream::new(19, 2)).unwrap().into_parts().0;
    assert!(exact_y(&g, 3.0, 1.0).unwrap() > 0.0);
}
