//! Samplers for the planted bisection model and its Erdős–Rényi null.
//!
//! Pairs are split into homogeneous blocks (within `+`, within `-`, across)
//! and each block is sampled by geometric skipping, so the expected cost is
//! `O(n + |E|)` rather than `O(n^2)`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Label, LabeledGraph, ModelParams};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SamplerOptions {
    /// Force `|V+| = floor(n/2)` instead of i.i.d. uniform labels.
    pub balanced: bool,
}

pub fn sample_sbm(params: &ModelParams, rng: &mut RngStream) -> Result<LabeledGraph> {
    sample_sbm_with(params, SamplerOptions::default(), rng)
}

pub fn sample_sbm_with(
    params: &ModelParams,
    opts: SamplerOptions,
    rng: &mut RngStream,
) -> Result<LabeledGraph> {
    params.validate()?;
    let labels = draw_labels(params.n, opts.balanced, rng);
    let (plus, minus): (Vec<usize>, Vec<usize>) =
        (0..params.n).partition(|&v| labels[v] == Label::Plus);

    let mut edges = Vec::new();
    within_block(&plus, params.p_in(), rng, &mut edges);
    within_block(&minus, params.p_in(), rng, &mut edges);
    across_block(&plus, &minus, params.p_out(), rng, &mut edges);
    edges.sort_unstable();
    LabeledGraph::new(Graph::from_sorted_unique(params.n, edges), labels)
}

/// `G(n, c/n)` with independent uniform labels that play no role in the edges.
pub fn sample_er(n: usize, c: f64, rng: &mut RngStream) -> Result<LabeledGraph> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(c > 0.0) || c / n as f64 > 1.0 {
        return Err(Error::invalid(format!("need 0 < c <= n, got c = {c}, n = {n}")));
    }
    let labels = draw_labels(n, false, rng);
    let all: Vec<usize> = (0..n).collect();
    let mut edges = Vec::new();
    within_block(&all, c / n as f64, rng, &mut edges);
    edges.sort_unstable();
    LabeledGraph::new(Graph::from_sorted_unique(n, edges), labels)
}

fn draw_labels(n: usize, balanced: bool, rng: &mut RngStream) -> Vec<Label> {
    if balanced {
        let mut labels: Vec<Label> = (0..n).map(|i| Label::from_sign(i < n / 2)).collect();
        labels.shuffle(rng);
        labels
    } else {
        (0..n).map(|_| Label::from_sign(rng.random::<bool>())).collect()
    }
}

/// Calls `emit` with the indices in `0..total` selected independently with
/// probability `p`, in increasing order.
fn geometric_skip(total: u64, p: f64, rng: &mut RngStream, mut emit: impl FnMut(u64)) {
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(emit);
        return;
    }
    let log_q = (-p).ln_1p();
    let mut next: u64 = 0;
    loop {
        // 1 - u lies in (0, 1], so the logarithm is finite.
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if skip >= (total - next) as f64 {
            return;
        }
        next += skip as u64;
        emit(next);
        next += 1;
        if next >= total {
            return;
        }
    }
}

fn within_block(vs: &[usize], p: f64, rng: &mut RngStream, out: &mut Vec<(usize, usize)>) {
    let s = vs.len() as u64;
    if s < 2 {
        return;
    }
    // Row-major walk over pairs (x, y), x < y, of local indices.
    let mut row: u64 = 0;
    let mut row_start: u64 = 0;
    geometric_skip(s * (s - 1) / 2, p, rng, |i| {
        while i >= row_start + (s - 1 - row) {
            row_start += s - 1 - row;
            row += 1;
        }
        let col = row + 1 + (i - row_start);
        let (u, v) = (vs[row as usize], vs[col as usize]);
        out.push((u.min(v), u.max(v)));
    });
}

fn across_block(
    left: &[usize],
    right: &[usize],
    p: f64,
    rng: &mut RngStream,
    out: &mut Vec<(usize, usize)>,
) {
    let width = right.len() as u64;
    geometric_skip(left.len() as u64 * width, p, rng, |i| {
        let (u, v) = (left[(i / width) as usize], right[(i % width) as usize]);
        out.push((u.min(v), u.max(v)));
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_when_probability_one() {
        for seed in 0..20 {
            let p = ModelParams::new(2, 2.0, 2.0).unwrap();
            let g = sample_sbm(&p, &mut RngStream::new(seed, 0)).unwrap();
            assert_eq!(g.graph().edge_count(), 1);
            let g = sample_er(2, 2.0, &mut RngStream::new(seed, 0)).unwrap();
            assert_eq!(g.graph().edge_count(), 1);
        }
        let p = ModelParams::new(7, 7.0, 7.0).unwrap();
        let g = sample_sbm(&p, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(g.graph().edge_count(), 21);
    }

    #[test]
    fn both_labelings_occur_on_two_vertices() {
        let p = ModelParams::new(2, 2.0, 2.0).unwrap();
        let mut same = 0;
        for s in 0..200 {
            let g = sample_sbm(&p, &mut RngStream::new(s, 0)).unwrap();
            same += usize::from(g.labels()[0] == g.labels()[1]);
        }
        assert!(same > 50 && same < 150, "{same}");
    }

    #[test]
    fn nearly_empty_when_probability_tiny() {
        let p = ModelParams::new(4, 1e-4, 1e-4).unwrap();
        let empty = (0..2000)
            .filter(|&s| sample_sbm(&p, &mut RngStream::new(s, 9)).unwrap().graph().edge_count() == 0)
            .count();
        assert!(empty >= 1990, "{empty}");
    }

    #[test]
    fn rejects_invalid_probabilities() {
        assert!(sample_er(3, 4.0, &mut RngStream::new(0, 0)).is_err());
        assert!(sample_er(3, 0.0, &mut RngStream::new(0, 0)).is_err());
        let bad = ModelParams { n: 3, a: 4.0, b: 1.0 };
        assert!(sample_sbm(&bad, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn within_block_covers_every_pair() {
        let vs = vec![3, 5, 8, 9, 11];
        let mut out = Vec::new();
        within_block(&vs, 1.0, &mut RngStream::new(0, 0), &mut out);
        assert_eq!(out.len(), 10);
        out.sort_unstable();
        out.dedup();
        assert_eq!(out.len(), 10);
    }

    #[test]
    fn edges_respect_label_structure() {
        // b tiny, a large: almost every edge is within a class.
        let p = ModelParams::new(200, 20.0, 1e-9).unwrap();
        let g = sample_sbm(&p, &mut RngStream::new(3, 0)).unwrap();
        for &(u, v) in g.graph().edges() {
            assert_eq!(g.labels()[u], g.labels()[v]);
        }
        assert!(g.graph().edge_count() > 1000);
    }

    #[test]
    fn balanced_flag_forces_equal_classes() {
        let p = ModelParams::new(101, 3.0, 1.0).unwrap();
        let opts = SamplerOptions { balanced: true };
        let g = sample_sbm_with(&p, opts, &mut RngStream::new(4, 0)).unwrap();
        let plus = g.labels().iter().filter(|&&l| l == Label::Plus).count();
        assert_eq!(plus, 50);
    }

    #[test]
    fn deterministic_per_stream() {
        let p = ModelParams::new(500, 5.0, 1.0).unwrap();
        let a = sample_sbm(&p, &mut RngStream::new(11, 2)).unwrap();
        let b = sample_sbm(&p, &mut RngStream::new(11, 2)).unwrap();
        let c = sample_sbm(&p, &mut RngStream::new(11, 3)).unwrap();
        assert_eq!(a.to_edge_list_string(), b.to_edge_list_string());
        assert_ne!(a.to_edge_list_string(), c.to_edge_list_string());
    }
}
