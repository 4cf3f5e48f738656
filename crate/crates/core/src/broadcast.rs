//! Two-type broadcast process on Poisson Galton–Watson trees.
//!
//! The root label is uniform. A vertex labeled `s` has `Pois(a/2)` children
//! labeled `s` and `Pois(b/2)` children labeled `-s`, so the offspring mean is
//! `d = (a+b)/2` and each child disagrees with its parent with probability
//! `eps = b/(a+b)`. The root is reconstructable from deep levels iff
//! `d (1 - 2 eps)^2 > 1`, which in model terms is `(a-b)^2 > 2(a+b)`.

use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Label;
use crate::rng::RngStream;
use crate::stats::{run_trials, Summary};

/// Offspring intensities per particle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OffspringLaw {
    /// `Pois(a/2)` same-label and `Pois(b/2)` opposite-label children; the
    /// local law of the planted model.
    #[default]
    Halved,
    /// `Pois(a)` and `Pois(b)`. Mean degree `a + b`, so the threshold shifts.
    Full,
}

impl OffspringLaw {
    fn means(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            OffspringLaw::Halved => (a / 2.0, b / 2.0),
            OffspringLaw::Full => (a, b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    pub depth: usize,
    pub label: Label,
    first_child: usize,
    /// Children carrying the parent's label.
    pub same: u32,
    /// Children carrying the opposite label.
    pub opposite: u32,
}

/// Broadcast tree truncated at `max_depth`, stored level by level so every
/// vertex's children occupy a contiguous index range.
#[derive(Clone, Debug)]
pub struct BroadcastTree {
    nodes: Vec<TreeNode>,
    level_starts: Vec<usize>,
    max_depth: usize,
}

pub const DEFAULT_NODE_BUDGET: usize = 20_000_000;

pub fn sample_broadcast(a: f64, b: f64, depth: usize, rng: &mut RngStream) -> Result<BroadcastTree> {
    sample_broadcast_with(a, b, depth, OffspringLaw::Halved, DEFAULT_NODE_BUDGET, rng)
}

pub fn sample_broadcast_with(
    a: f64,
    b: f64,
    depth: usize,
    law: OffspringLaw,
    node_budget: usize,
    rng: &mut RngStream,
) -> Result<BroadcastTree> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("need a, b > 0, got a = {a}, b = {b}")));
    }
    let (mean_same, mean_opp) = law.means(a, b);
    let same_law = Poisson::new(mean_same).map_err(|e| Error::invalid(e.to_string()))?;
    let opp_law = Poisson::new(mean_opp).map_err(|e| Error::invalid(e.to_string()))?;

    let root_label = Label::from_sign(rng.random::<bool>());
    let mut nodes = vec![TreeNode {
        parent: None,
        depth: 0,
        label: root_label,
        first_child: 1,
        same: 0,
        opposite: 0,
    }];
    let mut level_starts = vec![0, 1];
    for r in 0..depth {
        let (start, end) = (level_starts[r], level_starts[r + 1]);
        for v in start..end {
            let same = same_law.sample(rng) as u32;
            let opposite = opp_law.sample(rng) as u32;
            let label = nodes[v].label;
            nodes[v].first_child = nodes.len();
            nodes[v].same = same;
            nodes[v].opposite = opposite;
            let child = |l| TreeNode {
                parent: Some(v),
                depth: r + 1,
                label: l,
                first_child: 0,
                same: 0,
                opposite: 0,
            };
            nodes.extend(std::iter::repeat_n(child(label), same as usize));
            nodes.extend(std::iter::repeat_n(child(-label), opposite as usize));
            if nodes.len() > node_budget {
                return Err(Error::BudgetExceeded {
                    what: "broadcast tree",
                    budget: node_budget as u64,
                });
            }
        }
        level_starts.push(nodes.len());
    }
    let end = nodes.len();
    for node in &mut nodes[level_starts[depth]..] {
        node.first_child = end;
    }
    let tree = BroadcastTree {
        nodes,
        level_starts,
        max_depth: depth,
    };
    debug_assert!(tree.check_invariants().is_ok());
    Ok(tree)
}

impl BroadcastTree {
    pub const ROOT: usize = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn node(&self, v: usize) -> &TreeNode {
        &self.nodes[v]
    }

    pub fn label(&self, v: usize) -> Label {
        self.nodes[v].label
    }

    pub fn children(&self, v: usize) -> Range<usize> {
        let n = &self.nodes[v];
        n.first_child..n.first_child + (n.same + n.opposite) as usize
    }

    /// Vertices at depth `r` (the boundary `∂T_r`).
    pub fn level(&self, r: usize) -> Range<usize> {
        if r > self.max_depth {
            return 0..0;
        }
        self.level_starts[r]..self.level_starts[r + 1]
    }

    /// True labels at depth `r`.
    pub fn observe(&self, r: usize) -> Observation {
        Observation {
            depth: r,
            labels: self.level(r).map(|v| (v, self.nodes[v].label)).collect(),
        }
    }

    /// Builds a tree from explicit parents and labels. Vertices must be listed
    /// in breadth-first order (root first, parents before children) and each
    /// parent's children contiguous.
    pub fn from_parts(parents: &[Option<usize>], labels: &[Label], max_depth: usize) -> Result<Self> {
        if parents.is_empty() || parents.len() != labels.len() || parents[0].is_some() {
            return Err(Error::invalid("need a root and one label per vertex"));
        }
        let mut nodes: Vec<TreeNode> = Vec::with_capacity(parents.len());
        for (v, (&p, &label)) in parents.iter().zip(labels).enumerate() {
            let depth = match p {
                None if v == 0 => 0,
                Some(p) if p < v => nodes[p].depth + 1,
                _ => return Err(Error::invalid(format!("vertex {v} has invalid parent"))),
            };
            if depth > max_depth || nodes.last().is_some_and(|l: &TreeNode| l.depth > depth) {
                return Err(Error::invalid(format!("vertex {v} breaks level order")));
            }
            nodes.push(TreeNode {
                parent: p,
                depth,
                label,
                first_child: parents.len(),
                same: 0,
                opposite: 0,
            });
        }
        for v in 1..nodes.len() {
            let p = parents[v].unwrap();
            if nodes[p].same + nodes[p].opposite == 0 {
                nodes[p].first_child = v;
            } else if nodes[p].first_child + (nodes[p].same + nodes[p].opposite) as usize != v {
                return Err(Error::invalid(format!("children of {p} are not contiguous")));
            }
            if nodes[v].label == nodes[p].label {
                nodes[p].same += 1;
            } else {
                nodes[p].opposite += 1;
            }
        }
        let mut level_starts = vec![0];
        for r in 0..=max_depth {
            let start = level_starts[r];
            let end = start + nodes[start..].iter().take_while(|n| n.depth == r).count();
            level_starts.push(end);
        }
        // Children within a parent's range may interleave labels here, which
        // is fine: only the tallies are used.
        Ok(Self {
            nodes,
            level_starts,
            max_depth,
        })
    }

    /// Checks the structural broadcast invariants: parents and depths agree,
    /// levels are contiguous, and each vertex's same/opposite tallies match
    /// its children's labels.
    pub fn check_invariants(&self) -> Result<()> {
        if self.nodes.first().map(|n| (n.depth, n.parent)) != Some((0, None)) {
            return Err(Error::invalid("root must have depth 0 and no parent"));
        }
        for (v, node) in self.nodes.iter().enumerate() {
            if node.depth > self.max_depth {
                return Err(Error::invalid(format!("vertex {v} deeper than max depth")));
            }
            let (mut same, mut opp) = (0, 0);
            for c in self.children(v) {
                let child = &self.nodes[c];
                if child.parent != Some(v) || child.depth != node.depth + 1 {
                    return Err(Error::invalid(format!("child {c} of {v} misrecorded")));
                }
                if child.label == node.label {
                    same += 1;
                } else {
                    opp += 1;
                }
            }
            if (same, opp) != (node.same, node.opposite) {
                return Err(Error::invalid(format!("offspring tally of {v} disagrees")));
            }
            if !self.level(node.depth).contains(&v) {
                return Err(Error::invalid(format!("vertex {v} outside its level")));
            }
        }
        Ok(())
    }
}

/// Labels revealed at one depth of the tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub depth: usize,
    pub labels: Vec<(usize, Label)>,
}

impl Observation {
    pub fn flipped(&self) -> Self {
        Self {
            depth: self.depth,
            labels: self.labels.iter().map(|&(v, l)| (v, -l)).collect(),
        }
    }
}

/// Log-likelihood-ratio message a child with ratio `h` sends through a
/// symmetric channel flipping with probability `eps`:
/// `ln(((1-eps) e^h + eps) / (eps e^h + (1-eps)))`.
fn channel_message(h: f64, eps: f64) -> f64 {
    if h < 0.0 {
        return -channel_message(-h, eps);
    }
    let e = (-h).exp();
    ((1.0 - eps) + eps * e).ln() - (eps + (1.0 - eps) * e).ln()
}

/// Exact `P(root = + | labels at depth R)` under a uniform root prior.
///
/// Each vertex carries its likelihood pair `(L(+), L(-))`, kept as the
/// log-ratio `ln L(+) - ln L(-)` so deep trees do not underflow. Observed
/// vertices are point masses; a vertex combines its children by
/// `L(s) = prod_c [(1-eps) L_c(s) + eps L_c(-s)]`.
pub fn root_posterior(tree: &BroadcastTree, observed: &Observation, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("need 0 < eps < 1, got {epsilon}")));
    }
    let r = observed.depth;
    if r > tree.max_depth() {
        return Err(Error::ObservationMismatch(format!(
            "depth {r} exceeds tree depth {}",
            tree.max_depth()
        )));
    }
    let level = tree.level(r);
    let mut llr = vec![0f64; level.end];
    let mut seen = vec![false; level.len()];
    for &(v, label) in &observed.labels {
        if !level.contains(&v) {
            return Err(Error::ObservationMismatch(format!("vertex {v} is not at depth {r}")));
        }
        let slot = &mut seen[v - level.start];
        if *slot {
            return Err(Error::ObservationMismatch(format!("vertex {v} observed twice")));
        }
        *slot = true;
        llr[v] = match label {
            Label::Plus => f64::INFINITY,
            Label::Minus => f64::NEG_INFINITY,
        };
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::ObservationMismatch(format!(
            "vertex {} at depth {r} not observed",
            level.start + missing
        )));
    }
    for v in (0..level.start).rev() {
        llr[v] = tree
            .children(v)
            .map(|c| channel_message(llr[c], epsilon))
            .sum();
    }
    let h = llr[BroadcastTree::ROOT];
    Ok(1.0 / (1.0 + (-h).exp()))
}

/// `d`, `eps` and the derived Kesten–Stigum quantity `d (1 - 2 eps)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdQuery {
    pub d: f64,
    pub epsilon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reconstructability {
    Reconstructable,
    NonReconstructable,
}

impl ThresholdQuery {
    pub fn new(d: f64, epsilon: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::invalid(format!("mean offspring must be positive, got {d}")));
        }
        if !(0.0..=0.5).contains(&epsilon) {
            return Err(Error::invalid(format!("need 0 <= eps <= 1/2, got {epsilon}")));
        }
        Ok(Self { d, epsilon })
    }

    /// `d = (a+b)/2`, `eps = b/(a+b)`.
    pub fn from_model(a: f64, b: f64) -> Result<Self> {
        if !(a >= b && b > 0.0) {
            return Err(Error::invalid(format!("need 0 < b <= a, got a = {a}, b = {b}")));
        }
        Self::new((a + b) / 2.0, b / (a + b))
    }

    pub fn theta(&self) -> f64 {
        1.0 - 2.0 * self.epsilon
    }

    pub fn ks_value(&self) -> f64 {
        self.d * self.theta().powi(2)
    }
}

/// Non-reconstructable iff `d theta^2 <= 1`.
pub fn ks_check(q: &ThresholdQuery) -> Reconstructability {
    if q.ks_value() <= 1.0 {
        Reconstructability::NonReconstructable
    } else {
        Reconstructability::Reconstructable
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub r: usize,
    pub trials: usize,
    /// Monte Carlo mean of `|P(root = + | depth-r labels) - 1/2|`.
    pub mean_abs_bias: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionCurve {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub theta: f64,
    pub ks_value: f64,
    pub points: Vec<CurvePoint>,
}

impl ReconstructionCurve {
    pub const CSV_HEADER: &'static str = "a,b,d,theta,ks_value,R,trials,mean_abs_bias,stderr";

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| {
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    self.a, self.b, self.d, self.theta, self.ks_value, p.r, p.trials,
                    p.mean_abs_bias, p.stderr
                )
            })
            .collect()
    }

    pub fn at(&self, r: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.r == r)
    }
}

/// Estimates `E |P(root = + | ∂T_R) - 1/2|` for every `R <= r_max`. Each
/// trial samples one tree of depth `r_max` and reads off every truncation.
pub fn reconstruction_curve(
    a: f64,
    b: f64,
    r_max: usize,
    trials: usize,
    rng: &RngStream,
) -> Result<ReconstructionCurve> {
    if trials < 500 {
        return Err(Error::invalid(format!("need at least 500 trials, got {trials}")));
    }
    let q = ThresholdQuery::from_model(a, b)?;
    let per_trial = run_trials(trials, |i| -> Result<Vec<f64>> {
        let tree = sample_broadcast(a, b, r_max, &mut rng.child(0, i as u32))?;
        (0..=r_max)
            .map(|r| Ok((root_posterior(&tree, &tree.observe(r), q.epsilon)? - 0.5).abs()))
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let points = (0..=r_max)
        .map(|r| {
            let xs: Vec<f64> = per_trial.iter().map(|t| t[r]).collect();
            let s = Summary::of(&xs);
            CurvePoint {
                r,
                trials,
                mean_abs_bias: s.mean,
                stderr: s.se_mean,
            }
        })
        .collect();
    Ok(ReconstructionCurve {
        a,
        b,
        d: q.d,
        theta: q.theta(),
        ks_value: q.ks_value(),
        points,
    })
}
