//! Sparse undirected simple graphs with optional ±1 vertex labels.
//!
//! [`Graph`] is the unlabeled topology in compressed sparse row form. Anything
//! that must not see the hidden partition (estimators, cycle counts) takes a
//! `&Graph`. [`LabeledGraph`] pairs a topology with its labels.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Community label, stored as `+1` / `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(i8)]
pub enum Label {
    Plus = 1,
    Minus = -1,
}

impl Label {
    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Label::Plus
        } else {
            Label::Minus
        }
    }

    pub fn as_i8(self) -> i8 {
        self as i8
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Plus => Label::Minus,
            Label::Minus => Label::Plus,
        }
    }
}

impl std::ops::Neg for Label {
    type Output = Label;
    fn neg(self) -> Label {
        self.flip()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Plus => f.write_str("+1"),
            Label::Minus => f.write_str("-1"),
        }
    }
}

/// Immutable simple undirected graph on vertices `0..n`.
///
/// Edges are kept sorted as `(u, v)` with `u < v`; neighbor lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list, rejecting self-loops,
    /// duplicates and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate edge {:?}", w[0])));
        }
        Ok(Self::from_sorted_unique(n, list))
    }

    /// `edges` must be sorted, deduplicated, and satisfy `u < v < n`.
    pub(crate) fn from_sorted_unique(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0usize; 2 * edges.len()];
        // Sorted edge order fills each list in ascending order for the
        // smaller endpoint's partners; larger endpoints are filled from
        // earlier edges, so both directions come out sorted.
        for &(u, v) in &edges {
            targets[cursor[v]] = u;
            cursor[v] += 1;
        }
        for &(u, v) in &edges {
            targets[cursor[u]] = v;
            cursor[u] += 1;
        }
        let g = Self {
            n,
            edges,
            offsets,
            targets,
        };
        debug_assert!(g.check_invariants().is_ok());
        g
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted_unique(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Verifies simplicity, symmetry and consistency of the two edge views.
    pub fn check_invariants(&self) -> Result<()> {
        if self.offsets.len() != self.n + 1 {
            return Err(Error::invalid("offset table has wrong length"));
        }
        for w in self.edges.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid("edge list not strictly sorted"));
            }
        }
        for &(u, v) in &self.edges {
            if u >= v || v >= self.n {
                return Err(Error::invalid(format!("malformed edge ({u}, {v})")));
            }
        }
        let mut from_adj = Vec::with_capacity(self.edges.len());
        for u in 0..self.n {
            let nb = self.neighbors(u);
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("neighbors of {u} not sorted/unique")));
            }
            for &v in nb {
                if v == u {
                    return Err(Error::invalid(format!("self-loop at {u}")));
                }
                if self.neighbors(v).binary_search(&u).is_err() {
                    return Err(Error::invalid(format!("asymmetric adjacency {u}-{v}")));
                }
                if u < v {
                    from_adj.push((u, v));
                }
            }
        }
        if from_adj != self.edges {
            return Err(Error::invalid("adjacency lists disagree with edge set"));
        }
        Ok(())
    }

    /// Applies a vertex permutation: vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::invalid("permutation length differs from n"));
        }
        Self::from_edges(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }

    /// Breadth-first distances from `source`, truncated at `radius`.
    /// Returns visited vertices in BFS order paired with their distance.
    pub fn bfs_within(&self, source: usize, radius: usize) -> Vec<(usize, usize)> {
        let mut dist = std::collections::HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        dist.insert(source, 0usize);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            order.push((u, du));
            if du == radius {
                continue;
            }
            for &w in self.neighbors(u) {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(du + 1);
                    queue.push_back(w);
                }
            }
        }
        order
    }
}

/// Induced neighborhood `B(v, r)`: local vertex `i` is global
/// `vertices[i]` at graph distance `distance[i]` from the center. Local
/// vertex 0 is the center.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: usize,
    pub radius: usize,
    pub vertices: Vec<usize>,
    pub distance: Vec<usize>,
    pub subgraph: Graph,
}

impl Ball {
    /// Distance of a global vertex, if it lies in the ball.
    pub fn distance_of(&self, global: usize) -> Option<usize> {
        self.vertices
            .iter()
            .position(|&x| x == global)
            .map(|i| self.distance[i])
    }

    /// `|E| - |V| + 1`: number of independent cycles (the ball is connected).
    pub fn cyclomatic_number(&self) -> usize {
        (self.subgraph.edge_count() + 1).saturating_sub(self.vertices.len())
    }

    pub fn is_tree(&self) -> bool {
        self.subgraph.edge_count() + 1 == self.vertices.len()
    }
}

/// Induced subgraph on all vertices within distance `r` of `v`.
pub fn ball(g: &Graph, v: usize, r: usize) -> Result<Ball> {
    if v >= g.n() {
        return Err(Error::invalid(format!("vertex {v} out of range for n = {}", g.n())));
    }
    let order = g.bfs_within(v, r);
    let mut local = std::collections::HashMap::with_capacity(order.len());
    for (i, &(u, _)) in order.iter().enumerate() {
        local.insert(u, i);
    }
    let mut edges = Vec::new();
    for (i, &(u, _)) in order.iter().enumerate() {
        for w in g.neighbors(u) {
            if let Some(&j) = local.get(w) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(Ball {
        center: v,
        radius: r,
        vertices: order.iter().map(|&(u, _)| u).collect(),
        distance: order.iter().map(|&(_, d)| d).collect(),
        subgraph: Graph::from_sorted_unique(order.len(), edges),
    })
}

/// Parameters `(n, a, b)` of the planted bisection model: within-class pairs
/// connect with probability `a/n`, cross-class pairs with `b/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
}

impl ModelParams {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        let p = Self { n, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !(self.a.is_finite() && self.b.is_finite()) || self.b <= 0.0 || self.a < self.b {
            return Err(Error::invalid(format!(
                "need 0 < b <= a, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self.p_in() > 1.0 || self.p_out() > 1.0 {
            return Err(Error::invalid(format!(
                "edge probabilities a/n = {}, b/n = {} must not exceed 1",
                self.p_in(),
                self.p_out()
            )));
        }
        Ok(())
    }

    /// Within-class edge probability `a/n`.
    pub fn p_in(&self) -> f64 {
        self.a / self.n as f64
    }

    /// Cross-class edge probability `b/n`.
    pub fn p_out(&self) -> f64 {
        self.b / self.n as f64
    }

    /// Mean degree `(a+b)/2`.
    pub fn d(&self) -> f64 {
        (self.a + self.b) / 2.0
    }

    pub fn f(&self) -> f64 {
        (self.a - self.b) / 2.0
    }

    /// Signal-to-noise `(a-b)^2 / (2(a+b))`; the threshold sits at `t = 1`.
    pub fn t(&self) -> f64 {
        snr(self.a, self.b)
    }

    /// Intensity `c` of the Erdős–Rényi null with the same mean degree.
    pub fn null_intensity(&self) -> f64 {
        self.d()
    }
}

/// `(a-b)^2 / (2(a+b))`.
pub fn snr(a: f64, b: f64) -> f64 {
    (a - b).powi(2) / (2.0 * (a + b))
}

/// A graph together with its hidden community labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    graph: Graph,
    labels: Vec<Label>,
}

impl LabeledGraph {
    pub fn new(graph: Graph, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != graph.n() {
            return Err(Error::invalid(format!(
                "{} labels for {} vertices",
                labels.len(),
                graph.n()
            )));
        }
        Ok(Self { graph, labels })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn into_parts(self) -> (Graph, Vec<Label>) {
        (self.graph, self.labels)
    }

    /// `|V+| - |V-|`.
    pub fn label_imbalance(&self) -> i64 {
        self.labels.iter().map(|l| i64::from(l.as_i8())).sum()
    }

    /// Edge-list text form: optional `#` comment lines, `n m`, `m` lines
    /// `u v` in lexicographic order, then one line of `n` labels.
    pub fn write_edge_list<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments {
            for line in c.lines() {
                writeln!(w, "# {line}")?;
            }
        }
        writeln!(w, "{} {}", self.n(), self.graph.edge_count())?;
        for &(u, v) in self.graph.edges() {
            writeln!(w, "{u} {v}")?;
        }
        let labels: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        writeln!(w, "{}", labels.join(" "))?;
        Ok(())
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf, &[]).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }

    /// Parses the edge-list format. Lines starting with `#` are skipped.
    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| match l {
                Ok(s) => !s.trim_start().starts_with('#') && !s.trim().is_empty(),
                Err(_) => true,
            });
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(s))) => Ok((i, s)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of input, expected {what}"),
                }),
            }
        };
        let parse_pair = |line: usize, s: &str| -> Result<(usize, usize)> {
            let mut it = s.split_whitespace();
            let mut num = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| Error::Parse { line, msg: "expected two integers".into() })?
                    .parse()
                    .map_err(|e| Error::Parse { line, msg: format!("{e}") })
            };
            let x = num()?;
            let y = num()?;
            Ok((x, y))
        };
        let (line, header) = next("header `n m`")?;
        let (n, m) = parse_pair(line, &header)?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, s) = next("edge line")?;
            edges.push(parse_pair(line, &s)?);
        }
        let (line, s) = next("label line")?;
        let labels = s
            .split_whitespace()
            .map(|tok| match tok.parse::<i8>() {
                Ok(1) => Ok(Label::Plus),
                Ok(-1) => Ok(Label::Minus),
                _ => Err(Error::Parse { line, msg: format!("bad label `{tok}`") }),
            })
            .collect::<Result<Vec<_>>>()?;
        let graph = Graph::from_edges(n, edges)?;
        LabeledGraph::new(graph, labels)
    }
}
