//! Weighted undirected graphs with random-walk access.
//!
//! Vertices are 1-based labels at every public boundary (constructors,
//! walks, transcripts, files). A graph may carry an implicit *overlay*: a
//! complete graph of uniform weight on a subset of vertices, self-loops
//! included. Because every overlay edge has the same weight, taking an overlay
//! edge is exactly a uniform jump among the overlay members, so the overlay
//! never has to be materialized.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DENSE_LIMIT};
use crate::rng::RandomSource;

/// An undirected edge between 1-based vertices; `u == v` is a self-loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, weight: f64) -> Self {
        Self { u, v, weight }
    }
}

impl From<(usize, usize, f64)> for Edge {
    fn from((u, v, weight): (usize, usize, f64)) -> Self {
        Self { u, v, weight }
    }
}

/// Uniform-weight complete graph (self-loops included) over `members`, or
/// over every vertex when `members` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub weight: f64,
    pub members: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    overlay: Option<Overlay>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    cumulative: Vec<f64>,
    degrees: Vec<f64>,
    overlay_mass: f64,
    overlay_flag: Vec<bool>,
    overlay_members: Vec<u32>,
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges && self.overlay == other.overlay
    }
}

/// Where each walk of [`WeightedGraph::run_walks`] starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Starts {
    Uniform,
    Explicit(Vec<usize>),
}

/// Builds a graph from 1-based `(u, v, weight)` triples.
pub fn build_graph(n: usize, edges: &[(usize, usize, f64)]) -> Result<WeightedGraph> {
    WeightedGraph::new(n, edges.iter().copied().map(Edge::from).collect())
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        Self::with_overlay(n, edges, None)
    }

    pub fn with_overlay(n: usize, edges: Vec<Edge>, overlay: Option<Overlay>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("vertex count must be positive".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::Graph("vertex count exceeds u32 labels".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut counts = vec![0usize; n];
        for e in &edges {
            for x in [e.u, e.v] {
                if x == 0 || x > n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::Graph(format!("edge ({}, {}) has invalid weight {}", e.u, e.v, e.weight)));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::Graph(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
            counts[e.u - 1] += 1;
            if e.u != e.v {
                counts[e.v - 1] += 1;
            }
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let total = *offsets.last().unwrap();
        let mut targets = vec![0u32; total];
        let mut weights = vec![0.0f64; total];
        let mut fill = offsets[..n].to_vec();
        for e in &edges {
            let (a, b) = (e.u - 1, e.v - 1);
            targets[fill[a]] = b as u32;
            weights[fill[a]] = e.weight;
            fill[a] += 1;
            if a != b {
                targets[fill[b]] = a as u32;
                weights[fill[b]] = e.weight;
                fill[b] += 1;
            }
        }
        let mut cumulative = weights;
        let mut degrees = vec![0.0; n];
        for v in 0..n {
            let mut acc = 0.0;
            for c in &mut cumulative[offsets[v]..offsets[v + 1]] {
                acc += *c;
                *c = acc;
            }
            degrees[v] = acc;
        }

        let mut overlay_flag = Vec::new();
        let mut overlay_members = Vec::new();
        let mut overlay_mass = 0.0;
        if let Some(ov) = &overlay {
            if !(ov.weight.is_finite() && ov.weight >= 0.0) {
                return Err(Error::Graph(format!("invalid overlay weight {}", ov.weight)));
            }
            overlay_flag = vec![false; n];
            match &ov.members {
                None => {
                    overlay_flag.iter_mut().for_each(|f| *f = true);
                    overlay_members = (0..n as u32).collect();
                }
                Some(list) => {
                    for &x in list {
                        if x == 0 || x > n {
                            return Err(Error::VertexOutOfRange { vertex: x, n });
                        }
                        if std::mem::replace(&mut overlay_flag[x - 1], true) {
                            return Err(Error::Graph(format!("duplicate overlay member {x}")));
                        }
                        overlay_members.push((x - 1) as u32);
                    }
                }
            }
            overlay_mass = ov.weight * overlay_members.len() as f64;
            for (d, &f) in degrees.iter_mut().zip(&overlay_flag) {
                if f {
                    *d += overlay_mass;
                }
            }
        }

        if let Some(v) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::Graph(format!("vertex {} has nonpositive degree", v + 1)));
        }

        Ok(Self {
            n,
            edges,
            overlay,
            offsets,
            targets,
            cumulative,
            degrees,
            overlay_mass,
            overlay_flag,
            overlay_members,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn overlay(&self) -> Option<&Overlay> {
        self.overlay.as_ref()
    }

    /// Weighted degree of 1-based vertex `v`, self-loops counted once.
    pub fn degree(&self, v: usize) -> Result<f64> {
        self.check(v)?;
        Ok(self.degrees[v - 1])
    }

    /// Degrees indexed from 0.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    fn check(&self, v: usize) -> Result<()> {
        if v == 0 || v > self.n {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        } else {
            Ok(())
        }
    }

    fn is_overlay_member(&self, i: usize) -> bool {
        !self.overlay_flag.is_empty() && self.overlay_flag[i]
    }

    /// One step of the weighted random walk from 1-based `v`.
    pub fn walk_step<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> Result<usize> {
        self.check(v)?;
        Ok(self.step_index(v - 1, rng) + 1)
    }

    /// One walk step on 0-based indices: moves to `u` with probability
    /// `w(i, u) / deg(i)`.
    #[inline]
    pub(crate) fn step_index<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        let mut r = rng.gen::<f64>() * self.degrees[i];
        if self.is_overlay_member(i) {
            if r < self.overlay_mass {
                return self.uniform_overlay_member(rng);
            }
            r -= self.overlay_mass;
        }
        let lo = self.offsets[i];
        let hi = self.offsets[i + 1];
        let cum = &self.cumulative[lo..hi];
        let k = cum.partition_point(|&c| c <= r);
        if k < cum.len() {
            return self.targets[lo + k] as usize;
        }
        // r landed past the last prefix sum through rounding.
        for k in (0..cum.len()).rev() {
            let prev = if k == 0 { 0.0 } else { cum[k - 1] };
            if cum[k] > prev {
                return self.targets[lo + k] as usize;
            }
        }
        self.uniform_overlay_member(rng)
    }

    #[inline]
    fn uniform_overlay_member<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.overlay_members[rng.gen_range(0..self.overlay_members.len())] as usize
    }

    #[inline]
    pub(crate) fn uniform_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.n)
    }

    /// Runs `m` walks of `t` steps. Walk `i` draws from `source.fork(i)`, so
    /// the transcript does not depend on how walks are scheduled.
    pub fn run_walks(&self, m: usize, t: usize, starts: &Starts, source: RandomSource) -> Result<WalkTranscript> {
        if m == 0 || t == 0 {
            return Err(Error::InvalidParameter("run_walks needs m >= 1 and T >= 1".into()));
        }
        if let Starts::Explicit(list) = starts {
            if list.len() != m {
                return Err(Error::InvalidParameter(format!("{} explicit starts for {m} walks", list.len())));
            }
            for &s in list {
                self.check(s)?;
            }
        }
        let labels: Vec<usize> = (0..m)
            .into_par_iter()
            .flat_map_iter(|w| {
                let mut rng = source.fork(w as u64).rng();
                let mut cur = match starts {
                    Starts::Uniform => self.uniform_index(&mut rng),
                    Starts::Explicit(list) => list[w] - 1,
                };
                let mut walk = Vec::with_capacity(t + 1);
                walk.push(cur + 1);
                for _ in 0..t {
                    cur = self.step_index(cur, &mut rng);
                    walk.push(cur + 1);
                }
                walk
            })
            .collect();
        Ok(WalkTranscript { labels, walk_count: m, steps: t })
    }

    /// `D^{-1/2} Ã D^{-1/2}` as a dense matrix (at most [`DENSE_LIMIT`] vertices).
    pub fn dense_normalized_adjacency(&self) -> Result<DenseMatrix> {
        self.dense_normalized_adjacency_with_limit(DENSE_LIMIT)
    }

    pub fn dense_normalized_adjacency_with_limit(&self, limit: usize) -> Result<DenseMatrix> {
        Ok(self.dense_weights(limit)?.scaled(&self.degrees, |wu, wv| 1.0 / (wu * wv).sqrt()))
    }

    /// Random-walk matrix `D^{-1} Ã`.
    pub fn dense_random_walk_matrix(&self) -> Result<DenseMatrix> {
        Ok(self.dense_weights(DENSE_LIMIT)?.scaled(&self.degrees, |du, _| 1.0 / du))
    }

    /// Weighted adjacency `Ã` with the overlay materialized.
    pub fn dense_weights(&self, limit: usize) -> Result<DenseMatrix> {
        if self.n > limit {
            return Err(Error::SizeGuard { n: self.n, limit });
        }
        let mut m = DenseMatrix::zeros(self.n);
        for e in &self.edges {
            m.add_to(e.u - 1, e.v - 1, e.weight);
            if e.u != e.v {
                m.add_to(e.v - 1, e.u - 1, e.weight);
            }
        }
        if let Some(ov) = &self.overlay {
            for &a in &self.overlay_members {
                for &b in &self.overlay_members {
                    m.add_to(a as usize, b as usize, ov.weight);
                }
            }
        }
        Ok(m)
    }

    /// Replaces the implicit overlay by explicit edges (ring weights and
    /// overlay weights summed on shared pairs). Refuses when the result would
    /// exceed `max_edges`.
    pub fn materialize_overlay(&self, max_edges: usize) -> Result<WeightedGraph> {
        let Some(ov) = &self.overlay else {
            return Ok(self.clone());
        };
        let k = self.overlay_members.len();
        let needed = k * (k + 1) / 2 + self.edges.len();
        if needed > max_edges {
            return Err(Error::SizeGuard { n: needed, limit: max_edges });
        }
        let mut explicit: HashMap<(usize, usize), f64> = HashMap::new();
        for e in &self.edges {
            *explicit.entry((e.u.min(e.v), e.u.max(e.v))).or_default() += e.weight;
        }
        let mut members: Vec<usize> = self.overlay_members.iter().map(|&x| x as usize + 1).collect();
        members.sort_unstable();
        for (ia, &a) in members.iter().enumerate() {
            for &b in &members[ia..] {
                *explicit.entry((a, b)).or_default() += ov.weight;
            }
        }
        let mut edges: Vec<Edge> = explicit.into_iter().map(|((u, v), w)| Edge::new(u, v, w)).collect();
        edges.sort_by(|x, y| (x.u, x.v).cmp(&(y.u, y.v)));
        WeightedGraph::new(self.n, edges)
    }

    /// Applies `perm` (0-based image of each 0-based vertex) to every label.
    pub fn relabel(&self, perm: &[usize]) -> Result<WeightedGraph> {
        if perm.len() != self.n {
            return Err(Error::InvalidParameter("permutation length mismatch".into()));
        }
        let mut hit = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut hit[p], true) {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(perm[e.u - 1] + 1, perm[e.v - 1] + 1, e.weight))
            .collect();
        let overlay = self.overlay.as_ref().map(|ov| Overlay {
            weight: ov.weight,
            members: ov.members.as_ref().map(|ms| ms.iter().map(|&x| perm[x - 1] + 1).collect()),
        });
        WeightedGraph::with_overlay(self.n, edges, overlay)
    }

    /// Writes the plain-text edge list. An overlay is recorded on a leading
    /// `# overlay <weight> [members...]` comment; no member list means every
    /// vertex belongs to it.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        if let Some(ov) = &self.overlay {
            write!(out, "# overlay {}", ov.weight)?;
            if let Some(ms) = &ov.members {
                for m in ms {
                    write!(out, " {m}")?;
                }
            }
            writeln!(out)?;
        }
        writeln!(out, "{} {}", self.n, self.edges.len())?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.u, e.v, e.weight)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<WeightedGraph> {
        let mut overlay = None;
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: lineno, message };
            if let Some(comment) = text.strip_prefix('#') {
                let mut tok = comment.split_whitespace();
                if tok.next() == Some("overlay") {
                    let weight = tok
                        .next()
                        .ok_or_else(|| parse_err("overlay weight missing".into()))?
                        .parse::<f64>()
                        .map_err(|e| parse_err(e.to_string()))?;
                    let members: Vec<usize> = tok
                        .map(|t| t.parse::<usize>().map_err(|e| parse_err(e.to_string())))
                        .collect::<Result<_>>()?;
                    overlay = Some(Overlay { weight, members: (!members.is_empty()).then_some(members) });
                }
                continue;
            }
            let fields: Vec<&str> = text.split_whitespace().collect();
            match header {
                None => {
                    if fields.len() != 2 {
                        return Err(parse_err("expected header `n m`".into()));
                    }
                    let n = fields[0].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
                    let m = fields[1].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
                    header = Some((n, m));
                    edges.reserve(m);
                }
                Some(_) => {
                    if fields.len() != 3 {
                        return Err(parse_err("expected edge `u v w`".into()));
                    }
                    let u = fields[0].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
                    let v = fields[1].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
                    let w = fields[2].parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
                    edges.push(Edge::new(u, v, w));
                }
            }
        }
        let (n, m) = header.ok_or_else(|| Error::Parse { line: 0, message: "missing header".into() })?;
        if edges.len() != m {
            return Err(Error::Parse { line: 0, message: format!("header announces {m} edges, found {}", edges.len()) });
        }
        WeightedGraph::with_overlay(n, edges, overlay)
    }
}

trait Scale {
    fn scaled(self, degrees: &[f64], f: impl Fn(f64, f64) -> f64) -> DenseMatrix;
}

impl Scale for DenseMatrix {
    fn scaled(mut self, degrees: &[f64], f: impl Fn(f64, f64) -> f64) -> DenseMatrix {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                if v != 0.0 {
                    self.set(i, j, v * f(degrees[i], degrees[j]));
                }
            }
        }
        self
    }
}

/// Ordered label sequences of `m` walks, each holding the start plus `T`
/// visited labels (all 1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTranscript {
    labels: Vec<usize>,
    walk_count: usize,
    steps: usize,
}

impl WalkTranscript {
    pub fn from_walks(walks: Vec<Vec<usize>>) -> Result<Self> {
        let first = walks.first().ok_or_else(|| Error::InvalidParameter("empty transcript".into()))?;
        let len = first.len();
        if len == 0 {
            return Err(Error::InvalidParameter("walks must contain a start label".into()));
        }
        if walks.iter().any(|w| w.len() != len) {
            return Err(Error::InvalidParameter("walks have unequal lengths".into()));
        }
        if walks.iter().flatten().any(|&l| l == 0) {
            return Err(Error::InvalidParameter("labels are 1-based".into()));
        }
        Ok(Self { walk_count: walks.len(), steps: len - 1, labels: walks.concat() })
    }

    /// Number of walks `m`.
    pub fn walk_count(&self) -> usize {
        self.walk_count
    }

    /// Steps per walk `T`; each walk has `T + 1` labels.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn walk(&self, i: usize) -> &[usize] {
        let len = self.steps + 1;
        &self.labels[i * len..(i + 1) * len]
    }

    pub fn walks(&self) -> impl Iterator<Item = &[usize]> {
        self.labels.chunks(self.steps + 1)
    }

    /// Checks that every label lies in `1..=n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.labels.iter().find(|&&l| l == 0 || l > n) {
            Some(&l) => Err(Error::VertexOutOfRange { vertex: l, n }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_symmetric_eigenvalues;

    fn triangle() -> WeightedGraph {
        build_graph(3, &[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)]).unwrap()
    }

    #[test]
    fn single_edge_degrees() {
        let g = build_graph(2, &[(1, 2, 1.0)]).unwrap();
        assert_eq!(g.degrees(), &[1.0, 1.0]);
    }

    #[test]
    fn self_loop_counted_once() {
        let g = build_graph(1, &[(1, 1, 1.0)]).unwrap();
        assert_eq!(g.degree(1).unwrap(), 1.0);
        let mut rng = RandomSource::new(0).rng();
        for _ in 0..100 {
            assert_eq!(g.walk_step(1, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(build_graph(2, &[(1, 3, 1.0)]), Err(Error::VertexOutOfRange { vertex: 3, n: 2 })));
        assert!(matches!(build_graph(2, &[(1, 2, 1.0), (2, 1, 0.5)]), Err(Error::Graph(_))));
        assert!(matches!(build_graph(3, &[(1, 2, 1.0)]), Err(Error::Graph(_))));
        assert!(matches!(build_graph(2, &[(1, 2, 0.0)]), Err(Error::Graph(_))));
        assert!(matches!(build_graph(2, &[(1, 2, -1.0)]), Err(Error::Graph(_))));
        assert!(matches!(build_graph(0, &[]), Err(Error::Graph(_))));
    }

    #[test]
    fn single_edge_walk_is_forced() {
        let g = build_graph(2, &[(1, 2, 1.0)]).unwrap();
        let mut rng = RandomSource::new(3).rng();
        for _ in 0..100 {
            assert_eq!(g.walk_step(1, &mut rng).unwrap(), 2);
        }
        assert!(g.walk_step(0, &mut rng).is_err());
        assert!(g.walk_step(3, &mut rng).is_err());
    }

    #[test]
    fn zero_weight_edges_are_never_taken() {
        let g = build_graph(3, &[(1, 2, 0.0), (1, 3, 2.0), (2, 3, 1.0)]).unwrap();
        let mut rng = RandomSource::new(4).rng();
        for _ in 0..1000 {
            assert_eq!(g.walk_step(1, &mut rng).unwrap(), 3);
        }
    }

    #[test]
    fn transition_frequencies_within_three_sigma() {
        let g = build_graph(4, &[(1, 2, 1.0), (1, 3, 2.0), (1, 4, 5.0), (1, 1, 2.0), (2, 3, 1.0), (3, 4, 1.0)]).unwrap();
        let mut rng = RandomSource::new(11).rng();
        let trials = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            counts[g.walk_step(1, &mut rng).unwrap() - 1] += 1;
        }
        let probs = [2.0 / 10.0, 1.0 / 10.0, 2.0 / 10.0, 5.0 / 10.0];
        for (c, p) in counts.iter().zip(probs) {
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((*c as f64 / trials as f64 - p).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn overlay_jump_matches_materialized_transitions() {
        let ring = vec![Edge::new(1, 2, 0.25), Edge::new(2, 3, 0.25), Edge::new(3, 1, 0.25)];
        let g = WeightedGraph::with_overlay(3, ring, Some(Overlay { weight: 0.5 / 3.0, members: None })).unwrap();
        let explicit = g.materialize_overlay(100).unwrap();
        for v in 1..=3 {
            assert!((g.degree(v).unwrap() - 1.0).abs() < 1e-12);
            assert!((explicit.degree(v).unwrap() - 1.0).abs() < 1e-12);
        }
        let a = g.dense_normalized_adjacency().unwrap();
        let b = explicit.dense_normalized_adjacency().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-15);
            }
        }
        let trials = 300_000;
        let mut rng = RandomSource::new(8).rng();
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            counts[g.walk_step(1, &mut rng).unwrap() - 1] += 1;
        }
        for (j, c) in counts.iter().enumerate() {
            let p = b.get(0, j);
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((*c as f64 / trials as f64 - p).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn transcript_shape_and_determinism() {
        let g = triangle();
        let t = g.run_walks(3, 2, &Starts::Uniform, RandomSource::new(5)).unwrap();
        assert_eq!(t.walk_count(), 3);
        assert_eq!(t.steps(), 2);
        assert!(t.walks().all(|w| w.len() == 3));
        t.validate(3).unwrap();
        let again = g.run_walks(3, 2, &Starts::Uniform, RandomSource::new(5)).unwrap();
        assert_eq!(t, again);
        assert_eq!(serde_json::to_string(&t).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn explicit_starts() {
        let g = triangle();
        let t = g.run_walks(2, 4, &Starts::Explicit(vec![3, 1]), RandomSource::new(1)).unwrap();
        assert_eq!(t.walk(0)[0], 3);
        assert_eq!(t.walk(1)[0], 1);
        assert!(g.run_walks(1, 4, &Starts::Explicit(vec![4]), RandomSource::new(1)).is_err());
        assert!(g.run_walks(2, 4, &Starts::Explicit(vec![1]), RandomSource::new(1)).is_err());
        assert!(g.run_walks(1, 0, &Starts::Uniform, RandomSource::new(1)).is_err());
    }

    #[test]
    fn uniform_starts_pass_chi_square() {
        let n = 10;
        let edges: Vec<_> = (1..=n).map(|i| (i, i % n + 1, 1.0)).collect();
        let g = build_graph(n, &edges).unwrap();
        let m = 100_000;
        let t = g.run_walks(m, 1, &Starts::Uniform, RandomSource::new(21)).unwrap();
        let mut counts = vec![0f64; n];
        for w in t.walks() {
            counts[w[0] - 1] += 1.0;
        }
        let expected = m as f64 / n as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 9 degrees of freedom, 0.999 quantile is 27.88
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn dense_matrices() {
        let g = build_graph(2, &[(1, 2, 1.0)]).unwrap();
        let a = g.dense_normalized_adjacency().unwrap();
        assert_eq!(a, DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        let a = triangle().dense_normalized_adjacency().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 0.5 };
                assert!((a.get(i, j) - want).abs() < 1e-15);
            }
        }
        assert!(matches!(triangle().dense_normalized_adjacency_with_limit(2), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn normalized_adjacency_has_unit_spectral_radius() {
        let mut rng = RandomSource::new(17).rng();
        for n in [3usize, 6, 12] {
            let mut edges = Vec::new();
            for u in 1..=n {
                for v in u..=n {
                    if rng.gen_bool(0.6) || v == u + 1 {
                        edges.push((u, v, rng.gen_range(0.01..3.0)));
                    }
                }
            }
            edges.dedup_by_key(|e| (e.0, e.1));
            let g = build_graph(n, &edges).unwrap();
            let a = g.dense_normalized_adjacency().unwrap();
            assert!(a.max_asymmetry() < 1e-15);
            let eig = dense_symmetric_eigenvalues(&a).unwrap();
            assert!(eig.iter().all(|l| l.abs() <= 1.0 + 1e-9));
            assert!((eig[n - 1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn edge_list_round_trip_with_partial_overlay() {
        let g = WeightedGraph::with_overlay(
            5,
            vec![Edge::new(1, 2, 0.1), Edge::new(4, 4, 1.0), Edge::new(5, 5, 1.0 / 3.0), Edge::new(3, 1, 0.7)],
            Some(Overlay { weight: 1.0 / 12.0, members: Some(vec![3, 1, 2]) }),
        )
        .unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = WeightedGraph::read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(g, back);
        assert_eq!(g.degrees(), back.degrees());
    }

    #[test]
    fn malformed_edge_lists() {
        let bad = ["2 1\n1 2\n", "2 2\n1 2 1.0\n", "x 1\n1 2 1\n", "2 1\n1 2 abc\n", ""];
        for text in bad {
            assert!(WeightedGraph::read_edge_list(text.as_bytes()).is_err(), "{text:?}");
        }
    }

    #[test]
    fn relabel_rejects_non_permutations() {
        assert!(triangle().relabel(&[0, 0, 1]).is_err());
        assert!(triangle().relabel(&[0, 1]).is_err());
        assert_eq!(triangle().relabel(&[0, 1, 2]).unwrap(), triangle());
    }
}
