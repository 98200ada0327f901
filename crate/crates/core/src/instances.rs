//! Generators for the hard instance pairs, random relabeling, and the marble
//! jar.
//!
//! Ring vertices come first (cycle after cycle, consecutive labels); any
//! isolated self-loop vertices follow.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Overlay, WeightedGraph};
use crate::rng::RandomSource;
use crate::spectrum::mixture_cycle_counts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Mom,
    Rw,
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    G1,
    G2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub ell: usize,
    pub n: usize,
    pub variant: Variant,
    pub alpha: Option<f64>,
    pub which: Which,
}

impl InstanceParams {
    pub fn validate(&self) -> Result<()> {
        check_ell(self.ell)?;
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if self.variant == Variant::Mixture {
            let alpha = self.alpha.ok_or_else(|| Error::InvalidParameter("mixture needs α".into()))?;
            mixture_cycle_counts(alpha, self.n)?;
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<WeightedGraph> {
        self.validate()?;
        match self.variant {
            Variant::Mom => gen_mom_instance(self.ell, self.which, Some(self.n)),
            Variant::Rw => gen_rw_instance(self.ell, self.which, Some(self.n)),
            Variant::Mixture => gen_mixture_instance(self.ell, self.alpha.unwrap_or_default(), self.n, self.which),
        }
    }
}

fn check_ell(ell: usize) -> Result<()> {
    if ell < 3 || ell % 2 == 0 {
        return Err(Error::InvalidParameter(format!("ℓ must be odd and at least 3, got {ell}")));
    }
    Ok(())
}

/// Default cycle scale for the moment pair: `⌈2^ℓ / 4⌉`.
pub fn default_mom_n(ell: usize) -> Result<usize> {
    check_ell(ell)?;
    if ell > 40 {
        return Err(Error::InvalidParameter(format!("ℓ = {ell} gives an unusable default n")));
    }
    Ok((1usize << ell).div_ceil(4))
}

/// Default cycle scale for the random-walk pair: `2·2^{2ℓ}`.
pub fn default_rw_n(ell: usize) -> Result<usize> {
    check_ell(ell)?;
    if ell > 20 {
        return Err(Error::InvalidParameter(format!("ℓ = {ell} gives an unusable default n")));
    }
    Ok(2 << (2 * ell))
}

/// Disjoint cycles laid out consecutively from label `first`.
fn push_cycles(edges: &mut Vec<Edge>, first: usize, len: usize, copies: usize, weight: f64) -> usize {
    let mut base = first;
    for _ in 0..copies {
        for i in 0..len {
            edges.push(Edge::new(base + i, base + (i + 1) % len, weight));
        }
        base += len;
    }
    base
}

fn ring_layout(ell: usize, which: Which, n: usize) -> (usize, usize) {
    match which {
        Which::G1 => (ell, 2 * n),
        Which::G2 => (2 * ell, n),
    }
}

/// The moment hard pair: rings of weight 1/4 (2n of length ℓ, or n of length
/// 2ℓ), a complete overlay of weight `1/(4nℓ)` on the `2nℓ` ring vertices, and
/// `2nℓ` further vertices carrying only a unit self-loop.
pub fn gen_mom_instance(ell: usize, which: Which, n_override: Option<usize>) -> Result<WeightedGraph> {
    let n = match n_override {
        Some(n) => n,
        None => default_mom_n(ell)?,
    };
    check_ell(ell)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let ring = 2 * n * ell;
    let (len, copies) = ring_layout(ell, which, n);
    let mut edges = Vec::with_capacity(2 * ring);
    let next = push_cycles(&mut edges, 1, len, copies, 0.25);
    debug_assert_eq!(next, ring + 1);
    for v in ring + 1..=2 * ring {
        edges.push(Edge::new(v, v, 1.0));
    }
    let overlay = Overlay { weight: 1.0 / (4.0 * n as f64 * ell as f64), members: Some((1..=ring).collect()) };
    WeightedGraph::with_overlay(2 * ring, edges, Some(overlay))
}

/// The random-walk hard pair: the same rings and overlay without isolated
/// vertices.
pub fn gen_rw_instance(ell: usize, which: Which, n_override: Option<usize>) -> Result<WeightedGraph> {
    let n = match n_override {
        Some(n) => n,
        None => default_rw_n(ell)?,
    };
    check_ell(ell)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let ring = 2 * n * ell;
    let (len, copies) = ring_layout(ell, which, n);
    let mut edges = Vec::with_capacity(ring);
    push_cycles(&mut edges, 1, len, copies, 0.25);
    let overlay = Overlay { weight: 1.0 / (4.0 * n as f64 * ell as f64), members: None };
    WeightedGraph::with_overlay(ring, edges, Some(overlay))
}

/// Unweighted cycle mixtures: `G1` has `αn` cycles of length `2ℓ` and
/// `2(1-α)n` of length `ℓ`; `G2` has `(1-α)n` and `2αn`.
pub fn gen_mixture_instance(ell: usize, alpha: f64, n: usize, which: Which) -> Result<WeightedGraph> {
    check_ell(ell)?;
    let counts = mixture_cycle_counts(alpha, n)?;
    let (long, short) = match which {
        Which::G1 => counts[0],
        Which::G2 => counts[1],
    };
    let mut edges = Vec::with_capacity(2 * n * ell);
    let next = push_cycles(&mut edges, 1, 2 * ell, long, 1.0);
    let end = push_cycles(&mut edges, next, ell, short, 1.0);
    WeightedGraph::new(end - 1, edges)
}

/// Relabels by a uniformly random permutation.
pub fn relabel_random(graph: &WeightedGraph, source: RandomSource) -> Result<WeightedGraph> {
    let mut perm: Vec<usize> = (0..graph.vertex_count()).collect();
    perm.shuffle(&mut source.rng());
    graph.relabel(&perm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JarCase {
    Case1,
    Case2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

/// A jar of `n` marbles holding `αn` red ones in the first case and `(1-α)n`
/// in the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jar {
    pub n: usize,
    pub red_count: usize,
    pub case: JarCase,
    pub alpha: f64,
}

impl Jar {
    pub fn new(alpha: f64, n: usize, case: JarCase) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) || n == 0 {
            return Err(Error::InvalidParameter(format!("jar needs α in (0,1) and n ≥ 1, got α={alpha}, n={n}")));
        }
        let an = alpha * n as f64;
        if (an - an.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("αn = {an} is not an integer")));
        }
        let a = an.round() as usize;
        let red_count = match case {
            JarCase::Case1 => a,
            JarCase::Case2 => n - a,
        };
        Ok(Self { n, red_count, case, alpha })
    }
}

/// Number of reds among `s` draws, without materializing the color list.
pub(crate) fn count_reds<R: Rng + ?Sized>(jar: &Jar, s: usize, replacement: bool, rng: &mut R) -> usize {
    let mut reds_left = jar.red_count;
    let mut total_left = jar.n;
    let mut reds = 0;
    for _ in 0..s {
        let red = rng.gen_range(0..total_left) < reds_left;
        if red {
            reds += 1;
        }
        if !replacement {
            if red {
                reds_left -= 1;
            }
            total_left -= 1;
        }
    }
    reds
}

/// Draws `s` marbles, sequentially removing each one unless `replacement`.
pub fn draw_marbles(jar: &Jar, s: usize, replacement: bool, source: RandomSource) -> Result<Vec<Color>> {
    if !replacement && s > jar.n {
        return Err(Error::InvalidParameter(format!("cannot draw {s} of {} marbles without replacement", jar.n)));
    }
    let mut rng = source.rng();
    let mut reds_left = jar.red_count;
    let mut total_left = jar.n;
    let mut out = Vec::with_capacity(s);
    for _ in 0..s {
        let red = rng.gen_range(0..total_left) < reds_left;
        out.push(if red { Color::Red } else { Color::Blue });
        if !replacement {
            if red {
                reds_left -= 1;
            }
            total_left -= 1;
        }
    }
    Ok(out)
}
