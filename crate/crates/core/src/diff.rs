//! Spectral density of `A(G1) − A(G2)` for two graphs sharing a degree
//! vector, estimated from alternating random walks.
//!
//! A walk following pattern `x ∈ {0,1}^j` takes step `i` in `G1` when
//! `x_i = 1` and in `G2` otherwise. Its return probability from a uniform
//! start is `tr(Π_i M_{x_i}) / n` with `M_1 = D⁻¹Ã₁`, `M_0 = D⁻¹Ã₂`. Expanding
//! `(M_1 − M_0)^j` multilinearly gives every pattern the sign
//! `(−1)^{#zeros}`, which the estimator applies when aggregating.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, WeightedGraph};
use crate::linalg::{dense_symmetric_eigenvalues, DenseMatrix};
use crate::moments::{Accuracy, MomentVector};
use crate::reconstruct::{solve_moment_lp, MomentWeights, ReconstructionResult};
use crate::rng::{par_chunked_sum, RandomSource};
use crate::spectrum::{wasserstein1, Interval, SpectralMeasure};

pub const DEGREE_TOLERANCE: f64 = 1e-12;

/// Default cap on the total number of alternating walks per estimate.
pub const DEFAULT_DIFF_BUDGET: u64 = 100_000_000;

/// Bits `x_1..x_j`; `true` selects the first graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternationPattern(pub Vec<bool>);

impl AlternationPattern {
    /// Pattern of length `j` whose bit `i` is bit `i` of `code`.
    pub fn from_code(j: usize, code: u64) -> Self {
        Self((0..j).map(|i| (code >> i) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(−1)^{#{i : x_i = 0}}`.
    pub fn sign(&self) -> f64 {
        if self.0.iter().filter(|b| !**b).count() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Checks equal vertex counts and degrees within [`DEGREE_TOLERANCE`].
pub fn check_common_degrees(g1: &WeightedGraph, g2: &WeightedGraph) -> Result<()> {
    if g1.vertex_count() != g2.vertex_count() {
        return Err(Error::Precondition(format!(
            "vertex counts differ: {} vs {}",
            g1.vertex_count(),
            g2.vertex_count()
        )));
    }
    let worst = g1.degrees().iter().zip(g2.degrees()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if worst > DEGREE_TOLERANCE {
        return Err(Error::DegreeMismatch(worst));
    }
    Ok(())
}

#[inline]
fn alternating_indices<R: Rng + ?Sized>(g1: &WeightedGraph, g2: &WeightedGraph, bits: &[bool], rng: &mut R) -> (usize, usize) {
    let start = g1.uniform_index(rng);
    let mut cur = start;
    for &b in bits {
        cur = if b { g1.step_index(cur, rng) } else { g2.step_index(cur, rng) };
    }
    (start, cur)
}

/// One alternating walk from a uniform start; returns 1-based
/// `(start, end)`.
pub fn alternating_walk<R: Rng + ?Sized>(
    g1: &WeightedGraph,
    g2: &WeightedGraph,
    pattern: &AlternationPattern,
    rng: &mut R,
) -> Result<(usize, usize)> {
    check_common_degrees(g1, g2)?;
    let (s, e) = alternating_indices(g1, g2, &pattern.0, rng);
    Ok((s + 1, e + 1))
}

/// `⌈½ θ⁻² j 4^j ln(2k/δ)⌉` samples per pattern of length `j`.
pub fn samples_per_pattern(j: usize, k: usize, theta: f64, delta: f64) -> f64 {
    (0.5 / (theta * theta) * j as f64 * 4f64.powi(j as i32) * (2.0 * k as f64 / delta).ln()).ceil()
}

/// Total walks `Σ_j 2^j · samples(j)` over all patterns up to `k`.
pub fn total_diff_walks(k: usize, theta: f64, delta: f64) -> f64 {
    (1..=k).map(|j| 2f64.powi(j as i32) * samples_per_pattern(j, k, theta, delta)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffMomentEstimate {
    /// `p̂_1..p̂_k`.
    pub values: Vec<f64>,
    /// `returns[j-1][code]`: returning walks for the pattern with that code.
    pub returns: Vec<Vec<u64>>,
    pub samples: Vec<u64>,
    pub theta: f64,
    pub delta: f64,
    pub k: usize,
}

impl DiffMomentEstimate {
    pub fn moment_vector(&self) -> Result<MomentVector> {
        MomentVector::new(self.values.clone(), Accuracy::Additive(self.theta))
    }

    pub fn total_walks(&self) -> u64 {
        self.samples.iter().enumerate().map(|(i, s)| s << (i + 1)).sum()
    }
}

/// Estimates the first `k` moments of the difference spectrum: every pattern
/// of length `j` gets the formula's sample count, and the return frequencies
/// are summed with the multilinear sign.
pub fn estimate_diff_moments(
    g1: &WeightedGraph,
    g2: &WeightedGraph,
    k: usize,
    theta: f64,
    delta: f64,
    budget_cap: u64,
    source: RandomSource,
) -> Result<DiffMomentEstimate> {
    check_common_degrees(g1, g2)?;
    if k == 0 || k > 30 {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..=30")));
    }
    for (name, v) in [("θ", theta), ("δ", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    let required = total_diff_walks(k, theta, delta);
    if !(required <= budget_cap as f64) {
        let required = if required >= u64::MAX as f64 { u64::MAX } else { required as u64 };
        return Err(Error::BudgetExceeded { required, cap: budget_cap });
    }

    let mut values = Vec::with_capacity(k);
    let mut returns = Vec::with_capacity(k);
    let mut samples = Vec::with_capacity(k);
    for j in 1..=k {
        let s = samples_per_pattern(j, k, theta, delta) as u64;
        let moment_source = source.fork(j as u64);
        let counts: Vec<u64> = (0..1u64 << j)
            .into_par_iter()
            .map(|code| {
                let pattern = AlternationPattern::from_code(j, code);
                par_chunked_sum(s, moment_source.fork(code), |rng, count| {
                    let mut hits = 0;
                    for _ in 0..count {
                        let (a, b) = alternating_indices(g1, g2, &pattern.0, rng);
                        hits += (a == b) as u64;
                    }
                    hits
                })
            })
            .collect();
        let p: f64 = counts
            .iter()
            .enumerate()
            .map(|(code, &c)| AlternationPattern::from_code(j, code as u64).sign() * c as f64 / s as f64)
            .sum();
        values.push(p);
        returns.push(counts);
        samples.push(s);
    }
    Ok(DiffMomentEstimate { values, returns, samples, theta, delta, k })
}

/// `D^{-1/2}(Ã₁ − Ã₂)D^{-1/2}`.
pub fn dense_difference(g1: &WeightedGraph, g2: &WeightedGraph) -> Result<DenseMatrix> {
    check_common_degrees(g1, g2)?;
    Ok(g1.dense_normalized_adjacency()?.sub(&g2.dense_normalized_adjacency()?))
}

/// Exact difference spectrum on `[-2, 2]`.
pub fn exact_diff_spectrum(g1: &WeightedGraph, g2: &WeightedGraph) -> Result<SpectralMeasure> {
    let eig = dense_symmetric_eigenvalues(&dense_difference(g1, g2)?)?;
    let clamped: Vec<f64> = eig.into_iter().map(|v| v.clamp(-2.0, 2.0)).collect();
    SpectralMeasure::from_values(&clamped, Interval::DIFFERENCE)
}

/// `tr((M_1 − M_0)^j) / n` for `j = 1..=k` by dense powers.
pub fn exact_diff_moments(g1: &WeightedGraph, g2: &WeightedGraph, k: usize) -> Result<Vec<f64>> {
    let d = dense_difference(g1, g2)?;
    let n = d.dim() as f64;
    let mut power = d.clone();
    let mut out = vec![power.trace() / n];
    for _ in 1..k {
        power = power.matmul(&d);
        out.push(power.trace() / n);
    }
    Ok(out)
}

/// `Σ_x (−1)^{#zeros} tr(Π_i M_{x_i}) / n` over all `2^j` patterns, computed
/// densely from the random-walk matrices.
pub fn signed_pattern_trace(g1: &WeightedGraph, g2: &WeightedGraph, j: usize) -> Result<f64> {
    check_common_degrees(g1, g2)?;
    let m1 = g1.dense_random_walk_matrix()?;
    let m0 = g2.dense_random_walk_matrix()?;
    let n = m1.dim();
    let mut total = 0.0;
    for code in 0..1u64 << j {
        let pattern = AlternationPattern::from_code(j, code);
        let mut product = DenseMatrix::identity(n);
        for &b in &pattern.0 {
            product = product.matmul(if b { &m1 } else { &m0 });
        }
        total += pattern.sign() * product.trace() / n as f64;
    }
    Ok(total)
}

/// Cycles `1-2-3-4-1` and `1-3-2-4-1`; both 2-regular, difference spectrum
/// `{−1, 0, 0, 1}`.
pub fn four_vertex_pair() -> Result<(WeightedGraph, WeightedGraph)> {
    let g1 = build_graph(4, &[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 1, 1.0)])?;
    let g2 = build_graph(4, &[(1, 3, 1.0), (3, 2, 1.0), (2, 4, 1.0), (4, 1, 1.0)])?;
    Ok((g1, g2))
}

/// A random pair on `n ≥ 4` vertices with identical degree vectors: `G1` is
/// a complete graph with self-loops and weights in `[1, 2)`; `G2` adds
/// `±t` around a few random alternating 4-cycles, which leaves every degree
/// unchanged.
pub fn random_common_degree_pair(n: usize, source: RandomSource) -> Result<(WeightedGraph, WeightedGraph)> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("need n >= 4, got {n}")));
    }
    let mut rng = source.rng();
    let mut w = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in u..n {
            let x = rng.gen_range(1.0..2.0);
            w[u][v] = x;
            w[v][u] = x;
        }
    }
    let mut w2 = w.clone();
    for _ in 0..n {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..4 {
            let j = rng.gen_range(i..n);
            idx.swap(i, j);
        }
        let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
        let t = rng.gen_range(-0.2..0.2);
        for (x, y, s) in [(a, b, t), (b, c, -t), (c, d, t), (d, a, -t)] {
            w2[x][y] += s;
            w2[y][x] += s;
        }
    }
    let edges = |m: &Vec<Vec<f64>>| -> Vec<(usize, usize, f64)> {
        (0..n).flat_map(|u| (u..n).map(move |v| (u + 1, v + 1, m[u][v]))).collect()
    };
    Ok((build_graph(n, &edges(&w))?, build_graph(n, &edges(&w2))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiffMode {
    /// Caller-chosen `k`, `θ`, `δ`.
    Relaxed { k: usize, theta: f64, delta: f64 },
    /// `k = ⌈4C/ε⌉`, `θ = ε / 3^{2k+2}`.
    Theorem { eps: f64, c: f64, delta: f64 },
}

impl DiffMode {
    pub fn parameters(&self) -> Result<(usize, f64, f64)> {
        match *self {
            DiffMode::Relaxed { k, theta, delta } => Ok((k, theta, delta)),
            DiffMode::Theorem { eps, c, delta } => {
                if !(eps > 0.0 && c > 0.0) {
                    return Err(Error::InvalidParameter(format!("need ε > 0 and C > 0, got ε={eps}, C={c}")));
                }
                let k = (4.0 * c / eps).ceil() as usize;
                Ok((k, eps / 3f64.powi(2 * k as i32 + 2), delta))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub result: ReconstructionResult,
    pub estimate: DiffMomentEstimate,
    pub w1_to_exact: Option<f64>,
}

/// Estimates difference moments and reconstructs on `[-2, 2]` with a grid
/// of `4k + 1` points. Reports W1 to the dense spectrum when it is small
/// enough to compute.
pub fn diff_spectrum_pipeline(
    g1: &WeightedGraph,
    g2: &WeightedGraph,
    mode: DiffMode,
    budget_cap: u64,
    source: RandomSource,
) -> Result<DiffReport> {
    let (k, theta, delta) = mode.parameters()?;
    let estimate = estimate_diff_moments(g1, g2, k, theta, delta, budget_cap, source)?;
    let result = solve_moment_lp(&estimate.moment_vector()?, Interval::DIFFERENCE, 4 * k + 1, MomentWeights::Uniform)?;
    let w1_to_exact = if g1.vertex_count() <= 2048 {
        Some(wasserstein1(&result.measure, &exact_diff_spectrum(g1, g2)?)?)
    } else {
        None
    };
    Ok(DiffReport { result, estimate, w1_to_exact })
}
