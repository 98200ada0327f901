//! Raw moments of spectral measures: exact, by dense traces, and estimated
//! from random-walk return probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::{par_chunked_sum, RandomSource};
use crate::spectrum::SpectralMeasure;

/// Failure probability shared evenly across the `k` walk estimates.
pub const FAILURE_PROBABILITY: f64 = 0.1;

/// Moments below this magnitude get no relative gap.
pub const RELATIVE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "delta", rename_all = "lowercase")]
pub enum Accuracy {
    Exact,
    Additive(f64),
    Relative(f64),
}

/// `m_1, …, m_k` with an accuracy annotation. `values[j - 1]` is `m_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub values: Vec<f64>,
    pub accuracy: Accuracy,
}

impl MomentVector {
    pub fn new(values: Vec<f64>, accuracy: Accuracy) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("moment vector needs k >= 1".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite moment {v}")));
        }
        Ok(Self { values, accuracy })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// `m_j` for 1-based `j`.
    pub fn get(&self, j: usize) -> f64 {
        self.values[j - 1]
    }
}

/// `m_j = Σ mass · value^j` for `j = 1..=k`.
pub fn exact_moments(p: &SpectralMeasure, k: usize) -> Result<MomentVector> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut values = vec![0.0; k];
    for &(x, mass) in p.atoms() {
        let mut power = 1.0;
        for v in values.iter_mut() {
            power *= x;
            *v += mass * power;
        }
    }
    MomentVector::new(values, Accuracy::Exact)
}

/// `m_j = tr(A^j) / n` by repeated dense multiplication.
pub fn exact_moments_dense(graph: &WeightedGraph, k: usize) -> Result<MomentVector> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let a = graph.dense_normalized_adjacency()?;
    let n = a.dim() as f64;
    let mut power = a.clone();
    let mut values = Vec::with_capacity(k);
    values.push(power.trace() / n);
    for _ in 1..k {
        power = power.matmul(&a);
        values.push(power.trace() / n);
    }
    MomentVector::new(values, Accuracy::Exact)
}

/// Hoeffding half-width for `walks` Bernoulli samples with the failure
/// probability split over `k` estimates.
pub fn hoeffding_delta(k: usize, walks: u64) -> f64 {
    ((2.0 * k as f64 / FAILURE_PROBABILITY).ln() / (2.0 * walks as f64)).sqrt()
}

/// Number of `walks`-long walks from uniform starts that sit at their start
/// vertex after exactly `j` steps. Streams are derived from `source`.
pub fn count_returns(graph: &WeightedGraph, j: usize, walks: u64, source: RandomSource) -> u64 {
    par_chunked_sum(walks, source, |rng, count| {
        let mut hits = 0;
        for _ in 0..count {
            let start = graph.uniform_index(rng);
            let mut cur = start;
            for _ in 0..j {
                cur = graph.step_index(cur, rng);
            }
            hits += (cur == start) as u64;
        }
        hits
    })
}

/// `m̂_j` = fraction of `W` fresh length-`j` walks returning to their start,
/// for each `j ≤ k`. Moment `j` draws from `source.fork(j)`.
pub fn estimate_moments_walks(
    graph: &WeightedGraph,
    k: usize,
    walks_per_moment: u64,
    source: RandomSource,
) -> Result<MomentVector> {
    if k == 0 || walks_per_moment == 0 {
        return Err(Error::InvalidParameter("need k >= 1 and W >= 1".into()));
    }
    let values = (1..=k)
        .map(|j| count_returns(graph, j, walks_per_moment, source.fork(j as u64)) as f64 / walks_per_moment as f64)
        .collect();
    MomentVector::new(values, Accuracy::Additive(hoeffding_delta(k, walks_per_moment)))
}

/// Per-moment additive and relative gaps between two exact moment vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub additive: Vec<f64>,
    /// `|m_j(p1) − m_j(p2)| / |m_j(p1)|`, absent when `m_j(p1)` is below the guard.
    pub relative: Vec<Option<f64>>,
    pub max_additive: f64,
    pub max_relative: f64,
}

pub fn moment_gap_report(p1: &MomentVector, p2: &MomentVector) -> Result<GapReport> {
    if p1.accuracy != Accuracy::Exact || p2.accuracy != Accuracy::Exact {
        return Err(Error::Precondition("gap report needs exact moments".into()));
    }
    if p1.k() != p2.k() {
        return Err(Error::InvalidParameter(format!("k mismatch {} vs {}", p1.k(), p2.k())));
    }
    let additive: Vec<f64> = p1.values.iter().zip(&p2.values).map(|(a, b)| (a - b).abs()).collect();
    let relative: Vec<Option<f64>> = p1
        .values
        .iter()
        .zip(&additive)
        .map(|(&m, &gap)| (m.abs() >= RELATIVE_GUARD).then(|| gap / m.abs()))
        .collect();
    let max_additive = additive.iter().copied().fold(0.0, f64::max);
    let max_relative = relative.iter().flatten().copied().fold(0.0, f64::max);
    Ok(GapReport { additive, relative, max_additive, max_relative })
}

/// Exact moment gap report for two measures.
pub fn measure_gap_report(p1: &SpectralMeasure, p2: &SpectralMeasure, k: usize) -> Result<GapReport> {
    moment_gap_report(&exact_moments(p1, k)?, &exact_moments(p2, k)?)
}
