//! Moment-matching reconstruction on a uniform grid, the end-to-end
//! estimator from walk moments, and the Kong–Valiant error bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::moments::{estimate_moments_walks, MomentVector, FAILURE_PROBABILITY};
use crate::rng::RandomSource;
use crate::simplex::LinearProgram;
use crate::spectrum::{Interval, SpectralMeasure};

/// Masses below this are dropped from the reconstructed measure.
const MASS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentWeights {
    /// `w_j = 1`.
    #[default]
    Uniform,
    /// `w_j = 3^{-j}`.
    Geometric,
}

impl MomentWeights {
    pub fn values(self, k: usize) -> Vec<f64> {
        match self {
            MomentWeights::Uniform => vec![1.0; k],
            MomentWeights::Geometric => (1..=k).map(|j| 3f64.powi(-(j as i32))).collect(),
        }
    }
}

/// Grid, targets and per-moment weights for the Chebyshev-norm moment LP.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub grid: Vec<f64>,
    pub targets: MomentVector,
    pub weights: Vec<f64>,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub measure: SpectralMeasure,
    /// Optimal `t*`: the largest weighted moment deviation.
    pub residual: f64,
    pub iterations: usize,
    pub grid_size: usize,
}

/// `d` equally spaced points from `a` to `b` inclusive.
pub fn uniform_grid(interval: Interval, d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![0.5 * (interval.lo + interval.hi)];
    }
    let mut grid: Vec<f64> =
        (0..d).map(|i| interval.lo + interval.width() * i as f64 / (d - 1) as f64).collect();
    grid[d - 1] = interval.hi;
    grid
}

/// Grid size `max(4k + 1, ⌈8/ε⌉)`.
pub fn default_grid_size(k: usize, eps: f64) -> usize {
    (4 * k + 1).max((8.0 / eps).ceil() as usize)
}

impl LpProblem {
    pub fn new(targets: MomentVector, interval: Interval, grid_size: usize, weights: Vec<f64>) -> Result<Self> {
        let k = targets.k();
        if grid_size < k + 1 {
            return Err(Error::InvalidParameter(format!("grid size {grid_size} below k + 1 = {}", k + 1)));
        }
        if weights.len() != k || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("need k positive moment weights".into()));
        }
        Ok(Self { grid: uniform_grid(interval, grid_size), targets, weights, interval })
    }

    /// `max_j |m_j(q) − m̂_j| / w_j` for masses `q` on the grid.
    pub fn weighted_residual(&self, q: &[f64]) -> f64 {
        let mut powers: Vec<f64> = vec![1.0; self.grid.len()];
        let mut worst: f64 = 0.0;
        for (&target, &w) in self.targets.values.iter().zip(&self.weights) {
            let mut m = 0.0;
            for ((p, &x), &mass) in powers.iter_mut().zip(&self.grid).zip(q) {
                *p *= x;
                m += mass * *p;
            }
            worst = worst.max((m - target).abs() / w);
        }
        worst
    }

    /// Builds and solves
    /// `min t  s.t.  |Σ_i q_i x_i^j − m̂_j| ≤ w_j t,  Σ q = 1,  q ≥ 0`.
    pub fn solve(&self) -> Result<ReconstructionResult> {
        let d = self.grid.len();
        let k = self.targets.k();
        // columns: q_1..q_d, t, then one slack per inequality
        let cols = d + 1 + 2 * k;
        let mut rows = Vec::with_capacity(2 * k + 1);
        let mut rhs = Vec::with_capacity(2 * k + 1);
        let mut powers = vec![1.0; d];
        for j in 0..k {
            for (p, &x) in powers.iter_mut().zip(&self.grid) {
                *p *= x;
            }
            let target = self.targets.values[j];
            let w = self.weights[j];
            let mut upper = vec![0.0; cols];
            let mut lower = vec![0.0; cols];
            for i in 0..d {
                upper[i] = powers[i];
                lower[i] = -powers[i];
            }
            upper[d] = -w;
            lower[d] = -w;
            upper[d + 1 + 2 * j] = 1.0;
            lower[d + 2 + 2 * j] = 1.0;
            rows.push(upper);
            rhs.push(target);
            rows.push(lower);
            rhs.push(-target);
        }
        let mut total = vec![0.0; cols];
        for v in total.iter_mut().take(d) {
            *v = 1.0;
        }
        rows.push(total);
        rhs.push(1.0);
        let mut costs = vec![0.0; cols];
        costs[d] = 1.0;

        let solution = LinearProgram { costs, rows, rhs }.solve()?;
        let q = &solution.x[..d];
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Numerical(format!("reconstructed masses sum to {sum}")));
        }
        let atoms: Vec<(f64, f64)> =
            self.grid.iter().zip(q).filter(|(_, &m)| m > MASS_FLOOR).map(|(&x, &m)| (x, m)).collect();
        let kept: f64 = atoms.iter().map(|a| a.1).sum();
        let atoms = atoms.into_iter().map(|(x, m)| (x, m / kept)).collect();
        let measure = SpectralMeasure::new(atoms, self.interval)?;
        Ok(ReconstructionResult {
            measure,
            residual: solution.x[d].max(0.0),
            iterations: solution.iterations,
            grid_size: d,
        })
    }
}

/// Finds the grid measure whose first `k` moments best match `m̂` in the
/// weighted max norm.
pub fn solve_moment_lp(
    targets: &MomentVector,
    interval: Interval,
    grid_size: usize,
    weights: MomentWeights,
) -> Result<ReconstructionResult> {
    LpProblem::new(targets.clone(), interval, grid_size, weights.values(targets.k()))?.solve()
}

/// `C·((b−a)/k + 3^k (b−a)·gap)`.
pub fn kv_bound(k: usize, interval: Interval, moment_l2_gap: f64, c: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let w = interval.width();
    Ok(c * (w / k as f64 + 3f64.powi(k as i32) * w * moment_l2_gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeOptions {
    /// `k = ⌈c/ε⌉`.
    pub c: f64,
    /// Cap on the total number of walks across all moments.
    pub budget_cap: Option<u64>,
    /// Fail instead of truncating when the cap binds.
    pub strict: bool,
    pub weights: MomentWeights,
}

impl Default for SdeOptions {
    fn default() -> Self {
        Self { c: 2.0, budget_cap: None, strict: false, weights: MomentWeights::Uniform }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeReport {
    pub result: ReconstructionResult,
    pub moments: MomentVector,
    pub k: usize,
    pub target_delta: f64,
    pub walks_per_moment: u64,
    pub required_walks: u64,
    pub total_walks: u64,
    pub capped: bool,
}

/// Walks per moment needed for Hoeffding half-width `delta` across `k` moments.
pub fn walks_for_delta(k: usize, delta: f64) -> u64 {
    let w = (2.0 * k as f64 / FAILURE_PROBABILITY).ln() / (2.0 * delta * delta);
    if w >= u64::MAX as f64 {
        u64::MAX
    } else {
        w.ceil() as u64
    }
}

/// Estimates `k = ⌈c/ε⌉` moments from walks to additive accuracy
/// `2^{-k}·ε` and reconstructs on `[-1, 1]`.
pub fn sde_pipeline(graph: &WeightedGraph, eps: f64, options: SdeOptions, source: RandomSource) -> Result<SdeReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1/2), got {eps}")));
    }
    let k = (options.c / eps).ceil() as usize;
    if k == 0 || k > 60 {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..=60")));
    }
    let target_delta = 2f64.powi(-(k as i32)) * eps;
    let per_moment = walks_for_delta(k, target_delta);
    let required = per_moment.saturating_mul(k as u64);
    let (walks_per_moment, capped) = match options.budget_cap {
        Some(cap) if required > cap => {
            if options.strict {
                return Err(Error::BudgetExceeded { required, cap });
            }
            ((cap / k as u64).max(1), true)
        }
        _ => (per_moment, false),
    };
    let moments = estimate_moments_walks(graph, k, walks_per_moment, source)?;
    let result = solve_moment_lp(&moments, Interval::UNIT, default_grid_size(k, eps), options.weights)?;
    Ok(SdeReport {
        result,
        moments,
        k,
        target_delta,
        walks_per_moment,
        required_walks: required,
        total_walks: walks_per_moment * k as u64,
        capped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::moments::{exact_moments, Accuracy};
    use crate::spectrum::wasserstein1;

    fn exact(values: Vec<f64>) -> MomentVector {
        MomentVector::new(values, Accuracy::Exact).unwrap()
    }

    #[test]
    fn zero_moments_give_point_mass_at_origin() {
        let r = solve_moment_lp(&exact(vec![0.0; 4]), Interval::UNIT, 17, MomentWeights::Uniform).unwrap();
        assert!(r.residual <= 1e-12);
        assert_eq!(r.measure.atoms().len(), 1);
        assert!(r.measure.atoms()[0].0.abs() < 1e-15);
    }

    #[test]
    fn alternating_moments_give_symmetric_pair() {
        let r = solve_moment_lp(&exact(vec![0.0, 1.0, 0.0, 1.0]), Interval::UNIT, 17, MomentWeights::Uniform).unwrap();
        assert!(r.residual <= 1e-12);
        let a = r.measure.atoms();
        assert_eq!(a.len(), 2);
        assert!((a[0].0 + 1.0).abs() < 1e-15 && (a[1].0 - 1.0).abs() < 1e-15);
        assert!((a[0].1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn grid_contains_endpoints_and_center() {
        let g = uniform_grid(Interval::UNIT, 33);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[16], 0.0);
        assert_eq!(g[32], 1.0);
        assert_eq!(default_grid_size(8, 0.25), 33);
        assert_eq!(default_grid_size(2, 0.1), 80);
    }

    #[test]
    fn kv_bound_arithmetic() {
        assert!((kv_bound(10, Interval::UNIT, 0.0, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((kv_bound(4, Interval::UNIT, 0.01, 1.0).unwrap() - 2.12).abs() < 1e-12);
        assert!(kv_bound(0, Interval::UNIT, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_supported_measure_recovered_exactly() {
        let p = SpectralMeasure::new(vec![(-0.5, 0.25), (0.25, 0.5), (0.75, 0.25)], Interval::UNIT).unwrap();
        for w in [MomentWeights::Uniform, MomentWeights::Geometric] {
            let r = solve_moment_lp(&exact_moments(&p, 5).unwrap(), Interval::UNIT, 25, w).unwrap();
            assert!(r.residual <= 1e-9, "{}", r.residual);
        }
    }

    #[test]
    fn degenerate_recovery_on_fine_grid() {
        let grid = uniform_grid(Interval::UNIT, 33);
        let p = SpectralMeasure::new(vec![(grid[6], 0.3925), (grid[13], 0.6075)], Interval::UNIT).unwrap();
        let r = solve_moment_lp(&exact_moments(&p, 8).unwrap(), Interval::UNIT, 33, MomentWeights::Uniform).unwrap();
        assert!(r.residual <= 1e-9, "{}", r.residual);
    }

    #[test]
    fn masses_stay_normalized_on_refined_grids() {
        let p = SpectralMeasure::new(
            vec![(-0.5932, 0.2243), (-0.4425, 0.2009), (-0.3606, 0.1782), (-0.2847, 0.2267), (0.2251, 0.1699)],
            Interval::UNIT,
        )
        .unwrap();
        let targets = exact_moments(&p, 8).unwrap();
        for d in [33, 65, 129] {
            let r = solve_moment_lp(&targets, Interval::UNIT, d, MomentWeights::Uniform).unwrap();
            assert!((r.measure.total_mass() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn ill_conditioned_basis_on_fine_grid() {
        let p = SpectralMeasure::new(
            vec![
                (-0.03236362942087739, 0.25218353126184617),
                (0.04003252289788764, 0.5322834175390475),
                (0.6808352906684098, 0.005929337620633918),
                (0.7864975148235793, 0.20960371357847246),
            ],
            Interval::UNIT,
        )
        .unwrap();
        let targets = exact_moments(&p, 7).unwrap();
        let mut previous = f64::INFINITY;
        for d in [29, 57, 113] {
            let r = solve_moment_lp(&targets, Interval::UNIT, d, MomentWeights::Uniform).unwrap();
            assert!(r.residual <= previous + 1e-12);
            previous = r.residual;
        }
    }

    #[test]
    fn rejects_small_grids_and_bad_eps() {
        assert!(solve_moment_lp(&exact(vec![0.0; 4]), Interval::UNIT, 4, MomentWeights::Uniform).is_err());
        let g = build_graph(1, &[(1, 1, 1.0)]).unwrap();
        assert!(sde_pipeline(&g, 0.5, SdeOptions::default(), RandomSource::new(0)).is_err());
        assert!(sde_pipeline(&g, 0.0, SdeOptions::default(), RandomSource::new(0)).is_err());
    }

    #[test]
    fn self_loop_graph_reconstructs_to_one() {
        let g = build_graph(2, &[(1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let opts = SdeOptions { budget_cap: Some(10_000), ..SdeOptions::default() };
        let r = sde_pipeline(&g, 0.2, opts, RandomSource::new(1)).unwrap();
        assert!(r.capped);
        assert_eq!(r.k, 10);
        let truth = SpectralMeasure::dirac(1.0, Interval::UNIT).unwrap();
        assert_eq!(wasserstein1(&r.result.measure, &truth).unwrap(), 0.0);
        let strict = SdeOptions { strict: true, ..opts };
        assert!(matches!(
            sde_pipeline(&g, 0.2, strict, RandomSource::new(1)),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
