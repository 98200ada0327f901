//! Chebyshev polynomials, the clipped antiderivative witness, and the
//! matched-moment pair built from cycle spectra.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::exact_moments;
use crate::spectrum::{ring_eigen_counts, wasserstein1, Interval, SpectralMeasure};

/// Largest `ℓ` for which monomial coefficients are used.
pub const MONOMIAL_CAP: usize = 15;

/// Polynomial in the monomial basis, `coeffs[i]` multiplying `x^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCoeffs(pub Vec<f64>);

impl PolyCoeffs {
    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn leading(&self) -> f64 {
        self.0[self.degree()]
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Antiderivative with zero constant term.
    pub fn integrate(&self) -> PolyCoeffs {
        let mut out = vec![0.0; self.0.len() + 1];
        for (i, &c) in self.0.iter().enumerate() {
            out[i + 1] = c / (i + 1) as f64;
        }
        PolyCoeffs(out)
    }
}

/// Monomial coefficients of `T_i` from `T_{i+1} = 2x T_i − T_{i−1}`.
pub fn chebyshev_t(i: usize) -> PolyCoeffs {
    let mut prev = vec![1.0];
    if i == 0 {
        return PolyCoeffs(prev);
    }
    let mut cur = vec![0.0, 1.0];
    for _ in 1..i {
        let mut next = vec![0.0; cur.len() + 1];
        for (k, &c) in cur.iter().enumerate() {
            next[k + 1] += 2.0 * c;
        }
        for (k, &c) in prev.iter().enumerate() {
            next[k] -= c;
        }
        prev = cur;
        cur = next;
    }
    PolyCoeffs(cur)
}

/// `T_i(x)` by the three-term recurrence.
pub fn chebyshev_eval(i: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if i == 0 {
        return prev;
    }
    for _ in 1..i {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `∫₀ˣ T_n(t) dt`, using `∫T_n = T_{n+1}/(2(n+1)) − T_{n−1}/(2(n−1))` for
/// `n ≥ 2`.
pub fn chebyshev_integral(n: usize, x: f64) -> f64 {
    let raw = |y: f64| match n {
        0 => y,
        1 => 0.5 * y * y,
        _ => {
            chebyshev_eval(n + 1, y) / (2.0 * (n + 1) as f64) - chebyshev_eval(n - 1, y) / (2.0 * (n - 1) as f64)
        }
    };
    raw(x) - raw(0.0)
}

/// `g_ℓ`: the antiderivative `f_ℓ = ∫ T_{ℓ−1}` (constant 0) held constant
/// outside `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzWitness {
    pub ell: usize,
}

impl LipschitzWitness {
    pub fn new(ell: usize) -> Result<Self> {
        if ell < 2 {
            return Err(Error::InvalidParameter(format!("witness needs ℓ >= 2, got {ell}")));
        }
        Ok(Self { ell })
    }

    /// `g_ℓ(x)` by recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        chebyshev_integral(self.ell - 1, x.clamp(-1.0, 1.0))
    }

    /// Monomial coefficients of `f_ℓ`; refuses beyond [`MONOMIAL_CAP`].
    pub fn coefficients(&self) -> Result<PolyCoeffs> {
        if self.ell > MONOMIAL_CAP {
            return Err(Error::InvalidParameter(format!(
                "monomial coefficients limited to ℓ <= {MONOMIAL_CAP}, got {}",
                self.ell
            )));
        }
        Ok(chebyshev_t(self.ell - 1).integrate())
    }
}

pub fn lipschitz_witness(ell: usize) -> Result<LipschitzWitness> {
    LipschitzWitness::new(ell)
}

fn check_odd(ell: usize) -> Result<()> {
    if ell < 3 || ell % 2 == 0 {
        return Err(Error::InvalidParameter(format!("ℓ must be odd and at least 3, got {ell}")));
    }
    Ok(())
}

/// `p` is the spectrum of two copies of `R_ℓ`; `q` is what remains of the
/// spectrum of `R_{2ℓ}` after removing one copy of `R_ℓ`'s eigenvalues.
pub fn kv_pair(ell: usize) -> Result<(SpectralMeasure, SpectralMeasure)> {
    check_odd(ell)?;
    let short = ring_eigen_counts(ell)?;
    let mut rest: BTreeMap<u64, (f64, usize)> =
        ring_eigen_counts(2 * ell)?.into_iter().map(|(v, c)| (v.to_bits(), (v, c))).collect();
    for (v, c) in &short {
        let entry = rest
            .get_mut(&v.to_bits())
            .ok_or_else(|| Error::Numerical(format!("eigenvalue {v} of R_ℓ missing from R_2ℓ")))?;
        entry.1 = entry.1.checked_sub(*c).ok_or_else(|| Error::Numerical("multiplicity underflow".into()))?;
    }
    let q: Vec<(f64, usize)> = rest.into_values().filter(|e| e.1 > 0).collect();
    Ok((SpectralMeasure::from_counts(&short, Interval::UNIT)?, SpectralMeasure::from_counts(&q, Interval::UNIT)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegBound {
    pub ell: usize,
    /// `2^ℓ · |m_ℓ(p) − m_ℓ(q)|`.
    pub c: f64,
    /// `c / (4ℓ)`.
    pub bound: f64,
    pub w1: f64,
    /// `|∫ g_ℓ d(p − q)|`.
    pub witness: f64,
}

/// Evaluates the lower bound `c/(4ℓ)` on `W1(p, q)` for measures whose first
/// `ℓ − 1` moments agree, along with the witness integral that realizes it.
pub fn verify_leg_bound(p: &SpectralMeasure, q: &SpectralMeasure, ell: usize) -> Result<LegBound> {
    let witness_fn = lipschitz_witness(ell)?;
    let mp = exact_moments(p, ell)?;
    let mq = exact_moments(q, ell)?;
    for j in 1..ell {
        let gap = (mp.get(j) - mq.get(j)).abs();
        if gap > 1e-10 {
            return Err(Error::Precondition(format!("moment {j} differs by {gap:e}")));
        }
    }
    let c = 2f64.powi(ell as i32) * (mp.get(ell) - mq.get(ell)).abs();
    let bound = c / (4.0 * ell as f64);
    let w1 = wasserstein1(p, q)?;
    let witness = (p.integrate(|x| witness_fn.eval(x)) - q.integrate(|x| witness_fn.eval(x))).abs();
    if witness > w1 + 1e-10 || bound > w1 + 1e-10 {
        return Err(Error::Numerical(format!("bound {bound} or witness {witness} exceeds W1 {w1}")));
    }
    Ok(LegBound { ell, c, bound, w1, witness })
}

/// `∫ f_ℓ d(p − q)` from the monomial coefficients and exact moments.
pub fn witness_from_moments(p: &SpectralMeasure, q: &SpectralMeasure, ell: usize) -> Result<f64> {
    let coeffs = lipschitz_witness(ell)?.coefficients()?;
    let k = coeffs.0.len() - 1;
    let (mp, mq) = (exact_moments(p, k)?, exact_moments(q, k)?);
    Ok((1..=k).map(|j| coeffs.0[j] * (mp.get(j) - mq.get(j))).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t3_coefficients_and_values() {
        let t3 = chebyshev_t(3);
        assert_eq!(t3.0, vec![0.0, -3.0, 0.0, 4.0]);
        assert_eq!(t3.leading(), 4.0);
        assert!((chebyshev_eval(3, 0.5) + 1.0).abs() < 1e-15);
        for i in 1..=20 {
            assert_eq!(chebyshev_t(i).leading(), 2f64.powi(i as i32 - 1));
        }
    }

    #[test]
    fn t7_bounded_on_grid() {
        let worst = (0..=10_000).map(|i| chebyshev_eval(7, -1.0 + 2.0 * i as f64 / 10_000.0).abs()).fold(0.0, f64::max);
        assert!(worst <= 1.0 + 1e-12);
    }

    #[test]
    fn witness_shape() {
        let f2 = lipschitz_witness(2).unwrap().coefficients().unwrap();
        assert_eq!(f2.0, vec![0.0, 0.0, 0.5]);
        for ell in 2..=15 {
            let f = lipschitz_witness(ell).unwrap().coefficients().unwrap();
            assert!((f.leading() - 2f64.powi(ell as i32 - 2) / ell as f64).abs() < 1e-12);
            assert_eq!(f.0[0], 0.0);
        }
        let g = lipschitz_witness(6).unwrap();
        assert_eq!(g.eval(1.0), g.eval(3.0));
        assert_eq!(g.eval(-1.0), g.eval(-7.5));
        assert!(lipschitz_witness(1).is_err());
        assert!(lipschitz_witness(16).unwrap().coefficients().is_err());
    }

    #[test]
    fn witness_is_one_lipschitz() {
        for ell in 2..=12 {
            let g = lipschitz_witness(ell).unwrap();
            let h = 2.0 / 10_000.0;
            let worst = (0..10_000)
                .map(|i| {
                    let x = -1.0 + h * i as f64;
                    (g.eval(x + h) - g.eval(x)).abs() / h
                })
                .fold(0.0, f64::max);
            assert!(worst <= 1.0 + 1e-9, "ℓ={ell}: {worst}");
        }
    }

    #[test]
    fn kv_pair_at_three() {
        let (p, q) = kv_pair(3).unwrap();
        let close = |a: &[(f64, f64)], b: &[(f64, f64)]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x.0 - y.0).abs() < 1e-12 && (x.1 - y.1).abs() < 1e-12)
        };
        assert!(close(p.atoms(), &[(-0.5, 2.0 / 3.0), (1.0, 1.0 / 3.0)]));
        assert!(close(q.atoms(), &[(-1.0, 1.0 / 3.0), (0.5, 2.0 / 3.0)]));
        let r = verify_leg_bound(&p, &q, 3).unwrap();
        assert!((r.c - 4.0).abs() < 1e-12);
        assert!((r.bound - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.w1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.witness - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kv_pairs_support_and_distance() {
        for ell in [3, 5, 7, 9, 11] {
            let (p, q) = kv_pair(ell).unwrap();
            assert_eq!(p.atoms().len(), (ell + 1) / 2);
            assert_eq!(q.atoms().len(), (ell + 1) / 2);
            assert!((wasserstein1(&p, &q).unwrap() - 2.0 / ell as f64).abs() < 1e-10);
            let r = verify_leg_bound(&p, &q, ell).unwrap();
            assert!(r.bound <= r.w1 + 1e-10);
        }
        assert!(kv_pair(4).is_err());
    }

    #[test]
    fn identical_measures_have_zero_bound() {
        let (p, _) = kv_pair(5).unwrap();
        let r = verify_leg_bound(&p, &p, 5).unwrap();
        assert_eq!(r.c, 0.0);
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn precondition_checked() {
        let (p, _) = kv_pair(5).unwrap();
        let d = SpectralMeasure::dirac(0.0, Interval::UNIT).unwrap();
        assert!(matches!(verify_leg_bound(&p, &d, 5), Err(Error::Precondition(_))));
    }
}
