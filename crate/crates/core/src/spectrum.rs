//! Spectral measures, closed-form spectra of cycles and hard instances, and
//! exact Wasserstein-1 distances on the line.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::linalg::{dense_symmetric_eigenvalues, dense_symmetric_eigenvalues_with_limit};

/// Atoms closer than this are treated as one eigenvalue.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Normalization tolerance on total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: -1.0, hi: 1.0 };
    pub const DIFFERENCE: Interval = Interval { lo: -2.0, hi: 2.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - MERGE_TOLERANCE && x <= self.hi + MERGE_TOLERANCE
    }
}

/// A finite probability measure: sorted `(value, mass)` atoms on an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
    interval: Interval,
}

impl SpectralMeasure {
    /// Sorts the atoms, merges values within [`MERGE_TOLERANCE`], and checks
    /// normalization and support.
    pub fn new(atoms: Vec<(f64, f64)>, interval: Interval) -> Result<Self> {
        let mut atoms = atoms;
        for &(v, m) in &atoms {
            if !v.is_finite() || !m.is_finite() || m <= 0.0 {
                return Err(Error::Measure(format!("invalid atom ({v}, {m})")));
            }
            if !interval.contains(v) {
                return Err(Error::Measure(format!("atom {v} outside [{}, {}]", interval.lo, interval.hi)));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let atoms = merge_sorted(atoms);
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Measure(format!("masses sum to {total}")));
        }
        Ok(Self { atoms, interval })
    }

    /// Uniform measure over a list of values (e.g. the eigenvalues of an
    /// `n`-vertex graph).
    pub fn from_values(values: &[f64], interval: Interval) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Measure("no values".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut counts: Vec<(f64, usize)> = Vec::new();
        for v in sorted {
            match counts.last_mut() {
                Some((first, c)) if (v - *first).abs() <= MERGE_TOLERANCE => *c += 1,
                _ => counts.push((v, 1)),
            }
        }
        Self::from_counts(&counts, interval)
    }

    /// Atoms with integer multiplicities; masses are `count / total`.
    pub fn from_counts(counts: &[(f64, usize)], interval: Interval) -> Result<Self> {
        let total: usize = counts.iter().map(|c| c.1).sum();
        if total == 0 {
            return Err(Error::Measure("empty multiset".into()));
        }
        let atoms = counts
            .iter()
            .filter(|c| c.1 > 0)
            .map(|&(v, c)| (v, c as f64 / total as f64))
            .collect();
        Self::new(atoms, interval)
    }

    /// Point mass at `x`.
    pub fn dirac(x: f64, interval: Interval) -> Result<Self> {
        Self::new(vec![(x, 1.0)], interval)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(v, m)| m * f(v)).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "value,mass")?;
        for (v, m) in &self.atoms {
            writeln!(out, "{v},{m}")?;
        }
        Ok(())
    }

    /// Reads the `value,mass` CSV. The support interval defaults to `[-1, 1]`
    /// widened to cover every atom.
    pub fn read_csv<R: BufRead>(input: R, interval: Option<Interval>) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut saw_header = false;
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            if !saw_header {
                if text.replace(' ', "") != "value,mass" {
                    return Err(Error::Parse { line: idx + 1, message: "expected header `value,mass`".into() });
                }
                saw_header = true;
                continue;
            }
            let mut it = text.split(',');
            let (Some(v), Some(m), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse { line: idx + 1, message: "expected `value,mass`".into() });
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })
            };
            atoms.push((parse(v)?, parse(m)?));
        }
        if !saw_header {
            return Err(Error::Parse { line: 0, message: "missing header".into() });
        }
        let interval = match interval {
            Some(i) => i,
            None => {
                let lo = atoms.iter().map(|a| a.0).fold(-1.0, f64::min);
                let hi = atoms.iter().map(|a| a.0).fold(1.0, f64::max);
                Interval { lo, hi }
            }
        };
        Self::new(atoms, interval)
    }
}

fn merge_sorted(atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, f64)> = Vec::with_capacity(atoms.len());
    for (v, m) in atoms {
        match out.last_mut() {
            Some((first, _, mass)) if (v - *first).abs() <= MERGE_TOLERANCE => *mass += m,
            _ => out.push((v, v, m)),
        }
    }
    out.into_iter().map(|(v, _, m)| (v, m)).collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `cos(π·num/den)` evaluated on the reduced fraction, so equal angles
/// written with different denominators yield bit-identical values.
fn cos_pi_fraction(num: usize, den: usize) -> f64 {
    let g = gcd(num, den).max(1);
    let (num, den) = (num / g, den / g);
    if num == 0 {
        return 1.0;
    }
    if num == den {
        return -1.0;
    }
    if 2 * num == den {
        return 0.0;
    }
    (std::f64::consts::PI * num as f64 / den as f64).cos()
}

/// Eigenvalue multiset of the normalized adjacency matrix of a cycle of
/// length `len ≥ 3`, as `(value, multiplicity)` in ascending order.
pub fn ring_eigen_counts(len: usize) -> Result<Vec<(f64, usize)>> {
    if len < 3 {
        return Err(Error::InvalidParameter(format!("cycle length {len} < 3")));
    }
    // eigenvalues cos(2πk/len), k = 0..len; k and len-k coincide
    let mut counts: Vec<(f64, usize)> = (0..=len / 2)
        .map(|k| {
            let mult = if k == 0 || 2 * k == len { 1 } else { 2 };
            (cos_pi_fraction(2 * k, len), mult)
        })
        .collect();
    counts.reverse();
    Ok(counts)
}

fn require_odd_ell(ell: usize) -> Result<()> {
    if ell < 3 || ell % 2 == 0 {
        return Err(Error::InvalidParameter(format!("ℓ must be odd and at least 3, got {ell}")));
    }
    Ok(())
}

/// Spectrum of the odd cycle `R_ℓ`: `cos(2kπ/ℓ)` twice for `0 < k < ℓ/2`
/// plus `1` once.
pub fn cycle_spectrum(ell: usize) -> Result<SpectralMeasure> {
    require_odd_ell(ell)?;
    SpectralMeasure::from_counts(&ring_eigen_counts(ell)?, Interval::UNIT)
}

/// Spectrum of the even cycle `R_{2ℓ}` given its length `2ℓ` with `ℓ` odd:
/// `cos(kπ/ℓ)` twice for `0 < k < ℓ` plus `±1` once each.
pub fn cycle_spectrum_even(len: usize) -> Result<SpectralMeasure> {
    if len % 2 != 0 {
        return Err(Error::InvalidParameter(format!("even cycle length expected, got {len}")));
    }
    require_odd_ell(len / 2)?;
    SpectralMeasure::from_counts(&ring_eigen_counts(len)?, Interval::UNIT)
}

/// Multiset of `copies` disjoint cycles of length `len`.
fn ring_family_counts(len: usize, copies: usize) -> Result<Vec<(f64, usize)>> {
    Ok(ring_eigen_counts(len)?.into_iter().map(|(v, c)| (v, c * copies)).collect())
}

/// Halves every ring eigenvalue, lifts one copy of the top eigenvalue to 1
/// (the all-ones direction picks up the overlay), and adds `extra_ones`
/// further eigenvalues at 1.
fn overlay_spectrum(ring: Vec<(f64, usize)>, extra_ones: usize) -> Result<SpectralMeasure> {
    let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    let mut push = |v: f64, c: usize| {
        if c > 0 {
            counts.entry(v.to_bits()).or_insert((v, 0)).1 += c;
        }
    };
    let top = ring.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    for (v, c) in ring {
        if v == top {
            push(0.5 * v, c - 1);
        } else {
            push(0.5 * v, c);
        }
    }
    push(1.0, 1 + extra_ones);
    let list: Vec<(f64, usize)> = counts.into_values().collect();
    SpectralMeasure::from_counts(&list, Interval::UNIT)
}

/// Closed-form spectra of the moment hard pair: `2n` rings of length `ℓ`
/// (first) or `n` rings of length `2ℓ` (second), ring weight 1/4, overlay
/// weight `1/(4nℓ)`, plus `2nℓ` self-loop vertices.
pub fn mom_instance_spectrum(ell: usize, n: usize) -> Result<(SpectralMeasure, SpectralMeasure)> {
    require_odd_ell(ell)?;
    require_positive(n)?;
    let iso = 2 * n * ell;
    Ok((
        overlay_spectrum(ring_family_counts(ell, 2 * n)?, iso)?,
        overlay_spectrum(ring_family_counts(2 * ell, n)?, iso)?,
    ))
}

/// Closed-form spectra of the random-walk hard pair (no self-loop block).
pub fn rw_instance_spectrum(ell: usize, n: usize) -> Result<(SpectralMeasure, SpectralMeasure)> {
    require_odd_ell(ell)?;
    require_positive(n)?;
    Ok((
        overlay_spectrum(ring_family_counts(ell, 2 * n)?, 0)?,
        overlay_spectrum(ring_family_counts(2 * ell, n)?, 0)?,
    ))
}

fn require_positive(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(())
}

/// Number of long (`2ℓ`) and short (`ℓ`) cycles for the mixture pair.
pub fn mixture_cycle_counts(alpha: f64, n: usize) -> Result<[(usize, usize); 2]> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("α must lie in (0.5, 1), got {alpha}")));
    }
    let an = alpha * n as f64;
    let rounded = an.round();
    if (an - rounded).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("αn = {an} is not an integer")));
    }
    let a = rounded as usize;
    let b = n - a;
    Ok([(a, 2 * b), (b, 2 * a)])
}

/// Spectra of the unweighted cycle mixtures: the first graph has `αn` cycles
/// of length `2ℓ` and `2(1-α)n` of length `ℓ`; the second swaps the roles of
/// `α` and `1-α`.
pub fn mixture_spectrum(ell: usize, alpha: f64, n: usize) -> Result<(SpectralMeasure, SpectralMeasure)> {
    require_odd_ell(ell)?;
    let counts = mixture_cycle_counts(alpha, n)?;
    let build = |(long, short): (usize, usize)| -> Result<SpectralMeasure> {
        let mut all: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
        for (v, c) in ring_family_counts(2 * ell, long)?.into_iter().chain(ring_family_counts(ell, short)?) {
            if c > 0 {
                all.entry(v.to_bits()).or_insert((v, 0)).1 += c;
            }
        }
        SpectralMeasure::from_counts(&all.into_values().collect::<Vec<_>>(), Interval::UNIT)
    };
    Ok((build(counts[0])?, build(counts[1])?))
}

/// Exact `W1` on the line: `∫ |F_p − F_q| dx` over the merged support.
pub fn wasserstein1(p: &SpectralMeasure, q: &SpectralMeasure) -> Result<f64> {
    for m in [p, q] {
        let total = m.total_mass();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Measure(format!("unnormalized measure (mass {total})")));
        }
    }
    let (a, b) = (p.atoms(), q.atoms());
    let (mut i, mut j) = (0, 0);
    let (mut fp, mut fq) = (0.0f64, 0.0f64);
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(u), Some(v)) => u.0.min(v.0),
            (Some(u), None) => u.0,
            (None, Some(v)) => v.0,
            (None, None) => unreachable!(),
        };
        if let Some(px) = prev {
            total += (fp - fq).abs() * (x - px);
        }
        while i < a.len() && a[i].0 == x {
            fp += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == x {
            fq += b[j].1;
            j += 1;
        }
        prev = Some(x);
    }
    Ok(total)
}

/// `(1/n)·‖λ₁ − λ₂‖₁` for equal-length ascending eigenvalue lists.
pub fn wasserstein1_eigs(first: &[f64], second: &[f64]) -> Result<f64> {
    if first.len() != second.len() {
        return Err(Error::InvalidParameter(format!("length mismatch {} vs {}", first.len(), second.len())));
    }
    if first.is_empty() {
        return Err(Error::InvalidParameter("empty eigenvalue lists".into()));
    }
    for list in [first, second] {
        if list.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("eigenvalues must be sorted ascending".into()));
        }
    }
    let sum: f64 = first.iter().zip(second).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / first.len() as f64)
}

/// Ascending eigenvalue list expanded from integer multiplicities.
pub fn expand_counts(counts: &[(f64, usize)]) -> Vec<f64> {
    let mut out: Vec<f64> = counts.iter().flat_map(|&(v, c)| std::iter::repeat_n(v, c)).collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cycle_five() {
        let s = cycle_spectrum(5).unwrap();
        let want = [(-0.809017, 0.4), (0.309017, 0.4), (1.0, 0.2)];
        assert_eq!(s.atoms().len(), 3);
        for ((v, m), (wv, wm)) in s.atoms().iter().zip(want) {
            assert!(close(*v, wv, 1e-6) && close(*m, wm, 1e-15));
        }
    }

    #[test]
    fn cycle_six() {
        let s = cycle_spectrum_even(6).unwrap();
        let want = [(-1.0, 1.0 / 6.0), (-0.5, 2.0 / 6.0), (0.5, 2.0 / 6.0), (1.0, 1.0 / 6.0)];
        assert_eq!(s.atoms().len(), 4);
        for ((v, m), (wv, wm)) in s.atoms().iter().zip(want) {
            assert!(close(*v, wv, 1e-15) && close(*m, wm, 1e-15), "{v} {m}");
        }
    }

    #[test]
    fn cycle_parameter_errors() {
        assert!(cycle_spectrum(4).is_err());
        assert!(cycle_spectrum(1).is_err());
        assert!(cycle_spectrum_even(7).is_err());
        assert!(cycle_spectrum_even(8).is_err());
        assert!(mom_instance_spectrum(6, 1).is_err());
        assert!(rw_instance_spectrum(5, 0).is_err());
    }

    #[test]
    fn cycle_masses_and_support() {
        for ell in (3..60).step_by(2) {
            for s in [cycle_spectrum(ell).unwrap(), cycle_spectrum_even(2 * ell).unwrap()] {
                assert!(close(s.total_mass(), 1.0, 1e-12));
                assert!(s.atoms().iter().all(|a| a.0 >= -1.0 && a.0 <= 1.0));
            }
        }
    }

    #[test]
    fn cycle_pair_distance_is_one_over_ell() {
        for ell in [3, 5, 7, 9, 11, 101] {
            let w = wasserstein1(&cycle_spectrum(ell).unwrap(), &cycle_spectrum_even(2 * ell).unwrap()).unwrap();
            assert!(close(w, 1.0 / ell as f64, 1e-10), "ℓ={ell}: {w}");
        }
    }

    #[test]
    fn identical_measures_have_zero_distance() {
        let s = cycle_spectrum(7).unwrap();
        assert_eq!(wasserstein1(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn appendix_pair_at_three_by_cdf() {
        // F_p − F_q over [-1,-0.5], [-0.5,0.5], [0.5,1]: |0−1/3|, |2/3−1/3|, |2/3−1|
        let p = SpectralMeasure::new(vec![(-0.5, 2.0 / 3.0), (1.0, 1.0 / 3.0)], Interval::UNIT).unwrap();
        let q = SpectralMeasure::new(vec![(-1.0, 1.0 / 3.0), (0.5, 2.0 / 3.0)], Interval::UNIT).unwrap();
        let hand = 0.5 * (1.0 / 3.0) + 1.0 * (1.0 / 3.0) + 0.5 * (1.0 / 3.0);
        assert!(close(hand, 2.0 / 3.0, 1e-15));
        assert!(close(wasserstein1(&p, &q).unwrap(), hand, 1e-15));
    }

    #[test]
    fn eigenvalue_list_distance() {
        let a = expand_counts(&ring_family_counts(3, 2).unwrap());
        let b = expand_counts(&ring_eigen_counts(6).unwrap());
        assert_eq!(a.len(), 6);
        assert!(close(wasserstein1_eigs(&a, &b).unwrap(), 1.0 / 3.0, 1e-15));
        assert_eq!(wasserstein1_eigs(&a, &a).unwrap(), 0.0);
        assert!(wasserstein1_eigs(&a, &b[..5]).is_err());
        assert!(wasserstein1_eigs(&[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn mom_pair_closed_form() {
        for ell in [5, 7, 9] {
            let (p1, p2) = mom_instance_spectrum(ell, 3).unwrap();
            let w = wasserstein1(&p1, &p2).unwrap();
            assert!(close(w, 1.0 / (4.0 * ell as f64), 1e-10));
        }
        let (p1, _) = mom_instance_spectrum(5, 8).unwrap();
        let top = p1.atoms().last().unwrap();
        assert_eq!(top.0, 1.0);
        assert!(close(top.1, 81.0 / 160.0, 1e-15));
        assert!(p1.atoms()[0].0 >= -0.5);
    }

    #[test]
    fn rw_pair_closed_form() {
        for ell in [5, 7, 9] {
            let (p1, p2) = rw_instance_spectrum(ell, 4).unwrap();
            assert!(close(wasserstein1(&p1, &p2).unwrap(), 1.0 / (2.0 * ell as f64), 1e-10));
            for p in [&p1, &p2] {
                let ones: Vec<_> = p.atoms().iter().filter(|a| a.0 == 1.0).collect();
                assert_eq!(ones.len(), 1);
                assert!(close(ones[0].1, 1.0 / (8.0 * ell as f64), 1e-15));
            }
        }
    }

    #[test]
    fn mixture_pair_closed_form() {
        let (p1, p2) = mixture_spectrum(3, 0.75, 4).unwrap();
        assert!(close(wasserstein1(&p1, &p2).unwrap(), 1.0 / 6.0, 1e-12));
        assert!(mixture_spectrum(3, 1.0, 4).is_err());
        assert!(mixture_spectrum(3, 0.7, 4).is_err());
        assert!(mixture_spectrum(4, 0.75, 4).is_err());
    }

    #[test]
    fn measure_validation() {
        assert!(SpectralMeasure::new(vec![(0.0, 0.5)], Interval::UNIT).is_err());
        assert!(SpectralMeasure::new(vec![(2.0, 1.0)], Interval::UNIT).is_err());
        assert!(SpectralMeasure::new(vec![(0.0, -1.0), (0.5, 2.0)], Interval::UNIT).is_err());
        let m = SpectralMeasure::new(vec![(0.5, 0.25), (0.0, 0.5), (0.5 + 1e-12, 0.25)], Interval::UNIT).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert_eq!(m.atoms()[0].0, 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let (p, _) = mom_instance_spectrum(7, 3).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"value,mass\n"));
        let back = SpectralMeasure::read_csv(buf.as_slice(), None).unwrap();
        assert_eq!(back.atoms().len(), p.atoms().len());
        for (a, b) in back.atoms().iter().zip(p.atoms()) {
            assert!(close(a.0, b.0, 1e-15) && close(a.1, b.1, 1e-15));
        }
        assert!(SpectralMeasure::read_csv("v,m\n0,1\n".as_bytes(), None).is_err());
        assert!(SpectralMeasure::read_csv("value,mass\n0;1\n".as_bytes(), None).is_err());
    }
}
