//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Solves `min cᵀx` subject to `Ax = b`, `x ≥ 0`. Intended for the small
//! problems of moment matching (a few hundred columns at most).

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
/// Smallest pivot accepted when rebuilding the tableau.
const SINGULAR_TOL: f64 = 1e-14;
const COST_TOL: f64 = 1e-11;
/// Entries below this magnitude after reinversion are treated as zero.
const ZERO_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200_000;
/// Pivots between rebuilds of the tableau from the original data.
const REINVERT_EVERY: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub costs: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    /// Phase-one system `[A | I | b]`, rows sign-normalized so `b ≥ 0`.
    original: Vec<Vec<f64>>,
    /// Original row behind each tableau row.
    row_ids: Vec<usize>,
    // rows × (cols + 1); last column is the right-hand side
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    iterations: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.cells[row][col];
        for v in self.cells[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (r, line) in self.cells.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col];
            if f != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                line[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.iterations += 1;
    }

    /// Recomputes `B⁻¹[A | I | b]` for the current basis by Gaussian
    /// elimination with partial pivoting, discarding accumulated round-off.
    /// A numerically singular basis leaves the tableau as it was and
    /// returns false.
    fn reinvert(&mut self) -> bool {
        let m = self.basis.len();
        let width = self.cols + 1;
        let mut rows: Vec<Vec<f64>> = self.row_ids.iter().map(|&r| self.original[r].clone()).collect();
        // row i of the result must carry the unit column of basis[i]
        for (i, &col) in self.basis.iter().enumerate() {
            let best = (i..m)
                .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
                .expect("nonempty range");
            if rows[best][col].abs() < SINGULAR_TOL {
                return false;
            }
            rows.swap(i, best);
            let p = rows[i][col];
            for v in rows[i].iter_mut() {
                *v /= p;
            }
            let pivot_row = rows[i].clone();
            for (r, line) in rows.iter_mut().enumerate() {
                let f = line[col];
                if r != i && f != 0.0 {
                    for (v, pv) in line.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    line[col] = 0.0;
                }
            }
        }
        for line in rows.iter_mut() {
            for v in line.iter_mut() {
                if v.abs() < ZERO_TOL {
                    *v = 0.0;
                }
            }
            if line[width - 1] < 0.0 {
                line[width - 1] = 0.0;
            }
        }
        self.cells = rows;
        true
    }

    fn reduced_costs(&self, costs: &[f64], allowed: usize) -> Vec<f64> {
        let mut r = costs[..allowed].to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for (j, rj) in r.iter_mut().enumerate() {
                    *rj -= cb * self.cells[i][j];
                }
            }
        }
        r
    }

    /// Runs Bland-rule iterations over columns `< allowed`. Optimality is
    /// only accepted right after a rebuild attempt.
    fn optimize(&mut self, costs: &[f64], allowed: usize) -> Result<()> {
        let rhs = self.cols;
        let mut since_reinvert = 0;
        loop {
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::Numerical(format!("simplex stalled after {} pivots", self.iterations)));
            }
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                since_reinvert = 0;
            }
            let r = self.reduced_costs(costs, allowed);
            let Some(enter) = (0..allowed).find(|&j| r[j] < -COST_TOL) else {
                if since_reinvert == 0 {
                    return Ok(());
                }
                since_reinvert = REINVERT_EVERY;
                continue;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.cells.len() {
                let a = self.cells[i][enter];
                if a > PIVOT_TOL {
                    let ratio = self.cells[i][rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Numerical("linear program is unbounded".into()));
            };
            self.pivot(row, enter);
            since_reinvert += 1;
        }
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution> {
        let m = self.rows.len();
        let n = self.costs.len();
        if self.rhs.len() != m || self.rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("inconsistent linear program dimensions".into()));
        }
        let values = self.costs.iter().chain(self.rhs.iter()).chain(self.rows.iter().flatten());
        if values.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite linear program data".into()));
        }

        // phase 1: artificial columns n..n+m
        let cols = n + m;
        let mut original = Vec::with_capacity(m);
        for (i, (row, &b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let mut line: Vec<f64> = row.iter().map(|v| sign * v).collect();
            line.resize(cols + 1, 0.0);
            line[n + i] = 1.0;
            line[cols] = sign * b;
            original.push(line);
        }
        let mut t = Tableau {
            cells: original.clone(),
            original,
            row_ids: (0..m).collect(),
            basis: (n..n + m).collect(),
            cols,
            iterations: 0,
        };
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(n) {
            *c = 1.0;
        }
        t.optimize(&phase1, cols)?;
        let infeasibility: f64 = t.basis.iter().enumerate().filter(|(_, &b)| b >= n).map(|(i, _)| t.cells[i][cols]).sum();
        let scale = 1.0 + self.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Err(Error::Numerical(format!("linear program is infeasible (phase one residual {infeasibility:e})")));
        }

        // drive remaining artificials out; drop redundant rows
        let mut i = 0;
        while i < t.cells.len() {
            if t.basis[i] >= n {
                match (0..n).find(|&j| t.cells[i][j].abs() > 1e-9) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.cells.remove(i);
                        t.basis.remove(i);
                        t.row_ids.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        t.reinvert();

        let mut phase2 = self.costs.clone();
        phase2.resize(cols, 0.0);
        t.optimize(&phase2, n)?;

        let mut x = vec![0.0; n];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.cells[i][cols].max(0.0);
            }
        }
        let objective = self.costs.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective, iterations: t.iterations })
    }
}
