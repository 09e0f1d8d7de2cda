//! Dense two-phase primal simplex for `A x = b, x >= 0`.
//!
//! Bland's rule is used for both the entering and leaving variable so the
//! method terminates on degenerate problems. Infeasible problems return a
//! Farkas witness `w` with `w^T A >= 0` and `w^T b < 0`.

use crate::error::{check_len, Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
/// Tolerance for re-checking returned points and witnesses.
pub const VERIFY_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 200_000;

/// `min c^T x` subject to `A x = b`, `x >= 0`. Without an objective only
/// feasibility is decided.
#[derive(Debug, Clone)]
pub struct LpProblem {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible { witness: Vec<f64> },
    Unbounded,
}

impl LpProblem {
    /// `a` is row-major with `b.len()` rows.
    pub fn new(a: Vec<f64>, b: Vec<f64>, cols: usize) -> Result<Self> {
        let rows = b.len();
        check_len(rows * cols, a.len())?;
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite LP data".into()));
        }
        Ok(LpProblem { rows, cols, a, b, c: None })
    }

    pub fn with_objective(mut self, c: Vec<f64>) -> Result<Self> {
        check_len(self.cols, c.len())?;
        self.c = Some(c);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    /// Largest violation of `A x = b` and `x >= 0`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |m, v| m.max(-v));
        for i in 0..self.rows {
            let lhs: f64 = self.row(i).iter().zip(x).map(|(a, x)| a * x).sum();
            worst = worst.max((lhs - self.b[i]).abs());
        }
        worst
    }

    /// Returns `(min_j (w^T A)_j, w^T b)`.
    pub fn witness_values(&self, w: &[f64]) -> (f64, f64) {
        let mut min_col = f64::INFINITY;
        for j in 0..self.cols {
            let v: f64 = (0..self.rows).map(|i| w[i] * self.a[i * self.cols + j]).sum();
            min_col = min_col.min(v);
        }
        let wb = w.iter().zip(&self.b).map(|(w, b)| w * b).sum();
        (min_col, wb)
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let out = Tableau::new(self).run(self.c.as_deref())?;
        match &out {
            LpOutcome::Optimal { x, .. } => {
                let r = self.residual(x);
                if r > VERIFY_TOL {
                    return Err(Error::Numerical(format!("LP point fails verification (residual {r:e})")));
                }
            }
            LpOutcome::Infeasible { witness } => {
                let (min_col, wb) = self.witness_values(witness);
                if min_col < -VERIFY_TOL || wb > -VERIFY_TOL {
                    return Err(Error::Numerical(format!(
                        "Farkas witness fails verification (min wA = {min_col:e}, wb = {wb:e})"
                    )));
                }
            }
            LpOutcome::Unbounded => {}
        }
        Ok(out)
    }
}

struct Tableau {
    m: usize,
    n: usize,
    /// `m` rows of `n + m + 1` entries: original columns, artificials, rhs.
    t: Vec<f64>,
    basis: Vec<usize>,
    flipped: Vec<bool>,
}

impl Tableau {
    fn new(p: &LpProblem) -> Self {
        let (m, n) = (p.rows, p.cols);
        let w = n + m + 1;
        let mut t = vec![0.0; m * w];
        let mut flipped = vec![false; m];
        for i in 0..m {
            let sign = if p.b[i] < 0.0 { -1.0 } else { 1.0 };
            flipped[i] = sign < 0.0;
            for (j, a) in p.row(i).iter().enumerate() {
                t[i * w + j] = sign * a;
            }
            t[i * w + n + i] = 1.0;
            t[i * w + n + m] = sign * p.b[i];
        }
        Tableau { m, n, t, basis: (n..n + m).collect(), flipped }
    }

    fn width(&self) -> usize {
        self.n + self.m + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.n + self.m)
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width();
        let pv = self.t[r * w + col];
        for j in 0..w {
            self.t[r * w + j] /= pv;
        }
        self.t[r * w + col] = 1.0;
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + col];
            if f != 0.0 {
                for (dst, src) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *dst -= f * src;
                }
                self.t[i * w + col] = 0.0;
            }
        }
        self.basis[r] = col;
    }

    /// Minimises `cost` over the allowed columns from the current basis.
    /// Returns false when unbounded.
    fn optimise(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        for _ in 0..MAX_ITERATIONS {
            let cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let z: f64 = (0..self.m).map(|i| cb[i] * self.at(i, j)).sum();
                cost[j] - z < -COST_TOL
            });
            let Some(col) = entering else { return Ok(true) };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else { return Ok(false) };
            self.pivot(r, col);
        }
        Err(Error::NonConvergence("simplex iteration limit reached".into()))
    }

    /// Row vector `c_B^T B^{-1}`, read off the artificial columns.
    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi += cb * self.at(r, self.n + i);
                }
            }
        }
        y
    }

    fn run(mut self, objective: Option<&[f64]>) -> Result<LpOutcome> {
        let (m, n) = (self.m, self.n);
        let mut phase1 = vec![0.0; n + m];
        phase1[n..].iter_mut().for_each(|c| *c = 1.0);
        self.optimise(&phase1, n + m)?;
        let infeasibility: f64 = (0..m).filter(|&r| self.basis[r] >= n).map(|r| self.rhs(r)).sum();
        let scale = 1.0 + (0..m).map(|r| self.rhs(r).abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            let y = self.duals(&phase1);
            let mut witness: Vec<f64> = y
                .iter()
                .zip(&self.flipped)
                .map(|(yi, f)| if *f { *yi } else { -yi })
                .collect();
            let norm = witness.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            witness.iter_mut().for_each(|v| *v /= norm);
            return Ok(LpOutcome::Infeasible { witness });
        }
        // Drive remaining artificials out of the basis where possible;
        // rows where that fails are redundant.
        for r in 0..m {
            if self.basis[r] >= n {
                if let Some(j) = (0..n).find(|&j| !self.basis.contains(&j) && self.at(r, j).abs() > 1e-9) {
                    self.pivot(r, j);
                }
            }
        }
        let mut cost = vec![0.0; n + m];
        if let Some(c) = objective {
            cost[..n].copy_from_slice(c);
            if !self.optimise(&cost, n)? {
                return Ok(LpOutcome::Unbounded);
            }
        }
        let mut x = vec![0.0; n];
        for r in 0..m {
            if self.basis[r] < n {
                x[self.basis[r]] = self.rhs(r).max(0.0);
            }
        }
        let value = objective.map_or(0.0, |c| c.iter().zip(&x).map(|(c, x)| c * x).sum());
        Ok(LpOutcome::Optimal { x, objective: value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_equality() {
        let p = LpProblem::new(vec![1.0], vec![1.0], 1).unwrap();
        assert_eq!(p.solve().unwrap(), LpOutcome::Optimal { x: vec![1.0], objective: 0.0 });
    }

    #[test]
    fn simplex_with_conflicting_coordinate() {
        // x1 + x2 = 1, x1 = 2
        let p = LpProblem::new(vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 2.0], 2).unwrap();
        match p.solve().unwrap() {
            LpOutcome::Infeasible { witness } => {
                let (min_col, wb) = p.witness_values(&witness);
                assert!(min_col >= -1e-12 && wb < 0.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_witness_sign() {
        // x = -1 has no nonnegative solution.
        let p = LpProblem::new(vec![1.0], vec![-1.0], 1).unwrap();
        let LpOutcome::Infeasible { witness } = p.solve().unwrap() else { panic!() };
        let (min_col, wb) = p.witness_values(&witness);
        assert!(min_col >= 0.0 && wb < 0.0);
    }

    #[test]
    fn small_minimisation() {
        // min -x1 - 2 x2 with x1 + x2 + s = 4, x2 + t = 3
        let a = vec![1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let p = LpProblem::new(a, vec![4.0, 3.0], 4)
            .unwrap()
            .with_objective(vec![-1.0, -2.0, 0.0, 0.0])
            .unwrap();
        let LpOutcome::Optimal { x, objective } = p.solve().unwrap() else { panic!() };
        assert!((objective + 7.0).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        // min -x1 with x1 - x2 = 0
        let p = LpProblem::new(vec![1.0, -1.0], vec![0.0], 2)
            .unwrap()
            .with_objective(vec![-1.0, 0.0])
            .unwrap();
        assert_eq!(p.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_tolerated() {
        let a = vec![1.0, 1.0, 2.0, 2.0];
        let p = LpProblem::new(a, vec![1.0, 2.0], 2).unwrap();
        assert!(matches!(p.solve().unwrap(), LpOutcome::Optimal { .. }));
    }
}
