//! Dense two-phase simplex method for the small linear programs behind hull
//! membership and point-to-hull distances.
//!
//! Problems are in standard form: minimise `c·x` subject to `A x = b`, `x >= 0`.
//! Bland's rule is used throughout so the method cannot cycle.

use crate::error::{CredalError, Result};

/// Entries smaller than this in magnitude are never pivoted on.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Phase-one objective values above this mean the constraints are infeasible.
const FEASIBILITY_TOLERANCE: f64 = 1e-9;

const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub costs: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(costs: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if rows.len() != rhs.len() {
            return Err(CredalError::Lp(format!(
                "{} constraint rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != costs.len()) {
            return Err(CredalError::Lp(format!(
                "row of length {} for {} variables",
                r.len(),
                costs.len()
            )));
        }
        Ok(Self { costs, rows, rhs })
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let n = self.costs.len();
        let m = self.rows.len();
        let width = n + m + 1;
        let rhs_col = n + m;

        // Constraint rows with one artificial column each; rhs made nonnegative.
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        for (i, (row, &b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let mut t = vec![0.0; width];
            for (j, &a) in row.iter().enumerate() {
                t[j] = sign * a;
            }
            t[n + i] = 1.0;
            t[rhs_col] = sign * b;
            rows.push(t);
        }
        let mut tab = Tableau {
            rows,
            basis: (n..n + m).collect(),
            rhs_col,
        };

        // Phase one: minimise the sum of artificials.
        let mut obj = vec![0.0; width];
        for v in &mut obj[n..n + m] {
            *v = 1.0;
        }
        for row in &tab.rows[..m] {
            for (o, r) in obj.iter_mut().zip(row) {
                *o -= r;
            }
        }
        let all = vec![true; n + m];
        match tab.optimise(&mut obj, &all)? {
            Phase::Optimal => {}
            // The phase-one objective is bounded below by zero.
            Phase::Unbounded => return Err(CredalError::Lp("phase one unbounded".into())),
        }
        if -obj[rhs_col] > FEASIBILITY_TOLERANCE {
            return Ok(LpOutcome::Infeasible);
        }

        // Drive artificials out of the basis; rows that cannot be pivoted are redundant.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n {
                let col = (0..n).find(|&j| tab.rows[i][j].abs() > PIVOT_TOLERANCE);
                match col {
                    Some(j) => tab.pivot(i, j, &mut obj),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }

        // Phase two on the original costs, artificials barred from entering.
        let mut obj = vec![0.0; width];
        obj[..n].copy_from_slice(&self.costs);
        for (row, &b) in tab.rows.iter().zip(&tab.basis) {
            let cb = obj[b];
            if cb != 0.0 {
                for j in 0..width {
                    obj[j] -= cb * row[j];
                }
            }
        }
        let mut allowed = vec![true; n + m];
        for a in &mut allowed[n..] {
            *a = false;
        }
        if let Phase::Unbounded = tab.optimise(&mut obj, &allowed)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![0.0; n];
        for (row, &b) in tab.rows.iter().zip(&tab.basis) {
            if b < n {
                x[b] = row[rhs_col].max(0.0);
            }
        }
        let objective = self.costs.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, objective }))
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    rhs_col: usize,
}

impl Tableau {
    fn optimise(&mut self, obj: &mut [f64], allowed: &[bool]) -> Result<Phase> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed.len()).find(|&j| allowed[j] && obj[j] < -PIVOT_TOLERANCE);
            let Some(col) = entering else {
                return Ok(Phase::Optimal);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a > PIVOT_TOLERANCE {
                    let ratio = row[self.rhs_col] / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best || (ratio == best && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col, obj),
                None => return Ok(Phase::Unbounded),
            }
        }
        Err(CredalError::Lp(format!("no convergence after {MAX_PIVOTS} pivots")))
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let p = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> LpSolution {
        match lp.solve().unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_textbook_problem() {
        // max 3x + 2y st x + y <= 4, x + 3y <= 6  -> x = 4, y = 0, value 12
        let lp = LinearProgram::new(
            vec![-3.0, -2.0, 0.0, 0.0],
            vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]],
            vec![4.0, 6.0],
        )
        .unwrap();
        let s = optimal(&lp);
        assert!((s.objective + 12.0).abs() < 1e-12);
        assert!((s.x[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        // x + y = 1, x + y = 2
        let lp = LinearProgram::new(
            vec![0.0, 0.0],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            vec![1.0, 2.0],
        )
        .unwrap();
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x st x - y = 0
        let lp = LinearProgram::new(vec![-1.0, 0.0], vec![vec![1.0, -1.0]], vec![0.0]).unwrap();
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn handles_redundant_rows_and_negative_rhs() {
        // x + y = 1 twice, -x = -0.25 -> x = 0.25, y = 0.75
        let lp = LinearProgram::new(
            vec![1.0, 1.0],
            vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![-1.0, 0.0]],
            vec![1.0, 2.0, -0.25],
        )
        .unwrap();
        let s = optimal(&lp);
        assert!((s.x[0] - 0.25).abs() < 1e-12);
        assert!((s.x[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_ragged_input() {
        assert!(LinearProgram::new(vec![1.0, 2.0], vec![vec![1.0]], vec![1.0]).is_err());
        assert!(LinearProgram::new(vec![1.0], vec![vec![1.0]], vec![]).is_err());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Klee-Minty style degenerate vertex at the origin.
        let lp = LinearProgram::new(
            vec![-0.75, 20.0, -0.5, 6.0, 0.0, 0.0, 0.0],
            vec![
                vec![0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0],
                vec![0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            ],
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        let s = optimal(&lp);
        assert!((s.objective + 1.25).abs() < 1e-9);
    }
}
