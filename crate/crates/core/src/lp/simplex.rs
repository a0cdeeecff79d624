//! Dense two-phase simplex for `min cᵀx  s.t.  A x = b, x >= 0`.
//!
//! Bland's rule (lowest eligible index enters, lowest basic index leaves on
//! ties) rules out cycling. Intended for a few hundred variables at most.

use crate::error::{PmechError, Result};

const EPS: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a -= f * b);
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            obj.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a -= f * b);
        }
        self.basis[r] = c;
    }

    /// Iterates until optimal; columns `>= allowed` never enter.
    fn run(&mut self, obj: &mut [f64], allowed: usize, max_pivots: usize) -> Result<usize> {
        let rhs = self.cols;
        let mut pivots = 0;
        loop {
            let Some(enter) = (0..allowed).find(|&j| obj[j] < -EPS) else {
                return Ok(pivots);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[enter] > EPS {
                    let ratio = row[rhs] / row[enter];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - EPS
                                || ((ratio - lr).abs() <= EPS && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(PmechError::Solver("linear program is unbounded".into()));
            };
            self.pivot(obj, r, enter);
            pivots += 1;
            if pivots > max_pivots {
                return Err(PmechError::Solver(format!(
                    "simplex exceeded {max_pivots} pivots"
                )));
            }
        }
    }
}

/// Minimizes `cᵀx` over `{x >= 0 : A x = b}`.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(PmechError::Solver("inconsistent LP dimensions".into()));
    }
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        let mut r: Vec<f64> = row.iter().map(|v| sign * v).collect();
        r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        r.push(sign * rhs);
        rows.push(r);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..cols).collect(),
        cols,
    };
    let max_pivots = 50 * (cols + 10);

    // phase I: minimize the sum of artificials
    let mut obj = vec![0.0; cols + 1];
    for row in &tab.rows {
        for j in 0..n {
            obj[j] -= row[j];
        }
        obj[cols] -= row[cols];
    }
    let mut pivots = tab.run(&mut obj, n, max_pivots)?;
    let infeasibility = -obj[cols];
    if infeasibility > 1e-9 {
        return Err(PmechError::Solver(format!(
            "linear program is infeasible (phase-one residual {infeasibility:.3e})"
        )));
    }

    // drive remaining artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| tab.rows[r][j].abs() > 1e-9) {
                Some(j) => {
                    let mut dummy = vec![0.0; cols + 1];
                    tab.pivot(&mut dummy, r, j);
                    pivots += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // phase II
    let mut obj = vec![0.0; cols + 1];
    obj[..n].copy_from_slice(c);
    for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
        let cb = c[bv];
        if cb != 0.0 {
            obj.iter_mut().zip(row).for_each(|(o, v)| *o -= cb * v);
        }
    }
    pivots += tab.run(&mut obj, n, max_pivots)?;

    let mut x = vec![0.0; n];
    for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
        x[bv] = row[cols].max(0.0);
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // min -x - y  s.t.  x + 2y + s1 = 4, 3x + y + s2 = 6
        let c = [-1.0, -1.0, 0.0, 0.0];
        let a = vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]];
        let sol = minimize(&c, &a, &[4.0, 6.0]).unwrap();
        assert!((sol.objective + 2.8).abs() < 1e-9, "{sol:?}");
        assert!((sol.x[0] - 1.6).abs() < 1e-9 && (sol.x[1] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![1.0, 1.0]];
        assert!(minimize(&[1.0, 1.0], &a, &[-1.0]).is_err());
        let a = vec![vec![1.0, -1.0]];
        assert!(minimize(&[-1.0, 0.0], &a, &[1.0]).is_err());
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
        let sol = minimize(&[3.0, 1.0, 2.0], &a, &[1.0, 2.0]).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale-style degenerate instance
        let c = [-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0];
        let a = vec![
            vec![0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0],
            vec![0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ];
        let sol = minimize(&c, &a, &[0.0, 0.0, 1.0]).unwrap();
        assert!((sol.objective + 0.05).abs() < 1e-9, "{sol:?}");
    }
}
