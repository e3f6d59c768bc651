//! Dense linear algebra helpers.
//!
//! Everything in this crate solves small (desk-scale) square systems, so a
//! plain LU factorization with partial pivoting is the whole toolbox.  The
//! `solve_refined` entry point performs one pass of iterative refinement when
//! the residual exceeds the caller's budget.

use crate::error::{Error, Result};

/// LU factors of a square matrix, with row pivots.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factor `a` (row-major, n x n) as P*A = L*U.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();

        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = lu[col * n + col].abs();
            for row in (col + 1)..n {
                let v = lu[row * n + col].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if pivot_val == 0.0 {
                return Err(Error::SingularSystem);
            }
            if pivot_row != col {
                for k in 0..n {
                    lu.swap(col * n + k, pivot_row * n + k);
                }
                perm.swap(col, pivot_row);
            }
            let inv_pivot = 1.0 / lu[col * n + col];
            for row in (col + 1)..n {
                let factor = lu[row * n + col] * inv_pivot;
                lu[row * n + col] = factor;
                for k in (col + 1)..n {
                    lu[row * n + k] -= factor * lu[col * n + k];
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward substitution with unit lower triangle
        for row in 1..n {
            let mut acc = x[row];
            for (col, &xc) in x.iter().enumerate().take(row) {
                acc -= self.lu[row * n + col] * xc;
            }
            x[row] = acc;
        }
        // back substitution
        for row in (0..n).rev() {
            let mut acc = x[row];
            for (col, &xc) in x.iter().enumerate().skip(row + 1) {
                acc -= self.lu[row * n + col] * xc;
            }
            x[row] = acc / self.lu[row * n + row];
        }
        x
    }
}

/// Residual b - A x in the infinity norm.
pub fn residual_inf(a: &[f64], n: usize, x: &[f64], b: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for row in 0..n {
        let mut acc = b[row];
        for col in 0..n {
            acc -= a[row * n + col] * x[col];
        }
        worst = worst.max(acc.abs());
    }
    worst
}

/// Solve A x = b; if the residual exceeds `budget`, run one refinement pass.
///
/// Returns the solution and its final residual.  Degenerate systems surface
/// as `SingularSystem`.
pub fn solve_refined(a: &[f64], n: usize, b: &[f64], budget: f64) -> Result<(Vec<f64>, f64)> {
    let lu = DenseLu::factor(a, n)?;
    let mut x = lu.solve(b);
    let mut res = residual_inf(a, n, &x, b);
    if res > budget {
        let mut defect = vec![0.0; n];
        for row in 0..n {
            let mut acc = b[row];
            for col in 0..n {
                acc -= a[row * n + col] * x[col];
            }
            defect[row] = acc;
        }
        let correction = lu.solve(&defect);
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
        res = residual_inf(a, n, &x, b);
    }
    Ok((x, res))
}

/// Row-vector times matrix: y = x A (A row-major n x n, x length n).
pub fn vec_mat(x: &[f64], a: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for (row, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for col in 0..n {
            y[col] += xi * a[row * n + col];
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_system() {
        // [[2, 1], [1, 3]] x = [3, 5]  =>  x = [0.8, 1.4]
        let a = [2.0, 1.0, 1.0, 3.0];
        let x = DenseLu::factor(&a, 2).unwrap().solve(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = [0.0, 1.0, 1.0, 0.0];
        let x = DenseLu::factor(&a, 2).unwrap().solve(&[2.0, 3.0]);
        assert!((x[0] - 3.0).abs() < 1e-15);
        assert!((x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_is_detected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(matches!(DenseLu::factor(&a, 2), Err(Error::SingularSystem)));
    }

    #[test]
    fn refined_solve_meets_budget() {
        let n = 6;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (i + j + 1) as f64; // Hilbert-ish, ill-conditioned
            }
        }
        let b = vec![1.0; n];
        let (x, res) = solve_refined(&a, n, &b, 1e-12).unwrap();
        assert_eq!(x.len(), n);
        assert!(res <= 1e-9, "residual {res}");
    }

    #[test]
    fn vec_mat_matches_manual() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let y = vec_mat(&[5.0, 6.0], &a, 2);
        assert_eq!(y, vec![5.0 + 18.0, 10.0 + 24.0]);
    }
}
