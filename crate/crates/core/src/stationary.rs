//! Invariant distributions by three independent routes.
//!
//! * [`stationary_linear`] solves the balance equations directly.
//! * [`stationary_power`] iterates `x <- xP`; it needs aperiodicity, which is
//!   exactly the gap between "limit distribution" and "invariant
//!   distribution", so the gate is an explicit error rather than silent
//!   averaging.
//! * [`stationary_via_return_time`] inverts the expected first return time.
//!
//! The three agree on irreducible (and, for the power method, aperiodic)
//! chains, which makes each an oracle for the others in the test suites.

use crate::chain::{require_ergodic, structure, TransitionMatrix};
use crate::error::{Error, Result};
use crate::hitting::expected_return_time;
use crate::linalg;

/// Residual budget for the balance equations, `max_j |(pi P)_j - pi_j|`.
pub const STATIONARY_RESIDUAL: f64 = 1e-10;

/// A probability vector over the chain's states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub(crate) fn from_renormalized(mut probs: Vec<f64>) -> Self {
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        Distribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, state: usize) -> f64 {
        self.probs[state]
    }

    /// L1 distance to another vector of the same length.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.probs.iter().zip(other).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// Infinity-norm residual of the balance equations for a candidate pi.
pub fn balance_residual(m: &TransitionMatrix, pi: &[f64]) -> f64 {
    let n = m.n();
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut acc = -pi[j];
        for (i, &p) in pi.iter().enumerate() {
            acc += p * m.entry(i, j);
        }
        worst = worst.max(acc.abs());
    }
    worst
}

/// Solve pi P = pi, sum(pi) = 1 by dense elimination.
///
/// One equation of the rank-deficient system `(P^T - I) pi = 0` is replaced
/// by the normalization row; partial pivoting plus one optional refinement
/// pass keeps the balance residual within [`STATIONARY_RESIDUAL`].
pub fn stationary_linear(m: &TransitionMatrix) -> Result<Distribution> {
    require_ergodic(m)?;
    let n = m.n();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            // row i of (P^T - I): coefficients of pi_j in balance equation i
            a[i * n + j] = m.entry(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;

    let (x, _) = linalg::solve_refined(&a, n, &b, STATIONARY_RESIDUAL)?;
    let pi = Distribution::from_renormalized(x);
    if balance_residual(m, pi.probs()) > STATIONARY_RESIDUAL {
        return Err(Error::SingularSystem);
    }
    Ok(pi)
}

/// Power iteration `x <- xP` from the uniform vector, stopping when the L1
/// change drops to `tol`.  Requires an aperiodic (hence irreducible) chain.
pub fn stationary_power(
    m: &TransitionMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<Distribution> {
    let report = structure(m);
    if !report.irreducible {
        return Err(Error::NotIrreducible { classes: report.communicating_classes });
    }
    if !report.aperiodic {
        return Err(Error::NotAperiodic { period: report.period.unwrap_or(0) });
    }
    if tol <= 0.0 {
        return Err(Error::BadParameter("power-iteration tolerance must be positive".into()));
    }
    let n = m.n();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..max_iters {
        let mut y = vec![0.0; n];
        for (i, &xi) in x.iter().enumerate() {
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += xi * m.entry(i, j);
            }
        }
        let sum: f64 = y.iter().sum();
        for v in &mut y {
            *v /= sum;
        }
        let change: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if change <= tol {
            return Ok(Distribution::from_renormalized(x));
        }
    }
    Err(Error::NoConvergence { iterations: max_iters })
}

/// The return-time route: `pi(s0) = 1 / mu(s0)` where `mu(s0)` is the
/// expected first return time to `s0`.
pub fn stationary_via_return_time(m: &TransitionMatrix, s0: usize) -> Result<f64> {
    Ok(1.0 / expected_return_time(m, s0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::DEFAULT_TOLERANCE;

    fn tm(rows: &[Vec<f64>]) -> TransitionMatrix {
        TransitionMatrix::validate(rows, DEFAULT_TOLERANCE).unwrap()
    }

    // 2-state closed form: for P = [[1-a, a], [b, 1-b]],
    // pi = (b/(a+b), a/(a+b)).
    fn two_state_pi(a: f64, b: f64) -> [f64; 2] {
        [b / (a + b), a / (a + b)]
    }

    #[test]
    fn two_state_linear_matches_closed_form() {
        let m = tm(&[vec![0.5, 0.5], vec![0.25, 0.75]]);
        let pi = stationary_linear(&m).unwrap();
        let expect = two_state_pi(0.5, 0.25);
        assert!((pi.get(0) - expect[0]).abs() < 1e-14); // 1/3
        assert!((pi.get(1) - expect[1]).abs() < 1e-14); // 2/3
    }

    #[test]
    fn uniform_three_state_is_uniform() {
        let third = 1.0 / 3.0;
        let m = tm(&[vec![third; 3], vec![third; 3], vec![third; 3]]);
        let pi = stationary_linear(&m).unwrap();
        for s in 0..3 {
            assert!((pi.get(s) - third).abs() < 1e-14);
        }
    }

    #[test]
    fn doubly_stochastic_gives_uniform() {
        // columns sum to 1 as well, so pi is uniform
        let m = tm(&[vec![0.2, 0.5, 0.3], vec![0.5, 0.3, 0.2], vec![0.3, 0.2, 0.5]]);
        let pi = stationary_linear(&m).unwrap();
        for s in 0..3 {
            assert!((pi.get(s) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_rejects_reducible() {
        let m = tm(&[vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert!(matches!(stationary_linear(&m), Err(Error::NotIrreducible { .. })));
    }

    #[test]
    fn power_matches_linear() {
        let m = tm(&[vec![0.5, 0.5], vec![0.25, 0.75]]);
        let lin = stationary_linear(&m).unwrap();
        let pow = stationary_power(&m, 1e-12, 100_000).unwrap();
        assert!(lin.l1_distance(pow.probs()) < 1e-10);
    }

    #[test]
    fn power_rejects_periodic() {
        let m = tm(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(
            stationary_power(&m, 1e-12, 1000).unwrap_err(),
            Error::NotAperiodic { period: 2 }
        );
    }

    #[test]
    fn power_uniform_converges_immediately() {
        let third = 1.0 / 3.0;
        let m = tm(&[vec![third; 3], vec![third; 3], vec![third; 3]]);
        let pi = stationary_power(&m, 1e-12, 5).unwrap();
        for s in 0..3 {
            assert!((pi.get(s) - third).abs() < 1e-15);
        }
    }

    #[test]
    fn power_reports_no_convergence() {
        // slow-mixing asymmetric chain with an absurdly small iteration
        // budget; the uniform start is not a fixed point here
        let m = tm(&[vec![0.99, 0.01], vec![0.02, 0.98]]);
        assert_eq!(
            stationary_power(&m, 1e-14, 3).unwrap_err(),
            Error::NoConvergence { iterations: 3 }
        );
    }

    #[test]
    fn return_time_route_agrees() {
        let m = tm(&[vec![0.5, 0.5], vec![0.25, 0.75]]);
        let direct = stationary_via_return_time(&m, 0).unwrap();
        assert!((direct - 1.0 / 3.0).abs() < 1e-12);
        let lin = stationary_linear(&m).unwrap();
        assert!((direct - lin.get(0)).abs() < 1e-10);
    }

    #[test]
    fn return_time_route_on_cycle() {
        let m = tm(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        // periodic but irreducible: invariant distribution exists
        let p0 = stationary_via_return_time(&m, 0).unwrap();
        assert!((p0 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn residual_is_tight() {
        let m = tm(&[vec![0.1, 0.2, 0.7], vec![0.3, 0.4, 0.3], vec![0.25, 0.5, 0.25]]);
        let pi = stationary_linear(&m).unwrap();
        assert!(balance_residual(&m, pi.probs()) <= STATIONARY_RESIDUAL);
        let sum: f64 = pi.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }
}
