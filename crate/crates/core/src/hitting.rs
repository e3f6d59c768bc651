//! Expected first hitting times and the expected first return time.
//!
//! For a target state `s0`, the hitting times `m_j` (expected steps to first
//! reach `s0` from `j`) solve the linear system `(I - Q) m = 1`, where `Q` is
//! the transition matrix with the target row and column deleted.  The return
//! time is then `mu = 1 + sum_{k != s0} p(s0, k) m_k`.  Both quantities feed
//! the Kac identity `pi(s0) * mu(s0) = 1` and the sensitivity analysis.

use crate::chain::{require_ergodic, TransitionMatrix};
use crate::error::Result;
use crate::linalg;

/// Residual budget for the hitting-time system, per row.
pub const HITTING_RESIDUAL: f64 = 1e-10;

/// Expected hitting times to a fixed target, plus the return time.
///
/// `hit[j]` is the expected number of steps to first reach `target` from
/// `j`; `hit[target]` is 0 by convention, with the (always >= 1) return time
/// stored separately so the two defining identities stay distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingProfile {
    pub target: usize,
    pub hit: Vec<f64>,
    pub return_time: f64,
}

/// Indices of all states except `s0`, in ascending order.  This is the
/// row/column ordering of the reduced matrix `Q`.
pub(crate) fn reduced_indices(n: usize, s0: usize) -> Vec<usize> {
    (0..n).filter(|&j| j != s0).collect()
}

/// The reduced matrix `Q` (row-major, (n-1) x (n-1)): `P` with row and
/// column `s0` removed.
pub(crate) fn reduced_matrix(m: &TransitionMatrix, s0: usize) -> Vec<f64> {
    let idx = reduced_indices(m.n(), s0);
    let k = idx.len();
    let mut q = vec![0.0; k * k];
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            q[a * k + b] = m.entry(i, j);
        }
    }
    q
}

/// `I - Q` for the same ordering.
pub(crate) fn identity_minus_reduced(m: &TransitionMatrix, s0: usize) -> Vec<f64> {
    let mut a = reduced_matrix(m, s0);
    let k = m.n() - 1;
    for v in a.iter_mut() {
        *v = -*v;
    }
    for d in 0..k {
        a[d * k + d] += 1.0;
    }
    a
}

/// Solve the hitting-time system towards `s0`.
pub fn expected_hitting_times(m: &TransitionMatrix, s0: usize) -> Result<HittingProfile> {
    m.check_state(s0)?;
    require_ergodic(m)?;
    let n = m.n();
    let k = n - 1;
    let a = identity_minus_reduced(m, s0);
    let ones = vec![1.0; k];
    let (sub, _res) = linalg::solve_refined(&a, k, &ones, HITTING_RESIDUAL)?;

    let idx = reduced_indices(n, s0);
    let mut hit = vec![0.0; n];
    for (pos, &j) in idx.iter().enumerate() {
        hit[j] = sub[pos];
    }
    let mut return_time = 1.0;
    for &k_state in &idx {
        return_time += m.entry(s0, k_state) * hit[k_state];
    }
    Ok(HittingProfile { target: s0, hit, return_time })
}

/// Expected first return time to `s0`.
pub fn expected_return_time(m: &TransitionMatrix, s0: usize) -> Result<f64> {
    Ok(expected_hitting_times(m, s0)?.return_time)
}
