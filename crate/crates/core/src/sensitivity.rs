//! Return-time sensitivities under coupled column perturbations.
//!
//! The perturbation moves probability mass within each row `i` from a donor
//! column into the target column: `p(i, target) += c_i`,
//! `p(i, donor) -= c_i`, so the donor entry's derivative with respect to the
//! target entry is exactly -1.  This module computes the derivative
//! `d mu(target) / d c_i` at `c = 0` for every row, by two routes:
//!
//! * [`coupled_derivative_direct`] solves the linear systems the forward
//!   iteration converges to.  With `m` the hitting vector to the target, `Q`
//!   the reduced matrix and `r` the target row restricted to non-target
//!   columns:
//!   - row `target`: the derivative is `-m[donor]` exactly (only the direct
//!     term survives; the iterated remainder vanishes);
//!   - row `j != target`: the derivative is `-m[donor] * (r N)_j` with
//!     `N = (I - Q)^{-1}`, applied via one transposed solve rather than an
//!     explicit inverse.
//! * [`coupled_derivative_series`] truncates the forward iteration,
//!   replacing `N` by the partial sum `I + Q + ... + Q^(T-1)`.  It converges
//!   to the direct route geometrically in the term count because the
//!   spectral radius of `Q` is below 1 for irreducible chains.
//!
//! Every entry is strictly negative for irreducible chains: pushing mass
//! toward the target shortens the expected return trip no matter which row
//! carries the push.  [`finite_difference_check`] is the independent oracle,
//! a central difference of the return time on actually-perturbed matrices.
//!
//! One term is easy to get wrong: in the recursion for row `j`'s derivative,
//! the direct term is `-m[donor]` — the *donor's* hitting time, because the
//! donor entry is what shrinks — not `-m[j]`.  The two coincide on symmetric
//! chains; central differences on asymmetric chains discriminate (see the
//! `direct_term_is_donor_hitting_time` test).

use crate::chain::{require_ergodic, TransitionMatrix};
use crate::error::{Error, Result};
use crate::hitting::{expected_hitting_times, expected_return_time, identity_minus_reduced,
                     reduced_indices, reduced_matrix};
use crate::linalg::{self, DenseLu};

/// Target/donor column pair for a coupled perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplingSpec {
    pub target: usize,
    pub donor: usize,
}

impl CouplingSpec {
    pub fn new(target: usize, donor: usize) -> Result<Self> {
        if target == donor {
            return Err(Error::BadParameter(format!(
                "target and donor columns must differ (both are {target})"
            )));
        }
        Ok(CouplingSpec { target, donor })
    }

    /// Bounds-check both columns against a matrix.
    pub fn check_against(&self, m: &TransitionMatrix) -> Result<()> {
        m.check_state(self.target)?;
        m.check_state(self.donor)?;
        if self.target == self.donor {
            return Err(Error::BadParameter("target and donor columns must differ".into()));
        }
        Ok(())
    }
}

/// Per-row derivatives of the expected return time, `d_mu[i] = d mu / d c_i`
/// at `c = 0`, in steps per unit of moved probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityVector {
    pub d_mu: Vec<f64>,
}

/// The target row of `P` restricted to non-target columns, in reduced order.
fn target_row_reduced(m: &TransitionMatrix, s0: usize) -> Vec<f64> {
    reduced_indices(m.n(), s0).iter().map(|&k| m.entry(s0, k)).collect()
}

/// Closed-form sensitivities via linear solves.
pub fn coupled_derivative_direct(
    m: &TransitionMatrix,
    spec: CouplingSpec,
) -> Result<SensitivityVector> {
    spec.check_against(m)?;
    require_ergodic(m)?;
    let n = m.n();
    let s0 = spec.target;
    let profile = expected_hitting_times(m, s0)?;
    let m_donor = profile.hit[spec.donor];

    // y = r N solves (I - Q)^T y^T = r^T
    let k = n - 1;
    let a = identity_minus_reduced(m, s0);
    let mut at = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            at[j * k + i] = a[i * k + j];
        }
    }
    let r = target_row_reduced(m, s0);
    let y = DenseLu::factor(&at, k)?.solve(&r);

    let idx = reduced_indices(n, s0);
    let mut d_mu = vec![0.0; n];
    d_mu[s0] = -m_donor;
    for (pos, &j) in idx.iter().enumerate() {
        d_mu[j] = -m_donor * y[pos];
    }
    Ok(SensitivityVector { d_mu })
}

/// Truncated forward-iteration sensitivities: the partial sum
/// `r (I + Q + ... + Q^(terms-1))` stands in for `r N`.
///
/// The target row's entry carries no series term and is exact for any
/// truncation length.
pub fn coupled_derivative_series(
    m: &TransitionMatrix,
    spec: CouplingSpec,
    terms: usize,
) -> Result<SensitivityVector> {
    spec.check_against(m)?;
    if terms == 0 {
        return Err(Error::BadParameter("series needs at least one term".into()));
    }
    require_ergodic(m)?;
    let n = m.n();
    let s0 = spec.target;
    let profile = expected_hitting_times(m, s0)?;
    let m_donor = profile.hit[spec.donor];

    let k = n - 1;
    let q = reduced_matrix(m, s0);
    let r = target_row_reduced(m, s0);
    let mut power = r.clone(); // r Q^t
    let mut sum = r.clone();
    for _ in 1..terms {
        power = linalg::vec_mat(&power, &q, k);
        for (s, p) in sum.iter_mut().zip(&power) {
            *s += p;
        }
    }

    let idx = reduced_indices(n, s0);
    let mut d_mu = vec![0.0; n];
    d_mu[s0] = -m_donor;
    for (pos, &j) in idx.iter().enumerate() {
        d_mu[j] = -m_donor * sum[pos];
    }
    Ok(SensitivityVector { d_mu })
}

/// Copy of `m` with `p(row, target) += delta`, `p(row, donor) -= delta`.
/// `delta` may be negative; feasibility is the caller's concern.
pub(crate) fn shifted_matrix(
    m: &TransitionMatrix,
    spec: CouplingSpec,
    row: usize,
    delta: f64,
) -> Result<TransitionMatrix> {
    let mut rows = m.to_rows();
    rows[row][spec.target] += delta;
    rows[row][spec.donor] -= delta;
    TransitionMatrix::validate(&rows, 1e-9)
}

/// Central-difference oracle for one row of the sensitivity vector:
/// `[mu(c = +h) - mu(c = -h)] / 2h` on actually-perturbed matrices.
///
/// Needs `p(row, donor) >= h` so both stencil points stay inside the
/// simplex, and both stencil matrices must remain irreducible.
pub fn finite_difference_check(
    m: &TransitionMatrix,
    spec: CouplingSpec,
    row: usize,
    h: f64,
) -> Result<f64> {
    spec.check_against(m)?;
    m.check_state(row)?;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::BadParameter("step size must be positive".into()));
    }
    let available = m.entry(row, spec.donor);
    if available < h {
        return Err(Error::InfeasibleStep { row, available, h });
    }
    // target entry must also allow the backward step
    if m.entry(row, spec.target) < h {
        return Err(Error::InfeasibleStep { row, available: m.entry(row, spec.target), h });
    }
    let plus = shifted_matrix(m, spec, row, h)?;
    let minus = shifted_matrix(m, spec, row, -h)?;
    let mu_plus = expected_return_time(&plus, spec.target)?;
    let mu_minus = expected_return_time(&minus, spec.target)?;
    Ok((mu_plus - mu_minus) / (2.0 * h))
}
