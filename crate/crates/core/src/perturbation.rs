//! Finite perturbations: elementary two-column moves, the monotone
//! perturbation conditions, and the decomposition of a general compliant
//! pair into elementary moves.
//!
//! An elementary perturbation moves mass `c_i >= 0` in each row `i` from one
//! donor column into the target column, preserving row sums.  A general pair
//! `(P, P')` satisfies the monotone conditions for target `s0` when the
//! target column only gains and every other column only loses, with at least
//! one strict gain.  Such a pair decomposes into one elementary move per
//! donor column, and the moves commute: they act on disjoint donor columns
//! and make commutative additions to the target column.

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::sensitivity::CouplingSpec;

/// Feasibility slack for amounts, absorbs round-trip floating-point dust.
pub const AMOUNT_SLACK: f64 = 1e-15;

/// Column-condition slack when comparing two matrices entrywise.
pub const CONDITION_SLACK: f64 = 1e-15;

/// Threshold above which a target-column gain counts as strict.
pub const STRICT_THRESHOLD: f64 = 1e-12;

/// A per-row mass move from `coupling.donor` into `coupling.target`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryPerturbation {
    pub coupling: CouplingSpec,
    pub c: Vec<f64>,
}

impl ElementaryPerturbation {
    pub fn new(coupling: CouplingSpec, c: Vec<f64>) -> Self {
        ElementaryPerturbation { coupling, c }
    }

    /// A perturbation is strict when some row actually moves mass.
    pub fn is_strict(&self, tolerance: f64) -> bool {
        self.c.iter().any(|&ci| ci > tolerance)
    }
}

/// One violated entry condition: `(row, col)` with the two entry values.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Violation {
    pub row: usize,
    pub col: usize,
    pub p: f64,
    pub p_prime: f64,
}

/// Outcome of checking the monotone-perturbation conditions on a pair.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TheoremConditionReport {
    pub holds: bool,
    pub strict: bool,
    pub violations: Vec<Violation>,
    pub strict_rows: Vec<usize>,
}

/// Apply an elementary perturbation, checking per-row feasibility.
pub fn apply_elementary(
    m: &TransitionMatrix,
    pert: &ElementaryPerturbation,
) -> Result<TransitionMatrix> {
    pert.coupling.check_against(m)?;
    let n = m.n();
    if pert.c.len() != n {
        return Err(Error::DimensionMismatch { left: pert.c.len(), right: n });
    }
    let (target, donor) = (pert.coupling.target, pert.coupling.donor);
    let mut rows = m.to_rows();
    for (i, &ci) in pert.c.iter().enumerate() {
        if ci < 0.0 || ci > m.entry(i, donor) + AMOUNT_SLACK {
            return Err(Error::InfeasibleAmount { row: i });
        }
        rows[i][target] += ci;
        rows[i][donor] -= ci;
        if rows[i][donor] < 0.0 {
            // only dust within the slack can land here
            rows[i][donor] = 0.0;
        }
    }
    TransitionMatrix::validate(&rows, 1e-12)
}

/// Check the monotone conditions for target `s0`: the target column never
/// loses, other columns never gain, and strictness is a genuine gain.
pub fn check_theorem_conditions(
    p: &TransitionMatrix,
    p_prime: &TransitionMatrix,
    s0: usize,
) -> Result<TheoremConditionReport> {
    if p.n() != p_prime.n() {
        return Err(Error::DimensionMismatch { left: p.n(), right: p_prime.n() });
    }
    p.check_state(s0)?;
    let n = p.n();
    let mut violations = Vec::new();
    let mut strict_rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (p.entry(i, j), p_prime.entry(i, j));
            if j == s0 {
                if b < a - CONDITION_SLACK {
                    violations.push(Violation { row: i, col: j, p: a, p_prime: b });
                }
                if b > a + STRICT_THRESHOLD {
                    strict_rows.push(i);
                }
            } else if b > a + CONDITION_SLACK {
                violations.push(Violation { row: i, col: j, p: a, p_prime: b });
            }
        }
    }
    Ok(TheoremConditionReport {
        holds: violations.is_empty(),
        strict: !strict_rows.is_empty(),
        violations,
        strict_rows,
    })
}

/// Decompose a compliant pair into elementary moves, one per donor column in
/// ascending index order, skipping columns that move nothing.  Applying the
/// result to `p` in any order reproduces `p_prime`.
pub fn decompose(
    p: &TransitionMatrix,
    p_prime: &TransitionMatrix,
    s0: usize,
) -> Result<Vec<ElementaryPerturbation>> {
    let report = check_theorem_conditions(p, p_prime, s0)?;
    if !report.holds {
        let first = report.violations[0];
        return Err(Error::ConditionsViolated {
            count: report.violations.len(),
            row: first.row,
            col: first.col,
        });
    }
    let n = p.n();
    let mut moves = Vec::new();
    for donor in 0..n {
        if donor == s0 {
            continue;
        }
        let c: Vec<f64> = (0..n)
            .map(|i| (p.entry(i, donor) - p_prime.entry(i, donor)).max(0.0))
            .collect();
        if c.iter().any(|&ci| ci > 0.0) {
            moves.push(ElementaryPerturbation::new(CouplingSpec { target: s0, donor }, c));
        }
    }
    Ok(moves)
}
