//! Randomized end-to-end verification.
//!
//! Each trial generates an ergodic chain, perturbs it toward a random target
//! state, and checks the full stack of cross-module identities: the strict
//! increase of the target's invariant probability, the return-time identity
//! on both chains, strict negativity of the analytic sensitivities, their
//! agreement with central differences, and the decompose/compose round trip
//! on a multi-move compliant pair.  Failures are collected as data, never
//! thrown, so a single run reports every violated property, and every
//! failure record pins down the trial that produced it: rerunning
//! [`run_trial`] with the same config and trial index reproduces it exactly.

use serde::Serialize;

use crate::chain::{require_ergodic, TransitionMatrix};
use crate::error::{Error, Result};
use crate::hitting::expected_return_time;
use crate::montecarlo;
use crate::perturbation::{
    apply_elementary, check_theorem_conditions, decompose, ElementaryPerturbation,
};
use crate::rng::SplitMix64;
use crate::sensitivity::{coupled_derivative_direct, finite_difference_check, CouplingSpec};
use crate::stationary::stationary_linear;

/// Tolerance for the return-time identity `pi(s0) * mu(s0) = 1`.
pub const KAC_TOLERANCE: f64 = 1e-8;
/// Central-difference step for the sensitivity cross-check.
pub const FD_STEP: f64 = 1e-6;
/// Absolute floor of the finite-difference tolerance.
pub const FD_ABS_TOLERANCE: f64 = 1e-4;
/// Relative part of the finite-difference tolerance.
pub const FD_REL_TOLERANCE: f64 = 1e-3;
/// Entrywise tolerance for the decompose/compose round trip.
pub const COMPOSE_TOLERANCE: f64 = 1e-14;
/// Fraction of a donor entry a random perturbation may move.
pub const HEADROOM: f64 = 0.9;

/// Configuration of a verification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub trials: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub min_entry: f64,
    pub seed: u64,
    pub strictness_tolerance: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            trials: 1000,
            n_min: 2,
            n_max: 8,
            min_entry: 0.01,
            seed: 42,
            strictness_tolerance: 1e-12,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::BadParameter("need at least one trial".into()));
        }
        if self.n_min < 2 || self.n_min > self.n_max {
            return Err(Error::BadParameter(format!(
                "state-count bounds must satisfy 2 <= n_min <= n_max, got [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        if !self.min_entry.is_finite()
            || self.min_entry < 0.0
            || self.min_entry >= 1.0 / self.n_max as f64
        {
            return Err(Error::InfeasibleFloor { min_entry: self.min_entry, n: self.n_max });
        }
        if !self.strictness_tolerance.is_finite() || self.strictness_tolerance < 0.0 {
            return Err(Error::BadParameter("strictness tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// One violated property, with enough context to replay the trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial: u64,
    pub n: usize,
    pub s0: usize,
    pub donor: usize,
    pub property: String,
    pub observed: String,
}

/// Aggregated result of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    #[serde(rename = "trials")]
    pub trials_run: u64,
    pub failures: Vec<TrialFailure>,
    /// Minimum observed increase of the target's invariant probability
    /// across strict trials.
    pub min_gap: Option<f64>,
}

/// Everything a single trial produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub n: usize,
    pub s0: usize,
    pub donor: usize,
    /// `pi'(s0) - pi(s0)` for the strict elementary perturbation, when both
    /// stationary solves succeeded.
    pub gap: Option<f64>,
    pub failures: Vec<TrialFailure>,
}

/// Generate a random chain with every entry at least `min_entry`.
///
/// Rows are sampled as normalized positive weights, then mixed with the
/// uniform row just enough to enforce the floor.  A positive floor makes the
/// chain irreducible and aperiodic by construction.
pub fn random_ergodic_chain(
    n: usize,
    min_entry: f64,
    rng: &mut SplitMix64,
) -> Result<TransitionMatrix> {
    if n < 2 {
        return Err(Error::TooSmall { n });
    }
    if !min_entry.is_finite() || min_entry < 0.0 || min_entry >= 1.0 / n as f64 {
        return Err(Error::InfeasibleFloor { min_entry, n });
    }
    let blend = min_entry * n as f64;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let weights: Vec<f64> = (0..n).map(|_| 1.0 - rng.uniform()).collect(); // in (0, 1]
        let sum: f64 = weights.iter().sum();
        let row: Vec<f64> =
            weights.iter().map(|w| (1.0 - blend) * (w / sum) + min_entry).collect();
        rows.push(row);
    }
    TransitionMatrix::validate(&rows, 1e-9)
}

/// Draw a strict feasible elementary perturbation toward `s0`.
///
/// The donor column is uniform among the others; per-row amounts are uniform
/// in `[0, HEADROOM * p(i, donor)]`, resampled until some amount exceeds
/// `strictness_tolerance` (bounded resampling with a deterministic
/// fallback, so this never fails).
pub fn random_feasible_perturbation(
    m: &TransitionMatrix,
    s0: usize,
    rng: &mut SplitMix64,
    strictness_tolerance: f64,
) -> ElementaryPerturbation {
    let n = m.n();
    let pick = rng.below(n - 1);
    let mut donor = if pick >= s0 { pick + 1 } else { pick };
    for _ in 0..100 {
        let c: Vec<f64> =
            (0..n).map(|i| rng.uniform() * HEADROOM * m.entry(i, donor)).collect();
        if c.iter().any(|&ci| ci > strictness_tolerance) {
            return ElementaryPerturbation::new(CouplingSpec { target: s0, donor }, c);
        }
    }
    // deterministic fallback: move half the headroom of the first row that
    // has donor mass, rotating donors if the whole column is empty
    for _ in 0..n {
        for i in 0..n {
            if m.entry(i, donor) > 0.0 {
                let mut c = vec![0.0; n];
                c[i] = m.entry(i, donor) * HEADROOM / 2.0;
                return ElementaryPerturbation::new(CouplingSpec { target: s0, donor }, c);
            }
        }
        donor = (donor + 1) % n;
        if donor == s0 {
            donor = (donor + 1) % n;
        }
    }
    unreachable!("a validated stochastic matrix has positive mass outside any single column");
}

struct TrialRecorder {
    trial: u64,
    n: usize,
    s0: usize,
    donor: usize,
    failures: Vec<TrialFailure>,
}

impl TrialRecorder {
    fn fail(&mut self, property: &str, observed: String) {
        self.failures.push(TrialFailure {
            trial: self.trial,
            n: self.n,
            s0: self.s0,
            donor: self.donor,
            property: property.to_string(),
            observed,
        });
    }
}

/// Run one trial of the suite.  Deterministic in `(config.seed, index)`.
pub fn run_trial(config: &TrialConfig, index: u64) -> TrialOutcome {
    let mut rng = SplitMix64::substream(config.seed, index);
    let n = config.n_min + rng.below(config.n_max - config.n_min + 1);
    let chain = random_ergodic_chain(n, config.min_entry, &mut rng)
        .expect("config validated: floor feasible for every n in range");
    let s0 = rng.below(n);
    let pert = random_feasible_perturbation(&chain, s0, &mut rng, config.strictness_tolerance);
    let donor = pert.coupling.donor;

    let mut rec = TrialRecorder { trial: index, n, s0, donor, failures: Vec::new() };
    let mut gap = None;

    match apply_elementary(&chain, &pert) {
        Err(e) => rec.fail("apply_elementary", e.to_string()),
        Ok(perturbed) => {
            if let Err(e) = require_ergodic(&perturbed) {
                rec.fail("perturbed_ergodic", e.to_string());
            } else {
                check_strict_gap(&chain, &perturbed, s0, config, &mut rec, &mut gap);
                check_kac(&chain, s0, "kac_identity_base", &mut rec);
                check_kac(&perturbed, s0, "kac_identity_perturbed", &mut rec);
            }
        }
    }
    check_sensitivity(&chain, s0, donor, &mut rec, &mut rng);
    check_decomposition(&chain, s0, config, &mut rec, &mut rng);

    TrialOutcome { trial: index, n, s0, donor, gap, failures: rec.failures }
}

fn check_strict_gap(
    chain: &TransitionMatrix,
    perturbed: &TransitionMatrix,
    s0: usize,
    config: &TrialConfig,
    rec: &mut TrialRecorder,
    gap_out: &mut Option<f64>,
) {
    let before = match stationary_linear(chain) {
        Ok(pi) => pi.get(s0),
        Err(e) => return rec.fail("stationary_base", e.to_string()),
    };
    let after = match stationary_linear(perturbed) {
        Ok(pi) => pi.get(s0),
        Err(e) => return rec.fail("stationary_perturbed", e.to_string()),
    };
    let gap = after - before;
    *gap_out = Some(gap);
    if gap <= config.strictness_tolerance {
        rec.fail(
            "strict_monotonicity",
            format!("pi'(s0) - pi(s0) = {gap:e} <= {:e}", config.strictness_tolerance),
        );
    }
}

fn check_kac(m: &TransitionMatrix, s0: usize, property: &str, rec: &mut TrialRecorder) {
    let pi = match stationary_linear(m) {
        Ok(pi) => pi.get(s0),
        Err(e) => return rec.fail(property, e.to_string()),
    };
    let mu = match expected_return_time(m, s0) {
        Ok(mu) => mu,
        Err(e) => return rec.fail(property, e.to_string()),
    };
    let defect = (pi * mu - 1.0).abs();
    if defect > KAC_TOLERANCE {
        rec.fail(property, format!("|pi(s0) * mu(s0) - 1| = {defect:e}"));
    }
}

fn check_sensitivity(
    chain: &TransitionMatrix,
    s0: usize,
    donor: usize,
    rec: &mut TrialRecorder,
    rng: &mut SplitMix64,
) {
    let spec = CouplingSpec { target: s0, donor };
    let sens = match coupled_derivative_direct(chain, spec) {
        Ok(s) => s,
        Err(e) => return rec.fail("sensitivity_negative", e.to_string()),
    };
    let worst = sens.d_mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if worst >= 0.0 {
        rec.fail("sensitivity_negative", format!("max d_mu entry = {worst:e}"));
    }

    // central-difference spot check on one random feasible row
    let n = chain.n();
    let feasible: Vec<usize> = (0..n)
        .filter(|&i| chain.entry(i, donor) >= FD_STEP && chain.entry(i, s0) >= FD_STEP)
        .collect();
    if feasible.is_empty() {
        return;
    }
    let row = feasible[rng.below(feasible.len())];
    match finite_difference_check(chain, spec, row, FD_STEP) {
        Err(e) => rec.fail("finite_difference", e.to_string()),
        Ok(fd) => {
            let analytic = sens.d_mu[row];
            let tol = FD_ABS_TOLERANCE.max(FD_REL_TOLERANCE * analytic.abs());
            if (fd - analytic).abs() > tol {
                rec.fail(
                    "finite_difference",
                    format!("row {row}: fd {fd:e} vs analytic {analytic:e}"),
                );
            }
        }
    }
}

fn check_decomposition(
    chain: &TransitionMatrix,
    s0: usize,
    config: &TrialConfig,
    rec: &mut TrialRecorder,
    rng: &mut SplitMix64,
) {
    let moves_to_apply = 1 + rng.below(3);
    let mut target_chain = chain.clone();
    for _ in 0..moves_to_apply {
        let pert =
            random_feasible_perturbation(&target_chain, s0, rng, config.strictness_tolerance);
        match apply_elementary(&target_chain, &pert) {
            Ok(next) => target_chain = next,
            Err(e) => return rec.fail("decompose_roundtrip", e.to_string()),
        }
    }
    let report = match check_theorem_conditions(chain, &target_chain, s0) {
        Ok(r) => r,
        Err(e) => return rec.fail("decompose_roundtrip", e.to_string()),
    };
    if !report.holds {
        return rec.fail(
            "decompose_roundtrip",
            format!("constructed pair violates conditions in {} entries", report.violations.len()),
        );
    }
    let moves = match decompose(chain, &target_chain, s0) {
        Ok(m) => m,
        Err(e) => return rec.fail("decompose_roundtrip", e.to_string()),
    };
    let mut rebuilt = chain.clone();
    for mv in &moves {
        match apply_elementary(&rebuilt, mv) {
            Ok(next) => rebuilt = next,
            Err(e) => return rec.fail("decompose_roundtrip", e.to_string()),
        }
    }
    let mut worst = 0.0f64;
    for i in 0..chain.n() {
        for j in 0..chain.n() {
            worst = worst.max((rebuilt.entry(i, j) - target_chain.entry(i, j)).abs());
        }
    }
    if worst > COMPOSE_TOLERANCE {
        rec.fail("decompose_roundtrip", format!("max entry error {worst:e}"));
    }
    if report.strict {
        match (stationary_linear(chain), stationary_linear(&target_chain)) {
            (Ok(before), Ok(after)) => {
                let gap = after.get(s0) - before.get(s0);
                if gap <= 0.0 {
                    rec.fail("decompose_monotone", format!("end-to-end gap {gap:e}"));
                }
            }
            (Err(e), _) | (_, Err(e)) => rec.fail("decompose_monotone", e.to_string()),
        }
    }
}

/// Run the whole suite.
pub fn run_suite(config: &TrialConfig) -> Result<VerificationReport> {
    config.validate()?;
    let mut failures = Vec::new();
    let mut min_gap: Option<f64> = None;
    for index in 0..config.trials {
        let outcome = run_trial(config, index);
        failures.extend(outcome.failures);
        if let Some(g) = outcome.gap {
            min_gap = Some(match min_gap {
                Some(current) => current.min(g),
                None => g,
            });
        }
    }
    Ok(VerificationReport { pass: failures.is_empty(), trials_run: config.trials, failures, min_gap })
}

/// Convenience used by the simulation cross-checks in the test suites:
/// z-score of a simulated estimate against an exact value.
pub fn z_score(estimate: &montecarlo::SimulationEstimate, exact: f64) -> f64 {
    if estimate.std_error == 0.0 {
        if estimate.mean == exact {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (estimate.mean - exact) / estimate.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::structure;

    #[test]
    fn generator_respects_floor_and_rows() {
        let mut rng = SplitMix64::new(1);
        let m = random_ergodic_chain(5, 0.05, &mut rng).unwrap();
        for i in 0..5 {
            let sum: f64 = m.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for j in 0..5 {
                assert!(m.entry(i, j) >= 0.05 - 1e-12);
            }
        }
        let report = structure(&m);
        assert!(report.irreducible && report.aperiodic);
    }

    #[test]
    fn generator_floor_bounds() {
        let mut rng = SplitMix64::new(1);
        assert!(random_ergodic_chain(5, 0.19, &mut rng).is_ok());
        assert!(matches!(
            random_ergodic_chain(5, 0.25, &mut rng),
            Err(Error::InfeasibleFloor { .. })
        ));
    }

    #[test]
    fn random_perturbation_is_feasible_and_strict() {
        let mut rng = SplitMix64::new(2);
        let m = random_ergodic_chain(4, 0.02, &mut rng).unwrap();
        for s0 in 0..4 {
            let pert = random_feasible_perturbation(&m, s0, &mut rng, 1e-12);
            assert_ne!(pert.coupling.donor, s0);
            assert!(pert.is_strict(1e-12));
            assert!(apply_elementary(&m, &pert).is_ok());
        }
    }

    #[test]
    fn two_state_donor_is_forced() {
        let m = TransitionMatrix::validate(&[vec![0.5, 0.5], vec![0.25, 0.75]], 1e-9).unwrap();
        let mut rng = SplitMix64::new(3);
        let pert = random_feasible_perturbation(&m, 0, &mut rng, 1e-12);
        assert_eq!(pert.coupling.donor, 1);
    }

    #[test]
    fn small_suite_passes() {
        let config = TrialConfig { trials: 50, ..TrialConfig::default() };
        let report = run_suite(&config).unwrap();
        assert!(report.pass, "failures: {:?}", report.failures);
        assert_eq!(report.trials_run, 50);
        assert!(report.min_gap.unwrap() > 0.0);
    }

    #[test]
    fn suite_is_deterministic() {
        let config = TrialConfig { trials: 20, seed: 7, ..TrialConfig::default() };
        let a = run_suite(&config).unwrap();
        let b = run_suite(&config).unwrap();
        assert_eq!(a, b);
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn broken_check_is_reported_and_reproducible() {
        // an impossible strictness bar stands in for a deliberately broken
        // check: pi'(s0) > pi(s0) + 1 can never hold
        let config =
            TrialConfig { trials: 5, strictness_tolerance: 1.0, ..TrialConfig::default() };
        let report = run_suite(&config).unwrap();
        assert!(!report.pass);
        let failure = report
            .failures
            .iter()
            .find(|f| f.property == "strict_monotonicity")
            .expect("monotonicity bar must fail");
        // the descriptor alone reproduces the trial
        let replay = run_trial(&config, failure.trial);
        assert_eq!(replay.n, failure.n);
        assert_eq!(replay.s0, failure.s0);
        assert_eq!(replay.donor, failure.donor);
        assert!(replay
            .failures
            .iter()
            .any(|f| f.property == failure.property && f.observed == failure.observed));
    }

    #[test]
    fn zero_trials_rejected() {
        let config = TrialConfig { trials: 0, ..TrialConfig::default() };
        assert!(matches!(run_suite(&config), Err(Error::BadParameter(_))));
    }

    #[test]
    fn config_floor_validation() {
        let config = TrialConfig { n_max: 8, min_entry: 0.2, ..TrialConfig::default() };
        assert!(matches!(config.validate(), Err(Error::InfeasibleFloor { .. })));
    }
}
