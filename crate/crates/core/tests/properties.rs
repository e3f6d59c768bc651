//! Property tests over randomly generated chains: cross-method agreement,
//! the return-time identity, sensitivity signs and oracles, and perturbation
//! round trips.

use proptest::prelude::*;

use pilift::chain::structure;
use pilift::sensitivity::CouplingSpec;
use pilift::verify::{random_feasible_perturbation, FD_ABS_TOLERANCE, FD_REL_TOLERANCE};
use pilift::{
    apply_elementary, check_theorem_conditions, coupled_derivative_direct,
    coupled_derivative_series, decompose, expected_hitting_times, expected_return_time,
    finite_difference_check, random_ergodic_chain, simulate_hitting_time, simulate_occupancy,
    simulate_return_time, stationary_linear, stationary_power, stationary_via_return_time,
    SplitMix64, TransitionMatrix,
};

fn chain_from_seed(n: usize, min_entry: f64, seed: u64) -> TransitionMatrix {
    let mut rng = SplitMix64::substream(seed, 0xC4A1);
    random_ergodic_chain(n, min_entry, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validate_is_idempotent_on_random_chains(n in 2usize..=12, seed in any::<u64>()) {
        let m = chain_from_seed(n, 0.0, seed);
        let again = TransitionMatrix::validate(&m.to_rows(), 1e-9).unwrap();
        prop_assert_eq!(m, again);
    }

    #[test]
    fn positive_chains_are_ergodic(n in 2usize..=12, seed in any::<u64>()) {
        let m = chain_from_seed(n, 0.01, seed);
        let report = structure(&m);
        prop_assert!(report.irreducible);
        prop_assert_eq!(report.period, Some(1));
        prop_assert_eq!(report.communicating_classes.len(), 1);
        prop_assert_eq!(report.communicating_classes[0].len(), n);
    }

    #[test]
    fn stationary_methods_agree(n in 2usize..=12, seed in any::<u64>()) {
        let m = chain_from_seed(n, 0.01, seed);
        let lin = stationary_linear(&m).unwrap();
        let pow = stationary_power(&m, 1e-12, 200_000).unwrap();
        let worst = lin
            .probs()
            .iter()
            .zip(pow.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        prop_assert!(worst <= 1e-8, "linear vs power: {worst}");
        for s0 in 0..n {
            let via = stationary_via_return_time(&m, s0).unwrap();
            prop_assert!((via - lin.get(s0)).abs() <= 1e-8, "s0 {s0}");
        }
    }

    #[test]
    fn kac_identity_and_residuals(n in 2usize..=12, seed in any::<u64>()) {
        let m = chain_from_seed(n, 0.01, seed);
        let pi = stationary_linear(&m).unwrap();
        // stationarity residual
        let mut residual = 0.0f64;
        for j in 0..n {
            let mut acc = -pi.get(j);
            for i in 0..n {
                acc += pi.get(i) * m.entry(i, j);
            }
            residual = residual.max(acc.abs());
        }
        prop_assert!(residual <= 1e-10, "balance residual {residual}");
        for s0 in 0..n {
            let profile = expected_hitting_times(&m, s0).unwrap();
            prop_assert!((pi.get(s0) * profile.return_time - 1.0).abs() <= 1e-8);
            // the defining equations, restated per row
            for j in 0..n {
                if j == s0 {
                    continue;
                }
                let mut rhs = 1.0;
                for k in 0..n {
                    if k != s0 {
                        rhs += m.entry(j, k) * profile.hit[k];
                    }
                }
                prop_assert!((profile.hit[j] - rhs).abs() <= 1e-10);
                prop_assert!(profile.hit[j] >= 1.0);
            }
        }
    }

    #[test]
    fn stationary_positivity_at_desk_scale(n in 2usize..=16, seed in any::<u64>()) {
        let m = chain_from_seed(n, 1e-3, seed);
        let pi = stationary_linear(&m).unwrap();
        for s in 0..n {
            prop_assert!(pi.get(s) > 1e-15);
        }
    }

    #[test]
    fn sensitivities_strictly_negative(n in 2usize..=12, seed in any::<u64>(), pick in any::<u64>()) {
        let m = chain_from_seed(n, 0.005, seed);
        let mut rng = SplitMix64::substream(pick, 1);
        let target = rng.below(n);
        let donor = (target + 1 + rng.below(n - 1)) % n;
        let spec = CouplingSpec::new(target, donor).unwrap();
        let sens = coupled_derivative_direct(&m, spec).unwrap();
        for (i, &d) in sens.d_mu.iter().enumerate() {
            prop_assert!(d < 0.0, "row {i}: {d}");
        }
        // the target row's entry is the donor's hitting time, exactly
        let hit = expected_hitting_times(&m, target).unwrap().hit;
        prop_assert_eq!(sens.d_mu[target], -hit[donor]);
    }

    #[test]
    fn occupation_measure_identity(n in 2usize..=10, seed in any::<u64>()) {
        let m = chain_from_seed(n, 0.01, seed);
        let pi = stationary_linear(&m).unwrap();
        let spec = CouplingSpec::new(0, n - 1).unwrap();
        let sens = coupled_derivative_direct(&m, spec).unwrap();
        let hit = expected_hitting_times(&m, 0).unwrap().hit;
        for j in 1..n {
            let expect = -hit[n - 1] * pi.get(j) / pi.get(0);
            prop_assert!((sens.d_mu[j] - expect).abs() <= 1e-8, "row {j}");
        }
    }

    #[test]
    fn series_converges_to_direct(n in 2usize..=10, seed in any::<u64>()) {
        let m = chain_from_seed(n, 0.01, seed);
        let spec = CouplingSpec::new(0, n - 1).unwrap();
        let direct = coupled_derivative_direct(&m, spec).unwrap();
        let hit = expected_hitting_times(&m, 0).unwrap().hit;
        let m_donor = hit[n - 1];
        let max_hit = hit.iter().cloned().fold(0.0f64, f64::max);
        let rho_bar = 1.0 - (1..n).map(|j| m.entry(j, 0)).fold(f64::INFINITY, f64::min);
        let scale = direct.d_mu.iter().map(|d| d.abs()).fold(0.0f64, f64::max);

        // truncation error stays inside the geometric envelope
        for terms in [1usize, 10, 50, 200] {
            let series = coupled_derivative_series(&m, spec, terms).unwrap();
            let gap = direct
                .d_mu
                .iter()
                .zip(&series.d_mu)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let envelope = m_donor * max_hit * rho_bar.powi(terms as i32);
            prop_assert!(gap <= envelope + 1e-10 * (1.0 + scale), "T={terms}: {gap} > {envelope}");
        }
    }

    #[test]
    fn finite_difference_agrees(n in 2usize..=10, seed in any::<u64>(), pick in any::<u64>()) {
        let m = chain_from_seed(n, 0.01, seed);
        let mut rng = SplitMix64::substream(pick, 2);
        let target = rng.below(n);
        let donor = (target + 1 + rng.below(n - 1)) % n;
        let row = rng.below(n);
        let spec = CouplingSpec::new(target, donor).unwrap();
        let analytic = coupled_derivative_direct(&m, spec).unwrap().d_mu[row];
        let fd = finite_difference_check(&m, spec, row, 1e-6).unwrap();
        let tol = FD_ABS_TOLERANCE.max(FD_REL_TOLERANCE * analytic.abs());
        prop_assert!((fd - analytic).abs() <= tol, "fd {fd} vs {analytic}");

        // chain rule: pi(target) moves at rate -d_mu / mu^2, checked against
        // a central difference of the stationary probability itself
        let mu = expected_return_time(&m, target).unwrap();
        let d_pi = -analytic / (mu * mu);
        prop_assert!(d_pi > 0.0);
        let h = 1e-6;
        let mut plus = m.to_rows();
        plus[row][target] += h;
        plus[row][donor] -= h;
        let mut minus = m.to_rows();
        minus[row][target] -= h;
        minus[row][donor] += h;
        let pi_plus = stationary_linear(&TransitionMatrix::validate(&plus, 1e-9).unwrap())
            .unwrap()
            .get(target);
        let pi_minus = stationary_linear(&TransitionMatrix::validate(&minus, 1e-9).unwrap())
            .unwrap()
            .get(target);
        let fd_pi = (pi_plus - pi_minus) / (2.0 * h);
        prop_assert!((fd_pi - d_pi).abs() <= 1e-4, "fd_pi {fd_pi} vs {d_pi}");
    }

    #[test]
    fn decompose_compose_roundtrip(n in 2usize..=8, seed in any::<u64>()) {
        let m = chain_from_seed(n, 0.01, seed);
        let mut rng = SplitMix64::substream(seed, 3);
        let s0 = rng.below(n);
        let mut prime = m.clone();
        let moves_applied = 1 + rng.below(3);
        for _ in 0..moves_applied {
            let pert = random_feasible_perturbation(&prime, s0, &mut rng, 1e-12);
            prime = apply_elementary(&prime, &pert).unwrap();
        }
        let report = check_theorem_conditions(&m, &prime, s0).unwrap();
        prop_assert!(report.holds);
        prop_assert!(report.strict);

        let moves = decompose(&m, &prime, s0).unwrap();
        let mut rebuilt = m.clone();
        for mv in &moves {
            // every intermediate is a valid stochastic matrix
            rebuilt = apply_elementary(&rebuilt, mv).unwrap();
            prop_assert!(TransitionMatrix::validate(&rebuilt.to_rows(), 1e-12).is_ok());
        }
        for i in 0..n {
            for j in 0..n {
                prop_assert!((rebuilt.entry(i, j) - prime.entry(i, j)).abs() <= 1e-14);
            }
        }
        // order independence of the endpoint
        let mut reversed = m.clone();
        for mv in moves.iter().rev() {
            reversed = apply_elementary(&reversed, mv).unwrap();
        }
        for i in 0..n {
            for j in 0..n {
                prop_assert!((reversed.entry(i, j) - rebuilt.entry(i, j)).abs() <= 1e-15);
            }
        }
        // the monotone consequence, end to end
        let before = stationary_linear(&m).unwrap().get(s0);
        let after = stationary_linear(&prime).unwrap().get(s0);
        prop_assert!(after > before + 1e-12, "{after} vs {before}");
    }
}

#[test]
fn monte_carlo_consistency_bulk() {
    // 4-sigma agreement in at least 99% of (chain, state) cases
    let mut cases = 0u32;
    let mut misses = 0u32;
    for chain_idx in 0..15u64 {
        let mut rng = SplitMix64::substream(2024, chain_idx);
        let n = 2 + rng.below(7); // n in [2, 8]
        let m = random_ergodic_chain(n, 0.05, &mut rng).unwrap();
        for s0 in 0..n {
            let exact = expected_return_time(&m, s0).unwrap();
            let est = simulate_return_time(&m, s0, 4000, 31 + chain_idx).unwrap();
            cases += 1;
            if (est.mean - exact).abs() > 4.0 * est.std_error {
                misses += 1;
            }
            if s0 + 1 < n {
                let exact_hit = expected_hitting_times(&m, s0).unwrap().hit[s0 + 1];
                let est_hit =
                    simulate_hitting_time(&m, s0 + 1, s0, 4000, 77 + chain_idx).unwrap();
                cases += 1;
                if (est_hit.mean - exact_hit).abs() > 4.0 * est_hit.std_error {
                    misses += 1;
                }
            }
        }
    }
    assert!(cases >= 100, "need a meaningful corpus, got {cases}");
    let rate = f64::from(misses) / f64::from(cases);
    assert!(rate <= 0.01, "{misses}/{cases} cases outside 4 sigma");
}

#[test]
fn occupancy_matches_stationary_on_random_chains() {
    for seed in 0..3u64 {
        let mut rng = SplitMix64::substream(99, seed);
        let n = 2 + rng.below(5);
        let m = random_ergodic_chain(n, 0.02, &mut rng).unwrap();
        let freq = simulate_occupancy(&m, 1_000_000, seed).unwrap();
        let pi = stationary_linear(&m).unwrap();
        let l1: f64 = freq.iter().zip(pi.probs()).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 <= 0.01, "seed {seed}: l1 = {l1}");
    }
}
