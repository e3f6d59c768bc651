//! Trajectory simulation: empirical return times, hitting times, and
//! occupancy frequencies.
//!
//! Next states are sampled by an inverse-CDF scan over precomputed
//! cumulative rows.  Each trajectory draws from its own substream of the
//! caller's seed, so estimates do not depend on execution order and the same
//! `(inputs, seed)` pair always reproduces the same numbers.

use crate::chain::{require_ergodic, TransitionMatrix};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Hard cap on a single trajectory's length.  Reaching it on an irreducible
/// chain is astronomically unlikely and indicates near-reducible input.
pub const STEP_CAP: u64 = 10_000_000;

/// A seeded estimate of a mean quantity.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimulationEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Per-row cumulative distributions for fast next-state sampling.
struct CumulativeRows {
    n: usize,
    cumulative: Vec<f64>,
}

impl CumulativeRows {
    fn new(m: &TransitionMatrix) -> Self {
        let n = m.n();
        let mut cumulative = vec![0.0; n * n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += m.entry(i, j);
                cumulative[i * n + j] = acc;
            }
            cumulative[i * n + n - 1] = 1.0;
        }
        CumulativeRows { n, cumulative }
    }

    #[inline]
    fn step(&self, state: usize, rng: &mut SplitMix64) -> usize {
        let u = rng.uniform();
        let row = &self.cumulative[state * self.n..(state + 1) * self.n];
        for (j, &c) in row.iter().enumerate() {
            if u < c {
                return j;
            }
        }
        self.n - 1
    }
}

fn estimate_from_samples(samples: &[f64], seed: u64) -> SimulationEstimate {
    let count = samples.len() as u64;
    let mean = samples.iter().sum::<f64>() / count as f64;
    let std_error = if count > 1 {
        let var =
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    } else {
        0.0
    };
    SimulationEstimate { mean, std_error, samples: count, seed }
}

/// Walk from `start` until `target` is reached; returns the step count.
fn first_passage(
    cum: &CumulativeRows,
    start: usize,
    target: usize,
    rng: &mut SplitMix64,
) -> Result<u64> {
    let mut state = start;
    let mut steps: u64 = 0;
    loop {
        state = cum.step(state, rng);
        steps += 1;
        if state == target {
            return Ok(steps);
        }
        if steps >= STEP_CAP {
            return Err(Error::CapExceeded { cap: STEP_CAP });
        }
    }
}

/// Simulate the first return time to `s0` over independent trajectories.
pub fn simulate_return_time(
    m: &TransitionMatrix,
    s0: usize,
    trajectories: u64,
    seed: u64,
) -> Result<SimulationEstimate> {
    m.check_state(s0)?;
    require_ergodic(m)?;
    if trajectories == 0 {
        return Err(Error::BadParameter("need at least one trajectory".into()));
    }
    let cum = CumulativeRows::new(m);
    let mut samples = Vec::with_capacity(trajectories as usize);
    for t in 0..trajectories {
        let mut rng = SplitMix64::substream(seed, t);
        samples.push(first_passage(&cum, s0, s0, &mut rng)? as f64);
    }
    Ok(estimate_from_samples(&samples, seed))
}

/// Simulate the first hitting time of `s0` starting from `from`.
pub fn simulate_hitting_time(
    m: &TransitionMatrix,
    from: usize,
    s0: usize,
    trajectories: u64,
    seed: u64,
) -> Result<SimulationEstimate> {
    m.check_state(from)?;
    m.check_state(s0)?;
    if from == s0 {
        return Err(Error::SameState);
    }
    require_ergodic(m)?;
    if trajectories == 0 {
        return Err(Error::BadParameter("need at least one trajectory".into()));
    }
    let cum = CumulativeRows::new(m);
    let mut samples = Vec::with_capacity(trajectories as usize);
    for t in 0..trajectories {
        let mut rng = SplitMix64::substream(seed, t);
        samples.push(first_passage(&cum, from, s0, &mut rng)? as f64);
    }
    Ok(estimate_from_samples(&samples, seed))
}

/// Long-run state frequencies over a single trajectory of `steps` steps
/// starting at state 0.
pub fn simulate_occupancy(m: &TransitionMatrix, steps: u64, seed: u64) -> Result<Vec<f64>> {
    require_ergodic(m)?;
    if steps == 0 {
        return Err(Error::BadParameter("need at least one step".into()));
    }
    let cum = CumulativeRows::new(m);
    let mut rng = SplitMix64::substream(seed, 0);
    let mut counts = vec![0u64; m.n()];
    let mut state = 0usize;
    for _ in 0..steps {
        state = cum.step(state, &mut rng);
        counts[state] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / steps as f64).collect())
}
