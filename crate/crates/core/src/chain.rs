//! The Markov model: a validated row-stochastic transition matrix and the
//! structural checks (irreducibility, aperiodicity) that the analysis
//! modules require.
//!
//! States are the indices `0..n`.  Entry `(i, j)` is the probability of
//! moving from state `i` to state `j`.  Construction goes through
//! [`TransitionMatrix::validate`], which rejects anything that is not
//! row-stochastic within the caller's tolerance and then renormalizes each
//! row exactly, so downstream identities can be tested to tight tolerances.

use crate::error::{Error, Result};

/// Default validation tolerance for row sums and negativity.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// A validated n x n row-stochastic matrix.  Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// Irreducibility/periodicity report for a chain.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct StructureReport {
    pub irreducible: bool,
    pub aperiodic: bool,
    /// Defined only for irreducible chains.
    pub period: Option<usize>,
    /// Communicating classes, each sorted, ordered by smallest member.
    pub communicating_classes: Vec<Vec<usize>>,
}

impl TransitionMatrix {
    /// Validate raw rows and build a matrix.
    ///
    /// Rows whose sums deviate from 1 by at most `tolerance` are renormalized
    /// exactly; entries in `(-tolerance, 0)` are clamped to zero.  Anything
    /// worse is rejected, never silently fixed.
    pub fn validate(raw: &[Vec<f64>], tolerance: f64) -> Result<Self> {
        let n = raw.len();
        if n < 2 {
            return Err(Error::TooSmall { n });
        }
        for (i, row) in raw.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: i, len: row.len(), n });
            }
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in raw.iter().enumerate() {
            let mut sum = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NotFinite { row: i, col: j });
                }
                if v < -tolerance {
                    return Err(Error::NegativeEntry { row: i, col: j });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::RowSumViolation { row: i, sum });
            }
            let mut clamped: Vec<f64> =
                row.iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect();
            renormalize_exact(&mut clamped);
            entries.extend_from_slice(&clamped);
        }
        Ok(TransitionMatrix { n, entries, labels: None })
    }

    /// Attach state labels; the list length must equal `n`.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch { left: labels.len(), right: self.n });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Rows as owned vectors (for serialization and perturbation edits).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Bounds-check a state index against this matrix.
    pub fn check_state(&self, state: usize) -> Result<()> {
        if state < self.n {
            Ok(())
        } else {
            Err(Error::StateOutOfRange { state, n: self.n })
        }
    }
}

/// Rescale a nonnegative row so its sum is 1 to machine precision.
///
/// Rows that already sum to 1 within a few ulps are kept bit-for-bit, which
/// makes validation idempotent; otherwise the row is divided by its sum and
/// the remaining sub-ulp residual is folded into the largest entry.
fn renormalize_exact(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() <= 1e-13 {
        return;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
    let rescaled: f64 = row.iter().sum();
    let delta = 1.0 - rescaled;
    if delta != 0.0 {
        let idx = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("row is non-empty");
        row[idx] += delta;
    }
}

/// Adjacency lists of the positive-entry digraph.
fn digraph(m: &TransitionMatrix) -> Vec<Vec<usize>> {
    let n = m.n();
    (0..n)
        .map(|i| (0..n).filter(|&j| m.entry(i, j) > 0.0).collect())
        .collect()
}

fn reverse(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (u, outs) in adj.iter().enumerate() {
        for &v in outs {
            rev[v].push(u);
        }
    }
    rev
}

/// Kosaraju's strongly connected components, iterative.
fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        // iterative post-order
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next < adj[u].len() {
                let v = adj[u][*next];
                *next += 1;
                if !visited[v] {
                    visited[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
                stack.pop();
            }
        }
    }
    let rev = reverse(adj);
    let mut component = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &start in order.iter().rev() {
        if component[start] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let mut members = vec![start];
        component[start] = id;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in &rev[u] {
                if component[v] == usize::MAX {
                    component[v] = id;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        classes.push(members);
    }
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Period of an irreducible positive-entry digraph: gcd over all edges
/// `u -> v` of `level(u) + 1 - level(v)` on a BFS levelling from state 0.
fn period_of_irreducible(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut level = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    level[0] = 0;
    queue.push_back(0);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g: u64 = 0;
    for (u, outs) in adj.iter().enumerate() {
        for &v in outs {
            let diff = level[u] as i64 + 1 - level[v] as i64;
            g = gcd(g, diff.unsigned_abs());
        }
    }
    // a strongly connected graph always has at least one non-tree edge
    debug_assert!(g >= 1);
    g as usize
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Compute the structural report: communicating classes, irreducibility,
/// period, aperiodicity.
pub fn structure(m: &TransitionMatrix) -> StructureReport {
    let adj = digraph(m);
    let classes = strongly_connected_components(&adj);
    let irreducible = classes.len() == 1;
    let period = if irreducible { Some(period_of_irreducible(&adj)) } else { None };
    StructureReport {
        irreducible,
        aperiodic: irreducible && period == Some(1),
        period,
        communicating_classes: classes,
    }
}

/// Refuse reducible chains.  Irreducibility guarantees a unique strictly
/// positive invariant distribution, which every analysis operation assumes.
/// Aperiodicity is reported by [`structure`] but not required here.
pub fn require_ergodic(m: &TransitionMatrix) -> Result<()> {
    let report = structure(m);
    if report.irreducible {
        Ok(())
    } else {
        Err(Error::NotIrreducible { classes: report.communicating_classes })
    }
}
