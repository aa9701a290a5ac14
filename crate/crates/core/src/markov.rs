//! Absorbing-chain analysis: the live state distribution from the fundamental
//! matrix, plus seeded Monte-Carlo rollouts and visitation statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::LuFactors;
use crate::mdp::{Mdp, ROW_SUM_TOL};

/// Pivot magnitude below which (I - Q) is declared numerically singular.
///
/// Converged Boltzmann policies are strictly positive, so a singular system
/// always indicates a hand-built policy that never reaches the goal.
const PIVOT_TOL: f64 = 1e-12;

/// A stochastic policy: one action distribution per state, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    /// Builds a policy from per-state rows, validating each row as a
    /// probability distribution.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_states = rows.len();
        if n_states == 0 {
            return Err(Error::InvalidArgument {
                reason: "policy needs at least one state".to_string(),
            });
        }
        let n_actions = rows[0].len();
        let mut probs = Vec::with_capacity(n_states * n_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != n_actions {
                return Err(Error::DimensionMismatch {
                    context: "policy row length",
                    expected: n_actions,
                    actual: row.len(),
                });
            }
            let mut sum = 0.0;
            for &p in row {
                if p < 0.0 || !p.is_finite() {
                    return Err(Error::InvalidDistribution {
                        reason: format!("policy row {s} has an invalid probability"),
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidDistribution {
                    reason: format!("policy row {s} sums to {sum}, expected 1"),
                });
            }
            probs.extend_from_slice(row);
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    /// The uniform policy.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// A deterministic policy from one action index per state.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * n_actions + a] = 1.0;
        }
        Self {
            n_states: actions.len(),
            n_actions,
            probs,
        }
    }

    pub(crate) fn from_raw(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), n_states * n_actions);
        Self {
            n_states,
            n_actions,
            probs,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// pi(. | s)
    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// pi(a | s)
    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    fn matches(&self, mdp: &Mdp) -> Result<()> {
        if self.n_states != mdp.n_states() {
            return Err(Error::DimensionMismatch {
                context: "policy state count",
                expected: mdp.n_states(),
                actual: self.n_states,
            });
        }
        if self.n_actions != mdp.n_actions() {
            return Err(Error::DimensionMismatch {
                context: "policy action count",
                expected: mdp.n_actions(),
                actual: self.n_actions,
            });
        }
        Ok(())
    }
}

/// The state-to-state Markov chain induced by a policy:
/// p(s'|s) = sum_a pi(a|s) p(s'|s,a).
#[derive(Debug, Clone)]
pub struct MarkovChain {
    n: usize,
    probs: Vec<f64>,
}

impl MarkovChain {
    pub fn n_states(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n..(s + 1) * self.n]
    }

    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.n + to]
    }
}

/// Collapses an MDP and a policy into the induced state chain.
pub fn chain_from_policy(mdp: &Mdp, policy: &Policy) -> Result<MarkovChain> {
    policy.matches(mdp)?;
    let n = mdp.n_states();
    let mut probs = vec![0.0; n * n];
    for s in 0..n {
        let row = policy.row(s);
        for (a, &pa) in row.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let tr = mdp.transition_row(a, s);
            let out = &mut probs[s * n..(s + 1) * n];
            for (o, &p) in out.iter_mut().zip(tr) {
                *o += pa * p;
            }
        }
    }
    Ok(MarkovChain { n, probs })
}

/// Where the agent lives while still on its way to the goal.
///
/// `probs` puts zero mass on the goal and sums to one over transient states;
/// `live_times[s]` is the expected number of transient steps of a trajectory
/// started at `s` (zero at the goal).
#[derive(Debug, Clone)]
pub struct LiveDistribution {
    pub probs: Vec<f64>,
    pub live_times: Vec<f64>,
}

/// Fundamental-matrix view of the absorbing chain induced by a policy.
///
/// Holds an LU factorization of (I - Q) over the transient states; all
/// quantities are obtained by linear solves, never by explicit inversion.
pub struct AbsorbingChain {
    n: usize,
    goal: usize,
    transient: Vec<usize>,
    position: Vec<Option<usize>>,
    lu: LuFactors,
}

impl AbsorbingChain {
    pub fn new(mdp: &Mdp, policy: &Policy) -> Result<Self> {
        let chain = chain_from_policy(mdp, policy)?;
        Self::from_chain(&chain, mdp.goal())
    }

    pub fn from_chain(chain: &MarkovChain, goal: usize) -> Result<Self> {
        let n = chain.n_states();
        let transient: Vec<usize> = (0..n).filter(|&s| s != goal).collect();
        if transient.is_empty() {
            return Err(Error::NonAbsorbing);
        }
        let t = transient.len();
        let mut position = vec![None; n];
        for (i, &s) in transient.iter().enumerate() {
            position[s] = Some(i);
        }
        let mut system = vec![0.0; t * t];
        for (i, &s) in transient.iter().enumerate() {
            for (j, &s2) in transient.iter().enumerate() {
                let q = chain.prob(s, s2);
                system[i * t + j] = if i == j { 1.0 - q } else { -q };
            }
        }
        let lu = LuFactors::factor(system, t, PIVOT_TOL).map_err(|_| Error::NonAbsorbing)?;
        Ok(Self {
            n,
            goal,
            transient: transient.clone(),
            position,
            lu,
        })
    }

    /// Expected live time per starting state (row sums of the fundamental
    /// matrix), indexed by state; zero at the goal.
    pub fn live_times(&self) -> Vec<f64> {
        let ones = vec![1.0; self.transient.len()];
        let l = self.lu.solve(&ones);
        self.scatter(&l)
    }

    /// Expected visits to every state for a trajectory started at `start`
    /// (one row of the fundamental matrix), indexed by state.
    pub fn expected_visits(&self, start: usize) -> Result<Vec<f64>> {
        let i = self.position_of(start)?;
        let mut e = vec![0.0; self.transient.len()];
        e[i] = 1.0;
        let row = self.lu.solve_transpose(&e);
        Ok(self.scatter(&row))
    }

    /// Probability of ever visiting each state from `start` before
    /// absorption: n_sj / n_jj. The goal entry is 1.
    pub fn hitting_probabilities(&self, start: usize) -> Result<Vec<f64>> {
        let visits = self.expected_visits(start)?;
        let mut out = vec![0.0; self.n];
        for &j in &self.transient {
            let col = self.column_visits(j);
            out[j] = visits[j] / col[j];
        }
        out[self.goal] = 1.0;
        Ok(out)
    }

    /// Live distribution with the uniform start u_i = 1/(|S|-1):
    /// p(s_j) = sum_i u_i n_ij / l_i.
    pub fn live_distribution(&self) -> Result<LiveDistribution> {
        let t = self.transient.len();
        let ones = vec![1.0; t];
        let l = self.lu.solve(&ones);
        let u = 1.0 / t as f64;
        let weights: Vec<f64> = l.iter().map(|&li| u / li).collect();
        let p = self.lu.solve_transpose(&weights);
        let total: f64 = p.iter().sum();
        if !(total.is_finite() && (total - 1.0).abs() <= 1e-10) {
            return Err(Error::NonAbsorbing);
        }
        Ok(LiveDistribution {
            probs: self.scatter(&p),
            live_times: self.scatter(&l),
        })
    }

    fn column_visits(&self, j: usize) -> Vec<f64> {
        // Column j of the fundamental matrix: solve (I - Q) x = e_j.
        let t = self.transient.len();
        let mut e = vec![0.0; t];
        e[self.position[j].expect("transient state")] = 1.0;
        let col = self.lu.solve(&e);
        self.scatter(&col)
    }

    fn position_of(&self, state: usize) -> Result<usize> {
        if state >= self.n {
            return Err(Error::StateOutOfRange {
                index: state,
                n_states: self.n,
            });
        }
        self.position[state].ok_or(Error::InvalidArgument {
            reason: format!("state {state} is the absorbing goal"),
        })
    }

    fn scatter(&self, transient_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &s) in self.transient.iter().enumerate() {
            out[s] = transient_values[i];
        }
        out
    }
}

/// Live distribution of `policy` on `mdp` under the uniform start.
pub fn live_distribution(mdp: &Mdp, policy: &Policy) -> Result<LiveDistribution> {
    AbsorbingChain::new(mdp, policy)?.live_distribution()
}

/// Pass-through statistics over sampled rollouts.
#[derive(Debug, Clone)]
pub struct VisitationStats {
    /// Fraction of completed trajectories that visit each state at least once.
    pub pass_through: Vec<f64>,
    /// Total trajectories sampled.
    pub trajectory_count: usize,
    /// Trajectories that reached the goal within `max_steps`.
    pub completed: usize,
    /// Trajectories truncated at `max_steps`.
    pub truncated: usize,
    /// Mean step count of completed trajectories.
    pub mean_length: f64,
}

/// Default rollout cap: long enough that truncation is vanishingly rare for
/// converged policies even at small beta, while bounding runtime.
pub fn default_max_steps(n_states: usize) -> usize {
    100 * n_states
}

/// Samples `count` independent rollouts of `policy` from `start`.
///
/// Trajectory `t` draws from its own ChaCha8 substream seeded with
/// `seed ^ t`, so results are bit-reproducible for a given
/// (seed, count, max_steps) and independent of how workers partition the
/// batch. Proportions are computed over completed trajectories only.
pub fn sample_trajectories(
    mdp: &Mdp,
    policy: &Policy,
    start: usize,
    count: usize,
    seed: u64,
    max_steps: usize,
) -> Result<VisitationStats> {
    if count == 0 || max_steps == 0 {
        return Err(Error::InvalidArgument {
            reason: "need count >= 1 and max_steps >= 1".to_string(),
        });
    }
    if start >= mdp.n_states() {
        return Err(Error::StateOutOfRange {
            index: start,
            n_states: mdp.n_states(),
        });
    }
    let chain = chain_from_policy(mdp, policy)?;
    let goal = mdp.goal();
    let n = mdp.n_states();

    struct Rollout {
        visited: Vec<bool>,
        steps: usize,
        completed: bool,
    }

    let rollouts: Vec<Rollout> = (0..count as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t);
            let mut visited = vec![false; n];
            let mut state = start;
            visited[state] = true;
            let mut steps = 0;
            while state != goal && steps < max_steps {
                state = step(&chain, state, &mut rng);
                visited[state] = true;
                steps += 1;
            }
            Rollout {
                visited,
                steps,
                completed: state == goal,
            }
        })
        .collect();

    let completed = rollouts.iter().filter(|r| r.completed).count();
    if completed == 0 {
        return Err(Error::AllTruncated { count, max_steps });
    }
    let mut hits = vec![0usize; n];
    let mut total_steps = 0usize;
    for r in &rollouts {
        if !r.completed {
            continue;
        }
        total_steps += r.steps;
        for (s, &v) in r.visited.iter().enumerate() {
            if v {
                hits[s] += 1;
            }
        }
    }
    Ok(VisitationStats {
        pass_through: hits.iter().map(|&h| h as f64 / completed as f64).collect(),
        trajectory_count: count,
        completed,
        truncated: count - completed,
        mean_length: total_steps as f64 / completed as f64,
    })
}

/// One inverse-CDF draw from a chain row.
fn step(chain: &MarkovChain, state: usize, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let row = chain.row(state);
    let mut acc = 0.0;
    for (s2, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return s2;
        }
    }
    // Guard against row sums a hair below 1.
    row.len() - 1
}
