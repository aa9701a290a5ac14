//! The alternating Bellman/Blahut-Arimoto solver for free-energy-optimal
//! policies, and the quantities derived from a converged policy: Decision
//! Information, policy values and composite-policy evaluation.
//!
//! Everything is base 2: Boltzmann weights are 2^(beta Q), free energies are
//! -(1/beta) log2 Z, and Decision Information is in bits. This keeps beta
//! values directly comparable across all outputs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::info::{action_marginal, kl_slices, Distribution};
use crate::markov::{chain_from_policy, live_distribution, LiveDistribution, MarkovChain, Policy};
use crate::mdp::Mdp;

/// Absolute residual for the post-hoc fixed points (Decision Information,
/// policy evaluation).
const EVAL_TOL: f64 = 1e-9;

/// Sweep cap for the post-hoc fixed points; exceeding it means the policy
/// does not absorb.
const EVAL_MAX_SWEEPS: usize = 200_000;

/// Convergence thresholds and limits for [`solve`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Trade-off multiplier; large beta favours performance, small beta
    /// favours information parsimony. Strictly positive.
    pub beta: f64,
    /// Stop when the free-energy sweep moves by no more than this.
    pub eps_f: f64,
    /// Stop when max-over-states KL between consecutive policies (bits) is
    /// no more than this.
    pub eps_pi: f64,
    pub max_iters: usize,
    /// Floor applied to the marginal action prior before renormalization;
    /// keeps early iterations clear of division blowups. No benchmark ends
    /// with an entry at the floor.
    pub prior_floor: f64,
}

impl SolverConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument {
                reason: format!("beta must be strictly positive and finite, got {beta}"),
            });
        }
        Ok(Self {
            beta,
            eps_f: 1e-5,
            eps_pi: 1e-5,
            max_iters: 10_000,
            prior_floor: 1e-12,
        })
    }

    /// The same thresholds at a different beta.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let mut cfg = Self::new(beta)?;
        cfg.eps_f = self.eps_f;
        cfg.eps_pi = self.eps_pi;
        cfg.max_iters = self.max_iters;
        cfg.prior_floor = self.prior_floor;
        Ok(cfg)
    }

    pub fn with_tolerances(mut self, eps_f: f64, eps_pi: f64) -> Self {
        self.eps_f = eps_f;
        self.eps_pi = eps_pi;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

/// A converged (or best-effort) free-energy solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub policy: Policy,
    /// Free energy per state: the exact evaluation of `policy` against
    /// `action_prior`, so F = I_D / beta - V holds by construction.
    pub free_energy: Vec<f64>,
    /// Decision Information per state, in bits.
    pub decision_information: Vec<f64>,
    /// Expected return per state under `policy`.
    pub value: Vec<f64>,
    /// Marginal action prior of `policy` over its live distribution.
    pub action_prior: Distribution,
    pub live: LiveDistribution,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the alternating iteration from the uniform policy and zero free
/// energy until both residuals fall below the configured thresholds.
///
/// Each pass recomputes the live distribution and action prior from the
/// current policy, sweeps the soft Bellman update in log domain, and then
/// rebuilds the Boltzmann policy. Failure to converge returns
/// [`Error::NoConvergence`] carrying the best iterate so its outputs can
/// still be inspected or written with the `converged` flag cleared.
pub fn solve(mdp: &Mdp, config: &SolverConfig) -> Result<SolveResult> {
    let policy = Policy::uniform(mdp.n_states(), mdp.n_actions());
    let free_energy = vec![0.0; mdp.n_states()];
    solve_from(mdp, config, &policy, &free_energy)
}

/// [`solve`] warm-started from a previous policy and free-energy table.
///
/// Warm starts are an optimization for beta sweeps; they land on the same
/// fixed point as a cold start within solver tolerance.
pub fn solve_from(
    mdp: &Mdp,
    config: &SolverConfig,
    initial_policy: &Policy,
    initial_free_energy: &[f64],
) -> Result<SolveResult> {
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let goal = mdp.goal();
    if initial_free_energy.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial free energy length",
            expected: n,
            actual: initial_free_energy.len(),
        });
    }
    if n == 1 {
        // Degenerate world: the only state is the absorbing goal. There are
        // no live states and nothing to decide.
        return Ok(SolveResult {
            policy: Policy::uniform(1, m),
            free_energy: vec![0.0],
            decision_information: vec![0.0],
            value: vec![0.0],
            action_prior: Distribution::uniform(m),
            live: LiveDistribution {
                probs: vec![0.0],
                live_times: vec![0.0],
            },
            iterations: 0,
            converged: true,
        });
    }

    let beta = config.beta;
    let mut f = initial_free_energy.to_vec();
    f[goal] = 0.0;
    let mut policy = initial_policy.clone();
    let mut iterations = 0;
    let mut f_residual = f64::INFINITY;
    let mut pi_residual = f64::INFINITY;
    let mut converged = false;

    let mut new_f = vec![0.0; n];
    let mut log_weights = vec![0.0; m];

    while iterations < config.max_iters {
        iterations += 1;
        let live = live_distribution(mdp, &policy)?;
        let prior = floored_prior(&policy, &live, config.prior_floor)?;
        let log2_prior: Vec<f64> = prior.as_slice().iter().map(|&p| p.log2()).collect();

        let mut new_probs = vec![0.0; n * m];
        for s in 0..n {
            for (a, lw) in log_weights.iter_mut().enumerate() {
                let tr = mdp.transition_row(a, s);
                let re = mdp.reward_row(a, s);
                let mut q = 0.0;
                for ((&p, &r), &fs) in tr.iter().zip(re).zip(&f) {
                    if p != 0.0 {
                        q += p * (r - fs);
                    }
                }
                *lw = log2_prior[a] + beta * q;
            }
            let shift = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !shift.is_finite() {
                return Err(Error::NumericalUnderflow);
            }
            let mut z = 0.0;
            for lw in &log_weights {
                z += (lw - shift).exp2();
            }
            if !(z > 0.0) || !z.is_finite() {
                return Err(Error::NumericalUnderflow);
            }
            new_f[s] = -(shift + z.log2()) / beta;
            let row = &mut new_probs[s * m..(s + 1) * m];
            for (a, lw) in log_weights.iter().enumerate() {
                row[a] = (lw - shift).exp2() / z;
            }
        }
        new_f[goal] = 0.0;

        f_residual = f
            .iter()
            .zip(&new_f)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let new_policy = Policy::from_raw(n, m, new_probs);
        pi_residual = (0..n)
            .map(|s| kl_slices(new_policy.row(s), policy.row(s)))
            .fold(0.0f64, f64::max);

        f.copy_from_slice(&new_f);
        policy = new_policy;

        if f_residual <= config.eps_f && pi_residual <= config.eps_pi {
            converged = true;
            break;
        }
    }

    let live = live_distribution(mdp, &policy)?;
    let prior = floored_prior(&policy, &live, config.prior_floor)?;
    let decision_information = decision_information(mdp, &policy, &prior)?;
    let value = evaluate_policy(mdp, &policy)?;
    let uniform_priors = broadcast_prior(&prior, n);
    let free_energy = evaluate_free_energy(mdp, &policy, &uniform_priors, beta)?;
    let result = SolveResult {
        policy,
        free_energy,
        decision_information,
        value,
        action_prior: prior,
        live,
        iterations,
        converged,
    };
    if converged {
        Ok(result)
    } else {
        Err(Error::NoConvergence {
            iterations,
            f_residual,
            policy_residual: pi_residual,
            result: Box::new(result),
        })
    }
}

/// Marginal action prior over the live distribution, clamped below by
/// `floor` and renormalized.
fn floored_prior(policy: &Policy, live: &LiveDistribution, floor: f64) -> Result<Distribution> {
    let total: f64 = live.probs.iter().sum();
    let normalized: Vec<f64> = live.probs.iter().map(|&p| p / total).collect();
    let marginal = action_marginal(policy, &Distribution::new(normalized)?)?;
    let mut clamped: Vec<f64> = marginal.as_slice().iter().map(|&p| p.max(floor)).collect();
    let sum: f64 = clamped.iter().sum();
    for p in &mut clamped {
        *p /= sum;
    }
    Distribution::new(clamped)
}

fn broadcast_prior(prior: &Distribution, n_states: usize) -> Policy {
    let rows = vec![prior.as_slice().to_vec(); n_states];
    Policy::from_rows(rows).expect("prior rows are distributions")
}

/// Iterates x = local + P x over transient states to `EVAL_TOL`.
fn chain_fixed_point(
    chain: &MarkovChain,
    goal: usize,
    local: &[f64],
) -> Result<Vec<f64>> {
    let n = chain.n_states();
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..EVAL_MAX_SWEEPS {
        let mut residual = 0.0f64;
        for s in 0..n {
            if s == goal {
                continue;
            }
            let row = chain.row(s);
            let mut acc = local[s];
            for (s2, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    acc += p * x[s2];
                }
            }
            if !acc.is_finite() {
                return Err(Error::Divergence);
            }
            residual = residual.max((acc - x[s]).abs());
            next[s] = acc;
        }
        std::mem::swap(&mut x, &mut next);
        if residual <= EVAL_TOL {
            return Ok(x);
        }
    }
    Err(Error::Divergence)
}

/// Decision Information of `policy` charged against `prior`, per state, in
/// bits: the fixed point of
/// I(s) = E[ log2(pi(a|s)/prior(a)) + I(s') ], with I(goal) = 0.
pub fn decision_information(
    mdp: &Mdp,
    policy: &Policy,
    prior: &Distribution,
) -> Result<Vec<f64>> {
    if prior.len() != mdp.n_actions() {
        return Err(Error::DimensionMismatch {
            context: "prior action count",
            expected: mdp.n_actions(),
            actual: prior.len(),
        });
    }
    let goal = mdp.goal();
    let mut local = vec![0.0; mdp.n_states()];
    for s in 0..mdp.n_states() {
        if s == goal {
            continue;
        }
        let kl = kl_slices(policy.row(s), prior.as_slice());
        if !kl.is_finite() {
            return Err(Error::InvalidArgument {
                reason: format!("prior has zero mass on an action used in state {s}"),
            });
        }
        local[s] = kl;
    }
    let chain = chain_from_policy(mdp, policy)?;
    chain_fixed_point(&chain, goal, &local)
}

/// Expected return per state of a fixed policy (policy evaluation).
pub fn evaluate_policy(mdp: &Mdp, policy: &Policy) -> Result<Vec<f64>> {
    let goal = mdp.goal();
    let mut local = vec![0.0; mdp.n_states()];
    for s in 0..mdp.n_states() {
        if s == goal {
            continue;
        }
        local[s] = policy
            .row(s)
            .iter()
            .enumerate()
            .map(|(a, &p)| p * mdp.expected_reward(a, s))
            .sum();
    }
    let chain = chain_from_policy(mdp, policy)?;
    chain_fixed_point(&chain, goal, &local)
}

/// Free energy of a fixed policy with a per-state charging prior:
/// F(s) = E[ (1/beta) log2(pi(a|s)/prior_s(a)) - r + F(s') ], F(goal) = 0.
///
/// The per-state prior is what makes hierarchical (switched) policies
/// evaluable: charge each region of the state space against its own
/// subpolicy's marginal.
pub fn evaluate_free_energy(
    mdp: &Mdp,
    policy: &Policy,
    priors: &Policy,
    beta: f64,
) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument {
            reason: format!("beta must be strictly positive, got {beta}"),
        });
    }
    if priors.n_states() != mdp.n_states() || priors.n_actions() != mdp.n_actions() {
        return Err(Error::DimensionMismatch {
            context: "per-state prior table",
            expected: mdp.n_states() * mdp.n_actions(),
            actual: priors.n_states() * priors.n_actions(),
        });
    }
    let goal = mdp.goal();
    let mut local = vec![0.0; mdp.n_states()];
    for s in 0..mdp.n_states() {
        if s == goal {
            continue;
        }
        let kl = kl_slices(policy.row(s), priors.row(s));
        if !kl.is_finite() {
            return Err(Error::InvalidArgument {
                reason: format!("prior has zero mass on an action used in state {s}"),
            });
        }
        let expected_cost: f64 = policy
            .row(s)
            .iter()
            .enumerate()
            .map(|(a, &p)| p * mdp.expected_reward(a, s))
            .sum();
        local[s] = kl / beta - expected_cost;
    }
    let chain = chain_from_policy(mdp, policy)?;
    chain_fixed_point(&chain, goal, &local)
}

/// One point of a performance/information trade-off sweep.
#[derive(Debug, Clone, Copy)]
pub struct TradeoffPoint {
    pub beta: f64,
    /// Mean of V over all states (uniform expectation).
    pub expected_value: f64,
    /// Mean of I_D over all states, in bits.
    pub expected_information: f64,
}

/// Solves once per beta (ascending), warm-starting each solve from the
/// previous one, and reports uniform-expectation summaries.
pub fn tradeoff_curve(
    mdp: &Mdp,
    betas: &[f64],
    config: &SolverConfig,
) -> Result<Vec<TradeoffPoint>> {
    if betas.is_empty() {
        return Err(Error::InvalidArgument {
            reason: "need at least one beta".to_string(),
        });
    }
    if betas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument {
            reason: "betas must be strictly ascending".to_string(),
        });
    }
    let n = mdp.n_states() as f64;
    let mut points = Vec::with_capacity(betas.len());
    let mut warm: Option<(Policy, Vec<f64>)> = None;
    for &beta in betas {
        let cfg = config.with_beta(beta)?;
        let attempt = match &warm {
            None => solve(mdp, &cfg),
            Some((policy, f)) => solve_from(mdp, &cfg, policy, f),
        };
        let result = attempt.map_err(|e| Error::SweepFailed {
            beta,
            source: Box::new(e),
        })?;
        points.push(TradeoffPoint {
            beta,
            expected_value: result.value.iter().sum::<f64>() / n,
            expected_information: result.decision_information.iter().sum::<f64>() / n,
        });
        warm = Some((result.policy, result.free_energy));
    }
    Ok(points)
}

/// Splices two subpolicies at a subgoal: rows in `support1` (minus the
/// junction) come from `pi1`, everything else from `pi2`.
///
/// The supports may share at most one state (the junction); sharing more is
/// an error because the composite would be ambiguous there.
pub fn compose_policies(
    pi1: &Policy,
    support1: &BTreeSet<usize>,
    pi2: &Policy,
    support2: &BTreeSet<usize>,
) -> Result<Policy> {
    if pi1.n_states() != pi2.n_states() || pi1.n_actions() != pi2.n_actions() {
        return Err(Error::DimensionMismatch {
            context: "subpolicy shapes",
            expected: pi1.n_states() * pi1.n_actions(),
            actual: pi2.n_states() * pi2.n_actions(),
        });
    }
    let shared: Vec<usize> = support1.intersection(support2).copied().collect();
    if shared.len() > 1 {
        return Err(Error::OverlappingSupports { extra: shared });
    }
    let junction = shared.first().copied();
    let rows: Vec<Vec<f64>> = (0..pi1.n_states())
        .map(|s| {
            if support1.contains(&s) && Some(s) != junction {
                pi1.row(s).to_vec()
            } else {
                pi2.row(s).to_vec()
            }
        })
        .collect();
    Policy::from_rows(rows)
}

/// States reachable from `start` with per-step probability above `min_prob`
/// under the chain induced by `policy`. The start state is always included.
pub fn reachable_support(
    mdp: &Mdp,
    policy: &Policy,
    start: usize,
    min_prob: f64,
) -> Result<BTreeSet<usize>> {
    if start >= mdp.n_states() {
        return Err(Error::StateOutOfRange {
            index: start,
            n_states: mdp.n_states(),
        });
    }
    let chain = chain_from_policy(mdp, policy)?;
    let mut seen = BTreeSet::new();
    let mut frontier = vec![start];
    seen.insert(start);
    while let Some(s) = frontier.pop() {
        for (s2, &p) in chain.row(s).iter().enumerate() {
            if p > min_prob && seen.insert(s2) {
                frontier.push(s2);
            }
        }
    }
    Ok(seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{GridSpec, Neighborhood};
    use approx::assert_abs_diff_eq;

    fn grid(w: usize, h: usize, nbhd: Neighborhood, goal: usize) -> Mdp {
        Mdp::build_gridworld(&GridSpec::new(w, h, nbhd, goal).unwrap()).unwrap()
    }

    #[test]
    fn goal_rows_are_pinned_to_zero() {
        let mdp = grid(3, 3, Neighborhood::Manhattan, 4);
        let result = solve(&mdp, &SolverConfig::new(2.0).unwrap()).unwrap();
        assert_eq!(result.free_energy[4], 0.0);
        assert_eq!(result.decision_information[4], 0.0);
        assert_eq!(result.value[4], 0.0);
        assert!(result.converged);
    }

    #[test]
    fn degenerate_single_state_world_solves_to_zero() {
        let mdp = grid(1, 1, Neighborhood::Manhattan, 0);
        let result = solve(&mdp, &SolverConfig::new(1.0).unwrap()).unwrap();
        assert_eq!(result.free_energy, vec![0.0]);
        assert_eq!(result.decision_information, vec![0.0]);
        assert!(result.converged);
    }

    #[test]
    fn free_energy_is_nonnegative_across_betas() {
        let mdp = grid(4, 4, Neighborhood::Moore, 5);
        for beta in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let result = solve(&mdp, &SolverConfig::new(beta).unwrap()).unwrap();
            for (s, &fs) in result.free_energy.iter().enumerate() {
                assert!(fs >= -1e-12, "beta {beta}, state {s}: F = {fs}");
            }
        }
    }

    #[test]
    fn result_satisfies_the_free_energy_identity() {
        // F = I_D / beta - V for the returned policy, at every beta.
        let mdp = grid(4, 4, Neighborhood::Manhattan, 9);
        for beta in [0.05, 1.0, 100.0] {
            let result = solve(&mdp, &SolverConfig::new(beta).unwrap()).unwrap();
            for s in 0..16 {
                let reconstructed =
                    result.decision_information[s] / beta - result.value[s];
                assert_abs_diff_eq!(result.free_energy[s], reconstructed, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn state_independent_policy_has_zero_decision_information() {
        let mdp = grid(3, 3, Neighborhood::Manhattan, 8);
        // The same mixed row everywhere; charge against that row itself.
        let row = vec![0.4, 0.3, 0.2, 0.1];
        let policy = Policy::from_rows(vec![row.clone(); 9]).unwrap();
        let prior = Distribution::new(row).unwrap();
        let info = decision_information(&mdp, &policy, &prior).unwrap();
        for v in info {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn decision_information_diverges_without_absorption() {
        let mdp = grid(3, 1, Neighborhood::Manhattan, 2);
        // Walk west forever: never absorbs.
        let policy = Policy::deterministic(&[2, 2, 2], 4);
        let prior = Distribution::uniform(4);
        assert!(matches!(
            decision_information(&mdp, &policy, &prior),
            Err(Error::Divergence)
        ));
    }

    #[test]
    fn zero_mass_prior_on_used_action_is_rejected() {
        let mdp = grid(3, 1, Neighborhood::Manhattan, 2);
        let policy = Policy::deterministic(&[0, 0, 0], 4);
        let prior = Distribution::point_mass(1, 4);
        assert!(decision_information(&mdp, &policy, &prior).is_err());
    }

    #[test]
    fn non_convergence_carries_the_best_iterate() {
        let mdp = grid(5, 5, Neighborhood::Manhattan, 12);
        let config = SolverConfig::new(0.1).unwrap().with_max_iters(2);
        match solve(&mdp, &config) {
            Err(Error::NoConvergence {
                iterations, result, ..
            }) => {
                assert_eq!(iterations, 2);
                assert!(!result.converged);
                assert_eq!(result.free_energy.len(), 25);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let mdp = grid(5, 5, Neighborhood::Manhattan, 12);
        let cold_cfg = SolverConfig::new(1.0).unwrap();
        let cold = solve(&mdp, &cold_cfg).unwrap();
        let previous = solve(&mdp, &SolverConfig::new(0.5).unwrap()).unwrap();
        let warm = solve_from(&mdp, &cold_cfg, &previous.policy, &previous.free_energy).unwrap();
        for s in 0..25 {
            assert_abs_diff_eq!(cold.free_energy[s], warm.free_energy[s], epsilon = 1e-5);
            assert_abs_diff_eq!(
                cold.decision_information[s],
                warm.decision_information[s],
                epsilon = 1e-5
            );
        }
    }

    #[test]
    fn converged_policies_are_strictly_positive_at_moderate_beta() {
        let mdp = grid(4, 4, Neighborhood::Manhattan, 10);
        let result = solve(&mdp, &SolverConfig::new(1.0).unwrap()).unwrap();
        for s in 0..16 {
            for &p in result.policy.row(s) {
                assert!(p > 0.0);
            }
        }
        assert!(live_distribution(&mdp, &result.policy).is_ok());
    }

    #[test]
    fn tradeoff_requires_ascending_betas() {
        let mdp = grid(3, 3, Neighborhood::Manhattan, 4);
        let config = SolverConfig::new(1.0).unwrap();
        assert!(tradeoff_curve(&mdp, &[1.0, 0.5], &config).is_err());
        assert!(tradeoff_curve(&mdp, &[], &config).is_err());
    }

    #[test]
    fn compose_is_identity_when_both_subpolicies_agree() {
        let policy = Policy::uniform(5, 4);
        let s1: BTreeSet<usize> = [0, 1, 2].into_iter().collect();
        let s2: BTreeSet<usize> = [2, 3, 4].into_iter().collect();
        let composite = compose_policies(&policy, &s1, &policy, &s2).unwrap();
        assert_eq!(composite, policy);
    }

    #[test]
    fn compose_rejects_overlapping_supports() {
        let policy = Policy::uniform(5, 4);
        let s1: BTreeSet<usize> = [0, 1, 2, 3].into_iter().collect();
        let s2: BTreeSet<usize> = [2, 3, 4].into_iter().collect();
        match compose_policies(&policy, &s1, &policy, &s2) {
            Err(Error::OverlappingSupports { extra }) => assert_eq!(extra, vec![2, 3]),
            other => panic!("expected OverlappingSupports, got {other:?}"),
        }
    }

    #[test]
    fn composite_free_energy_is_additive_on_a_corridor() {
        // Hand-built one-way stochastic subpolicies on a 1x9 corridor with
        // the junction at 4: each mixes "east" with a wall bump, so supports
        // are genuinely disjoint while the information term stays nonzero.
        let beta = 2.0;
        let east_or_bump = |p_east: f64| vec![p_east, 1.0 - p_east, 0.0, 0.0];
        let west_or_bump = |p_west: f64| vec![0.0, 1.0 - p_west, p_west, 0.0];
        let mdp1 = grid(9, 1, Neighborhood::Manhattan, 4);
        let mdp2 = grid(9, 1, Neighborhood::Manhattan, 8);
        // Left of the mid-corridor subgoal walk east, right of it walk west,
        // so every start absorbs at 4 and no trajectory crosses it.
        let mut pi1_rows = vec![east_or_bump(0.7); 5];
        pi1_rows.extend(vec![west_or_bump(0.8); 4]);
        let pi1 = Policy::from_rows(pi1_rows).unwrap();
        let pi2 = Policy::from_rows(vec![east_or_bump(0.6); 9]).unwrap();

        let live1 = live_distribution(&mdp1, &pi1).unwrap();
        let prior1 = floored_prior(&pi1, &live1, 1e-12).unwrap();
        let live2 = live_distribution(&mdp2, &pi2).unwrap();
        let prior2 = floored_prior(&pi2, &live2, 1e-12).unwrap();

        let f1 = evaluate_free_energy(&mdp1, &pi1, &broadcast_prior(&prior1, 9), beta).unwrap();
        let f2 = evaluate_free_energy(&mdp2, &pi2, &broadcast_prior(&prior2, 9), beta).unwrap();

        let support1: BTreeSet<usize> = (0..=4).collect();
        let support2: BTreeSet<usize> = (4..9).collect();
        let composite = compose_policies(&pi1, &support1, &pi2, &support2).unwrap();
        let mut prior_rows = Vec::new();
        for s in 0..9 {
            if support1.contains(&s) && s != 4 {
                prior_rows.push(prior1.as_slice().to_vec());
            } else {
                prior_rows.push(prior2.as_slice().to_vec());
            }
        }
        let priors = Policy::from_rows(prior_rows).unwrap();
        let composite_f = evaluate_free_energy(&mdp2, &composite, &priors, beta).unwrap();
        assert_abs_diff_eq!(composite_f[0], f1[0] + f2[4], epsilon = 1e-6);
        assert!(f1[0] > 4.0, "segment 1 should carry an information cost");
    }

    #[test]
    fn reachable_support_respects_absorption() {
        let mdp = grid(9, 1, Neighborhood::Manhattan, 4);
        // Strictly positive rows: everything connected, but the goal blocks
        // passage, so the right half is unreachable from 0.
        let policy = Policy::uniform(9, 4);
        let support = reachable_support(&mdp, &policy, 0, 1e-9).unwrap();
        assert_eq!(support, (0..=4).collect::<BTreeSet<usize>>());
    }
}
