//! Undiscounted value iteration for cost-only MDPs and quasimetric checks
//! on distance matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;
use crate::markov::Policy;
use crate::mdp::{GridSpec, Mdp};

/// Default absolute tolerance on the Bellman residual. The fixed points are
/// integer-valued for deterministic grids, so this is comfortably safe.
pub const DEFAULT_VALUE_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 10_000;

/// A converged value function with its iteration metadata.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Value iteration to the optimal V and its deterministic greedy policy.
///
/// Greedy ties break toward the lowest action index; trajectory regressions
/// depend on that.
pub fn value_iteration(mdp: &Mdp, tol: f64) -> Result<(ValueFunction, Policy)> {
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let goal = mdp.goal();
    let mut values = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < MAX_SWEEPS {
        iterations += 1;
        let mut next = vec![0.0; n];
        for s in 0..n {
            if s == goal {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            for a in 0..m {
                let row = mdp.transition_row(a, s);
                let rewards = mdp.reward_row(a, s);
                let mut q = 0.0;
                for ((&p, &r), &v) in row.iter().zip(rewards).zip(&values) {
                    if p != 0.0 {
                        q += p * (r + v);
                    }
                }
                if q > best {
                    best = q;
                }
            }
            next[s] = best;
        }
        residual = values
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        values = next;
        if residual <= tol {
            let greedy = greedy_policy(mdp, &values);
            return Ok((
                ValueFunction {
                    values,
                    iterations,
                    residual,
                },
                greedy,
            ));
        }
    }
    Err(Error::ValueIterationDiverged {
        sweeps: iterations,
        residual,
    })
}

fn greedy_policy(mdp: &Mdp, values: &[f64]) -> Policy {
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let mut actions = Vec::with_capacity(n);
    for s in 0..n {
        let mut best_a = 0;
        let mut best_q = f64::NEG_INFINITY;
        for a in 0..m {
            let row = mdp.transition_row(a, s);
            let rewards = mdp.reward_row(a, s);
            let mut q = 0.0;
            for ((&p, &r), &v) in row.iter().zip(rewards).zip(values) {
                if p != 0.0 {
                    q += p * (r + v);
                }
            }
            if q > best_q + 1e-12 {
                best_q = q;
                best_a = a;
            }
        }
        actions.push(best_a);
    }
    Policy::deterministic(&actions, m)
}

/// The all-pairs matrix of shortest-path distances d(s, g) = -V*_g(s),
/// from one value iteration per goal placement. `beta` is infinity.
pub fn value_distance_matrix(spec: &GridSpec) -> Result<DistanceMatrix> {
    let n = spec.n_states();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|goal| {
            let mdp = Mdp::build_gridworld(&GridSpec { goal, ..*spec })?;
            let (vf, _) = value_iteration(&mdp, DEFAULT_VALUE_TOL)?;
            Ok(vf.values.iter().map(|&v| -v).collect())
        })
        .collect::<Result<_>>()?;
    let mut entries = vec![0.0; n * n];
    for (g, column) in columns.iter().enumerate() {
        for s in 0..n {
            entries[s * n + g] = column[s];
        }
    }
    DistanceMatrix::from_entries(n, f64::INFINITY, entries)
}

/// A triangle-inequality violation: d(from, to) exceeds the detour through
/// `via` by `excess`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleViolation {
    pub from: usize,
    pub via: usize,
    pub to: usize,
    pub excess: f64,
}

/// Outcome of checking the quasimetric axioms on a distance matrix.
#[derive(Debug, Clone)]
pub struct QuasimetricReport {
    /// Nonnegativity failures: entries below zero beyond tolerance.
    pub negative_entries: Vec<(usize, usize, f64)>,
    /// Indiscernibility failures: off-diagonal entries at zero within tolerance.
    pub zero_off_diagonal: Vec<(usize, usize)>,
    /// Triangle-inequality failures beyond tolerance.
    pub triangle_violations: Vec<TriangleViolation>,
    /// The triangle violation with the largest excess, if any.
    pub worst_triangle: Option<TriangleViolation>,
    pub tolerance: f64,
}

impl QuasimetricReport {
    pub fn is_quasimetric(&self) -> bool {
        self.negative_entries.is_empty()
            && self.zero_off_diagonal.is_empty()
            && self.triangle_violations.is_empty()
    }
}

/// Checks nonnegativity, the principle of indiscernibles and the triangle
/// inequality on `d`, listing every violation beyond `tol`.
pub fn check_quasimetric(d: &DistanceMatrix, tol: f64) -> QuasimetricReport {
    let n = d.n();
    let mut negative_entries = Vec::new();
    let mut zero_off_diagonal = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            if v < -tol {
                negative_entries.push((i, j, v));
            }
            if i != j && v.abs() <= tol {
                zero_off_diagonal.push((i, j));
            }
        }
    }
    let mut triangle_violations = Vec::new();
    let mut worst_triangle: Option<TriangleViolation> = None;
    for x in 0..n {
        for y in 0..n {
            if y == x {
                continue;
            }
            let dxy = d.get(x, y);
            for z in 0..n {
                if z == x || z == y {
                    continue;
                }
                let excess = d.get(x, z) - (dxy + d.get(y, z));
                if excess > tol {
                    let v = TriangleViolation {
                        from: x,
                        via: y,
                        to: z,
                        excess,
                    };
                    if worst_triangle.map_or(true, |w| excess > w.excess) {
                        worst_triangle = Some(v);
                    }
                    triangle_violations.push(v);
                }
            }
        }
    }
    QuasimetricReport {
        negative_entries,
        zero_off_diagonal,
        triangle_violations,
        worst_triangle,
        tolerance: tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Neighborhood;
    use approx::assert_abs_diff_eq;

    fn grid(w: usize, h: usize, nbhd: Neighborhood, goal: usize) -> Mdp {
        Mdp::build_gridworld(&GridSpec::new(w, h, nbhd, goal).unwrap()).unwrap()
    }

    #[test]
    fn manhattan_distances_from_corner_to_center() {
        let mdp = grid(5, 5, Neighborhood::Manhattan, 12);
        let (vf, _) = value_iteration(&mdp, DEFAULT_VALUE_TOL).unwrap();
        assert_abs_diff_eq!(-vf.values[0], 4.0, epsilon = 1e-9);
        assert_eq!(vf.values[12], 0.0);
        assert!(vf.iterations <= 25);
    }

    #[test]
    fn chebyshev_distance_across_moore_grid() {
        let mdp = grid(7, 7, Neighborhood::Moore, 6);
        let (vf, _) = value_iteration(&mdp, DEFAULT_VALUE_TOL).unwrap();
        assert_abs_diff_eq!(-vf.values[42], 6.0, epsilon = 1e-9);
        assert!(vf.iterations <= 49);
    }

    #[test]
    fn greedy_policy_reaches_goal_in_exactly_distance_steps() {
        let mdp = grid(5, 5, Neighborhood::Manhattan, 12);
        let (vf, policy) = value_iteration(&mdp, DEFAULT_VALUE_TOL).unwrap();
        for start in 0..25 {
            let mut s = start;
            let mut steps = 0;
            while s != 12 {
                let a = policy.row(s).iter().position(|&p| p == 1.0).unwrap();
                s = mdp
                    .transition_row(a, s)
                    .iter()
                    .position(|&p| p == 1.0)
                    .unwrap();
                steps += 1;
                assert!(steps <= 25, "rollout from {start} did not terminate");
            }
            assert_eq!(steps as f64, -vf.values[start]);
        }
    }

    #[test]
    fn greedy_rollouts_turn_triangle_inequality_into_equality() {
        // Every state on a greedy rollout splits the distance additively.
        let spec = GridSpec::new(5, 5, Neighborhood::Manhattan, 12).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        let mdp = grid(5, 5, Neighborhood::Manhattan, 12);
        let (_, policy) = value_iteration(&mdp, DEFAULT_VALUE_TOL).unwrap();
        for start in 0..25 {
            let mut s = start;
            while s != 12 {
                let a = policy.row(s).iter().position(|&p| p == 1.0).unwrap();
                let next = mdp
                    .transition_row(a, s)
                    .iter()
                    .position(|&p| p == 1.0)
                    .unwrap();
                assert_eq!(d.get(start, 12), d.get(start, next) + d.get(next, 12));
                s = next;
            }
        }
    }

    #[test]
    fn value_matrix_is_symmetric_for_reversible_grids() {
        for spec in [
            GridSpec::new(5, 5, Neighborhood::Manhattan, 0).unwrap(),
            GridSpec::new(4, 3, Neighborhood::Moore, 0).unwrap(),
        ] {
            let d = value_distance_matrix(&spec).unwrap();
            assert_eq!(d.max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn value_matrices_pass_the_quasimetric_axioms() {
        let d = value_distance_matrix(&GridSpec::new(5, 5, Neighborhood::Manhattan, 0).unwrap())
            .unwrap();
        let report = check_quasimetric(&d, 1e-9);
        assert!(report.is_quasimetric());
    }

    #[test]
    fn hand_built_violations_are_reported() {
        // d(0,2) = 5 exceeds d(0,1) + d(1,2) = 2; one entry negative; one
        // off-diagonal zero.
        let entries = vec![
            0.0, 1.0, 5.0, //
            -0.5, 0.0, 1.0, //
            0.0, 1.0, 0.0,
        ];
        let d = DistanceMatrix::from_entries(3, f64::INFINITY, entries).unwrap();
        let report = check_quasimetric(&d, 1e-9);
        assert!(!report.is_quasimetric());
        assert_eq!(report.negative_entries, vec![(1, 0, -0.5)]);
        assert!(report.zero_off_diagonal.contains(&(2, 0)));
        let worst = report.worst_triangle.unwrap();
        assert_eq!((worst.from, worst.via, worst.to), (0, 1, 2));
        assert_abs_diff_eq!(worst.excess, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn hop_count_metric_has_no_violations() {
        let spec = GridSpec::new(4, 4, Neighborhood::Moore, 0).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        // Moore hop counts are the Chebyshev metric: a true metric.
        assert!(check_quasimetric(&d, 1e-9).is_quasimetric());
    }
}
