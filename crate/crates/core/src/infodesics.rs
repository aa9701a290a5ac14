//! Geodesic and infodesic structure on top of distance matrices: detection
//! of additive intermediate states, exhaustive epsilon-infodesic enumeration,
//! interim-state histograms and triangle-violation scans.

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;

/// A state sequence whose segment costs nearly add up to the direct cost.
///
/// Segments use per-segment optimal policies, so segment i's cost is the
/// matrix entry (s_i, s_{i+1}). The deviation is
/// (sum of segments - direct) / direct.
#[derive(Debug, Clone, PartialEq)]
pub struct Infodesic {
    pub sequence: Vec<usize>,
    pub segment_free_energies: Vec<f64>,
    pub direct_free_energy: f64,
    pub normalized_deviation: f64,
}

/// How often each state serves as the interim state of an accepted
/// three-state infodesic, over all ordered (start, goal) pairs.
#[derive(Debug, Clone)]
pub struct InterimHistogram {
    pub counts: Vec<u64>,
    pub epsilon: f64,
}

impl InterimHistogram {
    /// States with the maximal count.
    pub fn argmax(&self) -> Vec<usize> {
        let best = self.counts.iter().copied().max().unwrap_or(0);
        self.counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == best && best > 0)
            .map(|(s, _)| s)
            .collect()
    }
}

/// A strictly negative normalized triangle deviation: routing through `via`
/// beats the direct solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleDeviation {
    pub from: usize,
    pub via: usize,
    pub to: usize,
    pub deviation: f64,
}

/// All states s' that split the shortest-path distance additively:
/// d(s, g) = d(s, s') + d(s', g) within `tol`. Both endpoints qualify.
pub fn find_value_geodesics(
    value_distances: &DistanceMatrix,
    start: usize,
    goal: usize,
    tol: f64,
) -> Result<Vec<usize>> {
    let n = value_distances.n();
    if start >= n || goal >= n {
        return Err(Error::StateOutOfRange {
            index: start.max(goal),
            n_states: n,
        });
    }
    let direct = value_distances.get(start, goal);
    Ok((0..n)
        .filter(|&via| {
            let split = value_distances.get(start, via) + value_distances.get(via, goal);
            (split - direct).abs() <= tol
        })
        .collect())
}

fn entry(d: &DistanceMatrix, from: usize, to: usize) -> Result<f64> {
    if !d.is_converged(from, to) {
        return Err(Error::MissingPairEntry { from, to });
    }
    Ok(d.get(from, to))
}

/// Deviation band and monotonicity test shared by the enumeration ops.
///
/// A sequence is accepted when its normalized deviation lies strictly inside
/// (-epsilon, epsilon) and the direct-to-goal cost strictly decreases along
/// it, mirroring the defining property of the exact case.
fn accept(d: &DistanceMatrix, sequence: &[usize], epsilon: f64) -> Result<Option<Infodesic>> {
    let goal = *sequence.last().expect("nonempty sequence");
    let start = sequence[0];
    let direct = entry(d, start, goal)?;
    if direct <= 0.0 {
        return Err(Error::InvalidArgument {
            reason: format!("direct cost ({start} -> {goal}) must be positive to normalize"),
        });
    }
    let mut segments = Vec::with_capacity(sequence.len() - 1);
    let mut sum = 0.0;
    for pair in sequence.windows(2) {
        let seg = entry(d, pair[0], pair[1])?;
        segments.push(seg);
        sum += seg;
    }
    let deviation = (sum - direct) / direct;
    if deviation <= -epsilon || deviation >= epsilon {
        return Ok(None);
    }
    for pair in sequence.windows(2) {
        if entry(d, pair[0], goal)? <= entry(d, pair[1], goal)? {
            return Ok(None);
        }
    }
    Ok(Some(Infodesic {
        sequence: sequence.to_vec(),
        segment_free_energies: segments,
        direct_free_energy: direct,
        normalized_deviation: deviation,
    }))
}

/// Exhaustively enumerates epsilon-infodesics from `start` to `goal`:
/// every non-repeating sequence of up to `max_len` states (interior states
/// drawn from the rest of the state space, contiguity not required) whose
/// normalized deviation falls inside the epsilon band.
///
/// The trivial two-state sequence is included; its deviation is exactly 0.
/// Results are sorted by |deviation|, ties lexicographically.
pub fn enumerate_epsilon_infodesics(
    d: &DistanceMatrix,
    start: usize,
    goal: usize,
    epsilon: f64,
    max_len: usize,
) -> Result<Vec<Infodesic>> {
    let n = d.n();
    if start >= n || goal >= n {
        return Err(Error::StateOutOfRange {
            index: start.max(goal),
            n_states: n,
        });
    }
    if start == goal {
        return Err(Error::InvalidArgument {
            reason: "start and goal must differ".to_string(),
        });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument {
            reason: format!("epsilon must lie in (0, 1), got {epsilon}"),
        });
    }
    if !(3..=5).contains(&max_len) {
        return Err(Error::InvalidArgument {
            reason: format!("max_len must be 3, 4 or 5, got {max_len}"),
        });
    }
    let interior: Vec<usize> = (0..n).filter(|&s| s != start && s != goal).collect();
    let mut accepted = Vec::new();
    let mut sequence = vec![start, goal];
    if let Some(found) = accept(d, &sequence, epsilon)? {
        accepted.push(found);
    }
    // Depth-first over ordered interior tuples of size 1..=max_len-2.
    fn extend(
        d: &DistanceMatrix,
        interior: &[usize],
        used: &mut Vec<usize>,
        sequence: &mut Vec<usize>,
        max_interior: usize,
        epsilon: f64,
        accepted: &mut Vec<Infodesic>,
    ) -> Result<()> {
        for &candidate in interior {
            if used.contains(&candidate) {
                continue;
            }
            used.push(candidate);
            let at = sequence.len() - 1;
            sequence.insert(at, candidate);
            if let Some(found) = accept(d, sequence, epsilon)? {
                accepted.push(found);
            }
            if used.len() < max_interior {
                extend(d, interior, used, sequence, max_interior, epsilon, accepted)?;
            }
            sequence.remove(at);
            used.pop();
        }
        Ok(())
    }
    let mut used = Vec::new();
    extend(
        d,
        &interior,
        &mut used,
        &mut sequence,
        max_len - 2,
        epsilon,
        &mut accepted,
    )?;
    accepted.sort_by(|a, b| {
        a.normalized_deviation
            .abs()
            .partial_cmp(&b.normalized_deviation.abs())
            .expect("finite deviations")
            .then_with(|| a.sequence.cmp(&b.sequence))
    });
    Ok(accepted)
}

/// Counts, for every ordered (start, goal) pair, how often each interior
/// state completes an accepted three-state infodesic.
pub fn interim_histogram(d: &DistanceMatrix, epsilon: f64) -> Result<InterimHistogram> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument {
            reason: format!("epsilon must lie in (0, 1), got {epsilon}"),
        });
    }
    let n = d.n();
    let mut counts = vec![0u64; n];
    for start in 0..n {
        for goal in 0..n {
            if start == goal {
                continue;
            }
            for via in 0..n {
                if via == start || via == goal {
                    continue;
                }
                if accept(d, &[start, via, goal], epsilon)?.is_some() {
                    counts[via] += 1;
                }
            }
        }
    }
    Ok(InterimHistogram { counts, epsilon })
}

/// Every ordered triple where subgoaling strictly beats the direct solve
/// beyond `tol`, most negative deviation first.
pub fn scan_triangle_violations(d: &DistanceMatrix, tol: f64) -> Result<Vec<TriangleDeviation>> {
    let n = d.n();
    let mut violations = Vec::new();
    for start in 0..n {
        for goal in 0..n {
            if start == goal {
                continue;
            }
            let direct = entry(d, start, goal)?;
            if direct <= 0.0 {
                continue;
            }
            for via in 0..n {
                if via == start || via == goal {
                    continue;
                }
                let split = entry(d, start, via)? + entry(d, via, goal)?;
                let deviation = (split - direct) / direct;
                if deviation < -tol {
                    violations.push(TriangleDeviation {
                        from: start,
                        via,
                        to: goal,
                        deviation,
                    });
                }
            }
        }
    }
    violations.sort_by(|a, b| {
        a.deviation
            .partial_cmp(&b.deviation)
            .expect("finite deviations")
            .then_with(|| (a.from, a.via, a.to).cmp(&(b.from, b.via, b.to)))
    });
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{GridSpec, Neighborhood};
    use crate::value::value_distance_matrix;

    fn matrix(entries: Vec<f64>, n: usize) -> DistanceMatrix {
        DistanceMatrix::from_entries(n, 1.0, entries).unwrap()
    }

    #[test]
    fn trivial_pair_has_zero_deviation() {
        let d = matrix(vec![0.0, 2.0, 2.0, 0.0], 2);
        let found = enumerate_epsilon_infodesics(&d, 0, 1, 0.01, 3).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].sequence, vec![0, 1]);
        assert_eq!(found[0].normalized_deviation, 0.0);
    }

    #[test]
    fn collinear_corridor_counts_every_between_state() {
        let spec = GridSpec::new(5, 1, Neighborhood::Manhattan, 0).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        let geodesics = find_value_geodesics(&d, 4, 0, 1e-6).unwrap();
        assert_eq!(geodesics, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn degenerate_geodesic_query_returns_the_state_itself() {
        let spec = GridSpec::new(3, 3, Neighborhood::Manhattan, 0).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        assert_eq!(find_value_geodesics(&d, 4, 4, 1e-6).unwrap(), vec![4]);
    }

    #[test]
    fn staircase_states_match_shortest_path_membership() {
        // On the hop-count metric, accepted interiors are exactly the states
        // on some monotone shortest path.
        let spec = GridSpec::new(5, 5, Neighborhood::Manhattan, 12).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        let geodesics = find_value_geodesics(&d, 0, 12, 1e-6).unwrap();
        // From (0,0) to (2,2): any cell with row <= 2 and col <= 2.
        let expected: Vec<usize> = (0..25)
            .filter(|&s| s / 5 <= 2 && s % 5 <= 2)
            .collect();
        assert_eq!(geodesics, expected);
    }

    #[test]
    fn enumeration_matches_a_naive_reimplementation() {
        let spec = GridSpec::new(3, 3, Neighborhood::Moore, 8).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        let eps = 0.3;
        let fast = enumerate_epsilon_infodesics(&d, 0, 8, eps, 4).unwrap();

        // Naive nested loops over all interior tuples of size 0, 1, 2.
        let mut naive: Vec<Vec<usize>> = vec![vec![0, 8]];
        let interior: Vec<usize> = (0..9).filter(|&s| s != 0 && s != 8).collect();
        for &a in &interior {
            naive.push(vec![0, a, 8]);
            for &b in &interior {
                if b != a {
                    naive.push(vec![0, a, b, 8]);
                }
            }
        }
        let mut expected: Vec<Vec<usize>> = Vec::new();
        for seq in naive {
            let direct = d.get(0, 8);
            let sum: f64 = seq.windows(2).map(|w| d.get(w[0], w[1])).sum();
            let dev = (sum - direct) / direct;
            let monotone = seq.windows(2).all(|w| d.get(w[0], 8) > d.get(w[1], 8));
            if dev > -eps && dev < eps && monotone {
                expected.push(seq);
            }
        }
        let mut got: Vec<Vec<usize>> = fast.iter().map(|i| i.sequence.clone()).collect();
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn results_are_sorted_by_absolute_deviation() {
        let spec = GridSpec::new(4, 4, Neighborhood::Manhattan, 15).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        let found = enumerate_epsilon_infodesics(&d, 0, 15, 0.5, 4).unwrap();
        for w in found.windows(2) {
            assert!(
                w[0].normalized_deviation.abs() <= w[1].normalized_deviation.abs() + 1e-15
            );
        }
        // The trivial pair is present with deviation exactly zero; ties at
        // zero sort lexicographically, so it need not come first.
        let trivial = found
            .iter()
            .find(|i| i.sequence == vec![0, 15])
            .expect("trivial pair accepted");
        assert_eq!(trivial.normalized_deviation, 0.0);
    }

    #[test]
    fn unconverged_entries_surface_as_missing_pairs() {
        let spec = GridSpec::new(3, 3, Neighborhood::Manhattan, 8).unwrap();
        let mut d = value_distance_matrix(&spec).unwrap();
        d.mark_unconverged(0, 4);
        match enumerate_epsilon_infodesics(&d, 0, 8, 0.4, 3) {
            Err(Error::MissingPairEntry { from: 0, to: 4 }) => {}
            other => panic!("expected MissingPairEntry, got {other:?}"),
        }
    }

    #[test]
    fn metric_matrices_have_no_triangle_violations() {
        let spec = GridSpec::new(4, 4, Neighborhood::Moore, 0).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        assert!(scan_triangle_violations(&d, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn violations_sort_most_negative_first() {
        // d(0,2) = 10, but both detours through 1 and 3 are cheaper.
        let entries = vec![
            0.0, 1.0, 10.0, 2.0, //
            9.0, 0.0, 1.0, 9.0, //
            9.0, 9.0, 0.0, 9.0, //
            9.0, 9.0, 3.0, 0.0,
        ];
        let d = matrix(entries, 4);
        let violations = scan_triangle_violations(&d, 1e-6).unwrap();
        assert!(violations.len() >= 2);
        assert_eq!(violations[0].via, 1);
        assert_eq!(violations[0].from, 0);
        assert_eq!(violations[0].to, 2);
        assert!((violations[0].deviation - (2.0 - 10.0) / 10.0).abs() < 1e-12);
        for w in violations.windows(2) {
            assert!(w[0].deviation <= w[1].deviation);
        }
    }

    #[test]
    fn two_state_world_has_no_triples() {
        let d = matrix(vec![0.0, 1.0, 1.0, 0.0], 2);
        assert!(scan_triangle_violations(&d, 1e-6).unwrap().is_empty());
        let hist = interim_histogram(&d, 0.05).unwrap();
        assert_eq!(hist.counts, vec![0, 0]);
    }

    #[test]
    fn tiny_world_histogram_respects_the_pair_bound() {
        // 2x2 grid: 4 states, 12 ordered pairs, so no count can exceed 12.
        let spec = GridSpec::new(2, 2, Neighborhood::Manhattan, 3).unwrap();
        let d = value_distance_matrix(&spec).unwrap();
        let hist = interim_histogram(&d, 0.05).unwrap();
        assert!(hist.counts.iter().all(|&c| c <= 12));
    }
}
