//! Finite cost-only MDPs and gridworld builders.
//!
//! Worlds are flat grids with deterministic moves, a single absorbing goal
//! and a step cost of -1 everywhere else. Bumping into a wall keeps the agent
//! in place and still costs the step.

use crate::error::{Error, Result};

/// Tolerance for "rows sum to one" checks on transition tables.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Grid adjacency: 4 cardinal moves or the full 8-move king neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    Manhattan,
    Moore,
}

impl Neighborhood {
    pub fn action_count(self) -> usize {
        match self {
            Neighborhood::Manhattan => 4,
            Neighborhood::Moore => 8,
        }
    }

    /// Row/column deltas per action, ordered counterclockwise from east.
    ///
    /// Moore: E, NE, N, NW, W, SW, S, SE. Manhattan keeps the even slots:
    /// E, N, W, S. Row 0 is the top of the grid, so "north" decreases the row.
    pub fn deltas(self) -> &'static [(isize, isize)] {
        const MOORE: [(isize, isize); 8] = [
            (0, 1),
            (-1, 1),
            (-1, 0),
            (-1, -1),
            (0, -1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        const MANHATTAN: [(isize, isize); 4] = [(0, 1), (-1, 0), (0, -1), (1, 0)];
        match self {
            Neighborhood::Manhattan => &MANHATTAN,
            Neighborhood::Moore => &MOORE,
        }
    }
}

impl std::str::FromStr for Neighborhood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "manhattan" => Ok(Neighborhood::Manhattan),
            "moore" => Ok(Neighborhood::Moore),
            other => Err(Error::InvalidArgument {
                reason: format!("neighborhood must be \"manhattan\" or \"moore\", got {other:?}"),
            }),
        }
    }
}

/// Shape of a gridworld: dimensions, adjacency and the absorbing goal cell.
///
/// States are numbered row-major: index = row * width + col, rows from the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub neighborhood: Neighborhood,
    pub goal: usize,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, neighborhood: Neighborhood, goal: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument {
                reason: format!("grid dimensions must be positive, got {width}x{height}"),
            });
        }
        let spec = Self {
            width,
            height,
            neighborhood,
            goal,
        };
        if goal >= spec.n_states() {
            return Err(Error::GoalOutOfRange {
                goal,
                n_states: spec.n_states(),
            });
        }
        Ok(spec)
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    /// Row-major state index of a cell.
    pub fn state_index(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.height || col >= self.width {
            return Err(Error::CoordinateOutOfRange {
                row,
                col,
                width: self.width,
                height: self.height,
            });
        }
        Ok(row * self.width + col)
    }

    /// Inverse of [`GridSpec::state_index`].
    pub fn state_coords(&self, index: usize) -> Result<(usize, usize)> {
        if index >= self.n_states() {
            return Err(Error::StateOutOfRange {
                index,
                n_states: self.n_states(),
            });
        }
        Ok((index / self.width, index % self.width))
    }
}

/// A finite MDP with dense transition and reward tables and one absorbing goal.
///
/// Tables are indexed `[action][from][to]`. Values are immutable after
/// construction, so an `Mdp` can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    goal: usize,
}

impl Mdp {
    /// Builds an MDP from dense `[action][from][to]` tables, validating the
    /// invariants: rows are probability distributions, the goal is absorbing
    /// with zero reward, and rewards are nonpositive.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        goal: usize,
    ) -> Result<Self> {
        if goal >= n_states {
            return Err(Error::GoalOutOfRange { goal, n_states });
        }
        let expected = n_actions * n_states * n_states;
        if transition.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "transition table size",
                expected,
                actual: transition.len(),
            });
        }
        if reward.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "reward table size",
                expected,
                actual: reward.len(),
            });
        }
        let mdp = Self {
            n_states,
            n_actions,
            transition,
            reward,
            goal,
        };
        for a in 0..n_actions {
            for s in 0..n_states {
                let row = mdp.transition_row(a, s);
                let mut sum = 0.0;
                for &p in row {
                    if p < 0.0 {
                        return Err(Error::InvalidDistribution {
                            reason: format!("negative transition probability at action {a}, state {s}"),
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidDistribution {
                        reason: format!(
                            "transition row (action {a}, state {s}) sums to {sum}, expected 1"
                        ),
                    });
                }
            }
            if (mdp.transition(a, goal, goal) - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidDistribution {
                    reason: format!("goal state {goal} is not absorbing under action {a}"),
                });
            }
            if mdp.reward(a, goal, goal) != 0.0 {
                return Err(Error::InvalidArgument {
                    reason: format!("goal self-transition must have zero reward (action {a})"),
                });
            }
        }
        if mdp.reward.iter().any(|&r| r > 0.0) {
            return Err(Error::InvalidArgument {
                reason: "rewards must be nonpositive in a cost-only MDP".to_string(),
            });
        }
        Ok(mdp)
    }

    /// Builds the deterministic gridworld for `spec`.
    ///
    /// Off-grid moves are wall bumps: the agent stays put and still pays the
    /// -1 step cost. The goal is absorbing and cost-free.
    pub fn build_gridworld(spec: &GridSpec) -> Result<Self> {
        let n = spec.n_states();
        let deltas = spec.neighborhood.deltas();
        let m = deltas.len();
        let mut transition = vec![0.0; m * n * n];
        let mut reward = vec![0.0; m * n * n];
        for (a, &(dr, dc)) in deltas.iter().enumerate() {
            for s in 0..n {
                let (row, col) = spec.state_coords(s).expect("state in range");
                let target = if s == spec.goal {
                    s
                } else {
                    let nr = row as isize + dr;
                    let nc = col as isize + dc;
                    if nr >= 0 && (nr as usize) < spec.height && nc >= 0 && (nc as usize) < spec.width
                    {
                        (nr as usize) * spec.width + nc as usize
                    } else {
                        s
                    }
                };
                let base = (a * n + s) * n;
                transition[base + target] = 1.0;
                if s != spec.goal {
                    for to in 0..n {
                        reward[base + to] = -1.0;
                    }
                }
            }
        }
        Self::new(n, m, transition, reward, spec.goal)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    /// p(to | from, action)
    #[inline]
    pub fn transition(&self, action: usize, from: usize, to: usize) -> f64 {
        self.transition[(action * self.n_states + from) * self.n_states + to]
    }

    /// The distribution over successors for (action, from) as a slice.
    #[inline]
    pub fn transition_row(&self, action: usize, from: usize) -> &[f64] {
        let base = (action * self.n_states + from) * self.n_states;
        &self.transition[base..base + self.n_states]
    }

    /// r(to, from, action)
    #[inline]
    pub fn reward(&self, action: usize, from: usize, to: usize) -> f64 {
        self.reward[(action * self.n_states + from) * self.n_states + to]
    }

    #[inline]
    pub fn reward_row(&self, action: usize, from: usize) -> &[f64] {
        let base = (action * self.n_states + from) * self.n_states;
        &self.reward[base..base + self.n_states]
    }

    /// States other than the goal, in ascending order.
    pub fn transient_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states).filter(move |&s| s != self.goal)
    }

    /// Expected one-step reward for (from, action):
    /// the transition-weighted average of r(to, from, action).
    pub fn expected_reward(&self, action: usize, from: usize) -> f64 {
        self.transition_row(action, from)
            .iter()
            .zip(self.reward_row(action, from))
            .map(|(&p, &r)| p * r)
            .sum()
    }
}
