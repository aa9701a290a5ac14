//! All-pairs free-energy distance matrices, symmetrization and asymmetry maps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::free_energy::{solve, SolveResult, SolverConfig};
use crate::mdp::{GridSpec, Mdp};

/// A square matrix of directed distances.
///
/// Entry (i, j) is the cost of travelling from state i to state j; for
/// free-energy matrices that is F_{goal=j}(i) at the matrix's beta, so column
/// j comes from the solve with goal j. `beta` is `f64::INFINITY` for matrices
/// built from plain value iteration.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    pub beta: f64,
    entries: Vec<f64>,
    converged: Vec<bool>,
}

impl DistanceMatrix {
    pub fn from_entries(n: usize, beta: f64, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "distance matrix size",
                expected: n * n,
                actual: entries.len(),
            });
        }
        Ok(Self {
            n,
            beta,
            entries,
            converged: vec![true; n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.n..(from + 1) * self.n]
    }

    pub fn is_converged(&self, from: usize, to: usize) -> bool {
        self.converged[from * self.n + to]
    }

    pub fn fully_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn mark_unconverged(&mut self, from: usize, to: usize) {
        self.converged[from * self.n + to] = false;
    }

    /// Largest |d_ij - d_ji| over all pairs.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// One column of a pairwise free-energy matrix: the solve for a single goal.
pub struct GoalColumn {
    pub goal: usize,
    pub free_energy: Vec<f64>,
    pub converged: bool,
}

/// Solves the gridworld once per goal in `goals` and returns the columns.
///
/// Solves run in parallel; a non-converged solve is returned with its flag
/// cleared rather than dropped, so callers can decide what to poison.
pub fn pairwise_free_energy_columns(
    spec: &GridSpec,
    beta: f64,
    config: &SolverConfig,
    goals: &[usize],
) -> Result<Vec<GoalColumn>> {
    let n = spec.n_states();
    for &g in goals {
        if g >= n {
            return Err(Error::GoalOutOfRange { goal: g, n_states: n });
        }
    }
    goals
        .par_iter()
        .map(|&goal| {
            let goal_spec = GridSpec { goal, ..*spec };
            let mdp = Mdp::build_gridworld(&goal_spec)?;
            let cfg = config.with_beta(beta)?;
            match solve(&mdp, &cfg) {
                Ok(result) => Ok(GoalColumn {
                    goal,
                    free_energy: result.free_energy,
                    converged: true,
                }),
                Err(Error::NoConvergence { result, .. }) => Ok(GoalColumn {
                    goal,
                    free_energy: result.free_energy,
                    converged: false,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// The full directed free-energy matrix for a grid at one beta: one solve per
/// goal, column g filled with F_g(s).
pub fn pairwise_free_energy(
    spec: &GridSpec,
    beta: f64,
    config: &SolverConfig,
) -> Result<DistanceMatrix> {
    let n = spec.n_states();
    let goals: Vec<usize> = (0..n).collect();
    let columns = pairwise_free_energy_columns(spec, beta, config, &goals)?;
    let mut matrix = DistanceMatrix::from_entries(n, beta, vec![0.0; n * n])?;
    for column in columns {
        for s in 0..n {
            matrix.entries[s * n + column.goal] = column.free_energy[s];
            if !column.converged {
                matrix.converged[s * n + column.goal] = false;
            }
        }
        matrix.entries[column.goal * n + column.goal] = 0.0;
    }
    Ok(matrix)
}

/// D_sym = (D + D^T) / 2.
pub fn symmetrize(d: &DistanceMatrix) -> DistanceMatrix {
    let n = d.n;
    let mut entries = vec![0.0; n * n];
    let mut converged = vec![true; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = 0.5 * (d.get(i, j) + d.get(j, i));
            converged[i * n + j] = d.is_converged(i, j) && d.is_converged(j, i);
        }
    }
    DistanceMatrix {
        n,
        beta: d.beta,
        entries,
        converged,
    }
}

/// Entrywise asymmetry proportions (D - D_sym) / D_sym with a zero diagonal.
#[derive(Debug, Clone)]
pub struct AsymmetryTable {
    pub n: usize,
    pub entries: Vec<f64>,
    /// Off-diagonal pairs where D_sym is zero and the proportion is undefined.
    pub division_by_zero: Vec<(usize, usize)>,
}

impl AsymmetryTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, &v| {
            if v.is_finite() {
                m.max(v.abs())
            } else {
                m
            }
        })
    }
}

pub fn asymmetry_proportion(d: &DistanceMatrix) -> AsymmetryTable {
    let n = d.n;
    let sym = symmetrize(d);
    let mut entries = vec![0.0; n * n];
    let mut division_by_zero = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let s = sym.get(i, j);
            if s == 0.0 {
                entries[i * n + j] = f64::NAN;
                division_by_zero.push((i, j));
            } else {
                entries[i * n + j] = (d.get(i, j) - s) / s;
            }
        }
    }
    AsymmetryTable {
        n,
        entries,
        division_by_zero,
    }
}

/// Per-goal solves for every goal of a grid, kept whole (policies included).
/// This is the shared context for infodesic work at one beta.
pub fn pairwise_solves(
    spec: &GridSpec,
    beta: f64,
    config: &SolverConfig,
) -> Result<Vec<SolveResult>> {
    let n = spec.n_states();
    (0..n)
        .into_par_iter()
        .map(|goal| {
            let goal_spec = GridSpec { goal, ..*spec };
            let mdp = Mdp::build_gridworld(&goal_spec)?;
            solve(&mdp, &config.with_beta(beta)?)
        })
        .collect()
}
