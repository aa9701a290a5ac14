//! Cognitive geometry of cost-only gridworld MDPs.
//!
//! The library computes what navigation "costs" an agent that pays for
//! information processing as well as for steps: free-energy-optimal policies
//! at a trade-off parameter beta, per-state Decision Information in bits,
//! all-pairs directed free-energy distance matrices, their symmetrized MDS
//! embeddings, and the epsilon-infodesic structure those distances induce.
//!
//! Modules follow the pipeline: [`mdp`] builds worlds, [`info`] and
//! [`markov`] supply the information and absorbing-chain primitives,
//! [`value`] solves the beta-to-infinity limit, [`free_energy`] runs the
//! alternating solver, [`geometry`] and [`mds`] turn per-goal solves into
//! distances and coordinates, and [`infodesics`] analyzes the result.

pub mod error;
pub mod free_energy;
pub mod geometry;
pub mod info;
pub mod infodesics;
mod linalg;
pub mod markov;
pub mod mds;
pub mod mdp;
pub mod value;

pub use error::{Error, Result};
pub use free_energy::{
    compose_policies, decision_information, evaluate_free_energy, evaluate_policy,
    reachable_support, solve, solve_from, tradeoff_curve, SolveResult, SolverConfig,
    TradeoffPoint,
};
pub use geometry::{
    asymmetry_proportion, pairwise_free_energy, pairwise_free_energy_columns, pairwise_solves,
    symmetrize, AsymmetryTable, DistanceMatrix, GoalColumn,
};
pub use info::{action_marginal, entropy, kl_divergence, Distribution};
pub use infodesics::{
    enumerate_epsilon_infodesics, find_value_geodesics, interim_histogram,
    scan_triangle_violations, Infodesic, InterimHistogram, TriangleDeviation,
};
pub use markov::{
    chain_from_policy, default_max_steps, live_distribution, sample_trajectories, AbsorbingChain,
    LiveDistribution, MarkovChain, Policy, VisitationStats,
};
pub use mds::{mds_embed, smacof_trace, Embedding, MdsConfig};
pub use mdp::{GridSpec, Mdp, Neighborhood};
pub use value::{
    check_quasimetric, value_distance_matrix, value_iteration, QuasimetricReport,
    TriangleViolation, ValueFunction,
};
