//! Shared fixtures for the criterion benches.

use infogeo_core::{GridSpec, Mdp, Neighborhood};

pub fn manhattan_5x5(goal: usize) -> Mdp {
    Mdp::build_gridworld(&GridSpec::new(5, 5, Neighborhood::Manhattan, goal).unwrap()).unwrap()
}

pub fn moore_7x7(goal: usize) -> Mdp {
    Mdp::build_gridworld(&GridSpec::new(7, 7, Neighborhood::Moore, goal).unwrap()).unwrap()
}
