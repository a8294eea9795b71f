//! Robin Hood reachability bidding games.
//!
//! A Robin Hood bidding game is a Richman bidding game on a finite graph in
//! which every round starts with a wealth-redistribution phase: the richer
//! player pays the poorer a fixed fraction `lambda` of the budget difference.
//! This crate computes per-vertex threshold budgets by three mutually checking
//! methods (DAG back-propagation, value iteration, exact enumeration),
//! classifies each threshold as 1-strong / 2-strong / weak, exports the
//! corresponding MILP encoding as an LP file, and simulates plays under the
//! optimal strategies.
//!
//! All budget arithmetic is exact rational arithmetic; the only place where
//! approximation enters is the residual reported by value iteration.
//!
//! Start with [`game::Game`] and the `solver` module, or run the examples:
//!
//! ```bash
//! cargo run --example solve_methods
//! cargo run --example simulate_optimal_play
//! ```

pub mod analysis;
pub mod avgprop;
pub mod cli;
pub mod game;
pub mod milp;
pub mod rational;
pub mod simplex;
pub mod simulator;
pub mod solver;
pub mod strength;

pub use game::{Configuration, Game, ThresholdMap};
pub use rational::Rational;
