//! Robust value iteration over abstractions and their automaton products.

pub mod controller;
pub mod lp;
pub mod omax;
pub mod rdp;
pub mod simplify;

pub use controller::{Controller, StrategyTable};
pub use lp::solve_lp;
pub use omax::{ascending_order, solve, solve_dense, Direction, Scratch};
pub use rdp::{robust_dp, Adversary, Horizon, Objective, RdpOptions, ValueFunction};
pub use simplify::{simplify, simplify_bounds};
