//! Executable finite instances of the generalized online-learning framework:
//! exact minimax values of regret games, sequential complexities, closed-form
//! bounds, combinatorial dimensions and covers, concrete players, lower-bound
//! constructions, and martingale concentration checks.

pub mod bounds;
pub mod cli;
pub mod concentration;
pub mod dims_covers;
pub mod error;
pub mod fuzz;
pub mod games;
pub mod game_model;
pub mod lower_bounds;
pub mod lp;
pub mod par;
pub mod report;
pub mod seq_complexity;
pub mod value_engine;

pub use error::{Error, Result};
