pub mod cli;
pub mod demos;
pub mod error;
pub mod evaluation;
pub mod frames;
pub mod geometry;
pub mod grasp;
pub mod hand;
pub mod io;
pub mod linalg;
pub mod perception;
pub mod pose;
pub mod rng;
pub mod synergy;
pub mod trajectory;

pub use error::{Error, Result};
