//! Truth trajectories, sensor synthesis and the Monte Carlo harness.

mod fusion;
mod sensors;
mod sweep;
mod trajectory;

pub use fusion::*;
pub use sensors::*;
pub use sweep::*;
pub use trajectory::*;
