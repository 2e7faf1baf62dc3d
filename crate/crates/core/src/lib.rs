//! Local navigation by learned trajectory pruning.
//!
//! A depth scan is fed to a small network that predicts which of a fixed
//! fan of turn-then-straight trajectories are free of collisions; a local
//! planner then scores only the few most promising ones.

pub mod bench;
pub mod dataset;
pub mod geometry;
pub mod learner;
pub mod planner;
pub mod sampler;
pub mod trajectory;
pub mod world_file;
