//! Path sampling, sufficient statistics and data pooling.

mod gillespie;
mod suffstats;
mod trajectory;

pub use gillespie::{sample_joint_path, sample_path};
pub use suffstats::{extract_node_statistics, extract_statistics, pool, ConditionedStats, SufficientStats};
pub use trajectory::{parse_trajectories, read_trajectories, write_trajectories, Event, Trajectory};
