//! Ground-truth centroidal trajectories under synthetic quadruped gait
//! schedules, plus noisy measurement channels.

mod control;
mod dynamics;
mod gait;
mod noise;
mod state;
mod trajectory;

pub use control::{distribute_forces, simulate, ControllerParams};
pub use dynamics::{centroidal_derivative, integrate_step};
pub use gait::{build_gait_schedule, Gait, GaitSchedule};
pub use noise::{add_noise, NoiseConfig};
pub use state::{CentroidalState, ContactSet, Foot, FootContact, RobotParams};
pub use trajectory::{read_channel_csv, write_channel_csv, Sample, Trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown gait {0:?} (expected trot, jump, or bound)")]
    UnknownGait(String),
    #[error("integration diverged at step {step} (state magnitude {magnitude:.3e})")]
    Divergence { step: usize, magnitude: f64 },
    #[error("inactive foot {foot} carries a nonzero force")]
    InactiveFootForce { foot: usize },
    #[error("trajectory sample contains a non-finite value")]
    NonFiniteSample,
    #[error("truth channel has {truth} samples but measured has {measured}")]
    ChannelLengthMismatch { truth: usize, measured: usize },
    #[error("truth and measured channels disagree on contact flags")]
    ContactFlagMismatch,
    #[error("trajectory has no measured channel")]
    MeasuredChannelMissing,
    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
