//! Centroidal state estimators: the moving horizon estimator on the fitted
//! linear model, the extended Kalman filter baseline on the nonlinear
//! dynamics, and a Kalman-filter reference for testing.

pub mod ekf;
pub mod kalman;
pub mod mhe;
pub mod qp;
mod run;

pub use ekf::{dynamics_jacobian, ekf_predict, ekf_update, EkfState};
pub use kalman::kalman_oracle;
pub use mhe::{build_qp, MheConfig, MheEstimator, StateBounds};
pub use qp::{solve_qp, BlockCholesky, BlockTridiag, QpSolution, KKT_REL_TOL};
pub use run::{
    run_estimator, write_run_csv, EkfSetup, EstimatorKind, EstimatorRun, EstimatorSetup,
};

use crate::numerics::NumericsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
    #[error("QP active-set iteration hit its cap after {iterations} iterations (projected gradient {residual:.3e})")]
    QpIterationCap { iterations: usize, residual: f64 },
    #[error("QP solve failed the KKT check: residual {residual:.3e} exceeds bound {bound:.3e}")]
    KktResidual { residual: f64, bound: f64 },
    #[error("innovation covariance is not invertible: {source}")]
    InnovationNotInvertible { source: NumericsError },
    #[error("trajectory has no measured channel")]
    MeasuredChannelMissing,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
