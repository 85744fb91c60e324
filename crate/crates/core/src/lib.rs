//! Centroidal dynamics at desk scale: a synthetic quadruped gait simulator,
//! DMDC identification of a linear Koopman-style model, and centroidal state
//! estimation with a convex-QP moving horizon estimator benchmarked against
//! an extended Kalman filter.

pub mod dmdc;
pub mod estimators;
pub mod numerics;
pub mod sim;
