//! Extended Kalman filter on the nonlinear centroidal dynamics, fed by
//! measured contact forces and foot positions. The measurement map is the
//! identity on the 9 centroidal states.

use super::EstimatorError;
use crate::numerics::{skew, solve_spd, Matrix};
use crate::sim::{integrate_step, CentroidalState, ContactSet, RobotParams};

/// Filter state: mean, covariance, and the two noise covariances.
#[derive(Clone, Debug)]
pub struct EkfState {
    pub state: CentroidalState,
    pub covariance: Matrix,
    pub process_noise: Matrix,
    pub measurement_noise: Matrix,
}

impl EkfState {
    pub fn new(
        state: CentroidalState,
        covariance: Matrix,
        process_noise: Matrix,
        measurement_noise: Matrix,
    ) -> Result<Self, EstimatorError> {
        for (name, m) in [
            ("covariance", &covariance),
            ("process noise", &process_noise),
            ("measurement noise", &measurement_noise),
        ] {
            if m.rows() != 9 || m.cols() != 9 {
                return Err(EstimatorError::InvalidConfig(format!(
                    "{name} matrix must be 9x9, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(Self {
            state,
            covariance,
            process_noise,
            measurement_noise,
        })
    }
}

/// Jacobian of the centroidal derivative with respect to the state:
/// the CoM row block couples to momentum through `1/m`, the angular-momentum
/// block couples to the CoM through the active contact forces, everything
/// else is zero.
pub fn dynamics_jacobian(
    _state: &CentroidalState,
    contacts: &ContactSet,
    params: &RobotParams,
) -> Matrix {
    let mut j = Matrix::zeros(9, 9);
    let inv_mass = 1.0 / params.mass;
    for i in 0..3 {
        j[(i, 3 + i)] = inv_mass;
    }
    // d k' / d c = sum(b_i skew(f_i)); from (r_i - c) x f_i = -f_i x (r_i - c)
    let mut force_skew = Matrix::zeros(3, 3);
    for foot in &contacts.feet {
        if foot.active {
            force_skew = &force_skew + &skew(foot.force);
        }
    }
    for r in 0..3 {
        for c in 0..3 {
            j[(6 + r, c)] = force_skew[(r, c)];
        }
    }
    j
}

/// Time update: RK4 on the nonlinear dynamics for the mean, first-order
/// discretization `F = I + dt J` for the covariance.
pub fn ekf_predict(
    s: &EkfState,
    contacts: &ContactSet,
    params: &RobotParams,
    dt: f64,
) -> EkfState {
    debug_assert!(dt > 0.0);
    let mean = integrate_step(&s.state, contacts, params, dt);
    let jac = dynamics_jacobian(&s.state, contacts, params);
    let mut f = Matrix::identity(9);
    for i in 0..9 {
        for j in 0..9 {
            f[(i, j)] += dt * jac[(i, j)];
        }
    }
    let mut p = &(&f * &s.covariance) * &f.transpose();
    p = &p + &s.process_noise;
    symmetrize(&mut p);
    EkfState {
        state: mean,
        covariance: p,
        process_noise: s.process_noise.clone(),
        measurement_noise: s.measurement_noise.clone(),
    }
}

/// Measurement update with the identity measurement map, in Joseph form.
pub fn ekf_update(s: &EkfState, y: &[f64; 9]) -> Result<EkfState, EstimatorError> {
    let innovation_cov = &s.covariance + &s.measurement_noise;
    // K = P (P + R)^-1; solve the SPD system for K^T
    let gain_t = solve_spd(&innovation_cov, &s.covariance).map_err(|e| {
        EstimatorError::InnovationNotInvertible {
            source: e,
        }
    })?;
    let gain = gain_t.transpose();

    let x = s.state.to_flat();
    let mut updated = [0.0; 9];
    for i in 0..9 {
        let mut acc = x[i];
        for j in 0..9 {
            acc += gain[(i, j)] * (y[j] - x[j]);
        }
        updated[i] = acc;
    }

    let mut i_minus_k = Matrix::identity(9);
    for i in 0..9 {
        for j in 0..9 {
            i_minus_k[(i, j)] -= gain[(i, j)];
        }
    }
    let mut p = &(&i_minus_k * &s.covariance) * &i_minus_k.transpose();
    let krk = &(&gain * &s.measurement_noise) * &gain.transpose();
    p = &p + &krk;
    symmetrize(&mut p);

    Ok(EkfState {
        state: CentroidalState::from_flat(&updated),
        covariance: p,
        process_noise: s.process_noise.clone(),
        measurement_noise: s.measurement_noise.clone(),
    })
}

fn symmetrize(m: &mut Matrix) {
    let n = m.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
