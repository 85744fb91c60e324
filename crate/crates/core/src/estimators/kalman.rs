//! Textbook Kalman filter on a linear time-invariant system. This is the
//! reference the moving horizon estimator is checked against: with matched
//! weights and a window covering all data, the MHE terminal estimate must
//! reproduce the filtered estimate.

use super::EstimatorError;
use crate::numerics::{solve_spd, Cholesky, Matrix};

/// Filtered estimates `x_{k|k}` for measurements `ys[0..n]` and inputs
/// `us[0..n-1]`, starting from prior mean `x0` and covariance `p0`.
///
/// The recursion updates with `ys[k]` first, records the filtered estimate,
/// then predicts through `x <- A x + B us[k]`. The measurement noise `r`
/// must be SPD; a degenerate (zero) noise covariance is rejected.
#[allow(clippy::too_many_arguments)]
pub fn kalman_oracle(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    q: &Matrix,
    r: &Matrix,
    p0: &Matrix,
    x0: &[f64],
    ys: &[Vec<f64>],
    us: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, EstimatorError> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || c.cols() != n || q.rows() != n || p0.rows() != n {
        return Err(EstimatorError::InvalidConfig(
            "inconsistent system dimensions".into(),
        ));
    }
    let m = c.rows();
    if r.rows() != m || !r.is_square() {
        return Err(EstimatorError::InvalidConfig(
            "measurement noise must match the measurement dimension".into(),
        ));
    }
    // degenerate noise guard: R must be SPD
    Cholesky::factor(r).map_err(|e| EstimatorError::InvalidConfig(format!(
        "measurement noise covariance must be SPD: {e}"
    )))?;
    if ys.is_empty() {
        return Ok(Vec::new());
    }
    if us.len() + 1 < ys.len() {
        return Err(EstimatorError::InvalidConfig(format!(
            "{} measurements need at least {} inputs, got {}",
            ys.len(),
            ys.len() - 1,
            us.len()
        )));
    }

    let mut x = x0.to_vec();
    let mut p = p0.clone();
    let identity = Matrix::identity(n);
    let mut filtered = Vec::with_capacity(ys.len());

    for (k, y) in ys.iter().enumerate() {
        // update: K = P C^T (C P C^T + R)^-1
        let pct = &p * &c.transpose();
        let innovation_cov = &(&(c * &p) * &c.transpose()) + r;
        let gain_t = solve_spd(&innovation_cov, &pct.transpose())
            .map_err(|e| EstimatorError::InnovationNotInvertible { source: e })?;
        let gain = gain_t.transpose();

        let cx = c.matvec(&x);
        let mut innovation = vec![0.0; m];
        for i in 0..m {
            innovation[i] = y[i] - cx[i];
        }
        let correction = gain.matvec(&innovation);
        for i in 0..n {
            x[i] += correction[i];
        }

        let i_minus_kc = &identity - &(&gain * c);
        p = &(&(&i_minus_kc * &p) * &i_minus_kc.transpose())
            + &(&(&gain * r) * &gain.transpose());

        filtered.push(x.clone());

        // predict
        if k + 1 < ys.len() {
            let ax = a.matvec(&x);
            let bu = b.matvec(&us[k]);
            for i in 0..n {
                x[i] = ax[i] + bu[i];
            }
            p = &(&(a * &p) * &a.transpose()) + q;
        }
    }
    Ok(filtered)
}
