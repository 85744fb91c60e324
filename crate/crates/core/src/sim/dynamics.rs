//! Newton-Euler centroidal dynamics and the RK4 step used to integrate them.

use super::state::{add3, cross3, scale3, sub3, CentroidalState, ContactSet, RobotParams};

/// Time derivative of the centroidal state under the given contacts:
/// `c' = l/m`, `l' = m g + sum(b_i f_i)`, `k' = sum(b_i (r_i - c) x f_i)`.
/// Point feet carry no contact torque.
pub fn centroidal_derivative(
    state: &CentroidalState,
    contacts: &ContactSet,
    params: &RobotParams,
) -> [f64; 9] {
    let com_rate = scale3(state.linear_momentum, 1.0 / params.mass);
    let mut linear_rate = scale3(params.gravity, params.mass);
    let mut angular_rate = [0.0; 3];
    for foot in &contacts.feet {
        if !foot.active {
            continue;
        }
        linear_rate = add3(linear_rate, foot.force);
        let arm = sub3(foot.position, state.com);
        angular_rate = add3(angular_rate, cross3(arm, foot.force));
    }
    let mut out = [0.0; 9];
    out[..3].copy_from_slice(&com_rate);
    out[3..6].copy_from_slice(&linear_rate);
    out[6..].copy_from_slice(&angular_rate);
    out
}

/// Classical 4th-order Runge-Kutta step with the contacts held fixed.
pub fn integrate_step(
    state: &CentroidalState,
    contacts: &ContactSet,
    params: &RobotParams,
    dt: f64,
) -> CentroidalState {
    debug_assert!(dt > 0.0);
    let x0 = state.to_flat();
    let advance = |base: &[f64; 9], k: &[f64; 9], h: f64| -> [f64; 9] {
        let mut out = *base;
        for i in 0..9 {
            out[i] += h * k[i];
        }
        out
    };

    let k1 = centroidal_derivative(state, contacts, params);
    let k2 = centroidal_derivative(
        &CentroidalState::from_flat(&advance(&x0, &k1, 0.5 * dt)),
        contacts,
        params,
    );
    let k3 = centroidal_derivative(
        &CentroidalState::from_flat(&advance(&x0, &k2, 0.5 * dt)),
        contacts,
        params,
    );
    let k4 = centroidal_derivative(
        &CentroidalState::from_flat(&advance(&x0, &k3, dt)),
        contacts,
        params,
    );

    let mut next = x0;
    for i in 0..9 {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    CentroidalState::from_flat(&next)
}
