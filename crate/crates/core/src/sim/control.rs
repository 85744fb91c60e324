//! Synthetic gait controller: momentum-reference force distribution plus the
//! trajectory rollout that produces the ground-truth channel.

use super::dynamics::integrate_step;
use super::gait::{Gait, GaitSchedule};
use super::state::{scale3, sub3, CentroidalState, ContactSet, FootContact, RobotParams};
use super::trajectory::{Sample, Trajectory};
use super::SimError;
use crate::numerics::{pinv, skew, Matrix};

// Relative singular-value cutoff for the contact-map pseudo-inverse. The map
// is genuinely rank-deficient for two-foot support (no torque about the line
// joining the feet), so truncation here is structural, not noise damping.
const CONTACT_MAP_SV_THRESHOLD: f64 = 1e-10;

// Trajectory divergence guard.
const STATE_NORM_BOUND: f64 = 1e6;

/// Gains and force limits of the synthetic controller.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerParams {
    /// Proportional gain driving linear momentum to its reference (1/s).
    pub linear_gain: f64,
    /// Proportional gain damping angular momentum to zero (1/s).
    pub angular_gain: f64,
    /// Gain of the vertical momentum reference that holds CoM height (1/s).
    pub height_gain: f64,
    /// Friction coefficient of the cone `|f_xy| <= mu f_z`.
    pub friction_coefficient: f64,
    /// Normal-force ceiling per foot (N).
    pub max_normal_force: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            linear_gain: 20.0,
            angular_gain: 10.0,
            height_gain: 3.0,
            friction_coefficient: 0.8,
            max_normal_force: 500.0,
        }
    }
}

/// Minimum-norm contact forces realizing the desired momentum rates.
///
/// Solves the stacked linear map `[sum f; sum (r - c) x f] = desired - [m g; 0]`
/// over the active feet with a truncated pseudo-inverse, so rank-deficient
/// configurations return the least-norm least-squares solution. Inactive
/// feet carry exactly zero force; with no active feet all forces are zero.
pub fn distribute_forces(
    state: &CentroidalState,
    flags: [bool; 4],
    positions: [[f64; 3]; 4],
    desired_rate: &[f64; 6],
    params: &RobotParams,
) -> ContactSet {
    let active: Vec<usize> = (0..4).filter(|&i| flags[i]).collect();
    let mut contacts = ContactSet {
        feet: [
            FootContact::inactive(positions[0]),
            FootContact::inactive(positions[1]),
            FootContact::inactive(positions[2]),
            FootContact::inactive(positions[3]),
        ],
    };
    if active.is_empty() {
        return contacts;
    }

    let mut map = Matrix::zeros(6, 3 * active.len());
    for (j, &foot) in active.iter().enumerate() {
        for axis in 0..3 {
            map[(axis, 3 * j + axis)] = 1.0;
        }
        let arm = skew(sub3(positions[foot], state.com));
        for r in 0..3 {
            for c in 0..3 {
                map[(3 + r, 3 * j + c)] = arm[(r, c)];
            }
        }
    }

    let mut rhs = [0.0; 6];
    for i in 0..3 {
        rhs[i] = desired_rate[i] - params.mass * params.gravity[i];
        rhs[3 + i] = desired_rate[3 + i];
    }

    // the map always contains identity blocks, so rank zero is impossible
    let inverse = pinv(&map, CONTACT_MAP_SV_THRESHOLD)
        .expect("contact map has identity blocks and cannot be rank zero");
    let forces = inverse.matvec(&rhs);
    for (j, &foot) in active.iter().enumerate() {
        contacts.feet[foot] = FootContact::active(
            positions[foot],
            [forces[3 * j], forces[3 * j + 1], forces[3 * j + 2]],
        );
    }
    contacts
}

fn clip_to_friction_cone(force: [f64; 3], mu: f64, f_max: f64) -> [f64; 3] {
    let fz = force[2].clamp(0.0, f_max);
    let tangential = force[0].hypot(force[1]);
    let limit = mu * fz;
    if tangential > limit {
        let scale = if tangential > 0.0 { limit / tangential } else { 0.0 };
        [force[0] * scale, force[1] * scale, fz]
    } else {
        [force[0], force[1], fz]
    }
}

/// Roll out the gait under the synthetic controller, filling the truth
/// channel at a fixed sample period.
pub fn simulate(
    schedule: &GaitSchedule,
    params: &RobotParams,
    controller: &ControllerParams,
    duration: f64,
    dt: f64,
) -> Result<Trajectory, SimError> {
    params.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidParameter(format!(
            "sample period must be positive, got {dt}"
        )));
    }
    if duration < schedule.period {
        return Err(SimError::InvalidParameter(format!(
            "duration {duration} s is shorter than one gait period {} s",
            schedule.period
        )));
    }

    let steps = (duration / dt).round() as usize;
    let height = params.standing_height();
    let gravity_mag = -params.gravity[2];
    let v_cmd = schedule.commanded_velocity;

    let mut state = CentroidalState {
        com: [0.0, 0.0, height],
        linear_momentum: [0.0; 3],
        angular_momentum: [0.0; 3],
    };

    // feet start at their nominal offsets on the ground
    let mut foot_positions: [[f64; 3]; 4] = [[0.0; 3]; 4];
    let mut prev_flags = [false; 4];
    for i in 0..4 {
        let off = params.nominal_foot_offsets[i];
        foot_positions[i] = [off[0], off[1], 0.0];
    }

    let mut samples = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let t = step as f64 * dt;
        let flags = schedule.contact_flags(t);

        // touchdown placement: nominal offset plus half a stance of travel
        for i in 0..4 {
            if flags[i] && !prev_flags[i] {
                let off = params.nominal_foot_offsets[i];
                let stance = schedule.stance_duration(i);
                foot_positions[i] = [
                    state.com[0] + off[0] + 0.5 * v_cmd[0] * stance,
                    state.com[1] + off[1] + 0.5 * v_cmd[1] * stance,
                    0.0,
                ];
            }
        }
        prev_flags = flags;

        // momentum references: commanded planar velocity plus a vertical
        // component that regulates CoM height
        let mut v_ref = [
            v_cmd[0],
            v_cmd[1],
            controller.height_gain * (height - state.com[2]),
        ];
        if schedule.gait == Gait::Jump {
            // launch boost over the last 30% of stance, sized so the flight
            // phase lasts about (1 - duty) * period
            let phase = schedule.foot_phase(0, t);
            let duty = schedule.duty[0];
            if phase >= 0.7 * duty && phase < duty {
                v_ref[2] += 0.5 * gravity_mag * schedule.flight_duration();
            }
        }
        let l_ref = scale3(v_ref, params.mass);

        let mut desired_rate = [0.0; 6];
        for i in 0..3 {
            desired_rate[i] =
                controller.linear_gain * (l_ref[i] - state.linear_momentum[i]);
            desired_rate[3 + i] = -controller.angular_gain * state.angular_momentum[i];
        }

        let mut contacts =
            distribute_forces(&state, flags, foot_positions, &desired_rate, params);
        for foot in contacts.feet.iter_mut() {
            if foot.active {
                foot.force = clip_to_friction_cone(
                    foot.force,
                    controller.friction_coefficient,
                    controller.max_normal_force,
                );
            }
        }

        samples.push(Sample { state, contacts });

        if step < steps {
            state = integrate_step(&state, &contacts, params, dt);
            if !state.is_finite() || state.max_abs() > STATE_NORM_BOUND {
                return Err(SimError::Divergence {
                    step,
                    magnitude: state.max_abs(),
                });
            }
        }
    }

    Trajectory::new(dt, samples, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gait::build_gait_schedule;

    #[test]
    fn no_active_feet_returns_zero_forces() {
        let state = CentroidalState::zero();
        let set = distribute_forces(
            &state,
            [false; 4],
            [[0.0; 3]; 4],
            &[0.0; 6],
            &RobotParams::default(),
        );
        assert!(!set.any_active());
        for foot in &set.feet {
            assert_eq!(foot.force, [0.0; 3]);
        }
    }

    #[test]
    fn symmetric_stance_splits_weight_evenly() {
        // desired zero momentum rates, m = 10: each foot carries weight/4
        let params = RobotParams {
            mass: 10.0,
            ..RobotParams::default()
        };
        let mut state = CentroidalState::zero();
        state.com = [0.0, 0.0, 0.3];
        let positions = [
            [0.2, 0.15, 0.0],
            [0.2, -0.15, 0.0],
            [-0.2, 0.15, 0.0],
            [-0.2, -0.15, 0.0],
        ];
        let set = distribute_forces(&state, [true; 4], positions, &[0.0; 6], &params);
        for foot in &set.feet {
            assert!(foot.force[0].abs() < 1e-9);
            assert!(foot.force[1].abs() < 1e-9);
            assert!((foot.force[2] - 24.525).abs() < 1e-9, "{:?}", foot.force);
        }
    }

    #[test]
    fn single_foot_below_com_carries_weight() {
        let params = RobotParams {
            mass: 10.0,
            ..RobotParams::default()
        };
        let mut state = CentroidalState::zero();
        state.com = [0.0, 0.0, 0.3];
        let mut positions = [[0.0; 3]; 4];
        positions[1] = [0.0, 0.0, 0.0];
        let set = distribute_forces(
            &state,
            [false, true, false, false],
            positions,
            &[0.0; 6],
            &params,
        );
        let f = set.feet[1].force;
        assert!(f[0].abs() < 1e-9 && f[1].abs() < 1e-9);
        assert!((f[2] - 98.1).abs() < 1e-9);
    }

    #[test]
    fn friction_cone_clipping() {
        let clipped = clip_to_friction_cone([100.0, 0.0, 50.0], 0.8, 500.0);
        assert!((clipped[0] - 40.0).abs() < 1e-12);
        assert_eq!(clipped[2], 50.0);

        let clipped = clip_to_friction_cone([0.0, 0.0, 700.0], 0.8, 500.0);
        assert_eq!(clipped[2], 500.0);

        let clipped = clip_to_friction_cone([10.0, 0.0, -5.0], 0.8, 500.0);
        assert_eq!(clipped, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn simulate_rejects_short_duration() {
        let schedule = build_gait_schedule(Gait::Trot, 0.5, 0.5, [0.0, 0.0]).unwrap();
        let err = simulate(
            &schedule,
            &RobotParams::default(),
            &ControllerParams::default(),
            0.25,
            1e-3,
        );
        assert!(err.is_err());
    }
}
