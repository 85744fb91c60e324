//! Centroidal state, per-foot contact data, and robot parameters.

use super::SimError;

/// Quadruped feet in the fixed order used everywhere (data layout, CSV
/// columns, input encoding).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Foot {
    FrontLeft,
    FrontRight,
    HindLeft,
    HindRight,
}

impl Foot {
    pub const ALL: [Foot; 4] = [
        Foot::FrontLeft,
        Foot::FrontRight,
        Foot::HindLeft,
        Foot::HindRight,
    ];

    pub fn index(self) -> usize {
        match self {
            Foot::FrontLeft => 0,
            Foot::FrontRight => 1,
            Foot::HindLeft => 2,
            Foot::HindRight => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Foot::FrontLeft => "FL",
            Foot::FrontRight => "FR",
            Foot::HindLeft => "HL",
            Foot::HindRight => "HR",
        }
    }
}

/// CoM position (m), linear momentum (kg m/s), and angular momentum about
/// the CoM (kg m^2/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentroidalState {
    pub com: [f64; 3],
    pub linear_momentum: [f64; 3],
    pub angular_momentum: [f64; 3],
}

impl CentroidalState {
    pub fn zero() -> Self {
        Self {
            com: [0.0; 3],
            linear_momentum: [0.0; 3],
            angular_momentum: [0.0; 3],
        }
    }

    /// Flat layout, fixed order (c, l, k).
    pub fn to_flat(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[..3].copy_from_slice(&self.com);
        out[3..6].copy_from_slice(&self.linear_momentum);
        out[6..].copy_from_slice(&self.angular_momentum);
        out
    }

    pub fn from_flat(v: &[f64; 9]) -> Self {
        Self {
            com: [v[0], v[1], v[2]],
            linear_momentum: [v[3], v[4], v[5]],
            angular_momentum: [v[6], v[7], v[8]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_flat().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Contact flag, world foot position (m), and contact force (N) for one foot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootContact {
    pub active: bool,
    pub position: [f64; 3],
    pub force: [f64; 3],
}

impl FootContact {
    pub fn inactive(position: [f64; 3]) -> Self {
        Self {
            active: false,
            position,
            force: [0.0; 3],
        }
    }

    pub fn active(position: [f64; 3], force: [f64; 3]) -> Self {
        Self {
            active: true,
            position,
            force,
        }
    }
}

/// Point-contact state of all four feet at one instant. Inactive feet carry
/// an exactly-zero force.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactSet {
    pub feet: [FootContact; 4],
}

impl ContactSet {
    pub fn airborne(positions: [[f64; 3]; 4]) -> Self {
        Self {
            feet: positions.map(FootContact::inactive),
        }
    }

    pub fn flags(&self) -> [bool; 4] {
        [
            self.feet[0].active,
            self.feet[1].active,
            self.feet[2].active,
            self.feet[3].active,
        ]
    }

    pub fn any_active(&self) -> bool {
        self.feet.iter().any(|f| f.active)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (i, foot) in self.feet.iter().enumerate() {
            if !foot.active && foot.force != [0.0; 3] {
                return Err(SimError::InactiveFootForce { foot: i });
            }
            if foot.position.iter().any(|v| !v.is_finite())
                || foot.force.iter().any(|v| !v.is_finite())
            {
                return Err(SimError::NonFiniteSample);
            }
        }
        Ok(())
    }
}

/// Total mass, gravity vector, and nominal foot offsets from the CoM.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotParams {
    pub mass: f64,
    pub gravity: [f64; 3],
    pub nominal_foot_offsets: [[f64; 3]; 4],
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(SimError::InvalidParameter(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        Ok(())
    }

    /// Standing CoM height implied by the nominal offsets.
    pub fn standing_height(&self) -> f64 {
        let mean_z: f64 = self.nominal_foot_offsets.iter().map(|o| o[2]).sum::<f64>() / 4.0;
        -mean_z
    }
}

impl Default for RobotParams {
    /// Parameters sized like a small ~12 kg quadruped.
    fn default() -> Self {
        Self {
            mass: 12.0,
            gravity: [0.0, 0.0, -9.81],
            nominal_foot_offsets: [
                [0.19, 0.13, -0.30],
                [0.19, -0.13, -0.30],
                [-0.19, 0.13, -0.30],
                [-0.19, -0.13, -0.30],
            ],
        }
    }
}

pub(crate) fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_round_trip_preserves_order() {
        let s = CentroidalState {
            com: [1.0, 2.0, 3.0],
            linear_momentum: [4.0, 5.0, 6.0],
            angular_momentum: [7.0, 8.0, 9.0],
        };
        let flat = s.to_flat();
        assert_eq!(flat, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(CentroidalState::from_flat(&flat), s);
    }

    #[test]
    fn inactive_foot_with_force_fails_validation() {
        let mut c = ContactSet::airborne([[0.0; 3]; 4]);
        c.feet[2].force = [0.0, 0.0, 1.0];
        assert!(matches!(
            c.validate(),
            Err(SimError::InactiveFootForce { foot: 2 })
        ));
    }

    #[test]
    fn standing_height_from_offsets() {
        assert!((RobotParams::default().standing_height() - 0.30).abs() < 1e-12);
    }
}
