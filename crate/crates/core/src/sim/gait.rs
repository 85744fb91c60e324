//! Periodic per-foot contact schedules for the three synthetic gaits.

use super::SimError;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gait {
    /// Diagonal pairs (FL, HR) and (FR, HL) alternate, half a cycle apart.
    Trot,
    /// All four feet share phase; the cycle has a simultaneous flight phase.
    Jump,
    /// Front pair and hind pair alternate, half a cycle apart.
    Bound,
}

impl Gait {
    pub fn name(self) -> &'static str {
        match self {
            Gait::Trot => "trot",
            Gait::Jump => "jump",
            Gait::Bound => "bound",
        }
    }

    fn phase_offsets(self) -> [f64; 4] {
        match self {
            Gait::Trot => [0.0, 0.5, 0.5, 0.0],
            Gait::Jump => [0.0, 0.0, 0.0, 0.0],
            Gait::Bound => [0.0, 0.0, 0.5, 0.5],
        }
    }
}

impl fmt::Display for Gait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gait {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "trot" => Ok(Gait::Trot),
            "jump" => Ok(Gait::Jump),
            "bound" => Ok(Gait::Bound),
            other => Err(SimError::UnknownGait(other.to_string())),
        }
    }
}

/// Per-foot contact timing plus the commanded planar velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct GaitSchedule {
    pub gait: Gait,
    pub period: f64,
    pub duty: [f64; 4],
    pub phase_offset: [f64; 4],
    pub commanded_velocity: [f64; 2],
}

impl GaitSchedule {
    /// Contact flag of one foot at time `t`.
    pub fn foot_in_contact(&self, foot: usize, t: f64) -> bool {
        let phase = (t / self.period + self.phase_offset[foot]).fract();
        phase < self.duty[foot]
    }

    pub fn contact_flags(&self, t: f64) -> [bool; 4] {
        [
            self.foot_in_contact(0, t),
            self.foot_in_contact(1, t),
            self.foot_in_contact(2, t),
            self.foot_in_contact(3, t),
        ]
    }

    /// Fraction of the cycle elapsed for one foot, in `[0, 1)`.
    pub fn foot_phase(&self, foot: usize, t: f64) -> f64 {
        (t / self.period + self.phase_offset[foot]).fract()
    }

    /// Stance duration of one foot in seconds.
    pub fn stance_duration(&self, foot: usize) -> f64 {
        self.duty[foot] * self.period
    }

    /// Duration of the shared flight phase for the jump gait: the part of
    /// the cycle where no foot touches the ground.
    pub fn flight_duration(&self) -> f64 {
        match self.gait {
            Gait::Jump => (1.0 - self.duty[0]) * self.period,
            // trot/bound at duty >= 0.5 always keep a pair on the ground
            _ => ((1.0 - 2.0 * self.duty[0]).max(0.0)) * self.period,
        }
    }
}

/// Build a schedule with the gait's defining phase layout.
pub fn build_gait_schedule(
    gait: Gait,
    period: f64,
    duty: f64,
    commanded_velocity: [f64; 2],
) -> Result<GaitSchedule, SimError> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(SimError::InvalidParameter(format!(
            "gait period must be positive, got {period}"
        )));
    }
    if !(duty > 0.0 && duty <= 1.0) {
        return Err(SimError::InvalidParameter(format!(
            "duty factor must be in (0, 1], got {duty}"
        )));
    }
    Ok(GaitSchedule {
        gait,
        period,
        duty: [duty; 4],
        phase_offset: gait.phase_offsets(),
        commanded_velocity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trot_alternates_diagonal_pairs() {
        let s = build_gait_schedule(Gait::Trot, 0.5, 0.5, [0.0, 0.0]).unwrap();
        // FL and HR in contact over [0, 0.25), FR and HL over [0.25, 0.5)
        for &t in &[0.01, 0.1, 0.249] {
            assert_eq!(s.contact_flags(t), [true, false, false, true], "t={t}");
        }
        for &t in &[0.251, 0.4, 0.499] {
            assert_eq!(s.contact_flags(t), [false, true, true, false], "t={t}");
        }
        // periodic
        assert_eq!(s.contact_flags(0.51), [true, false, false, true]);
    }

    #[test]
    fn jump_shares_phase_across_feet() {
        let s = build_gait_schedule(Gait::Jump, 1.0, 0.6, [0.0, 0.0]).unwrap();
        for &t in &[0.0, 0.3, 0.59] {
            assert_eq!(s.contact_flags(t), [true; 4], "t={t}");
        }
        for &t in &[0.61, 0.8, 0.99] {
            assert_eq!(s.contact_flags(t), [false; 4], "t={t}");
        }
        assert!((s.flight_duration() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn bound_alternates_front_and_hind_pairs() {
        let s = build_gait_schedule(Gait::Bound, 0.4, 0.5, [0.0, 0.0]).unwrap();
        for &t in &[0.01, 0.19] {
            assert_eq!(s.contact_flags(t), [true, true, false, false], "t={t}");
        }
        for &t in &[0.21, 0.39] {
            assert_eq!(s.contact_flags(t), [false, false, true, true], "t={t}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_gait_schedule(Gait::Trot, 0.0, 0.5, [0.0, 0.0]).is_err());
        assert!(build_gait_schedule(Gait::Trot, 0.5, 0.0, [0.0, 0.0]).is_err());
        assert!(build_gait_schedule(Gait::Trot, 0.5, 1.1, [0.0, 0.0]).is_err());
    }

    #[test]
    fn unknown_gait_name_is_rejected() {
        assert!(matches!(
            "gallop".parse::<Gait>(),
            Err(SimError::UnknownGait(_))
        ));
        assert_eq!("bound".parse::<Gait>().unwrap(), Gait::Bound);
    }
}
