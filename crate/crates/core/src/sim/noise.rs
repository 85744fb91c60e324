//! White Gaussian measurement noise injection.

use super::state::CentroidalState;
use super::trajectory::{Sample, Trajectory};
use super::SimError;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

/// Noise magnitudes for the measured channel. `sigma_state` holds one
/// standard deviation per state group: CoM position (m), linear momentum
/// (kg m/s), angular momentum (kg m^2/s), each applied to all three axes of
/// its group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    pub sigma_state: [f64; 3],
    pub sigma_force: f64,
    pub sigma_foot_position: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let all = [
            self.sigma_state[0],
            self.sigma_state[1],
            self.sigma_state[2],
            self.sigma_force,
            self.sigma_foot_position,
        ];
        if all.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SimError::InvalidParameter(
                "noise standard deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_state: [0.002, 0.02, 0.02],
            sigma_force: 5.0,
            sigma_foot_position: 0.002,
            seed: 0,
        }
    }
}

/// Fill the measured channel with truth plus independent zero-mean Gaussian
/// noise. Contact flags are copied exactly and inactive feet keep their
/// exactly-zero force; the result is deterministic for a given seed.
pub fn add_noise(traj: &Trajectory, noise: &NoiseConfig) -> Result<Trajectory, SimError> {
    noise.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(noise.seed);
    let state_dists = [
        Normal::new(0.0, noise.sigma_state[0]).expect("validated sigma"),
        Normal::new(0.0, noise.sigma_state[1]).expect("validated sigma"),
        Normal::new(0.0, noise.sigma_state[2]).expect("validated sigma"),
    ];
    let force_dist = Normal::new(0.0, noise.sigma_force).expect("validated sigma");
    let position_dist = Normal::new(0.0, noise.sigma_foot_position).expect("validated sigma");

    let mut measured = Vec::with_capacity(traj.truth.len());
    for sample in &traj.truth {
        let mut flat = sample.state.to_flat();
        for (group, dist) in state_dists.iter().enumerate() {
            for axis in 0..3 {
                flat[group * 3 + axis] += dist.sample(&mut rng);
            }
        }
        let mut contacts = sample.contacts;
        for foot in contacts.feet.iter_mut() {
            for axis in 0..3 {
                foot.position[axis] += position_dist.sample(&mut rng);
            }
            if foot.active {
                for axis in 0..3 {
                    foot.force[axis] += force_dist.sample(&mut rng);
                }
            }
        }
        measured.push(Sample {
            state: CentroidalState::from_flat(&flat),
            contacts,
        });
    }
    Trajectory::new(traj.dt, traj.truth.clone(), Some(measured))
}
