//! Linear model identification from trajectory snapshots: input encoding,
//! data-matrix assembly, truncated least-squares fit of the discrete-time
//! `(A, B)` pair, open-loop rollout, and spectral analysis.

mod model;

pub use model::{load_model, save_model, KoopmanModel, TrainingMeta};

use crate::numerics::{eigenvalues, pinv_with_rank, ComplexSpectrum, Matrix, NumericsError};
use crate::sim::{CentroidalState, ContactSet, Trajectory};
use thiserror::Error;

pub const STATE_DIM: usize = 9;
pub const INPUT_DIM: usize = 24;

/// Default relative singular-value truncation for the fit. The stacked data
/// matrix has only 33 rows, so at desk scale this guards against genuine
/// rank deficiency rather than damping noise.
pub const DEFAULT_SV_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum DmdcError {
    #[error("need at least {need} snapshot columns, got {got}")]
    InsufficientData { got: usize, need: usize },
    #[error("trajectory has no {0} channel")]
    ChannelMissing(&'static str),
    #[error("trajectory needs at least 2 samples, got {0}")]
    TrajectoryTooShort(usize),
    #[error("sample periods differ across trajectories ({a} vs {b})")]
    DtMismatch { a: f64, b: f64 },
    #[error("prediction and truth sequences differ in length ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("rollout of {steps} steps needs {steps} inputs, got {inputs}")]
    NotEnoughInputs { steps: usize, inputs: usize },
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file parse error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which trajectory channel feeds the snapshot matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Truth,
    Measured,
}

///24-entry input vector: per foot in fixed order, the masked contact force
/// `b_i f_i` followed by the masked relative foot position `b_i (r_i - c)`.
/// Swing feet contribute exact zeros, so their kinematics never enter the
/// model.
pub fn encode_input(state: &CentroidalState, contacts: &ContactSet) -> [f64; INPUT_DIM] {
    let mut u = [0.0; INPUT_DIM];
    for (i, foot) in contacts.feet.iter().enumerate() {
        if !foot.active {
            continue;
        }
        let base = 6 * i;
        for axis in 0..3 {
            u[base + axis] = foot.force[axis];
            u[base + 3 + axis] = foot.position[axis] - state.com[axis];
        }
    }
    u
}

/// Time-aligned snapshot columns `X`, `X'`, `U` stacked across trajectories.
/// Column `j` of `X'` is always the successor of column `j` of `X` within
/// the same trajectory; no pair straddles a trajectory boundary.
#[derive(Clone, Debug, Default)]
pub struct DataMatrices {
    state_cols: Vec<[f64; STATE_DIM]>,
    successor_cols: Vec<[f64; STATE_DIM]>,
    input_cols: Vec<[f64; INPUT_DIM]>,
    /// cumulative column count at the end of each appended trajectory
    boundaries: Vec<usize>,
    dt: Option<f64>,
}

impl DataMatrices {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assemble(trajs: &[Trajectory], channel: Channel) -> Result<Self, DmdcError> {
        let mut data = Self::new();
        for traj in trajs {
            data.append(traj, channel)?;
        }
        Ok(data)
    }

    /// Append one trajectory's snapshot pairs.
    pub fn append(&mut self, traj: &Trajectory, channel: Channel) -> Result<(), DmdcError> {
        let samples = match channel {
            Channel::Truth => &traj.truth,
            Channel::Measured => traj
                .measured
                .as_ref()
                .ok_or(DmdcError::ChannelMissing("measured"))?,
        };
        if samples.len() < 2 {
            return Err(DmdcError::TrajectoryTooShort(samples.len()));
        }
        if let Some(dt) = self.dt {
            if (dt - traj.dt).abs() > 1e-12 * dt.max(traj.dt) {
                return Err(DmdcError::DtMismatch { a: dt, b: traj.dt });
            }
        } else {
            self.dt = Some(traj.dt);
        }
        for pair in samples.windows(2) {
            self.state_cols.push(pair[0].state.to_flat());
            self.successor_cols.push(pair[1].state.to_flat());
            self.input_cols
                .push(encode_input(&pair[0].state, &pair[0].contacts));
        }
        self.boundaries.push(self.state_cols.len());
        Ok(())
    }

    pub fn num_columns(&self) -> usize {
        self.state_cols.len()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn dt(&self) -> Option<f64> {
        self.dt
    }

    pub fn state_columns(&self) -> &[[f64; STATE_DIM]] {
        &self.state_cols
    }

    pub fn successor_columns(&self) -> &[[f64; STATE_DIM]] {
        &self.successor_cols
    }

    pub fn input_columns(&self) -> &[[f64; INPUT_DIM]] {
        &self.input_cols
    }

    /// Raw column constructor for synthetic data (tests, oracles).
    pub fn from_raw(
        dt: f64,
        states: Vec<[f64; STATE_DIM]>,
        successors: Vec<[f64; STATE_DIM]>,
        inputs: Vec<[f64; INPUT_DIM]>,
    ) -> Result<Self, DmdcError> {
        if states.len() != successors.len() || states.len() != inputs.len() {
            return Err(DmdcError::LengthMismatch {
                pred: states.len(),
                truth: successors.len().min(inputs.len()),
            });
        }
        let n = states.len();
        Ok(Self {
            state_cols: states,
            successor_cols: successors,
            input_cols: inputs,
            boundaries: vec![n],
            dt: Some(dt),
        })
    }

    /// Stacked 33-row matrix `[X; U]`.
    fn omega(&self) -> Matrix {
        let n = self.num_columns();
        let mut omega = Matrix::zeros(STATE_DIM + INPUT_DIM, n);
        for (j, (x, u)) in self.state_cols.iter().zip(self.input_cols.iter()).enumerate() {
            for i in 0..STATE_DIM {
                omega[(i, j)] = x[i];
            }
            for i in 0..INPUT_DIM {
                omega[(STATE_DIM + i, j)] = u[i];
            }
        }
        omega
    }

    fn successors(&self) -> Matrix {
        let n = self.num_columns();
        let mut xp = Matrix::zeros(STATE_DIM, n);
        for (j, x) in self.successor_cols.iter().enumerate() {
            for i in 0..STATE_DIM {
                xp[(i, j)] = x[i];
            }
        }
        xp
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Relative singular-value truncation threshold.
    pub sv_threshold: f64,
    /// Scale each data row by its standard deviation before solving and
    /// unscale the result. Off by default: the fit runs in raw physical
    /// units.
    pub row_scaling: bool,
    /// Gait names recorded in the model metadata.
    pub gaits: Vec<String>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            sv_threshold: DEFAULT_SV_THRESHOLD,
            row_scaling: false,
            gaits: Vec::new(),
        }
    }
}

/// Least-squares fit `K = [A B] = X' pinv([X; U])` with truncated singular
/// values. The returned model records the Frobenius residual
/// `||X' - K Omega||_F` and the retained rank.
pub fn fit(data: &DataMatrices, options: &FitOptions) -> Result<KoopmanModel, DmdcError> {
    let n = data.num_columns();
    let need = STATE_DIM + INPUT_DIM;
    if n < need {
        return Err(DmdcError::InsufficientData { got: n, need });
    }
    let dt = data.dt().expect("non-empty data carries dt");

    let mut omega = data.omega();
    let mut successors = data.successors();

    // optional per-row scaling for conditioning; K is unscaled afterwards
    let mut omega_scale = vec![1.0; need];
    let mut successor_scale = vec![1.0; STATE_DIM];
    if options.row_scaling {
        let row_std = |m: &Matrix, i: usize| -> f64 {
            let row = m.row(i);
            let mean: f64 = row.iter().sum::<f64>() / row.len() as f64;
            let var: f64 =
                row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / row.len() as f64;
            let std = var.sqrt();
            if std > 0.0 {
                std
            } else {
                1.0
            }
        };
        for (i, scale) in omega_scale.iter_mut().enumerate() {
            *scale = row_std(&omega, i);
        }
        for (i, scale) in successor_scale.iter_mut().enumerate() {
            *scale = row_std(&successors, i);
        }
        for i in 0..need {
            for j in 0..n {
                omega[(i, j)] /= omega_scale[i];
            }
        }
        for i in 0..STATE_DIM {
            for j in 0..n {
                successors[(i, j)] /= successor_scale[i];
            }
        }
    }

    let (omega_pinv, retained_rank) = pinv_with_rank(&omega, options.sv_threshold)?;
    let mut k = successors.matmul(&omega_pinv);

    if options.row_scaling {
        for i in 0..STATE_DIM {
            for j in 0..need {
                k[(i, j)] *= successor_scale[i] / omega_scale[j];
            }
        }
        // recompute the unscaled data for the residual
        omega = data.omega();
        successors = data.successors();
    }

    let residual = (&successors - &k.matmul(&omega)).frobenius_norm();

    let mut a = Matrix::zeros(STATE_DIM, STATE_DIM);
    let mut b = Matrix::zeros(STATE_DIM, INPUT_DIM);
    for i in 0..STATE_DIM {
        for j in 0..STATE_DIM {
            a[(i, j)] = k[(i, j)];
        }
        for j in 0..INPUT_DIM {
            b[(i, j)] = k[(i, STATE_DIM + j)];
        }
    }

    Ok(KoopmanModel {
        a,
        b,
        dt,
        sv_threshold: options.sv_threshold,
        meta: TrainingMeta {
            gaits: options.gaits.clone(),
            sample_count: n,
            residual,
            retained_rank,
        },
    })
}

/// Iterate `x_{ k+1 } = A x_k + B u_k` from `x0`; the result holds `steps + 1`
/// states including `x0`.
pub fn rollout(
    model: &KoopmanModel,
    x0: &[f64; STATE_DIM],
    inputs: &[[f64; INPUT_DIM]],
    steps: usize,
) -> Result<Vec<[f64; STATE_DIM]>, DmdcError> {
    if steps > inputs.len() {
        return Err(DmdcError::NotEnoughInputs {
            steps,
            inputs: inputs.len(),
        });
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = *x0;
    states.push(x);
    for input in inputs.iter().take(steps) {
        let mut next = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            let mut acc = 0.0;
            for j in 0..STATE_DIM {
                acc += model.a[(i, j)] * x[j];
            }
            for j in 0..INPUT_DIM {
                acc += model.b[(i, j)] * input[j];
            }
            next[i] = acc;
        }
        x = next;
        states.push(x);
    }
    Ok(states)
}

/// Per-channel root-mean-square error between two state sequences.
pub fn rmse_per_state(
    pred: &[[f64; STATE_DIM]],
    truth: &[[f64; STATE_DIM]],
) -> Result<[f64; STATE_DIM], DmdcError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(DmdcError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    let mut acc = [0.0; STATE_DIM];
    for (p, t) in pred.iter().zip(truth.iter()) {
        for i in 0..STATE_DIM {
            let e = p[i] - t[i];
            acc[i] += e * e;
        }
    }
    let n = pred.len() as f64;
    Ok(acc.map(|s| (s / n).sqrt()))
}

/// Eigenvalues of the state-transition matrix plus the spectral radius.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub spectrum: ComplexSpectrum,
    pub spectral_radius: f64,
}

pub fn spectrum(model: &KoopmanModel) -> Result<SpectrumReport, DmdcError> {
    let spectrum = eigenvalues(&model.a)?;
    let spectral_radius = spectrum.spectral_radius();
    Ok(SpectrumReport {
        spectrum,
        spectral_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{FootContact, Sample};

    fn flight_sample(x: f64) -> Sample {
        Sample {
            state: CentroidalState {
                com: [x, 0.0, 0.3],
                linear_momentum: [0.0; 3],
                angular_momentum: [0.0; 3],
            },
            contacts: ContactSet::airborne([[0.0; 3]; 4]),
        }
    }

    #[test]
    fn airborne_input_is_zero() {
        let s = flight_sample(0.0);
        assert_eq!(encode_input(&s.state, &s.contacts), [0.0; INPUT_DIM]);
    }

    #[test]
    fn input_layout_is_force_then_relative_position() {
        let mut contacts = ContactSet::airborne([[0.0; 3]; 4]);
        contacts.feet[0] = FootContact::active([0.2, 0.1, 0.0], [0.0, 0.0, 50.0]);
        let state = CentroidalState {
            com: [0.0, 0.0, 0.3],
            linear_momentum: [0.0; 3],
            angular_momentum: [0.0; 3],
        };
        let u = encode_input(&state, &contacts);
        assert_eq!(&u[..6], &[0.0, 0.0, 50.0, 0.2, 0.1, -0.3]);
        assert_eq!(&u[6..], &[0.0; 18]);
    }

    #[test]
    fn input_round_trips_through_inverse_layout() {
        // reconstruct a ContactSet from an InputVector given flags and c
        let mut contacts = ContactSet::airborne([[0.0; 3]; 4]);
        contacts.feet[1] = FootContact::active([0.15, -0.1, 0.01], [3.0, -2.0, 40.0]);
        contacts.feet[3] = FootContact::active([-0.2, -0.12, 0.0], [-1.0, 0.5, 35.0]);
        let state = CentroidalState {
            com: [0.05, 0.02, 0.31],
            linear_momentum: [0.0; 3],
            angular_momentum: [0.0; 3],
        };
        let u = encode_input(&state, &contacts);
        for (i, foot) in contacts.feet.iter().enumerate() {
            if !foot.active {
                continue;
            }
            let base = 6 * i;
            for axis in 0..3 {
                assert_eq!(u[base + axis], foot.force[axis]);
                let restored = u[base + 3 + axis] + state.com[axis];
                assert!((restored - foot.position[axis]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn assemble_counts_columns_and_respects_boundaries() {
        let t1 = Trajectory::new(1e-3, (0..3).map(|i| flight_sample(i as f64)).collect(), None)
            .unwrap();
        let data = DataMatrices::assemble(std::slice::from_ref(&t1), Channel::Truth).unwrap();
        assert_eq!(data.num_columns(), 2);
        assert_eq!(data.successor_columns()[0][0], 1.0);
        assert_eq!(data.successor_columns()[1][0], 2.0);

        let t2 = Trajectory::new(
            1e-3,
            (0..10).map(|i| flight_sample(10.0 + i as f64)).collect(),
            None,
        )
        .unwrap();
        let t3 = Trajectory::new(
            1e-3,
            (0..20).map(|i| flight_sample(40.0 + i as f64)).collect(),
            None,
        )
        .unwrap();
        let both = DataMatrices::assemble(&[t2.clone(), t3.clone()], Channel::Truth).unwrap();
        assert_eq!(both.num_columns(), 9 + 19);
        assert_eq!(both.boundaries(), &[9, 28]);
        // no pair straddles the boundary: successor of column 8 is sample 9
        // of t2, not sample 0 of t3
        assert_eq!(both.state_columns()[8][0], 18.0);
        assert_eq!(both.successor_columns()[8][0], 19.0);
        assert_eq!(both.state_columns()[9][0], 40.0);

        // append equals assemble
        let mut incremental = DataMatrices::new();
        incremental.append(&t2, Channel::Truth).unwrap();
        incremental.append(&t3, Channel::Truth).unwrap();
        assert_eq!(incremental.state_columns(), both.state_columns());
        assert_eq!(incremental.successor_columns(), both.successor_columns());
        assert_eq!(incremental.input_columns(), both.input_columns());
    }

    #[test]
    fn measured_channel_must_exist() {
        let t = Trajectory::new(1e-3, (0..3).map(|i| flight_sample(i as f64)).collect(), None)
            .unwrap();
        assert!(matches!(
            DataMatrices::assemble(std::slice::from_ref(&t), Channel::Measured),
            Err(DmdcError::ChannelMissing(_))
        ));
    }

    #[test]
    fn rollout_identity_dynamics_is_constant() {
        let model = KoopmanModel {
            a: Matrix::identity(STATE_DIM),
            b: Matrix::zeros(STATE_DIM, INPUT_DIM),
            dt: 1e-3,
            sv_threshold: DEFAULT_SV_THRESHOLD,
            meta: TrainingMeta::default(),
        };
        let x0 = [1.0, -2.0, 3.0, 0.0, 0.5, 0.0, 0.0, 0.0, 9.0];
        let inputs = vec![[1.0; INPUT_DIM]; 5];
        let states = rollout(&model, &x0, &inputs, 5).unwrap();
        assert_eq!(states.len(), 6);
        for s in &states {
            assert_eq!(*s, x0);
        }
        // zero-step rollout is just the initial state
        let states = rollout(&model, &x0, &inputs, 0).unwrap();
        assert_eq!(states, vec![x0]);
    }

    #[test]
    fn rmse_trivial_and_hand_computed_cases() {
        let a = [[0.0; STATE_DIM]; 3];
        assert_eq!(rmse_per_state(&a, &a).unwrap(), [0.0; STATE_DIM]);

        let mut offset = a;
        for s in offset.iter_mut() {
            s[4] += 0.1;
        }
        let r = rmse_per_state(&offset, &a).unwrap();
        for (i, v) in r.iter().enumerate() {
            if i == 4 {
                assert!((v - 0.1).abs() < 1e-15);
            } else {
                assert_eq!(*v, 0.0);
            }
        }

        // errors (0.3, 0.4) -> sqrt((0.09 + 0.16)/2)
        let truth = [[0.0; STATE_DIM]; 2];
        let mut pred = truth;
        pred[0][0] = 0.3;
        pred[1][0] = 0.4;
        let r = rmse_per_state(&pred, &truth).unwrap();
        assert!((r[0] - (0.125_f64).sqrt()).abs() < 1e-12);
        assert!((r[0] - 0.3536).abs() < 5e-5);
    }

    #[test]
    fn rmse_rejects_length_mismatch() {
        let a = [[0.0; STATE_DIM]; 3];
        let b = [[0.0; STATE_DIM]; 2];
        assert!(matches!(
            rmse_per_state(&a, &b),
            Err(DmdcError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn spectrum_of_scaled_identity() {
        let model = KoopmanModel {
            a: Matrix::identity(STATE_DIM).scale(0.5),
            b: Matrix::zeros(STATE_DIM, INPUT_DIM),
            dt: 1e-3,
            sv_threshold: DEFAULT_SV_THRESHOLD,
            meta: TrainingMeta::default(),
        };
        let report = spectrum(&model).unwrap();
        assert_eq!(report.spectrum.len(), STATE_DIM);
        assert!((report.spectral_radius - 0.5).abs() < 1e-12);
        for &(re, im) in &report.spectrum.eigenvalues {
            assert!((re - 0.5).abs() < 1e-12 && im.abs() < 1e-12);
        }
    }
}
