//! Drive an estimator over a trajectory's measured channel and score it
//! against the truth channel.

use super::ekf::{ekf_predict, ekf_update, EkfState};
use super::mhe::{MheConfig, MheEstimator};
use super::EstimatorError;
use crate::dmdc::{encode_input, rmse_per_state, KoopmanModel};
use crate::numerics::Matrix;
use crate::sim::{RobotParams, Trajectory};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Mhe,
    Ekf,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Mhe => "mhe",
            EstimatorKind::Ekf => "ekf",
        }
    }
}

/// EKF tuning: noise covariances and the initial state covariance.
#[derive(Clone, Debug)]
pub struct EkfSetup {
    pub params: RobotParams,
    pub process_noise: Matrix,
    pub measurement_noise: Matrix,
    pub initial_covariance: Matrix,
}

pub enum EstimatorSetup<'a> {
    Mhe {
        model: &'a KoopmanModel,
        config: &'a MheConfig,
    },
    Ekf(&'a EkfSetup),
}

impl EstimatorSetup<'_> {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorSetup::Mhe { .. } => EstimatorKind::Mhe,
            EstimatorSetup::Ekf(_) => EstimatorKind::Ekf,
        }
    }
}

/// Per-step estimates aligned with the truth samples, per-state RMSE, and
/// wall-clock timing.
#[derive(Clone, Debug)]
pub struct EstimatorRun {
    pub kind: EstimatorKind,
    pub estimates: Vec<[f64; 9]>,
    pub rmse: [f64; 9],
    pub solve_times_us: Vec<u64>,
    /// Largest relative KKT residual over all MHE solves; absent for the EKF.
    pub max_kkt_relative: Option<f64>,
}

impl EstimatorRun {
    pub fn mean_solve_time_us(&self) -> f64 {
        if self.solve_times_us.is_empty() {
            return 0.0;
        }
        self.solve_times_us.iter().sum::<u64>() as f64 / self.solve_times_us.len() as f64
    }
}

/// Run the configured estimator over the measured channel; estimates are
/// scored against truth at the same timestamps.
pub fn run_estimator(
    setup: &EstimatorSetup,
    traj: &Trajectory,
) -> Result<EstimatorRun, EstimatorError> {
    let measured = traj
        .measured
        .as_ref()
        .ok_or(EstimatorError::MeasuredChannelMissing)?;
    let mut estimates = Vec::with_capacity(measured.len());
    let mut solve_times = Vec::with_capacity(measured.len());
    let mut max_kkt_relative = None;

    match setup {
        EstimatorSetup::Mhe { model, config } => {
            let mut estimator = MheEstimator::new((*model).clone(), (*config).clone())?;
            for sample in measured {
                let y = sample.state.to_flat();
                let u = encode_input(&sample.state, &sample.contacts);
                let start = Instant::now();
                let estimate = estimator.step(&y, &u)?;
                solve_times.push(start.elapsed().as_micros() as u64);
                estimates.push(estimate);
            }
            max_kkt_relative = Some(estimator.max_kkt_relative());
        }
        EstimatorSetup::Ekf(setup) => {
            let mut state = EkfState::new(
                measured[0].state,
                setup.initial_covariance.clone(),
                setup.process_noise.clone(),
                setup.measurement_noise.clone(),
            )?;
            estimates.push(state.state.to_flat());
            solve_times.push(0);
            for k in 1..measured.len() {
                let start = Instant::now();
                // contacts recorded at k-1 acted over [t_{k-1}, t_k]
                state = ekf_predict(&state, &measured[k - 1].contacts, &setup.params, traj.dt);
                state = ekf_update(&state, &measured[k].state.to_flat())?;
                solve_times.push(start.elapsed().as_micros() as u64);
                estimates.push(state.state.to_flat());
            }
        }
    }

    let truth: Vec<[f64; 9]> = traj.truth.iter().map(|s| s.state.to_flat()).collect();
    let rmse = rmse_per_state(&estimates, &truth).map_err(|_| EstimatorError::InvalidConfig(
        "estimate and truth sequences diverged in length".into(),
    ))?;

    Ok(EstimatorRun {
        kind: setup.kind(),
        estimates,
        rmse,
        solve_times_us: solve_times,
        max_kkt_relative,
    })
}

/// Run CSV: `t`, the 9 truth components, the 9 estimates, and the per-step
/// solve time in microseconds.
pub fn write_run_csv(
    path: &Path,
    traj: &Trajectory,
    run: &EstimatorRun,
) -> Result<(), EstimatorError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let state_cols = ["c_x", "c_y", "c_z", "l_x", "l_y", "l_z", "k_x", "k_y", "k_z"];
    let mut header = vec!["t".to_string()];
    for c in state_cols {
        header.push(format!("truth_{c}"));
    }
    for c in state_cols {
        header.push(format!("est_{c}"));
    }
    header.push("solve_time_us".into());
    writeln!(w, "{}", header.join(","))?;
    for (k, estimate) in run.estimates.iter().enumerate() {
        let mut fields = Vec::with_capacity(20);
        fields.push(format!("{:.16e}", k as f64 * traj.dt));
        for v in traj.truth[k].state.to_flat() {
            fields.push(format!("{v:.16e}"));
        }
        for v in estimate {
            fields.push(format!("{v:.16e}"));
        }
        fields.push(run.solve_times_us[k].to_string());
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}
