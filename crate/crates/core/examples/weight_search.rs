//! Coarse grid search over estimator weights on held-out noisy gait data.
//! This is the search that produced the default MHE/EKF weights frozen in
//! the repository config; rerun it after changing the simulator, controller,
//! or noise defaults.
//!
//! Usage: cargo run --release --example weight_search

use centroidal_koopman::dmdc::{fit, Channel, DataMatrices, FitOptions, KoopmanModel};
use centroidal_koopman::estimators::{
    run_estimator, EkfSetup, EstimatorSetup, MheConfig,
};
use centroidal_koopman::numerics::Matrix;
use centroidal_koopman::sim::{
    add_noise, build_gait_schedule, simulate, ControllerParams, Gait, NoiseConfig, RobotParams,
    Trajectory,
};

const DURATION: f64 = 10.0;
const DT: f64 = 1e-3;

fn gait_spec(gait: Gait) -> (f64, f64) {
    match gait {
        Gait::Trot => (0.5, 0.5),
        Gait::Jump => (0.8, 0.7),
        Gait::Bound => (0.4, 0.5),
    }
}

fn make(gait: Gait, v: [f64; 2], seed: u64) -> Trajectory {
    let (period, duty) = gait_spec(gait);
    let schedule = build_gait_schedule(gait, period, duty, v).unwrap();
    let truth = simulate(
        &schedule,
        &RobotParams::default(),
        &ControllerParams::default(),
        DURATION,
        DT,
    )
    .unwrap();
    add_noise(
        &truth,
        &NoiseConfig {
            seed,
            ..NoiseConfig::default()
        },
    )
    .unwrap()
}

fn group_diag(c: f64, l: f64, k: f64) -> Matrix {
    Matrix::diag(&[c, c, c, l, l, l, k, k, k])
}

fn fmt_rmse(r: &[f64; 9]) -> String {
    format!(
        "c=({:.1e} {:.1e} {:.1e}) l=({:.3} {:.3} {:.3}) k=({:.4} {:.4} {:.4})",
        r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]
    )
}

fn main() {
    // train on trot+jump, hold out one velocity per gait plus bound
    let train = vec![
        make(Gait::Trot, [0.5, 0.0], 11),
        make(Gait::Trot, [0.7, 0.3], 12),
        make(Gait::Jump, [0.3, 0.0], 13),
        make(Gait::Jump, [0.6, 0.3], 14),
    ];
    let validation = vec![
        ("trot", make(Gait::Trot, [0.3, -0.2], 21)),
        ("jump", make(Gait::Jump, [0.0, 0.0], 22)),
        ("bound", make(Gait::Bound, [0.6, 0.3], 23)),
    ];

    let data = DataMatrices::assemble(&train, Channel::Truth).unwrap();
    let model = fit(&data, &FitOptions::default()).unwrap();
    println!(
        "model: {} columns, residual {:.3e}, rank {}",
        model.meta.sample_count, model.meta.residual, model.meta.retained_rank
    );
    let spec = centroidal_koopman::dmdc::spectrum(&model).unwrap();
    println!("spectral radius {:.6}", spec.spectral_radius);

    // measurement noise is known exactly: P_v and R from sigma_state
    let noise = NoiseConfig::default();
    let pv = group_diag(
        noise.sigma_state[0].powi(-2),
        noise.sigma_state[1].powi(-2),
        noise.sigma_state[2].powi(-2),
    );
    let r = group_diag(
        noise.sigma_state[0].powi(2),
        noise.sigma_state[1].powi(2),
        noise.sigma_state[2].powi(2),
    );

    println!("\n=== EKF grid (process noise) ===");
    let mut best_ekf: Option<(f64, f64, f64, f64)> = None;
    for qc_exp in [-12.0_f64, -10.0, -8.0] {
        for ql_exp in [-5.0_f64, -4.0, -3.0, -2.0] {
            for qk_exp in [-6.0_f64, -5.0, -4.0, -3.0] {
                let setup = EkfSetup {
                    params: RobotParams::default(),
                    process_noise: group_diag(
                        10f64.powf(qc_exp),
                        10f64.powf(ql_exp),
                        10f64.powf(qk_exp),
                    ),
                    measurement_noise: r.clone(),
                    initial_covariance: r.clone(),
                };
                let mut score = 0.0;
                for (_, traj) in &validation[..2] {
                    let run = run_estimator(&EstimatorSetup::Ekf(&setup), traj).unwrap();
                    // momentum-focused score, normalized per group
                    score += (run.rmse[3] + run.rmse[4] + run.rmse[5]) / 3.0
                        + (run.rmse[6] + run.rmse[7] + run.rmse[8]) / 3.0;
                }
                if best_ekf.map_or(true, |(s, ..)| score < s) {
                    best_ekf = Some((score, qc_exp, ql_exp, qk_exp));
                    println!("  q=(1e{qc_exp},1e{ql_exp},1e{qk_exp}) score {score:.4}");
                }
            }
        }
    }
    let (_, qc, ql, qk) = best_ekf.unwrap();
    println!("best EKF Q exponents: c={qc} l={ql} k={qk}");
    let ekf = EkfSetup {
        params: RobotParams::default(),
        process_noise: group_diag(10f64.powf(qc), 10f64.powf(ql), 10f64.powf(qk)),
        measurement_noise: r.clone(),
        initial_covariance: r.clone(),
    };

    println!("\n=== MHE grid (process weight + arrival scale) ===");
    let mut best_mhe: Option<(f64, f64, f64, f64, f64)> = None;
    for wc_exp in [6.0_f64, 8.0, 10.0] {
        for wl_exp in [2.0_f64, 3.0, 4.0, 5.0] {
            for wk_exp in [3.0_f64, 4.0, 5.0, 6.0] {
                for px_scale in [0.1_f64, 1.0, 10.0] {
                    let config = MheConfig {
                        horizon: 50,
                        arrival_weight: pv.scale(px_scale),
                        process_weight: group_diag(
                            10f64.powf(wc_exp),
                            10f64.powf(wl_exp),
                            10f64.powf(wk_exp),
                        ),
                        measurement_weight: pv.clone(),
                        bounds: None,
                    };
                    let mut score = 0.0;
                    for (_, traj) in &validation[..2] {
                        let run = run_estimator(
                            &EstimatorSetup::Mhe {
                                model: &model,
                                config: &config,
                            },
                            traj,
                        )
                        .unwrap();
                        score += (run.rmse[3] + run.rmse[4] + run.rmse[5]) / 3.0
                            + (run.rmse[6] + run.rmse[7] + run.rmse[8]) / 3.0;
                    }
                    if best_mhe.map_or(true, |(s, ..)| score < s) {
                        best_mhe = Some((score, wc_exp, wl_exp, wk_exp, px_scale));
                        println!(
                            "  w=(1e{wc_exp},1e{wl_exp},1e{wk_exp}) px={px_scale} score {score:.4}"
                        );
                    }
                }
            }
        }
    }
    let (_, wc, wl, wk, px) = best_mhe.unwrap();
    println!("best MHE exponents: c={wc} l={wl} k={wk} px_scale={px}");
    let mhe = MheConfig {
        horizon: 50,
        arrival_weight: pv.scale(px),
        process_weight: group_diag(10f64.powf(wc), 10f64.powf(wl), 10f64.powf(wk)),
        measurement_weight: pv.clone(),
        bounds: None,
    };

    println!("\n=== final comparison on held-out data ===");
    compare(&model, &mhe, &ekf, &validation);
}

fn compare(
    model: &KoopmanModel,
    mhe: &MheConfig,
    ekf: &EkfSetup,
    validation: &[(&str, Trajectory)],
) {
    for (name, traj) in validation {
        let mhe_run = run_estimator(
            &EstimatorSetup::Mhe {
                model,
                config: mhe,
            },
            traj,
        )
        .unwrap();
        let ekf_run = run_estimator(&EstimatorSetup::Ekf(ekf), traj).unwrap();
        println!("{name}:");
        println!("  EKF {}", fmt_rmse(&ekf_run.rmse));
        println!("  MHE {}", fmt_rmse(&mhe_run.rmse));
        let l_ratio: Vec<String> = (3..6)
            .map(|i| format!("{:.2}", mhe_run.rmse[i] / ekf_run.rmse[i]))
            .collect();
        let k_ratio: Vec<String> = (6..9)
            .map(|i| format!("{:.2}", mhe_run.rmse[i] / ekf_run.rmse[i]))
            .collect();
        println!("  ratio l {:?} k {:?}", l_ratio, k_ratio);
    }
}
