//! Full-information equivalence: with matched weights and a window covering
//! all data, the MHE terminal estimate must reproduce the Kalman filter's
//! filtered estimate on linear-Gaussian systems.

use centroidal_koopman::dmdc::{KoopmanModel, TrainingMeta, INPUT_DIM, STATE_DIM};
use centroidal_koopman::estimators::{kalman_oracle, MheConfig, MheEstimator};
use centroidal_koopman::numerics::{eigenvalues, solve_spd, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn inverse_spd(m: &Matrix) -> Matrix {
    solve_spd(m, &Matrix::identity(m.rows())).unwrap()
}

fn random_spd_diagonalish(n: usize, low: f64, high: f64, rng: &mut ChaCha12Rng) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = rng.gen_range(low..high);
    }
    // small symmetric off-diagonal coupling, kept diagonally dominant
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(-0.05..0.05) * low;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn stable_system(seed: u64) -> (KoopmanModel, ChaCha12Rng) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..STATE_DIM * STATE_DIM)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let raw = Matrix::new(STATE_DIM, STATE_DIM, data).unwrap();
    let rho = eigenvalues(&raw).unwrap().spectral_radius();
    let a = raw.scale(0.9 / rho);
    let b_data: Vec<f64> = (0..STATE_DIM * INPUT_DIM)
        .map(|_| rng.gen_range(-0.5..0.5))
        .collect();
    let b = Matrix::new(STATE_DIM, INPUT_DIM, b_data).unwrap();
    (
        KoopmanModel {
            a,
            b,
            dt: 1e-3,
            sv_threshold: 1e-8,
            meta: TrainingMeta::default(),
        },
        rng,
    )
}

#[test]
fn full_information_mhe_matches_kalman_filter() {
    for seed in [3u64, 17, 99] {
        let (model, mut rng) = stable_system(seed);
        let steps = 150usize;

        let q = random_spd_diagonalish(STATE_DIM, 0.01, 0.1, &mut rng);
        let r = random_spd_diagonalish(STATE_DIM, 0.1, 1.0, &mut rng);
        let p0 = random_spd_diagonalish(STATE_DIM, 0.5, 2.0, &mut rng);
        let mut x_bar0 = [0.0; STATE_DIM];
        for v in x_bar0.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }

        // arbitrary measurement/input records: the equivalence is algebraic
        // and does not require the data to follow the model
        let mut ys = Vec::with_capacity(steps);
        let mut us = Vec::with_capacity(steps);
        for _ in 0..steps {
            let y: Vec<f64> = (0..STATE_DIM).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let u: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ys.push(y);
            us.push(u);
        }

        let config = MheConfig {
            horizon: steps,
            arrival_weight: inverse_spd(&p0),
            process_weight: inverse_spd(&q),
            measurement_weight: inverse_spd(&r),
            bounds: None,
        };
        let mut estimator = MheEstimator::new(model.clone(), config).unwrap();
        estimator.set_prior(x_bar0);

        let mut terminal = [0.0; STATE_DIM];
        for k in 0..steps {
            let mut y9 = [0.0; STATE_DIM];
            y9.copy_from_slice(&ys[k]);
            let mut u24 = [0.0; INPUT_DIM];
            u24.copy_from_slice(&us[k]);
            terminal = estimator.step(&y9, &u24).unwrap();
        }

        let filtered = kalman_oracle(
            &model.a,
            &model.b,
            &Matrix::identity(STATE_DIM),
            &q,
            &r,
            &p0,
            &x_bar0,
            &ys,
            &us[..steps - 1],
        )
        .unwrap();
        let reference = &filtered[steps - 1];
        for i in 0..STATE_DIM {
            assert!(
                (terminal[i] - reference[i]).abs() <= 1e-6,
                "seed {seed} channel {i}: MHE {} vs KF {}",
                terminal[i],
                reference[i]
            );
        }
    }
}

#[test]
fn scalar_replicated_system_matches_kalman_filter() {
    // x_{k+1} = 0.9 x_k + 0.1 u_k per channel, diagonal covariances
    let mut a = Matrix::zeros(STATE_DIM, STATE_DIM);
    let mut b = Matrix::zeros(STATE_DIM, INPUT_DIM);
    for i in 0..STATE_DIM {
        a[(i, i)] = 0.9;
        b[(i, i)] = 0.1;
    }
    let model = KoopmanModel {
        a: a.clone(),
        b: b.clone(),
        dt: 1e-3,
        sv_threshold: 1e-8,
        meta: TrainingMeta::default(),
    };
    let q = Matrix::identity(STATE_DIM).scale(0.04);
    let r = Matrix::identity(STATE_DIM).scale(0.25);
    let p0 = Matrix::identity(STATE_DIM).scale(1.0);

    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let steps = 60usize;
    let mut truth = [0.0; STATE_DIM];
    let mut ys = Vec::new();
    let mut us = Vec::new();
    for _ in 0..steps {
        let mut u = vec![0.0; INPUT_DIM];
        for item in u.iter_mut().take(STATE_DIM) {
            *item = rng.gen_range(-1.0..1.0);
        }
        let y: Vec<f64> = (0..STATE_DIM)
            .map(|i| truth[i] + rng.gen_range(-0.5..0.5))
            .collect();
        ys.push(y);
        us.push(u.clone());
        for (i, t) in truth.iter_mut().enumerate() {
            *t = 0.9 * *t + 0.1 * u[i] + rng.gen_range(-0.2..0.2);
        }
    }

    let config = MheConfig {
        horizon: steps,
        arrival_weight: inverse_spd(&p0),
        process_weight: inverse_spd(&q),
        measurement_weight: inverse_spd(&r),
        bounds: None,
    };
    let mut estimator = MheEstimator::new(model, config).unwrap();
    estimator.set_prior([0.0; STATE_DIM]);
    let mut terminal = [0.0; STATE_DIM];
    for k in 0..steps {
        let mut y9 = [0.0; STATE_DIM];
        y9.copy_from_slice(&ys[k]);
        let mut u24 = [0.0; INPUT_DIM];
        u24.copy_from_slice(&us[k]);
        terminal = estimator.step(&y9, &u24).unwrap();
    }
    let filtered = kalman_oracle(
        &a,
        &b,
        &Matrix::identity(STATE_DIM),
        &q,
        &r,
        &p0,
        &[0.0; STATE_DIM],
        &ys,
        &us[..steps - 1],
    )
    .unwrap();
    for i in 0..STATE_DIM {
        assert!((terminal[i] - filtered[steps - 1][i]).abs() <= 1e-6);
    }
}

#[test]
fn sliding_window_stays_close_to_the_filter_on_stable_systems() {
    // once the window slides the arrival cost is only an approximation, but
    // on a stable system the terminal estimates should stay near the filter
    let (model, mut rng) = stable_system(41);
    let steps = 400usize;
    let q = Matrix::identity(STATE_DIM).scale(0.02);
    let r = Matrix::identity(STATE_DIM).scale(0.5);
    let p0 = Matrix::identity(STATE_DIM);

    let mut ys = Vec::new();
    let mut us = Vec::new();
    let mut x = vec![0.0; STATE_DIM];
    for _ in 0..steps {
        let u: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.gen_range(-0.7..0.7)).collect();
        ys.push(y);
        us.push(u.clone());
        let ax = model.a.matvec(&x);
        let bu = model.b.matvec(&u);
        x = (0..STATE_DIM)
            .map(|i| ax[i] + bu[i] + rng.gen_range(-0.1..0.1))
            .collect();
    }

    let config = MheConfig {
        horizon: 50,
        arrival_weight: inverse_spd(&p0),
        process_weight: inverse_spd(&q),
        measurement_weight: inverse_spd(&r),
        bounds: None,
    };
    let mut estimator = MheEstimator::new(model.clone(), config).unwrap();
    let filtered = kalman_oracle(
        &model.a,
        &model.b,
        &Matrix::identity(STATE_DIM),
        &q,
        &r,
        &p0,
        &{
            let mut y0 = vec![0.0; STATE_DIM];
            y0.copy_from_slice(&ys[0]);
            y0
        },
        &ys,
        &us[..steps - 1],
    )
    .unwrap();

    let mut worst = 0.0_f64;
    for k in 0..steps {
        let mut y9 = [0.0; STATE_DIM];
        y9.copy_from_slice(&ys[k]);
        let mut u24 = [0.0; INPUT_DIM];
        u24.copy_from_slice(&us[k]);
        let estimate = estimator.step(&y9, &u24).unwrap();
        if k > 100 {
            for i in 0..STATE_DIM {
                worst = worst.max((estimate[i] - filtered[k][i]).abs());
            }
        }
    }
    assert!(
        worst < 0.2,
        "sliding-window MHE drifted {worst:.3} from the filter"
    );
    assert!(estimator.max_kkt_relative() <= 1e-8);
}
