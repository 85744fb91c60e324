//! Moving horizon estimation on the fitted linear model, solved as a convex
//! QP over the window states.
//!
//! Decision variables are the window states `x_0..x_M`; the cost is
//! `1/2 ||x_0 - prior||^2_{P_x}` plus, per step, weighted process residuals
//! `w_k = x_{k+1} - A x_k - B u_k` and measurement residuals
//! `v_k = y_k - x_k` (the measurement map is the identity). With constant
//! weights the Hessian depends only on the window length, so its
//! factorization is computed once per length and reused; only the gradient
//! changes per step.

use super::qp::{solve_qp, BlockCholesky, BlockTridiag, QpSolution, KKT_REL_TOL};
use super::EstimatorError;
use crate::dmdc::{KoopmanModel, INPUT_DIM, STATE_DIM};
use crate::numerics::{Cholesky, Matrix};
use std::collections::VecDeque;

/// Per-channel box bounds on the estimated state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBounds {
    pub lower: [f64; STATE_DIM],
    pub upper: [f64; STATE_DIM],
}

/// Horizon length and the three SPD weight matrices of the cost.
#[derive(Clone, Debug)]
pub struct MheConfig {
    pub horizon: usize,
    /// Arrival-cost weight `P_x`.
    pub arrival_weight: Matrix,
    /// Process-residual weight `P_w`.
    pub process_weight: Matrix,
    /// Measurement-residual weight `P_v`.
    pub measurement_weight: Matrix,
    pub bounds: Option<StateBounds>,
}

impl MheConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.horizon < 1 {
            return Err(EstimatorError::InvalidConfig(
                "MHE horizon must be at least 1".into(),
            ));
        }
        for (name, w) in [
            ("arrival", &self.arrival_weight),
            ("process", &self.process_weight),
            ("measurement", &self.measurement_weight),
        ] {
            if w.rows() != STATE_DIM || w.cols() != STATE_DIM {
                return Err(EstimatorError::InvalidConfig(format!(
                    "{name} weight must be {STATE_DIM}x{STATE_DIM}"
                )));
            }
            Cholesky::factor(w).map_err(|e| {
                EstimatorError::InvalidConfig(format!("{name} weight is not SPD: {e}"))
            })?;
        }
        if let Some(b) = &self.bounds {
            for i in 0..STATE_DIM {
                if b.lower[i] > b.upper[i] {
                    return Err(EstimatorError::InvalidConfig(format!(
                        "state bound {i} has lower {} > upper {}",
                        b.lower[i], b.upper[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One buffered measurement/input pair with its precomputed weight products.
#[derive(Clone, Debug)]
struct WindowEntry {
    y: [f64; STATE_DIM],
    pv_y: [f64; STATE_DIM],
    pw_bu: [f64; STATE_DIM],
    at_pw_bu: [f64; STATE_DIM],
}

/// Assemble the QP `(H, g)` of the window cost around the given prior.
///
/// `measurements` are `(y_k, u_k)` pairs, oldest first; the input of the
/// newest pair does not enter the cost (it links to a state beyond the
/// window).
pub fn build_qp(
    model: &KoopmanModel,
    config: &MheConfig,
    prior: &[f64; STATE_DIM],
    measurements: &[([f64; STATE_DIM], [f64; INPUT_DIM])],
) -> (BlockTridiag, Vec<f64>) {
    assert!(!measurements.is_empty(), "window must hold at least one pair");
    let length = measurements.len();
    let px = &config.arrival_weight;
    let pw = &config.process_weight;
    let pv = &config.measurement_weight;
    let a = &model.a;
    let pwa = pw * a;
    let at_pwa = &a.transpose() * &pwa;

    let mut diag = Vec::with_capacity(length);
    let mut sub = Vec::with_capacity(length.saturating_sub(1));
    for k in 0..length {
        let mut d = pv.clone();
        if k == 0 {
            d = &d + px;
        } else {
            d = &d + pw;
        }
        if k + 1 < length {
            d = &d + &at_pwa;
        }
        diag.push(d);
        if k + 1 < length {
            sub.push(pwa.scale(-1.0));
        }
    }

    let mut g = vec![0.0; STATE_DIM * length];
    let bu: Vec<Vec<f64>> = measurements
        .iter()
        .map(|(_, u)| model.b.matvec(u))
        .collect();
    for (k, (y, _)) in measurements.iter().enumerate() {
        let gk = &mut g[k * STATE_DIM..(k + 1) * STATE_DIM];
        let pv_y = pv.matvec(y);
        for i in 0..STATE_DIM {
            gk[i] -= pv_y[i];
        }
        if k == 0 {
            let px_prior = px.matvec(prior);
            for i in 0..STATE_DIM {
                gk[i] -= px_prior[i];
            }
        } else {
            let pw_bu = pw.matvec(&bu[k - 1]);
            for i in 0..STATE_DIM {
                gk[i] -= pw_bu[i];
            }
        }
        if k + 1 < length {
            let at_pw_bu = a.transpose().matvec(&pw.matvec(&bu[k]));
            for i in 0..STATE_DIM {
                gk[i] += at_pw_bu[i];
            }
        }
    }

    (BlockTridiag::new(diag, sub), g)
}

/// Sliding-window estimator state: ring buffer, prior, and per-length
/// Hessian factorizations.
pub struct MheEstimator {
    model: KoopmanModel,
    config: MheConfig,
    window: VecDeque<WindowEntry>,
    prior: [f64; STATE_DIM],
    prior_set: bool,
    // constant weight products
    at_pwa: Matrix,
    neg_pwa: Matrix,
    pw_b: Matrix,
    at_pw_b: Matrix,
    // per-window-length Hessian and factorization; constant across steps
    cache: Vec<Option<(BlockTridiag, BlockCholesky)>>,
    last_kkt: f64,
    max_kkt: f64,
    max_kkt_relative: f64,
}

impl MheEstimator {
    pub fn new(model: KoopmanModel, config: MheConfig) -> Result<Self, EstimatorError> {
        config.validate()?;
        let pwa = &config.process_weight * &model.a;
        let at_pwa = &model.a.transpose() * &pwa;
        let pw_b = &config.process_weight * &model.b;
        let at_pw_b = &model.a.transpose() * &pw_b;
        let horizon = config.horizon;
        Ok(Self {
            model,
            config,
            window: VecDeque::with_capacity(horizon),
            prior: [0.0; STATE_DIM],
            prior_set: false,
            at_pwa,
            neg_pwa: pwa.scale(-1.0),
            pw_b,
            at_pw_b,
            cache: vec![None; horizon + 1],
            last_kkt: 0.0,
            max_kkt: 0.0,
            max_kkt_relative: 0.0,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn prior(&self) -> [f64; STATE_DIM] {
        self.prior
    }

    /// Override the arrival-cost prior; by default the first measurement
    /// seeds it.
    pub fn set_prior(&mut self, prior: [f64; STATE_DIM]) {
        self.prior = prior;
        self.prior_set = true;
    }

    pub fn last_kkt_residual(&self) -> f64 {
        self.last_kkt
    }

    pub fn max_kkt_residual(&self) -> f64 {
        self.max_kkt
    }

    /// Largest relative KKT residual seen so far,
    /// `||H z + g||_inf / (1 + ||g||_inf)`.
    pub fn max_kkt_relative(&self) -> f64 {
        self.max_kkt_relative
    }

    fn hessian(&self, length: usize) -> BlockTridiag {
        let px = &self.config.arrival_weight;
        let pw = &self.config.process_weight;
        let pv = &self.config.measurement_weight;
        let mut diag = Vec::with_capacity(length);
        let mut sub = Vec::with_capacity(length.saturating_sub(1));
        for k in 0..length {
            let mut d = pv.clone();
            if k == 0 {
                d = &d + px;
            } else {
                d = &d + pw;
            }
            if k + 1 < length {
                d = &d + &self.at_pwa;
            }
            diag.push(d);
            if k + 1 < length {
                sub.push(self.neg_pwa.clone());
            }
        }
        BlockTridiag::new(diag, sub)
    }

    fn gradient(&self) -> Vec<f64> {
        let length = self.window.len();
        let mut g = vec![0.0; STATE_DIM * length];
        for (k, entry) in self.window.iter().enumerate() {
            let gk = &mut g[k * STATE_DIM..(k + 1) * STATE_DIM];
            for i in 0..STATE_DIM {
                gk[i] -= entry.pv_y[i];
            }
            if k + 1 < length {
                for i in 0..STATE_DIM {
                    gk[i] += entry.at_pw_bu[i];
                }
            }
        }
        let px_prior = self.config.arrival_weight.matvec(&self.prior);
        for i in 0..STATE_DIM {
            g[i] -= px_prior[i];
        }
        for (k, entry) in self.window.iter().enumerate().take(length - 1) {
            let gk = &mut g[(k + 1) * STATE_DIM..(k + 2) * STATE_DIM];
            for i in 0..STATE_DIM {
                gk[i] -= entry.pw_bu[i];
            }
        }
        g
    }

    /// Ingest one measurement/input pair and return the estimate of the
    /// newest state.
    pub fn step(
        &mut self,
        y: &[f64; STATE_DIM],
        u: &[f64; INPUT_DIM],
    ) -> Result<[f64; STATE_DIM], EstimatorError> {
        if !self.prior_set {
            self.prior = *y;
            self.prior_set = true;
        }
        self.window.push_back(WindowEntry {
            y: *y,
            pv_y: self
                .config
                .measurement_weight
                .matvec(y)
                .try_into()
                .expect("9-vector"),
            pw_bu: self.pw_b.matvec(u).try_into().expect("9-vector"),
            at_pw_bu: self.at_pw_b.matvec(u).try_into().expect("9-vector"),
        });

        let length = self.window.len();
        let g = self.gradient();

        let solution: QpSolution = if let Some(bounds) = &self.config.bounds {
            let h = self.hessian(length);
            let lower: Vec<f64> = (0..length).flat_map(|_| bounds.lower).collect();
            let upper: Vec<f64> = (0..length).flat_map(|_| bounds.upper).collect();
            solve_qp(&h, &g, Some((&lower, &upper)))?
        } else {
            if self.cache[length].is_none() {
                let h = self.hessian(length);
                let factor = BlockCholesky::factor(&h)?;
                self.cache[length] = Some((h, factor));
            }
            let (h, factor) = self.cache[length].as_ref().expect("cached");
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let z = factor.solve(&neg_g);
            let mut grad = h.matvec(&z);
            for (gi, gv) in grad.iter_mut().zip(g.iter()) {
                *gi += gv;
            }
            QpSolution {
                kkt_residual: grad.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                z,
                iterations: 0,
            }
        };

        let g_norm = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let bound = KKT_REL_TOL * (1.0 + g_norm);
        self.last_kkt = solution.kkt_residual;
        self.max_kkt = self.max_kkt.max(solution.kkt_residual);
        self.max_kkt_relative = self
            .max_kkt_relative
            .max(solution.kkt_residual / (1.0 + g_norm));
        if solution.kkt_residual > bound {
            return Err(EstimatorError::KktResidual {
                residual: solution.kkt_residual,
                bound,
            });
        }

        let mut estimate = [0.0; STATE_DIM];
        estimate.copy_from_slice(&solution.z[(length - 1) * STATE_DIM..]);

        if length == self.config.horizon && self.config.horizon > 1 {
            // slide: the optimized second state becomes the next prior
            self.prior
                .copy_from_slice(&solution.z[STATE_DIM..2 * STATE_DIM]);
            self.window.pop_front();
        } else if length == self.config.horizon && self.config.horizon == 1 {
            // degenerate single-state window: carry the estimate forward
            self.prior = estimate;
            self.window.pop_front();
        }

        Ok(estimate)
    }

    /// Measurements currently buffered, oldest first (with their inputs
    /// dropped); exposed for diagnostics.
    pub fn window_measurements(&self) -> Vec<[f64; STATE_DIM]> {
        self.window.iter().map(|e| e.y).collect()
    }
}
