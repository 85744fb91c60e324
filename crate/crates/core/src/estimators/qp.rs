//! Convex QP solves for the moving horizon estimator: an exact
//! block-tridiagonal Cholesky path for the unbounded case and a primal
//! active-set iteration when box bounds are configured.

use super::EstimatorError;
use crate::numerics::{Cholesky, Matrix};

/// KKT acceptance: `||H z + g||_inf <= KKT_REL_TOL * (1 + ||g||_inf)` for
/// unbounded solves, projected-gradient norm for bounded ones.
pub const KKT_REL_TOL: f64 = 1e-8;

const ACTIVE_SET_MAX_ITERS_PER_VAR: usize = 20;

/// Symmetric block-tridiagonal matrix with square blocks: `diag[k]` on the
/// block diagonal and `sub[k]` at block position `(k+1, k)`.
#[derive(Clone, Debug)]
pub struct BlockTridiag {
    block_dim: usize,
    diag: Vec<Matrix>,
    sub: Vec<Matrix>,
}

impl BlockTridiag {
    pub fn new(diag: Vec<Matrix>, sub: Vec<Matrix>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(sub.len() + 1, diag.len());
        let block_dim = diag[0].rows();
        for d in &diag {
            assert_eq!((d.rows(), d.cols()), (block_dim, block_dim));
        }
        for s in &sub {
            assert_eq!((s.rows(), s.cols()), (block_dim, block_dim));
        }
        Self {
            block_dim,
            diag,
            sub,
        }
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn num_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        self.block_dim * self.diag.len()
    }

    pub fn diag_block(&self, k: usize) -> &Matrix {
        &self.diag[k]
    }

    pub fn sub_block(&self, k: usize) -> &Matrix {
        &self.sub[k]
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let b = self.block_dim;
        let mut out = Matrix::zeros(n, n);
        for (k, d) in self.diag.iter().enumerate() {
            for i in 0..b {
                for j in 0..b {
                    out[(k * b + i, k * b + j)] = d[(i, j)];
                }
            }
        }
        for (k, s) in self.sub.iter().enumerate() {
            for i in 0..b {
                for j in 0..b {
                    out[((k + 1) * b + i, k * b + j)] = s[(i, j)];
                    out[(k * b + j, (k + 1) * b + i)] = s[(i, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        let b = self.block_dim;
        let mut out = vec![0.0; v.len()];
        for (k, d) in self.diag.iter().enumerate() {
            for i in 0..b {
                let mut acc = 0.0;
                for j in 0..b {
                    acc += d[(i, j)] * v[k * b + j];
                }
                out[k * b + i] += acc;
            }
        }
        for (k, s) in self.sub.iter().enumerate() {
            for i in 0..b {
                let mut lower = 0.0;
                for j in 0..b {
                    lower += s[(i, j)] * v[k * b + j];
                }
                out[(k + 1) * b + i] += lower;
            }
            for j in 0..b {
                let mut upper = 0.0;
                for i in 0..b {
                    upper += s[(i, j)] * v[(k + 1) * b + i];
                }
                out[k * b + j] += upper;
            }
        }
        out
    }
}

// x <- L^-1 x for lower-triangular L
fn forward_sub(l: &Matrix, x: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l[(i, k)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
}

// x <- L^-T x for lower-triangular L
fn backward_sub_transpose(l: &Matrix, x: &mut [f64]) {
    let n = l.rows();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            x[i] -= l[(k, i)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
}

/// Cholesky factorization of a block-tridiagonal SPD matrix into a lower
/// block-bidiagonal factor.
#[derive(Clone, Debug)]
pub struct BlockCholesky {
    block_dim: usize,
    diag: Vec<Matrix>,
    sub: Vec<Matrix>,
}

impl BlockCholesky {
    pub fn factor(h: &BlockTridiag) -> Result<Self, EstimatorError> {
        let b = h.block_dim;
        let n = h.num_blocks();
        let mut diag = Vec::with_capacity(n);
        let mut sub = Vec::with_capacity(n.saturating_sub(1));
        let mut schur = h.diag[0].clone();
        for k in 0..n {
            // exact symmetrization keeps the SPD check honest
            let mut sym = schur.clone();
            for i in 0..b {
                for j in 0..b {
                    sym[(i, j)] = 0.5 * (schur[(i, j)] + schur[(j, i)]);
                }
            }
            let lkk = Cholesky::factor(&sym)
                .map_err(EstimatorError::Numerics)?
                .factor_matrix()
                .clone();
            if k + 1 < n {
                // L_{k+1,k} = E_k L_kk^-T, one column of E_k^T at a time
                let e = &h.sub[k];
                let mut l_sub = Matrix::zeros(b, b);
                for row in 0..b {
                    let mut x: Vec<f64> = (0..b).map(|c| e[(row, c)]).collect();
                    forward_sub(&lkk, &mut x);
                    for c in 0..b {
                        l_sub[(row, c)] = x[c];
                    }
                }
                // Schur complement for the next block
                let mut next = h.diag[k + 1].clone();
                for i in 0..b {
                    for j in 0..b {
                        let mut acc = 0.0;
                        for c in 0..b {
                            acc += l_sub[(i, c)] * l_sub[(j, c)];
                        }
                        next[(i, j)] -= acc;
                    }
                }
                sub.push(l_sub);
                schur = next;
            }
            diag.push(lkk);
        }
        Ok(Self {
            block_dim: b,
            diag,
            sub,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = self.block_dim;
        let n = self.diag.len();
        assert_eq!(rhs.len(), b * n);
        let mut x = rhs.to_vec();
        // forward: L y = rhs
        for k in 0..n {
            if k > 0 {
                let s = &self.sub[k - 1];
                for i in 0..b {
                    let mut acc = 0.0;
                    for j in 0..b {
                        acc += s[(i, j)] * x[(k - 1) * b + j];
                    }
                    x[k * b + i] -= acc;
                }
            }
            forward_sub(&self.diag[k], &mut x[k * b..(k + 1) * b]);
        }
        // backward: L^T z = y
        for k in (0..n).rev() {
            if k + 1 < n {
                let s = &self.sub[k];
                for j in 0..b {
                    let mut acc = 0.0;
                    for i in 0..b {
                        acc += s[(i, j)] * x[(k + 1) * b + i];
                    }
                    x[k * b + j] -= acc;
                }
            }
            backward_sub_transpose(&self.diag[k], &mut x[k * b..(k + 1) * b]);
        }
        x
    }
}

/// Solver outcome with its KKT diagnostics.
#[derive(Clone, Debug)]
pub struct QpSolution {
    pub z: Vec<f64>,
    /// `||H z + g||_inf` when unbounded; projected-gradient infinity norm
    /// when bounds are active.
    pub kkt_residual: f64,
    pub iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Minimize `1/2 z^T H z + g^T z`, optionally subject to `lower <= z <= upper`.
///
/// The unbounded case solves exactly through the block-tridiagonal Cholesky;
/// bounds engage a primal active-set iteration whose iterates satisfy the
/// bounds exactly.
pub fn solve_qp(
    h: &BlockTridiag,
    g: &[f64],
    bounds: Option<(&[f64], &[f64])>,
) -> Result<QpSolution, EstimatorError> {
    assert_eq!(g.len(), h.dim());
    match bounds {
        None => {
            let factor = BlockCholesky::factor(h)?;
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let z = factor.solve(&neg_g);
            let mut grad = h.matvec(&z);
            for (gi, gv) in grad.iter_mut().zip(g.iter()) {
                *gi += gv;
            }
            Ok(QpSolution {
                z,
                kkt_residual: inf_norm(&grad),
                iterations: 0,
            })
        }
        Some((lower, upper)) => solve_box_qp(h, g, lower, upper),
    }
}

fn solve_box_qp(
    h: &BlockTridiag,
    g: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<QpSolution, EstimatorError> {
    let n = h.dim();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    for i in 0..n {
        if lower[i] > upper[i] {
            return Err(EstimatorError::InvalidConfig(format!(
                "bound {i} has lower {} > upper {}",
                lower[i], upper[i]
            )));
        }
    }
    let dense = h.to_dense();

    // feasible start: the clamped unconstrained minimizer
    let factor = BlockCholesky::factor(h)?;
    let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut z = factor.solve(&neg_g);
    for i in 0..n {
        z[i] = z[i].clamp(lower[i], upper[i]);
    }

    let tol = KKT_REL_TOL * (1.0 + inf_norm(g));
    let max_iters = ACTIVE_SET_MAX_ITERS_PER_VAR * n;

    #[derive(Clone, Copy, PartialEq)]
    enum BoundState {
        Free,
        AtLower,
        AtUpper,
    }
    let mut state: Vec<BoundState> = (0..n)
        .map(|i| {
            if z[i] == lower[i] && z[i] != upper[i] {
                BoundState::AtLower
            } else if z[i] == upper[i] && z[i] != lower[i] {
                BoundState::AtUpper
            } else if z[i] == lower[i] && z[i] == upper[i] {
                BoundState::AtLower
            } else {
                BoundState::Free
            }
        })
        .collect();

    let mut last_residual = f64::INFINITY;
    for iteration in 1..=max_iters {
        let mut grad = dense.matvec(&z);
        for i in 0..n {
            grad[i] += g[i];
        }

        let free: Vec<usize> = (0..n)
            .filter(|&i| state[i] == BoundState::Free)
            .collect();

        // reduced Newton step on the free variables
        let mut step = vec![0.0; n];
        if !free.is_empty() {
            let m = free.len();
            let mut reduced = Matrix::zeros(m, m);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    reduced[(a, b)] = dense[(i, j)];
                }
            }
            let rhs: Vec<f64> = free.iter().map(|&i| -grad[i]).collect();
            let chol = Cholesky::factor(&reduced).map_err(EstimatorError::Numerics)?;
            let d = chol.solve_vec(&rhs);
            for (a, &i) in free.iter().enumerate() {
                step[i] = d[a];
            }
        }

        let step_size = inf_norm(&step);
        if step_size <= 1e-13 * (1.0 + inf_norm(&z)) {
            // stationary on the free set: check multiplier signs
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..n {
                let violation = match state[i] {
                    BoundState::Free => 0.0,
                    BoundState::AtLower => (-grad[i]).max(0.0),
                    BoundState::AtUpper => grad[i].max(0.0),
                };
                if violation > tol && worst.map_or(true, |(_, w)| violation > w) {
                    worst = Some((i, violation));
                }
            }
            match worst {
                None => {
                    let pg = projected_gradient_norm(&grad, &z, lower, upper);
                    return Ok(QpSolution {
                        z,
                        kkt_residual: pg,
                        iterations: iteration,
                    });
                }
                Some((i, _)) => {
                    state[i] = BoundState::Free;
                    continue;
                }
            }
        }

        // longest feasible step along the reduced Newton direction
        let mut alpha = 1.0_f64;
        let mut blocking: Option<(usize, BoundState)> = None;
        for &i in &free {
            if step[i] > 0.0 {
                let room = (upper[i] - z[i]) / step[i];
                if room < alpha {
                    alpha = room;
                    blocking = Some((i, BoundState::AtUpper));
                }
            } else if step[i] < 0.0 {
                let room = (lower[i] - z[i]) / step[i];
                if room < alpha {
                    alpha = room;
                    blocking = Some((i, BoundState::AtLower));
                }
            }
        }
        for &i in &free {
            z[i] += alpha * step[i];
            z[i] = z[i].clamp(lower[i], upper[i]);
        }
        if let Some((i, bound_state)) = blocking {
            // land exactly on the bound
            z[i] = match bound_state {
                BoundState::AtLower => lower[i],
                BoundState::AtUpper => upper[i],
                BoundState::Free => unreachable!(),
            };
            state[i] = bound_state;
        }

        let grad_now = {
            let mut gr = dense.matvec(&z);
            for i in 0..n {
                gr[i] += g[i];
            }
            gr
        };
        last_residual = projected_gradient_norm(&grad_now, &z, lower, upper);
    }
    Err(EstimatorError::QpIterationCap {
        iterations: max_iters,
        residual: last_residual,
    })
}

// Infinity norm of the gradient projected onto the feasible directions.
fn projected_gradient_norm(grad: &[f64], z: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let mut norm = 0.0_f64;
    for i in 0..grad.len() {
        let at_lower = z[i] <= lower[i];
        let at_upper = z[i] >= upper[i];
        let component = match (at_lower, at_upper) {
            (true, true) => 0.0,
            (true, false) => grad[i].min(0.0),
            (false, true) => grad[i].max(0.0),
            (false, false) => grad[i],
        };
        norm = norm.max(component.abs());
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn seeded_spd_block(dim: usize, shift: f64, rng: &mut ChaCha12Rng) -> Matrix {
        let data: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = Matrix::new(dim, dim, data).unwrap();
        let mut spd = &m.transpose() * &m;
        for i in 0..dim {
            spd[(i, i)] += shift;
        }
        spd
    }

    fn seeded_block_tridiag(blocks: usize, dim: usize, seed: u64) -> BlockTridiag {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        // diagonal dominance across block rows keeps the stack SPD
        let diag: Vec<Matrix> = (0..blocks)
            .map(|_| seeded_spd_block(dim, 4.0 * dim as f64, &mut rng))
            .collect();
        let sub: Vec<Matrix> = (0..blocks - 1)
            .map(|_| {
                let data: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                Matrix::new(dim, dim, data).unwrap()
            })
            .collect();
        BlockTridiag::new(diag, sub)
    }

    #[test]
    fn identity_system_returns_rhs() {
        let h = BlockTridiag::new(vec![Matrix::identity(3)], vec![]);
        let sol = solve_qp(&h, &[-1.0, -2.0, -3.0], None).unwrap();
        assert_eq!(sol.z, vec![1.0, 2.0, 3.0]);
        assert!(sol.kkt_residual < 1e-14);
    }

    #[test]
    fn dense_and_block_matvec_agree() {
        let h = seeded_block_tridiag(4, 3, 5);
        let v: Vec<f64> = (0..h.dim()).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let dense = h.to_dense();
        let a = h.matvec(&v);
        let b = dense.matvec(&v);
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        // structural bandwidth: blocks beyond |i-j| >= 2 are zero
        let bdim = h.block_dim();
        for bi in 0..h.num_blocks() {
            for bj in 0..h.num_blocks() {
                if bi.abs_diff(bj) >= 2 {
                    for i in 0..bdim {
                        for j in 0..bdim {
                            assert_eq!(dense[(bi * bdim + i, bj * bdim + j)], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn block_cholesky_matches_dense_solve_on_27x27() {
        let h = seeded_block_tridiag(3, 9, 11);
        let g: Vec<f64> = (0..27).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let sol = solve_qp(&h, &g, None).unwrap();
        let dense = h.to_dense();
        let oracle = crate::numerics::solve_spd(
            &dense,
            &Matrix::from_columns(27, &[g.iter().map(|v| -v).collect()]).unwrap(),
        )
        .unwrap();
        for i in 0..27 {
            assert!((sol.z[i] - oracle[(i, 0)]).abs() < 1e-9);
        }
        assert!(sol.kkt_residual <= KKT_REL_TOL * (1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }

    #[test]
    fn clipped_separable_case() {
        let h = BlockTridiag::new(vec![Matrix::identity(2)], vec![]);
        let g = [-2.0, -2.0];
        let lower = [-1e30, -1e30];
        let upper = [1.0, 1.0];
        let sol = solve_qp(&h, &g, Some((&lower, &upper))).unwrap();
        assert_eq!(sol.z, vec![1.0, 1.0]);
        assert!(sol.kkt_residual <= KKT_REL_TOL * 3.0);
    }

    #[test]
    fn bounded_solution_matches_unbounded_when_inactive() {
        let h = seeded_block_tridiag(2, 4, 21);
        let g: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 - 0.3).collect();
        let unbounded = solve_qp(&h, &g, None).unwrap();
        let lower = vec![-1e6; 8];
        let upper = vec![1e6; 8];
        let bounded = solve_qp(&h, &g, Some((&lower, &upper))).unwrap();
        for i in 0..8 {
            assert!((unbounded.z[i] - bounded.z[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn bounded_iterates_respect_bounds_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        for trial in 0..20 {
            let h = seeded_block_tridiag(2, 3, 100 + trial);
            let g: Vec<f64> = (0..6).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let lower: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.5..0.0)).collect();
            let upper: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..0.5)).collect();
            let sol = solve_qp(&h, &g, Some((&lower, &upper))).unwrap();
            for i in 0..6 {
                assert!(
                    sol.z[i] >= lower[i] && sol.z[i] <= upper[i],
                    "trial {trial}: z[{i}] = {} outside [{}, {}]",
                    sol.z[i],
                    lower[i],
                    upper[i]
                );
            }
            assert!(
                sol.kkt_residual <= KKT_REL_TOL * (1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
                "trial {trial}: projected gradient {}",
                sol.kkt_residual
            );
            // cross-check against a dense projected check: brute-force small
            // perturbations inside the box cannot decrease the cost
            let dense = h.to_dense();
            let cost = |z: &[f64]| -> f64 {
                let hz = dense.matvec(z);
                0.5 * z.iter().zip(hz.iter()).map(|(a, b)| a * b).sum::<f64>()
                    + z.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>()
            };
            let base = cost(&sol.z);
            for i in 0..6 {
                for delta in [-1e-5, 1e-5] {
                    let mut probe = sol.z.clone();
                    probe[i] = (probe[i] + delta).clamp(lower[i], upper[i]);
                    assert!(cost(&probe) >= base - 1e-9, "trial {trial} descent at {i}");
                }
            }
        }
    }

    #[test]
    fn indefinite_block_is_rejected() {
        let h = BlockTridiag::new(vec![Matrix::diag(&[1.0, -1.0])], vec![]);
        assert!(solve_qp(&h, &[0.0, 0.0], None).is_err());
    }
}
