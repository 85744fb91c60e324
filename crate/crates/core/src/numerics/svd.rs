//! Thin singular value decomposition by one-sided Jacobi rotations, and the
//! truncated Moore-Penrose pseudo-inverse built on it.
//!
//! The snapshot matrices this crate decomposes are short and fat (33 rows,
//! thousands of columns), so wide inputs are transposed and the rotations run
//! over the 33 columns of the tall side; each rotation decision only reads
//! the Gram entries of a column pair.

use super::matrix::Matrix;
use super::NumericsError;

/// Jacobi sweep budget, multiplied by the smaller matrix dimension.
pub const SVD_MAX_SWEEPS_PER_DIM: usize = 100;

/// Orthonormality guarantee of the returned factors: `||U^T U - I||_F` and
/// `||V^T V - I||_F` stay below this.
pub const SVD_ORTHONORMALITY_TOL: f64 = 1e-10;

/// Reconstruction guarantee, as a factor of `max(rows, cols) * s_1`.
pub const SVD_RECONSTRUCTION_TOL: f64 = 1e-10;

// A column pair is considered orthogonal once |a_p . a_q| falls below this
// times ||a_p|| ||a_q||.
const ROTATION_TOL: f64 = 1e-15;

// Singular values below this times s_1 get a basis-completed left vector
// instead of a normalized (noise-dominated or zero) column.
const NULL_COLUMN_REL: f64 = 1e-14;

/// Thin SVD `m = U diag(s) V^T` with `r = min(rows, cols)` columns in both
/// factors and singular values sorted non-increasing.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    pub fn rank(&self, rel_threshold: f64) -> usize {
        let s1 = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_threshold * s1 && s > 0.0)
            .count()
    }
}

/// Thin SVD of an arbitrary rectangular matrix.
pub fn svd(m: &Matrix) -> Result<SvdResult, NumericsError> {
    if m.rows() >= m.cols() {
        jacobi_svd_tall(m)
    } else {
        let t = jacobi_svd_tall(&m.transpose())?;
        Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        })
    }
}

fn jacobi_svd_tall(m: &Matrix) -> Result<SvdResult, NumericsError> {
    let rows = m.rows();
    let n = m.cols();
    debug_assert!(rows >= n);

    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| m.col(j)).collect();
    // V accumulates the right rotations; stored as columns.
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let max_sweeps = SVD_MAX_SWEEPS_PER_DIM * n.max(1);
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for i in 0..rows {
                        a += cp[i] * cp[i];
                        b += cq[i] * cq[i];
                        g += cp[i] * cq[i];
                    }
                    (a, b, g)
                };
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= ROTATION_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NumericsError::SvdNonConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite norms"));

    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let s1 = singular_values[0];

    let mut u = Matrix::zeros(rows, n);
    let mut v_out = Matrix::zeros(n, n);
    let mut completed: Vec<usize> = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        for i in 0..n {
            v_out[(i, k)] = v[j][i];
        }
        if singular_values[k] > s1 * NULL_COLUMN_REL && singular_values[k] > 0.0 {
            for i in 0..rows {
                u[(i, k)] = cols[j][i] / singular_values[k];
            }
        } else {
            completed.push(k);
        }
    }
    for &k in &completed {
        complete_column(&mut u, k);
    }

    Ok(SvdResult {
        u,
        singular_values,
        v: v_out,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for i in 0..cp.len() {
        let xp = cp[i];
        let xq = cq[i];
        cp[i] = c * xp - s * xq;
        cq[i] = s * xp + c * xq;
    }
}

// Replace a null column of U with a unit vector orthogonal to every other
// column, found by Gram-Schmidt over the standard basis.
fn complete_column(u: &mut Matrix, k: usize) {
    let rows = u.rows();
    let cols = u.cols();
    for cand in 0..rows {
        let mut r = vec![0.0; rows];
        r[cand] = 1.0;
        for j in 0..cols {
            if j == k {
                continue;
            }
            let dot: f64 = (0..rows).map(|i| u[(i, j)] * r[i]).sum();
            for i in 0..rows {
                r[i] -= dot * u[(i, j)];
            }
        }
        let norm: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            // re-orthogonalize once for orthogonality at machine precision
            for j in 0..cols {
                if j == k {
                    continue;
                }
                let dot: f64 = (0..rows).map(|i| u[(i, j)] * r[i]).sum();
                for i in 0..rows {
                    r[i] -= dot * u[(i, j)];
                }
            }
            let norm: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            for i in 0..rows {
                u[(i, k)] = r[i] / norm;
            }
            return;
        }
    }
    unreachable!("a completion direction always exists when rows >= cols");
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `sv_threshold * s_1` truncated.
///
/// `sv_threshold` is relative and must lie in `[0, 1)`. Exact zeros are
/// always truncated. Errors with [`NumericsError::RankZero`] when nothing
/// survives truncation.
pub fn pinv(m: &Matrix, sv_threshold: f64) -> Result<Matrix, NumericsError> {
    pinv_with_rank(m, sv_threshold).map(|(p, _)| p)
}

/// [`pinv`] plus the retained numerical rank after truncation.
pub fn pinv_with_rank(m: &Matrix, sv_threshold: f64) -> Result<(Matrix, usize), NumericsError> {
    assert!(
        (0.0..1.0).contains(&sv_threshold),
        "sv_threshold must be in [0, 1), got {sv_threshold}"
    );
    let decomp = svd(m)?;
    let s1 = decomp.singular_values[0];
    let kept: Vec<usize> = (0..decomp.singular_values.len())
        .filter(|&j| {
            let s = decomp.singular_values[j];
            s > sv_threshold * s1 && s > 0.0
        })
        .collect();
    if kept.is_empty() {
        return Err(NumericsError::RankZero);
    }
    let mut p = Matrix::zeros(m.cols(), m.rows());
    for &j in &kept {
        let inv_s = 1.0 / decomp.singular_values[j];
        for i in 0..m.cols() {
            let vij = decomp.v[(i, j)] * inv_s;
            if vij == 0.0 {
                continue;
            }
            for r in 0..m.rows() {
                p[(i, r)] += vij * decomp.u[(r, j)];
            }
        }
    }
    Ok((p, kept.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(r: &SvdResult) -> Matrix {
        let mut us = r.u.clone();
        for j in 0..r.singular_values.len() {
            for i in 0..us.rows() {
                us[(i, j)] *= r.singular_values[j];
            }
        }
        &us * &r.v.transpose()
    }

    fn gram_identity_error(m: &Matrix) -> f64 {
        (&(&m.transpose() * m) - &Matrix::identity(m.cols())).frobenius_norm()
    }

    #[test]
    fn identity_svd() {
        let r = svd(&Matrix::identity(3)).unwrap();
        for s in &r.singular_values {
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert!(gram_identity_error(&r.u) < SVD_ORTHONORMALITY_TOL);
        assert!(gram_identity_error(&r.v) < SVD_ORTHONORMALITY_TOL);
    }

    #[test]
    fn diagonal_with_zero_singular_value() {
        let r = svd(&Matrix::diag(&[3.0, 2.0, 0.0])).unwrap();
        assert!((r.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((r.singular_values[1] - 2.0).abs() < 1e-14);
        assert!(r.singular_values[2].abs() < 1e-14);
        assert!(gram_identity_error(&r.u) < SVD_ORTHONORMALITY_TOL);
        let recon = reconstruct(&r);
        assert!((&recon - &Matrix::diag(&[3.0, 2.0, 0.0])).frobenius_norm() < 1e-12);
    }

    #[test]
    fn wide_matrix_reconstruction() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 3.0, 4.0], &[0.5, -1.0, 2.0, 0.0]]).unwrap();
        let r = svd(&m).unwrap();
        assert_eq!(r.u.rows(), 2);
        assert_eq!(r.u.cols(), 2);
        assert_eq!(r.v.rows(), 4);
        assert_eq!(r.v.cols(), 2);
        assert!((&reconstruct(&r) - &m).frobenius_norm() < 1e-13);
        assert!(r.singular_values[0] >= r.singular_values[1]);
    }

    #[test]
    fn pinv_identity() {
        let p = pinv(&Matrix::identity(4), 1e-10).unwrap();
        assert!((&p - &Matrix::identity(4)).frobenius_norm() < 1e-13);
    }

    #[test]
    fn pinv_rank_deficient_diagonal() {
        let p = pinv(&Matrix::diag(&[2.0, 0.0]), 1e-10).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert!(p[(1, 1)].abs() < 1e-14);
    }

    #[test]
    fn pinv_zero_matrix_is_rank_zero() {
        let z = Matrix::zeros(3, 2);
        assert!(matches!(pinv(&z, 1e-10), Err(NumericsError::RankZero)));
        assert!(matches!(pinv(&z, 0.0), Err(NumericsError::RankZero)));
    }
}
