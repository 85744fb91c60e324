//! Full spectrum of a real square matrix: Householder reduction to upper
//! Hessenberg form, then Francis double-shift QR iteration with 1x1/2x2
//! deflation. Complex eigenvalues come out in exact conjugate pairs.

use super::matrix::Matrix;
use super::NumericsError;

/// Largest dimension accepted by [`eigenvalues`].
pub const EIG_MAX_DIM: usize = 64;

/// QR shift budget, multiplied by the matrix dimension.
pub const EIG_MAX_SHIFTS_PER_DIM: usize = 50;

/// Eigenvalues of a real matrix as `(re, im)` pairs, sorted by real part
/// then imaginary part for deterministic output.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum {
    pub eigenvalues: Vec<(f64, f64)>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|&(re, im)| re.hypot(im))
            .collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }
}

/// Full eigenvalue spectrum (with multiplicity) of a square matrix of
/// dimension at most [`EIG_MAX_DIM`].
pub fn eigenvalues(m: &Matrix) -> Result<ComplexSpectrum, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::DimensionMismatch {
            context: format!("eigenvalues needs a square matrix, got {}x{}", m.rows(), m.cols()),
        });
    }
    let n = m.rows();
    if n > EIG_MAX_DIM {
        return Err(NumericsError::DimensionTooLarge {
            got: n,
            max: EIG_MAX_DIM,
        });
    }
    if n == 1 {
        return Ok(ComplexSpectrum {
            eigenvalues: vec![(m[(0, 0)], 0.0)],
        });
    }

    let mut h = m.clone();
    hessenberg(&mut h);
    let mut eigenvalues = francis_qr(&h, n)?;
    eigenvalues.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite eigenvalues")
            .then(a.1.partial_cmp(&b.1).expect("finite eigenvalues"))
    });
    Ok(ComplexSpectrum { eigenvalues })
}

// Householder similarity reduction to upper Hessenberg form, in place.
fn hessenberg(h: &mut Matrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let mut norm_sq = 0.0;
        for i in (k + 1)..n {
            norm_sq += h[(i, k)] * h[(i, k)];
        }
        if norm_sq == 0.0 {
            continue;
        }
        let norm = norm_sq.sqrt();
        let alpha = if h[(k + 1, k)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[k + 1] = h[(k + 1, k)] - alpha;
        for i in (k + 2)..n {
            v[i] = h[(i, k)];
        }
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();
        if v_norm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / v_norm_sq;

        // H <- P H with P = I - beta v v^T
        for j in 0..n {
            let dot: f64 = ((k + 1)..n).map(|i| v[i] * h[(i, j)]).sum();
            let scaled = beta * dot;
            for i in (k + 1)..n {
                h[(i, j)] -= scaled * v[i];
            }
        }
        // H <- H P
        for i in 0..n {
            let dot: f64 = ((k + 1)..n).map(|j| v[j] * h[(i, j)]).sum();
            let scaled = beta * dot;
            for j in (k + 1)..n {
                h[(i, j)] -= scaled * v[j];
            }
        }
        // clean below the subdiagonal exactly
        h[(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            h[(i, k)] = 0.0;
        }
    }
}

// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
// Runs on a one-padded copy so the index arithmetic matches the classical
// 1-based formulation of the algorithm.
fn francis_qr(hess: &Matrix, n: usize) -> Result<Vec<(f64, f64)>, NumericsError> {
    let mut a = vec![vec![0.0_f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = hess[(i, j)];
        }
    }

    let eps = f64::EPSILON;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }

    let shift_cap = EIG_MAX_SHIFTS_PER_DIM * n;
    let mut shifts_used = 0usize;

    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut x, mut y, mut z, mut w, mut s);
    while nn >= 1 {
        let mut its = 0usize;
        loop {
            // look for a single negligible subdiagonal element
            let mut l = nn;
            while l >= 2 {
                s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                // one real eigenvalue
                out.push((x + t, 0.0));
                nn -= 1;
                break;
            }
            y = a[nn - 1][nn - 1];
            w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                // trailing 2x2 block
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + if p >= 0.0 { z } else { -z };
                    let first = x + z;
                    let second = if z != 0.0 { x - w / z } else { x + z };
                    out.push((first, 0.0));
                    out.push((second, 0.0));
                } else {
                    out.push((x + p, z));
                    out.push((x + p, -z));
                }
                nn -= 2;
                break;
            }

            shifts_used += 1;
            if shifts_used > shift_cap {
                return Err(NumericsError::EigNonConvergence {
                    shifts: shifts_used,
                });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // find two consecutive small subdiagonal elements
            let mut m = nn - 2;
            loop {
                z = a[m][m];
                r = x - z;
                s = y - z;
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s;
                r = a[m + 2][m + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }

            // double QR sweep over rows l..nn, columns m..nn
            for k in m..=(nn - 1) {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != nn - 1 { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let mag = (p * p + q * q + r * r).sqrt();
                s = if p >= 0.0 { mag } else { -mag };
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[k][k - 1] = -a[k][k - 1];
                    }
                } else {
                    a[k][k - 1] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;
                for j in k..=nn {
                    p = a[k][j] + q * a[k + 1][j];
                    if k != nn - 1 {
                        p += r * a[k + 2][j];
                        a[k + 2][j] -= p * z;
                    }
                    a[k + 1][j] -= p * y;
                    a[k][j] -= p * x;
                }
                let mmin = if nn < k + 3 { nn } else { k + 3 };
                for i in l..=mmin {
                    p = x * a[i][k] + y * a[i][k + 1];
                    if k != nn - 1 {
                        p += z * a[i][k + 2];
                        a[i][k + 2] -= p * r;
                    }
                    a[i][k + 1] -= p * q;
                    a[i][k] -= p;
                }
            }
        }
    }
    Ok(out)
}
