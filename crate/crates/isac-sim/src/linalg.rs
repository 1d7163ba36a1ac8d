//! Minimal dense linear algebra used by the shadowing generator and the
//! projection solver: symmetric Cholesky factorization and triangular solves.

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix
/// stored row-major. Adds escalating diagonal jitter when the matrix is only
/// semidefinite (shadowing kernels on the torus can be borderline).
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mean_diag = (0..n).map(|i| a[i * n + i]).sum::<f64>() / n.max(1) as f64;
    for attempt in 0..4 {
        let jitter = if attempt == 0 {
            0.0
        } else {
            mean_diag * 10f64.powi(-12 + 3 * attempt)
        };
        if let Some(l) = try_cholesky(a, n, jitter) {
            return Some(l);
        }
    }
    None
}

fn try_cholesky(a: &[f64], n: usize, jitter: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            if i == j {
                sum += jitter;
            }
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = rhs` in place given the lower factor from [`cholesky`].
pub fn cholesky_solve(l: &[f64], n: usize, rhs: &mut [f64]) {
    // forward substitution
    for i in 0..n {
        let mut v = rhs[i];
        for k in 0..i {
            v -= l[i * n + k] * rhs[k];
        }
        rhs[i] = v / l[i * n + i];
    }
    // back substitution with L^T
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for k in i + 1..n {
            v -= l[k * n + i] * rhs[k];
        }
        rhs[i] = v / l[i * n + i];
    }
}

/// `y = L w` for a lower-triangular factor (correlated Gaussian draws).
pub fn lower_mul(l: &[f64], n: usize, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut v = 0.0;
        for k in 0..=i {
            v += l[i * n + k] * w[k];
        }
        out[i] = v;
    }
    out
}
