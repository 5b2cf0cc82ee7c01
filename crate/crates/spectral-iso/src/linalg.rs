//! Dense real linear algebra: just enough for symmetric eigenproblems and
//! orthonormal bases at desk scale (n up to a few hundred).

use crate::error::{Error, Result};

pub type Vector = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// y += c * x
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub fn scale(a: &mut [f64], c: f64) {
    for x in a.iter_mut() {
        *x *= c;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vector {
    a.iter().map(|row| dot(row, x)).collect()
}

/// Row-wise inf-norm of a square matrix.
pub fn mat_inf_norm(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn check_symmetric(a: &[Vec<f64>], tol: f64) -> Result<()> {
    let n = a.len();
    for row in a {
        if row.len() != n {
            return Err(Error::Invalid("matrix is not square".into()));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[i][j] - a[j][i]).abs() > tol {
                return Err(Error::Invalid(format!(
                    "matrix not symmetric at ({i},{j}): {} vs {}",
                    a[i][j], a[j][i]
                )));
            }
        }
    }
    Ok(())
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Returns (eigenvalues, eigenvectors) sorted by descending eigenvalue;
/// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
/// Convergence: off-diagonal Frobenius mass below `off_tol`, within
/// `max_sweeps` full sweeps.
pub fn jacobi_eigen(
    a_in: &[Vec<f64>],
    max_sweeps: usize,
    off_tol: f64,
) -> Result<(Vector, Vec<Vector>)> {
    let n = a_in.len();
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let mut a: Vec<Vec<f64>> = a_in.to_vec();
    // v holds the accumulated rotations; column k is the k-th eigenvector.
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[i][j] * a[i][j];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = off(&a) <= off_tol;
    for _sweep in 0..max_sweeps {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= off_tol / (n as f64 * n as f64).max(1.0) {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- J^T A J on rows/cols p,q
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i][p];
                    let viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
        converged = off(&a) <= off_tol;
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi eigensolver: off-diagonal residual {:.3e} above {:.3e} after {max_sweeps} sweeps",
            off(&a),
            off_tol
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let eigenvalues: Vector = order.iter().map(|&k| a[k][k]).collect();
    let eigenvectors: Vec<Vector> = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    Ok((eigenvalues, eigenvectors))
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// Vectors whose residual norm falls to `rank_tol` times the largest input
/// norm (or below an absolute floor when all inputs are tiny) are dropped.
pub fn orthonormalize(vectors: &[Vector], rank_tol: f64) -> Vec<Vector> {
    let max_norm = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return Vec::new();
    }
    orthonormalize_abs(vectors, rank_tol * max_norm)
}

/// Gram-Schmidt with an absolute residual cutoff. Needed when the inputs
/// themselves may be pure cancellation noise: the relative cutoff would
/// normalize that noise into a spurious basis direction.
pub fn orthonormalize_abs(vectors: &[Vector], cutoff: f64) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _pass in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let nw = norm(&w);
        if nw > cutoff {
            scale(&mut w, 1.0 / nw);
            basis.push(w);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_is_identity_rotation() {
        let a = vec![vec![2.0, 0.0], vec![0.0, -1.0]];
        let (vals, vecs) = jacobi_eigen(&a, 100, 1e-12).unwrap();
        assert!((vals[0] - 2.0).abs() < 1e-12);
        assert!((vals[1] + 1.0).abs() < 1e-12);
        assert!((vecs[0][0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_2x2_analytic() {
        // [[0,1],[1,0]] has eigenvalues 1, -1 with vectors (1,1)/sqrt2, (1,-1)/sqrt2.
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let (vals, vecs) = jacobi_eigen(&a, 100, 1e-12).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] + 1.0).abs() < 1e-12);
        for (val, vec) in vals.iter().zip(&vecs) {
            let av = mat_vec(&a, vec);
            for i in 0..2 {
                assert!((av[i] - val * vec[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_residuals_on_random_symmetric() {
        // Deterministic pseudo-random fill; checks A v = lambda v and
        // orthonormality of the eigenvector set.
        let n = 12;
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x = next();
                a[i][j] = x;
                a[j][i] = x;
            }
        }
        let (vals, vecs) = jacobi_eigen(&a, 100, 1e-11).unwrap();
        for (val, vec) in vals.iter().zip(&vecs) {
            let av = mat_vec(&a, vec);
            for i in 0..n {
                assert!((av[i] - val * vec[i]).abs() < 1e-9);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = dot(&vecs[i], &vecs[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
        // Trace identity.
        let trace: f64 = (0..n).map(|i| a[i][i]).sum();
        let sum: f64 = vals.iter().sum();
        assert!((trace - sum).abs() < 1e-9);
    }

    #[test]
    fn orthonormalize_drops_dependent_vectors() {
        let vs = vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ];
        let b = orthonormalize(&vs, 1e-9);
        assert_eq!(b.len(), 2);
        assert!((dot(&b[0], &b[1])).abs() < 1e-12);
    }

    #[test]
    fn orthonormalize_empty_and_zero() {
        assert!(orthonormalize(&[], 1e-9).is_empty());
        assert!(orthonormalize(&[vec![0.0, 0.0]], 1e-9).is_empty());
    }
}
