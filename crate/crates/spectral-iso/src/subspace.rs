//! Orthonormal-basis subspace algebra: span, projection, intersection via
//! principal angles, relative orthogonal complements, and projector-based
//! equality.

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};

#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vector>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Subspace {
        Subspace { ambient, basis: vec![] }
    }

    pub fn full(ambient: usize) -> Subspace {
        let basis = (0..ambient)
            .map(|i| {
                let mut e = vec![0.0; ambient];
                e[i] = 1.0;
                e
            })
            .collect();
        Subspace { ambient, basis }
    }

    /// Wraps a basis that is already orthonormal (asserted in debug builds).
    pub fn from_orthonormal(ambient: usize, basis: Vec<Vector>) -> Subspace {
        #[cfg(debug_assertions)]
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let d = linalg::dot(&basis[i], &basis[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                debug_assert!((d - want).abs() < 1e-8, "basis not orthonormal");
            }
        }
        Subspace { ambient, basis }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn project(&self, x: &[f64]) -> Vector {
        let mut out = vec![0.0; self.ambient];
        for b in &self.basis {
            linalg::axpy(&mut out, linalg::dot(x, b), b);
        }
        out
    }

    /// Residual distance of `x` from this subspace.
    pub fn residual(&self, x: &[f64]) -> f64 {
        linalg::norm(&linalg::sub(x, &self.project(x)))
    }

    pub fn contains_vector(&self, x: &[f64], tol: f64) -> bool {
        self.residual(x) <= tol * linalg::norm(x).max(1.0)
    }

    /// Dense orthogonal projector; O(n^2 d), use sparingly.
    pub fn projector(&self) -> Vec<Vec<f64>> {
        let n = self.ambient;
        let mut p = vec![vec![0.0; n]; n];
        for b in &self.basis {
            for i in 0..n {
                if b[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    p[i][j] += b[i] * b[j];
                }
            }
        }
        p
    }
}

pub fn span_of(ambient: usize, vectors: &[Vector], rank_tol: f64) -> Subspace {
    for v in vectors {
        assert_eq!(v.len(), ambient, "span_of: mixed ambient dimensions");
    }
    Subspace {
        ambient,
        basis: linalg::orthonormalize(vectors, rank_tol),
    }
}

/// Intersection via principal angles: directions of `s1` whose principal
/// cosine against `s2` is at least 1 - tol.
pub fn intersect(s1: &Subspace, s2: &Subspace, tol: f64) -> Subspace {
    assert_eq!(s1.ambient, s2.ambient);
    if s1.is_zero() || s2.is_zero() {
        return Subspace::zero(s1.ambient);
    }
    // Keep the smaller basis on the left so the eigenproblem stays small.
    let (a, b) = if s1.dim() <= s2.dim() { (s1, s2) } else { (s2, s1) };
    let d1 = a.dim();
    let m: Vec<Vec<f64>> = a
        .basis
        .iter()
        .map(|u| b.basis.iter().map(|w| linalg::dot(u, w)).collect())
        .collect();
    // g = m m^T has eigenvalues cos^2(theta_k).
    let mut g = vec![vec![0.0; d1]; d1];
    for i in 0..d1 {
        for j in 0..d1 {
            g[i][j] = linalg::dot(&m[i], &m[j]);
        }
    }
    let (vals, vecs) = linalg::jacobi_eigen(&g, 100, 1e-13)
        .expect("small Gram eigenproblem must converge");
    let cos_min = (1.0 - tol).powi(2);
    let mut dirs = Vec::new();
    for (val, coef) in vals.iter().zip(&vecs) {
        if *val >= cos_min {
            let mut v = vec![0.0; a.ambient];
            for (c, u) in coef.iter().zip(&a.basis) {
                linalg::axpy(&mut v, *c, u);
            }
            dirs.push(v);
        }
    }
    span_of(s1.ambient, &dirs, 1e-9)
}

/// Orthogonal complement of `inner` inside `outer`. Errors when `inner` is
/// not contained in `outer` (within `contain_tol`).
pub fn complement_within(inner: &Subspace, outer: &Subspace, contain_tol: f64) -> Result<Subspace> {
    assert_eq!(inner.ambient, outer.ambient);
    for b in &inner.basis {
        if outer.residual(b) > contain_tol {
            return Err(Error::Contract(format!(
                "complement_within: inner basis vector has residual {:.3e} outside outer",
                outer.residual(b)
            )));
        }
    }
    // The residuals of fully-contained directions are cancellation noise;
    // an absolute cutoff keeps them out (outer's basis is unit length, so
    // genuine complement directions have norm well above it).
    let reduced: Vec<Vector> = outer
        .basis
        .iter()
        .map(|b| linalg::sub(b, &inner.project(b)))
        .collect();
    Ok(Subspace {
        ambient: outer.ambient,
        basis: linalg::orthonormalize_abs(&reduced, 1e-8),
    })
}

/// `a` minus `b`: the orthogonal complement of (a meet b) inside `a`.
/// The intersection may be represented by near-threshold directions lying
/// a hair outside `a`, so the complement is taken by direct subtraction
/// rather than through complement_within's containment check.
pub fn ominus(a: &Subspace, b: &Subspace, tol: f64) -> Subspace {
    let cap = intersect(a, b, tol);
    let reduced: Vec<Vector> = a
        .basis
        .iter()
        .map(|v| linalg::sub(v, &cap.project(v)))
        .collect();
    Subspace {
        ambient: a.ambient,
        basis: linalg::orthonormalize_abs(&reduced, 1e-8),
    }
}

/// Direct (not necessarily orthogonal) sum as a plain span.
pub fn sum(a: &Subspace, b: &Subspace) -> Subspace {
    let mut vs: Vec<Vector> = a.basis.clone();
    vs.extend(b.basis.iter().cloned());
    span_of(a.ambient, &vs, 1e-9)
}

/// Projector comparison in the Frobenius norm:
/// ||P1 - P2||_F^2 = d1 + d2 - 2 ||B1^T B2||_F^2.
pub fn subspace_equal(s1: &Subspace, s2: &Subspace, tol: f64) -> bool {
    assert_eq!(s1.ambient, s2.ambient);
    let cross: f64 = s1
        .basis
        .iter()
        .map(|u| {
            s2.basis
                .iter()
                .map(|w| {
                    let d = linalg::dot(u, w);
                    d * d
                })
                .sum::<f64>()
        })
        .sum();
    let fro2 = s1.dim() as f64 + s2.dim() as f64 - 2.0 * cross;
    fro2.max(0.0).sqrt() <= tol
}

/// Fixed space of a permutation: one normalized characteristic vector per
/// cycle; `sigma[i]` is the 0-based image of i.
pub fn fixed_subspace(sigma: &[usize]) -> Subspace {
    let n = sigma.len();
    let mut seen = vec![false; n];
    let mut basis = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            cyc.push(x);
            x = sigma[x];
        }
        let c = 1.0 / (cyc.len() as f64).sqrt();
        let mut v = vec![0.0; n];
        for i in cyc {
            v[i] = c;
        }
        basis.push(v);
    }
    Subspace { ambient: n, basis }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vector {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn span_drops_duplicates() {
        let s = span_of(3, &[e(3, 0), e(3, 0), e(3, 1)], 1e-9);
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn span_of_rotated_pair_equals_coordinate_plane() {
        let r = 1.0 / 2f64.sqrt();
        let s1 = span_of(3, &[vec![r, r, 0.0], vec![r, -r, 0.0]], 1e-9);
        let s2 = span_of(3, &[e(3, 0), e(3, 1)], 1e-9);
        assert!(subspace_equal(&s1, &s2, 1e-10));
    }

    #[test]
    fn span_zero_cases() {
        assert_eq!(span_of(4, &[], 1e-9).dim(), 0);
        assert_eq!(span_of(4, &[vec![0.0; 4]], 1e-9).dim(), 0);
    }

    #[test]
    fn intersect_coordinate_planes() {
        let s1 = span_of(3, &[e(3, 0), e(3, 1)], 1e-9);
        let s2 = span_of(3, &[e(3, 1), e(3, 2)], 1e-9);
        let cap = intersect(&s1, &s2, 1e-8);
        assert_eq!(cap.dim(), 1);
        assert!(cap.contains_vector(&e(3, 1), 1e-9));
    }

    #[test]
    fn complement_within_plane() {
        let inner = span_of(3, &[e(3, 0)], 1e-9);
        let outer = span_of(3, &[e(3, 0), e(3, 1)], 1e-9);
        let c = complement_within(&inner, &outer, 1e-8).unwrap();
        assert_eq!(c.dim(), 1);
        assert!(c.contains_vector(&e(3, 1), 1e-9));
        assert!(complement_within(&span_of(3, &[e(3, 2)], 1e-9), &outer, 1e-8).is_err());
    }

    #[test]
    fn equality_by_projectors() {
        let s1 = span_of(2, &[vec![1.0, 1.0], vec![1.0, -1.0]], 1e-9);
        let s2 = Subspace::full(2);
        // The Frobenius formula loses half the digits near zero, so the
        // practical floor is around 1e-8; the engine compares at 1e-7.
        assert!(subspace_equal(&s1, &s2, 1e-7));
        assert!(!subspace_equal(&span_of(2, &[e(2, 0)], 1e-9), &s2, 1e-7));
    }

    #[test]
    fn fixed_subspace_cycles() {
        assert_eq!(fixed_subspace(&[0, 1, 2]).dim(), 3);
        let rot = fixed_subspace(&[1, 2, 0]);
        assert_eq!(rot.dim(), 1);
        let r = 1.0 / 3f64.sqrt();
        assert!(rot.contains_vector(&vec![r, r, r], 1e-12));
        let swap = fixed_subspace(&[1, 0, 2]);
        assert_eq!(swap.dim(), 2);
        assert!(swap.contains_vector(&vec![1.0, 1.0, 0.0], 1e-12));
        assert!(swap.contains_vector(&e(3, 2), 1e-12));
        assert!(!swap.contains_vector(&vec![1.0, -1.0, 0.0], 1e-6));
    }

    #[test]
    fn ominus_matches_hand_case() {
        let a = Subspace::full(3);
        let b = span_of(3, &[e(3, 0)], 1e-9);
        let d = ominus(&a, &b, 1e-8);
        assert_eq!(d.dim(), 2);
        assert!(d.contains_vector(&e(3, 1), 1e-9));
        assert!(!d.contains_vector(&e(3, 0), 1e-6));
    }
}
