//! Eigendecomposition of adjacency matrices with eigenvalue clustering,
//! plus per-eigenspace lookup tables (projector entries, coordinate-type
//! classes) shared by the partition machinery.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{self, Vector};
use crate::quantize;
use crate::subspace::{self, Subspace};

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    n: usize,
    a_norm: f64,
    eigenvalues: Vector,
    spaces: Vec<Subspace>,
    /// Some raw eigenvalue gap fell within 10x of the clustering tolerance;
    /// downstream consumers surface this in output.
    pub marginal_clustering: bool,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Inf-norm of the decomposed matrix; the base for relative tolerances.
    pub fn a_norm(&self) -> f64 {
        self.a_norm
    }

    /// Distinct clustered eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn num_spaces(&self) -> usize {
        self.spaces.len()
    }

    pub fn space(&self, lambda_idx: usize) -> &Subspace {
        &self.spaces[lambda_idx]
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.dim()).collect()
    }

    /// proj onto the lambda_idx-th eigenspace of the standard basis vector
    /// e_v (0-based v).
    pub fn project_basis_vector(&self, lambda_idx: usize, v: usize) -> Vector {
        assert!(lambda_idx < self.spaces.len() && v < self.n, "index out of range");
        let space = &self.spaces[lambda_idx];
        let mut out = vec![0.0; self.n];
        for b in space.basis() {
            linalg::axpy(&mut out, b[v], b);
        }
        out
    }

    /// Frobenius norm of A - sum_lambda lambda P_lambda.
    pub fn reconstruction_error(&self, a: &[Vec<f64>]) -> f64 {
        let n = self.n;
        let mut r: Vec<Vec<f64>> = a.to_vec();
        for (lam, space) in self.eigenvalues.iter().zip(&self.spaces) {
            for b in space.basis() {
                for i in 0..n {
                    if b[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        r[i][j] -= lam * b[i] * b[j];
                    }
                }
            }
        }
        r.iter()
            .flat_map(|row| row.iter().map(|x| x * x))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn eigendecompose(a: &[Vec<f64>], cfg: &Config) -> Result<SpectralDecomposition> {
    linalg::check_symmetric(a, 1e-12)?;
    let n = a.len();
    let a_norm = linalg::mat_inf_norm(a);
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    // Sweep to near machine precision regardless of the verification
    // tolerance: residual left in the eigenvectors gets amplified by later
    // Gram-Schmidt steps with small pivots, so the solver must leave far
    // less noise than downstream rank cutoffs are prepared to absorb.
    let (raw_vals, raw_vecs) = linalg::jacobi_eigen(a, 100, 1e-14 * a_norm.max(1.0))?;
    let cluster_tol = cfg.abs_cluster_tol(a_norm);
    let summary = quantize::cluster_summary(&raw_vals, cluster_tol);
    let ranks = quantize::cluster_ranks(&raw_vals, cluster_tol);
    let marginal = quantize::has_marginal_gap(&raw_vals, cluster_tol, 10.0);

    // cluster_summary is ascending; we want descending eigenvalues.
    let k = summary.len();
    let mut spaces_vecs: Vec<Vec<Vector>> = vec![Vec::new(); k];
    for (vec, &r) in raw_vecs.into_iter().zip(&ranks) {
        spaces_vecs[k - 1 - r].push(vec);
    }
    let eigenvalues: Vector = summary.iter().rev().map(|&(m, _)| m).collect();
    let spaces: Vec<Subspace> = spaces_vecs
        .into_iter()
        .map(|vs| subspace::span_of(n, &linalg::orthonormalize(&vs, cfg.rank_tol), cfg.rank_tol))
        .collect();

    let d = SpectralDecomposition {
        n,
        a_norm,
        eigenvalues,
        spaces,
        marginal_clustering: marginal,
    };
    debug_assert_eq!(d.multiplicities().iter().sum::<usize>(), n);
    Ok(d)
}

pub fn decompose_graph(g: &Graph, cfg: &Config) -> Result<SpectralDecomposition> {
    eigendecompose(&g.adjacency_matrix(), cfg)
}

/// Per-eigenspace lookup tables.
///
/// `proj[x][y]` is the (x,y) entry of the orthogonal projector onto the
/// eigenspace, i.e. the y-th coordinate of proj(e_x); `type_rank[x]` groups
/// vertices whose projected basis vectors have equal coordinate multisets
/// (clustered at tol).
#[derive(Debug, Clone)]
pub struct EigenTables {
    pub lambda_idx: usize,
    pub proj: Vec<Vec<f64>>,
    pub type_rank: Vec<usize>,
}

impl EigenTables {
    pub fn build(d: &SpectralDecomposition, lambda_idx: usize, cfg: &Config) -> EigenTables {
        Self::from_subspace(d.space(lambda_idx), lambda_idx, cfg.abs_tol(d.a_norm()))
    }

    /// Tables for an arbitrary subspace (used when peeling complements and
    /// residual spaces); `tol` is the absolute clustering tolerance for the
    /// type classes.
    pub fn from_subspace(space: &Subspace, lambda_idx: usize, tol: f64) -> EigenTables {
        let n = space.ambient();
        let mut proj = vec![vec![0.0; n]; n];
        for b in space.basis() {
            for x in 0..n {
                if b[x] == 0.0 {
                    continue;
                }
                for y in 0..n {
                    proj[x][y] += b[x] * b[y];
                }
            }
        }
        let all: Vector = proj.iter().flatten().copied().collect();
        let ids = quantize::cluster_ranks(&all, tol);
        let mut keys: Vec<Vec<usize>> = (0..n)
            .map(|x| {
                let mut k: Vec<usize> = ids[x * n..(x + 1) * n].to_vec();
                k.sort_unstable();
                k
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        let type_rank = keys
            .drain(..)
            .map(|k| sorted.binary_search(&k).unwrap())
            .collect();
        EigenTables { lambda_idx, proj, type_rank }
    }

    /// proj(e_x) as an owned vector.
    pub fn p(&self, x: usize) -> Vector {
        self.proj[x].clone()
    }

    /// Inner product of proj(e_x) and proj(e_y) = projector entry.
    pub fn angle(&self, x: usize, y: usize) -> f64 {
        self.proj[x][y]
    }

    pub fn p_norm2(&self, x: usize) -> f64 {
        self.proj[x][x]
    }
}

/// Rounds to 12 significant digits for stable JSON emission.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return 0.0;
    }
    let digits = 12 - x.abs().log10().floor() as i32 - 1;
    let factor = 10f64.powi(digits);
    (x * factor).round() / factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;

    fn cfg() -> Config {
        Config::default()
    }

    /// Characteristic-polynomial coefficients via the Faddeev-LeVerrier
    /// recurrence; integer-exact for adjacency matrices at this scale.
    fn char_poly(a: &[Vec<f64>]) -> Vec<f64> {
        let n = a.len();
        let mut coeffs = vec![1.0];
        let mut m = vec![vec![0.0; n]; n];
        for k in 1..=n {
            // m <- a * (m + c_{k-1} I)
            let mut am = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        let mlj = m[l][j] + if l == j { coeffs[k - 1] } else { 0.0 };
                        s += a[i][l] * mlj;
                    }
                    am[i][j] = s;
                }
            }
            m = am;
            let trace: f64 = (0..n).map(|i| m[i][i]).sum();
            coeffs.push(-trace / k as f64);
        }
        coeffs
    }

    fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().fold(0.0, |acc, c| acc * x + c)
    }

    #[test]
    fn k4_spectrum() {
        let g = graph::complete(4);
        let d = decompose_graph(&g, &cfg()).unwrap();
        assert_eq!(d.eigenvalues().len(), 2);
        assert!((d.eigenvalues()[0] - 3.0).abs() < 1e-9);
        assert!((d.eigenvalues()[1] + 1.0).abs() < 1e-9);
        assert_eq!(d.multiplicities(), vec![1, 3]);
        // Cross-check against the characteristic polynomial.
        let p = char_poly(&g.adjacency_matrix());
        for &lam in d.eigenvalues() {
            assert!(eval_poly(&p, lam).abs() < 1e-6);
        }
    }

    #[test]
    fn one_vertex() {
        let g = graph::Graph::new(1, []).unwrap();
        let d = decompose_graph(&g, &cfg()).unwrap();
        assert_eq!(d.eigenvalues(), &[0.0]);
        assert_eq!(d.multiplicities(), vec![1]);
        let p = d.project_basis_vector(0, 0);
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p3_spectrum() {
        let g = graph::path(3);
        let d = decompose_graph(&g, &cfg()).unwrap();
        let want = [2f64.sqrt(), 0.0, -(2f64.sqrt())];
        assert_eq!(d.eigenvalues().len(), 3);
        for (got, want) in d.eigenvalues().iter().zip(want) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(d.multiplicities(), vec![1, 1, 1]);
        let p = char_poly(&g.adjacency_matrix());
        for &lam in d.eigenvalues() {
            assert!(eval_poly(&p, lam).abs() < 1e-8);
        }
    }

    #[test]
    fn k4_perron_projection() {
        let d = decompose_graph(&graph::complete(4), &cfg()).unwrap();
        let p = d.project_basis_vector(0, 0);
        for x in p {
            assert!((x - 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn projections_sum_to_basis_vector() {
        let g = graph::petersen();
        let d = decompose_graph(&g, &cfg()).unwrap();
        for v in 0..g.n() {
            let mut s = vec![0.0; g.n()];
            for l in 0..d.num_spaces() {
                let p = d.project_basis_vector(l, v);
                for i in 0..g.n() {
                    s[i] += p[i];
                }
            }
            for i in 0..g.n() {
                let want = if i == v { 1.0 } else { 0.0 };
                assert!((s[i] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reconstruction_bound() {
        for spec in ["cube", "petersen", "cycle:7", "complete:8", "path:6"] {
            let g = graph::generate_named(spec).unwrap();
            let d = decompose_graph(&g, &cfg()).unwrap();
            let err = d.reconstruction_error(&g.adjacency_matrix());
            assert!(
                err <= 1e-10 * g.n() as f64,
                "{spec}: reconstruction error {err:.3e}"
            );
        }
    }

    #[test]
    fn eigen_tables_types_on_star() {
        // The star's center is in its own coordinate-type class for the
        // Perron eigenspace.
        let g = graph::star(4);
        let d = decompose_graph(&g, &cfg()).unwrap();
        let t = EigenTables::build(&d, 0, &cfg());
        assert_ne!(t.type_rank[0], t.type_rank[1]);
        assert!((1..5).all(|x| t.type_rank[x] == t.type_rank[1]));
    }

    #[test]
    fn round_sig_stability() {
        assert_eq!(round_sig(2.0000000000001), 2.0);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-1.4142135623730951), -1.41421356237);
    }
}
