//! Partitions of [n] with provenance keys, the meet operation, equitable
//! refinement, quotient graphs, lifted eigenspaces, the spectral
//! equitability test, and the cell-orthogonality report.
//!
//! Provenance keys are built exclusively from label-invariant data (stage
//! codes, eigenvalue ranks, layer indices, clustered-value ranks) so that
//! relabeling a graph permutes cell contents but never changes keys. Cell
//! correspondences between partitions anchored at different vertices match
//! cells by key; member lists only break ties in the canonical order.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{self, Vector};
use crate::spectral::SpectralDecomposition;
use crate::subspace::{self, Subspace};

/// Stage codes leading every provenance key.
pub mod stage {
    pub const SEED: i64 = 0;
    pub const REGION: i64 = 1;
    pub const MEET: i64 = 2;
    pub const EQUITABLE: i64 = 3;
    pub const TYPE: i64 = 4;
    pub const ANGLE: i64 = 5;
    pub const BALANCE: i64 = 6;
    pub const UNIFORM: i64 = 7;
    pub const BLOCK: i64 = 8;
    /// Separator inside concatenated keys.
    pub const SEP: i64 = i64::MIN;
}

pub type CellKey = Vec<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    cells: Vec<Vec<usize>>,
    keys: Vec<CellKey>,
    cell_of: Vec<usize>,
}

impl Partition {
    /// Builds and canonicalizes; cells sorted by (key, size, member list).
    pub fn new(n: usize, mut cells: Vec<(CellKey, Vec<usize>)>) -> Result<Partition> {
        let mut seen = vec![false; n];
        for (_, members) in cells.iter_mut() {
            members.sort_unstable();
            if members.is_empty() {
                return Err(Error::Contract("empty cell".into()));
            }
            for &v in members.iter() {
                if v >= n || seen[v] {
                    return Err(Error::Contract(format!(
                        "cells must disjointly cover 0..{n}; problem at vertex {v}"
                    )));
                }
                seen[v] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Contract("cells do not cover the ground set".into()));
        }
        // Canonical order: stage code, then size, then the invariant key,
        // with the member list as the final tie-break.
        cells.sort_by(|a, b| {
            (a.0[0], a.1.len(), &a.0, &a.1).cmp(&(b.0[0], b.1.len(), &b.0, &b.1))
        });
        let mut cell_of = vec![0usize; n];
        for (i, (_, members)) in cells.iter().enumerate() {
            for &v in members {
                cell_of[v] = i;
            }
        }
        let (keys, cells) = cells.into_iter().map(|(k, m)| (k, m)).unzip();
        Ok(Partition { n, cells, keys, cell_of })
    }

    pub fn from_cells(n: usize, cells: Vec<Vec<usize>>) -> Result<Partition> {
        Partition::new(n, cells.into_iter().map(|c| (vec![stage::SEED], c)).collect())
    }

    pub fn unit(n: usize) -> Partition {
        Partition::from_cells(n, vec![(0..n).collect()]).unwrap()
    }

    pub fn discrete(n: usize) -> Partition {
        Partition::from_cells(n, (0..n).map(|v| vec![v]).collect()).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &[usize] {
        &self.cells[i]
    }

    pub fn key(&self, i: usize) -> &CellKey {
        &self.keys[i]
    }

    pub fn cell_index_of(&self, v: usize) -> usize {
        self.cell_of[v]
    }

    pub fn cell_of(&self, v: usize) -> &[usize] {
        &self.cells[self.cell_of[v]]
    }

    pub fn is_discrete(&self) -> bool {
        self.cells.len() == self.n
    }

    pub fn is_unit(&self) -> bool {
        self.cells.len() == 1
    }

    pub fn cell_sizes(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.len()).collect()
    }

    /// 0/1 indicator of cell i as a dense vector.
    pub fn indicator(&self, i: usize) -> Vector {
        let mut r = vec![0.0; self.n];
        for &v in &self.cells[i] {
            r[v] = 1.0;
        }
        r
    }

    /// True when every cell of self is contained in a cell of other.
    pub fn refines(&self, other: &Partition) -> bool {
        self.cells.iter().all(|c| {
            let target = other.cell_of[c[0]];
            c.iter().all(|&v| other.cell_of[v] == target)
        })
    }

    pub fn same_cells(&self, other: &Partition) -> bool {
        self.cells == other.cells
    }

    /// Relabels the ground set; `perm[v]` is the new name of v. Keys are
    /// untouched, which is exactly the invariance the engine relies on.
    pub fn permuted(&self, perm: &[usize]) -> Partition {
        let cells = self
            .keys
            .iter()
            .cloned()
            .zip(self.cells.iter().map(|c| c.iter().map(|&v| perm[v]).collect()))
            .collect();
        Partition::new(self.n, cells).unwrap()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "cells": self
                .cells
                .iter()
                .map(|c| c.iter().map(|&v| v + 1).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// Common refinement of two partitions. Cell keys concatenate the parents'
/// keys around a separator.
pub fn meet(p1: &Partition, p2: &Partition) -> Result<Partition> {
    if p1.n != p2.n {
        return Err(Error::Contract("meet: ground-set mismatch".into()));
    }
    let mut groups: std::collections::BTreeMap<(usize, usize), Vec<usize>> =
        std::collections::BTreeMap::new();
    for v in 0..p1.n {
        groups
            .entry((p1.cell_of[v], p2.cell_of[v]))
            .or_default()
            .push(v);
    }
    let cells = groups
        .into_iter()
        .map(|((i, j), members)| {
            let mut key = vec![stage::MEET];
            key.extend(&p1.keys[i]);
            key.push(stage::SEP);
            key.extend(&p2.keys[j]);
            (key, members)
        })
        .collect();
    Partition::new(p1.n, cells)
}

pub fn meet_many(parts: &[Partition]) -> Result<Partition> {
    let mut it = parts.iter();
    let first = it
        .next()
        .ok_or_else(|| Error::Contract("meet_many: empty input".into()))?;
    let mut acc = first.clone();
    for p in it {
        acc = meet(&acc, p)?;
    }
    Ok(acc)
}

/// Label-invariant stable-coloring ranks: vertices seeded with `seed`
/// ranks, refined by sorted neighbor-rank multisets until stable. Equal
/// outputs across a relabeling map to equal ranks.
pub fn stable_coloring_ranks(g: &Graph, seed: &[usize]) -> Vec<usize> {
    let n = g.n();
    let neighbors: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v)).collect();
    let mut colors: Vec<usize> = seed.to_vec();
    let mut classes = {
        let mut s = colors.clone();
        s.sort_unstable();
        s.dedup();
        s.len()
    };
    loop {
        let mut sigs: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = neighbors[v].iter().map(|&u| colors[u]).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let mut sorted = sigs.clone();
        sorted.sort();
        sorted.dedup();
        let new_colors: Vec<usize> = sigs
            .drain(..)
            .map(|s| sorted.binary_search(&s).unwrap())
            .collect();
        let new_classes = sorted.len();
        colors = new_colors;
        if new_classes == classes {
            return colors;
        }
        classes = new_classes;
    }
}

/// Coarsest equitable refinement (classic color refinement). Keys append
/// a label-invariant stable-coloring rank to the parent key.
pub fn refine_equitable(g: &Graph, p: &Partition) -> Partition {
    let n = g.n();
    // Exact cells: refine with cell indices as seeds.
    let exact = stable_coloring_ranks(g, &p.cell_of);
    // Invariant ranks: refine with key ranks as seeds (collapses cells that
    // share a key, so the result is constant on every exact class).
    let key_rank = {
        let mut distinct: Vec<&CellKey> = p.keys.iter().collect();
        distinct.sort();
        distinct.dedup();
        let per_cell: Vec<usize> = p
            .keys
            .iter()
            .map(|k| distinct.binary_search(&k).unwrap())
            .collect();
        let seeds: Vec<usize> = (0..n).map(|v| per_cell[p.cell_of[v]]).collect();
        stable_coloring_ranks(g, &seeds)
    };
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for v in 0..n {
        groups.entry(exact[v]).or_default().push(v);
    }
    let cells = groups
        .into_values()
        .map(|members| {
            let v0 = members[0];
            let mut key = vec![stage::EQUITABLE];
            key.extend(&p.keys[p.cell_of[v0]]);
            key.push(key_rank[v0] as i64);
            (key, members)
        })
        .collect();
    Partition::new(n, cells).expect("refinement preserves partition validity")
}

pub fn is_equitable(g: &Graph, p: &Partition) -> bool {
    for ci in p.cells() {
        for cj_idx in 0..p.num_cells() {
            let count = |v: usize| {
                g.neighbors(v)
                    .iter()
                    .filter(|&&u| p.cell_of[u] == cj_idx)
                    .count()
            };
            let want = count(ci[0]);
            if ci[1..].iter().any(|&v| count(v) != want) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct QuotientGraph {
    pub t: usize,
    /// b[i][j]: neighbors any vertex of cell i has inside cell j.
    pub b: Vec<Vec<usize>>,
}

pub fn quotient_graph(g: &Graph, p: &Partition) -> Result<QuotientGraph> {
    if !is_equitable(g, p) {
        return Err(Error::Contract(
            "quotient_graph requires an equitable partition".into(),
        ));
    }
    let t = p.num_cells();
    let mut b = vec![vec![0usize; t]; t];
    for (i, ci) in p.cells().iter().enumerate() {
        let v = ci[0];
        for u in g.neighbors(v) {
            b[i][p.cell_of[u]] += 1;
        }
    }
    Ok(QuotientGraph { t, b })
}

/// Spectral equitability test: for every eigenspace and every cell C_j,
/// the coordinates of proj(R_{C_j}) must be constant inside every cell.
pub fn is_equitable_spectral(d: &SpectralDecomposition, p: &Partition, tol: f64) -> bool {
    for l in 0..d.num_spaces() {
        let space = d.space(l);
        for j in 0..p.num_cells() {
            let w = space.project(&p.indicator(j));
            for ci in p.cells() {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for &v in ci {
                    lo = lo.min(w[v]);
                    hi = hi.max(w[v]);
                }
                if hi - lo > tol {
                    return false;
                }
            }
        }
    }
    true
}

/// Lifted eigenspace R_Pi V_lambda^{G/Pi}: quotient eigenvectors pushed up
/// to R^n, constant on cells. Zero subspace when lambda is missing from the
/// quotient spectrum.
pub fn lifted_eigenspace(
    g: &Graph,
    p: &Partition,
    d: &SpectralDecomposition,
    lambda_idx: usize,
    cfg: &Config,
) -> Result<Subspace> {
    let q = quotient_graph(g, p)?;
    let t = q.t;
    // The quotient matrix B is not symmetric, but S B S^{-1} is, where
    // S = diag(sqrt(|C_i|)); solve the symmetric problem and scale back.
    let sizes: Vec<f64> = p.cell_sizes().iter().map(|&s| s as f64).collect();
    let mut m = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in 0..t {
            m[i][j] = q.b[i][j] as f64 * (sizes[i] / sizes[j]).sqrt();
        }
    }
    // Solve to near machine precision; see the matching comment in
    // eigendecompose for why the solver tolerance sits below cfg.eps_res.
    let (vals, vecs) = linalg::jacobi_eigen(&m, 100, 1e-14 * d.a_norm().max(1.0))?;
    let lambda = d.eigenvalues()[lambda_idx];
    let ctol = cfg.abs_cluster_tol(d.a_norm());
    let mut lifted = Vec::new();
    for (val, y) in vals.iter().zip(&vecs) {
        if (val - lambda).abs() <= ctol {
            // x = S^{-1} y is a B-eigenvector; lift constant on cells.
            let mut u = vec![0.0; p.n()];
            for (i, cell) in p.cells().iter().enumerate() {
                let xi = y[i] / sizes[i].sqrt();
                for &v in cell {
                    u[v] = xi;
                }
            }
            lifted.push(u);
        }
    }
    Ok(subspace::span_of(p.n(), &lifted, cfg.rank_tol))
}

/// Y_{lambda,Pi} = V_lambda minus its lifted part.
pub fn lifted_complement(
    g: &Graph,
    p: &Partition,
    d: &SpectralDecomposition,
    lambda_idx: usize,
    cfg: &Config,
) -> Result<Subspace> {
    let lifted = lifted_eigenspace(g, p, d, lambda_idx, cfg)?;
    Ok(subspace::ominus(d.space(lambda_idx), &lifted, cfg.tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrthogonalityReport {
    pub projection_constant: bool,
    pub orthogonal: bool,
}

/// For two non-singleton cells of an equitable partition: whether the
/// projections of C2's basis vectors onto span{Y_{lambda,Pi} : C1} are
/// constant, and whether the two per-cell spans are orthogonal. The two
/// booleans are expected to coincide; the report returns both.
pub fn cell_orthogonality_report(
    g: &Graph,
    d: &SpectralDecomposition,
    p: &Partition,
    c1_idx: usize,
    c2_idx: usize,
    cfg: &Config,
) -> Result<OrthogonalityReport> {
    if p.cell(c1_idx).len() < 2 || p.cell(c2_idx).len() < 2 {
        return Err(Error::Contract(
            "cell_orthogonality_report requires non-singleton cells".into(),
        ));
    }
    if !is_equitable(g, p) {
        return Err(Error::Contract(
            "cell_orthogonality_report requires an equitable partition".into(),
        ));
    }
    let tol = cfg.abs_tol(d.a_norm());
    let mut constant = true;
    let mut orthogonal = true;
    for l in 0..d.num_spaces() {
        let y = lifted_complement(g, p, d, l, cfg)?;
        let span_cell = |cell: &[usize]| {
            let vs: Vec<Vector> = cell
                .iter()
                .map(|&x| {
                    let mut e = vec![0.0; p.n()];
                    e[x] = 1.0;
                    y.project(&e)
                })
                .collect();
            // Unit-vector projections: below an absolute cutoff they are
            // cancellation noise, which a relative cutoff would normalize
            // into a spurious direction.
            Subspace::from_orthonormal(p.n(), linalg::orthonormalize_abs(&vs, 1e-8))
        };
        let s1 = span_cell(p.cell(c1_idx));
        let s2 = span_cell(p.cell(c2_idx));
        // Constancy of proj_{s1}(e_u) over u in C2.
        let projs: Vec<Vector> = p
            .cell(c2_idx)
            .iter()
            .map(|&u| {
                let mut e = vec![0.0; p.n()];
                e[u] = 1.0;
                s1.project(&e)
            })
            .collect();
        for w in projs.windows(2) {
            if linalg::norm(&linalg::sub(&w[0], &w[1])) > tol {
                constant = false;
            }
        }
        for b1 in s1.basis() {
            for b2 in s2.basis() {
                if linalg::dot(b1, b2).abs() > tol {
                    orthogonal = false;
                }
            }
        }
    }
    Ok(OrthogonalityReport { projection_constant: constant, orthogonal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;
    use crate::spectral::decompose_graph;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn meet_examples() {
        let p1 = Partition::from_cells(3, vec![vec![0, 1], vec![2]]).unwrap();
        let p2 = Partition::from_cells(3, vec![vec![0], vec![1, 2]]).unwrap();
        let m = meet(&p1, &p2).unwrap();
        assert!(m.is_discrete());
        let unit = Partition::unit(3);
        let m2 = meet(&p1, &unit).unwrap();
        assert!(m2.same_cells(&p1));
        let m3 = meet(&p1, &p1).unwrap();
        assert!(m3.same_cells(&p1));
    }

    #[test]
    fn meet_algebra_small() {
        // Associativity/commutativity/idempotence on cell contents for a
        // spread of partitions of [4].
        let parts = [
            Partition::unit(4),
            Partition::discrete(4),
            Partition::from_cells(4, vec![vec![0, 1], vec![2, 3]]).unwrap(),
            Partition::from_cells(4, vec![vec![0, 2], vec![1, 3]]).unwrap(),
            Partition::from_cells(4, vec![vec![0], vec![1, 2, 3]]).unwrap(),
        ];
        for a in &parts {
            assert!(meet(a, a).unwrap().same_cells(a));
            for b in &parts {
                let ab = meet(a, b).unwrap();
                let ba = meet(b, a).unwrap();
                assert!(ab.same_cells(&ba));
                for c in &parts {
                    let l = meet(&ab, c).unwrap();
                    let r = meet(a, &meet(b, c).unwrap()).unwrap();
                    assert!(l.same_cells(&r));
                }
            }
        }
    }

    #[test]
    fn refine_p3_by_degree() {
        let g = graph::path(3);
        let r = refine_equitable(&g, &Partition::unit(3));
        assert_eq!(r.cells(), &[vec![1], vec![0, 2]]);
        assert!(is_equitable(&g, &r));
    }

    #[test]
    fn refine_fixpoints() {
        let g = graph::cycle(6).unwrap();
        let r = refine_equitable(&g, &Partition::unit(6));
        assert!(r.is_unit(), "regular graph stays unrefined");
        let d = Partition::discrete(6);
        assert!(refine_equitable(&g, &d).is_discrete());
    }

    #[test]
    fn quotient_examples() {
        let cube = graph::cube();
        let q = quotient_graph(&cube, &Partition::unit(8)).unwrap();
        assert_eq!(q.b, vec![vec![3]]);

        let k4 = graph::complete(4);
        let p = Partition::from_cells(4, vec![vec![0], vec![1, 2, 3]]).unwrap();
        let q = quotient_graph(&k4, &p).unwrap();
        assert_eq!(q.b, vec![vec![0, 3], vec![1, 2]]);

        let p3 = graph::path(3);
        let p = Partition::from_cells(3, vec![vec![0, 2], vec![1]]).unwrap();
        // Canonical order puts the singleton {2} first.
        assert_eq!(p.cells(), &[vec![1], vec![0, 2]]);
        let q = quotient_graph(&p3, &p).unwrap();
        assert_eq!(q.b, vec![vec![0, 2], vec![1, 0]]);

        let bad = Partition::from_cells(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert!(quotient_graph(&p3, &bad).is_err());
    }

    #[test]
    fn spectral_equitability_spot_checks() {
        let g = graph::path(3);
        let d = decompose_graph(&g, &cfg()).unwrap();
        assert!(is_equitable_spectral(&d, &Partition::discrete(3), 1e-7));
        let bad = Partition::from_cells(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert!(!is_equitable_spectral(&d, &bad, 1e-7));
        let good = Partition::from_cells(3, vec![vec![0, 2], vec![1]]).unwrap();
        assert!(is_equitable_spectral(&d, &good, 1e-7));
    }

    #[test]
    fn lifted_spaces_k4() {
        let g = graph::complete(4);
        let d = decompose_graph(&g, &cfg()).unwrap();
        let unit = Partition::unit(4);
        let l0 = lifted_eigenspace(&g, &unit, &d, 0, &cfg()).unwrap();
        assert_eq!(l0.dim(), 1);
        assert!(l0.contains_vector(&vec![0.5; 4], 1e-9));
        let l1 = lifted_eigenspace(&g, &unit, &d, 1, &cfg()).unwrap();
        assert!(l1.is_zero());
    }

    #[test]
    fn lifted_space_discrete_is_full_eigenspace() {
        let g = graph::cycle(5).unwrap();
        let d = decompose_graph(&g, &cfg()).unwrap();
        let disc = Partition::discrete(5);
        for l in 0..d.num_spaces() {
            let lifted = lifted_eigenspace(&g, &disc, &d, l, &cfg()).unwrap();
            assert!(subspace::subspace_equal(&lifted, d.space(l), 1e-7));
        }
    }

    #[test]
    fn lifted_antipodal_cube() {
        // Antipodal pairs under the bit labeling: k pairs with 9-k (1-based),
        // i.e. 0-based {i, 7-i}.
        let g = graph::cube();
        let d = decompose_graph(&g, &cfg()).unwrap();
        let p = Partition::from_cells(8, (0..4).map(|i| vec![i, 7 - i]).collect()).unwrap();
        assert!(is_equitable(&g, &p));
        for l in 0..d.num_spaces() {
            let lifted = lifted_eigenspace(&g, &p, &d, l, &cfg()).unwrap();
            for b in lifted.basis() {
                assert!(
                    d.space(l).contains_vector(b, 1e-7),
                    "lifted vector escapes its eigenspace"
                );
            }
        }
        // Eq.-(2)-style check: (1/|C|) R_C = sum over lambda of the lifted
        // projections of e_c.
        for (i, cell) in p.cells().iter().enumerate() {
            for &c in cell {
                let mut e = vec![0.0; 8];
                e[c] = 1.0;
                let mut s = vec![0.0; 8];
                for l in 0..d.num_spaces() {
                    let lifted = lifted_eigenspace(&g, &p, &d, l, &cfg()).unwrap();
                    let pr = lifted.project(&e);
                    for k in 0..8 {
                        s[k] += pr[k];
                    }
                }
                let want = p.indicator(i);
                for k in 0..8 {
                    assert!((s[k] - want[k] / cell.len() as f64).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn orthogonality_report_disjoint_squares() {
        let c4 = graph::cycle(4).unwrap();
        let g = graph::disjoint_union(&c4, &c4);
        let d = decompose_graph(&g, &cfg()).unwrap();
        let p = Partition::from_cells(8, vec![(0..4).collect(), (4..8).collect()]).unwrap();
        let r = cell_orthogonality_report(&g, &d, &p, 0, 1, &cfg()).unwrap();
        assert!(r.projection_constant && r.orthogonal);
    }

    #[test]
    fn orthogonality_report_c6_parity() {
        let g = graph::cycle(6).unwrap();
        let d = decompose_graph(&g, &cfg()).unwrap();
        let p = Partition::from_cells(6, vec![vec![0, 2, 4], vec![1, 3, 5]]).unwrap();
        let r = cell_orthogonality_report(&g, &d, &p, 0, 1, &cfg()).unwrap();
        assert!(!r.projection_constant && !r.orthogonal);
    }

    #[test]
    fn orthogonality_report_rejects_singletons() {
        let g = graph::path(3);
        let d = decompose_graph(&g, &cfg()).unwrap();
        let p = Partition::from_cells(3, vec![vec![0, 2], vec![1]]).unwrap();
        assert!(cell_orthogonality_report(&g, &d, &p, 0, 1, &cfg()).is_err());
    }

    #[test]
    fn keys_survive_relabeling() {
        let g = graph::path(4);
        let r = refine_equitable(&g, &Partition::unit(4));
        let perm = [3, 1, 2, 0];
        let h = g.permuted(&perm);
        let rh = refine_equitable(&h, &Partition::unit(4));
        let keys_a: Vec<_> = (0..r.num_cells()).map(|i| r.key(i).clone()).collect();
        let keys_b: Vec<_> = (0..rh.num_cells()).map(|i| rh.key(i).clone()).collect();
        assert_eq!(keys_a, keys_b);
    }
}
