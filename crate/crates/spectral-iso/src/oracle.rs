//! Brute-force permutation-group ground truth: automorphism groups by
//! backtracking, orbits, stabilizers, fastening sequences, minimal block
//! systems, and the direct orbit-subspace equation check.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::{self, Partition};
use crate::spectral::SpectralDecomposition;
use crate::subspace::{self, Subspace};

pub type Perm = Vec<usize>;

/// Full enumeration is kept only up to this many elements.
pub const ELEMENT_CAP: usize = 1_000_000;

pub fn identity(n: usize) -> Perm {
    (0..n).collect()
}

pub fn compose(a: &Perm, b: &Perm) -> Perm {
    // (a * b)(x) = a(b(x))
    b.iter().map(|&x| a[x]).collect()
}

pub fn inverse(a: &Perm) -> Perm {
    let mut inv = vec![0; a.len()];
    for (i, &x) in a.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// One-line cycle notation, 1-based, for reports.
pub fn cycle_notation(p: &Perm) -> String {
    let n = p.len();
    let mut seen = vec![false; n];
    let mut out = String::new();
    for s in 0..n {
        if seen[s] || p[s] == s {
            seen[s] = true;
            continue;
        }
        out.push('(');
        let mut x = s;
        let mut first = true;
        while !seen[x] {
            seen[x] = true;
            if !first {
                out.push(' ');
            }
            out.push_str(&(x + 1).to_string());
            first = false;
            x = p[x];
        }
        out.push(')');
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}

#[derive(Debug, Clone)]
pub struct PermGroup {
    pub n: usize,
    pub generators: Vec<Perm>,
    pub order: u128,
    elements: Option<Vec<Perm>>,
}

impl PermGroup {
    pub fn trivial(n: usize) -> PermGroup {
        PermGroup {
            n,
            generators: vec![],
            order: 1,
            elements: Some(vec![identity(n)]),
        }
    }

    /// All elements when the group is small enough to list.
    pub fn elements(&self) -> Option<&[Perm]> {
        self.elements.as_deref()
    }

    pub fn orbits(&self) -> Partition {
        let mut uf = UnionFind::new(self.n);
        for g in &self.generators {
            for v in 0..self.n {
                uf.union(v, g[v]);
            }
        }
        Partition::from_cells(self.n, uf.classes()).expect("orbits partition")
    }

    pub fn orbit_of(&self, v: usize) -> Vec<usize> {
        self.orbits().cell_of(v).to_vec()
    }

    pub fn is_transitive_on(&self, t: &[usize]) -> bool {
        let orb = self.orbit_of(t[0]);
        t.iter().all(|v| orb.contains(v))
    }

    /// Pointwise stabilizer, by filtering the enumerated elements.
    pub fn stabilizer(&self, seq: &[usize]) -> Result<PermGroup> {
        let elems = self.elements.as_ref().ok_or_else(|| {
            Error::OracleCap { n: self.n, cap: ELEMENT_CAP }
        })?;
        let kept: Vec<Perm> = elems
            .iter()
            .filter(|p| seq.iter().all(|&v| p[v] == v))
            .cloned()
            .collect();
        Ok(PermGroup {
            n: self.n,
            order: kept.len() as u128,
            generators: kept.iter().filter(|p| **p != identity(self.n)).cloned().collect(),
            elements: Some(kept),
        })
    }

    /// Setwise stabilizer, by filtering the enumerated elements.
    pub fn setwise_stabilizer(&self, set: &[usize]) -> Result<PermGroup> {
        let elems = self.elements.as_ref().ok_or_else(|| {
            Error::OracleCap { n: self.n, cap: ELEMENT_CAP }
        })?;
        let mark: std::collections::BTreeSet<usize> = set.iter().copied().collect();
        let kept: Vec<Perm> = elems
            .iter()
            .filter(|p| set.iter().all(|&v| mark.contains(&p[v])))
            .cloned()
            .collect();
        Ok(PermGroup {
            n: self.n,
            order: kept.len() as u128,
            generators: kept.iter().filter(|p| **p != identity(self.n)).cloned().collect(),
            elements: Some(kept),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "order": self.order.to_string(),
            "generators": self.generators.iter().map(|g| cycle_notation(g)).collect::<Vec<_>>(),
            "orbits": self.orbits().to_json()["cells"],
        })
    }
}

pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }

    pub fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut map: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for v in 0..n {
            let r = self.find(v);
            map.entry(r).or_default().push(v);
        }
        map.into_values().collect()
    }
}

/// Finds one automorphism extending the pinned pairs (v -> w), or None.
fn find_extension(g: &Graph, pinned: &[(usize, usize)]) -> Option<Perm> {
    let n = g.n();
    let mut map: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];
    for &(v, w) in pinned {
        if g.degree(v) != g.degree(w) {
            return None;
        }
        if let Some(prev) = map[v] {
            if prev != w {
                return None;
            }
            continue;
        }
        if used[w] {
            return None;
        }
        // Consistency with earlier pins.
        for &(v2, w2) in pinned {
            if map[v2] == Some(w2) && g.has_edge(v, v2) != g.has_edge(w, w2) {
                return None;
            }
        }
        map[v] = Some(w);
        used[w] = true;
    }
    fn rec(g: &Graph, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>) -> bool {
        let n = g.n();
        let v = match (0..n).find(|&v| map[v].is_none()) {
            None => return true,
            Some(v) => v,
        };
        for w in 0..n {
            if used[w] || g.degree(v) != g.degree(w) {
                continue;
            }
            let ok = (0..n).all(|u| match map[u] {
                Some(mu) => g.has_edge(v, u) == g.has_edge(w, mu),
                None => true,
            });
            if !ok {
                continue;
            }
            map[v] = Some(w);
            used[w] = true;
            if rec(g, map, used) {
                return true;
            }
            map[v] = None;
            used[w] = false;
        }
        false
    }
    if rec(g, &mut map, &mut used) {
        Some(map.into_iter().map(|x| x.unwrap()).collect())
    } else {
        None
    }
}

/// Brute-force isomorphism search between two graphs: backtracking over
/// degree-compatible assignments, vertices of `g` mapped in id order.
/// Returns one isomorphism or None. Ground truth at small orders.
pub fn isomorphism_by_enumeration(g: &Graph, h: &Graph) -> Option<Perm> {
    if g.n() != h.n() || g.edge_count() != h.edge_count() {
        return None;
    }
    let mut dg = g.degree_sequence();
    let mut dh = h.degree_sequence();
    dg.sort_unstable();
    dh.sort_unstable();
    if dg != dh {
        return None;
    }
    let n = g.n();
    fn rec(g: &Graph, h: &Graph, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>) -> bool {
        let n = g.n();
        let v = match (0..n).find(|&v| map[v].is_none()) {
            None => return true,
            Some(v) => v,
        };
        for w in 0..n {
            if used[w] || g.degree(v) != h.degree(w) {
                continue;
            }
            let ok = (0..n).all(|u| match map[u] {
                Some(mu) => g.has_edge(v, u) == h.has_edge(w, mu),
                None => true,
            });
            if !ok {
                continue;
            }
            map[v] = Some(w);
            used[w] = true;
            if rec(g, h, map, used) {
                return true;
            }
            map[v] = None;
            used[w] = false;
        }
        false
    }
    let mut map = vec![None; n];
    let mut used = vec![false; n];
    if rec(g, h, &mut map, &mut used) {
        Some(map.into_iter().map(|x| x.unwrap()).collect())
    } else {
        None
    }
}

/// Brute-force automorphism group: order via the orbit-stabilizer chain on
/// base points 0,1,2,..., generators from the orbit witnesses, and a full
/// element listing when the order is at most ELEMENT_CAP.
pub fn automorphism_group(g: &Graph, cfg: &Config) -> Result<PermGroup> {
    let n = g.n();
    if n > cfg.oracle_cap {
        return Err(Error::OracleCap { n, cap: cfg.oracle_cap });
    }
    let mut order: u128 = 1;
    let mut generators: Vec<Perm> = Vec::new();
    let mut pinned: Vec<(usize, usize)> = Vec::new();
    for b in 0..n {
        let mut orbit_size = 1u128;
        for w in 0..n {
            if w == b {
                continue;
            }
            let mut pins = pinned.clone();
            pins.push((b, w));
            if let Some(witness) = find_extension(g, &pins) {
                orbit_size += 1;
                generators.push(witness);
            }
        }
        order *= orbit_size;
        pinned.push((b, b));
    }
    let elements = if order <= ELEMENT_CAP as u128 {
        let elems = close_under_products(n, &generators, ELEMENT_CAP);
        debug_assert_eq!(elems.len() as u128, order);
        Some(elems)
    } else {
        None
    };
    Ok(PermGroup { n, generators, order, elements })
}

fn close_under_products(n: usize, gens: &[Perm], cap: usize) -> Vec<Perm> {
    let mut set: std::collections::BTreeSet<Perm> = std::collections::BTreeSet::new();
    set.insert(identity(n));
    let mut queue: Vec<Perm> = vec![identity(n)];
    while let Some(p) = queue.pop() {
        for g in gens {
            let q = compose(g, &p);
            if set.len() >= cap && !set.contains(&q) {
                return set.into_iter().collect();
            }
            if set.insert(q.clone()) {
                queue.push(q);
            }
        }
    }
    set.into_iter().collect()
}

/// Greedy fastening sequence: fix a vertex from a non-trivial orbit of the
/// running stabilizer until the stabilizer is trivial. Returns the chosen
/// vertices and the orbit partitions after each fix.
pub fn fastening_sequence(group: &PermGroup) -> Result<(Vec<usize>, Vec<Partition>)> {
    let mut seq = Vec::new();
    let mut chain = Vec::new();
    let mut current = group.clone();
    while current.order > 1 {
        let orbits = current.orbits();
        let v = orbits
            .cells()
            .iter()
            .filter(|c| c.len() > 1)
            .map(|c| c[0])
            .min()
            .ok_or_else(|| Error::Contract("non-trivial group with trivial orbits".into()))?;
        seq.push(v);
        current = current.stabilizer(&[v])?;
        chain.push(current.orbits());
    }
    Ok((seq, chain))
}

/// Minimal block system containing the seed pair {a, b}, by the classic
/// union-find algorithm. Blocks are returned restricted to the orbit of a.
pub fn minimal_blocks(group: &PermGroup, a: usize, b: usize) -> Result<Vec<Vec<usize>>> {
    let t = group.orbit_of(a);
    if !t.contains(&b) || a == b {
        return Err(Error::Contract(
            "minimal_blocks needs two distinct points of one orbit".into(),
        ));
    }
    let mut uf = UnionFind::new(group.n);
    uf.union(a, b);
    let mut queue = vec![(a, b)];
    while let Some((u, v)) = queue.pop() {
        for g in &group.generators {
            let (x, y) = (g[u], g[v]);
            if uf.find(x) != uf.find(y) {
                uf.union(x, y);
                queue.push((x, y));
            }
        }
    }
    let tset: std::collections::BTreeSet<usize> = t.iter().copied().collect();
    let blocks: Vec<Vec<usize>> = uf
        .classes()
        .into_iter()
        .map(|c| c.into_iter().filter(|v| tset.contains(v)).collect::<Vec<_>>())
        .filter(|c: &Vec<usize>| !c.is_empty())
        .collect();
    Ok(blocks)
}

/// Is `b` a block for the group: every generator maps it onto itself or
/// clear of itself. Sufficient to check generators.
pub fn is_block(group: &PermGroup, b: &[usize]) -> bool {
    let bset: std::collections::BTreeSet<usize> = b.iter().copied().collect();
    // Blocks are preserved by products, so generator images reached by
    // breadth-first closure all need the all-or-nothing property.
    let mut seen: std::collections::BTreeSet<Vec<usize>> = std::collections::BTreeSet::new();
    let mut queue = vec![b.to_vec()];
    while let Some(cur) = queue.pop() {
        if !seen.insert(cur.clone()) {
            continue;
        }
        for g in &group.generators {
            let mut img: Vec<usize> = cur.iter().map(|&v| g[v]).collect();
            img.sort_unstable();
            let inter = img.iter().filter(|v| bset.contains(v)).count();
            if inter != 0 && inter != b.len() {
                return false;
            }
            queue.push(img);
        }
    }
    true
}

/// A maximal chain of block systems on the orbit `t`, finest to coarsest,
/// excluding the discrete system and including {t} last when |t| > 1.
pub fn block_system_chain(group: &PermGroup, t: &[usize]) -> Result<Vec<Vec<Vec<usize>>>> {
    let mut chain: Vec<Vec<Vec<usize>>> = Vec::new();
    // Current system, as sorted blocks; starts discrete.
    let mut current: Vec<Vec<usize>> = t.iter().map(|&v| vec![v]).collect();
    while current.len() > 1 {
        // Quotient action on blocks of `current`.
        let block_of = |v: usize| current.iter().position(|b| b.contains(&v)).unwrap();
        let m = current.len();
        let quo_gens: Vec<Perm> = group
            .generators
            .iter()
            .map(|g| {
                (0..m)
                    .map(|i| block_of(g[current[i][0]]))
                    .collect::<Perm>()
            })
            .collect();
        let quo = PermGroup {
            n: m,
            generators: quo_gens,
            order: 0, // order unused below
            elements: None,
        };
        // Among the nontrivial minimal systems of the quotient, prefer one
        // whose lift is regular under the full group (regular levels carry
        // the usable coset witnesses), then smallest blocks. Without the
        // preference a non-regular pairs system can shadow a regular one of
        // larger block size, e.g. antipodal pairs vs triples on a hexagon.
        let lift = |blocks: &[Vec<usize>]| -> Vec<Vec<usize>> {
            let mut lifted: Vec<Vec<usize>> = blocks
                .iter()
                .map(|qb| {
                    let mut s: Vec<usize> =
                        qb.iter().flat_map(|&i| current[i].iter().copied()).collect();
                    s.sort_unstable();
                    s
                })
                .collect();
            lifted.sort();
            lifted
        };
        let mut best: Option<(Vec<Vec<usize>>, (bool, usize, Vec<usize>))> = None;
        for b2 in 1..m {
            let blocks = minimal_blocks(&quo, 0, b2)?;
            if blocks.len() == 1 {
                continue; // collapses to the full orbit; keep as fallback
            }
            let lifted = lift(&blocks);
            let regular = system_is_regular(group, &lifted).unwrap_or(false);
            let key = (!regular, lifted[0].len(), lifted[0].clone());
            if best.as_ref().is_none_or(|(_, k)| key < *k) {
                best = Some((lifted, key));
            }
        }
        let lifted = match best {
            Some((l, _)) => l,
            None => lift(&[(0..m).collect::<Vec<usize>>()]),
        };
        chain.push(lifted.clone());
        current = lifted;
    }
    Ok(chain)
}

/// Whether the induced action on a block system is regular: any element
/// fixing one block setwise fixes every block setwise. Needs enumeration.
pub fn system_is_regular(group: &PermGroup, system: &[Vec<usize>]) -> Result<bool> {
    let elems = group
        .elements()
        .ok_or(Error::OracleCap { n: group.n, cap: ELEMENT_CAP })?;
    let sets: Vec<std::collections::BTreeSet<usize>> = system
        .iter()
        .map(|b| b.iter().copied().collect())
        .collect();
    for p in elems {
        let mut fixed_any = false;
        let mut moved_any = false;
        for s in &sets {
            let img: std::collections::BTreeSet<usize> = s.iter().map(|&v| p[v]).collect();
            if img == *s {
                fixed_any = true;
            } else {
                moved_any = true;
            }
        }
        if fixed_any && moved_any {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct OrbitEquationReport {
    pub lhs_dim: usize,
    pub rhs_dim: usize,
    pub equal: bool,
    pub gammas_used: usize,
}

/// Verifies, for one orbit T and one eigenvalue index, that the lifted
/// eigenspace of the orbit partition equals the intersection of the lifted
/// stabilizer spaces over T with the fixed spaces of the gamma witnesses
/// derived from regular block systems.
pub fn verify_orbit_equation(
    g: &Graph,
    d: &SpectralDecomposition,
    group: &PermGroup,
    t: &[usize],
    lambda_idx: usize,
    cfg: &Config,
) -> Result<OrbitEquationReport> {
    let n = g.n();
    let orbit_partition = group.orbits();
    let lhs = partition::lifted_eigenspace(g, &orbit_partition, d, lambda_idx, cfg)?;

    let mut rhs = Subspace::full(n);
    for &tv in t {
        let stab = group.stabilizer(&[tv])?;
        let lifted = partition::lifted_eigenspace(g, &stab.orbits(), d, lambda_idx, cfg)?;
        rhs = subspace::intersect(&rhs, &lifted, cfg.tol);
    }

    // Regular systems along a maximal block chain, finest to coarsest.
    // The singleton system heads the chain: its gamma is the witness that
    // moves the anchor itself while fixing the next block level.
    let systems: Vec<Vec<Vec<usize>>> = if t.len() > 1 {
        let singleton: Vec<Vec<usize>> = t.iter().map(|&v| vec![v]).collect();
        std::iter::once(singleton)
            .chain(block_system_chain(group, t)?)
            .filter(|s| s.len() > 1)
            .filter(|s| system_is_regular(group, s).unwrap_or(false))
            .collect()
    } else {
        vec![]
    };

    let elems = group
        .elements()
        .ok_or(Error::OracleCap { n, cap: ELEMENT_CAP })?;
    let anchor = t[0];
    let block_containing = |system: &[Vec<usize>], v: usize| -> Vec<usize> {
        system.iter().find(|b| b.contains(&v)).unwrap().clone()
    };
    let moves_set = |p: &Perm, s: &[usize]| -> bool {
        let img: std::collections::BTreeSet<usize> = s.iter().map(|&v| p[v]).collect();
        img != s.iter().copied().collect()
    };

    // Valid gamma choices per regular system: move the anchor's block of
    // this system, fix the anchor's block of the next regular system.
    let mut gamma_candidates: Vec<Vec<&Perm>> = Vec::new();
    for (j, system) in systems.iter().enumerate() {
        let b_here = block_containing(system, anchor);
        let b_next: Option<Vec<usize>> =
            systems.get(j + 1).map(|s| block_containing(s, anchor));
        let cands: Vec<&Perm> = elems
            .iter()
            .filter(|p| moves_set(p, &b_here))
            .filter(|p| match &b_next {
                Some(bn) => !moves_set(p, bn),
                None => true,
            })
            .collect();
        gamma_candidates.push(cands);
    }

    let eval = |choice: &[&Perm]| -> Subspace {
        let mut acc = rhs.clone();
        for gamma in choice {
            acc = subspace::intersect(&acc, &subspace::fixed_subspace(gamma), cfg.tol);
        }
        acc
    };

    let first_choice: Vec<&Perm> = gamma_candidates
        .iter()
        .filter_map(|c| c.first().copied())
        .collect();
    let mut final_rhs = eval(&first_choice);
    let mut equal = subspace::subspace_equal(&lhs, &final_rhs, 1e-7);
    let mut used = 1;
    if !equal && !gamma_candidates.is_empty() {
        // Deterministic stride through alternative valid choices.
        for attempt in 1..=10 {
            let choice: Vec<&Perm> = gamma_candidates
                .iter()
                .filter(|c| !c.is_empty())
                .map(|c| c[(attempt * 7) % c.len()])
                .collect();
            let cand = eval(&choice);
            used += 1;
            if subspace::subspace_equal(&lhs, &cand, 1e-7) {
                final_rhs = cand;
                equal = true;
                break;
            }
        }
    }
    Ok(OrbitEquationReport {
        lhs_dim: lhs.dim(),
        rhs_dim: final_rhs.dim(),
        equal,
        gammas_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph;
    use crate::spectral::decompose_graph;

    fn cfg() -> Config {
        Config::default()
    }

    fn aut(g: &Graph) -> PermGroup {
        automorphism_group(g, &cfg()).unwrap()
    }

    #[test]
    fn known_orders() {
        assert_eq!(aut(&graph::path(3)).order, 2);
        assert_eq!(aut(&graph::complete(5)).order, 120);
        assert_eq!(aut(&graph::cycle(6).unwrap()).order, 12);
        assert_eq!(aut(&graph::cube()).order, 48);
        assert_eq!(aut(&graph::petersen()).order, 120);
        assert_eq!(aut(&graph::complete_bipartite(2, 3)).order, 12);
    }

    #[test]
    fn p3_generator_is_the_reflection() {
        let g = aut(&graph::path(3));
        assert!(g.generators.contains(&vec![2, 1, 0]));
    }

    #[test]
    fn cube_stabilizer_orbits() {
        let g = aut(&graph::cube());
        let s = g.stabilizer(&[0]).unwrap();
        assert_eq!(s.order, 6);
        let cells = s.orbits();
        assert_eq!(
            cells.cells(),
            &[vec![0], vec![7], vec![1, 2, 4], vec![3, 5, 6]]
        );
    }

    #[test]
    fn orbit_partitions_are_equitable() {
        for spec in ["cube", "petersen", "path:5", "star:4", "cycle:7"] {
            let g = graph::generate_named(spec).unwrap();
            let a = aut(&g);
            assert!(partition::is_equitable(&g, &a.orbits()), "{spec}");
            for v in 0..g.n().min(3) {
                let s = a.stabilizer(&[v]).unwrap();
                assert!(partition::is_equitable(&g, &s.orbits()), "{spec} stab {v}");
            }
        }
    }

    #[test]
    fn fastening_k4() {
        let a = aut(&graph::complete(4));
        let (seq, chain) = fastening_sequence(&a).unwrap();
        assert_eq!(seq.len(), 3);
        assert!(chain.last().unwrap().is_discrete());
    }

    #[test]
    fn minimal_blocks_cycles() {
        let c4 = aut(&graph::cycle(4).unwrap());
        let blocks = minimal_blocks(&c4, 0, 2).unwrap();
        assert_eq!(blocks, vec![vec![0, 2], vec![1, 3]]);

        let c5 = aut(&graph::cycle(5).unwrap());
        let blocks = minimal_blocks(&c5, 0, 1).unwrap();
        assert_eq!(blocks.len(), 1);

        let c6 = aut(&graph::cycle(6).unwrap());
        let blocks = minimal_blocks(&c6, 0, 3).unwrap();
        assert_eq!(blocks, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        for b in &blocks {
            assert!(is_block(&c6, b));
        }
    }

    #[test]
    fn stabilizer_lattice_spot_check() {
        // Nested blocks have nested setwise stabilizers.
        let c6 = aut(&graph::cycle(6).unwrap());
        let b1 = vec![0, 3];
        let b2 = vec![0, 1, 2, 3, 4, 5];
        let s1 = c6.setwise_stabilizer(&b1).unwrap();
        let s2 = c6.setwise_stabilizer(&b2).unwrap();
        assert!(s1.order <= s2.order);
        let e2: std::collections::BTreeSet<_> =
            s2.elements().unwrap().iter().cloned().collect();
        for p in s1.elements().unwrap() {
            assert!(e2.contains(p));
        }
    }

    #[test]
    fn orbit_equation_k3() {
        let g = graph::complete(3);
        let d = decompose_graph(&g, &cfg()).unwrap();
        let a = aut(&g);
        let t: Vec<usize> = (0..3).collect();
        // lambda = -1 is eigenvalue index 1; both sides must be zero.
        let r = verify_orbit_equation(&g, &d, &a, &t, 1, &cfg()).unwrap();
        assert!(r.equal);
        assert_eq!((r.lhs_dim, r.rhs_dim), (0, 0));
    }

    #[test]
    fn orbit_equation_c4_all_lambdas() {
        let g = graph::cycle(4).unwrap();
        let d = decompose_graph(&g, &cfg()).unwrap();
        let a = aut(&g);
        let t: Vec<usize> = (0..4).collect();
        for l in 0..d.num_spaces() {
            let r = verify_orbit_equation(&g, &d, &a, &t, l, &cfg()).unwrap();
            assert!(r.equal, "lambda index {l}: {r:?}");
        }
    }

    #[test]
    fn oracle_cap_enforced() {
        let g = graph::complete(13);
        assert!(matches!(
            automorphism_group(&g, &cfg()),
            Err(Error::OracleCap { .. })
        ));
    }

    #[test]
    fn cycle_notation_format() {
        assert_eq!(cycle_notation(&vec![0, 1, 2]), "()");
        assert_eq!(cycle_notation(&vec![1, 0, 2]), "(1 2)");
        assert_eq!(cycle_notation(&vec![1, 2, 0]), "(1 2 3)");
    }
}
