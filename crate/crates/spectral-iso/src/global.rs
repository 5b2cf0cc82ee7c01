//! Global structure: the uniform partition aggregated from all per-vertex
//! partitions, bipartite/multipartite partition graphs and their component
//! blocks, the primitivity test, block-candidate selection with the
//! pseudo-block digraph, block-anchored partitions, and the orthogonal
//! subspace cascade of an equitable partition.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::balanced::{self, BalancedPartition};
use crate::config::Config;
use crate::error::Result;
use crate::graph::Graph;
use crate::linalg::{self, Vector};
use crate::oracle::UnionFind;
use crate::partition::{self, stage, CellKey, Partition};
use crate::quantize;
use crate::region;
use crate::spectral::{EigenTables, SpectralDecomposition};
use crate::subspace::{self, Subspace};

/// The uniform partition together with the per-vertex partitions it was
/// aggregated from (index v holds the partition anchored at v).
#[derive(Debug, Clone)]
pub struct UniformPartition {
    pub partition: Partition,
    pub vertex_partitions: Vec<BalancedPartition>,
}

impl UniformPartition {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "partition": self.partition.to_json(),
            "vertex_partitions": self.vertex_partitions.iter()
                .map(|bp| bp.partition.to_json())
                .collect::<Vec<_>>(),
        })
    }
}

/// Canonical per-vertex profile: for every cell pair and eigenspace, the
/// multisets of quantized coordinates of the first cell's projected
/// indicator restricted to the second cell, flattened to one integer
/// sequence (cells appear as graph-global ranks of their robust tuples).
/// Two vertices related by an automorphism get equal profiles because the
/// cell correspondence preserves every restricted multiset; grouping by
/// profile therefore yields unions of orbits.
type Profile = Vec<u32>;

/// Sentinel separating eigenspace sections of a profile.
const SEC: u32 = u32::MAX;
/// Sentinel separating cell-pair entries within a section.
const ENT: u32 = u32::MAX - 1;

/// Relabeling-robust identity of one cell of an anchored partition: size,
/// then per eigenspace the sorted multiset of member type ranks and of
/// member-to-anchor projector-entry ranks (both quantized over the whole
/// graph at once). Cell keys are deliberately not part of this: region-peel
/// keys record incidence layers whose near-threshold sign tests are not
/// numerically reproducible across relabelings, while the data here is.
pub(crate) type CellTuple = (usize, Vec<Vec<usize>>, Vec<Vec<usize>>);

/// Cell tuples for a family of anchored partitions, `parts[u]` anchored at
/// vertex u; `out[u][i]` describes the i-th canonical cell of `parts[u]`.
pub(crate) fn partition_cell_tuples(
    d: &SpectralDecomposition,
    parts: &[Partition],
    cfg: &Config,
) -> Vec<Vec<CellTuple>> {
    let n = d.n();
    let abs_tol = cfg.abs_tol(d.a_norm());
    let mut tuples: Vec<Vec<CellTuple>> = parts
        .iter()
        .map(|p| {
            (0..p.num_cells())
                .map(|i| (p.cell(i).len(), Vec::new(), Vec::new()))
                .collect()
        })
        .collect();
    for l in 0..d.num_spaces() {
        let t = EigenTables::build(d, l, cfg);
        let flat: Vec<f64> = t.proj.iter().flatten().copied().collect();
        let entry_rank = quantize::cluster_ranks(&flat, abs_tol);
        for (u, p) in parts.iter().enumerate() {
            for i in 0..p.num_cells() {
                let cell = p.cell(i);
                let mut tys: Vec<usize> = cell.iter().map(|&x| t.type_rank[x]).collect();
                tys.sort_unstable();
                let mut ang: Vec<usize> = cell.iter().map(|&x| entry_rank[x * n + u]).collect();
                ang.sort_unstable();
                tuples[u][i].1.push(tys);
                tuples[u][i].2.push(ang);
            }
        }
    }
    tuples
}

fn vertex_profiles(
    d: &SpectralDecomposition,
    parts: &[Partition],
    cfg: &Config,
) -> Vec<Profile> {
    let n = d.n();
    let abs_tol = cfg.abs_tol(d.a_norm());
    let nv = parts.len();
    // Rank every distinct cell tuple once, across all partitions, so cell
    // identities compress to small integers comparable between profiles.
    let tuples = partition_cell_tuples(d, parts, cfg);
    let mut distinct: Vec<&CellTuple> = tuples.iter().flatten().collect();
    distinct.sort();
    distinct.dedup();
    let cell_rank =
        |u: usize, i: usize| distinct.binary_search(&&tuples[u][i]).expect("tuple ranked") as u32;
    let mut profiles: Vec<Profile> = vec![Vec::new(); nv];
    for l in 0..d.num_spaces() {
        let t = EigenTables::build(d, l, cfg);
        // Raw restricted coordinates, flattened in a reproducible order and
        // quantized across every vertex at once so ranks are comparable
        // between profiles.
        let mut values: Vec<f64> = Vec::new();
        let mut spans: Vec<(usize, u32, u32, usize)> = Vec::new();
        for (u, p) in parts.iter().enumerate() {
            for i in 0..p.num_cells() {
                let mut w = vec![0.0; n];
                for &x in p.cell(i) {
                    linalg::axpy(&mut w, 1.0, &t.proj[x]);
                }
                let ri = cell_rank(u, i);
                for j in 0..p.num_cells() {
                    let cj = p.cell(j);
                    spans.push((u, ri, cell_rank(u, j), cj.len()));
                    values.extend(cj.iter().map(|&y| w[y]));
                }
            }
        }
        let ranks = quantize::cluster_ranks(&values, abs_tol);
        let mut pos = 0usize;
        let mut entries: Vec<Vec<(u32, u32, Vec<u32>)>> = vec![Vec::new(); nv];
        for (u, ri, rj, len) in spans {
            let mut rs: Vec<u32> = ranks[pos..pos + len].iter().map(|&r| r as u32).collect();
            pos += len;
            rs.sort_unstable();
            entries[u].push((ri, rj, rs));
        }
        for (u, mut es) in entries.into_iter().enumerate() {
            es.sort_unstable();
            let out = &mut profiles[u];
            out.push(SEC);
            for (ri, rj, rs) in es {
                out.push(ENT);
                out.push(ri);
                out.push(rj);
                out.extend(rs);
            }
        }
    }
    profiles
}

/// Aggregates per-vertex partitions into the uniform partition: vertices
/// are equivalent when their partitions match cell-by-cell (through the
/// robust cell-tuple correspondence) on every restricted coordinate
/// multiset of every projected cell indicator; the classes are then
/// refined to an equitable partition.
pub fn uniform_partition_from(
    d: &SpectralDecomposition,
    g: &Graph,
    parts: &[Partition],
    cfg: &Config,
) -> Result<Partition> {
    let n = d.n();
    assert_eq!(parts.len(), n, "one vertex partition per vertex");
    let profiles = vertex_profiles(d, parts, cfg);
    let mut distinct: Vec<&Profile> = profiles.iter().collect();
    distinct.sort();
    distinct.dedup();
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (u, f) in profiles.iter().enumerate() {
        let rank = distinct.binary_search(&f).expect("profile present");
        cells.entry(rank).or_default().push(u);
    }
    let p = Partition::new(
        n,
        cells
            .into_iter()
            .map(|(rank, members)| (vec![stage::UNIFORM, rank as i64], members))
            .collect(),
    )?;
    Ok(partition::refine_equitable(g, &p))
}

/// Computes every per-vertex partition (in parallel) and aggregates them.
pub fn uniform_partition(
    d: &SpectralDecomposition,
    g: &Graph,
    cfg: &Config,
) -> Result<UniformPartition> {
    let run = |v: usize| balanced::vertex_partition(d, g, v, cfg);
    let vps: Vec<BalancedPartition> = if cfg.threads == 1 {
        (0..d.n()).map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .expect("thread pool");
        pool.install(|| (0..d.n()).into_par_iter().map(run).collect::<Result<_>>())?
    };
    let parts: Vec<Partition> = vps.iter().map(|bp| bp.partition.clone()).collect();
    let partition = uniform_partition_from(d, g, &parts, cfg)?;
    Ok(UniformPartition { partition, vertex_partitions: vps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    Bipartite,
    Multipartite,
}

/// Intersection graph of the cells of several partitions: cells from
/// different partitions are adjacent when they intersect; components are
/// reported as ground vertex sets.
#[derive(Debug, Clone)]
pub struct PartitionGraph {
    pub mode: GraphMode,
    /// (partition index, canonical cell index) of each nonempty restricted
    /// cell, i.e. the vertices of the intersection graph.
    pub vertices: Vec<(usize, usize)>,
    pub edges: Vec<((usize, usize), (usize, usize))>,
    /// Ground-set components, each sorted, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
}

impl PartitionGraph {
    pub fn is_connected(&self) -> bool {
        self.components.len() <= 1
    }

    /// Every cell meets exactly one cell of every other partition and each
    /// intersection is a single vertex; equivalently, all restricted cells
    /// are singletons, so the graph is a perfect matching with one edge per
    /// ground vertex.
    pub fn is_perfect_matching(&self) -> bool {
        let ground: usize = self.components.iter().map(|c| c.len()).sum();
        if self.edges.len() * 2 != self.vertices.len() * (self.mode_parts() - 1)
            || self.edges.len() != ground * self.mode_parts() * (self.mode_parts() - 1) / 2
        {
            return false;
        }
        let mut deg: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(a, b) in &self.edges {
            *deg.entry(a).or_insert(0) += 1;
            *deg.entry(b).or_insert(0) += 1;
        }
        self.vertices
            .iter()
            .all(|v| deg.get(v).copied().unwrap_or(0) == self.mode_parts() - 1)
    }

    fn mode_parts(&self) -> usize {
        self.vertices.iter().map(|&(p, _)| p + 1).max().unwrap_or(0).max(2)
    }
}

fn partition_graph(mode: GraphMode, parts: &[&Partition], t: Option<&[usize]>) -> PartitionGraph {
    let n = parts.first().map(|p| p.n()).unwrap_or(0);
    let in_t: Vec<bool> = match t {
        Some(t) => {
            let mut m = vec![false; n];
            for &x in t {
                m[x] = true;
            }
            m
        }
        None => vec![true; n],
    };
    // Restricted cells, with their (partition, cell) ids.
    let mut vertices: Vec<(usize, usize)> = Vec::new();
    let mut restricted: Vec<Vec<usize>> = Vec::new();
    for (pi, p) in parts.iter().enumerate() {
        for i in 0..p.num_cells() {
            let cell: Vec<usize> = p.cell(i).iter().copied().filter(|&x| in_t[x]).collect();
            if !cell.is_empty() {
                vertices.push((pi, i));
                restricted.push(cell);
            }
        }
    }
    let mut edges = Vec::new();
    let mut uf = UnionFind::new(n);
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            if vertices[a].0 == vertices[b].0 {
                continue;
            }
            let sb: std::collections::BTreeSet<usize> = restricted[b].iter().copied().collect();
            if restricted[a].iter().any(|x| sb.contains(x)) {
                edges.push((vertices[a], vertices[b]));
            }
        }
    }
    for cell in &restricted {
        for w in cell.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut components: Vec<Vec<usize>> = uf
        .classes()
        .into_iter()
        .map(|c| c.into_iter().filter(|&x| in_t[x]).collect::<Vec<_>>())
        .filter(|c: &Vec<usize>| !c.is_empty())
        .collect();
    components.sort();
    PartitionGraph { mode, vertices, edges, components }
}

/// The bipartite intersection graph of two partitions of one ground set.
pub fn bipartite_components(pa: &Partition, pb: &Partition) -> PartitionGraph {
    partition_graph(GraphMode::Bipartite, &[pa, pb], None)
}

/// Same, with both partitions restricted to the vertex set `t`.
pub fn bipartite_components_restricted(
    pa: &Partition,
    pb: &Partition,
    t: &[usize],
) -> PartitionGraph {
    partition_graph(GraphMode::Bipartite, &[pa, pb], Some(t))
}

/// Components of the multipartite intersection graph restricted to `t`;
/// when the inputs are the orbit partitions of the point stabilizers over
/// an orbit `t`, these components form a block system of the group.
pub fn multipartite_block_system(parts: &[&Partition], t: &[usize]) -> Vec<Vec<usize>> {
    partition_graph(GraphMode::Multipartite, parts, Some(t)).components
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Primitivity {
    Connected,
    PrimeMatching,
    /// Witness block, if some bipartite graph exposed a non-trivial
    /// component; empty when imprimitivity follows only from a matching of
    /// composite order.
    Imprimitive { block: Vec<usize> },
}

/// Classifies the action behind per-point partitions over an orbit `t`:
/// primitive iff every pairwise bipartite graph restricted to `t` is
/// connected, or every one is a perfect matching and |t| is prime. The
/// partitions are indexed alongside `t` (parts[i] belongs to t[i]).
pub fn primitivity_test(parts: &[&Partition], t: &[usize]) -> Primitivity {
    assert_eq!(parts.len(), t.len(), "one partition per point of t");
    if t.len() < 2 {
        return Primitivity::Connected;
    }
    let mut all_connected = true;
    let mut all_matching = true;
    let mut witness: Option<Vec<usize>> = None;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            let pg = bipartite_components_restricted(parts[i], parts[j], t);
            let conn = pg.is_connected();
            let matching = pg.is_perfect_matching();
            all_connected &= conn;
            all_matching &= matching;
            if !conn {
                for c in &pg.components {
                    if c.len() > 1
                        && c.len() < t.len()
                        && witness.as_ref().map_or(true, |w| (c.len(), c) < (w.len(), w))
                    {
                        witness = Some(c.clone());
                    }
                }
            }
        }
    }
    if all_connected {
        Primitivity::Connected
    } else if all_matching && is_prime(t.len()) {
        Primitivity::PrimeMatching
    } else {
        Primitivity::Imprimitive { block: witness.unwrap_or_default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOrigin {
    /// No test split the host cell; the candidate is the cell itself.
    Trivial,
    SingletonSet,
    MinComponent,
    PrimitivityReduction,
    StrongComponent,
}

impl BlockOrigin {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockOrigin::Trivial => "trivial",
            BlockOrigin::SingletonSet => "singleton_set",
            BlockOrigin::MinComponent => "min_component",
            BlockOrigin::PrimitivityReduction => "primitivity_reduction",
            BlockOrigin::StrongComponent => "strong_component",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockCandidate {
    pub b: Vec<usize>,
    pub origin: BlockOrigin,
    /// Arcs of the pseudo-block digraph over `b`, when one was built.
    pub pbg_arcs: Option<Vec<(usize, usize)>>,
    pub strongly_connected: bool,
    /// The correspondence-permutation enumeration hit its cap; the
    /// primitivity reduction ran on a truncated permutation set.
    pub perm_overflow: bool,
}

impl BlockCandidate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "B": self.b.iter().map(|&x| x + 1).collect::<Vec<_>>(),
            "origin": self.origin.as_str(),
            "pbg_strongly_connected": self.strongly_connected,
            "perm_overflow": self.perm_overflow,
        })
    }
}

/// Cap on enumerated candidate permutations when cell correspondences are
/// ambiguous.
pub const PERM_CAP: usize = 1000;

/// Cells of `p` intersected with `b`, keeping canonical order; each entry
/// is (canonical cell index, restricted members).
fn restricted_cells(p: &Partition, b: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let inb: std::collections::BTreeSet<usize> = b.iter().copied().collect();
    (0..p.num_cells())
        .filter_map(|i| {
            let cell: Vec<usize> = p.cell(i).iter().copied().filter(|x| inb.contains(x)).collect();
            (!cell.is_empty()).then_some((i, cell))
        })
        .collect()
}

/// Key-based cell correspondence permutations of `b` between the singleton
/// restrictions of the partitions anchored at `x` and at `y`. Ambiguous
/// keys enumerate all within-group bijections, up to the cap.
fn correspondence_perms(
    px: &Partition,
    py: &Partition,
    b: &[usize],
    cap: usize,
) -> (Vec<Vec<usize>>, bool) {
    let cx = restricted_cells(px, b);
    let cy = restricted_cells(py, b);
    if cx.iter().any(|(_, c)| c.len() != 1) || cy.iter().any(|(_, c)| c.len() != 1) {
        return (vec![], false);
    }
    // Group singletons by key on both sides.
    let group = |p: &Partition, cells: &[(usize, Vec<usize>)]| {
        let mut m: BTreeMap<CellKey, Vec<usize>> = BTreeMap::new();
        for (i, c) in cells {
            m.entry(p.key(*i).clone()).or_default().push(c[0]);
        }
        m
    };
    let gx = group(px, &cx);
    let gy = group(py, &cy);
    if gx.len() != gy.len()
        || gx.iter().zip(&gy).any(|((ka, va), (kb, vb))| ka != kb || va.len() != vb.len())
    {
        return (vec![], false);
    }
    // Cartesian product of within-key bijections, as maps on b's members.
    let mut perms: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new()];
    let mut overflow = false;
    for (key, xs) in &gx {
        let ys = &gy[key];
        let mut assigns: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut idx: Vec<usize> = (0..ys.len()).collect();
        // Heap-style enumeration of bijections xs -> ys.
        fn permute(idx: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>, cap: usize) {
            if out.len() >= cap {
                return;
            }
            if k == idx.len() {
                out.push(idx.clone());
                return;
            }
            for i in k..idx.len() {
                idx.swap(k, i);
                permute(idx, k + 1, out, cap);
                idx.swap(k, i);
            }
        }
        let mut orders = Vec::new();
        permute(&mut idx, 0, &mut orders, cap);
        for order in orders {
            assigns.push(xs.iter().copied().zip(order.iter().map(|&i| ys[i])).collect());
        }
        let mut next = Vec::new();
        'outer: for base in &perms {
            for a in &assigns {
                if next.len() >= cap {
                    overflow = true;
                    break 'outer;
                }
                let mut m = base.clone();
                m.extend(a.iter().copied());
                next.push(m);
            }
        }
        perms = next;
    }
    let out = perms
        .into_iter()
        .map(|m| b.iter().map(|x| m[x]).collect::<Vec<usize>>())
        .collect();
    (out, overflow)
}

/// Does the coordinate permutation (identity off `b`) map the subspace into
/// itself, within tol.
fn perm_preserves_span(space: &Subspace, b: &[usize], images: &[usize], tol: f64) -> bool {
    space.basis().iter().all(|v| {
        let mut w = v.clone();
        for (&x, &y) in b.iter().zip(images) {
            w[y] = v[x];
        }
        space.residual(&w) <= tol
    })
}

/// Minimal non-trivial block of the action on `b` generated by `perms`
/// (each perm listed as images of b's members, in b order), by the classic
/// union-find closure seeded at each pair (b[0], b[k]).
fn minimal_action_block(b: &[usize], perms: &[Vec<usize>]) -> Option<Vec<usize>> {
    let m = b.len();
    let pos: BTreeMap<usize, usize> = b.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let local: Vec<Vec<usize>> =
        perms.iter().map(|p| p.iter().map(|y| pos[y]).collect()).collect();
    let mut best: Option<Vec<usize>> = None;
    for k in 1..m {
        let mut uf = UnionFind::new(m);
        uf.union(0, k);
        let mut queue = vec![(0usize, k)];
        while let Some((u, v)) = queue.pop() {
            for g in &local {
                if uf.union(g[u], g[v]) {
                    queue.push((g[u], g[v]));
                }
            }
        }
        let class: Vec<usize> = {
            let mut c: Vec<usize> = (0..m).filter(|&i| uf.find(i) == uf.find(0)).collect();
            c.sort_unstable();
            c
        };
        if class.len() > 1 && class.len() < m {
            let block: Vec<usize> = class.iter().map(|&i| b[i]).collect();
            if best.as_ref().map_or(true, |w| (block.len(), &block) < (w.len(), w)) {
                best = Some(block);
            }
        }
    }
    best
}

/// Strongly connected components of a digraph on `m` nodes (Kosaraju).
fn strong_components(m: usize, arcs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut fwd = vec![Vec::new(); m];
    let mut rev = vec![Vec::new(); m];
    for &(u, w) in arcs {
        fwd[u].push(w);
        rev[w].push(u);
    }
    let mut order = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    for s in 0..m {
        if seen[s] {
            continue;
        }
        // Iterative post-order.
        let mut stack = vec![(s, 0usize)];
        seen[s] = true;
        while let Some(&mut (u, ref mut i)) = stack.last_mut() {
            if *i < fwd[u].len() {
                let w = fwd[u][*i];
                *i += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(u);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; m];
    let mut components = Vec::new();
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &w in &rev[u] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Selects a block candidate inside one cell `s` of the uniform partition,
/// from the per-vertex partitions: the bipartite scan (singleton-set and
/// minimum-component rules), then either the correspondence-permutation
/// primitivity reduction (all restricted cells singleton) or the
/// pseudo-block digraph's strong components, iterated until stable.
pub fn select_block_candidate(
    d: &SpectralDecomposition,
    s: &[usize],
    parts: &[Partition],
    cfg: &Config,
) -> BlockCandidate {
    let mut s = s.to_vec();
    s.sort_unstable();
    assert!(s.len() >= 2, "host cell needs at least two vertices");
    let x = s[0];
    let px = &parts[x];
    let mut out = BlockCandidate {
        b: s.clone(),
        origin: BlockOrigin::Trivial,
        pbg_arcs: None,
        strongly_connected: true,
        perm_overflow: false,
    };

    // Step 1: scan the bipartite graphs [Pi_x, Pi_y] restricted to s.
    let mut candidate: Option<(Vec<usize>, BlockOrigin)> = None;
    let consider = |c: Vec<usize>, origin: BlockOrigin, best: &mut Option<(Vec<usize>, BlockOrigin)>| {
        if c.is_empty() || c.len() >= s.len() {
            return;
        }
        if best.as_ref().map_or(true, |(w, _)| (c.len(), &c) < (w.len(), w)) {
            *best = Some((c, origin));
        }
    };
    for &y in s.iter().skip(1) {
        let pg = bipartite_components_restricted(px, &parts[y], &s);
        if pg.is_connected() || pg.is_perfect_matching() {
            continue;
        }
        if px.refines(&parts[y]) && parts[y].refines(px) {
            // Equal partitions: the singletons contained in s form the set.
            let mut singles: Vec<usize> = restricted_cells(px, &s)
                .into_iter()
                .filter(|(i, c)| c.len() == 1 && px.cell(*i).len() == 1)
                .map(|(_, c)| c[0])
                .collect();
            singles.sort_unstable();
            consider(singles, BlockOrigin::SingletonSet, &mut candidate);
        }
        for c in &pg.components {
            if c.len() > 1 {
                consider(c.clone(), BlockOrigin::MinComponent, &mut candidate);
            }
        }
    }
    if let Some((b, origin)) = candidate {
        out.b = b;
        out.origin = origin;
    }

    // Step 2: shrink the candidate until stable.
    let tol = cfg.abs_tol(d.a_norm());
    for _ in 0..d.n() {
        if out.b.len() < 2 {
            break;
        }
        let bx = out.b[0];
        let cells = restricted_cells(&parts[bx], &out.b);
        if cells.iter().all(|(_, c)| c.len() == 1) {
            // Case (a): all restrictions are singletons; gather the
            // correspondence permutations and reduce by a minimal block of
            // the subspace-preserving ones.
            let mut perms: Vec<Vec<usize>> = Vec::new();
            for &y in &out.b {
                if y == bx {
                    continue;
                }
                let (ps, over) = correspondence_perms(&parts[bx], &parts[y], &out.b, PERM_CAP);
                out.perm_overflow |= over;
                perms.extend(ps);
                if perms.len() > PERM_CAP {
                    perms.truncate(PERM_CAP);
                    out.perm_overflow = true;
                    break;
                }
            }
            let spans: Vec<Subspace> =
                (0..d.num_spaces()).map(|l| balanced::cell_span(d, l, &out.b)).collect();
            perms.retain(|images| {
                spans.iter().all(|sp| perm_preserves_span(sp, &out.b, images, tol))
            });
            match minimal_action_block(&out.b, &perms) {
                Some(block) => {
                    out.b = block;
                    out.origin = BlockOrigin::PrimitivityReduction;
                    continue;
                }
                None => break,
            }
        }
        // Case (b): the pseudo-block digraph, unless the candidate is a
        // complete configuration (every projector row constant off the
        // diagonal), where no digraph is needed.
        if balanced::is_complete_configuration(d, &out.b, cfg) {
            break;
        }
        let ex = cells
            .iter()
            .filter(|(_, c)| c.len() > 1 && 2 * c.len() < out.b.len())
            .min_by_key(|(_, c)| (c.len(), c.clone()));
        let Some((ex_idx, _)) = ex else {
            break;
        };
        let ex_key = parts[bx].key(*ex_idx).clone();
        let pos: BTreeMap<usize, usize> =
            out.b.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut arcs: Vec<(usize, usize)> = Vec::new();
        for (ui, &u) in out.b.iter().enumerate() {
            let matches: Vec<usize> = (0..parts[u].num_cells())
                .filter(|&i| parts[u].key(i) == &ex_key)
                .collect();
            if matches.len() != 1 {
                continue;
            }
            for &w in parts[u].cell(matches[0]) {
                if let Some(&wi) = pos.get(&w) {
                    arcs.push((ui, wi));
                }
            }
        }
        let comps = strong_components(out.b.len(), &arcs);
        out.pbg_arcs =
            Some(arcs.iter().map(|&(u, w)| (out.b[u], out.b[w])).collect());
        if comps.len() <= 1 {
            out.strongly_connected = true;
            break;
        }
        out.strongly_connected = false;
        let smallest = comps
            .iter()
            .min_by_key(|c| (c.len(), c.iter().map(|&i| out.b[i]).collect::<Vec<_>>()))
            .expect("at least one strong component");
        out.b = smallest.iter().map(|&i| out.b[i]).collect();
        out.origin = BlockOrigin::StrongComponent;
    }

    // A proper block of a transitive action covers at most half the host.
    if out.b.len() < s.len() && 2 * out.b.len() > s.len() {
        out.b = s;
        out.origin = BlockOrigin::Trivial;
        out.pbg_arcs = None;
        out.strongly_connected = true;
    }
    out
}

#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub partition: Partition,
    /// False when every projected block indicator was zero and the uniform
    /// partition was returned unchanged.
    pub anchored: bool,
    pub rounds: usize,
}

/// Partition anchored at a block candidate: the block indicator is
/// projected onto each middle space (the eigenspace minus its lifted
/// quotient part under the uniform partition) and the region-peel plus
/// balance pipeline runs with those vectors in place of a vertex
/// projection.
pub fn block_partition(
    d: &SpectralDecomposition,
    g: &Graph,
    b: &[usize],
    ubar: &Partition,
    cfg: &Config,
) -> Result<BlockPartition> {
    let n = d.n();
    let mut rb = vec![0.0; n];
    for &x in b {
        rb[x] = 1.0;
    }
    let mut anchors: Vec<Vector> = Vec::with_capacity(d.num_spaces());
    for l in 0..d.num_spaces() {
        let y = partition::lifted_complement(g, ubar, d, l, cfg)?;
        anchors.push(y.project(&rb));
    }
    if anchors.iter().all(|a| linalg::norm(a) <= cfg.zero_tol) {
        return Ok(BlockPartition { partition: ubar.clone(), anchored: false, rounds: 0 });
    }
    let tables: Vec<EigenTables> =
        (0..d.num_spaces()).map(|l| EigenTables::build(d, l, cfg)).collect();
    let abs_tol = cfg.abs_tol(d.a_norm());
    let all: Vec<usize> = (0..n).collect();
    let mut seeds: Vec<Partition> = vec![ubar.clone()];
    for (l, t) in tables.iter().enumerate() {
        let layered = region::peel_with_anchor(t, l, &anchors[l], &all, abs_tol, cfg);
        seeds.push(Partition::new(
            n,
            layered
                .into_iter()
                .map(|(mut key, cell, _)| {
                    key.insert(0, stage::BLOCK);
                    (key, cell)
                })
                .collect(),
        )?);
    }
    let seed = partition::meet_many(&seeds)?;
    let (partition, rounds, _) = balanced::balanced_fixpoint(d, g, &tables, &anchors, seed, cfg)?;
    Ok(BlockPartition { partition, anchored: true, rounds })
}

/// Orthogonal decomposition of one middle space along the cells of an
/// equitable partition.
#[derive(Debug, Clone)]
pub struct CascadeLayer {
    pub lambda_idx: usize,
    /// (canonical cell index, spanned subspace) of each selected cell, in
    /// selection order.
    pub parts: Vec<(usize, Subspace)>,
    /// What remains of the middle space after the selected spans.
    pub residual: Subspace,
    pub reconstruction_error: f64,
}

/// Greedy orthogonal cascade: per eigenspace, cells are visited smallest
/// first and a cell's span (of its members' projections into the middle
/// space) is kept whenever it is orthogonal to everything already kept;
/// the middle space decomposes as the kept spans plus a residual.
pub fn subspace_cascade(
    d: &SpectralDecomposition,
    g: &Graph,
    p: &Partition,
    cfg: &Config,
) -> Result<Vec<CascadeLayer>> {
    let n = d.n();
    let tol = cfg.abs_tol(d.a_norm());
    let mut order: Vec<usize> = (0..p.num_cells()).collect();
    order.sort_by_key(|&i| (p.cell(i).len(), i));
    let mut layers = Vec::new();
    for l in 0..d.num_spaces() {
        let y = partition::lifted_complement(g, p, d, l, cfg)?;
        if y.is_zero() {
            layers.push(CascadeLayer {
                lambda_idx: l,
                parts: vec![],
                residual: y,
                reconstruction_error: 0.0,
            });
            continue;
        }
        let span_in_y = |cell: &[usize]| -> Subspace {
            let vs: Vec<Vector> = cell
                .iter()
                .map(|&x| {
                    let mut e = vec![0.0; n];
                    e[x] = 1.0;
                    y.project(&e)
                })
                .collect();
            subspace::span_of(n, &vs, cfg.rank_tol)
        };
        let orthogonal = |a: &Subspace, b: &Subspace| -> bool {
            a.basis()
                .iter()
                .all(|u| b.basis().iter().all(|v| linalg::dot(u, v).abs() <= tol))
        };
        let mut parts: Vec<(usize, Subspace)> = Vec::new();
        let mut acc = Subspace::zero(n);
        for &i in &order {
            let xi = span_in_y(p.cell(i));
            if xi.is_zero() {
                continue;
            }
            if parts.is_empty() || orthogonal(&xi, &acc) {
                acc = subspace::sum(&acc, &xi);
                parts.push((i, xi));
            }
        }
        let residual = subspace::ominus(&y, &acc, cfg.tol);
        // Frobenius distance between the middle-space projector and the sum
        // of the selected projectors plus the residual projector.
        let mut r = y.projector();
        for (_, sp) in &parts {
            let q = sp.projector();
            for i in 0..n {
                for j in 0..n {
                    r[i][j] -= q[i][j];
                }
            }
        }
        let q = residual.projector();
        let err = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let x = r[i][j] - q[i][j];
                        x * x
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt();
        layers.push(CascadeLayer { lambda_idx: l, parts, residual, reconstruction_error: err });
    }
    Ok(layers)
}
