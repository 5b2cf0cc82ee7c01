//! Balanced vertex partitions: the fixpoint of region meets, equitable
//! refinement, type/angle refinement and balance checks, anchored at one
//! vertex; plus complete-configuration detection and the big-cell dichotomy.

use crate::config::Config;
use crate::error::Result;
use crate::graph::Graph;
use crate::linalg::{self, Vector};
use crate::partition::{self, stage, CellKey, Partition};
use crate::quantize;
use crate::region;
use crate::spectral::{EigenTables, SpectralDecomposition};
use crate::subspace::{self, Subspace};

/// Per-(cell, eigenspace) balance classification.
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub lambda_idx: usize,
    pub cell: Vec<usize>,
    /// The cell embeds thinly: the anchor projection is orthogonal to every
    /// member projection inside the cell span.
    pub thin: bool,
    /// Non-thin case: all member inner products with the indicator agree.
    pub inner_products_constant: bool,
    /// Non-thin case: the incidence set of the witness region equals the
    /// cell, as the construction assumes.
    pub incidence_matches: bool,
    pub sum_norm: f64,
    pub balanced: bool,
}

#[derive(Debug, Clone)]
pub struct BalancedPartition {
    pub partition: Partition,
    pub anchor: usize,
    pub reports: Vec<BalanceReport>,
    pub rounds: usize,
}

impl BalancedPartition {
    pub fn is_balanced(&self) -> bool {
        self.reports.iter().all(|r| r.balanced)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "anchor": self.anchor + 1,
            "partition": self.partition.to_json(),
            "rounds": self.rounds,
            "balanced": self.is_balanced(),
            "reports": self.reports.iter().map(|r| serde_json::json!({
                "lambda_idx": r.lambda_idx,
                "cell": r.cell.iter().map(|&x| x + 1).collect::<Vec<_>>(),
                "thin": r.thin,
                "inner_products_constant": r.inner_products_constant,
                "incidence_matches": r.incidence_matches,
                "sum_norm": crate::spectral::round_sig(r.sum_norm),
                "balanced": r.balanced,
            })).collect::<Vec<_>>(),
        })
    }
}

fn basis_vector(n: usize, i: usize) -> Vector {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

fn cell_indicator(n: usize, cell: &[usize]) -> Vector {
    let mut v = vec![0.0; n];
    for &x in cell {
        v[x] = 1.0;
    }
    v
}

/// Span of the eigenspace projections of a vertex set.
pub fn cell_span(d: &SpectralDecomposition, lambda_idx: usize, cell: &[usize]) -> Subspace {
    let vs: Vec<Vector> = cell
        .iter()
        .map(|&x| d.project_basis_vector(lambda_idx, x))
        .collect();
    subspace::span_of(d.n(), &vs, 1e-9)
}

/// Classifies one cell of an equitable partition against one eigenspace.
///
/// Thin cells are balanced when the member sum vanishes in the complement
/// of the lifted quotient eigenspace; non-thin cells additionally carry a
/// region indicator whose member inner products must agree, and the sum is
/// taken in the complement of the lifted space plus the indicator line.
pub fn balance_check(
    d: &SpectralDecomposition,
    g: &Graph,
    p: &Partition,
    cell_idx: usize,
    lambda_idx: usize,
    v: usize,
    cfg: &Config,
) -> Result<BalanceReport> {
    let anchor = d.project_basis_vector(lambda_idx, v);
    balance_check_anchored(d, g, p, cell_idx, lambda_idx, &anchor, cfg)
}

/// Like `balance_check` but against an arbitrary anchor vector inside the
/// eigenspace (block-anchored partitions use the projected block vector).
pub fn balance_check_anchored(
    d: &SpectralDecomposition,
    g: &Graph,
    p: &Partition,
    cell_idx: usize,
    lambda_idx: usize,
    anchor: &[f64],
    cfg: &Config,
) -> Result<BalanceReport> {
    let n = d.n();
    let tol = cfg.abs_tol(d.a_norm());
    let cell = p.cell(cell_idx).to_vec();
    let mut report = BalanceReport {
        lambda_idx,
        cell: cell.clone(),
        thin: true,
        inner_products_constant: true,
        incidence_matches: true,
        sum_norm: 0.0,
        balanced: true,
    };
    if cell.len() <= 1 {
        return Ok(report);
    }
    let space_c = cell_span(d, lambda_idx, &cell);
    if space_c.is_zero() {
        return Ok(report);
    }
    let pv = space_c.project(anchor);
    // The inner product of proj_C(anchor) with proj_C(e_x) is just the x-th
    // coordinate of proj_C(anchor).
    report.thin = cell.iter().all(|&x| pv[x].abs() <= tol);
    let lifted = partition::lifted_eigenspace(g, p, d, lambda_idx, cfg)?;
    let ones = cell_indicator(n, &cell);
    // Sum of |C| unit-length projections; tolerance scales with sqrt(|C|).
    let sum_tol = tol * (cell.len() as f64).sqrt().max(1.0);
    if report.thin {
        let w = subspace::ominus(&space_c, &lifted, cfg.tol);
        report.sum_norm = linalg::norm(&w.project(&ones));
        report.balanced = report.sum_norm <= sum_tol;
        return Ok(report);
    }
    // Non-thin: build the witness region indicator over the cell.
    let (reference, i_r) = cell_region_indicator(&space_c, &cell, &pv, cfg)?;
    let _ = reference;
    let outcome = region::incidence_set(&space_c, &reference, &cell, cfg);
    let mut members = outcome.members.clone();
    members.sort_unstable();
    report.incidence_matches = members == cell;
    let vals: Vec<f64> = cell.iter().map(|&u| i_r[u]).collect();
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    report.inner_products_constant = hi - lo <= tol;
    let line = subspace::span_of(n, &[i_r], cfg.rank_tol);
    let w = subspace::ominus(&space_c, &subspace::sum(&lifted, &line), cfg.tol);
    report.sum_norm = linalg::norm(&w.project(&ones));
    report.balanced =
        report.inner_products_constant && report.sum_norm <= sum_tol;
    Ok(report)
}

/// Witness reference and indicator for the region whose incidence set is
/// meant to be the whole cell: the normalized member sum when nonzero, the
/// anchor projection otherwise.
fn cell_region_indicator(
    space_c: &Subspace,
    cell: &[usize],
    pv: &[f64],
    cfg: &Config,
) -> Result<(Vector, Vector)> {
    let n = space_c.ambient();
    let mut reference = space_c.project(&cell_indicator(n, cell));
    if linalg::norm(&reference) <= cfg.zero_tol {
        reference = pv.to_vec();
    }
    let i_r = region::region_indicator(space_c, cell, &reference, cfg)?;
    Ok((reference, i_r))
}

/// One pass of type and angle refinement against every eigenspace; anchors
/// are the per-eigenspace projections of v.
fn type_angle_refine(
    p: &Partition,
    tables: &[EigenTables],
    anchors: &[Vector],
    abs_tol: f64,
) -> Partition {
    let mut current = p.clone();
    for (l, t) in tables.iter().enumerate() {
        // Type split.
        current = split_cells(
            &current,
            |cell| cell.iter().map(|&x| (t.type_rank[x] as i64, x)).collect(),
            |rank| key_suffix(stage::TYPE, l, rank),
        );
        // Angle split against the anchor.
        let anchor = &anchors[l];
        current = split_cells(
            &current,
            |cell| {
                let vals: Vec<f64> =
                    cell.iter().map(|&x| linalg::dot(&t.proj[x], anchor)).collect();
                let ranks = quantize::cluster_ranks(&vals, abs_tol);
                cell.iter().zip(ranks).map(|(&x, r)| (r as i64, x)).collect()
            },
            |rank| key_suffix(stage::ANGLE, l, rank),
        );
    }
    current
}

fn key_suffix(code: i64, lambda_idx: usize, rank: i64) -> Vec<i64> {
    vec![code, lambda_idx as i64, rank]
}

/// Splits every cell by an invariant rank function; new keys are
/// suffix(parent_rank) appended to the parent key. Cells left whole keep
/// their keys.
fn split_cells<F, K>(p: &Partition, rank_of: F, suffix: K) -> Partition
where
    F: Fn(&[usize]) -> Vec<(i64, usize)>,
    K: Fn(i64) -> Vec<i64>,
{
    let mut cells: Vec<(CellKey, Vec<usize>)> = Vec::new();
    let mut changed = false;
    for i in 0..p.num_cells() {
        let cell = p.cell(i);
        let ranked = rank_of(cell);
        let mut groups: std::collections::BTreeMap<i64, Vec<usize>> =
            std::collections::BTreeMap::new();
        for (r, x) in ranked {
            groups.entry(r).or_default().push(x);
        }
        if groups.len() <= 1 {
            cells.push((p.key(i).clone(), cell.to_vec()));
            continue;
        }
        changed = true;
        for (r, members) in groups {
            // New key: stage code, then parent key, then the suffix tail.
            let key = suffix(r);
            let mut full = key[..1].to_vec();
            full.extend(p.key(i).iter().copied());
            full.extend(&key[1..]);
            cells.push((full, members));
        }
    }
    if !changed {
        return p.clone();
    }
    Partition::new(p.n(), cells).expect("cell split preserves partition validity")
}

/// One pass of balance refinement; returns the refined partition. Expects
/// `p` equitable (lifted eigenspaces need the quotient).
fn balance_refine(
    d: &SpectralDecomposition,
    g: &Graph,
    p: &Partition,
    anchors: &[Vector],
    cfg: &Config,
) -> Result<Partition> {
    let n = d.n();
    let tol = cfg.abs_tol(d.a_norm());
    let mut cells: Vec<(CellKey, Vec<usize>)> = Vec::new();
    let mut changed = false;
    for i in 0..p.num_cells() {
        let cell = p.cell(i).to_vec();
        let parent_key = p.key(i).clone();
        if cell.len() <= 1 {
            cells.push((parent_key, cell));
            continue;
        }
        let mut pieces: Option<Vec<(CellKey, Vec<usize>)>> = None;
        for l in 0..d.num_spaces() {
            let report = balance_check_anchored(d, g, p, i, l, &anchors[l], cfg)?;
            if report.balanced && report.incidence_matches {
                continue;
            }
            let space_c = cell_span(d, l, &cell);
            if space_c.is_zero() {
                continue;
            }
            let sub = |marker: i64, rank: i64| -> CellKey {
                let mut k = vec![stage::BALANCE];
                k.extend(parent_key.iter().copied());
                k.extend([l as i64, marker, rank]);
                k
            };
            if !report.thin && !report.incidence_matches {
                // The witness region does not reach the whole cell: split by
                // incidence outcome.
                let pv = space_c.project(&anchors[l]);
                let (reference, _) = cell_region_indicator(&space_c, &cell, &pv, cfg)?;
                let outcome = region::incidence_set(&space_c, &reference, &cell, cfg);
                let mut group_of = std::collections::BTreeMap::<usize, i64>::new();
                for &x in &outcome.members {
                    group_of.insert(x, 0);
                }
                for &x in &outcome.on_divider {
                    group_of.insert(x, 2);
                }
                for &x in &outcome.degenerate {
                    group_of.insert(x, 3);
                }
                let mut groups = std::collections::BTreeMap::<i64, Vec<usize>>::new();
                for &x in &cell {
                    groups.entry(*group_of.get(&x).unwrap_or(&1)).or_default().push(x);
                }
                if groups.len() > 1 {
                    pieces = Some(groups.into_iter().map(|(r, m)| (sub(1, r), m)).collect());
                    break;
                }
            }
            if !report.thin && !report.inner_products_constant {
                // Split by indicator inner products.
                let pv = space_c.project(&anchors[l]);
                let (_, i_r) = cell_region_indicator(&space_c, &cell, &pv, cfg)?;
                let vals: Vec<f64> = cell.iter().map(|&u| i_r[u]).collect();
                let ranks = quantize::cluster_ranks(&vals, tol);
                let mut groups = std::collections::BTreeMap::<i64, Vec<usize>>::new();
                for (&x, r) in cell.iter().zip(ranks) {
                    groups.entry(r as i64).or_default().push(x);
                }
                if groups.len() > 1 {
                    pieces = Some(groups.into_iter().map(|(r, m)| (sub(2, r), m)).collect());
                    break;
                }
            }
            if !report.balanced {
                // Peel the residual space with the sum vector as anchor.
                let lifted = partition::lifted_eigenspace(g, p, d, l, cfg)?;
                let w = if report.thin {
                    subspace::ominus(&space_c, &lifted, cfg.tol)
                } else {
                    let pv = space_c.project(&anchors[l]);
                    let (_, i_r) = cell_region_indicator(&space_c, &cell, &pv, cfg)?;
                    let line = subspace::span_of(n, &[i_r], cfg.rank_tol);
                    subspace::ominus(&space_c, &subspace::sum(&lifted, &line), cfg.tol)
                };
                if w.is_zero() {
                    continue;
                }
                let sum = w.project(&cell_indicator(n, &cell));
                let t_w = EigenTables::from_subspace(&w, l, tol);
                let peeled = region::peel_with_anchor(&t_w, l, &sum, &cell, tol, cfg);
                if peeled.len() > 1 {
                    pieces = Some(
                        peeled
                            .into_iter()
                            .map(|(k, m, _)| {
                                let mut full = vec![stage::BALANCE];
                                full.extend(parent_key.iter().copied());
                                full.push(3);
                                full.extend(k);
                                (full, m)
                            })
                            .collect(),
                    );
                    break;
                }
            }
        }
        match pieces {
            Some(ps) => {
                changed = true;
                cells.extend(ps);
            }
            None => cells.push((parent_key, cell)),
        }
    }
    if !changed {
        return Ok(p.clone());
    }
    Ok(Partition::new(p.n(), cells).expect("balance split preserves partition validity"))
}

/// The balanced partition anchored at v: meet of the per-eigenspace region
/// peels (with v forced into its own cell), then rounds of equitable,
/// type/angle and balance refinement until stable.
pub fn vertex_partition(
    d: &SpectralDecomposition,
    g: &Graph,
    v: usize,
    cfg: &Config,
) -> Result<BalancedPartition> {
    let n = d.n();
    assert!(v < n, "vertex out of range");
    let tables: Vec<EigenTables> =
        (0..d.num_spaces()).map(|l| EigenTables::build(d, l, cfg)).collect();
    let anchors: Vec<Vector> =
        (0..d.num_spaces()).map(|l| d.project_basis_vector(l, v)).collect();

    let mut parts: Vec<Partition> = (0..d.num_spaces())
        .map(|l| region::region_peel_partition(d, &tables[l], l, v, cfg).partition)
        .collect();
    // The anchor is fixed by its own stabilizer; force it into a singleton.
    if n > 1 {
        let rest: Vec<usize> = (0..n).filter(|&x| x != v).collect();
        parts.push(
            Partition::new(n, vec![(vec![stage::SEED, 0], vec![v]), (vec![stage::SEED, 1], rest)])
                .expect("two-cell seed partition"),
        );
    }
    let seed = partition::meet_many(&parts)?;
    let (p, rounds, reports) = balanced_fixpoint(d, g, &tables, &anchors, seed, cfg)?;
    Ok(BalancedPartition { partition: p, anchor: v, reports, rounds })
}

/// Runs the equitable / type-angle / balance rounds from a seed partition
/// until stable; shared by vertex-anchored and block-anchored partitions.
pub(crate) fn balanced_fixpoint(
    d: &SpectralDecomposition,
    g: &Graph,
    tables: &[EigenTables],
    anchors: &[Vector],
    seed: Partition,
    cfg: &Config,
) -> Result<(Partition, usize, Vec<BalanceReport>)> {
    let n = d.n();
    let abs_tol = cfg.abs_tol(d.a_norm());
    let mut p = seed;
    let mut rounds = 0usize;
    loop {
        rounds += 1;
        assert!(rounds <= 2 * n + 4, "balanced fixpoint failed to terminate");
        let q1 = partition::refine_equitable(g, &p);
        let q2 = type_angle_refine(&q1, tables, anchors, abs_tol);
        if !q2.same_cells(&p) {
            p = q2;
            continue;
        }
        // Equitable and type/angle stable; q2 may differ from q1 only in
        // keys, and balance needs equitability, so refine from q1.
        let q3 = balance_refine(d, g, &q1, anchors, cfg)?;
        if q3.same_cells(&p) {
            p = q3;
            break;
        }
        p = q3;
    }
    let mut reports = Vec::new();
    for i in 0..p.num_cells() {
        for l in 0..d.num_spaces() {
            if p.cell(i).len() > 1 {
                reports.push(balance_check_anchored(d, g, &p, i, l, &anchors[l], cfg)?);
            }
        }
    }
    Ok((p, rounds, reports))
}

/// True iff inside every eigenspace-restricted span the inner products of
/// each member with all other members are constant.
pub fn is_complete_configuration(d: &SpectralDecomposition, s: &[usize], cfg: &Config) -> bool {
    assert!(s.len() >= 2, "complete configuration needs at least two vertices");
    let tol = cfg.abs_tol(d.a_norm());
    for l in 0..d.num_spaces() {
        let space_s = cell_span(d, l, s);
        if space_s.is_zero() {
            continue;
        }
        for &s0 in s {
            let ps = space_s.project(&basis_vector(d.n(), s0));
            let vals: Vec<f64> = s.iter().filter(|&&x| x != s0).map(|&x| ps[x]).collect();
            let (lo, hi) = vals
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            if hi - lo > tol {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub enum DichotomyCase {
    /// Projections of the big cell span a nonzero subspace of the residual
    /// spaces of the middle cells.
    NontrivialSpan { dim: usize },
    /// Every vertex outside the big cell reproduces the same big cell.
    SharedBigCell,
    NotApplicable { reason: String },
    /// Neither case held; this contradicts the dichotomy and is surfaced
    /// loudly by callers.
    Counterexample { vertex: usize, other_big_cell: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct DichotomyReport {
    pub case: DichotomyCase,
    pub big_cell: Vec<usize>,
    /// x -> big cell of the partition anchored at x, for x outside.
    pub shared_map: Vec<(usize, Vec<usize>)>,
}

/// The big-cell dichotomy: when the uniform partition is trivial, the
/// anchored partition has at least three cells and its largest cell holds
/// more than half the vertices, either the big cell spans a nonzero part of
/// the middle residual spaces, or all outside vertices share the big cell.
pub fn big_cell_dichotomy(
    d: &SpectralDecomposition,
    g: &Graph,
    v: usize,
    cfg: &Config,
) -> Result<DichotomyReport> {
    let n = d.n();
    let na = |reason: &str| DichotomyReport {
        case: DichotomyCase::NotApplicable { reason: reason.into() },
        big_cell: vec![],
        shared_map: vec![],
    };
    let uniform = crate::global::uniform_partition(d, g, cfg)?;
    if !uniform.partition.is_unit() {
        return Ok(na("uniform partition is not trivial"));
    }
    let bp = vertex_partition(d, g, v, cfg)?;
    let m = bp.partition.num_cells();
    if m < 3 {
        return Ok(na("anchored partition has fewer than three cells"));
    }
    let big_idx = (0..m)
        .max_by_key(|&i| bp.partition.cell(i).len())
        .expect("at least one cell");
    let big: Vec<usize> = bp.partition.cell(big_idx).to_vec();
    if 2 * big.len() <= n {
        return Ok(na("big cell covers at most half the vertices"));
    }

    // Middle cells: everything except the anchor singleton and the big cell.
    let middle: Vec<usize> = (0..m)
        .filter(|&i| i != big_idx && bp.partition.cell(i) != [v])
        .flat_map(|i| bp.partition.cell(i).iter().copied())
        .collect();
    let mut span_dim = 0usize;
    let mut big_dirs: Vec<Vector> = Vec::new();
    for l in 0..d.num_spaces() {
        let y = partition::lifted_complement(g, &bp.partition, d, l, cfg)?;
        // Unit-vector projections: an absolute cutoff keeps cancellation
        // noise from being normalized into spurious directions.
        let x_mid = Subspace::from_orthonormal(
            n,
            linalg::orthonormalize_abs(
                &middle.iter().map(|&x| y.project(&basis_vector(n, x))).collect::<Vec<_>>(),
                1e-8,
            ),
        );
        if x_mid.is_zero() {
            continue;
        }
        for &y_vert in &big {
            big_dirs.push(x_mid.project(&basis_vector(n, y_vert)));
        }
    }
    if !big_dirs.is_empty() {
        span_dim = linalg::orthonormalize_abs(&big_dirs, 1e-8).len();
    }
    if span_dim > 0 {
        return Ok(DichotomyReport {
            case: DichotomyCase::NontrivialSpan { dim: span_dim },
            big_cell: big,
            shared_map: vec![],
        });
    }

    let mut shared_map = Vec::new();
    for x in 0..n {
        if big.contains(&x) {
            continue;
        }
        let bx = vertex_partition(d, g, x, cfg)?;
        let bx_big = (0..bx.partition.num_cells())
            .max_by_key(|&i| bx.partition.cell(i).len())
            .map(|i| bx.partition.cell(i).to_vec())
            .unwrap_or_default();
        if bx_big != big {
            return Ok(DichotomyReport {
                case: DichotomyCase::Counterexample { vertex: x, other_big_cell: bx_big },
                big_cell: big,
                shared_map,
            });
        }
        shared_map.push((x, bx_big));
    }
    Ok(DichotomyReport { case: DichotomyCase::SharedBigCell, big_cell: big, shared_map })
}
