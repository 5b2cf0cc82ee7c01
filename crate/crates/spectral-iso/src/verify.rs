//! End-to-end verification suites: each one exercises an engine-level
//! guarantee against the brute-force permutation oracle on an exhaustive
//! small corpus or a planted workload, and returns a structured outcome.
//! The CLI's `verify-theorems` subcommand and the acceptance tests both run
//! these.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::balanced;
use crate::config::Config;
use crate::corpus;
use crate::error::Result;
use crate::global;
use crate::graph::{self, Graph};
use crate::iso::{self, Verdict};
use crate::oracle;
use crate::partition::{self, Partition};
use crate::spectral::decompose_graph;

/// Outcome of one verification suite. `skipped` marks a suite whose
/// preconditions the host cannot meet (reported, never silently passed).
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub skipped: bool,
    pub detail: String,
}

impl SuiteResult {
    fn pass(name: &'static str, detail: String) -> SuiteResult {
        SuiteResult { name, passed: true, skipped: false, detail }
    }

    fn fail(name: &'static str, detail: String) -> SuiteResult {
        SuiteResult { name, passed: false, skipped: false, detail }
    }

    fn skip(name: &'static str, detail: String) -> SuiteResult {
        SuiteResult { name, passed: true, skipped: true, detail }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "passed": self.passed,
            "skipped": self.skipped,
            "detail": self.detail,
        })
    }
}

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("simple edge list")
}

fn planted_pair(n: usize, p: f64, rng: &mut ChaCha8Rng) -> (Graph, Graph) {
    let g = random_graph(n, p, rng);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let h = g.permuted(&perm);
    (g, h)
}

/// Every cell of each anchored partition is a union of orbits of the
/// vertex stabilizer, and every cell of the anchor-free partition is a
/// union of automorphism orbits, over the exhaustive corpus.
pub fn orbit_soundness(max_n: usize, cfg: &Config) -> Result<SuiteResult> {
    let name = "orbit-soundness";
    let mut graphs = 0usize;
    let mut anchored = 0usize;
    for n in 1..=max_n {
        for g in corpus::all_graphs(n) {
            graphs += 1;
            let d = decompose_graph(&g, cfg)?;
            let up = global::uniform_partition(&d, &g, cfg)?;
            let group = oracle::automorphism_group(&g, cfg)?;
            if !group.orbits().refines(&up.partition) {
                return Ok(SuiteResult::fail(
                    name,
                    format!("anchor-free cell splits an orbit, n={n} edges={:?}",
                        g.edges().collect::<Vec<_>>()),
                ));
            }
            for v in 0..n {
                anchored += 1;
                let stab_orbits = group.stabilizer(&[v])?.orbits();
                if !stab_orbits.refines(&up.vertex_partitions[v].partition) {
                    return Ok(SuiteResult::fail(
                        name,
                        format!("anchored cell splits a stabilizer orbit, n={n} v={v} edges={:?}",
                            g.edges().collect::<Vec<_>>()),
                    ));
                }
            }
        }
    }
    Ok(SuiteResult::pass(
        name,
        format!("{graphs} graphs (n <= {max_n}), {anchored} anchored partitions"),
    ))
}

/// The spectral equitability test agrees with the combinatorial one on
/// every partition of every corpus graph.
pub fn equitable_equivalence(max_n: usize, cfg: &Config) -> Result<SuiteResult> {
    let name = "equitable-equivalence";
    let mut checked = 0usize;
    for n in 1..=max_n {
        let partitions = corpus::all_partitions(n);
        for g in corpus::all_graphs(n) {
            let d = decompose_graph(&g, cfg)?;
            let tol = cfg.abs_tol(d.a_norm());
            for cells in &partitions {
                let p = Partition::from_cells(n, cells.clone())?;
                checked += 1;
                let comb = partition::is_equitable(&g, &p);
                let spec = partition::is_equitable_spectral(&d, &p, tol);
                if comb != spec {
                    return Ok(SuiteResult::fail(
                        name,
                        format!("disagree on n={n} cells={cells:?} edges={:?} (combinatorial={comb})",
                            g.edges().collect::<Vec<_>>()),
                    ));
                }
            }
        }
    }
    Ok(SuiteResult::pass(name, format!("{checked} (graph, partition) pairs, n <= {max_n}")))
}

/// The orbit equation holds for every (graph, orbit, eigenvalue) triple on
/// the exhaustive corpus: the lifted eigenspace of the orbit partition
/// equals the intersection of lifted stabilizer spaces and gamma-witness
/// fixed spaces.
pub fn orbit_equation(max_n: usize, cfg: &Config) -> Result<SuiteResult> {
    let name = "orbit-equation";
    let mut checked = 0usize;
    for n in 2..=max_n {
        for g in corpus::all_graphs(n) {
            let d = decompose_graph(&g, cfg)?;
            let group = oracle::automorphism_group(&g, cfg)?;
            let orbits = group.orbits();
            for t_idx in 0..orbits.num_cells() {
                let t = orbits.cell(t_idx);
                for l in 0..d.num_spaces() {
                    checked += 1;
                    let rep = oracle::verify_orbit_equation(&g, &d, &group, t, l, cfg)?;
                    if !rep.equal {
                        return Ok(SuiteResult::fail(
                            name,
                            format!("n={n} orbit={t:?} eigenspace={l} lhs_dim={} rhs_dim={} edges={:?}",
                                rep.lhs_dim, rep.rhs_dim, g.edges().collect::<Vec<_>>()),
                        ));
                    }
                }
            }
        }
    }
    Ok(SuiteResult::pass(name, format!("{checked} (graph, orbit, eigenvalue) triples, n <= {max_n}")))
}

/// On every equitable partition with at least two non-singleton cells,
/// projection constancy between two cells coincides with orthogonality of
/// their lifted residual spans, in both directions.
pub fn cell_orthogonality_equivalence(max_n: usize, cfg: &Config) -> Result<SuiteResult> {
    let name = "cell-orthogonality-equivalence";
    let mut checked = 0usize;
    for n in 2..=max_n {
        let partitions = corpus::all_partitions(n);
        for g in corpus::all_graphs(n) {
            let d = decompose_graph(&g, cfg)?;
            for cells in &partitions {
                if cells.iter().filter(|c| c.len() > 1).count() < 2 {
                    continue;
                }
                let p = Partition::from_cells(n, cells.clone())?;
                if !partition::is_equitable(&g, &p) {
                    continue;
                }
                // Indices into the canonicalized partition, not the input.
                let big: Vec<usize> =
                    (0..p.num_cells()).filter(|&i| p.cell(i).len() > 1).collect();
                for &i in &big {
                    for &j in &big {
                        if i == j {
                            continue;
                        }
                        checked += 1;
                        let rep = partition::cell_orthogonality_report(&g, &d, &p, i, j, cfg)?;
                        if rep.projection_constant != rep.orthogonal {
                            return Ok(SuiteResult::fail(
                                name,
                                format!("n={n} cells={cells:?} pair=({i},{j}) constant={} orthogonal={} edges={:?}",
                                    rep.projection_constant, rep.orthogonal,
                                    g.edges().collect::<Vec<_>>()),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(SuiteResult::pass(name, format!("{checked} ordered cell pairs, n <= {max_n}")))
}

/// On every (graph, vertex) where the dichotomy's preconditions hold, the
/// outcome is one of its two cases, never the counterexample record. The
/// number of applicable instances is reported.
pub fn big_cell_dichotomy(max_n: usize, cfg: &Config) -> Result<SuiteResult> {
    let name = "big-cell-dichotomy";
    let mut applicable = 0usize;
    let mut spans = 0usize;
    let mut shared = 0usize;
    for n in 2..=max_n {
        for g in corpus::all_graphs(n) {
            let d = decompose_graph(&g, cfg)?;
            let up = global::uniform_partition(&d, &g, cfg)?;
            if !up.partition.is_unit() {
                continue;
            }
            for v in 0..n {
                let rep = balanced::big_cell_dichotomy(&d, &g, v, cfg)?;
                match rep.case {
                    balanced::DichotomyCase::NontrivialSpan { .. } => {
                        applicable += 1;
                        spans += 1;
                    }
                    balanced::DichotomyCase::SharedBigCell => {
                        applicable += 1;
                        shared += 1;
                    }
                    balanced::DichotomyCase::NotApplicable { .. } => {}
                    balanced::DichotomyCase::Counterexample { vertex, ref other_big_cell } => {
                        return Ok(SuiteResult::fail(
                            name,
                            format!("counterexample n={n} v={v} vertex={vertex} other_big_cell={other_big_cell:?} edges={:?}",
                                g.edges().collect::<Vec<_>>()),
                        ));
                    }
                }
            }
        }
    }
    Ok(SuiteResult::pass(
        name,
        format!("{applicable} applicable (graph, vertex) instances, n <= {max_n} ({spans} span, {shared} shared)"),
    ))
}

/// Every nontrivial block candidate the engine emits on the corpus is a
/// genuine block of the true automorphism group.
pub fn block_soundness(max_n: usize, cfg: &Config) -> Result<SuiteResult> {
    let name = "block-soundness";
    let mut emitted = 0usize;
    let mut nontrivial = 0usize;
    for n in 2..=max_n {
        for g in corpus::all_graphs(n) {
            let d = decompose_graph(&g, cfg)?;
            let up = global::uniform_partition(&d, &g, cfg)?;
            let parts: Vec<Partition> = up
                .vertex_partitions
                .iter()
                .map(|bp| bp.partition.clone())
                .collect();
            let group = oracle::automorphism_group(&g, cfg)?;
            for i in 0..up.partition.num_cells() {
                let cell = up.partition.cell(i);
                if cell.len() < 2 {
                    continue;
                }
                let cand = global::select_block_candidate(&d, cell, &parts, cfg);
                emitted += 1;
                if cand.b.len() > 1 && cand.b.len() < cell.len() {
                    nontrivial += 1;
                    if !oracle::is_block(&group, &cand.b) {
                        return Ok(SuiteResult::fail(
                            name,
                            format!("not a block: n={n} B={:?} cell={cell:?} edges={:?}",
                                cand.b, g.edges().collect::<Vec<_>>()),
                        ));
                    }
                }
            }
        }
    }
    Ok(SuiteResult::pass(
        name,
        format!("{emitted} candidates, {nontrivial} nontrivial and oracle-verified, n <= {max_n}"),
    ))
}

/// The isomorphism decision agrees with the enumeration oracle on all
/// same-spectrum corpus pairs, tells apart the classic cospectral pair, and
/// decides planted pairs at n = 50 with verified certificates.
pub fn iso_correctness(max_n: usize, planted_pairs: usize, cfg: &Config) -> Result<SuiteResult> {
    let name = "iso-correctness";
    let mut pairs = 0usize;
    for n in 2..=max_n {
        let gs = corpus::all_graphs(n);
        let ds: Vec<_> = gs
            .iter()
            .map(|g| decompose_graph(g, cfg))
            .collect::<Result<Vec<_>>>()?;
        for a in 0..gs.len() {
            for b in a..gs.len() {
                let (sa, sb) = (ds[a].eigenvalues(), ds[b].eigenvalues());
                if sa.len() != sb.len() || sa.iter().zip(sb).any(|(x, y)| (x - y).abs() > 1e-6) {
                    continue;
                }
                pairs += 1;
                let want = oracle::isomorphism_by_enumeration(&gs[a], &gs[b]).is_some();
                let got = iso::are_isomorphic(&gs[a], &gs[b], cfg)?;
                if (got.verdict == Verdict::Isomorphic) != want {
                    return Ok(SuiteResult::fail(
                        name,
                        format!("n={n} pair=({a},{b}) oracle={want} engine={:?} reason={:?}",
                            got.verdict, got.reason),
                    ));
                }
                if let Some(m) = &got.mapping {
                    if !iso::verify_isomorphism(&gs[a], &gs[b], m)? {
                        return Ok(SuiteResult::fail(
                            name,
                            format!("mapping fails verification, n={n} pair=({a},{b})"),
                        ));
                    }
                }
            }
        }
    }
    // The classic same-spectrum non-isomorphic pair.
    let star = graph::star(4);
    let c4k1 = graph::disjoint_union(&graph::cycle(4)?, &Graph::new(1, vec![])?);
    let c = iso::are_isomorphic(&star, &c4k1, cfg)?;
    if c.verdict != Verdict::NonIsomorphic {
        return Ok(SuiteResult::fail(name, "cospectral pair misjudged isomorphic".into()));
    }
    // Planted pairs: relabeled random graphs must come back isomorphic with
    // a verified mapping.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5150);
    for i in 0..planted_pairs {
        let (g, h) = planted_pair(50, 0.3, &mut rng);
        let c = iso::are_isomorphic(&g, &h, cfg)?;
        let ok = c.verdict == Verdict::Isomorphic
            && iso::verify_isomorphism(&g, &h, c.mapping.as_deref().unwrap_or(&[]))?;
        if !ok {
            return Ok(SuiteResult::fail(name, format!("planted pair {i} at n=50 failed")));
        }
    }
    Ok(SuiteResult::pass(
        name,
        format!("{pairs} same-spectrum corpus pairs (n <= {max_n}), cospectral pair, {planted_pairs} planted n=50 pairs"),
    ))
}

/// Automorphism group orders of well-known families come out exactly.
pub fn known_group_orders(cfg: &Config) -> Result<SuiteResult> {
    let name = "known-group-orders";
    let mut cases: Vec<(String, Graph, u128)> = Vec::new();
    for n in 1..=8u128 {
        let fact: u128 = (1..=n).product();
        cases.push((format!("complete:{n}"), graph::complete(n as usize), fact));
    }
    for n in 3..=12u128 {
        cases.push((format!("cycle:{n}"), graph::cycle(n as usize)?, 2 * n));
    }
    cases.push(("cube".into(), graph::cube(), 48));
    cases.push(("petersen".into(), graph::petersen(), 120));
    let count = cases.len();
    for (label, g, want) in cases {
        let got = oracle::automorphism_group(&g, cfg)?.order;
        if got != want {
            return Ok(SuiteResult::fail(name, format!("{label}: order {got}, expected {want}")));
        }
    }
    Ok(SuiteResult::pass(name, format!("{count} families checked")))
}

/// Frobenius reconstruction error of the eigendecomposition stays below
/// 1e-10 * n on every corpus graph. (Byte-identical CLI output is checked
/// at the binary level by the acceptance tests and by `verify-theorems`.)
pub fn reconstruction_hygiene(max_n: usize, cfg: &Config) -> Result<SuiteResult> {
    let name = "reconstruction-hygiene";
    let mut graphs = 0usize;
    let mut worst = 0.0f64;
    for n in 1..=max_n {
        for g in corpus::all_graphs(n) {
            graphs += 1;
            let d = decompose_graph(&g, cfg)?;
            let err = d.reconstruction_error(&g.adjacency_matrix());
            worst = worst.max(err / n as f64);
            if err > 1e-10 * n as f64 {
                return Ok(SuiteResult::fail(
                    name,
                    format!("reconstruction error {err:.3e} > 1e-10*n at n={n} edges={:?}",
                        g.edges().collect::<Vec<_>>()),
                ));
            }
        }
    }
    Ok(SuiteResult::pass(
        name,
        format!("{graphs} graphs (n <= {max_n}), worst error/n = {worst:.3e}"),
    ))
}

/// Planted-pair decision at n = 200 on one thread stays under the time
/// budget; the per-vertex partition stage shows the expected speedup when
/// four cores are available (skipped, not faked, on smaller hosts).
pub fn performance_sanity(cfg: &Config) -> Result<SuiteResult> {
    let name = "performance-sanity";
    let single = Config { threads: 1, ..cfg.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let (g, h) = planted_pair(200, 0.5, &mut rng);
    let t0 = Instant::now();
    let c = iso::are_isomorphic(&g, &h, &single)?;
    let elapsed = t0.elapsed();
    let ok = c.verdict == Verdict::Isomorphic
        && iso::verify_isomorphism(&g, &h, c.mapping.as_deref().unwrap_or(&[]))?;
    if !ok {
        return Ok(SuiteResult::fail(name, "planted n=200 pair not decided isomorphic".into()));
    }
    if elapsed.as_secs_f64() >= 5.0 {
        return Ok(SuiteResult::fail(
            name,
            format!("planted n=200 decision took {:.2}s (budget 5s)", elapsed.as_secs_f64()),
        ));
    }
    let cores = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1);
    if cores < 4 {
        return Ok(SuiteResult::skip(
            name,
            format!(
                "decision {:.2}s < 5s on one thread; speedup check needs 4 cores, host has {cores}",
                elapsed.as_secs_f64()
            ),
        ));
    }
    // Time the per-vertex partition stage serial vs. four workers on a
    // vertex slice large enough to dominate thread startup.
    let d = decompose_graph(&g, &single)?;
    let sample: Vec<usize> = (0..16).collect();
    let time_stage = |threads: usize| -> Result<f64> {
        let c = Config { threads, ..cfg.clone() };
        let t0 = Instant::now();
        if threads == 1 {
            for &v in &sample {
                balanced::vertex_partition(&d, &g, v, &c)?;
            }
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool");
            pool.install(|| {
                use rayon::prelude::*;
                sample
                    .par_iter()
                    .map(|&v| balanced::vertex_partition(&d, &g, v, &c).map(|_| ()))
                    .collect::<Result<Vec<()>>>()
            })?;
        }
        Ok(t0.elapsed().as_secs_f64())
    };
    let serial = time_stage(1)?;
    let parallel = time_stage(4)?;
    let speedup = serial / parallel;
    if speedup < 3.0 {
        return Ok(SuiteResult::fail(
            name,
            format!("per-vertex stage speedup {speedup:.2}x on 4 cores (need 3x)"),
        ));
    }
    Ok(SuiteResult::pass(
        name,
        format!("decision {:.2}s < 5s; stage speedup {speedup:.2}x on 4 cores", elapsed.as_secs_f64()),
    ))
}

/// All suites at their full advertised sizes, in criterion order.
pub fn run_all(cfg: &Config) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        orbit_soundness(7, cfg)?,
        equitable_equivalence(5, cfg)?,
        orbit_equation(7, cfg)?,
        cell_orthogonality_equivalence(6, cfg)?,
        big_cell_dichotomy(7, cfg)?,
        block_soundness(7, cfg)?,
        iso_correctness(6, 100, cfg)?,
        known_group_orders(cfg)?,
        reconstruction_hygiene(7, cfg)?,
        performance_sanity(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config { threads: 1, ..Config::default() }
    }

    // Small-size smoke runs; the acceptance tests run the full sizes.
    #[test]
    fn suites_pass_at_reduced_sizes() {
        let cfg = cfg();
        for r in [
            orbit_soundness(4, &cfg).unwrap(),
            equitable_equivalence(4, &cfg).unwrap(),
            orbit_equation(4, &cfg).unwrap(),
            cell_orthogonality_equivalence(4, &cfg).unwrap(),
            big_cell_dichotomy(4, &cfg).unwrap(),
            block_soundness(4, &cfg).unwrap(),
            iso_correctness(4, 2, &cfg).unwrap(),
            reconstruction_hygiene(4, &cfg).unwrap(),
        ] {
            assert!(r.passed, "{}: {}", r.name, r.detail);
            assert!(!r.skipped, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn group_orders_exact() {
        let r = known_group_orders(&cfg()).unwrap();
        assert!(r.passed, "{}", r.detail);
    }
}
