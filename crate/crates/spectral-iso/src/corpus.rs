//! Exhaustive test corpora: all simple graphs up to isomorphism for small
//! n (built by one-vertex extensions with canonical-form deduplication)
//! and all set partitions of [n].

use std::collections::BTreeSet;

use crate::graph::Graph;

/// Upper-triangle bit index of the pair {i, j}, i < j.
fn bit(i: usize, j: usize) -> u32 {
    debug_assert!(i < j);
    (j * (j - 1) / 2 + i) as u32
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn rec(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(cur, k + 1, out);
            cur.swap(k, i);
        }
    }
    rec(&mut cur, 0, &mut out);
    out
}

fn relabel(mask: u32, n: usize, perm: &[usize]) -> u32 {
    let mut out = 0u32;
    for j in 1..n {
        for i in 0..j {
            if mask >> bit(i, j) & 1 == 1 {
                let (a, b) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
                out |= 1 << bit(a, b);
            }
        }
    }
    out
}

fn canonical(mask: u32, n: usize, perms: &[Vec<usize>]) -> u32 {
    perms.iter().map(|p| relabel(mask, n, p)).min().unwrap()
}

fn mask_to_graph(mask: u32, n: usize) -> Graph {
    let mut edges = Vec::new();
    for j in 1..n {
        for i in 0..j {
            if mask >> bit(i, j) & 1 == 1 {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("well-formed corpus graph")
}

/// Every simple graph on n vertices, one representative per isomorphism
/// class (counts 1, 2, 4, 11, 34, 156, 1044 for n = 1..7). Built by
/// attaching one vertex with every possible neighborhood to each graph of
/// order n-1 and deduplicating canonical edge masks.
pub fn all_graphs(n: usize) -> Vec<Graph> {
    assert!(n >= 1 && n <= 8, "corpus is sized for 1 <= n <= 8");
    let mut masks: BTreeSet<u32> = BTreeSet::new();
    masks.insert(0);
    for m in 2..=n {
        let perms = all_perms(m);
        let mut next = BTreeSet::new();
        for &base in &masks {
            for nbhd in 0u32..(1 << (m - 1)) {
                let mut mask = base;
                for i in 0..m - 1 {
                    if nbhd >> i & 1 == 1 {
                        mask |= 1 << bit(i, m - 1);
                    }
                }
                next.insert(canonical(mask, m, &perms));
            }
        }
        masks = next;
    }
    masks.into_iter().map(|m| mask_to_graph(m, n)).collect()
}

/// All set partitions of {0, .., n-1}, cells and members sorted (Bell
/// numbers: 1, 2, 5, 15, 52, 203, 877 for n = 1..7).
pub fn all_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    fn rec(v: usize, n: usize, cells: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if v == n {
            out.push(cells.clone());
            return;
        }
        for i in 0..cells.len() {
            cells[i].push(v);
            rec(v + 1, n, cells, out);
            cells[i].pop();
        }
        cells.push(vec![v]);
        rec(v + 1, n, cells, out);
        cells.pop();
    }
    rec(0, n, &mut cells, &mut out);
    out
}
