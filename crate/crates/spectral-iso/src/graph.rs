//! Simple undirected graphs on vertex set {1..n} (stored 0-based), with
//! graph6 and edge-list codecs plus the named-family generators used by
//! the test corpora.

use crate::error::{Error, Result};
use std::collections::BTreeSet;

/// Simple undirected graph. Vertices are 1-based at every external
/// interface and 0-based internally; edges are stored as ordered pairs
/// (u, v) with u < v.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from 0-based endpoint pairs; duplicates collapse.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Invalid(format!(
                    "edge ({},{}) out of range for n = {n}",
                    u + 1,
                    v + 1
                )));
            }
            if u == v {
                return Err(Error::Invalid(format!("self-loop at vertex {}", u + 1)));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Graph { n, edges: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        (0..self.n).filter(|&v| self.has_edge(u, v)).collect()
    }

    pub fn degree(&self, u: usize) -> usize {
        (0..self.n).filter(|&v| self.has_edge(u, v)).count()
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.n).map(|u| self.degree(u)).collect();
        d.sort();
        d
    }

    pub fn adjacency_matrix(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for &(u, v) in &self.edges {
            a[u][v] = 1.0;
            a[v][u] = 1.0;
        }
        a
    }

    /// Image of the graph under `perm`, where `perm[i]` is the new index of
    /// old vertex i (0-based).
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v]));
        Graph::new(self.n, edges).expect("permutation preserves validity")
    }

    /// Compact adjacency bitstring, usable as a canonical-form ingredient.
    pub fn adjacency_bits(&self) -> Vec<u64> {
        let mut bits = vec![0u64; (self.n * self.n + 63) / 64];
        for &(u, v) in &self.edges {
            for (a, b) in [(u, v), (v, u)] {
                let k = a * self.n + b;
                bits[k / 64] |= 1 << (k % 64);
            }
        }
        bits
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "edges": self
                .edges
                .iter()
                .map(|&(u, v)| vec![u + 1, v + 1])
                .collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------------------
// graph6 codec (single-byte header, n <= 62)

pub fn parse_graph6(text: &str) -> Result<Graph> {
    let bytes: Vec<u8> = text.trim_end_matches(['\n', '\r']).bytes().collect();
    if bytes.is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty graph6 string".into(),
        });
    }
    for (i, &b) in bytes.iter().enumerate() {
        if !(63..=126).contains(&b) {
            return Err(Error::Parse {
                offset: i,
                message: format!("byte {b} outside the graph6 range 63..126"),
            });
        }
    }
    if bytes[0] == 126 {
        return Err(Error::Parse {
            offset: 0,
            message: "multi-byte vertex counts (n > 62) are not supported".into(),
        });
    }
    let n = (bytes[0] - 63) as usize;
    let nbits = n * n.saturating_sub(1) / 2;
    let body_len = (nbits + 5) / 6;
    if bytes.len() < 1 + body_len {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!(
                "truncated body: need {body_len} data bytes for n = {n}, found {}",
                bytes.len() - 1
            ),
        });
    }
    if bytes.len() > 1 + body_len {
        return Err(Error::Parse {
            offset: 1 + body_len,
            message: "trailing garbage after graph6 body".into(),
        });
    }
    let mut edges = Vec::new();
    let mut k = 0usize; // bit cursor over the upper triangle, column-major
    for j in 1..n {
        for i in 0..j {
            let byte = bytes[1 + k / 6] - 63;
            let bit = (byte >> (5 - k % 6)) & 1;
            if bit == 1 {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    Graph::new(n, edges)
}

pub fn to_graph6(g: &Graph) -> Result<String> {
    if g.n > 62 {
        return Err(Error::Invalid(format!(
            "graph6 output limited to n <= 62, got n = {}",
            g.n
        )));
    }
    let mut out = vec![63 + g.n as u8];
    let nbits = g.n * g.n.saturating_sub(1) / 2;
    let mut acc = 0u8;
    let mut used = 0usize;
    let mut k = 0usize;
    for j in 1..g.n {
        for i in 0..j {
            acc = (acc << 1) | u8::from(g.has_edge(i, j));
            used += 1;
            k += 1;
            if used == 6 {
                out.push(63 + acc);
                acc = 0;
                used = 0;
            }
        }
    }
    let _ = k;
    if nbits % 6 != 0 {
        acc <<= 6 - nbits % 6;
        out.push(63 + acc);
    }
    Ok(String::from_utf8(out).expect("graph6 bytes are ASCII"))
}

// ---------------------------------------------------------------------------
// Edge-list codec: first line n, then "u v" per line, 1-based.

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| Error::Parse {
        offset: 0,
        message: "missing vertex-count line".into(),
    })?;
    let n: usize = first.trim().parse().map_err(|_| Error::Parse {
        offset: 0,
        message: format!("vertex count line is not an integer: {first:?}"),
    })?;
    let mut edges = Vec::new();
    for line in lines {
        let mut it = line.split_whitespace();
        let (u, v) = match (it.next(), it.next(), it.next()) {
            (Some(u), Some(v), None) => (u, v),
            _ => {
                return Err(Error::Invalid(format!(
                    "edge line must be two integers: {line:?}"
                )))
            }
        };
        let parse = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::Invalid(format!("bad vertex id {s:?}")))
        };
        let (u, v) = (parse(u)?, parse(v)?);
        if u == 0 || v == 0 || u > n || v > n {
            return Err(Error::Invalid(format!(
                "vertex out of range 1..={n} in edge {u} {v}"
            )));
        }
        if u == v {
            return Err(Error::Invalid(format!("self-loop {u} {v} not allowed")));
        }
        edges.push((u - 1, v - 1));
    }
    Graph::new(n, edges)
}

pub fn to_edge_list(g: &Graph) -> String {
    let mut out = format!("{}\n", g.n);
    for (u, v) in g.edges() {
        out.push_str(&format!("{} {}\n", u + 1, v + 1));
    }
    out
}

// ---------------------------------------------------------------------------
// Named families

pub fn complete(n: usize) -> Graph {
    Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).unwrap()
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::Invalid(format!("cycle needs n >= 3, got {n}")));
    }
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
}

pub fn path(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (i - 1, i))).unwrap()
}

/// Star with `leaves` leaves: vertex 1 is the center, n = leaves + 1.
pub fn star(leaves: usize) -> Graph {
    Graph::new(leaves + 1, (1..=leaves).map(|i| (0, i))).unwrap()
}

/// 3-cube on 8 vertices; vertex k corresponds to the bit pattern of k-1,
/// edges join patterns at Hamming distance 1. N(1) = {2,3,5}, N(8) = {4,6,7}.
pub fn cube() -> Graph {
    let mut edges = Vec::new();
    for u in 0..8usize {
        for b in 0..3 {
            let v = u ^ (1 << b);
            if u < v {
                edges.push((u, v));
            }
        }
    }
    Graph::new(8, edges).unwrap()
}

/// Petersen graph: outer 5-cycle 1..5, inner pentagram 6..10, spokes i - i+5.
pub fn petersen() -> Graph {
    let mut edges = Vec::new();
    for i in 0..5usize {
        edges.push((i, (i + 1) % 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
        edges.push((i, 5 + i));
    }
    Graph::new(10, edges).unwrap()
}

pub fn circulant(n: usize, connection: &[usize]) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Invalid("circulant needs n >= 1".into()));
    }
    let mut edges = Vec::new();
    for &s in connection {
        if s == 0 || s >= n {
            return Err(Error::Invalid(format!(
                "circulant connection value {s} outside 1..{}",
                n - 1
            )));
        }
        for i in 0..n {
            edges.push((i, (i + s) % n));
        }
    }
    Graph::new(n, edges)
}

pub fn complete_bipartite(m: usize, n: usize) -> Graph {
    Graph::new(m + n, (0..m).flat_map(|i| (0..n).map(move |j| (i, m + j)))).unwrap()
}

pub fn disjoint_union(g: &Graph, h: &Graph) -> Graph {
    let shift = g.n;
    let edges = g
        .edges()
        .chain(h.edges().map(|(u, v)| (u + shift, v + shift)));
    Graph::new(g.n + h.n, edges).unwrap()
}

/// Line graph: one vertex per edge of `g` (in the stored edge order),
/// adjacency = shared endpoint.
pub fn line_graph(g: &Graph) -> Graph {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let m = edges.len();
    let mut le = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let (a, b) = edges[i];
            let (c, d) = edges[j];
            if a == c || a == d || b == c || b == d {
                le.push((i, j));
            }
        }
    }
    Graph::new(m, le).unwrap()
}

/// Parses a named-graph spec string.
///
/// Grammar: `complete:N`, `cycle:N`, `path:N`, `star:LEAVES`, `cube`,
/// `petersen`, `circulant:N:S1,S2,...`, `bipartite:M:N`,
/// `line:<spec>`, `union:<spec>/<spec>`.
pub fn generate_named(spec: &str) -> Result<Graph> {
    let parse_num = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Invalid(format!("bad numeric parameter {s:?} in named spec")))
    };
    if let Some(rest) = spec.strip_prefix("line:") {
        return Ok(line_graph(&generate_named(rest)?));
    }
    if let Some(rest) = spec.strip_prefix("union:") {
        let mut parts = rest.splitn(2, '/');
        let a = parts
            .next()
            .ok_or_else(|| Error::Invalid("union needs two parts".into()))?;
        let b = parts
            .next()
            .ok_or_else(|| Error::Invalid("union:<spec>/<spec> needs two parts".into()))?;
        return Ok(disjoint_union(&generate_named(a)?, &generate_named(b)?));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["complete", n] => Ok(complete(parse_num(n)?)),
        ["cycle", n] => cycle(parse_num(n)?),
        ["path", n] => Ok(path(parse_num(n)?)),
        ["star", n] => Ok(star(parse_num(n)?)),
        ["cube"] => Ok(cube()),
        ["petersen"] => Ok(petersen()),
        ["bipartite", m, n] => Ok(complete_bipartite(parse_num(m)?, parse_num(n)?)),
        ["circulant", n, set] => {
            let conn: Result<Vec<usize>> = set.split(',').map(parse_num).collect();
            circulant(parse_num(n)?, &conn?)
        }
        _ => Err(Error::Invalid(format!("unknown named graph spec {spec:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph6_k4() {
        let g = parse_graph6("C~").unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g, complete(4));
    }

    #[test]
    fn graph6_one_vertex() {
        let g = parse_graph6("@").unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn graph6_trailing_byte_offset() {
        // 'C' declares n = 4 (one data byte); the second data byte is garbage.
        match parse_graph6("C??") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn graph6_truncated_and_bad_byte() {
        assert!(matches!(
            parse_graph6("D?"),
            Err(Error::Parse { offset: 2, .. })
        ));
        assert!(matches!(
            parse_graph6("C\x1f"),
            Err(Error::Parse { offset: 1, .. })
        ));
    }

    #[test]
    fn graph6_roundtrip() {
        for spec in ["cube", "petersen", "path:7", "cycle:6", "star:4", "complete:9"] {
            let g = generate_named(spec).unwrap();
            let enc = to_graph6(&g).unwrap();
            assert_eq!(parse_graph6(&enc).unwrap(), g, "roundtrip failed for {spec}");
        }
    }

    #[test]
    fn edge_list_examples() {
        let k3 = parse_edge_list("3\n1 2\n2 3\n1 3").unwrap();
        assert_eq!(k3, complete(3));
        let e2 = parse_edge_list("2\n").unwrap();
        assert_eq!(e2.n(), 2);
        assert_eq!(e2.edge_count(), 0);
        assert!(parse_edge_list("3\n1 4").is_err());
        assert!(parse_edge_list("3\n2 2").is_err());
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = petersen();
        assert_eq!(parse_edge_list(&to_edge_list(&g)).unwrap(), g);
    }

    #[test]
    fn complete_edge_counts() {
        for n in 0..=32 {
            assert_eq!(complete(n).edge_count(), n * n.saturating_sub(1) / 2);
        }
    }

    #[test]
    fn cube_shape() {
        let g = cube();
        assert_eq!(g.n(), 8);
        assert_eq!(g.edge_count(), 12);
        assert!((0..8).all(|v| g.degree(v) == 3));
        assert_eq!(g.neighbors(0), vec![1, 2, 4]);
        assert_eq!(g.neighbors(7), vec![3, 5, 6]);
    }

    #[test]
    fn petersen_shape() {
        let g = petersen();
        assert_eq!((g.n(), g.edge_count()), (10, 15));
        assert!((0..10).all(|v| g.degree(v) == 3));
    }

    #[test]
    fn line_graphs_of_k3_and_star3_coincide_with_k3() {
        // Both graphs have three pairwise-intersecting edges, so both line
        // graphs are triangles even though K3 and the 3-star differ.
        let lk3 = line_graph(&complete(3));
        let ls3 = line_graph(&star(3));
        assert_eq!(lk3, complete(3));
        assert_eq!(ls3, complete(3));
    }

    #[test]
    fn named_spec_parser() {
        assert_eq!(generate_named("cycle:5").unwrap().edge_count(), 5);
        assert_eq!(generate_named("line:cycle:5").unwrap().n(), 5);
        let u = generate_named("union:cycle:4/complete:1").unwrap();
        assert_eq!((u.n(), u.edge_count()), (5, 4));
        assert!(generate_named("circulant:8:0").is_err());
        assert!(generate_named("frobnicator").is_err());
    }

    #[test]
    fn permuted_preserves_structure() {
        let g = path(4);
        let h = g.permuted(&[3, 2, 1, 0]);
        assert_eq!(h.degree_sequence(), g.degree_sequence());
        assert!(h.has_edge(3, 2));
    }
}
