//! Command-line front end: every pipeline stage behind a subcommand, with
//! machine-readable JSON on stdout (schema-versioned, byte-deterministic)
//! and errors on stderr. Exit codes: 0 success (or isomorphic), 1
//! non-isomorphic verdict / failed verification suite, 2 error.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spectral_iso::balanced;
use spectral_iso::global;
use spectral_iso::graph::{self, Graph};
use spectral_iso::iso::{self, Verdict};
use spectral_iso::oracle;
use spectral_iso::spectral::{self, decompose_graph};
use spectral_iso::verify;
use spectral_iso::{Config, Error};

#[derive(Parser)]
#[command(
    name = "spectral-iso",
    about = "Spectral graph automorphism and isomorphism engine",
    version
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_parser = ["json", "text"], default_value = "json")]
    format: String,
    /// Comparison tolerance (also honored from SPECTRAL_ISO_TOL; the flag
    /// wins when both are set).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for per-vertex stages; 0 = all available cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Largest n the brute-force oracle accepts (at most 16).
    #[arg(long, global = true, default_value_t = 12)]
    oracle_cap: usize,
    #[command(subcommand)]
    command: Command,
}

/// Graph inputs; repeatable where a subcommand takes two graphs. When kinds
/// are mixed, inputs are taken in flag-group order: --graph6, then --file,
/// then --named.
#[derive(Args)]
struct GraphInputs {
    /// graph6-encoded graph.
    #[arg(long)]
    graph6: Vec<String>,
    /// Path to a graph6 or edge-list file.
    #[arg(long)]
    file: Vec<String>,
    /// Named graph: complete:N, cycle:N, path:N, star:N, cube, petersen,
    /// bipartite:M:N, circulant:N:D1[,D2..], union:SPEC/SPEC.
    #[arg(long)]
    named: Vec<String>,
}

impl GraphInputs {
    fn load(&self, expect: usize) -> Result<Vec<Graph>, Error> {
        let mut graphs = Vec::new();
        for s in &self.graph6 {
            graphs.push(graph::parse_graph6(s)?);
        }
        for path in &self.file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Contract(format!("cannot read {path}: {e}")))?;
            let trimmed = text.trim();
            // Edge-list files contain whitespace-separated pairs; graph6
            // lines never contain spaces.
            let parsed = if trimmed.split_whitespace().count() > 1 {
                graph::parse_edge_list(trimmed)
            } else {
                graph::parse_graph6(trimmed)
            };
            graphs.push(parsed?);
        }
        for name in &self.named {
            graphs.push(graph::generate_named(name)?);
        }
        if graphs.len() != expect {
            return Err(Error::Contract(format!(
                "expected {expect} graph input(s) via --graph6/--file/--named, got {}",
                graphs.len()
            )));
        }
        Ok(graphs)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, multiplicities, and reconstruction error.
    Spectrum {
        #[command(flatten)]
        input: GraphInputs,
    },
    /// Anchored partition for one vertex (1-based --vertex).
    Vpartition {
        #[command(flatten)]
        input: GraphInputs,
        #[arg(long)]
        vertex: usize,
    },
    /// Anchor-free partition over all vertices.
    Uniform {
        #[command(flatten)]
        input: GraphInputs,
    },
    /// Block candidates for every non-singleton cell.
    Blocks {
        #[command(flatten)]
        input: GraphInputs,
    },
    /// Orbit approximation report with oracle cross-check below the cap.
    Orbits {
        #[command(flatten)]
        input: GraphInputs,
    },
    /// Brute-force automorphism group (cap-bounded).
    Aut {
        #[command(flatten)]
        input: GraphInputs,
    },
    /// Isomorphism decision for two graphs; exit 1 when non-isomorphic.
    Iso {
        #[command(flatten)]
        input: GraphInputs,
    },
    /// Run the oracle-backed verification suites up to --max-n.
    VerifyTheorems {
        #[arg(long, default_value_t = 5)]
        max_n: usize,
    },
}

fn config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = Config { threads: cli.threads, oracle_cap: cli.oracle_cap, ..Config::default() };
    let tol = match cli.tol {
        Some(t) => Some(t),
        None => match std::env::var("SPECTRAL_ISO_TOL") {
            Ok(s) => Some(
                s.parse::<f64>()
                    .map_err(|_| Error::Contract(format!("SPECTRAL_ISO_TOL is not a number: {s}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Error::Contract(format!("tolerance must be positive, got {t}")));
        }
        cfg.tol = t;
        cfg.cluster_tol = t;
        cfg.zero_tol = t;
    }
    if cfg.oracle_cap > 16 {
        return Err(Error::Contract("oracle cap must be at most 16".into()));
    }
    Ok(cfg)
}

fn emit(cli: &Cli, value: serde_json::Value) {
    if cli.format == "json" {
        let mut wrapped = serde_json::Map::new();
        wrapped.insert("schema".into(), serde_json::json!(1));
        if let serde_json::Value::Object(m) = value {
            wrapped.extend(m);
        } else {
            wrapped.insert("result".into(), value);
        }
        println!("{}", serde_json::Value::Object(wrapped));
    } else {
        println!("{}", text_render(&value, 0));
    }
}

fn text_render(v: &serde_json::Value, indent: usize) -> String {
    let pad = "  ".repeat(indent);
    match v {
        serde_json::Value::Object(m) => m
            .iter()
            .map(|(k, v)| match v {
                serde_json::Value::Object(_) | serde_json::Value::Array(_)
                    if !is_flat(v) =>
                {
                    format!("{pad}{k}:\n{}", text_render(v, indent + 1))
                }
                _ => format!("{pad}{k}: {}", text_render(v, 0).trim_start()),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        serde_json::Value::Array(a) if is_flat(v) => format!(
            "{pad}[{}]",
            a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        ),
        serde_json::Value::Array(a) => a
            .iter()
            .map(|x| text_render(x, indent))
            .collect::<Vec<_>>()
            .join("\n"),
        other => format!("{pad}{other}"),
    }
}

fn is_flat(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Array(a) => {
            a.iter().all(|x| !matches!(x, serde_json::Value::Object(_) | serde_json::Value::Array(_)))
        }
        serde_json::Value::Object(_) => false,
        _ => true,
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::Spectrum { input } => {
            let g = input.load(1)?.pop().expect("one graph");
            let d = decompose_graph(&g, &cfg)?;
            emit(cli, serde_json::json!({
                "n": g.n(),
                "edge_count": g.edge_count(),
                "eigenvalues": d.eigenvalues().iter()
                    .map(|&l| spectral::round_sig(l)).collect::<Vec<_>>(),
                "multiplicities": d.multiplicities(),
                "reconstruction_error":
                    spectral::round_sig(d.reconstruction_error(&g.adjacency_matrix())),
            }));
            Ok(0)
        }
        Command::Vpartition { input, vertex } => {
            let g = input.load(1)?.pop().expect("one graph");
            if *vertex < 1 || *vertex > g.n() {
                return Err(Error::Contract(format!(
                    "--vertex must be in 1..={}, got {vertex}",
                    g.n()
                )));
            }
            let d = decompose_graph(&g, &cfg)?;
            let bp = balanced::vertex_partition(&d, &g, vertex - 1, &cfg)?;
            emit(cli, bp.to_json());
            Ok(0)
        }
        Command::Uniform { input } => {
            let g = input.load(1)?.pop().expect("one graph");
            let d = decompose_graph(&g, &cfg)?;
            let up = global::uniform_partition(&d, &g, &cfg)?;
            emit(cli, up.to_json());
            Ok(0)
        }
        Command::Blocks { input } => {
            let g = input.load(1)?.pop().expect("one graph");
            let d = decompose_graph(&g, &cfg)?;
            let up = global::uniform_partition(&d, &g, &cfg)?;
            let parts: Vec<_> = up.vertex_partitions.iter().map(|bp| bp.partition.clone()).collect();
            let blocks: Vec<serde_json::Value> = (0..up.partition.num_cells())
                .filter(|&i| up.partition.cell(i).len() > 1)
                .map(|i| global::select_block_candidate(&d, up.partition.cell(i), &parts, &cfg).to_json())
                .collect();
            emit(cli, serde_json::json!({
                "partition": up.partition.to_json(),
                "blocks": blocks,
            }));
            Ok(0)
        }
        Command::Orbits { input } => {
            let g = input.load(1)?.pop().expect("one graph");
            let report = iso::orbit_report(&g, &cfg)?;
            emit(cli, report.to_json());
            Ok(0)
        }
        Command::Aut { input } => {
            let g = input.load(1)?.pop().expect("one graph");
            let group = oracle::automorphism_group(&g, &cfg)?;
            emit(cli, group.to_json());
            Ok(0)
        }
        Command::Iso { input } => {
            let mut graphs = input.load(2)?;
            let h = graphs.pop().expect("two graphs");
            let g = graphs.pop().expect("two graphs");
            let cert = iso::are_isomorphic(&g, &h, &cfg)?;
            emit(cli, cert.to_json());
            Ok(if cert.verdict == Verdict::Isomorphic { 0 } else { 1 })
        }
        Command::VerifyTheorems { max_n } => {
            let n = *max_n;
            let results = vec![
                verify::equitable_equivalence(n.min(5), &cfg)?,
                verify::orbit_equation(n, &cfg)?,
                verify::cell_orthogonality_equivalence(n, &cfg)?,
                verify::big_cell_dichotomy(n, &cfg)?,
            ];
            let all_pass = results.iter().all(|r| r.passed);
            emit(cli, serde_json::json!({
                "max_n": n,
                "suites": results.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
                "all_passed": all_pass,
            }));
            Ok(if all_pass { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
