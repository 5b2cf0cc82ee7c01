//! C ABI surface for the spectral isomorphism engine.
//!
//! Conventions:
//! - Graphs are opaque handles created by the constructors below and
//!   released with [`spectral_iso_graph_free`].
//! - Every fallible function returns an `int32_t` status code
//!   (`SPECTRAL_ISO_OK` is 0); on failure a thread-local message is
//!   available via [`spectral_iso_last_error`].
//! - Result payloads are UTF-8 JSON strings allocated by this library;
//!   release them with [`spectral_iso_string_free`].
//!
//! The matching header is `include/spectral_iso.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spectral_iso::graph::{self, Graph};
use spectral_iso::iso::{self, Verdict};
use spectral_iso::spectral::{self, decompose_graph};
use spectral_iso::{global, oracle, Config, Error};

pub const SPECTRAL_ISO_OK: i32 = 0;
pub const SPECTRAL_ISO_ERR_NULL_ARGUMENT: i32 = 1;
pub const SPECTRAL_ISO_ERR_INVALID_INPUT: i32 = 2;
pub const SPECTRAL_ISO_ERR_NUMERIC: i32 = 3;
pub const SPECTRAL_ISO_ERR_CAP_EXCEEDED: i32 = 4;
pub const SPECTRAL_ISO_ERR_INTERNAL: i32 = 5;

/// Opaque graph handle. The struct layout is private to this library.
pub struct SpectralIsoGraph {
    g: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap_or_default());
}

fn code_for(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Contract(_) | Error::Invalid(_) => {
            SPECTRAL_ISO_ERR_INVALID_INPUT
        }
        Error::Numerical(_) => SPECTRAL_ISO_ERR_NUMERIC,
        Error::OracleCap { .. } => SPECTRAL_ISO_ERR_CAP_EXCEEDED,
        Error::Io(_) => SPECTRAL_ISO_ERR_INTERNAL,
    }
}

fn fail(e: Error) -> i32 {
    set_error(&e.to_string());
    code_for(&e)
}

/// Run `f`, converting results, library errors, and panics into status codes.
fn guarded<F: FnOnce() -> Result<i32, Error>>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => fail(e),
        Err(_) => {
            set_error("internal panic");
            SPECTRAL_ISO_ERR_INTERNAL
        }
    }
}

fn default_config() -> Config {
    Config { threads: 1, ..Config::default() }
}

fn emit_json(value: serde_json::Value, out_json: *mut *mut c_char) -> Result<i32, Error> {
    let mut wrapped = serde_json::Map::new();
    wrapped.insert("schema".into(), serde_json::json!(1));
    if let serde_json::Value::Object(m) = value {
        wrapped.extend(m);
    } else {
        wrapped.insert("result".into(), value);
    }
    let text = serde_json::Value::Object(wrapped).to_string();
    let c = CString::new(text).map_err(|_| Error::Invalid("embedded NUL in output".into()))?;
    unsafe { *out_json = c.into_raw() };
    Ok(SPECTRAL_ISO_OK)
}

/// # Safety
///
/// The returned pointer references thread-local storage owned by this
/// library. It stays valid until the next failing call on the same thread;
/// do not free it.
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
///
/// `text` must be a NUL-terminated string; `out_graph` must be a valid
/// pointer. On success `*out_graph` owns a handle that must be released
/// with `spectral_iso_graph_free`.
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_graph_from_graph6(
    text: *const c_char,
    out_graph: *mut *mut SpectralIsoGraph,
) -> i32 {
    if text.is_null() || out_graph.is_null() {
        set_error("null argument");
        return SPECTRAL_ISO_ERR_NULL_ARGUMENT;
    }
    let s = match CStr::from_ptr(text).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("graph6 text is not valid UTF-8");
            return SPECTRAL_ISO_ERR_INVALID_INPUT;
        }
    };
    guarded(|| {
        let g = graph::parse_graph6(s.trim())?;
        *out_graph = Box::into_raw(Box::new(SpectralIsoGraph { g }));
        Ok(SPECTRAL_ISO_OK)
    })
}

/// # Safety
///
/// `edges` must point to `2 * edge_count` readable `uint32_t` values laid
/// out as (u0, v0, u1, v1, ...); `out_graph` must be a valid pointer. On
/// success `*out_graph` owns a handle that must be released with
/// `spectral_iso_graph_free`.
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_graph_from_edges(
    num_vertices: u32,
    edges: *const u32,
    edge_count: usize,
    out_graph: *mut *mut SpectralIsoGraph,
) -> i32 {
    if out_graph.is_null() || (edges.is_null() && edge_count > 0) {
        set_error("null argument");
        return SPECTRAL_ISO_ERR_NULL_ARGUMENT;
    }
    let flat = if edge_count == 0 {
        &[][..]
    } else {
        std::slice::from_raw_parts(edges, 2 * edge_count)
    };
    guarded(|| {
        let pairs: Vec<(usize, usize)> = flat
            .chunks_exact(2)
            .map(|p| (p[0] as usize, p[1] as usize))
            .collect();
        let g = Graph::new(num_vertices as usize, pairs)?;
        *out_graph = Box::into_raw(Box::new(SpectralIsoGraph { g }));
        Ok(SPECTRAL_ISO_OK)
    })
}

/// # Safety
///
/// `graph` must be a handle returned by a constructor in this library that
/// has not already been freed, or NULL (a no-op).
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_graph_free(graph: *mut SpectralIsoGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
///
/// `s` must be a string returned by this library that has not already been
/// freed, or NULL (a no-op).
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn borrow<'a>(graph: *const SpectralIsoGraph) -> Option<&'a Graph> {
    graph.as_ref().map(|h| &h.g)
}

/// # Safety
///
/// `graph` must be a live handle from this library; `out_json` must be a
/// valid pointer. On success `*out_json` owns a string that must be
/// released with `spectral_iso_string_free`.
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_spectrum_json(
    graph: *const SpectralIsoGraph,
    out_json: *mut *mut c_char,
) -> i32 {
    let (g, out) = match (borrow(graph), out_json.is_null()) {
        (Some(g), false) => (g, out_json),
        _ => {
            set_error("null argument");
            return SPECTRAL_ISO_ERR_NULL_ARGUMENT;
        }
    };
    guarded(|| {
        let cfg = default_config();
        let d = decompose_graph(g, &cfg)?;
        emit_json(
            serde_json::json!({
                "n": g.n(),
                "edge_count": g.edge_count(),
                "eigenvalues": d.eigenvalues().iter()
                    .map(|&l| spectral::round_sig(l)).collect::<Vec<_>>(),
                "multiplicities": d.multiplicities(),
                "reconstruction_error":
                    spectral::round_sig(d.reconstruction_error(&g.adjacency_matrix())),
            }),
            out,
        )
    })
}

/// # Safety
///
/// Same contract as `spectral_iso_spectrum_json`.
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_uniform_partition_json(
    graph: *const SpectralIsoGraph,
    out_json: *mut *mut c_char,
) -> i32 {
    let (g, out) = match (borrow(graph), out_json.is_null()) {
        (Some(g), false) => (g, out_json),
        _ => {
            set_error("null argument");
            return SPECTRAL_ISO_ERR_NULL_ARGUMENT;
        }
    };
    guarded(|| {
        let cfg = default_config();
        let d = decompose_graph(g, &cfg)?;
        let up = global::uniform_partition(&d, g, &cfg)?;
        emit_json(up.to_json(), out)
    })
}

/// # Safety
///
/// Same contract as `spectral_iso_spectrum_json`. Orbit reports include a
/// brute-force cross-check below the oracle cap.
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_orbits_json(
    graph: *const SpectralIsoGraph,
    out_json: *mut *mut c_char,
) -> i32 {
    let (g, out) = match (borrow(graph), out_json.is_null()) {
        (Some(g), false) => (g, out_json),
        _ => {
            set_error("null argument");
            return SPECTRAL_ISO_ERR_NULL_ARGUMENT;
        }
    };
    guarded(|| {
        let cfg = default_config();
        let report = iso::orbit_report(g, &cfg)?;
        emit_json(report.to_json(), out)
    })
}

/// # Safety
///
/// `graph` must be a live handle; `out_json` a valid pointer. Fails with
/// `SPECTRAL_ISO_ERR_CAP_EXCEEDED` when the graph is larger than the
/// brute-force enumeration cap.
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_automorphism_group_json(
    graph: *const SpectralIsoGraph,
    out_json: *mut *mut c_char,
) -> i32 {
    let (g, out) = match (borrow(graph), out_json.is_null()) {
        (Some(g), false) => (g, out_json),
        _ => {
            set_error("null argument");
            return SPECTRAL_ISO_ERR_NULL_ARGUMENT;
        }
    };
    guarded(|| {
        let cfg = default_config();
        let group = oracle::automorphism_group(g, &cfg)?;
        emit_json(group.to_json(), out)
    })
}

/// # Safety
///
/// `g` and `h` must be live handles; `out_verdict` and `out_json` must be
/// valid pointers. `*out_verdict` is set to 1 when the graphs are
/// isomorphic and 0 otherwise; `*out_json` receives the full certificate
/// and must be released with `spectral_iso_string_free`.
#[no_mangle]
pub unsafe extern "C" fn spectral_iso_are_isomorphic(
    g: *const SpectralIsoGraph,
    h: *const SpectralIsoGraph,
    out_verdict: *mut i32,
    out_json: *mut *mut c_char,
) -> i32 {
    let (g, h) = match (borrow(g), borrow(h)) {
        (Some(g), Some(h)) if !out_verdict.is_null() && !out_json.is_null() => (g, h),
        _ => {
            set_error("null argument");
            return SPECTRAL_ISO_ERR_NULL_ARGUMENT;
        }
    };
    guarded(|| {
        let cfg = default_config();
        let cert = iso::are_isomorphic(g, h, &cfg)?;
        *out_verdict = i32::from(cert.verdict == Verdict::Isomorphic);
        emit_json(cert.to_json(), out_json)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    unsafe fn take_string(p: *mut c_char) -> String {
        let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
        spectral_iso_string_free(p);
        s
    }

    fn graph_from_edges(n: u32, edges: &[(u32, u32)]) -> *mut SpectralIsoGraph {
        let flat: Vec<u32> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        let mut g: *mut SpectralIsoGraph = ptr::null_mut();
        let code = unsafe {
            spectral_iso_graph_from_edges(n, flat.as_ptr(), edges.len(), &mut g)
        };
        assert_eq!(code, SPECTRAL_ISO_OK);
        g
    }

    #[test]
    fn spectrum_roundtrip() {
        unsafe {
            let g = graph_from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(spectral_iso_spectrum_json(g, &mut out), SPECTRAL_ISO_OK);
            let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
            assert_eq!(v["schema"], 1);
            assert_eq!(v["n"], 3);
            assert_eq!(v["eigenvalues"][0], 2.0);
            assert_eq!(v["multiplicities"][1], 2);
            spectral_iso_graph_free(g);
        }
    }

    #[test]
    fn graph6_parse_and_errors() {
        unsafe {
            let mut g: *mut SpectralIsoGraph = ptr::null_mut();
            let text = CString::new("DQc").unwrap(); // 5-cycle
            assert_eq!(
                spectral_iso_graph_from_graph6(text.as_ptr(), &mut g),
                SPECTRAL_ISO_OK
            );
            spectral_iso_graph_free(g);

            let bad = CString::new("\x01bad").unwrap();
            let code = spectral_iso_graph_from_graph6(bad.as_ptr(), &mut g);
            assert_eq!(code, SPECTRAL_ISO_ERR_INVALID_INPUT);
            let msg = CStr::from_ptr(spectral_iso_last_error()).to_str().unwrap();
            assert!(!msg.is_empty());

            assert_eq!(
                spectral_iso_graph_from_graph6(ptr::null(), &mut g),
                SPECTRAL_ISO_ERR_NULL_ARGUMENT
            );
        }
    }

    #[test]
    fn isomorphism_verdicts() {
        unsafe {
            let c5 = graph_from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
            let c5b = graph_from_edges(5, &[(0, 2), (2, 4), (4, 1), (1, 3), (3, 0)]);
            let p5 = graph_from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);

            let mut verdict = -1;
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(
                spectral_iso_are_isomorphic(c5, c5b, &mut verdict, &mut out),
                SPECTRAL_ISO_OK
            );
            assert_eq!(verdict, 1);
            let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
            assert_eq!(v["schema"], 1);

            assert_eq!(
                spectral_iso_are_isomorphic(c5, p5, &mut verdict, &mut out),
                SPECTRAL_ISO_OK
            );
            assert_eq!(verdict, 0);
            spectral_iso_string_free(out);

            spectral_iso_graph_free(c5);
            spectral_iso_graph_free(c5b);
            spectral_iso_graph_free(p5);
        }
    }

    #[test]
    fn group_and_partition_json() {
        unsafe {
            let c4 = graph_from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
            let mut out: *mut c_char = ptr::null_mut();
            assert_eq!(
                spectral_iso_automorphism_group_json(c4, &mut out),
                SPECTRAL_ISO_OK
            );
            let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
            assert_eq!(v["order"], "8");

            assert_eq!(
                spectral_iso_uniform_partition_json(c4, &mut out),
                SPECTRAL_ISO_OK
            );
            let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
            assert_eq!(v["schema"], 1);

            assert_eq!(spectral_iso_orbits_json(c4, &mut out), SPECTRAL_ISO_OK);
            let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
            assert_eq!(v["schema"], 1);

            spectral_iso_graph_free(c4);
        }
    }
}
