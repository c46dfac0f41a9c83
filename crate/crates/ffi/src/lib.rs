//! C ABI for `consensus-lab`.
//!
//! Every function returns a [`ClStatus`]. On failure a description is kept
//! per thread and can be read with [`cl_last_error_message`]. Graphs are
//! opaque handles released with [`cl_graph_free`]; strings returned by the
//! library are released with [`cl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use consensus_lab::chain::{build_chain, Backend};
use consensus_lab::dgr::{self, CompleteInit, DgrParams};
use consensus_lab::experiments;
use consensus_lab::graph::{parse_graph, write_graph, Graph};
use consensus_lab::process::{estimate, EstimateConfig, InitMode, StrategyState};
use consensus_lab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Capacity = 4,
    Timeout = 5,
    BufferTooSmall = 6,
    Io = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClInitKind {
    /// Uniform over all strategy vectors.
    Uniform = 0,
    /// Uniform, conditioned on some vertex playing strategy 1.
    Nonempty = 1,
    /// Vertices `0..k` play strategy 1, the rest strategy `m`.
    Fixed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClCompleteInit {
    Binomial = 0,
    Conditioned = 1,
    Fixed = 2,
}

/// Aggregate Monte Carlo output.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClSimStats {
    pub replications: u64,
    pub time_mean: f64,
    pub time_var: f64,
    pub time_stderr: f64,
}

/// Opaque graph handle.
pub struct ClGraph {
    inner: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(ClStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter(_) => ClStatus::InvalidArgument,
            Error::Parse { .. } => ClStatus::Parse,
            Error::Capacity { .. } => ClStatus::Capacity,
            Error::Timeout { .. } | Error::ReplicationTimeouts { .. } => ClStatus::Timeout,
            Error::Io(_) => ClStatus::Io,
            _ => ClStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: ClStatus, msg: &str) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ClStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ClStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside consensus-lab".into());
            ClStatus::Internal
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(ClStatus::NullPointer, what);
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ClStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(ClStatus::NullPointer, what);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, len: usize) -> Result<(), Failure> {
    if dst.is_null() {
        return fail(ClStatus::NullPointer, "output buffer");
    }
    if len < src.len() {
        return Err(Failure(
            ClStatus::BufferTooSmall,
            format!("output needs {} entries, got {len}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

unsafe fn write_out<T>(dst: *mut T, value: T) -> Result<(), Failure> {
    if dst.is_null() {
        return fail(ClStatus::NullPointer, "output pointer");
    }
    dst.write(value);
    Ok(())
}

unsafe fn graph_ref<'a>(g: *const ClGraph) -> Result<&'a Graph, Failure> {
    if g.is_null() {
        return fail(ClStatus::NullPointer, "graph");
    }
    Ok(&(*g).inner)
}

unsafe fn publish_graph(out: *mut *mut ClGraph, graph: Graph) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(ClGraph { inner: graph })))
}

fn init_mode(kind: ClInitKind, k: usize, n: usize, m: u32) -> Result<InitMode, Failure> {
    Ok(match kind {
        ClInitKind::Uniform => InitMode::Uniform,
        ClInitKind::Nonempty => InitMode::ConditionedNonempty,
        ClInitKind::Fixed => InitMode::Fixed(StrategyState::split(n, k, m)?),
    })
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Graph on `n` vertices with `edge_count` edges given as `2 * edge_count`
/// vertex indices.
///
/// # Safety
/// `edges` must point to `2 * edge_count` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_graph_new(
    n: usize,
    edges: *const usize,
    edge_count: usize,
    out: *mut *mut ClGraph,
) -> ClStatus {
    guard(|| {
        let flat = slice_in(edges, edge_count * 2, "edges")?;
        let graph = Graph::new(n, flat.chunks_exact(2).map(|e| (e[0], e[1])))?;
        publish_graph(out, graph)
    })
}

/// Named family member (`complete`, `path`, `cycle`, `star`, `sundew`,
/// `lollipop`, `jellyfish`). `r` is ignored by families that do not use it.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_graph_family(
    name: *const c_char,
    n: usize,
    r: usize,
    out: *mut *mut ClGraph,
) -> ClStatus {
    guard(|| {
        let name = c_str(name, "family name")?;
        let named = experiments::family(name, n, Some(r))?;
        publish_graph(out, named.graph)
    })
}

/// Parses the edge-list text format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_graph_parse(text: *const c_char, out: *mut *mut ClGraph) -> ClStatus {
    guard(|| {
        let text = c_str(text, "graph text")?;
        publish_graph(out, parse_graph(text)?)
    })
}

/// Canonical edge-list text; free with [`cl_string_free`].
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_graph_write(graph: *const ClGraph, out: *mut *mut c_char) -> ClStatus {
    guard(|| {
        let text = write_graph(graph_ref(graph)?);
        let c = CString::new(text).map_err(|_| Failure(ClStatus::Internal, "NUL in output".into()))?;
        write_out(out, c.into_raw())
    })
}

/// # Safety
/// `graph` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cl_graph_free(graph: *mut ClGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn cl_graph_vertex_count(graph: *const ClGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.vertex_count())
}

/// # Safety
/// `graph` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn cl_graph_edge_count(graph: *const ClGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// Writes `P(S = l)` for `l = 1..=m` into `out[0..m]`.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cl_survivor_distribution(n: usize, m: u32, p: f64, out: *mut f64, out_len: usize) -> ClStatus {
    guard(|| copy_out(&dgr::survivor_distribution(n, m, p)?, out, out_len))
}

/// Expected absorption times `E_0..E_n` of the delayed ruin walk; `gammas`
/// holds `n - 1` values.
///
/// # Safety
/// `gammas` must point to `gammas_len` doubles; `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cl_dgr_expected_times(
    n: usize,
    p: f64,
    gammas: *const f64,
    gammas_len: usize,
    out: *mut f64,
    out_len: usize,
) -> ClStatus {
    guard(|| {
        let params = DgrParams::new(n, p, slice_in(gammas, gammas_len, "gammas")?.to_vec())?;
        copy_out(&dgr::expected_times(&params)?, out, out_len)
    })
}

/// Probability that the walk started at `k` ends at `n`.
///
/// # Safety
/// `gammas` must point to `gammas_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_ruin_probability(
    n: usize,
    p: f64,
    gammas: *const f64,
    gammas_len: usize,
    k: usize,
    out: *mut f64,
) -> ClStatus {
    guard(|| {
        let params = DgrParams::new(n, p, slice_in(gammas, gammas_len, "gammas")?.to_vec())?;
        write_out(out, dgr::ruin_probability(&params, k)?)
    })
}

/// Two-strategy expected consensus time on K_n. `k` is used only with
/// `CL_COMPLETE_INIT_FIXED`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_complete_graph_time(
    n: usize,
    p: f64,
    init: ClCompleteInit,
    k: usize,
    out: *mut f64,
) -> ClStatus {
    guard(|| {
        let init = match init {
            ClCompleteInit::Binomial => CompleteInit::Binomial,
            ClCompleteInit::Conditioned => CompleteInit::Conditioned,
            ClCompleteInit::Fixed => CompleteInit::Fixed(k),
        };
        write_out(out, dgr::complete_graph_expected_consensus_time(n, p, init)?)
    })
}

/// Exact winner distribution (`winners[0..m]`) and expected consensus time.
/// `k` is used only with `CL_INIT_KIND_FIXED`.
///
/// # Safety
/// `graph` must be a live handle; `winners` must hold `winners_len` doubles;
/// `expected_time` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cl_exact(
    graph: *const ClGraph,
    m: u32,
    p: f64,
    init: ClInitKind,
    k: usize,
    winners: *mut f64,
    winners_len: usize,
    expected_time: *mut f64,
) -> ClStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let init = init_mode(init, k, g.vertex_count(), m)?;
        let chain = build_chain(g, m, p)?;
        let dist = chain.init_distribution(&init)?;
        let sol = chain.solve(Backend::Auto)?;
        copy_out(&sol.absorption_distribution(&dist)?, winners, winners_len)?;
        write_out(expected_time, sol.expected_time(&dist)?)
    })
}

/// Monte Carlo estimate. `workers == 0` uses the default pool size.
/// `winner_counts[0..m]` receives per-strategy win counts.
///
/// # Safety
/// `graph` must be a live handle; `stats` must be writable;
/// `winner_counts` must hold `counts_len` values.
#[no_mangle]
pub unsafe extern "C" fn cl_estimate(
    graph: *const ClGraph,
    m: u32,
    p: f64,
    replications: usize,
    seed: u64,
    init: ClInitKind,
    k: usize,
    workers: usize,
    stats: *mut ClSimStats,
    winner_counts: *mut u64,
    counts_len: usize,
) -> ClStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let mut config = EstimateConfig::new(p, m, replications, seed).with_init(init_mode(init, k, g.vertex_count(), m)?);
        if workers > 0 {
            config = config.with_workers(workers);
        }
        let s = estimate(g, &config)?;
        copy_out(&s.winner_counts, winner_counts, counts_len)?;
        write_out(
            stats,
            ClSimStats {
                replications: s.replications as u64,
                time_mean: s.time_mean,
                time_var: s.time_var,
                time_stderr: s.time_stderr(),
            },
        )
    })
}
