//! C ABI for netepi.
//!
//! Graphs are opaque handles created by the `netepi_graph_*` constructors
//! and released with [`netepi_graph_free`]. Every fallible function returns
//! a [`NetepiStatus`]; on failure a message describing the error is kept per
//! thread and can be fetched with [`netepi_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use netepi::centrality::{betweenness, CentralityKind};
use netepi::epidemic::{ensemble, EpidemicParams};
use netepi::graph::{self, Graph, SbmSpec};
use netepi::interventions::VaccinationStrategy;
use netepi::scenario::{run_scenario, ScenarioConfig};
use netepi::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetepiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Runtime = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque graph handle.
pub struct NetepiGraph {
    inner: Graph,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NetepiParams {
    pub beta_u: f64,
    pub beta_v: f64,
    pub gamma: f64,
    pub mu_d: f64,
    pub mu_n: f64,
    pub p_vacc: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetepiStrategyKind {
    None = 0,
    Random = 1,
    TargetedBetweenness = 2,
    TargetedDegree = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NetepiStrategy {
    pub kind: NetepiStrategyKind,
    pub coverage: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> NetepiStatus {
    match e {
        Error::InvalidParameter(_) | Error::InvalidGraph(_) | Error::Shape(_) => NetepiStatus::InvalidArgument,
        Error::Config(_) => NetepiStatus::Config,
        Error::Io { .. } | Error::Parse { .. } => NetepiStatus::Io,
        _ => NetepiStatus::Runtime,
    }
}

type FfiResult<T> = Result<T, (NetepiStatus, String)>;

fn lib<T>(r: netepi::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (NetepiStatus, String) {
    (NetepiStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status plus a stored
/// message.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> NetepiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NetepiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NetepiStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (NetepiStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn graph_arg<'a>(g: *const NetepiGraph) -> FfiResult<&'a Graph> {
    g.as_ref().map(|h| &h.inner).ok_or_else(|| null("graph"))
}

unsafe fn emit_graph(out: *mut *mut NetepiGraph, g: netepi::Result<Graph>) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    let g = lib(g)?;
    *out = Box::into_raw(Box::new(NetepiGraph { inner: g }));
    Ok(())
}

/// Erdős–Rényi graph `G(n, p)`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_er(n: usize, p: f64, seed: u64, out: *mut *mut NetepiGraph) -> NetepiStatus {
    guard(|| emit_graph(out, graph::generate_er(n, p, seed)))
}

/// Stochastic block model. `probs` holds `blocks * blocks` entries in
/// row-major order.
///
/// # Safety
/// `sizes` must point to `blocks` values, `probs` to `blocks * blocks`
/// values, and `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_sbm(
    sizes: *const usize,
    blocks: usize,
    probs: *const f64,
    seed: u64,
    out: *mut *mut NetepiGraph,
) -> NetepiStatus {
    guard(|| {
        if blocks > 0 && (sizes.is_null() || probs.is_null()) {
            return Err(null("sizes or probs"));
        }
        let (sizes, probs) = if blocks == 0 {
            (&[][..], &[][..])
        } else {
            (
                std::slice::from_raw_parts(sizes, blocks),
                std::slice::from_raw_parts(probs, blocks * blocks),
            )
        };
        let spec = SbmSpec {
            block_sizes: sizes.to_vec(),
            block_probs: probs.chunks(blocks.max(1)).map(<[f64]>::to_vec).collect(),
        };
        emit_graph(out, graph::generate_sbm(&spec, seed))
    })
}

/// Random geometric graph in the unit square with connection radius `r`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_rgg(n: usize, r: f64, seed: u64, out: *mut *mut NetepiGraph) -> NetepiStatus {
    guard(|| emit_graph(out, graph::generate_rgg(n, r, seed)))
}

/// Loads an edge-list CSV or graph JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writing one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_load(path: *const c_char, out: *mut *mut NetepiGraph) -> NetepiStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        emit_graph(out, graph::io::load_graph(Path::new(path)))
    })
}

/// Saves a graph; a `.json` extension selects the JSON format, anything else
/// writes an edge-list CSV.
///
/// # Safety
/// `g` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_save(g: *const NetepiGraph, path: *const c_char) -> NetepiStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let path = str_arg(path, "path")?;
        lib(graph::io::save_graph(g, Path::new(path)))
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_node_count(g: *const NetepiGraph) -> usize {
    g.as_ref().map_or(0, |h| h.inner.n())
}

/// Number of undirected edges, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_edge_count(g: *const NetepiGraph) -> usize {
    g.as_ref().map_or(0, |h| h.inner.edge_count())
}

/// Unnormalized betweenness of every node into `out[0..len]`; `len` must be
/// at least the node count.
///
/// # Safety
/// `g` must be a live handle and `out` valid for writing `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_betweenness(g: *const NetepiGraph, out: *mut f64, len: usize) -> NetepiStatus {
    guard(|| {
        let g = graph_arg(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < g.n() {
            return Err((
                NetepiStatus::BufferTooSmall,
                format!("buffer holds {len} values, graph has {} nodes", g.n()),
            ));
        }
        let values = betweenness(g).values;
        std::slice::from_raw_parts_mut(out, values.len()).copy_from_slice(&values);
        Ok(())
    })
}

/// Releases a graph handle. Null is ignored.
///
/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn netepi_graph_free(g: *mut NetepiGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

fn strategy_of(s: &NetepiStrategy) -> VaccinationStrategy {
    let coverage = s.coverage;
    match s.kind {
        NetepiStrategyKind::None => VaccinationStrategy::None,
        NetepiStrategyKind::Random => VaccinationStrategy::Random { coverage },
        NetepiStrategyKind::TargetedBetweenness => VaccinationStrategy::Targeted {
            metric: CentralityKind::Betweenness,
            coverage,
        },
        NetepiStrategyKind::TargetedDegree => VaccinationStrategy::Targeted {
            metric: CentralityKind::Degree,
            coverage,
        },
    }
}

/// Mean and standard deviation of the final attack rate over `n_runs`
/// seeded replicas.
///
/// # Safety
/// `g` must be a live handle, `params` and `strategy` valid pointers,
/// `infected` must point to `n_infected` node ids, and `out_mean` and
/// `out_std` must be valid for writing (`out_std` may be null).
#[no_mangle]
pub unsafe extern "C" fn netepi_ensemble_attack_rate(
    g: *const NetepiGraph,
    params: *const NetepiParams,
    strategy: *const NetepiStrategy,
    infected: *const usize,
    n_infected: usize,
    t_max: usize,
    n_runs: usize,
    seed: u64,
    out_mean: *mut f64,
    out_std: *mut f64,
) -> NetepiStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let s = strategy.as_ref().ok_or_else(|| null("strategy"))?;
        if out_mean.is_null() {
            return Err(null("out_mean"));
        }
        if infected.is_null() && n_infected > 0 {
            return Err(null("infected"));
        }
        let infected = if n_infected == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(infected, n_infected)
        };
        let params = EpidemicParams {
            beta_u: p.beta_u,
            beta_v: p.beta_v,
            gamma: p.gamma,
            mu_d: p.mu_d,
            mu_n: p.mu_n,
            p_vacc: p.p_vacc,
        };
        let summary = lib(ensemble(g, &params, &strategy_of(s), infected, t_max, n_runs, seed))?;
        *out_mean = summary.final_attack_rate;
        if !out_std.is_null() {
            *out_std = summary.final_attack_rate_std;
        }
        Ok(())
    })
}

/// Runs a full scenario from a config JSON document into `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn netepi_run_scenario(config_json: *const c_char, out_dir: *const c_char) -> NetepiStatus {
    guard(|| {
        let text = str_arg(config_json, "config_json")?;
        let dir = str_arg(out_dir, "out_dir")?;
        let cfg = lib(ScenarioConfig::from_json(text, None))?;
        lib(run_scenario(&cfg, Path::new(dir), |_| {})).map(|_| ())
    })
}

/// Copy of the calling thread's last error message, or null if none was
/// recorded. Release it with [`netepi_string_free`].
#[no_mangle]
pub extern "C" fn netepi_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_deref() {
        Some(msg) => CString::new(msg.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from [`netepi_last_error_message`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn netepi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn netepi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
