//! C interface to `conpt`.
//!
//! Networks live behind an opaque `ConptNetwork` handle. Every fallible call
//! returns a `ConptStatus`; on failure `conpt_last_error` describes the most
//! recent error on the calling thread. Numeric outputs go through caller
//! pointers and are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use conpt::{
    bethe_fixed_point, brute_force_sc, build_lattice, compose_parallel, compose_series, load_network, monte_carlo_sc, sponge_crossing,
    BetheSpec, LatticeKind, LatticeSpec, LinkWeight, Network, RuleSystem,
};

pub const CONPT_RULES_CLASSICAL: u32 = 0;
pub const CONPT_RULES_CONPT: u32 = 1;

pub const CONPT_LATTICE_SQUARE: u32 = 0;
pub const CONPT_LATTICE_HONEYCOMB: u32 = 1;
pub const CONPT_LATTICE_TRIANGULAR: u32 = 2;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    SolverError = 4,
    Panic = 5,
}

/// Opaque network handle.
pub struct ConptNetwork {
    inner: Network,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: ConptStatus, msg: impl ToString) -> ConptStatus {
    set_error(msg.to_string());
    status
}

fn guard(f: impl FnOnce() -> ConptStatus) -> ConptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ConptStatus::Panic, "internal panic"),
    }
}

fn rules(code: u32) -> Result<RuleSystem, ConptStatus> {
    match code {
        CONPT_RULES_CLASSICAL => Ok(RuleSystem::Classical),
        CONPT_RULES_CONPT => Ok(RuleSystem::ConPT),
        other => Err(fail(ConptStatus::InvalidArgument, format!("unknown rule system code {other}"))),
    }
}

fn lattice(code: u32) -> Result<LatticeKind, ConptStatus> {
    match code {
        CONPT_LATTICE_SQUARE => Ok(LatticeKind::Square),
        CONPT_LATTICE_HONEYCOMB => Ok(LatticeKind::Honeycomb),
        CONPT_LATTICE_TRIANGULAR => Ok(LatticeKind::Triangular),
        other => Err(fail(ConptStatus::InvalidArgument, format!("unknown lattice code {other}"))),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

unsafe fn net_ref<'a>(p: *const ConptNetwork) -> Result<&'a Network, ConptStatus> {
    p.as_ref().map(|n| &n.inner).ok_or_else(|| fail(ConptStatus::NullPointer, "null network handle"))
}

unsafe fn net_mut<'a>(p: *mut ConptNetwork) -> Result<&'a mut Network, ConptStatus> {
    p.as_mut().map(|n| &mut n.inner).ok_or_else(|| fail(ConptStatus::NullPointer, "null network handle"))
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], ConptStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(ConptStatus::NullPointer, "null array with nonzero length"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn out_ptr<T>(p: *mut T) -> Result<(), ConptStatus> {
    if p.is_null() {
        Err(fail(ConptStatus::NullPointer, "null output pointer"))
    } else {
        Ok(())
    }
}

fn boxed(net: Network) -> *mut ConptNetwork {
    Box::into_raw(Box::new(ConptNetwork { inner: net }))
}

/// Message describing the last failed call on this thread. Valid until the
/// next call into the library from the same thread; never null.
#[no_mangle]
pub extern "C" fn conpt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn conpt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New empty network. Free with `conpt_network_free`.
#[no_mangle]
pub extern "C" fn conpt_network_new() -> *mut ConptNetwork {
    boxed(Network::new())
}

/// # Safety
/// `net` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn conpt_network_free(net: *mut ConptNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn conpt_network_add_node(net: *mut ConptNetwork, id: u32) -> ConptStatus {
    guard(|| {
        tri!(net_mut(net)).add_node(id);
        ConptStatus::Ok
    })
}

/// Adds a link of weight `theta` (radians, in [0, π/4]).
///
/// # Safety
/// `net` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn conpt_network_add_link(net: *mut ConptNetwork, a: u32, b: u32, theta: f64) -> ConptStatus {
    guard(|| {
        let net = tri!(net_mut(net));
        let w = tri!(LinkWeight::from_theta(theta).map_err(|e| fail(ConptStatus::InvalidArgument, e)));
        match net.add_link(a, b, w) {
            Ok(_) => ConptStatus::Ok,
            Err(e) => fail(ConptStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `net` must be a live handle; `a`/`b` must point to `na`/`nb` ids.
#[no_mangle]
pub unsafe extern "C" fn conpt_network_set_boundaries(
    net: *mut ConptNetwork,
    a: *const u32,
    na: usize,
    b: *const u32,
    nb: usize,
) -> ConptStatus {
    guard(|| {
        let net = tri!(net_mut(net));
        let (a, b) = (tri!(slice(a, na)), tri!(slice(b, nb)));
        match net.set_boundaries(a.iter().copied(), b.iter().copied()) {
            Ok(()) => ConptStatus::Ok,
            Err(e) => fail(ConptStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `net` must be a live handle; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn conpt_network_size(net: *const ConptNetwork, nodes: *mut usize, links: *mut usize) -> ConptStatus {
    guard(|| {
        let net = tri!(net_ref(net));
        tri!(out_ptr(nodes));
        tri!(out_ptr(links));
        *nodes = net.node_count();
        *links = net.link_count();
        ConptStatus::Ok
    })
}

/// Parses the line-oriented network text format into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn conpt_network_parse(text: *const c_char, out: *mut *mut ConptNetwork) -> ConptStatus {
    guard(|| {
        tri!(out_ptr(out));
        if text.is_null() {
            return fail(ConptStatus::NullPointer, "null text");
        }
        let text = match CStr::from_ptr(text).to_str() {
            Ok(t) => t,
            Err(e) => return fail(ConptStatus::ParseError, e),
        };
        match load_network(text) {
            Ok(net) => {
                *out = boxed(net);
                ConptStatus::Ok
            }
            Err(e) => fail(ConptStatus::ParseError, e),
        }
    })
}

/// Uniform `L × L` lattice with left and right boundaries.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn conpt_lattice_new(kind: u32, size: usize, theta: f64, out: *mut *mut ConptNetwork) -> ConptStatus {
    guard(|| {
        tri!(out_ptr(out));
        let kind = tri!(lattice(kind));
        let w = tri!(LinkWeight::from_theta(theta).map_err(|e| fail(ConptStatus::InvalidArgument, e)));
        let spec = tri!(LatticeSpec::new(kind, size).map_err(|e| fail(ConptStatus::InvalidArgument, e)));
        match build_lattice(spec, w) {
            Ok(net) => {
                *out = boxed(net);
                ConptStatus::Ok
            }
            Err(e) => fail(ConptStatus::InvalidArgument, e),
        }
    })
}

/// Sponge-crossing measure (p or c) by consecutive star-mesh reduction,
/// averaged over `runs` random orders.
///
/// # Safety
/// `net` must be a live handle; `mean` and `std` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn conpt_sponge_crossing(
    net: *const ConptNetwork,
    rule_code: u32,
    runs: usize,
    seed: u64,
    mean: *mut f64,
    std: *mut f64,
) -> ConptStatus {
    guard(|| {
        let net = tri!(net_ref(net));
        let rules = tri!(rules(rule_code));
        tri!(out_ptr(mean));
        tri!(out_ptr(std));
        match sponge_crossing(net, rules, runs, seed) {
            Ok(est) if est.succeeded() > 0 => {
                *mean = est.mean;
                *std = est.std;
                ConptStatus::Ok
            }
            Ok(est) => fail(
                ConptStatus::SolverError,
                est.failures.first().map_or("no run succeeded".to_string(), |f| f.1.error.to_string()),
            ),
            Err(e) => fail(ConptStatus::InvalidArgument, e),
        }
    })
}

/// Exact classical sponge-crossing probability (at most 24 links).
///
/// # Safety
/// `net` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn conpt_brute_force(net: *const ConptNetwork, out: *mut f64) -> ConptStatus {
    guard(|| {
        let net = tri!(net_ref(net));
        tri!(out_ptr(out));
        match brute_force_sc(net) {
            Ok(v) => {
                *out = v;
                ConptStatus::Ok
            }
            Err(e) => fail(ConptStatus::InvalidArgument, e),
        }
    })
}

/// Classical Monte Carlo sponge-crossing estimate.
///
/// # Safety
/// `net` must be a live handle; outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn conpt_monte_carlo(
    net: *const ConptNetwork,
    trials: u64,
    seed: u64,
    estimate: *mut f64,
    stderr: *mut f64,
) -> ConptStatus {
    guard(|| {
        let net = tri!(net_ref(net));
        tri!(out_ptr(estimate));
        tri!(out_ptr(stderr));
        match monte_carlo_sc(net, trials, seed) {
            Ok(s) => {
                *estimate = s.estimate;
                *stderr = s.stderr;
                ConptStatus::Ok
            }
            Err(e) => fail(ConptStatus::InvalidArgument, e),
        }
    })
}

/// Infinite Bethe lattice value for degree `k`, retained fraction `f` and
/// link measure `w`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn conpt_bethe_fixed_point(k: usize, f: f64, rule_code: u32, w: f64, out: *mut f64) -> ConptStatus {
    guard(|| {
        let rules = tri!(rules(rule_code));
        tri!(out_ptr(out));
        let spec = tri!(BetheSpec::diluted(k, f, rules).map_err(|e| fail(ConptStatus::InvalidArgument, e)));
        match bethe_fixed_point(spec, w) {
            Ok(v) => {
                *out = v;
                ConptStatus::Ok
            }
            Err(e) => fail(ConptStatus::InvalidArgument, e),
        }
    })
}

/// Combines `n` link measures in series (`parallel == 0`) or in parallel.
///
/// # Safety
/// `measures` must point to `n` values; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn conpt_compose(rule_code: u32, parallel: i32, measures: *const f64, n: usize, out: *mut f64) -> ConptStatus {
    guard(|| {
        let rules = tri!(rules(rule_code));
        let ws = tri!(slice(measures, n));
        tri!(out_ptr(out));
        let r = if parallel != 0 { compose_parallel(rules, ws) } else { compose_series(rules, ws) };
        match r {
            Ok(v) => {
                *out = v;
                ConptStatus::Ok
            }
            Err(e) => fail(ConptStatus::InvalidArgument, e),
        }
    })
}

/// Writes the network in the text format into `buf` (capacity `cap`,
/// NUL-terminated). `needed` receives the byte count including the NUL;
/// call with `cap = 0` to size the buffer.
///
/// # Safety
/// `net` must be a live handle; `buf` must hold `cap` bytes; `needed` valid.
#[no_mangle]
pub unsafe extern "C" fn conpt_network_save(net: *const ConptNetwork, buf: *mut c_char, cap: usize, needed: *mut usize) -> ConptStatus {
    guard(|| {
        let net = tri!(net_ref(net));
        tri!(out_ptr(needed));
        let text = net.save();
        *needed = text.len() + 1;
        if cap == 0 {
            return ConptStatus::Ok;
        }
        if buf.is_null() {
            return fail(ConptStatus::NullPointer, "null buffer");
        }
        if cap < text.len() + 1 {
            return fail(ConptStatus::InvalidArgument, format!("buffer of {cap} bytes, need {}", text.len() + 1));
        }
        ptr::copy_nonoverlapping(text.as_ptr().cast(), buf, text.len());
        *buf.add(text.len()) = 0;
        ConptStatus::Ok
    })
}
