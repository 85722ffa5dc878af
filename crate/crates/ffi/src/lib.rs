//! C ABI over the stablelab library.
//!
//! Objects cross the boundary as opaque handles created by `sl_*_new` or a
//! producing call and released by the matching `sl_*_free`. Every fallible
//! call returns an [`SlStatus`]; the message of the last failure on the
//! calling thread is available from [`sl_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stablelab::besov::{besov_norm, dyadic_block, BesovParams};
use stablelab::config::{ExperimentConfig, ExperimentKind};
use stablelab::density::stable_density_oracle;
use stablelab::jump::{simulate_marginals, DirectCoefficients, SimSpec, StableJumpConfig};
use stablelab::kernels::{Kernel, KernelSpec};
use stablelab::nonlocal::apply_variable;
use stablelab::runner::{run_with_threads, threads_from_env, Status};
use stablelab::{Error, GridFunction, TorusGrid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer,
    Utf8,
    BufferTooSmall,
    Panic,
    InvalidGrid,
    InvalidBesovParams,
    BlockOutOfRange,
    ScaleOverflow,
    GridMismatch,
    InvalidArgument,
    DegenerateCone,
    SingularSigma,
    QuadratureUnderResolved,
    NotTranslationInvariant,
    RemainderTooLarge,
    PreconditionViolated,
    Admissibility,
    NotContracting,
    ResidualStall,
    LambdaOverflow,
    BadBand,
    AliasingDetected,
    EmptyRegion,
    MassDrift,
    UnstableStep,
    ClippingExcess,
    Config,
    Io,
    Format,
    /// The experiment ran and at least one check failed.
    CheckFailed,
}

impl From<&Error> for SlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidGrid(_) => SlStatus::InvalidGrid,
            Error::InvalidBesovParams(_) => SlStatus::InvalidBesovParams,
            Error::BlockOutOfRange { .. } => SlStatus::BlockOutOfRange,
            Error::ScaleOverflow { .. } => SlStatus::ScaleOverflow,
            Error::GridMismatch => SlStatus::GridMismatch,
            Error::InvalidArgument(_) => SlStatus::InvalidArgument,
            Error::DegenerateCone => SlStatus::DegenerateCone,
            Error::SingularSigma { .. } => SlStatus::SingularSigma,
            Error::QuadratureUnderResolved { .. } => SlStatus::QuadratureUnderResolved,
            Error::NotTranslationInvariant => SlStatus::NotTranslationInvariant,
            Error::RemainderTooLarge { .. } => SlStatus::RemainderTooLarge,
            Error::PreconditionViolated(_) => SlStatus::PreconditionViolated,
            Error::Admissibility { .. } => SlStatus::Admissibility,
            Error::NotContracting { .. } => SlStatus::NotContracting,
            Error::ResidualStall { .. } => SlStatus::ResidualStall,
            Error::LambdaOverflow { .. } => SlStatus::LambdaOverflow,
            Error::BadBand { .. } => SlStatus::BadBand,
            Error::AliasingDetected { .. } => SlStatus::AliasingDetected,
            Error::EmptyRegion { .. } => SlStatus::EmptyRegion,
            Error::MassDrift { .. } => SlStatus::MassDrift,
            Error::UnstableStep { .. } => SlStatus::UnstableStep,
            Error::ClippingExcess { .. } => SlStatus::ClippingExcess,
            Error::Config(_) => SlStatus::Config,
            Error::Io(_) => SlStatus::Io,
            Error::Format(_) => SlStatus::Format,
        }
    }
}

/// Opaque periodic grid.
pub struct SlGrid(TorusGrid);

/// Opaque grid function.
pub struct SlFunction(GridFunction);

/// Opaque jump kernel.
pub struct SlKernel(Kernel);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: SlStatus, msg: impl Into<String>) -> SlStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<SlStatus, SlStatus>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(s)) => s,
        Err(_) => fail(SlStatus::Panic, "panic inside stablelab"),
    }
}

fn lib<T>(r: stablelab::Result<T>) -> Result<T, SlStatus> {
    r.map_err(|e| fail(SlStatus::from(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, SlStatus> {
    // SAFETY: the caller passes either null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| fail(SlStatus::NullPointer, "null pointer argument"))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, SlStatus> {
    if p.is_null() {
        return Err(fail(SlStatus::NullPointer, "null string argument"));
    }
    // SAFETY: non-null and NUL terminated by contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(SlStatus::Utf8, "string is not UTF-8"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<SlStatus, SlStatus> {
    if out.is_null() {
        return Err(fail(SlStatus::NullPointer, "null output pointer"));
    }
    // SAFETY: `out` is non-null and writable by contract.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(SlStatus::Ok)
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: `p` came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` is null or points to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` has room for `len` bytes and `n < len`.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Library version as a static NUL terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` is a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn sl_grid_new(
    dim: usize,
    n: usize,
    length: f64,
    out: *mut *mut SlGrid,
) -> SlStatus {
    guard(|| {
        let g = lib(TorusGrid::new(dim, n, length))?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, SlGrid(g)) }
    })
}

/// # Safety
/// `grid` is null or a handle from [`sl_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_grid_free(grid: *mut SlGrid) {
    // SAFETY: forwarded caller contract.
    unsafe { free(grid) }
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `grid` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_grid_len(grid: *const SlGrid) -> usize {
    // SAFETY: forwarded caller contract.
    unsafe { grid.as_ref() }.map(|g| g.0.len()).unwrap_or(0)
}

/// Copies `len` samples (row-major, `len` = grid length) into a new function.
///
/// # Safety
/// `values` points to `len` readable doubles; `grid` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_function_new(
    grid: *const SlGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut SlFunction,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let g = unsafe { deref(grid) }?;
        if values.is_null() {
            return Err(fail(SlStatus::NullPointer, "null values"));
        }
        // SAFETY: `values` has `len` elements by contract.
        let v = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let f = lib(GridFunction::new(g.0, v))?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, SlFunction(f)) }
    })
}

/// Copies the samples into `buf`, which must hold the grid length.
///
/// # Safety
/// `buf` points to `len` writable doubles; `f` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_function_values(
    f: *const SlFunction,
    buf: *mut f64,
    len: usize,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let f = unsafe { deref(f) }?;
        let v = f.0.values();
        if buf.is_null() {
            return Err(fail(SlStatus::NullPointer, "null buffer"));
        }
        if len < v.len() {
            return Err(fail(
                SlStatus::BufferTooSmall,
                format!("need {} values, got {len}", v.len()),
            ));
        }
        // SAFETY: `buf` holds at least `v.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len()) };
        Ok(SlStatus::Ok)
    })
}

/// # Safety
/// `f` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_function_free(f: *mut SlFunction) {
    // SAFETY: forwarded caller contract.
    unsafe { free(f) }
}

/// Builds a zoo kernel (`constant`, `conical`, `sigma`, `rough-x`) with
/// default shape parameters on the period `2π`.
///
/// # Safety
/// `name` is a NUL terminated string; `out` receives the handle.
#[no_mangle]
pub unsafe extern "C" fn sl_kernel_new(
    name: *const c_char,
    dim: usize,
    alpha: f64,
    theta: f64,
    out: *mut *mut SlKernel,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let name = unsafe { text(name) }?;
        let mut spec = KernelSpec::new(dim, alpha);
        spec.theta = theta;
        let k = lib(Kernel::from_name(name, &spec))?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, SlKernel(k)) }
    })
}

/// # Safety
/// `k` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_kernel_free(k: *mut SlKernel) {
    // SAFETY: forwarded caller contract.
    unsafe { free(k) }
}

/// `Δ_j f`.
///
/// # Safety
/// `f` is a live handle; `out` receives the handle.
#[no_mangle]
pub unsafe extern "C" fn sl_dyadic_block(
    f: *const SlFunction,
    j: i32,
    out: *mut *mut SlFunction,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let f = unsafe { deref(f) }?;
        let b = lib(dyadic_block(&f.0, j))?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, SlFunction(b)) }
    })
}

/// `‖f‖_{B^s_{p,q}}`; pass `INFINITY` for `p` or `q` as needed.
///
/// # Safety
/// `f` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_besov_norm(
    f: *const SlFunction,
    s: f64,
    p: f64,
    q: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let f = unsafe { deref(f) }?;
        let params = lib(BesovParams::new(s, p, q))?;
        let v = lib(besov_norm(&f.0, params))?;
        if out.is_null() {
            return Err(fail(SlStatus::NullPointer, "null output pointer"));
        }
        // SAFETY: checked non-null.
        unsafe { *out = v };
        Ok(SlStatus::Ok)
    })
}

/// `ℒ_κ f` on the grid of `f`.
///
/// # Safety
/// `k`, `f` are live handles; `out` receives the handle.
#[no_mangle]
pub unsafe extern "C" fn sl_apply_operator(
    k: *const SlKernel,
    f: *const SlFunction,
    out: *mut *mut SlFunction,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (k, f) = unsafe { (deref(k)?, deref(f)?) };
        let v = lib(apply_variable(&k.0, &f.0))?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, SlFunction(v)) }
    })
}

/// Unit-kernel stable density at time `t`, centred at the origin.
///
/// # Safety
/// `grid` is a live handle; `out` receives the handle.
#[no_mangle]
pub unsafe extern "C" fn sl_stable_density(
    alpha: f64,
    t: f64,
    grid: *const SlGrid,
    out: *mut *mut SlFunction,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let g = unsafe { deref(grid) }?;
        let d = lib(stable_density_oracle(alpha, t, &g.0))?;
        // SAFETY: forwarded caller contract.
        unsafe { put(out, SlFunction(d.density)) }
    })
}

/// Terminal states of `n_paths` paths of `dX = b dt + dL^κ` started at
/// `x0` (`dim` doubles), written to `out` as `n_paths × dim` doubles.
/// `drift` is null for `b = 0`, else one function per dimension.
///
/// # Safety
/// Handles are live; `x0` holds `dim` doubles; `drift` is null or holds
/// `dim` handles; `out` holds `n_paths * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_simulate_marginals(
    k: *const SlKernel,
    drift: *const *const SlFunction,
    x0: *const f64,
    eps_cut: f64,
    r_cut: f64,
    t_end: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let k = unsafe { deref(k) }?;
        let d = k.0.dim();
        if x0.is_null() || out.is_null() {
            return Err(fail(SlStatus::NullPointer, "null x0 or output"));
        }
        let mut b = Vec::new();
        if !drift.is_null() {
            for a in 0..d {
                // SAFETY: `drift` holds `d` handles by contract.
                b.push(unsafe { deref(*drift.add(a)) }?.0.clone());
            }
        }
        let mut start = [0.0; 2];
        // SAFETY: `x0` holds `d` doubles.
        start[..d].copy_from_slice(unsafe { std::slice::from_raw_parts(x0, d) });
        let cfg = lib(StableJumpConfig::new(k.0.alpha(), eps_cut, r_cut))?;
        let coeffs = lib(DirectCoefficients::new(&k.0, &b, &cfg))?;
        let spec = lib(SimSpec::new(t_end, dt))?;
        let m = simulate_marginals(n_paths, start, &coeffs, &cfg, &spec, seed);
        // SAFETY: `out` holds `n_paths * d` doubles.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, n_paths * d) };
        for (row, x) in dst.chunks_mut(d).zip(&m) {
            row.copy_from_slice(&x[..d]);
        }
        Ok(SlStatus::Ok)
    })
}

/// Runs the experiment described by the config file at `path`. `kind` is
/// null to use the file's `kind`, else a subcommand name. `out_dir` is null
/// to keep the configured output directory. Returns
/// [`SlStatus::CheckFailed`] when the run completed with a failing check.
///
/// # Safety
/// String arguments are null or NUL terminated.
#[no_mangle]
pub unsafe extern "C" fn sl_run_config(
    path: *const c_char,
    kind: *const c_char,
    out_dir: *const c_char,
) -> SlStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let path = unsafe { text(path) }?;
        let kind = if kind.is_null() {
            None
        } else {
            // SAFETY: forwarded caller contract.
            Some(lib(unsafe { text(kind) }?.parse::<ExperimentKind>())?)
        };
        let mut cfg = lib(ExperimentConfig::load(Path::new(path), kind))?;
        if !out_dir.is_null() {
            // SAFETY: forwarded caller contract.
            cfg.out = unsafe { text(out_dir) }?.into();
        }
        let threads = lib(threads_from_env())?;
        let o = lib(run_with_threads(&cfg, threads))?;
        Ok(match o.status() {
            Status::Fail => fail(SlStatus::CheckFailed, o.lines().join("\n")),
            _ => SlStatus::Ok,
        })
    })
}
