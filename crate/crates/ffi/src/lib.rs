//! C ABI over `subspace-core`.
//!
//! Every entry point returns a [`SubspaceStatus`] and writes results through
//! out-pointers. Objects cross the boundary as opaque handles that the caller
//! releases with the matching `*_free` function. When a call fails, a
//! description is available from [`subspace_last_error_message`] on the same
//! thread until the next failing call.
//!
//! Matrices are dense, row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::DMatrix;
use subspace_core::baselines::svd_optimal;
use subspace_core::instance::{load_instance, subspace_cost};
use subspace_core::moments::gamma_p;
use subspace_core::relaxation::{solve_relaxation, SolverConfig};
use subspace_core::rounding::{expected_ratio_bound, round_solution, RoundingConfig};
use subspace_core::{Error, PointSet, ProblemSpec, RelaxationSolution};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Infeasible = 4,
    NotConverged = 5,
    Unsupported = 6,
    Io = 7,
    Parse = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Point set together with `k` and `p`.
pub struct SubspaceInstance {
    points: PointSet,
    spec: ProblemSpec,
}

/// Solution of the convex relaxation.
pub struct SubspaceRelaxation {
    inner: RelaxationSolution,
}

/// Rounded rank-`(n-k)` solution.
pub struct SubspaceSolution {
    z: DMatrix<f64>,
    value: f64,
    best_run: usize,
}

/// Solver knobs; obtain defaults from [`subspace_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SubspaceSolverOptions {
    pub max_iters: usize,
    pub tol: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SubspaceStatus {
    match e {
        Error::InvalidInput(_) | Error::Precondition(_) | Error::TooLarge(_) => SubspaceStatus::InvalidArgument,
        Error::DimensionMismatch(_) | Error::NotOrthonormal { .. } => SubspaceStatus::DimensionMismatch,
        Error::Infeasible(_) => SubspaceStatus::Infeasible,
        Error::EigenNonConvergence { .. } => SubspaceStatus::NotConverged,
        Error::UnsupportedExponent { .. } => SubspaceStatus::Unsupported,
        Error::Io { .. } => SubspaceStatus::Io,
        Error::Parse { .. } => SubspaceStatus::Parse,
    }
}

struct Fail(SubspaceStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SubspaceStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SubspaceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SubspaceStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            SubspaceStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn copy_row_major(m: &DMatrix<f64>, buf: *mut f64, len: usize) -> Result<(), Fail> {
    let need = m.len();
    if len < need {
        return Err(Fail(
            SubspaceStatus::BufferTooSmall,
            format!("buffer holds {len} values, {need} required"),
        ));
    }
    if need == 0 {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buffer"));
    }
    let (rows, cols) = m.shape();
    // SAFETY: caller guarantees `buf` has `len >= rows * cols` writable slots.
    let dst = unsafe { std::slice::from_raw_parts_mut(buf, need) };
    for i in 0..rows {
        for j in 0..cols {
            dst[i * cols + j] = m[(i, j)];
        }
    }
    Ok(())
}

/// Message of the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn subspace_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn subspace_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn subspace_solver_options_default() -> SubspaceSolverOptions {
    let d = SolverConfig::default();
    SubspaceSolverOptions {
        max_iters: d.max_iters,
        tol: d.tol,
    }
}

/// Builds an instance from `m x n` row-major `rows`. `row_weights` (length
/// `m`) and `col_weights` (length `n`) may be NULL for counting measures.
///
/// # Safety
/// Non-NULL pointers must reference buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn subspace_instance_new(
    rows: *const f64,
    m: usize,
    n: usize,
    row_weights: *const f64,
    col_weights: *const f64,
    k: usize,
    p: f64,
    out_instance: *mut *mut SubspaceInstance,
) -> SubspaceStatus {
    guard(|| {
        let dst = out(out_instance, "out_instance")?;
        *dst = ptr::null_mut();
        let data = slice(
            rows,
            m.checked_mul(n)
                .ok_or_else(|| Fail(SubspaceStatus::InvalidArgument, "m * n overflows".into()))?,
            "rows",
        )?;
        let matrix = DMatrix::from_row_slice(m, n, data);
        let mu = (!row_weights.is_null())
            .then(|| slice(row_weights, m, "row_weights").map(<[f64]>::to_vec))
            .transpose()?;
        let nu = (!col_weights.is_null())
            .then(|| slice(col_weights, n, "col_weights").map(<[f64]>::to_vec))
            .transpose()?;
        let points = PointSet::with_weights(matrix, mu, nu)?;
        let spec = ProblemSpec::new(n, k, p)?;
        *dst = Box::into_raw(Box::new(SubspaceInstance { points, spec }));
        Ok(())
    })
}

/// Loads an instance JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn subspace_instance_load(
    path: *const c_char,
    out_instance: *mut *mut SubspaceInstance,
) -> SubspaceStatus {
    guard(|| {
        let dst = out(out_instance, "out_instance")?;
        *dst = ptr::null_mut();
        if path.is_null() {
            return Err(null("path"));
        }
        let text = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(SubspaceStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
        let (points, spec) = load_instance(Path::new(text))?;
        *dst = Box::into_raw(Box::new(SubspaceInstance { points, spec }));
        Ok(())
    })
}

/// # Safety
/// `instance` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn subspace_instance_free(instance: *mut SubspaceInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Writes `m`, `n`, `k` and `p`; any out-pointer may be NULL.
///
/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn subspace_instance_shape(
    instance: *const SubspaceInstance,
    m: *mut usize,
    n: *mut usize,
    k: *mut usize,
    p: *mut f64,
) -> SubspaceStatus {
    guard(|| {
        let inst = handle(instance, "instance")?;
        if let Some(m) = m.as_mut() {
            *m = inst.points.m();
        }
        if let Some(n) = n.as_mut() {
            *n = inst.points.n();
        }
        if let Some(k) = k.as_mut() {
            *k = inst.spec.k;
        }
        if let Some(p) = p.as_mut() {
            *p = inst.spec.p;
        }
        Ok(())
    })
}

/// Solves the convex relaxation. `options` may be NULL for defaults.
///
/// # Safety
/// `instance` must be a live handle; `options` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn subspace_solve(
    instance: *const SubspaceInstance,
    options: *const SubspaceSolverOptions,
    out_relaxation: *mut *mut SubspaceRelaxation,
) -> SubspaceStatus {
    guard(|| {
        let dst = out(out_relaxation, "out_relaxation")?;
        *dst = ptr::null_mut();
        let inst = handle(instance, "instance")?;
        let mut cfg = SolverConfig::default();
        if let Some(o) = options.as_ref() {
            cfg.max_iters = o.max_iters;
            cfg.tol = o.tol;
        }
        let inner = solve_relaxation(&inst.points, &inst.spec, &cfg)?;
        *dst = Box::into_raw(Box::new(SubspaceRelaxation { inner }));
        Ok(())
    })
}

/// # Safety
/// `relaxation` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn subspace_relaxation_free(relaxation: *mut SubspaceRelaxation) {
    if !relaxation.is_null() {
        drop(Box::from_raw(relaxation));
    }
}

/// Objective value, iteration count and convergence flag; out-pointers may
/// be NULL.
///
/// # Safety
/// `relaxation` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn subspace_relaxation_info(
    relaxation: *const SubspaceRelaxation,
    value: *mut f64,
    iterations: *mut usize,
    converged: *mut bool,
) -> SubspaceStatus {
    guard(|| {
        let r = &handle(relaxation, "relaxation")?.inner;
        if let Some(v) = value.as_mut() {
            *v = r.value;
        }
        if let Some(i) = iterations.as_mut() {
            *i = r.iterations;
        }
        if let Some(c) = converged.as_mut() {
            *c = r.converged;
        }
        Ok(())
    })
}

/// Copies the `n x n` matrix `X` (measure-normalized coordinates) into `buf`.
///
/// # Safety
/// `buf` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn subspace_relaxation_matrix(
    relaxation: *const SubspaceRelaxation,
    buf: *mut f64,
    len: usize,
) -> SubspaceStatus {
    guard(|| {
        let r = handle(relaxation, "relaxation")?;
        copy_row_major(r.inner.x.as_matrix(), buf, len)
    })
}

/// Best of `runs` randomized roundings under `seed`.
///
/// # Safety
/// Both handles must be live and `relaxation` must come from `instance`.
#[no_mangle]
pub unsafe extern "C" fn subspace_round(
    instance: *const SubspaceInstance,
    relaxation: *const SubspaceRelaxation,
    runs: usize,
    seed: u64,
    out_solution: *mut *mut SubspaceSolution,
) -> SubspaceStatus {
    guard(|| {
        let dst = out(out_solution, "out_solution")?;
        *dst = ptr::null_mut();
        let inst = handle(instance, "instance")?;
        let relax = handle(relaxation, "relaxation")?;
        let cfg = RoundingConfig {
            runs,
            seed,
            ..RoundingConfig::default()
        };
        let outcome = round_solution(&inst.points, &inst.spec, &relax.inner, &cfg)?;
        *dst = Box::into_raw(Box::new(SubspaceSolution {
            z: outcome.solution.z,
            value: outcome.solution.value,
            best_run: outcome.best_run,
        }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn subspace_solution_free(solution: *mut SubspaceSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Cost, index of the winning run, and the shape of `Z`.
///
/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn subspace_solution_info(
    solution: *const SubspaceSolution,
    value: *mut f64,
    best_run: *mut usize,
    rows: *mut usize,
    cols: *mut usize,
) -> SubspaceStatus {
    guard(|| {
        let s = handle(solution, "solution")?;
        if let Some(v) = value.as_mut() {
            *v = s.value;
        }
        if let Some(b) = best_run.as_mut() {
            *b = s.best_run;
        }
        if let Some(r) = rows.as_mut() {
            *r = s.z.nrows();
        }
        if let Some(c) = cols.as_mut() {
            *c = s.z.ncols();
        }
        Ok(())
    })
}

/// Copies the `n x (n-k)` basis `Z` of the complement into `buf`.
///
/// # Safety
/// `buf` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn subspace_solution_basis(
    solution: *const SubspaceSolution,
    buf: *mut f64,
    len: usize,
) -> SubspaceStatus {
    guard(|| copy_row_major(&handle(solution, "solution")?.z, buf, len))
}

/// Cost of the complement basis `z` (`n x (n-k)`, row-major).
///
/// # Safety
/// `z` must point to `n * (n-k)` doubles.
#[no_mangle]
pub unsafe extern "C" fn subspace_cost_of(
    instance: *const SubspaceInstance,
    z: *const f64,
    len: usize,
    out_value: *mut f64,
) -> SubspaceStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let inst = handle(instance, "instance")?;
        let n = inst.points.n();
        let cols = inst.spec.codim(n);
        if len != n * cols {
            return Err(Fail(
                SubspaceStatus::DimensionMismatch,
                format!("Z must hold {n} x {cols} = {} values, got {len}", n * cols),
            ));
        }
        let zm = DMatrix::from_row_slice(n, cols, slice(z, len, "z")?);
        *dst = subspace_cost(&inst.points, &inst.spec, &zm)?;
        Ok(())
    })
}

/// Optimal `p = 2` cost `(sum of the n-k smallest squared singular values)^(1/2)`.
///
/// # Safety
/// `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn subspace_svd_value(instance: *const SubspaceInstance, out_value: *mut f64) -> SubspaceStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let inst = handle(instance, "instance")?;
        *dst = svd_optimal(&inst.points, inst.spec.k)?.optimal_value;
        Ok(())
    })
}

/// `(E|g|^p)^(1/p)` for a standard normal `g`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subspace_gamma_p(p: f64, out_value: *mut f64) -> SubspaceStatus {
    guard(|| {
        *out(out_value, "out_value")? = gamma_p(p)?;
        Ok(())
    })
}

/// Guaranteed expected ratio of one rounding to the relaxation value.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subspace_expected_ratio_bound(
    n: usize,
    k: usize,
    p: f64,
    out_value: *mut f64,
) -> SubspaceStatus {
    guard(|| {
        *out(out_value, "out_value")? = expected_ratio_bound(n, k, p)?;
        Ok(())
    })
}
