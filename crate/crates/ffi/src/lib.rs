//! C ABI over `droplet_core`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`DropletStatus`]; on failure the message is kept per thread and can be
//! copied out with [`droplet_last_error`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use droplet_core::counterexample::{run_counterexample, CounterexampleConfig, VerdictStatus};
use droplet_core::evolution::{run_observed, StepperConfig};
use droplet_core::geometry::{
    default_convexity_tol, is_convex, make_disk, make_rounded_triangle, ClosedCurve, Point2,
    RoundedTriangleSpec,
};
use droplet_core::mobility::MobilityLaw;
use droplet_core::solver::{solve_torsion, SolverConfig, TorsionSolution};
use droplet_core::Error;

/// Result code of every fallible call. `Ok` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropletStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDomain = 3,
    OutOfDomain = 4,
    OutOfRange = 5,
    InvalidLaw = 6,
    IllConditioned = 7,
    TopologyChange = 8,
    SearchFailure = 9,
    FilletTooLarge = 10,
    Config = 11,
    Io = 12,
    /// The output buffer is too small; the required size was written.
    BufferTooSmall = 13,
    Panic = 99,
}

impl From<&Error> for DropletStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => DropletStatus::InvalidArgument,
            Error::InvalidDomain(_) => DropletStatus::InvalidDomain,
            Error::OutOfDomain(_) => DropletStatus::OutOfDomain,
            Error::OutOfRange(_) => DropletStatus::OutOfRange,
            Error::InvalidLaw(_) => DropletStatus::InvalidLaw,
            Error::IllConditioned { .. } => DropletStatus::IllConditioned,
            Error::TopologyChange { .. } => DropletStatus::TopologyChange,
            Error::SearchFailure(_) => DropletStatus::SearchFailure,
            Error::FilletTooLarge { .. } => DropletStatus::FilletTooLarge,
            Error::Config(_) => DropletStatus::Config,
            Error::Io { .. } => DropletStatus::Io,
        }
    }
}

/// Opaque closed curve.
pub struct DropletCurve(ClosedCurve);

/// Opaque solved torsion problem.
pub struct DropletSolution(TorsionSolution);

/// Opaque mobility law.
pub struct DropletLaw(MobilityLaw);

/// Outcome of a counterexample run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DropletReport {
    pub x0: f64,
    pub x1: f64,
    /// Predicted initial slope of the gap.
    pub gap_rate: f64,
    /// NaN when no slope could be fitted.
    pub fitted_slope: f64,
    pub slope_relative_error: f64,
    /// 0 broken, 1 not broken, 2 inconclusive.
    pub verdict: i32,
    /// NaN unless the verdict is "broken".
    pub t_star: f64,
    /// 1 when all three certificates agree.
    pub agree: i32,
    /// 1 when the run stopped before `t_end`.
    pub truncated: i32,
    pub steps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), (DropletStatus, String)>) -> DropletStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DropletStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            DropletStatus::Panic
        }
    }
}

fn core(e: Error) -> (DropletStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(name: &str) -> (DropletStatus, String) {
    (DropletStatus::NullPointer, format!("{name} is null"))
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, (DropletStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (DropletStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_scalar(out: *mut f64, v: f64) -> Result<(), (DropletStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = v;
    Ok(())
}

/// Copies `values` into `buf` of capacity `cap`, always storing the needed
/// count in `*len`. A null `buf` only queries the count.
unsafe fn fill(
    values: &[f64],
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> Result<(), (DropletStatus, String)> {
    if len.is_null() {
        return Err(null("len"));
    }
    *len = values.len();
    if buf.is_null() {
        return Ok(());
    }
    if cap < values.len() {
        return Err((
            DropletStatus::BufferTooSmall,
            format!("need {} values, buffer holds {cap}", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `cap - 1` bytes. Returns the full
/// message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn droplet_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a curve from `n` interleaved `x, y` pairs, reordering to
/// counterclockwise if needed.
///
/// # Safety
/// `xy` must be valid for `2 * n` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_curve_from_points(
    xy: *const f64,
    n: usize,
    out: *mut *mut DropletCurve,
) -> DropletStatus {
    guard(|| {
        if xy.is_null() {
            return Err(null("xy"));
        }
        let raw = std::slice::from_raw_parts(xy, 2 * n);
        let points = raw.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect();
        let curve = ClosedCurve::from_points(points).map_err(core)?;
        put(out, DropletCurve(curve))
    })
}

/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_curve_disk(
    radius: f64,
    n: usize,
    out: *mut *mut DropletCurve,
) -> DropletStatus {
    guard(|| put(out, DropletCurve(make_disk(radius, n).map_err(core)?)))
}

/// Equilateral triangle with base `[-a, a]` on `y = 0` and corner fillets of
/// radius `fillet` (0 for sharp corners).
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_curve_rounded_triangle(
    a: f64,
    fillet: f64,
    n: usize,
    out: *mut *mut DropletCurve,
) -> DropletStatus {
    guard(|| {
        let spec = RoundedTriangleSpec::new(a, fillet, n).map_err(core)?;
        put(out, DropletCurve(make_rounded_triangle(&spec).map_err(core)?))
    })
}

/// # Safety
/// `curve` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn droplet_curve_free(curve: *mut DropletCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Marker count, or 0 for a null handle.
///
/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn droplet_curve_len(curve: *const DropletCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.len())
}

/// Interleaved `x, y` coordinates; `*len` receives `2 * N`.
///
/// # Safety
/// `curve` must be a live handle, `buf` null or valid for `cap` writes,
/// `len` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_curve_points(
    curve: *const DropletCurve,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> DropletStatus {
    guard(|| {
        let c = get(curve, "curve")?;
        let xy: Vec<f64> = c.0.markers().iter().flat_map(|p| [p.x, p.y]).collect();
        fill(&xy, buf, cap, len)
    })
}

/// # Safety
/// `curve` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_curve_area(curve: *const DropletCurve, out: *mut f64) -> DropletStatus {
    guard(|| write_scalar(out, get(curve, "curve")?.0.signed_area()))
}

/// Writes 1 to `*out` if the polygon is convex at the default tolerance.
///
/// # Safety
/// `curve` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_curve_is_convex(curve: *const DropletCurve, out: *mut i32) -> DropletStatus {
    guard(|| {
        let c = &get(curve, "curve")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = i32::from(is_convex(c, default_convexity_tol(c)));
        Ok(())
    })
}

/// Parses a law name such as `p2`, `p3`, `p:2.5` or `linear`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_law_parse(name: *const c_char, out: *mut *mut DropletLaw) -> DropletStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_str().map_err(|e| {
            (
                DropletStatus::InvalidArgument,
                format!("law name is not UTF-8: {e}"),
            )
        })?;
        put(out, DropletLaw(MobilityLaw::parse(name).map_err(core)?))
    })
}

/// # Safety
/// `law` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn droplet_law_free(law: *mut DropletLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// `F(r)` for `r > 0`.
///
/// # Safety
/// `law` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_law_velocity(
    law: *const DropletLaw,
    r: f64,
    out: *mut f64,
) -> DropletStatus {
    guard(|| write_scalar(out, get(law, "law")?.0.velocity(r).map_err(core)?))
}

/// Solves the torsion problem on `curve` with default solver settings.
///
/// # Safety
/// `curve` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_solve(
    curve: *const DropletCurve,
    out: *mut *mut DropletSolution,
) -> DropletStatus {
    guard(|| {
        let c = get(curve, "curve")?;
        let sol = solve_torsion(&c.0, &SolverConfig::default()).map_err(core)?;
        put(out, DropletSolution(sol))
    })
}

/// # Safety
/// `solution` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn droplet_solution_free(solution: *mut DropletSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// `M = ∫w`.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_solution_mass(
    solution: *const DropletSolution,
    out: *mut f64,
) -> DropletStatus {
    guard(|| write_scalar(out, get(solution, "solution")?.0.mass()))
}

/// `λ = 1/M`.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_solution_lambda(
    solution: *const DropletSolution,
    out: *mut f64,
) -> DropletStatus {
    guard(|| write_scalar(out, get(solution, "solution")?.0.normalize().lambda))
}

/// `|Du|` at every marker; `*len` receives `N`.
///
/// # Safety
/// `solution` must be a live handle, `buf` null or valid for `cap` writes,
/// `len` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_solution_gradient(
    solution: *const DropletSolution,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> DropletStatus {
    guard(|| {
        let s = get(solution, "solution")?;
        fill(&s.0.normalize().boundary_gradient, buf, cap, len)
    })
}

/// Evolves `curve` to `t_end` with steps of at most `dt_max` and writes the
/// final curve. `marker_count` of 0 keeps the input count.
///
/// # Safety
/// `curve` and `law` must be live handles and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn droplet_evolve(
    curve: *const DropletCurve,
    law: *const DropletLaw,
    dt_max: f64,
    t_end: f64,
    marker_count: usize,
    out: *mut *mut DropletCurve,
) -> DropletStatus {
    guard(|| {
        let c = get(curve, "curve")?;
        let l = get(law, "law")?;
        let cfg = StepperConfig {
            dt_max,
            t_end,
            marker_count: if marker_count == 0 {
                c.0.len()
            } else {
                marker_count
            },
            output_every: Some(t_end),
            ..StepperConfig::default()
        };
        let last = run_observed(c.0.clone(), &l.0, &cfg, |_| {}).map_err(|e| {
            let status = DropletStatus::from(e.error());
            (status, e.error().to_string())
        })?;
        put(out, DropletCurve(last.curve().clone()))
    })
}

/// Runs the convexity-breaking experiment on the rounded triangle.
/// `pair_x0`/`pair_x1` of NaN let the pair be chosen automatically.
///
/// # Safety
/// `law` must be a live handle and `out` valid for one write.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn droplet_counterexample(
    law: *const DropletLaw,
    a: f64,
    fillet: f64,
    marker_count: usize,
    dt_max: f64,
    t_end: f64,
    pair_x0: f64,
    pair_x1: f64,
    out: *mut DropletReport,
) -> DropletStatus {
    guard(|| {
        let l = get(law, "law")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let pair = match (pair_x0.is_nan(), pair_x1.is_nan()) {
            (true, true) => None,
            (false, false) => Some((pair_x0, pair_x1)),
            _ => {
                return Err((
                    DropletStatus::InvalidArgument,
                    "pass both pair ends or neither".into(),
                ))
            }
        };
        let cfg = CounterexampleConfig {
            a,
            fillet,
            stepper: StepperConfig {
                marker_count,
                dt_max,
                t_end,
                output_every: None,
                ..StepperConfig::default()
            },
            pair,
            slope_window: None,
        };
        let report = run_counterexample(&l.0, &cfg).map_err(core)?;
        *out = DropletReport {
            x0: report.plan.pair.x0,
            x1: report.plan.pair.x1,
            gap_rate: report.plan.gap_rate,
            fitted_slope: report.fitted_slope.unwrap_or(f64::NAN),
            slope_relative_error: report.slope_relative_error.unwrap_or(f64::NAN),
            verdict: match report.verdict.status {
                VerdictStatus::Broken => 0,
                VerdictStatus::NotBroken => 1,
                VerdictStatus::Inconclusive => 2,
            },
            t_star: report.verdict.t_star.unwrap_or(f64::NAN),
            agree: i32::from(report.verdict.agree),
            truncated: i32::from(report.truncated.is_some()),
            steps: report.steps,
        };
        Ok(())
    })
}
