//! C ABI over `spindle-core`.
//!
//! Every function returns a [`SpindleStatus`]; results go through out
//! pointers. Handles are opaque and owned by the caller until passed to the
//! matching `*_free`. The message of the last failure on the calling thread
//! is available from [`spindle_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spindle_core::ballhull::{
    count_vertices, enumerate_facets, BallPolytope, EnumerationMode, HullSummary, SampleInstance, Side,
};
use spindle_core::body::{Body, BodyKind};
use spindle_core::geom::{unit_ball_constants, Point};
use spindle_core::{analytic, montecarlo, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpindleStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Degenerate = 3,
    Infeasible = 4,
    Hypothesis = 5,
    Gate = 6,
    Io = 7,
    Panic = 8,
    BufferTooSmall = 9,
    Config = 10,
    Validation = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpindleBodyKind {
    Ball = 0,
    Ellipsoid = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpindleMode {
    Oracle = 0,
    HullFiltered = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpindleSide {
    Minus = 0,
    Plus = 1,
}

enum AnySample {
    D2(SampleInstance<2>),
    D3(SampleInstance<3>),
}

/// A point sample together with its body and radius.
pub struct SpindleSample {
    inner: AnySample,
}

enum AnyHull {
    D2(HullSummary<2>, BallPolytope<2>),
    D3(HullSummary<3>, BallPolytope<3>),
}

/// Facets of a sample's ball-polytope, with a membership structure.
pub struct SpindleHull {
    inner: AnyHull,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> SpindleStatus {
    match e {
        Error::Domain(_) => SpindleStatus::Domain,
        Error::Degenerate(_) => SpindleStatus::Degenerate,
        Error::Infeasible(_) => SpindleStatus::Infeasible,
        Error::Hypothesis(_) => SpindleStatus::Hypothesis,
        Error::Gate(_) => SpindleStatus::Gate,
        Error::Config { .. } => SpindleStatus::Config,
        Error::Io { .. } => SpindleStatus::Io,
        Error::Validation(_) => SpindleStatus::Validation,
    }
}

type FfiResult = std::result::Result<(), SpindleStatus>;

fn core<T>(r: spindle_core::Result<T>) -> std::result::Result<T, SpindleStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn guard(f: impl FnOnce() -> FfiResult) -> SpindleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpindleStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            set_error(format!("internal panic: {msg}"));
            SpindleStatus::Panic
        }
    }
}

fn need<'a, T>(p: *const T, what: &str) -> std::result::Result<&'a T, SpindleStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(SpindleStatus::NullPointer)
    } else {
        // SAFETY: the caller passes a valid pointer or null.
        Ok(unsafe { &*p })
    }
}

fn need_mut<'a, T>(p: *mut T, what: &str) -> std::result::Result<&'a mut T, SpindleStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(SpindleStatus::NullPointer)
    } else {
        // SAFETY: the caller passes a valid, exclusive pointer or null.
        Ok(unsafe { &mut *p })
    }
}

fn slice<'a, T>(p: *const T, len: usize, what: &str) -> std::result::Result<&'a [T], SpindleStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(SpindleStatus::NullPointer);
    }
    // SAFETY: the caller guarantees `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn domain(msg: impl Into<String>) -> SpindleStatus {
    set_error(msg);
    SpindleStatus::Domain
}

fn make_body<const D: usize>(kind: SpindleBodyKind, axes: &[f64]) -> std::result::Result<Body<D>, SpindleStatus> {
    let mut a = [0.0; D];
    a.copy_from_slice(axes);
    let kind = match kind {
        SpindleBodyKind::Ball => BodyKind::Ball,
        SpindleBodyKind::Ellipsoid => BodyKind::Ellipsoid,
    };
    core(Body::new(kind, Point::origin(), a))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spindle_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn spindle_status_message(status: SpindleStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SpindleStatus::Ok => c"ok",
        SpindleStatus::NullPointer => c"null pointer argument",
        SpindleStatus::Domain => c"argument outside the domain",
        SpindleStatus::Degenerate => c"degenerate input",
        SpindleStatus::Infeasible => c"infeasible configuration",
        SpindleStatus::Hypothesis => c"hypothesis violated",
        SpindleStatus::Gate => c"experiment gate rejected the body",
        SpindleStatus::Io => c"I/O error",
        SpindleStatus::Panic => c"internal panic",
        SpindleStatus::BufferTooSmall => c"buffer too small",
        SpindleStatus::Config => c"configuration error",
        SpindleStatus::Validation => c"validation failed",
    };
    s.as_ptr()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`), and stores the full length plus one in `needed`.
///
/// # Safety
/// `buf` must have `cap` writable bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn spindle_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> SpindleStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    let bytes = msg.as_bytes();
    if !needed.is_null() {
        *needed = bytes.len() + 1;
    }
    if cap == 0 || buf.is_null() {
        return if bytes.is_empty() {
            SpindleStatus::Ok
        } else {
            SpindleStatus::BufferTooSmall
        };
    }
    let n = bytes.len().min(cap - 1);
    std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
    *buf.add(n) = 0;
    if n < bytes.len() {
        SpindleStatus::BufferTooSmall
    } else {
        SpindleStatus::Ok
    }
}

/// Volume `κ_d` of the unit ball and measure `ω_d` of the unit sphere.
///
/// # Safety
/// `kappa` and `omega` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_unit_ball_constants(d: usize, kappa: *mut f64, omega: *mut f64) -> SpindleStatus {
    guard(|| {
        let k = need_mut(kappa, "kappa")?;
        let o = need_mut(omega, "omega")?;
        let c = core(unit_ball_constants(d))?;
        *k = c.kappa;
        *o = c.omega;
        Ok(())
    })
}

/// `eta π^{d-1} κ_d / κ_{d-1}`, the facet-count limit for the ball.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_facet_count_limit(d: usize, eta: f64, out: *mut f64) -> SpindleStatus {
    guard(|| {
        let out = need_mut(out, "out")?;
        *out = core(analytic::facet_count_limit(d, eta))?;
        Ok(())
    })
}

/// Draws `n` uniform points from a centered ball or ellipsoid in `d ∈ {2, 3}`.
///
/// # Safety
/// `axes` must hold `d` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_sample_new(
    d: usize,
    kind: SpindleBodyKind,
    axes: *const f64,
    r: f64,
    n: usize,
    seed: u64,
    out: *mut *mut SpindleSample,
) -> SpindleStatus {
    guard(|| {
        let out = need_mut(out, "out")?;
        let axes = slice(axes, d, "axes")?;
        let inner = match d {
            2 => AnySample::D2(core(SampleInstance::draw_seeded(
                make_body::<2>(kind, axes)?,
                r,
                n,
                seed,
            ))?),
            3 => AnySample::D3(core(SampleInstance::draw_seeded(
                make_body::<3>(kind, axes)?,
                r,
                n,
                seed,
            ))?),
            _ => return Err(domain(format!("d = {d} outside 2..=3"))),
        };
        *out = Box::into_raw(Box::new(SpindleSample { inner }));
        Ok(())
    })
}

fn points_from<const D: usize>(coords: &[f64]) -> Vec<Point<D>> {
    coords
        .chunks_exact(D)
        .map(|c| {
            let mut p = [0.0; D];
            p.copy_from_slice(c);
            Point::new(p)
        })
        .collect()
}

/// Wraps `n` caller points (row-major, `n * d` values) that lie in the body.
///
/// # Safety
/// `coords` must hold `n * d` values, `axes` `d` values; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_sample_from_points(
    d: usize,
    coords: *const f64,
    n: usize,
    kind: SpindleBodyKind,
    axes: *const f64,
    r: f64,
    out: *mut *mut SpindleSample,
) -> SpindleStatus {
    guard(|| {
        let out = need_mut(out, "out")?;
        let axes = slice(axes, d, "axes")?;
        let len = n.checked_mul(d).ok_or_else(|| domain("n * d overflows"))?;
        let coords = slice(coords, len, "coords")?;
        let inner = match d {
            2 => AnySample::D2(core(SampleInstance::new(
                points_from::<2>(coords),
                make_body::<2>(kind, axes)?,
                r,
                0,
            ))?),
            3 => AnySample::D3(core(SampleInstance::new(
                points_from::<3>(coords),
                make_body::<3>(kind, axes)?,
                r,
                0,
            ))?),
            _ => return Err(domain(format!("d = {d} outside 2..=3"))),
        };
        *out = Box::into_raw(Box::new(SpindleSample { inner }));
        Ok(())
    })
}

/// Releases a sample. Null is ignored.
///
/// # Safety
/// `sample` must come from a `spindle_sample_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn spindle_sample_free(sample: *mut SpindleSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of points in the sample.
///
/// # Safety
/// `sample` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_sample_len(sample: *const SpindleSample, out: *mut usize) -> SpindleStatus {
    guard(|| {
        let s = need(sample, "sample")?;
        *need_mut(out, "out")? = match &s.inner {
            AnySample::D2(x) => x.len(),
            AnySample::D3(x) => x.len(),
        };
        Ok(())
    })
}

/// Copies the coordinates (row-major) into `buf` with room for `cap`
/// values; `needed` receives `n * d`.
///
/// # Safety
/// `buf` must have `cap` writable values; `needed` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_sample_points(
    sample: *const SpindleSample,
    buf: *mut f64,
    cap: usize,
    needed: *mut usize,
) -> SpindleStatus {
    guard(|| {
        let s = need(sample, "sample")?;
        let coords: Vec<f64> = match &s.inner {
            AnySample::D2(x) => x.points.iter().flat_map(|p| p.0).collect(),
            AnySample::D3(x) => x.points.iter().flat_map(|p| p.0).collect(),
        };
        *need_mut(needed, "needed")? = coords.len();
        if cap < coords.len() {
            set_error(format!("need {} values, buffer holds {cap}", coords.len()));
            return Err(SpindleStatus::BufferTooSmall);
        }
        if !coords.is_empty() {
            std::ptr::copy_nonoverlapping(coords.as_ptr(), need_mut(buf, "buf")?, coords.len());
        }
        Ok(())
    })
}

/// Enumerates the facets of the sample's ball-polytope.
///
/// # Safety
/// `sample` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_enumerate_facets(
    sample: *const SpindleSample,
    mode: SpindleMode,
    out: *mut *mut SpindleHull,
) -> SpindleStatus {
    guard(|| {
        let s = need(sample, "sample")?;
        let out = need_mut(out, "out")?;
        let mode = match mode {
            SpindleMode::Oracle => EnumerationMode::Oracle,
            SpindleMode::HullFiltered => EnumerationMode::HullFiltered,
        };
        let inner = match &s.inner {
            AnySample::D2(x) => AnyHull::D2(core(enumerate_facets(x, mode))?, core(BallPolytope::from_sample(x))?),
            AnySample::D3(x) => AnyHull::D3(core(enumerate_facets(x, mode))?, core(BallPolytope::from_sample(x))?),
        };
        *out = Box::into_raw(Box::new(SpindleHull { inner }));
        Ok(())
    })
}

/// Releases a hull. Null is ignored.
///
/// # Safety
/// `hull` must come from [`spindle_enumerate_facets`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn spindle_hull_free(hull: *mut SpindleHull) {
    if !hull.is_null() {
        drop(Box::from_raw(hull));
    }
}

/// Number of facets.
///
/// # Safety
/// `hull` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_hull_facet_count(hull: *const SpindleHull, out: *mut usize) -> SpindleStatus {
    guard(|| {
        let h = need(hull, "hull")?;
        *need_mut(out, "out")? = match &h.inner {
            AnyHull::D2(s, _) => s.facet_count,
            AnyHull::D3(s, _) => s.facet_count,
        };
        Ok(())
    })
}

fn side(s: Side) -> SpindleSide {
    match s {
        Side::Minus => SpindleSide::Minus,
        Side::Plus => SpindleSide::Plus,
    }
}

/// The sample indices (`d` of them) spanning facet `i`, its side, and the
/// center of its supporting sphere (`d` values).
///
/// # Safety
/// `indices` and `center` must have `cap` writable elements; `side_out`
/// valid for writes. `center` may be null.
#[no_mangle]
pub unsafe extern "C" fn spindle_hull_facet(
    hull: *const SpindleHull,
    i: usize,
    indices: *mut usize,
    center: *mut f64,
    cap: usize,
    side_out: *mut SpindleSide,
) -> SpindleStatus {
    guard(|| {
        let h = need(hull, "hull")?;
        let (idx, c, sd): (Vec<usize>, Vec<f64>, SpindleSide) = match &h.inner {
            AnyHull::D2(s, _) => {
                let f = s
                    .facets
                    .get(i)
                    .ok_or_else(|| domain(format!("facet {i} of {}", s.facet_count)))?;
                (f.indices.to_vec(), f.support_center.0.to_vec(), side(f.side))
            }
            AnyHull::D3(s, _) => {
                let f = s
                    .facets
                    .get(i)
                    .ok_or_else(|| domain(format!("facet {i} of {}", s.facet_count)))?;
                (f.indices.to_vec(), f.support_center.0.to_vec(), side(f.side))
            }
        };
        if cap < idx.len() {
            set_error(format!("need {} slots, buffer holds {cap}", idx.len()));
            return Err(SpindleStatus::BufferTooSmall);
        }
        std::ptr::copy_nonoverlapping(idx.as_ptr(), need_mut(indices, "indices")?, idx.len());
        if !center.is_null() {
            std::ptr::copy_nonoverlapping(c.as_ptr(), center, c.len());
        }
        *need_mut(side_out, "side")? = sd;
        Ok(())
    })
}

/// Whether `z` (`d` values) lies in the ball-polytope.
///
/// # Safety
/// `z` must hold `d` values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_hull_contains(
    hull: *const SpindleHull,
    z: *const f64,
    out: *mut bool,
) -> SpindleStatus {
    guard(|| {
        let h = need(hull, "hull")?;
        let out = need_mut(out, "out")?;
        *out = match &h.inner {
            AnyHull::D2(_, bp) => bp.contains(&core(Point::from_slice(slice(z, 2, "z")?))?),
            AnyHull::D3(_, bp) => bp.contains(&core(Point::from_slice(slice(z, 3, "z")?))?),
        };
        Ok(())
    })
}

/// Indices of the sample points that are vertices of the ball-polytope,
/// ascending. `count` receives the number of vertices.
///
/// # Safety
/// `buf` must have `cap` writable elements; `count` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_count_vertices(
    sample: *const SpindleSample,
    buf: *mut usize,
    cap: usize,
    count: *mut usize,
) -> SpindleStatus {
    guard(|| {
        let s = need(sample, "sample")?;
        let v: Vec<usize> = match &s.inner {
            AnySample::D2(x) => core(count_vertices(x))?.into_iter().collect(),
            AnySample::D3(x) => core(count_vertices(x))?.into_iter().collect(),
        };
        *need_mut(count, "count")? = v.len();
        if buf.is_null() && cap == 0 {
            return Ok(());
        }
        if cap < v.len() {
            set_error(format!("need {} slots, buffer holds {cap}", v.len()));
            return Err(SpindleStatus::BufferTooSmall);
        }
        std::ptr::copy_nonoverlapping(v.as_ptr(), need_mut(buf, "buf")?, v.len());
        Ok(())
    })
}

/// Probability that `d` uniform points of the body admit a radius-`r`
/// sphere through them, from `trials ≥ 100` seeded draws.
///
/// # Safety
/// `axes` must hold `d` values; `eta` and `stderr` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spindle_estimate_eta(
    d: usize,
    kind: SpindleBodyKind,
    axes: *const f64,
    r: f64,
    trials: u64,
    seed: u64,
    eta: *mut f64,
    stderr: *mut f64,
) -> SpindleStatus {
    guard(|| {
        let axes = slice(axes, d, "axes")?;
        let est = match d {
            2 => core(montecarlo::estimate_eta(&make_body::<2>(kind, axes)?, r, trials, seed))?,
            3 => core(montecarlo::estimate_eta(&make_body::<3>(kind, axes)?, r, trials, seed))?,
            _ => return Err(domain(format!("d = {d} outside 2..=3"))),
        };
        *need_mut(eta, "eta")? = est.value;
        *need_mut(stderr, "stderr")? = est.stderr;
        Ok(())
    })
}
