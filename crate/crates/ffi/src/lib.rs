//! C ABI for the INS/DVL filter and the DVL estimators.
//!
//! Handles are opaque and owned by the caller, who releases them with
//! [`insdvl_filter_free`]. Every fallible call returns an [`InsdvlStatus`];
//! the message of the last failure on the calling thread is available from
//! [`insdvl_last_error`].

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use insdvl::dvl::{extract_acceleration, ls_velocity, DvlBeamSet, DvlGeometry, VelocityWindow};
use insdvl::ekf::{FilterConfig, InsDvlFilter, UpdateMode};
use insdvl::frames::{orthonormality_error, GeoContext, Mat3, Vec3};
use insdvl::ins::{ImuSample, NavState};
use insdvl::Error;
use nalgebra::Vector4;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsdvlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SingularMatrix = 3,
    NonFinite = 4,
    LargeAngle = 5,
    Internal = 6,
}

/// Filter measurement set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsdvlMode {
    /// DVL velocity updates only.
    Baseline = 0,
    /// DVL velocity plus DVL-derived acceleration updates.
    Acceleration = 1,
}

/// Opaque filter handle.
pub struct InsdvlFilter {
    inner: InsDvlFilter,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> InsdvlStatus {
    match e {
        Error::SingularMatrix(_) | Error::IllConditioned { .. } | Error::DegenerateGeometry(_) => {
            InsdvlStatus::SingularMatrix
        }
        Error::NonFinite(_) => InsdvlStatus::NonFinite,
        Error::LargeAngle(_) => InsdvlStatus::LargeAngle,
        _ => InsdvlStatus::InvalidArgument,
    }
}

/// Run `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (InsdvlStatus, String)>) -> InsdvlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InsdvlStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            InsdvlStatus::Internal
        }
    }
}

fn lib<T>(r: insdvl::Result<T>) -> Result<T, (InsdvlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (InsdvlStatus, String) {
    (InsdvlStatus::NullPointer, format!("{name} is null"))
}

unsafe fn read<const N: usize>(p: *const f64, name: &str) -> Result<[f64; N], (InsdvlStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    // SAFETY: caller guarantees `p` points to N readable doubles
    let s = unsafe { std::slice::from_raw_parts(p, N) };
    let mut out = [0.0; N];
    out.copy_from_slice(s);
    Ok(out)
}

unsafe fn write(p: *mut f64, vals: &[f64], name: &str) -> Result<(), (InsdvlStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    // SAFETY: caller guarantees `p` points to vals.len() writable doubles
    unsafe { std::slice::from_raw_parts_mut(p, vals.len()) }.copy_from_slice(vals);
    Ok(())
}

unsafe fn filter_ref<'a>(h: *const InsdvlFilter) -> Result<&'a InsdvlFilter, (InsdvlStatus, String)> {
    // SAFETY: non-null handles come from insdvl_filter_new
    unsafe { h.as_ref() }.ok_or_else(|| null("filter"))
}

unsafe fn filter_mut<'a>(h: *mut InsdvlFilter) -> Result<&'a mut InsdvlFilter, (InsdvlStatus, String)> {
    // SAFETY: non-null handles come from insdvl_filter_new
    unsafe { h.as_mut() }.ok_or_else(|| null("filter"))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn insdvl_status_message(status: InsdvlStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        InsdvlStatus::Ok => b"ok\0",
        InsdvlStatus::NullPointer => b"null pointer\0",
        InsdvlStatus::InvalidArgument => b"invalid argument\0",
        InsdvlStatus::SingularMatrix => b"singular or ill-conditioned matrix\0",
        InsdvlStatus::NonFinite => b"non-finite value\0",
        InsdvlStatus::LargeAngle => b"attitude correction too large\0",
        InsdvlStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn insdvl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: caller guarantees `len` writable bytes at `buf`
            let out = unsafe { std::slice::from_raw_parts_mut(buf.cast::<u8>(), len) };
            out[..n].copy_from_slice(&bytes[..n]);
            out[n] = 0;
        }
        bytes.len()
    })
}

/// Create a filter with default tuning.
///
/// `latitude` is in radians, `velocity` the NED velocity (3 doubles), `attitude` the body-to-NED
/// rotation in row-major order (9 doubles).
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` receives the handle.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_new(
    mode: InsdvlMode,
    time: f64,
    latitude: f64,
    velocity: *const f64,
    attitude: *const f64,
    out: *mut *mut InsdvlFilter,
) -> InsdvlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = unsafe { read::<3>(velocity, "velocity") }?;
        let r = unsafe { read::<9>(attitude, "attitude") }?;
        let attitude = Mat3::from_row_slice(&r);
        if !time.is_finite() || orthonormality_error(&attitude) > 1e-6 {
            return Err((InsdvlStatus::InvalidArgument, "attitude is not a rotation".into()));
        }
        let geo = lib(GeoContext::new(latitude, 0.0, insdvl::frames::STANDARD_GRAVITY))?;
        let cfg = FilterConfig {
            mode: match mode {
                InsdvlMode::Baseline => UpdateMode::VelocityOnly,
                InsdvlMode::Acceleration => UpdateMode::VelocityAcceleration,
            },
            ..FilterConfig::default()
        };
        let nav = NavState::new(time, Vec3::from(v), attitude, geo);
        let inner = lib(InsDvlFilter::new(nav, cfg))?;
        // SAFETY: `out` checked non-null
        unsafe { *out = Box::into_raw(Box::new(InsdvlFilter { inner })) };
        Ok(())
    })
}

/// Release a filter. Null is ignored.
///
/// # Safety
/// `h` must be null or a handle from [`insdvl_filter_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_free(h: *mut InsdvlFilter) {
    if !h.is_null() {
        // SAFETY: handle was created by Box::into_raw
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Mechanize one IMU interval of length `dt` seconds.
///
/// # Safety
/// `h` must be a live handle; `specific_force` and `angular_rate` point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_propagate(
    h: *mut InsdvlFilter,
    specific_force: *const f64,
    angular_rate: *const f64,
    dt: f64,
) -> InsdvlStatus {
    guard(|| {
        let f = unsafe { filter_mut(h) }?;
        let sf = unsafe { read::<3>(specific_force, "specific_force") }?;
        let w = unsafe { read::<3>(angular_rate, "angular_rate") }?;
        let sample = ImuSample {
            time: f.inner.nav().time,
            specific_force: Vec3::from(sf),
            angular_rate: Vec3::from(w),
        };
        lib(f.inner.propagate(&sample, dt))
    })
}

/// Process a DVL-frame velocity at the current filter time.
///
/// # Safety
/// `h` must be a live handle; `velocity` points to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_dvl_update(h: *mut InsdvlFilter, velocity: *const f64) -> InsdvlStatus {
    guard(|| {
        let f = unsafe { filter_mut(h) }?;
        let v = unsafe { read::<3>(velocity, "velocity") }?;
        lib(f.inner.dvl_update(&Vec3::from(v)))
    })
}

/// Current filter time (s).
///
/// # Safety
/// `h` must be a live handle; `out` points to 1 double.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_time(h: *const InsdvlFilter, out: *mut f64) -> InsdvlStatus {
    guard(|| {
        let f = unsafe { filter_ref(h) }?;
        unsafe { write(out, &[f.inner.nav().time], "out") }
    })
}

/// NED velocity estimate (3 doubles).
///
/// # Safety
/// `h` must be a live handle; `out` points to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_velocity(h: *const InsdvlFilter, out: *mut f64) -> InsdvlStatus {
    guard(|| {
        let f = unsafe { filter_ref(h) }?;
        unsafe { write(out, f.inner.nav().velocity.as_slice(), "out") }
    })
}

/// Body-to-NED rotation estimate, row-major (9 doubles).
///
/// # Safety
/// `h` must be a live handle; `out` points to 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_attitude(h: *const InsdvlFilter, out: *mut f64) -> InsdvlStatus {
    guard(|| {
        let f = unsafe { filter_ref(h) }?;
        let r = f.inner.nav().attitude.transpose();
        unsafe { write(out, r.as_slice(), "out") }
    })
}

/// Accelerometer then gyro bias estimates (6 doubles).
///
/// # Safety
/// `h` must be a live handle; `out` points to 6 doubles.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_bias(h: *const InsdvlFilter, out: *mut f64) -> InsdvlStatus {
    guard(|| {
        let f = unsafe { filter_ref(h) }?;
        let b = f.inner.bias();
        let vals: Vec<f64> = b.accel.iter().chain(b.gyro.iter()).copied().collect();
        unsafe { write(out, &vals, "out") }
    })
}

/// Error-state standard deviations in the order δv, φ, b_a, b_g (12 doubles).
///
/// # Safety
/// `h` must be a live handle; `out` points to 12 doubles.
#[no_mangle]
pub unsafe extern "C" fn insdvl_filter_sigmas(h: *const InsdvlFilter, out: *mut f64) -> InsdvlStatus {
    guard(|| {
        let f = unsafe { filter_ref(h) }?;
        unsafe { write(out, &f.inner.covariance().sigmas(), "out") }
    })
}

/// Least-squares DVL-frame velocity from 4 beam velocities for a Janus
/// array at `pitch` radians.
///
/// # Safety
/// `beams` points to 4 doubles, `out` to 3.
#[no_mangle]
pub unsafe extern "C" fn insdvl_ls_velocity(pitch: f64, beams: *const f64, out: *mut f64) -> InsdvlStatus {
    guard(|| {
        let b = unsafe { read::<4>(beams, "beams") }?;
        let geom = lib(DvlGeometry::new(pitch))?;
        let set = DvlBeamSet {
            time: 0.0,
            beams: Vector4::from(b),
        };
        let v = lib(ls_velocity(&set, &geom))?;
        unsafe { write(out, v.as_slice(), "out") }
    })
}

/// Constant-acceleration estimate from `n` velocity samples: `times` holds
/// `n` doubles, `velocities` holds `3n` doubles (x, y, z per sample).
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` points to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn insdvl_extract_acceleration(
    times: *const f64,
    velocities: *const f64,
    n: usize,
    out: *mut f64,
) -> InsdvlStatus {
    guard(|| {
        if times.is_null() || velocities.is_null() {
            return Err(null("times or velocities"));
        }
        // SAFETY: caller guarantees n and 3n readable doubles
        let t = unsafe { std::slice::from_raw_parts(times, n) };
        let v = unsafe { std::slice::from_raw_parts(velocities, 3 * n) };
        let samples = t
            .iter()
            .zip(v.chunks_exact(3))
            .map(|(t, v)| (*t, Vec3::new(v[0], v[1], v[2])))
            .collect();
        let w = lib(VelocityWindow::new(samples))?;
        let a = lib(extract_acceleration(&w))?;
        unsafe { write(out, a.as_slice(), "out") }
    })
}
