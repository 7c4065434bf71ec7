//! C ABI for the SNR estimators: an opaque estimator handle plus flat
//! array in/out functions with status codes. The generated header lands in
//! `include/mlsnr.h`.
//!
//! Channel matrices are passed as split row-major `re`/`im` arrays of the
//! raw channel (the `1/sqrt(M_T)` transmit normalization is applied
//! internally), `rho` is the noise standard deviation.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use mlsnr_core::channel::ChannelRealization;
use mlsnr_core::errorsets::ErrorSetFamily;
use mlsnr_core::estimators::{evaluate, ph_error_bound, Method};
use mlsnr_core::modulation::{Constellation, ModulationKind};
use mlsnr_core::numerics::ComplexMat;
use mlsnr_core::{decoders, Error};
use num_complex::Complex64;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlsnrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RankDeficient = 3,
    SearchSpaceTooLarge = 4,
    NumericalFailure = 5,
}

/// Constellation selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlsnrModulation {
    Qpsk = 0,
    Qam16 = 1,
    Qam64 = 2,
}

/// Estimation method selector. `Capacity` is joint-only: it writes the
/// vertical value and leaves the per-stream array untouched.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlsnrMethod {
    Capacity = 0,
    Union = 1,
    FullSum = 2,
    FullSumBounded = 3,
    MaxLog = 4,
    Zf = 5,
}

impl MlsnrMethod {
    fn to_core(self) -> Method {
        match self {
            MlsnrMethod::Capacity => Method::Capacity,
            MlsnrMethod::Union => Method::UnionBound,
            MlsnrMethod::FullSum => Method::FullSum,
            MlsnrMethod::FullSumBounded => Method::FullSumBounded,
            MlsnrMethod::MaxLog => Method::MaxLog,
            MlsnrMethod::Zf => Method::Zf,
        }
    }
}

impl MlsnrModulation {
    fn to_core(self) -> ModulationKind {
        match self {
            MlsnrModulation::Qpsk => ModulationKind::Qpsk,
            MlsnrModulation::Qam16 => ModulationKind::Qam16,
            MlsnrModulation::Qam64 => ModulationKind::Qam64,
        }
    }
}

fn status_of(e: &Error) -> MlsnrStatus {
    match e {
        Error::RankDeficient { .. } => MlsnrStatus::RankDeficient,
        Error::SearchSpaceTooLarge { .. } => MlsnrStatus::SearchSpaceTooLarge,
        Error::NonConvergent { .. } => MlsnrStatus::NumericalFailure,
        _ => MlsnrStatus::InvalidArgument,
    }
}

/// Opaque estimator: the estimation constellation and its prebuilt
/// error-vector sets for a fixed stream count.
pub struct MlsnrEstimator {
    est_c: Constellation,
    family: Arc<ErrorSetFamily>,
    m_t: usize,
}

fn guarded<F: FnOnce() -> MlsnrStatus>(f: F) -> MlsnrStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(MlsnrStatus::NumericalFailure)
}

/// Creates an estimator for `modulation` with `m_t` streams. When
/// `qpsk_sets` is true the estimator uses the reduced QPSK-built sets (and
/// the QPSK exponent map) regardless of the modulation. On success writes
/// the handle into `*out`; free it with `mlsnr_estimator_free`.
///
/// # Safety
/// `out` must be a valid pointer to writable estimator-handle storage.
#[no_mangle]
pub unsafe extern "C" fn mlsnr_estimator_new(
    modulation: MlsnrModulation,
    m_t: usize,
    qpsk_sets: bool,
    out: *mut *mut MlsnrEstimator,
) -> MlsnrStatus {
    if out.is_null() {
        return MlsnrStatus::NullPointer;
    }
    guarded(|| {
        if m_t < 1 {
            return MlsnrStatus::InvalidArgument;
        }
        let kind = if qpsk_sets { ModulationKind::Qpsk } else { modulation.to_core() };
        match ErrorSetFamily::cached(kind, m_t) {
            Ok(family) => {
                let est = Box::new(MlsnrEstimator {
                    est_c: Constellation::new(kind),
                    family,
                    m_t,
                });
                unsafe { *out = Box::into_raw(est) };
                MlsnrStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Releases an estimator handle. A null pointer is a no-op.
///
/// # Safety
/// `est` must come from `mlsnr_estimator_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mlsnr_estimator_free(est: *mut MlsnrEstimator) {
    if !est.is_null() {
        drop(unsafe { Box::from_raw(est) });
    }
}

/// Builds the channel from split re/im arrays (row-major, `m_r * m_t`
/// entries each).
unsafe fn channel_from_raw(
    h_re: *const f64,
    h_im: *const f64,
    m_r: usize,
    m_t: usize,
    rho: f64,
) -> Result<ChannelRealization, MlsnrStatus> {
    if m_r < 1 || m_t < 1 || m_r < m_t {
        return Err(MlsnrStatus::InvalidArgument);
    }
    let n = m_r * m_t;
    let re = unsafe { std::slice::from_raw_parts(h_re, n) };
    let im = unsafe { std::slice::from_raw_parts(h_im, n) };
    let data: Vec<Complex64> =
        re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect();
    if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(MlsnrStatus::InvalidArgument);
    }
    let h = ComplexMat::new(m_r, m_t, data);
    ChannelRealization::new(h, rho).map_err(|e| status_of(&e))
}

/// Evaluates one estimate. Per-stream methods write `m_t` dB values into
/// `per_stream_db` (ignored and may be null for `Capacity`); every method
/// writes the vertical dB value into `vertical_db`.
///
/// # Safety
/// `est`, `h_re`, `h_im` (each `m_r * m_t` doubles), `vertical_db`, and,
/// for per-stream methods, `per_stream_db` (`m_t` doubles) must be valid
/// for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn mlsnr_estimate(
    est: *const MlsnrEstimator,
    h_re: *const f64,
    h_im: *const f64,
    m_r: usize,
    m_t: usize,
    rho: f64,
    method: MlsnrMethod,
    per_stream_db: *mut f64,
    vertical_db: *mut f64,
) -> MlsnrStatus {
    if est.is_null() || h_re.is_null() || h_im.is_null() || vertical_db.is_null() {
        return MlsnrStatus::NullPointer;
    }
    let method = method.to_core();
    if method.is_per_stream() && per_stream_db.is_null() {
        return MlsnrStatus::NullPointer;
    }
    guarded(|| {
        let est = unsafe { &*est };
        if m_t != est.m_t {
            return MlsnrStatus::InvalidArgument;
        }
        let ch = match unsafe { channel_from_raw(h_re, h_im, m_r, m_t, rho) } {
            Ok(ch) => ch,
            Err(s) => return s,
        };
        match evaluate(method, &ch, &est.est_c, Some(&est.family)) {
            Ok(snr) => {
                if let Some(per) = &snr.per_stream_db {
                    let out = unsafe { std::slice::from_raw_parts_mut(per_stream_db, m_t) };
                    out.copy_from_slice(per);
                }
                unsafe { *vertical_db = snr.vertical_db };
                MlsnrStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Closed-form ZF post-processing SNR per stream (linear, not dB).
///
/// # Safety
/// `h_re`/`h_im` must hold `m_r * m_t` doubles and `out_linear` `m_t`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mlsnr_zf_ppsnr(
    h_re: *const f64,
    h_im: *const f64,
    m_r: usize,
    m_t: usize,
    rho: f64,
    out_linear: *mut f64,
) -> MlsnrStatus {
    if h_re.is_null() || h_im.is_null() || out_linear.is_null() {
        return MlsnrStatus::NullPointer;
    }
    guarded(|| {
        let ch = match unsafe { channel_from_raw(h_re, h_im, m_r, m_t, rho) } {
            Ok(ch) => ch,
            Err(s) => return s,
        };
        match decoders::zf_ppsnr(&ch) {
            Ok(snr) => {
                let out = unsafe { std::slice::from_raw_parts_mut(out_linear, m_t) };
                out.copy_from_slice(&snr);
                MlsnrStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Minimum-distance error bound: `Q(sqrt(d2_min/rho^2))` with the exact
/// minimum distance, plus the singular-value sandwich on `d2_min`.
///
/// # Safety
/// Pointer arguments as in `mlsnr_estimate`; the three outputs must be
/// valid writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mlsnr_ph_bound(
    est: *const MlsnrEstimator,
    h_re: *const f64,
    h_im: *const f64,
    m_r: usize,
    m_t: usize,
    rho: f64,
    perr_upper: *mut f64,
    lower_d2: *mut f64,
    upper_d2: *mut f64,
) -> MlsnrStatus {
    if est.is_null()
        || h_re.is_null()
        || h_im.is_null()
        || perr_upper.is_null()
        || lower_d2.is_null()
        || upper_d2.is_null()
    {
        return MlsnrStatus::NullPointer;
    }
    guarded(|| {
        let est = unsafe { &*est };
        if m_t != est.m_t {
            return MlsnrStatus::InvalidArgument;
        }
        let ch = match unsafe { channel_from_raw(h_re, h_im, m_r, m_t, rho) } {
            Ok(ch) => ch,
            Err(s) => return s,
        };
        match ph_error_bound(&ch, &est.est_c) {
            Ok(b) => {
                unsafe {
                    *perr_upper = b.perr_upper;
                    *lower_d2 = b.lower_d2;
                    *upper_d2 = b.upper_d2;
                }
                MlsnrStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn mlsnr_status_message(status: MlsnrStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        MlsnrStatus::Ok => b"ok\0",
        MlsnrStatus::NullPointer => b"null pointer argument\0",
        MlsnrStatus::InvalidArgument => b"invalid argument\0",
        MlsnrStatus::RankDeficient => b"channel matrix is rank deficient\0",
        MlsnrStatus::SearchSpaceTooLarge => b"search space exceeds the enumeration guard\0",
        MlsnrStatus::NumericalFailure => b"numerical failure\0",
    };
    s.as_ptr().cast()
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn mlsnr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
