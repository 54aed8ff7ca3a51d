//! C ABI over the sector-dirac toolkit.
//!
//! Objects are exposed as opaque handles created by `*_new` functions and
//! released by the matching `*_free`. Every fallible call returns an
//! [`SdStatus`]; the message of the most recent failure on the calling
//! thread is available through [`sd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{CStr, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::ptr;

use sector_dirac::angular::{SectorGeometry, lambda_kappa};
use sector_dirac::bessel::bessel_k;
use sector_dirac::extension::{charge_conj_admissible, scaled_gamma};
use sector_dirac::fiber::{ExtensionParameter, FiberClass, classify_self_adjoint};
use sector_dirac::geometry::{PolygonClass, PolygonDomain, classify_polygon};
use sector_dirac::grid::RadialGrid;
use sector_dirac::linalg::{ConvergenceTag, EigenOptions};
use sector_dirac::spectra::{SectorAssembly, SpectralReport, assemble_sector, sector_spectrum, weyl_probe};
use sector_dirac::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    InvalidArgument = 1,
    OutOfDomain = 2,
    Overflow = 3,
    Precondition = 4,
    Configuration = 5,
    InvalidGeometry = 6,
    NonConvergence = 7,
    Parse = 8,
    Io = 9,
    NullPointer = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdFiberClass {
    SelfAdjoint = 0,
    DeficiencyOne = 1,
}

/// Opaque sector of half-aperture ω.
pub struct SdGeometry(SectorGeometry);

/// Opaque assembled sector operator.
pub struct SdAssembly(SectorAssembly);

/// Opaque spectral report.
pub struct SdSpectrum(SpectralReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SdStatus {
    match e {
        Error::InvalidArgument(_) => SdStatus::InvalidArgument,
        Error::OutOfDomain(_) => SdStatus::OutOfDomain,
        Error::Overflow { .. } => SdStatus::Overflow,
        Error::Precondition(_) => SdStatus::Precondition,
        Error::Configuration(_) => SdStatus::Configuration,
        Error::InvalidGeometry(_) => SdStatus::InvalidGeometry,
        Error::NonConvergence(_) => SdStatus::NonConvergence,
        Error::Parse(_) => SdStatus::Parse,
        Error::Io(_) => SdStatus::Io,
    }
}

fn guard<F: FnOnce() -> Result<(), SdStatus>>(f: F) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SdStatus::Panic
        }
    }
}

fn lift<T>(r: sector_dirac::Result<T>) -> Result<T, SdStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> SdStatus {
    set_error("null pointer argument".into());
    SdStatus::NullPointer
}

unsafe fn out<T>(p: *mut T, v: T) -> Result<(), SdStatus> {
    if p.is_null() {
        return Err(null());
    }
    unsafe { p.write(v) };
    Ok(())
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, SdStatus> {
    unsafe { p.as_ref() }.ok_or_else(null)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// # Safety
/// `out_geom` must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_geometry_new(omega: f64, out_geom: *mut *mut SdGeometry) -> SdStatus {
    guard(|| {
        let g = lift(SectorGeometry::new(omega))?;
        unsafe { out(out_geom, Box::into_raw(Box::new(SdGeometry(g)))) }
    })
}

/// # Safety
/// `geom` must come from [`sd_geometry_new`] and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_geometry_free(geom: *mut SdGeometry) {
    if !geom.is_null() {
        drop(unsafe { Box::from_raw(geom) });
    }
}

/// # Safety
/// Pointers must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_geometry_lambda(geom: *const SdGeometry, kappa: i64, out_lambda: *mut f64) -> SdStatus {
    guard(|| {
        let g = unsafe { get(geom) }?;
        unsafe { out(out_lambda, lambda_kappa(kappa, &g.0)) }
    })
}

/// # Safety
/// Pointers must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_classify_fiber(
    geom: *const SdGeometry,
    kappa: i64,
    out_class: *mut SdFiberClass,
) -> SdStatus {
    guard(|| {
        let g = unsafe { get(geom) }?;
        let c = match lift(classify_self_adjoint(&g.0, kappa))? {
            FiberClass::SelfAdjoint => SdFiberClass::SelfAdjoint,
            FiberClass::DeficiencyOne => SdFiberClass::DeficiencyOne,
        };
        unsafe { out(out_class, c) }
    })
}

/// # Safety
/// `out_value` must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_bessel_k(nu: f64, r: f64, out_value: *mut f64) -> SdStatus {
    guard(|| {
        let v = lift(bessel_k(nu, r))?;
        unsafe { out(out_value, v) }
    })
}

/// Weyl quotient of the probe family selected by the sign of `mass`.
///
/// # Safety
/// `out_quotient` must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_weyl_quotient(n: u32, mass: f64, lambda: f64, out_quotient: *mut f64) -> SdStatus {
    guard(|| {
        let p = lift(weyl_probe(n, mass, lambda))?;
        unsafe { out(out_quotient, p.quotient) }
    })
}

/// Phase of the scaled extension parameter.
///
/// # Safety
/// Pointers must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_scaled_gamma(
    geom: *const SdGeometry,
    phase: f64,
    alpha: f64,
    out_phase: *mut f64,
) -> SdStatus {
    guard(|| {
        let g = unsafe { get(geom) }?;
        let gamma = lift(ExtensionParameter::from_phase(phase))?;
        let s = lift(scaled_gamma(&gamma, alpha, &g.0))?;
        unsafe { out(out_phase, s.phase()) }
    })
}

/// Writes 1 when γ = e^{i·phase} is charge-conjugation admissible, else 0.
///
/// # Safety
/// `out_flag` must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_charge_conj_admissible(phase: f64, out_flag: *mut i32) -> SdStatus {
    guard(|| {
        let gamma = lift(ExtensionParameter::from_phase(phase))?;
        unsafe { out(out_flag, i32::from(charge_conj_admissible(&gamma))) }
    })
}

/// Classifies a polygon given as a JSON array of [x, y] pairs. `out_count`
/// receives 0 for a self-adjoint operator, otherwise the number of
/// extension parameters (one per reflex corner, a heuristic count).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_count` must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_polygon_classify(json: *const c_char, out_count: *mut usize) -> SdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null());
        }
        let text = unsafe { CStr::from_ptr(json) }.to_str().map_err(|e| {
            set_error(format!("polygon text is not UTF-8: {e}"));
            SdStatus::Parse
        })?;
        let poly = lift(PolygonDomain::from_json(text))?;
        let k = match classify_polygon(&poly) {
            PolygonClass::SelfAdjoint => 0,
            PolygonClass::ExtensionsRequired(k) => k,
        };
        unsafe { out(out_count, k) }
    })
}

/// Assembles the sector operator on a uniform radial grid. `has_gamma`
/// selects whether `gamma_phase` is used; it is required iff ω > π/2.
///
/// # Safety
/// Pointers must be valid.
#[unsafe(no_mangle)]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sd_assembly_new(
    geom: *const SdGeometry,
    mass: f64,
    has_gamma: i32,
    gamma_phase: f64,
    n_modes: usize,
    r_min: f64,
    r_max: f64,
    n_r: usize,
    out_asm: *mut *mut SdAssembly,
) -> SdStatus {
    guard(|| {
        let g = unsafe { get(geom) }?;
        let gamma = if has_gamma != 0 { Some(lift(ExtensionParameter::from_phase(gamma_phase))?) } else { None };
        let grid = lift(RadialGrid::uniform(r_min, r_max, n_r))?;
        let asm = lift(assemble_sector(&g.0, mass, gamma, n_modes, &grid))?;
        unsafe { out(out_asm, Box::into_raw(Box::new(SdAssembly(asm)))) }
    })
}

/// # Safety
/// `asm` must come from [`sd_assembly_new`] and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_assembly_free(asm: *mut SdAssembly) {
    if !asm.is_null() {
        drop(unsafe { Box::from_raw(asm) });
    }
}

/// # Safety
/// Pointers must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_assembly_dim(asm: *const SdAssembly, out_dim: *mut usize) -> SdStatus {
    guard(|| {
        let a = unsafe { get(asm) }?;
        unsafe { out(out_dim, a.0.matrix.dim()) }
    })
}

/// The `k` eigenvalues nearest 0. A report whose residuals miss the bound
/// is still returned, together with [`SdStatus::NonConvergence`].
///
/// # Safety
/// Pointers must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_spectrum_solve(asm: *const SdAssembly, k: usize, out_spec: *mut *mut SdSpectrum) -> SdStatus {
    guard(|| {
        let a = unsafe { get(asm) }?;
        let (rep, _) = lift(sector_spectrum(&a.0, k, &EigenOptions::default()))?;
        let refine = rep.convergence_tag == ConvergenceTag::Refine;
        unsafe { out(out_spec, Box::into_raw(Box::new(SdSpectrum(rep)))) }?;
        if refine {
            set_error("eigenpairs did not reach the residual bound".into());
            return Err(SdStatus::NonConvergence);
        }
        Ok(())
    })
}

/// # Safety
/// `spec` must come from [`sd_spectrum_solve`] and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_spectrum_free(spec: *mut SdSpectrum) {
    if !spec.is_null() {
        drop(unsafe { Box::from_raw(spec) });
    }
}

/// # Safety
/// Pointers must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_spectrum_len(spec: *const SdSpectrum, out_len: *mut usize) -> SdStatus {
    guard(|| {
        let s = unsafe { get(spec) }?;
        unsafe { out(out_len, s.0.eigenvalues.len()) }
    })
}

/// Copies up to `len` ascending eigenvalues into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_spectrum_values(spec: *const SdSpectrum, buf: *mut f64, len: usize) -> SdStatus {
    guard(|| {
        let s = unsafe { get(spec) }?;
        if buf.is_null() {
            return Err(null());
        }
        let n = len.min(s.0.eigenvalues.len());
        unsafe { ptr::copy_nonoverlapping(s.0.eigenvalues.as_ptr(), buf, n) };
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn sd_spectrum_min_abs(spec: *const SdSpectrum, out_value: *mut f64) -> SdStatus {
    guard(|| {
        let s = unsafe { get(spec) }?;
        unsafe { out(out_value, s.0.min_abs_eig) }
    })
}
