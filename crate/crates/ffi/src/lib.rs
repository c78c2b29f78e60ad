//! C ABI over the `fraclap` spectral calculus.
//!
//! Domains and fields cross the boundary as opaque handles created by
//! `*_new` functions and released by the matching `*_free`. Every fallible
//! function returns a [`FraclapStatus`]; on failure the message is available
//! from [`fraclap_last_error`] on the same thread. Array outputs are written
//! into caller buffers whose required length is reported by
//! [`fraclap_domain_mode_count`] and [`fraclap_domain_grid_len`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fraclap::calculus::{apply_lambda_s, c_alpha, frac_heat_quadrature, heat_apply};
use fraclap::inequality::{cordoba_defect, ConvexFunction, EvenPower, HalfSquare};
use fraclap::random::FieldSampler;
use fraclap::{DomainSpec, Error, HeatQuadratureSpec, SpectralField};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FraclapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainMismatch = 3,
    BufferTooSmall = 4,
    Numerical = 5,
    Panic = 6,
}

/// Opaque rectangle or interval with its Dirichlet eigenbasis.
pub struct FraclapDomain {
    inner: DomainSpec,
}

/// Opaque band-limited field (sine coefficients on a domain).
pub struct FraclapField {
    inner: SpectralField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> FraclapStatus {
    match err {
        Error::DomainMismatch | Error::ShapeMismatch { .. } => FraclapStatus::DomainMismatch,
        e if e.is_config() => FraclapStatus::InvalidArgument,
        _ => FraclapStatus::Numerical,
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (FraclapStatus, String)>) -> FraclapStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FraclapStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FraclapStatus::Panic
        }
    }
}

fn lift<T>(r: fraclap::Result<T>) -> Result<T, (FraclapStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (FraclapStatus, String) {
    (FraclapStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn read<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (FraclapStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (FraclapStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_into(values: &[f64], buf: *mut f64, len: usize) -> Result<(), (FraclapStatus, String)> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < values.len() {
        return Err((FraclapStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

unsafe fn domain_ref<'a>(d: *const FraclapDomain) -> Result<&'a DomainSpec, (FraclapStatus, String)> {
    d.as_ref().map(|d| &d.inner).ok_or_else(|| null("domain"))
}

unsafe fn field_ref<'a>(f: *const FraclapField) -> Result<&'a SpectralField, (FraclapStatus, String)> {
    f.as_ref().map(|f| &f.inner).ok_or_else(|| null("field"))
}

fn boxed_field(inner: SpectralField) -> *mut FraclapField {
    Box::into_raw(Box::new(FraclapField { inner }))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fraclap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a `dim`-dimensional box `Π(0, lengths[i])` with mode cutoffs
/// `modes[i]` and `nodes[i] >= 2 modes[i]` interior grid nodes per axis.
///
/// # Safety
/// `lengths`, `modes` and `nodes` must point to `dim` readable values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_domain_new(
    dim: usize,
    lengths: *const f64,
    modes: *const usize,
    nodes: *const usize,
    out: *mut *mut FraclapDomain,
) -> FraclapStatus {
    guard(|| {
        let l = read(lengths, dim, "lengths")?;
        let m = read(modes, dim, "modes")?;
        let n = read(nodes, dim, "nodes")?;
        let inner = lift(DomainSpec::new(l, m, n))?;
        write_out(out, Box::into_raw(Box::new(FraclapDomain { inner })), "out")
    })
}

/// Releases a domain. NULL is ignored.
///
/// # Safety
/// `domain` must come from [`fraclap_domain_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fraclap_domain_free(domain: *mut FraclapDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Number of sine modes (length of coefficient arrays).
///
/// # Safety
/// `domain` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_domain_mode_count(domain: *const FraclapDomain, out: *mut usize) -> FraclapStatus {
    guard(|| write_out(out, domain_ref(domain)?.mode_count(), "out"))
}

/// Number of grid nodes (length of grid arrays).
///
/// # Safety
/// `domain` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_domain_grid_len(domain: *const FraclapDomain, out: *mut usize) -> FraclapStatus {
    guard(|| write_out(out, domain_ref(domain)?.grid_len(), "out"))
}

/// Dirichlet eigenvalue `λ_j` for the multi-index `index[0..dim]` (1-based per axis).
///
/// # Safety
/// `domain` must be a live handle; `index` must point to `dim` values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_domain_eigenvalue(
    domain: *const FraclapDomain,
    index: *const usize,
    dim: usize,
    out: *mut f64,
) -> FraclapStatus {
    guard(|| {
        let d = domain_ref(domain)?;
        let idx = read(index, dim, "index")?;
        write_out(out, lift(d.eigenvalue(idx))?, "out")
    })
}

/// Field from `len` sine coefficients in the domain's mode order.
///
/// # Safety
/// `domain` must be a live handle; `coeffs` must point to `len` values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_field_new(
    domain: *const FraclapDomain,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut FraclapField,
) -> FraclapStatus {
    guard(|| {
        let d = domain_ref(domain)?;
        let c = read(coeffs, len, "coeffs")?;
        let f = lift(SpectralField::new(*d, c.to_vec()))?;
        write_out(out, boxed_field(f), "out")
    })
}

/// Seeded random field with coefficient variance `λ_j^{-2}`.
///
/// # Safety
/// `domain` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_field_random(
    domain: *const FraclapDomain,
    seed: u64,
    sample: u64,
    out: *mut *mut FraclapField,
) -> FraclapStatus {
    guard(|| {
        let d = domain_ref(domain)?;
        write_out(out, boxed_field(FieldSampler::new(seed).smooth_field(*d, sample)), "out")
    })
}

/// Releases a field. NULL is ignored.
///
/// # Safety
/// `field` must come from a `fraclap_field_*` constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fraclap_field_free(field: *mut FraclapField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Copies the sine coefficients into `buf`.
///
/// # Safety
/// `field` must be a live handle; `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fraclap_field_coeffs(field: *const FraclapField, buf: *mut f64, len: usize) -> FraclapStatus {
    guard(|| copy_into(field_ref(field)?.coeffs(), buf, len))
}

/// Grid values of the field.
///
/// # Safety
/// `field` must be a live handle; `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fraclap_field_to_grid(field: *const FraclapField, buf: *mut f64, len: usize) -> FraclapStatus {
    guard(|| copy_into(field_ref(field)?.to_grid().values(), buf, len))
}

/// New field `Λ^s f` (coefficients scaled by `λ_j^{s/2}`).
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_field_lambda_s(
    field: *const FraclapField,
    s: f64,
    out: *mut *mut FraclapField,
) -> FraclapStatus {
    guard(|| {
        let f = field_ref(field)?;
        if !s.is_finite() {
            return Err((FraclapStatus::InvalidArgument, format!("s = {s} is not finite")));
        }
        write_out(out, boxed_field(apply_lambda_s(f, s)), "out")
    })
}

/// New field `e^{tΔ} f`, `t >= 0`.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_field_heat(
    field: *const FraclapField,
    t: f64,
    out: *mut *mut FraclapField,
) -> FraclapStatus {
    guard(|| {
        let f = field_ref(field)?;
        write_out(out, boxed_field(lift(heat_apply(f, t))?), "out")
    })
}

/// `‖f‖_{s,D} = (Σ λ_j^s f_j²)^{1/2}`.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_field_sobolev_norm(
    field: *const FraclapField,
    s: f64,
    out: *mut f64,
) -> FraclapStatus {
    guard(|| write_out(out, field_ref(field)?.sobolev_norm(s), "out"))
}

/// Normalizing constant `c_α = α / Γ(1 - α)` of the heat representation, `0 < α < 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_c_alpha(alpha: f64, out: *mut f64) -> FraclapStatus {
    guard(|| write_out(out, lift(c_alpha(alpha))?, "out"))
}

/// Grid values of `(-Δ)^α f` through the heat-semigroup quadrature with the
/// domain's default time rule.
///
/// # Safety
/// `field` must be a live handle; `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fraclap_frac_heat_quadrature(
    field: *const FraclapField,
    alpha: f64,
    buf: *mut f64,
    len: usize,
) -> FraclapStatus {
    guard(|| {
        let f = field_ref(field)?;
        let spec = HeatQuadratureSpec::for_domain(f.domain());
        let g = lift(frac_heat_quadrature(f, alpha, &spec))?;
        copy_into(g.values(), buf, len)
    })
}

/// Grid minimum of `Φ'(f) Λ^s f - Λ^s Φ(f)` for `Φ(r) = r²/2` (`power = 2`)
/// or `Φ(r) = r^power` (even `power >= 4`), `0 <= s <= 2`.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fraclap_cordoba_min_defect(
    field: *const FraclapField,
    power: u32,
    s: f64,
    out: *mut f64,
) -> FraclapStatus {
    guard(|| {
        let f = field_ref(field)?;
        let phi: Box<dyn ConvexFunction> =
            if power == 2 { Box::new(HalfSquare) } else { Box::new(lift(EvenPower::new(power))?) };
        let defect = lift(cordoba_defect(f, phi.as_ref(), s))?;
        write_out(out, defect.argmin().0, "out")
    })
}
