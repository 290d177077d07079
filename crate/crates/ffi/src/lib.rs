//! C ABI over `factlab`.
//!
//! Objects cross the boundary as opaque handles created by `fl_*_new`-style
//! calls and released with the matching `fl_*_free`. Every fallible call
//! returns an [`FlStatus`]; on failure a description is available from
//! [`fl_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use factlab::census;
use factlab::counts;
use factlab::factorizer;
use factlab::poly::falling_product_poly;
use factlab::{Error, FieldCtx, ResidueSet};

/// Prime field context.
pub struct FlFieldCtx(FieldCtx);

/// Immutable set of residues.
pub struct FlResidueSet(ResidueSet);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    InvalidModulus = 1,
    OutOfRange = 2,
    NoInverse = 3,
    Precondition = 4,
    Domain = 5,
    Inconsistency = 6,
    Budget = 7,
    NotRepresentable = 8,
    NullPointer = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(e: &Error) -> FlStatus {
    match e {
        Error::InvalidModulus(_) => FlStatus::InvalidModulus,
        Error::OutOfRange { .. } => FlStatus::OutOfRange,
        Error::NoInverse(_) => FlStatus::NoInverse,
        Error::Precondition(_) => FlStatus::Precondition,
        Error::Domain(_) => FlStatus::Domain,
        Error::Inconsistency(_) => FlStatus::Inconsistency,
        Error::Budget { .. } => FlStatus::Budget,
        Error::NotRepresentable { .. } => FlStatus::NotRepresentable,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Small { needed: usize, capacity: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("{what} is NULL"));
            FlStatus::NullPointer
        }
        Ok(Err(Failure::Small { needed, capacity })) => {
            set_last_error(format!("output buffer holds {capacity} values, {needed} needed"));
            FlStatus::BufferTooSmall
        }
        Err(_) => {
            set_last_error("internal panic".into());
            FlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either NULL or a live handle from this library.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-NULL and, per the caller's contract, valid for writes.
    unsafe { p.write(value) };
    Ok(())
}

/// Message for the last failing call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fl_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a context for the odd prime `p < 2^63`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_field_new(p: u64, out: *mut *mut FlFieldCtx) -> FlStatus {
    guard(|| {
        let ctx = FieldCtx::new(p)?;
        unsafe { write(out, Box::into_raw(Box::new(FlFieldCtx(ctx))), "out") }
    })
}

/// # Safety
/// `ctx` must be NULL or a handle from [`fl_field_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_field_free(ctx: *mut FlFieldCtx) {
    if !ctx.is_null() {
        // SAFETY: created by Box::into_raw in fl_field_new.
        drop(unsafe { Box::from_raw(ctx) });
    }
}

/// The modulus, or 0 for a NULL handle.
///
/// # Safety
/// `ctx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fl_field_modulus(ctx: *const FlFieldCtx) -> u64 {
    unsafe { ctx.as_ref() }.map_or(0, |c| c.0.p())
}

/// `n! mod p` for `n < p`.
///
/// # Safety
/// `ctx` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fl_factorial(ctx: *const FlFieldCtx, n: u64, out: *mut u64) -> FlStatus {
    guard(|| {
        let ctx = unsafe { deref(ctx, "ctx") }?;
        let v = ctx.0.factorial(n)?;
        unsafe { write(out, v, "out") }
    })
}

/// `a^-1 mod p`.
///
/// # Safety
/// `ctx` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fl_mod_inverse(ctx: *const FlFieldCtx, a: u64, out: *mut u64) -> FlStatus {
    guard(|| {
        let ctx = unsafe { deref(ctx, "ctx") }?;
        let a = ctx.0.residue(a)?;
        let v = ctx.0.mod_inverse(a)?.value();
        unsafe { write(out, v, "out") }
    })
}

/// `y! (p-1-y)! mod p`, which is `1` for odd `y` and `p - 1` for even `y`.
///
/// # Safety
/// `ctx` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fl_wilson_pair(ctx: *const FlFieldCtx, y: u64, out: *mut u64) -> FlStatus {
    guard(|| {
        let ctx = unsafe { deref(ctx, "ctx") }?;
        let v = ctx.0.wilson_pair(y)?.value();
        unsafe { write(out, v, "out") }
    })
}

/// `|{1!, 2!, ..., (p-1)!}|`.
///
/// # Safety
/// `ctx` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fl_factorial_residue_count(ctx: *const FlFieldCtx, out: *mut u64) -> FlStatus {
    guard(|| {
        let ctx = unsafe { deref(ctx, "ctx") }?;
        unsafe { write(out, census::factorial_residue_count(&ctx.0), "out") }
    })
}

/// `{m! mod p : l < m <= l + n}` as a new set handle.
///
/// # Safety
/// `ctx` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_factorial_set(ctx: *const FlFieldCtx, l: u64, n: u64, out: *mut *mut FlResidueSet) -> FlStatus {
    guard(|| {
        let ctx = unsafe { deref(ctx, "ctx") }?;
        let set = census::factorial_set(&ctx.0, l, n)?;
        unsafe { write(out, Box::into_raw(Box::new(FlResidueSet(set))), "out") }
    })
}

/// # Safety
/// `set` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_residue_set_free(set: *mut FlResidueSet) {
    if !set.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Number of elements, or 0 for a NULL handle.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fl_residue_set_len(set: *const FlResidueSet) -> u64 {
    unsafe { set.as_ref() }.map_or(0, |s| s.0.len())
}

/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fl_residue_set_contains(set: *const FlResidueSet, v: u64) -> bool {
    unsafe { set.as_ref() }.is_some_and(|s| s.0.contains(v))
}

/// Copies the elements in increasing order into `buf`; `*len` receives the
/// element count even when the buffer is too small.
///
/// # Safety
/// `set` must be a live handle, `buf` valid for `capacity` writes (or NULL
/// with `capacity == 0`), and `len` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fl_residue_set_elements(
    set: *const FlResidueSet,
    buf: *mut u64,
    capacity: usize,
    len: *mut usize,
) -> FlStatus {
    guard(|| {
        let set = unsafe { deref(set, "set") }?;
        let needed = set.0.len() as usize;
        unsafe { write(len, needed, "len") }?;
        if needed > capacity {
            return Err(Failure::Small { needed, capacity });
        }
        if needed > 0 && buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        for (i, v) in set.0.iter().enumerate() {
            // SAFETY: i < needed <= capacity.
            unsafe { buf.add(i).write(v) };
        }
        Ok(())
    })
}

/// `J(P_j, P_k)`, the number of zeros of `phi(P_j, P_k)` over the field,
/// where `P_j(x) = (x+1)...(x+j)`.
///
/// # Safety
/// `ctx` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fl_count_falling(ctx: *const FlFieldCtx, j: u64, k: u64, out: *mut u64) -> FlStatus {
    guard(|| {
        let ctx = unsafe { deref(ctx, "ctx") }?;
        let pj = falling_product_poly(&ctx.0, j)?;
        let pk = falling_product_poly(&ctx.0, k)?;
        let v = counts::count_full(&ctx.0, &pj, &pk)?;
        unsafe { write(out, v, "out") }
    })
}

unsafe fn write_factors(factors: &[u64], buf: *mut u64, capacity: usize, len: *mut usize) -> Result<(), Failure> {
    unsafe { write(len, factors.len(), "len") }?;
    if factors.len() > capacity {
        return Err(Failure::Small {
            needed: factors.len(),
            capacity,
        });
    }
    if buf.is_null() {
        return Err(Failure::Null("buf"));
    }
    for (i, &n) in factors.iter().enumerate() {
        // SAFETY: i < factors.len() <= capacity.
        unsafe { buf.add(i).write(n) };
    }
    Ok(())
}

/// Three arguments `n1, n2, n3` with `n1! n2! n3! = a (mod p)`, written to
/// `factors[0..3]`.
///
/// # Safety
/// `ctx` must be a live handle and `factors` valid for three writes.
#[no_mangle]
pub unsafe extern "C" fn fl_three_factorial(ctx: *const FlFieldCtx, a: u64, factors: *mut u64) -> FlStatus {
    guard(|| {
        let ctx = unsafe { deref(ctx, "ctx") }?;
        let cert = factorizer::three_factorial(&ctx.0, ctx.0.residue(a)?)?;
        let mut len = 0;
        unsafe { write_factors(cert.factors(), factors, 3, &mut len) }
    })
}

/// At most `k` factorial arguments, each `<= bound`, whose factorials
/// multiply to `a`; the count goes to `*len`.
///
/// # Safety
/// `ctx` must be a live handle, `factors` valid for `capacity` writes and
/// `len` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn fl_find_representation(
    ctx: *const FlFieldCtx,
    a: u64,
    k: usize,
    bound: u64,
    factors: *mut u64,
    capacity: usize,
    len: *mut usize,
) -> FlStatus {
    guard(|| {
        let ctx = unsafe { deref(ctx, "ctx") }?;
        let cert = factorizer::find_representation(&ctx.0, ctx.0.residue(a)?, k, bound)?;
        unsafe { write_factors(cert.factors(), factors, capacity, len) }
    })
}
