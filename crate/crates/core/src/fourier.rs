//! Discrete Fourier transform of progression indicators and the explicit
//! error bound for `J_I(P, Q)` built from it.
//!
//! Transforms use the sign convention `f^(r) = sum_x f(x) e^{-2 pi i r x / p}`.
//! The indicator of a progression is a geometric sum, so each frequency has a
//! closed form and a whole spectrum costs O(p).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::counts::{count_full, count_interval, phi_degree, unit_roots, CompensatedSum, CountReport, ProgressionSpec};
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::poly::{linear_divisors, phi_pair, Poly};

/// Pointwise tolerance for reconstructed indicator values.
pub const POINTWISE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// `|I^(r)|` for `r = 0, ..., p-1`.
    pub magnitudes: Vec<f64>,
    /// `S_1 = sum_r |I^(r)|`.
    pub l1: f64,
}

/// Magnitude spectrum of the indicator of `interval`.
///
/// `|I^(r)| = |sin(pi N t / p) / sin(pi t / p)|` with `t = r s mod p`; the
/// start of the progression only contributes a phase.
pub fn spectrum(ctx: &FieldCtx, interval: &ProgressionSpec) -> SpectrumReport {
    let p = ctx.p();
    let n = interval.len();
    let nred = ctx.reduce(n);
    let pf = p as f64;
    let mut acc = CompensatedSum::default();
    let magnitudes: Vec<f64> = (0..p)
        .map(|r| {
            let t = ctx.mul(r, interval.step());
            let m = if t == 0 {
                n as f64
            } else {
                let num = (PI * ctx.mul(nred, t) as f64 / pf).sin();
                let den = (PI * t as f64 / pf).sin();
                (num / den).abs()
            };
            acc.add_real(m);
            m
        })
        .collect();
    SpectrumReport {
        magnitudes,
        l1: acc.value().re,
    }
}

/// Full complex spectrum of the indicator, from the geometric-sum closed form.
pub fn complex_spectrum(ctx: &FieldCtx, interval: &ProgressionSpec) -> Vec<Complex64> {
    let p = ctx.p();
    let roots = unit_roots(p);
    // e^{-2 pi i k / p}
    let conj = |k: u64| roots[((p - k) % p) as usize];
    let n = interval.len();
    let nred = ctx.reduce(n);
    (0..p)
        .map(|r| {
            let phase = conj(ctx.mul(r, interval.start()));
            let t = ctx.mul(r, interval.step());
            if t == 0 {
                phase * n as f64
            } else {
                let w = conj(t);
                let wn = conj(ctx.mul(nred, t));
                phase * (Complex64::new(1.0, 0.0) - wn) / (Complex64::new(1.0, 0.0) - w)
            }
        })
        .collect()
}

/// `(1/p) sum_r I^(r) e^{2 pi i r x / p}`, the inverse transform at `x`.
pub fn reconstruct(ctx: &FieldCtx, interval: &ProgressionSpec, x: u64) -> Complex64 {
    reconstruct_from(ctx, &complex_spectrum(ctx, interval), &unit_roots(ctx.p()), x)
}

fn reconstruct_from(ctx: &FieldCtx, spec: &[Complex64], roots: &[Complex64], x: u64) -> Complex64 {
    let x = ctx.reduce(x);
    let mut acc = CompensatedSum::default();
    for (r, coeff) in spec.iter().enumerate() {
        acc.add(coeff * roots[ctx.mul(r as u64, x) as usize]);
    }
    acc.value() / ctx.p() as f64
}

/// Whether the inverse transform reproduces the indicator at `x` within
/// [`POINTWISE_TOL`].
pub fn inversion_check(ctx: &FieldCtx, interval: &ProgressionSpec, x: u64) -> bool {
    let expected = if interval.contains(ctx, x) { 1.0 } else { 0.0 };
    (reconstruct(ctx, interval, x) - Complex64::new(expected, 0.0)).norm() <= POINTWISE_TOL
}

/// Inversion check at every point of `F_p`, sharing one spectrum.
pub fn inversion_sweep(ctx: &FieldCtx, interval: &ProgressionSpec) -> bool {
    let spec = complex_spectrum(ctx, interval);
    let roots = unit_roots(ctx.p());
    (0..ctx.p()).all(|x| {
        let expected = if interval.contains(ctx, x) { 1.0 } else { 0.0 };
        (reconstruct_from(ctx, &spec, &roots, x) - Complex64::new(expected, 0.0)).norm() <= POINTWISE_TOL
    })
}

/// `|J_I - (|I|^2/p^2) J|` against `(S_1^2 / p^2) 2 d^2 sqrt(p)`.
///
/// Every quantity is computed exactly (the spectrum to floating point), so
/// this is the finite form of the progression-restricted count estimate.
pub fn fourier_error_bound(ctx: &FieldCtx, p: &Poly, q: &Poly, interval: &ProgressionSpec) -> Result<CountReport> {
    let d = phi_degree(ctx, p, q)?;
    let phi = phi_pair(ctx, p, q)?;
    if let Some(l) = linear_divisors(ctx, &phi).first() {
        return Err(Error::Precondition(format!("phi(P, Q) has the linear divisor {l}")));
    }
    let j_full = count_full(ctx, p, q)? as f64;
    let j_int = count_interval(ctx, p, q, interval)? as f64;
    let pf = ctx.p() as f64;
    let len = interval.len() as f64;
    let s1 = spectrum(ctx, interval).l1;
    let reference = len * len / (pf * pf) * j_full;
    let bound = s1 * s1 / (pf * pf) * 2.0 * (d * d) as f64 * pf.sqrt();
    Ok(CountReport::new(j_int, reference, bound))
}
