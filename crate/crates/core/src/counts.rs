//! Exact point counts of `phi(P, Q)` over `F_p x F_p` and over `I x I`,
//! image and intersection sizes of polynomial maps on progressions, and the
//! Lang–Weil and Chalk–Smith audits.
//!
//! Counting never enumerates the plane. For `P != Q` the zeros of
//! `P(x) - Q(y)` are paired through a value histogram; for `P = Q` the
//! divided difference vanishes off the diagonal exactly where `P(x) = P(y)`,
//! and on the diagonal exactly where `P'(x) = 0`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::census::BitMarks;
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::poly::{has_linear_divisor_along, phi_pair, Poly};

/// Largest polynomial degree the counters accept.
pub const MAX_DEGREE: usize = 64;

/// Arithmetic progression `start, start + step, ..., start + (length-1) step`
/// in `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProgressionSpec {
    start: u64,
    step: u64,
    length: u64,
    #[serde(skip)]
    p: u64,
}

impl ProgressionSpec {
    pub fn new(ctx: &FieldCtx, start: u64, step: u64, length: u64) -> Result<Self> {
        let p = ctx.p();
        if start >= p {
            return Err(Error::range("start", start, format!("must be below p = {p}")));
        }
        if step.is_multiple_of(p) {
            return Err(Error::range("step", step, "must be nonzero modulo p"));
        }
        if length == 0 || length > p {
            return Err(Error::range("length", length, format!("must lie in [1, {p}]")));
        }
        Ok(ProgressionSpec {
            start,
            step: step % p,
            length,
            p,
        })
    }

    /// `{lo, lo+1, ..., lo+length-1}`.
    pub fn interval(ctx: &FieldCtx, lo: u64, length: u64) -> Result<Self> {
        Self::new(ctx, lo, 1, length)
    }

    /// All of `F_p`.
    pub fn full(ctx: &FieldCtx) -> Self {
        Self::new(ctx, 0, 1, ctx.p()).expect("the whole field is a progression")
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> u64 {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        let p = self.p;
        (0..self.length).scan(self.start, move |x, _| {
            let out = *x;
            *x = (*x + self.step) % p;
            Some(out)
        })
    }

    pub fn contains(&self, ctx: &FieldCtx, x: u64) -> bool {
        // index = (x - start) / step
        let inv = ctx.inv(self.step).expect("step is nonzero");
        let idx = ctx.mul(ctx.sub(ctx.reduce(x), self.start), inv);
        idx < self.length
    }
}

/// Observed value against a reference, with the admissible gap.
///
/// `satisfied` holds exactly when `|observed - reference| <= bound + slack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountReport {
    pub observed: f64,
    pub reference: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl CountReport {
    pub fn new(observed: f64, reference: f64, bound: f64) -> Self {
        Self::with_slack(observed, reference, bound, 0.0)
    }

    pub fn with_slack(observed: f64, reference: f64, bound: f64, slack: f64) -> Self {
        CountReport {
            observed,
            reference,
            bound,
            slack,
            satisfied: (observed - reference).abs() <= bound + slack,
        }
    }

    pub fn gap(&self) -> f64 {
        (self.observed - self.reference).abs()
    }
}

fn check_poly(p: &Poly, name: &str) -> Result<usize> {
    match p.degree() {
        Some(d) if (1..=MAX_DEGREE).contains(&d) => Ok(d),
        Some(0) | None => Err(Error::Precondition(format!("{name} must be nonconstant"))),
        Some(d) => Err(Error::Precondition(format!(
            "{name} has degree {d}, above the cap of {MAX_DEGREE}"
        ))),
    }
}

/// Multiplicity of each value of `poly` over `points`, as a `p`-cell table.
fn histogram(ctx: &FieldCtx, poly: &Poly, points: impl Iterator<Item = u64>) -> Vec<u32> {
    let mut table = vec![0u32; ctx.p() as usize];
    for x in points {
        table[poly.eval(ctx, x) as usize] += 1;
    }
    table
}

fn count_on(ctx: &FieldCtx, p: &Poly, q: &Poly, points: &ProgressionSpec) -> Result<u64> {
    check_poly(p, "P")?;
    check_poly(q, "Q")?;
    if p == q {
        let table = histogram(ctx, p, points.iter());
        let pairs: u64 = table.iter().map(|&m| m as u64 * m as u64).sum();
        let dp = p.derivative(ctx);
        let critical = points.iter().filter(|&x| dp.eval(ctx, x) == 0).count() as u64;
        Ok(pairs - points.len() + critical)
    } else {
        let table = histogram(ctx, q, points.iter());
        Ok(points.iter().map(|x| table[p.eval(ctx, x) as usize] as u64).sum())
    }
}

/// `J(P, Q)`: zeros of `phi(P, Q)` in `F_p x F_p`.
pub fn count_full(ctx: &FieldCtx, p: &Poly, q: &Poly) -> Result<u64> {
    count_on(ctx, p, q, &ProgressionSpec::full(ctx))
}

/// `J_I(P, Q)`: zeros of `phi(P, Q)` in `I x I`.
pub fn count_interval(ctx: &FieldCtx, p: &Poly, q: &Poly, interval: &ProgressionSpec) -> Result<u64> {
    count_on(ctx, p, q, interval)
}

fn image_marks(ctx: &FieldCtx, poly: &Poly, interval: &ProgressionSpec) -> BitMarks {
    let mut marks = BitMarks::new(ctx.p());
    for x in interval.iter() {
        marks.mark(poly.eval(ctx, x));
    }
    marks
}

/// `|P(I)|`.
pub fn image_count(ctx: &FieldCtx, poly: &Poly, interval: &ProgressionSpec) -> Result<u64> {
    check_poly(poly, "P")?;
    Ok(image_marks(ctx, poly, interval).count())
}

/// `|P(I) ∩ Q(I)|`.
pub fn intersection_count(ctx: &FieldCtx, p: &Poly, q: &Poly, interval: &ProgressionSpec) -> Result<u64> {
    check_poly(p, "P")?;
    check_poly(q, "Q")?;
    Ok(image_marks(ctx, p, interval).intersection_count(&image_marks(ctx, q, interval)))
}

/// Total degree of `phi(P, Q)`, erroring when it is constant.
pub fn phi_degree(ctx: &FieldCtx, p: &Poly, q: &Poly) -> Result<usize> {
    check_poly(p, "P")?;
    check_poly(q, "Q")?;
    match phi_pair(ctx, p, q)?.total_degree() {
        Some(d) if d > 0 => Ok(d),
        _ => Err(Error::Precondition("phi(P, Q) is constant".into())),
    }
}

/// Compares `J(P, Q)` with `p` against `(d-1)(d-2) sqrt(p) + d - 1`.
///
/// The caller vouches that `phi(P, Q)` is absolutely irreducible.
pub fn langweil_report(ctx: &FieldCtx, p: &Poly, q: &Poly) -> Result<CountReport> {
    let d = phi_degree(ctx, p, q)? as f64;
    let observed = count_full(ctx, p, q)? as f64;
    let prime = ctx.p() as f64;
    let bound = (d - 1.0) * (d - 2.0) * prime.sqrt() + d - 1.0;
    Ok(CountReport::new(observed, prime, bound))
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), v: f64) {
    let (sum, comp) = acc;
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    pub(crate) fn add_real(&mut self, v: f64) {
        neumaier(&mut self.re, v);
    }

    pub(crate) fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// `e^{2 pi i k / p}` for every `k` in `F_p`.
pub(crate) fn unit_roots(p: u64) -> Vec<Complex64> {
    (0..p)
        .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / p as f64))
        .collect()
}

/// Per-value sums `S[v] = sum_{x : poly(x) = v} e^{2 pi i b x / p}`.
fn fibre_sums(ctx: &FieldCtx, poly: &Poly, b: u64, roots: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); ctx.p() as usize];
    for x in 0..ctx.p() {
        out[poly.eval(ctx, x) as usize] += roots[ctx.mul(b, x) as usize];
    }
    out
}

/// `|sum over zeros of phi(P, Q) of e^{2 pi i (b1 x + b2 y) / p}|` against
/// `2 d^2 sqrt(p)`, with relative slack `1e-6` on the bound.
pub fn exp_sum_check(ctx: &FieldCtx, p: &Poly, q: &Poly, b1: u64, b2: u64) -> Result<CountReport> {
    let (b1, b2) = (ctx.reduce(b1), ctx.reduce(b2));
    if b1 == 0 && b2 == 0 {
        return Err(Error::Precondition("(b1, b2) must be a nonzero vector".into()));
    }
    let d = phi_degree(ctx, p, q)?;
    let phi = phi_pair(ctx, p, q)?;
    if has_linear_divisor_along(ctx, &phi, b1, b2) {
        return Err(Error::Precondition(format!(
            "phi(P, Q) is divisible by {b1}x + {b2}y + c for some c"
        )));
    }
    let magnitude = exp_sum_magnitude(ctx, p, q, b1, b2);
    let bound = 2.0 * (d * d) as f64 * (ctx.p() as f64).sqrt();
    Ok(CountReport::with_slack(magnitude, 0.0, bound, bound * 1e-6))
}

fn exp_sum_magnitude(ctx: &FieldCtx, p: &Poly, q: &Poly, b1: u64, b2: u64) -> f64 {
    let roots = unit_roots(ctx.p());
    let fx = fibre_sums(ctx, p, b1, &roots);
    let fy = fibre_sums(ctx, q, b2, &roots);
    let mut acc = CompensatedSum::default();
    for (a, b) in fx.iter().zip(&fy) {
        acc.add(a * b);
    }
    if p == q {
        // Drop the diagonal, then add back the diagonal zeros P'(x) = 0.
        let c = ctx.add(b1, b2);
        if c == 0 {
            acc.add_real(-(ctx.p() as f64));
        }
        let dp = p.derivative(ctx);
        for x in (0..ctx.p()).filter(|&x| dp.eval(ctx, x) == 0) {
            acc.add(roots[ctx.mul(c, x) as usize]);
        }
    }
    acc.value().norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::falling_product_poly;

    fn setup(p: u64) -> (FieldCtx, Vec<Poly>) {
        let ctx = FieldCtx::new(p).unwrap();
        let polys = (0..=7).map(|j| falling_product_poly(&ctx, j).unwrap()).collect();
        (ctx, polys)
    }

    /// Straight evaluation of phi at every pair of points.
    fn brute_count(ctx: &FieldCtx, p: &Poly, q: &Poly, points: &[u64]) -> u64 {
        let phi = phi_pair(ctx, p, q).unwrap();
        let mut n = 0;
        for &x in points {
            for &y in points {
                if phi.eval(ctx, x, y) == 0 {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn progression_validation() {
        let ctx = FieldCtx::new(11).unwrap();
        assert!(ProgressionSpec::new(&ctx, 11, 1, 3).is_err());
        assert!(ProgressionSpec::new(&ctx, 0, 22, 3).is_err());
        assert!(ProgressionSpec::new(&ctx, 0, 1, 0).is_err());
        assert!(ProgressionSpec::new(&ctx, 0, 1, 12).is_err());
        let prog = ProgressionSpec::new(&ctx, 9, 4, 5).unwrap();
        assert_eq!(prog.iter().collect::<Vec<_>>(), vec![9, 2, 6, 10, 3]);
        for x in 0..11 {
            assert_eq!(prog.contains(&ctx, x), [9, 2, 6, 10, 3].contains(&x));
        }
    }

    #[test]
    fn line_has_p_points() {
        for p in [11, 101, 1009] {
            let (ctx, polys) = setup(p);
            assert_eq!(count_full(&ctx, &polys[2], &polys[2]).unwrap(), p);
        }
    }

    #[test]
    fn count_full_matches_brute_force() {
        let (ctx, polys) = setup(11);
        let all: Vec<u64> = (0..11).collect();
        assert_eq!(
            count_full(&ctx, &polys[3], &polys[3]).unwrap(),
            brute_count(&ctx, &polys[3], &polys[3], &all)
        );
        let (ctx, polys) = setup(101);
        let all: Vec<u64> = (0..101).collect();
        let j = count_full(&ctx, &polys[3], &polys[5]).unwrap();
        assert_eq!(j, brute_count(&ctx, &polys[3], &polys[5], &all));
        let bound = 12.0 * 101f64.sqrt() + 4.0;
        assert!((j as f64 - 101.0).abs() <= bound);
    }

    #[test]
    fn count_interval_cases() {
        let (ctx, polys) = setup(101);
        let full = ProgressionSpec::full(&ctx);
        assert_eq!(
            count_interval(&ctx, &polys[3], &polys[5], &full).unwrap(),
            count_full(&ctx, &polys[3], &polys[5]).unwrap()
        );
        let first50 = ProgressionSpec::interval(&ctx, 0, 50).unwrap();
        let pts: Vec<u64> = first50.iter().collect();
        assert_eq!(
            count_interval(&ctx, &polys[3], &polys[3], &first50).unwrap(),
            brute_count(&ctx, &polys[3], &polys[3], &pts)
        );
        // single point: 1 iff P'(x0) = 0
        let p3 = &polys[3];
        let d3 = p3.derivative(&ctx);
        for x0 in 0..101 {
            let one = ProgressionSpec::interval(&ctx, x0, 1).unwrap();
            let expected = u64::from(d3.eval(&ctx, x0) == 0);
            assert_eq!(count_interval(&ctx, p3, p3, &one).unwrap(), expected);
        }
    }

    #[test]
    fn images_and_intersections() {
        let (ctx, polys) = setup(101);
        let first50 = ProgressionSpec::interval(&ctx, 0, 50).unwrap();
        assert_eq!(image_count(&ctx, &polys[1], &first50).unwrap(), 50);
        let mut seen: Vec<u64> = first50.iter().map(|x| polys[3].eval(&ctx, x)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(image_count(&ctx, &polys[3], &first50).unwrap(), seen.len() as u64);

        let full = ProgressionSpec::full(&ctx);
        assert_eq!(image_count(&ctx, &polys[2], &full).unwrap(), 51);

        let inter = intersection_count(&ctx, &polys[3], &polys[5], &first50).unwrap();
        let five: Vec<u64> = first50.iter().map(|x| polys[5].eval(&ctx, x)).collect();
        let expected = seen.iter().filter(|v| five.contains(v)).count() as u64;
        assert_eq!(inter, expected);
        assert_eq!(
            intersection_count(&ctx, &polys[3], &polys[3], &first50).unwrap(),
            image_count(&ctx, &polys[3], &first50).unwrap()
        );
        // images {0, 1} and {5, 6} of x -> x and x -> x + 5 on {0, 1}
        let two = ProgressionSpec::interval(&ctx, 0, 2).unwrap();
        let shifted = Poly::from_coeffs(&ctx, vec![5, 1]);
        assert_eq!(intersection_count(&ctx, &Poly::x(&ctx), &shifted, &two).unwrap(), 0);
        assert!(image_count(&ctx, &Poly::constant(&ctx, 4), &two).is_err());
    }

    #[test]
    fn langweil_examples() {
        let (ctx, polys) = setup(1009);
        assert!(langweil_report(&ctx, &polys[3], &polys[3]).unwrap().satisfied);
        assert!(langweil_report(&ctx, &polys[3], &polys[5]).unwrap().satisfied);
        let line = langweil_report(&ctx, &polys[2], &polys[2]).unwrap();
        assert_eq!((line.observed, line.bound, line.gap()), (1009.0, 0.0, 0.0));
        assert!(line.satisfied);
        assert!(langweil_report(&ctx, &polys[1], &polys[1]).is_err());
    }

    #[test]
    fn exp_sum_matches_direct_summation() {
        let (ctx, polys) = setup(101);
        let phi = phi_pair(&ctx, &polys[3], &polys[3]).unwrap();
        let roots = unit_roots(101);
        let mut direct = Complex64::new(0.0, 0.0);
        for x in 0..101 {
            for y in 0..101 {
                if phi.eval(&ctx, x, y) == 0 {
                    direct += roots[x as usize];
                }
            }
        }
        let report = exp_sum_check(&ctx, &polys[3], &polys[3], 1, 0).unwrap();
        assert!((report.observed - direct.norm()).abs() < 1e-9);
        assert!(report.observed <= 2.0 * 4.0 * 101f64.sqrt());
        assert!(report.satisfied);
    }

    #[test]
    fn exp_sum_preconditions() {
        let (ctx, polys) = setup(101);
        assert!(matches!(
            exp_sum_check(&ctx, &polys[3], &polys[3], 0, 0),
            Err(Error::Precondition(_))
        ));
        // phi = (x + 1) - y is itself linear along (1, -1)
        let shifted = Poly::x(&ctx);
        assert!(matches!(
            exp_sum_check(&ctx, &polys[1], &shifted, 1, 100),
            Err(Error::Precondition(_))
        ));
        assert!(exp_sum_check(&ctx, &polys[1], &shifted, 1, 0).is_ok());
    }
}
