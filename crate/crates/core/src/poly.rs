//! Univariate and bivariate polynomials over `F_p`, the shifted falling
//! products `P_j(x) = (x+1)...(x+j)`, Dickson polynomials, the curve
//! polynomials `phi(P, Q)` and `Q_kj`, and the algebraic precondition checks
//! used before point counting.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{is_prime, FieldCtx};

/// Dense univariate polynomial, coefficients in ascending degree.
///
/// Coefficients are reduced modulo the prime of the context that built the
/// polynomial and trailing zeros are trimmed, so the zero polynomial has no
/// coefficients at all.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<u64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(ctx: &FieldCtx, c: u64) -> Self {
        Self::from_coeffs(ctx, vec![c])
    }

    /// The polynomial `x`.
    pub fn x(ctx: &FieldCtx) -> Self {
        Self::from_coeffs(ctx, vec![0, 1])
    }

    pub fn from_coeffs(ctx: &FieldCtx, coeffs: Vec<u64>) -> Self {
        let mut coeffs: Vec<u64> = coeffs.into_iter().map(|c| ctx.reduce(c)).collect();
        trim(&mut coeffs);
        Poly { coeffs }
    }

    pub fn from_signed(ctx: &FieldCtx, coeffs: &[i64]) -> Self {
        let mut coeffs: Vec<u64> = coeffs.iter().map(|&c| ctx.reduce_signed(c)).collect();
        trim(&mut coeffs);
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Coefficient of `x^i`, zero past the degree.
    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn leading(&self) -> u64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn eval(&self, ctx: &FieldCtx, x: u64) -> u64 {
        self.coeffs.iter().rev().fold(0, |acc, &c| ctx.add(ctx.mul(acc, x), c))
    }

    /// Values at every point of `F_p`, indexed by the point.
    pub fn values_on_field(&self, ctx: &FieldCtx) -> Vec<u64> {
        (0..ctx.p()).map(|x| self.eval(ctx, x)).collect()
    }

    pub fn add(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out: Vec<u64> = (0..n).map(|i| ctx.add(self.coeff(i), other.coeff(i))).collect();
        trim(&mut out);
        Poly { coeffs: out }
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out: Vec<u64> = (0..n).map(|i| ctx.sub(self.coeff(i), other.coeff(i))).collect();
        trim(&mut out);
        Poly { coeffs: out }
    }

    pub fn neg(&self, ctx: &FieldCtx) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|&c| ctx.neg(c)).collect(),
        }
    }

    pub fn scale(&self, ctx: &FieldCtx, c: u64) -> Poly {
        let c = ctx.reduce(c);
        let mut out: Vec<u64> = self.coeffs.iter().map(|&a| ctx.mul(a, c)).collect();
        trim(&mut out);
        Poly { coeffs: out }
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = ctx.add(out[i + j], ctx.mul(a, b));
            }
        }
        trim(&mut out);
        Poly { coeffs: out }
    }

    pub fn derivative(&self, ctx: &FieldCtx) -> Poly {
        let mut out: Vec<u64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| ctx.mul(ctx.reduce(i as u64), c))
            .collect();
        trim(&mut out);
        Poly { coeffs: out }
    }

    /// `f(x + b)`.
    pub fn shift(&self, ctx: &FieldCtx, b: u64) -> Poly {
        let lin = Poly::from_coeffs(ctx, vec![b, 1]);
        self.coeffs.iter().rev().fold(Poly::zero(), |acc, &c| {
            acc.mul(ctx, &lin).add(ctx, &Poly::constant(ctx, c))
        })
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match (i, c) {
                (0, _) => write!(f, "{c}")?,
                (1, 1) => f.write_str("x")?,
                (1, _) => write!(f, "{c}x")?,
                (_, 1) => write!(f, "x^{i}")?,
                _ => write!(f, "{c}x^{i}")?,
            }
        }
        Ok(())
    }
}

fn trim(coeffs: &mut Vec<u64>) {
    while coeffs.last() == Some(&0) {
        coeffs.pop();
    }
}

/// Dense bivariate polynomial: `rows[i]` is the coefficient of `x^i`, as a
/// polynomial in `y`. Trailing zero rows are trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BivarPoly {
    rows: Vec<Poly>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        BivarPoly { rows: Vec::new() }
    }

    fn from_rows(mut rows: Vec<Poly>) -> Self {
        while rows.last().is_some_and(Poly::is_zero) {
            rows.pop();
        }
        BivarPoly { rows }
    }

    /// Builds from `(i, j, c)` triples meaning `c x^i y^j`; repeated cells add.
    pub fn from_terms(ctx: &FieldCtx, terms: &[(usize, usize, i64)]) -> Self {
        let nx = terms.iter().map(|t| t.0 + 1).max().unwrap_or(0);
        let ny = terms.iter().map(|t| t.1 + 1).max().unwrap_or(0);
        let mut grid = vec![vec![0u64; ny]; nx];
        for &(i, j, c) in terms {
            grid[i][j] = ctx.add(grid[i][j], ctx.reduce_signed(c));
        }
        Self::from_rows(grid.into_iter().map(|r| Poly::from_coeffs(ctx, r)).collect())
    }

    /// `P(x)` viewed as a bivariate polynomial.
    pub fn in_x(ctx: &FieldCtx, p: &Poly) -> Self {
        Self::from_rows(p.coeffs().iter().map(|&c| Poly::constant(ctx, c)).collect())
    }

    /// `Q(y)` viewed as a bivariate polynomial.
    pub fn in_y(q: &Poly) -> Self {
        Self::from_rows(vec![q.clone()])
    }

    /// Coefficient of `x^i y^j`.
    pub fn coeff(&self, i: usize, j: usize) -> u64 {
        self.rows.get(i).map_or(0, |r| r.coeff(j))
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.total_degree().unwrap_or(0) == 0
    }

    pub fn degree_x(&self) -> Option<usize> {
        self.rows.len().checked_sub(1)
    }

    pub fn degree_y(&self) -> Option<usize> {
        self.rows.iter().filter_map(Poly::degree).max()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.degree().map(|d| i + d))
            .max()
    }

    pub fn add(&self, ctx: &FieldCtx, other: &BivarPoly) -> BivarPoly {
        let n = self.rows.len().max(other.rows.len());
        let zero = Poly::zero();
        Self::from_rows(
            (0..n)
                .map(|i| {
                    let a = self.rows.get(i).unwrap_or(&zero);
                    let b = other.rows.get(i).unwrap_or(&zero);
                    a.add(ctx, b)
                })
                .collect(),
        )
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &BivarPoly) -> BivarPoly {
        let n = self.rows.len().max(other.rows.len());
        let zero = Poly::zero();
        Self::from_rows(
            (0..n)
                .map(|i| {
                    let a = self.rows.get(i).unwrap_or(&zero);
                    let b = other.rows.get(i).unwrap_or(&zero);
                    a.sub(ctx, b)
                })
                .collect(),
        )
    }

    pub fn eval(&self, ctx: &FieldCtx, x: u64, y: u64) -> u64 {
        self.rows
            .iter()
            .rev()
            .fold(0, |acc, row| ctx.add(ctx.mul(acc, x), row.eval(ctx, y)))
    }

    /// `f(x, c)` as a polynomial in `x`.
    pub fn eval_y(&self, ctx: &FieldCtx, c: u64) -> Poly {
        Poly::from_coeffs(ctx, self.rows.iter().map(|r| r.eval(ctx, c)).collect())
    }

    /// `f(c, y)` as a polynomial in `y`.
    pub fn eval_x(&self, ctx: &FieldCtx, c: u64) -> Poly {
        self.rows
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, row| acc.scale(ctx, c).add(ctx, row))
    }

    /// `f(alpha*y + beta, y)` as a polynomial in `y`.
    pub fn substitute_x(&self, ctx: &FieldCtx, alpha: u64, beta: u64) -> Poly {
        let lin = Poly::from_coeffs(ctx, vec![beta, alpha]);
        self.rows
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, row| acc.mul(ctx, &lin).add(ctx, row))
    }

    /// Coefficient of `y^m` as a polynomial in `x`.
    pub fn y_coefficient(&self, ctx: &FieldCtx, m: usize) -> Poly {
        Poly::from_coeffs(ctx, self.rows.iter().map(|r| r.coeff(m)).collect())
    }

    /// Top homogeneous part evaluated at `(u, v)`.
    pub fn top_form_at(&self, ctx: &FieldCtx, u: u64, v: u64) -> u64 {
        let Some(d) = self.total_degree() else {
            return 0;
        };
        let mut acc = 0;
        for (i, row) in self.rows.iter().enumerate() {
            if i > d {
                break;
            }
            let c = row.coeff(d - i);
            if c != 0 {
                let term = ctx.mul(c, ctx.mul(ctx.pow(u, i as u64), ctx.pow(v, (d - i) as u64)));
                acc = ctx.add(acc, term);
            }
        }
        acc
    }

    /// Divides by `x + beta*y + gamma`, returning the quotient and the
    /// remainder (a polynomial in `y`).
    pub fn div_linear(&self, ctx: &FieldCtx, beta: u64, gamma: u64) -> (BivarPoly, Poly) {
        let Some(n) = self.degree_x() else {
            return (BivarPoly::zero(), Poly::zero());
        };
        if n == 0 {
            return (BivarPoly::zero(), self.rows[0].clone());
        }
        // Root in x of the divisor: r(y) = -beta*y - gamma.
        let root = Poly::from_coeffs(ctx, vec![ctx.neg(ctx.reduce(gamma)), ctx.neg(ctx.reduce(beta))]);
        let mut quotient = vec![Poly::zero(); n];
        quotient[n - 1] = self.rows[n].clone();
        for i in (1..n).rev() {
            quotient[i - 1] = self.rows[i].add(ctx, &root.mul(ctx, &quotient[i]));
        }
        let remainder = self.rows[0].add(ctx, &root.mul(ctx, &quotient[0]));
        (Self::from_rows(quotient), remainder)
    }

    /// Exact division by `x + beta*y + gamma`; a nonzero remainder is an error.
    pub fn div_linear_exact(&self, ctx: &FieldCtx, beta: u64, gamma: u64) -> Result<BivarPoly> {
        let (q, r) = self.div_linear(ctx, beta, gamma);
        if r.is_zero() {
            Ok(q)
        } else {
            Err(Error::Inconsistency(format!(
                "division by x + {beta}y + {gamma} left remainder {r} (in y)"
            )))
        }
    }
}

impl fmt::Display for BivarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut terms = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &c) in row.coeffs().iter().enumerate() {
                if c != 0 {
                    terms.push((i + j, i, j, c));
                }
            }
        }
        terms.sort_by(|a, b| b.cmp(a));
        let parts: Vec<String> = terms
            .into_iter()
            .map(|(_, i, j, c)| {
                let mut s = if c == 1 && i + j > 0 { String::new() } else { c.to_string() };
                for (var, e) in [("x", i), ("y", j)] {
                    match e {
                        0 => {}
                        1 => s.push_str(var),
                        _ => s.push_str(&format!("{var}^{e}")),
                    }
                }
                s
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `P_j(x) = (x+1)(x+2)...(x+j)`, expanded; `j = 0` gives the empty product 1.
pub fn falling_product_poly(ctx: &FieldCtx, j: u64) -> Result<Poly> {
    if j >= ctx.p() {
        return Err(Error::range(
            "j",
            j,
            format!("must be below p = {} (roots collide modulo p)", ctx.p()),
        ));
    }
    Ok((1..=j).fold(Poly::constant(ctx, 1), |acc, i| {
        acc.mul(ctx, &Poly::from_coeffs(ctx, vec![i, 1]))
    }))
}

fn binomial_mod(ctx: &FieldCtx, n: u64, k: u64) -> u64 {
    // n < p, so every denominator below is invertible.
    (0..k).fold(1, |acc, t| {
        let num = ctx.mul(acc, ctx.reduce(n - t));
        ctx.mul(num, ctx.inv(t + 1).expect("t + 1 < p"))
    })
}

/// Dickson polynomial `D_{d,a}` from its explicit coefficient formula.
pub fn dickson_poly(ctx: &FieldCtx, d: u64, a: u64) -> Result<Poly> {
    if d == 0 || d >= ctx.p() {
        return Err(Error::range("d", d, format!("must lie in [1, {})", ctx.p())));
    }
    let minus_a = ctx.neg(ctx.reduce(a));
    let mut coeffs = vec![0u64; d as usize + 1];
    for i in 0..=d / 2 {
        let ratio = ctx.mul(ctx.reduce(d), ctx.inv(d - i)?);
        let c = ctx.mul(ctx.mul(ratio, binomial_mod(ctx, d - i, i)), ctx.pow(minus_a, i));
        coeffs[(d - 2 * i) as usize] = c;
    }
    Ok(Poly::from_coeffs(ctx, coeffs))
}

/// `phi(P, Q)`: `P(x) - Q(y)` when the polynomials differ, the divided
/// difference `(P(x) - P(y)) / (x - y)` when they are equal.
pub fn phi_pair(ctx: &FieldCtx, p: &Poly, q: &Poly) -> Result<BivarPoly> {
    if p.is_constant() || q.is_constant() {
        return Err(Error::Precondition("phi(P, Q) needs nonconstant P and Q".into()));
    }
    let diff = BivarPoly::in_x(ctx, p).sub(ctx, &BivarPoly::in_y(q));
    if p == q {
        diff.div_linear_exact(ctx, ctx.neg(1), 0)
    } else {
        Ok(diff)
    }
}

/// `P_k(x) - P_j(y)` with every linear factor divided out.
///
/// For `k = j` the factor `x - y` always divides; for even `j` the symmetry
/// `P_j(x) = P_j(-x-j-1)` contributes the second factor `x + y + j + 1`.
pub fn q_kj(ctx: &FieldCtx, k: u64, j: u64) -> Result<BivarPoly> {
    if k == 0 || k > j || j + 2 >= ctx.p() {
        return Err(Error::Precondition(format!(
            "q_kj needs 1 <= k <= j < p - 2, got k = {k}, j = {j}, p = {}",
            ctx.p()
        )));
    }
    let pk = falling_product_poly(ctx, k)?;
    let pj = falling_product_poly(ctx, j)?;
    let diff = BivarPoly::in_x(ctx, &pk).sub(ctx, &BivarPoly::in_y(&pj));
    if k != j {
        return Ok(diff);
    }
    let q = diff.div_linear_exact(ctx, ctx.neg(1), 0)?;
    if j % 2 == 1 {
        Ok(q)
    } else {
        q.div_linear_exact(ctx, 1, ctx.reduce(j + 1))
    }
}

/// A linear form `a x + b y + c`, normalised so that `a = 1`, or `a = 0, b = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinearForm {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x + {}y + {}", self.a, self.b, self.c)
    }
}

fn divides(ctx: &FieldCtx, f: &BivarPoly, form: LinearForm) -> bool {
    if form.a == 1 {
        f.substitute_x(ctx, ctx.neg(form.b), ctx.neg(form.c)).is_zero()
    } else {
        f.eval_y(ctx, ctx.neg(form.c)).is_zero()
    }
}

/// Candidate constants `c` for divisors `x + beta*y + c`, found from the roots
/// of one nonzero slice `f(., y0)`.
fn candidate_constants(ctx: &FieldCtx, f: &BivarPoly, beta: u64, slice: &(u64, Vec<u64>)) -> Vec<u64> {
    let (y0, roots) = slice;
    roots
        .iter()
        .map(|&r| ctx.neg(ctx.add(r, ctx.mul(beta, *y0))))
        .filter(|&c| {
            divides(
                ctx,
                f,
                LinearForm {
                    a: 1,
                    b: beta,
                    c,
                },
            )
        })
        .collect()
}

fn nonzero_slice(ctx: &FieldCtx, f: &BivarPoly) -> Option<(u64, Vec<u64>)> {
    (0..ctx.p()).find_map(|y0| {
        let h = f.eval_y(ctx, y0);
        if h.is_zero() {
            return None;
        }
        let roots = (0..ctx.p()).filter(|&x| h.eval(ctx, x) == 0).collect();
        Some((y0, roots))
    })
}

/// Every linear divisor of `f` over `F_p`.
pub fn linear_divisors(ctx: &FieldCtx, f: &BivarPoly) -> Vec<LinearForm> {
    if f.is_constant() {
        return Vec::new();
    }
    let mut out = Vec::new();
    if let Some(slice) = nonzero_slice(ctx, f) {
        for beta in 0..ctx.p() {
            // x + beta*y divides the top form iff it vanishes at (-beta, 1).
            if f.top_form_at(ctx, ctx.neg(beta), 1) == 0 {
                out.extend(candidate_constants(ctx, f, beta, &slice).into_iter().map(|c| LinearForm {
                    a: 1,
                    b: beta,
                    c,
                }));
            }
        }
    }
    if f.top_form_at(ctx, 1, 0) == 0 {
        out.extend((0..ctx.p()).map(|c| LinearForm { a: 0, b: 1, c }).filter(|&l| divides(ctx, f, l)));
    }
    out
}

/// Whether some `b1 x + b2 y + c` divides `f`.
pub fn has_linear_divisor_along(ctx: &FieldCtx, f: &BivarPoly, b1: u64, b2: u64) -> bool {
    let (b1, b2) = (ctx.reduce(b1), ctx.reduce(b2));
    if f.is_constant() || (b1 == 0 && b2 == 0) {
        return false;
    }
    if b1 == 0 {
        if f.top_form_at(ctx, 1, 0) != 0 {
            return false;
        }
        return (0..ctx.p()).any(|c| divides(ctx, f, LinearForm { a: 0, b: 1, c }));
    }
    let beta = ctx.mul(b2, ctx.inv(b1).expect("b1 != 0"));
    if f.top_form_at(ctx, ctx.neg(beta), 1) != 0 {
        return false;
    }
    match nonzero_slice(ctx, f) {
        Some(slice) => !candidate_constants(ctx, f, beta, &slice).is_empty(),
        None => true,
    }
}

/// Schmidt's quantity `psi(f) = max_i deg g_i / i` for
/// `f = g_0 y^d + g_1(x) y^(d-1) + ... + g_d(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Psi {
    /// `psi` in lowest terms.
    pub num: u64,
    pub den: u64,
    /// `d`, the degree of `f` in `y`.
    pub y_degree: u64,
    /// `psi = m / d` with `gcd(m, d) = 1`, which forces absolute irreducibility.
    pub coprime: bool,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn schmidt_psi(ctx: &FieldCtx, f: &BivarPoly) -> Result<Psi> {
    let d = f
        .degree_y()
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::Precondition("f must have positive degree in y".into()))?;
    let g0 = f.y_coefficient(ctx, d);
    if !g0.is_constant() {
        return Err(Error::Precondition(format!(
            "leading y-coefficient g_0 = {g0} is not a constant"
        )));
    }
    // Maximise deg g_i / i by cross-multiplication.
    let (mut best_num, mut best_den) = (0u64, 1u64);
    for i in 1..=d {
        if let Some(deg) = f.y_coefficient(ctx, d - i).degree() {
            if (deg as u64) * best_den > best_num * i as u64 {
                (best_num, best_den) = (deg as u64, i as u64);
            }
        }
    }
    let g = gcd(best_num, best_den);
    let (num, den) = (best_num / g, best_den / g);
    let d = d as u64;
    Ok(Psi {
        num,
        den,
        y_degree: d,
        coprime: den == d,
    })
}

/// One differing coefficient between `P_j` and the forced Dickson candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch {
    pub degree: usize,
    pub p_j: u64,
    pub candidate: u64,
}

/// Outcome of matching `P_j` against `alpha * D_{j,a}(x + b) + c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MismatchCertificate {
    pub j: u64,
    pub alpha: u64,
    pub a: u64,
    pub b: u64,
    pub c: u64,
    /// Highest-degree coefficient where the two differ; `None` would mean
    /// `P_j` is a normalised Dickson polynomial.
    pub mismatch: Option<Mismatch>,
}

impl MismatchCertificate {
    /// Whether the mismatch sits among the five leading coefficients.
    pub fn in_top_five(&self) -> bool {
        self.mismatch.is_some_and(|m| m.degree + 4 >= self.j as usize)
    }
}

/// Solves for the only `(alpha, a, b, c)` the leading coefficients allow and
/// reports where `alpha * D_{j,a}(x + b) + c` departs from `P_j`.
///
/// `alpha` comes from degree `j`, `b` from degree `j-1` (Dickson polynomials
/// have no `x^(j-1)` term), `a` from degree `j-2`, and `c` from the constant
/// term.
pub fn dickson_mismatch(ctx: &FieldCtx, j: u64) -> Result<MismatchCertificate> {
    if j < 5 || j >= ctx.p() {
        return Err(Error::range("j", j, format!("must lie in [5, {})", ctx.p())));
    }
    let target = falling_product_poly(ctx, j)?;
    let ju = j as usize;
    let alpha = target.leading();
    let inv_j = ctx.inv(j)?;
    let b = ctx.mul(target.coeff(ju - 1), ctx.mul(inv_j, ctx.inv(alpha)?));
    // x^(j-2) coefficient of alpha * D(x+b) is alpha * (C(j,2) b^2 - j a).
    let choose2 = binomial_mod(ctx, j, 2);
    let e2 = ctx.mul(target.coeff(ju - 2), ctx.inv(alpha)?);
    let a = ctx.mul(ctx.sub(ctx.mul(choose2, ctx.mul(b, b)), e2), inv_j);
    let shifted = dickson_poly(ctx, j, a)?.shift(ctx, b).scale(ctx, alpha);
    let c = ctx.sub(target.coeff(0), shifted.coeff(0));
    let candidate = shifted.add(ctx, &Poly::constant(ctx, c));

    for deg in [ju, ju - 1, ju - 2, 0] {
        if candidate.coeff(deg) != target.coeff(deg) {
            return Err(Error::Inconsistency(format!(
                "forced coefficient of x^{deg} does not match for j = {j}"
            )));
        }
    }
    let mismatch = (1..=ju - 3).rev().find_map(|deg| {
        let (lhs, rhs) = (target.coeff(deg), candidate.coeff(deg));
        (lhs != rhs).then_some(Mismatch {
            degree: deg,
            p_j: lhs,
            candidate: rhs,
        })
    });
    Ok(MismatchCertificate {
        j,
        alpha,
        a,
        b,
        c,
        mismatch,
    })
}

/// Prime degree rules out a decomposition `g(h(x))` with both degrees >= 2.
/// `false` only means this criterion is inconclusive.
pub fn indecomposable_by_degree(j: u64) -> bool {
    is_prime(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64) -> FieldCtx {
        FieldCtx::new(p).unwrap()
    }

    #[test]
    fn falling_products() {
        let c = ctx(101);
        assert_eq!(falling_product_poly(&c, 1).unwrap().coeffs(), &[1, 1]);
        assert_eq!(falling_product_poly(&c, 2).unwrap().coeffs(), &[2, 3, 1]);
        assert_eq!(falling_product_poly(&c, 3).unwrap().coeffs(), &[6, 11, 6, 1]);
        assert_eq!(falling_product_poly(&c, 0).unwrap().coeffs(), &[1]);
        assert!(falling_product_poly(&c, 101).is_err());
    }

    #[test]
    fn dickson_small_degrees() {
        let c = ctx(101);
        let a = 7;
        assert_eq!(dickson_poly(&c, 1, a).unwrap().coeffs(), &[0, 1]);
        assert_eq!(dickson_poly(&c, 2, a).unwrap().coeffs(), &[101 - 14, 0, 1]);
        assert_eq!(dickson_poly(&c, 3, a).unwrap().coeffs(), &[0, 101 - 21, 0, 1]);
        assert!(dickson_poly(&c, 101, a).is_err());
        assert!(dickson_poly(&c, 0, a).is_err());
    }

    #[test]
    fn phi_pair_examples() {
        let c = ctx(101);
        let p1 = falling_product_poly(&c, 1).unwrap();
        let p2 = falling_product_poly(&c, 2).unwrap();
        let p3 = falling_product_poly(&c, 3).unwrap();
        assert_eq!(
            phi_pair(&c, &p2, &p2).unwrap(),
            BivarPoly::from_terms(&c, &[(1, 0, 1), (0, 1, 1), (0, 0, 3)])
        );
        assert_eq!(
            phi_pair(&c, &p1, &p2).unwrap(),
            BivarPoly::from_terms(&c, &[(1, 0, 1), (0, 0, 1), (0, 2, -1), (0, 1, -3), (0, 0, -2)])
        );
        let expected = BivarPoly::from_terms(
            &c,
            &[(2, 0, 1), (1, 1, 1), (0, 2, 1), (1, 0, 6), (0, 1, 6), (0, 0, 11)],
        );
        assert_eq!(phi_pair(&c, &p3, &p3).unwrap(), expected);
        assert!(phi_pair(&c, &Poly::constant(&c, 3), &p2).is_err());
    }

    #[test]
    fn q_kj_examples() {
        let c = ctx(101);
        let q33 = q_kj(&c, 3, 3).unwrap();
        assert_eq!(q33.to_string(), "x^2 + xy + y^2 + 6x + 6y + 11");
        assert_eq!(q_kj(&c, 2, 2).unwrap(), BivarPoly::from_terms(&c, &[(0, 0, 1)]));
        let p3 = falling_product_poly(&c, 3).unwrap();
        let p5 = falling_product_poly(&c, 5).unwrap();
        let direct = BivarPoly::in_x(&c, &p3).sub(&c, &BivarPoly::in_y(&p5));
        assert_eq!(q_kj(&c, 3, 5).unwrap(), direct);
        assert!(q_kj(&c, 5, 3).is_err());
        assert!(q_kj(&c, 1, 99).is_err());
    }

    #[test]
    fn printed_even_factor_sign_does_not_divide() {
        // x + y - j - 1 leaves a remainder; x + y + j + 1 divides exactly.
        let c = ctx(101);
        for j in [2u64, 4, 6, 8] {
            let pj = falling_product_poly(&c, j).unwrap();
            let base = phi_pair(&c, &pj, &pj).unwrap();
            let (_, r) = base.div_linear(&c, 1, c.neg(j + 1));
            assert!(!r.is_zero(), "j = {j}");
            assert!(base.div_linear_exact(&c, 1, j + 1).is_ok());
        }
    }

    #[test]
    fn schmidt_psi_examples() {
        let c = ctx(101);
        let psi = schmidt_psi(&c, &q_kj(&c, 3, 5).unwrap()).unwrap();
        assert_eq!((psi.num, psi.den, psi.coprime), (3, 5, true));
        let f = BivarPoly::from_terms(&c, &[(2, 0, 1), (0, 3, -1)]);
        let psi = schmidt_psi(&c, &f).unwrap();
        assert_eq!((psi.num, psi.den, psi.coprime), (2, 3, true));
        let f = BivarPoly::from_terms(&c, &[(1, 0, 1), (0, 2, -1)]);
        let psi = schmidt_psi(&c, &f).unwrap();
        assert_eq!((psi.num, psi.den, psi.coprime), (1, 2, true));
        // x^2 - y^4 = (x - y^2)(x + y^2): psi = 1/2 but d = 4
        let f = BivarPoly::from_terms(&c, &[(2, 0, 1), (0, 4, -1)]);
        let psi = schmidt_psi(&c, &f).unwrap();
        assert_eq!((psi.num, psi.den, psi.coprime), (1, 2, false));
        // g_0 = x is not constant
        let f = BivarPoly::from_terms(&c, &[(1, 2, 1), (0, 0, 1)]);
        assert!(matches!(schmidt_psi(&c, &f), Err(Error::Precondition(_))));
    }

    #[test]
    fn dickson_mismatch_examples() {
        let cert = dickson_mismatch(&ctx(101), 5).unwrap();
        let m = cert.mismatch.expect("lemma holds at j = 5");
        assert!(m.degree == 2 || m.degree == 1, "{m:?}");
        assert!(cert.in_top_five());
        assert!(dickson_mismatch(&ctx(1009), 7).unwrap().mismatch.is_some());
        assert!(dickson_mismatch(&ctx(1009), 4).is_err());
        assert!(dickson_mismatch(&ctx(7), 7).is_err());
    }

    #[test]
    fn dickson_mismatch_candidate_is_really_dickson() {
        // Rebuild the candidate from the certificate and check it agrees with
        // P_j exactly down to the reported degree.
        let c = ctx(1009);
        for j in 5..=20 {
            let cert = dickson_mismatch(&c, j).unwrap();
            let cand = dickson_poly(&c, j, cert.a)
                .unwrap()
                .shift(&c, cert.b)
                .scale(&c, cert.alpha)
                .add(&c, &Poly::constant(&c, cert.c));
            let pj = falling_product_poly(&c, j).unwrap();
            let m = cert.mismatch.unwrap();
            for deg in (m.degree + 1)..=j as usize {
                assert_eq!(cand.coeff(deg), pj.coeff(deg));
            }
            assert_ne!(cand.coeff(m.degree), pj.coeff(m.degree));
        }
    }

    #[test]
    fn indecomposable_examples() {
        assert!(indecomposable_by_degree(7));
        assert!(!indecomposable_by_degree(4));
        assert!(indecomposable_by_degree(2));
    }

    #[test]
    fn linear_divisor_search() {
        let c = ctx(101);
        let p2 = falling_product_poly(&c, 2).unwrap();
        let p3 = falling_product_poly(&c, 3).unwrap();
        // P_2(x) - P_2(y) = (x - y)(x + y + 3)
        let f = BivarPoly::in_x(&c, &p2).sub(&c, &BivarPoly::in_y(&p2));
        let mut found = linear_divisors(&c, &f);
        found.sort_by_key(|l| (l.a, l.b, l.c));
        assert_eq!(
            found,
            vec![LinearForm { a: 1, b: 1, c: 3 }, LinearForm { a: 1, b: 100, c: 0 }]
        );
        assert!(has_linear_divisor_along(&c, &f, 1, 100));
        assert!(has_linear_divisor_along(&c, &f, 5, 5));
        assert!(!has_linear_divisor_along(&c, &f, 1, 0));
        assert!(linear_divisors(&c, &q_kj(&c, 3, 3).unwrap()).is_empty());
        // (y + 4) * (x^2 + 2); -2 is a non-residue mod 101
        let g = BivarPoly::from_terms(&c, &[(2, 1, 1), (2, 0, 4), (0, 1, 2), (0, 0, 8)]);
        assert_eq!(linear_divisors(&c, &g), vec![LinearForm { a: 0, b: 1, c: 4 }]);
        assert!(has_linear_divisor_along(&c, &g, 0, 3));
        let pq = BivarPoly::in_x(&c, &p3).sub(&c, &BivarPoly::in_y(&p2));
        assert!(linear_divisors(&c, &pq).is_empty());
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    /// `sum_k a_k sum_{i+j=k-1} x^i y^j`, the divided difference written out.
    fn divided_difference_oracle(ctx: &FieldCtx, p: &Poly) -> BivarPoly {
        let mut terms = Vec::new();
        for (k, &a) in p.coeffs().iter().enumerate().skip(1) {
            for i in 0..k {
                terms.push((i, k - 1 - i, a as i64));
            }
        }
        BivarPoly::from_terms(ctx, &terms)
    }

    #[test]
    fn symmetry_of_falling_products() {
        for p in crate::field::primes_between(13, 1000) {
            let c = FieldCtx::new(p).unwrap();
            for j in 1..=10.min(p - 3) {
                let pj = falling_product_poly(&c, j).unwrap();
                for x in 0..p {
                    let mirror = c.neg(c.reduce(x + j + 1));
                    let (a, b) = (pj.eval(&c, x), pj.eval(&c, mirror));
                    let expected = if j % 2 == 0 { a } else { c.neg(a) };
                    assert_eq!(b, expected, "p = {p}, j = {j}, x = {x}");
                }
            }
        }
    }

    #[test]
    fn q_kj_divisions_exact_up_to_20() {
        for p in [101, 1009] {
            let c = FieldCtx::new(p).unwrap();
            for j in 1..=20 {
                for k in 1..=j {
                    q_kj(&c, k, j).unwrap();
                }
            }
        }
    }

    #[test]
    fn psi_of_q_kj_for_odd_primes() {
        let c = FieldCtx::new(1009).unwrap();
        let odd_primes = [3u64, 5, 7, 11, 13];
        for (n, &k) in odd_primes.iter().enumerate() {
            for &j in &odd_primes[n + 1..] {
                let psi = schmidt_psi(&c, &q_kj(&c, k, j).unwrap()).unwrap();
                assert_eq!((psi.num, psi.den, psi.coprime), (k, j, true));
            }
        }
    }

    proptest! {
        #[test]
        fn dickson_functional_equation(d in 1u64..30, a in 0u64..1009, x in 1u64..1009) {
            let c = FieldCtx::new(1009).unwrap();
            let dp = dickson_poly(&c, d, a).unwrap();
            let a_over_x = c.mul(a, c.inv(x).unwrap());
            let lhs = dp.eval(&c, c.add(x, a_over_x));
            let rhs = c.add(c.pow(x, d), c.pow(a_over_x, d));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn divided_difference_matches_closed_form(
            coeffs in proptest::collection::vec(0u64..1009, 2..12),
            x in 0u64..1009,
        ) {
            let c = FieldCtx::new(1009).unwrap();
            let p = Poly::from_coeffs(&c, coeffs);
            prop_assume!(!p.is_constant());
            let phi = phi_pair(&c, &p, &p).unwrap();
            prop_assert_eq!(&phi, &divided_difference_oracle(&c, &p));
            // on the diagonal the divided difference is the derivative
            prop_assert_eq!(phi.eval(&c, x, x), p.derivative(&c).eval(&c, x));
        }

        #[test]
        fn shift_agrees_with_evaluation(
            coeffs in proptest::collection::vec(0u64..101, 0..10),
            b in 0u64..101,
            x in 0u64..101,
        ) {
            let c = FieldCtx::new(101).unwrap();
            let p = Poly::from_coeffs(&c, coeffs);
            prop_assert_eq!(p.shift(&c, b).eval(&c, x), p.eval(&c, c.add(x, b)));
        }
    }
}
