//! Prime-field arithmetic, factorial streaming and Wilson identities.
//!
//! Moduli are odd primes below 2^63. Products go through a 128-bit
//! intermediate and are reduced with Montgomery's REDC; the factorial stream
//! keeps its multiplier in Montgomery form so that each step costs a single
//! reduction.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An element of `F_p`, always in `[0, p)` for the context that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Residue(u64);

impl Residue {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<Residue> for u64 {
    fn from(r: Residue) -> u64 {
        r.0
    }
}

/// A prime modulus with precomputed Montgomery constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
    /// `-p^{-1} mod 2^64`
    neg_inv: u64,
    /// `2^64 mod p`, the Montgomery image of 1.
    r1: u64,
    /// `2^128 mod p`
    r2: u64,
}

impl FieldCtx {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p.is_multiple_of(2) || p >= 1 << 63 || !is_prime(p) {
            return Err(Error::InvalidModulus(p));
        }
        // Newton iteration doubles the number of correct low bits; p*p = 1 mod 8
        // gives three to start with.
        let mut inv = p;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        debug_assert_eq!(p.wrapping_mul(inv), 1);
        let m = p as u128;
        let r1 = ((1u128 << 64) % m) as u64;
        let r2 = ((u128::MAX % m + 1) % m) as u64;
        Ok(FieldCtx {
            p,
            neg_inv: inv.wrapping_neg(),
            r1,
            r2,
        })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn residue(&self, value: u64) -> Result<Residue> {
        if value < self.p {
            Ok(Residue(value))
        } else {
            Err(Error::range("residue", value, format!("must be below p = {}", self.p)))
        }
    }

    /// Reduces an arbitrary integer into `[0, p)`.
    #[inline]
    pub fn reduce(&self, value: u64) -> u64 {
        value % self.p
    }

    pub fn reduce_signed(&self, value: i64) -> u64 {
        value.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline]
    fn to_montgomery(&self, a: u64) -> u64 {
        self.redc(a as u128 * self.r2 as u128)
    }

    /// Montgomery image of `n`, for stepping [`FieldCtx::next_factorial`].
    #[inline]
    pub(crate) fn montgomery(&self, n: u64) -> u64 {
        self.to_montgomery(self.reduce(n))
    }

    /// From `(n!, n R)` to `((n+1)!, (n+1) R)`.
    #[inline]
    pub(crate) fn next_factorial(&self, value: u64, n_mont: u64) -> (u64, u64) {
        let n_mont = self.add(n_mont, self.r1);
        (self.redc(value as u128 * n_mont as u128), n_mont)
    }

    /// `a * b mod p` for reduced operands.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.p && b < self.p);
        if self.p >> 32 == 0 {
            a * b % self.p
        } else {
            let ab = self.redc(a as u128 * b as u128);
            self.redc(ab as u128 * self.r2 as u128)
        }
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut base = self.reduce(base);
        let mut acc = 1 % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a reduced value.
    pub fn inv(&self, a: u64) -> Result<u64> {
        let a = self.reduce(a);
        if a == 0 {
            return Err(Error::NoInverse(a));
        }
        Ok(self.pow(a, self.p - 2))
    }

    pub fn mod_inverse(&self, a: Residue) -> Result<Residue> {
        self.inv(a.0).map(Residue)
    }

    /// `n! mod p` for `n < p`.
    pub fn factorial(&self, n: u64) -> Result<u64> {
        Ok(self.factorial_scan(n, n)?.value_at_start())
    }

    /// Streams `(n, n! mod p)` for `lo <= n <= hi`.
    pub fn factorial_scan(&self, lo: u64, hi: u64) -> Result<FactorialScan<'_>> {
        self.check_scan_range(lo, hi)?;
        let mut value = 1u64;
        let mut m = 0u64;
        let mut m_mont = 0u64;
        while m < lo {
            m += 1;
            m_mont = self.add(m_mont, self.r1);
            value = self.redc(value as u128 * m_mont as u128);
        }
        Ok(FactorialScan::new(self, lo, value, hi))
    }

    /// Resumes a factorial stream from a shard checkpoint.
    pub fn factorial_scan_from(&self, checkpoint: Checkpoint, hi: u64) -> Result<FactorialScan<'_>> {
        if checkpoint.p != self.p {
            return Err(Error::Precondition(format!(
                "checkpoint was taken modulo {}, context is modulo {}",
                checkpoint.p, self.p
            )));
        }
        if checkpoint.value >= self.p || checkpoint.value == 0 {
            return Err(Error::range(
                "checkpoint value",
                checkpoint.value,
                format!("must be a nonzero residue modulo {}", self.p),
            ));
        }
        self.check_scan_range(checkpoint.n, hi)?;
        Ok(FactorialScan::new(self, checkpoint.n, checkpoint.value, hi))
    }

    fn check_scan_range(&self, lo: u64, hi: u64) -> Result<()> {
        if hi >= self.p {
            return Err(Error::range(
                "factorial argument",
                hi,
                format!("must be below p = {} (n! vanishes from p on)", self.p),
            ));
        }
        if lo > hi {
            return Err(Error::range("scan start", lo, format!("must not exceed the end {hi}")));
        }
        Ok(())
    }

    /// `y! (p-1-y)! mod p`, which is `(-1)^(y+1)`.
    pub fn wilson_pair(&self, y: u64) -> Result<Residue> {
        if y >= self.p {
            return Err(Error::range("y", y, format!("must lie in [0, {}]", self.p - 1)));
        }
        let z = self.p - 1 - y;
        let (small, large) = if y <= z { (y, z) } else { (z, y) };
        let mut scan = self.factorial_scan(small, large)?;
        let first = scan.value_at_start();
        let last = scan.by_ref().last().map(|(_, v)| v).unwrap_or(first);
        Ok(Residue(self.mul(first, last)))
    }
}

/// A resumable position `(n, n! mod p)` in a factorial stream.
///
/// Text form is the triple `p,n,value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint {
    pub p: u64,
    pub n: u64,
    pub value: u64,
}

impl fmt::Display for Checkpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.p, self.n, self.value)
    }
}

impl FromStr for Checkpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Precondition(format!("malformed checkpoint {s:?}, expected p,n,value"));
        let mut parts = s.trim().split(',').map(|t| t.trim().parse::<u64>());
        let mut next = || parts.next().ok_or_else(bad)?.map_err(|_| bad());
        let cp = Checkpoint {
            p: next()?,
            n: next()?,
            value: next()?,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(cp)
    }
}

/// Iterator over `(n, n! mod p)`.
pub struct FactorialScan<'a> {
    ctx: &'a FieldCtx,
    n: u64,
    value: u64,
    /// `n * 2^64 mod p`
    n_mont: u64,
    hi: u64,
    done: bool,
}

impl<'a> FactorialScan<'a> {
    fn new(ctx: &'a FieldCtx, n: u64, value: u64, hi: u64) -> Self {
        FactorialScan {
            ctx,
            n,
            value,
            n_mont: ctx.to_montgomery(n),
            hi,
            done: false,
        }
    }

    fn value_at_start(&self) -> u64 {
        self.value
    }

    /// Current position, suitable for resuming in another shard.
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            p: self.ctx.p,
            n: self.n,
            value: self.value,
        }
    }
}

impl Iterator for FactorialScan<'_> {
    type Item = (u64, u64);

    #[inline]
    fn next(&mut self) -> Option<(u64, u64)> {
        if self.done {
            return None;
        }
        let out = (self.n, self.value);
        if self.n == self.hi {
            self.done = true;
        } else {
            let ctx = self.ctx;
            self.n += 1;
            self.n_mont = ctx.add(self.n_mont, ctx.r1);
            self.value = ctx.redc(self.value as u128 * self.n_mont as u128);
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = if self.done { 0 } else { (self.hi - self.n + 1) as usize };
        (left, Some(left))
    }
}

impl ExactSizeIterator for FactorialScan<'_> {}

/// All factorials `0!, 1!, ..., upto!` modulo `p`, for O(1) lookups.
#[derive(Debug, Clone)]
pub struct FactorialTable {
    p: u64,
    values: Vec<u64>,
}

impl FactorialTable {
    pub fn new(ctx: &FieldCtx, upto: u64) -> Result<Self> {
        let values = ctx.factorial_scan(0, upto)?.map(|(_, v)| v).collect();
        Ok(FactorialTable { p: ctx.p, values })
    }

    /// Table of every factorial below `p`.
    pub fn full(ctx: &FieldCtx) -> Self {
        Self::new(ctx, ctx.p - 1).expect("p - 1 is always in range")
    }

    pub fn get(&self, n: u64) -> Option<u64> {
        self.values.get(n as usize).copied()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Same contract as [`FieldCtx::wilson_pair`], but O(1); needs a full table.
    pub fn wilson_pair(&self, y: u64) -> Result<Residue> {
        if self.values.len() as u64 != self.p {
            return Err(Error::Precondition("wilson_pair needs a table up to p - 1".into()));
        }
        if y >= self.p {
            return Err(Error::range("y", y, format!("must lie in [0, {}]", self.p - 1)));
        }
        let a = self.values[y as usize] as u128;
        let b = self.values[(self.p - 1 - y) as usize] as u128;
        Ok(Residue((a * b % self.p as u128) as u64))
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin; the first twelve prime bases are exact for
/// every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &q in &BASES {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &BASES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Primes in `[lo, hi]` by a segmented sieve of Eratosthenes.
pub fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || lo > hi {
        return Vec::new();
    }
    let lo = lo.max(2);
    let root = (hi as f64).sqrt() as u64 + 1;
    let mut small = vec![true; root as usize + 1];
    let mut base = Vec::new();
    for i in 2..=root {
        if small[i as usize] {
            base.push(i);
            let mut k = i * i;
            while k <= root {
                small[k as usize] = false;
                k += i;
            }
        }
    }
    let mut seg = vec![true; (hi - lo + 1) as usize];
    for &q in &base {
        let mut k = (lo.div_ceil(q) * q).max(q * q);
        while k <= hi {
            seg[(k - lo) as usize] = false;
            k += q;
        }
    }
    seg.iter()
        .enumerate()
        .filter(|&(_, &keep)| keep)
        .map(|(i, _)| lo + i as u64)
        .collect()
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn mul_matches_u128(a in any::<u64>(), b in any::<u64>(), pick in 0usize..4) {
            let p = [1_000_003u64, 4_294_967_311, (1 << 61) - 1, 9_223_372_036_854_775_783][pick];
            let ctx = FieldCtx::new(p).unwrap();
            let (a, b) = (a % p, b % p);
            prop_assert_eq!(ctx.mul(a, b), mulmod(a, b, p));
        }
    }
}
