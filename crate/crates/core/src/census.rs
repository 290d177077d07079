//! Factorial residue sets `A(p)` and `A(L, N)`, product and quotient set
//! sizes, the Erdős scan, density statistics and the check that every
//! `Y_j = P_j(I)` sits inside `A·A`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factorizer::wilson_witness;
use crate::field::{primes_between, FactorialTable, FieldCtx};
use crate::poly::falling_product_poly;

/// Mutable bit array over `[0, p)`; freeze it into a [`ResidueSet`].
#[derive(Debug, Clone)]
pub struct BitMarks {
    p: u64,
    words: Vec<u64>,
}

impl BitMarks {
    pub fn new(p: u64) -> Self {
        BitMarks {
            p,
            words: vec![0; p.div_ceil(64) as usize],
        }
    }

    #[inline]
    pub fn mark(&mut self, v: u64) {
        debug_assert!(v < self.p);
        self.words[(v >> 6) as usize] |= 1 << (v & 63);
    }

    #[inline]
    pub fn contains(&self, v: u64) -> bool {
        v < self.p && self.words[(v >> 6) as usize] >> (v & 63) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn intersection_count(&self, other: &BitMarks) -> u64 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn union_with(&mut self, other: &BitMarks) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn freeze(self) -> ResidueSet {
        let cardinality = self.count();
        ResidueSet {
            p: self.p,
            words: self.words,
            cardinality,
        }
    }
}

/// An immutable set of residues modulo `p` with its size cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueSet {
    p: u64,
    words: Vec<u64>,
    cardinality: u64,
}

impl ResidueSet {
    pub fn from_values(p: u64, values: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut marks = BitMarks::new(p);
        for v in values {
            if v >= p {
                return Err(Error::range("residue", v, format!("must be below p = {p}")));
            }
            marks.mark(v);
        }
        Ok(marks.freeze())
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn len(&self) -> u64 {
        self.cardinality
    }

    pub fn is_empty(&self) -> bool {
        self.cardinality == 0
    }

    #[inline]
    pub fn contains(&self, v: u64) -> bool {
        v < self.p && self.words[(v >> 6) as usize] >> (v & 63) & 1 == 1
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let base = (i as u64) << 6;
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(base + bit)
            })
        })
    }

    pub fn intersection_len(&self, other: &ResidueSet) -> u64 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn is_subset(&self, other: &ResidueSet) -> bool {
        self.p == other.p && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union_of(sets: &[ResidueSet]) -> Result<ResidueSet> {
        let first = sets
            .first()
            .ok_or_else(|| Error::Precondition("union of an empty family".into()))?;
        let mut marks = first.thaw();
        for s in &sets[1..] {
            if s.p != first.p {
                return Err(Error::Precondition("sets live modulo different primes".into()));
            }
            for (a, b) in marks.words.iter_mut().zip(&s.words) {
                *a |= b;
            }
        }
        Ok(marks.freeze())
    }

    fn thaw(&self) -> BitMarks {
        BitMarks {
            p: self.p,
            words: self.words.clone(),
        }
    }
}

/// Cap on the number of residue multiplications one call may perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WorkBudget(pub u64);

impl Default for WorkBudget {
    fn default() -> Self {
        WorkBudget(1 << 32)
    }
}

impl WorkBudget {
    pub fn check(self, needed: u128) -> Result<()> {
        if needed > self.0 as u128 {
            Err(Error::Budget {
                needed,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

/// `A(L, N) = {n! mod p : L+1 <= n <= L+N}` in one streaming pass.
pub fn factorial_set(ctx: &FieldCtx, l: u64, n: u64) -> Result<ResidueSet> {
    let p = ctx.p();
    if n == 0 {
        return Err(Error::range("N", n, "must be at least 1"));
    }
    let last = l.checked_add(n).filter(|&last| last < p).ok_or_else(|| {
        Error::range("L + N", l.saturating_add(n), format!("must be below p = {p}"))
    })?;
    let mut marks = BitMarks::new(p);
    for (_, v) in ctx.factorial_scan(l + 1, last)? {
        marks.mark(v);
    }
    Ok(marks.freeze())
}

/// `|A(p)|` without keeping the set.
pub fn factorial_residue_count(ctx: &FieldCtx) -> u64 {
    let mut marks = BitMarks::new(ctx.p());
    for (_, v) in ctx.factorial_scan(1, ctx.p() - 1).expect("p - 1 < p") {
        marks.mark(v);
    }
    marks.count()
}

const LANES: usize = 4;

/// `|A(p)|` for several primes at once. The factorial chains are independent,
/// so stepping them in lockstep hides the multiply latency.
pub fn factorial_residue_counts(ctxs: &[FieldCtx]) -> Vec<u64> {
    let mut out = Vec::with_capacity(ctxs.len());
    for group in ctxs.chunks(LANES) {
        let Ok(lanes) = <&[FieldCtx; LANES]>::try_from(group) else {
            out.extend(group.iter().map(factorial_residue_count));
            continue;
        };
        let mut marks: [BitMarks; LANES] = std::array::from_fn(|i| BitMarks::new(lanes[i].p()));
        let mut values = [1u64; LANES];
        let mut n_mont: [u64; LANES] = std::array::from_fn(|i| lanes[i].montgomery(1));
        let common = lanes.iter().map(FieldCtx::p).min().expect("nonempty") - 1;
        for _ in 1..common {
            for i in 0..LANES {
                marks[i].mark(values[i]);
                (values[i], n_mont[i]) = lanes[i].next_factorial(values[i], n_mont[i]);
            }
        }
        for i in 0..LANES {
            marks[i].mark(values[i]);
            for _ in common..lanes[i].p() - 1 {
                (values[i], n_mont[i]) = lanes[i].next_factorial(values[i], n_mont[i]);
                marks[i].mark(values[i]);
            }
        }
        out.extend(marks.iter().map(BitMarks::count));
    }
    out
}

/// One prime of the Erdős scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ErdosRecord {
    pub p: u64,
    pub card: u64,
}

impl ErdosRecord {
    /// `|A(p)| < p - 2`.
    pub fn ok(&self) -> bool {
        self.card < self.p - 2
    }
}

fn check_erdos_range(p_lo: u64, p_hi: u64) -> Result<()> {
    if p_lo < 7 {
        return Err(Error::range(
            "p_lo",
            p_lo,
            "must be at least 7: |A(p)| < p - 2 fails at p = 5, where A(5) = {1, 2, 4}, and trivially at p = 2, 3",
        ));
    }
    if p_hi < p_lo {
        return Err(Error::range("p_hi", p_hi, format!("must be at least p_lo = {p_lo}")));
    }
    if p_hi >= 1 << 63 {
        return Err(Error::range("p_hi", p_hi, "must be below 2^63"));
    }
    Ok(())
}

/// `|A(p)|` for every prime in `[p_lo, p_hi]`, in increasing `p`.
///
/// Primes are spread over the current rayon pool; each task owns its context
/// and bit array.
pub fn erdos_records(p_lo: u64, p_hi: u64) -> Result<Vec<ErdosRecord>> {
    check_erdos_range(p_lo, p_hi)?;
    let primes = primes_between(p_lo, p_hi);
    Ok(primes
        .par_chunks(LANES)
        .with_max_len(1)
        .flat_map_iter(|group| {
            let ctxs: Vec<FieldCtx> = group
                .iter()
                .map(|&p| FieldCtx::new(p).expect("sieved primes are prime"))
                .collect();
            let cards = factorial_residue_counts(&ctxs);
            group.iter().zip(cards).map(|(&p, card)| ErdosRecord { p, card })
        })
        .collect())
}

/// Primes in range with `|A(p)| >= p - 2`.
pub fn erdos_scan(p_lo: u64, p_hi: u64) -> Result<Vec<u64>> {
    Ok(erdos_records(p_lo, p_hi)?
        .into_iter()
        .filter(|r| !r.ok())
        .map(|r| r.p)
        .collect())
}

fn check_same_field(ctx: &FieldCtx, sets: &[&ResidueSet]) -> Result<()> {
    match sets.iter().find(|s| s.modulus() != ctx.p()) {
        Some(s) => Err(Error::Precondition(format!(
            "set lives modulo {}, context is modulo {}",
            s.modulus(),
            ctx.p()
        ))),
        None => Ok(()),
    }
}

pub(crate) fn product_marks(ctx: &FieldCtx, s: &ResidueSet, t: &[u64]) -> BitMarks {
    let mut marks = BitMarks::new(ctx.p());
    for a in s.iter() {
        for &b in t {
            marks.mark(ctx.mul(a, b));
        }
    }
    marks
}

/// `|S·T|`, exact, by a double loop.
pub fn product_set_card(ctx: &FieldCtx, s: &ResidueSet, t: &ResidueSet, budget: WorkBudget) -> Result<u64> {
    check_same_field(ctx, &[s, t])?;
    budget.check(s.len() as u128 * t.len() as u128)?;
    let t: Vec<u64> = t.iter().collect();
    Ok(product_marks(ctx, s, &t).count())
}

/// `|S/T| = |{s t^-1}|`, exact; `T` must avoid 0.
pub fn quotient_set_card(ctx: &FieldCtx, s: &ResidueSet, t: &ResidueSet, budget: WorkBudget) -> Result<u64> {
    check_same_field(ctx, &[s, t])?;
    if t.contains(0) {
        return Err(Error::Domain("the divisor set contains 0".into()));
    }
    budget.check(s.len() as u128 * t.len() as u128)?;
    let inverses = t.iter().map(|b| ctx.inv(b)).collect::<Result<Vec<u64>>>()?;
    Ok(product_marks(ctx, s, &inverses).count())
}

/// `|A(p)| / p` and its distance from `1 - 1/e`. Reported, not asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityStats {
    pub card: u64,
    pub ratio: f64,
    pub deviation: f64,
}

pub fn density_stats(ctx: &FieldCtx) -> DensityStats {
    let card = factorial_residue_count(ctx);
    let ratio = card as f64 / ctx.p() as f64;
    DensityStats {
        card,
        ratio,
        deviation: ratio - (1.0 - (-1.0f64).exp()),
    }
}

/// Result of checking `Y_j ⊆ A·A` for `1 <= j <= M`.
#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    pub holds: bool,
    /// Number of `(j, y)` witness pairs verified.
    pub witnesses: u64,
    /// `Y_1, ..., Y_M`.
    pub y_sets: Vec<ResidueSet>,
}

/// `A = {1!, ..., (2N)!} ∪ {(p-2N)!, ..., (p-1)!}`, `I` the odd numbers up to
/// `2N - M`; checks `P_j(y) = (y+j)! (p-1-y)!` with both factorials in `A`,
/// for every `j <= M` and `y` in `I`.
pub fn embedding_check(ctx: &FieldCtx, n: u64, m: u64) -> Result<EmbeddingReport> {
    let p = ctx.p();
    if n == 0 || 2 * n as u128 + m as u128 >= p as u128 {
        return Err(Error::range(
            "2N + M",
            (2 * n as u128 + m as u128).min(u64::MAX as u128) as u64,
            format!("needs N >= 1 and 2N + M < p = {p}"),
        ));
    }
    let table = FactorialTable::full(ctx);
    let facts = table.values();
    let a_set = ResidueSet::from_values(
        p,
        (1..=2 * n).chain(p - 2 * n..p).map(|k| facts[k as usize]),
    )?;

    let mut holds = true;
    let mut witnesses = 0;
    let mut y_sets = Vec::with_capacity(m as usize);
    let top = (2 * n).saturating_sub(m);
    for j in 1..=m {
        let pj = falling_product_poly(ctx, j)?;
        let mut marks = BitMarks::new(p);
        for y in (1..=top).step_by(2) {
            let value = pj.eval(ctx, y);
            marks.mark(value);
            let (n1, n2) = wilson_witness(ctx, y, j)?;
            let (f1, f2) = (facts[n1 as usize], facts[n2 as usize]);
            holds &= a_set.contains(f1) && a_set.contains(f2) && ctx.mul(f1, f2) == value;
            witnesses += 1;
        }
        y_sets.push(marks.freeze());
    }
    Ok(EmbeddingReport {
        holds,
        witnesses,
        y_sets,
    })
}
