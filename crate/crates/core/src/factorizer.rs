//! Products of factorials hitting a prescribed residue: the three-factorial
//! construction from Wilson's theorem, the two-factorial form of `P_j(y)`,
//! and a bounded search over products of at most seven factorials.

use rayon::prelude::*;
use serde::Serialize;

use crate::census::{product_marks, BitMarks, ResidueSet, WorkBudget};
use crate::error::{Error, Result};
use crate::field::{FactorialTable, FieldCtx, Residue};
use crate::poly::falling_product_poly;

pub const MAX_FACTORS: usize = 7;

/// `target = factors[0]! * factors[1]! * ... (mod p)`, checked when built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepresentationCertificate {
    target: u64,
    factors: Vec<u64>,
    bound: u64,
    p: u64,
}

impl RepresentationCertificate {
    /// Recomputes every factorial from scratch and rejects the tuple unless
    /// the product matches.
    pub fn new(ctx: &FieldCtx, target: Residue, factors: Vec<u64>) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_FACTORS {
            return Err(Error::Precondition(format!(
                "a certificate has 1 to {MAX_FACTORS} factors, got {}",
                factors.len()
            )));
        }
        let product = product_of_factorials(ctx, &factors)?;
        if product != target.value() {
            return Err(Error::Inconsistency(format!(
                "factorials {factors:?} multiply to {product}, not {target} (mod {})",
                ctx.p()
            )));
        }
        let bound = factors.iter().copied().max().unwrap_or(0);
        Ok(RepresentationCertificate {
            target: target.value(),
            factors,
            bound,
            p: ctx.p(),
        })
    }

    pub fn target(&self) -> u64 {
        self.target
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    /// Largest factorial argument.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Re-runs the check against a fresh context.
    pub fn verify(&self) -> bool {
        FieldCtx::new(self.p)
            .and_then(|ctx| product_of_factorials(&ctx, &self.factors))
            .is_ok_and(|v| v == self.target)
    }
}

fn product_of_factorials(ctx: &FieldCtx, factors: &[u64]) -> Result<u64> {
    factors
        .iter()
        .try_fold(1, |acc, &n| Ok(ctx.mul(acc, ctx.factorial(n)?)))
}

/// `a = (b-1)! (p-1-b)!` or, failing that, `(b-1)! (p-1-b)! (p-1)!`, with `b = a^-1`.
///
/// The third factor is `1 = 1!` in the first case and `-1 = (p-1)!` in the
/// second, so `factors()[2]` tells which branch fired.
pub fn three_factorial(ctx: &FieldCtx, a: Residue) -> Result<RepresentationCertificate> {
    if a.value() == 0 {
        return Err(Error::Domain("0 is not a product of factorials below p".into()));
    }
    let p = ctx.p();
    let b = ctx.inv(a.value())?;
    let (n1, n2) = (b - 1, p - 1 - b);
    let two = ctx.mul(ctx.factorial(n1)?, ctx.factorial(n2)?);
    let third = if two == a.value() { 1 } else { p - 1 };
    RepresentationCertificate::new(ctx, a, vec![n1, n2, third])
}

fn check_witness_args(ctx: &FieldCtx, y: u64, j: u64) -> Result<()> {
    if y.is_multiple_of(2) {
        return Err(Error::Precondition(format!("y = {y} must be odd")));
    }
    if y.checked_add(j).is_none_or(|s| s >= ctx.p()) {
        return Err(Error::range("y + j", y.saturating_add(j), format!("must be below p = {}", ctx.p())));
    }
    Ok(())
}

/// `(y + j, p - 1 - y)`, unchecked beyond the argument preconditions.
pub fn wilson_witness(ctx: &FieldCtx, y: u64, j: u64) -> Result<(u64, u64)> {
    check_witness_args(ctx, y, j)?;
    Ok((y + j, ctx.p() - 1 - y))
}

/// `(n1, n2)` with `n1! n2! = P_j(y)` for odd `y`, verified.
pub fn wilson_quotient_embed(ctx: &FieldCtx, y: u64, j: u64) -> Result<(u64, u64)> {
    let (n1, n2) = wilson_witness(ctx, y, j)?;
    let lhs = ctx.mul(ctx.factorial(n1)?, ctx.factorial(n2)?);
    let rhs = falling_product_poly(ctx, j)?.eval(ctx, y);
    if lhs != rhs {
        return Err(Error::Inconsistency(format!(
            "{n1}! {n2}! = {lhs} but P_{j}({y}) = {rhs} (mod {})",
            ctx.p()
        )));
    }
    Ok((n1, n2))
}

/// Level sets `S_1, ..., S_k` of products of at most `m` factorials with
/// arguments up to `B`, kept for backtracking.
#[derive(Debug, Clone)]
pub struct ProductReach {
    bound: u64,
    levels: Vec<ResidueSet>,
    /// `(n!)^-1` for `n <= B`.
    inverse_factorials: Vec<u64>,
}

impl ProductReach {
    pub fn new(ctx: &FieldCtx, bound: u64, k: usize, budget: WorkBudget) -> Result<Self> {
        let p = ctx.p();
        if bound >= p {
            return Err(Error::range("B", bound, format!("must be below p = {p}")));
        }
        if !(1..=MAX_FACTORS).contains(&k) {
            return Err(Error::range("k", k as u64, format!("must be in 1..={MAX_FACTORS}")));
        }
        let table = FactorialTable::new(ctx, bound)?;
        let s1 = ResidueSet::from_values(p, table.values().iter().copied())?;
        budget.check((k as u128 - 1) * p as u128 * s1.len() as u128)?;
        let multipliers: Vec<u64> = s1.iter().collect();
        let mut levels = vec![s1];
        while levels.len() < k {
            let last = levels.last().expect("S_1 is present");
            let next = if last.len() == p - 1 {
                last.clone()
            } else {
                multipliers
                    .par_chunks(64)
                    .fold(
                        || BitMarks::new(p),
                        |mut acc, chunk| {
                            acc.union_with(&product_marks(ctx, last, chunk));
                            acc
                        },
                    )
                    .reduce(
                        || BitMarks::new(p),
                        |mut a, b| {
                            a.union_with(&b);
                            a
                        },
                    )
                    .freeze()
            };
            levels.push(next);
        }
        let inverse_factorials = table
            .values()
            .iter()
            .map(|&f| ctx.inv(f))
            .collect::<Result<Vec<u64>>>()?;
        Ok(ProductReach {
            bound,
            levels,
            inverse_factorials,
        })
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn levels(&self) -> &[ResidueSet] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<ResidueSet> {
        self.levels
    }

    /// Backtracks from `S_k`, taking the smallest admissible argument at
    /// each level.
    pub fn represent(&self, ctx: &FieldCtx, a: Residue) -> Result<RepresentationCertificate> {
        let k = self.levels.len();
        let not_found = || Error::NotRepresentable {
            target: a.value(),
            factors: k,
            bound: self.bound,
        };
        if a.value() == 0 {
            return Err(Error::Domain("0 is not a product of factorials below p".into()));
        }
        if !self.levels[k - 1].contains(a.value()) {
            return Err(not_found());
        }
        let mut rest = a.value();
        let mut factors = Vec::with_capacity(k);
        for m in (1..=k).rev() {
            let fits = |v: u64| if m == 1 { v == 1 } else { self.levels[m - 2].contains(v) };
            let (n, next) = self
                .inverse_factorials
                .iter()
                .enumerate()
                .map(|(n, &inv)| (n as u64, ctx.mul(rest, inv)))
                .find(|&(_, v)| fits(v))
                .ok_or_else(|| Error::Inconsistency(format!("level {m} lost track of {rest}")))?;
            factors.push(n);
            rest = next;
        }
        RepresentationCertificate::new(ctx, a, factors)
    }
}

/// `[S_1, ..., S_k]`; `S_1 = {n! : n <= B}` and `S_{m+1} = S_m S_1`.
pub fn bounded_product_reach(ctx: &FieldCtx, bound: u64, k: usize, budget: WorkBudget) -> Result<Vec<ResidueSet>> {
    Ok(ProductReach::new(ctx, bound, k, budget)?.into_levels())
}

/// A certificate with at most `k` factorials of arguments `<= B`.
pub fn find_representation(ctx: &FieldCtx, a: Residue, k: usize, bound: u64) -> Result<RepresentationCertificate> {
    if a.value() == 0 {
        return Err(Error::Domain("0 is not a product of factorials below p".into()));
    }
    ProductReach::new(ctx, bound, k, WorkBudget::default())?.represent(ctx, a)
}

/// `ceil(p^(6/7 + 0.05))`, capped at `p - 1`.
pub fn seven_factor_bound(p: u64) -> u64 {
    ((p as f64).powf(6.0 / 7.0 + 0.05).ceil() as u64).min(p - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::primes_between;

    fn ctx(p: u64) -> FieldCtx {
        FieldCtx::new(p).unwrap()
    }

    fn res(ctx: &FieldCtx, v: u64) -> Residue {
        ctx.residue(v).unwrap()
    }

    #[test]
    fn three_factorial_examples() {
        let c = ctx(7);
        assert_eq!(three_factorial(&c, res(&c, 2)).unwrap().factors(), &[3, 2, 6]);
        assert!(three_factorial(&c, res(&c, 1)).unwrap().verify());
        assert!(matches!(three_factorial(&c, res(&c, 0)), Err(Error::Domain(_))));
        let c = ctx(11);
        for a in 1..11 {
            let cert = three_factorial(&c, res(&c, a)).unwrap();
            assert_eq!(cert.target(), a);
            assert!(cert.verify());
        }
    }

    #[test]
    fn three_factorial_small_primes_exhaustive() {
        for p in primes_between(3, 500) {
            let c = ctx(p);
            for a in 1..p {
                assert!(three_factorial(&c, res(&c, a)).unwrap().verify(), "p = {p}, a = {a}");
            }
        }
    }

    #[test]
    fn certificate_rejects_wrong_product() {
        let c = ctx(7);
        assert!(matches!(
            RepresentationCertificate::new(&c, res(&c, 3), vec![3]),
            Err(Error::Inconsistency(_))
        ));
        assert!(RepresentationCertificate::new(&c, res(&c, 1), vec![0; 8]).is_err());
    }

    #[test]
    fn embed_examples() {
        let c = ctx(11);
        assert_eq!(wilson_quotient_embed(&c, 3, 2).unwrap(), (5, 7));
        assert_eq!(wilson_quotient_embed(&c, 5, 0).unwrap(), (5, 5));
        assert!(matches!(wilson_quotient_embed(&c, 4, 2), Err(Error::Precondition(_))));
        assert!(wilson_quotient_embed(&c, 9, 2).is_err());
        let c = ctx(1009);
        for y in (1..200).step_by(2) {
            for j in 0..=7 {
                wilson_quotient_embed(&c, y, j).unwrap();
            }
        }
    }

    #[test]
    fn reach_examples() {
        let c = ctx(7);
        let levels = bounded_product_reach(&c, 3, 3, WorkBudget::default()).unwrap();
        assert_eq!(levels[0].iter().collect::<Vec<_>>(), [1, 2, 6]);
        assert_eq!(levels[1].iter().collect::<Vec<_>>(), [1, 2, 4, 5, 6]);
        assert_eq!(levels[2].iter().collect::<Vec<_>>(), [1, 2, 3, 4, 5, 6]);
        for s in bounded_product_reach(&c, 0, 4, WorkBudget::default()).unwrap() {
            assert_eq!(s.iter().collect::<Vec<_>>(), [1]);
        }
        assert!(bounded_product_reach(&c, 7, 2, WorkBudget::default()).is_err());
        assert!(bounded_product_reach(&c, 3, 8, WorkBudget::default()).is_err());
        assert!(matches!(
            bounded_product_reach(&ctx(10007), 5000, 7, WorkBudget(1000)),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn find_representation_examples() {
        let c = ctx(7);
        assert_eq!(find_representation(&c, res(&c, 3), 3, 3).unwrap().factors(), &[2, 2, 3]);
        assert!(matches!(
            find_representation(&c, res(&c, 3), 2, 3),
            Err(Error::NotRepresentable { .. })
        ));
        assert_eq!(find_representation(&c, res(&c, 1), 5, 0).unwrap().factors(), &[0; 5]);
        assert!(matches!(find_representation(&c, res(&c, 0), 3, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn levels_are_nested_and_match_enumeration() {
        let c = ctx(101);
        let bound = 12;
        let levels = bounded_product_reach(&c, bound, 3, WorkBudget::default()).unwrap();
        for w in levels.windows(2) {
            assert!(w[0].is_subset(&w[1]));
        }
        let facts: Vec<u64> = (0..=bound).map(|n| c.factorial(n).unwrap()).collect();
        let mut brute = std::collections::BTreeSet::new();
        for &x in &facts {
            for &y in &facts {
                for &z in &facts {
                    brute.insert(c.mul(c.mul(x, y), z));
                }
            }
        }
        assert_eq!(levels[2].iter().collect::<std::collections::BTreeSet<_>>(), brute);
        let reach = ProductReach::new(&c, bound, 3, WorkBudget::default()).unwrap();
        for a in levels[2].iter() {
            let cert = reach.represent(&c, res(&c, a)).unwrap();
            assert!(cert.verify() && cert.bound() <= bound);
        }
    }
}
