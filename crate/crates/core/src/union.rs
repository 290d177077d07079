//! Union lower bound for families with small pairwise intersections, the
//! binomial ceiling relating `|A|` and `|AA|`, and the parameter calculators
//! for the `|A(p)A(p)|` and `|A_N / A_N|` lower bounds.
//!
//! Logarithms are natural throughout.

use serde::Serialize;

use crate::census::ResidueSet;
use crate::error::{Error, Result};
use crate::field::is_prime;

/// `a` = smallest member, `b` = largest pairwise intersection, `n` = family size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UnionFamilyStats {
    pub a: u64,
    pub b: u64,
    pub n: u64,
}

impl UnionFamilyStats {
    pub fn new(a: u64, b: u64, n: u64) -> Result<Self> {
        if b == 0 || a < b {
            return Err(Error::Precondition(format!("need a >= b >= 1, got a = {a}, b = {b}")));
        }
        if n < 2 {
            return Err(Error::Precondition(format!("need at least two sets, got {n}")));
        }
        Ok(UnionFamilyStats { a, b, n })
    }
}

/// `(a^2 / b)(1 - a / (n b))`. Negative values are vacuous but returned as is.
pub fn union_lower_bound(stats: UnionFamilyStats) -> f64 {
    let (a, b, n) = (stats.a as f64, stats.b as f64, stats.n as f64);
    a * a / b * (1.0 - a / (n * b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyReport {
    pub a: u64,
    pub b: u64,
    pub n: u64,
    pub union: u64,
    /// `None` when `a >= b >= 1` fails and the bound does not apply.
    pub bound: Option<f64>,
}

impl FamilyReport {
    pub fn applicable(&self) -> bool {
        self.bound.is_some()
    }

    /// The union meets the bound (vacuously true when inapplicable).
    pub fn holds(&self) -> bool {
        self.bound.is_none_or(|bound| self.union as f64 >= bound)
    }
}

/// Measures `a`, `b`, the bound and the true union of a family of sets.
pub fn verify_family(sets: &[ResidueSet]) -> Result<FamilyReport> {
    if sets.len() < 2 {
        return Err(Error::Precondition("a family needs at least two sets".into()));
    }
    if sets.iter().any(ResidueSet::is_empty) {
        return Err(Error::Precondition("family members must be nonempty".into()));
    }
    let a = sets.iter().map(ResidueSet::len).min().unwrap_or(0);
    let mut b = 0;
    for (i, s) in sets.iter().enumerate() {
        for t in &sets[i + 1..] {
            b = b.max(s.intersection_len(t));
        }
    }
    let n = sets.len() as u64;
    let union = ResidueSet::union_of(sets)?.len();
    let bound = UnionFamilyStats::new(a, b, n).ok().map(union_lower_bound);
    Ok(FamilyReport { a, b, n, union, bound })
}

/// Smallest `m` with `m (m+1) / 2 >= product_card`: a floor for `|A|` given `|AA|`.
pub fn binomial_link(product_card: u64) -> u64 {
    if product_card == 0 {
        return 0;
    }
    let target = product_card as u128;
    let guess = ((((8 * target + 1) as f64).sqrt() - 1.0) / 2.0).floor() as u128;
    let mut m = guess.saturating_sub(2);
    while m * (m + 1) / 2 < target {
        m += 1;
    }
    m as u64
}

/// Exponents for the `|A(p)A(p)|` argument at a given `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub kappa: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
}

impl Exponents {
    /// `eps1 = 1/14 - 4 kappa / 7`, `eps2 = 1/7 - kappa / 7`, `delta = 1/14 - 4 kappa / 7`.
    pub fn optimal(kappa: f64) -> Self {
        Exponents {
            kappa,
            eps1: 1.0 / 14.0 - 4.0 * kappa / 7.0,
            eps2: 1.0 / 7.0 - kappa / 7.0,
            delta: 1.0 / 14.0 - 4.0 * kappa / 7.0,
        }
    }

    /// The three constraints on `delta`, as right-hand sides.
    pub fn constraint_values(&self) -> [f64; 3] {
        [
            self.eps1,
            0.5 - 2.0 * self.eps1 - 2.0 * self.eps2 - 2.0 * self.kappa,
            self.eps2 - self.eps1 - self.kappa,
        ]
    }

    pub fn constraints_hold(&self, tol: f64) -> bool {
        self.constraint_values().iter().all(|&c| self.delta <= c + tol)
    }
}

/// Exponent parameters and family size at a concrete prime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremParams {
    pub p: u64,
    pub exponents: Exponents,
    /// `floor(p^(1 - eps1))`
    pub n: u64,
    /// `floor(p^eps2)`
    pub m: u64,
}

/// `kappa = ln ln p / ln p`.
pub fn kappa(p: u64) -> f64 {
    let l = (p as f64).ln();
    l.ln() / l
}

pub fn theorem1_params(p: u64) -> Result<TheoremParams> {
    if p < 17 {
        return Err(Error::range("p", p, "must be at least 17"));
    }
    if !is_prime(p) {
        return Err(Error::InvalidModulus(p));
    }
    let exponents = Exponents::optimal(kappa(p));
    if exponents.delta <= 0.0 {
        return Err(Error::range(
            "p",
            p,
            format!(
                "too small for a positive delta (kappa = {:.4}, delta = {:.4}); needs kappa < 1/8",
                exponents.kappa, exponents.delta
            ),
        ));
    }
    if !exponents.constraints_hold(1e-12) {
        return Err(Error::Inconsistency("optimal exponents violate their own constraints".into()));
    }
    let pf = p as f64;
    Ok(TheoremParams {
        p,
        exponents,
        n: pf.powf(1.0 - exponents.eps1).floor() as u64,
        m: pf.powf(exponents.eps2).floor() as u64,
    })
}

/// Constants `c, c1, ..., c5` of the short-interval bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeConstants {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl Default for RegimeConstants {
    fn default() -> Self {
        RegimeConstants {
            c: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            c5: 1.0,
        }
    }
}

impl RegimeConstants {
    /// From a list `[c, c1, c2, c3, c4, c5]`; missing entries default to 1.
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() > 6 {
            return Err(Error::Precondition(format!("expected at most 6 constants, got {}", values.len())));
        }
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Precondition("constants must be positive and finite".into()));
        }
        let get = |i: usize| values.get(i).copied().unwrap_or(1.0);
        Ok(RegimeConstants {
            c: get(0),
            c1: get(1),
            c2: get(2),
            c3: get(3),
            c4: get(4),
            c5: get(5),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Recommendation {
    /// Number of odd primes to use.
    R(f64),
    /// Cut-off for the indices `j`.
    M(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeBound {
    /// 1 to 5, from the largest `N` down.
    pub regime: u8,
    /// Lower-bound main term (`p` in regimes 1 and 2).
    pub main_term: f64,
    /// Size of the error term in regimes 1 and 2.
    pub error_term: Option<f64>,
    pub recommended: Option<Recommendation>,
    pub k: f64,
    pub q: f64,
}

/// Lower regime boundaries `[T1, T2, T3, T4, T5]` at `p`.
pub fn regime_thresholds(p: u64, consts: &RegimeConstants) -> [f64; 5] {
    let pf = p as f64;
    let l = pf.ln();
    [
        consts.c1 * pf.powf(13.0 / 14.0) * l.powf(4.0 / 7.0),
        consts.c2 * pf.powf(7.0 / 8.0) * l,
        consts.c3 * pf.powf(0.8) * l.powf(1.6),
        consts.c4 * pf.powf(0.8) * l.powf(0.8),
        consts.c5 * pf.sqrt() * l * l,
    ]
}

/// Classifies `N` into the five regimes of the short-interval bound and
/// evaluates the matching bound.
///
/// Regimes are tried from the top, so at small `p`, where the boundaries are
/// not yet ordered, `N` lands in the first regime whose lower boundary it
/// clears.
pub fn theorem2_bound(p: u64, n: u64, consts: &RegimeConstants) -> Result<RegimeBound> {
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidModulus(p));
    }
    let thresholds = regime_thresholds(p, consts);
    let nf = n as f64;
    if n > p || nf < thresholds[4] {
        return Err(Error::range(
            "N",
            n,
            format!("must satisfy c5 sqrt(p) (ln p)^2 = {:.1} <= N <= p = {p}", thresholds[4]),
        ));
    }
    let pf = p as f64;
    let l = pf.ln();
    let k = pf / nf;
    let q = nf / (pf.sqrt() * l * l);
    let regime = thresholds.iter().position(|&t| nf >= t).expect("N clears T5") as u8 + 1;
    let m_choice = k.sqrt().min(q.cbrt());
    let (main_term, error_term, recommended) = match regime {
        1 => (pf, Some(pf.powf(13.0 / 14.0) * l.powf(4.0 / 7.0)), None),
        2 => (pf, Some(pf.powf(5.0 / 6.0) * k.powf(4.0 / 3.0) * l.powf(4.0 / 3.0)), None),
        3 => {
            let r = q.cbrt() * q.ln().powf(-2.0 / 3.0);
            (consts.c * nf * r, None, Some(Recommendation::R(r)))
        }
        4 => (consts.c * nf * k.sqrt(), None, Some(Recommendation::M(m_choice))),
        _ => (consts.c * nf * q.cbrt(), None, Some(Recommendation::M(m_choice))),
    };
    Ok(RegimeBound {
        regime,
        main_term,
        error_term,
        recommended,
        k,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_bound_examples() {
        let f = |a, b, n| union_lower_bound(UnionFamilyStats::new(a, b, n).unwrap());
        assert_eq!(f(10, 10, 2), 5.0);
        assert_eq!(f(10, 1, 100), 90.0);
        assert_eq!(f(10, 1, 5), -100.0);
        assert!(UnionFamilyStats::new(1, 2, 3).is_err());
        assert!(UnionFamilyStats::new(3, 0, 3).is_err());
        assert!(UnionFamilyStats::new(3, 1, 1).is_err());
    }

    #[test]
    fn verify_family_examples() {
        let s = ResidueSet::from_values(101, 0..10).unwrap();
        let r = verify_family(&[s.clone(), s]).unwrap();
        assert_eq!((r.a, r.b, r.union), (10, 10, 10));
        assert_eq!(r.bound, Some(5.0));
        assert!(r.holds());

        let singles: Vec<_> = (0..100).map(|v| ResidueSet::from_values(101, [v]).unwrap()).collect();
        let r = verify_family(&singles).unwrap();
        assert_eq!(r.b, 0);
        assert!(!r.applicable());
        assert!(r.holds());
        assert!(verify_family(&singles[..1]).is_err());
    }

    #[test]
    fn binomial_link_examples() {
        assert_eq!(binomial_link(1), 1);
        assert_eq!(binomial_link(11), 5);
        assert_eq!(binomial_link(10007), 141);
        assert_eq!(binomial_link(10), 4);
        for m in 1..=10_000u64 {
            assert_eq!(binomial_link(m * (m + 1) / 2), m);
        }
    }

    #[test]
    fn small_primes_have_no_positive_delta() {
        assert!(matches!(theorem1_params(10007), Err(Error::OutOfRange { .. })));
        assert!(matches!(theorem1_params(1_000_003), Err(Error::OutOfRange { .. })));
        assert!(theorem1_params(13).is_err());
        // the exponents still meet all three constraints, with equality
        let e = Exponents::optimal(kappa(1_000_003));
        for c in e.constraint_values() {
            assert!((c - e.delta).abs() < 1e-12);
        }
    }

    #[test]
    fn exponent_limits_and_large_p() {
        let e = Exponents::optimal(0.0);
        assert_eq!((e.eps1, e.eps2, e.delta), (1.0 / 14.0, 1.0 / 7.0, 1.0 / 14.0));
        assert!(e.constraints_hold(0.0));
        let p = 9_223_372_036_854_775_783;
        let t = theorem1_params(p).unwrap();
        assert!(t.exponents.delta > 0.0);
        assert!(t.exponents.constraints_hold(1e-12));
        assert!(t.n < p && t.m >= 2);
    }

    #[test]
    fn theorem2_boundaries() {
        let ones = RegimeConstants::default();
        let p = 2_305_843_009_213_693_951; // 2^61 - 1
        assert_eq!(theorem2_bound(p, p, &ones).unwrap().regime, 1);
        let t5 = regime_thresholds(p, &ones)[4];
        let just_above = theorem2_bound(p, t5.ceil() as u64 + 1, &ones).unwrap();
        assert_eq!(just_above.regime, 5);
        let n = t5.ceil() + 1.0;
        let expected = n * just_above.q.cbrt();
        assert!((just_above.main_term - expected).abs() <= 1e-9 * expected);
        assert!(theorem2_bound(p, t5.floor() as u64 - 1, &ones).is_err());
        assert!(theorem2_bound(101, 102, &ones).is_err());
        assert!(matches!(theorem2_bound(1_000_001, 1000, &ones), Err(Error::InvalidModulus(_))));
        assert!(matches!(theorem1_params(1_000_000_000_041), Err(Error::InvalidModulus(_))));
        assert!(RegimeConstants::from_slice(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn regimes_at_a_million() {
        let p = 1_000_003u64;
        let n = 100_000u64;
        // with every constant 1 the bottom boundary is about 1.9e5 > N
        assert!(matches!(
            theorem2_bound(p, n, &RegimeConstants::default()),
            Err(Error::OutOfRange { .. })
        ));
        let consts = RegimeConstants::from_slice(&[1.0, 1.0, 1.0, 1.0, 1.0, 0.5]).unwrap();
        let r = theorem2_bound(p, n, &consts).unwrap();
        let l = (p as f64).ln();
        let q = n as f64 / ((p as f64).sqrt() * l * l);
        assert_eq!(r.regime, 5);
        assert!((r.q - q).abs() < 1e-12);
        assert!((r.main_term - n as f64 * q.cbrt()).abs() < 1e-6);
        assert_eq!(r.recommended, Some(Recommendation::M((p as f64 / n as f64).sqrt().min(q.cbrt()))));
        // below p^(4/5) (ln p)^(4/5) nothing above regime 4 applies, even at N = p
        assert_eq!(theorem2_bound(p, p, &RegimeConstants::default()).unwrap().regime, 4);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn bound(a: u64, b: u64, n: u64) -> f64 {
        union_lower_bound(UnionFamilyStats::new(a, b, n).unwrap())
    }

    proptest! {
        #[test]
        fn nondecreasing_in_n(b in 1u64..200, extra in 0u64..500, n in 2u64..500) {
            let a = b + extra;
            prop_assert!(bound(a, b, n + 1) >= bound(a, b, n));
        }

        // d/da of a^2/b - a^3/(n b^2) is nonnegative up to a = 2nb/3.
        #[test]
        fn nondecreasing_in_a_below_two_thirds(b in 1u64..200, n in 2u64..200, t in 0.0f64..1.0) {
            let top = 2 * n * b / 3 - 1;
            prop_assume!(top >= b);
            let a = b + (t * (top - b) as f64) as u64;
            prop_assert!(bound(a + 1, b, n) >= bound(a, b, n));
        }

        #[test]
        fn binomial_link_is_minimal(card in 1u64..1_000_000_000_000) {
            let m = binomial_link(card) as u128;
            prop_assert!(m * (m + 1) / 2 >= card as u128);
            prop_assert!((m - 1) * m / 2 < card as u128);
        }

        #[test]
        fn regimes_follow_thresholds(n_frac in 0.0f64..1.0) {
            let p = 2_305_843_009_213_693_951u64;
            let ones = RegimeConstants::default();
            let t = regime_thresholds(p, &ones);
            let lo = t[4].ceil();
            let n = (lo + n_frac * (p as f64 - lo)) as u64;
            let r = theorem2_bound(p, n, &ones).unwrap();
            let expected = t.iter().position(|&x| n as f64 >= x).unwrap() as u8 + 1;
            prop_assert_eq!(r.regime, expected);
            prop_assert!(r.main_term > 0.0);
        }
    }

    #[test]
    fn not_monotone_in_a_near_nb() {
        // past 2nb/3 the bound falls again
        assert!(bound(3, 1, 3) < bound(2, 1, 3));
    }
}
