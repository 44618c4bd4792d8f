//! Local-factor machinery and correlation estimators.
//!
//! This module classifies primes as good/bad/terrible with respect to a
//! polynomial family, computes exact local densities c_p over F_p^D,
//! evaluates Euler factors E_p against the explicit model E_p', and
//! provides seeded Monte-Carlo estimators for the two averaged
//! correlation conditions used by the rest of the crate.

mod estimators;
mod euler;
pub mod fp;

pub use estimators::{
    extra_condition_estimate, forms_condition_estimate, EstimateReport, DEFAULT_INNER_SAMPLES,
};
pub use euler::{
    check_prime_class_claims, euler_factor_exact, euler_factor_model, EulerFactorPair,
    PrimeClassClaimsReport, PrimeClassRow, ResidueFamily,
};

use num_rational::Rational64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyalg::Poly;
use fp::FpPoly;

/// Hard ceiling on the number of variables the F_p gcd machinery accepts.
const MAX_CLASSIFY_VARS: usize = 4;
/// Hard ceiling on total degree per polynomial for classification.
const MAX_CLASSIFY_DEGREE: u32 = 8;
/// Enumeration budget for exact local factors: p^D may not exceed this.
const LOCAL_FACTOR_BUDGET: u64 = 100_000_000;

/// Good/bad/terrible flags for one prime with respect to a family.
///
/// `bad` is the complement of `good`; `terrible` (some member vanishes
/// identically mod p) is reported independently rather than folded into
/// the other two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimeClassFlags {
    pub good: bool,
    pub bad: bool,
    pub terrible: bool,
}

/// Exact local density of common zeros together with the class flags.
#[derive(Debug, Clone, Serialize)]
pub struct LocalFactorReport {
    pub p: u64,
    pub c_p_numerator: i64,
    pub c_p_denominator: i64,
    pub c_p: f64,
    pub good: bool,
    pub bad: bool,
    pub terrible: bool,
}

fn family_dimension(family: &[Poly]) -> usize {
    family.iter().map(|p| p.num_vars()).max().unwrap_or(0)
}

fn check_classify_limits(family: &[Poly]) -> Result<()> {
    let dim = family_dimension(family);
    if dim > MAX_CLASSIFY_VARS {
        return Err(Error::Resource(format!(
            "family uses {} variables; classification is limited to {}",
            dim, MAX_CLASSIFY_VARS
        )));
    }
    for poly in family {
        if poly.total_degree() > MAX_CLASSIFY_DEGREE {
            return Err(Error::Resource(format!(
                "polynomial {} has total degree {}; classification is limited to degree {}",
                poly.render_pet(),
                poly.total_degree(),
                MAX_CLASSIFY_DEGREE
            )));
        }
    }
    Ok(())
}

/// Classifies `p` with respect to `family`.
///
/// Good means: the reductions mod p are pairwise coprime, and each member
/// is linear in some variable x_i, P = P_1 x_i + P_0 with P_1 non-zero
/// and coprime to P_0. Terrible means some member reduces to the zero
/// polynomial. Bad is simply not good.
pub fn classify_prime(p: u64, family: &[Poly]) -> Result<PrimeClassFlags> {
    check_classify_limits(family)?;
    let reduced: Vec<FpPoly> = family.iter().map(|q| FpPoly::from_poly(q, p)).collect();

    let terrible = reduced.iter().any(|f| f.is_zero());

    let mut good = true;
    'outer: for (i, a) in reduced.iter().enumerate() {
        for b in reduced.iter().skip(i + 1) {
            if !fp::coprime(a, b)? {
                good = false;
                break 'outer;
            }
        }
    }
    if good {
        for f in &reduced {
            if !linear_in_some_variable(f)? {
                good = false;
                break;
            }
        }
    }

    Ok(PrimeClassFlags {
        good,
        bad: !good,
        terrible,
    })
}

/// The second Definition-style bullet: P = P_1 x_i + P_0 with P_1 != 0
/// and gcd(P_1, P_0) a unit, for some variable x_i.
fn linear_in_some_variable(f: &FpPoly) -> Result<bool> {
    if f.is_zero() {
        return Ok(false);
    }
    let vars = f.main_var().map(|v| v + 1).unwrap_or(0);
    for var in 0..vars {
        if f.degree_in(var) != 1 {
            continue;
        }
        let p1 = f.coeff_of(var, 1);
        let p0 = f.coeff_of(var, 0);
        if !p1.is_zero() && fp::coprime(&p1, &p0)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Exact local density c_p = #{y in F_p^D : all P_j(y) = 0} / p^D.
///
/// D is the number of variables spanned by the family; the value is
/// invariant under padding with unused variables. The empty family gives 1.
pub fn local_factor(p: u64, family: &[Poly]) -> Result<Rational64> {
    if family.is_empty() {
        return Ok(Rational64::from_integer(1));
    }
    let dim = family_dimension(family).max(1);
    let mut budget: u64 = 1;
    for _ in 0..dim {
        budget = budget.saturating_mul(p);
        if budget > LOCAL_FACTOR_BUDGET {
            return Err(Error::Resource(format!(
                "local factor enumeration needs p^D = {}^{} > {} points",
                p, dim, LOCAL_FACTOR_BUDGET
            )));
        }
    }
    let reduced: Vec<FpPoly> = family.iter().map(|q| FpPoly::from_poly(q, p)).collect();

    let count: u64 = (0..p)
        .into_par_iter()
        .map(|first| {
            let mut point = vec![0u64; dim];
            point[0] = first;
            count_zeros_from(&reduced, &mut point, 1, p)
        })
        .sum();

    let total = budget as i64;
    Ok(Rational64::new(count as i64, total))
}

fn count_zeros_from(family: &[FpPoly], point: &mut Vec<u64>, next: usize, p: u64) -> u64 {
    if next == point.len() {
        let all_zero = family.iter().all(|f| f.eval(point) == 0);
        return u64::from(all_zero);
    }
    let mut acc = 0;
    for v in 0..p {
        point[next] = v;
        acc += count_zeros_from(family, point, next + 1, p);
    }
    acc
}

/// Convenience wrapper combining [`local_factor`] and [`classify_prime`].
pub fn local_factor_report(p: u64, family: &[Poly]) -> Result<LocalFactorReport> {
    let flags = classify_prime(p, family)?;
    let c_p = local_factor(p, family)?;
    Ok(LocalFactorReport {
        p,
        c_p_numerator: *c_p.numer(),
        c_p_denominator: *c_p.denom(),
        c_p: c_p.to_f64().unwrap_or(f64::NAN),
        good: flags.good,
        bad: flags.bad,
        terrible: flags.terrible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::parse_system;

    const VARS: [&str; 4] = ["x1", "x2", "x3", "x4"];

    fn fam(text: &str) -> Vec<Poly> {
        parse_system(text, &VARS).unwrap()
    }

    #[test]
    fn terrible_prime() {
        let flags = classify_prime(5, &fam("5*x1")).unwrap();
        assert!(flags.terrible);
        assert!(!flags.good);
        assert!(flags.bad);
    }

    #[test]
    fn good_family_of_shifted_squares() {
        // {x + m^2, x' + m^2} over (x, x', m): pairwise coprime and linear
        // in x resp. x'.
        let family = fam("x1+x3^2; x2+x3^2");
        let flags = classify_prime(5, &family).unwrap();
        assert!(flags.good);
        assert!(!flags.bad);
        assert!(!flags.terrible);
    }

    #[test]
    fn congruent_pair_is_bad_not_terrible() {
        let family = fam("x1+x3^2; x1+x3^2+5");
        let flags = classify_prime(5, &family).unwrap();
        assert!(!flags.good);
        assert!(flags.bad);
        assert!(!flags.terrible);
        // The same pair is good at a prime that separates the constants.
        assert!(classify_prime(7, &family).unwrap().good);
    }

    #[test]
    fn product_term_fails_linearity() {
        // x1*x2 = x2 * x1 + 0: the cofactor pair (x2, 0) is not coprime.
        let flags = classify_prime(7, &fam("x1*x2")).unwrap();
        assert!(!flags.good);
        // 2*x1 = 2 * x1 + 0 with gcd(2, 0) = unit: good.
        assert!(classify_prime(7, &fam("2*x1")).unwrap().good);
    }

    #[test]
    fn classification_respects_limits() {
        let four_vars = parse_system("x1+x2+x3+x4", &VARS).unwrap();
        assert!(classify_prime(5, &four_vars).is_ok());
        let too_deep = fam("x1^9");
        assert!(matches!(
            classify_prime(5, &too_deep),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn local_factor_examples() {
        assert_eq!(local_factor(5, &fam("x1")).unwrap(), Rational64::new(1, 5));
        // y^2 + 1 has roots 2 and 3 mod 5.
        assert_eq!(
            local_factor(5, &fam("x1^2+1")).unwrap(),
            Rational64::new(2, 5)
        );
        assert_eq!(local_factor(5, &[]).unwrap(), Rational64::from_integer(1));
        // Zero polynomial constrains nothing.
        assert_eq!(
            local_factor(5, &fam("5*x1")).unwrap(),
            Rational64::from_integer(1)
        );
    }

    #[test]
    fn local_factor_matches_direct_enumeration() {
        // Independent dense double-loop oracle over small two-variable
        // families and primes up to 13.
        let families = [
            fam("x1+x2^2; x1+1"),
            fam("x1*x2+3"),
            fam("x1^2+x2^2"),
            fam("2*x1+1; x2"),
        ];
        for p in [2u64, 3, 5, 7, 11, 13] {
            for family in &families {
                let got = local_factor(p, family).unwrap();
                let mut count = 0i64;
                for a in 0..p {
                    for b in 0..p {
                        let ok = family.iter().all(|q| {
                            let v = q.eval_bigint(&[a.into(), b.into()]);
                            num_integer::Integer::mod_floor(&v, &num_bigint::BigInt::from(p))
                                == num_bigint::BigInt::from(0u32)
                        });
                        count += i64::from(ok);
                    }
                }
                assert_eq!(got, Rational64::new(count, (p * p) as i64), "p={}", p);
            }
        }
    }

    #[test]
    fn local_factor_budget() {
        let family = fam("x1+x2+x3+x4");
        assert!(matches!(
            local_factor(101, &family),
            Err(Error::Resource(_))
        ));
        // 13^4 = 28561 is comfortably inside the budget.
        assert!(local_factor(13, &family).is_ok());
    }

    #[test]
    fn denominator_divides_p_pow_d() {
        for p in [3u64, 5, 7] {
            let family = fam("x1+x2; x1");
            let c = local_factor(p, &family).unwrap();
            assert!(((p * p) as i64) % c.denom() == 0);
            assert!(*c.numer() >= 0 && c <= Rational64::from_integer(1));
        }
    }
}
