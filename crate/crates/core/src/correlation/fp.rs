//! Multivariate polynomial arithmetic over F_p: reduction of integer
//! polynomials, exact division, content/primitive-part decomposition, and
//! a primitive pseudo-remainder-sequence gcd.
//!
//! Everything here works on tiny inputs (a handful of variables, total
//! degree a few units), so exactness is preferred over asymptotics
//! throughout.

use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::polyalg::{Monomial, Poly};

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// A polynomial over F_p in the shared monomial representation: terms
/// sorted leading-first, coefficients in [1, p-1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpPoly {
    p: u64,
    terms: Vec<(Monomial, u64)>,
}

impl FpPoly {
    pub fn zero(p: u64) -> Self {
        FpPoly {
            p,
            terms: Vec::new(),
        }
    }

    pub fn constant(p: u64, c: u64) -> Self {
        let c = c % p;
        if c == 0 {
            FpPoly::zero(p)
        } else {
            FpPoly {
                p,
                terms: vec![(Monomial::unit(), c)],
            }
        }
    }

    pub fn from_poly(poly: &Poly, p: u64) -> Self {
        let mut terms: Vec<(Monomial, u64)> = Vec::new();
        for (mono, coeff) in poly.terms() {
            let c = coeff.mod_floor(&num_bigint::BigInt::from(p));
            let c = c.to_u64().expect("reduced coefficient fits u64");
            if c != 0 {
                terms.push((mono.clone(), c));
            }
        }
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        FpPoly { p, terms }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() <= 1 && self.terms.iter().all(|(m, _)| m.is_unit())
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(m, _)| m.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms
            .iter()
            .map(|(m, _)| m.exp(var))
            .max()
            .unwrap_or(0)
    }

    /// Largest variable index occurring with positive degree, if any.
    pub fn main_var(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|(m, _)| {
                m.exps()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, _)| i)
            })
            .max()
    }

    /// Coefficient of var^e as a polynomial in the remaining variables.
    pub fn coeff_of(&self, var: usize, e: u32) -> FpPoly {
        let mut terms: Vec<(Monomial, u64)> = self
            .terms
            .iter()
            .filter(|(m, _)| m.exp(var) == e)
            .map(|(m, c)| {
                let mut exps = m.exps().to_vec();
                if var < exps.len() {
                    exps[var] = 0;
                }
                (Monomial::new(exps), *c)
            })
            .collect();
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        FpPoly { p: self.p, terms }
    }

    fn from_sorted(p: u64, mut terms: Vec<(Monomial, u64)>) -> FpPoly {
        terms.retain(|(_, c)| *c % p != 0);
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        FpPoly { p, terms }
    }

    pub fn add(&self, other: &FpPoly) -> FpPoly {
        let p = self.p;
        let mut map: std::collections::BTreeMap<Monomial, u64> = std::collections::BTreeMap::new();
        for (m, c) in self.terms.iter().chain(other.terms.iter()) {
            let e = map.entry(m.clone()).or_insert(0);
            *e = (*e + c) % p;
        }
        FpPoly::from_sorted(p, map.into_iter().collect())
    }

    pub fn neg(&self) -> FpPoly {
        FpPoly {
            p: self.p,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), self.p - c))
                .collect(),
        }
    }

    pub fn sub(&self, other: &FpPoly) -> FpPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &FpPoly) -> FpPoly {
        let p = self.p;
        let mut map: std::collections::BTreeMap<Monomial, u64> = std::collections::BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mono = monomial_mul(ma, mb);
                let e = map.entry(mono).or_insert(0);
                *e = (*e + mul_mod(*ca, *cb, p)) % p;
            }
        }
        FpPoly::from_sorted(p, map.into_iter().collect())
    }

    pub fn scale(&self, c: u64) -> FpPoly {
        let c = c % self.p;
        if c == 0 {
            return FpPoly::zero(self.p);
        }
        FpPoly {
            p: self.p,
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), mul_mod(*k, c, self.p)))
                .collect(),
        }
    }

    fn mul_monomial(&self, mono: &Monomial) -> FpPoly {
        FpPoly {
            p: self.p,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (monomial_mul(m, mono), *c))
                .collect(),
        }
    }

    /// Scales so the graded-lex leading coefficient is 1.
    pub fn monic(&self) -> FpPoly {
        match self.terms.first() {
            None => self.clone(),
            Some((_, lead)) => self.scale(inv_mod(*lead, self.p)),
        }
    }

    pub fn eval(&self, point: &[u64]) -> u64 {
        let p = self.p;
        let mut acc = 0u64;
        for (m, c) in &self.terms {
            let mut term = *c;
            for (i, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    let x = point.get(i).copied().unwrap_or(0);
                    term = mul_mod(term, pow_mod(x, e as u64, p), p);
                }
            }
            acc = (acc + term) % p;
        }
        acc
    }
}

fn monomial_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let len = a.exps().len().max(b.exps().len());
    Monomial::new((0..len).map(|i| a.exp(i) + b.exp(i)).collect())
}

/// Exact division: returns a/b, or an internal error if b does not divide
/// a (callers only divide by known factors).
pub fn exact_div(a: &FpPoly, b: &FpPoly) -> Result<FpPoly> {
    if b.is_zero() {
        return Err(Error::Internal("division by the zero polynomial".into()));
    }
    let p = a.p;
    let (lead_b, lead_bc) = b.terms[0].clone();
    let inv_lead = inv_mod(lead_bc, p);
    let mut rem = a.clone();
    let mut quot: Vec<(Monomial, u64)> = Vec::new();
    while !rem.is_zero() {
        let (lead_r, lead_rc) = rem.terms[0].clone();
        let mono = match monomial_div(&lead_r, &lead_b) {
            Some(m) => m,
            None => {
                return Err(Error::Internal(format!(
                    "inexact polynomial division (leading monomial mismatch) mod {}",
                    p
                )))
            }
        };
        let c = mul_mod(lead_rc, inv_lead, p);
        quot.push((mono.clone(), c));
        rem = rem.sub(&b.mul_monomial(&mono).scale(c));
    }
    Ok(FpPoly::from_sorted(p, quot))
}

fn monomial_div(a: &Monomial, b: &Monomial) -> Option<Monomial> {
    let len = a.exps().len().max(b.exps().len());
    let mut exps = Vec::with_capacity(len);
    for i in 0..len {
        let (ea, eb) = (a.exp(i), b.exp(i));
        if ea < eb {
            return None;
        }
        exps.push(ea - eb);
    }
    Some(Monomial::new(exps))
}

/// Pseudo-remainder of a by b with respect to `var`: repeatedly cancels
/// the leading var-power of a using b, scaling by b's leading coefficient.
/// The result is an associate of the true remainder, which is all the
/// primitive PRS needs.
fn pseudo_rem(a: &FpPoly, b: &FpPoly, var: usize) -> FpPoly {
    let db = b.degree_in(var);
    let lb = b.coeff_of(var, db);
    let mut r = a.clone();
    while !r.is_zero() {
        let dr = r.degree_in(var);
        if dr < db {
            break;
        }
        let lr = r.coeff_of(var, dr);
        let mut exps = vec![0u32; var + 1];
        exps[var] = dr - db;
        let xpow = Monomial::new(exps);
        r = r.mul(&lb).sub(&b.mul(&lr).mul_monomial(&xpow));
    }
    r
}

/// Content of a with respect to `var`: the gcd of its var-coefficients.
fn content(a: &FpPoly, var: usize) -> Result<FpPoly> {
    let mut acc = FpPoly::zero(a.p);
    for e in 0..=a.degree_in(var) {
        let c = a.coeff_of(var, e);
        if !c.is_zero() {
            acc = gcd(&acc, &c)?;
        }
    }
    Ok(acc)
}

/// Multivariate gcd over F_p by primitive pseudo-remainder sequences,
/// normalized monic in the graded-lex leading coefficient.
pub fn gcd(a: &FpPoly, b: &FpPoly) -> Result<FpPoly> {
    if a.is_zero() {
        return Ok(b.monic());
    }
    if b.is_zero() {
        return Ok(a.monic());
    }
    if a.is_constant() || b.is_constant() {
        return Ok(FpPoly::constant(a.p, 1));
    }
    let var = a
        .main_var()
        .into_iter()
        .chain(b.main_var())
        .max()
        .expect("non-constant polynomials have a main variable");

    let ca = content(a, var)?;
    let cb = content(b, var)?;
    let cg = gcd(&ca, &cb)?;
    let mut r0 = exact_div(a, &ca)?;
    let mut r1 = exact_div(b, &cb)?;
    if r0.degree_in(var) < r1.degree_in(var) {
        std::mem::swap(&mut r0, &mut r1);
    }
    loop {
        if r1.is_zero() {
            break;
        }
        if r1.degree_in(var) == 0 {
            // A var-free remainder of primitive operands forces the
            // primitive gcd down to a unit.
            r0 = FpPoly::constant(a.p, 1);
            break;
        }
        let r = pseudo_rem(&r0, &r1, var);
        let r = if r.is_zero() {
            r
        } else {
            exact_div(&r, &content(&r, var)?)?
        };
        r0 = r1;
        r1 = r;
    }
    Ok(cg.mul(&r0).monic())
}

/// True when the two polynomials are coprime over F_p (gcd is a unit).
pub fn coprime(a: &FpPoly, b: &FpPoly) -> Result<bool> {
    let g = gcd(a, b)?;
    Ok(!g.is_zero() && g.is_constant())
}
