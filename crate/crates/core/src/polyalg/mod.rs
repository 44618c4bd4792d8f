//! Exact multivariate integer polynomial arithmetic over the ordered
//! variable list (m, h1, h2, ...), the text grammar for polynomial
//! systems, and the van der Corput induction engine built on them.
//!
//! Variables are identified by index: index 0 is the base variable m and
//! index i >= 1 is the shift variable h_i introduced at step i. All
//! polynomial state in an induction run vanishes at the all-zero point,
//! which is what lets "differ by a constant" collapse to equality.

mod parse;
mod pet;

pub use parse::{parse_poly_system, parse_system};
pub use pet::{choose_q, pet_run, ClaimChecks, PetDiagnostics, PetStep, PetTrace};

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exponent vector over the run's variable list, trailing zeros trimmed.
/// Ordered graded-lexicographically with index 0 (the variable m) taking
/// the highest priority.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn unit() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(idx: usize) -> Self {
        let mut exps = vec![0; idx + 1];
        exps[idx] = 1;
        Monomial(exps)
    }

    pub fn exp(&self, var: usize) -> u32 {
        self.0.get(var).copied().unwrap_or(0)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let len = self.0.len().max(other.0.len());
        let exps = (0..len).map(|i| self.exp(i) + other.exp(i)).collect();
        Monomial::new(exps)
    }

    fn without(&self, var: usize) -> Monomial {
        let mut exps = self.0.clone();
        if var < exps.len() {
            exps[var] = 0;
        }
        Monomial::new(exps)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let len = self.0.len().max(other.0.len());
            for i in 0..len {
                match self.exp(i).cmp(&other.exp(i)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Integer polynomial stored as canonically sorted terms (leading term
/// first), no zero coefficients. The derived ordering on the term list is
/// an arbitrary but deterministic total order used for tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    terms: Vec<(Monomial, BigInt)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Poly::from_map([(Monomial::unit(), c.into())].into_iter().collect())
    }

    pub fn var(idx: usize) -> Self {
        Poly::from_map([(Monomial::var(idx), BigInt::one())].into_iter().collect())
    }

    pub fn monomial(mono: Monomial, coeff: impl Into<BigInt>) -> Self {
        Poly::from_map([(mono, coeff.into())].into_iter().collect())
    }

    fn from_map(map: BTreeMap<Monomial, BigInt>) -> Self {
        let mut terms: Vec<(Monomial, BigInt)> =
            map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        Poly { terms }
    }

    fn to_map(&self) -> BTreeMap<Monomial, BigInt> {
        self.terms.iter().cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter().map(|(m, c)| (m, c))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut map = self.to_map();
        for (m, c) in &other.terms {
            *map.entry(m.clone()).or_insert_with(BigInt::zero) += c;
        }
        Poly::from_map(map)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut map = self.to_map();
        for (m, c) in &other.terms {
            *map.entry(m.clone()).or_insert_with(BigInt::zero) -= c;
        }
        Poly::from_map(map)
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut map: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *map.entry(ma.mul(mb)).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        Poly::from_map(map)
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn constant_term(&self) -> BigInt {
        self.terms
            .iter()
            .find(|(m, _)| m.is_unit())
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigInt::zero)
    }

    pub fn vanishes_at_zero(&self) -> bool {
        self.constant_term().is_zero()
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

    pub fn is_constant_in(&self, var: usize) -> bool {
        self.degree_in(var) == 0
    }

    /// True when every monomial uses only the single variable `var`.
    pub fn is_univariate_in(&self, var: usize) -> bool {
        self.terms.iter().all(|(m, _)| m.degree() == m.exp(var))
    }

    /// Largest variable index appearing, plus one (0 for constants).
    pub fn num_vars(&self) -> usize {
        self.terms
            .iter()
            .map(|(m, _)| m.exps().len())
            .max()
            .unwrap_or(0)
    }

    /// Coefficient of the highest power of `var`, as a polynomial in the
    /// remaining variables. Zero polynomial for the zero polynomial.
    pub fn leading_coeff_in(&self, var: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let deg = self.degree_in(var);
        let mut map = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.exp(var) == deg {
                *map.entry(m.without(var)).or_insert_with(BigInt::zero) += c;
            }
        }
        Poly::from_map(map)
    }

    /// The part of the polynomial actually involving `var`: the sum of all
    /// terms with a positive exponent of `var`. Two polynomials differ by
    /// something constant in `var` exactly when these parts agree.
    pub fn part_involving(&self, var: usize) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.exp(var) > 0)
                .cloned()
                .collect(),
        }
    }

    /// Largest coefficient magnitude in bits (0 for the zero polynomial).
    pub fn max_coeff_bits(&self) -> u64 {
        self.terms.iter().map(|(_, c)| c.bits()).max().unwrap_or(0)
    }

    pub fn max_coeff_abs(&self) -> BigInt {
        self.terms
            .iter()
            .map(|(_, c)| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    pub fn eval_bigint(&self, point: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    term *= point[i].pow(e);
                }
            }
            acc += term;
        }
        acc
    }

    /// Evaluation for univariate polynomials at an integer point, with an
    /// overflow check (values must fit i128).
    pub fn eval_univariate(&self, var: usize, x: i128) -> Result<i128> {
        let value = self.eval_bigint(&point_for(var, x, self.num_vars()));
        value.to_i128().ok_or_else(|| {
            Error::Resource(format!("polynomial value at {} exceeds 128-bit range", x))
        })
    }

    /// Renders in the system grammar with the default variable names
    /// m, h1, h2, ... Terms appear in descending graded-lex order.
    pub fn render_pet(&self) -> String {
        self.render_with(&pet_var_name)
    }

    /// Renders with caller-supplied variable names.
    pub fn render(&self, names: &[String]) -> String {
        self.render_with(&|i| names.get(i).cloned().unwrap_or_else(|| format!("v{}", i)))
    }

    fn render_with(&self, name_of: &dyn Fn(usize) -> String) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (mono, coeff)) in self.terms.iter().enumerate() {
            let negative = coeff.is_negative();
            if i == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push(if negative { '-' } else { '+' });
            }
            let mag = coeff.abs();
            let mut factors: Vec<String> = Vec::new();
            for (idx, &e) in mono.exps().iter().enumerate() {
                if e == 1 {
                    factors.push(name_of(idx));
                } else if e > 1 {
                    factors.push(format!("{}^{}", name_of(idx), e));
                }
            }
            if factors.is_empty() {
                out.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    out.push_str(&mag.to_string());
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

fn point_for(var: usize, x: i128, nvars: usize) -> Vec<BigInt> {
    let mut point = vec![BigInt::zero(); nvars.max(var + 1)];
    point[var] = BigInt::from(x);
    point
}

/// Default variable names: index 0 is m, index i >= 1 is h_i.
pub fn pet_var_name(idx: usize) -> String {
    if idx == 0 {
        "m".to_string()
    } else {
        format!("h{}", idx)
    }
}

/// Substitution var -> var + new_var, expanded exactly.
pub fn shift(q: &Poly, var: usize, new_var: usize) -> Poly {
    let mut map: BTreeMap<Monomial, BigInt> = BTreeMap::new();
    for (mono, coeff) in q.terms() {
        let e = mono.exp(var);
        if e == 0 {
            *map.entry(mono.clone()).or_insert_with(BigInt::zero) += coeff;
            continue;
        }
        let rest = mono.without(var);
        for k in 0..=e {
            let binom = num_integer::binomial(BigInt::from(e), BigInt::from(k));
            let mut exps = rest.exps().to_vec();
            let need = var.max(new_var) + 1;
            if exps.len() < need {
                exps.resize(need, 0);
            }
            exps[var] += k;
            exps[new_var] += e - k;
            *map.entry(Monomial::new(exps)).or_insert_with(BigInt::zero) += coeff * binom;
        }
    }
    Poly::from_map(map)
}

/// The integral rescaling P(Wm)/W = sum a_i W^{i-1} m^i for P = sum a_i m^i
/// with P(0) = 0.
pub fn w_rescale(p: &Poly, w: u64) -> Result<Poly> {
    if w == 0 {
        return Err(Error::InvalidArgument(
            "rescaling modulus W must be positive".into(),
        ));
    }
    if !p.is_univariate_in(0) {
        return Err(Error::InvalidArgument(format!(
            "rescaling applies to polynomials in m only, got {}",
            p.render_pet()
        )));
    }
    if !p.vanishes_at_zero() {
        return Err(Error::InvalidArgument(format!(
            "polynomial {} does not vanish at 0, so P(Wm)/W is not integral",
            p.render_pet()
        )));
    }
    let w = BigInt::from(w);
    let mut map = BTreeMap::new();
    for (mono, coeff) in p.terms() {
        let i = mono.exp(0);
        map.insert(mono.clone(), coeff * w.pow(i - 1));
    }
    Ok(Poly::from_map(map))
}

/// A van der Corput family state: the active polynomials Q_s together with
/// the retired set Q_s-dagger. The constant-in-m sublist Q_s' is derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyFamily {
    active: Vec<Poly>,
    retired: Vec<Poly>,
    step_index: u32,
}

impl PolyFamily {
    /// Starts a family at step 0 with no retired polynomials. Every member
    /// must vanish at the all-zero point. Duplicates collapse.
    pub fn new(active: Vec<Poly>) -> Result<Self> {
        PolyFamily::assemble(active, Vec::new(), 0)
    }

    fn assemble(mut active: Vec<Poly>, mut retired: Vec<Poly>, step_index: u32) -> Result<Self> {
        for p in active.iter().chain(retired.iter()) {
            if !p.vanishes_at_zero() {
                return Err(Error::InvalidArgument(format!(
                    "family member {} does not vanish at the all-zero point",
                    p.render_pet()
                )));
            }
        }
        active.sort();
        active.dedup();
        retired.sort();
        retired.dedup();
        Ok(PolyFamily {
            active,
            retired,
            step_index,
        })
    }

    pub fn active(&self) -> &[Poly] {
        &self.active
    }

    pub fn retired(&self) -> &[Poly] {
        &self.retired
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }

    /// Q_s': the active members constant in m.
    pub fn constants(&self) -> Vec<&Poly> {
        self.active.iter().filter(|p| p.is_constant_in(0)).collect()
    }

    /// Q_s minus Q_s': the active members still involving m.
    pub fn non_constants(&self) -> Vec<&Poly> {
        self.active
            .iter()
            .filter(|p| !p.is_constant_in(0))
            .collect()
    }

    pub fn size(&self) -> usize {
        self.active.len() + self.retired.len()
    }

    pub fn max_coeff_bits(&self) -> u64 {
        self.active
            .iter()
            .chain(self.retired.iter())
            .map(|p| p.max_coeff_bits())
            .max()
            .unwrap_or(0)
    }

    /// Total stored terms across the family, a memory-footprint proxy.
    pub fn total_terms(&self) -> usize {
        self.active
            .iter()
            .chain(self.retired.iter())
            .map(|p| p.terms.len())
            .sum()
    }

    pub fn max_total_degree(&self) -> u32 {
        self.active
            .iter()
            .chain(self.retired.iter())
            .map(|p| p.total_degree())
            .max()
            .unwrap_or(0)
    }
}

/// The type of a family: entry j-1 counts the equivalence classes (same
/// degree in m, same leading coefficient in m) among active members of
/// degree j in m, ignoring the constant-in-m members. The all-constant
/// family has the empty (zero) type.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(transparent)]
pub struct TypeVector(pub Vec<u64>);

impl TypeVector {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn weights(&self) -> &[u64] {
        &self.0
    }
}

pub fn family_type(family: &PolyFamily) -> TypeVector {
    let mut classes: Vec<(u32, Poly)> = Vec::new();
    for p in family.non_constants() {
        let key = (p.degree_in(0), p.leading_coeff_in(0));
        if !classes.contains(&key) {
            classes.push(key);
        }
    }
    let bound = classes.iter().map(|(d, _)| *d).max().unwrap_or(0);
    let mut weights = vec![0u64; bound as usize];
    for (d, _) in classes {
        weights[(d - 1) as usize] += 1;
    }
    TypeVector(weights)
}

/// The strict order on types: a < b when at the highest degree where they
/// differ, a has the smaller count.
pub fn type_less(a: &TypeVector, b: &TypeVector) -> bool {
    let len = a.0.len().max(b.0.len());
    for j in (0..len).rev() {
        let wa = a.0.get(j).copied().unwrap_or(0);
        let wb = b.0.get(j).copied().unwrap_or(0);
        match wa.cmp(&wb) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => continue,
        }
    }
    false
}

/// One van der Corput step: with P = active minus constants,
/// the new active family is (S_h P - q) union (P - q) and the new retired
/// family is (constants - q) union (retired - q).
pub fn vdc_operation(family: &PolyFamily, q: &Poly, new_var: usize) -> Result<PolyFamily> {
    if q.is_constant_in(0) {
        return Err(Error::InvalidArgument(format!(
            "van der Corput base {} is constant in m",
            q.render_pet()
        )));
    }
    if !family.active.contains(q) {
        return Err(Error::InvalidArgument(format!(
            "van der Corput base {} is not in the active family",
            q.render_pet()
        )));
    }
    let mut active = Vec::new();
    for p in family.non_constants() {
        active.push(shift(p, 0, new_var).sub(q));
        active.push(p.sub(q));
    }
    let mut retired = Vec::new();
    for c in family.constants() {
        retired.push(c.sub(q));
    }
    for r in &family.retired {
        retired.push(r.sub(q));
    }
    PolyFamily::assemble(active, retired, family.step_index + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn poly(text: &str) -> Poly {
        parse_system(text, &["m", "h1", "h2", "h3", "h4", "h5"])
            .unwrap()
            .pop()
            .unwrap()
    }

    #[test]
    fn monomial_order_is_graded_lex() {
        let m2 = Monomial::new(vec![2]);
        let mh = Monomial::new(vec![1, 1]);
        let h2 = Monomial::new(vec![0, 2]);
        let m = Monomial::new(vec![1]);
        assert!(m2 > mh && mh > h2 && h2 > m);
        assert_eq!(Monomial::new(vec![1, 0, 0]), Monomial::new(vec![1]));
    }

    #[test]
    fn arithmetic_and_rendering() {
        let p = poly("m^2-2*m");
        let q = poly("m");
        assert_eq!(p.add(&q).render_pet(), "m^2-m");
        assert_eq!(p.sub(&p), Poly::zero());
        assert_eq!(p.mul(&q).render_pet(), "m^3-2*m^2");
        assert_eq!(Poly::zero().render_pet(), "0");
        assert_eq!(poly("-m^2+h1").render_pet(), "-m^2+h1");
        assert_eq!(poly("3*m*h1^2").render_pet(), "3*m*h1^2");
    }

    #[test]
    fn shift_examples() {
        let m2 = poly("m^2");
        assert_eq!(shift(&m2, 0, 1).render_pet(), "m^2+2*m*h1+h1^2");
        let c = poly("h1^2");
        assert_eq!(shift(&c, 0, 2), c);
        let m = poly("m");
        assert_eq!(shift(&m, 0, 1).sub(&m).render_pet(), "h1");
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(w_rescale(&poly("m^2"), 6).unwrap().render_pet(), "6*m^2");
        for w in [1u64, 2, 6, 30] {
            assert_eq!(w_rescale(&poly("m"), w).unwrap().render_pet(), "m");
        }
        assert_eq!(
            w_rescale(&poly("m^3+m"), 2).unwrap().render_pet(),
            "4*m^3+m"
        );
        let bad = poly("m").add(&Poly::constant(1));
        assert!(matches!(w_rescale(&bad, 2), Err(Error::InvalidArgument(_))));
        assert!(w_rescale(&poly("m*h1"), 2).is_err());
    }

    #[test]
    fn family_type_examples() {
        let f = PolyFamily::new(vec![poly("m^2")]).unwrap();
        assert_eq!(family_type(&f).weights(), &[0, 1]);

        let f = PolyFamily::new(vec![poly("m"), poly("m+h1"), poly("2*m")]).unwrap();
        assert_eq!(family_type(&f).weights(), &[2]);

        let f = PolyFamily::new(vec![poly("h1"), poly("2*h1")]).unwrap();
        assert!(family_type(&f).is_zero());
        assert_eq!(family_type(&f).weights(), &[] as &[u64]);
    }

    #[test]
    fn type_order_examples() {
        let t = |w: &[u64]| TypeVector(w.to_vec());
        assert!(type_less(&t(&[1, 1, 0]), &t(&[1, 0, 1])));
        assert!(type_less(&t(&[2, 0, 0]), &t(&[1, 1, 0])));
        assert!(!type_less(&t(&[1, 0, 1]), &t(&[1, 1, 0])));
        let w = t(&[1, 2]);
        assert!(!type_less(&w, &w));
        // Padding: (1) and (1,0) are the same type.
        assert!(!type_less(&t(&[1]), &t(&[1, 0])));
        assert!(!type_less(&t(&[1, 0]), &t(&[1])));
        assert!(type_less(&t(&[]), &t(&[1])));
    }

    #[test]
    fn vdc_operation_examples() {
        // {m^2} with q = m^2: active becomes {S_h q - q, 0}.
        let f = PolyFamily::new(vec![poly("m^2")]).unwrap();
        let q = poly("m^2");
        let next = vdc_operation(&f, &q, 1).unwrap();
        let rendered: Vec<String> = next.active().iter().map(|p| p.render_pet()).collect();
        assert!(rendered.contains(&"2*m*h1+h1^2".to_string()));
        assert!(rendered.contains(&"0".to_string()));
        assert_eq!(next.active().len(), 2);
        assert!(next.retired().is_empty());

        // {m} with q = m: everything active becomes constant in m.
        let f = PolyFamily::new(vec![poly("m")]).unwrap();
        let next = vdc_operation(&f, &poly("m"), 1).unwrap();
        let rendered: Vec<String> = next.active().iter().map(|p| p.render_pet()).collect();
        assert_eq!(rendered, vec!["0".to_string(), "h1".to_string()]);
        assert!(family_type(&next).is_zero());

        // Constants retire: Q_1-dagger = Q_0' - q.
        let f = PolyFamily::new(vec![poly("m"), Poly::zero()]).unwrap();
        let next = vdc_operation(&f, &poly("m"), 1).unwrap();
        let retired: Vec<String> = next.retired().iter().map(|p| p.render_pet()).collect();
        assert_eq!(retired, vec!["-m".to_string()]);

        // A constant-in-m base is rejected.
        let f = PolyFamily::new(vec![poly("m"), poly("h1")]).unwrap();
        assert!(vdc_operation(&f, &poly("h1"), 2).is_err());
    }

    #[test]
    fn family_rejects_nonvanishing() {
        let bad = poly("m").add(&Poly::constant(3));
        assert!(PolyFamily::new(vec![bad]).is_err());
    }

    #[test]
    fn part_involving_and_leading_coeff() {
        let p = poly("2*m^2*h1+m*h2+h1^2");
        assert_eq!(p.part_involving(0).render_pet(), "2*m^2*h1+m*h2");
        assert_eq!(p.leading_coeff_in(0).render_pet(), "2*h1");
        assert_eq!(p.degree_in(0), 2);
        assert_eq!(p.total_degree(), 3);
        assert_eq!(Poly::zero().leading_coeff_in(0), Poly::zero());
    }

    #[test]
    fn univariate_eval() {
        let p = poly("m^3-2*m");
        assert_eq!(p.eval_univariate(0, 5).unwrap(), 115);
        assert_eq!(p.eval_univariate(0, -1).unwrap(), 1);
    }
}
