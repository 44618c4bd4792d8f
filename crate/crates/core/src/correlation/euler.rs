//! Euler factors E_p for W-shifted polynomial families, the explicit
//! model E_p', and the per-class claims checker.
//!
//! E_p is the 4^{|J|}-term Moebius sum over divisor choices m_j, m_j' in
//! {1, p}, each term weighted by an exact local density of the shifted
//! subfamily selected by r_j = 1 iff p | lcm(m_j, m_j').

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyalg::Poly;

use super::{classify_prime, local_factor, PrimeClassFlags};

/// Largest family size accepted by the exact Euler sum (4^{|J|} terms).
const MAX_EULER_FAMILY: usize = 6;
/// Good-prime claim: the fitted decay exponent must reach 2 - 0.3.
const GOOD_EXPONENT_FLOOR: f64 = 1.7;
/// Tolerance for the exact small-prime identity E_p = 1.
const SMALL_PRIME_EXACT_TOL: f64 = 1e-12;

/// A polynomial family split into two residue groups: members of `j1`
/// are shifted to W P + b1, members of `j2` to W P + b2.
#[derive(Debug, Clone)]
pub struct ResidueFamily {
    pub j1: Vec<Poly>,
    pub j2: Vec<Poly>,
    pub b1: u64,
    pub b2: u64,
}

impl ResidueFamily {
    /// Single-residue convenience constructor: everything in group 1.
    pub fn single(family: Vec<Poly>, b: u64) -> Self {
        ResidueFamily {
            j1: family,
            j2: Vec::new(),
            b1: b,
            b2: b,
        }
    }

    pub fn len(&self) -> usize {
        self.j1.len() + self.j2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self, w_modulus: u64) -> Result<()> {
        if w_modulus == 0 {
            return Err(Error::InvalidArgument("W must be positive".into()));
        }
        for (label, b) in [("b1", self.b1), ("b2", self.b2)] {
            if b == 0 || num_integer::gcd(b, w_modulus) != 1 {
                return Err(Error::InvalidArgument(format!(
                    "residue {} = {} must be non-zero and coprime to W = {}",
                    label, b, w_modulus
                )));
            }
        }
        Ok(())
    }

    /// The shifted family (W P_j + b)_j in group order j1 then j2.
    pub fn shifted(&self, w_modulus: u64) -> Vec<Poly> {
        let w = BigInt::from(w_modulus);
        self.j1
            .iter()
            .map(|p| p.scale(&w).add(&Poly::constant(BigInt::from(self.b1))))
            .chain(
                self.j2
                    .iter()
                    .map(|p| p.scale(&w).add(&Poly::constant(BigInt::from(self.b2)))),
            )
            .collect()
    }
}

/// One evaluated (E_p, E_p') pair on a sampled z-line.
#[derive(Debug, Clone, Serialize)]
pub struct EulerFactorPair {
    pub p: u64,
    pub z_re: f64,
    pub e_p_re: f64,
    pub e_p_im: f64,
    pub e_p_model_re: f64,
    pub e_p_model_im: f64,
}

fn validate_z(z: &[Complex64], z_prime: &[Complex64], expected: usize) -> Result<()> {
    if z.len() != expected || z_prime.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "expected {} entries in each of z and z', got {} and {}",
            expected,
            z.len(),
            z_prime.len()
        )));
    }
    for v in z.iter().chain(z_prime.iter()) {
        if v.re <= 0.0 || !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "z entries must have positive finite real part, got {}",
                v
            )));
        }
    }
    Ok(())
}

/// Exact Euler factor E_p of the W-shifted family.
///
/// Sums over all assignments m_j, m_j' in {1, p}: the Moebius weight
/// mu(m_j) mu(m_j') m_j^{-z_j} m_j'^{-z_j'} times the local density of
/// the subfamily {W P_j + b(j) : p | lcm(m_j, m_j')}. Local densities
/// are memoized per subfamily mask.
pub fn euler_factor_exact(
    p: u64,
    family: &ResidueFamily,
    w_modulus: u64,
    z: &[Complex64],
    z_prime: &[Complex64],
) -> Result<Complex64> {
    family.validate(w_modulus)?;
    let size = family.len();
    if size > MAX_EULER_FAMILY {
        return Err(Error::Resource(format!(
            "Euler sum has 4^{} terms; families are limited to {} members",
            size, MAX_EULER_FAMILY
        )));
    }
    validate_z(z, z_prime, size)?;
    if size == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }

    let shifted = family.shifted(w_modulus);
    let ln_p = (p as f64).ln();
    // Per member j, the four (m_j, m_j') cases: weight and whether r_j = 1.
    let cases: Vec<[(Complex64, bool); 4]> = (0..size)
        .map(|j| {
            let u = (-z[j] * ln_p).exp();
            let u_prime = (-z_prime[j] * ln_p).exp();
            [
                (Complex64::new(1.0, 0.0), false),
                (-u_prime, true),
                (-u, true),
                (u * u_prime, true),
            ]
        })
        .collect();

    let mut densities: Vec<Option<f64>> = vec![None; 1 << size];
    let mut total = Complex64::new(0.0, 0.0);
    for assignment in 0..(1usize << (2 * size)) {
        let mut weight = Complex64::new(1.0, 0.0);
        let mut mask = 0usize;
        for (j, case_row) in cases.iter().enumerate() {
            let case = (assignment >> (2 * j)) & 3;
            let (w, r) = case_row[case];
            weight *= w;
            if r {
                mask |= 1 << j;
            }
        }
        let density = match densities[mask] {
            Some(d) => d,
            None => {
                let members: Vec<Poly> = shifted
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| mask & (1 << j) != 0)
                    .map(|(_, q)| q.clone())
                    .collect();
                let d = local_factor(p, &members)?
                    .to_f64()
                    .ok_or_else(|| Error::Internal("local density out of f64 range".into()))?;
                densities[mask] = Some(d);
                d
            }
        };
        total += weight * density;
    }
    Ok(total)
}

/// The model factor E_p' = prod_j (1-p^{-(1+z_j)})(1-p^{-(1+z_j')}) /
/// (1-p^{-(1+z_j+z_j')}).
pub fn euler_factor_model(p: u64, z: &[Complex64], z_prime: &[Complex64]) -> Result<Complex64> {
    validate_z(z, z_prime, z.len())?;
    let ln_p = (p as f64).ln();
    let one = Complex64::new(1.0, 0.0);
    let mut total = one;
    for (zj, zj_prime) in z.iter().zip(z_prime.iter()) {
        let a = one - (-(one + zj) * ln_p).exp();
        let b = one - (-(one + zj_prime) * ln_p).exp();
        let c = one - (-(one + zj + zj_prime) * ln_p).exp();
        total *= a * b / c;
    }
    Ok(total)
}

/// Per-prime outcome of the claims check.
#[derive(Debug, Clone, Serialize)]
pub struct PrimeClassRow {
    pub p: u64,
    pub good: bool,
    pub bad: bool,
    pub terrible: bool,
    /// max over sampled z-lines of |E_p/E_p' - 1|.
    pub max_ratio_dev: f64,
}

/// Aggregate report for the three prime-class claims.
#[derive(Debug, Clone, Serialize)]
pub struct PrimeClassClaimsReport {
    pub w_modulus: u64,
    pub family_size: usize,
    pub log_r: f64,
    pub z_samples: usize,
    pub seed: u64,
    pub rows: Vec<PrimeClassRow>,
    /// Fitted decay exponent of |E_p/E_p' - 1| over good primes
    /// (log-log least squares; the claim predicts 2).
    pub good_fit_exponent: f64,
    pub good_fit_exponent_ok: bool,
    pub good_count: usize,
    pub bad_count: usize,
    pub terrible_count: usize,
    /// max over bad non-terrible rows of p * |E_p/E_p' - 1|
    /// (the claim predicts a bounded constant).
    pub bad_constant: f64,
    /// |E_p - 1| <= 1e-12 on the real z-line for every p | W.
    pub small_primes_exact: bool,
    /// prod_{p | W} E_p' on the real z-line versus (phi(W)/W)^{|J|}.
    pub small_prime_product: f64,
    pub small_prime_target: f64,
    pub small_prime_band: f64,
    pub small_primes_in_band: bool,
}

fn distinct_prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Evaluates E_p/E_p' across a prime range on sampled z-lines, checks the
/// three claims (good-prime decay, bad-prime O(1/p), small-prime
/// identities), and reports everything per prime.
///
/// Classification is with respect to the W-shifted family. z-lines are
/// z_j = (1 + i xi_j)/log_r with xi drawn uniformly from [-1, 1]; the
/// first line is always the real one (all xi = 0).
#[allow(clippy::too_many_arguments)]
pub fn check_prime_class_claims(
    family: &ResidueFamily,
    w_modulus: u64,
    prime_range: (u64, u64),
    z_samples: usize,
    seed: u64,
    log_r: f64,
    band: f64,
) -> Result<PrimeClassClaimsReport> {
    family.validate(w_modulus)?;
    if family.is_empty() {
        return Err(Error::InvalidArgument(
            "claims check needs a non-empty family".into(),
        ));
    }
    if !(log_r.is_finite() && log_r > 0.0) {
        return Err(Error::InvalidArgument("log R must be positive".into()));
    }
    if z_samples == 0 {
        return Err(Error::InvalidArgument(
            "at least one z sample is required".into(),
        ));
    }
    let size = family.len();
    let shifted = family.shifted(w_modulus);
    let re = 1.0 / log_r;

    // Pre-draw the xi lines once so every prime sees identical z-values.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines: Vec<(Vec<Complex64>, Vec<Complex64>)> = Vec::with_capacity(z_samples);
    for s in 0..z_samples {
        let mut z = Vec::with_capacity(size);
        let mut z_prime = Vec::with_capacity(size);
        for _ in 0..size {
            let (xi, xi_prime) = if s == 0 {
                (0.0, 0.0)
            } else {
                (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            };
            z.push(Complex64::new(re, re * xi));
            z_prime.push(Complex64::new(re, re * xi_prime));
        }
        lines.push((z, z_prime));
    }

    let max_dev = |p: u64| -> Result<f64> {
        let mut dev: f64 = 0.0;
        for (z, z_prime) in &lines {
            let exact = euler_factor_exact(p, family, w_modulus, z, z_prime)?;
            let model = euler_factor_model(p, z, z_prime)?;
            if model.norm() == 0.0 {
                return Err(Error::Degenerate(format!(
                    "model Euler factor vanished at p = {}",
                    p
                )));
            }
            dev = dev.max((exact / model - Complex64::new(1.0, 0.0)).norm());
        }
        Ok(dev)
    };

    let mut rows = Vec::new();
    for p in prime_range.0..=prime_range.1 {
        if !is_prime_u64(p) {
            continue;
        }
        let flags: PrimeClassFlags = classify_prime(p, &shifted)?;
        let dev = max_dev(p)?;
        rows.push(PrimeClassRow {
            p,
            good: flags.good,
            bad: flags.bad,
            terrible: flags.terrible,
            max_ratio_dev: dev,
        });
    }

    let good_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| {
            r.good && !r.terrible && !w_modulus.is_multiple_of(r.p) && r.max_ratio_dev > 0.0
        })
        .map(|r| ((r.p as f64).ln(), r.max_ratio_dev.ln()))
        .collect();
    let good_fit_exponent = -least_squares_slope(&good_points);
    let bad_constant = rows
        .iter()
        .filter(|r| r.bad && !r.terrible)
        .map(|r| r.p as f64 * r.max_ratio_dev)
        .fold(0.0, f64::max);

    // Small primes p | W, checked on the real z-line regardless of range.
    let real_line = &lines[0];
    let mut small_primes_exact = true;
    let mut small_prime_product = 1.0;
    for p in distinct_prime_divisors(w_modulus) {
        let exact = euler_factor_exact(p, family, w_modulus, &real_line.0, &real_line.1)?;
        if (exact - Complex64::new(1.0, 0.0)).norm() > SMALL_PRIME_EXACT_TOL {
            small_primes_exact = false;
        }
        let model = euler_factor_model(p, &real_line.0, &real_line.1)?;
        small_prime_product *= model.re;
    }
    let phi_over_w = distinct_prime_divisors(w_modulus)
        .iter()
        .map(|&p| 1.0 - 1.0 / p as f64)
        .product::<f64>();
    let small_prime_target = phi_over_w.powi(size as i32);

    let good_count = rows.iter().filter(|r| r.good).count();
    let bad_count = rows.iter().filter(|r| r.bad).count();
    let terrible_count = rows.iter().filter(|r| r.terrible).count();

    Ok(PrimeClassClaimsReport {
        w_modulus,
        family_size: size,
        log_r,
        z_samples,
        seed,
        rows,
        good_fit_exponent,
        good_fit_exponent_ok: good_fit_exponent >= GOOD_EXPONENT_FLOOR,
        good_count,
        bad_count,
        terrible_count,
        bad_constant,
        small_primes_exact,
        small_prime_product,
        small_prime_target,
        small_prime_band: band,
        small_primes_in_band: (small_prime_product - small_prime_target).abs() <= band,
    })
}
