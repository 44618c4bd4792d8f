//! Elementary number-theoretic primitives: prime sieves, the Möbius
//! function, Euler's totient, and primorials.
//!
//! Two table types cover the two access patterns that occur downstream:
//! [`PrimeTable`] answers bulk primality queries (segmented bit sieve), and
//! [`SpfTable`] supports repeated factorization through smallest prime
//! factors (linear sieve) together with a precomputed Möbius array. Both are
//! immutable after construction and safe to share across threads.

use crate::error::{Error, Result};

const SEGMENT_BITS: u64 = 1 << 20;

/// Bit-indexed primality table over `[1, limit]`.
pub struct PrimeTable {
    limit: u64,
    bits: Vec<u64>,
}

impl PrimeTable {
    /// Sieve of Eratosthenes up to `limit` inclusive, segmented so that the
    /// working set stays cache-sized for large limits.
    pub fn new(limit: u64) -> Result<Self> {
        if limit == 0 {
            return Err(Error::InvalidArgument(
                "prime table limit must be at least 1".into(),
            ));
        }
        let words = (limit / 64 + 1) as usize;
        let mut bits = vec![0u64; words];

        // Base primes up to sqrt(limit) by a plain sieve.
        let root = (limit as f64).sqrt() as u64 + 1;
        let mut base = vec![true; (root + 1) as usize];
        base[0] = false;
        if root >= 1 {
            base[1] = false;
        }
        let mut p = 2u64;
        while p * p <= root {
            if base[p as usize] {
                let mut q = p * p;
                while q <= root {
                    base[q as usize] = false;
                    q += p;
                }
            }
            p += 1;
        }
        let base_primes: Vec<u64> = (2..=root).filter(|&n| base[n as usize]).collect();

        // Mark primes segment by segment.
        let mut lo = 2u64;
        let mut seg = vec![true; SEGMENT_BITS as usize];
        while lo <= limit {
            let hi = (lo + SEGMENT_BITS - 1).min(limit);
            let len = (hi - lo + 1) as usize;
            seg[..len].fill(true);
            for &bp in &base_primes {
                if bp * bp > hi {
                    break;
                }
                let mut start = bp * bp;
                if start < lo {
                    start = lo.div_ceil(bp) * bp;
                }
                let mut q = start;
                while q <= hi {
                    seg[(q - lo) as usize] = false;
                    q += bp;
                }
            }
            for (i, &is_p) in seg[..len].iter().enumerate() {
                if is_p {
                    let n = lo + i as u64;
                    bits[(n / 64) as usize] |= 1 << (n % 64);
                }
            }
            lo = hi + 1;
        }
        Ok(PrimeTable { limit, bits })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Primality of `n`. Panics if `n` exceeds the table limit.
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(
            n <= self.limit,
            "prime table query {} beyond limit {}",
            n,
            self.limit
        );
        self.bits[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..=self.limit).filter(move |&n| self.bits[(n / 64) as usize] >> (n % 64) & 1 == 1)
    }

    pub fn count(&self) -> usize {
        let mut total: usize = self.bits.iter().map(|w| w.count_ones() as usize).sum();
        // Bits 0 and 1 are never set, so only 1 (for n=1) could overcount,
        // and it is not set either; nothing to subtract.
        if self.limit == 1 {
            total = 0;
        }
        total
    }
}

/// Exact factorization of a positive integer, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn divisor_count(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| (e + 1) as u64).product()
    }
}

/// Smallest-prime-factor table over `[1, limit]` built by a linear sieve,
/// with the Möbius function tabulated alongside.
pub struct SpfTable {
    limit: u64,
    spf: Vec<u32>,
    mobius: Vec<i8>,
}

impl SpfTable {
    pub fn new(limit: u64) -> Result<Self> {
        if limit == 0 {
            return Err(Error::InvalidArgument(
                "spf table limit must be at least 1".into(),
            ));
        }
        if limit > u32::MAX as u64 {
            return Err(Error::Resource(format!(
                "spf table limit {} exceeds the u32 index range",
                limit
            )));
        }
        let n = (limit + 1) as usize;
        let mut spf = vec![0u32; n];
        let mut mobius = vec![0i8; n];
        if limit >= 1 {
            mobius[1] = 1;
        }
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                mobius[i] = -1;
                primes.push(i as u32);
            }
            for &p in &primes {
                let ip = i as u64 * p as u64;
                if p > spf[i] || ip > limit {
                    break;
                }
                let ip = ip as usize;
                spf[ip] = p;
                mobius[ip] = if p == spf[i] { 0 } else { -mobius[i] };
            }
        }
        Ok(SpfTable { limit, spf, mobius })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Möbius function from the precomputed array.
    pub fn mobius(&self, n: u64) -> i8 {
        assert!(
            n >= 1 && n <= self.limit,
            "spf table query {} outside [1, {}]",
            n,
            self.limit
        );
        self.mobius[n as usize]
    }

    pub fn factorize(&self, n: u64) -> Factorization {
        assert!(
            n >= 1 && n <= self.limit,
            "spf table query {} outside [1, {}]",
            n,
            self.limit
        );
        let mut factors = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf[m as usize] as u64;
            let mut e = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        Factorization { n, factors }
    }

    /// Distinct prime factors of `n` in increasing order.
    pub fn distinct_prime_factors(&self, n: u64) -> Vec<u64> {
        self.factorize(n)
            .factors
            .into_iter()
            .map(|(p, _)| p)
            .collect()
    }

    /// Euler's totient via the smallest-prime-factor walk.
    pub fn phi(&self, n: u64) -> u64 {
        let mut result = n;
        for (p, _) in self.factorize(n).factors {
            result -= result / p;
        }
        result
    }
}

fn trial_factorize(n: u64) -> Vec<(u64, u32)> {
    let mut factors = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += 1;
    }
    if m > 1 {
        factors.push((m, 1));
    }
    factors
}

/// Single-value Möbius function by trial division.
pub fn mobius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::InvalidArgument("mobius(0) is undefined".into()));
    }
    let factors = trial_factorize(n);
    if factors.iter().any(|&(_, e)| e > 1) {
        return Ok(0);
    }
    Ok(if factors.len().is_multiple_of(2) {
        1
    } else {
        -1
    })
}

/// Single-value Euler totient by trial division.
pub fn euler_phi(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("euler_phi(0) is undefined".into()));
    }
    let mut result = n;
    for (p, _) in trial_factorize(n) {
        result -= result / p;
    }
    Ok(result)
}

/// Product of all primes strictly below `w`, exact in u64.
pub fn primorial_below(w: u64) -> Result<u64> {
    if w < 2 {
        return Err(Error::InvalidArgument(format!(
            "primorial cutoff must be at least 2, got {}",
            w
        )));
    }
    let mut acc: u64 = 1;
    if w > 2 {
        let table = PrimeTable::new(w - 1)?;
        for p in table.primes() {
            acc = acc
                .checked_mul(p)
                .ok_or_else(|| Error::Resource(format!("primorial below {} overflows u64", w)))?;
        }
    }
    Ok(acc)
}
