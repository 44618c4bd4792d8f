//! Gowers uniformity norms U^d on cyclic groups, the support embedding
//! that avoids wraparound, and the uniformity-decay check for the
//! W-tricked prime weight.
//!
//! Signals are real-valued. The box average underlying U^d is computed by
//! the derivative recursion: the level-d average over parallelepipeds is
//! the mean over shifts h of the level-(d-1) average of f * T_h f, with
//! the level-1 base equal to the squared mean. Each level contributes one
//! mean, which keeps the base case a perfect square and hence every box
//! average structurally non-negative. The d = 2 case also has a Fourier
//! fast path through rustfft.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::arith::PrimeTable;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::sieve_measure::{lambda_w_b, Measure, Params};

/// A real signal indexed by residues 0..modulus-1.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicSignal {
    values: Vec<f64>,
}

impl CyclicSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "signal modulus must be positive".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "signal values must be finite".into(),
            ));
        }
        Ok(CyclicSignal { values })
    }

    pub fn constant(modulus: u64, c: f64) -> Result<Self> {
        CyclicSignal::new(vec![c; modulus as usize])
    }

    /// Reads a measure as a signal on its ambient modulus.
    pub fn from_measure(m: &Measure) -> Self {
        let modulus = m.modulus();
        let values = (0..modulus).map(|r| m.residue_value(r as i64)).collect();
        CyclicSignal { values }
    }

    pub fn modulus(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, r: i64) -> f64 {
        let n = self.values.len() as i64;
        self.values[r.rem_euclid(n) as usize]
    }
}

/// The raw box average E_{x, h_1..h_d} prod_{omega} f(x + omega . h),
/// non-negative for every real f.
pub fn box_average(f: &CyclicSignal, d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "Gowers norm order d must be at least 1".into(),
        ));
    }
    Ok(box_average_parallel(&f.values, d))
}

/// The Gowers norm: the 2^d-th root of the box average.
pub fn gowers_norm(f: &CyclicSignal, d: u32) -> Result<f64> {
    let avg = box_average(f, d)?;
    // Roundoff can push a structurally non-negative average slightly below
    // zero when the true value is ~0.
    Ok(avg.max(0.0).powf(1.0 / (1u64 << d) as f64))
}

fn box_average_parallel(values: &[f64], d: u32) -> f64 {
    let n = values.len();
    if d == 1 {
        let mean = pairwise_sum(values) / n as f64;
        return mean * mean;
    }
    let per_h: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|h| {
            let prod: Vec<f64> = (0..n).map(|x| values[x] * values[(x + h) % n]).collect();
            box_average_seq(&prod, d - 1)
        })
        .collect();
    pairwise_sum(&per_h) / n as f64
}

fn box_average_seq(values: &[f64], d: u32) -> f64 {
    let n = values.len();
    if d == 1 {
        let mean = pairwise_sum(values) / n as f64;
        return mean * mean;
    }
    let per_h: Vec<f64> = (0..n)
        .map(|h| {
            let prod: Vec<f64> = (0..n).map(|x| values[x] * values[(x + h) % n]).collect();
            box_average_seq(&prod, d - 1)
        })
        .collect();
    pairwise_sum(&per_h) / n as f64
}

/// U^2 through the Fourier identity: the fourth root of the sum of fourth
/// powers of the normalized Fourier coefficients.
pub fn gowers_u2_fft(f: &CyclicSignal) -> f64 {
    u2_fourth_power_fft(&f.values).max(0.0).powf(0.25)
}

fn u2_fourth_power_fft(values: &[f64]) -> f64 {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let scale = 1.0 / (n as f64 * n as f64);
    let fourths: Vec<f64> = buf
        .iter()
        .map(|c| {
            let sq = c.norm_sqr() * scale;
            sq * sq
        })
        .collect();
    pairwise_sum(&fourths)
}

/// Fast box average for the deviation check: d = 2 by FFT, higher d by one
/// derivative step per level down to the FFT base. Cost is about
/// modulus^(d-1) * log(modulus) instead of modulus^d.
fn box_average_fast(values: &[f64], d: u32) -> f64 {
    match d {
        1 => {
            let mean = pairwise_sum(values) / values.len() as f64;
            mean * mean
        }
        2 => u2_fourth_power_fft(values),
        _ => {
            let n = values.len();
            let per_h: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|h| {
                    let prod: Vec<f64> = (0..n).map(|x| values[x] * values[(x + h) % n]).collect();
                    box_average_fast(&prod, d - 1)
                })
                .collect();
            pairwise_sum(&per_h) / n as f64
        }
    }
}

/// Embeds a weight supported on `[1, m_cap]` into the cyclic group of
/// order (2d+1) * m_cap, placing value n at residue n.
///
/// With this ambient size, parallelepiped vertices m + omega . h with
/// m in [M] and |h_i| < M evaluate identically over the integers and in
/// the cyclic group: the vertices range over (-dM, (d+1)M], an interval
/// of length (2d+1)M, so no two integers in play collide mod (2d+1)M.
pub fn embed_supported(a: &Measure, m_cap: u64, d: u32) -> Result<CyclicSignal> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "embedding order d must be at least 1".into(),
        ));
    }
    for i in (m_cap + 1)..=a.n() {
        if a.value(i) != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "weight has value {} at index {} outside the claimed support [1, {}]",
                a.value(i),
                i,
                m_cap
            )));
        }
    }
    let modulus = (2 * d as u64 + 1) * m_cap;
    let mut values = vec![0.0; modulus as usize];
    for i in 1..=m_cap.min(a.n()) {
        values[i as usize] = a.value(i);
    }
    CyclicSignal::new(values)
}

/// The normalized box sum over the integer ranges m in [M], |h_i| < M,
/// evaluating the weight over the integers (zero outside [1, M]):
/// E_{m in [M]} E_{|h_1|,..,|h_d| < M} prod_omega a(m + omega . h).
///
/// Under the no-wraparound embedding the nonzero terms of the full cyclic
/// box sum are exactly these, so this quantity equals
/// ((2d+1)M)^{d+1} / (M (2M-1)^d) times the embedded box average.
pub fn restricted_box_sum(a: &Measure, m_cap: u64, d: u32) -> f64 {
    let m = m_cap as i64;
    let at = |v: i64| -> f64 {
        if v >= 1 && v <= m {
            a.value(v as u64)
        } else {
            0.0
        }
    };
    let shifts: Vec<i64> = (-(m - 1)..m).collect();
    let per_base: Vec<f64> = (1..=m)
        .into_par_iter()
        .map(|base| {
            let mut acc = 0.0;
            let mut h = vec![0i64; d as usize];
            fn walk(
                at: &dyn Fn(i64) -> f64,
                shifts: &[i64],
                h: &mut Vec<i64>,
                level: usize,
                d: usize,
                base: i64,
                acc: &mut f64,
            ) {
                if level == d {
                    let mut prod = 1.0;
                    for mask in 0..(1u32 << d) {
                        let mut v = base;
                        for (i, hi) in h.iter().enumerate() {
                            if mask >> i & 1 == 1 {
                                v += hi;
                            }
                        }
                        prod *= at(v);
                        if prod == 0.0 {
                            return;
                        }
                    }
                    *acc += prod;
                    return;
                }
                for &s in shifts {
                    h[level] = s;
                    walk(at, shifts, h, level + 1, d, base, acc);
                }
            }
            walk(&at, &shifts, &mut h, 0, d as usize, base, &mut acc);
            acc
        })
        .collect();
    let count = m_cap as f64 * ((2 * m_cap - 1) as f64).powi(d as i32);
    pairwise_sum(&per_base) / count
}

/// U^d norm of the deviation lambda - 1_[N] embedded on Z_{(2d+1)N}.
pub fn lambda_deviation_norm(params: &Params, b: u64, d: u32, primes: &PrimeTable) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "deviation order d must be at least 1".into(),
        ));
    }
    let p = Params {
        b,
        ..params.clone()
    };
    if b < 1 || b > p.w_modulus || gcd(b, p.w_modulus) != 1 {
        return Err(Error::InvalidArgument(format!(
            "residue b = {} must lie in [1, {}] and be coprime to W",
            b, p.w_modulus
        )));
    }
    let modulus = (2 * d as u64 + 1) * p.n;
    let cost = estimated_flops(modulus, d);
    const BUDGET: f64 = 2.5e11;
    if cost > BUDGET {
        return Err(Error::Resource(format!(
            "U^{} on Z_{} needs about {:.1e} operations (budget {:.1e}); \
             reduce N or d",
            d, modulus, cost, BUDGET
        )));
    }
    let lambda = lambda_w_b(&p, primes)?;
    let signal = deviation_signal(&lambda, d);
    Ok(box_average_fast(signal.values(), d)
        .max(0.0)
        .powf(1.0 / (1u64 << d) as f64))
}

/// lambda - 1_[N] placed on Z_{(2d+1)N}.
pub fn deviation_signal(lambda: &Measure, d: u32) -> CyclicSignal {
    let n = lambda.n();
    let modulus = (2 * d as u64 + 1) * n;
    let mut values = vec![0.0; modulus as usize];
    for x in 1..=n {
        values[x as usize] = lambda.value(x) - 1.0;
    }
    CyclicSignal { values }
}

fn estimated_flops(modulus: u64, d: u32) -> f64 {
    let m = modulus as f64;
    match d {
        1 => m,
        2 => 5.0 * m * m.log2(),
        _ => m.powi(d as i32 - 1) * 5.0 * m.log2(),
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
