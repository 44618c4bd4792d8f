//! The W-tricked prime weight, the squared divisor-sum sieve measure with
//! its smooth cutoff, and the dense-model weights derived from them.
//!
//! All functions here are tabulations over `[1, N]` packaged as [`Measure`]
//! values. Tabulation is data-parallel over indices and deterministic: each
//! entry is computed independently and collected in order, and aggregate
//! statistics use a fixed-shape pairwise summation.

use std::io::{BufRead, Read, Write};

use rayon::prelude::*;

use crate::arith::{euler_phi, primorial_below, PrimeTable, SpfTable};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Scale and sieve parameters shared across the pipeline.
///
/// `m_cap` is the coarse scale bounding polynomial steps and `sieve_level`
/// is the level of the divisor-sum sieve; by default both are derived from
/// `n` through the exponents `eta0` and `eta2`, but they can be overridden
/// explicitly, which is the only way to obtain an admissible `sieve_level`
/// at small desk scales (the derived value collapses to 1 there).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Params {
    /// Principal scale N.
    pub n: u64,
    /// Small-prime cutoff w.
    pub w: u64,
    /// W, the product of primes below `w`.
    pub w_modulus: u64,
    /// Residue b with gcd(b, W) = 1.
    pub b: u64,
    /// Maximal polynomial degree the run is configured for.
    pub d0: u32,
    pub eta0: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Coarse scale M.
    pub m_cap: u64,
    /// Sieve level R.
    pub sieve_level: u64,
    /// Density target delta_0 carried along for reporting.
    pub delta0: f64,
}

impl Params {
    pub fn builder(n: u64) -> ParamsBuilder {
        ParamsBuilder {
            n,
            w: 3,
            b: 1,
            d0: 2,
            eta0: None,
            eta1: None,
            eta2: None,
            m_cap: None,
            sieve_level: None,
            delta0: 0.5,
        }
    }

    /// phi(W)/W as a float.
    pub fn w_density(&self) -> f64 {
        let phi = euler_phi(self.w_modulus).expect("W >= 1");
        phi as f64 / self.w_modulus as f64
    }

    /// Largest integer the sieve tables must cover: W*N + b.
    pub fn table_limit(&self) -> u64 {
        self.w_modulus * self.n + self.b
    }
}

pub struct ParamsBuilder {
    n: u64,
    w: u64,
    b: u64,
    d0: u32,
    eta0: Option<f64>,
    eta1: Option<f64>,
    eta2: Option<f64>,
    m_cap: Option<u64>,
    sieve_level: Option<u64>,
    delta0: f64,
}

impl ParamsBuilder {
    pub fn w(mut self, w: u64) -> Self {
        self.w = w;
        self
    }

    pub fn b(mut self, b: u64) -> Self {
        self.b = b;
        self
    }

    pub fn d0(mut self, d0: u32) -> Self {
        self.d0 = d0;
        self
    }

    pub fn eta0(mut self, v: f64) -> Self {
        self.eta0 = Some(v);
        self
    }

    pub fn eta1(mut self, v: f64) -> Self {
        self.eta1 = Some(v);
        self
    }

    pub fn eta2(mut self, v: f64) -> Self {
        self.eta2 = Some(v);
        self
    }

    /// Explicit coarse scale M, overriding floor(N^eta0).
    pub fn coarse_scale(mut self, m: u64) -> Self {
        self.m_cap = Some(m);
        self
    }

    /// Explicit sieve level R, overriding floor(N^eta2).
    pub fn sieve_level(mut self, r: u64) -> Self {
        self.sieve_level = Some(r);
        self
    }

    pub fn delta0(mut self, v: f64) -> Self {
        self.delta0 = v;
        self
    }

    pub fn build(self) -> Result<Params> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "scale N must be at least 2, got {}",
                self.n
            )));
        }
        if self.d0 == 0 {
            return Err(Error::InvalidArgument(
                "degree bound d0 must be positive".into(),
            ));
        }
        let eta0 = self.eta0.unwrap_or(0.3 / self.d0 as f64);
        let eta1 = self.eta1.unwrap_or(eta0 / 10.0);
        let eta2 = self.eta2.unwrap_or(eta1 / (2.0 * self.d0 as f64));
        let upper = 1.0 / (2.0 * self.d0 as f64);
        if !(0.0 < eta2 && eta2 < eta1 && eta1 < eta0 && eta0 < upper) {
            return Err(Error::InvalidArgument(format!(
                "exponents must satisfy 0 < eta2 < eta1 < eta0 < 1/(2 d0) = {}; got eta0={}, eta1={}, eta2={}",
                upper, eta0, eta1, eta2
            )));
        }
        let w_modulus = primorial_below(self.w)?;
        if self.b < 1 || self.b > w_modulus {
            return Err(Error::InvalidArgument(format!(
                "residue b must lie in [1, W] = [1, {}], got {}",
                w_modulus, self.b
            )));
        }
        if gcd(self.b, w_modulus) != 1 {
            return Err(Error::InvalidArgument(format!(
                "residue b = {} is not coprime to W = {}",
                self.b, w_modulus
            )));
        }
        let m_cap = self
            .m_cap
            .unwrap_or_else(|| (self.n as f64).powf(eta0).floor() as u64);
        let sieve_level = self
            .sieve_level
            .unwrap_or_else(|| (self.n as f64).powf(eta2).floor() as u64);
        if m_cap < 2 {
            return Err(Error::InvalidArgument(format!(
                "coarse scale M = {} is below 2; pass an explicit coarse_scale override",
                m_cap
            )));
        }
        if sieve_level < 2 {
            return Err(Error::InvalidArgument(format!(
                "sieve level R = {} is below 2 (floor(N^eta2) degenerates at desk scale); \
                 pass an explicit sieve_level override",
                sieve_level
            )));
        }
        if sieve_level > self.n {
            return Err(Error::InvalidArgument(format!(
                "sieve level R = {} exceeds N = {}",
                sieve_level, self.n
            )));
        }
        Ok(Params {
            n: self.n,
            w: self.w,
            w_modulus,
            b: self.b,
            d0: self.d0,
            eta0,
            eta1,
            eta2,
            m_cap,
            sieve_level,
            delta0: self.delta0,
        })
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

/// Smooth even cutoff supported on [-1, 1], normalized so that the energy
/// of its derivative over [0, 1] is 1.
pub struct CutoffFunction {
    rule: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    derivative: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    normalization: f64,
}

impl std::fmt::Debug for CutoffFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CutoffFunction")
            .field("normalization", &self.normalization)
            .field("exact_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl CutoffFunction {
    /// The default cosine cutoff (2*sqrt(2)/pi) * cos(pi t / 2).
    ///
    /// Its derivative is -sqrt(2) * sin(pi t / 2), whose squared integral
    /// over [0, 1] is exactly 1, so the normalization invariant holds with
    /// no numerical slack.
    pub fn cosine() -> Self {
        let amp = 2.0 * std::f64::consts::SQRT_2 / std::f64::consts::PI;
        CutoffFunction {
            rule: Box::new(|t: f64| (std::f64::consts::FRAC_PI_2 * t).cos()),
            derivative: Some(Box::new(|t: f64| {
                -std::f64::consts::SQRT_2 * (std::f64::consts::FRAC_PI_2 * t).sin()
            })),
            normalization: amp,
        }
    }

    /// A custom cutoff. `rule` is evaluated on |t| in [0, 1) and scaled by
    /// `normalization`; outside the support the cutoff is 0. When an exact
    /// `derivative` (already including the normalization) is not supplied,
    /// the normalization check falls back to central differences, which
    /// requires the rule to be smooth up to the endpoint.
    pub fn custom(
        rule: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
        normalization: f64,
    ) -> Result<Self> {
        let chi = CutoffFunction {
            rule: Box::new(rule),
            derivative,
            normalization,
        };
        let energy = chi.derivative_energy();
        if (energy - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "cutoff derivative energy over [0,1] is {:.9}, expected 1 within 1e-6",
                energy
            )));
        }
        Ok(chi)
    }

    /// chi(t): even, supported on [-1, 1].
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t >= 1.0 {
            0.0
        } else {
            self.normalization * (self.rule)(t)
        }
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Simpson quadrature of the derivative energy over [0, 1] with 10^4
    /// intervals, using the exact derivative when available.
    pub fn derivative_energy(&self) -> f64 {
        let n = 10_000usize;
        let h = 1.0 / n as f64;
        let d = |t: f64| -> f64 {
            match &self.derivative {
                Some(rule) => rule(t),
                None => {
                    let step = 1e-6;
                    let hi = (t + step).min(1.0);
                    let lo = (t - step).max(0.0);
                    (self.eval(hi) - self.eval(lo)) / (hi - lo)
                }
            }
        };
        let mut acc = d(0.0).powi(2) + d(1.0).powi(2);
        for i in 1..n {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += weight * d(i as f64 * h).powi(2);
        }
        acc * h / 3.0
    }
}

/// Default cutoff used throughout: the normalized cosine bump.
pub fn default_cutoff() -> CutoffFunction {
    CutoffFunction::cosine()
}

/// Label identifying which weight a tabulated measure came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureLabel {
    Lambda,
    Nu,
    F,
    G,
    A,
    Custom(String),
}

impl MeasureLabel {
    pub fn tag(&self) -> &str {
        match self {
            MeasureLabel::Lambda => "lambda",
            MeasureLabel::Nu => "nu",
            MeasureLabel::F => "f",
            MeasureLabel::G => "g",
            MeasureLabel::A => "a",
            MeasureLabel::Custom(s) => s,
        }
    }

    pub fn from_tag(tag: &str) -> Self {
        match tag {
            "lambda" => MeasureLabel::Lambda,
            "nu" => MeasureLabel::Nu,
            "f" => MeasureLabel::F,
            "g" => MeasureLabel::G,
            "a" => MeasureLabel::A,
            other => MeasureLabel::Custom(other.to_string()),
        }
    }
}

/// A function tabulated on `[1, N]`, interpreted on the cyclic group of the
/// stored ambient modulus (entries outside `[1, N]` are zero).
///
/// Values are non-negative except for the signed weight labeled `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    pub label: MeasureLabel,
    n: u64,
    modulus: u64,
    values: Vec<f64>,
}

impl Measure {
    pub fn new(label: MeasureLabel, n: u64, modulus: u64, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != n {
            return Err(Error::InvalidArgument(format!(
                "measure of scale {} needs {} values, got {}",
                n,
                n,
                values.len()
            )));
        }
        if modulus < n {
            return Err(Error::InvalidArgument(format!(
                "ambient modulus {} smaller than the index range [1, {}]",
                modulus, n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "measure values must be finite".into(),
            ));
        }
        if label != MeasureLabel::A {
            if let Some(v) = values.iter().find(|v| **v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "negative value {} in a measure labeled {}",
                    v,
                    label.tag()
                )));
            }
        }
        Ok(Measure {
            label,
            n,
            modulus,
            values,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at index `i` in [1, N]; panics outside that range.
    pub fn value(&self, i: u64) -> f64 {
        assert!(
            i >= 1 && i <= self.n,
            "measure index {} outside [1, {}]",
            i,
            self.n
        );
        self.values[(i - 1) as usize]
    }

    /// Value at a residue of the ambient cyclic group, zero off the support.
    /// Residue 0 aliases N exactly when the modulus equals N.
    pub fn residue_value(&self, r: i64) -> f64 {
        let m = self.modulus as i64;
        let r = r.rem_euclid(m) as u64;
        if r == 0 {
            if self.modulus == self.n {
                self.values[(self.n - 1) as usize]
            } else {
                0.0
            }
        } else if r <= self.n {
            self.values[(r - 1) as usize]
        } else {
            0.0
        }
    }

    /// Mean over `[1, N]` by pairwise summation.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.n as f64
    }

    /// CSV rows `n,value` with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, v)?;
        }
        Ok(())
    }

    /// Reads `n,value` rows; `#`-prefixed lines and a header row are
    /// skipped. Indices must be exactly 1..=N in order.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed == "n,value" {
                continue;
            }
            let (idx, val) = trimmed.split_once(',').ok_or_else(|| Error::Parse {
                position: lineno,
                message: format!("expected 'n,value', got '{}'", trimmed),
            })?;
            let idx: u64 = idx.trim().parse().map_err(|e| Error::Parse {
                position: lineno,
                message: format!("bad index: {}", e),
            })?;
            let val: f64 = val.trim().parse().map_err(|e| Error::Parse {
                position: lineno,
                message: format!("bad value: {}", e),
            })?;
            if idx != values.len() as u64 + 1 {
                return Err(Error::Parse {
                    position: lineno,
                    message: format!("indices must be contiguous from 1, got {}", idx),
                });
            }
            values.push(val);
        }
        let n = values.len() as u64;
        if n == 0 {
            return Err(Error::Degenerate("empty measure CSV".into()));
        }
        Measure::new(MeasureLabel::Custom("csv".into()), n, n, values)
    }

    /// Compact binary layout: `[u8 tag length][tag bytes][u64 N]
    /// [u64 modulus][N little-endian f64 values]`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let tag = self.label.tag().as_bytes();
        if tag.len() > u8::MAX as usize {
            return Err(Error::InvalidArgument("measure label tag too long".into()));
        }
        out.write_all(&[tag.len() as u8])?;
        out.write_all(tag)?;
        out.write_all(&self.n.to_le_bytes())?;
        out.write_all(&self.modulus.to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut len = [0u8; 1];
        input.read_exact(&mut len)?;
        let mut tag = vec![0u8; len[0] as usize];
        input.read_exact(&mut tag)?;
        let tag = String::from_utf8(tag).map_err(|_| Error::Parse {
            position: 1,
            message: "label tag is not UTF-8".into(),
        })?;
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word);
        input.read_exact(&mut word)?;
        let modulus = u64::from_le_bytes(word);
        let mut values = Vec::with_capacity(n as usize);
        for _ in 0..n {
            input.read_exact(&mut word)?;
            values.push(f64::from_le_bytes(word));
        }
        Measure::new(MeasureLabel::from_tag(&tag), n, modulus, values)
    }
}

/// The W-tricked prime weight: (phi(W)/W) log(Wn+b) at n with Wn+b prime,
/// zero elsewhere on `[1, N]`.
pub fn lambda_w_b(params: &Params, primes: &PrimeTable) -> Result<Measure> {
    let limit = params.table_limit();
    if primes.limit() < limit {
        return Err(Error::Resource(format!(
            "prime table covers {} but W*N+b = {} is required",
            primes.limit(),
            limit
        )));
    }
    let density = params.w_density();
    let values: Vec<f64> = (1..=params.n)
        .into_par_iter()
        .map(|n| {
            let q = params.w_modulus * n + params.b;
            if primes.is_prime(q) {
                density * (q as f64).ln()
            } else {
                0.0
            }
        })
        .collect();
    Measure::new(MeasureLabel::Lambda, params.n, params.n, values)
}

/// The sieve measure: (phi(W)/W) log R times the squared truncated divisor
/// sum over squarefree divisors m <= R of Wn+b, weighted by mu(m) and the
/// cutoff at log m / log R.
pub fn nu_w_b(params: &Params, chi: &CutoffFunction, spf: &SpfTable) -> Result<Measure> {
    let limit = params.table_limit();
    if spf.limit() < limit {
        return Err(Error::Resource(format!(
            "spf table covers {} but W*N+b = {} is required",
            spf.limit(),
            limit
        )));
    }
    let density = params.w_density();
    let log_r = (params.sieve_level as f64).ln();
    let r = params.sieve_level;
    let values: Vec<f64> = (1..=params.n)
        .into_par_iter()
        .map(|n| {
            let q = params.w_modulus * n + params.b;
            let primes = spf.distinct_prime_factors(q);
            let sum = squarefree_divisor_sum(&primes, r, log_r, chi);
            density * log_r * sum * sum
        })
        .collect();
    Measure::new(MeasureLabel::Nu, params.n, params.n, values)
}

/// Sum over squarefree divisors m <= r built from `primes` of
/// mu(m) * chi(log m / log r), by depth-first subset enumeration with early
/// cutoff (factors are sorted ascending, so once a product exceeds r every
/// deeper extension does too).
fn squarefree_divisor_sum(primes: &[u64], r: u64, log_r: f64, chi: &CutoffFunction) -> f64 {
    fn walk(
        primes: &[u64],
        start: usize,
        prod: u64,
        sign: f64,
        r: u64,
        log_r: f64,
        chi: &CutoffFunction,
    ) -> f64 {
        let mut acc = sign * chi.eval((prod as f64).ln() / log_r);
        for (offset, &p) in primes[start..].iter().enumerate() {
            match prod.checked_mul(p) {
                Some(next) if next <= r => {
                    acc += walk(primes, start + offset + 1, next, -sign, r, log_r, chi);
                }
                _ => break,
            }
        }
        acc
    }
    walk(primes, 0, 1, 1.0, r, log_r, chi)
}

/// The dense-model weights f, g and the signed weight a = alpha (g - 1_[M]).
#[derive(Debug)]
pub struct DenseModelWeights {
    /// Scaled indicator of the target prime subset on [R, N/2].
    pub f: Measure,
    /// Prime logarithm weight on [R, M] in the residue class 1 mod W.
    pub g: Measure,
    /// Signed weight alpha * (g - 1_[M]) supported on [1, M].
    pub a: Measure,
    /// The scaling constant: the largest alpha <= 1 with alpha*g <= nu_{W,1}
    /// pointwise, found by direct scan.
    pub alpha: f64,
    /// The comparison measure nu_{W,1} used in the alpha scan.
    pub nu2: Measure,
}

/// Builds the weights from a prime-subset predicate `a_set`, which decides
/// membership of the integer Wx+b.
pub fn dense_model_weights<P>(
    params: &Params,
    a_set: P,
    chi: &CutoffFunction,
    spf: &SpfTable,
) -> Result<DenseModelWeights>
where
    P: Fn(u64) -> bool + Sync,
{
    let limit = params.table_limit();
    if spf.limit() < limit {
        return Err(Error::Resource(format!(
            "spf table covers {} but W*N+b = {} is required",
            spf.limit(),
            limit
        )));
    }
    let density = params.w_density();
    let log_r = (params.sieve_level as f64).ln();
    let r = params.sieve_level;
    let m_cap = params.m_cap;

    let f_values: Vec<f64> = (1..=params.n)
        .into_par_iter()
        .map(|x| {
            if x >= r && 2 * x <= params.n && a_set(params.w_modulus * x + params.b) {
                density * log_r
            } else {
                0.0
            }
        })
        .collect();
    let f = Measure::new(MeasureLabel::F, params.n, params.n, f_values)?;

    let g_values: Vec<f64> = (1..=m_cap)
        .map(|x| {
            let q = params.w_modulus * x + 1;
            if x >= r && is_prime_by_spf(spf, q) {
                density * (q as f64).ln()
            } else {
                0.0
            }
        })
        .collect();
    let g = Measure::new(MeasureLabel::G, m_cap, m_cap, g_values)?;

    let params_b1 = Params {
        b: 1,
        ..params.clone()
    };
    let nu2 = nu_w_b(&params_b1, chi, spf)?;

    let mut alpha = f64::INFINITY;
    for x in 1..=m_cap {
        let gx = g.value(x);
        if gx > 0.0 {
            alpha = alpha.min(nu2.value(x) / gx);
        }
    }
    if !alpha.is_finite() {
        return Err(Error::Degenerate(format!(
            "no x in [R, M] = [{}, {}] has Wx+1 prime; the sieve level is too \
             large relative to the coarse scale",
            r, m_cap
        )));
    }
    let alpha = alpha.min(1.0);

    let a_values: Vec<f64> = (1..=m_cap).map(|x| alpha * (g.value(x) - 1.0)).collect();
    let a = Measure::new(MeasureLabel::A, m_cap, m_cap, a_values)?;

    Ok(DenseModelWeights {
        f,
        g,
        a,
        alpha,
        nu2,
    })
}

fn is_prime_by_spf(spf: &SpfTable, q: u64) -> bool {
    q >= 2 && spf.factorize(q).factors == [(q, 1)]
}

/// Both sides of the van der Corput comparison for a sequence supported on
/// `[1, M]` (given as a slice of length M and extended by zero): returns
/// `(lhs, rhs)` with `lhs = (E_{m in [M]} x_m)^2` and
/// `rhs = E_{|h| < M} E_{m in [M]} x_m x_{m+h}`.
///
/// The inequality `lhs <= 2 * rhs` holds for every real sequence: writing
/// S for the full sum, `rhs = S^2 / ((2M-1) M)` after expanding the square,
/// and `(2M-1) M <= 2 M^2`.
pub fn van_der_corput_sides(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    assert!(m >= 1, "sequence must be non-empty");
    let mean = pairwise_sum(xs) / m as f64;
    let lhs = mean * mean;
    let mut corr = Vec::with_capacity(2 * m - 1);
    for h in -(m as i64 - 1)..=(m as i64 - 1) {
        let mut inner = 0.0;
        for i in 0..m {
            let j = i as i64 + h;
            if j >= 0 && (j as usize) < m {
                inner += xs[i] * xs[j as usize];
            }
        }
        corr.push(inner / m as f64);
    }
    let rhs = pairwise_sum(&corr) / (2 * m - 1) as f64;
    (lhs, rhs)
}
