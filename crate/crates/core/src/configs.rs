//! Configuration counting: exact counts of prime configurations
//! n + P_1(p + shift), .., n + P_k(p + shift), a Bateman-Horn-style
//! prediction to compare them against, and the exact weighted multilinear
//! average that the soft machinery controls.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::PrimeTable;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::polyalg::{w_rescale, Poly};
use crate::sieve_measure::{Measure, Params};

/// Largest truncation prime accepted for the singular series.
const MAX_TRUNCATION_PRIME: u64 = 10_000;

/// Exact count, heuristic prediction and their ratio for one instance.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigCountReport {
    pub n: u64,
    pub m_cap: u64,
    pub shift: i8,
    pub polys: Vec<String>,
    pub count: u64,
    pub singular_series: f64,
    pub predicted: f64,
    pub truncation_prime: u64,
    /// count/predicted when predicted > 0, otherwise absent.
    pub ratio: Option<f64>,
    /// Set when the system is inadmissible: the smallest prime whose
    /// local density vanishes.
    pub blocking_prime: Option<u64>,
}

/// Prediction output: the truncated singular series and the resulting
/// expected count.
#[derive(Debug, Clone, Serialize)]
pub struct BatemanHorn {
    pub predicted: f64,
    pub singular_series: f64,
    pub truncation_prime: u64,
    /// Some(p) when the system is inadmissible at p; then predicted = 0.
    pub blocking_prime: Option<u64>,
}

/// Exact weighted multilinear average with its wraparound diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedAverageReport {
    pub value: f64,
    /// Largest |P_i(Wm)/W| over the m range.
    pub max_abs_shift: i64,
    /// True when some shift exceeds half the ambient modulus, so cyclic
    /// wraparound may distort the integer-line reading of the average.
    pub wraparound_warning: bool,
}

fn validate_shift(shift: i8) -> Result<()> {
    if shift == 1 || shift == -1 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "shift must be -1 or +1, got {}",
            shift
        )))
    }
}

fn validate_system(polys: &[Poly]) -> Result<()> {
    for p in polys {
        if !p.is_univariate_in(0) {
            return Err(Error::InvalidArgument(format!(
                "step polynomial {} must be univariate in m",
                p.render_pet()
            )));
        }
    }
    Ok(())
}

/// Step values P_i(p + shift) for one prime p.
fn step_values(polys: &[Poly], p: u64, shift: i8) -> Result<Vec<i128>> {
    let at = p as i128 + shift as i128;
    polys.iter().map(|q| q.eval_univariate(0, at)).collect()
}

/// Largest prime value n + P_i(p + shift) the count can touch; used to
/// validate prime-table coverage up front.
fn required_table_limit(
    polys: &[Poly],
    n: u64,
    m_cap: u64,
    shift: i8,
    primes: &PrimeTable,
) -> Result<u64> {
    let mut max_step: i128 = 0;
    for p in primes.primes().take_while(|&p| p <= m_cap) {
        for v in step_values(polys, p, shift)? {
            max_step = max_step.max(v);
        }
    }
    let needed = n as i128 + max_step.max(0);
    u64::try_from(needed).map_err(|_| {
        Error::Resource(format!(
            "configuration values reach {}, beyond any addressable prime table",
            needed
        ))
    })
}

/// Exact number of pairs (n, p) with n in [1, N], p <= M prime, and
/// n + P_i(p + shift) prime for every i. Values below 2 never count.
pub fn count_configs(
    polys: &[Poly],
    n: u64,
    m_cap: u64,
    shift: i8,
    primes: &PrimeTable,
) -> Result<u64> {
    validate_shift(shift)?;
    validate_system(polys)?;
    if primes.limit() < m_cap {
        return Err(Error::Resource(format!(
            "prime table covers {} but p ranges to {}",
            primes.limit(),
            m_cap
        )));
    }
    let needed = required_table_limit(polys, n, m_cap, shift, primes)?;
    if primes.limit() < needed {
        return Err(Error::Resource(format!(
            "prime table covers {} but configuration values reach {}",
            primes.limit(),
            needed
        )));
    }

    let small_primes: Vec<u64> = primes.primes().take_while(|&p| p <= m_cap).collect();
    let total: u64 = small_primes
        .par_iter()
        .map(|&p| {
            let steps = step_values(polys, p, shift).expect("validated above");
            let mut count = 0u64;
            for base in 1..=n {
                let all_prime = steps.iter().all(|&s| {
                    let v = base as i128 + s;
                    v >= 2 && primes.is_prime(v as u64)
                });
                count += u64::from(all_prime);
            }
            count
        })
        .sum();
    Ok(total)
}

/// Number of pairs (a, p) with a in [1, N], p <= M prime, and
/// a + P_i(p + shift) in A for every i. Values outside [1, N] are never
/// in A (the predicate is range-clipped).
pub fn count_configs_dense<F>(
    a_set: F,
    polys: &[Poly],
    n: u64,
    m_cap: u64,
    shift: i8,
    primes: &PrimeTable,
) -> Result<u64>
where
    F: Fn(u64) -> bool + Sync,
{
    validate_shift(shift)?;
    validate_system(polys)?;
    if primes.limit() < m_cap {
        return Err(Error::Resource(format!(
            "prime table covers {} but p ranges to {}",
            primes.limit(),
            m_cap
        )));
    }

    let small_primes: Vec<u64> = primes.primes().take_while(|&p| p <= m_cap).collect();
    let total: u64 = small_primes
        .par_iter()
        .map(|&p| {
            let steps = step_values(polys, p, shift).expect("validated above");
            let mut count = 0u64;
            for base in 1..=n {
                let all_in = steps.iter().all(|&s| {
                    let v = base as i128 + s;
                    v >= 1 && v <= n as i128 && a_set(v as u64)
                });
                count += u64::from(all_in);
            }
            count
        })
        .sum();
    Ok(total)
}

/// Local density numerator: the number of pairs (n, m) in F_p^2 with
/// m != 0 and n + P_i(m + shift) != 0 mod p for every i. Computed by
/// counting distinct forbidden residues per m, O(p k) per prime.
fn omega(polys: &[Poly], p: u64, shift: i8) -> Result<u64> {
    let mut total = 0u64;
    let mut forbidden = vec![false; p as usize];
    for m in 0..p as i128 {
        if m == 0 {
            continue;
        }
        forbidden.iter_mut().for_each(|f| *f = false);
        let mut distinct = 0u64;
        for q in polys {
            let v = q.eval_univariate(0, m + shift as i128)?;
            let residue = (-v).rem_euclid(p as i128) as usize;
            if !forbidden[residue] {
                forbidden[residue] = true;
                distinct += 1;
            }
        }
        total += p - distinct;
    }
    Ok(total)
}

/// Truncated Bateman-Horn-style heuristic.
///
/// singular_series = prod_{p <= T} [omega(p)/p^2] / (1 - 1/p)^{k+1};
/// predicted = singular_series * sum_{p <= M prime} N / prod_i
/// log((N+1)/2 + P_i(p + shift)), i.e. the prime condition on p is summed
/// exactly and each primality condition contributes one log factor taken
/// at the mean size of n + P_i. Inadmissible systems (omega(p) = 0 for
/// some p <= T) report predicted = 0 with the blocking prime.
pub fn bateman_horn_prediction(
    polys: &[Poly],
    n: u64,
    m_cap: u64,
    shift: i8,
    truncation_prime: u64,
    primes: &PrimeTable,
) -> Result<BatemanHorn> {
    validate_shift(shift)?;
    validate_system(polys)?;
    if truncation_prime > MAX_TRUNCATION_PRIME {
        return Err(Error::Resource(format!(
            "truncation prime {} exceeds the supported {}",
            truncation_prime, MAX_TRUNCATION_PRIME
        )));
    }
    if primes.limit() < m_cap.max(truncation_prime) {
        return Err(Error::Resource(format!(
            "prime table covers {} but the prediction needs {}",
            primes.limit(),
            m_cap.max(truncation_prime)
        )));
    }
    let k = polys.len() as i32;

    let mut singular_series = 1.0f64;
    for p in primes.primes().take_while(|&p| p <= truncation_prime) {
        let w = omega(polys, p, shift)?;
        if w == 0 {
            return Ok(BatemanHorn {
                predicted: 0.0,
                singular_series: 0.0,
                truncation_prime,
                blocking_prime: Some(p),
            });
        }
        let pf = p as f64;
        let local = (w as f64 / (pf * pf)) / (1.0 - 1.0 / pf).powi(k + 1);
        singular_series *= local;
    }

    let mut per_prime: Vec<f64> = Vec::new();
    'primes: for p in primes.primes().take_while(|&p| p <= m_cap) {
        let mut term = n as f64;
        for v in step_values(polys, p, shift)? {
            let mean_size = (n as f64 + 1.0) / 2.0 + v as f64;
            if mean_size <= 2.0 {
                // Essentially the whole n range sits below the primes;
                // the term contributes nothing.
                per_prime.push(0.0);
                continue 'primes;
            }
            term /= mean_size.ln();
        }
        per_prime.push(term);
    }
    let predicted = singular_series * pairwise_sum(&per_prime);

    Ok(BatemanHorn {
        predicted,
        singular_series,
        truncation_prime,
        blocking_prime: None,
    })
}

/// Runs [`count_configs`] and [`bateman_horn_prediction`] on the same
/// instance and assembles the combined report.
pub fn config_count_report(
    polys: &[Poly],
    n: u64,
    m_cap: u64,
    shift: i8,
    truncation_prime: u64,
    primes: &PrimeTable,
) -> Result<ConfigCountReport> {
    let count = count_configs(polys, n, m_cap, shift, primes)?;
    let heuristic = bateman_horn_prediction(polys, n, m_cap, shift, truncation_prime, primes)?;
    Ok(ConfigCountReport {
        n,
        m_cap,
        shift,
        polys: polys.iter().map(|p| p.render_pet()).collect(),
        count,
        singular_series: heuristic.singular_series,
        predicted: heuristic.predicted,
        truncation_prime,
        ratio: (heuristic.predicted > 0.0).then(|| count as f64 / heuristic.predicted),
        blocking_prime: heuristic.blocking_prime,
    })
}

/// Exact double average E_{m in [M]} E_{x in Z_N} a(m) prod_i
/// f_i(x + P_i(W m)/W) with cyclic indexing.
///
/// The steps P_i(W m)/W are integers because the P_i vanish at zero. The
/// weight `a` must be supported on [1, M]; all f_i must share a modulus.
pub fn weighted_average(
    a: &Measure,
    fs: &[&Measure],
    polys: &[Poly],
    params: &Params,
) -> Result<WeightedAverageReport> {
    if fs.len() != polys.len() {
        return Err(Error::InvalidArgument(format!(
            "{} measures for {} step polynomials",
            fs.len(),
            polys.len()
        )));
    }
    validate_system(polys)?;
    let m_cap = params.m_cap;
    if a.n() > m_cap {
        for m in (m_cap + 1)..=a.n() {
            if a.value(m) != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "weight is non-zero at {} but must be supported on [1, {}]",
                    m, m_cap
                )));
            }
        }
    }
    let modulus = match fs.first() {
        None => params.n,
        Some(f) => f.modulus(),
    };
    if fs.iter().any(|f| f.modulus() != modulus) {
        return Err(Error::InvalidArgument(
            "all averaged measures must share one modulus".into(),
        ));
    }

    // Rescaled steps evaluated once per m.
    let rescaled: Vec<Poly> = polys
        .iter()
        .map(|p| w_rescale(p, params.w_modulus))
        .collect::<Result<_>>()?;
    let mut shifts: Vec<Vec<i64>> = Vec::with_capacity(m_cap as usize);
    let mut max_abs_shift: i64 = 0;
    for m in 1..=m_cap {
        let mut row = Vec::with_capacity(rescaled.len());
        for q in &rescaled {
            let v = q.eval_univariate(0, m as i128)?;
            let v = i64::try_from(v)
                .map_err(|_| Error::Resource(format!("step value {} exceeds the i64 range", v)))?;
            max_abs_shift = max_abs_shift.max(v.abs());
            row.push(v);
        }
        shifts.push(row);
    }

    let per_m: Vec<f64> = (1..=m_cap)
        .into_par_iter()
        .map(|m| {
            let weight = if m <= a.n() { a.value(m) } else { 0.0 };
            if weight == 0.0 {
                return 0.0;
            }
            let row = &shifts[(m - 1) as usize];
            let mut inner = 0.0;
            for x in 0..modulus as i64 {
                let mut prod = 1.0;
                for (f, &s) in fs.iter().zip(row.iter()) {
                    prod *= f.residue_value(x + s);
                }
                inner += prod;
            }
            weight * inner / modulus as f64
        })
        .collect();

    Ok(WeightedAverageReport {
        value: pairwise_sum(&per_m) / m_cap as f64,
        max_abs_shift,
        wraparound_warning: max_abs_shift as u64 > modulus / 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::parse_poly_system;
    use crate::sieve_measure::MeasureLabel;
    use rand::{Rng, SeedableRng};

    fn table(limit: u64) -> PrimeTable {
        PrimeTable::new(limit).unwrap()
    }

    fn ones(n: u64, modulus: u64) -> Measure {
        Measure::new(
            MeasureLabel::Custom("ones".into()),
            n,
            modulus,
            vec![1.0; n as usize],
        )
        .unwrap()
    }

    /// Independent slow enumeration used as the counting oracle.
    fn brute_count(polys: &[Poly], n: u64, m_cap: u64, shift: i8, primes: &PrimeTable) -> u64 {
        let mut count = 0;
        for p in 2..=m_cap {
            if !primes.is_prime(p) {
                continue;
            }
            for base in 1..=n {
                let ok = polys.iter().all(|q| {
                    let v = base as i128 + q.eval_univariate(0, p as i128 + shift as i128).unwrap();
                    v >= 2 && primes.is_prime(v as u64)
                });
                count += u64::from(ok);
            }
        }
        count
    }

    #[test]
    fn hand_enumeration_square_steps() {
        // k=1, P=m^2, N=10, M=3, shift=-1: steps (p-1)^2 for p in {2, 3}
        // are 1 and 4; count n <= 10 with n+1 prime (n in {1,2,4,6,10})
        // plus n with n+4 prime (n in {1,3,7,9}) -> 9.
        let polys = parse_poly_system("m^2").unwrap();
        let primes = table(100);
        let got = count_configs(&polys, 10, 3, -1, &primes).unwrap();
        assert_eq!(got, 9);
        assert_eq!(got, brute_count(&polys, 10, 3, -1, &primes));
    }

    #[test]
    fn empty_system_counts_all_pairs() {
        let primes = table(1000);
        let pi_50 = primes.primes().take_while(|&p| p <= 50).count() as u64;
        assert_eq!(count_configs(&[], 20, 50, -1, &primes).unwrap(), 20 * pi_50);
        assert_eq!(count_configs(&[], 20, 1, -1, &primes).unwrap(), 0);
    }

    #[test]
    fn count_matches_brute_force_on_random_instances() {
        let primes = table(5000);
        for (text, n, m, shift) in [
            ("m", 60, 25, -1i8),
            ("m^2", 40, 12, 1),
            ("m; 2*m", 50, 20, -1),
            ("m^2+m", 30, 10, 1),
        ] {
            let polys = parse_poly_system(text).unwrap();
            let got = count_configs(&polys, n, m, shift, &primes).unwrap();
            assert_eq!(
                got,
                brute_count(&polys, n, m, shift, &primes),
                "system {}",
                text
            );
        }
    }

    #[test]
    fn count_is_symmetric_and_idempotent_under_duplicates() {
        let primes = table(5000);
        let ab = parse_poly_system("m; m^2").unwrap();
        let ba = parse_poly_system("m^2; m").unwrap();
        let dup = vec![ab[0].clone(), ab[1].clone(), ab[0].clone()];
        let base = count_configs(&ab, 50, 20, -1, &primes).unwrap();
        assert_eq!(base, count_configs(&ba, 50, 20, -1, &primes).unwrap());
        assert_eq!(base, count_configs(&dup, 50, 20, -1, &primes).unwrap());
    }

    #[test]
    fn count_is_monotone_in_both_scales() {
        let primes = table(20_000);
        let polys = parse_poly_system("m^2").unwrap();
        let mut previous = 0;
        for n in [50u64, 100, 200] {
            let c = count_configs(&polys, n, 40, -1, &primes).unwrap();
            assert!(c >= previous);
            previous = c;
        }
        let mut previous = 0;
        for m in [10u64, 20, 40] {
            let c = count_configs(&polys, 100, m, -1, &primes).unwrap();
            assert!(c >= previous);
            previous = c;
        }
    }

    #[test]
    fn table_shortfall_is_a_resource_error() {
        let primes = table(50);
        let polys = parse_poly_system("m^2").unwrap();
        assert!(matches!(
            count_configs(&polys, 40, 12, 1, &primes),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            count_configs(&[], 10, 100, -1, &primes),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn dense_count_trivial_sets() {
        let primes = table(1000);
        let polys = parse_poly_system("m").unwrap();
        let pi_20 = primes.primes().take_while(|&p| p <= 20).count() as u64;
        // Empty set.
        assert_eq!(
            count_configs_dense(|_| false, &polys, 50, 20, -1, &primes).unwrap(),
            0
        );
        // Full set with k=0: no constraints at all.
        assert_eq!(
            count_configs_dense(|_| true, &[], 50, 20, -1, &primes).unwrap(),
            50 * pi_20
        );
    }

    #[test]
    fn dense_count_matches_double_loop() {
        let primes = table(1000);
        let polys = parse_poly_system("m").unwrap();
        let n = 50u64;
        let m_cap = 20u64;
        let even = |v: u64| v.is_multiple_of(2);
        let got = count_configs_dense(even, &polys, n, m_cap, -1, &primes).unwrap();
        let mut want = 0;
        for p in 2..=m_cap {
            if !primes.is_prime(p) {
                continue;
            }
            for a in 1..=n as i128 {
                let v = a + (p as i128 - 1);
                if v >= 1 && v <= n as i128 && v % 2 == 0 {
                    want += 1;
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn omega_by_direct_scan() {
        // k=1, P=m, shift=-1 at p=2: pairs (n, m) with m != 0 and
        // n + (m-1) != 0 mod 2. m=1: n != 0 -> n=1. So omega(2) = 1.
        let polys = parse_poly_system("m").unwrap();
        assert_eq!(omega(&polys, 2, -1).unwrap(), 1);
        // Direct quadratic scan oracle for several primes and systems.
        for text in ["m", "m^2", "m; 2*m"] {
            let polys = parse_poly_system(text).unwrap();
            for p in [2u64, 3, 5, 7, 11] {
                let mut want = 0;
                for m in 1..p as i128 {
                    for n in 0..p as i128 {
                        let ok = polys.iter().all(|q| {
                            let v = n + q.eval_univariate(0, m - 1).unwrap();
                            v.rem_euclid(p as i128) != 0
                        });
                        want += u64::from(ok);
                    }
                }
                assert_eq!(omega(&polys, p, -1).unwrap(), want, "{} p={}", text, p);
            }
        }
    }

    #[test]
    fn prediction_trivial_and_admissibility() {
        let primes = table(10_000);
        // k=0: singular series 1, predicted N * pi(M).
        let report = bateman_horn_prediction(&[], 100, 50, -1, 1000, &primes).unwrap();
        assert!((report.singular_series - 1.0).abs() < 1e-12);
        let pi_50 = primes.primes().take_while(|&p| p <= 50).count() as f64;
        assert!((report.predicted - 100.0 * pi_50).abs() < 1e-6);
        assert_eq!(report.blocking_prime, None);

        // Systems whose steps vanish at zero are always admissible: the
        // residue m = -shift contributes p - 1 survivors at every p.
        let square = parse_poly_system("m; m^2").unwrap();
        let report = bateman_horn_prediction(&square, 100, 50, -1, 1000, &primes).unwrap();
        assert_eq!(report.blocking_prime, None);
        assert!(report.predicted > 0.0);
    }

    #[test]
    fn prediction_flags_inadmissible_systems() {
        let primes = table(10_000);
        // Steps t and t+1 always cover both residues mod 2, so the pair
        // {m, m+1} is blocked at p = 2. (m+1 does not vanish at zero, so
        // it is built directly rather than parsed.)
        let polys = vec![Poly::var(0), Poly::var(0).add(&Poly::constant(1))];
        assert_eq!(omega(&polys, 2, -1).unwrap(), 0);
        let report = bateman_horn_prediction(&polys, 100, 50, -1, 1000, &primes).unwrap();
        assert_eq!(report.blocking_prime, Some(2));
        assert_eq!(report.predicted, 0.0);
        assert_eq!(report.singular_series, 0.0);
        // The combined report carries the flag through with no ratio.
        let combined = config_count_report(&polys, 100, 50, -1, 1000, &primes).unwrap();
        assert_eq!(combined.blocking_prime, Some(2));
        assert_eq!(combined.ratio, None);
    }

    #[test]
    fn singular_series_converges_for_square_system() {
        let primes = table(10_000);
        let polys = parse_poly_system("m^2").unwrap();
        let coarse = bateman_horn_prediction(&polys, 1000, 100, -1, 1000, &primes)
            .unwrap()
            .singular_series;
        let fine = bateman_horn_prediction(&polys, 1000, 100, -1, 10_000, &primes)
            .unwrap()
            .singular_series;
        assert!(
            (fine / coarse - 1.0).abs() < 0.01,
            "coarse {} fine {}",
            coarse,
            fine
        );
    }

    #[test]
    fn prediction_tracks_counts_for_squares() {
        // Desk-scale end-to-end: the m^2 count at N=2000, M=100 should be
        // within a factor [0.5, 2] of the heuristic.
        let primes = table(20_000);
        let polys = parse_poly_system("m^2").unwrap();
        let report = config_count_report(&polys, 2000, 100, -1, 1000, &primes).unwrap();
        let ratio = report.ratio.unwrap();
        assert!(ratio > 0.5 && ratio < 2.0, "ratio {}", ratio);
    }

    #[test]
    fn weighted_average_trivial_cases() {
        let params = Params::builder(64)
            .coarse_scale(4)
            .sieve_level(2)
            .build()
            .unwrap();
        let a = ones(4, 4);
        let f = ones(64, 64);
        let polys = parse_poly_system("m").unwrap();
        let report = weighted_average(&a, &[&f], &polys, &params).unwrap();
        assert_eq!(report.value, 1.0);
        assert!(!report.wraparound_warning);

        let zero = Measure::new(MeasureLabel::A, 4, 4, vec![0.0; 4]).unwrap();
        let report = weighted_average(&zero, &[&f], &polys, &params).unwrap();
        assert_eq!(report.value, 0.0);
    }

    #[test]
    fn weighted_average_matches_double_loop() {
        let params = Params::builder(32)
            .coarse_scale(4)
            .sieve_level(2)
            .build()
            .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f_vals: Vec<f64> = (0..32).map(|_| rng.gen_range(0.0..2.0)).collect();
        let a_vals: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = Measure::new(MeasureLabel::F, 32, 32, f_vals.clone()).unwrap();
        let a = Measure::new(MeasureLabel::A, 4, 4, a_vals.clone()).unwrap();
        let polys = parse_poly_system("m^2").unwrap();

        // W = 2: step is P(2m)/2 = 2 m^2.
        let mut want = 0.0;
        for m in 1..=4i64 {
            let mut inner = 0.0;
            for x in 0..32i64 {
                inner += f.residue_value(x + 2 * m * m);
            }
            want += a.value(m as u64) * inner / 32.0;
        }
        want /= 4.0;

        let report = weighted_average(&a, &[&f], &polys, &params).unwrap();
        assert!((report.value - want).abs() < 1e-12);
        assert_eq!(report.max_abs_shift, 32);
        assert!(report.wraparound_warning); // 32 > 32/2.
    }

    #[test]
    fn weighted_average_validates_support_and_moduli() {
        let params = Params::builder(64)
            .coarse_scale(4)
            .sieve_level(2)
            .build()
            .unwrap();
        let polys = parse_poly_system("m").unwrap();
        let wide = ones(8, 8);
        let f = ones(64, 64);
        assert!(matches!(
            weighted_average(&wide, &[&f], &polys, &params),
            Err(Error::InvalidArgument(_))
        ));
        let g = ones(32, 32);
        let two = parse_poly_system("m; 2*m").unwrap();
        let a = ones(4, 4);
        assert!(matches!(
            weighted_average(&a, &[&f, &g], &two, &params),
            Err(Error::InvalidArgument(_))
        ));
    }
}
