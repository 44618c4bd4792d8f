//! Acceptance checks, one test per criterion.
//!
//! Each test prints exactly one `ACCEPTANCE <k> PASS/FAIL: <detail>` line
//! (visible with `-- --nocapture`, and embedded in the panic message on
//! failure) and then asserts the verdict. Tolerances are pinned as the
//! constants below. Criteria that are unattainable at desk scale fail here
//! with the measured evidence in the detail line rather than being weakened.

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use petlab::arith::{PrimeTable, SpfTable};
use petlab::configs::{config_count_report, count_configs};
use petlab::correlation::{
    check_prime_class_claims, extra_condition_estimate, local_factor, ResidueFamily,
};
use petlab::gowers::{
    box_average, gowers_norm, gowers_u2_fft, lambda_deviation_norm, CyclicSignal,
};
use petlab::polyalg::{parse_poly_system, parse_system, pet_run, Monomial, PetTrace, Poly};
use petlab::sieve_measure::{default_cutoff, nu_w_b, van_der_corput_sides, Params};

/// Criterion 1: acceptable band for the mean of nu at N = 1e5.
const C1_MEAN_BAND: (f64, f64) = (0.8, 1.2);
/// Criterion 1: allowed growth factor of |mean - 1| from N = 1e5 to 1e6.
const C1_TREND_FACTOR: f64 = 1.5;
/// Criterion 4: relative agreement between independent Gowers evaluations.
const C4_REL_TOL: f64 = 1e-9;
/// Criterion 5: per-step slack factor for the non-increasing check.
const C5_STEP_SLACK: f64 = 1.05;
/// Criterion 7: minimal decay exponent of |E_p/E_p' - 1| over good primes.
const C7_MIN_EXPONENT: f64 = 1.7;
/// Criterion 7: bad primes must satisfy |E_p/E_p' - 1| <= this over p.
const C7_BAD_CONSTANT: f64 = 10.0;
/// Criterion 8: absolute slack around 1 for the extra-condition estimate.
const C8_ABS_SLACK: f64 = 0.15;
/// Criterion 8: standard-error multiplier alternative to the slack.
const C8_SE_MULTIPLIER: f64 = 3.0;
/// Criterion 9: acceptable count/predicted band at (N, M) = (1e5, 1e3).
const C9_RATIO_BAND: (f64, f64) = (0.6, 1.6);
/// Criterion 9: maximal relative ratio variation when N doubles.
const C9_TIGHTEN_FRAC: f64 = 0.20;
/// Criterion 10: floating-point slop for the exact vdC comparison.
const C10_FP_SLOP: f64 = 1e-12;

fn verdict(criterion: u32, pass: bool, detail: String) {
    let status = if pass { "PASS" } else { "FAIL" };
    let line = format!("ACCEPTANCE {criterion} {status}: {detail}");
    println!("{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_01_sieve_measure_normalization() {
    // Faithful run: eta2 = 0.05 so that R = N^0.05 (eta1 raised to keep the
    // exponent ordering 0 < eta2 < eta1 < eta0 legal).
    let eval = |n: u64| -> petlab::Result<f64> {
        let params = Params::builder(n).w(3).b(1).eta1(0.1).eta2(0.05).build()?;
        let spf = SpfTable::new(params.table_limit())?;
        Ok(nu_w_b(&params, &default_cutoff(), &spf)?.mean())
    };
    match (eval(100_000), eval(1_000_000)) {
        (Ok(m5), Ok(m6)) => {
            let dev5 = (m5 - 1.0).abs();
            let dev6 = (m6 - 1.0).abs();
            let pass =
                m5 >= C1_MEAN_BAND.0 && m5 <= C1_MEAN_BAND.1 && dev6 <= C1_TREND_FACTOR * dev5;
            verdict(
                1,
                pass,
                format!(
                    "mean {m5:.4} at N=1e5 (band [{}, {}]), |mean-1| {dev5:.4} at 1e5 vs {dev6:.4} at 1e6",
                    C1_MEAN_BAND.0, C1_MEAN_BAND.1
                ),
            );
        }
        (r5, _) => {
            let refusal = match r5 {
                Err(e) => e.to_string(),
                Ok(_) => "the N = 1e6 run was refused".to_string(),
            };
            let fallback = Params::builder(100_000)
                .w(3)
                .b(1)
                .sieve_level(2)
                .build()
                .and_then(|p| {
                    let spf = SpfTable::new(p.table_limit())?;
                    Ok(nu_w_b(&p, &default_cutoff(), &spf)?.mean())
                })
                .unwrap_or(f64::NAN);
            verdict(
                1,
                false,
                format!(
                    "R = N^0.05 floors to 1 at both N = 1e5 (1.78) and N = 1e6 (2.00 - eps), which the \
                     builder rejects ({refusal}); a sieve level below the first prime keeps only the \
                     d = 1 divisor, pinning the mean at (phi(W)/W) ln(R) chi(0)^2 = 0.23/0.28, and even \
                     the smallest admissible override R = 2 measures mean {fallback:.4} at N = 1e5, far \
                     outside [0.8, 1.2]; the unit-mean normalization is asymptotic in log R and cannot \
                     hold at R = N^0.05 on desk scales"
                ),
            );
        }
    }
}

/// Type-vector sequence along a trace: before the first step, then after
/// each step.
fn type_sequence(trace: &PetTrace) -> Vec<Vec<u64>> {
    let mut seq = Vec::new();
    if let Some(first) = trace.steps.first() {
        seq.push(first.type_before.weights().to_vec());
    }
    for s in &trace.steps {
        seq.push(s.type_after.weights().to_vec());
    }
    seq
}

/// PET ordering: compare per-degree class counts from the top degree down.
fn type_strictly_greater(a: &[u64], b: &[u64]) -> bool {
    let len = a.len().max(b.len());
    for i in (0..len).rev() {
        let av = a.get(i).copied().unwrap_or(0);
        let bv = b.get(i).copied().unwrap_or(0);
        if av != bv {
            return av > bv;
        }
    }
    false
}

fn types_strictly_decrease(seq: &[Vec<u64>]) -> bool {
    seq.windows(2).all(|w| type_strictly_greater(&w[0], &w[1]))
}

fn pet_params(d0: u32) -> Params {
    Params::builder(1000)
        .w(3)
        .b(1)
        .d0(d0)
        .coarse_scale(16)
        .sieve_level(10)
        .build()
        .expect("PET parameters build")
}

#[test]
fn criterion_02_pet_toy_example() {
    let system = parse_poly_system("m^2").expect("parse m^2");
    let trace = pet_run(&system, &pet_params(2)).expect("PET run on m^2");
    let seq = type_sequence(&trace);
    let claims_ok = trace.steps.iter().all(|s| s.claims.all());
    let pass = trace.t == 2
        && trace.d == 3
        && trace.group_multiplier == 7
        && seq.len() == 3
        && types_strictly_decrease(&seq)
        && claims_ok;
    verdict(
        2,
        pass,
        format!(
            "t={} d={} group_multiplier={} type sequence {:?} (strictly decreasing: {}), claims clean: {}",
            trace.t,
            trace.d,
            trace.group_multiplier,
            seq,
            types_strictly_decrease(&seq),
            claims_ok
        ),
    );
}

/// A random system of 1..=3 distinct polynomials vanishing at 0, degree
/// <= 3, coefficient magnitudes <= 5, nonzero leading coefficient.
fn random_admissible_system(rng: &mut ChaCha8Rng) -> Vec<Poly> {
    loop {
        let k = rng.gen_range(1..=3usize);
        let mut system: Vec<Poly> = Vec::new();
        for _ in 0..k {
            let deg = rng.gen_range(1..=3u32);
            let mut p = Poly::zero();
            for j in 1..=deg {
                let c: i64 = if j == deg {
                    let mag = rng.gen_range(1..=5i64);
                    if rng.gen_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                } else {
                    rng.gen_range(-5..=5i64)
                };
                if c != 0 {
                    p = p.add(&Poly::monomial(Monomial::new(vec![j]), c));
                }
            }
            system.push(p);
        }
        let distinct =
            (0..system.len()).all(|i| (i + 1..system.len()).all(|j| system[i] != system[j]));
        if distinct {
            return system;
        }
    }
}

#[test]
fn criterion_03_pet_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(1103);
    let params = pet_params(3);
    let started = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let mut completed = 0usize;
    for index in 0..50 {
        let system = random_admissible_system(&mut rng);
        let rendered = system
            .iter()
            .map(Poly::render_pet)
            .collect::<Vec<_>>()
            .join("; ");
        match pet_run(&system, &params) {
            Ok(trace) => {
                let seq = type_sequence(&trace);
                let ok = trace.t as usize <= 10_000
                    && types_strictly_decrease(&seq)
                    && trace.steps.iter().all(|s| s.claims.all());
                if ok {
                    completed += 1;
                } else {
                    failures.push(format!("system {index} [{rendered}]: invariant violated"));
                }
            }
            Err(e) => failures.push(format!("system {index} [{rendered}]: {e}")),
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if failures.is_empty() {
        verdict(
            3,
            true,
            format!(
                "50/50 systems terminate with decreasing types and clean claims in {elapsed:.1}s"
            ),
        );
    } else {
        verdict(
            3,
            false,
            format!(
                "{} of 50 systems are refused by the resource caps in {elapsed:.1}s ({} complete \
                 cleanly with strictly decreasing types and passing claims); the van-der-Corput \
                 step doubles the family, so mixed degree-3 systems and quadratic systems with \
                 three leading classes exceed any feasible family budget; first refusals: {}",
                failures.len(),
                completed,
                failures
                    .iter()
                    .take(3)
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(" | ")
            ),
        );
    }
}

/// Independent U^3 box value: a literal quadruple loop with compensated
/// summation (the library uses recursive shifted products and pairwise sums).
fn naive_u3_box(values: &[f64]) -> f64 {
    let n = values.len();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in 0..n {
        for h1 in 0..n {
            for h2 in 0..n {
                for h3 in 0..n {
                    let mut prod = 1.0;
                    for mask in 0..8usize {
                        let mut idx = x;
                        if mask & 1 != 0 {
                            idx += h1;
                        }
                        if mask & 2 != 0 {
                            idx += h2;
                        }
                        if mask & 4 != 0 {
                            idx += h3;
                        }
                        prod *= values[idx % n];
                    }
                    let y = prod - comp;
                    let t = sum + y;
                    comp = (t - sum) - y;
                    sum = t;
                }
            }
        }
    }
    sum / (n as f64).powi(4)
}

#[test]
fn criterion_04_gowers_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);

    let mut max_rel_u2 = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=128usize);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = CyclicSignal::new(values).expect("signal");
        let direct = gowers_norm(&f, 2).expect("direct U^2");
        let fft = gowers_u2_fft(&f);
        let rel = (direct - fft).abs() / direct.max(fft).max(f64::MIN_POSITIVE);
        max_rel_u2 = max_rel_u2.max(rel);
    }

    let mut max_rel_u3 = 0.0f64;
    for _ in 0..10 {
        let n = rng.gen_range(2..=32usize);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = CyclicSignal::new(values.clone()).expect("signal");
        let direct = box_average(&f, 3).expect("direct U^3 box");
        let naive = naive_u3_box(&values);
        let rel = (direct - naive).abs() / direct.abs().max(naive.abs()).max(f64::MIN_POSITIVE);
        max_rel_u3 = max_rel_u3.max(rel);
    }

    let pass = max_rel_u2 <= C4_REL_TOL && max_rel_u3 <= C4_REL_TOL;
    verdict(
        4,
        pass,
        format!(
            "max relative deviation {max_rel_u2:.2e} over 100 U^2 signals (mod <= 128), \
             {max_rel_u3:.2e} over 10 naive-loop U^3 signals (mod <= 32), tolerance {C4_REL_TOL:.0e}"
        ),
    );
}

#[test]
fn criterion_05_lambda_deviation_decay() {
    let norm_at = |n: u64| -> f64 {
        let params = Params::builder(n)
            .w(3)
            .b(1)
            .coarse_scale(2)
            .sieve_level(2)
            .build()
            .expect("decay parameters");
        let primes = PrimeTable::new(params.table_limit()).expect("prime table");
        lambda_deviation_norm(&params, 1, 2, &primes).expect("deviation norm")
    };
    let n8 = norm_at(1 << 8);
    let n10 = norm_at(1 << 10);
    let n12 = norm_at(1 << 12);
    let strict = n12 < n8;
    let slack = n10 <= C5_STEP_SLACK * n8 && n12 <= C5_STEP_SLACK * n10;
    let pass = strict && slack;
    let extra = if pass {
        String::new()
    } else {
        "; the sequence is still on the rising shoulder of the o(1) decay (it keeps growing \
         through N = 2^18, approaching ~0.168), so the strict-decrease clause is unattainable \
         at these scales"
            .to_string()
    };
    verdict(
        5,
        pass,
        format!(
            "U^2 deviation norms {n8:.6} (2^8), {n10:.6} (2^10), {n12:.6} (2^12); strict \
             decrease 2^12 < 2^8: {strict}; 5% per-step slack: {slack}{extra}"
        ),
    );
}

#[test]
fn criterion_06_local_factor_oracle() {
    let vars = ["x1", "x2"];
    let corpus = [
        "x1",
        "3*x1 + 1",
        "x1; x2",
        "x1 + x2",
        "x1 * x2",
        "x1^2 + x2",
        "x1 - x2; x1 + x2",
        "2*x1 + 3*x2 + 1",
        "x1^2 + x2^2",
        "x1*x2 + 1; x1 - 2",
    ];
    let primes = [2u64, 3, 5, 7, 11, 13];
    let mut checked = 0usize;
    let mut mismatches: Vec<String> = Vec::new();
    for text in corpus {
        let family = parse_system(text, &vars).expect("corpus parses");
        for &p in &primes {
            let got = local_factor(p, &family).expect("local factor");
            let mut zeros = 0i64;
            let modulus = BigInt::from(p);
            for a in 0..p {
                for b in 0..p {
                    let point = [BigInt::from(a), BigInt::from(b)];
                    let all_zero = family
                        .iter()
                        .all(|q| q.eval_bigint(&point).mod_floor(&modulus) == BigInt::from(0));
                    if all_zero {
                        zeros += 1;
                    }
                }
            }
            let want = Rational64::new(zeros, (p * p) as i64);
            if got != want {
                mismatches.push(format!("family [{text}] at p={p}: {got} != {want}"));
            }
            checked += 1;
        }
    }
    verdict(
        6,
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("c_p equals the exhaustive F_p^2 count for all {checked} (family, prime) pairs")
        } else {
            format!(
                "{} of {checked} comparisons differ: {}",
                mismatches.len(),
                mismatches.join(" | ")
            )
        },
    );
}

#[test]
fn criterion_07_euler_factor_claims() {
    let vars = ["x1", "x2"];

    // Good-prime corpus: every prime in [5, 199] classifies good for the
    // W-shifted family, z = z' = 1/log R with R = e^10, real line only.
    let good_family = ResidueFamily::single(
        parse_system("x1; x1 + x2^2", &vars).expect("good corpus parses"),
        1,
    );
    let report = check_prime_class_claims(&good_family, 2, (5, 199), 1, 7, 10.0, 0.05)
        .expect("claims report");
    let all_good = report.bad_count == 0 && report.terrible_count == 0;
    let fit_ok = report.good_fit_exponent >= C7_MIN_EXPONENT;
    let small_ok = report.small_primes_exact;

    // Manufactured bad-but-not-terrible prime: congruent members at p = 11.
    let bad_family = ResidueFamily::single(
        parse_system("x1; x1 + 11", &vars).expect("bad corpus parses"),
        1,
    );
    let bad_report = check_prime_class_claims(&bad_family, 2, (11, 11), 1, 7, 10.0, 0.05)
        .expect("bad-prime report");
    let row = &bad_report.rows[0];
    let bad_ok = row.bad && !row.terrible && row.max_ratio_dev <= C7_BAD_CONSTANT / row.p as f64;

    let pass = all_good && fit_ok && small_ok && bad_ok;
    verdict(
        7,
        pass,
        format!(
            "good primes in [5, 199]: {} (fit exponent {:.3} >= {C7_MIN_EXPONENT}); E_p = 1 \
             exactly for p < w: {small_ok}; bad prime p=11 dev {:.4} <= 10/11 with measured \
             constant p*dev = {:.3}",
            all_good, report.good_fit_exponent, row.max_ratio_dev, bad_report.bad_constant
        ),
    );
}

#[test]
fn criterion_08_extra_condition_estimate() {
    // Six shift polynomials from differencing m^2 twice, in expanded form:
    //   2mh1+h1^2, (m+h1)^2, (m+h2)^2+2mh1+h1^2,
    //   2(m+h3)h1+h1^2, (m+h3+h1)^2, (m+h2+h3)^2+2(m+h3)h1+h1^2.
    let q_text = "2*m*h1 + h1^2; \
                  m^2 + 2*m*h1 + h1^2; \
                  m^2 + 2*m*h1 + 2*m*h2 + h1^2 + h2^2; \
                  2*m*h1 + 2*h1*h3 + h1^2; \
                  m^2 + 2*m*h1 + 2*m*h3 + h1^2 + 2*h1*h3 + h3^2; \
                  m^2 + 2*m*h1 + 2*m*h2 + 2*m*h3 + h1^2 + h2^2 + h3^2 + 2*h2*h3 + 2*h1*h3";
    // Eight 0/1 forms m + omega . (h1, h2, h3) over omega in {0,1}^3.
    let l_text = "m; m + h1; m + h2; m + h3; m + h1 + h2; m + h1 + h3; \
                  m + h2 + h3; m + h1 + h2 + h3";
    let vars = ["m", "h1", "h2", "h3"];
    let q_family = parse_system(q_text, &vars).expect("Q family parses");
    let l_family = parse_system(l_text, &vars).expect("L family parses");

    // N = 1e5 with the default eta0 = 0.15 derives M = floor(N^0.15) = 5;
    // the criterion leaves R unpinned, so R = 10 is fixed here.
    let params = Params::builder(100_000)
        .w(3)
        .b(1)
        .d0(2)
        .sieve_level(10)
        .build()
        .expect("estimate parameters");
    assert_eq!(params.m_cap, 5, "derived coarse scale is N^0.15");
    let spf = SpfTable::new(params.table_limit()).expect("spf table");
    let nu = nu_w_b(&params, &default_cutoff(), &spf).expect("nu tabulates");

    let mut lines = Vec::new();
    let mut all_ok = true;
    for k in [0u32, 1, 2] {
        let report =
            extra_condition_estimate(&nu, &nu, &q_family, &l_family, k, 100_000, 64, 808, &params)
                .expect("estimate runs");
        let tol = (C8_SE_MULTIPLIER * report.standard_error).max(C8_ABS_SLACK);
        let ok = (report.point_estimate - 1.0).abs() <= tol;
        all_ok &= ok;
        lines.push(format!(
            "k={k}: {:.5} +- {:.5} ({})",
            report.point_estimate,
            report.standard_error,
            if ok { "within" } else { "outside" }
        ));
    }
    let extra = if all_ok {
        String::new()
    } else {
        "; at desk scale each of the eight nu factors averages well below 1 (mean nu ~ 0.52 at \
         R = 10) and the nested levels multiply six more sub-unit factors in, so the product \
         collapses toward 0: the 1 + o(1) claim is asymptotic in W and R and unattainable at \
         N = 1e5"
            .to_string()
    };
    verdict(
        8,
        all_ok,
        format!(
            "target 1 within max(3 SE, {C8_ABS_SLACK}): {}{extra}",
            lines.join("; ")
        ),
    );
}

/// Trial-division brute force for k=1, P = m^2, shift = -1: pairs (n, p)
/// with p <= M prime and n + (p-1)^2 prime. Independent of the library.
fn brute_force_square_count(n: u64, m_cap: u64) -> u64 {
    fn is_prime(v: u64) -> bool {
        if v < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= v {
            if v.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }
    let mut count = 0;
    for p in 2..=m_cap {
        if !is_prime(p) {
            continue;
        }
        let step = (p - 1) * (p - 1);
        for a in 1..=n {
            if is_prime(a + step) {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn criterion_09_count_vs_prediction() {
    let polys = parse_poly_system("m^2").expect("parse m^2");

    let small_table = PrimeTable::new(11_000).expect("small table");
    let lib_small = count_configs(&polys, 1_000, 100, -1, &small_table).expect("library count");
    let brute = brute_force_square_count(1_000, 100);
    let exact_ok = lib_small == brute && lib_small == 3366;

    // Covers N = 2e5 plus the largest step (997 - 1)^2 = 992016.
    let table = PrimeTable::new(1_200_000).expect("large table");
    let report_1 =
        config_count_report(&polys, 100_000, 1_000, -1, 1_000, &table).expect("report at N = 1e5");
    let report_2 =
        config_count_report(&polys, 200_000, 1_000, -1, 1_000, &table).expect("report at N = 2e5");
    let r1 = report_1.ratio.expect("admissible system has a ratio");
    let r2 = report_2.ratio.expect("admissible system has a ratio");
    let band_ok = r1 >= C9_RATIO_BAND.0 && r1 <= C9_RATIO_BAND.1;
    let tighten_ok = (r2 - r1).abs() / r1 <= C9_TIGHTEN_FRAC;

    let pass = exact_ok && band_ok && tighten_ok;
    verdict(
        9,
        pass,
        format!(
            "count {lib_small} at (1e3, 1e2) (brute force {brute}, both must be 3366); ratio \
             {r1:.4} at N = 1e5 in [{}, {}]; ratio {r2:.4} at N = 2e5, relative variation {:.4} <= {}",
            C9_RATIO_BAND.0,
            C9_RATIO_BAND.1,
            (r2 - r1).abs() / r1,
            C9_TIGHTEN_FRAC
        ),
    );
}

#[test]
fn criterion_10_van_der_corput_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..200 {
        let m = rng.gen_range(1..=256usize);
        let xs: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (lhs, rhs) = van_der_corput_sides(&xs);
        if lhs > 2.0 * rhs + C10_FP_SLOP * (1.0 + lhs.abs()) {
            violations += 1;
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / (2.0 * rhs));
        }
    }
    verdict(
        10,
        violations == 0,
        format!(
            "lhs <= 2 rhs on 200 random sequences (M <= 256), {violations} violations, \
             max lhs/(2 rhs) = {worst:.6}"
        ),
    );
}
