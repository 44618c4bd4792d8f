//! petlab: command-line front end for the sieve-measure / PET / correlation
//! toolkit.
//!
//! Every run emits a single payload (CSV or JSON) whose header embeds the
//! full run configuration, so any output file can be reproduced from its own
//! first line. Randomness is always driven by an explicit or recorded seed;
//! under `--deterministic` the timestamp is suppressed and randomized
//! subcommands refuse to run without `--seed`, which makes payloads
//! byte-identical across repeated runs and thread counts.
//!
//! Exit codes: 0 on success, 2 on invalid arguments or unparseable input,
//! 3 on resource refusals and internal failures.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Number, Value};

use petlab::arith::{primorial_below, PrimeTable, SpfTable};
use petlab::configs::{bateman_horn_prediction, config_count_report, count_configs_dense};
use petlab::correlation::{
    check_prime_class_claims, extra_condition_estimate, forms_condition_estimate,
    local_factor_report, ResidueFamily, DEFAULT_INNER_SAMPLES,
};
use petlab::gowers::{
    box_average, gowers_norm, gowers_u2_fft, lambda_deviation_norm, CyclicSignal,
};
use petlab::polyalg::{parse_poly_system, parse_system, pet_run, Poly};
use petlab::sieve_measure::{default_cutoff, lambda_w_b, nu_w_b, Measure, Params};
use petlab::{Error, Result};

const FORMS_VARS: [&str; 8] = ["h1", "h2", "h3", "h4", "h5", "h6", "h7", "h8"];
const EXTRA_VARS: [&str; 8] = ["m", "h1", "h2", "h3", "h4", "h5", "h6", "h7"];

#[derive(Parser)]
#[command(
    name = "petlab",
    version,
    about = "Sieve measures, Gowers norms, PET traces, local factors, and prime configuration counts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format (default: csv for sieve-measure, json otherwise)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the payload to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker thread cap (default: PETLAB_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress the timestamp and require --seed on randomized subcommands
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the W-tricked prime weight or the sieve majorant over [1, N]
    SieveMeasure(SieveMeasureArgs),
    /// Gowers U^d norm of a constant or file-loaded signal
    Gowers(GowersArgs),
    /// Scan the U^d deviation norm of the prime weight over a grid of scales N
    LambdaDecay(LambdaDecayArgs),
    /// Run the PET induction on a polynomial system and print the trace
    Pet(PetArgs),
    /// Local factors c_p with good/bad/terrible flags for primes up to a bound
    LocalFactors(LocalFactorsArgs),
    /// Check the prime-classification claims for a shifted residue family
    EulerCheck(EulerCheckArgs),
    /// Monte Carlo estimate of a linear-forms correlation average
    FormsCheck(FormsCheckArgs),
    /// Monte Carlo estimate of the extra-condition average with nested moments
    ExtraCheck(ExtraCheckArgs),
    /// Exact count of prime configurations with prime-shifted steps
    CountConfigs(CountConfigsArgs),
    /// Heuristic prediction (singular series and main term) for a count
    Predict(PredictArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MeasureKind {
    /// Normalized prime indicator Lambda_{W,b}
    Lambda,
    /// Squared divisor-sum majorant nu_{W,b}
    Nu,
}

#[derive(Args, Serialize)]
struct SieveMeasureArgs {
    /// Principal scale N
    #[arg(long = "N")]
    n: u64,
    /// Small-prime cutoff w; W is the product of primes below w
    #[arg(long, default_value_t = 3)]
    w: u64,
    /// Residue b coprime to W
    #[arg(long, default_value_t = 1)]
    b: u64,
    /// Which weight to tabulate
    #[arg(long, value_enum, default_value_t = MeasureKind::Nu)]
    measure: MeasureKind,
    /// Sieve level R (default: N^eta2, which degenerates below desk scale;
    /// pass an explicit value such as 10 for small N)
    #[arg(long = "R")]
    sieve_level: Option<u64>,
    /// Coarse scale M (default: N^eta0)
    #[arg(long = "M")]
    coarse_scale: Option<u64>,
    /// Maximal configured polynomial degree
    #[arg(long)]
    d0: Option<u32>,
}

#[derive(Args, Serialize)]
struct GowersArgs {
    /// Norm order d >= 1
    #[arg(long)]
    d: u32,
    /// Modulus for --constant signals
    #[arg(long)]
    modulus: Option<u64>,
    /// Use the constant signal with this value
    #[arg(long, allow_negative_numbers = true)]
    constant: Option<f64>,
    /// Load the signal from a measure file (.csv or binary)
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LambdaDecayArgs {
    /// Deviation norm order d
    #[arg(long, default_value_t = 2)]
    d: u32,
    /// Small-prime cutoff w
    #[arg(long, default_value_t = 3)]
    w: u64,
    /// Residue b coprime to W
    #[arg(long, default_value_t = 1)]
    b: u64,
    /// Comma-separated grid of scales N
    #[arg(long, default_value = "256,1024,4096")]
    n_grid: String,
}

#[derive(Args, Serialize)]
struct PetArgs {
    /// Semicolon-separated system of polynomials in m, each vanishing at 0
    #[arg(long)]
    polys: String,
    /// W-trick modulus; must be a primorial (1, 2, 6, 30, 210, ...)
    #[arg(long = "W", default_value_t = 2)]
    w_modulus: u64,
    /// Principal scale N carried in the parameters
    #[arg(long = "N", default_value_t = 1000)]
    n: u64,
    /// Residue b coprime to W
    #[arg(long, default_value_t = 1)]
    b: u64,
    /// Degree cap d0 (default: the largest degree in the system, at least 2)
    #[arg(long)]
    d0: Option<u32>,
}

#[derive(Args, Serialize)]
struct LocalFactorsArgs {
    /// Semicolon-separated polynomial family
    #[arg(long)]
    polys: String,
    /// Comma-separated variable names for the family
    #[arg(long, default_value = "x1,x2,x3,x4")]
    vars: String,
    /// Largest prime to report
    #[arg(long, default_value_t = 50)]
    p_max: u64,
}

#[derive(Args, Serialize)]
struct EulerCheckArgs {
    /// Semicolon-separated polynomial family
    #[arg(long)]
    polys: String,
    /// Comma-separated variable names for the family
    #[arg(long, default_value = "x1,x2,x3,x4")]
    vars: String,
    /// Size of the leading block carrying residue b1 (default: all members)
    #[arg(long)]
    j1_count: Option<usize>,
    /// W-trick modulus
    #[arg(long = "W", default_value_t = 2)]
    w_modulus: u64,
    /// Residue for the leading block, coprime to W
    #[arg(long, default_value_t = 1)]
    b1: u64,
    /// Residue for the trailing block, coprime to W
    #[arg(long, default_value_t = 1)]
    b2: u64,
    /// Prime range lo:hi to classify
    #[arg(long, default_value = "5:199")]
    p_range: String,
    /// Re(z) on every sampled line; log R = 1/Re(z)
    #[arg(long, default_value_t = 0.1)]
    z_real: f64,
    /// Extra z-lines with random imaginary parts beyond the real line
    #[arg(long, default_value_t = 0)]
    z_imag_samples: usize,
    /// Relative band for the small-prime product check
    #[arg(long, default_value_t = 0.05)]
    band: f64,
    /// RNG seed (required with --deterministic when --z-imag-samples > 0)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct FormsCheckArgs {
    /// Principal scale N
    #[arg(long = "N", default_value_t = 10_000)]
    n: u64,
    /// Small-prime cutoff w
    #[arg(long, default_value_t = 3)]
    w: u64,
    /// Residue b coprime to W
    #[arg(long, default_value_t = 1)]
    b: u64,
    /// Sieve level R (default: N^eta2, which degenerates below desk scale;
    /// pass an explicit value such as 10 for small N)
    #[arg(long = "R")]
    sieve_level: Option<u64>,
    /// Coarse scale M (default: N^eta0)
    #[arg(long = "M")]
    coarse_scale: Option<u64>,
    /// Maximal configured polynomial degree
    #[arg(long)]
    d0: Option<u32>,
    /// Semicolon-separated shift polynomials in h1..h8
    #[arg(long)]
    polys: String,
    /// Sampling box, one lo:hi pair per variable, comma-separated
    #[arg(long = "box")]
    box_spec: String,
    /// Monte Carlo sample count
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// RNG seed (required under --deterministic)
    #[arg(long)]
    seed: Option<u64>,
    /// Load the measure from a file instead of tabulating nu_{W,b}
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ExtraCheckArgs {
    /// Principal scale N
    #[arg(long = "N", default_value_t = 10_000)]
    n: u64,
    /// Small-prime cutoff w
    #[arg(long, default_value_t = 3)]
    w: u64,
    /// Residue for the outer measure nu_{W,b1}
    #[arg(long, default_value_t = 1)]
    b1: u64,
    /// Residue for the linear-form measure nu_{W,b2}
    #[arg(long, default_value_t = 1)]
    b2: u64,
    /// Sieve level R (default: N^eta2, which degenerates below desk scale;
    /// pass an explicit value such as 10 for small N)
    #[arg(long = "R")]
    sieve_level: Option<u64>,
    /// Coarse scale M (default: N^eta0)
    #[arg(long = "M")]
    coarse_scale: Option<u64>,
    /// Maximal configured polynomial degree
    #[arg(long)]
    d0: Option<u32>,
    /// Semicolon-separated shift polynomials in m, h1..h7
    #[arg(long)]
    q_polys: String,
    /// Semicolon-separated 0/1 linear forms in m, h1..h7 (default: none)
    #[arg(long)]
    l_polys: Option<String>,
    /// Inner moment power k
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Outer Monte Carlo sample count
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Inner samples per outer point when k >= 1
    #[arg(long, default_value_t = DEFAULT_INNER_SAMPLES)]
    inner_samples: usize,
    /// RNG seed (required under --deterministic)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct CountConfigsArgs {
    /// Semicolon-separated step polynomials in m, each vanishing at 0
    #[arg(long)]
    polys: String,
    /// Count n over [1, N]
    #[arg(long = "N")]
    n: u64,
    /// Primes p up to M
    #[arg(long = "M")]
    m_cap: u64,
    /// Shift applied to p in the steps: -1 or +1
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    shift: i8,
    /// Count configurations inside this newline-delimited integer set
    #[arg(long)]
    dense_set: Option<PathBuf>,
    /// Singular-series truncation prime for the prediction
    #[arg(long, default_value_t = 1000)]
    truncation: u64,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    /// Semicolon-separated step polynomials in m, each vanishing at 0
    #[arg(long)]
    polys: String,
    /// Count n over [1, N]
    #[arg(long = "N")]
    n: u64,
    /// Primes p up to M
    #[arg(long = "M")]
    m_cap: u64,
    /// Shift applied to p in the steps: -1 or +1
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    shift: i8,
    /// Singular-series truncation prime
    #[arg(long, default_value_t = 1000)]
    truncation: u64,
}

/// Full reproduction record embedded in every payload header.
#[derive(Serialize)]
struct RunConfig {
    subcommand: &'static str,
    params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    output_format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_path: Option<String>,
    thread_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

/// A subcommand result carrying both renderings; `emit` picks one.
struct Output {
    json: Value,
    csv_comments: Vec<String>,
    csv_header: String,
    csv_rows: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidArgument(_) | Error::Parse { .. } | Error::Degenerate(_) => 2,
                Error::Resource(_) | Error::Internal(_) | Error::Io(_) => 3,
            };
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let thread_count = init_threads(cli.threads)?;
    let deterministic = cli.deterministic;

    let (subcommand, params, seed, default_format, output) = match &cli.command {
        Command::SieveMeasure(a) => (
            "sieve-measure",
            to_value(a)?,
            None,
            Format::Csv,
            cmd_sieve_measure(a)?,
        ),
        Command::Gowers(a) => ("gowers", to_value(a)?, None, Format::Json, cmd_gowers(a)?),
        Command::LambdaDecay(a) => (
            "lambda-decay",
            to_value(a)?,
            None,
            Format::Json,
            cmd_lambda_decay(a)?,
        ),
        Command::Pet(a) => ("pet", to_value(a)?, None, Format::Json, cmd_pet(a)?),
        Command::LocalFactors(a) => (
            "local-factors",
            to_value(a)?,
            None,
            Format::Json,
            cmd_local_factors(a)?,
        ),
        Command::EulerCheck(a) => {
            let (out, seed) = cmd_euler_check(a, deterministic)?;
            ("euler-check", to_value(a)?, seed, Format::Json, out)
        }
        Command::FormsCheck(a) => {
            let seed = resolve_seed(a.seed, deterministic, "forms-check")?;
            (
                "forms-check",
                to_value(a)?,
                Some(seed),
                Format::Json,
                cmd_forms_check(a, seed)?,
            )
        }
        Command::ExtraCheck(a) => {
            let seed = resolve_seed(a.seed, deterministic, "extra-check")?;
            (
                "extra-check",
                to_value(a)?,
                Some(seed),
                Format::Json,
                cmd_extra_check(a, seed)?,
            )
        }
        Command::CountConfigs(a) => (
            "count-configs",
            to_value(a)?,
            None,
            Format::Json,
            cmd_count_configs(a)?,
        ),
        Command::Predict(a) => ("predict", to_value(a)?, None, Format::Json, cmd_predict(a)?),
    };

    let format = cli.format.unwrap_or(default_format);
    let config = RunConfig {
        subcommand,
        params,
        seed,
        output_format: format.name(),
        output_path: cli.output.as_ref().map(|p| p.display().to_string()),
        thread_count,
        timestamp: if deterministic {
            None
        } else {
            Some(unix_now())
        },
    };
    emit(&config, &output, format, &cli.output)
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn cmd_sieve_measure(a: &SieveMeasureArgs) -> Result<Output> {
    let params = build_params(a.n, a.w, a.b, a.d0, a.coarse_scale, a.sieve_level)?;
    let measure = match a.measure {
        MeasureKind::Lambda => {
            let primes = PrimeTable::new(params.table_limit())?;
            lambda_w_b(&params, &primes)?
        }
        MeasureKind::Nu => {
            let spf = SpfTable::new(params.table_limit())?;
            nu_w_b(&params, &default_cutoff(), &spf)?
        }
    };
    let mean = measure.mean();
    let rows = measure
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{},{}", i + 1, fmt_f64(*v)))
        .collect();
    Ok(Output {
        json: json!({
            "params": to_value(&params)?,
            "measure": a.measure,
            "mean": mean,
            "values": measure.values(),
        }),
        csv_comments: vec![format!("mean: {}", fmt_f64(mean))],
        csv_header: "n,value".into(),
        csv_rows: rows,
    })
}

fn cmd_gowers(a: &GowersArgs) -> Result<Output> {
    let signal = match (&a.constant, &a.input) {
        (Some(c), None) => {
            let modulus = a.modulus.ok_or_else(|| {
                Error::InvalidArgument("--constant needs --modulus for the group size".into())
            })?;
            CyclicSignal::constant(modulus, *c)?
        }
        (None, Some(path)) => CyclicSignal::from_measure(&load_measure(path)?),
        _ => {
            return Err(Error::InvalidArgument(
                "provide exactly one signal source: --constant or --input".into(),
            ))
        }
    };
    let modulus = signal.modulus();
    let avg = box_average(&signal, a.d)?;
    let norm = gowers_norm(&signal, a.d)?;
    let u2_fft = (a.d == 2).then(|| gowers_u2_fft(&signal));

    let mut json = json!({
        "d": a.d,
        "modulus": modulus,
        "box_average": avg,
        "norm": norm,
    });
    if let Some(u2) = u2_fft {
        json["u2_fft"] = json!(u2);
    }
    let row = format!(
        "{},{},{},{},{}",
        a.d,
        modulus,
        fmt_f64(avg),
        fmt_f64(norm),
        u2_fft.map(fmt_f64).unwrap_or_default()
    );
    Ok(Output {
        json,
        csv_comments: vec![],
        csv_header: "d,modulus,box_average,norm,u2_fft".into(),
        csv_rows: vec![row],
    })
}

fn cmd_lambda_decay(a: &LambdaDecayArgs) -> Result<Output> {
    let grid = parse_u64_list(&a.n_grid)?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "--n-grid must name at least one scale".into(),
        ));
    }
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for &n in &grid {
        // The deviation norm depends only on N, w, b; pin the derived scales
        // to their admissible minimum so small grid points validate.
        let params = Params::builder(n)
            .w(a.w)
            .b(a.b)
            .coarse_scale(2)
            .sieve_level(2)
            .build()?;
        let primes = PrimeTable::new(params.table_limit())?;
        let norm = lambda_deviation_norm(&params, a.b, a.d, &primes)?;
        let modulus = (2 * u64::from(a.d) + 1) * n;
        entries.push(json!({"n": n, "modulus": modulus, "norm": norm}));
        rows.push(format!("{},{},{}", n, modulus, fmt_f64(norm)));
    }
    Ok(Output {
        json: json!({"d": a.d, "w": a.w, "b": a.b, "points": entries}),
        csv_comments: vec![],
        csv_header: "N,modulus,norm".into(),
        csv_rows: rows,
    })
}

fn cmd_pet(a: &PetArgs) -> Result<Output> {
    let system = parse_poly_system(&a.polys)?;
    let w = cutoff_for_primorial(a.w_modulus)?;
    let max_degree = system.iter().map(|p| p.total_degree()).max().unwrap_or(0);
    let d0 = a.d0.unwrap_or_else(|| max_degree.max(2));
    let params = Params::builder(a.n)
        .w(w)
        .b(a.b)
        .d0(d0)
        .coarse_scale(16)
        .sieve_level(10)
        .build()?;
    let trace = pet_run(&system, &params)?;

    let mut comments = vec![
        format!("input: {}", trace.input.join("; ")),
        format!("W: {}", trace.w),
        format!("t: {}", trace.t),
        format!("d: {}", trace.d),
        format!("group_multiplier: {}", trace.group_multiplier),
    ];
    let rows: Vec<String> = trace
        .steps
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{},{}",
                s.s,
                s.new_var,
                s.q,
                type_vector_str(s.type_before.weights()),
                type_vector_str(s.type_after.weights())
            )
        })
        .collect();
    if rows.is_empty() {
        comments.push("system already linear: no steps taken".into());
    }
    Ok(Output {
        json: to_value(&trace)?,
        csv_comments: comments,
        csv_header: "s,new_var,q,type_before,type_after".into(),
        csv_rows: rows,
    })
}

fn cmd_local_factors(a: &LocalFactorsArgs) -> Result<Output> {
    let names = split_names(&a.vars)?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let family = parse_system(&a.polys, &refs)?;
    if a.p_max < 2 {
        return Err(Error::InvalidArgument("--p-max must be at least 2".into()));
    }
    let primes = PrimeTable::new(a.p_max)?;
    let mut reports = Vec::new();
    for p in primes.primes() {
        reports.push(local_factor_report(p, &family)?);
    }
    let rows = reports
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.p,
                r.c_p_numerator,
                r.c_p_denominator,
                fmt_f64(r.c_p),
                r.good,
                r.bad,
                r.terrible
            )
        })
        .collect();
    let rendered: Vec<String> = family.iter().map(|p| p.render(&names)).collect();
    Ok(Output {
        json: json!({"family": rendered, "rows": to_value(&reports)?}),
        csv_comments: vec![format!("family: {}", rendered.join("; "))],
        csv_header: "p,c_p_numerator,c_p_denominator,c_p,good,bad,terrible".into(),
        csv_rows: rows,
    })
}

fn cmd_euler_check(a: &EulerCheckArgs, deterministic: bool) -> Result<(Output, Option<u64>)> {
    let names = split_names(&a.vars)?;
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let polys = parse_system(&a.polys, &refs)?;
    let j1_count = a.j1_count.unwrap_or(polys.len());
    if j1_count > polys.len() {
        return Err(Error::InvalidArgument(format!(
            "--j1-count {} exceeds the family size {}",
            j1_count,
            polys.len()
        )));
    }
    let family = ResidueFamily {
        j1: polys[..j1_count].to_vec(),
        j2: polys[j1_count..].to_vec(),
        b1: a.b1,
        b2: a.b2,
    };
    let (lo, hi) = parse_range(&a.p_range)?;
    if !(a.z_real.is_finite() && a.z_real > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "--z-real must be positive and finite, got {}",
            a.z_real
        )));
    }
    let randomized = a.z_imag_samples > 0;
    let seed = if randomized {
        resolve_seed(
            a.seed,
            deterministic,
            "euler-check with --z-imag-samples > 0",
        )?
    } else {
        a.seed.unwrap_or(0)
    };
    let report = check_prime_class_claims(
        &family,
        a.w_modulus,
        (lo, hi),
        1 + a.z_imag_samples,
        seed,
        1.0 / a.z_real,
        a.band,
    )?;

    let comments = vec![
        format!(
            "good: {}, bad: {}, terrible: {}",
            report.good_count, report.bad_count, report.terrible_count
        ),
        format!(
            "good_fit_exponent: {} (ok: {})",
            fmt_f64(report.good_fit_exponent),
            report.good_fit_exponent_ok
        ),
        format!("bad_constant: {}", fmt_f64(report.bad_constant)),
        format!(
            "small_primes_exact: {}, product {} vs target {} (in band: {})",
            report.small_primes_exact,
            fmt_f64(report.small_prime_product),
            fmt_f64(report.small_prime_target),
            report.small_primes_in_band
        ),
    ];
    let rows = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.p,
                r.good,
                r.bad,
                r.terrible,
                fmt_f64(r.max_ratio_dev)
            )
        })
        .collect();
    let out = Output {
        json: to_value(&report)?,
        csv_comments: comments,
        csv_header: "p,good,bad,terrible,max_ratio_dev".into(),
        csv_rows: rows,
    };
    Ok((out, randomized.then_some(seed)))
}

fn cmd_forms_check(a: &FormsCheckArgs, seed: u64) -> Result<Output> {
    let params = build_params(a.n, a.w, a.b, a.d0, a.coarse_scale, a.sieve_level)?;
    let nu = match &a.input {
        Some(path) => load_measure(path)?,
        None => {
            let spf = SpfTable::new(params.table_limit())?;
            nu_w_b(&params, &default_cutoff(), &spf)?
        }
    };
    let family = parse_system(&a.polys, &FORMS_VARS)?;
    let box_intervals = parse_box(&a.box_spec)?;
    let report = forms_condition_estimate(&nu, &family, &box_intervals, a.samples, seed, &params)?;
    Ok(estimate_output(to_value(&report)?, &report.notes))
}

fn cmd_extra_check(a: &ExtraCheckArgs, seed: u64) -> Result<Output> {
    let params1 = build_params(a.n, a.w, a.b1, a.d0, a.coarse_scale, a.sieve_level)?;
    let params2 = build_params(a.n, a.w, a.b2, a.d0, a.coarse_scale, a.sieve_level)?;
    let spf = SpfTable::new(params1.table_limit().max(params2.table_limit()))?;
    let chi = default_cutoff();
    let nu1 = nu_w_b(&params1, &chi, &spf)?;
    let nu2 = nu_w_b(&params2, &chi, &spf)?;
    let q_family = parse_system(&a.q_polys, &EXTRA_VARS)?;
    let l_family = match &a.l_polys {
        Some(text) => parse_system(text, &EXTRA_VARS)?,
        None => Vec::new(),
    };
    let report = extra_condition_estimate(
        &nu1,
        &nu2,
        &q_family,
        &l_family,
        a.k,
        a.samples,
        a.inner_samples,
        seed,
        &params1,
    )?;
    Ok(estimate_output(to_value(&report)?, &report.notes))
}

fn cmd_count_configs(a: &CountConfigsArgs) -> Result<Output> {
    let polys = parse_poly_system(&a.polys)?;
    let rendered: Vec<String> = polys.iter().map(Poly::render_pet).collect();
    if let Some(path) = &a.dense_set {
        let set = load_dense_set(path)?;
        let primes = PrimeTable::new(a.m_cap.max(2))?;
        let count =
            count_configs_dense(|v| set.contains(&v), &polys, a.n, a.m_cap, a.shift, &primes)?;
        let row = format!(
            "{},{},{},{},{},{}",
            a.n,
            a.m_cap,
            a.shift,
            polys.len(),
            rendered.join(";"),
            count
        );
        return Ok(Output {
            json: json!({
                "n": a.n,
                "m_cap": a.m_cap,
                "shift": a.shift,
                "polys": rendered,
                "dense_set_size": set.len(),
                "count": count,
            }),
            csv_comments: vec![format!("dense set: {} elements", set.len())],
            csv_header: "N,M,shift,k,polys,count".into(),
            csv_rows: vec![row],
        });
    }

    let primes = config_prime_table(&polys, a.n, a.m_cap, a.shift, a.truncation)?;
    let report = config_count_report(&polys, a.n, a.m_cap, a.shift, a.truncation, &primes)?;
    let mut comments = Vec::new();
    if let Some(p) = report.blocking_prime {
        comments.push(format!("inadmissible: blocked at p = {p}"));
    }
    let row = format!(
        "{},{},{},{},{},{},{},{},{}",
        report.n,
        report.m_cap,
        report.shift,
        report.polys.len(),
        report.polys.join(";"),
        report.count,
        fmt_f64(report.singular_series),
        fmt_f64(report.predicted),
        report.ratio.map(fmt_f64).unwrap_or_default()
    );
    Ok(Output {
        json: to_value(&report)?,
        csv_comments: comments,
        csv_header: "N,M,shift,k,polys,count,singular_series,predicted,ratio".into(),
        csv_rows: vec![row],
    })
}

fn cmd_predict(a: &PredictArgs) -> Result<Output> {
    let polys = parse_poly_system(&a.polys)?;
    let rendered: Vec<String> = polys.iter().map(Poly::render_pet).collect();
    let primes = PrimeTable::new(a.m_cap.max(a.truncation).max(2))?;
    let bh = bateman_horn_prediction(&polys, a.n, a.m_cap, a.shift, a.truncation, &primes)?;
    let mut comments = Vec::new();
    if let Some(p) = bh.blocking_prime {
        comments.push(format!("inadmissible: blocked at p = {p}"));
    }
    let row = format!(
        "{},{},{},{},{},{},{},{}",
        a.n,
        a.m_cap,
        a.shift,
        polys.len(),
        rendered.join(";"),
        fmt_f64(bh.singular_series),
        fmt_f64(bh.predicted),
        bh.blocking_prime.map(|p| p.to_string()).unwrap_or_default()
    );
    Ok(Output {
        json: json!({
            "n": a.n,
            "m_cap": a.m_cap,
            "shift": a.shift,
            "polys": rendered,
            "truncation_prime": bh.truncation_prime,
            "singular_series": bh.singular_series,
            "predicted": bh.predicted,
            "blocking_prime": bh.blocking_prime,
        }),
        csv_comments: comments,
        csv_header: "N,M,shift,k,polys,singular_series,predicted,blocking_prime".into(),
        csv_rows: vec![row],
    })
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn init_threads(requested: Option<usize>) -> Result<usize> {
    let from_env = std::env::var("PETLAB_THREADS").ok().map(|s| {
        s.parse::<usize>().map_err(|_| {
            Error::InvalidArgument(format!(
                "PETLAB_THREADS must be a positive integer, got {s:?}"
            ))
        })
    });
    let effective = match (requested, from_env) {
        (Some(t), _) => Some(t),
        (None, Some(parsed)) => Some(parsed?),
        (None, None) => None,
    };
    if let Some(t) = effective {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn resolve_seed(explicit: Option<u64>, deterministic: bool, what: &str) -> Result<u64> {
    match explicit {
        Some(s) => Ok(s),
        None if deterministic => Err(Error::InvalidArgument(format!(
            "{what} is randomized: --deterministic requires an explicit --seed"
        ))),
        None => {
            let now = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .unwrap_or_default();
            Ok((now.as_secs() << 32) ^ u64::from(now.subsec_nanos()))
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn build_params(
    n: u64,
    w: u64,
    b: u64,
    d0: Option<u32>,
    coarse_scale: Option<u64>,
    sieve_level: Option<u64>,
) -> Result<Params> {
    let mut builder = Params::builder(n).w(w).b(b);
    if let Some(d) = d0 {
        builder = builder.d0(d);
    }
    if let Some(m) = coarse_scale {
        builder = builder.coarse_scale(m);
    }
    if let Some(r) = sieve_level {
        builder = builder.sieve_level(r);
    }
    builder.build()
}

/// Type weights joined pipe-separated for a CSV cell.
fn type_vector_str(weights: &[u64]) -> String {
    weights
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join("|")
}

/// Maps a primorial W back to the smallest cutoff w producing it.
fn cutoff_for_primorial(w_modulus: u64) -> Result<u64> {
    for w in 2..=64 {
        let value = match primorial_below(w) {
            Ok(v) => v,
            Err(_) => break,
        };
        if value == w_modulus {
            return Ok(w);
        }
        if value > w_modulus {
            break;
        }
    }
    Err(Error::InvalidArgument(format!(
        "W = {w_modulus} is not a primorial (expected one of 1, 2, 6, 30, 210, ...)"
    )))
}

fn estimate_output(json: Value, notes: &[String]) -> Output {
    let row = format!(
        "{},{},{},{}",
        json.get("point_estimate")
            .map(render_csv_value)
            .unwrap_or_default(),
        json.get("standard_error")
            .map(render_csv_value)
            .unwrap_or_default(),
        json.get("samples")
            .map(render_csv_value)
            .unwrap_or_default(),
        json.get("seed").map(render_csv_value).unwrap_or_default(),
    );
    Output {
        json,
        csv_comments: notes.iter().map(|n| format!("note: {n}")).collect(),
        csv_header: "point_estimate,standard_error,samples,seed".into(),
        csv_rows: vec![row],
    }
}

fn render_csv_value(v: &Value) -> String {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return fmt_f64(f);
                }
            }
            n.to_string()
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn load_measure(path: &Path) -> Result<Measure> {
    let file = fs::File::open(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        Measure::read_csv(BufReader::new(file))
    } else {
        Measure::read_binary(BufReader::new(file))
    }
}

fn load_dense_set(path: &Path) -> Result<HashSet<u64>> {
    let text = fs::read_to_string(path)?;
    let mut set = HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v = trimmed.parse::<u64>().map_err(|_| Error::Parse {
            position: lineno + 1,
            message: format!("dense-set line {:?} is not a non-negative integer", trimmed),
        })?;
        set.insert(v);
    }
    Ok(set)
}

fn split_names(spec: &str) -> Result<Vec<String>> {
    let names: Vec<String> = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    if names.is_empty() {
        return Err(Error::InvalidArgument(
            "--vars must name at least one variable".into(),
        ));
    }
    Ok(names)
}

fn parse_u64_list(spec: &str) -> Result<Vec<u64>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| Error::InvalidArgument(format!("{s:?} is not a non-negative integer")))
        })
        .collect()
}

fn parse_range(spec: &str) -> Result<(u64, u64)> {
    let (lo, hi) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("range {spec:?} must look like lo:hi")))?;
    let lo = lo.trim().parse::<u64>().map_err(|_| {
        Error::InvalidArgument(format!("range start {:?} is not an integer", lo.trim()))
    })?;
    let hi = hi.trim().parse::<u64>().map_err(|_| {
        Error::InvalidArgument(format!("range end {:?} is not an integer", hi.trim()))
    })?;
    Ok((lo, hi))
}

fn parse_box(spec: &str) -> Result<Vec<(i64, i64)>> {
    let mut intervals = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (lo, hi) = part.split_once(':').ok_or_else(|| {
            Error::InvalidArgument(format!("box interval {part:?} must look like lo:hi"))
        })?;
        let lo = lo.trim().parse::<i64>().map_err(|_| {
            Error::InvalidArgument(format!("box bound {:?} is not an integer", lo.trim()))
        })?;
        let hi = hi.trim().parse::<i64>().map_err(|_| {
            Error::InvalidArgument(format!("box bound {:?} is not an integer", hi.trim()))
        })?;
        intervals.push((lo, hi));
    }
    if intervals.is_empty() {
        return Err(Error::InvalidArgument(
            "--box must contain at least one interval".into(),
        ));
    }
    Ok(intervals)
}

/// Prime table sized for a configuration count: covers M, the truncation
/// prime, and every value n + P_i(p + shift) the count can reach.
fn config_prime_table(
    polys: &[Poly],
    n: u64,
    m_cap: u64,
    shift: i8,
    truncation: u64,
) -> Result<PrimeTable> {
    let base_limit = m_cap.max(truncation).max(2);
    let base = PrimeTable::new(base_limit)?;
    let mut max_step: i128 = 0;
    for p in base.primes().take_while(|&p| p <= m_cap) {
        for q in polys {
            let v = q.eval_univariate(0, p as i128 + shift as i128)?;
            max_step = max_step.max(v);
        }
    }
    let needed = n as i128 + max_step;
    let limit = u64::try_from(needed.max(base_limit as i128)).map_err(|_| {
        Error::Resource(format!(
            "configuration values reach {needed}, beyond any prime table"
        ))
    })?;
    if limit > base_limit {
        PrimeTable::new(limit)
    } else {
        Ok(base)
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Rounds to 12 significant digits; all emitted numerics pass through here.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn fmt_f64(x: f64) -> String {
    format!("{}", round_sig(x))
}

/// Applies 12-significant-digit rounding to every float in a JSON tree.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().expect("checked is_f64");
                *v = Number::from_f64(round_sig(f))
                    .map(Value::Number)
                    .unwrap_or(Value::Null);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| Error::Internal(format!("serialization: {e}")))
}

fn emit(config: &RunConfig, output: &Output, format: Format, path: &Option<PathBuf>) -> Result<()> {
    let mut config_value = to_value(config)?;
    round_json(&mut config_value);
    let text = match format {
        Format::Json => {
            let mut result = output.json.clone();
            round_json(&mut result);
            let mut doc = Map::new();
            doc.insert("config".into(), config_value);
            doc.insert("result".into(), result);
            let mut rendered = serde_json::to_string_pretty(&Value::Object(doc))
                .map_err(|e| Error::Internal(format!("serialization: {e}")))?;
            rendered.push('\n');
            rendered
        }
        Format::Csv => {
            let config_line = serde_json::to_string(&config_value)
                .map_err(|e| Error::Internal(format!("serialization: {e}")))?;
            let mut text = format!("# config: {config_line}\n");
            for comment in &output.csv_comments {
                text.push_str(&format!("# {comment}\n"));
            }
            text.push_str(&output.csv_header);
            text.push('\n');
            for row in &output.csv_rows {
                text.push_str(row);
                text.push('\n');
            }
            text
        }
    };
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
