//! Command-line front end: Haar sampling, singular numbers, process
//! simulation, exact generators, and the verification suites. Identical
//! invocations (including `PADIC_DYSON_SEED`) produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use padic_dyson::error::{Error, Result};
use padic_dyson::matrix::{singular_numbers, singular_numbers_minor_oracle, PAdicMatrix, Signature};
use padic_dyson::process::generators::{generator_a, generator_b};
use padic_dyson::process::{matrix_walk_simulate, reflected_walk_simulate, RateParams, Trajectory};
use padic_dyson::sampling::{derive_seed, haar_gln_zp, parse_rational, SignatureMeasure};
use padic_dyson::scalar::is_prime;
use padic_dyson::verify::{
    auto_precision, verify_generators, verify_lemma, verify_one_jump,
    verify_reflection_equivalence, verify_theorem_multitime, VerificationReport, DEFAULT_ALPHA,
};

#[derive(Parser)]
#[command(name = "padic-dyson", version, about = "p-adic matrix walks and reflected Poisson walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Haar-uniform matrices from GL_N(Z_p)
    Haar(HaarArgs),
    /// Singular numbers of a matrix read from a JSON file
    Snf(SnfArgs),
    /// Simulate trajectories of one of the two processes
    Simulate(SimulateArgs),
    /// Emit an exact generator as CSV
    Generator(GeneratorArgs),
    /// Run verification suites; exit 0 iff all pass
    Verify(VerifyArgs),
}

#[derive(Args)]
struct HaarArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 16)]
    precision: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SnfArgs {
    input: PathBuf,
    /// Also run the minor-determinant oracle and report agreement
    #[arg(long)]
    oracle: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Matrix,
    Reflected,
}

#[derive(Args)]
struct SimulateArgs {
    which: Which,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: Option<u64>,
    /// Clock rate base for the reflected walk, as an exact rational "a/b"
    #[arg(long)]
    t: Option<String>,
    /// Record times, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    times: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    samples: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Poisson rate of the matrix walk
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Jump measure for the matrix walk as a JSON file; default one box
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    precision: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichGen {
    A,
    B,
}

#[derive(Args)]
struct GeneratorArgs {
    which: WhichGen,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    t: Option<String>,
    /// Truncation: states with |kappa| <= k
    #[arg(long)]
    k: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Lemma,
    OneJump,
    Generators,
    Reflection,
    Theorem,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    suite: Suite,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 5)]
    k: i64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0])]
    times: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 0.02)]
    tv_bound: f64,
    /// Reintroduce the spurious (1-t) factor; the generator suite must fail
    #[arg(long, hide = true)]
    inject_distortion: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_seed(seed: Option<u64>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("PADIC_DYSON_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::InvalidInput(format!("PADIC_DYSON_SEED = {v:?} is not a u64"))),
        Err(_) => Ok(0),
    }
}

fn require_prime(p: u64) -> Result<u64> {
    if is_prime(p) {
        Ok(p)
    } else {
        Err(Error::NotPrime(p))
    }
}

fn parse_t(t: Option<&str>, p: Option<u64>) -> Result<BigRational> {
    match (t, p) {
        (Some(s), _) => {
            let r = parse_rational(s)?;
            RateParams::new(r.clone(), 1, BigRational::from_integer(1.into()))?;
            Ok(r)
        }
        (None, Some(p)) => {
            require_prime(p)?;
            Ok(BigRational::new(1.into(), p.into()))
        }
        (None, None) => Err(Error::InvalidInput("either --t or --p is required".into())),
    }
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("at least one time required".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "times must be nonnegative and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn cmd_haar(args: HaarArgs) -> Result<()> {
    require_prime(args.p)?;
    let seed = resolve_seed(args.seed)?;
    let mats: Vec<PAdicMatrix> = (0..args.count)
        .map(|i| haar_gln_zp(seed, i, args.p, args.n, args.precision))
        .collect::<Result<_>>()?;
    let mut bytes = serde_json::to_vec_pretty(&mats)?;
    bytes.push(b'\n');
    emit(args.out.as_ref(), &bytes)
}

fn cmd_snf(args: SnfArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)?;
    let m: PAdicMatrix = serde_json::from_str(&text)?;
    let sn = singular_numbers(&m)?;
    if args.oracle {
        let oracle = singular_numbers_minor_oracle(&m)?;
        println!("elimination: {sn}");
        println!("minor-oracle: {oracle}");
        println!("agree: {}", sn == oracle);
    } else {
        println!("{sn}");
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    validate_times(&args.times)?;
    let seed = resolve_seed(args.seed)?;
    let max_time = *args.times.last().unwrap();
    let trajectories: Vec<Trajectory> = match args.which {
        Which::Reflected => {
            let t = parse_t(args.t.as_deref(), args.p)?;
            (0..args.samples)
                .map(|i| reflected_walk_simulate(args.n, &t, max_time, derive_seed(seed, i)))
                .collect::<Result<_>>()?
        }
        Which::Matrix => {
            let p = require_prime(
                args.p.ok_or_else(|| Error::InvalidInput("matrix walk requires --p".into()))?,
            )?;
            let measure = match &args.measure {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => SignatureMeasure::point_mass(Signature::one_box(args.n)),
            };
            let precision = args.precision.unwrap_or_else(|| auto_precision(max_time));
            (0..args.samples)
                .map(|i| {
                    matrix_walk_simulate(
                        args.n,
                        p,
                        &measure,
                        args.c,
                        max_time,
                        derive_seed(seed, i),
                        precision,
                    )
                    .map(|(tr, _)| tr)
                })
                .collect::<Result<_>>()?
        }
    };
    let mut bytes = serde_json::to_vec(&trajectories)?;
    bytes.push(b'\n');
    emit(args.out.as_ref(), &bytes)
}

fn cmd_generator(args: GeneratorArgs) -> Result<()> {
    if args.k < 1 {
        return Err(Error::InvalidInput("--k must be at least 1".into()));
    }
    let g = match args.which {
        WhichGen::A => {
            let p = require_prime(
                args.p.ok_or_else(|| Error::InvalidInput("generator A requires --p".into()))?,
            )?;
            if args.t.is_some() {
                return Err(Error::InvalidInput("generator A fixes t = 1/p; drop --t".into()));
            }
            generator_a(args.n, p, args.k)
        }
        WhichGen::B => {
            let t = parse_t(args.t.as_deref(), args.p)?;
            generator_b(args.n, &t, args.k)
        }
    };
    let mut buf = Vec::new();
    g.write_csv(&mut buf)?;
    emit(args.out.as_ref(), &buf)
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    require_prime(args.p)?;
    validate_times(&args.times)?;
    let seed = resolve_seed(args.seed)?;
    let t = BigRational::new(1.into(), args.p.into());
    let tau = *args.times.last().unwrap();
    let selected: Vec<Suite> = match args.suite {
        Suite::All => vec![
            Suite::Lemma,
            Suite::OneJump,
            Suite::Generators,
            Suite::Reflection,
            Suite::Theorem,
        ],
        s => vec![s],
    };
    let mut reports: Vec<VerificationReport> = Vec::new();
    for s in selected {
        let report = match s {
            Suite::Lemma => verify_lemma(args.n, args.p, args.samples, seed)?,
            Suite::OneJump => verify_one_jump(args.n, args.p, args.k, args.samples, seed)?,
            Suite::Generators => {
                verify_generators(args.n, args.p, args.k, args.inject_distortion)?
            }
            Suite::Reflection => {
                verify_reflection_equivalence(args.n, &t, tau, args.samples, seed, args.alpha)?
            }
            Suite::Theorem => verify_theorem_multitime(
                args.n,
                args.p,
                &args.times,
                args.samples,
                seed,
                args.alpha,
                args.tv_bound,
            )?,
            Suite::All => unreachable!("expanded above"),
        };
        reports.push(report);
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let mut bytes = serde_json::to_vec_pretty(&reports)?;
    bytes.push(b'\n');
    emit(args.out.as_ref(), &bytes)?;
    for r in &reports {
        eprintln!("{}: {}", r.name, if r.pass { "pass" } else { "FAIL" });
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Haar(a) => cmd_haar(a).map(|_| true),
        Command::Snf(a) => cmd_snf(a).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a).map(|_| true),
        Command::Generator(a) => cmd_generator(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
