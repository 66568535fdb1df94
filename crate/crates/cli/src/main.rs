use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cdmm_core::{
    build_rmfe, make_ring, run_experiment, write_matrix_file, Error, ExperimentConfig, GaloisRing, Matrix,
    RingElement, SchemeChoice,
};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exhaustive checks above this many pairs are refused.
const EXHAUSTIVE_LIMIT: u128 = 1 << 24;

#[derive(Parser)]
#[command(name = "cdmm", version, about = "Coded distributed matrix multiplication over Galois rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical modulus and the exceptional-set prefix of GR(p^e, d).
    RingInfo {
        #[command(flatten)]
        ring: RingArgs,
        /// Also describe the degree-m extension.
        #[arg(long)]
        m: Option<usize>,
        /// Number of exceptional points to list.
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Check the RMFE identity on all or on random input pairs.
    RmfeCheck {
        #[command(flatten)]
        ring: RingArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        infinity: bool,
        #[arg(long)]
        exhaustive: bool,
        /// Random pairs to test when not exhaustive.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, env = "CDMM_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Run one experiment and emit metrics JSON.
    Run(Box<RunArgs>),
    /// Write a seeded random matrix file.
    Gen {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, env = "CDMM_SEED")]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 64)]
        e: u32,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
}

#[derive(Args)]
struct RingArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    e: u32,
    #[arg(long, default_value_t = 1)]
    d: usize,
}

#[derive(Args)]
struct RunArgs {
    /// plain | rmfe-i | rmfe-ii | batch | matdot | poly
    #[arg(long)]
    scheme: String,
    #[command(flatten)]
    ring: RingArgs,
    #[arg(long)]
    t: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    u: Option<usize>,
    #[arg(long)]
    v: Option<usize>,
    #[arg(long)]
    w: Option<usize>,
    /// Number of workers.
    #[arg(long = "N")]
    workers: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    /// Explicit two-level degrees as `m1,m2`.
    #[arg(long, value_parser = parse_pair)]
    level_degrees: Option<(usize, usize)>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    straggler_prob: f64,
    /// Mean exponential jitter in milliseconds.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 1.0)]
    base_latency: f64,
    #[arg(long, env = "CDMM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long)]
    verify: bool,
    /// EP-RMFE-I: unpack through the summed functional.
    #[arg(long)]
    packed_sum: bool,
    #[arg(long, requires = "in_b")]
    in_a: Option<PathBuf>,
    #[arg(long, requires = "in_a")]
    in_b: Option<PathBuf>,
    /// Write metrics JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected m1,m2")?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((parse(a)?, parse(b)?))
}

fn ring_info(ring: &GaloisRing, m: Option<usize>, count: usize) -> Result<(), Error> {
    println!("ring {}", ring.describe());
    println!("modulus {}", ring.format_modulus("x"));
    print_prefix(ring, count)?;
    if let Some(m) = m {
        let ext = ring.extension(m)?;
        println!("extension {}", ext.describe());
        println!("extension modulus {}", ext.format_modulus("y"));
        print_prefix(&ext, count)?;
    }
    Ok(())
}

fn print_prefix(ring: &GaloisRing, count: usize) -> Result<(), Error> {
    let q = ring.residue_field_size().map_or(usize::MAX, |q| q as usize);
    let set = ring.exceptional_set(count.min(q))?;
    let items: Vec<String> = set.elements().iter().map(|x| ring.format_element(x)).collect();
    println!("T-prefix [{}]", items.join(", "));
    Ok(())
}

/// The i-th vector of `base^n` in mixed radix over the element words.
fn vector_from_index(base: &GaloisRing, n: usize, mut idx: u128) -> Vec<RingElement> {
    let modulus = base.characteristic();
    (0..n)
        .map(|_| {
            let words = (0..base.width())
                .map(|_| {
                    let w = (idx % modulus) as u64;
                    idx /= modulus;
                    w
                })
                .collect();
            RingElement::from_words(words)
        })
        .collect()
}

fn rmfe_check(
    ring: &GaloisRing,
    n: usize,
    m: usize,
    infinity: bool,
    exhaustive: bool,
    trials: usize,
    seed: u64,
) -> Result<bool, Error> {
    let rmfe = build_rmfe(ring, n, m, infinity)?;
    let ext = rmfe.ext();
    let check = |x: &[RingElement], y: &[RingElement]| -> Result<bool, Error> {
        let prod = ext.mul(&rmfe.phi(x)?, &rmfe.phi(y)?);
        Ok(rmfe.psi(&prod)? == rmfe.star(x, y))
    };
    let (pass, total) = if exhaustive {
        let vectors = ring
            .characteristic()
            .checked_pow((ring.width() * n) as u32)
            .filter(|&v| v.checked_mul(v).is_some_and(|pairs| pairs <= EXHAUSTIVE_LIMIT))
            .ok_or_else(|| Error::InvalidParameter("too many pairs for an exhaustive check".into()))?;
        let all: Vec<Vec<RingElement>> = (0..vectors).map(|i| vector_from_index(ring, n, i)).collect();
        let mut pass = 0u128;
        for x in &all {
            for y in &all {
                pass += check(x, y)? as u128;
            }
        }
        (pass, vectors * vectors)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pass = 0u128;
        for _ in 0..trials {
            let x: Vec<RingElement> = (0..n).map(|_| ring.random_element(&mut rng)).collect();
            let y: Vec<RingElement> = (0..n).map(|_| ring.random_element(&mut rng)).collect();
            pass += check(&x, &y)? as u128;
        }
        (pass, trials as u128)
    };
    let kind = if exhaustive { "pairs" } else { "random pairs" };
    println!("({n},{m})-RMFE over {}{}", ring.describe(), if infinity { " with infinity" } else { "" });
    println!("{pass}/{total} {kind} pass");
    Ok(pass == total)
}

fn run(args: RunArgs) -> Result<bool, Error> {
    let scheme: SchemeChoice = args.scheme.parse()?;
    let RingArgs { p, e, d } = args.ring;
    let mut cfg = ExperimentConfig::new(scheme, p, e, d, (args.t, args.r, args.s), args.workers);
    cfg.u = args.u;
    cfg.v = args.v;
    cfg.w = args.w;
    cfg.m = args.m;
    cfg.n = args.n;
    cfg.levels = args.levels;
    cfg.level_degrees = args.level_degrees;
    cfg.batch_size = args.batch_size;
    cfg.straggler_prob = args.straggler_prob;
    cfg.jitter_ms = args.jitter;
    cfg.base_latency_ms = args.base_latency;
    cfg.seed = args.seed;
    cfg.repeat = args.repeat;
    cfg.verify = args.verify;
    cfg.packed_sum = args.packed_sum;
    cfg.input_a = args.in_a;
    cfg.input_b = args.in_b;
    let outcome = run_experiment(&cfg)?;
    let text = serde_json::to_string_pretty(&outcome.to_json()).map_err(|e| Error::Format(e.to_string()))?;
    match args.out {
        Some(path) => fs::write(path, text + "\n")?,
        None => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(true)
}

fn gen(rows: usize, cols: usize, seed: u64, out: PathBuf, ring: RingArgs) -> Result<bool, Error> {
    let ring = make_ring(ring.p, ring.e, ring.d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    write_matrix_file(&out, &Matrix::random(&ring, rows, cols, &mut rng))?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::RingInfo { ring, m, count } => {
            make_ring(ring.p, ring.e, ring.d).and_then(|r| ring_info(&r, m, count)).map(|_| true)
        }
        Command::RmfeCheck {
            ring,
            n,
            m,
            infinity,
            exhaustive,
            trials,
            seed,
        } => make_ring(ring.p, ring.e, ring.d).and_then(|r| rmfe_check(&r, n, m, infinity, exhaustive, trials, seed)),
        Command::Run(args) => run(*args),
        Command::Gen {
            rows,
            cols,
            seed,
            out,
            p,
            e,
            d,
        } => gen(rows, cols, seed, out, RingArgs { p, e, d }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
