//! Command-line front end: puzzle generation and solving over files, the
//! verifier/prover daemons, strategy simulation sweeps, bound evaluation,
//! parameter checking, and local throughput benchmarking.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use bandwidth_puzzle::{Error, PuzzleParams};

#[derive(Parser)]
#[command(name = "bandwidth-puzzle", version, about = "Bandwidth puzzle toolkit")]
struct Cli {
    /// Seed for all randomness; omit for OS entropy where allowed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Puzzle parameters as N,n,L,m,theta_ms,kappa_bits.
    #[arg(long, global = true, value_parser = parse_params)]
    params: Option<PuzzleParams>,

    /// CSV output path for subcommands that emit tables.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a challenge file and its secret file from content.
    Gen(GenArgs),
    /// Solve a challenge file against content, writing a response file.
    Solve(SolveArgs),
    /// Check a response file against a secret file.
    Verify(VerifyArgs),
    /// Listen for provers, issuing one timed challenge per connection.
    VerifierDaemon(VerifierArgs),
    /// Connect to a verifier and answer its challenge.
    ProverDaemon(ProverArgs),
    /// Run an adversary-strategy sweep from a key=value config file.
    Simulate(SimulateArgs),
    /// Evaluate the download lower bound, term by term.
    Bounds(BoundsArgs),
    /// Check the tightness conditions and parameter ranges.
    CheckParams(BoundsArgs),
    /// Measure local hash/PRF throughput and the implied hash budget.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Raw packed content bits, ceil(N/8) bytes.
    #[arg(long)]
    content: PathBuf,
    /// Challenge output path; the secret goes to <out>.secret.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    content: PathBuf,
    #[arg(long)]
    challenge: PathBuf,
    /// Response output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    secret: PathBuf,
    #[arg(long)]
    response: PathBuf,
}

#[derive(Args)]
struct VerifierArgs {
    /// Address to listen on, e.g. 127.0.0.1:7701.
    #[arg(long)]
    listen: String,
    #[arg(long)]
    content: PathBuf,
    /// Timing grace in milliseconds; defaults to theta/10.
    #[arg(long)]
    grace_ms: Option<u64>,
    /// Stop after this many challenges (runs forever if omitted).
    #[arg(long)]
    max_challenges: Option<usize>,
}

#[derive(Args)]
struct ProverArgs {
    /// Verifier address, e.g. 127.0.0.1:7701.
    #[arg(long)]
    connect: String,
    /// Content file; omitted means answer by guessing.
    #[arg(long)]
    content: Option<PathBuf>,
    /// Hold each response this long before sending.
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
    /// Challenge rounds to run.
    #[arg(long, default_value_t = 1)]
    rounds: u32,
}

#[derive(Args)]
struct SimulateArgs {
    /// key=value experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Optional per-trial CSV for the last sweep row.
    #[arg(long)]
    trial_csv: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BoundsArgs {
    /// q_H: per-adversary hash budget.
    #[arg(long)]
    q_hash: u64,
    /// V: informedness slack bits.
    #[arg(long, default_value_t = 60)]
    slack_v: u32,
    /// delta: deviation fraction in (0,1).
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// sigma: target solving probability.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// A: adversary count.
    #[arg(long, default_value_t = 1)]
    adversaries: u64,
    /// Sweep A over a comma list or lo:hi:step range (CSV output).
    #[arg(long)]
    sweep_a: Option<String>,
    /// Evaluate the single-adversary single-puzzle bound instead.
    #[arg(long, default_value_t = false)]
    single: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Measurement window in seconds (excludes a fixed warmup).
    #[arg(long, default_value_t = 2)]
    duration_secs: u64,
}

fn parse_params(raw: &str) -> Result<PuzzleParams, String> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(format!(
            "expected N,n,L,m,theta_ms,kappa_bits (6 fields), got {}",
            parts.len()
        ));
    }
    let field = |i: usize, what: &str| -> Result<u64, String> {
        parts[i]
            .parse::<u64>()
            .map_err(|_| format!("bad {what}: {:?}", parts[i]))
    };
    let params = PuzzleParams {
        content_bits: field(0, "N")?,
        indices_per_set: field(1, "n")? as u32,
        sets_per_puzzle: field(2, "L")? as u32,
        puzzles_per_challenge: field(3, "m")? as u32,
        theta_ms: field(4, "theta_ms")?,
        kappa_bits: field(5, "kappa_bits")? as u32,
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        Error::Protocol(_) => 5,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Gen(args) => commands::gen(&cli, args),
        Command::Solve(args) => commands::solve(&cli, args),
        Command::Verify(args) => commands::verify(&cli, args),
        Command::VerifierDaemon(args) => commands::verifier_daemon(&cli, args),
        Command::ProverDaemon(args) => commands::prover_daemon(&cli, args),
        Command::Simulate(args) => commands::simulate(&cli, args),
        Command::Bounds(args) => commands::bounds(&cli, args),
        Command::CheckParams(args) => commands::check_params(&cli, args),
        Command::Bench(args) => commands::bench(&cli, args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

impl Cli {
    fn require_params(&self) -> Result<PuzzleParams, Error> {
        self.params.ok_or_else(|| {
            Error::InvalidParams("--params N,n,L,m,theta_ms,kappa_bits is required".into())
        })
    }
}
