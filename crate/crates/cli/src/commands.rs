use std::fs;
use std::io::Write as _;
use std::net::TcpListener;
use std::path::Path;
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use bandwidth_puzzle::bench;
use bandwidth_puzzle::bounds::{self, BoundInputs, BoundResult, ParamReport};
use bandwidth_puzzle::oracle::OmegaConfig;
use bandwidth_puzzle::proto::{self, Challenge, ProverBehavior, Response, Verifier};
use bandwidth_puzzle::puzzle::{self, generate_puzzle, PuzzleSecret, Solution, SolveOrder};
use bandwidth_puzzle::sim::{self, ExperimentConfig};
use bandwidth_puzzle::{Content, Digest, Error, PuzzleParams, Result};

use crate::config::{parse_u64_list, KvConfig};
use crate::{
    BenchArgs, BoundsArgs, Cli, GenArgs, ProverArgs, SimulateArgs, SolveArgs, VerifierArgs,
    VerifyArgs,
};

const SECRET_FORMAT_VERSION: u8 = 1;

fn load_content(path: &Path, expected_bits: u64) -> Result<Content> {
    let bytes = fs::read(path)?;
    Content::from_bytes(bytes, expected_bits).map_err(|e| Error::Format {
        what: "content file",
        detail: format!("{}: {e}", path.display()),
    })
}

fn encode_secrets(challenge_id: u64, params: &PuzzleParams, secrets: &[PuzzleSecret]) -> Vec<u8> {
    let mut out = vec![SECRET_FORMAT_VERSION];
    out.extend_from_slice(&challenge_id.to_be_bytes());
    out.extend_from_slice(&params.encode());
    for s in secrets {
        out.extend_from_slice(&s.answer_ordinal.to_be_bytes());
        out.extend_from_slice(s.answer.as_bytes());
    }
    out
}

fn decode_secrets(bytes: &[u8]) -> Result<(u64, PuzzleParams, Vec<PuzzleSecret>)> {
    if bytes.len() < 57 || bytes[0] != SECRET_FORMAT_VERSION {
        return Err(Error::Format {
            what: "secret file",
            detail: "bad header".into(),
        });
    }
    let challenge_id = u64::from_be_bytes(bytes[1..9].try_into().unwrap());
    let params = PuzzleParams::decode(&bytes[9..57])?;
    let kb = params.kappa_bytes();
    let entry = 4 + kb;
    let body = &bytes[57..];
    if body.len() != entry * params.puzzles_per_challenge as usize {
        return Err(Error::Format {
            what: "secret file",
            detail: format!(
                "expected {} entry bytes, got {}",
                entry * params.puzzles_per_challenge as usize,
                body.len()
            ),
        });
    }
    let secrets = body
        .chunks_exact(entry)
        .map(|chunk| {
            Ok(PuzzleSecret {
                answer_ordinal: u32::from_be_bytes(chunk[..4].try_into().unwrap()),
                answer: Digest::from_bytes(chunk[4..].to_vec())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((challenge_id, params, secrets))
}

pub fn gen(cli: &Cli, args: &GenArgs) -> Result<ExitCode> {
    let params = cli.require_params()?;
    let seed = cli.seed.unwrap_or(0);
    let content = load_content(&args.content, params.content_bits)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut puzzles = Vec::new();
    let mut secrets = Vec::new();
    for _ in 0..params.puzzles_per_challenge {
        let (p, s) = generate_puzzle(&params, &content, &mut rng)?;
        puzzles.push((p.key, p.hint));
        secrets.push(s);
    }
    let challenge = Challenge {
        challenge_id: seed,
        issued_at_ms: 0,
        params,
        puzzles,
    };
    fs::write(&args.out, challenge.encode())?;
    let secret_path = args.out.with_extension(append_ext(&args.out, "secret"));
    fs::write(&secret_path, encode_secrets(seed, &params, &secrets))?;
    println!("challenge={}", args.out.display());
    println!("secret={}", secret_path.display());
    println!("puzzles={}", params.puzzles_per_challenge);
    Ok(ExitCode::SUCCESS)
}

fn append_ext(path: &Path, ext: &str) -> String {
    match path.extension() {
        Some(existing) => format!("{}.{ext}", existing.to_string_lossy()),
        None => ext.to_string(),
    }
}

pub fn solve(cli: &Cli, args: &SolveArgs) -> Result<ExitCode> {
    let _ = cli;
    let challenge = Challenge::decode(&fs::read(&args.challenge)?)?;
    let content = load_content(&args.content, challenge.params.content_bits)?;
    let mut answers = Vec::new();
    let mut total_queries = 0u64;
    let mut solved = 0u32;
    for i in 0..challenge.puzzles.len() {
        match puzzle::solve(&challenge.puzzle(i), &content, SolveOrder::Sequential) {
            Ok((Solution { answer }, queries)) => {
                answers.push(answer);
                total_queries += queries;
                solved += 1;
            }
            Err(Error::MalformedPuzzle) => answers.push(Digest::zero(challenge.params.kappa_bits)?),
            Err(e) => return Err(e),
        }
    }
    let response = Response {
        challenge_id: challenge.challenge_id,
        answers,
    };
    fs::write(&args.out, response.encode())?;
    println!("response={}", args.out.display());
    println!("solved={solved}/{}", challenge.puzzles.len());
    println!("hash_queries={total_queries}");
    Ok(ExitCode::SUCCESS)
}

pub fn verify(cli: &Cli, args: &VerifyArgs) -> Result<ExitCode> {
    let _ = cli;
    let (challenge_id, params, secrets) = decode_secrets(&fs::read(&args.secret)?)?;
    let response = Response::decode(&fs::read(&args.response)?, params.kappa_bytes())?;
    if response.challenge_id != challenge_id {
        return Err(Error::Protocol(format!(
            "response is for challenge {}, secret is for {}",
            response.challenge_id, challenge_id
        )));
    }
    let mut all = true;
    for (i, secret) in secrets.iter().enumerate() {
        let pass = match response.answers.get(i) {
            Some(answer) if !answer.is_zero() => puzzle::verify(
                secret,
                &Solution {
                    answer: answer.clone(),
                },
            ),
            _ => false,
        };
        all &= pass;
        println!("puzzle_{i}={}", if pass { "pass" } else { "fail" });
    }
    println!("accepted={all}");
    Ok(if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn verifier_daemon(cli: &Cli, args: &VerifierArgs) -> Result<ExitCode> {
    let params = cli.require_params()?;
    let content = Arc::new(load_content(&args.content, params.content_bits)?);
    let grace = args
        .grace_ms
        .map(Duration::from_millis)
        .unwrap_or_else(|| Verifier::default_grace(&params));
    let verifier = Arc::new(Mutex::new(Verifier::new(params, content, grace, cli.seed)?));
    let listener = TcpListener::bind(&args.listen)?;
    println!("listening={}", listener.local_addr()?);
    println!(
        "theta_ms={} grace_ms={}",
        params.theta_ms,
        grace.as_millis()
    );

    let csv = match &cli.csv {
        Some(path) => {
            let mut w = fs::File::create(path)?;
            writeln!(w, "# bandwidth-puzzle verdicts csv v1")?;
            writeln!(w, "challenge_id,on_time,accepted,puzzles_passed")?;
            Some(Mutex::new(w))
        }
        None => None,
    };
    proto::serve(listener, verifier, args.max_challenges, move |verdict| {
        let passed = verdict.per_puzzle.iter().filter(|&&p| p).count();
        println!(
            "challenge_id={} on_time={} accepted={} puzzles_passed={}/{}",
            verdict.challenge_id,
            verdict.on_time,
            verdict.accepted,
            passed,
            verdict.per_puzzle.len()
        );
        if let Some(csv) = &csv {
            let mut w = csv.lock().expect("csv lock");
            let _ = writeln!(
                w,
                "{},{},{},{passed}",
                verdict.challenge_id, verdict.on_time as u8, verdict.accepted as u8
            );
        }
    })?;
    Ok(ExitCode::SUCCESS)
}

pub fn prover_daemon(cli: &Cli, args: &ProverArgs) -> Result<ExitCode> {
    let content = match &args.content {
        Some(path) => {
            // Frame first, then check the advertised length against the
            // challenge parameters; the prover does not know N up front.
            let bytes = fs::read(path)?;
            Some(bytes)
        }
        None => None,
    };
    let mut all_accepted = true;
    for round in 0..args.rounds {
        let verdict = match &content {
            Some(bytes) => {
                // Decode content lazily against this round's parameters.
                let probe = proto::run_prover_with(&args.connect, |challenge| {
                    let content =
                        Content::from_bytes(bytes.clone(), challenge.params.content_bits)?;
                    let response = proto::respond(challenge, &content)?;
                    if args.delay_ms > 0 {
                        std::thread::sleep(Duration::from_millis(args.delay_ms));
                    }
                    Ok(response)
                })?;
                probe.1
            }
            None => {
                let seed = cli.seed.unwrap_or(0).wrapping_add(round as u64);
                proto::run_prover(&args.connect, ProverBehavior::Guessing(seed))?.1
            }
        };
        println!(
            "round={round} challenge_ok on_time={} accepted={}",
            verdict.on_time, verdict.accepted
        );
        all_accepted &= verdict.accepted;
    }
    Ok(if all_accepted {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn bound_inputs(
    params: &PuzzleParams,
    q_hash: u64,
    slack_v: u32,
    delta: f64,
    sigma: f64,
    adversaries: u64,
) -> BoundInputs {
    BoundInputs {
        content_bits: params.content_bits,
        indices_per_set: params.indices_per_set,
        sets_per_puzzle: params.sets_per_puzzle,
        puzzles_per_challenge: params.puzzles_per_challenge,
        hash_budget: q_hash,
        slack_bits: slack_v,
        deviation: delta,
        target_advantage: sigma,
        omega_advantage: sigma,
        adversaries,
    }
}

pub fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<ExitCode> {
    let cfg = KvConfig::load(&args.config)?;
    let params = PuzzleParams {
        content_bits: cfg.require("n_bits")?,
        indices_per_set: cfg.require("set_size")?,
        sets_per_puzzle: cfg.require("sets_per_puzzle")?,
        puzzles_per_challenge: cfg.require("puzzles_per_challenge")?,
        theta_ms: cfg.get_or("theta_ms", 1_000)?,
        kappa_bits: cfg.get_or("kappa_bits", 256)?,
    };
    params.validate()?;
    let q_hash: u64 = cfg.require("q_hash")?;
    let slack_v: u32 = cfg.get_or("slack_v", 60)?;
    let sigma: f64 = cfg.get_or("sigma", 1.0)?;
    let delta: f64 = cfg.get_or("delta", 0.1)?;
    let trials: u32 = cfg.get_or("trials", 20)?;
    let seed: u64 = cli.seed.unwrap_or(cfg.get_or("seed", 0)?);
    let strategy = cfg.get("strategy").unwrap_or("simple").to_string();
    let adversary_counts = cfg.u64_list("adversaries")?;

    let content = match cfg.get("content") {
        Some(path) => load_content(Path::new(path), params.content_bits)?,
        None => Content::random(
            &mut ChaCha20Rng::seed_from_u64(seed ^ 0x636f6e74656e74),
            params.content_bits,
        ),
    };

    let mut csv_rows = vec![
        "# bandwidth-puzzle simulate csv v1".to_string(),
        "a,strategy_bits,bound_bits".to_string(),
    ];
    let mut last_result = None;
    for &a in &adversary_counts {
        let config = ExperimentConfig {
            params,
            adversaries: a as u32,
            omega: OmegaConfig {
                slack_bits: slack_v,
                hash_budget: q_hash,
            },
            attempt_probability: sigma,
            trials,
            seed: seed.wrapping_add(a),
        };
        let bound = bounds::multi_bound(&bound_inputs(&params, q_hash, slack_v, delta, sigma, a));
        let outcome = match strategy.as_str() {
            "simple" => sim::run_simple_collusion(&config, &content),
            "honest" => sim::run_honest(&config, &content),
            "greedy" => sim::run_custom(&config, &content, sim::honest_strategy),
            other => {
                return Err(Error::Format {
                    what: "config",
                    detail: format!("unknown strategy {other:?}"),
                })
            }
        };
        match outcome {
            Ok(result) => {
                println!(
                    "a={a} strategy_bits={} bound_bits={} bound_dominant={} success_rate={} avg_hash_queries={}",
                    result.avg_bits,
                    bound.total,
                    bound.dominant_term,
                    result.success_rate,
                    result.avg_hash_queries
                );
                csv_rows.push(format!("{a},{},{}", result.avg_bits, bound.total));
                last_result = Some(result);
            }
            Err(Error::Infeasible(msg)) => {
                println!("a={a} error={msg:?} bound_bits={}", bound.total);
                csv_rows.push(format!("{a},,{}", bound.total));
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(path) = &cli.csv {
        fs::write(path, csv_rows.join("\n") + "\n")?;
        println!("csv={}", path.display());
    }
    if let (Some(path), Some(result)) = (&args.trial_csv, &last_result) {
        let mut w = fs::File::create(path)?;
        result.write_trials_csv(&mut w)?;
        println!("trial_csv={}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn print_bound(label: &str, bound: &BoundResult) {
    println!("{label}:");
    println!("  dominant_bits={}", bound.dominant_term);
    for (name, value) in &bound.penalty_terms {
        println!("  penalty[{name}]={value}");
    }
    println!("  raw_total_bits={}", bound.raw_total);
    println!("  total_bits={}", bound.total);
}

fn print_report(report: &ParamReport) {
    for check in report.conditions.iter().chain(&report.ranges) {
        println!(
            "[{}] {}: {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
}

pub fn bounds(cli: &Cli, args: &BoundsArgs) -> Result<ExitCode> {
    let params = cli.require_params()?;
    if let Some(sweep) = &args.sweep_a {
        let counts = parse_u64_list(sweep)?;
        let mut rows = vec![
            "# bandwidth-puzzle bounds csv v1".to_string(),
            "a,dominant_bits,penalty_bits,raw_total_bits,total_bits".to_string(),
        ];
        for &a in &counts {
            let inputs = bound_inputs(
                &params,
                args.q_hash,
                args.slack_v,
                args.delta,
                args.sigma,
                a,
            );
            inputs.validate()?;
            let b = if args.single {
                bounds::single_bound(&inputs)
            } else {
                bounds::multi_bound(&inputs)
            };
            println!(
                "a={a} total_bits={} dominant_bits={}",
                b.total, b.dominant_term
            );
            rows.push(format!(
                "{a},{},{},{},{}",
                b.dominant_term,
                b.penalty_sum(),
                b.raw_total,
                b.total
            ));
        }
        if let Some(path) = &cli.csv {
            fs::write(path, rows.join("\n") + "\n")?;
            println!("csv={}", path.display());
        }
        return Ok(ExitCode::SUCCESS);
    }

    let inputs = bound_inputs(
        &params,
        args.q_hash,
        args.slack_v,
        args.delta,
        args.sigma,
        args.adversaries,
    );
    inputs.validate()?;
    if args.single {
        print_bound("single_adversary_bound", &bounds::single_bound(&inputs));
    } else {
        println!(
            "adversaries={} puzzles={} sigma={}",
            inputs.adversaries,
            inputs.puzzles(),
            inputs.target_advantage
        );
        print_bound("multi_adversary_bound", &bounds::multi_bound(&inputs));
        println!(
            "simple_strategy_bits={}",
            bounds::simple_strategy_cost(
                inputs.target_advantage,
                inputs.content_bits as f64,
                inputs.puzzles() as f64,
                inputs.sets_per_puzzle as f64,
                inputs.hash_budget as f64
            )
        );
    }
    print_report(&bounds::check_parameters(&inputs)?);
    Ok(ExitCode::SUCCESS)
}

pub fn check_params(cli: &Cli, args: &BoundsArgs) -> Result<ExitCode> {
    let params = cli.require_params()?;
    let inputs = bound_inputs(
        &params,
        args.q_hash,
        args.slack_v,
        args.delta,
        args.sigma,
        args.adversaries,
    );
    inputs.validate()?;
    let report = bounds::check_parameters(&inputs)?;
    print_report(&report);
    println!("all_pass={}", report.all_pass());
    Ok(if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn bench(cli: &Cli, args: &BenchArgs) -> Result<ExitCode> {
    let params = cli.require_params()?;
    if args.duration_secs < 1 {
        return Err(Error::InvalidParams(
            "bench duration must be at least 1 second".into(),
        ));
    }
    let report = bench::measure(
        &params,
        Duration::from_secs(args.duration_secs),
        Duration::from_millis(500),
    )?;
    println!("hash_calls_per_sec={}", report.hash_calls_per_sec);
    println!("prf_calls_per_sec={}", report.prf_calls_per_sec);
    println!("theta_secs={}", report.theta_secs);
    println!("derived_q_h={}", report.derived_q_h);
    let f = &report.feasibility;
    println!("required_queries={}", f.required_queries);
    println!(
        "million_queries_unreachable={}",
        f.million_queries_unreachable
    );
    println!("workload_fits_theta={}", f.workload_fits_theta);
    println!("solve_time_secs={}", f.solve_time_secs);
    println!(
        "solve_time_order_of_seconds={}",
        f.solve_time_order_of_seconds
    );
    for (machine, cpu, sha1, aes) in bench::REFERENCE_RATES {
        println!("reference machine={machine} cpu={cpu} sha1_per_sec={sha1} aes_per_sec={aes}");
    }
    Ok(ExitCode::SUCCESS)
}
