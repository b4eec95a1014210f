//! Verifier service and prover client: a binary challenge–response
//! protocol with threshold timing.
//!
//! Frames are `length (BE32) ‖ type (1 byte) ‖ payload`; integers inside
//! payloads are big-endian. The wire carries only keys, hints, and answer
//! digests — never index sets or content bits. Timing is enforced by the
//! verifier's clock alone: a response must arrive within θ plus a grace
//! period after the challenge was issued.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::content::Content;
use crate::crypto::{Digest, Key};
use crate::error::{Error, Result};
use crate::puzzle::{
    self, generate_puzzle, Puzzle, PuzzleParams, PuzzleSecret, Solution, SolveOrder,
    PARAMS_ENCODED_LEN,
};

pub const MSG_CHALLENGE: u8 = 0x01;
pub const MSG_RESPONSE: u8 = 0x02;
pub const MSG_VERDICT: u8 = 0x03;

/// Upper limit a reader accepts for one frame payload.
pub const MAX_FRAME_LEN: u32 = 1 << 24;

pub fn write_frame(w: &mut impl Write, msg_type: u8, payload: &[u8]) -> Result<()> {
    if payload.len() > MAX_FRAME_LEN as usize {
        return Err(Error::Protocol(format!(
            "payload of {} bytes exceeds frame limit",
            payload.len()
        )));
    }
    w.write_all(&(payload.len() as u32).to_be_bytes())?;
    w.write_all(&[msg_type])?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

pub fn read_frame(r: &mut impl Read) -> Result<(u8, Vec<u8>)> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head)?;
    let len = u32::from_be_bytes(head[..4].try_into().unwrap());
    if len > MAX_FRAME_LEN {
        return Err(Error::Protocol(format!("frame of {len} bytes too large")));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    Ok((head[4], payload))
}

/// A challenge of `m` puzzles sharing one parameter set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Challenge {
    pub challenge_id: u64,
    /// Verifier wall-clock milliseconds; informational for the prover.
    pub issued_at_ms: u64,
    pub params: PuzzleParams,
    /// One `(k1, hint)` pair per puzzle.
    pub puzzles: Vec<(Key, Digest)>,
}

impl Challenge {
    pub fn puzzle(&self, idx: usize) -> Puzzle {
        let (key, hint) = &self.puzzles[idx];
        Puzzle {
            params: self.params,
            key: key.clone(),
            hint: hint.clone(),
        }
    }

    /// `challenge_id ‖ issued_at ‖ params ‖ m × (k1 ‖ hint)` — exactly
    /// `16 + 48 + m·2·κ/8` bytes.
    pub fn encode(&self) -> Vec<u8> {
        let kb = self.params.kappa_bytes();
        let mut out = Vec::with_capacity(16 + PARAMS_ENCODED_LEN + self.puzzles.len() * 2 * kb);
        out.extend_from_slice(&self.challenge_id.to_be_bytes());
        out.extend_from_slice(&self.issued_at_ms.to_be_bytes());
        out.extend_from_slice(&self.params.encode());
        for (key, hint) in &self.puzzles {
            out.extend_from_slice(key.as_bytes());
            out.extend_from_slice(hint.as_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 + PARAMS_ENCODED_LEN {
            return Err(Error::format("challenge", "truncated header"));
        }
        let challenge_id = u64::from_be_bytes(bytes[..8].try_into().unwrap());
        let issued_at_ms = u64::from_be_bytes(bytes[8..16].try_into().unwrap());
        let params = PuzzleParams::decode(&bytes[16..16 + PARAMS_ENCODED_LEN])?;
        let kb = params.kappa_bytes();
        let body = &bytes[16 + PARAMS_ENCODED_LEN..];
        let m = params.puzzles_per_challenge as usize;
        if body.len() != m * 2 * kb {
            return Err(Error::format(
                "challenge",
                format!("expected {} puzzle bytes, got {}", m * 2 * kb, body.len()),
            ));
        }
        let puzzles = body
            .chunks_exact(2 * kb)
            .map(|chunk| {
                Ok((
                    Key::from_bytes(chunk[..kb].to_vec())?,
                    Digest::from_bytes(chunk[kb..].to_vec())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Challenge {
            challenge_id,
            issued_at_ms,
            params,
            puzzles,
        })
    }
}

/// The prover's `m` answers, positionally matched to the challenge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Response {
    pub challenge_id: u64,
    pub answers: Vec<Digest>,
}

impl Response {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            8 + self
                .answers
                .iter()
                .map(|a| a.as_bytes().len())
                .sum::<usize>(),
        );
        out.extend_from_slice(&self.challenge_id.to_be_bytes());
        for a in &self.answers {
            out.extend_from_slice(a.as_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], kappa_bytes: usize) -> Result<Self> {
        if bytes.len() < 8 || !(bytes.len() - 8).is_multiple_of(kappa_bytes) {
            return Err(Error::format("response", "bad length"));
        }
        let challenge_id = u64::from_be_bytes(bytes[..8].try_into().unwrap());
        let answers = bytes[8..]
            .chunks_exact(kappa_bytes)
            .map(|c| Digest::from_bytes(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Response {
            challenge_id,
            answers,
        })
    }
}

/// The verifier's ruling: per-puzzle pass flags, the timing flag, and the
/// all-or-nothing acceptance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub challenge_id: u64,
    pub on_time: bool,
    pub per_puzzle: Vec<bool>,
    pub accepted: bool,
}

impl Verdict {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + self.per_puzzle.len());
        out.extend_from_slice(&self.challenge_id.to_be_bytes());
        out.push(self.on_time as u8);
        out.push(self.accepted as u8);
        out.extend(self.per_puzzle.iter().map(|&b| b as u8));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 10 {
            return Err(Error::format("verdict", "truncated"));
        }
        Ok(Verdict {
            challenge_id: u64::from_be_bytes(bytes[..8].try_into().unwrap()),
            on_time: bytes[8] != 0,
            accepted: bytes[9] != 0,
            per_puzzle: bytes[10..].iter().map(|&b| b != 0).collect(),
        })
    }
}

struct IssuedChallenge {
    secrets: Vec<PuzzleSecret>,
    issued_at: Instant,
    verdict: Option<Verdict>,
}

/// Challenge issuer: holds the content, generates puzzles, retains the
/// secrets, and adjudicates responses against its own clock.
pub struct Verifier {
    params: PuzzleParams,
    content: Arc<Content>,
    grace: Duration,
    rng: ChaCha20Rng,
    next_id: u64,
    outstanding: HashMap<u64, IssuedChallenge>,
}

impl Verifier {
    /// `seed = None` draws challenge keys from OS entropy.
    pub fn new(
        params: PuzzleParams,
        content: Arc<Content>,
        grace: Duration,
        seed: Option<u64>,
    ) -> Result<Self> {
        params.validate()?;
        if content.len_bits() != params.content_bits {
            return Err(Error::ContentSize {
                expected: params.content_bits,
                actual: content.len_bits(),
            });
        }
        let rng = match seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_rng(rand::thread_rng())
                .map_err(|e| Error::Protocol(format!("rng init: {e}")))?,
        };
        Ok(Verifier {
            params,
            content,
            grace,
            rng,
            next_id: 1,
            outstanding: HashMap::new(),
        })
    }

    /// Grace defaulting to 10% of θ.
    pub fn default_grace(params: &PuzzleParams) -> Duration {
        Duration::from_millis(params.theta_ms / 10)
    }

    pub fn params(&self) -> &PuzzleParams {
        &self.params
    }

    /// Generates `m` fresh puzzles, stores the secrets keyed by
    /// challenge id, and starts this challenge's clock.
    pub fn issue_challenge(&mut self) -> Result<Challenge> {
        let challenge_id = self.next_id;
        self.next_id += 1;
        let mut puzzles = Vec::with_capacity(self.params.puzzles_per_challenge as usize);
        let mut secrets = Vec::with_capacity(puzzles.capacity());
        for _ in 0..self.params.puzzles_per_challenge {
            let (p, s) = generate_puzzle(&self.params, &self.content, &mut self.rng)?;
            puzzles.push((p.key, p.hint));
            secrets.push(s);
        }
        let issued_at = Instant::now();
        match self.outstanding.entry(challenge_id) {
            Entry::Occupied(_) => {
                return Err(Error::Protocol(format!(
                    "challenge id {challenge_id} already outstanding"
                )))
            }
            Entry::Vacant(slot) => slot.insert(IssuedChallenge {
                secrets,
                issued_at,
                verdict: None,
            }),
        };
        Ok(Challenge {
            challenge_id,
            issued_at_ms: unix_millis(),
            params: self.params,
            puzzles,
        })
    }

    pub fn issued_at(&self, challenge_id: u64) -> Option<Instant> {
        self.outstanding.get(&challenge_id).map(|c| c.issued_at)
    }

    /// Rules on a response that arrived at `arrival`. Adjudication is
    /// idempotent: the first verdict for a challenge id wins.
    pub fn adjudicate(&mut self, response: &Response, arrival: Instant) -> Result<Verdict> {
        let issued = self
            .outstanding
            .get_mut(&response.challenge_id)
            .ok_or_else(|| {
                Error::Protocol(format!("unknown challenge id {}", response.challenge_id))
            })?;
        if let Some(existing) = &issued.verdict {
            return Ok(existing.clone());
        }
        let deadline = self.params.theta() + self.grace;
        let on_time = arrival.duration_since(issued.issued_at) <= deadline;
        let per_puzzle: Vec<bool> = issued
            .secrets
            .iter()
            .enumerate()
            .map(|(i, secret)| match response.answers.get(i) {
                Some(answer) if !answer.is_zero() => puzzle::verify(
                    secret,
                    &Solution {
                        answer: answer.clone(),
                    },
                ),
                _ => false,
            })
            .collect();
        let accepted = on_time && per_puzzle.iter().all(|&p| p);
        let verdict = Verdict {
            challenge_id: response.challenge_id,
            on_time,
            per_puzzle,
            accepted,
        };
        issued.verdict = Some(verdict.clone());
        Ok(verdict)
    }
}

fn unix_millis() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// The honest prover: solves every puzzle from its content. Unsolvable
/// positions answer with the all-zero sentinel, which the verifier
/// rejects.
pub fn respond(challenge: &Challenge, content: &Content) -> Result<Response> {
    let answers = (0..challenge.puzzles.len())
        .map(|i| {
            let puzzle = challenge.puzzle(i);
            match puzzle::solve(&puzzle, content, SolveOrder::Sequential) {
                Ok((solution, _)) => Ok(solution.answer),
                Err(Error::MalformedPuzzle) => Digest::zero(challenge.params.kappa_bits),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Response {
        challenge_id: challenge.challenge_id,
        answers,
    })
}

/// A content-less prover's best effort: hash a uniformly guessed true
/// string per puzzle.
pub fn respond_guessing(challenge: &Challenge, rng: &mut impl Rng) -> Result<Response> {
    let answers = (0..challenge.puzzles.len())
        .map(|_| {
            let guess =
                crate::content::BitString::random(rng, challenge.params.indices_per_set as u64);
            crate::crypto::hash_a(&guess, challenge.params.kappa_bits)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Response {
        challenge_id: challenge.challenge_id,
        answers,
    })
}

/// Serves provers on `listener`: each connection gets one challenge and
/// one verdict. Stops after `max_challenges` connections when given.
/// Calls `on_verdict` for each ruling.
pub fn serve(
    listener: TcpListener,
    verifier: Arc<Mutex<Verifier>>,
    max_challenges: Option<usize>,
    on_verdict: impl Fn(&Verdict) + Send + Sync + 'static,
) -> Result<()> {
    let on_verdict = Arc::new(on_verdict);
    let mut handles = Vec::new();
    for (served, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        let verifier = Arc::clone(&verifier);
        let on_verdict = Arc::clone(&on_verdict);
        handles.push(std::thread::spawn(move || -> Result<()> {
            handle_prover(stream, &verifier, on_verdict.as_ref())
        }));
        if max_challenges.is_some_and(|max| served + 1 >= max) {
            break;
        }
    }
    for h in handles {
        h.join()
            .map_err(|_| Error::Protocol("handler panicked".into()))??;
    }
    Ok(())
}

fn handle_prover(
    mut stream: TcpStream,
    verifier: &Mutex<Verifier>,
    on_verdict: &dyn Fn(&Verdict),
) -> Result<()> {
    let (challenge, kappa_bytes) = {
        let mut v = verifier.lock().expect("verifier lock");
        let c = v.issue_challenge()?;
        (c, v.params().kappa_bytes())
    };
    write_frame(&mut stream, MSG_CHALLENGE, &challenge.encode())?;
    let (msg_type, payload) = read_frame(&mut stream)?;
    let arrival = Instant::now();
    if msg_type != MSG_RESPONSE {
        return Err(Error::Protocol(format!(
            "expected response frame, got type {msg_type:#04x}"
        )));
    }
    let response = Response::decode(&payload, kappa_bytes)?;
    let verdict = {
        let mut v = verifier.lock().expect("verifier lock");
        v.adjudicate(&response, arrival)?
    };
    on_verdict(&verdict);
    write_frame(&mut stream, MSG_VERDICT, &verdict.encode())?;
    Ok(())
}

/// What a prover does per connection: turn the received challenge into a
/// response.
pub enum ProverBehavior<'a> {
    /// Solve honestly from content.
    Honest(&'a Content),
    /// Guess without content.
    Guessing(u64),
    /// Solve honestly, then hold the response for the given duration.
    Delayed(&'a Content, Duration),
}

/// Connects to a verifier, completes one challenge round with the given
/// response builder, and returns the challenge and verdict.
pub fn run_prover_with(
    addr: &str,
    build_response: impl FnOnce(&Challenge) -> Result<Response>,
) -> Result<(Challenge, Verdict)> {
    let mut stream = TcpStream::connect(addr)?;
    let (msg_type, payload) = read_frame(&mut stream)?;
    if msg_type != MSG_CHALLENGE {
        return Err(Error::Protocol(format!(
            "expected challenge frame, got type {msg_type:#04x}"
        )));
    }
    let challenge = Challenge::decode(&payload)?;
    let response = build_response(&challenge)?;
    write_frame(&mut stream, MSG_RESPONSE, &response.encode())?;
    let (msg_type, payload) = read_frame(&mut stream)?;
    if msg_type != MSG_VERDICT {
        return Err(Error::Protocol(format!(
            "expected verdict frame, got type {msg_type:#04x}"
        )));
    }
    Ok((challenge, Verdict::decode(&payload)?))
}

/// Connects to a verifier and completes one challenge round with one of
/// the stock behaviors.
pub fn run_prover(addr: &str, behavior: ProverBehavior<'_>) -> Result<(Challenge, Verdict)> {
    run_prover_with(addr, |challenge| match behavior {
        ProverBehavior::Honest(content) => respond(challenge, content),
        ProverBehavior::Guessing(seed) => {
            respond_guessing(challenge, &mut ChaCha20Rng::seed_from_u64(seed))
        }
        ProverBehavior::Delayed(content, delay) => {
            let r = respond(challenge, content)?;
            std::thread::sleep(delay);
            Ok(r)
        }
    })
}
