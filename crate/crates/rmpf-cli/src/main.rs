//! `rmpf` — command-line driver for the rectangular-matrix key agreement
//! library: parameter generation, offline demos, the networked handshake,
//! embedded-vector verification, brute-force cost measurement, and timing.
//!
//! Exit codes are a stable scripting contract: 0 success, 2 usage,
//! 3 I/O or parse, 4 protocol or network, 5 verification mismatch.

use std::fs;
use std::io::Write as _;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use rmpf::action::scalar_mul;
use rmpf::analysis::{attack_cost_curve, bench, CostPoint, SearchMode};
use rmpf::kap::{derive_key, make_token, PrivateKey, PublicParams, SharedKey};
use rmpf::matrix::{BaseMatrix, Dims};
use rmpf::toy;
use rmpf::wire::{run_initiator, run_responder, WireError};

#[derive(Parser)]
#[command(
    name = "rmpf",
    version,
    about = "Key agreement over rectangular matrix power functions",
    after_help = "Exit codes: 0 success, 2 usage, 3 I/O or parse, \
                  4 protocol or network, 5 verification mismatch."
)]
struct Cli {
    /// 64 hex characters (32 bytes) seeding all randomness; omit for
    /// fresh entropy. Falls back to the RMPF_SEED environment variable.
    #[arg(long, global = true, value_name = "HEX64", env = "RMPF_SEED")]
    seed: Option<String>,

    /// Output rendering. Tabular commands (attack, bench) render `text`
    /// as CSV; `csv` is only valid for those.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Full,
    Reduced,
    All,
}

#[derive(Args)]
struct NetOpts {
    /// Socket read/write timeout.
    #[arg(long, value_name = "MS", default_value_t = 10_000)]
    timeout_ms: u64,

    /// Print the raw session key, not just its fingerprint.
    #[arg(long)]
    insecure_print_key: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a parameter set and write its binary blob.
    GenParams {
        /// Prime size in bits (8..=64).
        #[arg(long, default_value_t = 64)]
        p_bits: u32,
        #[arg(long, default_value_t = 5)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
        /// Destination file for the parameter blob.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Write hex-armored text instead of raw bytes.
        #[arg(long)]
        hex: bool,
    },

    /// Run both protocol roles in-process and check they agree.
    Demo {
        /// Parameter blob to load (binary or hex-armored).
        #[arg(long, value_name = "PATH", conflicts_with = "toy")]
        params: Option<PathBuf>,
        /// Use the embedded worked example and verify every expected
        /// value along the way.
        #[arg(long)]
        toy: bool,
        /// Print the raw session key, not just its fingerprint.
        #[arg(long)]
        insecure_print_key: bool,
    },

    /// Listen for handshakes; one session per connection.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Port to bind; 0 picks an ephemeral port (printed on startup).
        #[arg(long, default_value_t = 0)]
        port: u16,
        /// Only accept parameter sets matching this blob.
        #[arg(long, value_name = "PATH")]
        params: Option<PathBuf>,
        /// Handle exactly one session, then exit with its status.
        #[arg(long)]
        once: bool,
        #[command(flatten)]
        net: NetOpts,
    },

    /// Connect to a listener and run the initiator role.
    Connect {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        port: u16,
        /// Parameter blob to offer (binary or hex-armored); defaults to
        /// a fresh random 64-bit set.
        #[arg(long, value_name = "PATH", conflicts_with = "toy")]
        params: Option<PathBuf>,
        /// Offer the embedded worked-example parameters.
        #[arg(long)]
        toy: bool,
        #[command(flatten)]
        net: NetOpts,
    },

    /// Replay the embedded worked example and check every cell.
    Vectors {
        /// Corrupt one expected token cell ("ROW,COL", 1-indexed) to
        /// exercise the mismatch path.
        #[arg(long, value_name = "R,C", hide = true)]
        tamper_cell: Option<String>,
    },

    /// Measure brute-force recovery cost across primes. CSV columns:
    /// p, rows, cols, samples, full_found, full_mean_trials,
    /// full_max_trials, reduced_found, reduced_mean_trials,
    /// reduced_max_trials, true_pair_rank_mean, true_pair_rank_max,
    /// key_equivalent, elapsed_ms.
    Attack {
        /// Comma-separated primes to measure.
        #[arg(long, default_value = "13,31")]
        p: String,
        /// Matrix shape as ROWSxCOLS (e.g. 3x2); overrides --rows/--cols.
        #[arg(long, value_name = "RxC")]
        dims: Option<String>,
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 2)]
        cols: usize,
        /// Search strategy to measure.
        #[arg(long, value_enum, default_value_t = ModeArg::All)]
        mode: ModeArg,
        /// Fresh instances per prime.
        #[arg(long, default_value_t = 50)]
        samples: u32,
        /// Write records here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },

    /// Time token construction and key derivation. CSV columns: p_bits,
    /// rows, cols, iterations, token_median_ns, derive_median_ns,
    /// modexp_factored, modexp_naive.
    Bench {
        #[arg(long, default_value_t = 64)]
        p_bits: u32,
        #[arg(long, default_value_t = 5)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
        #[arg(long, default_value_t = 100)]
        iterations: u32,
        /// Write records here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Io(String),
    Protocol(String),
    Mismatch(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Protocol(_) => 4,
            CliError::Mismatch(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Io(m)
            | CliError::Protocol(m)
            | CliError::Mismatch(m) => m,
        }
    }
}

impl From<WireError> for CliError {
    fn from(err: WireError) -> Self {
        match err {
            WireError::ConfirmFailed => {
                CliError::Mismatch("key confirmation failed".into())
            }
            other => CliError::Protocol(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.format == Format::Csv
        && !matches!(cli.cmd, Cmd::Attack { .. } | Cmd::Bench { .. })
    {
        return Err(CliError::Usage(
            "--format csv applies to attack and bench only".into(),
        ));
    }
    let mut rng = rng_from_seed(cli.seed.as_deref())?;
    match cli.cmd {
        Cmd::GenParams {
            p_bits,
            rows,
            cols,
            out,
            hex,
        } => cmd_gen_params(p_bits, rows, cols, &out, hex, cli.format, &mut rng),
        Cmd::Demo {
            params,
            toy,
            insecure_print_key,
        } => cmd_demo(params.as_deref(), toy, insecure_print_key, cli.format, &mut rng),
        Cmd::Serve {
            host,
            port,
            params,
            once,
            net,
        } => cmd_serve(&host, port, params.as_deref(), once, &net, &mut rng),
        Cmd::Connect {
            host,
            port,
            params,
            toy,
            net,
        } => cmd_connect(&host, port, params.as_deref(), toy, &net, &mut rng),
        Cmd::Vectors { tamper_cell } => cmd_vectors(tamper_cell.as_deref(), cli.format),
        Cmd::Attack {
            p,
            dims,
            rows,
            cols,
            mode,
            samples,
            out,
        } => cmd_attack(&p, dims.as_deref(), rows, cols, mode, samples, out.as_deref(), cli.format, &mut rng),
        Cmd::Bench {
            p_bits,
            rows,
            cols,
            iterations,
            out,
        } => cmd_bench(p_bits, rows, cols, iterations, out.as_deref(), cli.format, &mut rng),
    }
}

fn rng_from_seed(seed: Option<&str>) -> Result<ChaCha20Rng, CliError> {
    match seed {
        None => Ok(ChaCha20Rng::from_entropy()),
        Some(text) => {
            let bytes = hex::decode(text.trim())
                .map_err(|_| CliError::Usage("--seed must be hex".into()))?;
            let seed: [u8; 32] = bytes.try_into().map_err(|_| {
                CliError::Usage("--seed must be exactly 64 hex characters (32 bytes)".into())
            })?;
            Ok(ChaCha20Rng::from_seed(seed))
        }
    }
}

fn dims_for(rows: usize, cols: usize) -> Result<Dims, CliError> {
    Dims::new(rows, cols)
        .map_err(|e| CliError::Usage(format!("bad shape {rows}x{cols}: {e}")))
}

fn load_params(path: &Path) -> Result<PublicParams, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let parsed = if bytes.starts_with(b"RMPF") {
        PublicParams::from_bytes(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| rmpf::Error::Encoding("neither binary nor hex parameters"))
            .and_then(PublicParams::from_hex);
        text
    };
    parsed.map_err(|e| CliError::Io(format!("parsing {}: {e}", path.display())))
}

fn fingerprint_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn print_session(shared: &SharedKey, insecure: bool) {
    println!(
        "session key fingerprint: {}",
        fingerprint_hex(shared.session_key())
    );
    if insecure {
        println!("session key: {}", hex::encode(shared.session_key()));
    }
}

fn cmd_gen_params(
    p_bits: u32,
    rows: usize,
    cols: usize,
    out: &Path,
    hex_armor: bool,
    format: Format,
    rng: &mut ChaCha20Rng,
) -> Result<(), CliError> {
    let dims = dims_for(rows, cols)?;
    let params = PublicParams::generate(p_bits, dims, rng)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let payload = if hex_armor {
        let mut text = params.to_hex();
        text.push('\n');
        text.into_bytes()
    } else {
        params.to_bytes()
    };
    fs::write(out, payload)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", out.display())))?;

    let fingerprint = hex::encode(params.fingerprint());
    match format {
        Format::Json => println!(
            "{}",
            json!({
                "p": params.prime(),
                "dims": params.dims().to_string(),
                "fingerprint": fingerprint,
                "path": out.display().to_string(),
            })
        ),
        _ => {
            println!("p = {}", params.prime());
            println!("dims = {}", params.dims());
            println!("fingerprint: {fingerprint}");
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn cmd_demo(
    params_path: Option<&Path>,
    use_toy: bool,
    insecure: bool,
    format: Format,
    rng: &mut ChaCha20Rng,
) -> Result<(), CliError> {
    let params = if use_toy {
        toy::params()
    } else if let Some(path) = params_path {
        load_params(path)?
    } else {
        PublicParams::generate(64, Dims::new(5, 3).expect("default shape"), rng)
            .map_err(|e| CliError::Usage(e.to_string()))?
    };

    let (alice, bob) = if use_toy {
        (
            toy::alice_key(&params).expect("fixture scalars"),
            toy::bob_key(&params).expect("fixture scalars"),
        )
    } else {
        (
            PrivateKey::generate(&params, rng),
            PrivateKey::generate(&params, rng),
        )
    };

    let token_a = make_token(&params, &alice).map_err(|e| CliError::Protocol(e.to_string()))?;
    let token_b = make_token(&params, &bob).map_err(|e| CliError::Protocol(e.to_string()))?;
    let key_a = derive_key(&params, &alice, &token_b)
        .map_err(|e| CliError::Protocol(e.to_string()))?;
    let key_b = derive_key(&params, &bob, &token_a)
        .map_err(|e| CliError::Protocol(e.to_string()))?;

    let agreed = key_a.matrix() == key_b.matrix() && key_a.session_key() == key_b.session_key();

    if use_toy {
        let expect_a = toy::lift(&params, &toy::ALICE_TOKEN);
        let expect_b = toy::lift(&params, &toy::BOB_TOKEN);
        let expect_key = toy::lift(&params, &toy::SHARED_MATRIX);
        if token_a.matrix() != &expect_a
            || token_b.matrix() != &expect_b
            || key_a.matrix() != &expect_key
            || hex::encode(key_a.session_key()) != toy::SESSION_KEY_HEX
        {
            return Err(CliError::Mismatch(
                "worked-example outputs diverge from the embedded fixture".into(),
            ));
        }
    }

    match format {
        Format::Json => {
            let rows = |m: &BaseMatrix| -> Vec<Vec<u64>> {
                (0..m.dims().rows()).map(|r| m.row(r).to_vec()).collect()
            };
            let mut doc = json!({
                "p": params.prime(),
                "dims": params.dims().to_string(),
                "token_a": rows(token_a.matrix()),
                "token_b": rows(token_b.matrix()),
                "shared_key": rows(key_a.matrix()),
                "session_key_fingerprint": fingerprint_hex(key_a.session_key()),
                "key_equality": if agreed { "PASS" } else { "FAIL" },
            });
            if insecure {
                doc["session_key"] = json!(hex::encode(key_a.session_key()));
            }
            println!("{doc}");
        }
        _ => {
            println!("p = {}", params.prime());
            println!("dims = {}", params.dims());
            println!("token A:\n{}", token_a.matrix());
            println!("token B:\n{}", token_b.matrix());
            println!("shared key:\n{}", key_a.matrix());
            print_session(&key_a, insecure);
            println!("key equality: {}", if agreed { "PASS" } else { "FAIL" });
        }
    }

    if agreed {
        Ok(())
    } else {
        Err(CliError::Mismatch("derived keys differ".into()))
    }
}

fn cmd_serve(
    host: &str,
    port: u16,
    pinned_path: Option<&Path>,
    once: bool,
    net: &NetOpts,
    rng: &mut ChaCha20Rng,
) -> Result<(), CliError> {
    let pinned = pinned_path.map(load_params).transpose()?;
    let listener = TcpListener::bind((host, port))
        .map_err(|e| CliError::Protocol(format!("binding {host}:{port}: {e}")))?;
    let local = listener
        .local_addr()
        .map_err(|e| CliError::Protocol(e.to_string()))?;
    println!("listening on {local}");
    std::io::stdout().flush().ok();

    let timeout = Duration::from_millis(net.timeout_ms);
    let insecure = net.insecure_print_key;
    let mut session = 0u64;
    loop {
        let (mut sock, peer) = listener
            .accept()
            .map_err(|e| CliError::Protocol(format!("accept: {e}")))?;
        session += 1;
        // One derived seed per session keeps a seeded run reproducible
        // regardless of how sessions interleave.
        let mut session_seed = [0u8; 32];
        rng.fill_bytes(&mut session_seed);
        let expected = pinned.clone();

        let mut handle = move || -> Result<(), CliError> {
            sock.set_read_timeout(Some(timeout)).ok();
            sock.set_write_timeout(Some(timeout)).ok();
            let mut session_rng = ChaCha20Rng::from_seed(session_seed);
            let (params, outcome) =
                run_responder(&mut sock, expected.as_ref(), &mut session_rng)?;
            println!("session {session}: peer {peer}");
            println!(
                "session {session}: params fingerprint {}",
                hex::encode(params.fingerprint())
            );
            println!(
                "session {session}: session key fingerprint {}",
                fingerprint_hex(outcome.shared.session_key())
            );
            if insecure {
                println!(
                    "session {session}: session key {}",
                    hex::encode(outcome.shared.session_key())
                );
            }
            std::io::stdout().flush().ok();
            Ok(())
        };

        if once {
            return handle();
        }
        thread::spawn(move || {
            if let Err(err) = handle() {
                eprintln!("session error: {}", err.message());
            }
        });
    }
}

fn cmd_connect(
    host: &str,
    port: u16,
    params_path: Option<&Path>,
    use_toy: bool,
    net: &NetOpts,
    rng: &mut ChaCha20Rng,
) -> Result<(), CliError> {
    let params = if use_toy {
        toy::params()
    } else if let Some(path) = params_path {
        load_params(path)?
    } else {
        PublicParams::generate(64, Dims::new(5, 3).expect("default shape"), rng)
            .map_err(|e| CliError::Usage(e.to_string()))?
    };
    let key = PrivateKey::generate(&params, rng);

    let timeout = Duration::from_millis(net.timeout_ms);
    let addr: SocketAddr = (host, port)
        .to_socket_addrs()
        .map_err(|e| CliError::Protocol(format!("resolving {host}:{port}: {e}")))?
        .next()
        .ok_or_else(|| CliError::Protocol(format!("no address for {host}:{port}")))?;
    let mut sock = TcpStream::connect_timeout(&addr, timeout)
        .map_err(|e| CliError::Protocol(format!("connecting to {addr}: {e}")))?;
    sock.set_read_timeout(Some(timeout)).ok();
    sock.set_write_timeout(Some(timeout)).ok();

    let outcome = run_initiator(&mut sock, &params, &key)?;
    println!("params fingerprint: {}", hex::encode(params.fingerprint()));
    print_session(&outcome.shared, net.insecure_print_key);
    Ok(())
}

fn cmd_vectors(tamper_cell: Option<&str>, format: Format) -> Result<(), CliError> {
    let params = toy::params();
    let alice = toy::alice_key(&params).expect("fixture scalars");
    let bob = toy::bob_key(&params).expect("fixture scalars");
    let token_a = make_token(&params, &alice).expect("token");
    let token_b = make_token(&params, &bob).expect("token");
    let key_a = derive_key(&params, &alice, &token_b).expect("key");
    let key_b = derive_key(&params, &bob, &token_a).expect("key");

    let reduce = |grid: &[[u64; toy::COLS]; toy::ROWS]| -> Vec<u64> {
        grid.iter()
            .flatten()
            .map(|&v| v % params.modulus().q())
            .collect()
    };

    let mut expect_token_a: Vec<u64> = toy::ALICE_TOKEN.iter().flatten().copied().collect();
    if let Some(spec) = tamper_cell {
        let (r, c) = parse_cell(spec)?;
        expect_token_a[(r - 1) * toy::COLS + (c - 1)] ^= 1;
    }

    // (label, computed, expected) — expected values all come from the
    // embedded fixture grids.
    let blocks: Vec<(&str, Vec<u64>, Vec<u64>)> = vec![
        (
            "left exponents (side A)",
            scalar_mul(toy::ALICE_SCALARS.0, params.x()).entries().to_vec(),
            reduce(&toy::ALICE_LEFT_RAW),
        ),
        (
            "right exponents (side A)",
            scalar_mul(toy::ALICE_SCALARS.1, params.y()).entries().to_vec(),
            reduce(&toy::ALICE_RIGHT_RAW),
        ),
        (
            "token A",
            token_a.matrix().entries().to_vec(),
            expect_token_a,
        ),
        (
            "token B",
            token_b.matrix().entries().to_vec(),
            toy::BOB_TOKEN.iter().flatten().copied().collect(),
        ),
        (
            "key (side A)",
            key_a.matrix().entries().to_vec(),
            toy::SHARED_MATRIX.iter().flatten().copied().collect(),
        ),
        (
            "key (side B)",
            key_b.matrix().entries().to_vec(),
            toy::SHARED_MATRIX.iter().flatten().copied().collect(),
        ),
    ];

    let mut checks = Vec::new();
    let mut failure: Option<String> = None;
    for (label, computed, expected) in &blocks {
        for r in 0..toy::ROWS {
            for c in 0..toy::COLS {
                let idx = r * toy::COLS + c;
                let ok = computed[idx] == expected[idx];
                checks.push(json!({
                    "block": label,
                    "row": r + 1,
                    "col": c + 1,
                    "got": computed[idx],
                    "want": expected[idx],
                    "ok": ok,
                }));
                if format != Format::Json {
                    if ok {
                        println!("{label} ({},{}): {} OK", r + 1, c + 1, computed[idx]);
                    } else {
                        println!(
                            "{label} ({},{}): got {} want {} MISMATCH",
                            r + 1,
                            c + 1,
                            computed[idx],
                            expected[idx]
                        );
                    }
                }
                if !ok && failure.is_none() {
                    failure = Some(format!(
                        "{label} ({},{}): got {} want {}",
                        r + 1,
                        c + 1,
                        computed[idx],
                        expected[idx]
                    ));
                }
            }
        }
    }

    let session_ok = hex::encode(key_a.session_key()) == toy::SESSION_KEY_HEX;
    if format == Format::Json {
        println!(
            "{}",
            json!({
                "checks": checks,
                "session_key_ok": session_ok,
                "cells": blocks.len() * toy::ROWS * toy::COLS,
                "status": if failure.is_none() && session_ok { "PASS" } else { "FAIL" },
            })
        );
    } else {
        println!(
            "session key: {}",
            if session_ok { "OK" } else { "MISMATCH" }
        );
        println!(
            "verified {} cells: {}",
            blocks.len() * toy::ROWS * toy::COLS,
            if failure.is_none() && session_ok {
                "PASS"
            } else {
                "FAIL"
            }
        );
    }

    if let Some(detail) = failure {
        return Err(CliError::Mismatch(detail));
    }
    if !session_ok {
        return Err(CliError::Mismatch("session key bytes diverge".into()));
    }
    Ok(())
}

fn parse_cell(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("bad cell '{spec}', expected ROW,COL"));
    let (r, c) = spec.split_once(',').ok_or_else(bad)?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if !(1..=toy::ROWS).contains(&r) || !(1..=toy::COLS).contains(&c) {
        return Err(bad());
    }
    Ok((r, c))
}

#[allow(clippy::too_many_arguments)]
fn cmd_attack(
    p_list: &str,
    dims_spec: Option<&str>,
    rows: usize,
    cols: usize,
    mode: ModeArg,
    samples: u32,
    out: Option<&Path>,
    format: Format,
    rng: &mut ChaCha20Rng,
) -> Result<(), CliError> {
    let primes: Vec<u64> = p_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("bad prime '{}'", s.trim())))
        })
        .collect::<Result<_, _>>()?;
    if primes.is_empty() {
        return Err(CliError::Usage("--p needs at least one prime".into()));
    }

    let (rows, cols) = match dims_spec {
        None => (rows, cols),
        Some(spec) => {
            let bad = || CliError::Usage(format!("bad --dims '{spec}', expected ROWSxCOLS"));
            let (r, c) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
            (
                r.trim().parse().map_err(|_| bad())?,
                c.trim().parse().map_err(|_| bad())?,
            )
        }
    };
    let dims = dims_for(rows, cols)?;

    let modes: &[SearchMode] = match mode {
        ModeArg::Full => &[SearchMode::Full],
        ModeArg::Reduced => &[SearchMode::Reduced],
        ModeArg::All => &[SearchMode::Full, SearchMode::Reduced],
    };

    let curve = attack_cost_curve(&primes, dims, samples, modes, rng).map_err(|e| match e {
        rmpf::Error::SearchSpaceTooLarge { domain, limit } => CliError::Usage(format!(
            "search space of {domain} candidates exceeds the budget of {limit}; \
             rerun with --mode reduced or a smaller prime"
        )),
        other => CliError::Usage(other.to_string()),
    })?;

    let rendered = match format {
        Format::Json => render_attack_json(&curve),
        _ => render_attack_csv(&curve),
    };
    emit(out, &rendered)
}

fn opt_stat<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn render_attack_csv(curve: &[CostPoint]) -> String {
    let mut out = String::from(
        "p,rows,cols,samples,full_found,full_mean_trials,full_max_trials,\
         reduced_found,reduced_mean_trials,reduced_max_trials,\
         true_pair_rank_mean,true_pair_rank_max,key_equivalent,elapsed_ms\n",
    );
    for point in curve {
        let full = point.full.as_ref();
        let reduced = point.reduced.as_ref();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:.2},{},{},{}\n",
            point.p,
            point.rows,
            point.cols,
            point.samples,
            opt_stat(full.map(|s| s.found)),
            opt_stat(full.map(|s| format!("{:.2}", s.mean_trials))),
            opt_stat(full.map(|s| s.max_trials)),
            opt_stat(reduced.map(|s| s.found)),
            opt_stat(reduced.map(|s| format!("{:.2}", s.mean_trials))),
            opt_stat(reduced.map(|s| s.max_trials)),
            point.pair_rank_mean,
            point.pair_rank_max,
            opt_stat(point.key_equivalent),
            point.elapsed.as_millis(),
        ));
    }
    out
}

fn render_attack_json(curve: &[CostPoint]) -> String {
    let rows: Vec<_> = curve
        .iter()
        .map(|point| {
            let stats = |s: &rmpf::analysis::ModeStats| {
                json!({
                    "found": s.found,
                    "mean_trials": s.mean_trials,
                    "max_trials": s.max_trials,
                })
            };
            json!({
                "p": point.p,
                "rows": point.rows,
                "cols": point.cols,
                "samples": point.samples,
                "full": point.full.as_ref().map(stats),
                "reduced": point.reduced.as_ref().map(stats),
                "true_pair_rank_mean": point.pair_rank_mean,
                "true_pair_rank_max": point.pair_rank_max,
                "key_equivalent": point.key_equivalent,
                "elapsed_ms": point.elapsed.as_millis() as u64,
            })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&rows).expect("serializable");
    text.push('\n');
    text
}

fn cmd_bench(
    p_bits: u32,
    rows: usize,
    cols: usize,
    iterations: u32,
    out: Option<&Path>,
    format: Format,
    rng: &mut ChaCha20Rng,
) -> Result<(), CliError> {
    let dims = dims_for(rows, cols)?;
    let report = bench(p_bits, dims, iterations, rng)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let rendered = match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&json!({
                "p_bits": report.p_bits,
                "rows": report.rows,
                "cols": report.cols,
                "iterations": report.iterations,
                "token_median_ns": report.token_median.as_nanos() as u64,
                "derive_median_ns": report.derive_median.as_nanos() as u64,
                "modexp_factored": report.modexp_factored,
                "modexp_naive": report.modexp_naive,
            }))
            .expect("serializable");
            text.push('\n');
            text
        }
        _ => format!(
            "p_bits,rows,cols,iterations,token_median_ns,derive_median_ns,\
             modexp_factored,modexp_naive\n{},{},{},{},{},{},{},{}\n",
            report.p_bits,
            report.rows,
            report.cols,
            report.iterations,
            report.token_median.as_nanos(),
            report.derive_median.as_nanos(),
            report.modexp_factored,
            report.modexp_naive,
        ),
    };
    emit(out, &rendered)
}

fn emit(out: Option<&Path>, rendered: &str) -> Result<(), CliError> {
    match out {
        None => {
            print!("{rendered}");
            Ok(())
        }
        Some(path) => fs::write(path, rendered)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display()))),
    }
}
