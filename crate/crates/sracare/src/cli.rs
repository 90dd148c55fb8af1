// Licensed under the Apache-2.0 license

//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification or authentication
//! check failed, 2 on usage or configuration errors. All output is
//! deterministic for a given `--seed` (the `SRACARE_SEED` environment
//! variable takes precedence over the flag).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::channel::{read_framed, run_session, write_framed, Passthrough};
use crate::crypto::{hmac_sha256, Hash256, SecretKey};
use crate::device::{
    read_rom_image, write_rom_image, ChipInfo, DeviceState, SecureRom, ERASED_BYTE,
    CHIP_INFO_LEN, FLASH_CAPACITY,
};
use crate::frame::{pack_image, serialize_frame, FRAME_LEN};
use crate::harness::{corrupt_flash, parse_scenario, run_scenario, AttackKind, ScenarioReport};
use crate::protocol::{
    decode_message, encode_message, AttestParams, Message, ProverSession, ProverStep,
    ReportStatus, VerifierIntent, VerifierSession, VerifierStep,
};
use crate::timing::{report as timing_report, CycleCosts};

const EXIT_OK: i32 = 0;
const EXIT_CHECK_FAILED: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "sracare",
    about = "Authenticated secure-boot and remote-attestation simulator",
    version
)]
struct Cli {
    /// Seed for all randomness (overridden by SRACARE_SEED).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split an image into integrity-protected 1 KB frames.
    Pack {
        image: PathBuf,
        /// Signing key as hex.
        #[arg(long)]
        key_hex: String,
        /// Output frame-stream file (concatenated 1024-byte frames).
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build a ROM container: chip info, key, and golden image frames.
    Mkrom {
        image: PathBuf,
        #[arg(long)]
        key_hex: String,
        /// File holding exactly 36 bytes of chip info (UUID first).
        #[arg(long)]
        chip_info: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Provision a device from a ROM container and run the secure boot.
    Boot {
        #[arg(long)]
        rom: PathBuf,
        /// Corrupt one stored bit before booting, as frame:bit.
        #[arg(long)]
        corrupt: Option<String>,
        /// Disable the recovery engine.
        #[arg(long)]
        no_resilience: bool,
    },
    /// Full authenticated session ending in an attestation report.
    Attest {
        #[arg(long)]
        rom: PathBuf,
        #[arg(long)]
        addr: u32,
        #[arg(long)]
        len: u32,
        /// Carry the session over a loopback TCP socket.
        #[arg(long)]
        tcp: bool,
    },
    /// Mutual authentication handshake only; prints the transcript.
    Session {
        #[arg(long)]
        rom: PathBuf,
        /// Key the verifier uses, when different from the device key.
        #[arg(long)]
        verifier_key_hex: Option<String>,
        /// Carry the session over a loopback TCP socket.
        #[arg(long)]
        tcp: bool,
    },
    /// Run an attack scenario from a key=value config file.
    Scenario { config: PathBuf },
    /// Print the bootstrap timing model.
    Timing {
        #[arg(long, default_value_t = 6)]
        frames: u32,
        /// Cost preset; `paper` selects the reference measurements.
        #[arg(long, default_value = "paper")]
        preset: String,
        /// Emit one CSV line instead of the table.
        #[arg(long)]
        csv: bool,
    },
}

/// Entry point for the binary: real args, real env, stdout.
pub fn run() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let env_seed = std::env::var("SRACARE_SEED").ok();
    let mut stdout = std::io::stdout();
    run_with(args, env_seed, &mut stdout)
}

/// Testable entry point with explicit args, env override, and sink.
pub fn run_with<I, S>(args: I, env_seed: Option<String>, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version requests are successful output, not errors.
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(out, "{err}");
            return code;
        }
    };
    let seed = match env_seed {
        Some(raw) => match raw.parse() {
            Ok(seed) => seed,
            Err(_) => {
                let _ = writeln!(out, "error: SRACARE_SEED is not a valid seed: {raw}");
                return EXIT_USAGE;
            }
        },
        None => cli.seed,
    };
    match dispatch(cli.command, seed, out) {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(out, "error: {err}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, seed: u64, out: &mut dyn Write) -> Result<i32, Box<dyn std::error::Error>> {
    match command {
        Command::Pack {
            image,
            key_hex,
            output,
        } => cmd_pack(&image, &key_hex, &output, out),
        Command::Mkrom {
            image,
            key_hex,
            chip_info,
            output,
        } => cmd_mkrom(&image, &key_hex, &chip_info, &output, out),
        Command::Boot {
            rom,
            corrupt,
            no_resilience,
        } => cmd_boot(&rom, corrupt.as_deref(), !no_resilience, out),
        Command::Attest {
            rom,
            addr,
            len,
            tcp,
        } => cmd_attest(&rom, addr, len, tcp, seed, out),
        Command::Session {
            rom,
            verifier_key_hex,
            tcp,
        } => cmd_session(&rom, verifier_key_hex.as_deref(), tcp, seed, out),
        Command::Scenario { config } => cmd_scenario(&config, out),
        Command::Timing {
            frames,
            preset,
            csv,
        } => cmd_timing(frames, &preset, csv, out),
    }
}

fn cmd_pack(
    image_path: &Path,
    key_hex: &str,
    output: &Path,
    out: &mut dyn Write,
) -> Result<i32, Box<dyn std::error::Error>> {
    let image = std::fs::read(image_path)?;
    let key = SecretKey::from_hex(key_hex)?;
    let frames = pack_image(&image, &key)?;
    let mut stream = Vec::with_capacity(frames.len() * FRAME_LEN);
    for frame in &frames {
        stream.extend_from_slice(&serialize_frame(frame));
    }
    std::fs::write(output, &stream)?;
    writeln!(out, "frames,{}", frames.len())?;
    writeln!(out, "bytes,{}", stream.len())?;
    Ok(EXIT_OK)
}

fn cmd_mkrom(
    image_path: &Path,
    key_hex: &str,
    chip_info_path: &Path,
    output: &Path,
    out: &mut dyn Write,
) -> Result<i32, Box<dyn std::error::Error>> {
    let image = std::fs::read(image_path)?;
    let key = SecretKey::from_hex(key_hex)?;
    let ci_bytes = std::fs::read(chip_info_path)?;
    let ci_bytes: [u8; CHIP_INFO_LEN] = ci_bytes.as_slice().try_into().map_err(|_| {
        format!(
            "chip info file must hold exactly {CHIP_INFO_LEN} bytes, got {}",
            ci_bytes.len()
        )
    })?;
    let rom = SecureRom::provision(ChipInfo::from_bytes(&ci_bytes), key, &image)?;
    let container = write_rom_image(&rom);
    std::fs::write(output, &container)?;
    writeln!(out, "frames,{}", rom.frame_count())?;
    writeln!(out, "bytes,{}", container.len())?;
    Ok(EXIT_OK)
}

fn load_device(rom_path: &Path) -> Result<(SecureRom, DeviceState), Box<dyn std::error::Error>> {
    let bytes = std::fs::read(rom_path)?;
    let rom = read_rom_image(&bytes)?;
    let dev = DeviceState::provisioned(rom.clone(), FLASH_CAPACITY)?;
    Ok((rom, dev))
}

fn cmd_boot(
    rom_path: &Path,
    corrupt: Option<&str>,
    resilience: bool,
    out: &mut dyn Write,
) -> Result<i32, Box<dyn std::error::Error>> {
    let (rom, mut dev) = load_device(rom_path)?;
    if let Some(spec) = corrupt {
        let (frame, bit) = spec
            .split_once(':')
            .ok_or("corrupt spec must be frame:bit")?;
        let kind = AttackKind::FlashBitFlip {
            frame: frame.parse()?,
            bit: bit.parse()?,
        };
        corrupt_flash(&mut dev, &kind, 0)?;
    }
    let key = rom.key().clone();
    let result = crate::boot::bootstrap(&mut dev, &key, &CycleCosts::reference(), resilience)?;
    writeln!(out, " FRAME  VERDICT  RECOVERED")?;
    for verdict in &result.verdicts {
        writeln!(
            out,
            " {:>5}  {:<7}  {}",
            verdict.index,
            if verdict.passed { "pass" } else { "fail" },
            if verdict.recovered { "yes" } else { "-" }
        )?;
    }
    writeln!(out, " cycles: {}", result.cycles)?;
    writeln!(
        out,
        " integrity: {}\n",
        if result.integrity { "pass" } else { "fail" }
    )?;
    // Machine-readable form of the same verdicts.
    for verdict in &result.verdicts {
        writeln!(
            out,
            "frame,{},{},{}",
            verdict.index,
            if verdict.passed { "pass" } else { "fail" },
            if verdict.recovered { "recovered" } else { "-" }
        )?;
    }
    writeln!(out, "cycles,{}", result.cycles)?;
    writeln!(
        out,
        "integrity,{}",
        if result.integrity { "pass" } else { "fail" }
    )?;
    Ok(if result.integrity {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_attest(
    rom_path: &Path,
    addr: u32,
    len: u32,
    tcp: bool,
    seed: u64,
    out: &mut dyn Write,
) -> Result<i32, Box<dyn std::error::Error>> {
    if len == 0 {
        return Err("attestation length must be non-zero".into());
    }
    let (rom, mut dev) = load_device(rom_path)?;
    let params = AttestParams { s_addr: addr, l: len };
    let intent = VerifierIntent::Attest(params);
    let mut verifier = VerifierSession::new(rom.key().clone(), intent);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    let (status, r) = if tcp {
        let outcome = run_tcp_session(&mut verifier, ProverSession::new(), dev, &mut rng)?;
        match outcome {
            Some(report) => report,
            None => {
                writeln!(out, "outcome,closed")?;
                return Ok(EXIT_CHECK_FAILED);
            }
        }
    } else {
        let mut prover = ProverSession::new();
        let record = run_session(
            &mut verifier,
            &mut prover,
            &mut dev,
            &CycleCosts::reference(),
            true,
            &mut rng,
            &mut Passthrough,
        );
        match record.report {
            Some(report) => report,
            None => {
                writeln!(out, "outcome,closed")?;
                return Ok(EXIT_CHECK_FAILED);
            }
        }
    };

    // Verifier-side recompute over its reference copy of the flash.
    let expected_region = expected_flash_region(&rom, addr as usize, len as usize);
    let matches = match (status, verifier.session_key(), expected_region) {
        (ReportStatus::Ok, Some(k1), Some(region)) => hmac_sha256(k1, &region).ct_eq(&r),
        _ => false,
    };
    writeln!(out, "status,{}", status_name(status))?;
    writeln!(out, "report,{}", r.to_hex())?;
    writeln!(out, "match,{}", matches)?;
    Ok(if matches { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn expected_flash_region(rom: &SecureRom, start: usize, len: usize) -> Option<Vec<u8>> {
    if start + len > FLASH_CAPACITY {
        return None;
    }
    let mut flash = Vec::with_capacity(FLASH_CAPACITY);
    for frame in rom.golden_frames() {
        flash.extend_from_slice(&serialize_frame(frame));
    }
    flash.resize(FLASH_CAPACITY, ERASED_BYTE);
    Some(flash[start..start + len].to_vec())
}

fn status_name(status: ReportStatus) -> &'static str {
    match status {
        ReportStatus::Ok => "ok",
        ReportStatus::BootFailed => "boot_failed",
        ReportStatus::AttestFailed => "attest_failed",
        ReportStatus::BadCommand => "bad_command",
    }
}

fn cmd_session(
    rom_path: &Path,
    verifier_key_hex: Option<&str>,
    tcp: bool,
    seed: u64,
    out: &mut dyn Write,
) -> Result<i32, Box<dyn std::error::Error>> {
    let (rom, mut dev) = load_device(rom_path)?;
    let verifier_key = match verifier_key_hex {
        Some(hex) => SecretKey::from_hex(hex)?,
        None => rom.key().clone(),
    };
    // Auth only: stop once both sides have judged each other.
    let mut verifier = VerifierSession::new(verifier_key, VerifierIntent::Reset);
    let mut prover = ProverSession::new();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    if tcp {
        return cmd_session_tcp(verifier, prover, dev, &mut rng, out);
    }

    let challenge = verifier.start(&mut rng)?;
    print_wire(out, "->", &challenge)?;
    let prover_auth = prover.handle_challenge(&dev, challenge_nonce(&challenge))?;
    print_wire(out, "<-", &prover_auth)?;
    let verifier_reply = verifier.handle(&prover_auth)?.expect("reply expected");
    print_wire(out, "->", &verifier_reply)?;
    if verifier.step() == VerifierStep::Closed {
        prover.handle_close();
        writeln!(out, "outcome,closed")?;
        return Ok(EXIT_CHECK_FAILED);
    }
    let auth_result = prover
        .handle(&mut dev, &verifier_reply, &CycleCosts::reference(), true)?
        .expect("auth result expected");
    print_wire(out, "<-", &auth_result)?;
    let authenticated = matches!(auth_result, Message::AuthResult { c: true })
        && prover.step() == ProverStep::Authenticated;
    if authenticated {
        writeln!(out, "outcome,authenticated")?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "outcome,closed")?;
        Ok(EXIT_CHECK_FAILED)
    }
}

fn challenge_nonce(msg: &Message) -> crate::crypto::Nonce {
    match msg {
        Message::Challenge { n1 } => *n1,
        _ => unreachable!("start always yields a challenge"),
    }
}

fn print_wire(out: &mut dyn Write, dir: &str, msg: &Message) -> std::io::Result<()> {
    let bytes = encode_message(msg);
    let label = match msg {
        Message::Challenge { .. } => "challenge",
        Message::ProverAuth { .. } => "prover_auth",
        Message::VerifierAuth { .. } => "verifier_auth",
        Message::AuthResult { .. } => "auth_result",
        Message::Command { .. } => "command",
        Message::Report { .. } => "report",
        Message::Close => "close",
    };
    writeln!(out, "{dir} {label},{}", hex::encode(&bytes))
}

fn cmd_session_tcp(
    mut verifier: VerifierSession,
    prover: ProverSession,
    dev: DeviceState,
    rng: &mut ChaCha20Rng,
    out: &mut dyn Write,
) -> Result<i32, Box<dyn std::error::Error>> {
    let mut transcript: Vec<(&'static str, Message)> = Vec::new();
    let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let handle = std::thread::spawn(move || prover_tcp_loop(listener, prover, dev, true));

    let mut stream = std::net::TcpStream::connect(addr)?;
    let challenge = verifier.start(rng)?;
    transcript.push(("->", challenge.clone()));
    write_framed(&mut stream, &challenge)?;
    while let Some(bytes) = read_framed(&mut stream)? {
        let msg = decode_message(&bytes)?;
        transcript.push(("<-", msg.clone()));
        let reply = verifier.handle(&msg).unwrap_or(None);
        // Stop once authentication is decided; no command is sent.
        let decided = verifier.step() == VerifierStep::Closed
            || matches!(msg, Message::AuthResult { .. });
        if let Some(reply) = reply {
            if !decided || matches!(reply, Message::Close) {
                transcript.push(("->", reply.clone()));
                write_framed(&mut stream, &reply)?;
            }
        }
        if decided {
            break;
        }
    }
    drop(stream);
    let _ = handle.join();

    for (dir, msg) in &transcript {
        print_wire(out, dir, msg)?;
    }
    if verifier.auth_result() == Some(true) {
        writeln!(out, "outcome,authenticated")?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "outcome,closed")?;
        Ok(EXIT_CHECK_FAILED)
    }
}

/// Accepts one connection and serves the prover side until EOF.
fn prover_tcp_loop(
    listener: std::net::TcpListener,
    mut prover: ProverSession,
    mut dev: DeviceState,
    auth_only: bool,
) -> ProverStep {
    let Ok((mut stream, _)) = listener.accept() else {
        return prover.step();
    };
    while let Ok(Some(bytes)) = read_framed(&mut stream) {
        let Ok(msg) = decode_message(&bytes) else {
            prover.handle_close();
            break;
        };
        if auth_only && matches!(msg, Message::Command { .. }) {
            break;
        }
        if let Ok(Some(reply)) = prover.handle(&mut dev, &msg, &CycleCosts::reference(), true) {
            if write_framed(&mut stream, &reply).is_err() {
                break;
            }
        }
        if prover.step() == ProverStep::Closed {
            break;
        }
    }
    prover.step()
}

fn run_tcp_session(
    verifier: &mut VerifierSession,
    prover: ProverSession,
    dev: DeviceState,
    rng: &mut ChaCha20Rng,
) -> Result<Option<(ReportStatus, Hash256)>, Box<dyn std::error::Error>> {
    let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let handle = std::thread::spawn(move || prover_tcp_loop(listener, prover, dev, false));

    let mut stream = std::net::TcpStream::connect(addr)?;
    write_framed(&mut stream, &verifier.start(rng)?)?;
    while let Some(bytes) = read_framed(&mut stream)? {
        let msg = decode_message(&bytes)?;
        let reply = verifier.handle(&msg).unwrap_or(None);
        if let Some(reply) = reply {
            write_framed(&mut stream, &reply)?;
        }
        if verifier.report().is_some() || verifier.step() == VerifierStep::Closed {
            break;
        }
    }
    drop(stream);
    let _ = handle.join();
    Ok(verifier.report().copied())
}

fn cmd_scenario(
    config_path: &Path,
    out: &mut dyn Write,
) -> Result<i32, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(config_path)?;
    let config = parse_scenario(&text)?;
    let report = run_scenario(&config)?;
    writeln!(out, "{}", ScenarioReport::csv_header())?;
    writeln!(out, "{}", report.to_csv())?;
    Ok(EXIT_OK)
}

fn cmd_timing(
    frames: u32,
    preset: &str,
    csv: bool,
    out: &mut dyn Write,
) -> Result<i32, Box<dyn std::error::Error>> {
    if frames == 0 {
        return Err("at least one frame required".into());
    }
    let costs = match preset {
        "paper" => CycleCosts::reference(),
        other => return Err(format!("unknown preset `{other}`").into()),
    };
    let report = timing_report(&costs, frames);
    let d_delta_us = report.d_delta_seconds * 1e6;
    let overhead_pct = report.overhead_fraction * 100.0;
    if csv {
        writeln!(
            out,
            "frames,cycles_without,cycles_with,t_delta_cycles,d_delta_us,overhead_pct"
        )?;
        writeln!(
            out,
            "{},{},{},{},{:.2},{:.2}",
            frames,
            report.total_cycles_without,
            report.total_cycles_with,
            report.t_delta_cycles,
            d_delta_us,
            overhead_pct
        )?;
    } else {
        let rest = u64::from(frames - 1);
        writeln!(out, " {:<22} {:>12} {:>12}", "parameter", "without", "with")?;
        writeln!(
            out,
            " {:<22} {:>12} {:>12}",
            "first frame cycles", costs.first_frame_without, costs.first_frame_with
        )?;
        writeln!(
            out,
            " {:<22} {:>12} {:>12}",
            "rest of frames cycles",
            rest * costs.per_frame_without,
            rest * costs.per_frame_with
        )?;
        writeln!(
            out,
            " {:<22} {:>12} {:>12}",
            "total cycles", report.total_cycles_without, report.total_cycles_with
        )?;
        writeln!(
            out,
            " {:<22} {:>12} {:>12}",
            "frequency (Hz)", costs.frequency_hz, costs.frequency_hz
        )?;
        writeln!(out, " t_delta: {} cycles", report.t_delta_cycles)?;
        writeln!(out, " d_delta: {d_delta_us:.2} us")?;
        writeln!(out, " overhead: {overhead_pct:.2}%")?;
    }
    Ok(EXIT_OK)
}
