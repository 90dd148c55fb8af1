// Licensed under the Apache-2.0 license

//! End-to-end checks of the command-line surface: subcommand behavior,
//! exit codes, file formats, and deterministic output.

use std::path::{Path, PathBuf};
use std::process::Command;

use sracare::cli::run_with;
use sracare::device::read_rom_image;
use sracare::frame::{deserialize_frame, verify_frame, FRAME_LEN};

const KEY_HEX: &str = "abababababababababababababababababababababababababababababababab";

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut argv = vec!["sracare".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let code = run_with(argv, None, &mut out);
    (code, String::from_utf8(out).unwrap())
}

struct Fixture {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    image: PathBuf,
    rom: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("app.bin");
    let chip_info = dir.path().join("ci.bin");
    let rom = dir.path().join("rom.bin");
    let image_bytes: Vec<u8> = (0..5734u32).map(|i| (i % 241) as u8).collect();
    std::fs::write(&image, image_bytes).unwrap();
    std::fs::write(&chip_info, [0x5au8; 36]).unwrap();
    let (code, _) = run(&[
        "mkrom",
        image.to_str().unwrap(),
        "--key-hex",
        KEY_HEX,
        "--chip-info",
        chip_info.to_str().unwrap(),
        "-o",
        rom.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    Fixture { dir, image, rom }
}

#[test]
fn timing_reproduces_reference_numbers() {
    let (code, out) = run(&["timing", "--frames", "6", "--preset", "paper"]);
    assert_eq!(code, 0);
    assert!(out.contains("656941"), "{out}");
    assert!(out.contains("709873"), "{out}");
    assert!(out.contains("52932"), "{out}");
    assert!(out.contains("529.32"), "{out}");
    assert!(out.contains("8.06"), "{out}");
}

#[test]
fn timing_csv_line_format() {
    let (code, out) = run(&["timing", "--frames", "6", "--csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "frames,cycles_without,cycles_with,t_delta_cycles,d_delta_us,overhead_pct"
    );
    assert_eq!(lines.next().unwrap(), "6,656941,709873,52932,529.32,8.06");
}

#[test]
fn timing_rejects_unknown_preset() {
    let (code, out) = run(&["timing", "--preset", "bogus"]);
    assert_eq!(code, 2);
    assert!(out.contains("unknown preset"));
}

#[test]
fn pack_writes_a_bare_frame_stream() {
    let fx = fixture();
    let frames_path = fx.dir.path().join("frames.bin");
    let (code, out) = run(&[
        "pack",
        fx.image.to_str().unwrap(),
        "--key-hex",
        KEY_HEX,
        "-o",
        frames_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("frames,6"));

    // No container header: exactly six serialized frames that verify.
    let bytes = std::fs::read(&frames_path).unwrap();
    assert_eq!(bytes.len(), 6 * FRAME_LEN);
    let key = sracare::crypto::SecretKey::from_hex(KEY_HEX).unwrap();
    for i in 0..6 {
        let frame = deserialize_frame(&bytes[i * FRAME_LEN..(i + 1) * FRAME_LEN]).unwrap();
        assert!(verify_frame(&frame, &key, i as u32));
    }
}

#[test]
fn mkrom_container_round_trips() {
    let fx = fixture();
    let bytes = std::fs::read(&fx.rom).unwrap();
    assert_eq!(&bytes[..4], b"SRRM");
    let rom = read_rom_image(&bytes).unwrap();
    assert_eq!(rom.frame_count(), 6);
    assert_eq!(rom.chip_info().uuid, [0x5au8; 16]);
}

#[test]
fn mkrom_rejects_wrong_chip_info_size() {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("app.bin");
    let chip_info = dir.path().join("ci.bin");
    std::fs::write(&image, [1u8; 10]).unwrap();
    std::fs::write(&chip_info, [0u8; 35]).unwrap();
    let (code, out) = run(&[
        "mkrom",
        image.to_str().unwrap(),
        "--key-hex",
        KEY_HEX,
        "--chip-info",
        chip_info.to_str().unwrap(),
        "-o",
        dir.path().join("rom.bin").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(out.contains("36 bytes"));
}

#[test]
fn boot_clean_image_exits_zero() {
    let fx = fixture();
    let (code, out) = run(&["boot", "--rom", fx.rom.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("frame,0,pass,-"));
    assert!(out.contains("frame,5,pass,-"));
    assert!(out.contains("cycles,709873"));
    assert!(out.contains("integrity,pass"));
}

#[test]
fn boot_with_corruption_recovers_and_exits_zero() {
    let fx = fixture();
    let (code, out) = run(&["boot", "--rom", fx.rom.to_str().unwrap(), "--corrupt", "3:17"]);
    assert_eq!(code, 0);
    assert!(out.contains("frame,3,fail,recovered"), "{out}");
    assert!(out.contains("integrity,pass"));
}

#[test]
fn boot_without_resilience_fails_on_corruption() {
    let fx = fixture();
    let (code, out) = run(&[
        "boot",
        "--rom",
        fx.rom.to_str().unwrap(),
        "--corrupt",
        "3:17",
        "--no-resilience",
    ]);
    assert_eq!(code, 1);
    assert!(out.contains("frame,3,fail,-"));
    assert!(out.contains("integrity,fail"));
}

#[test]
fn session_honest_and_wrong_key() {
    let fx = fixture();
    let (code, out) = run(&["session", "--rom", fx.rom.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("outcome,authenticated"), "{out}");

    let wrong = "cd".repeat(32);
    let (code, out) = run(&[
        "session",
        "--rom",
        fx.rom.to_str().unwrap(),
        "--verifier-key-hex",
        &wrong,
    ]);
    assert_eq!(code, 1);
    assert!(out.contains("outcome,closed"), "{out}");
}

#[test]
fn attest_reports_and_verifies() {
    let fx = fixture();
    let (code, out) = run(&[
        "attest",
        "--rom",
        fx.rom.to_str().unwrap(),
        "--addr",
        "0",
        "--len",
        "2048",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("status,ok"));
    assert!(out.contains("match,true"));
}

#[test]
fn attest_out_of_bounds_region_fails() {
    let fx = fixture();
    let (code, out) = run(&[
        "attest",
        "--rom",
        fx.rom.to_str().unwrap(),
        "--addr",
        "65530",
        "--len",
        "100",
    ]);
    assert_eq!(code, 1);
    assert!(out.contains("status,attest_failed"), "{out}");
    assert!(out.contains("match,false"));
}

#[test]
fn tcp_transport_matches_in_process_transcript() {
    let fx = fixture();
    let (code_a, out_a) = run(&["session", "--rom", fx.rom.to_str().unwrap()]);
    let (code_b, out_b) = run(&["session", "--rom", fx.rom.to_str().unwrap(), "--tcp"]);
    assert_eq!(code_a, 0);
    assert_eq!(code_b, 0);
    assert_eq!(out_a, out_b, "TCP and in-process transcripts differ");
}

#[test]
fn scenario_prints_csv_report() {
    let fx = fixture();
    let config = fx.dir.path().join("scenario.cfg");
    std::fs::write(
        &config,
        format!(
            "image={}\nattack=flash_bit_flip\nframe=3\nbit=17\nseed=42\nflag_f=1\n",
            fx.image.display()
        ),
    )
    .unwrap();
    let (code, out) = run(&["scenario", config.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("attack,detected,recovered,session_closed,final_integrity"));
    assert!(out.contains("flash_bit_flip,true,true,false,true"), "{out}");
}

#[test]
fn scenario_config_errors_exit_two() {
    let (code, out) = run(&["scenario", "/nonexistent/scenario.cfg"]);
    assert_eq!(code, 2);
    assert!(out.contains("error"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let fx = fixture();
    for args in [
        vec!["timing", "--frames", "6"],
        vec!["boot", "--rom", fx.rom.to_str().unwrap()],
        vec!["session", "--rom", fx.rom.to_str().unwrap()],
        vec![
            "attest",
            "--rom",
            fx.rom.to_str().unwrap(),
            "--addr",
            "0",
            "--len",
            "1024",
        ],
    ] {
        let (_, first) = run(&args);
        let (_, second) = run(&args);
        assert_eq!(first, second, "{args:?}");
    }
}

#[test]
fn seed_changes_session_nonce_and_env_overrides_flag() {
    let fx = fixture();
    let (_, base) = run(&["session", "--rom", fx.rom.to_str().unwrap()]);
    let (_, seeded) = run(&["--seed", "7", "session", "--rom", fx.rom.to_str().unwrap()]);
    assert_ne!(base, seeded);

    // Env var takes precedence over the flag.
    let mut out = Vec::new();
    let argv = [
        "sracare",
        "--seed",
        "7",
        "session",
        "--rom",
        fx.rom.to_str().unwrap(),
    ]
    .map(String::from);
    let code = run_with(argv, Some("0".to_string()), &mut out);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap(), base);
}

fn binary() -> &'static Path {
    Path::new(env!("CARGO_BIN_EXE_sracare"))
}

#[test]
fn real_binary_runs_and_honors_env_seed() {
    let fx = fixture();
    let output = Command::new(binary())
        .args(["session", "--rom", fx.rom.to_str().unwrap(), "--seed", "9"])
        .env("SRACARE_SEED", "3")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));

    let expected = Command::new(binary())
        .args(["session", "--rom", fx.rom.to_str().unwrap(), "--seed", "3"])
        .env_remove("SRACARE_SEED")
        .output()
        .unwrap();
    assert_eq!(output.stdout, expected.stdout);
}

#[test]
fn usage_errors_exit_two() {
    let output = Command::new(binary()).arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}
