// Licensed under the Apache-2.0 license

//! Run a complete authenticated session ending in a remote attestation,
//! and validate the returned report against the verifier's reference
//! copy of the flash: first over an honest device, then over a tampered
//! one.
//!
//! ```bash
//! cargo run --example remote_attestation
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sracare::channel::{run_session, Passthrough};
use sracare::crypto::{hmac_sha256, SecretKey};
use sracare::device::{ChipInfo, DeviceState, SecureRom, FLASH_CAPACITY};
use sracare::frame::serialize_frame;
use sracare::protocol::{AttestParams, ProverSession, VerifierIntent, VerifierSession};
use sracare::timing::CycleCosts;

fn attest_device(tamper: bool) {
    let image: Vec<u8> = (0..5734u32).map(|i| (i % 223) as u8).collect();
    let key = SecretKey::new(b"attestation demo key".to_vec()).unwrap();
    let rom = SecureRom::provision(ChipInfo::default(), key.clone(), &image).unwrap();
    let mut dev = DeviceState::provisioned(rom.clone(), FLASH_CAPACITY).unwrap();

    if tamper {
        let original = dev.flash_read(2048, 1).unwrap()[0];
        dev.flash_write(2048, &[original ^ 0x01]).unwrap();
    }

    let params = AttestParams { s_addr: 0, l: 6 * 1024 };
    let mut verifier = VerifierSession::new(key, VerifierIntent::Attest(params));
    let mut prover = ProverSession::new();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let record = run_session(
        &mut verifier,
        &mut prover,
        &mut dev,
        &CycleCosts::reference(),
        true,
        &mut rng,
        &mut Passthrough,
    );

    let (status, r) = record.report.expect("report delivered");

    // The verifier recomputes the expected digest over its own copy of
    // the packed image, keyed with the session key.
    let mut reference = Vec::new();
    for frame in rom.golden_frames() {
        reference.extend_from_slice(&serialize_frame(frame));
    }
    let k1 = verifier.session_key().expect("authenticated");
    let expected = hmac_sha256(k1, &reference[..params.l as usize]);

    println!(
        "device {}: status={status:?} report={} match={}",
        if tamper { "tampered" } else { "honest " },
        &r.to_hex()[..16],
        r.ct_eq(&expected)
    );
}

fn main() {
    attest_device(false);
    attest_device(true);
}
