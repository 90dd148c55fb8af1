// Licensed under the Apache-2.0 license

//! Step through the mutual-authentication handshake message by message,
//! once with matching keys and once with a verifier that holds the
//! wrong key.
//!
//! ```bash
//! cargo run --example mutual_auth
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sracare::crypto::SecretKey;
use sracare::device::{ChipInfo, DeviceState, SecureRom, FLASH_CAPACITY};
use sracare::protocol::{Message, ProverSession, VerifierIntent, VerifierSession, VerifierStep};

fn handshake(verifier_key: SecretKey, label: &str) {
    println!("--- {label} ---");
    let device_key = SecretKey::new(b"the device key".to_vec()).unwrap();
    let rom = SecureRom::provision(ChipInfo::default(), device_key, &[0x77u8; 2000]).unwrap();
    let dev = DeviceState::provisioned(rom, FLASH_CAPACITY).unwrap();

    let mut verifier = VerifierSession::new(verifier_key, VerifierIntent::Reset);
    let mut prover = ProverSession::new();
    let mut rng = ChaCha20Rng::seed_from_u64(2024);

    let challenge = verifier.start(&mut rng).unwrap();
    let Message::Challenge { n1 } = challenge else { unreachable!() };
    println!("verifier -> challenge      n1={}", hex::encode(&n1.as_bytes()[..8]));

    let Message::ProverAuth { mac, n2 } = prover.handle_challenge(&dev, n1).unwrap() else {
        unreachable!()
    };
    println!(
        "prover   -> prover_auth    mac={} n2={}",
        hex::encode(&mac.as_bytes()[..8]),
        hex::encode(&n2.as_bytes()[..8])
    );

    match verifier.handle_prover_auth(mac, n2).unwrap() {
        Message::VerifierAuth { b } => {
            println!("verifier -> verifier_auth  b={}", hex::encode(&b.as_bytes()[..8]));
            let Message::AuthResult { c } = prover.handle_verifier_auth(b).unwrap() else {
                unreachable!()
            };
            println!("prover   -> auth_result    C={}", u8::from(c));
            println!("session key derived on both ends: {}", c);
        }
        Message::Close => {
            println!("verifier -> close          (prover MAC did not validate)");
            prover.handle_close();
        }
        _ => unreachable!(),
    }
    println!(
        "verifier={:?} prover={:?}\n",
        verifier.step(),
        prover.step()
    );
    assert!(matches!(
        verifier.step(),
        VerifierStep::AwaitResult | VerifierStep::Closed
    ));
}

fn main() {
    handshake(
        SecretKey::new(b"the device key".to_vec()).unwrap(),
        "matching keys",
    );
    handshake(
        SecretKey::new(b"an impostor key".to_vec()).unwrap(),
        "wrong verifier key",
    );
}
