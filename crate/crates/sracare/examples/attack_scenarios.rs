// Licensed under the Apache-2.0 license

//! Sweep every attack kind through the end-to-end scenario runner and
//! print the graded outcomes as CSV.
//!
//! ```bash
//! cargo run --example attack_scenarios
//! ```

use sracare::crypto::SecretKey;
use sracare::harness::{run_scenario, AttackKind, AttackSpec, ScenarioConfig, ScenarioReport};

fn main() {
    let image: Vec<u8> = (0..5734u32).map(|i| (i % 227) as u8).collect();
    let key = SecretKey::new(b"scenario sweep key".to_vec()).unwrap();

    let attacks = [
        None,
        Some(AttackKind::FlashBitFlip { frame: 3, bit: 17 }),
        Some(AttackKind::FlashOverwrite { addr: 2100, len: 48 }),
        Some(AttackKind::FrameReorder {
            frame_a: 1,
            frame_b: 2,
        }),
        Some(AttackKind::ChannelTamper {
            message_index: 1,
            bit: None,
        }),
        Some(AttackKind::ChannelReplay { message_index: 1 }),
        Some(AttackKind::ChannelFlood { count: 64 }),
        Some(AttackKind::WrongKey),
    ];

    println!("{}", ScenarioReport::csv_header());
    for (i, kind) in attacks.into_iter().enumerate() {
        let mut config = ScenarioConfig::baseline(image.clone(), key.clone(), i as u64);
        config.attack = kind.map(|kind| AttackSpec {
            kind,
            seed: i as u64,
        });
        let report = run_scenario(&config).expect("scenario runs");
        println!("{}", report.to_csv());
    }
}
