// Licensed under the Apache-2.0 license

//! Corrupt stored frames, watch the bootstrap detect and recover them
//! from the golden ROM copy, and confirm the recovered regions are
//! write-locked afterwards.
//!
//! ```bash
//! cargo run --example corrupt_and_recover
//! ```

use sracare::crypto::SecretKey;
use sracare::device::{ChipInfo, DeviceState, SecureRom, FLASH_CAPACITY};
use sracare::frame::{serialize_frame, FRAME_LEN};
use sracare::harness::{corrupt_flash, AttackKind};
use sracare::timing::CycleCosts;

fn main() {
    let image: Vec<u8> = (0..5734u32).map(|i| (i % 199) as u8).collect();
    let key = SecretKey::new(b"recovery demo key".to_vec()).unwrap();
    let rom = SecureRom::provision(ChipInfo::default(), key.clone(), &image).unwrap();
    let mut dev = DeviceState::provisioned(rom, FLASH_CAPACITY).unwrap();

    // The adversary flips a bit in frame 1 and stomps 32 bytes of frame 4.
    corrupt_flash(&mut dev, &AttackKind::FlashBitFlip { frame: 1, bit: 500 }, 0).unwrap();
    corrupt_flash(
        &mut dev,
        &AttackKind::FlashOverwrite {
            addr: 4 * FRAME_LEN as u32 + 100,
            len: 32,
        },
        7,
    )
    .unwrap();
    println!("corrupted frame 1 (bit flip) and frame 4 (32-byte overwrite)");

    let result = sracare::boot::bootstrap(&mut dev, &key, &CycleCosts::reference(), true).unwrap();
    for v in &result.verdicts {
        println!(
            "frame {}: {}{}",
            v.index,
            if v.passed { "pass" } else { "fail" },
            if v.recovered { " -> recovered from ROM" } else { "" }
        );
    }
    println!("integrity after boot: {}", result.integrity);

    // Flash now matches the golden image bit for bit.
    let mut golden = Vec::new();
    for frame in dev.rom().golden_frames() {
        golden.extend_from_slice(&serialize_frame(frame));
    }
    let restored = dev.flash_snapshot()[..golden.len()] == golden[..];
    println!("flash bit-identical to golden image: {restored}");

    // And the recovered regions reject further writes.
    for index in [1usize, 4] {
        let blocked = dev.flash_write(index * FRAME_LEN + 10, &[0]).is_err();
        println!("frame {index} region write-locked: {blocked}");
    }
}
