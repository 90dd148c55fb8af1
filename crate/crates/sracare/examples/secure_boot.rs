// Licensed under the Apache-2.0 license

//! Pack an application image into integrity-protected frames, provision
//! a device, and run the secure bootstrap.
//!
//! ```bash
//! cargo run --example secure_boot
//! ```

use sracare::crypto::SecretKey;
use sracare::device::{ChipInfo, DeviceState, SecureRom, FLASH_CAPACITY};
use sracare::timing::CycleCosts;

fn main() {
    // A 5.6 KB application image: six 1 KB frames, the last one padded.
    let image: Vec<u8> = (0..5734u32).map(|i| (i % 256) as u8).collect();
    let key = SecretKey::new(b"demo shared key".to_vec()).unwrap();

    let chip_info = ChipInfo {
        uuid: *b"demo-device-uuid",
        vendor_id: [0xca, 0xfe, 0x00, 0x01],
        serial: *b"SN000042",
        firmware_version: [0, 0, 0, 1],
        board_version: [0, 0, 0, 1],
    };
    let rom = SecureRom::provision(chip_info, key.clone(), &image).unwrap();
    println!(
        "packed {} bytes into {} golden frames",
        image.len(),
        rom.frame_count()
    );

    let mut dev = DeviceState::provisioned(rom, FLASH_CAPACITY).unwrap();
    let result = sracare::boot::bootstrap(&mut dev, &key, &CycleCosts::reference(), true)
        .expect("bootstrap runs");

    println!("\n frame  verdict  recovered");
    for v in &result.verdicts {
        println!(
            "    {}   {}     {}",
            v.index,
            if v.passed { "pass " } else { "FAIL " },
            if v.recovered { "yes" } else { "-" }
        );
    }
    println!("\ncycles:    {}", result.cycles);
    println!("integrity: {}", if result.integrity { "pass" } else { "FAIL" });
}
