// Licensed under the Apache-2.0 license

//! Recovery engine: reflash a corrupted frame region from the golden ROM
//! copy and write-lock it against further modification.

use crate::crypto::SecretKey;
use crate::device::DeviceState;
use crate::error::DeviceError;
use crate::frame::{deserialize_frame, serialize_frame, verify_frame, FRAME_LEN};

/// What the engine did for one frame region.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RecoveryOutcome {
    /// Region erased and rewritten from ROM, and the rewrite verified.
    pub reflashed: bool,
    /// Region write-locked after the rewrite.
    pub locked: bool,
}

/// Restores frame `frame_index` from the golden ROM image.
///
/// The region is erased, the golden frame is written, the rewritten
/// bytes are verified under `key`, and only then is the region locked.
/// Flash content is never used as a data source; the only reads are the
/// post-write verification. The whole sequence runs on the single
/// device-owner task, so it cannot be interleaved with other device
/// operations.
pub fn recover(
    dev: &mut DeviceState,
    frame_index: u32,
    key: &SecretKey,
) -> Result<RecoveryOutcome, DeviceError> {
    let region_addr = frame_index as usize * FRAME_LEN;
    let golden = dev.rom_golden_frame(frame_index)?.clone();
    if dev.is_region_locked(region_addr, FRAME_LEN) {
        // A locked region cannot have been re-corrupted; a second
        // recovery request here signals a repeated attack or a
        // misconfigured caller.
        return Err(DeviceError::RegionLocked { addr: region_addr });
    }

    dev.flash_erase_region(region_addr, FRAME_LEN)?;
    let bytes = serialize_frame(&golden);
    dev.flash_write(region_addr, &bytes)?;

    let rewritten = dev.flash_read(region_addr, FRAME_LEN)?;
    let reflashed = deserialize_frame(&rewritten)
        .map(|frame| verify_frame(&frame, key, frame_index))
        .unwrap_or(false);

    dev.pmp_lock(region_addr, FRAME_LEN)?;
    Ok(RecoveryOutcome {
        reflashed,
        locked: true,
    })
}
