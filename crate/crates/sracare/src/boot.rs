// Licensed under the Apache-2.0 license

//! Secure bootstrap: sequential frame verification with chain-of-trust
//! folding, the first-frame reflash path, and recovery of corrupted
//! frames from the golden ROM image.
//!
//! The two layering rules are enforced structurally: every frame's
//! verdict is final before the next frame is examined, and overall
//! integrity holds only if every lower frame verified. An ordered event
//! log in the result lets tests assert the sequencing, not just the
//! outcome.

use crate::crypto::SecretKey;
use crate::device::DeviceState;
use crate::error::BootError;
use crate::frame::{deserialize_frame, verify_frame, FRAME_LEN};
use crate::resilience::recover;
use crate::timing::CycleCosts;

/// Per-frame outcome. `passed` is the verdict on the frame as found in
/// flash; `recovered` is set when the resilience engine restored the
/// frame and the rewritten region verified.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FrameVerdict {
    pub index: u32,
    pub passed: bool,
    pub recovered: bool,
}

impl FrameVerdict {
    /// Verdict after recovery, the value the integrity fold consumes.
    pub fn effective(&self) -> bool {
        self.passed || self.recovered
    }
}

/// Ordered trace of the bootstrap.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BootEvent {
    FrameExamined(u32),
    FirstFrameReflash,
    RecoveryAttempted { index: u32, ok: bool },
    VerdictFinal { index: u32, passed: bool },
}

/// Outcome of a bootstrap run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BootResult {
    /// The chain-of-trust fold over post-recovery verdicts.
    pub integrity: bool,
    pub verdicts: Vec<FrameVerdict>,
    pub cycles: u64,
    pub recovered_count: u32,
    pub events: Vec<BootEvent>,
}

/// Chain-of-trust fold: trust anchors at the ROM (`true` for an empty
/// list) and each layer stays trusted only while every verdict below it
/// held.
pub fn chain_of_trust(verdicts: &[bool]) -> bool {
    let mut integrity = true;
    for &verdict in verdicts {
        integrity = integrity && verdict;
    }
    integrity
}

/// Runs the bootstrap over the frames stored in flash at address zero.
///
/// Frames are processed strictly in order. A frame that fails to parse
/// or verify is a failed verdict; with resilience enabled the engine
/// reflashes it from ROM and the rewritten region is re-verified. The
/// first frame additionally gets its region erased and rewritten after a
/// successful verification, which is why it costs more cycles. The boot
/// halts at the first frame whose post-recovery verdict is still false.
pub fn bootstrap(
    dev: &mut DeviceState,
    key: &SecretKey,
    costs: &CycleCosts,
    resilience_enabled: bool,
) -> Result<BootResult, BootError> {
    let frame_count = dev.rom_frame_count();
    let mut verdicts = Vec::with_capacity(frame_count as usize);
    let mut events = Vec::new();
    let mut cycles = 0u64;
    let mut recovered_count = 0u32;

    for index in 0..frame_count {
        events.push(BootEvent::FrameExamined(index));
        cycles += if index == 0 {
            costs.first_frame_with
        } else {
            costs.per_frame_with
        };

        let region_addr = index as usize * FRAME_LEN;
        let bytes = dev.flash_read(region_addr, FRAME_LEN)?;
        let passed = match deserialize_frame(&bytes) {
            Ok(frame) => verify_frame(&frame, key, index),
            Err(_) => false,
        };

        let mut recovered = false;
        if !passed && resilience_enabled {
            cycles += costs.recovery_per_frame;
            let ok = match recover(dev, index, key) {
                Ok(outcome) => {
                    let rewritten = dev.flash_read(region_addr, FRAME_LEN)?;
                    outcome.reflashed
                        && outcome.locked
                        && deserialize_frame(&rewritten)
                            .map(|f| verify_frame(&f, key, index))
                            .unwrap_or(false)
                }
                Err(_) => false,
            };
            events.push(BootEvent::RecoveryAttempted { index, ok });
            recovered = ok;
            if ok {
                recovered_count += 1;
            }
        }

        if passed && index == 0 && !dev.is_region_locked(0, FRAME_LEN) {
            // Trusted first frame: clear the region and reflash it.
            dev.flash_erase_region(0, FRAME_LEN)?;
            dev.flash_write(0, &bytes)?;
            events.push(BootEvent::FirstFrameReflash);
        }

        let verdict = FrameVerdict {
            index,
            passed,
            recovered,
        };
        events.push(BootEvent::VerdictFinal {
            index,
            passed: verdict.effective(),
        });
        verdicts.push(verdict);

        if !verdict.effective() {
            // Integrity is already lost; no higher layer may run.
            break;
        }
    }

    let integrity = chain_of_trust(&verdicts.iter().map(FrameVerdict::effective).collect::<Vec<_>>());
    dev.add_cycles(cycles);
    Ok(BootResult {
        integrity,
        verdicts,
        cycles,
        recovered_count,
        events,
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn chain_of_trust_equals_and_fold(verdicts in proptest::collection::vec(any::<bool>(), 0..32)) {
            prop_assert_eq!(chain_of_trust(&verdicts), verdicts.iter().all(|&v| v));
        }
    }
}
