// Licensed under the Apache-2.0 license

//! Simulated prover hardware: writable flash, read-only secure ROM
//! holding the chip info, the symmetric key, and the golden recovery
//! image, plus a PMP-style write-lock table over flash regions.
//!
//! Every flash and ROM access is recorded in an ordered access log so
//! tests can assert *how* a result was produced (e.g. that recovery never
//! reads corrupted flash as a data source), not just what it produced.

use std::cell::RefCell;

use crate::crypto::SecretKey;
use crate::error::{DeviceError, RomImageError};
use crate::frame::{deserialize_frame, pack_image, serialize_frame, verify_frame, Frame, FRAME_LEN};

/// Default flash capacity in bytes.
pub const FLASH_CAPACITY: usize = 64 * 1024;

/// Erased-flash fill byte (NOR convention).
pub const ERASED_BYTE: u8 = 0xff;

/// Serialized chip-info length in bytes.
pub const CHIP_INFO_LEN: usize = 36;

/// ROM container magic.
pub const ROM_MAGIC: [u8; 4] = *b"SRRM";

/// ROM container format version.
pub const ROM_VERSION: u16 = 1;

/// Device-identifying fields stored in secure ROM. The UUID occupies the
/// first 16 serialized bytes; that prefix is what the prover hashes when
/// deriving its session nonce.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ChipInfo {
    pub uuid: [u8; 16],
    pub vendor_id: [u8; 4],
    pub serial: [u8; 8],
    pub firmware_version: [u8; 4],
    pub board_version: [u8; 4],
}

impl ChipInfo {
    pub fn to_bytes(&self) -> [u8; CHIP_INFO_LEN] {
        let mut out = [0u8; CHIP_INFO_LEN];
        out[0..16].copy_from_slice(&self.uuid);
        out[16..20].copy_from_slice(&self.vendor_id);
        out[20..28].copy_from_slice(&self.serial);
        out[28..32].copy_from_slice(&self.firmware_version);
        out[32..36].copy_from_slice(&self.board_version);
        out
    }

    pub fn from_bytes(bytes: &[u8; CHIP_INFO_LEN]) -> Self {
        Self {
            uuid: bytes[0..16].try_into().unwrap(),
            vendor_id: bytes[16..20].try_into().unwrap(),
            serial: bytes[20..28].try_into().unwrap(),
            firmware_version: bytes[28..32].try_into().unwrap(),
            board_version: bytes[32..36].try_into().unwrap(),
        }
    }
}

/// Read-only secure storage: chip info, the shared key, and the golden
/// recovery frames. Construction validates that every golden frame
/// verifies under the key; after that the contents are immutable.
#[derive(Clone)]
pub struct SecureRom {
    chip_info: ChipInfo,
    key: SecretKey,
    golden_frames: Vec<Frame>,
}

impl std::fmt::Debug for SecureRom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecureRom")
            .field("chip_info", &self.chip_info)
            .field("key", &self.key)
            .field("frame_count", &self.golden_frames.len())
            .finish()
    }
}

impl SecureRom {
    pub fn new(
        chip_info: ChipInfo,
        key: SecretKey,
        golden_frames: Vec<Frame>,
    ) -> Result<Self, RomImageError> {
        for (i, frame) in golden_frames.iter().enumerate() {
            if !verify_frame(frame, &key, i as u32) {
                return Err(RomImageError::GoldenFrameInvalid { index: i as u32 });
            }
        }
        Ok(Self {
            chip_info,
            key,
            golden_frames,
        })
    }

    /// Packs a raw application image and stores the frames as the golden
    /// recovery copy.
    pub fn provision(
        chip_info: ChipInfo,
        key: SecretKey,
        image: &[u8],
    ) -> Result<Self, RomImageError> {
        let frames = pack_image(image, &key)?;
        Self::new(chip_info, key, frames)
    }

    pub fn chip_info(&self) -> &ChipInfo {
        &self.chip_info
    }

    pub fn key(&self) -> &SecretKey {
        &self.key
    }

    pub fn frame_count(&self) -> u32 {
        self.golden_frames.len() as u32
    }

    pub fn golden_frames(&self) -> &[Frame] {
        &self.golden_frames
    }
}

/// Writable flash array.
#[derive(Clone, PartialEq, Eq)]
pub struct FlashMemory {
    bytes: Vec<u8>,
}

impl FlashMemory {
    pub fn erased(capacity: usize) -> Self {
        Self {
            bytes: vec![ERASED_BYTE; capacity],
        }
    }

    pub fn capacity(&self) -> usize {
        self.bytes.len()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Write-locked flash intervals. Locks merge on overlap or adjacency and
/// cannot be cleared within a power cycle.
#[derive(Clone, Default, Debug)]
pub struct PmpLockSet {
    // Sorted, non-overlapping half-open intervals [start, end).
    regions: Vec<(usize, usize)>,
}

impl PmpLockSet {
    pub fn lock(&mut self, start: usize, len: usize) {
        if len == 0 {
            return;
        }
        let (mut new_start, mut new_end) = (start, start + len);
        let mut merged = Vec::with_capacity(self.regions.len() + 1);
        for &(s, e) in &self.regions {
            if e < new_start || s > new_end {
                merged.push((s, e));
            } else {
                new_start = new_start.min(s);
                new_end = new_end.max(e);
            }
        }
        merged.push((new_start, new_end));
        merged.sort_unstable();
        self.regions = merged;
    }

    /// True when any byte of `[start, start+len)` lies in a locked region.
    pub fn overlaps(&self, start: usize, len: usize) -> bool {
        if len == 0 {
            return false;
        }
        let end = start + len;
        self.regions.iter().any(|&(s, e)| start < e && s < end)
    }

    pub fn regions(&self) -> &[(usize, usize)] {
        &self.regions
    }
}

/// One entry in the device access log.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AccessRecord {
    FlashRead { addr: usize, len: usize },
    FlashWrite { addr: usize, len: usize },
    FlashErase { addr: usize, len: usize },
    PmpLock { addr: usize, len: usize },
    RomFrameRead { index: u32 },
    RomChipInfoRead,
}

/// The complete simulated prover device.
pub struct DeviceState {
    rom: SecureRom,
    flash: FlashMemory,
    pmp: PmpLockSet,
    cycle_counter: u64,
    log: RefCell<Vec<AccessRecord>>,
}

impl DeviceState {
    /// A device whose flash is fully erased.
    pub fn new(rom: SecureRom, capacity: usize) -> Self {
        Self {
            rom,
            flash: FlashMemory::erased(capacity),
            pmp: PmpLockSet::default(),
            cycle_counter: 0,
            log: RefCell::new(Vec::new()),
        }
    }

    /// A device whose flash holds the serialized golden frames at
    /// consecutive 1024-byte slots starting at address zero, i.e. the
    /// state after a legitimate reflash.
    pub fn provisioned(rom: SecureRom, capacity: usize) -> Result<Self, DeviceError> {
        let mut dev = Self::new(rom, capacity);
        let frames: Vec<[u8; FRAME_LEN]> = dev
            .rom
            .golden_frames()
            .iter()
            .map(serialize_frame)
            .collect();
        for (i, bytes) in frames.iter().enumerate() {
            dev.flash_write(i * FRAME_LEN, bytes)?;
        }
        dev.log.borrow_mut().clear();
        Ok(dev)
    }

    /// Power cycle: flash content persists, PMP locks and the cycle
    /// counter reset.
    pub fn power_cycle(self) -> Self {
        Self {
            rom: self.rom,
            flash: self.flash,
            pmp: PmpLockSet::default(),
            cycle_counter: 0,
            log: RefCell::new(Vec::new()),
        }
    }

    pub fn flash_capacity(&self) -> usize {
        self.flash.capacity()
    }

    pub fn cycles(&self) -> u64 {
        self.cycle_counter
    }

    pub fn add_cycles(&mut self, cycles: u64) {
        self.cycle_counter += cycles;
    }

    pub fn rom(&self) -> &SecureRom {
        &self.rom
    }

    fn check_bounds(&self, addr: usize, len: usize) -> Result<(), DeviceError> {
        if addr.checked_add(len).is_none_or(|end| end > self.flash.capacity()) {
            return Err(DeviceError::OutOfBounds {
                addr,
                len,
                capacity: self.flash.capacity(),
            });
        }
        Ok(())
    }

    /// Copies `len` bytes starting at `addr`. No state change.
    pub fn flash_read(&self, addr: usize, len: usize) -> Result<Vec<u8>, DeviceError> {
        self.check_bounds(addr, len)?;
        self.log
            .borrow_mut()
            .push(AccessRecord::FlashRead { addr, len });
        Ok(self.flash.bytes[addr..addr + len].to_vec())
    }

    /// Writes `data` at `addr` unless any byte of the range is
    /// write-locked; a rejected write leaves flash untouched.
    pub fn flash_write(&mut self, addr: usize, data: &[u8]) -> Result<(), DeviceError> {
        self.check_bounds(addr, data.len())?;
        if self.pmp.overlaps(addr, data.len()) {
            return Err(DeviceError::RegionLocked { addr });
        }
        self.log.borrow_mut().push(AccessRecord::FlashWrite {
            addr,
            len: data.len(),
        });
        self.flash.bytes[addr..addr + data.len()].copy_from_slice(data);
        Ok(())
    }

    /// Sets the region to the erased fill value.
    pub fn flash_erase_region(&mut self, start: usize, len: usize) -> Result<(), DeviceError> {
        self.check_bounds(start, len)?;
        if self.pmp.overlaps(start, len) {
            return Err(DeviceError::RegionLocked { addr: start });
        }
        self.log
            .borrow_mut()
            .push(AccessRecord::FlashErase { addr: start, len });
        self.flash.bytes[start..start + len].fill(ERASED_BYTE);
        Ok(())
    }

    /// Write-locks the region for the rest of the power cycle.
    pub fn pmp_lock(&mut self, start: usize, len: usize) -> Result<(), DeviceError> {
        self.check_bounds(start, len)?;
        self.log
            .borrow_mut()
            .push(AccessRecord::PmpLock { addr: start, len });
        self.pmp.lock(start, len);
        Ok(())
    }

    pub fn is_region_locked(&self, start: usize, len: usize) -> bool {
        self.pmp.overlaps(start, len)
    }

    pub fn pmp(&self) -> &PmpLockSet {
        &self.pmp
    }

    /// Serialized chip info; the UUID occupies the first 16 bytes.
    pub fn rom_chip_info_bytes(&self) -> [u8; CHIP_INFO_LEN] {
        self.log.borrow_mut().push(AccessRecord::RomChipInfoRead);
        self.rom.chip_info.to_bytes()
    }

    pub fn rom_golden_frame(&self, index: u32) -> Result<&Frame, DeviceError> {
        let count = self.rom.frame_count();
        self.log
            .borrow_mut()
            .push(AccessRecord::RomFrameRead { index });
        self.rom
            .golden_frames
            .get(index as usize)
            .ok_or(DeviceError::NoSuchFrame { index, count })
    }

    pub fn rom_frame_count(&self) -> u32 {
        self.rom.frame_count()
    }

    pub fn access_log(&self) -> Vec<AccessRecord> {
        self.log.borrow().clone()
    }

    pub fn clear_access_log(&self) {
        self.log.borrow_mut().clear();
    }

    /// Direct flash snapshot for oracle comparisons; bypasses the log.
    pub fn flash_snapshot(&self) -> Vec<u8> {
        self.flash.bytes.clone()
    }
}

/// Serializes a ROM to the container format:
/// `[magic "SRRM"][version u16 LE][chip_info 36][key_len u16 LE][key]`
/// `[frame_count u32 LE][frames ...]`.
pub fn write_rom_image(rom: &SecureRom) -> Vec<u8> {
    let key_bytes = rom.key.expose_bytes();
    let mut out = Vec::with_capacity(4 + 2 + CHIP_INFO_LEN + 2 + key_bytes.len() + 4);
    out.extend_from_slice(&ROM_MAGIC);
    out.extend_from_slice(&ROM_VERSION.to_le_bytes());
    out.extend_from_slice(&rom.chip_info.to_bytes());
    out.extend_from_slice(&(key_bytes.len() as u16).to_le_bytes());
    out.extend_from_slice(key_bytes);
    out.extend_from_slice(&rom.frame_count().to_le_bytes());
    for frame in &rom.golden_frames {
        out.extend_from_slice(&serialize_frame(frame));
    }
    out
}

/// Parses a ROM container, re-validating every golden frame.
pub fn read_rom_image(bytes: &[u8]) -> Result<SecureRom, RomImageError> {
    let mut cursor = Cursor { bytes, pos: 0 };
    if cursor.take(4)? != ROM_MAGIC {
        return Err(RomImageError::BadMagic);
    }
    let version = u16::from_le_bytes(cursor.take(2)?.try_into().unwrap());
    if version != ROM_VERSION {
        return Err(RomImageError::UnsupportedVersion(version));
    }
    let ci_bytes: [u8; CHIP_INFO_LEN] = cursor.take(CHIP_INFO_LEN)?.try_into().unwrap();
    let chip_info = ChipInfo::from_bytes(&ci_bytes);
    let key_len = u16::from_le_bytes(cursor.take(2)?.try_into().unwrap());
    let key = SecretKey::new(cursor.take(key_len as usize)?.to_vec())?;
    let frame_count = u32::from_le_bytes(cursor.take(4)?.try_into().unwrap());
    let mut frames = Vec::with_capacity(frame_count as usize);
    for _ in 0..frame_count {
        frames.push(deserialize_frame(cursor.take(FRAME_LEN)?)?);
    }
    if cursor.pos != bytes.len() {
        return Err(RomImageError::Truncated);
    }
    SecureRom::new(chip_info, key, frames)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RomImageError> {
        if self.pos + n > self.bytes.len() {
            return Err(RomImageError::Truncated);
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::PAYLOAD_LEN;

    fn test_key() -> SecretKey {
        SecretKey::new(b"device module test key".to_vec()).unwrap()
    }

    fn chip_info() -> ChipInfo {
        ChipInfo {
            uuid: *b"0123456789abcdef",
            vendor_id: [0xca, 0xfe, 0x00, 0x01],
            serial: [1, 2, 3, 4, 5, 6, 7, 8],
            firmware_version: [0, 0, 0, 3],
            board_version: [0, 0, 0, 1],
        }
    }

    fn device_with_image(image: &[u8]) -> DeviceState {
        let rom = SecureRom::provision(chip_info(), test_key(), image).unwrap();
        DeviceState::provisioned(rom, FLASH_CAPACITY).unwrap()
    }

    #[test]
    fn read_of_zero_length_is_empty() {
        let dev = device_with_image(&[1, 2, 3]);
        assert_eq!(dev.flash_read(0, 0).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn read_your_write() {
        let mut dev = device_with_image(&[1, 2, 3]);
        dev.flash_write(100, &[0xab]).unwrap();
        assert_eq!(dev.flash_read(100, 1).unwrap(), vec![0xab]);
    }

    #[test]
    fn read_past_end_is_out_of_bounds() {
        let dev = device_with_image(&[1]);
        let err = dev.flash_read(FLASH_CAPACITY - 1, 2).unwrap_err();
        assert!(matches!(err, DeviceError::OutOfBounds { .. }));
    }

    #[test]
    fn write_into_locked_region_is_rejected() {
        let mut dev = device_with_image(&[1, 2, 3]);
        dev.pmp_lock(0, 1024).unwrap();
        let err = dev.flash_write(512, &[0u8; 4]).unwrap_err();
        assert_eq!(err, DeviceError::RegionLocked { addr: 512 });
    }

    #[test]
    fn straddling_write_is_rejected_without_partial_effect() {
        let mut dev = device_with_image(&[0x11; 2048]);
        dev.pmp_lock(0, 1024).unwrap();
        let before = dev.flash_snapshot();
        // Write starts in the locked region and crosses into unlocked space.
        let err = dev.flash_write(1000, &[0u8; 100]).unwrap_err();
        assert_eq!(err, DeviceError::RegionLocked { addr: 1000 });
        assert_eq!(dev.flash_snapshot(), before, "partial write leaked");
    }

    #[test]
    fn failed_out_of_bounds_write_changes_nothing() {
        let mut dev = device_with_image(&[0x22; 100]);
        let before = dev.flash_snapshot();
        assert!(dev.flash_write(FLASH_CAPACITY - 2, &[0u8; 8]).is_err());
        assert_eq!(dev.flash_snapshot(), before);
    }

    #[test]
    fn erase_fills_with_ff() {
        let mut dev = device_with_image(&[0x33; 500]);
        dev.flash_erase_region(0, 128).unwrap();
        assert_eq!(dev.flash_read(0, 128).unwrap(), vec![0xff; 128]);
    }

    #[test]
    fn erase_zero_length_is_noop() {
        let mut dev = device_with_image(&[0x44; 100]);
        let before = dev.flash_snapshot();
        dev.flash_erase_region(50, 0).unwrap();
        assert_eq!(dev.flash_snapshot(), before);
    }

    #[test]
    fn erase_locked_region_is_rejected() {
        let mut dev = device_with_image(&[0x55; 100]);
        dev.pmp_lock(0, 64).unwrap();
        assert_eq!(
            dev.flash_erase_region(0, 64),
            Err(DeviceError::RegionLocked { addr: 0 })
        );
    }

    #[test]
    fn lock_is_idempotent() {
        let mut dev = device_with_image(&[1]);
        dev.pmp_lock(0, 1024).unwrap();
        dev.pmp_lock(0, 1024).unwrap();
        assert_eq!(dev.pmp().regions(), &[(0, 1024)]);
    }

    #[test]
    fn adjacent_locks_merge_and_enforce_boundaries() {
        let mut dev = device_with_image(&[0x66; 4096]);
        dev.pmp_lock(0, 1024).unwrap();
        dev.pmp_lock(1024, 1024).unwrap();
        assert_eq!(dev.pmp().regions(), &[(0, 2048)]);
        // Exhaustive sweep across the boundary region.
        for addr in 0..2048 {
            assert!(
                dev.flash_write(addr, &[0]).is_err(),
                "write at {addr} must be rejected"
            );
        }
        assert!(dev.flash_write(2048, &[0]).is_ok());
    }

    #[test]
    fn chip_info_round_trip_and_layout() {
        let ci = chip_info();
        let bytes = ci.to_bytes();
        assert_eq!(bytes.len(), CHIP_INFO_LEN);
        assert_eq!(&bytes[..16], &ci.uuid);
        assert_eq!(ChipInfo::from_bytes(&bytes), ci);

        let zero = ChipInfo::default();
        assert_eq!(zero.to_bytes(), [0u8; CHIP_INFO_LEN]);
    }

    #[test]
    fn chip_info_bytes_start_with_uuid() {
        let dev = device_with_image(&[9]);
        let bytes = dev.rom_chip_info_bytes();
        assert_eq!(&bytes[..16], b"0123456789abcdef");
    }

    #[test]
    fn golden_frame_lookup() {
        let dev = device_with_image(&vec![0x77u8; 5734]);
        assert_eq!(dev.rom_frame_count(), 6);
        assert_eq!(dev.rom_golden_frame(0).unwrap().header.frame_number, 0);
        assert_eq!(
            dev.rom_golden_frame(6).unwrap_err(),
            DeviceError::NoSuchFrame { index: 6, count: 6 }
        );
    }

    #[test]
    fn golden_frames_verify_under_rom_key() {
        let dev = device_with_image(&vec![0x78u8; 3000]);
        let key = dev.rom().key().clone();
        for (i, frame) in dev.rom().golden_frames().iter().enumerate() {
            assert!(verify_frame(frame, &key, i as u32));
        }
    }

    #[test]
    fn rom_construction_rejects_tampered_golden_frames() {
        let key = test_key();
        let mut frames = pack_image(&[0x79u8; 2000], &key).unwrap();
        frames[1].payload[0] ^= 0x01;
        let err = SecureRom::new(chip_info(), key, frames).unwrap_err();
        assert!(matches!(
            err,
            RomImageError::GoldenFrameInvalid { index: 1 }
        ));
    }

    #[test]
    fn rom_survives_flash_and_pmp_operations() {
        let mut dev = device_with_image(&vec![0x7au8; 4000]);
        let before: Vec<_> = dev
            .rom()
            .golden_frames()
            .iter()
            .map(serialize_frame)
            .collect();
        let ci_before = dev.rom().chip_info().to_bytes();

        dev.flash_write(0, &[0u8; 2048]).unwrap();
        dev.flash_erase_region(2048, 1024).unwrap();
        dev.pmp_lock(0, 4096).unwrap();

        let after: Vec<_> = dev
            .rom()
            .golden_frames()
            .iter()
            .map(serialize_frame)
            .collect();
        assert_eq!(before, after);
        assert_eq!(ci_before, dev.rom().chip_info().to_bytes());
    }

    #[test]
    fn power_cycle_clears_locks_and_keeps_flash() {
        let mut dev = device_with_image(&[0x7b; 1500]);
        dev.flash_write(5000, &[0xee; 4]).unwrap();
        dev.pmp_lock(0, 1024).unwrap();
        dev.add_cycles(1234);

        let mut dev = dev.power_cycle();
        assert_eq!(dev.cycles(), 0);
        assert!(!dev.is_region_locked(0, 1024));
        assert_eq!(dev.flash_read(5000, 4).unwrap(), vec![0xee; 4]);
        dev.flash_write(0, &[1]).unwrap();
    }

    #[test]
    fn provisioned_flash_matches_serialized_golden_frames() {
        let dev = device_with_image(&vec![0x7cu8; 5734]);
        for (i, frame) in dev.rom().golden_frames().iter().enumerate() {
            let region = dev.flash_read(i * FRAME_LEN, FRAME_LEN).unwrap();
            assert_eq!(region, serialize_frame(frame).to_vec());
        }
    }

    #[test]
    fn rom_image_round_trip() {
        let rom = SecureRom::provision(chip_info(), test_key(), &vec![0x7du8; 5734]).unwrap();
        let bytes = write_rom_image(&rom);
        let parsed = read_rom_image(&bytes).unwrap();
        assert_eq!(parsed.chip_info(), rom.chip_info());
        assert_eq!(parsed.key().expose_bytes(), rom.key().expose_bytes());
        assert_eq!(parsed.frame_count(), rom.frame_count());
        for (a, b) in parsed.golden_frames().iter().zip(rom.golden_frames()) {
            assert_eq!(serialize_frame(a), serialize_frame(b));
        }
    }

    #[test]
    fn rom_image_header_layout() {
        let rom = SecureRom::provision(chip_info(), test_key(), &[1u8]).unwrap();
        let bytes = write_rom_image(&rom);
        assert_eq!(&bytes[0..4], b"SRRM");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), ROM_VERSION);
        assert_eq!(&bytes[6..42], &chip_info().to_bytes());
        let key_len = u16::from_le_bytes([bytes[42], bytes[43]]) as usize;
        assert_eq!(key_len, test_key().len());
        let frames_off = 44 + key_len;
        let count = u32::from_le_bytes(bytes[frames_off..frames_off + 4].try_into().unwrap());
        assert_eq!(count, 1);
        assert_eq!(bytes.len(), frames_off + 4 + FRAME_LEN);
    }

    #[test]
    fn rom_image_rejects_corruption() {
        let rom = SecureRom::provision(chip_info(), test_key(), &[1u8, 2, 3]).unwrap();
        let good = write_rom_image(&rom);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_rom_image(&bad_magic),
            Err(RomImageError::BadMagic)
        ));

        let mut bad_version = good.clone();
        bad_version[4] = 9;
        assert!(matches!(
            read_rom_image(&bad_version),
            Err(RomImageError::UnsupportedVersion(9))
        ));

        assert!(matches!(
            read_rom_image(&good[..good.len() - 1]),
            Err(RomImageError::Truncated)
        ));

        // Flip a payload byte of the stored frame: golden validation fails.
        let mut bad_frame = good.clone();
        let last = bad_frame.len() - 1;
        bad_frame[last] ^= 0x80;
        assert!(matches!(
            read_rom_image(&bad_frame),
            Err(RomImageError::GoldenFrameInvalid { index: 0 })
        ));
    }

    #[test]
    fn access_log_records_operations_in_order() {
        let mut dev = device_with_image(&[0x7e; 100]);
        dev.clear_access_log();
        dev.flash_read(0, 4).unwrap();
        dev.flash_write(10, &[1, 2]).unwrap();
        dev.flash_erase_region(20, 8).unwrap();
        dev.pmp_lock(0, 16).unwrap();
        let _ = dev.rom_golden_frame(0);
        assert_eq!(
            dev.access_log(),
            vec![
                AccessRecord::FlashRead { addr: 0, len: 4 },
                AccessRecord::FlashWrite { addr: 10, len: 2 },
                AccessRecord::FlashErase { addr: 20, len: 8 },
                AccessRecord::PmpLock { addr: 0, len: 16 },
                AccessRecord::RomFrameRead { index: 0 },
            ]
        );
    }

    #[test]
    fn lock_boundary_sweep_with_gap() {
        let mut dev = device_with_image(&[0x13; 1]);
        dev.pmp_lock(0, 1024).unwrap();
        dev.pmp_lock(1024, 1024).unwrap();
        assert!(dev.flash_write(1023, &[0]).is_err());
        assert!(dev.flash_write(1024, &[0]).is_err());
        assert!(dev.flash_write(2048, &[0]).is_ok());
    }

    #[test]
    fn writable_set_never_grows_within_power_cycle() {
        let mut dev = device_with_image(&vec![0x14u8; PAYLOAD_LEN]);
        let probe = |dev: &DeviceState| -> Vec<bool> {
            (0..4096).map(|a| !dev.is_region_locked(a, 1)).collect()
        };
        let mut writable = probe(&dev);
        for (start, len) in [(100, 50), (0, 10), (2000, 1000), (100, 50)] {
            dev.pmp_lock(start, len).unwrap();
            let now = probe(&dev);
            for (i, (was, is)) in writable.iter().zip(now.iter()).enumerate() {
                assert!(!(*is && !*was), "address {i} became writable");
            }
            writable = now;
        }
    }
}
