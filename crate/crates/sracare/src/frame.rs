// Licensed under the Apache-2.0 license

//! Frame data structure and codec.
//!
//! A flash image is split into 1024-byte frames: a 56-byte header followed
//! by a 968-byte payload. The header carries a keyed digest of the entire
//! frame (computed with the digest field zeroed), the frame number, and
//! the byte offset of the payload within the original image. Each frame is
//! therefore independently verifiable, and 968 bytes of recovery data cover
//! every 1 KB of flash.

use crate::crypto::{hmac_sha256, Hash256, SecretKey, DIGEST_LEN};
use crate::error::FrameError;

/// Serialized frame size in bytes.
pub const FRAME_LEN: usize = 1024;

/// Serialized header size in bytes.
pub const HEADER_LEN: usize = 56;

/// Payload area size in bytes.
pub const PAYLOAD_LEN: usize = FRAME_LEN - HEADER_LEN;

/// Current header layout version.
pub const HEADER_VERSION: u16 = 1;

const RESERVED_LEN: usize = 12;

/// Frame header: digest, ordering, and reflash location for one payload.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FrameHeader {
    /// Keyed digest of the whole frame, computed with this field zeroed.
    pub digest: Hash256,
    /// Position of this frame in the image, counted from zero.
    pub frame_number: u32,
    /// Byte offset of the payload within the original image
    /// (`frame_number * 968`).
    pub flash_offset: u32,
    /// Number of valid payload bytes; the rest of the payload area is
    /// zero padding that still participates in the digest.
    pub payload_len: u16,
    pub header_version: u16,
    pub reserved: [u8; RESERVED_LEN],
}

/// One integrity-protected 1024-byte unit of the flash image.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    pub header: FrameHeader,
    pub payload: [u8; PAYLOAD_LEN],
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frame")
            .field("header", &self.header)
            .field("payload_len", &self.header.payload_len)
            .finish()
    }
}

impl Frame {
    /// Valid payload bytes, excluding padding.
    pub fn data(&self) -> &[u8] {
        &self.payload[..self.header.payload_len as usize]
    }
}

/// Splits an image into digest-protected frames.
///
/// Frame `i` carries image bytes `[i*968, i*968 + payload_len)`; the last
/// frame is zero-padded to the full payload width.
pub fn pack_image(image: &[u8], key: &SecretKey) -> Result<Vec<Frame>, FrameError> {
    if image.is_empty() {
        return Err(FrameError::EmptyImage);
    }
    let mut frames = Vec::with_capacity(image.len().div_ceil(PAYLOAD_LEN));
    for (i, chunk) in image.chunks(PAYLOAD_LEN).enumerate() {
        let mut payload = [0u8; PAYLOAD_LEN];
        payload[..chunk.len()].copy_from_slice(chunk);
        let header = FrameHeader {
            digest: Hash256::new([0u8; DIGEST_LEN]),
            frame_number: i as u32,
            flash_offset: (i * PAYLOAD_LEN) as u32,
            payload_len: chunk.len() as u16,
            header_version: HEADER_VERSION,
            reserved: [0u8; RESERVED_LEN],
        };
        let mut frame = Frame { header, payload };
        frame.header.digest = compute_frame_digest(&frame, key);
        frames.push(frame);
    }
    Ok(frames)
}

/// Reassembles the original image from packed frames.
pub fn unpack_image(frames: &[Frame]) -> Vec<u8> {
    let mut image = Vec::with_capacity(frames.len() * PAYLOAD_LEN);
    for frame in frames {
        image.extend_from_slice(frame.data());
    }
    image
}

/// Keyed digest over the serialized frame with the digest field zeroed.
pub fn compute_frame_digest(frame: &Frame, key: &SecretKey) -> Hash256 {
    let mut bytes = serialize_frame(frame);
    bytes[..DIGEST_LEN].fill(0);
    hmac_sha256(key, &bytes)
}

/// Serializes a frame to its exact 1024-byte wire form.
///
/// Field order: digest, frame_number, flash_offset, payload_len,
/// header_version, reserved, payload. Integers are little-endian.
pub fn serialize_frame(frame: &Frame) -> [u8; FRAME_LEN] {
    let mut out = [0u8; FRAME_LEN];
    let h = &frame.header;
    out[0..32].copy_from_slice(h.digest.as_bytes());
    out[32..36].copy_from_slice(&h.frame_number.to_le_bytes());
    out[36..40].copy_from_slice(&h.flash_offset.to_le_bytes());
    out[40..42].copy_from_slice(&h.payload_len.to_le_bytes());
    out[42..44].copy_from_slice(&h.header_version.to_le_bytes());
    out[44..56].copy_from_slice(&h.reserved);
    out[HEADER_LEN..].copy_from_slice(&frame.payload);
    out
}

/// Parses a 1024-byte frame, rejecting structural corruption.
pub fn deserialize_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    if bytes.len() != FRAME_LEN {
        return Err(FrameError::WrongLength { len: bytes.len() });
    }
    let digest = Hash256::new(bytes[0..32].try_into().unwrap());
    let frame_number = u32::from_le_bytes(bytes[32..36].try_into().unwrap());
    let flash_offset = u32::from_le_bytes(bytes[36..40].try_into().unwrap());
    let payload_len = u16::from_le_bytes(bytes[40..42].try_into().unwrap());
    let header_version = u16::from_le_bytes(bytes[42..44].try_into().unwrap());
    if header_version != HEADER_VERSION {
        return Err(FrameError::BadVersion {
            version: header_version,
        });
    }
    if bytes[44..56].iter().any(|&b| b != 0) {
        return Err(FrameError::NonzeroReserved);
    }
    if payload_len as usize > PAYLOAD_LEN {
        return Err(FrameError::BadPayloadLen { len: payload_len });
    }
    let mut payload = [0u8; PAYLOAD_LEN];
    payload.copy_from_slice(&bytes[HEADER_LEN..]);
    Ok(Frame {
        header: FrameHeader {
            digest,
            frame_number,
            flash_offset,
            payload_len,
            header_version,
            reserved: [0u8; RESERVED_LEN],
        },
        payload,
    })
}

/// The per-frame verification verdict: true iff the frame number matches
/// the expected position, the reflash offset is consistent, and the
/// recomputed keyed digest equals the stored one (compared in constant
/// time). Checking the number against an external counter defeats frame
/// reordering.
pub fn verify_frame(frame: &Frame, key: &SecretKey, expected_number: u32) -> bool {
    if frame.header.frame_number != expected_number {
        return false;
    }
    if frame.header.flash_offset != expected_number.wrapping_mul(PAYLOAD_LEN as u32) {
        return false;
    }
    let recomputed = compute_frame_digest(frame, key);
    recomputed.ct_eq(&frame.header.digest)
}
