// Licensed under the Apache-2.0 license

//! Error types for each subsystem.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("secret key must not be empty")]
    EmptyKey,
    #[error("secret key of {len} bytes exceeds the 256-byte maximum")]
    KeyTooLong { len: usize },
    #[error("chip info of {len} bytes is shorter than the 16-byte hashed prefix")]
    MalformedChipInfo { len: usize },
    #[error("expected a 32-byte digest, got {len} bytes")]
    BadDigestLength { len: usize },
    #[error("key is not valid hex")]
    BadKeyHex,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DeviceError {
    #[error("access at {addr}+{len} exceeds flash capacity {capacity}")]
    OutOfBounds {
        addr: usize,
        len: usize,
        capacity: usize,
    },
    #[error("flash region containing {addr} is write-locked")]
    RegionLocked { addr: usize },
    #[error("golden frame index {index} out of range (ROM holds {count})")]
    NoSuchFrame { index: u32, count: u32 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("cannot pack an empty image")]
    EmptyImage,
    #[error("serialized frame must be 1024 bytes, got {len}")]
    WrongLength { len: usize },
    #[error("unsupported frame header version {version}")]
    BadVersion { version: u16 },
    #[error("reserved header bytes must be zero")]
    NonzeroReserved,
    #[error("payload length {len} exceeds the 968-byte payload area")]
    BadPayloadLen { len: u16 },
}

/// Wire-level decode failures for protocol messages.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("declared body length {declared} does not fit message type or input ({actual} bytes)")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("declared body length {declared} but only {available} bytes present")]
    TruncatedBody { declared: usize, available: usize },
    #[error("invalid value for {0}")]
    InvalidField(&'static str),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("operation {op} is invalid in session state {state}")]
    InvalidState { op: &'static str, state: &'static str },
    #[error("session message budget exhausted")]
    BudgetExhausted,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttestError {
    #[error("attestation region length must be non-zero")]
    EmptyRange,
    #[error(transparent)]
    Device(#[from] DeviceError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BootError {
    #[error(transparent)]
    Device(#[from] DeviceError),
}

#[derive(Debug, Error)]
pub enum RomImageError {
    #[error("bad ROM container magic")]
    BadMagic,
    #[error("unsupported ROM container version {0}")]
    UnsupportedVersion(u16),
    #[error("ROM container truncated")]
    Truncated,
    #[error("golden frame {index} does not verify under the ROM key")]
    GoldenFrameInvalid { index: u32 },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing required config key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value `{value}` for config key `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("unknown attack kind `{0}`")]
    UnknownAttack(String),
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
