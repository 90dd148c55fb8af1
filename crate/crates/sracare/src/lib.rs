// Licensed under the Apache-2.0 license

//! Deterministic simulator for an authenticated secure-boot device with
//! onboard recovery and remote attestation.
//!
//! The crate models both ends of the system: a trusted verifier and an
//! untrusted prover device. The two sides mutually authenticate over a
//! lightweight HMAC challenge-response protocol, after which the verifier
//! dispatches either a secure boot (with automatic recovery of corrupted
//! flash frames from a golden ROM image) or a remote attestation of an
//! arbitrary flash region. A cycle-cost model reproduces the bootstrap
//! timing of the reference hardware, and an attack harness drives
//! end-to-end corruption, tamper, replay, and flooding scenarios.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --example secure_boot
//! cargo run --example mutual_auth
//! cargo run --example corrupt_and_recover
//! cargo run --example remote_attestation
//! cargo run --example timing_table
//! cargo run --example attack_scenarios
//! ```

pub mod attest;
pub mod boot;
pub mod channel;
pub mod cli;
pub mod crypto;
pub mod device;
pub mod error;
pub mod frame;
pub mod harness;
pub mod protocol;
pub mod resilience;
pub mod timing;
