// Licensed under the Apache-2.0 license

//! Mutual-authentication protocol between verifier and prover, plus the
//! wire codec for the six message kinds.
//!
//! Handshake sequence: the verifier sends a fresh nonce `n1`; the prover
//! answers with `HMAC(K, n1)` and its derived nonce `n2`; the verifier
//! checks the MAC, derives the session key `K1 = HMAC(K, n1) ^ n1 ^ n2`,
//! and answers with `HMAC(K1, n2)`; the prover validates that and reports
//! the outcome flag `C`. Only then does the verifier dispatch a command
//! (reset/secure-boot or attestation), and the prover returns a report
//! authenticated under `K1`.
//!
//! Each endpoint is a strict state machine: out-of-order input is
//! rejected without a state change, any verification failure closes the
//! session, and a per-session message budget closes the endpoint under
//! flooding.

use rand::RngCore;

use crate::attest;
use crate::boot::{bootstrap, BootResult};
use crate::crypto::{derive_k1, generate_n2, hmac_sha256, sha256, Hash256, Nonce, SecretKey};
use crate::device::DeviceState;
use crate::error::{CodecError, ProtocolError};
use crate::frame::FRAME_LEN;
use crate::timing::CycleCosts;

/// Messages an endpoint will accept per session before closing.
pub const MESSAGE_BUDGET: u32 = 16;

/// Attestation command payload: the flash region to measure.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct AttestParams {
    pub s_addr: u32,
    /// Region length in bytes; zero-length regions are rejected at the
    /// codec and attestation layers.
    pub l: u32,
}

/// Outcome discriminator carried by a report.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ReportStatus {
    Ok,
    BootFailed,
    AttestFailed,
    BadCommand,
}

impl ReportStatus {
    fn to_byte(self) -> u8 {
        match self {
            ReportStatus::Ok => 0,
            ReportStatus::BootFailed => 1,
            ReportStatus::AttestFailed => 2,
            ReportStatus::BadCommand => 3,
        }
    }

    fn from_byte(b: u8) -> Result<Self, CodecError> {
        match b {
            0 => Ok(ReportStatus::Ok),
            1 => Ok(ReportStatus::BootFailed),
            2 => Ok(ReportStatus::AttestFailed),
            3 => Ok(ReportStatus::BadCommand),
            _ => Err(CodecError::InvalidField("report status")),
        }
    }
}

/// The protocol message set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Message {
    /// Verifier's challenge nonce.
    Challenge { n1: Nonce },
    /// Prover authenticator: `HMAC(K, n1)` followed by the prover nonce.
    ProverAuth { mac: Hash256, n2: Nonce },
    /// Verifier authenticator `HMAC(K1, n2)`.
    VerifierAuth { b: Hash256 },
    /// Prover's verdict on the verifier authenticator.
    AuthResult { c: bool },
    /// Dispatch: `f` set requests reset + secure boot, clear requests
    /// attestation of the region in `d`.
    Command { f: bool, d: Option<AttestParams> },
    /// Final result, authenticated under the session key.
    Report { status: ReportStatus, r: Hash256 },
    /// Session teardown.
    Close,
}

const TYPE_CHALLENGE: u8 = 1;
const TYPE_PROVER_AUTH: u8 = 2;
const TYPE_VERIFIER_AUTH: u8 = 3;
const TYPE_AUTH_RESULT: u8 = 4;
const TYPE_COMMAND: u8 = 5;
const TYPE_REPORT: u8 = 6;
const TYPE_CLOSE: u8 = 7;

/// Encodes a message as `[type u8][body_len u16 LE][body]`.
pub fn encode_message(msg: &Message) -> Vec<u8> {
    let (ty, body): (u8, Vec<u8>) = match msg {
        Message::Challenge { n1 } => (TYPE_CHALLENGE, n1.as_bytes().to_vec()),
        Message::ProverAuth { mac, n2 } => {
            let mut body = Vec::with_capacity(64);
            body.extend_from_slice(mac.as_bytes());
            body.extend_from_slice(n2.as_bytes());
            (TYPE_PROVER_AUTH, body)
        }
        Message::VerifierAuth { b } => (TYPE_VERIFIER_AUTH, b.as_bytes().to_vec()),
        Message::AuthResult { c } => (TYPE_AUTH_RESULT, vec![u8::from(*c)]),
        Message::Command { f, d } => {
            let mut body = vec![u8::from(*f)];
            if let Some(params) = d {
                body.extend_from_slice(&params.s_addr.to_le_bytes());
                body.extend_from_slice(&params.l.to_le_bytes());
            }
            (TYPE_COMMAND, body)
        }
        Message::Report { status, r } => {
            let mut body = vec![status.to_byte()];
            body.extend_from_slice(r.as_bytes());
            (TYPE_REPORT, body)
        }
        Message::Close => (TYPE_CLOSE, Vec::new()),
    };
    let mut out = Vec::with_capacity(3 + body.len());
    out.push(ty);
    out.extend_from_slice(&(body.len() as u16).to_le_bytes());
    out.extend_from_slice(&body);
    out
}

/// Decodes exactly one message occupying the whole input slice.
pub fn decode_message(bytes: &[u8]) -> Result<Message, CodecError> {
    if bytes.len() < 3 {
        return Err(CodecError::TruncatedBody {
            declared: 3,
            available: bytes.len(),
        });
    }
    let ty = bytes[0];
    let declared = u16::from_le_bytes([bytes[1], bytes[2]]) as usize;
    let body = &bytes[3..];
    if declared > body.len() {
        return Err(CodecError::TruncatedBody {
            declared,
            available: body.len(),
        });
    }
    if declared < body.len() {
        return Err(CodecError::LengthMismatch {
            declared,
            actual: body.len(),
        });
    }
    let wrong_len = || CodecError::LengthMismatch {
        declared,
        actual: body.len(),
    };
    match ty {
        TYPE_CHALLENGE => {
            let n1: [u8; 32] = body.try_into().map_err(|_| wrong_len())?;
            Ok(Message::Challenge { n1: Nonce::new(n1) })
        }
        TYPE_PROVER_AUTH => {
            if body.len() != 64 {
                return Err(wrong_len());
            }
            let mac = Hash256::new(body[..32].try_into().unwrap());
            let n2 = Nonce::new(body[32..].try_into().unwrap());
            Ok(Message::ProverAuth { mac, n2 })
        }
        TYPE_VERIFIER_AUTH => {
            let b: [u8; 32] = body.try_into().map_err(|_| wrong_len())?;
            Ok(Message::VerifierAuth { b: Hash256::new(b) })
        }
        TYPE_AUTH_RESULT => {
            if body.len() != 1 {
                return Err(wrong_len());
            }
            Ok(Message::AuthResult { c: body[0] != 0 })
        }
        TYPE_COMMAND => {
            let d = match body.len() {
                1 => None,
                9 => {
                    let s_addr = u32::from_le_bytes(body[1..5].try_into().unwrap());
                    let l = u32::from_le_bytes(body[5..9].try_into().unwrap());
                    if l == 0 {
                        return Err(CodecError::InvalidField("attest length"));
                    }
                    Some(AttestParams { s_addr, l })
                }
                _ => return Err(wrong_len()),
            };
            Ok(Message::Command { f: body[0] != 0, d })
        }
        TYPE_REPORT => {
            if body.len() != 33 {
                return Err(wrong_len());
            }
            let status = ReportStatus::from_byte(body[0])?;
            let r = Hash256::new(body[1..].try_into().unwrap());
            Ok(Message::Report { status, r })
        }
        TYPE_CLOSE => {
            if !body.is_empty() {
                return Err(wrong_len());
            }
            Ok(Message::Close)
        }
        other => Err(CodecError::UnknownType(other)),
    }
}

/// Report digest for the secure-boot path: the boot status byte and the
/// digest of the booted flash region, MACed under the session key so the
/// report is bound to this session.
pub fn boot_report_digest(session_key: &SecretKey, ok: bool, flash_digest: &Hash256) -> Hash256 {
    let mut material = Vec::with_capacity(33);
    material.push(u8::from(!ok));
    material.extend_from_slice(flash_digest.as_bytes());
    hmac_sha256(session_key, &material)
}

/// Authenticated failure report for a status with no digest payload.
pub fn failure_report_digest(session_key: &SecretKey, status: ReportStatus) -> Hash256 {
    hmac_sha256(session_key, &[status.to_byte()])
}

/// What the verifier dispatches once the prover is authenticated.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerifierIntent {
    /// Reset the device and run the secure boot (`F == 1`).
    Reset,
    /// Attest the given flash region (`F == 0`).
    Attest(AttestParams),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerifierStep {
    Idle,
    SentChallenge,
    AwaitResult,
    Authenticated,
    Closed,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ProverStep {
    AwaitChallenge,
    SentProverAuth,
    Authenticated,
    Closed,
}

/// Verifier-side session state.
pub struct VerifierSession {
    step: VerifierStep,
    key: SecretKey,
    intent: VerifierIntent,
    n1: Option<Nonce>,
    n2: Option<Nonce>,
    k1: Option<SecretKey>,
    report: Option<(ReportStatus, Hash256)>,
    auth_result: Option<bool>,
    received: u32,
    budget: u32,
}

impl VerifierSession {
    pub fn new(key: SecretKey, intent: VerifierIntent) -> Self {
        Self::with_budget(key, intent, MESSAGE_BUDGET)
    }

    pub fn with_budget(key: SecretKey, intent: VerifierIntent, budget: u32) -> Self {
        Self {
            step: VerifierStep::Idle,
            key,
            intent,
            n1: None,
            n2: None,
            k1: None,
            report: None,
            auth_result: None,
            received: 0,
            budget,
        }
    }

    pub fn step(&self) -> VerifierStep {
        self.step
    }

    pub fn n1(&self) -> Option<&Nonce> {
        self.n1.as_ref()
    }

    /// The derived session key; populated once the prover authenticator
    /// has been validated.
    pub fn session_key(&self) -> Option<&SecretKey> {
        self.k1.as_ref()
    }

    pub fn report(&self) -> Option<&(ReportStatus, Hash256)> {
        self.report.as_ref()
    }

    pub fn auth_result(&self) -> Option<bool> {
        self.auth_result
    }

    fn admit_message(&mut self, op: &'static str) -> Result<(), ProtocolError> {
        if self.step == VerifierStep::Closed {
            return Err(ProtocolError::InvalidState {
                op,
                state: "Closed",
            });
        }
        self.received += 1;
        if self.received > self.budget {
            self.step = VerifierStep::Closed;
            return Err(ProtocolError::BudgetExhausted);
        }
        Ok(())
    }

    /// Opens the session by drawing a fresh challenge nonce.
    pub fn start(&mut self, rng: &mut impl RngCore) -> Result<Message, ProtocolError> {
        if self.step != VerifierStep::Idle {
            return Err(ProtocolError::InvalidState {
                op: "start",
                state: step_name_v(self.step),
            });
        }
        let n1 = Nonce::from_rng(rng);
        self.n1 = Some(n1);
        self.step = VerifierStep::SentChallenge;
        Ok(Message::Challenge { n1 })
    }

    /// Validates the prover authenticator. On a MAC match, derives the
    /// session key and answers with the verifier authenticator; on a
    /// mismatch the session closes.
    pub fn handle_prover_auth(&mut self, mac: Hash256, n2: Nonce) -> Result<Message, ProtocolError> {
        self.admit_message("handle_prover_auth")?;
        if self.step != VerifierStep::SentChallenge {
            return Err(ProtocolError::InvalidState {
                op: "handle_prover_auth",
                state: step_name_v(self.step),
            });
        }
        let n1 = self.n1.expect("n1 set in SentChallenge");
        let expected = hmac_sha256(&self.key, n1.as_bytes());
        if !mac.ct_eq(&expected) {
            self.step = VerifierStep::Closed;
            return Ok(Message::Close);
        }
        let k1 = derive_k1(&expected, &n1, &n2);
        let b = hmac_sha256(&k1, n2.as_bytes());
        self.n2 = Some(n2);
        self.k1 = Some(k1);
        self.step = VerifierStep::AwaitResult;
        Ok(Message::VerifierAuth { b })
    }

    /// Acts on the prover's auth verdict: dispatches the configured
    /// command on success, closes on failure.
    pub fn handle_auth_result(&mut self, c: bool) -> Result<Message, ProtocolError> {
        self.admit_message("handle_auth_result")?;
        if self.step != VerifierStep::AwaitResult {
            return Err(ProtocolError::InvalidState {
                op: "handle_auth_result",
                state: step_name_v(self.step),
            });
        }
        self.auth_result = Some(c);
        if !c {
            self.step = VerifierStep::Closed;
            return Ok(Message::Close);
        }
        self.step = VerifierStep::Authenticated;
        let msg = match self.intent {
            VerifierIntent::Reset => Message::Command { f: true, d: None },
            VerifierIntent::Attest(params) => Message::Command {
                f: false,
                d: Some(params),
            },
        };
        Ok(msg)
    }

    /// Records the prover's report; terminal, no reply.
    pub fn handle_report(
        &mut self,
        status: ReportStatus,
        r: Hash256,
    ) -> Result<(), ProtocolError> {
        self.admit_message("handle_report")?;
        if self.step != VerifierStep::Authenticated {
            return Err(ProtocolError::InvalidState {
                op: "handle_report",
                state: step_name_v(self.step),
            });
        }
        self.report = Some((status, r));
        Ok(())
    }

    pub fn handle_close(&mut self) {
        self.step = VerifierStep::Closed;
    }

    /// Generic dispatch used by the channel runner.
    pub fn handle(&mut self, msg: &Message) -> Result<Option<Message>, ProtocolError> {
        match msg {
            Message::ProverAuth { mac, n2 } => self.handle_prover_auth(*mac, *n2).map(Some),
            Message::AuthResult { c } => self.handle_auth_result(*c).map(Some),
            Message::Report { status, r } => self.handle_report(*status, *r).map(|()| None),
            Message::Close => {
                self.handle_close();
                Ok(None)
            }
            Message::Challenge { .. } | Message::VerifierAuth { .. } | Message::Command { .. } => {
                self.admit_message("handle")?;
                Err(ProtocolError::InvalidState {
                    op: "handle",
                    state: step_name_v(self.step),
                })
            }
        }
    }
}

/// Prover-side session state. The prover's key and chip info live in the
/// device's secure ROM and are borrowed per call.
pub struct ProverSession {
    step: ProverStep,
    n1: Option<Nonce>,
    n2: Option<Nonce>,
    mac_k_n1: Option<Hash256>,
    k1: Option<SecretKey>,
    last_boot: Option<BootResult>,
    received: u32,
    budget: u32,
}

impl Default for ProverSession {
    fn default() -> Self {
        Self::new()
    }
}

impl ProverSession {
    pub fn new() -> Self {
        Self::with_budget(MESSAGE_BUDGET)
    }

    pub fn with_budget(budget: u32) -> Self {
        Self {
            step: ProverStep::AwaitChallenge,
            n1: None,
            n2: None,
            mac_k_n1: None,
            k1: None,
            last_boot: None,
            received: 0,
            budget,
        }
    }

    pub fn step(&self) -> ProverStep {
        self.step
    }

    pub fn session_key(&self) -> Option<&SecretKey> {
        self.k1.as_ref()
    }

    /// Boot result of the last secure-boot command handled, if any.
    pub fn last_boot(&self) -> Option<&BootResult> {
        self.last_boot.as_ref()
    }

    fn admit_message(&mut self, op: &'static str) -> Result<(), ProtocolError> {
        if self.step == ProverStep::Closed {
            return Err(ProtocolError::InvalidState {
                op,
                state: "Closed",
            });
        }
        self.received += 1;
        if self.received > self.budget {
            self.step = ProverStep::Closed;
            return Err(ProtocolError::BudgetExhausted);
        }
        Ok(())
    }

    /// Answers a challenge with `HMAC(K, n1)` and the derived nonce `n2`.
    pub fn handle_challenge(
        &mut self,
        dev: &DeviceState,
        n1: Nonce,
    ) -> Result<Message, ProtocolError> {
        self.admit_message("handle_challenge")?;
        if self.step != ProverStep::AwaitChallenge {
            return Err(ProtocolError::InvalidState {
                op: "handle_challenge",
                state: step_name_p(self.step),
            });
        }
        let key = dev.rom().key();
        let mac = hmac_sha256(key, n1.as_bytes());
        let n2 = generate_n2(key, &dev.rom_chip_info_bytes(), &n1)?;
        self.n1 = Some(n1);
        self.n2 = Some(n2);
        self.mac_k_n1 = Some(mac);
        self.step = ProverStep::SentProverAuth;
        Ok(Message::ProverAuth { mac, n2 })
    }

    /// Validates the verifier authenticator and reports flag `C`.
    pub fn handle_verifier_auth(&mut self, b: Hash256) -> Result<Message, ProtocolError> {
        self.admit_message("handle_verifier_auth")?;
        if self.step != ProverStep::SentProverAuth {
            return Err(ProtocolError::InvalidState {
                op: "handle_verifier_auth",
                state: step_name_p(self.step),
            });
        }
        let mac = self.mac_k_n1.expect("mac set in SentProverAuth");
        let n1 = self.n1.expect("n1 set in SentProverAuth");
        let n2 = self.n2.expect("n2 set in SentProverAuth");
        let k1 = derive_k1(&mac, &n1, &n2);
        let expected = hmac_sha256(&k1, n2.as_bytes());
        let c = b.ct_eq(&expected);
        if c {
            self.k1 = Some(k1);
            self.step = ProverStep::Authenticated;
        } else {
            self.step = ProverStep::Closed;
        }
        Ok(Message::AuthResult { c })
    }

    /// Executes the dispatched command and returns the authenticated
    /// report. Device-level failures become failure reports, never
    /// protocol crashes.
    pub fn handle_command(
        &mut self,
        dev: &mut DeviceState,
        f: bool,
        d: Option<AttestParams>,
        costs: &CycleCosts,
        resilience_enabled: bool,
    ) -> Result<Message, ProtocolError> {
        self.admit_message("handle_command")?;
        if self.step != ProverStep::Authenticated {
            return Err(ProtocolError::InvalidState {
                op: "handle_command",
                state: step_name_p(self.step),
            });
        }
        let k1 = self.k1.clone().expect("k1 set in Authenticated");
        let msg = if f {
            // Reset + secure boot with recovery.
            let key = dev.rom().key().clone();
            let booted_len = dev.rom_frame_count() as usize * FRAME_LEN;
            match bootstrap(dev, &key, costs, resilience_enabled)
                .and_then(|result| Ok((dev.flash_read(0, booted_len)?, result)))
            {
                Ok((flash, result)) => {
                    let status = if result.integrity {
                        ReportStatus::Ok
                    } else {
                        ReportStatus::BootFailed
                    };
                    let r = boot_report_digest(&k1, result.integrity, &sha256(&flash));
                    self.last_boot = Some(result);
                    Message::Report { status, r }
                }
                Err(_) => Message::Report {
                    status: ReportStatus::BootFailed,
                    r: failure_report_digest(&k1, ReportStatus::BootFailed),
                },
            }
        } else {
            match d {
                Some(params) => match attest::attest(dev, &k1, &params) {
                    Ok(r) => Message::Report {
                        status: ReportStatus::Ok,
                        r,
                    },
                    Err(_) => Message::Report {
                        status: ReportStatus::AttestFailed,
                        r: failure_report_digest(&k1, ReportStatus::AttestFailed),
                    },
                },
                None => Message::Report {
                    status: ReportStatus::BadCommand,
                    r: failure_report_digest(&k1, ReportStatus::BadCommand),
                },
            }
        };
        Ok(msg)
    }

    pub fn handle_close(&mut self) {
        self.step = ProverStep::Closed;
    }

    /// Generic dispatch used by the channel runner.
    pub fn handle(
        &mut self,
        dev: &mut DeviceState,
        msg: &Message,
        costs: &CycleCosts,
        resilience_enabled: bool,
    ) -> Result<Option<Message>, ProtocolError> {
        match msg {
            Message::Challenge { n1 } => self.handle_challenge(dev, *n1).map(Some),
            Message::VerifierAuth { b } => self.handle_verifier_auth(*b).map(Some),
            Message::Command { f, d } => self
                .handle_command(dev, *f, *d, costs, resilience_enabled)
                .map(Some),
            Message::Close => {
                self.handle_close();
                Ok(None)
            }
            Message::ProverAuth { .. } | Message::AuthResult { .. } | Message::Report { .. } => {
                self.admit_message("handle")?;
                Err(ProtocolError::InvalidState {
                    op: "handle",
                    state: step_name_p(self.step),
                })
            }
        }
    }
}

fn step_name_v(step: VerifierStep) -> &'static str {
    match step {
        VerifierStep::Idle => "Idle",
        VerifierStep::SentChallenge => "SentChallenge",
        VerifierStep::AwaitResult => "AwaitResult",
        VerifierStep::Authenticated => "Authenticated",
        VerifierStep::Closed => "Closed",
    }
}

fn step_name_p(step: ProverStep) -> &'static str {
    match step {
        ProverStep::AwaitChallenge => "AwaitChallenge",
        ProverStep::SentProverAuth => "SentProverAuth",
        ProverStep::Authenticated => "Authenticated",
        ProverStep::Closed => "Closed",
    }
}
