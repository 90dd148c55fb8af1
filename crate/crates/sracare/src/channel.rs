// Licensed under the Apache-2.0 license

//! In-process transport between verifier and prover.
//!
//! The two endpoints exchange encoded messages over an ordered, lossless
//! queue driven by a single task. Every wire message passes through an
//! interceptor hook, which is where the attack harness tampers, replays,
//! or floods; the hook may rewrite bytes or multiply messages but cannot
//! reorder them. A message that fails to decode closes the receiving
//! endpoint; a message the receiving state machine rejects is ignored
//! (the per-session budget eventually closes the endpoint under
//! sustained junk).

use rand::RngCore;

use crate::device::DeviceState;
use crate::protocol::{
    decode_message, encode_message, Message, ProverSession, ProverStep, ReportStatus,
    VerifierSession, VerifierStep,
};
use crate::crypto::Hash256;
use crate::timing::CycleCosts;

/// Hard cap on deliveries per session, a backstop against interceptors
/// that keep multiplying traffic.
pub const MAX_DELIVERIES: u32 = 512;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    ToProver,
    ToVerifier,
}

/// Byte-level hook applied to every message in transit. Returns the list
/// of messages actually delivered in place of the original.
pub trait Interceptor {
    fn intercept(&mut self, dir: Direction, bytes: Vec<u8>) -> Vec<Vec<u8>>;
}

/// The honest channel: every message passes unmodified.
pub struct Passthrough;

impl Interceptor for Passthrough {
    fn intercept(&mut self, _dir: Direction, bytes: Vec<u8>) -> Vec<Vec<u8>> {
        vec![bytes]
    }
}

/// What happened on the wire and how the session ended.
#[derive(Clone, Debug)]
pub struct SessionRecord {
    /// Every message as delivered (post-interception), in order.
    pub transcript: Vec<(Direction, Vec<u8>)>,
    /// True once the prover accepted and executed a Command.
    pub command_accepted: bool,
    /// The report the verifier received, if any.
    pub report: Option<(ReportStatus, Hash256)>,
    /// Prover's auth verdict as the verifier recorded it.
    pub auth_result: Option<bool>,
    pub verifier_step: VerifierStep,
    pub prover_step: ProverStep,
    pub deliveries: u32,
}

/// Drives one complete session: challenge through report (or teardown).
///
/// The verifier and prover alternate strictly; in-flight messages are
/// delivered in order. The run ends when no replies remain, both ends
/// closed, or the delivery cap is reached.
pub fn run_session(
    verifier: &mut VerifierSession,
    prover: &mut ProverSession,
    dev: &mut DeviceState,
    costs: &CycleCosts,
    resilience_enabled: bool,
    rng: &mut impl RngCore,
    interceptor: &mut dyn Interceptor,
) -> SessionRecord {
    let mut transcript = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let mut command_accepted = false;
    let mut deliveries = 0u32;

    if let Ok(challenge) = verifier.start(rng) {
        queue.push_back((Direction::ToProver, encode_message(&challenge)));
    }

    while let Some((dir, bytes)) = queue.pop_front() {
        if deliveries >= MAX_DELIVERIES {
            break;
        }
        for delivered in interceptor.intercept(dir, bytes) {
            if deliveries >= MAX_DELIVERIES {
                break;
            }
            deliveries += 1;
            transcript.push((dir, delivered.clone()));
            let msg = match decode_message(&delivered) {
                Ok(msg) => msg,
                Err(_) => {
                    // Malformed wire data is unrecoverable: close the
                    // receiving endpoint.
                    match dir {
                        Direction::ToProver => prover.handle_close(),
                        Direction::ToVerifier => verifier.handle_close(),
                    }
                    continue;
                }
            };
            let is_command = matches!(msg, Message::Command { .. });
            let reply = match dir {
                Direction::ToProver => {
                    match prover.handle(dev, &msg, costs, resilience_enabled) {
                        Ok(reply) => {
                            if is_command {
                                command_accepted = true;
                            }
                            reply
                        }
                        Err(_) => None,
                    }
                }
                Direction::ToVerifier => verifier.handle(&msg).unwrap_or(None),
            };
            if let Some(reply) = reply {
                let reply_dir = match dir {
                    Direction::ToProver => Direction::ToVerifier,
                    Direction::ToVerifier => Direction::ToProver,
                };
                queue.push_back((reply_dir, encode_message(&reply)));
            }
        }
    }

    // A session that drained the channel without delivering a report has
    // stalled (e.g. a tampered message was ignored as out-of-order).
    // Model the transport timeout: both ends tear the connection down.
    if verifier.report().is_none() {
        verifier.handle_close();
        prover.handle_close();
    }

    SessionRecord {
        transcript,
        command_accepted,
        report: verifier.report().copied(),
        auth_result: verifier.auth_result(),
        verifier_step: verifier.step(),
        prover_step: prover.step(),
        deliveries,
    }
}

/// Writes one encoded message to a byte stream. The wire form is already
/// self-framing (`[type][len u16 LE][body]`), so the encoding is written
/// as-is.
pub fn write_framed(stream: &mut impl std::io::Write, msg: &Message) -> std::io::Result<()> {
    stream.write_all(&encode_message(msg))?;
    stream.flush()
}

/// Reads one length-framed message off a byte stream. Returns `None` on
/// clean EOF at a message boundary.
pub fn read_framed(stream: &mut impl std::io::Read) -> std::io::Result<Option<Vec<u8>>> {
    let mut header = [0u8; 3];
    let mut filled = 0;
    while filled < header.len() {
        let n = stream.read(&mut header[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "truncated message header",
            ));
        }
        filled += n;
    }
    let body_len = u16::from_le_bytes([header[1], header[2]]) as usize;
    let mut message = header.to_vec();
    message.resize(3 + body_len, 0);
    std::io::Read::read_exact(stream, &mut message[3..])?;
    Ok(Some(message))
}
