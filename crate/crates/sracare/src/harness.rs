// Licensed under the Apache-2.0 license

//! Executable adversary and end-to-end scenario runner.
//!
//! Attacks model a software-level adversary with full flash access (but
//! no way past hardware write locks or into ROM) and full control of the
//! channel between verifier and prover. Each scenario builds a fresh
//! device and session pair, applies one attack, drives the complete
//! protocol flow, and grades the outcome: was the attack detected, did
//! the device recover, did the session close, and is the flash content
//! trustworthy afterwards.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::channel::{run_session, Direction, Interceptor, Passthrough, SessionRecord};
use crate::crypto::{hmac_sha256, sha256, SecretKey};
use crate::device::{ChipInfo, DeviceState, SecureRom, ERASED_BYTE, FLASH_CAPACITY};
use crate::error::{ConfigError, DeviceError};
use crate::frame::{serialize_frame, FRAME_LEN};
use crate::protocol::{
    boot_report_digest, AttestParams, ProverSession, ProverStep, ReportStatus, VerifierIntent,
    VerifierSession, VerifierStep,
};
use crate::timing::CycleCosts;

/// Attack to inject, with its target.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AttackKind {
    /// Flip one bit of a stored frame. `bit` indexes the full 1024-byte
    /// serialized frame region.
    FlashBitFlip { frame: u32, bit: u32 },
    /// Overwrite a flash range with seeded random bytes.
    FlashOverwrite { addr: u32, len: u32 },
    /// Swap the flash regions of two frames.
    FrameReorder { frame_a: u32, frame_b: u32 },
    /// Flip one bit of the n-th wire message (seeded when `bit` is None).
    ChannelTamper { message_index: u32, bit: Option<u32> },
    /// Replace the n-th wire message with the same message recorded from
    /// a prior session.
    ChannelReplay { message_index: u32 },
    /// Deliver the n-th wire message `count` times.
    ChannelFlood { count: u32 },
    /// Verifier uses a key the device does not share.
    WrongKey,
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::FlashBitFlip { .. } => "flash_bit_flip",
            AttackKind::FlashOverwrite { .. } => "flash_overwrite",
            AttackKind::FrameReorder { .. } => "frame_reorder",
            AttackKind::ChannelTamper { .. } => "channel_tamper",
            AttackKind::ChannelReplay { .. } => "channel_replay",
            AttackKind::ChannelFlood { .. } => "channel_flood",
            AttackKind::WrongKey => "wrong_key",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub seed: u64,
}

/// Graded outcome of one scenario.
#[derive(Clone, Debug)]
pub struct ScenarioReport {
    pub attack: Option<AttackSpec>,
    /// The run deviated from a clean one in any observable way: a failed
    /// frame verdict, a mismatched or missing report, or a closed session.
    pub detected: bool,
    /// The resilience engine restored every corrupted frame.
    pub recovered: bool,
    pub session_closed: bool,
    /// Flash content over the image span is bit-identical to the golden
    /// ROM copy at the end of the run.
    pub final_integrity: bool,
}

impl ScenarioReport {
    pub fn csv_header() -> &'static str {
        "attack,detected,recovered,session_closed,final_integrity"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.attack.map_or("none", |a| a.kind.name()),
            self.detected,
            self.recovered,
            self.session_closed,
            self.final_integrity
        )
    }
}

/// Full scenario description.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub image: Vec<u8>,
    pub key: SecretKey,
    /// Key the verifier uses; defaults to the device key.
    pub verifier_key: Option<SecretKey>,
    pub costs: CycleCosts,
    pub seed: u64,
    /// Command flag: true resets into secure boot, false attests.
    pub flag_f: bool,
    /// Attestation region, required when `flag_f` is false.
    pub attest: Option<AttestParams>,
    pub resilience: bool,
    pub attack: Option<AttackSpec>,
}

impl ScenarioConfig {
    /// A clean secure-boot scenario over the given image.
    pub fn baseline(image: Vec<u8>, key: SecretKey, seed: u64) -> Self {
        Self {
            image,
            key,
            verifier_key: None,
            costs: CycleCosts::reference(),
            seed,
            flag_f: true,
            attest: None,
            resilience: true,
            attack: None,
        }
    }
}

/// Applies a flash-level attack. The adversary operates through the
/// normal flash interface, so hardware write locks stop it.
pub fn corrupt_flash(
    dev: &mut DeviceState,
    kind: &AttackKind,
    seed: u64,
) -> Result<(), DeviceError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    match *kind {
        AttackKind::FlashBitFlip { frame, bit } => {
            let addr = frame as usize * FRAME_LEN + bit as usize / 8;
            let byte = dev.flash_read(addr, 1)?[0];
            dev.flash_write(addr, &[byte ^ (1 << (bit % 8))])
        }
        AttackKind::FlashOverwrite { addr, len } => {
            let current = dev.flash_read(addr as usize, len as usize)?;
            let mut garbage = vec![0u8; len as usize];
            rng.fill_bytes(&mut garbage);
            if garbage == current {
                garbage[0] ^= 0x01;
            }
            dev.flash_write(addr as usize, &garbage)
        }
        AttackKind::FrameReorder { frame_a, frame_b } => {
            let a = dev.flash_read(frame_a as usize * FRAME_LEN, FRAME_LEN)?;
            let b = dev.flash_read(frame_b as usize * FRAME_LEN, FRAME_LEN)?;
            dev.flash_write(frame_a as usize * FRAME_LEN, &b)?;
            dev.flash_write(frame_b as usize * FRAME_LEN, &a)
        }
        AttackKind::ChannelTamper { .. }
        | AttackKind::ChannelReplay { .. }
        | AttackKind::ChannelFlood { .. }
        | AttackKind::WrongKey => Ok(()),
    }
}

/// Flips one bit of the targeted wire message.
pub struct TamperInterceptor {
    target: u32,
    bit: Option<u32>,
    seed: u64,
    seen: u32,
}

impl TamperInterceptor {
    pub fn new(target: u32, bit: Option<u32>, seed: u64) -> Self {
        Self {
            target,
            bit,
            seed,
            seen: 0,
        }
    }
}

impl Interceptor for TamperInterceptor {
    fn intercept(&mut self, _dir: Direction, mut bytes: Vec<u8>) -> Vec<Vec<u8>> {
        let index = self.seen;
        self.seen += 1;
        if index == self.target && !bytes.is_empty() {
            let total_bits = bytes.len() as u32 * 8;
            let bit = match self.bit {
                Some(b) => b % total_bits,
                None => ChaCha20Rng::seed_from_u64(self.seed).gen_range(0..total_bits),
            };
            bytes[bit as usize / 8] ^= 1 << (bit % 8);
        }
        vec![bytes]
    }
}

/// Replaces the targeted wire message with prerecorded bytes.
pub struct ReplayInterceptor {
    target: u32,
    recording: Vec<u8>,
    seen: u32,
}

impl ReplayInterceptor {
    pub fn new(target: u32, recording: Vec<u8>) -> Self {
        Self {
            target,
            recording,
            seen: 0,
        }
    }
}

impl Interceptor for ReplayInterceptor {
    fn intercept(&mut self, _dir: Direction, bytes: Vec<u8>) -> Vec<Vec<u8>> {
        let index = self.seen;
        self.seen += 1;
        if index == self.target {
            vec![self.recording.clone()]
        } else {
            vec![bytes]
        }
    }
}

/// Delivers the targeted wire message `count` times.
pub struct FloodInterceptor {
    target: u32,
    count: u32,
    seen: u32,
}

impl FloodInterceptor {
    pub fn new(target: u32, count: u32) -> Self {
        Self {
            target,
            count,
            seen: 0,
        }
    }
}

impl Interceptor for FloodInterceptor {
    fn intercept(&mut self, _dir: Direction, bytes: Vec<u8>) -> Vec<Vec<u8>> {
        let index = self.seen;
        self.seen += 1;
        if index == self.target {
            vec![bytes; self.count as usize]
        } else {
            vec![bytes]
        }
    }
}

fn chip_info_for_seed(seed: u64) -> ChipInfo {
    let digest = sha256(&seed.to_le_bytes());
    let mut ci = ChipInfo::default();
    ci.uuid.copy_from_slice(&digest.as_bytes()[..16]);
    ci.vendor_id.copy_from_slice(&digest.as_bytes()[16..20]);
    ci.serial.copy_from_slice(&digest.as_bytes()[20..28]);
    ci
}

fn wrong_key_for(seed: u64, real: &SecretKey) -> SecretKey {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x57524f4e); // differ from attack rng
    let mut bytes = vec![0u8; 32];
    rng.fill_bytes(&mut bytes);
    if bytes == real.expose_bytes() {
        bytes[0] ^= 0xff;
    }
    SecretKey::new(bytes).expect("32-byte key")
}

/// The flash content a verifier expects over the whole device: packed
/// golden frames followed by erased fill.
fn expected_flash(rom: &SecureRom, capacity: usize) -> Vec<u8> {
    let mut flash = Vec::with_capacity(capacity);
    for frame in rom.golden_frames() {
        flash.extend_from_slice(&serialize_frame(frame));
    }
    flash.resize(capacity, ERASED_BYTE);
    flash
}

/// Builds a fresh device and sessions, applies the configured attack,
/// runs the complete flow, and grades the outcome.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, ConfigError> {
    if !config.flag_f && config.attest.is_none() {
        return Err(ConfigError::MissingKey("s_addr/l"));
    }
    let chip_info = chip_info_for_seed(config.seed);
    let rom = SecureRom::provision(chip_info, config.key.clone(), &config.image).map_err(|e| {
        ConfigError::InvalidValue {
            key: "image".into(),
            value: e.to_string(),
        }
    })?;
    let mut dev =
        DeviceState::provisioned(rom.clone(), FLASH_CAPACITY).map_err(|e| {
            ConfigError::InvalidValue {
                key: "image".into(),
                value: e.to_string(),
            }
        })?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    // Flash attacks land before the session starts.
    if let Some(spec) = &config.attack {
        corrupt_flash(&mut dev, &spec.kind, spec.seed).map_err(|e| ConfigError::InvalidValue {
            key: "attack".into(),
            value: e.to_string(),
        })?;
    }

    let verifier_key = match config.attack {
        Some(AttackSpec {
            kind: AttackKind::WrongKey,
            seed,
        }) => wrong_key_for(seed, &config.key),
        _ => config
            .verifier_key
            .clone()
            .unwrap_or_else(|| config.key.clone()),
    };
    let intent = if config.flag_f {
        VerifierIntent::Reset
    } else {
        VerifierIntent::Attest(config.attest.expect("checked above"))
    };

    // A replay needs an honest session to record from first.
    let mut interceptor: Box<dyn Interceptor> = match config.attack {
        Some(AttackSpec {
            kind: AttackKind::ChannelTamper { message_index, bit },
            seed,
        }) => Box::new(TamperInterceptor::new(message_index, bit, seed)),
        Some(AttackSpec {
            kind: AttackKind::ChannelReplay { message_index },
            ..
        }) => {
            let mut rec_dev = DeviceState::provisioned(rom.clone(), FLASH_CAPACITY)
                .expect("recording device");
            let mut rec_verifier = VerifierSession::new(verifier_key.clone(), intent);
            let mut rec_prover = ProverSession::new();
            let record = run_session(
                &mut rec_verifier,
                &mut rec_prover,
                &mut rec_dev,
                &config.costs,
                config.resilience,
                &mut rng,
                &mut Passthrough,
            );
            let recording = record
                .transcript
                .get(message_index as usize)
                .map(|(_, bytes)| bytes.clone())
                .unwrap_or_default();
            Box::new(ReplayInterceptor::new(message_index, recording))
        }
        Some(AttackSpec {
            kind: AttackKind::ChannelFlood { count },
            ..
        }) => Box::new(FloodInterceptor::new(0, count)),
        _ => Box::new(Passthrough),
    };

    let mut verifier = VerifierSession::new(verifier_key, intent);
    let mut prover = ProverSession::new();
    let record = run_session(
        &mut verifier,
        &mut prover,
        &mut dev,
        &config.costs,
        config.resilience,
        &mut rng,
        interceptor.as_mut(),
    );

    Ok(grade(
        config,
        &rom,
        &dev,
        &verifier,
        &prover,
        &record,
    ))
}

fn grade(
    config: &ScenarioConfig,
    rom: &SecureRom,
    dev: &DeviceState,
    verifier: &VerifierSession,
    prover: &ProverSession,
    record: &SessionRecord,
) -> ScenarioReport {
    let session_closed =
        record.verifier_step == VerifierStep::Closed || record.prover_step == ProverStep::Closed;

    let expected = expected_flash(rom, dev.flash_capacity());
    let final_integrity = dev.flash_snapshot() == expected;

    let boot = prover.last_boot();
    let any_failed_verdict = boot.is_some_and(|b| b.verdicts.iter().any(|v| !v.passed));
    let recovered = boot.is_some_and(|b| {
        b.recovered_count > 0 && b.integrity && b.verdicts.iter().all(|v| v.effective())
    });

    // What the verifier expects back on a clean run.
    let report_matches = match (&record.report, verifier.session_key()) {
        (Some((status, r)), Some(k1)) => {
            let expected_digest = if config.flag_f {
                boot_report_digest(k1, true, &sha256(&expected[..rom.frame_count() as usize * FRAME_LEN]))
            } else {
                let params = config.attest.expect("attest params present");
                let start = params.s_addr as usize;
                let end = start.saturating_add(params.l as usize).min(expected.len());
                hmac_sha256(k1, &expected[start..end])
            };
            *status == ReportStatus::Ok && r.ct_eq(&expected_digest)
        }
        _ => false,
    };

    let clean = record.auth_result == Some(true)
        && record.command_accepted
        && report_matches
        && !any_failed_verdict
        && !session_closed;

    ScenarioReport {
        attack: config.attack,
        detected: !clean,
        recovered,
        session_closed,
        final_integrity,
    }
}

/// Parses the flat `key=value` scenario format and loads the referenced
/// image file. Lines starting with `#` and blank lines are ignored.
///
/// Recognized keys: `image`, `key_hex`, `verifier_key_hex`, `seed`,
/// `flag_f`, `s_addr`, `l`, `resilience`, `attack`, `frame`, `bit`,
/// `addr`, `len`, `frame_a`, `frame_b`, `message`, `count`,
/// `attack_seed`.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut fields = std::collections::BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::InvalidValue {
            key: line.to_string(),
            value: "expected key=value".into(),
        })?;
        fields.insert(key.trim().to_string(), value.trim().to_string());
    }

    let known = [
        "image",
        "key_hex",
        "verifier_key_hex",
        "seed",
        "flag_f",
        "s_addr",
        "l",
        "resilience",
        "attack",
        "frame",
        "bit",
        "addr",
        "len",
        "frame_a",
        "frame_b",
        "message",
        "count",
        "attack_seed",
    ];
    for key in fields.keys() {
        if !known.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
    }

    let parse_u64 = |key: &'static str, default: u64| -> Result<u64, ConfigError> {
        match fields.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::InvalidValue {
                key: key.into(),
                value: v.clone(),
            }),
        }
    };
    let parse_u32 = |key: &'static str| -> Result<Option<u32>, ConfigError> {
        match fields.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::InvalidValue {
                    key: key.into(),
                    value: v.clone(),
                }),
        }
    };
    let require_u32 = |key: &'static str| -> Result<u32, ConfigError> {
        parse_u32(key)?.ok_or(ConfigError::MissingKey(key))
    };

    let image_path = fields.get("image").ok_or(ConfigError::MissingKey("image"))?;
    let image = std::fs::read(image_path).map_err(|source| ConfigError::Io {
        path: image_path.clone(),
        source,
    })?;

    let seed = parse_u64("seed", 0)?;
    let key = match fields.get("key_hex") {
        Some(hex) => SecretKey::from_hex(hex).map_err(|e| ConfigError::InvalidValue {
            key: "key_hex".into(),
            value: e.to_string(),
        })?,
        None => {
            // Deterministic per-seed default key.
            let digest = sha256(&(seed ^ 0x6b65795f).to_le_bytes());
            SecretKey::new(digest.as_bytes().to_vec()).expect("32-byte key")
        }
    };
    let verifier_key = fields
        .get("verifier_key_hex")
        .map(|hex| {
            SecretKey::from_hex(hex).map_err(|e| ConfigError::InvalidValue {
                key: "verifier_key_hex".into(),
                value: e.to_string(),
            })
        })
        .transpose()?;

    let flag_f = match fields.get("flag_f").map(String::as_str) {
        None | Some("1") => true,
        Some("0") => false,
        Some(other) => {
            return Err(ConfigError::InvalidValue {
                key: "flag_f".into(),
                value: other.into(),
            })
        }
    };
    let attest = match (parse_u32("s_addr")?, parse_u32("l")?) {
        (Some(s_addr), Some(l)) if l > 0 => Some(AttestParams { s_addr, l }),
        (Some(_), Some(l)) => {
            return Err(ConfigError::InvalidValue {
                key: "l".into(),
                value: l.to_string(),
            })
        }
        (None, None) => None,
        _ => return Err(ConfigError::MissingKey("s_addr/l")),
    };
    let resilience = match fields.get("resilience").map(String::as_str) {
        None | Some("on") => true,
        Some("off") => false,
        Some(other) => {
            return Err(ConfigError::InvalidValue {
                key: "resilience".into(),
                value: other.into(),
            })
        }
    };

    let attack_seed = parse_u64("attack_seed", seed)?;
    let attack = match fields.get("attack").map(String::as_str) {
        None | Some("none") => None,
        Some("flash_bit_flip") => Some(AttackKind::FlashBitFlip {
            frame: require_u32("frame")?,
            bit: require_u32("bit")?,
        }),
        Some("flash_overwrite") => Some(AttackKind::FlashOverwrite {
            addr: require_u32("addr")?,
            len: require_u32("len")?,
        }),
        Some("frame_reorder") => Some(AttackKind::FrameReorder {
            frame_a: require_u32("frame_a")?,
            frame_b: require_u32("frame_b")?,
        }),
        Some("channel_tamper") => Some(AttackKind::ChannelTamper {
            message_index: require_u32("message")?,
            bit: parse_u32("bit")?,
        }),
        Some("channel_replay") => Some(AttackKind::ChannelReplay {
            message_index: require_u32("message")?,
        }),
        Some("channel_flood") => Some(AttackKind::ChannelFlood {
            count: parse_u32("count")?.unwrap_or(64),
        }),
        Some("wrong_key") => Some(AttackKind::WrongKey),
        Some(other) => return Err(ConfigError::UnknownAttack(other.into())),
    };

    Ok(ScenarioConfig {
        image,
        key,
        verifier_key,
        costs: CycleCosts::reference(),
        seed,
        flag_f,
        attest,
        resilience,
        attack: attack.map(|kind| AttackSpec {
            kind,
            seed: attack_seed,
        }),
    })
}
