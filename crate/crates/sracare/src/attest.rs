// Licensed under the Apache-2.0 license

//! Remote attestation: an authenticated digest over a verifier-chosen
//! flash region, keyed under the per-session key so a recorded report
//! cannot be replayed into another session.

use crate::crypto::{hmac_sha256, Hash256, SecretKey};
use crate::device::DeviceState;
use crate::error::AttestError;
use crate::protocol::AttestParams;

/// Measures `[s_addr, s_addr + l)` of flash under the session key.
/// Read-only on the device.
pub fn attest(
    dev: &DeviceState,
    session_key: &SecretKey,
    params: &AttestParams,
) -> Result<Hash256, AttestError> {
    if params.l == 0 {
        return Err(AttestError::EmptyRange);
    }
    let region = dev.flash_read(params.s_addr as usize, params.l as usize)?;
    Ok(hmac_sha256(session_key, &region))
}
