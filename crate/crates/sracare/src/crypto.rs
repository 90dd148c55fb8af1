// Licensed under the Apache-2.0 license

//! Cryptographic primitives: SHA-256, HMAC-SHA256, and the key/nonce
//! derivations used by the authentication protocol and the frame codec.
//!
//! HMAC is built here from the hash primitive (RFC 2104, 64-byte block)
//! rather than pulled in as a dependency, because the block-key expansion
//! `K'` is part of this crate's public surface: the prover-side nonce
//! derivation and the session-key derivation both reuse it.

use sha2::{Digest as _, Sha256};

use crate::error::CryptoError;

/// Length of a SHA-256 digest in bytes.
pub const DIGEST_LEN: usize = 32;

/// HMAC block size in bytes (RFC 2104 for SHA-256).
pub const HMAC_BLOCK_LEN: usize = 64;

/// Length of a protocol nonce in bytes. Fixed at the digest width so the
/// XOR algebra between nonces, MACs, and hashed chip info is
/// dimension-consistent.
pub const NONCE_LEN: usize = 32;

/// Maximum accepted secret-key length in bytes.
pub const MAX_KEY_LEN: usize = 256;

const OPAD: u8 = 0x5c;
const IPAD: u8 = 0x36;

/// A 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hash256([u8; DIGEST_LEN]);

impl Hash256 {
    pub const fn new(bytes: [u8; DIGEST_LEN]) -> Self {
        Self(bytes)
    }

    pub const fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Constant-time equality: every byte pair is examined regardless of
    /// where the first mismatch occurs.
    pub fn ct_eq(&self, other: &Hash256) -> bool {
        let mut diff = 0u8;
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            diff |= a ^ b;
        }
        diff == 0
    }

    /// Byte-wise XOR, used by the nonce and session-key derivations.
    pub fn xor(&self, other: &Hash256) -> Hash256 {
        let mut out = [0u8; DIGEST_LEN];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = self.0[i] ^ other.0[i];
        }
        Hash256(out)
    }
}

impl std::fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Hash256({})", self.to_hex())
    }
}

impl From<[u8; DIGEST_LEN]> for Hash256 {
    fn from(bytes: [u8; DIGEST_LEN]) -> Self {
        Self(bytes)
    }
}

impl TryFrom<&[u8]> for Hash256 {
    type Error = CryptoError;

    fn try_from(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| CryptoError::BadDigestLength { len: bytes.len() })?;
        Ok(Self(arr))
    }
}

/// A symmetric secret key, 1..=256 bytes.
///
/// The byte content is deliberately unreachable through `Debug`, and the
/// type implements no serialization: key material must never cross a wire
/// codec or a log sink. Provisioning formats that legitimately carry the
/// key (the ROM image container) go through [`SecretKey::expose_bytes`].
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(Vec<u8>);

impl SecretKey {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, CryptoError> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(CryptoError::EmptyKey);
        }
        if bytes.len() > MAX_KEY_LEN {
            return Err(CryptoError::KeyTooLong { len: bytes.len() });
        }
        Ok(Self(bytes))
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::BadKeyHex)?;
        Self::new(bytes)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty keys
    }

    /// Grants access to the raw key bytes. Named to make every use site
    /// where key material leaves the type greppable.
    pub fn expose_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SecretKey({} bytes)", self.0.len())
    }
}

/// A 32-byte single-use freshness value.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Nonce([u8; NONCE_LEN]);

impl Nonce {
    pub const fn new(bytes: [u8; NONCE_LEN]) -> Self {
        Self(bytes)
    }

    pub const fn as_bytes(&self) -> &[u8; NONCE_LEN] {
        &self.0
    }

    pub fn from_rng(rng: &mut impl rand::RngCore) -> Self {
        let mut bytes = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut bytes);
        Self(bytes)
    }
}

impl std::fmt::Debug for Nonce {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Nonce({})", hex::encode(self.0))
    }
}

impl From<[u8; NONCE_LEN]> for Nonce {
    fn from(bytes: [u8; NONCE_LEN]) -> Self {
        Self(bytes)
    }
}

/// SHA-256 of `data`. Empty input is allowed.
pub fn sha256(data: &[u8]) -> Hash256 {
    let digest = Sha256::digest(data);
    Hash256(digest.into())
}

/// Expands a secret key to the 64-byte HMAC block key `K'`.
///
/// Keys longer than the block are first hashed; the result (or the key
/// itself) is right-padded with zeros to the block length.
pub fn derive_k_prime(key: &SecretKey) -> [u8; HMAC_BLOCK_LEN] {
    let mut block = [0u8; HMAC_BLOCK_LEN];
    let key_bytes = key.expose_bytes();
    if key_bytes.len() > HMAC_BLOCK_LEN {
        let hashed = sha256(key_bytes);
        block[..DIGEST_LEN].copy_from_slice(hashed.as_bytes());
    } else {
        block[..key_bytes.len()].copy_from_slice(key_bytes);
    }
    block
}

/// HMAC-SHA256: `H((K' ^ opad) || H((K' ^ ipad) || message))`.
pub fn hmac_sha256(key: &SecretKey, message: &[u8]) -> Hash256 {
    let k_prime = derive_k_prime(key);

    let mut inner = Sha256::new();
    let mut ipad_block = [0u8; HMAC_BLOCK_LEN];
    for (i, byte) in ipad_block.iter_mut().enumerate() {
        *byte = k_prime[i] ^ IPAD;
    }
    inner.update(ipad_block);
    inner.update(message);
    let inner_digest = inner.finalize();

    let mut outer = Sha256::new();
    let mut opad_block = [0u8; HMAC_BLOCK_LEN];
    for (i, byte) in opad_block.iter_mut().enumerate() {
        *byte = k_prime[i] ^ OPAD;
    }
    outer.update(opad_block);
    outer.update(inner_digest);
    Hash256(outer.finalize().into())
}

/// Derives the prover-side nonce `n2 = HMAC(K, T)` with
/// `T = sha256(chip_info[0..16]) XOR n1`.
///
/// Hashing the device-unique chip-info prefix and folding in the
/// verifier's nonce yields a fresh value per session without a hardware
/// RNG on the prover.
pub fn generate_n2(
    key: &SecretKey,
    chip_info_bytes: &[u8],
    n1: &Nonce,
) -> Result<Nonce, CryptoError> {
    if chip_info_bytes.len() < 16 {
        return Err(CryptoError::MalformedChipInfo {
            len: chip_info_bytes.len(),
        });
    }
    let ci_hash = sha256(&chip_info_bytes[..16]);
    let t = ci_hash.xor(&Hash256(*n1.as_bytes()));
    let mac = hmac_sha256(key, t.as_bytes());
    Ok(Nonce(*mac.as_bytes()))
}

/// Derives the session key `K1 = HMAC(K, n1) XOR n1 XOR n2`.
pub fn derive_k1(mac_k_n1: &Hash256, n1: &Nonce, n2: &Nonce) -> SecretKey {
    let mut out = [0u8; DIGEST_LEN];
    for (i, byte) in out.iter_mut().enumerate() {
        *byte = mac_k_n1.as_bytes()[i] ^ n1.as_bytes()[i] ^ n2.as_bytes()[i];
    }
    SecretKey::new(out.to_vec()).expect("32-byte key is always valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    fn key(bytes: &[u8]) -> SecretKey {
        SecretKey::new(bytes.to_vec()).unwrap()
    }

    #[test]
    fn sha256_empty_input() {
        assert_eq!(
            sha256(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn sha256_abc() {
        assert_eq!(
            sha256(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sha256_deterministic() {
        let data = b"some input";
        assert_eq!(sha256(data), sha256(data));
    }

    #[test]
    fn k_prime_at_block_size_is_unchanged() {
        let k = key(&[0xaa; 64]);
        let block = derive_k_prime(&k);
        assert_eq!(block, [0xaa; 64]);
    }

    #[test]
    fn k_prime_short_key_is_zero_padded() {
        let k = key(&[1, 2, 3, 4, 5, 6, 7, 8]);
        let block = derive_k_prime(&k);
        assert_eq!(&block[..8], &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert!(block[8..].iter().all(|&b| b == 0));
    }

    #[test]
    fn k_prime_long_key_is_hashed_then_padded() {
        // Key of 100 bytes 0x00..0x63; expected digest computed with an
        // independent SHA-256 implementation (RFC 2104 long-key rule).
        let long: Vec<u8> = (0u8..100).collect();
        let k = key(&long);
        let block = derive_k_prime(&k);
        assert_eq!(
            hex::encode(&block[..32]),
            "bce0aff19cf5aa6a7469a30d61d04e4376e4bbf6381052ee9e7f33925c954d52"
        );
        assert!(block[32..].iter().all(|&b| b == 0));
    }

    // RFC 4231 HMAC-SHA-256 test vectors.
    #[test]
    fn rfc4231_case_1() {
        let mac = hmac_sha256(&key(&[0x0b; 20]), b"Hi There");
        assert_eq!(
            mac.to_hex(),
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"
        );
    }

    #[test]
    fn rfc4231_case_2() {
        let mac = hmac_sha256(&key(b"Jefe"), b"what do ya want for nothing?");
        assert_eq!(
            mac.to_hex(),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"
        );
    }

    #[test]
    fn rfc4231_case_3() {
        let mac = hmac_sha256(&key(&[0xaa; 20]), &[0xdd; 50]);
        assert_eq!(
            mac.to_hex(),
            "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe"
        );
    }

    #[test]
    fn rfc4231_case_4() {
        let k: Vec<u8> = (1u8..=25).collect();
        let mac = hmac_sha256(&key(&k), &[0xcd; 50]);
        assert_eq!(
            mac.to_hex(),
            "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b"
        );
    }

    #[test]
    fn rfc4231_case_5_truncated() {
        // The published vector truncates the output to 128 bits.
        let mac = hmac_sha256(&key(&[0x0c; 20]), b"Test With Truncation");
        assert_eq!(
            hex::encode(&mac.as_bytes()[..16]),
            "a3b6167473100ee06e0c796c2955552b"
        );
    }

    #[test]
    fn rfc4231_case_6() {
        let mac = hmac_sha256(
            &key(&[0xaa; 131]),
            b"Test Using Larger Than Block-Size Key - Hash Key First",
        );
        assert_eq!(
            mac.to_hex(),
            "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54"
        );
    }

    #[test]
    fn rfc4231_case_7() {
        let msg: &[u8] = b"This is a test using a larger than block-size key and a larger \
than block-size data. The key needs to be hashed before being used by the HMAC algorithm.";
        let mac = hmac_sha256(&key(&[0xaa; 131]), msg);
        assert_eq!(
            mac.to_hex(),
            "9b09ffa71b942fcb27635fbcd5b0e944bfdc63644f0713938a7f51535c3a35e2"
        );
    }

    #[test]
    fn hmac_deterministic() {
        let k = key(b"fixed key");
        assert_eq!(hmac_sha256(&k, b"msg"), hmac_sha256(&k, b"msg"));
    }

    #[test]
    fn n2_with_zero_n1_is_mac_of_hashed_chip_info() {
        let k = key(b"Jefe");
        let ci = [0u8; 16];
        let n1 = Nonce::new([0u8; 32]);
        let n2 = generate_n2(&k, &ci, &n1).unwrap();
        let expected = hmac_sha256(&k, sha256(&ci).as_bytes());
        assert_eq!(n2.as_bytes(), expected.as_bytes());
        // Frozen value from composing independent SHA-256 and HMAC oracles.
        assert_eq!(
            hex::encode(n2.as_bytes()),
            "453947b3a236e9d5297bb9eebd046f6418eb460ec937404e14c1082dfc05155a"
        );
    }

    #[test]
    fn n2_composed_oracle_value() {
        let k = key(b"Jefe");
        let ci = [0u8; 16];
        let n1 = Nonce::new([0x01; 32]);
        let n2 = generate_n2(&k, &ci, &n1).unwrap();
        assert_eq!(
            hex::encode(n2.as_bytes()),
            "25454784685ecfeb86fe451b9240805540c4faee8b390d4f6502c6a2d97f8bc9"
        );
    }

    #[test]
    fn n2_distinct_n1_yield_distinct_t() {
        let ci_hash = sha256(&[0x42u8; 16]);
        let n1_a = Nonce::new([0x00; 32]);
        let n1_b = Nonce::new([0x07; 32]);
        let t_a = ci_hash.xor(&Hash256::new(*n1_a.as_bytes()));
        let t_b = ci_hash.xor(&Hash256::new(*n1_b.as_bytes()));
        assert_ne!(t_a, t_b);
    }

    #[test]
    fn n2_no_collisions_across_seeded_nonces() {
        let k = key(b"collision probe key");
        let ci = [0x5au8; 36];
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut seen = HashSet::new();
        for _ in 0..10_000 {
            let mut n1 = [0u8; 32];
            rng.fill_bytes(&mut n1);
            let n2 = generate_n2(&k, &ci, &Nonce::new(n1)).unwrap();
            assert!(seen.insert(*n2.as_bytes()), "n2 collision");
        }
    }

    #[test]
    fn n2_rejects_short_chip_info() {
        let k = key(b"k");
        let err = generate_n2(&k, &[0u8; 15], &Nonce::new([0; 32])).unwrap_err();
        assert!(matches!(err, CryptoError::MalformedChipInfo { len: 15 }));
    }

    #[test]
    fn k1_nonces_cancel() {
        let mac = Hash256::new([0x3c; 32]);
        let n = Nonce::new([0x99; 32]);
        let k1 = derive_k1(&mac, &n, &n);
        assert_eq!(k1.expose_bytes(), mac.as_bytes());
    }

    #[test]
    fn k1_direct_xor_arithmetic() {
        let mac = Hash256::new([0xff; 32]);
        let n1 = Nonce::new([0x0f; 32]);
        let n2 = Nonce::new([0x00; 32]);
        let k1 = derive_k1(&mac, &n1, &n2);
        assert_eq!(k1.expose_bytes(), &[0xf0; 32]);
    }

    #[test]
    fn k1_matches_byte_loop_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        for _ in 0..64 {
            let mut m = [0u8; 32];
            let mut a = [0u8; 32];
            let mut b = [0u8; 32];
            rng.fill_bytes(&mut m);
            rng.fill_bytes(&mut a);
            rng.fill_bytes(&mut b);
            let k1 = derive_k1(&Hash256::new(m), &Nonce::new(a), &Nonce::new(b));
            let mut expected = [0u8; 32];
            for i in 0..32 {
                expected[i] = m[i] ^ a[i] ^ b[i];
            }
            assert_eq!(k1.expose_bytes(), &expected);
        }
    }

    #[test]
    fn secret_key_rejects_empty_and_oversized() {
        assert!(matches!(
            SecretKey::new(Vec::new()),
            Err(CryptoError::EmptyKey)
        ));
        assert!(matches!(
            SecretKey::new(vec![0u8; 257]),
            Err(CryptoError::KeyTooLong { len: 257 })
        ));
    }

    #[test]
    fn secret_key_debug_redacts_bytes() {
        let k = key(&[0xde, 0xad, 0xbe, 0xef]);
        let rendered = format!("{k:?}");
        assert!(!rendered.contains("de"));
        assert!(!rendered.to_lowercase().contains("deadbeef"));
        assert_eq!(rendered, "SecretKey(4 bytes)");
    }

    #[test]
    fn ct_eq_matches_plain_eq() {
        let a = sha256(b"a");
        let b = sha256(b"b");
        assert!(a.ct_eq(&a));
        assert!(!a.ct_eq(&b));
    }
}
