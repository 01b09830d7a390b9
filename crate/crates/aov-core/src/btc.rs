//! Bit-exact Bitcoin block-header encoding, compact-difficulty decoding and
//! proof-of-work validation, plus a trial-and-error miner for building
//! low-difficulty test chains.

use num_bigint::BigUint;
use num_traits::One;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Serialized length of a block header in bytes.
pub const HEADER_LEN: usize = 80;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BtcError {
    #[error("compact target has the sign bit set")]
    NegativeTarget,
    #[error("compact target exceeds 256 bits")]
    OverflowTarget,
    #[error("compact target decodes to zero")]
    ZeroTarget,
    #[error("header must be {HEADER_LEN} bytes, got {0}")]
    BadLength(usize),
    #[error("invalid header hex: {0}")]
    BadHex(String),
    #[error("no valid nonce within {0} attempts")]
    Exhausted(u64),
}

/// An 80-byte Bitcoin block header. Multi-byte fields serialize little-endian
/// per consensus encoding; the 32-byte digests are kept in internal byte order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockHeader {
    pub version: i32,
    pub prev_hash: [u8; 32],
    pub merkle_root: [u8; 32],
    pub timestamp: u32,
    pub nbits: u32,
    pub nonce: u32,
}

impl BlockHeader {
    /// Consensus serialization: exactly 80 bytes.
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&self.version.to_le_bytes());
        out[4..36].copy_from_slice(&self.prev_hash);
        out[36..68].copy_from_slice(&self.merkle_root);
        out[68..72].copy_from_slice(&self.timestamp.to_le_bytes());
        out[72..76].copy_from_slice(&self.nbits.to_le_bytes());
        out[76..80].copy_from_slice(&self.nonce.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, BtcError> {
        if bytes.len() != HEADER_LEN {
            return Err(BtcError::BadLength(bytes.len()));
        }
        let mut prev_hash = [0u8; 32];
        let mut merkle_root = [0u8; 32];
        prev_hash.copy_from_slice(&bytes[4..36]);
        merkle_root.copy_from_slice(&bytes[36..68]);
        Ok(BlockHeader {
            version: i32::from_le_bytes(bytes[0..4].try_into().unwrap()),
            prev_hash,
            merkle_root,
            timestamp: u32::from_le_bytes(bytes[68..72].try_into().unwrap()),
            nbits: u32::from_le_bytes(bytes[72..76].try_into().unwrap()),
            nonce: u32::from_le_bytes(bytes[76..80].try_into().unwrap()),
        })
    }

    /// One header per line in fixture files: 160 hex characters, consensus order.
    pub fn to_hex(&self) -> String {
        hex::encode(self.encode())
    }

    pub fn from_hex(s: &str) -> Result<Self, BtcError> {
        let bytes = hex::decode(s.trim()).map_err(|e| BtcError::BadHex(e.to_string()))?;
        Self::decode(&bytes)
    }
}

impl Serialize for BlockHeader {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BlockHeader {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BlockHeader::from_hex(&s).map_err(D::Error::custom)
    }
}

/// A positive 256-bit proof-of-work threshold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Target(BigUint);

impl Target {
    pub fn new(value: BigUint) -> Result<Self, BtcError> {
        if value == BigUint::default() {
            return Err(BtcError::ZeroTarget);
        }
        if value.bits() > 256 {
            return Err(BtcError::OverflowTarget);
        }
        Ok(Target(value))
    }

    /// Largest representable target; accepts every header.
    pub fn max() -> Self {
        Target((BigUint::one() << 256u32) - BigUint::one())
    }

    /// `2^k` for quick test thresholds, `k < 256`.
    pub fn pow2(k: u32) -> Self {
        assert!(k < 256);
        Target(BigUint::one() << k)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Mining difficulty as the count of leading zero bits a winning hash
    /// must have.
    pub fn difficulty_bits(&self) -> u32 {
        256 - self.0.bits() as u32
    }
}

/// Expands the compact `nBits` difficulty encoding into a full target:
/// `mantissa * 256^(exponent - 3)`.
pub fn decode_nbits(nbits: u32) -> Result<Target, BtcError> {
    if nbits & 0x0080_0000 != 0 {
        return Err(BtcError::NegativeTarget);
    }
    let exponent = (nbits >> 24) as i64;
    let mantissa = BigUint::from(nbits & 0x007f_ffff);
    if mantissa == BigUint::default() {
        return Err(BtcError::ZeroTarget);
    }
    let value = if exponent >= 3 {
        let shift = 8 * (exponent - 3) as u64;
        if mantissa.bits() + shift > 256 {
            return Err(BtcError::OverflowTarget);
        }
        mantissa << shift
    } else {
        mantissa >> (8 * (3 - exponent) as u64)
    };
    Target::new(value)
}

/// Double SHA-256 of the serialized header, returned in internal (little-endian
/// integer) byte order.
pub fn pow_hash(header: &BlockHeader) -> [u8; 32] {
    let first = Sha256::digest(header.encode());
    let second = Sha256::digest(first);
    second.into()
}

/// The proof-of-work hash as the integer compared against the target.
pub fn pow_hash_value(header: &BlockHeader) -> BigUint {
    BigUint::from_bytes_le(&pow_hash(header))
}

/// True iff the header solves the puzzle for the given target.
pub fn check_pow(header: &BlockHeader, target: &Target) -> bool {
    pow_hash_value(header) < *target.value()
}

/// Searches nonces by trial and error starting from the template's own nonce.
/// All non-nonce fields of the result equal the template's.
pub fn mine_test_header(
    template: &BlockHeader,
    target: &Target,
    max_iters: u64,
) -> Result<BlockHeader, BtcError> {
    let mut header = *template;
    for i in 0..max_iters {
        header.nonce = template.nonce.wrapping_add(i as u32);
        if check_pow(&header, target) {
            return Ok(header);
        }
    }
    Err(BtcError::Exhausted(max_iters))
}
