//! Deterministic per-epoch wallet derivation shared between a participant and
//! the election authority. Both sides can regenerate the public-key sequence,
//! but every private key stays with the participant; third parties cannot
//! link consecutive addresses.

use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::curve::{CurveError, CurveParams, Point};
use crate::serde_biguint;

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalletError {
    #[error("iteration index out of range (1..=2^128-1)")]
    IterationOutOfRange,
    #[error("invalid chain material: {0}")]
    InvalidChain(&'static str),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// 20-byte wallet address: truncated hash of the public key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let bytes = hex::decode(s)?;
        let arr: [u8; 20] = bytes.try_into().map_err(|_| hex::FromHexError::InvalidStringLength)?;
        Ok(Address(arr))
    }
}

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Address::from_hex(&s).map_err(D::Error::custom)
    }
}

/// The pseudo-random-number field `(g, p)`: `g^e` in `F_p^*` feeds the HMAC.
/// This field is independent of the curve field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrngField {
    #[serde(with = "serde_biguint")]
    pub g: BigUint,
    #[serde(with = "serde_biguint")]
    pub p: BigUint,
}

/// Default PRNG prime for generated chains: the Mersenne prime 2^61 - 1.
pub fn default_prng_prime() -> BigUint {
    (BigUint::one() << 61u32) - BigUint::one()
}

/// Participant-side chain material. Serializes as `{sk0, hk, g, p}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletChain {
    #[serde(with = "serde_biguint")]
    pub sk0: BigUint,
    #[serde(with = "crate::serde_hex32")]
    pub hk: [u8; 32],
    #[serde(flatten)]
    pub prng: PrngField,
}

/// What the participant sends the authority at registration: `{pk0, hk, g, p}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncFile {
    pub pk0: Point,
    #[serde(with = "crate::serde_hex32")]
    pub hk: [u8; 32],
    #[serde(flatten)]
    pub prng: PrngField,
}

/// Authority-side record: the sync material plus the derived first wallet
/// address. Holds no scalar from which any private key could be computed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncRecord {
    pub pk0: Point,
    #[serde(with = "crate::serde_hex32")]
    pub hk: [u8; 32],
    #[serde(flatten)]
    pub prng: PrngField,
    pub w0: Address,
}

impl WalletChain {
    pub fn new(
        curve: &CurveParams,
        sk0: BigUint,
        hk: [u8; 32],
        prng: PrngField,
    ) -> Result<Self, WalletError> {
        if sk0.is_zero() || sk0 >= curve.order {
            return Err(WalletError::InvalidChain("sk0 must lie in [1, q-1]"));
        }
        if prng.p <= BigUint::from(3u32) {
            return Err(WalletError::InvalidChain("prng prime too small"));
        }
        if prng.g <= BigUint::one() || prng.g >= prng.p {
            return Err(WalletError::InvalidChain("g must lie in [2, p-1]"));
        }
        // cheap large-order screen: no tiny cycle in the tested range
        let mut acc = prng.g.clone();
        for _ in 0..64 {
            acc = acc * &prng.g % &prng.p;
            if acc.is_one() {
                return Err(WalletError::InvalidChain("g has tiny order"));
            }
        }
        Ok(WalletChain { sk0, hk, prng })
    }

    /// Fresh chain material from a seeded generator.
    pub fn generate(curve: &CurveParams, rng: &mut impl rand::Rng) -> Self {
        let p = default_prng_prime();
        let sk0 = loop {
            let bytes: [u8; 32] = rng.gen();
            let candidate = BigUint::from_bytes_be(&bytes) % &curve.order;
            if !candidate.is_zero() {
                break candidate;
            }
        };
        let g = loop {
            let candidate = BigUint::from(rng.gen_range(2u64..(1 << 61) - 1));
            let chain = WalletChain {
                sk0: sk0.clone(),
                hk: [0u8; 32],
                prng: PrngField { g: candidate.clone(), p: p.clone() },
            };
            if WalletChain::new(curve, chain.sk0.clone(), chain.hk, chain.prng.clone()).is_ok() {
                break candidate;
            }
        };
        WalletChain { sk0, hk: rng.gen(), prng: PrngField { g, p } }
    }

    pub fn pk0(&self, curve: &CurveParams) -> Point {
        curve.mul(&self.sk0, &curve.base_point)
    }

    /// Registration payload for the authority.
    pub fn sync_file(&self, curve: &CurveParams) -> SyncFile {
        SyncFile { pk0: self.pk0(curve), hk: self.hk, prng: self.prng.clone() }
    }

    /// `SK_e = (sk0 + offset_e) mod q`, re-derived with a retry tag in the
    /// astronomically unlikely case the sum vanishes.
    pub fn derive_sk(&self, curve: &CurveParams, e: u128) -> Result<BigUint, WalletError> {
        let mut retry = 0u32;
        loop {
            let offset = derive_offset_tagged(&self.hk, &self.prng, &curve.order, e, retry)?;
            let sk = (&self.sk0 + offset) % &curve.order;
            if !sk.is_zero() {
                return Ok(sk);
            }
            retry += 1;
        }
    }

    /// The participant's view of the epoch public key, `SK_e * BP`.
    pub fn derive_pk(&self, curve: &CurveParams, e: u128) -> Result<Point, WalletError> {
        Ok(curve.mul(&self.derive_sk(curve, e)?, &curve.base_point))
    }

    pub fn derive_address(&self, curve: &CurveParams, e: u128) -> Result<Address, WalletError> {
        wallet_address(curve, &self.derive_pk(curve, e)?)
    }
}

impl SyncRecord {
    /// What the authority stores after identity verification: it derives and
    /// keeps the first wallet address.
    pub fn from_sync(file: SyncFile, curve: &CurveParams) -> Result<Self, WalletError> {
        if !curve.is_on_curve(&file.pk0) || file.pk0.is_identity() {
            return Err(WalletError::Curve(CurveError::NotOnCurve));
        }
        let w0 = wallet_address(curve, &file.pk0)?;
        Ok(SyncRecord { pk0: file.pk0, hk: file.hk, prng: file.prng, w0 })
    }

    /// `PK_e = PK_0 + offset_e * BP`, computed without any scalar secret.
    /// Mirrors the participant's zero-retry rule via the identity check.
    pub fn derive_pk(&self, curve: &CurveParams, e: u128) -> Result<Point, WalletError> {
        let mut retry = 0u32;
        loop {
            let offset = derive_offset_tagged(&self.hk, &self.prng, &curve.order, e, retry)?;
            let pk = curve.add(&self.pk0, &curve.mul(&offset, &curve.base_point));
            if !pk.is_identity() {
                return Ok(pk);
            }
            retry += 1;
        }
    }

    pub fn derive_address(&self, curve: &CurveParams, e: u128) -> Result<Address, WalletError> {
        wallet_address(curve, &self.derive_pk(curve, e)?)
    }
}

/// `HMAC-SHA-256(hk, g^e mod p)` reduced modulo the group order.
pub fn derive_offset(
    hk: &[u8; 32],
    prng: &PrngField,
    order: &BigUint,
    e: u128,
) -> Result<BigUint, WalletError> {
    derive_offset_tagged(hk, prng, order, e, 0)
}

fn derive_offset_tagged(
    hk: &[u8; 32],
    prng: &PrngField,
    order: &BigUint,
    e: u128,
    retry: u32,
) -> Result<BigUint, WalletError> {
    if e == 0 {
        return Err(WalletError::IterationOutOfRange);
    }
    let point = prng.g.modpow(&BigUint::from(e), &prng.p);
    let mut mac = HmacSha256::new_from_slice(hk).expect("any key length is accepted");
    mac.update(&point.to_bytes_be());
    if retry > 0 {
        mac.update(&retry.to_be_bytes());
    }
    let digest = mac.finalize().into_bytes();
    Ok(BigUint::from_bytes_be(&digest) % order)
}

/// First 20 bytes of SHA-256 over the compressed point encoding.
pub fn wallet_address(curve: &CurveParams, pk: &Point) -> Result<Address, WalletError> {
    let encoded = curve.compress(pk)?;
    let digest = Sha256::digest(&encoded);
    let mut out = [0u8; 20];
    out.copy_from_slice(&digest[..20]);
    Ok(Address(out))
}

/// Test hook mirroring the derivation with a caller-forced offset.
#[cfg(test)]
pub(crate) fn sk_with_offset(sk0: &BigUint, offset: &BigUint, order: &BigUint) -> BigUint {
    (sk0 + offset) % order
}
