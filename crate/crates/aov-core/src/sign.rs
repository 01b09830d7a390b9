//! Deterministic Schnorr signatures over a wallet curve. The election state
//! machine only depends on the verification relation, so any EUF-CMA scheme
//! could sit behind the same shape.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::curve::{CurveParams, Point};
use crate::serde_biguint;
use crate::vdf::expand;

/// Schnorr signature `(R, s)` satisfying `s*BP == R + c*PK` with
/// `c = H(R || PK || msg)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub nonce_point: Point,
    #[serde(with = "serde_biguint")]
    pub s: BigUint,
}

fn length_prefixed(parts: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for part in parts {
        out.extend_from_slice(&(part.len() as u32).to_be_bytes());
        out.extend_from_slice(part);
    }
    out
}

fn scalar_from_hash(domain: &[u8], parts: &[&[u8]], order: &BigUint) -> BigUint {
    let mut data = domain.to_vec();
    data.extend_from_slice(&length_prefixed(parts));
    let nbytes = ((order.bits() + 7) / 8 + 16) as usize;
    BigUint::from_bytes_be(&expand(&data, nbytes)) % order
}

/// Derandomized nonce: hashed from the secret key and message, never zero.
fn nonce(curve: &CurveParams, sk: &BigUint, msg: &[u8]) -> BigUint {
    let span = &curve.order - BigUint::one();
    let k = scalar_from_hash(b"aov.sign.nonce", &[&sk.to_bytes_be(), msg], &span);
    k + BigUint::one()
}

fn challenge(curve: &CurveParams, nonce_point: &Point, pk: &Point, msg: &[u8]) -> BigUint {
    let rb = curve.compress(nonce_point).expect("nonce point is never the identity");
    let pb = curve.compress(pk).expect("public key is never the identity");
    scalar_from_hash(b"aov.sign.chal", &[&rb, &pb, msg], &curve.order)
}

pub fn public_key(curve: &CurveParams, sk: &BigUint) -> Point {
    curve.mul(sk, &curve.base_point)
}

pub fn sign(curve: &CurveParams, sk: &BigUint, msg: &[u8]) -> Signature {
    let k = nonce(curve, sk, msg);
    let nonce_point = curve.mul(&k, &curve.base_point);
    let pk = public_key(curve, sk);
    let c = challenge(curve, &nonce_point, &pk, msg);
    let s = (k + c * sk) % &curve.order;
    Signature { nonce_point, s }
}

pub fn verify(curve: &CurveParams, pk: &Point, msg: &[u8], sig: &Signature) -> bool {
    if pk.is_identity() || !curve.is_on_curve(pk) {
        return false;
    }
    if sig.nonce_point.is_identity() || !curve.is_on_curve(&sig.nonce_point) {
        return false;
    }
    if sig.s >= curve.order || sig.s.is_zero() {
        return false;
    }
    let c = challenge(curve, &sig.nonce_point, pk, msg);
    let lhs = curve.mul(&sig.s, &curve.base_point);
    let rhs = curve.add(&sig.nonce_point, &curve.mul(&c, pk));
    lhs == rhs
}
