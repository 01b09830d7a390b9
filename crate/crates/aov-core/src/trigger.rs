//! Epoch-end decision pipeline: entropy extraction from a VDF output, modular
//! reduction by the interval time, and the validator's trigger predicate.

use num_bigint::BigUint;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::btc::{check_pow, BlockHeader, Target};
use crate::vdf::{self, VdfCertificate, VdfParams};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TriggerError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(&'static str),
    #[error("certificate input does not correspond to the header")]
    MismatchedInput,
}

/// Determines the per-header trigger probability. `total_time` is the spanns
/// in minutes between two regular elections, `ft` the expected number of
/// intervals, `block_time` the average minutes per block, and `stride`
/// processes only every stride-th header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochSchedule {
    pub total_time: u64,
    pub ft: u64,
    pub block_time: u64,
    #[serde(default = "default_stride")]
    pub stride: u64,
}

fn default_stride() -> u64 {
    1
}

impl EpochSchedule {
    pub fn new(total_time: u64, ft: u64, block_time: u64, stride: u64) -> Result<Self, TriggerError> {
        let s = EpochSchedule { total_time, ft, block_time, stride };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), TriggerError> {
        if self.total_time == 0 || self.ft == 0 || self.block_time == 0 || self.stride == 0 {
            return Err(TriggerError::InvalidSchedule("all fields must be >= 1"));
        }
        if self.total_time < self.ft * self.block_time * self.stride {
            return Err(TriggerError::InvalidSchedule("interval time must be >= 1"));
        }
        Ok(())
    }
}

/// `IntervalTime = TotalTime / (ft * BlockTime * stride)`, kept exact.
pub fn interval_time(s: &EpochSchedule) -> Ratio<u64> {
    Ratio::new(s.total_time, s.ft * s.block_time * s.stride)
}

/// The integer modulus used downstream is the ceiling of the interval time;
/// rounding up lengthens expected epochs rather than shortening them.
pub fn trigger_modulus(s: &EpochSchedule) -> u64 {
    interval_time(s).ceil().to_integer()
}

/// Consolidates the entropy of a VDF output: SHA-256 over the canonical
/// big-endian encoding of `y`, read back as an unsigned 256-bit integer.
pub fn extract(y: &BigUint) -> BigUint {
    BigUint::from_bytes_be(&Sha256::digest(y.to_bytes_be()))
}

/// `b = a mod m`.
pub fn trigger_value(a: &BigUint, m: u64) -> u64 {
    assert!(m >= 1, "modulus must be >= 1");
    let b = a % BigUint::from(m);
    b.try_into().expect("residue below a u64 modulus")
}

/// The tally for the interval is triggered exactly when the residue is zero.
pub fn vc_output(b: u64) -> bool {
    b == 0
}

/// Outcome of the validator checks, in evaluation order: the proof-of-work
/// test runs first; the VDF proof and the modular condition are only reached
/// while the preceding step holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TriggerVerdict {
    pub pow: bool,
    pub vdf: Option<bool>,
    pub b: Option<u64>,
    pub triggered: bool,
}

/// Full trigger predicate over a deposited certificate and header: true iff
/// the header solves the puzzle, the certificate verifies, and the extracted
/// entropy is divisible by the interval modulus.
pub fn verify_trigger(
    cert: &VdfCertificate,
    params: &VdfParams,
    header: &BlockHeader,
    target: &Target,
    schedule: &EpochSchedule,
) -> Result<TriggerVerdict, TriggerError> {
    if cert.x != vdf::hash_to_group(&header.encode(), params) {
        return Err(TriggerError::MismatchedInput);
    }
    let mut verdict = TriggerVerdict { pow: false, vdf: None, b: None, triggered: false };
    verdict.pow = check_pow(header, target);
    if !verdict.pow {
        return Ok(verdict);
    }
    let vdf_ok = vdf::verify(cert, params);
    verdict.vdf = Some(vdf_ok);
    if !vdf_ok {
        return Ok(verdict);
    }
    let b = trigger_value(&extract(&cert.y), trigger_modulus(schedule));
    verdict.b = Some(b);
    verdict.triggered = vc_output(b);
    Ok(verdict)
}
