//! The plug-and-play vote-protocol seam. The election machinery only needs a
//! blinding function, a validity check for incoming ballots, and a per-booth
//! tally; everything else about the ballot format is the plug-in's business.
//!
//! Two reference plug-ins ship here: a plaintext protocol for tests, and a
//! hash commit-reveal protocol where openings arrive at tally time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::wallet::Address;

pub type CandidateId = u32;

/// Opaque blinded ballot bytes; interpretation belongs to the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindedVote(#[serde(with = "crate::serde_hex_vec")] pub Vec<u8>);

/// Opaque correctness-proof bytes accompanying a ballot.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VoteProof(#[serde(with = "crate::serde_hex_vec")] pub Vec<u8>);

/// A commit-reveal opening: the choice and the blinding key behind a
/// commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteOpening {
    pub choice: CandidateId,
    #[serde(with = "crate::serde_hex32")]
    pub blinding_key: [u8; 32],
}

/// Behavior required of any pluggable vote protocol.
pub trait VoteProtocol {
    /// Blinds a choice under a fresh blinding key.
    fn blind(&self, choice: CandidateId, blinding_key: &[u8; 32]) -> BlindedVote;

    /// Checks the ballot's zero-knowledge correctness proof (or whatever
    /// stands in for it) against the blinded ballot.
    fn verify_zkp(&self, candidate_count: u32, blinded: &BlindedVote, proof: &VoteProof) -> bool;

    /// Counts one booth's ballots into per-candidate totals, consulting the
    /// submitted openings where the protocol needs them. Unopenable or
    /// corrupted ballots are dropped, never guessed.
    fn booth_tally(
        &self,
        candidate_count: u32,
        votes: &BTreeMap<Address, BlindedVote>,
        openings: &BTreeMap<Address, VoteOpening>,
    ) -> Vec<u64>;

    /// Whether tallying requires openings to be submitted beforehand.
    fn needs_openings(&self) -> bool;
}

/// Configuration handle selecting one of the bundled protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteProtocolKind {
    Plaintext,
    #[default]
    CommitReveal,
}

impl VoteProtocolKind {
    pub fn protocol(self) -> &'static dyn VoteProtocol {
        match self {
            VoteProtocolKind::Plaintext => &PlaintextProtocol,
            VoteProtocolKind::CommitReveal => &CommitRevealProtocol,
        }
    }
}

/// Testing plug-in: the blinded vote is the choice itself (4 bytes LE) and
/// the proof is an empty range assertion.
pub struct PlaintextProtocol;

impl PlaintextProtocol {
    fn decode(blinded: &BlindedVote) -> Option<CandidateId> {
        let bytes: [u8; 4] = blinded.0.as_slice().try_into().ok()?;
        Some(CandidateId::from_le_bytes(bytes))
    }
}

impl VoteProtocol for PlaintextProtocol {
    fn blind(&self, choice: CandidateId, _blinding_key: &[u8; 32]) -> BlindedVote {
        BlindedVote(choice.to_le_bytes().to_vec())
    }

    fn verify_zkp(&self, candidate_count: u32, blinded: &BlindedVote, _proof: &VoteProof) -> bool {
        matches!(Self::decode(blinded), Some(choice) if choice < candidate_count)
    }

    fn booth_tally(
        &self,
        candidate_count: u32,
        votes: &BTreeMap<Address, BlindedVote>,
        _openings: &BTreeMap<Address, VoteOpening>,
    ) -> Vec<u64> {
        let mut counts = vec![0u64; candidate_count as usize];
        for blinded in votes.values() {
            if let Some(choice) = Self::decode(blinded) {
                if choice < candidate_count {
                    counts[choice as usize] += 1;
                }
            }
        }
        counts
    }

    fn needs_openings(&self) -> bool {
        false
    }
}

/// Commit-reveal plug-in: the ballot is `SHA-256(choice || blinding_key)`;
/// openings are submitted to the booth once the tally is triggered, and any
/// ballot whose opening fails to re-commit is rejected.
pub struct CommitRevealProtocol;

pub fn commitment(choice: CandidateId, blinding_key: &[u8; 32]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(choice.to_le_bytes());
    hasher.update(blinding_key);
    hasher.finalize().into()
}

impl VoteProtocol for CommitRevealProtocol {
    fn blind(&self, choice: CandidateId, blinding_key: &[u8; 32]) -> BlindedVote {
        BlindedVote(commitment(choice, blinding_key).to_vec())
    }

    fn verify_zkp(&self, _candidate_count: u32, blinded: &BlindedVote, _proof: &VoteProof) -> bool {
        // well-formedness only; the binding is checked against the opening
        blinded.0.len() == 32
    }

    fn booth_tally(
        &self,
        candidate_count: u32,
        votes: &BTreeMap<Address, BlindedVote>,
        openings: &BTreeMap<Address, VoteOpening>,
    ) -> Vec<u64> {
        let mut counts = vec![0u64; candidate_count as usize];
        for (addr, blinded) in votes {
            let Some(opening) = openings.get(addr) else { continue };
            if opening.choice >= candidate_count {
                continue;
            }
            if commitment(opening.choice, &opening.blinding_key).as_slice() != blinded.0 {
                continue;
            }
            counts[opening.choice as usize] += 1;
        }
        counts
    }

    fn needs_openings(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(tag: u8) -> Address {
        Address([tag; 20])
    }

    #[test]
    fn plaintext_round_trip_and_range_check() {
        let p = PlaintextProtocol;
        let ballot = p.blind(2, &[0u8; 32]);
        assert!(p.verify_zkp(4, &ballot, &VoteProof::default()));
        assert!(!p.verify_zkp(2, &ballot, &VoteProof::default()));
        assert!(!p.verify_zkp(4, &BlindedVote(vec![1, 2, 3]), &VoteProof::default()));
    }

    #[test]
    fn plaintext_tally_counts_choices() {
        let p = PlaintextProtocol;
        let mut votes = BTreeMap::new();
        votes.insert(addr(1), p.blind(0, &[0u8; 32]));
        votes.insert(addr(2), p.blind(1, &[0u8; 32]));
        votes.insert(addr(3), p.blind(0, &[0u8; 32]));
        let counts = p.booth_tally(3, &votes, &BTreeMap::new());
        assert_eq!(counts, vec![2, 1, 0]);
    }

    #[test]
    fn commit_reveal_requires_matching_opening() {
        let p = CommitRevealProtocol;
        let key = [9u8; 32];
        let ballot = p.blind(1, &key);
        assert!(p.verify_zkp(4, &ballot, &VoteProof::default()));
        assert!(!p.verify_zkp(4, &BlindedVote(vec![0u8; 31]), &VoteProof::default()));

        let mut votes = BTreeMap::new();
        votes.insert(addr(1), ballot.clone());
        let mut openings = BTreeMap::new();

        // no opening: ballot dropped
        assert_eq!(p.booth_tally(4, &votes, &openings), vec![0, 0, 0, 0]);

        // matching opening counts
        openings.insert(addr(1), VoteOpening { choice: 1, blinding_key: key });
        assert_eq!(p.booth_tally(4, &votes, &openings), vec![0, 1, 0, 0]);

        // a wrong key or wrong choice must not count
        openings.insert(addr(1), VoteOpening { choice: 1, blinding_key: [8u8; 32] });
        assert_eq!(p.booth_tally(4, &votes, &openings), vec![0, 0, 0, 0]);
        openings.insert(addr(1), VoteOpening { choice: 2, blinding_key: key });
        assert_eq!(p.booth_tally(4, &votes, &openings), vec![0, 0, 0, 0]);
    }

    #[test]
    fn commit_reveal_rejects_mutated_ballot() {
        let p = CommitRevealProtocol;
        let key = [5u8; 32];
        let mut ballot = p.blind(2, &key);
        ballot.0[7] ^= 0x40;
        let mut votes = BTreeMap::new();
        votes.insert(addr(1), ballot);
        let mut openings = BTreeMap::new();
        openings.insert(addr(1), VoteOpening { choice: 2, blinding_key: key });
        assert_eq!(p.booth_tally(4, &votes, &openings), vec![0, 0, 0, 0]);
    }

    #[test]
    fn protocols_agree_on_identical_choices() {
        let choices = [0u32, 1, 2, 1, 0, 3, 1];
        let plain = PlaintextProtocol;
        let commit = CommitRevealProtocol;
        let mut plain_votes = BTreeMap::new();
        let mut commit_votes = BTreeMap::new();
        let mut openings = BTreeMap::new();
        for (i, &choice) in choices.iter().enumerate() {
            let key = [i as u8 + 1; 32];
            plain_votes.insert(addr(i as u8), plain.blind(choice, &key));
            commit_votes.insert(addr(i as u8), commit.blind(choice, &key));
            openings.insert(addr(i as u8), VoteOpening { choice, blinding_key: key });
        }
        assert_eq!(
            plain.booth_tally(4, &plain_votes, &BTreeMap::new()),
            commit.booth_tally(4, &commit_votes, &openings)
        );
    }
}
