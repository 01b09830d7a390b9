//! The on-chain state machines: registration, voting, oracle and prover
//! deposits, the trigger-gated tally with booth aggregation, the
//! supermajority/quorum winner rule, and revoting.
//!
//! The machine is single-writer: every mutation flows through
//! [`ElectionMachine::apply`], and identical command sequences yield
//! identical state hashes.

pub mod protocol;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::btc::{decode_nbits, BlockHeader, BtcError};
use crate::curve::{CurveId, CurveParams, Point};
use crate::sign::{self, Signature};
use crate::trigger::{self, EpochSchedule, TriggerError, TriggerVerdict};
use crate::vdf::{VdfCertificate, VdfParams};
use crate::wallet::{wallet_address, Address};

pub use protocol::{BlindedVote, CandidateId, VoteOpening, VoteProof, VoteProtocolKind};

pub type ChainId = u32;
pub type Height = u64;

/// Headers must age this many confirmations before the oracle may deposit them.
pub const CONFIRMATIONS: u64 = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ElectionError {
    #[error("election already initialized")]
    AlreadyInitialized,
    #[error("election not initialized")]
    NotInitialized,
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("signature verification failed")]
    BadSignature,
    #[error("address is not in valid state")]
    NotValidAddress,
    #[error("ballot correctness proof rejected")]
    BadProof,
    #[error("no header stored at height {0}")]
    UnknownHeight(Height),
    #[error("height {height} is not beyond the stored height")]
    StaleHeight { height: Height },
    #[error("height {height} violates the stride of {stride}")]
    StrideViolation { height: Height, stride: u64 },
    #[error("header at height {height} lacks {CONFIRMATIONS} confirmations")]
    ImmatureHeader { height: Height },
    #[error("tally height {requested} does not match stored height")]
    HeightMismatch { requested: Height },
    #[error("no prover deposit at height {0}")]
    MissingDeposit(Height),
    #[error("disallowed status transition: {0}")]
    InvalidTransition(&'static str),
    #[error("public key does not hash to the given address")]
    AddressMismatch,
    #[error("bad compact target: {0}")]
    BadTarget(BtcError),
}

/// System parameters agreed at setup and stored immutably.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectionParams {
    pub candidate_count: u32,
    /// Vote share a challenger needs to displace the incumbent.
    pub supermajority_threshold: f64,
    /// Minimum turnout as a fraction of the last main election's turnout.
    pub min_participation: f64,
    pub booth_rows: u32,
    pub booth_cols: u32,
    pub schedule: EpochSchedule,
    pub curve: CurveId,
    pub ea_public_key: Point,
    pub vdf: VdfParams,
    /// Opaque seed carried in the parameter block. Stored but not consumed by
    /// the trigger pipeline.
    #[serde(with = "crate::serde_hex_vec", default)]
    pub seed: Vec<u8>,
    pub baseline_turnout: u64,
    /// Per-candidate totals of the last main election.
    pub baseline_tally: Vec<u64>,
    pub initial_winner: CandidateId,
    /// Plain-majority winner rule when true.
    #[serde(default)]
    pub main_election: bool,
    #[serde(default)]
    pub vote_protocol: VoteProtocolKind,
    /// Seeds the pseudorandom booth assignment of registered addresses.
    #[serde(default)]
    pub assignment_seed: u64,
}

impl ElectionParams {
    pub fn validate(&self) -> Result<(), ElectionError> {
        if self.candidate_count < 2 {
            return Err(ElectionError::InvalidParams("need at least two candidates"));
        }
        if !(self.supermajority_threshold > 0.5 && self.supermajority_threshold <= 1.0) {
            return Err(ElectionError::InvalidParams("supermajority threshold must be in (0.5, 1]"));
        }
        if !(0.0..=1.0).contains(&self.min_participation) {
            return Err(ElectionError::InvalidParams("participation floor must be in [0, 1]"));
        }
        if self.booth_rows == 0 || self.booth_cols == 0 {
            return Err(ElectionError::InvalidParams("booth grid must be at least 1x1"));
        }
        if self.baseline_tally.len() != self.candidate_count as usize {
            return Err(ElectionError::InvalidParams("baseline tally length must match candidates"));
        }
        if self.initial_winner >= self.candidate_count {
            return Err(ElectionError::InvalidParams("initial winner out of range"));
        }
        self.schedule
            .validate()
            .map_err(|_| ElectionError::InvalidParams("bad epoch schedule"))?;
        if self.ea_public_key.is_identity() {
            return Err(ElectionError::InvalidParams("authority key must not be the identity"));
        }
        Ok(())
    }

    pub fn booth_count(&self) -> u32 {
        self.booth_rows * self.booth_cols
    }

    pub fn curve_params(&self) -> CurveParams {
        CurveParams::from_id(self.curve)
    }
}

/// Lifecycle of a registered wallet address. Transitions run only along
/// pending -> valid -> voted, plus any -> invalid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddressStatus {
    Pending,
    Valid,
    Voted,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressRecord {
    pub status: AddressStatus,
    /// Known once the authority has registered the address; revote stubs
    /// start without one.
    pub public_key: Option<Point>,
    pub chain: ChainId,
    pub booth: u32,
}

/// Oracle- and prover-facing storage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidatorState {
    pub headers: BTreeMap<Height, BlockHeader>,
    /// Compact difficulty accompanying each header.
    pub targets: BTreeMap<Height, u32>,
    pub vdf_deposits: BTreeMap<Height, VdfCertificate>,
    pub blockheight_stored: Option<Height>,
    pub tip_height: Height,
}

/// Full machine state; hashed canonically for the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectionState {
    pub params: ElectionParams,
    pub registry: BTreeMap<Address, AddressRecord>,
    /// Each chain's most recently validated address: the key that authorizes
    /// its next revote, even after an epoch reset retires the address.
    pub chain_heads: BTreeMap<ChainId, Address>,
    pub votes: BTreeMap<Address, BlindedVote>,
    pub openings: BTreeMap<Address, VoteOpening>,
    pub validator: ValidatorState,
    pub winner: CandidateId,
    pub epoch_index: u64,
}

/// Per-booth snapshot: the registry slice and ballots for one booth.
#[derive(Debug, Clone, Serialize)]
pub struct BoothState {
    pub booth_no: u32,
    pub registry: BTreeMap<Address, AddressStatus>,
    pub votes: BTreeMap<Address, BlindedVote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyResult {
    pub per_booth: BTreeMap<u32, Vec<u64>>,
    pub totals: Vec<u64>,
    pub turnout: u64,
    pub winner: CandidateId,
    pub winner_changed: bool,
    pub triggered_at: Height,
    pub epoch_index: u64,
}

/// Why a tally call did not produce a result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NotTriggered {
    /// The trigger predicate evaluated false.
    Predicate(TriggerVerdict),
    /// The deposited certificate is not bound to the stored header.
    MismatchedDeposit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Effect {
    None,
    Tally(TallyResult),
    NotTriggered { height: Height, reason: NotTriggered },
}

/// Advisory events surfaced alongside state changes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Notice {
    /// A same-interval revote lets a network observer link the two wallets.
    LinkageWarning {
        chain: ChainId,
        previous_address: Address,
        next_address: Address,
    },
    WinnerChanged {
        from: CandidateId,
        to: CandidateId,
        height: Height,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApplyOutcome {
    pub effect: Effect,
    pub notices: Vec<Notice>,
}

impl ApplyOutcome {
    fn quiet() -> Self {
        ApplyOutcome { effect: Effect::None, notices: Vec::new() }
    }
}

/// Every mutating operation, as written to the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    Setup {
        params: ElectionParams,
    },
    Registration {
        address: Address,
        public_key: Point,
        chain: ChainId,
        valid: bool,
        signature: Signature,
    },
    Voting {
        address: Address,
        blinded: BlindedVote,
        proof: VoteProof,
        signature: Signature,
    },
    Revote {
        current_address: Address,
        next_address: Address,
        signature: Signature,
    },
    SubmitOpening {
        address: Address,
        opening: VoteOpening,
    },
    BpoAdd {
        header: BlockHeader,
        nbits: u32,
        height: Height,
        tip_height: Height,
    },
    VdfAdd {
        certificate: VdfCertificate,
        height: Height,
    },
    Tally {
        height: Height,
    },
}

impl Command {
    pub fn op_name(&self) -> &'static str {
        match self {
            Command::Setup { .. } => "setup",
            Command::Registration { .. } => "registration",
            Command::Voting { .. } => "voting",
            Command::Revote { .. } => "revote",
            Command::SubmitOpening { .. } => "submit_opening",
            Command::BpoAdd { .. } => "bpo_add",
            Command::VdfAdd { .. } => "vdf_add",
            Command::Tally { .. } => "tally",
        }
    }
}

/// Byte layout the authority signs at registration: address then flag.
pub fn registration_message(address: &Address, valid: bool) -> Vec<u8> {
    let mut msg = address.0.to_vec();
    msg.push(valid as u8);
    msg
}

/// Byte layout a participant signs when voting.
pub fn voting_message(address: &Address, blinded: &BlindedVote, proof: &VoteProof) -> Vec<u8> {
    let mut msg = address.0.to_vec();
    msg.extend_from_slice(&(blinded.0.len() as u32).to_be_bytes());
    msg.extend_from_slice(&blinded.0);
    msg.extend_from_slice(&(proof.0.len() as u32).to_be_bytes());
    msg.extend_from_slice(&proof.0);
    msg
}

/// Byte layout a participant signs when announcing the next wallet address.
pub fn revote_message(next_address: &Address) -> Vec<u8> {
    let mut msg = b"revote:".to_vec();
    msg.extend_from_slice(&next_address.0);
    msg
}

/// Uniform pseudorandom booth assignment keyed by the scenario seed.
fn assign_booth(seed: u64, address: &Address, booth_count: u32) -> u32 {
    let mut hasher = Sha256::new();
    hasher.update(b"aov.booth");
    hasher.update(seed.to_be_bytes());
    hasher.update(address.0);
    let digest = hasher.finalize();
    let raw = u64::from_be_bytes(digest[..8].try_into().unwrap());
    (raw % booth_count as u64) as u32
}

/// Winner rule: in a main election a plain majority (> 1/2 of turnout) wins.
/// Between main elections a challenger displaces the incumbent only with a
/// supermajority share and sufficient turnout against the baseline; otherwise
/// the previous winner persists. Fractions compare exactly via parts per
/// million.
pub fn apply_winner_rule(
    totals: &[u64],
    turnout: u64,
    prev_winner: CandidateId,
    params: &ElectionParams,
) -> CandidateId {
    let ppm = |f: f64| (f * 1e6).round() as u128;
    if params.main_election {
        for (c, &count) in totals.iter().enumerate() {
            if 2 * count > turnout {
                return c as CandidateId;
            }
        }
        return prev_winner;
    }
    let quorum_ok = (turnout as u128) * 1_000_000
        >= ppm(params.min_participation) * params.baseline_turnout as u128;
    if !quorum_ok || turnout == 0 {
        return prev_winner;
    }
    let threshold = ppm(params.supermajority_threshold);
    for (c, &count) in totals.iter().enumerate() {
        if c as CandidateId == prev_winner {
            continue;
        }
        if (count as u128) * 1_000_000 >= threshold * turnout as u128 {
            return c as CandidateId;
        }
    }
    prev_winner
}

impl ElectionState {
    /// SHA-256 over the canonical (sorted-map, stable field order) JSON
    /// serialization of the whole state.
    pub fn state_hash(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        Sha256::digest(&bytes).into()
    }

    pub fn state_hash_hex(&self) -> String {
        hex::encode(self.state_hash())
    }

    pub fn booth_state(&self, booth_no: u32) -> BoothState {
        let registry = self
            .registry
            .iter()
            .filter(|(_, rec)| rec.booth == booth_no)
            .map(|(addr, rec)| (*addr, rec.status))
            .collect();
        let votes = self
            .votes
            .iter()
            .filter(|(addr, _)| self.registry[addr].booth == booth_no)
            .map(|(addr, v)| (*addr, v.clone()))
            .collect();
        BoothState { booth_no, registry, votes }
    }

    /// Count of addresses currently in the voted state.
    pub fn voted_count(&self) -> u64 {
        self.registry
            .values()
            .filter(|r| r.status == AddressStatus::Voted)
            .count() as u64
    }
}

/// Single-writer wrapper enforcing setup-before-use.
#[derive(Debug, Clone, Default)]
pub struct ElectionMachine {
    state: Option<ElectionState>,
}

impl ElectionMachine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> Option<&ElectionState> {
        self.state.as_ref()
    }

    #[cfg(test)]
    pub(crate) fn state_mut(&mut self) -> Option<&mut ElectionState> {
        self.state.as_mut()
    }

    pub fn state_hash_hex(&self) -> Option<String> {
        self.state.as_ref().map(ElectionState::state_hash_hex)
    }

    pub fn apply(&mut self, command: &Command) -> Result<ApplyOutcome, ElectionError> {
        match command {
            Command::Setup { params } => {
                if self.state.is_some() {
                    return Err(ElectionError::AlreadyInitialized);
                }
                params.validate()?;
                self.state = Some(ElectionState {
                    params: params.clone(),
                    registry: BTreeMap::new(),
                    chain_heads: BTreeMap::new(),
                    votes: BTreeMap::new(),
                    openings: BTreeMap::new(),
                    validator: ValidatorState::default(),
                    winner: params.initial_winner,
                    epoch_index: 0,
                });
                Ok(ApplyOutcome::quiet())
            }
            _ => {
                let state = self.state.as_mut().ok_or(ElectionError::NotInitialized)?;
                match command {
                    Command::Setup { .. } => unreachable!(),
                    Command::Registration { address, public_key, chain, valid, signature } => {
                        registration(state, address, public_key, *chain, *valid, signature)
                    }
                    Command::Voting { address, blinded, proof, signature } => {
                        voting(state, address, blinded, proof, signature)
                    }
                    Command::Revote { current_address, next_address, signature } => {
                        revote(state, current_address, next_address, signature)
                    }
                    Command::SubmitOpening { address, opening } => {
                        submit_opening(state, address, opening)
                    }
                    Command::BpoAdd { header, nbits, height, tip_height } => {
                        bpo_add(state, header, *nbits, *height, *tip_height)
                    }
                    Command::VdfAdd { certificate, height } => {
                        vdf_add(state, certificate, *height)
                    }
                    Command::Tally { height } => tally(state, *height),
                }
            }
        }
    }
}

/// Retires every live (valid or voted) address of `chain` other than `keep`.
/// Voted addresses lose their recorded ballot and produce a linkage warning.
fn retire_other_chain_addresses(
    state: &mut ElectionState,
    chain: ChainId,
    keep: &Address,
    notices: &mut Vec<Notice>,
) {
    let to_retire: Vec<Address> = state
        .registry
        .iter()
        .filter(|(addr, rec)| {
            rec.chain == chain
                && *addr != keep
                && matches!(rec.status, AddressStatus::Valid | AddressStatus::Voted)
        })
        .map(|(addr, _)| *addr)
        .collect();
    for addr in to_retire {
        let was_voted = state.registry[&addr].status == AddressStatus::Voted;
        state.registry.get_mut(&addr).expect("collected above").status = AddressStatus::Invalid;
        if was_voted {
            state.votes.remove(&addr);
            state.openings.remove(&addr);
            notices.push(Notice::LinkageWarning {
                chain,
                previous_address: addr,
                next_address: *keep,
            });
        }
    }
}

fn registration(
    state: &mut ElectionState,
    address: &Address,
    public_key: &Point,
    chain: ChainId,
    valid: bool,
    signature: &Signature,
) -> Result<ApplyOutcome, ElectionError> {
    let curve = state.params.curve_params();
    let msg = registration_message(address, valid);
    if !sign::verify(&curve, &state.params.ea_public_key, &msg, signature) {
        return Err(ElectionError::BadSignature);
    }
    if wallet_address(&curve, public_key).ok().as_ref() != Some(address) {
        return Err(ElectionError::AddressMismatch);
    }

    let next_status = if valid { AddressStatus::Valid } else { AddressStatus::Invalid };
    let mut notices = Vec::new();
    match state.registry.get_mut(address) {
        None => {
            let booth = assign_booth(state.params.assignment_seed, address, state.params.booth_count());
            state.registry.insert(
                *address,
                AddressRecord { status: next_status, public_key: Some(public_key.clone()), chain, booth },
            );
        }
        Some(record) => {
            if record.chain != chain {
                return Err(ElectionError::InvalidTransition("address belongs to another chain"));
            }
            match (record.status, valid) {
                (AddressStatus::Pending, _) | (AddressStatus::Valid, _) => {
                    record.status = next_status;
                    record.public_key = Some(public_key.clone());
                }
                (AddressStatus::Voted, false) => {
                    record.status = AddressStatus::Invalid;
                    // the recorded ballot is excluded from future tallies
                    state.votes.remove(address);
                    state.openings.remove(address);
                }
                (AddressStatus::Voted, true) => {
                    return Err(ElectionError::InvalidTransition("voted address cannot be revalidated"));
                }
                (AddressStatus::Invalid, _) => {
                    return Err(ElectionError::InvalidTransition("invalid is terminal"));
                }
            }
        }
    }
    if valid {
        state.chain_heads.insert(chain, *address);
        retire_other_chain_addresses(state, chain, address, &mut notices);
    }
    Ok(ApplyOutcome { effect: Effect::None, notices })
}

fn voting(
    state: &mut ElectionState,
    address: &Address,
    blinded: &BlindedVote,
    proof: &VoteProof,
    signature: &Signature,
) -> Result<ApplyOutcome, ElectionError> {
    let record = state.registry.get(address).ok_or(ElectionError::NotValidAddress)?;
    if record.status != AddressStatus::Valid {
        return Err(ElectionError::NotValidAddress);
    }
    let public_key = record.public_key.clone().ok_or(ElectionError::NotValidAddress)?;
    let curve = state.params.curve_params();
    let msg = voting_message(address, blinded, proof);
    if !sign::verify(&curve, &public_key, &msg, signature) {
        return Err(ElectionError::BadSignature);
    }
    let protocol = state.params.vote_protocol.protocol();
    if !protocol.verify_zkp(state.params.candidate_count, blinded, proof) {
        return Err(ElectionError::BadProof);
    }
    state.votes.insert(*address, blinded.clone());
    state.registry.get_mut(address).expect("checked above").status = AddressStatus::Voted;
    Ok(ApplyOutcome::quiet())
}

fn revote(
    state: &mut ElectionState,
    current_address: &Address,
    next_address: &Address,
    signature: &Signature,
) -> Result<ApplyOutcome, ElectionError> {
    let signer = state.registry.get(current_address).ok_or(ElectionError::BadSignature)?;
    let signer_key = signer.public_key.clone().ok_or(ElectionError::BadSignature)?;
    let signer_status = signer.status;
    let chain = signer.chain;
    // only the chain's current head key authorizes the next address; a spent
    // (epoch-reset) head still qualifies
    if state.chain_heads.get(&chain) != Some(current_address) {
        return Err(ElectionError::BadSignature);
    }
    let curve = state.params.curve_params();
    if !sign::verify(&curve, &signer_key, &revote_message(next_address), signature) {
        return Err(ElectionError::BadSignature);
    }
    if state.registry.contains_key(next_address) {
        return Err(ElectionError::InvalidTransition("next address already registered"));
    }

    let booth = assign_booth(state.params.assignment_seed, next_address, state.params.booth_count());
    state.registry.insert(
        *next_address,
        AddressRecord { status: AddressStatus::Pending, public_key: None, chain, booth },
    );

    let mut notices = Vec::new();
    if signer_status == AddressStatus::Voted {
        // same-interval vote change: the previous wallet is retired and the
        // two addresses become linkable to a network observer
        state.registry.get_mut(current_address).expect("present").status = AddressStatus::Invalid;
        state.votes.remove(current_address);
        state.openings.remove(current_address);
        notices.push(Notice::LinkageWarning {
            chain,
            previous_address: *current_address,
            next_address: *next_address,
        });
    }
    Ok(ApplyOutcome { effect: Effect::None, notices })
}

fn submit_opening(
    state: &mut ElectionState,
    address: &Address,
    opening: &VoteOpening,
) -> Result<ApplyOutcome, ElectionError> {
    if !state.params.vote_protocol.protocol().needs_openings() {
        return Err(ElectionError::InvalidTransition("protocol takes no openings"));
    }
    match state.registry.get(address) {
        Some(rec) if rec.status == AddressStatus::Voted => {}
        _ => return Err(ElectionError::NotValidAddress),
    }
    if opening.choice >= state.params.candidate_count {
        return Err(ElectionError::BadProof);
    }
    state.openings.insert(*address, opening.clone());
    Ok(ApplyOutcome::quiet())
}

fn bpo_add(
    state: &mut ElectionState,
    header: &BlockHeader,
    nbits: u32,
    height: Height,
    tip_height: Height,
) -> Result<ApplyOutcome, ElectionError> {
    if let Some(stored) = state.validator.blockheight_stored {
        if height <= stored {
            return Err(ElectionError::StaleHeight { height });
        }
    }
    let stride = state.params.schedule.stride;
    if stride > 1 && height % stride != 0 {
        return Err(ElectionError::StrideViolation { height, stride });
    }
    if tip_height < height + CONFIRMATIONS {
        return Err(ElectionError::ImmatureHeader { height });
    }
    decode_nbits(nbits).map_err(ElectionError::BadTarget)?;
    state.validator.headers.insert(height, *header);
    state.validator.targets.insert(height, nbits);
    state.validator.blockheight_stored = Some(height);
    state.validator.tip_height = state.validator.tip_height.max(tip_height);
    Ok(ApplyOutcome::quiet())
}

fn vdf_add(
    state: &mut ElectionState,
    certificate: &VdfCertificate,
    height: Height,
) -> Result<ApplyOutcome, ElectionError> {
    if !state.validator.headers.contains_key(&height) {
        return Err(ElectionError::UnknownHeight(height));
    }
    // last write wins; everything is re-verified at tally time
    state.validator.vdf_deposits.insert(height, certificate.clone());
    Ok(ApplyOutcome::quiet())
}

fn tally(state: &mut ElectionState, height: Height) -> Result<ApplyOutcome, ElectionError> {
    if state.validator.blockheight_stored != Some(height) {
        return Err(ElectionError::HeightMismatch { requested: height });
    }
    let cert = state
        .validator
        .vdf_deposits
        .get(&height)
        .ok_or(ElectionError::MissingDeposit(height))?;
    let header = state.validator.headers[&height];
    let nbits = state.validator.targets[&height];
    let target = decode_nbits(nbits).expect("validated at deposit time");

    let verdict = match trigger::verify_trigger(cert, &state.params.vdf, &header, &target, &state.params.schedule)
    {
        Ok(v) => v,
        Err(TriggerError::MismatchedInput) => {
            return Ok(ApplyOutcome {
                effect: Effect::NotTriggered { height, reason: NotTriggered::MismatchedDeposit },
                notices: Vec::new(),
            })
        }
        Err(TriggerError::InvalidSchedule(_)) => unreachable!("schedule validated at setup"),
    };
    if !verdict.triggered {
        return Ok(ApplyOutcome {
            effect: Effect::NotTriggered { height, reason: NotTriggered::Predicate(verdict) },
            notices: Vec::new(),
        });
    }

    // per-booth counting through the plugged-in protocol
    let k = state.params.candidate_count;
    let protocol = state.params.vote_protocol.protocol();
    let mut per_booth: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for booth_no in 0..state.params.booth_count() {
        let booth_votes: BTreeMap<Address, BlindedVote> = state
            .votes
            .iter()
            .filter(|(addr, _)| state.registry[addr].booth == booth_no)
            .map(|(addr, v)| (*addr, v.clone()))
            .collect();
        per_booth.insert(booth_no, protocol.booth_tally(k, &booth_votes, &state.openings));
    }
    let mut totals = vec![0u64; k as usize];
    for counts in per_booth.values() {
        for (slot, c) in totals.iter_mut().zip(counts) {
            *slot += c;
        }
    }
    let turnout: u64 = totals.iter().sum();

    let previous = state.winner;
    let winner = apply_winner_rule(&totals, turnout, previous, &state.params);
    let result = TallyResult {
        per_booth,
        totals,
        turnout,
        winner,
        winner_changed: winner != previous,
        triggered_at: height,
        epoch_index: state.epoch_index,
    };

    // epoch reset: spent addresses retire and ballots clear for the revote cycle
    for record in state.registry.values_mut() {
        if record.status == AddressStatus::Voted {
            record.status = AddressStatus::Invalid;
        }
    }
    state.votes.clear();
    state.openings.clear();
    state.winner = winner;
    state.epoch_index += 1;

    let mut notices = Vec::new();
    if result.winner_changed {
        notices.push(Notice::WinnerChanged { from: previous, to: winner, height });
    }
    Ok(ApplyOutcome { effect: Effect::Tally(result), notices })
}

#[cfg(test)]
mod tests;
