use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::*;
use crate::btc::mine_test_header;
use crate::curve::CurveId;
use crate::vdf;
use crate::wallet::{wallet_address, WalletChain};

const EASY_NBITS: u32 = 0x22000001; // target 2^248

fn test_params(candidates: u32, protocol: VoteProtocolKind) -> ElectionParams {
    let initial_winner = (candidates - 1).min(2);
    let mut baseline_tally = vec![1u64; candidates as usize];
    baseline_tally[initial_winner as usize] = 2;
    ElectionParams {
        candidate_count: candidates,
        supermajority_threshold: 0.70,
        min_participation: 0.70,
        booth_rows: 3,
        booth_cols: 1,
        schedule: EpochSchedule::new(80, 8, 10, 1).unwrap(), // m = 1: every header triggers
        curve: CurveId::Toy,
        ea_public_key: Point::Identity, // filled by the harness
        vdf: VdfParams::new(BigUint::from(59_989u32), 4, 32).unwrap(),
        seed: vec![0xAB, 0xCD],
        baseline_turnout: 4,
        baseline_tally,
        initial_winner,
        main_election: false,
        vote_protocol: protocol,
        assignment_seed: 11,
    }
}

/// Driver-side fixture: authority key, participant chains, and signed-command
/// builders over the toy curve.
struct Harness {
    machine: ElectionMachine,
    curve: CurveParams,
    params: ElectionParams,
    ea_sk: BigUint,
    chains: Vec<WalletChain>,
    /// Current wallet iteration per chain; 0 means the registration key.
    iteration: Vec<u128>,
    next_height: Height,
    rng: StdRng,
}

impl Harness {
    fn new(mut params: ElectionParams, participants: u32) -> Self {
        let curve = params.curve_params();
        let mut rng = StdRng::seed_from_u64(1234);
        let ea_sk = BigUint::from(rng.gen_range(2u64..5000)) % &curve.order;
        params.ea_public_key = sign::public_key(&curve, &ea_sk);
        let chains: Vec<WalletChain> =
            (0..participants).map(|_| WalletChain::generate(&curve, &mut rng)).collect();
        Harness {
            machine: ElectionMachine::new(),
            curve,
            params,
            ea_sk,
            chains,
            iteration: vec![0; participants as usize],
            next_height: 1,
            rng,
        }
    }

    fn setup(&mut self) -> Result<ApplyOutcome, ElectionError> {
        let cmd = Command::Setup { params: self.params.clone() };
        self.machine.apply(&cmd)
    }

    fn sk(&self, chain: usize) -> BigUint {
        let e = self.iteration[chain];
        if e == 0 {
            self.chains[chain].sk0.clone()
        } else {
            self.chains[chain].derive_sk(&self.curve, e).unwrap()
        }
    }

    fn pk(&self, chain: usize) -> Point {
        sign::public_key(&self.curve, &self.sk(chain))
    }

    fn addr(&self, chain: usize) -> Address {
        wallet_address(&self.curve, &self.pk(chain)).unwrap()
    }

    fn registration_cmd(&self, chain: usize, valid: bool) -> Command {
        let address = self.addr(chain);
        let signature =
            sign::sign(&self.curve, &self.ea_sk, &registration_message(&address, valid));
        Command::Registration {
            address,
            public_key: self.pk(chain),
            chain: chain as ChainId,
            valid,
            signature,
        }
    }

    fn register(&mut self, chain: usize, valid: bool) -> Result<ApplyOutcome, ElectionError> {
        let cmd = self.registration_cmd(chain, valid);
        self.machine.apply(&cmd)
    }

    fn blinding_key(&self, chain: usize) -> [u8; 32] {
        let mut key = [0u8; 32];
        key[0] = chain as u8;
        key[1] = self.iteration[chain] as u8;
        key[31] = 0x55;
        key
    }

    fn voting_cmd(&self, chain: usize, choice: CandidateId) -> Command {
        let protocol = self.params.vote_protocol.protocol();
        let blinded = protocol.blind(choice, &self.blinding_key(chain));
        let proof = VoteProof::default();
        let address = self.addr(chain);
        let signature = sign::sign(
            &self.curve,
            &self.sk(chain),
            &voting_message(&address, &blinded, &proof),
        );
        Command::Voting { address, blinded, proof, signature }
    }

    fn vote(&mut self, chain: usize, choice: CandidateId) -> Result<ApplyOutcome, ElectionError> {
        let cmd = self.voting_cmd(chain, choice);
        self.machine.apply(&cmd)
    }

    /// Announce the next wallet address, advancing the chain iteration.
    fn revote(&mut self, chain: usize) -> Result<ApplyOutcome, ElectionError> {
        let current_address = self.addr(chain);
        let signer_sk = self.sk(chain);
        self.iteration[chain] += 1;
        let next_address = self.addr(chain);
        let signature = sign::sign(&self.curve, &signer_sk, &revote_message(&next_address));
        let cmd = Command::Revote { current_address, next_address, signature };
        let out = self.machine.apply(&cmd);
        if out.is_err() {
            self.iteration[chain] -= 1;
        }
        out
    }

    fn submit_opening(&mut self, chain: usize, choice: CandidateId) -> Result<ApplyOutcome, ElectionError> {
        let cmd = Command::SubmitOpening {
            address: self.addr(chain),
            opening: VoteOpening { choice, blinding_key: self.blinding_key(chain) },
        };
        self.machine.apply(&cmd)
    }

    fn mined_header(&mut self) -> BlockHeader {
        let template = BlockHeader {
            version: 2,
            prev_hash: self.rng.gen(),
            merkle_root: self.rng.gen(),
            timestamp: 1_600_000_000,
            nbits: EASY_NBITS,
            nonce: 0,
        };
        mine_test_header(&template, &decode_nbits(EASY_NBITS).unwrap(), 1 << 20).unwrap()
    }

    /// Deposit a header and its certificate, then attempt the tally.
    fn deposit_and_tally(&mut self) -> Result<ApplyOutcome, ElectionError> {
        let header = self.mined_header();
        let height = self.next_height;
        self.next_height += 1;
        self.machine.apply(&Command::BpoAdd {
            header,
            nbits: EASY_NBITS,
            height,
            tip_height: height + CONFIRMATIONS,
        })?;
        let x = vdf::hash_to_group(&header.encode(), &self.params.vdf);
        let certificate = vdf::certify(&x, &self.params.vdf).unwrap();
        self.machine.apply(&Command::VdfAdd { certificate, height })?;
        self.machine.apply(&Command::Tally { height })
    }

    fn state(&self) -> &ElectionState {
        self.machine.state().unwrap()
    }
}

fn tally_result(outcome: ApplyOutcome) -> TallyResult {
    match outcome.effect {
        Effect::Tally(result) => result,
        other => panic!("expected a tally result, got {other:?}"),
    }
}

#[test]
fn setup_validates_and_rejects_reinit() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 2);
    h.setup().unwrap();
    assert_eq!(h.state().winner, 2);
    assert_eq!(h.state().params.booth_count(), 3);
    assert_eq!(h.setup(), Err(ElectionError::AlreadyInitialized));

    let mut bad = test_params(4, VoteProtocolKind::Plaintext);
    bad.supermajority_threshold = 0.4;
    let mut h2 = Harness::new(bad, 1);
    assert!(matches!(h2.setup(), Err(ElectionError::InvalidParams(_))));

    let mut h3 = Harness::new(test_params(2, VoteProtocolKind::Plaintext), 1);
    h3.params.baseline_tally = vec![1, 1, 1];
    assert!(matches!(h3.setup(), Err(ElectionError::InvalidParams(_))));
}

#[test]
fn commands_require_setup() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 1);
    let cmd = h.registration_cmd(0, true);
    assert_eq!(h.machine.apply(&cmd), Err(ElectionError::NotInitialized));
}

#[test]
fn registration_flow_and_forgery() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 2);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    let addr = h.addr(0);
    assert_eq!(h.state().registry[&addr].status, AddressStatus::Valid);
    assert_eq!(h.state().chain_heads[&0], addr);

    // forged authority signature leaves no trace
    let mut cmd = h.registration_cmd(1, true);
    if let Command::Registration { signature, .. } = &mut cmd {
        signature.s = (&signature.s + BigUint::from(1u32)) % &h.curve.order;
    }
    assert_eq!(h.machine.apply(&cmd), Err(ElectionError::BadSignature));
    assert!(!h.state().registry.contains_key(&h.addr(1)));

    // a key that does not hash to the address is rejected
    let mut cmd = h.registration_cmd(1, true);
    if let Command::Registration { public_key, .. } = &mut cmd {
        *public_key = h.pk(0);
    }
    assert_eq!(h.machine.apply(&cmd), Err(ElectionError::AddressMismatch));
}

#[test]
fn registration_invalid_flag_excludes_recorded_vote() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 2);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    h.register(1, true).unwrap();
    h.vote(0, 1).unwrap();
    h.vote(1, 2).unwrap();
    assert_eq!(h.state().votes.len(), 2);

    // the authority invalidates the voted address; its ballot disappears
    h.register(0, false).unwrap();
    let addr = h.addr(0);
    assert_eq!(h.state().registry[&addr].status, AddressStatus::Invalid);
    assert_eq!(h.state().votes.len(), 1);

    let result = tally_result(h.deposit_and_tally().unwrap());
    assert_eq!(result.totals, vec![0, 0, 1, 0]);
    assert_eq!(result.turnout, 1);
}

#[test]
fn voting_happy_path_and_rejections() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 2);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    h.vote(0, 3).unwrap();
    let addr = h.addr(0);
    assert_eq!(h.state().registry[&addr].status, AddressStatus::Voted);
    assert!(h.state().votes.contains_key(&addr));

    // voting twice from the same address is refused: the status moved on
    assert_eq!(h.vote(0, 1), Err(ElectionError::NotValidAddress));

    // out-of-range plaintext choice fails the proof check
    h.register(1, true).unwrap();
    assert_eq!(h.vote(1, 9), Err(ElectionError::BadProof));

    // mangled participant signature
    let mut cmd = h.voting_cmd(1, 1);
    if let Command::Voting { signature, .. } = &mut cmd {
        signature.s = (&signature.s + BigUint::from(1u32)) % &h.curve.order;
    }
    assert_eq!(h.machine.apply(&cmd), Err(ElectionError::BadSignature));
    // unknown address
    let cmd = h.voting_cmd(1, 1);
    if let Command::Voting { mut address, blinded, proof, signature } = cmd {
        address.0[0] ^= 0xFF;
        let cmd = Command::Voting { address, blinded, proof, signature };
        assert_eq!(h.machine.apply(&cmd), Err(ElectionError::NotValidAddress));
    }
}

#[test]
fn deposits_and_their_errors() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 1);
    h.setup().unwrap();
    let header = h.mined_header();

    // immature header: fewer than six confirmations
    assert_eq!(
        h.machine.apply(&Command::BpoAdd { header, nbits: EASY_NBITS, height: 1, tip_height: 5 }),
        Err(ElectionError::ImmatureHeader { height: 1 })
    );
    h.machine
        .apply(&Command::BpoAdd { header, nbits: EASY_NBITS, height: 1, tip_height: 7 })
        .unwrap();

    // heights must strictly increase
    assert_eq!(
        h.machine.apply(&Command::BpoAdd { header, nbits: EASY_NBITS, height: 1, tip_height: 9 }),
        Err(ElectionError::StaleHeight { height: 1 })
    );

    // prover deposits require a stored header
    let x = vdf::hash_to_group(&header.encode(), &h.params.vdf);
    let certificate = vdf::certify(&x, &h.params.vdf).unwrap();
    assert_eq!(
        h.machine.apply(&Command::VdfAdd { certificate: certificate.clone(), height: 5 }),
        Err(ElectionError::UnknownHeight(5))
    );
    h.machine.apply(&Command::VdfAdd { certificate: certificate.clone(), height: 1 }).unwrap();

    // deposits are replaceable: the validator re-verifies at tally time
    let mut tampered = certificate.clone();
    tampered.pi = BigUint::from(1u32);
    h.machine.apply(&Command::VdfAdd { certificate: tampered.clone(), height: 1 }).unwrap();
    assert_eq!(h.state().validator.vdf_deposits[&1], tampered);
    h.machine.apply(&Command::VdfAdd { certificate: certificate.clone(), height: 1 }).unwrap();
    assert_eq!(h.state().validator.vdf_deposits[&1], certificate);

    // tally bookkeeping errors
    assert_eq!(
        h.machine.apply(&Command::Tally { height: 2 }),
        Err(ElectionError::HeightMismatch { requested: 2 })
    );
    let header2 = h.mined_header();
    h.machine
        .apply(&Command::BpoAdd { header: header2, nbits: EASY_NBITS, height: 2, tip_height: 8 })
        .unwrap();
    assert_eq!(
        h.machine.apply(&Command::Tally { height: 2 }),
        Err(ElectionError::MissingDeposit(2))
    );
}

#[test]
fn stride_violation_is_rejected() {
    let mut params = test_params(4, VoteProtocolKind::Plaintext);
    params.schedule = EpochSchedule::new(800_000, 8, 10, 100).unwrap();
    let mut h = Harness::new(params, 1);
    h.setup().unwrap();
    let header = h.mined_header();
    assert_eq!(
        h.machine.apply(&Command::BpoAdd { header, nbits: EASY_NBITS, height: 150, tip_height: 200 }),
        Err(ElectionError::StrideViolation { height: 150, stride: 100 })
    );
    h.machine
        .apply(&Command::BpoAdd { header, nbits: EASY_NBITS, height: 200, tip_height: 300 })
        .unwrap();
}

#[test]
fn tally_totals_are_booth_column_sums() {
    let mut h = Harness::new(test_params(2, VoteProtocolKind::Plaintext), 7);
    h.setup().unwrap();
    for chain in 0..7 {
        h.register(chain, true).unwrap();
    }
    for chain in 0..3 {
        h.vote(chain, 0).unwrap();
    }
    for chain in 3..7 {
        h.vote(chain, 1).unwrap();
    }
    let voted_before = h.state().voted_count();
    let result = tally_result(h.deposit_and_tally().unwrap());
    assert_eq!(result.totals, vec![3, 4]);
    assert_eq!(result.turnout, 7);
    assert_eq!(voted_before, 7);
    // totals are exactly the column sums over booths
    let mut sums = vec![0u64; 2];
    for counts in result.per_booth.values() {
        for (slot, c) in sums.iter_mut().zip(counts) {
            *slot += c;
        }
    }
    assert_eq!(sums, result.totals);
    assert_eq!(result.per_booth.len(), 3);

    // epoch reset: ballots cleared, spent addresses retired
    assert!(h.state().votes.is_empty());
    assert_eq!(h.state().voted_count(), 0);
    assert_eq!(h.state().epoch_index, 1);
}

#[test]
fn tally_not_triggered_keeps_votes() {
    // modulus 2: mine until the extracted residue is nonzero
    let mut params = test_params(4, VoteProtocolKind::Plaintext);
    params.schedule = EpochSchedule::new(160, 8, 10, 1).unwrap();
    let mut h = Harness::new(params, 1);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    h.vote(0, 1).unwrap();

    let target = decode_nbits(EASY_NBITS).unwrap();
    let schedule = h.params.schedule;
    let (header, certificate) = loop {
        let header = h.mined_header();
        let x = vdf::hash_to_group(&header.encode(), &h.params.vdf);
        let cert = vdf::certify(&x, &h.params.vdf).unwrap();
        let verdict =
            trigger::verify_trigger(&cert, &h.params.vdf, &header, &target, &schedule).unwrap();
        if !verdict.triggered {
            break (header, cert);
        }
    };
    let height = 1;
    h.machine
        .apply(&Command::BpoAdd { header, nbits: EASY_NBITS, height, tip_height: height + 6 })
        .unwrap();
    h.machine.apply(&Command::VdfAdd { certificate, height }).unwrap();
    let outcome = h.machine.apply(&Command::Tally { height }).unwrap();
    assert!(matches!(
        outcome.effect,
        Effect::NotTriggered { reason: NotTriggered::Predicate(_), .. }
    ));
    // no state change: the ballot survives for a later attempt
    assert_eq!(h.state().votes.len(), 1);
    assert_eq!(h.state().voted_count(), 1);
    assert_eq!(h.state().epoch_index, 0);
}

#[test]
fn tally_with_foreign_certificate_is_not_triggered() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 1);
    h.setup().unwrap();
    let header = h.mined_header();
    let other = h.mined_header();
    h.machine
        .apply(&Command::BpoAdd { header, nbits: EASY_NBITS, height: 1, tip_height: 7 })
        .unwrap();
    let x = vdf::hash_to_group(&other.encode(), &h.params.vdf);
    let certificate = vdf::certify(&x, &h.params.vdf).unwrap();
    h.machine.apply(&Command::VdfAdd { certificate, height: 1 }).unwrap();
    let outcome = h.machine.apply(&Command::Tally { height: 1 }).unwrap();
    assert!(matches!(
        outcome.effect,
        Effect::NotTriggered { reason: NotTriggered::MismatchedDeposit, .. }
    ));
}

#[test]
fn winner_rule_examples() {
    let params = test_params(4, VoteProtocolKind::Plaintext);
    let mut totals = vec![70u64, 30, 0, 0];
    let mut p = params.clone();
    p.baseline_turnout = 100;
    // supermajority displaces the incumbent
    assert_eq!(apply_winner_rule(&totals, 100, 2, &p), 0);
    // just below the threshold: the previous winner persists
    totals = vec![69, 31, 0, 0];
    assert_eq!(apply_winner_rule(&totals, 100, 2, &p), 2);
    // quorum failure: unanimous support is not enough
    p.baseline_turnout = 200;
    totals = vec![100, 0, 0, 0];
    assert_eq!(apply_winner_rule(&totals, 100, 2, &p), 2);
    // zero turnout never changes anything
    assert_eq!(apply_winner_rule(&[0, 0, 0, 0], 0, 3, &p), 3);

    // main election: plain majority suffices
    p.baseline_turnout = 100;
    p.main_election = true;
    totals = vec![51, 49, 0, 0];
    assert_eq!(apply_winner_rule(&totals, 100, 2, &p), 0);
    // no absolute majority: incumbent persists
    totals = vec![40, 35, 25, 0];
    assert_eq!(apply_winner_rule(&totals, 100, 2, &p), 2);
    // exactly half is not a majority
    totals = vec![50, 50, 0, 0];
    assert_eq!(apply_winner_rule(&totals, 100, 2, &p), 2);
}

#[test]
fn revote_same_interval_links_wallets() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 1);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    let first_addr = h.addr(0);
    h.vote(0, 1).unwrap();

    // the participant changes her mind inside the same interval
    let outcome = h.revote(0).unwrap();
    let second_addr = h.addr(0);
    assert_eq!(
        outcome.notices,
        vec![Notice::LinkageWarning {
            chain: 0,
            previous_address: first_addr,
            next_address: second_addr,
        }]
    );
    assert_eq!(h.state().registry[&first_addr].status, AddressStatus::Invalid);
    assert!(h.state().votes.is_empty());
    assert_eq!(h.state().registry[&second_addr].status, AddressStatus::Pending);

    // the authority validates, and the new ballot counts
    h.register(0, true).unwrap();
    h.vote(0, 2).unwrap();
    let result = tally_result(h.deposit_and_tally().unwrap());
    assert_eq!(result.totals, vec![0, 0, 1, 0]);
}

#[test]
fn revote_across_intervals_is_silent() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 1);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    h.vote(0, 1).unwrap();
    let first_addr = h.addr(0);
    tally_result(h.deposit_and_tally().unwrap());
    assert_eq!(h.state().registry[&first_addr].status, AddressStatus::Invalid);

    // next interval: the spent head still authorizes the next address
    let outcome = h.revote(0).unwrap();
    assert!(outcome.notices.is_empty());
    h.register(0, true).unwrap();
    h.vote(0, 3).unwrap();
    let result = tally_result(h.deposit_and_tally().unwrap());
    assert_eq!(result.totals, vec![0, 0, 0, 1]);
    // the first epoch's record was left untouched by the revote
    assert_eq!(h.state().registry[&first_addr].status, AddressStatus::Invalid);
}

#[test]
fn revote_rejects_non_head_signers() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 2);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    h.revote(0).unwrap();
    h.register(0, true).unwrap();

    // the retired iteration-0 key may not announce further addresses
    let stale_sk = h.chains[0].sk0.clone();
    let stale_addr = wallet_address(&h.curve, &sign::public_key(&h.curve, &stale_sk)).unwrap();
    let next = Address([9u8; 20]);
    let signature = sign::sign(&h.curve, &stale_sk, &revote_message(&next));
    let cmd = Command::Revote { current_address: stale_addr, next_address: next, signature };
    assert_eq!(h.machine.apply(&cmd), Err(ElectionError::BadSignature));

    // an unknown signer is likewise refused
    let cmd = Command::Revote {
        current_address: Address([7u8; 20]),
        next_address: next,
        signature: sign::sign(&h.curve, &stale_sk, &revote_message(&next)),
    };
    assert_eq!(h.machine.apply(&cmd), Err(ElectionError::BadSignature));
}

#[test]
fn commit_reveal_matches_plaintext_totals() {
    let choices = [0u32, 1, 1, 2, 1, 0, 3, 1];
    let mut totals_by_protocol = Vec::new();
    for protocol in [VoteProtocolKind::Plaintext, VoteProtocolKind::CommitReveal] {
        let mut h = Harness::new(test_params(4, protocol), choices.len() as u32);
        h.setup().unwrap();
        for (chain, &choice) in choices.iter().enumerate() {
            h.register(chain, true).unwrap();
            h.vote(chain, choice).unwrap();
        }
        if protocol == VoteProtocolKind::CommitReveal {
            for (chain, &choice) in choices.iter().enumerate() {
                h.submit_opening(chain, choice).unwrap();
            }
        }
        let result = tally_result(h.deposit_and_tally().unwrap());
        assert_eq!(result.turnout, choices.len() as u64);
        totals_by_protocol.push(result.totals);
    }
    assert_eq!(totals_by_protocol[0], totals_by_protocol[1]);
    assert_eq!(totals_by_protocol[0], vec![2, 4, 1, 1]);
}

#[test]
fn commit_reveal_rejects_tampered_stored_ballot() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::CommitReveal), 2);
    h.setup().unwrap();
    for chain in 0..2 {
        h.register(chain, true).unwrap();
        h.vote(chain, 1).unwrap();
        h.submit_opening(chain, 1).unwrap();
    }
    // flip one byte of a stored ballot behind the machine's back
    let victim = h.addr(0);
    let state = h.machine.state_mut().unwrap();
    state.votes.get_mut(&victim).unwrap().0[3] ^= 0x01;

    let result = tally_result(h.deposit_and_tally().unwrap());
    assert_eq!(result.totals, vec![0, 1, 0, 0], "tampered ballot must not count");
}

#[test]
fn openings_only_apply_to_commit_reveal() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 1);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    h.vote(0, 1).unwrap();
    assert!(matches!(h.submit_opening(0, 1), Err(ElectionError::InvalidTransition(_))));

    let mut h = Harness::new(test_params(4, VoteProtocolKind::CommitReveal), 1);
    h.setup().unwrap();
    h.register(0, true).unwrap();
    // opening before voting is premature
    assert_eq!(h.submit_opening(0, 1), Err(ElectionError::NotValidAddress));
    h.vote(0, 1).unwrap();
    assert_eq!(h.submit_opening(0, 9), Err(ElectionError::BadProof));
    h.submit_opening(0, 1).unwrap();
}

#[test]
fn three_epoch_walkthrough_changes_winner_once() {
    // candidate 2 is the incumbent; candidate 0 builds up to a supermajority
    let mut params = test_params(4, VoteProtocolKind::Plaintext);
    params.baseline_turnout = 5;
    let mut h = Harness::new(params, 5);
    h.setup().unwrap();
    for chain in 0..5 {
        h.register(chain, true).unwrap();
    }

    let mut winner_history = Vec::new();
    let epoch_votes: [&[CandidateId]; 3] = [&[0, 0, 2, 2, 1], &[0, 0, 0, 2, 1], &[0, 0, 0, 0, 1]];
    for (epoch, votes) in epoch_votes.iter().enumerate() {
        if epoch > 0 {
            for chain in 0..5 {
                h.revote(chain).unwrap();
                h.register(chain, true).unwrap();
            }
        }
        for (chain, &choice) in votes.iter().enumerate() {
            h.vote(chain, choice).unwrap();
        }
        let result = tally_result(h.deposit_and_tally().unwrap());
        winner_history.push(result.winner);
    }
    // 2/5 then 3/5 fall short of 70%; 4/5 = 80% flips the winner
    assert_eq!(winner_history, vec![2, 2, 0]);
    assert_eq!(h.state().winner, 0);
    assert_eq!(h.state().epoch_index, 3);
}

#[test]
fn identical_command_sequences_hash_identically() {
    let build = || {
        let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 3);
        h.setup().unwrap();
        for chain in 0..3 {
            h.register(chain, true).unwrap();
            h.vote(chain, chain as CandidateId).unwrap();
        }
        tally_result(h.deposit_and_tally().unwrap());
        h.state().state_hash_hex()
    };
    assert_eq!(build(), build());
}

#[test]
fn winner_changes_only_at_tally_events() {
    let mut h = Harness::new(test_params(4, VoteProtocolKind::Plaintext), 3);
    h.setup().unwrap();
    let mut observed = vec![h.state().winner];
    for chain in 0..3 {
        h.register(chain, true).unwrap();
        observed.push(h.state().winner);
        h.vote(chain, 0).unwrap();
        observed.push(h.state().winner);
    }
    assert!(observed.iter().all(|&w| w == 2), "winner drifted between tallies");
    let outcome = h.deposit_and_tally().unwrap();
    assert_eq!(
        outcome.notices,
        vec![Notice::WinnerChanged { from: 2, to: 0, height: 1 }]
    );
    assert_eq!(h.state().winner, 0);
}

/// Bounded exhaustive model check: for three chains and every interleaving of
/// {vote, revote, register} up to depth four, no address ever carries more
/// than one ballot, ballots only hang off voted addresses, and the final
/// forced tally conserves them.
#[test]
fn no_double_counting_across_interleavings() {
    #[derive(Clone, Copy)]
    enum Action {
        Vote,
        Revote,
        Register,
    }
    let actions = [Action::Vote, Action::Revote, Action::Register];
    let chain_count = 3usize;
    let depth = 4usize;

    // precompute per-chain key material for the iterations a run can reach
    let base = Harness::new(test_params(2, VoteProtocolKind::Plaintext), chain_count as u32);
    let curve = base.curve.clone();
    let ea_sk = base.ea_sk.clone();
    let params = base.params.clone();
    let mut sks = Vec::new();
    for chain in 0..chain_count {
        let mut per_iter = vec![base.chains[chain].sk0.clone()];
        for e in 1..=(depth as u128) {
            per_iter.push(base.chains[chain].derive_sk(&curve, e).unwrap());
        }
        sks.push(per_iter);
    }
    let pk = |chain: usize, iter: usize| sign::public_key(&curve, &sks[chain][iter]);
    let addr =
        |chain: usize, iter: usize| wallet_address(&curve, &pk(chain, iter)).unwrap();

    // one pre-mined trigger deposit reused by every run (modulus is 1)
    let vdf_params = params.vdf.clone();
    let mut rng = StdRng::seed_from_u64(4242);
    let template = BlockHeader {
        version: 2,
        prev_hash: rng.gen(),
        merkle_root: rng.gen(),
        timestamp: 1_600_000_000,
        nbits: EASY_NBITS,
        nonce: 0,
    };
    let header = mine_test_header(&template, &decode_nbits(EASY_NBITS).unwrap(), 1 << 20).unwrap();
    let cert = vdf::certify(&vdf::hash_to_group(&header.encode(), &vdf_params), &vdf_params).unwrap();

    let check_invariants = |state: &ElectionState| {
        for voted_addr in state.votes.keys() {
            assert_eq!(state.registry[voted_addr].status, AddressStatus::Voted);
        }
        for chain in 0..chain_count as ChainId {
            let live_votes = state
                .registry
                .iter()
                .filter(|(_, r)| r.chain == chain && r.status == AddressStatus::Voted)
                .count();
            assert!(live_votes <= 1, "chain {chain} holds {live_votes} ballots");
        }
    };

    let mut sequence = vec![0usize; depth];
    let total = (actions.len() * chain_count).pow(depth as u32);
    for seq_index in 0..total {
        let mut rem = seq_index;
        for slot in sequence.iter_mut() {
            *slot = rem % (actions.len() * chain_count);
            rem /= actions.len() * chain_count;
        }

        let mut machine = ElectionMachine::new();
        machine.apply(&Command::Setup { params: params.clone() }).unwrap();
        // iteration in use, and whether a pending revote target exists
        let mut iter = vec![0usize; chain_count];
        let mut pending: Vec<Option<usize>> = vec![None; chain_count];

        for &code in &sequence {
            let chain = code % chain_count;
            let action = actions[code / chain_count];
            let cur = iter[chain];
            let cmd = match action {
                Action::Vote => {
                    let address = addr(chain, cur);
                    let blinded = params.vote_protocol.protocol().blind(0, &[0u8; 32]);
                    let proof = VoteProof::default();
                    let signature = sign::sign(
                        &curve,
                        &sks[chain][cur],
                        &voting_message(&address, &blinded, &proof),
                    );
                    Command::Voting { address, blinded, proof, signature }
                }
                Action::Revote => {
                    let next = pending[chain].unwrap_or(cur + 1);
                    if next > depth {
                        continue;
                    }
                    let signature =
                        sign::sign(&curve, &sks[chain][cur], &revote_message(&addr(chain, next)));
                    let cmd = Command::Revote {
                        current_address: addr(chain, cur),
                        next_address: addr(chain, next),
                        signature,
                    };
                    if machine.apply(&cmd).is_ok() {
                        pending[chain] = Some(next);
                    }
                    check_invariants(machine.state().unwrap());
                    continue;
                }
                Action::Register => {
                    let target = pending[chain].unwrap_or(cur);
                    let address = addr(chain, target);
                    let signature =
                        sign::sign(&curve, &ea_sk, &registration_message(&address, true));
                    let cmd = Command::Registration {
                        address,
                        public_key: pk(chain, target),
                        chain: chain as ChainId,
                        valid: true,
                        signature,
                    };
                    if machine.apply(&cmd).is_ok() && pending[chain] == Some(target) {
                        iter[chain] = target;
                        pending[chain] = None;
                    }
                    check_invariants(machine.state().unwrap());
                    continue;
                }
            };
            let _ = machine.apply(&cmd);
            check_invariants(machine.state().unwrap());
        }

        // force the tally and check conservation
        let voted_before = machine.state().unwrap().voted_count();
        machine
            .apply(&Command::BpoAdd { header, nbits: EASY_NBITS, height: 1, tip_height: 7 })
            .unwrap();
        machine.apply(&Command::VdfAdd { certificate: cert.clone(), height: 1 }).unwrap();
        let outcome = machine.apply(&Command::Tally { height: 1 }).unwrap();
        let result = tally_result(outcome);
        assert_eq!(result.turnout, voted_before, "sequence {seq_index}");
        assert_eq!(result.totals.iter().sum::<u64>(), voted_before);
    }
}
