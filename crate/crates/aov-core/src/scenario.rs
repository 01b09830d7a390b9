//! Scenario loading, deterministic end-to-end election runs, append-only
//! event logging, and replay verification.
//!
//! A scenario file declares the election parameters, the participant count,
//! a header source (a synthetic low-difficulty chain or a fixture file), and
//! per-epoch vote scripts. Running it drives the full flow: registration,
//! voting, per-header oracle and prover deposits, tally attempts, and the
//! winner rule, writing an event log whose entries carry the command, its
//! digest, and the post-state hash.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::btc::{decode_nbits, mine_test_header, pow_hash, BlockHeader};
use crate::curve::{CurveId, CurveParams};
use crate::election::{
    registration_message, revote_message, voting_message, AddressStatus, ApplyOutcome, CandidateId,
    ChainId, Command, Effect, ElectionError, ElectionMachine, ElectionParams, Height, Notice,
    VoteOpening, VoteProof, VoteProtocolKind, CONFIRMATIONS,
};
use crate::sign;
use crate::trigger::{self, EpochSchedule};
use crate::vdf::{self, VdfParams};
use crate::wallet::{Address, WalletChain};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario invalid: {0}")]
    Invalid(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("event {seq} rejected: {source}")]
    Election {
        seq: u64,
        #[source]
        source: ElectionError,
    },
    #[error("replay diverged at event {0}")]
    DivergenceAt(u64),
    #[error("event log line {line}: {message}")]
    BadLog { line: usize, message: String },
}

impl ScenarioError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        ScenarioError::Io { path: path.to_path_buf(), source }
    }
}

/// One scripted ballot: a single participant or an inclusive index range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoteSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[u32; 2]>,
    pub choice: CandidateId,
}

impl VoteSpec {
    fn participants(&self) -> Vec<u32> {
        match (self.participant, self.range) {
            (Some(p), _) => vec![p],
            (None, Some([lo, hi])) => (lo..=hi).collect(),
            (None, None) => Vec::new(),
        }
    }
}

/// Ballots cast at the start of the epoch, and mid-epoch vote changes that
/// exercise the same-interval revote path.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EpochScript {
    #[serde(default)]
    pub votes: Vec<VoteSpec>,
    #[serde(default)]
    pub changes: Vec<VoteSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectionSettings {
    pub candidate_count: u32,
    #[serde(default = "default_supermajority")]
    pub supermajority_threshold: f64,
    #[serde(default = "default_supermajority")]
    pub min_participation: f64,
    pub booth_rows: u32,
    pub booth_cols: u32,
    pub schedule: EpochSchedule,
    pub baseline_turnout: u64,
    pub baseline_tally: Vec<u64>,
    pub initial_winner: CandidateId,
    #[serde(default)]
    pub main_election: bool,
    #[serde(with = "crate::serde_hex_vec", default)]
    pub seed: Vec<u8>,
}

fn default_supermajority() -> f64 {
    0.70
}

/// Group parameters: either an explicit modulus (decimal) or a bit size from
/// which two primes are drawn with the scenario generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VdfSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus_bits: Option<u64>,
    pub tl: u64,
    pub prime_bits: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderSource {
    /// Mine a synthetic chain at the given compact difficulty.
    Mine { nbits: String, blocks: u32 },
    /// Load one 160-hex-character header per line.
    File { path: String },
}

/// Test-fixture fault injection.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Faults {
    /// Sign this participant's registration with a wrong key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forge_ea_registration: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub rng_seed: u64,
    #[serde(default)]
    pub curve: CurveId,
    #[serde(default)]
    pub vote_protocol: VoteProtocolKind,
    pub election: ElectionSettings,
    pub vdf: VdfSettings,
    pub participants: u32,
    pub headers: HeaderSource,
    pub epochs: Vec<EpochScript>,
    #[serde(default)]
    pub faults: Faults,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let k = self.election.candidate_count;
        for (i, epoch) in self.epochs.iter().enumerate() {
            let mut seen = std::collections::BTreeSet::new();
            for spec in epoch.votes.iter().chain(&epoch.changes) {
                let members = spec.participants();
                if members.is_empty() {
                    return Err(ScenarioError::Invalid(format!(
                        "epoch {i}: vote spec names no participant"
                    )));
                }
                for p in members {
                    if p >= self.participants {
                        return Err(ScenarioError::Invalid(format!(
                            "epoch {i}: participant {p} out of range"
                        )));
                    }
                }
                if spec.choice >= k {
                    return Err(ScenarioError::Invalid(format!(
                        "epoch {i}: choice {} out of range", spec.choice
                    )));
                }
            }
            for spec in &epoch.votes {
                for p in spec.participants() {
                    if !seen.insert(p) {
                        return Err(ScenarioError::Invalid(format!(
                            "epoch {i}: participant {p} votes twice in the opening script"
                        )));
                    }
                }
            }
        }
        if self.vdf.modulus.is_none() && self.vdf.modulus_bits.is_none() {
            return Err(ScenarioError::Invalid(
                "vdf needs either a modulus or modulus_bits".into(),
            ));
        }
        if let Some(p) = self.faults.forge_ea_registration {
            if p >= self.participants {
                return Err(ScenarioError::Invalid(format!(
                    "fault names participant {p} out of range"
                )));
            }
        }
        Ok(())
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| {
        ScenarioError::Invalid(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// One event-log line: the accepted command, its digest, and the state hash
/// after applying it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub op: String,
    pub args: serde_json::Value,
    pub args_digest: String,
    pub state_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<serde_json::Value>,
}

fn command_digest(command: &Command) -> String {
    let bytes = serde_json::to_vec(command).expect("commands serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Applies commands to a machine while appending accepted ones to a log file.
struct EventLogRunner {
    machine: ElectionMachine,
    writer: BufWriter<File>,
    seq: u64,
}

impl EventLogRunner {
    fn create(path: &Path) -> Result<Self, ScenarioError> {
        let file = File::create(path).map_err(|e| ScenarioError::io(path, e))?;
        Ok(EventLogRunner { machine: ElectionMachine::new(), writer: BufWriter::new(file), seq: 0 })
    }

    fn apply(&mut self, command: &Command) -> Result<ApplyOutcome, ScenarioError> {
        let outcome = self
            .machine
            .apply(command)
            .map_err(|source| ScenarioError::Election { seq: self.seq, source })?;
        let record = EventRecord {
            seq: self.seq,
            op: command.op_name().to_string(),
            args: serde_json::to_value(command).expect("commands serialize"),
            args_digest: command_digest(command),
            state_hash: self.machine.state_hash_hex().expect("initialized after setup"),
            notices: outcome
                .notices
                .iter()
                .map(|n| serde_json::to_value(n).expect("notices serialize"))
                .collect(),
        };
        let line = serde_json::to_string(&record).expect("records serialize");
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .map_err(|e| ScenarioError::Io { path: PathBuf::from("event log"), source: e })?;
        self.seq += 1;
        Ok(outcome)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochReport {
    pub epoch_index: u64,
    pub triggered_at: Height,
    pub totals: Vec<u64>,
    pub turnout: u64,
    pub winner: CandidateId,
    pub winner_changed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub rng_seed: u64,
    pub participants: u32,
    pub headers_processed: u64,
    pub tally_attempts: u64,
    pub epochs: Vec<EpochReport>,
    pub winner_history: Vec<CandidateId>,
    pub final_winner: CandidateId,
    pub linkage_warnings: u64,
    pub event_count: u64,
    pub final_state_hash: String,
}

/// Driver-side ballot bookkeeping for commit-reveal openings.
struct BallotBook {
    by_address: BTreeMap<Address, (CandidateId, [u8; 32])>,
}

/// Executes a scenario end to end, writing `events.jsonl`, `report.json`,
/// `tallies.csv`, and `state_hash.txt` into the output directory.
pub fn run_scenario(
    scenario_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport, ScenarioError> {
    let scenario = load_scenario(scenario_path)?;
    fs::create_dir_all(out_dir).map_err(|e| ScenarioError::io(out_dir, e))?;
    let seed = seed_override.unwrap_or(scenario.rng_seed);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let curve = CurveParams::from_id(scenario.curve);

    // deterministic key material: authority first, then participant chains
    let ea_sk = loop {
        let bytes: [u8; 32] = rng.gen();
        let candidate = BigUint::from_bytes_be(&bytes) % &curve.order;
        if candidate > BigUint::from(0u32) {
            break candidate;
        }
    };
    let ea_public_key = sign::public_key(&curve, &ea_sk);
    curve.cache_point(&ea_public_key);
    let chains: Vec<WalletChain> =
        (0..scenario.participants).map(|_| WalletChain::generate(&curve, &mut rng)).collect();

    let modulus = match (&scenario.vdf.modulus, scenario.vdf.modulus_bits) {
        (Some(text), _) => BigUint::parse_bytes(text.as_bytes(), 10)
            .ok_or_else(|| ScenarioError::Invalid("modulus is not decimal".into()))?,
        (None, Some(bits)) => vdf::generate_modulus(bits, &mut rng),
        (None, None) => unreachable!("validated"),
    };
    let vdf_params = VdfParams::new(modulus, scenario.vdf.tl, scenario.vdf.prime_bits)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;

    let headers = load_headers(&scenario.headers, scenario_path, &mut rng)?;

    let params = ElectionParams {
        candidate_count: scenario.election.candidate_count,
        supermajority_threshold: scenario.election.supermajority_threshold,
        min_participation: scenario.election.min_participation,
        booth_rows: scenario.election.booth_rows,
        booth_cols: scenario.election.booth_cols,
        schedule: scenario.election.schedule,
        curve: scenario.curve,
        ea_public_key,
        vdf: vdf_params.clone(),
        seed: scenario.election.seed.clone(),
        baseline_turnout: scenario.election.baseline_turnout,
        baseline_tally: scenario.election.baseline_tally.clone(),
        initial_winner: scenario.election.initial_winner,
        main_election: scenario.election.main_election,
        vote_protocol: scenario.vote_protocol,
        assignment_seed: seed,
    };

    let events_path = out_dir.join("events.jsonl");
    let mut runner = EventLogRunner::create(&events_path)?;
    runner.apply(&Command::Setup { params: params.clone() })?;

    let mut driver = Driver {
        curve,
        ea_sk,
        chains,
        iteration: vec![0; scenario.participants as usize],
        key_cache: vec![BTreeMap::new(); scenario.participants as usize],
        ballots: BallotBook { by_address: BTreeMap::new() },
        protocol: scenario.vote_protocol,
        rng,
    };

    // registration phase: every declared participant enrolls her first wallet
    for chain in 0..scenario.participants {
        let forged = scenario.faults.forge_ea_registration == Some(chain);
        let cmd = driver.registration_command(chain as usize, true, forged);
        runner.apply(&cmd)?;
    }

    let mut report_epochs: Vec<EpochReport> = Vec::new();
    let mut winner_history = Vec::new();
    let mut linkage_warnings = 0u64;
    let mut tally_attempts = 0u64;
    let mut headers_processed = 0u64;

    // opening ballots of the first scripted epoch
    let mut script_epoch = 0usize;
    if let Some(epoch) = scenario.epochs.first() {
        linkage_warnings += driver.apply_epoch(&mut runner, epoch)?;
    }

    let stride = scenario.election.schedule.stride;
    let target_by = |nbits: u32| decode_nbits(nbits).expect("mined or fixture header nbits");

    for (index, header) in headers.iter().enumerate() {
        if script_epoch >= scenario.epochs.len() {
            break;
        }
        let height = (index + 1) as Height;
        if stride > 1 && height % stride != 0 {
            continue; // the oracle only relays every stride-th header
        }
        runner.apply(&Command::BpoAdd {
            header: *header,
            nbits: header.nbits,
            height,
            tip_height: height + CONFIRMATIONS,
        })?;
        let x = vdf::hash_to_group(&header.encode(), &vdf_params);
        let certificate = vdf::certify(&x, &vdf_params)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        runner.apply(&Command::VdfAdd { certificate: certificate.clone(), height })?;
        headers_processed += 1;

        // the trigger predicate is public: reveal openings only when the
        // epoch actually ends
        let verdict = trigger::verify_trigger(
            &certificate,
            &vdf_params,
            header,
            &target_by(header.nbits),
            &scenario.election.schedule,
        )
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if verdict.triggered && scenario.vote_protocol.protocol().needs_openings() {
            driver.submit_openings(&mut runner)?;
        }

        tally_attempts += 1;
        let outcome = runner.apply(&Command::Tally { height })?;
        if let Effect::Tally(result) = outcome.effect {
            winner_history.push(result.winner);
            report_epochs.push(EpochReport {
                epoch_index: result.epoch_index,
                triggered_at: result.triggered_at,
                totals: result.totals.clone(),
                turnout: result.turnout,
                winner: result.winner,
                winner_changed: result.winner_changed,
            });
            script_epoch += 1;
            if let Some(epoch) = scenario.epochs.get(script_epoch) {
                linkage_warnings += driver.apply_epoch(&mut runner, epoch)?;
            }
        }
    }

    if script_epoch < scenario.epochs.len() {
        return Err(ScenarioError::Invalid(format!(
            "header chain exhausted after {script_epoch} of {} scripted epochs; supply more blocks",
            scenario.epochs.len()
        )));
    }

    runner.writer.flush().map_err(|e| ScenarioError::io(&events_path, e))?;
    let state = runner.machine.state().expect("initialized");
    let report = RunReport {
        name: scenario.name.clone(),
        rng_seed: seed,
        participants: scenario.participants,
        headers_processed,
        tally_attempts,
        epochs: report_epochs,
        winner_history,
        final_winner: state.winner,
        linkage_warnings,
        event_count: runner.seq,
        final_state_hash: state.state_hash_hex(),
    };
    write_artifacts(out_dir, &report)?;
    Ok(report)
}

fn write_artifacts(out_dir: &Path, report: &RunReport) -> Result<(), ScenarioError> {
    let report_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(&report_path, json).map_err(|e| ScenarioError::io(&report_path, e))?;

    let hash_path = out_dir.join("state_hash.txt");
    fs::write(&hash_path, format!("{}\n", report.final_state_hash))
        .map_err(|e| ScenarioError::io(&hash_path, e))?;

    let csv_path = out_dir.join("tallies.csv");
    let mut csv = String::from("epoch_index,triggered_at,turnout,winner,winner_changed,totals\n");
    for epoch in &report.epochs {
        let totals = epoch
            .totals
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(";");
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            epoch.epoch_index,
            epoch.triggered_at,
            epoch.turnout,
            epoch.winner,
            epoch.winner_changed,
            totals
        ));
    }
    fs::write(&csv_path, csv).map_err(|e| ScenarioError::io(&csv_path, e))?;
    Ok(())
}

fn load_headers(
    source: &HeaderSource,
    scenario_path: &Path,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<BlockHeader>, ScenarioError> {
    match source {
        HeaderSource::Mine { nbits, blocks } => {
            let raw = nbits.trim_start_matches("0x");
            let nbits = u32::from_str_radix(raw, 16)
                .map_err(|e| ScenarioError::Invalid(format!("bad nbits: {e}")))?;
            let target =
                decode_nbits(nbits).map_err(|e| ScenarioError::Invalid(format!("bad nbits: {e}")))?;
            let mut headers = Vec::with_capacity(*blocks as usize);
            let mut prev = [0u8; 32];
            for i in 0..*blocks {
                let template = BlockHeader {
                    version: 0x2000_0000,
                    prev_hash: prev,
                    merkle_root: rng.gen(),
                    timestamp: 1_600_000_000 + 600 * i,
                    nbits,
                    nonce: 0,
                };
                let mined = mine_test_header(&template, &target, 1 << 24)
                    .map_err(|e| ScenarioError::Invalid(format!("mining failed: {e}")))?;
                prev = pow_hash(&mined);
                headers.push(mined);
            }
            Ok(headers)
        }
        HeaderSource::File { path } => {
            let resolved = scenario_path.parent().unwrap_or(Path::new(".")).join(path);
            let file = File::open(&resolved).map_err(|e| ScenarioError::io(&resolved, e))?;
            let mut headers = Vec::new();
            for (line_no, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| ScenarioError::io(&resolved, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let header = BlockHeader::from_hex(&line).map_err(|e| {
                    ScenarioError::Invalid(format!(
                        "{}:{}: {e}",
                        resolved.display(),
                        line_no + 1
                    ))
                })?;
                headers.push(header);
            }
            Ok(headers)
        }
    }
}

/// Wallet-side automation: derives keys, signs commands, and remembers which
/// ballot each address carries so openings can be revealed later.
struct Driver {
    curve: CurveParams,
    ea_sk: BigUint,
    chains: Vec<WalletChain>,
    iteration: Vec<u128>,
    key_cache: Vec<BTreeMap<u128, ChainKeys>>,
    ballots: BallotBook,
    protocol: VoteProtocolKind,
    rng: ChaCha20Rng,
}

#[derive(Clone)]
struct ChainKeys {
    sk: BigUint,
    pk: crate::curve::Point,
    address: Address,
}

impl Driver {
    /// Current key material for a chain, derived once per iteration.
    fn keys(&mut self, chain: usize) -> ChainKeys {
        let e = self.iteration[chain];
        if let Some(keys) = self.key_cache[chain].get(&e) {
            return keys.clone();
        }
        let sk = if e == 0 {
            self.chains[chain].sk0.clone()
        } else {
            self.chains[chain].derive_sk(&self.curve, e).expect("iteration in range")
        };
        let pk = sign::public_key(&self.curve, &sk);
        let address = crate::wallet::wallet_address(&self.curve, &pk)
            .expect("derived keys are never the identity");
        let keys = ChainKeys { sk, pk, address };
        self.key_cache[chain].insert(e, keys.clone());
        keys
    }

    fn sk(&mut self, chain: usize) -> BigUint {
        self.keys(chain).sk
    }

    fn address(&mut self, chain: usize) -> Address {
        self.keys(chain).address
    }

    fn registration_command(&mut self, chain: usize, valid: bool, forged: bool) -> Command {
        let keys = self.keys(chain);
        let msg = registration_message(&keys.address, valid);
        let key = if forged { &keys.sk + BigUint::from(1u32) } else { self.ea_sk.clone() };
        Command::Registration {
            address: keys.address,
            public_key: keys.pk,
            chain: chain as ChainId,
            valid,
            signature: sign::sign(&self.curve, &key, &msg),
        }
    }

    /// Casts one ballot, rotating to a fresh wallet first when the current
    /// one is spent or retired.
    fn cast(
        &mut self,
        runner: &mut EventLogRunner,
        chain: usize,
        choice: CandidateId,
    ) -> Result<u64, ScenarioError> {
        let mut warnings = 0u64;
        let state = runner.machine.state().expect("initialized");
        let needs_fresh_wallet = match state.registry.get(&self.address(chain)) {
            Some(record) => record.status != AddressStatus::Valid,
            None => true,
        };
        if needs_fresh_wallet {
            let current = self.address(chain);
            let signer_sk = self.sk(chain);
            self.iteration[chain] += 1;
            let next = self.address(chain);
            let outcome = runner.apply(&Command::Revote {
                current_address: current,
                next_address: next,
                signature: sign::sign(&self.curve, &signer_sk, &revote_message(&next)),
            })?;
            warnings += outcome
                .notices
                .iter()
                .filter(|n| matches!(n, Notice::LinkageWarning { .. }))
                .count() as u64;
            let cmd = self.registration_command(chain, true, false);
            runner.apply(&cmd)?;
        }

        let blinding_key: [u8; 32] = self.rng.gen();
        let blinded = self.protocol.protocol().blind(choice, &blinding_key);
        let proof = VoteProof::default();
        let keys = self.keys(chain);
        let signature = sign::sign(
            &self.curve,
            &keys.sk,
            &voting_message(&keys.address, &blinded, &proof),
        );
        runner.apply(&Command::Voting { address: keys.address, blinded, proof, signature })?;
        self.ballots.by_address.insert(keys.address, (choice, blinding_key));
        Ok(warnings)
    }

    fn apply_epoch(
        &mut self,
        runner: &mut EventLogRunner,
        epoch: &EpochScript,
    ) -> Result<u64, ScenarioError> {
        let mut warnings = 0u64;
        for spec in &epoch.votes {
            for p in spec.participants() {
                warnings += self.cast(runner, p as usize, spec.choice)?;
            }
        }
        for spec in &epoch.changes {
            for p in spec.participants() {
                warnings += self.cast(runner, p as usize, spec.choice)?;
            }
        }
        Ok(warnings)
    }

    /// Reveals the opening for every currently recorded ballot.
    fn submit_openings(&mut self, runner: &mut EventLogRunner) -> Result<(), ScenarioError> {
        let voted: Vec<Address> = runner
            .machine
            .state()
            .expect("initialized")
            .votes
            .keys()
            .copied()
            .collect();
        for address in voted {
            let (choice, blinding_key) = self.ballots.by_address[&address];
            runner.apply(&Command::SubmitOpening {
                address,
                opening: VoteOpening { choice, blinding_key },
            })?;
        }
        Ok(())
    }
}

/// Re-applies a recorded event log against a fresh machine, checking every
/// entry's digest and state hash. Returns the final state hash; a truncated
/// log yields the hash of its consistent prefix.
pub fn replay(log_path: &Path) -> Result<String, ScenarioError> {
    let file = File::open(log_path).map_err(|e| ScenarioError::io(log_path, e))?;
    let mut machine = ElectionMachine::new();
    let mut last_hash = String::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ScenarioError::io(log_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(&line).map_err(|e| {
            ScenarioError::BadLog { line: line_no + 1, message: e.to_string() }
        })?;
        if record.seq != line_no as u64 {
            return Err(ScenarioError::DivergenceAt(record.seq));
        }
        let command: Command = serde_json::from_value(record.args.clone())
            .map_err(|e| ScenarioError::BadLog { line: line_no + 1, message: e.to_string() })?;
        if command_digest(&command) != record.args_digest || command.op_name() != record.op {
            return Err(ScenarioError::DivergenceAt(record.seq));
        }
        if machine.apply(&command).is_err() {
            return Err(ScenarioError::DivergenceAt(record.seq));
        }
        let hash = machine.state_hash_hex().expect("setup is the first event");
        if hash != record.state_hash {
            return Err(ScenarioError::DivergenceAt(record.seq));
        }
        last_hash = hash;
    }
    if last_hash.is_empty() {
        return Err(ScenarioError::BadLog { line: 0, message: "log is empty".into() });
    }
    Ok(last_hash)
}

/// Count of events in a log file, for completeness checks.
pub fn count_events(log_path: &Path) -> Result<u64, ScenarioError> {
    let file = File::open(log_path).map_err(|e| ScenarioError::io(log_path, e))?;
    Ok(BufReader::new(file).lines().filter(|l| !l.as_ref().map(|s| s.trim().is_empty()).unwrap_or(true)).count() as u64)
}
