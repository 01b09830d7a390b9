//! `aov`: command-line surface over the always-on-voting toolkit.
//!
//! Exit codes: 0 on success, 1 when a verification fails (bad proof-of-work,
//! bad certificate, trigger not met, replay divergence), 2 on invalid input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use aov_core::booth_privacy::{self, UnanimityMode};
use aov_core::btc::{check_pow, decode_nbits, pow_hash, BlockHeader};
use aov_core::curve::{CurveId, CurveParams};
use aov_core::scenario::{self, ScenarioError};
use aov_core::sim::{self, AdversaryMode, SimConfig};
use aov_core::trigger::{self, EpochSchedule};
use aov_core::vdf::{self, CertificateRecord, VdfParams};
use aov_core::wallet::{SyncFile, SyncRecord, WalletChain};

#[derive(Parser)]
#[command(name = "aov", version, about = "Always-on-voting toolkit", propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand)]
enum Top {
    /// Bitcoin block-header checks
    Header {
        #[command(subcommand)]
        command: HeaderCmd,
    },
    /// Verifiable delay function operations
    Vdf {
        #[command(subcommand)]
        command: VdfCmd,
    },
    /// Epoch-end trigger checks
    Trigger {
        #[command(subcommand)]
        command: TriggerCmd,
    },
    /// Deterministic wallet derivation
    Wallet {
        #[command(subcommand)]
        command: WalletCmd,
    },
    /// Recommend a booth size for an exposure budget
    BoothSize(BoothSizeArgs),
    /// Emit the booth-unanimity probability curve as CSV
    BoothPmf(BoothPmfArgs),
    /// Simulations: epochs, adversary bias, prover fleet
    Sim {
        #[command(subcommand)]
        command: SimCmd,
    },
    /// Scenario execution and replay
    Election {
        #[command(subcommand)]
        command: ElectionCmd,
    },
}

#[derive(Subcommand)]
enum HeaderCmd {
    /// Validate a header's proof of work against a compact target
    Check {
        /// 160 hex characters, consensus byte order
        #[arg(long)]
        hex: String,
        /// Compact difficulty, e.g. 0x1d00ffff
        #[arg(long)]
        nbits: String,
    },
}

#[derive(Subcommand)]
enum VdfCmd {
    /// Sequentially evaluate y = x^(2^TL) mod n over hashed-in input bytes
    Eval {
        /// Decimal group modulus
        #[arg(long)]
        modulus: String,
        #[arg(long)]
        tl: u64,
        #[arg(long, default_value_t = vdf::DEFAULT_PRIME_BITS)]
        prime_bits: u32,
        /// Input bytes (hex) to hash into the group, e.g. an 80-byte header
        #[arg(long)]
        input: String,
        /// Write the evaluation record here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Produce the proof for an evaluation record
    Prove {
        /// Evaluation record from `aov vdf eval`
        #[arg(long)]
        eval: PathBuf,
        #[arg(long, default_value_t = vdf::DEFAULT_PRIME_BITS)]
        prime_bits: u32,
        /// Write the certificate here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a certificate file {x, y, pi, tl, n}
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = vdf::DEFAULT_PRIME_BITS)]
        prime_bits: u32,
    },
}

#[derive(Subcommand)]
enum TriggerCmd {
    /// Full trigger predicate over a header, certificate, and schedule
    Verify {
        /// 160 hex characters, consensus byte order
        #[arg(long)]
        header: String,
        /// Certificate file {x, y, pi, tl, n}
        #[arg(long)]
        cert: PathBuf,
        /// Schedule file {total_time, ft, block_time, stride}
        #[arg(long)]
        schedule: PathBuf,
        /// Compact target; defaults to the header's own nbits field
        #[arg(long)]
        nbits: Option<String>,
        #[arg(long, default_value_t = vdf::DEFAULT_PRIME_BITS)]
        prime_bits: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Participant,
    Ea,
}

#[derive(Subcommand)]
enum WalletCmd {
    /// Derive the epoch key and address for iteration e
    Derive {
        #[arg(long)]
        e: u128,
        #[arg(long, value_enum)]
        side: Side,
        /// Participant chain file {sk0, hk, g, p} (side = participant)
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Sync file {pk0, hk, g, p} (side = ea)
        #[arg(long)]
        sync: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CurveChoice::Secp256k1)]
        curve: CurveChoice,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveChoice {
    Secp256k1,
    Toy,
}

impl From<CurveChoice> for CurveId {
    fn from(c: CurveChoice) -> CurveId {
        match c {
            CurveChoice::Secp256k1 => CurveId::Secp256k1,
            CurveChoice::Toy => CurveId::Toy,
        }
    }
}

#[derive(Args)]
struct BoothSizeArgs {
    #[arg(long)]
    electorate: u64,
    #[arg(long)]
    p: f64,
    /// Tolerated expected number of unanimous booths
    #[arg(long)]
    bound: f64,
    /// Count winning-side unanimity only, or either side
    #[arg(long, value_enum, default_value_t = ModeChoice::Winning)]
    mode: ModeChoice,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeChoice {
    Winning,
    Either,
}

impl From<ModeChoice> for UnanimityMode {
    fn from(m: ModeChoice) -> UnanimityMode {
        match m {
            ModeChoice::Winning => UnanimityMode::WinningChoice,
            ModeChoice::Either => UnanimityMode::EitherChoice,
        }
    }
}

#[derive(Args)]
struct BoothPmfArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    p: f64,
    /// Output CSV path: rows of x,pmf
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Subcommand)]
enum SimCmd {
    /// Honest epoch-length distribution
    Epochs {
        #[arg(long)]
        config: PathBuf,
        /// Append per-epoch samples as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mining-adversary trigger bias
    Adversary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Prover fleet scheduling
    Provers {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ElectionCmd {
    /// Execute a scenario file, writing artifacts to a directory
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-apply an event log and verify every state hash
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
}

/// Errors carrying the intended process exit code.
enum CliError {
    /// Malformed input: exit 2.
    Invalid(String),
    /// A verification failed: exit 1.
    Verification(String),
}

impl CliError {
    fn invalid(e: impl std::fmt::Display) -> Self {
        CliError::Invalid(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Invalid(msg)) => {
            eprintln!("invalid input: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Top::Header { command } => header_cmd(command),
        Top::Vdf { command } => vdf_cmd(command),
        Top::Trigger { command } => trigger_cmd(command),
        Top::Wallet { command } => wallet_cmd(command),
        Top::BoothSize(args) => booth_size(args),
        Top::BoothPmf(args) => booth_pmf(args),
        Top::Sim { command } => sim_cmd(command),
        Top::Election { command } => election_cmd(command),
    }
}

fn parse_nbits(text: &str) -> Result<u32, CliError> {
    u32::from_str_radix(text.trim_start_matches("0x"), 16)
        .map_err(|e| CliError::Invalid(format!("nbits {text:?}: {e}")))
}

fn parse_decimal(text: &str, what: &str) -> Result<BigUint, CliError> {
    BigUint::parse_bytes(text.as_bytes(), 10)
        .ok_or_else(|| CliError::Invalid(format!("{what} is not a decimal integer: {text:?}")))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&PathBuf>) -> CliResult {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn header_cmd(command: HeaderCmd) -> CliResult {
    match command {
        HeaderCmd::Check { hex: header_hex, nbits } => {
            let header = BlockHeader::from_hex(&header_hex).map_err(CliError::invalid)?;
            let target = decode_nbits(parse_nbits(&nbits)?).map_err(CliError::invalid)?;
            let pass = check_pow(&header, &target);
            let mut display = pow_hash(&header);
            display.reverse();
            emit_json(
                &serde_json::json!({
                    "hash": hex::encode(display),
                    "target": target.value().to_str_radix(10),
                    "difficulty_bits": target.difficulty_bits(),
                    "pass": pass,
                }),
                None,
            )?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Verification("hash is not below the target".into()))
            }
        }
    }
}

/// Evaluation record: a certificate minus its proof.
#[derive(serde::Serialize, serde::Deserialize)]
struct EvalRecord {
    x: String,
    y: String,
    tl: u64,
    n: String,
}

fn vdf_cmd(command: VdfCmd) -> CliResult {
    match command {
        VdfCmd::Eval { modulus, tl, prime_bits, input, out } => {
            let modulus = parse_decimal(&modulus, "modulus")?;
            let params =
                VdfParams::new(modulus.clone(), tl, prime_bits).map_err(CliError::invalid)?;
            let data = hex::decode(input.trim()).map_err(CliError::invalid)?;
            if data.is_empty() {
                return Err(CliError::Invalid("input must be non-empty".into()));
            }
            let x = vdf::hash_to_group(&data, &params);
            let y = vdf::eval(&x, &params);
            emit_json(
                &EvalRecord {
                    x: x.to_str_radix(10),
                    y: y.to_str_radix(10),
                    tl,
                    n: modulus.to_str_radix(10),
                },
                out.as_ref(),
            )
        }
        VdfCmd::Prove { eval, prime_bits, out } => {
            let record: EvalRecord = read_json(&eval)?;
            let modulus = parse_decimal(&record.n, "n")?;
            let params =
                VdfParams::new(modulus.clone(), record.tl, prime_bits).map_err(CliError::invalid)?;
            let x = parse_decimal(&record.x, "x")?;
            let y = parse_decimal(&record.y, "y")?;
            let pi = vdf::prove(&x, &y, &params).map_err(CliError::invalid)?;
            let cert = vdf::VdfCertificate { x, y, pi, tl: record.tl };
            emit_json(&CertificateRecord::new(&cert, &modulus), out.as_ref())
        }
        VdfCmd::Verify { cert, prime_bits } => {
            let record: CertificateRecord = read_json(&cert)?;
            let (certificate, modulus) = record.split().map_err(CliError::invalid)?;
            let params = VdfParams::new(modulus, certificate.tl.max(1), prime_bits)
                .map_err(CliError::invalid)?;
            let (valid, work) = vdf::verify_counted(&certificate, &params);
            emit_json(&serde_json::json!({ "valid": valid, "group_multiplications": work }), None)?;
            if valid {
                Ok(())
            } else {
                Err(CliError::Verification("certificate rejected".into()))
            }
        }
    }
}

fn trigger_cmd(command: TriggerCmd) -> CliResult {
    match command {
        TriggerCmd::Verify { header, cert, schedule, nbits, prime_bits } => {
            let header = BlockHeader::from_hex(&header).map_err(CliError::invalid)?;
            let record: CertificateRecord = read_json(&cert)?;
            let (certificate, modulus) = record.split().map_err(CliError::invalid)?;
            let params = VdfParams::new(modulus, certificate.tl.max(1), prime_bits)
                .map_err(CliError::invalid)?;
            let schedule: EpochSchedule = read_json(&schedule)?;
            schedule.validate().map_err(CliError::invalid)?;
            let compact = match nbits {
                Some(text) => parse_nbits(&text)?,
                None => header.nbits,
            };
            let target = decode_nbits(compact).map_err(CliError::invalid)?;
            let verdict = trigger::verify_trigger(&certificate, &params, &header, &target, &schedule)
                .map_err(CliError::invalid)?;
            emit_json(&verdict, None)?;
            if verdict.triggered {
                Ok(())
            } else {
                Err(CliError::Verification("trigger condition not met".into()))
            }
        }
    }
}

fn wallet_cmd(command: WalletCmd) -> CliResult {
    match command {
        WalletCmd::Derive { e, side, chain, sync, curve } => {
            let curve = CurveParams::from_id(curve.into());
            match side {
                Side::Participant => {
                    let path = chain.ok_or_else(|| {
                        CliError::Invalid("--chain <file> is required for the participant side".into())
                    })?;
                    let chain: WalletChain = read_json(&path)?;
                    let sk = chain.derive_sk(&curve, e).map_err(CliError::invalid)?;
                    let pk = chain.derive_pk(&curve, e).map_err(CliError::invalid)?;
                    let address = chain.derive_address(&curve, e).map_err(CliError::invalid)?;
                    emit_json(
                        &serde_json::json!({
                            "e": e.to_string(),
                            "secret_key": sk.to_str_radix(10),
                            "public_key": pk,
                            "address": address.to_hex(),
                        }),
                        None,
                    )
                }
                Side::Ea => {
                    let path = sync.ok_or_else(|| {
                        CliError::Invalid("--sync <file> is required for the authority side".into())
                    })?;
                    let file: SyncFile = read_json(&path)?;
                    let record = SyncRecord::from_sync(file, &curve).map_err(CliError::invalid)?;
                    let pk = record.derive_pk(&curve, e).map_err(CliError::invalid)?;
                    let address = record.derive_address(&curve, e).map_err(CliError::invalid)?;
                    emit_json(
                        &serde_json::json!({
                            "e": e.to_string(),
                            "public_key": pk,
                            "address": address.to_hex(),
                            "w0": record.w0.to_hex(),
                        }),
                        None,
                    )
                }
            }
        }
    }
}

fn booth_size(args: BoothSizeArgs) -> CliResult {
    let mode: UnanimityMode = args.mode.into();
    if !(0.0..=1.0).contains(&args.p) {
        return Err(CliError::Invalid("p must lie in [0, 1]".into()));
    }
    match booth_privacy::recommend_booth_size(args.electorate, args.p, args.bound, mode) {
        Ok(size) => emit_json(
            &serde_json::json!({
                "booth_size": size,
                "expected_exposed_booths":
                    booth_privacy::expected_exposed_booths(args.electorate, size, args.p, mode),
            }),
            None,
        ),
        Err(e) => Err(CliError::Verification(e.to_string())),
    }
}

fn booth_pmf(args: BoothPmfArgs) -> CliResult {
    if !(0.0..=1.0).contains(&args.p) {
        return Err(CliError::Invalid("p must lie in [0, 1]".into()));
    }
    let curve = booth_privacy::pmf_curve(args.n, args.p);
    let mut csv = String::from("x,pmf\n");
    for (x, pmf) in &curve {
        csv.push_str(&format!("{x},{pmf}\n"));
    }
    std::fs::write(&args.csv, csv)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.csv.display())))?;
    emit_json(
        &serde_json::json!({
            "rows": curve.len(),
            "mass": booth_privacy::curve_mass(&curve),
            "csv": args.csv.display().to_string(),
        }),
        None,
    )
}

fn sim_cmd(command: SimCmd) -> CliResult {
    match command {
        SimCmd::Epochs { config, csv } => {
            let config: SimConfig = read_json(&config)?;
            let samples = sim::run_epoch_sim(&config).map_err(CliError::invalid)?;
            if let Some(path) = csv {
                let mut text = String::from("epoch_index,length_blocks,length_minutes\n");
                for s in &samples {
                    text.push_str(&format!(
                        "{},{},{}\n",
                        s.epoch_index, s.length_blocks, s.length_minutes
                    ));
                }
                std::fs::write(&path, text)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            }
            let stats = sim::summarize(&samples).map_err(CliError::invalid)?;
            emit_json(&stats, None)
        }
        SimCmd::Adversary { config, csv } => {
            let config: SimConfig = read_json(&config)?;
            if config.adversary_mode == AdversaryMode::None {
                return Err(CliError::Invalid("config must set an adversary_mode".into()));
            }
            let report = sim::run_adversary_sim(&config).map_err(CliError::invalid)?;
            if let Some(path) = csv {
                let text = format!(
                    "mode,alpha,modulus,retries,adversary_trigger_rate,honest_trigger_rate,baseline_rate,adversary_epoch_fraction\n{:?},{},{},{},{},{},{},{}\n",
                    report.mode,
                    report.alpha,
                    report.modulus,
                    report.retries,
                    report.adversary_trigger_rate,
                    report.honest_trigger_rate,
                    report.baseline_rate,
                    report.adversary_epoch_fraction
                );
                std::fs::write(&path, text)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            }
            emit_json(&report, None)
        }
        SimCmd::Provers { config, csv } => {
            let config: SimConfig = read_json(&config)?;
            let stats = sim::run_prover_schedule(&config).map_err(CliError::invalid)?;
            if let Some(path) = csv {
                let mut text = String::from("prover,utilization,assignments\n");
                for (i, u) in stats.utilization.iter().enumerate() {
                    text.push_str(&format!(
                        "{},{},{}\n",
                        i + 1,
                        u,
                        stats.table_labels(i).join(" ")
                    ));
                }
                std::fs::write(&path, text)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            }
            emit_json(&stats, None)
        }
    }
}

fn election_cmd(command: ElectionCmd) -> CliResult {
    match command {
        ElectionCmd::Run { scenario, out } => {
            let seed_override = match std::env::var("AOV_SEED") {
                Ok(text) => Some(
                    text.parse::<u64>()
                        .map_err(|e| CliError::Invalid(format!("AOV_SEED: {e}")))?,
                ),
                Err(_) => None,
            };
            let report =
                scenario::run_scenario(&scenario, &out, seed_override).map_err(scenario_error)?;
            emit_json(&report, None)
        }
        ElectionCmd::Replay { log } => match scenario::replay(&log) {
            Ok(hash) => emit_json(&serde_json::json!({ "state_hash": hash }), None),
            Err(e @ ScenarioError::DivergenceAt(_)) => Err(CliError::Verification(e.to_string())),
            Err(e) => Err(CliError::Invalid(e.to_string())),
        },
    }
}

fn scenario_error(e: ScenarioError) -> CliError {
    match e {
        ScenarioError::Election { .. } | ScenarioError::DivergenceAt(_) => {
            CliError::Verification(e.to_string())
        }
        other => CliError::Invalid(other.to_string()),
    }
}
