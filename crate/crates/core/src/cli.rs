//! Command-line surface: each experiment as a reproducible batch job.
//!
//! Every run prints one pretty-printed JSON document to stdout and can
//! mirror it to `--output`; identical configuration and seed reproduce the
//! bytes exactly. Failures print a machine-readable record to stderr and
//! exit 2 for configuration problems, 1 for runtime errors.

use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::groveropt::{
    analytic_success_probability, default_budget, durr_hoyer_min_with, encrypted_grover,
    grover_search, optimal_iterations, two_peak_demo_circuit, IterationRule, ValueTable,
};
use crate::keyledger::{run_ledger, TGateMode};
use crate::kmeans::{parse_points_csv, run_kmeans, KmeansConfig, PipelineMode};
use crate::protocol::{audit, run_delegated, SessionConfig};
use crate::qotp::KeySet;
use crate::statevector::{parse_bitstring, sample_shots, Circuit, GateOp, PureState};
use crate::swaptest::{
    build_swaptest, similarity_analytic, similarity_encrypted, SimilarityEstimate,
};

#[derive(Debug, Parser)]
#[command(
    name = "qcloudsim",
    version,
    about = "Delegated quantum computation under the one-time pad, on a desk-scale simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the similarity of two prepared registers.
    Swaptest(SwaptestArgs),
    /// Amplify a marked set and sample the index register.
    Grover(GroverArgs),
    /// Threshold-descent minimum search over a value table.
    Minfind(MinfindArgs),
    /// Track pad keys through a circuit and export the ledger.
    Ledger(LedgerArgs),
    /// Cluster a dataset with quantum assignment plumbing.
    Kmeans(KmeansArgs),
    /// Run one delegated session end to end and audit the transcript.
    ProtocolDemo(ProtocolDemoArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Measurement shots.
    #[arg(long, default_value_t = 8192)]
    pub shots: u64,
    /// Seed for every random choice in the run.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Per-bit readout flip probability applied to the reported counts.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Mirror the JSON document to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SwaptestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Preparation circuit JSON for the first register (default |1>).
    #[arg(long)]
    pub state_a: Option<PathBuf>,
    /// Preparation circuit JSON for the second register (default |0>).
    #[arg(long)]
    pub state_b: Option<PathBuf>,
    /// Run the comparison through the delegation protocol.
    #[arg(long)]
    pub encrypted: bool,
    /// Register keys, inline like '{1,1},{0,0}' or a JSON file path.
    #[arg(long)]
    pub keys: Option<String>,
    /// T-gate handling: fresh, same-key, or algebraic.
    #[arg(long, default_value = "fresh")]
    pub t_mode: String,
}

#[derive(Debug, Args)]
pub struct GroverArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Marked bitstrings, comma separated: 000,111
    #[arg(long)]
    pub marked: String,
    /// Oracle-diffusion rounds; default is the standard count for the set.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Print the search circuit as JSON instead of running it.
    #[arg(long)]
    pub emit_circuit: bool,
    /// Run the search on an encrypted register.
    #[arg(long)]
    pub encrypted: bool,
    /// Register keys, inline like '{1,1},{0,1},{0,1}' or a JSON file path.
    #[arg(long)]
    pub keys: Option<String>,
    /// T-gate handling: fresh, same-key, or algebraic.
    #[arg(long, default_value = "fresh")]
    pub t_mode: String,
}

#[derive(Debug, Args)]
pub struct MinfindArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Value table JSON file.
    #[arg(long)]
    pub table: PathBuf,
    /// Search rounds; default ceil(sqrt(table size)).
    #[arg(long)]
    pub budget: Option<usize>,
    /// Draw per-round amplification counts at random instead of sizing
    /// them from the marked-set cardinality.
    #[arg(long)]
    pub randomized_iterations: bool,
}

#[derive(Debug, Args)]
pub struct LedgerArgs {
    /// Circuit JSON file to track keys through.
    #[arg(long)]
    pub circuit: PathBuf,
    /// Initial keys, inline like '{1,1},{0,1},{0,1}' or a JSON file path;
    /// defaults to all-zero keys.
    #[arg(long)]
    pub keys: Option<String>,
    /// T-gate handling: fresh, same-key, or algebraic.
    #[arg(long, default_value = "fresh")]
    pub t_mode: String,
    /// Also write the step table as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Seed for fresh re-keying draws.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Mirror the JSON document to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KmeansArgs {
    /// Dataset CSV, one point per row.
    #[arg(long)]
    pub data: PathBuf,
    /// Run configuration JSON; flags below override individual fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of clusters (required unless --config provides k).
    #[arg(long)]
    pub k: Option<usize>,
    /// Assignment mode: exact, sampled, or encrypted.
    #[arg(long)]
    pub mode: Option<String>,
    /// Distance quantization levels.
    #[arg(long)]
    pub levels: Option<u64>,
    /// Convergence threshold on centroid displacement.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// T-gate handling for encrypted assignment.
    #[arg(long)]
    pub t_mode: Option<String>,
    /// Measurement shots for sampled and encrypted assignment.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Seed for every random choice in the run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mirror the JSON document to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProtocolDemoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Circuit JSON file to delegate; defaults to the built-in three-qubit
    /// two-peak search.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Initial keys, inline or a JSON file path; default drawn from the seed.
    #[arg(long)]
    pub keys: Option<String>,
    /// T-gate handling: fresh, same-key, or algebraic.
    #[arg(long, default_value = "fresh")]
    pub t_mode: String,
    /// Save the message transcript as JSON lines.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

/// Configuration problems exit 2; failures during the run exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("{}", json!({ "kind": "usage", "error": msg }));
            2
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("{}", json!({ "kind": "runtime", "error": err.to_string() }));
            1
        }
    }
}

fn dispatch(command: Command) -> std::result::Result<(), CliError> {
    match command {
        Command::Swaptest(args) => swaptest_job(args),
        Command::Grover(args) => grover_job(args),
        Command::Minfind(args) => minfind_job(args),
        Command::Ledger(args) => ledger_job(args),
        Command::Kmeans(args) => kmeans_job(args),
        Command::ProtocolDemo(args) => protocol_demo_job(args),
    }
}

fn emit(doc: &serde_json::Value, output: Option<&Path>) -> Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(doc)?);
    if let Some(path) = output {
        fs::write(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn parse_t_mode(s: &str) -> std::result::Result<TGateMode, CliError> {
    TGateMode::from_str(s)
        .map_err(|_| usage(format!("--t-mode {s:?}: expected fresh, same-key, or algebraic")))
}

fn parse_keys_arg(arg: &str) -> std::result::Result<KeySet, CliError> {
    if let Ok(keys) = KeySet::parse_inline(arg) {
        return Ok(keys);
    }
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(Error::from)?;
        return serde_json::from_str(&text)
            .map_err(|e| usage(format!("keys file {arg:?}: {e}")));
    }
    Err(usage(format!(
        "--keys {arg:?} is neither inline pairs like '{{1,1}},{{0,1}}' nor an existing file"
    )))
}

fn keys_or_random(
    arg: &Option<String>,
    qubits: usize,
    seed: u64,
) -> std::result::Result<KeySet, CliError> {
    match arg {
        Some(text) => {
            let keys = parse_keys_arg(text)?;
            if keys.len() != qubits {
                return Err(usage(format!(
                    "{} key pairs for a {qubits}-qubit register",
                    keys.len()
                )));
            }
            Ok(keys)
        }
        None => {
            // A dedicated stream keeps auto-drawn keys stable as other
            // seeded draws come and go.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(100);
            Ok(KeySet::random(qubits, &mut rng))
        }
    }
}

fn load_circuit(path: &Path) -> std::result::Result<Circuit, CliError> {
    let text = fs::read_to_string(path).map_err(Error::from)?;
    let circuit = Circuit::from_json(&text)
        .map_err(|e| usage(format!("circuit file {}: {e}", path.display())))?;
    circuit
        .validate()
        .map_err(|e| usage(format!("circuit file {}: {e}", path.display())))?;
    Ok(circuit)
}

fn load_prep(path: &Option<PathBuf>, default: Circuit) -> std::result::Result<Circuit, CliError> {
    match path {
        Some(p) => load_circuit(p),
        None => Ok(default),
    }
}

fn check_noise(noise: f64) -> std::result::Result<(), CliError> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(usage(format!("--noise {noise} is not a probability")));
    }
    Ok(())
}

fn circuit_value(circuit: &Circuit) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(circuit)?)
}

fn swaptest_job(args: SwaptestArgs) -> std::result::Result<(), CliError> {
    check_noise(args.common.noise)?;
    let t_mode = parse_t_mode(&args.t_mode)?;
    let mut one = Circuit::new(1);
    one.push(GateOp::X(0));
    let prep_a = load_prep(&args.state_a, one)?;
    let prep_b = load_prep(&args.state_b, Circuit::new(1))?;
    if prep_a.qubits != prep_b.qubits {
        return Err(usage(format!(
            "register widths differ: {} vs {}",
            prep_a.qubits, prep_b.qubits
        )));
    }
    let shots = args.common.shots;
    let seed = args.common.seed;
    let analytic = similarity_analytic(&prep_a, &prep_b)?;

    let doc = if args.encrypted {
        let keys = keys_or_random(&args.keys, prep_a.qubits, seed)?;
        let cfg = SessionConfig {
            mode: t_mode,
            shots,
            seed,
        };
        let run = similarity_encrypted(&prep_a, &prep_b, &keys, &cfg)?;
        let mut decrypted = run.session.decrypted.clone();
        let estimate = if args.common.noise > 0.0 {
            let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
            noise_rng.set_stream(101);
            decrypted = decrypted.with_bitflip_noise(args.common.noise, &mut noise_rng)?;
            SimilarityEstimate::from_counts(decrypted.bit_count(0, 0), decrypted.shots)?
        } else {
            run.estimate
        };
        json!({
            "experiment": "swaptest",
            "encrypted": true,
            "t_mode": t_mode.name(),
            "shots": shots,
            "seed": seed,
            "noise": args.common.noise,
            "register_keys": keys,
            "final_keys": run.session.final_keys,
            "estimate": estimate,
            "analytic": analytic,
            "session_analytic_p0": run.analytic_p0,
            "ciphertext_counts": run.session.ciphertext,
            "decrypted_counts": decrypted,
        })
    } else {
        let circuit = build_swaptest(&prep_a, &prep_b)?;
        let mut state = PureState::<f64>::zero(circuit.qubits)?;
        state.run(&circuit)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hist = sample_shots(&state, shots, &mut rng);
        if args.common.noise > 0.0 {
            hist = hist.with_bitflip_noise(args.common.noise, &mut rng)?;
        }
        let estimate = SimilarityEstimate::from_counts(hist.bit_count(0, 0), hist.shots)?;
        json!({
            "experiment": "swaptest",
            "encrypted": false,
            "shots": shots,
            "seed": seed,
            "noise": args.common.noise,
            "estimate": estimate,
            "analytic": analytic,
            "counts": hist,
        })
    };
    emit(&doc, args.common.output.as_deref())?;
    Ok(())
}

fn parse_marked(spec: &str) -> std::result::Result<(usize, Vec<usize>), CliError> {
    let strings: Vec<&str> = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if strings.is_empty() {
        return Err(usage("--marked needs at least one bitstring"));
    }
    let m = strings[0].len();
    if m == 0 || strings.iter().any(|s| s.len() != m) {
        return Err(usage("--marked bitstrings must share one nonzero length"));
    }
    let indices = strings
        .iter()
        .map(|s| parse_bitstring(s).map(|i| i as usize))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| usage(format!("--marked: {e}")))?;
    Ok((m, indices))
}

fn grover_job(args: GroverArgs) -> std::result::Result<(), CliError> {
    check_noise(args.common.noise)?;
    let t_mode = parse_t_mode(&args.t_mode)?;
    let (index_bits, marked) = parse_marked(&args.marked)?;
    let n = 1usize << index_bits;
    if marked.len() >= n {
        return Err(usage("--marked covers the whole register"));
    }
    let iterations = args
        .iterations
        .unwrap_or_else(|| optimal_iterations(n, marked.len()));
    let shots = args.common.shots;
    let seed = args.common.seed;

    if args.emit_circuit {
        let circuit = crate::groveropt::grover_circuit(index_bits, &marked, iterations)?;
        let doc = circuit_value(&circuit)?;
        emit(&doc, args.common.output.as_deref())?;
        return Ok(());
    }

    let analytic = analytic_success_probability(n, marked.len(), iterations);
    let doc = if args.encrypted {
        let keys = keys_or_random(&args.keys, index_bits, seed)?;
        let cfg = SessionConfig {
            mode: t_mode,
            shots,
            seed,
        };
        let run = encrypted_grover(index_bits, &marked, iterations, &keys, &cfg)?;
        let mut decrypted = run.decrypted_register.clone();
        if args.common.noise > 0.0 {
            let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
            noise_rng.set_stream(101);
            decrypted = decrypted.with_bitflip_noise(args.common.noise, &mut noise_rng)?;
        }
        json!({
            "experiment": "grover",
            "encrypted": true,
            "t_mode": t_mode.name(),
            "index_bits": index_bits,
            "marked": marked,
            "iterations": iterations,
            "shots": shots,
            "seed": seed,
            "noise": args.common.noise,
            "register_keys": keys,
            "final_keys": run.session.final_keys,
            "analytic_success": analytic,
            "ciphertext_counts": run.ciphertext_register,
            "decrypted_counts": decrypted,
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hist = grover_search(index_bits, &marked, iterations, shots, &mut rng)?;
        if args.common.noise > 0.0 {
            hist = hist.with_bitflip_noise(args.common.noise, &mut rng)?;
        }
        json!({
            "experiment": "grover",
            "encrypted": false,
            "index_bits": index_bits,
            "marked": marked,
            "iterations": iterations,
            "shots": shots,
            "seed": seed,
            "noise": args.common.noise,
            "analytic_success": analytic,
            "counts": hist,
        })
    };
    emit(&doc, args.common.output.as_deref())?;
    Ok(())
}

fn minfind_job(args: MinfindArgs) -> std::result::Result<(), CliError> {
    let text = fs::read_to_string(&args.table).map_err(Error::from)?;
    let table = ValueTable::from_json(&text)
        .map_err(|e| usage(format!("table file {}: {e}", args.table.display())))?;
    let budget = args.budget.unwrap_or_else(|| default_budget(table.index_bits()));
    if budget == 0 {
        return Err(usage("--budget must be at least 1"));
    }
    let rule = if args.randomized_iterations {
        IterationRule::Randomized
    } else {
        IterationRule::FromMarkedCount
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);
    let result = durr_hoyer_min_with(&table, budget, args.common.shots, rule, &mut rng)?;
    let (best_index, best_value) = table.min_entry();
    let doc = json!({
        "experiment": "minfind",
        "index_bits": table.index_bits(),
        "budget": budget,
        "shots_per_round": args.common.shots,
        "seed": args.common.seed,
        "randomized_iterations": args.randomized_iterations,
        "result": result,
        "table_minimum": { "index": best_index, "value": best_value },
    });
    emit(&doc, args.common.output.as_deref())?;
    Ok(())
}

fn ledger_job(args: LedgerArgs) -> std::result::Result<(), CliError> {
    let t_mode = parse_t_mode(&args.t_mode)?;
    let circuit = load_circuit(&args.circuit)?;
    let eval = circuit.decomposed_for_eval()?;
    let keys = match &args.keys {
        Some(text) => {
            let keys = parse_keys_arg(text)?;
            if keys.len() != eval.qubits {
                return Err(usage(format!(
                    "{} key pairs for a {}-qubit circuit",
                    keys.len(),
                    eval.qubits
                )));
            }
            keys
        }
        None => KeySet::trivial(eval.qubits),
    };
    // Stream 1 matches the trusted party's draws inside a delegated
    // session, so the same circuit, keys, seed, and mode reproduce the
    // session's ledger exactly.
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    rng.set_stream(1);
    let ledger = run_ledger(&eval, &keys, t_mode, &mut rng)?;
    let mut csv = Vec::new();
    ledger.to_csv(&mut csv)?;
    let csv = String::from_utf8(csv).expect("csv is utf-8");
    if let Some(path) = &args.csv {
        fs::write(path, &csv).map_err(Error::from)?;
    }
    let doc = json!({
        "experiment": "ledger",
        "t_mode": t_mode.name(),
        "seed": args.seed,
        "steps": ledger.entries.len(),
        "s_corrections": ledger.correction_count(),
        "initial_keys": ledger.initial,
        "final_keys": ledger.final_keys(),
        "final_a_bits": ledger.final_keys().a_bits(),
        "csv": csv,
    });
    emit(&doc, args.output.as_deref())?;
    Ok(())
}

fn kmeans_job(args: KmeansArgs) -> std::result::Result<(), CliError> {
    let text = fs::read_to_string(&args.data).map_err(Error::from)?;
    let points = parse_points_csv(&text)?;

    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(Error::from)?;
            serde_json::from_str::<KmeansConfig>(&text)
                .map_err(|e| usage(format!("config file {}: {e}", path.display())))?
        }
        None => {
            let k = args
                .k
                .ok_or_else(|| usage("provide --k or a --config file with k"))?;
            KmeansConfig::new(k)
        }
    };
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(mode) = &args.mode {
        cfg.mode = PipelineMode::from_str(mode)
            .map_err(|_| usage(format!("--mode {mode:?}: expected exact, sampled, or encrypted")))?;
    }
    if let Some(levels) = args.levels {
        cfg.levels = levels;
    }
    if let Some(tau) = args.tau {
        cfg.tau = tau;
    }
    if let Some(max_iters) = args.max_iters {
        cfg.max_iters = max_iters;
    }
    if let Some(t_mode) = &args.t_mode {
        cfg.t_mode = parse_t_mode(t_mode)?;
    }
    if let Some(shots) = args.shots {
        cfg.shots = shots;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    let run = run_kmeans(&points, &cfg)?;
    let doc = json!({
        "experiment": "kmeans",
        "points": points.len(),
        "dimension": points[0].dim(),
        "config": cfg,
        "run": run,
    });
    emit(&doc, args.output.as_deref())?;
    Ok(())
}

fn protocol_demo_job(args: ProtocolDemoArgs) -> std::result::Result<(), CliError> {
    let t_mode = parse_t_mode(&args.t_mode)?;
    let circuit = match &args.circuit {
        Some(path) => load_circuit(path)?,
        None => two_peak_demo_circuit(),
    };
    let keys = keys_or_random(&args.keys, circuit.qubits, args.common.seed)?;
    let cfg = SessionConfig {
        mode: t_mode,
        shots: args.common.shots,
        seed: args.common.seed,
    };
    let plain = PureState::<f64>::zero(circuit.qubits)?;
    let outcome = run_delegated(&plain, &circuit, &keys, &cfg)?;
    let report = audit(&outcome.transcript);
    let assists = outcome
        .transcript
        .messages
        .iter()
        .filter(|m| m.payload.kind() == "t_assist_request")
        .count();
    let flow: Vec<serde_json::Value> = outcome
        .transcript
        .messages
        .iter()
        .map(|m| json!({ "from": m.from, "to": m.to, "kind": m.payload.kind() }))
        .collect();
    if let Some(path) = &args.transcript {
        outcome.transcript.save(path)?;
    }
    let doc = json!({
        "experiment": "protocol-demo",
        "qubits": circuit.qubits,
        "t_mode": t_mode.name(),
        "shots": args.common.shots,
        "seed": args.common.seed,
        "initial_keys": keys,
        "final_keys": outcome.final_keys,
        "t_assists": assists,
        "audit": report,
        "message_flow": flow,
        "ciphertext_counts": outcome.ciphertext,
        "decrypted_counts": outcome.decrypted,
        "transcript_file": args.transcript.as_ref().map(|p| p.display().to_string()),
    });
    emit(&doc, args.common.output.as_deref())?;
    Ok(())
}
