//! End-to-end acceptance gate: ten numbered checks, one verdict line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines
//! on a passing build; on failure the captured report is printed anyway.
//! Every tolerance is written out at the check site.

use num_complex::Complex;
use qcloudsim::groveropt::{
    default_budget, durr_hoyer_min, grover_search, two_peak_iteration, ValueTable,
};
use qcloudsim::keyledger::{derive_rule, rule_update, run_ledger, TGateMode};
use qcloudsim::kmeans::{
    assign_step, classical_kmeans, run_kmeans, DataPoint, KmeansConfig, PipelineMode,
};
use qcloudsim::protocol::{run_delegated, SessionConfig};
use qcloudsim::qotp::{encrypt, key_average_density, KeySet};
use qcloudsim::statevector::{sample_shots, Circuit, GateOp, PureState};
use qcloudsim::swaptest::{analytic_p0, build_swaptest, similarity_analytic};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_eval_circuit<R: Rng + ?Sized>(qubits: usize, ops: usize, rng: &mut R) -> Circuit {
    let mut circuit = Circuit::new(qubits);
    for _ in 0..ops {
        let q = rng.random_range(0..qubits);
        let op = match rng.random_range(0..10) {
            0 => GateOp::X(q),
            1 => GateOp::Y(q),
            2 => GateOp::Z(q),
            3 => GateOp::H(q),
            4 => GateOp::S(q),
            5 => GateOp::Sdg(q),
            6 => GateOp::T(q),
            7 => GateOp::Tdg(q),
            kind => {
                if qubits < 2 {
                    GateOp::H(q)
                } else {
                    let mut r = rng.random_range(0..qubits - 1);
                    if r >= q {
                        r += 1;
                    }
                    if kind == 8 {
                        GateOp::Cnot(q, r)
                    } else {
                        GateOp::Cz(q, r)
                    }
                }
            }
        };
        circuit.push(op);
    }
    circuit
}

fn random_state<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> PureState<f64> {
    let dim = 1usize << qubits;
    let amps: Vec<Complex<f64>> = (0..dim)
        .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    PureState::from_amplitudes(amps).expect("nonzero with probability 1")
}

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn merge(parts: Vec<Verdict>) -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    for part in parts {
        match part {
            Ok(d) => details.push(d),
            Err(d) => {
                ok = false;
                details.push(format!("FAILED: {d}"));
            }
        }
    }
    ensure(ok, details.join("; "))
}

fn one_qubit_x() -> Circuit {
    let mut c = Circuit::new(1);
    c.push(GateOp::X(0));
    c
}

/// Ancilla-zero rate of a plaintext comparison of |1> and |0>.
fn swaptest_plaintext() -> Verdict {
    let circuit = build_swaptest(&one_qubit_x(), &Circuit::new(1)).map_err(|e| e.to_string())?;
    let mut state = PureState::<f64>::zero(circuit.qubits).map_err(|e| e.to_string())?;
    state.run(&circuit).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hist = sample_shots(&state, 8192, &mut rng);
    let p0 = hist.bit_count(0, 0) as f64 / 8192.0;
    let analytic = similarity_analytic(&one_qubit_x(), &Circuit::new(1))
        .map_err(|e| e.to_string())?
        .p0;
    let noisy = hist
        .with_bitflip_noise(0.02, &mut rng)
        .map_err(|e| e.to_string())?;
    let p0_noisy = noisy.bit_count(0, 0) as f64 / 8192.0;
    merge(vec![
        ensure(
            (p0 - 0.5).abs() <= 0.02,
            format!("sampled p0 {p0:.4} within 0.5 +/- 0.02"),
        ),
        ensure(
            (analytic - 0.5).abs() <= 1e-10,
            format!("analytic p0 {analytic:.12} within 0.5 +/- 1e-10"),
        ),
        ensure(
            (p0_noisy - 0.5).abs() <= 0.03,
            format!("p0 {p0_noisy:.4} under 2% readout flips within 0.5 +/- 0.03"),
        ),
    ])
}

/// The comparison replayed on ciphertext, exactly as published: identical
/// |0> plaintexts go up under data pads {1,1} and {0,0}, and the evaluator
/// runs the circuit directly on the masked registers. Differing pads
/// cannot be carried past a controlled swap by any key rule (the
/// protocol-grade route demands equal pads and is covered in-module), so
/// the plaintext ancilla reads the masked overlap: orthogonal states, p0
/// one half.
fn swaptest_encrypted() -> Verdict {
    let circuit = build_swaptest(&Circuit::new(1), &Circuit::new(1)).map_err(|e| e.to_string())?;
    let eval = circuit.decomposed_for_eval().map_err(|e| e.to_string())?;
    let mut wire = PureState::<f64>::zero(eval.qubits).map_err(|e| e.to_string())?;
    let pads = KeySet::from_bits(&[(0, 0), (1, 1), (0, 0)]).map_err(|e| e.to_string())?;
    encrypt(&mut wire, &pads).map_err(|e| e.to_string())?;
    wire.run(&eval).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let hist = sample_shots(&wire, 8192, &mut rng);
    let p0 = hist.bit_count(0, 0) as f64 / 8192.0;

    let mut masked_a = PureState::<f64>::zero(1).map_err(|e| e.to_string())?;
    masked_a.run(&one_qubit_x()).map_err(|e| e.to_string())?;
    let masked_b = PureState::<f64>::zero(1).map_err(|e| e.to_string())?;
    let analytic = analytic_p0(&masked_a, &masked_b).map_err(|e| e.to_string())?;
    merge(vec![
        ensure(
            (p0 - 0.5).abs() <= 0.02,
            format!("ciphertext ancilla p0 {p0:.4} within 0.5 +/- 0.02"),
        ),
        ensure(
            (analytic - 0.5).abs() <= 1e-10,
            format!("masked-pair analytic p0 {analytic:.12} within 0.5 +/- 1e-10"),
        ),
    ])
}

/// One amplification round on the two all-equal bitstrings.
fn grover_plaintext() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let hist = grover_search(3, &[0b000, 0b111], 1, 8192, &mut rng).map_err(|e| e.to_string())?;
    let mut outcomes: Vec<&str> = hist.counts.keys().map(String::as_str).collect();
    outcomes.sort_unstable();
    let n000 = *hist.counts.get("000").unwrap_or(&0) as f64;
    let n111 = *hist.counts.get("111").unwrap_or(&0) as f64;
    let half = 4096.0;
    let band = 4.0 * (8192.0f64 * 0.25).sqrt();
    merge(vec![
        ensure(
            outcomes == ["000", "111"],
            format!("only outcomes {outcomes:?}"),
        ),
        ensure(
            (n000 - half).abs() <= band && (n111 - half).abs() <= band,
            format!("counts {n000} and {n111} within 4096 +/- {band:.1}"),
        ),
    ])
}

/// The search round delegated under pads {1,1},{0,1},{0,1}: peaks shift to
/// 100 and 011 on the wire, the ledger hands back mask (1,0,0), and the
/// XOR restores 000 and 111.
fn grover_encrypted() -> Verdict {
    let keys = KeySet::from_bits(&[(1, 1), (0, 1), (0, 1)]).map_err(|e| e.to_string())?;
    let mut plain = PureState::<f64>::zero(3).map_err(|e| e.to_string())?;
    let mut wall = Circuit::new(3);
    for q in 0..3 {
        wall.push(GateOp::H(q));
    }
    plain.run(&wall).map_err(|e| e.to_string())?;
    let cfg = SessionConfig {
        mode: TGateMode::TrustedSameKey,
        shots: 8192,
        seed: 41,
    };
    let outcome =
        run_delegated(&plain, &two_peak_iteration(), &keys, &cfg).map_err(|e| e.to_string())?;

    let mut cipher: Vec<&str> = outcome.ciphertext.counts.keys().map(String::as_str).collect();
    cipher.sort_unstable();
    let mut decrypted: Vec<&str> = outcome.decrypted.counts.keys().map(String::as_str).collect();
    decrypted.sort_unstable();

    let eval = two_peak_iteration()
        .decomposed_for_eval()
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let ledger =
        run_ledger(&eval, &keys, TGateMode::TrustedSameKey, &mut rng).map_err(|e| e.to_string())?;
    let a_bits = ledger.final_keys().a_bits();
    let b_bits: Vec<u8> = ledger.final_keys().pairs.iter().map(|p| p.b).collect();
    // The published run states final pads {1,0},{0,1},{0,1}; the a-bits
    // agree, and the b-bit difference is printed rather than suppressed.
    let published_b = [0u8, 1, 1];
    merge(vec![
        ensure(
            cipher == ["011", "100"],
            format!("ciphertext outcomes {cipher:?}"),
        ),
        ensure(a_bits == [1, 0, 0], format!("final a-bits {a_bits:?}")),
        ensure(
            decrypted == ["000", "111"],
            format!("decrypted outcomes {decrypted:?}"),
        ),
        Ok(format!(
            "b-bits computed {b_bits:?} vs published {published_b:?} (differ, reported openly)"
        )),
    ])
}

/// The printed update rules against the conjugation oracle, every gate,
/// every key combination.
fn rule_table_agreement() -> Verdict {
    let singles = [GateOp::H(0), GateOp::X(0), GateOp::Y(0), GateOp::Z(0), GateOp::S(0)];
    let doubles = [GateOp::Cnot(0, 1), GateOp::Cz(0, 1)];
    let mut combos = 0usize;
    for op in singles.iter().chain(doubles.iter()) {
        let mapping = derive_rule(op).map_err(|e| e.to_string())?;
        for (input, expected) in mapping {
            let keys = KeySet { pairs: input };
            let updated = rule_update(op, &keys).map_err(|e| e.to_string())?;
            if updated.pairs != expected {
                return Err(format!(
                    "rule and oracle disagree for {op:?} on {:?}",
                    keys.pairs
                ));
            }
            combos += 1;
        }
    }
    Ok(format!(
        "{combos} gate/key combinations, zero rule-oracle mismatches"
    ))
}

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Encrypt, evaluate, decrypt: the analytic outcome distribution must be
/// the plaintext distribution, for every T-handling mode.
fn homomorphic_equivalence() -> Verdict {
    let modes = [
        TGateMode::TrustedFreshKey,
        TGateMode::TrustedSameKey,
        TGateMode::Algebraic,
    ];
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(90_000 + seed);
        let qubits = rng.random_range(1..=4);
        let ops = rng.random_range(0..=30);
        let circuit = random_eval_circuit(qubits, ops, &mut rng);
        let keys = KeySet::random(qubits, &mut rng);

        let mut plain = PureState::<f64>::zero(qubits).map_err(|e| e.to_string())?;
        plain.run(&circuit).map_err(|e| e.to_string())?;
        let reference = plain.probabilities();

        let input = PureState::<f64>::zero(qubits).map_err(|e| e.to_string())?;
        for mode in modes {
            let cfg = SessionConfig {
                mode,
                shots: 1,
                seed: seed ^ 0x5eed,
            };
            let outcome =
                run_delegated(&input, &circuit, &keys, &cfg).map_err(|e| e.to_string())?;
            let decrypted = outcome.decrypted_distribution();
            worst = worst.max(total_variation(&reference, &decrypted));
            checked += 1;
        }
    }
    ensure(
        worst <= 1e-9,
        format!("{checked} mode-runs over 500 circuits, worst total variation {worst:.2e} (bound 1e-9)"),
    )
}

/// Averaging the pad over all keys must leave the maximally mixed state.
fn pad_mixing() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(70_000 + seed);
        let qubits = 1 + (seed as usize % 2);
        let state = random_state(qubits, &mut rng);
        let rho = key_average_density(&state).map_err(|e| e.to_string())?;
        let dim = 1usize << qubits;
        for (r, row) in rho.iter().enumerate() {
            for (c, entry) in row.iter().enumerate() {
                let expected = if r == c {
                    Complex::new(1.0 / dim as f64, 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
                worst = worst.max((entry - expected).norm());
            }
        }
    }
    ensure(
        worst <= 1e-10,
        format!("20 random plaintexts on 1 and 2 qubits, worst deviation from I/2^n: {worst:.2e} (bound 1e-10)"),
    )
}

/// Threshold descent success rate at the square-root round budget, plus
/// the worked example: threshold 3 marks exactly the two all-equal
/// strings and the walk ends on (000, 1).
fn minimum_search() -> Verdict {
    let budget = default_budget(3);
    let mut wins = 0usize;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + seed);
        let values: Vec<u64> = (0..8).map(|_| rng.random_range(0..8)).collect();
        let table = ValueTable::from_values(values).map_err(|e| e.to_string())?;
        let result = durr_hoyer_min(&table, budget, 512, &mut rng).map_err(|e| e.to_string())?;
        if result.value == table.min_entry().1 {
            wins += 1;
        }
    }

    let json = r#"{"index_bits":3,"values":{"000":1,"001":3,"111":2},"default":7}"#;
    let table = ValueTable::from_json(json).map_err(|e| e.to_string())?;
    let marked = table.marked_below(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let walk = durr_hoyer_min(&table, budget, 8192, &mut rng).map_err(|e| e.to_string())?;
    let first = walk.rounds.first().ok_or("walk-through had no rounds")?;
    merge(vec![
        ensure(
            wins >= 95,
            format!("{wins}/100 random 8-entry tables solved within {budget} rounds (bar: 95)"),
        ),
        ensure(
            marked == [0b000, 0b111],
            format!("threshold 3 marks indices {marked:?}"),
        ),
        ensure(
            first.threshold == 3 && first.marked_count == 2,
            format!(
                "walk-through first round: threshold {} marking {} entries",
                first.threshold, first.marked_count
            ),
        ),
        ensure(
            walk.index == 0 && walk.value == 1,
            format!("walk-through returned index {:03b} value {}", walk.index, walk.value),
        ),
    ])
}

fn kmeans_datasets(seed: u64) -> Vec<DataPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
    let dim = rng.random_range(2..=4);
    let count = rng.random_range(8..=32);
    (0..count)
        .map(|_| loop {
            let coords: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            if coords.iter().map(|c| c * c).sum::<f64>().sqrt() > 0.1 {
                break DataPoint::new(coords).unwrap();
            }
        })
        .collect()
}

/// Circuit-backed assignment against the classical reference, then the
/// sampled estimator against the exact one on well-separated blobs.
fn kmeans_equivalence() -> Verdict {
    for seed in 0..20u64 {
        let points = kmeans_datasets(seed);
        let k = if seed % 2 == 0 { 2 } else { 4 };
        let cfg = KmeansConfig::new(k).with_seed(seed);
        let quantum = run_kmeans(&points, &cfg).map_err(|e| e.to_string())?;
        let classical = classical_kmeans(
            &points,
            k,
            cfg.tau,
            cfg.max_iters,
            &quantum.initial_centroids,
        )
        .map_err(|e| e.to_string())?;
        if quantum.assignment_history() != classical.assignment_history() {
            return Err(format!("assignment histories diverge on dataset seed {seed}"));
        }
        if quantum.converged != classical.converged {
            return Err(format!("convergence verdicts diverge on dataset seed {seed}"));
        }
    }

    let mut points = Vec::new();
    for i in 0..8 {
        let wobble = 0.02 * i as f64;
        points.push(DataPoint::new(vec![1.0, wobble]).map_err(|e| e.to_string())?);
        points.push(DataPoint::new(vec![wobble, 1.0]).map_err(|e| e.to_string())?);
    }
    let centroids = vec![vec![1.0, 0.05], vec![0.05, 1.0]];
    let exact_cfg = KmeansConfig::new(2).with_initial_centroids(centroids.clone());
    let exact = assign_step(&points, &centroids, &exact_cfg, 0).map_err(|e| e.to_string())?;
    let mut sampled_cfg = exact_cfg.with_mode(PipelineMode::Sampled);
    sampled_cfg.shots = 8192;
    let sampled = assign_step(&points, &centroids, &sampled_cfg, 0).map_err(|e| e.to_string())?;
    let agree = exact.iter().zip(&sampled).filter(|(a, b)| a == b).count();
    merge(vec![
        Ok("20 datasets: circuit pipeline and classical reference give identical assignment histories".into()),
        ensure(
            agree * 10 >= points.len() * 9,
            format!("sampled assignment agrees on {agree}/{} separated points (bar: 90%)", points.len()),
        ),
    ])
}

/// Asymptotic speedup claims are not measurable on a statevector
/// simulator; what is checkable is that every descent stays within the
/// square-root round budget.
fn complexity_exclusion() -> Verdict {
    let budget = default_budget(3);
    let mut max_rounds = 0usize;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + seed);
        let values: Vec<u64> = (0..8).map(|_| rng.random_range(0..8)).collect();
        let table = ValueTable::from_values(values).map_err(|e| e.to_string())?;
        let result = durr_hoyer_min(&table, budget, 512, &mut rng).map_err(|e| e.to_string())?;
        max_rounds = max_rounds.max(result.rounds.len());
    }
    merge(vec![
        ensure(
            max_rounds <= budget,
            format!("every run used at most {max_rounds} of {budget} rounds (ceil of sqrt(8))"),
        ),
        Ok("wall-clock speedup claims are excluded by design on a classical simulator".into()),
    ])
}

#[test]
fn acceptance_criteria() {
    let checks: Vec<(usize, &str, Verdict)> = vec![
        (1, "plaintext similarity of |1> and |0>", swaptest_plaintext()),
        (2, "encrypted similarity pipeline", swaptest_encrypted()),
        (3, "plaintext two-peak search", grover_plaintext()),
        (4, "encrypted two-peak search and final pads", grover_encrypted()),
        (5, "key-rule table vs conjugation oracle", rule_table_agreement()),
        (6, "homomorphic evaluation equivalence", homomorphic_equivalence()),
        (7, "pad averaging mixes to identity", pad_mixing()),
        (8, "threshold-descent minimum search", minimum_search()),
        (9, "k-means pipeline equivalence", kmeans_equivalence()),
        (10, "complexity claims excluded, budgets bounded", complexity_exclusion()),
    ];

    let mut failures = Vec::new();
    for (number, label, verdict) in &checks {
        match verdict {
            Ok(detail) => println!("ACCEPTANCE {number:2} {label}: PASS ({detail})"),
            Err(detail) => {
                println!("ACCEPTANCE {number:2} {label}: FAIL ({detail})");
                failures.push(*number);
            }
        }
    }
    assert!(
        failures.is_empty(),
        "acceptance checks failed: {failures:?}"
    );
}
