//! Direction-based clustering with quantum assignment plumbing.
//!
//! Points are amplitude-encoded as normalized registers, so the comparison
//! circuit's similarity is the squared cosine of the angle between raw
//! vectors: the pipeline clusters by direction, not magnitude. Assignment
//! per point quantizes distances into an integer table and finds the
//! nearest centroid by threshold descent; centroid updates and the
//! convergence check stay classical on the client.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::groveropt::{default_budget, durr_hoyer_min, ValueTable};
use crate::keyledger::TGateMode;
use crate::protocol::SessionConfig;
use crate::qotp::KeySet;
use crate::statevector::{Circuit, GateOp};
use crate::swaptest::{similarity_analytic, similarity_encrypted, similarity_sampled};

/// One training vector. Finite entries, non-zero norm (required so the
/// vector has a direction to encode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DataPoint {
    coords: Vec<f64>,
}

impl DataPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("data point"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("data point coordinates must be finite"));
        }
        if coords.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(DataPoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl TryFrom<Vec<f64>> for DataPoint {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        DataPoint::new(coords)
    }
}

impl From<DataPoint> for Vec<f64> {
    fn from(point: DataPoint) -> Vec<f64> {
        point.coords
    }
}

/// Headerless CSV, one point per row.
pub fn parse_points_csv(text: &str) -> Result<Vec<DataPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let coords: Vec<f64> = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::input(format!("bad coordinate {f:?}")))
            })
            .collect::<Result<_>>()?;
        points.push(DataPoint::new(coords)?);
    }
    if points.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    Ok(points)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Squared cosine similarity of two raw vectors. This is the classical
/// counterpart of the encoded registers' overlap and the reference the
/// quantum route is checked against.
pub fn sq_cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    if x.len() != y.len() {
        return Err(Error::input(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((dot / (nx * ny)).powi(2))
}

/// Multiplexed Ry: rotate `target` by angles[j] when the control register
/// holds |j> (controls[0] is the most significant index bit). The two-block
/// recursion with CNOT conjugation needs no controlled rotations because
/// X Ry(t) X = Ry(-t).
fn ucry_ops(controls: &[usize], target: usize, angles: &[f64], ops: &mut Vec<GateOp>) {
    if controls.is_empty() {
        ops.push(GateOp::Ry(target, angles[0]));
        return;
    }
    let half = angles.len() / 2;
    let (head, rest) = (controls[0], &controls[1..]);
    let sum: Vec<f64> = (0..half).map(|i| (angles[i] + angles[i + half]) / 2.0).collect();
    let diff: Vec<f64> = (0..half).map(|i| (angles[i] - angles[i + half]) / 2.0).collect();
    ucry_ops(rest, target, &sum, ops);
    ops.push(GateOp::Cnot(head, target));
    ucry_ops(rest, target, &diff, ops);
    ops.push(GateOp::Cnot(head, target));
}

/// Amplitude encoding of a raw vector, L2-normalized and zero-padded to the
/// next power of two. Signs survive: each leaf rotation angle is
/// 2 atan2(odd, even), whose cosine/sine reproduce the signed pair exactly.
pub fn encode_vector(coords: &[f64]) -> Result<Circuit> {
    if coords.is_empty() {
        return Err(Error::Empty("vector"));
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::input("vector entries must be finite"));
    }
    let n = norm(coords);
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    let qubits = usize::max(1, coords.len().next_power_of_two().trailing_zeros() as usize);
    let padded = 1usize << qubits;
    let mut amps = vec![0.0; padded];
    for (slot, &c) in amps.iter_mut().zip(coords) {
        *slot = c / n;
    }

    // Pairwise magnitudes from the leaves up; level q+1 feeds qubit q.
    let mut levels = vec![amps];
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap();
        let up: Vec<f64> = prev.chunks(2).map(|pair| pair[0].hypot(pair[1])).collect();
        levels.push(up);
    }
    levels.reverse();

    let mut circuit = Circuit::new(qubits);
    for q in 0..qubits {
        let below = &levels[q + 1];
        let angles: Vec<f64> = below
            .chunks(2)
            .map(|pair| 2.0 * pair[1].atan2(pair[0]))
            .collect();
        let controls: Vec<usize> = (0..q).collect();
        let mut ops = Vec::new();
        ucry_ops(&controls, q, &angles, &mut ops);
        circuit.extend(ops);
    }
    Ok(circuit)
}

/// State-preparation circuit for one point.
pub fn encode_point(point: &DataPoint) -> Result<Circuit> {
    encode_vector(point.coords())
}

/// How per-point assignment is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    /// Analytic overlaps, exact argmin; no sampling, no search rounds.
    #[default]
    Exact,
    /// Finite-shot similarity estimates and threshold-descent argmin.
    Sampled,
    /// Similarities measured through the delegation protocol, then
    /// threshold-descent argmin on the quantized table.
    Encrypted,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 3] =
        [PipelineMode::Exact, PipelineMode::Sampled, PipelineMode::Encrypted];

    pub fn name(&self) -> &'static str {
        match self {
            PipelineMode::Exact => "exact",
            PipelineMode::Sampled => "sampled",
            PipelineMode::Encrypted => "encrypted",
        }
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(PipelineMode::Exact),
            "sampled" => Ok(PipelineMode::Sampled),
            "encrypted" => Ok(PipelineMode::Encrypted),
            other => Err(Error::input(format!("unknown pipeline mode {other:?}"))),
        }
    }
}

fn default_tau() -> f64 {
    1e-4
}

fn default_max_iters() -> usize {
    25
}

fn default_shots() -> u64 {
    8192
}

fn default_levels() -> u64 {
    8
}

fn default_seed() -> u64 {
    7
}

/// Full run configuration; serde defaults make `{"k":2}` a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub k: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub mode: PipelineMode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_levels")]
    pub levels: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub t_mode: TGateMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_centroids: Option<Vec<Vec<f64>>>,
}

impl KmeansConfig {
    pub fn new(k: usize) -> Self {
        KmeansConfig {
            k,
            tau: default_tau(),
            max_iters: default_max_iters(),
            mode: PipelineMode::Exact,
            shots: default_shots(),
            levels: default_levels(),
            seed: default_seed(),
            t_mode: TGateMode::default(),
            initial_centroids: None,
        }
    }

    pub fn with_mode(mut self, mode: PipelineMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_initial_centroids(mut self, centroids: Vec<Vec<f64>>) -> Self {
        self.initial_centroids = Some(centroids);
        self
    }

    fn validate(&self, points: &[DataPoint]) -> Result<()> {
        if points.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if self.k == 0 {
            return Err(Error::input("k must be at least 1"));
        }
        if points.len() < self.k {
            return Err(Error::input(format!(
                "{} points cannot seed {} clusters",
                points.len(),
                self.k
            )));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::input("tau must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be at least 1"));
        }
        if self.levels < 2 {
            return Err(Error::input("quantization needs at least 2 levels"));
        }
        if self.mode != PipelineMode::Exact && self.shots == 0 {
            return Err(Error::Empty("shot count"));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::input("points must share one dimension"));
        }
        if let Some(init) = &self.initial_centroids {
            if init.len() != self.k {
                return Err(Error::input(format!(
                    "{} initial centroids for k = {}",
                    init.len(),
                    self.k
                )));
            }
            for c in init {
                if c.len() != dim {
                    return Err(Error::input("initial centroid dimension mismatch"));
                }
                if norm(c) == 0.0 || c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::input("initial centroids must be encodable"));
                }
            }
        }
        Ok(())
    }
}

/// Distance proxy 1 - similarity mapped onto integer levels 0..L-1.
pub fn quantize_distance(distance: f64, levels: u64) -> u64 {
    let d = distance.clamp(0.0, 1.0);
    ((d * levels as f64).floor() as u64).min(levels - 1)
}

/// Table for the argmin search: one quantized entry per centroid, padded to
/// a power of two. `None` marks a centroid with no defined similarity;
/// padding and undefined entries carry level L so they lose to every real
/// distance.
pub fn distance_table(distances: &[Option<f64>], levels: u64) -> Result<ValueTable> {
    if distances.is_empty() {
        return Err(Error::Empty("distance list"));
    }
    if levels < 2 {
        return Err(Error::input("quantization needs at least 2 levels"));
    }
    let size = usize::max(2, distances.len().next_power_of_two());
    let mut values = vec![levels; size];
    for (slot, d) in values.iter_mut().zip(distances) {
        if let Some(d) = d {
            *slot = quantize_distance(*d, levels);
        }
    }
    ValueTable::from_values(values)
}

/// Nearest-centroid index by threshold descent over a quantized table.
///
/// Two rounds beyond ceil(sqrt(N)): a two-entry register caps each round's
/// success at 1/2, so the nominal budget alone misses too often to keep
/// assignments aligned with the exact path. Descent lands on a uniformly
/// random minimum; ties are then broken toward the lowest real index so
/// runs are comparable across modes.
pub fn argmin_from_table<R: Rng + ?Sized>(
    table: &ValueTable,
    k: usize,
    shots_per_round: u64,
    rng: &mut R,
) -> Result<usize> {
    if k == 0 || k > table.len() {
        return Err(Error::input(format!(
            "{k} centroids do not fit a table of {}",
            table.len()
        )));
    }
    let budget = default_budget(table.index_bits()) + 2;
    let found = durr_hoyer_min(table, budget, shots_per_round, rng)?;
    match (0..k).find(|&j| table.get(j) == found.value) {
        Some(lowest) => Ok(lowest),
        // The descent stalled on a padding entry; fall back to a legal index.
        None => Ok(found.index.min(k - 1)),
    }
}

fn exact_argmin(distances: &[Option<f64>]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, d) in distances.iter().enumerate() {
        if let Some(d) = d {
            if best.is_none_or(|(_, bd)| *d < bd) {
                best = Some((j, *d));
            }
        }
    }
    best.map(|(j, _)| j)
        .ok_or_else(|| Error::Protocol("no centroid offers a defined similarity".into()))
}

fn encode_centroids(centroids: &[Vec<f64>]) -> Result<Vec<Option<Circuit>>> {
    let preps: Vec<Option<Circuit>> = centroids
        .iter()
        .map(|c| encode_vector(c).ok())
        .collect();
    if preps.iter().all(|p| p.is_none()) {
        return Err(Error::Protocol("no centroid is encodable".into()));
    }
    Ok(preps)
}

fn point_distances<R: Rng + ?Sized>(
    prep: &Circuit,
    centroid_preps: &[Option<Circuit>],
    cfg: &KmeansConfig,
    rng: &mut R,
) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(centroid_preps.len());
    for cprep in centroid_preps {
        let similarity = match (cprep, cfg.mode) {
            (None, _) => None,
            (Some(cprep), PipelineMode::Exact) => {
                Some(similarity_analytic(prep, cprep)?.similarity)
            }
            (Some(cprep), PipelineMode::Sampled) => {
                Some(similarity_sampled(prep, cprep, cfg.shots, rng)?.similarity)
            }
            (Some(cprep), PipelineMode::Encrypted) => {
                let keys = KeySet::random(prep.qubits, rng);
                let session = SessionConfig {
                    mode: cfg.t_mode,
                    shots: cfg.shots,
                    seed: rng.random(),
                };
                Some(similarity_encrypted(prep, cprep, &keys, &session)?.estimate.similarity)
            }
        };
        out.push(similarity.map(|s| 1.0 - s));
    }
    Ok(out)
}

fn assign_point<R: Rng + ?Sized>(
    prep: &Circuit,
    centroid_preps: &[Option<Circuit>],
    cfg: &KmeansConfig,
    rng: &mut R,
) -> Result<usize> {
    let distances = point_distances(prep, centroid_preps, cfg, rng)?;
    if distances.iter().all(|d| d.is_none()) {
        return Err(Error::Protocol("no centroid offers a defined similarity".into()));
    }
    match cfg.mode {
        PipelineMode::Exact => exact_argmin(&distances),
        PipelineMode::Sampled | PipelineMode::Encrypted => {
            let table = distance_table(&distances, cfg.levels)?;
            argmin_from_table(&table, centroid_preps.len(), cfg.shots, rng)
        }
    }
}

fn point_stream(iteration: usize, point: usize) -> u64 {
    ((iteration as u64 + 1) << 32) | point as u64
}

/// One assignment pass. Each point draws from its own seeded stream, so the
/// result is independent of evaluation order.
pub fn assign_step(
    points: &[DataPoint],
    centroids: &[Vec<f64>],
    cfg: &KmeansConfig,
    iteration: usize,
) -> Result<Vec<usize>> {
    if centroids.len() != cfg.k {
        return Err(Error::input(format!(
            "{} centroids for k = {}",
            centroids.len(),
            cfg.k
        )));
    }
    let centroid_preps = encode_centroids(centroids)?;
    let mut assignments = Vec::with_capacity(points.len());
    for (i, point) in points.iter().enumerate() {
        let prep = encode_point(point)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(point_stream(iteration, i));
        assignments.push(assign_point(&prep, &centroid_preps, cfg, &mut rng)?);
    }
    Ok(assignments)
}

/// Arithmetic mean of each cluster's raw vectors; a cluster that lost all
/// its points keeps its previous centroid.
pub fn update_centroids(
    points: &[DataPoint],
    assignments: &[usize],
    previous: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    if assignments.len() != points.len() {
        return Err(Error::input(format!(
            "{} assignments for {} points",
            assignments.len(),
            points.len()
        )));
    }
    let k = previous.len();
    if let Some(&bad) = assignments.iter().find(|&&j| j >= k) {
        return Err(Error::input(format!("assignment {bad} out of range for k = {k}")));
    }
    let dim = points.first().map_or(0, DataPoint::dim);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (point, &j) in points.iter().zip(assignments) {
        for (slot, &c) in sums[j].iter_mut().zip(point.coords()) {
            *slot += c;
        }
        counts[j] += 1;
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((sum, count), prev)| {
            if count == 0 {
                prev.clone()
            } else {
                sum.into_iter().map(|s| s / count as f64).collect()
            }
        })
        .collect())
}

/// True when every centroid moved strictly less than tau (Euclidean).
pub fn has_converged(previous: &[Vec<f64>], current: &[Vec<f64>], tau: f64) -> bool {
    previous.len() == current.len()
        && previous.iter().zip(current).all(|(a, b)| {
            a.len() == b.len()
                && a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
                    < tau
        })
}

/// Where the clustering ended up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringState {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub iteration: usize,
    pub tau: f64,
}

/// Assignments used in one iteration and the centroids they produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSnapshot {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansRun {
    pub state: ClusteringState,
    pub initial_centroids: Vec<Vec<f64>>,
    pub history: Vec<IterationSnapshot>,
    pub converged: bool,
}

impl KmeansRun {
    pub fn assignment_history(&self) -> Vec<&[usize]> {
        self.history.iter().map(|s| s.assignments.as_slice()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run serializes")
    }
}

fn initial_centroids(points: &[DataPoint], cfg: &KmeansConfig) -> Vec<Vec<f64>> {
    if let Some(init) = &cfg.initial_centroids {
        return init.clone();
    }
    // k distinct point indices by partial Fisher-Yates on a dedicated stream.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let mut indices: Vec<usize> = (0..points.len()).collect();
    for i in 0..cfg.k {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    indices[..cfg.k]
        .iter()
        .map(|&i| points[i].coords().to_vec())
        .collect()
}

fn lloyd_loop<F>(
    points: &[DataPoint],
    initial: Vec<Vec<f64>>,
    tau: f64,
    max_iters: usize,
    mut assign: F,
) -> Result<KmeansRun>
where
    F: FnMut(&[DataPoint], &[Vec<f64>], usize) -> Result<Vec<usize>>,
{
    let mut centroids = initial.clone();
    let mut history: Vec<IterationSnapshot> = Vec::new();
    let mut converged = false;
    for iteration in 0..max_iters {
        let assignments = assign(points, &centroids, iteration)?;
        let updated = update_centroids(points, &assignments, &centroids)?;
        history.push(IterationSnapshot {
            assignments,
            centroids: updated.clone(),
        });
        converged = has_converged(&centroids, &updated, tau);
        centroids = updated;
        if converged {
            break;
        }
    }
    let last = history.last().expect("max_iters >= 1");
    Ok(KmeansRun {
        state: ClusteringState {
            centroids,
            assignments: last.assignments.clone(),
            iteration: history.len(),
            tau,
        },
        initial_centroids: initial,
        history,
        converged,
    })
}

/// The full pipeline: assign per mode, average, repeat until centroids
/// stop moving or the iteration cap is hit.
pub fn run_kmeans(points: &[DataPoint], cfg: &KmeansConfig) -> Result<KmeansRun> {
    cfg.validate(points)?;
    let initial = initial_centroids(points, cfg);
    lloyd_loop(points, initial, cfg.tau, cfg.max_iters, |pts, cents, iter| {
        assign_step(pts, cents, cfg, iter)
    })
}

fn classical_assign(points: &[DataPoint], centroids: &[Vec<f64>]) -> Result<Vec<usize>> {
    points
        .iter()
        .map(|point| {
            let distances: Vec<Option<f64>> = centroids
                .iter()
                .map(|c| sq_cosine(point.coords(), c).ok().map(|s| 1.0 - s))
                .collect();
            exact_argmin(&distances)
        })
        .collect()
}

/// Reference implementation: plain Lloyd iterations on the squared-cosine
/// distance of raw vectors, same tie-breaking and empty-cluster rules as
/// the quantum pipeline but no circuits anywhere.
pub fn classical_kmeans(
    points: &[DataPoint],
    k: usize,
    tau: f64,
    max_iters: usize,
    initial: &[Vec<f64>],
) -> Result<KmeansRun> {
    let cfg = KmeansConfig::new(k).with_initial_centroids(initial.to_vec());
    let mut probe = cfg.clone();
    probe.tau = tau;
    probe.max_iters = max_iters;
    probe.validate(points)?;
    lloyd_loop(points, initial.to_vec(), tau, max_iters, |pts, cents, _| {
        classical_assign(pts, cents)
    })
}
