//! Emulated device runs: shot sampling with stochastic Pauli gate errors,
//! per-qubit readout flips, confusion-matrix inversion and zero-noise
//! extrapolation over folded circuits.
//!
//! Each shot owns a random stream derived from `(seed, shot)`, which draws
//! its error pattern and, separately, its measured bitstring. Shots that
//! drew the same pattern share one simulated trajectory. Totals therefore
//! depend only on the seed, never on the worker count.
//!
//! Trajectories are simulated on the statevector, restarting from stored
//! ideal states just before the first error. For the non-interacting step
//! measured on `σy_r` a faster exact engine propagates the observable
//! backwards as a linear combination of the Majoranas of the free-fermion
//! module; Pauli errors only flip signs of that combination.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{fold, CircuitError, Gate, GateSequence, GateSites, SignedPauli};
use crate::freefermion::majorana_operator;
use crate::model::{ModelParams, PauliAxis, PauliString};
use crate::statevector::{OpKind, Program, StateError, StateVector};
use crate::trace::{
    sample_basis_states, AutocorrSeries, Estimator, TraceError, TrajectoryPlan,
};

pub const DEFAULT_SHOTS: u64 = 8000;

// Upper bound on memory spent on stored ideal states.
const CHECKPOINT_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("noise.{field}: probability {value} must lie in [0, 1)")]
    Probability { field: &'static str, value: f64 },
    #[error("noise.shots: need at least one shot")]
    Shots,
    #[error("noise.readout: {got} entries given for {expected} qubits")]
    ReadoutWidth { expected: usize, got: usize },
    #[error("readout confusion matrix for qubit {0} is singular (p01 + p10 >= 1)")]
    SingularReadout(usize),
    #[error("noise.zne_factors: {0}")]
    Factors(String),
    #[error("extrapolation needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("extrapolation factor {0} appears more than once")]
    DuplicateFactor(f64),
    #[error("distribution has {got} entries, expected {expected}")]
    DistributionWidth { expected: usize, got: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Probabilities of reporting 1 when the qubit holds 0 (`p01`) and 0 when
/// it holds 1 (`p10`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReadoutError {
    pub p01: f64,
    pub p10: f64,
}

impl ReadoutError {
    pub fn symmetric(p: f64) -> Self {
        Self { p01: p, p10: p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReadoutSpec {
    /// The same symmetric flip probability on every qubit.
    Uniform(f64),
    PerQubit(Vec<ReadoutError>),
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        ReadoutSpec::Uniform(0.0)
    }
}

impl ReadoutSpec {
    pub fn for_site(&self, site: usize) -> ReadoutError {
        match self {
            ReadoutSpec::Uniform(p) => ReadoutError::symmetric(*p),
            ReadoutSpec::PerQubit(list) if list.len() == 1 => list[0],
            ReadoutSpec::PerQubit(list) => list[site],
        }
    }

    pub fn for_sites(&self, sites: &[usize]) -> Vec<ReadoutError> {
        sites.iter().map(|&s| self.for_site(s)).collect()
    }
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Depolarizing probability after each single-qubit gate.
    #[serde(default)]
    pub p1: f64,
    /// Depolarizing probability after each two-qubit gate.
    #[serde(default)]
    pub p2: f64,
    #[serde(default)]
    pub readout: ReadoutSpec,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            readout: ReadoutSpec::default(),
            shots: DEFAULT_SHOTS,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self, num_sites: usize) -> Result<(), NoiseError> {
        let check = |field: &'static str, value: f64| {
            if (0.0..1.0).contains(&value) {
                Ok(())
            } else {
                Err(NoiseError::Probability { field, value })
            }
        };
        check("p1", self.p1)?;
        check("p2", self.p2)?;
        match &self.readout {
            ReadoutSpec::Uniform(p) => check("readout", *p)?,
            ReadoutSpec::PerQubit(list) => {
                if list.len() != 1 && list.len() != num_sites {
                    return Err(NoiseError::ReadoutWidth {
                        expected: num_sites,
                        got: list.len(),
                    });
                }
                for r in list {
                    check("readout.p01", r.p01)?;
                    check("readout.p10", r.p10)?;
                }
            }
        }
        if self.shots == 0 {
            return Err(NoiseError::Shots);
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.readout == ReadoutSpec::Uniform(0.0)
    }
}

fn default_factors() -> Vec<i64> {
    vec![1, 3]
}

fn default_true() -> bool {
    true
}

/// Mitigation stages. A single factor `[1]` switches extrapolation off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationPipeline {
    #[serde(default = "default_true")]
    pub readout_mitigation: bool,
    #[serde(default = "default_factors")]
    pub zne_factors: Vec<i64>,
}

impl Default for MitigationPipeline {
    fn default() -> Self {
        Self {
            readout_mitigation: true,
            zne_factors: default_factors(),
        }
    }
}

impl MitigationPipeline {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let f = &self.zne_factors;
        if f.first() != Some(&1) {
            return Err(NoiseError::Factors("first factor must be 1".into()));
        }
        if let Some(bad) = f.iter().find(|&&k| k < 1 || k % 2 == 0) {
            return Err(NoiseError::Factors(format!("factor {bad} is not odd and positive")));
        }
        if f.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NoiseError::Factors("factors must be strictly ascending".into()));
        }
        Ok(())
    }
}

/// Noise and mitigation settings, as carried in configs and series metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseMetadata {
    #[serde(flatten)]
    pub config: NoiseConfig,
    #[serde(flatten)]
    pub pipeline: MitigationPipeline,
}

/// Shot counts over the bit patterns of `sites`; bit `k` of the pattern
/// index is the reported value of `sites[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub sites: Vec<usize>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn distribution(&self) -> Vec<f64> {
        let total = self.shots() as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// `Σ λ(t) count(t) / shots` for the unsigned string on `sites`.
    pub fn parity_expectation(&self) -> f64 {
        parity_mean(&self.distribution())
    }
}

fn parity(pattern: usize) -> f64 {
    if pattern.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn parity_mean(dist: &[f64]) -> f64 {
    dist.iter().enumerate().map(|(t, p)| parity(t) * p).sum()
}

// Applies a 2x2 matrix (column = true bit, row = reported bit) to bit `k`
// of every pattern.
fn apply_per_bit(dist: &mut [f64], k: usize, m: [[f64; 2]; 2]) {
    let stride = 1 << k;
    for chunk in dist.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m[0][0] * x + m[0][1] * y;
            *b = m[1][0] * x + m[1][1] * y;
        }
    }
}

fn check_width(dist: &[f64], errors: &[ReadoutError]) -> Result<(), NoiseError> {
    if dist.len() != 1 << errors.len() {
        return Err(NoiseError::DistributionWidth {
            expected: 1 << errors.len(),
            got: dist.len(),
        });
    }
    Ok(())
}

/// Pushes a distribution through independent per-qubit readout flips.
pub fn readout_channel(dist: &[f64], errors: &[ReadoutError]) -> Result<Vec<f64>, NoiseError> {
    check_width(dist, errors)?;
    let mut out = dist.to_vec();
    for (k, e) in errors.iter().enumerate() {
        apply_per_bit(&mut out, k, [[1.0 - e.p01, e.p10], [e.p01, 1.0 - e.p10]]);
    }
    Ok(out)
}

/// Exact inverse of [`readout_channel`]; the result may have negative
/// entries.
pub fn readout_invert(dist: &[f64], errors: &[ReadoutError]) -> Result<Vec<f64>, NoiseError> {
    check_width(dist, errors)?;
    let mut out = dist.to_vec();
    for (k, e) in errors.iter().enumerate() {
        let det = 1.0 - e.p01 - e.p10;
        if det <= 0.0 {
            return Err(NoiseError::SingularReadout(k));
        }
        apply_per_bit(
            &mut out,
            k,
            [[(1.0 - e.p10) / det, -e.p10 / det], [-e.p01 / det, (1.0 - e.p01) / det]],
        );
    }
    Ok(out)
}

/// Parity expectation of the histogram after undoing the readout channel.
pub fn readout_mitigate(histogram: &Histogram, errors: &[ReadoutError]) -> Result<f64, NoiseError> {
    Ok(parity_mean(&readout_invert(&histogram.distribution(), errors)?))
}

/// Intercept at factor 0 of the line through `(factor, value)` points; the
/// least-squares line when more than two are given.
pub fn zne_extrapolate(points: &[(f64, f64)]) -> Result<f64, NoiseError> {
    if points.len() < 2 {
        return Err(NoiseError::TooFewPoints(points.len()));
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].iter().any(|b| b.0 == a.0) {
            return Err(NoiseError::DuplicateFactor(a.0));
        }
    }
    if let [(x1, v1), (x2, v2)] = *points {
        return Ok(v1 + (v1 - v2) * x1 / (x2 - x1));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(my - sxy / sxx * mx)
}

/// A single measured circuit: `|initial⟩`, the preparation and evolution
/// gates (both noisy), then a measurement in the eigenbasis of `observable`.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub initial: u64,
    pub preparation: GateSequence,
    pub evolution: GateSequence,
    pub observable: SignedPauli,
    /// Model the evolution was built from; enables the free-fermion engine.
    pub model: Option<ModelParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Free-fermion propagation when applicable, statevector otherwise.
    Auto,
    Statevector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyOutcome {
    /// `sign · Σ λ(bits) count / shots`.
    pub estimate: f64,
    pub histogram: Histogram,
    /// Number of distinct error patterns simulated.
    pub trajectories: usize,
}

pub fn noisy_expectation(
    experiment: &Experiment,
    cfg: &NoiseConfig,
    stream: u64,
) -> Result<NoisyOutcome, NoiseError> {
    noisy_expectation_with(experiment, cfg, stream, Engine::Auto)
}

/// A Pauli error after gate `gate`. `code` packs one 2-bit axis code per
/// gate site (0 = I, 1 = X, 2 = Y, 3 = Z), first site lowest.
type ErrorEvent = (u32, u8);

fn axis_of(code: u8) -> Option<PauliAxis> {
    match code & 3 {
        1 => Some(PauliAxis::X),
        2 => Some(PauliAxis::Y),
        3 => Some(PauliAxis::Z),
        _ => None,
    }
}

fn error_factors(gate: &Gate, code: u8) -> impl Iterator<Item = (usize, PauliAxis)> {
    let sites = match gate.sites() {
        GateSites::One(s) => [Some(s), None],
        GateSites::Two(a, b) => [Some(a), Some(b)],
    };
    sites
        .into_iter()
        .enumerate()
        .filter_map(move |(i, s)| Some((s?, axis_of(code >> (2 * i))?)))
}

fn error_masks(gate: &Gate, code: u8) -> (u64, u64) {
    error_factors(gate, code).fold((0, 0), |(x, z), (site, axis)| match axis {
        PauliAxis::X => (x | 1 << site, z),
        PauliAxis::Y => (x | 1 << site, z | 1 << site),
        PauliAxis::Z => (x, z | 1 << site),
    })
}

fn shot_rng(stream: u64, shot: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    rng.set_stream(2 * shot + purpose);
    rng
}

// Gate indices after which errors may occur, at a common probability.
fn sample_class(
    rng: &mut ChaCha8Rng,
    gates: &[u32],
    p: f64,
    codes: u8,
    out: &mut Vec<ErrorEvent>,
) {
    if p <= 0.0 || gates.is_empty() {
        return;
    }
    let log_keep = (1.0 - p).ln();
    let mut pos = 0usize;
    loop {
        let u: f64 = rng.gen();
        // Number of error-free gates before the next error.
        let skip = ((1.0 - u).ln() / log_keep).floor();
        if skip >= (gates.len() - pos) as f64 {
            return;
        }
        pos += skip as usize;
        out.push((gates[pos], rng.gen_range(1..=codes)));
        pos += 1;
        if pos >= gates.len() {
            return;
        }
    }
}

struct Circuit {
    gates: GateSequence,
    single: Vec<u32>,
    double: Vec<u32>,
    /// Gate index where the measurement rotations start.
    measure_start: usize,
    evolution_start: usize,
    support: Vec<usize>,
}

impl Circuit {
    fn new(experiment: &Experiment) -> Result<Self, NoiseError> {
        let n = experiment.preparation.num_sites();
        let axes = crate::circuit::observable_axes(&experiment.observable.string, n);
        let measure = crate::circuit::basis_layer(&axes, crate::circuit::BasisDirection::Measure);
        let evolution_start = experiment.preparation.len();
        let measure_start = evolution_start + experiment.evolution.len();
        let gates = experiment
            .preparation
            .clone()
            .then(&experiment.evolution)?
            .then(&measure)?;
        let (mut single, mut double) = (Vec::new(), Vec::new());
        for (i, gate) in gates.gates().iter().enumerate() {
            if gate.is_two_site() {
                double.push(i as u32);
            } else {
                single.push(i as u32);
            }
        }
        Ok(Self {
            gates,
            single,
            double,
            measure_start,
            evolution_start,
            support: experiment.observable.string.terms().iter().map(|t| t.0).collect(),
        })
    }

    fn sample_pattern(&self, rng: &mut ChaCha8Rng, cfg: &NoiseConfig) -> Vec<ErrorEvent> {
        let mut events = Vec::new();
        sample_class(rng, &self.single, cfg.p1, 3, &mut events);
        sample_class(rng, &self.double, cfg.p2, 15, &mut events);
        events.sort_unstable();
        events
    }
}

pub fn noisy_expectation_with(
    experiment: &Experiment,
    cfg: &NoiseConfig,
    stream: u64,
    engine: Engine,
) -> Result<NoisyOutcome, NoiseError> {
    let circuit = Circuit::new(experiment)?;
    cfg.validate(circuit.gates.num_sites())?;

    let mut groups: BTreeMap<Vec<ErrorEvent>, Vec<u64>> = BTreeMap::new();
    for shot in 0..cfg.shots {
        let pattern = circuit.sample_pattern(&mut shot_rng(stream, shot, 0), cfg);
        groups.entry(pattern).or_default().push(shot);
    }
    let patterns: Vec<&Vec<ErrorEvent>> = groups.keys().collect();

    let fermion = match engine {
        Engine::Auto => FermionEngine::new(experiment, &circuit)?,
        Engine::Statevector => None,
    };
    let marginals: Vec<Vec<f64>> = match &fermion {
        Some(f) => patterns.par_iter().map(|p| f.marginal(&circuit, p)).collect(),
        None => {
            let sv = StatevectorEngine::new(experiment.initial, &circuit)?;
            patterns.par_iter().map(|p| sv.marginal(&circuit, p)).collect()
        }
    };

    let readout = cfg.readout.for_sites(&circuit.support);
    let mut counts = vec![0u64; 1 << circuit.support.len()];
    for (shots, marginal) in groups.values().zip(&marginals) {
        for &shot in shots {
            let mut rng = shot_rng(stream, shot, 1);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pattern = marginal.len() - 1;
            for (t, p) in marginal.iter().enumerate() {
                acc += p;
                if u < acc {
                    pattern = t;
                    break;
                }
            }
            for (k, e) in readout.iter().enumerate() {
                let flip = if pattern >> k & 1 == 0 { e.p01 } else { e.p10 };
                if rng.gen::<f64>() < flip {
                    pattern ^= 1 << k;
                }
            }
            counts[pattern] += 1;
        }
    }
    let histogram = Histogram {
        sites: circuit.support.clone(),
        counts,
    };
    Ok(NoisyOutcome {
        estimate: experiment.observable.sign() * histogram.parity_expectation(),
        histogram,
        trajectories: groups.len(),
    })
}

struct StatevectorEngine {
    program: Program,
    gate_to_op: Vec<usize>,
    stride: usize,
    checkpoints: Vec<StateVector>,
    ideal: StateVector,
}

impl StatevectorEngine {
    fn new(initial: u64, circuit: &Circuit) -> Result<Self, NoiseError> {
        let n = circuit.gates.num_sites();
        let program = Program::compile(&circuit.gates);
        let ops = program.ops();
        let mut gate_to_op = vec![0; circuit.gates.len()];
        for (i, op) in ops.iter().enumerate() {
            for g in op.gates.clone() {
                gate_to_op[g] = i;
            }
        }
        let max_states = (CHECKPOINT_BYTES / (16usize << n)).max(1);
        let stride = ops.len().div_ceil(max_states).max(1);
        let mut state = StateVector::basis(n, initial)?;
        let mut checkpoints = Vec::new();
        for (i, op) in ops.iter().enumerate() {
            if i % stride == 0 {
                checkpoints.push(state.clone());
            }
            state.run_op(op);
        }
        Ok(Self {
            program,
            gate_to_op,
            stride,
            checkpoints,
            ideal: state,
        })
    }

    fn marginal(&self, circuit: &Circuit, events: &[ErrorEvent]) -> Vec<f64> {
        let Some(&(first, _)) = events.first() else {
            return self.ideal.marginal(&circuit.support);
        };
        let gates = circuit.gates.gates();
        let ops = self.program.ops();
        let start_op = self.gate_to_op[first as usize] / self.stride * self.stride;
        let mut state = self.checkpoints[start_op / self.stride].clone();
        let mut pending = events.iter().peekable();
        for op in &ops[start_op..] {
            let hit = pending
                .peek()
                .is_some_and(|&&(g, _)| (g as usize) < op.gates.end);
            if !hit {
                state.run_op(op);
                continue;
            }
            for g in op.gates.clone() {
                match &op.kind {
                    OpKind::Gate(gate) => state.apply_gate(gate),
                    OpKind::Diagonal(_) => state.apply_gate(&gates[g]),
                }
                while let Some(&&(eg, code)) = pending.peek() {
                    if eg as usize != g {
                        break;
                    }
                    for (site, axis) in error_factors(&gates[g], code) {
                        state.apply_pauli(site, axis);
                    }
                    pending.next();
                }
            }
        }
        state.marginal(&circuit.support)
    }
}

/// An element `a + b Ω` of the commutative algebra generated by `Ω_r`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Coeff {
    a: f64,
    b: f64,
}

impl Coeff {
    fn times_omega(self) -> Coeff {
        Coeff { a: self.b, b: self.a }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rotation {
    p: usize,
    q: usize,
    through_omega: bool,
    cos: f64,
    sin: f64,
}

/// Heisenberg propagation of `σy_r = -χ_{2L-2}` through Majorana-bilinear
/// gates, tracking coefficients in both `Ω_r` sectors at once.
struct FermionEngine {
    rotations: Vec<Rotation>,
    /// `χ_b` and `Ω χ_b` as signed Pauli strings.
    majoranas: Vec<SignedPauli>,
    omega_majoranas: Vec<SignedPauli>,
    omega: SignedPauli,
    /// `⟨ψ₀|χ_b|ψ₀⟩` and `⟨ψ₀|Ω χ_b|ψ₀⟩` for the error-free preparation.
    initial: Vec<Coeff>,
    initial_bits: u64,
    preparation: GateSequence,
}

impl FermionEngine {
    fn new(experiment: &Experiment, circuit: &Circuit) -> Result<Option<Self>, NoiseError> {
        let Some(params) = experiment.model.filter(|p| !p.is_interacting()) else {
            return Ok(None);
        };
        let n = params.num_sites();
        let r = params.defect();
        let target = PauliString::single(n, r, PauliAxis::Y).expect("defect in range");
        if experiment.observable.string != target {
            return Ok(None);
        }
        let Some(rotations) = experiment
            .evolution
            .gates()
            .iter()
            .map(|g| classify(&params, g))
            .collect::<Option<Vec<_>>>()
        else {
            return Ok(None);
        };
        let dim = 2 * n - 1;
        let majoranas: Vec<SignedPauli> = (0..dim)
            .map(|b| majorana_operator(&params, b).expect("index in range"))
            .collect();
        let omega = SignedPauli {
            negative: true,
            string: PauliString::new(
                n,
                (0..n).map(|j| (j, if j == r { PauliAxis::Y } else { PauliAxis::X })),
            )
            .expect("full chain"),
        };
        let omega_majoranas: Vec<SignedPauli> = majoranas
            .iter()
            .map(|m| omega.product(m).expect("Ω commutes with every Majorana"))
            .collect();
        let mut engine = Self {
            rotations,
            majoranas,
            omega_majoranas,
            omega,
            initial: Vec::new(),
            initial_bits: experiment.initial,
            preparation: experiment.preparation.clone(),
        };
        engine.initial = engine.expectations(&[], circuit)?;
        Ok(Some(engine))
    }

    fn expectations(&self, events: &[ErrorEvent], circuit: &Circuit) -> Result<Vec<Coeff>, NoiseError> {
        let mut state = StateVector::basis(self.preparation.num_sites(), self.initial_bits)?;
        let gates = circuit.gates.gates();
        let mut pending = events.iter().peekable();
        for (g, gate) in self.preparation.gates().iter().enumerate() {
            state.apply_gate(gate);
            while let Some(&&(eg, code)) = pending.peek() {
                if eg as usize != g {
                    break;
                }
                for (site, axis) in error_factors(&gates[g], code) {
                    state.apply_pauli(site, axis);
                }
                pending.next();
            }
        }
        self.majoranas
            .iter()
            .zip(&self.omega_majoranas)
            .map(|(m, om)| {
                Ok(Coeff {
                    a: m.sign() * state.expectation(&m.string)?,
                    b: om.sign() * state.expectation(&om.string)?,
                })
            })
            .collect()
    }

    fn marginal(&self, circuit: &Circuit, events: &[ErrorEvent]) -> Vec<f64> {
        let gates = circuit.gates.gates();
        let split = |limit: usize| events.partition_point(|&(g, _)| (g as usize) < limit);
        let (prep_events, rest) = events.split_at(split(circuit.evolution_start));
        let (evo_events, measure_events) = rest.split_at(split(circuit.measure_start) - prep_events.len());

        let dim = self.majoranas.len();
        let mut coeffs = vec![Coeff::default(); dim];
        coeffs[dim - 1].a = -1.0;
        let mut pending = evo_events.iter().rev().peekable();
        for (i, rot) in self.rotations.iter().enumerate().rev() {
            let g = circuit.evolution_start + i;
            while let Some(&&(eg, code)) = pending.peek() {
                if eg as usize != g {
                    break;
                }
                let (x, z) = error_masks(&gates[g], code);
                let omega_sign = if self.omega.commutes_with(x, z) { 1.0 } else { -1.0 };
                for (c, m) in coeffs.iter_mut().zip(&self.majoranas) {
                    let s = if m.commutes_with(x, z) { 1.0 } else { -1.0 };
                    *c = Coeff {
                        a: s * c.a,
                        b: s * omega_sign * c.b,
                    };
                }
                pending.next();
            }
            let (cp, cq) = (coeffs[rot.p], coeffs[rot.q]);
            let (tp, tq) = if rot.through_omega {
                (cp.times_omega(), cq.times_omega())
            } else {
                (cp, cq)
            };
            coeffs[rot.p] = Coeff {
                a: rot.cos * cp.a - rot.sin * tq.a,
                b: rot.cos * cp.b - rot.sin * tq.b,
            };
            coeffs[rot.q] = Coeff {
                a: rot.cos * cq.a + rot.sin * tp.a,
                b: rot.cos * cq.b + rot.sin * tp.b,
            };
        }

        let initial = if prep_events.is_empty() {
            self.initial.clone()
        } else {
            self.expectations(prep_events, circuit)
                .expect("preparation was simulated once already")
        };
        let mut value: f64 = coeffs
            .iter()
            .zip(&initial)
            .map(|(c, e)| c.a * e.a + c.b * e.b)
            .sum();
        let support = circuit.support[0];
        for &(g, code) in measure_events {
            if error_factors(&gates[g as usize], code)
                .any(|(site, axis)| site == support && axis != PauliAxis::Z)
            {
                value = -value;
            }
        }
        let p0 = ((1.0 + value) / 2.0).clamp(0.0, 1.0);
        vec![p0, 1.0 - p0]
    }
}

// Majorana pair and sector coupling of a step gate, if it is one.
fn classify(params: &ModelParams, gate: &Gate) -> Option<Rotation> {
    let n = params.num_sites();
    let r = params.defect();
    // Jordan–Wigner position: sites after the defect come first.
    let pos = |site: usize| (site + n - r - 1) % n;
    let (p, q, through_omega, angle) = match *gate {
        Gate::Rx { site, angle } if site != r => (2 * pos(site), 2 * pos(site) + 1, false, angle),
        Gate::Rzz { a, b, angle } => {
            let (lo, hi) = (pos(a).min(pos(b)), pos(a).max(pos(b)));
            if hi == lo + 1 && hi <= n - 2 {
                (2 * lo + 1, 2 * lo + 2, false, angle)
            } else if lo == 0 && hi == n - 1 {
                (0, 2 * n - 2, true, angle)
            } else {
                return None;
            }
        }
        Gate::Rzx {
            z_site,
            x_site,
            angle,
        } if x_site == r && pos(z_site) == n - 2 => (2 * n - 3, 2 * n - 2, false, angle),
        _ => return None,
    };
    let (sin, cos) = angle.sin_cos();
    Some(Rotation {
        p,
        q,
        through_omega,
        cos,
        sin,
    })
}

/// SplitMix64 finalizer chained over `parts`.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let step = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    parts.iter().fold(step(seed), |acc, &p| step(acc ^ step(p)))
}

/// Raw (factor 1, no readout correction) and fully mitigated estimates of
/// the same sampled trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MitigatedSeries {
    pub raw: AutocorrSeries,
    pub mitigated: AutocorrSeries,
}

/// Which basis states the noisy trace averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Full,
    Partial { samples: usize, seed: u64 },
}

pub fn run_mitigated_series(
    params: &ModelParams,
    obs: &PauliString,
    steps: usize,
    translations: usize,
    sampling: Sampling,
    settings: &NoiseMetadata,
) -> Result<MitigatedSeries, NoiseError> {
    let n = params.num_sites();
    settings.config.validate(n)?;
    settings.pipeline.validate()?;
    let plan = TrajectoryPlan::new(params, obs, translations)?;
    let states = match sampling {
        Sampling::Full => (0..1u64 << n).collect(),
        Sampling::Partial { samples, seed } => sample_basis_states(n, samples, seed)?,
    };
    let translation = crate::circuit::build_translation(params, translations)?;
    let factors = &settings.pipeline.zne_factors;
    let readout = settings.config.readout.for_sites(
        &plan.measured.string.terms().iter().map(|t| t.0).collect::<Vec<_>>(),
    );

    let tasks: Vec<(usize, u64)> = (0..=steps)
        .flat_map(|step| states.iter().map(move |&k| (step, k)))
        .collect();
    let results: Vec<(f64, f64)> = tasks
        .par_iter()
        .map(|&(step, k)| -> Result<(f64, f64), NoiseError> {
            let mut evolution = translation.sequence.clone();
            for _ in 0..step {
                evolution.extend(&plan.step)?;
            }
            let mut points = Vec::with_capacity(factors.len());
            let mut raw = 0.0;
            for &factor in factors {
                let experiment = Experiment {
                    initial: k,
                    preparation: plan.basis.prepare(),
                    evolution: fold(&evolution, factor)?,
                    observable: plan.measured.clone(),
                    model: Some(*params),
                };
                let stream = mix_seed(settings.config.seed, &[step as u64, k, factor as u64]);
                let outcome = noisy_expectation(&experiment, &settings.config, stream)?;
                if factor == 1 {
                    raw = outcome.estimate;
                }
                let value = if settings.pipeline.readout_mitigation {
                    plan.measured.sign() * readout_mitigate(&outcome.histogram, &readout)?
                } else {
                    outcome.estimate
                };
                points.push((factor as f64, value));
            }
            let mitigated = if points.len() >= 2 {
                zne_extrapolate(&points)?
            } else {
                points[0].1
            };
            let weight = plan.basis.eigenvalue(k);
            Ok((weight * raw, weight * mitigated))
        })
        .collect::<Result<_, _>>()?;

    let count = states.len() as f64;
    let mut raw_values = vec![0.0; steps + 1];
    let mut mitigated_values = vec![0.0; steps + 1];
    for (&(step, _), (raw, mitigated)) in tasks.iter().zip(&results) {
        raw_values[step] += raw / count;
        mitigated_values[step] += mitigated / count;
    }
    let build = |values: Vec<f64>, estimator| {
        let mut s = AutocorrSeries::new(values, obs.clone(), estimator, *params, translations);
        s.samples = states.len();
        s.seed = match sampling {
            Sampling::Full => None,
            Sampling::Partial { seed, .. } => Some(seed),
        };
        s.noise = Some(settings.clone());
        s
    };
    Ok(MitigatedSeries {
        raw: build(raw_values, Estimator::NoisyRaw),
        mitigated: build(mitigated_values, Estimator::NoisyMitigated),
    })
}
