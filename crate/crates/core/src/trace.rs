//! Infinite-temperature autocorrelations `A(n) = 2^-L Tr[O(n) O]`.
//!
//! The trace runs over the eigenbasis of `O`: each basis state `|k⟩` is
//! prepared by a rotation layer, optionally moved by a defect translation,
//! and evolved once while `⟨O⟩` is recorded after every period. The full
//! and sampled estimators share that code path, so sampling every state is
//! bit-identical to the full trace.

use std::fmt::{self, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{
    basis_layer, build_floquet_step, build_translation, observable_axes, BasisDirection,
    CircuitError, GateSequence, SignedPauli,
};
use crate::model::{ModelParams, PauliAxis, PauliString};
use crate::noise::NoiseMetadata;
use crate::statevector::{Program, StateError, StateVector, MAX_STATE_SITES};

/// Largest chain accepted by [`full_trace`] unless explicitly overridden.
pub const FULL_TRACE_LIMIT: usize = 14;

// Samples per reduction chunk. Fixed so the summation order never depends
// on the worker count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("L: full trace over 2^{sites} states exceeds the limit of L = {limit}")]
    TooLarge { sites: usize, limit: usize },
    #[error("samples: num_samples {requested} must lie in [1, 2^L = {available}]")]
    SampleCount { requested: usize, available: u64 },
    #[error("observable: site {site} is outside the {sites}-site chain")]
    Observable { site: usize, sites: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Full,
    Partial,
    FreeFermion,
    NoisyRaw,
    NoisyMitigated,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Full => "full",
            Estimator::Partial => "partial",
            Estimator::FreeFermion => "free-fermion",
            Estimator::NoisyRaw => "noisy-raw",
            Estimator::NoisyMitigated => "noisy-mitigated",
        })
    }
}

/// `A(n)` for `n = 0..=steps` plus how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrSeries {
    pub values: Vec<f64>,
    pub observable: PauliString,
    pub estimator: Estimator,
    pub samples: usize,
    pub seed: Option<u64>,
    pub params: ModelParams,
    pub translations: usize,
    /// Per-`n` range (max - min) of the per-sample terms `λ_k ⟨O(n)⟩_k`.
    pub spread: Vec<f64>,
    /// Per-sample terms, indexed `[sample][n]`, when requested.
    pub raw: Option<Vec<Vec<f64>>>,
    pub noise: Option<NoiseMetadata>,
}

impl AutocorrSeries {
    pub fn new(
        values: Vec<f64>,
        observable: PauliString,
        estimator: Estimator,
        params: ModelParams,
        translations: usize,
    ) -> Self {
        Self {
            values,
            observable,
            estimator,
            samples: 0,
            seed: None,
            params,
            translations,
            spread: Vec::new(),
            raw: None,
            noise: None,
        }
    }

    pub fn steps(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// Mean of `A(n)` over `range`, clipped to the available steps.
    pub fn window_mean(&self, range: std::ops::RangeInclusive<usize>) -> f64 {
        let end = (*range.end()).min(self.steps());
        let slice = &self.values[*range.start()..=end];
        slice.iter().sum::<f64>() / slice.len() as f64
    }

    pub fn max_abs_deviation(&self, other: &AutocorrSeries) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub const CSV_HEADER: &str = "n,value,estimator,samples,seed,observable,L,J,g,Jx,translations";

/// One CSV row per `(series, n)`, preceded by the header.
pub fn render_csv(series: &[AutocorrSeries]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in series {
        let seed = s.seed.map(|v| v.to_string()).unwrap_or_default();
        for (n, value) in s.values.iter().enumerate() {
            let _ = writeln!(
                out,
                "{n},{value},{},{},{seed},{},{},{},{},{},{}",
                s.estimator,
                s.samples,
                s.observable,
                s.params.num_sites(),
                s.params.coupling(),
                s.params.field(),
                s.params.interaction(),
                s.translations,
            );
        }
    }
    out
}

/// Product eigenbasis of a Pauli string.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenbasis {
    pub axes: Vec<PauliAxis>,
    support: u64,
}

impl Eigenbasis {
    /// `λ(bits) = ∏_{support} (-1)^bit`.
    pub fn eigenvalue(&self, bits: u64) -> f64 {
        if (bits & self.support).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn prepare(&self) -> GateSequence {
        basis_layer(&self.axes, BasisDirection::Prepare)
    }

    pub fn measure(&self) -> GateSequence {
        basis_layer(&self.axes, BasisDirection::Measure)
    }
}

pub fn eigenbasis_for(obs: &PauliString, num_sites: usize) -> Eigenbasis {
    Eigenbasis {
        axes: observable_axes(obs, num_sites),
        support: obs.support_mask(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    pub steps: usize,
    pub translations: usize,
    pub keep_raw: bool,
    /// Lift the [`FULL_TRACE_LIMIT`] guard.
    pub allow_large: bool,
}

impl TraceOptions {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            translations: 0,
            keep_raw: false,
            allow_large: false,
        }
    }

    pub fn with_translations(mut self, translations: usize) -> Self {
        self.translations = translations;
        self
    }

    pub fn with_raw(mut self) -> Self {
        self.keep_raw = true;
        self
    }
}

pub fn full_trace(
    params: &ModelParams,
    obs: &PauliString,
    options: TraceOptions,
) -> Result<AutocorrSeries, TraceError> {
    let n = params.num_sites();
    if n > FULL_TRACE_LIMIT && !options.allow_large {
        return Err(TraceError::TooLarge {
            sites: n,
            limit: FULL_TRACE_LIMIT,
        });
    }
    let states: Vec<u64> = (0..1u64 << n).collect();
    let mut series = run_trace(params, obs, &states, options)?;
    series.estimator = Estimator::Full;
    Ok(series)
}

pub fn partial_trace(
    params: &ModelParams,
    obs: &PauliString,
    num_samples: usize,
    seed: u64,
    options: TraceOptions,
) -> Result<AutocorrSeries, TraceError> {
    let states = sample_basis_states(params.num_sites(), num_samples, seed)?;
    let mut series = run_trace(params, obs, &states, options)?;
    series.estimator = Estimator::Partial;
    series.seed = Some(seed);
    Ok(series)
}

/// `num_samples` distinct basis indices drawn uniformly without
/// replacement, returned in ascending order.
pub fn sample_basis_states(
    num_sites: usize,
    num_samples: usize,
    seed: u64,
) -> Result<Vec<u64>, TraceError> {
    if num_sites > MAX_STATE_SITES {
        return Err(StateError::TooLarge(num_sites).into());
    }
    let available = 1u64 << num_sites;
    if num_samples == 0 || num_samples as u64 > available {
        return Err(TraceError::SampleCount {
            requested: num_samples,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states: Vec<u64> = index::sample(&mut rng, available as usize, num_samples)
        .into_iter()
        .map(|i| i as u64)
        .collect();
    states.sort_unstable();
    Ok(states)
}

/// Everything a trajectory needs, built once per trace.
pub(crate) struct TrajectoryPlan {
    pub(crate) basis: Eigenbasis,
    /// Basis rotation followed by the translation unitary.
    pub(crate) preparation: GateSequence,
    pub(crate) step: GateSequence,
    /// `T O T†`, measured after each period.
    pub(crate) measured: SignedPauli,
}

impl TrajectoryPlan {
    pub(crate) fn new(
        params: &ModelParams,
        obs: &PauliString,
        translations: usize,
    ) -> Result<Self, TraceError> {
        let n = params.num_sites();
        if n > MAX_STATE_SITES {
            return Err(StateError::TooLarge(n).into());
        }
        if obs.max_site() >= n {
            return Err(TraceError::Observable {
                site: obs.max_site(),
                sites: n,
            });
        }
        let basis = eigenbasis_for(obs, n);
        let translation = build_translation(params, translations)?;
        let preparation = basis.prepare().then(&translation.sequence)?;
        Ok(Self {
            measured: translation.push_forward(&SignedPauli::positive(obs.clone())),
            basis,
            preparation,
            step: build_floquet_step(params),
        })
    }
}

struct ChunkStats {
    sum: Vec<f64>,
    min: Vec<f64>,
    max: Vec<f64>,
    raw: Vec<Vec<f64>>,
}

fn run_trace(
    params: &ModelParams,
    obs: &PauliString,
    states: &[u64],
    options: TraceOptions,
) -> Result<AutocorrSeries, TraceError> {
    let plan = TrajectoryPlan::new(params, obs, options.translations)?;
    let program = Program::compile(&plan.step);
    let n = params.num_sites();
    let steps = options.steps;

    let chunks: Vec<ChunkStats> = states
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<ChunkStats, TraceError> {
            let mut stats = ChunkStats {
                sum: vec![0.0; steps + 1],
                min: vec![f64::INFINITY; steps + 1],
                max: vec![f64::NEG_INFINITY; steps + 1],
                raw: Vec::new(),
            };
            let mut state = StateVector::basis(n, 0)?;
            for &bits in chunk {
                state.reset_to_basis(bits);
                state.apply_in_place(&plan.preparation)?;
                let weight = plan.basis.eigenvalue(bits) * plan.measured.sign();
                let mut row = Vec::with_capacity(if options.keep_raw { steps + 1 } else { 0 });
                for step in 0..=steps {
                    if step > 0 {
                        state.run(&program)?;
                    }
                    let term = weight * state.expectation(&plan.measured.string)?;
                    stats.sum[step] += term;
                    stats.min[step] = stats.min[step].min(term);
                    stats.max[step] = stats.max[step].max(term);
                    if options.keep_raw {
                        row.push(term);
                    }
                }
                if options.keep_raw {
                    stats.raw.push(row);
                }
            }
            Ok(stats)
        })
        .collect::<Result<_, _>>()?;

    let mut sum = vec![0.0; steps + 1];
    let mut min = vec![f64::INFINITY; steps + 1];
    let mut max = vec![f64::NEG_INFINITY; steps + 1];
    let mut raw = Vec::new();
    for chunk in chunks {
        for step in 0..=steps {
            sum[step] += chunk.sum[step];
            min[step] = min[step].min(chunk.min[step]);
            max[step] = max[step].max(chunk.max[step]);
        }
        raw.extend(chunk.raw);
    }
    let count = states.len() as f64;
    let mut series = AutocorrSeries::new(
        sum.iter().map(|s| s / count).collect(),
        obs.clone(),
        Estimator::Partial,
        *params,
        options.translations,
    );
    series.samples = states.len();
    series.spread = max.iter().zip(&min).map(|(hi, lo)| hi - lo).collect();
    series.raw = options.keep_raw.then_some(raw);
    Ok(series)
}
