//! Simulation of the duality-twisted Floquet transverse-field Ising ring:
//! circuit construction, dense statevector evolution, infinite-temperature
//! autocorrelations, an exact free-fermion engine for the non-interacting
//! step, and an emulated noisy device with error mitigation.

pub mod circuit;
pub mod config;
pub mod freefermion;
pub mod model;
pub mod noise;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod statevector;
pub mod trace;

pub use circuit::qasm::{export_qasm, parse_qasm, QasmError};
pub use circuit::{
    basis_layer, build_floquet_step, build_translation, fold, BasisDirection, CircuitError, Gate,
    GateSequence, SignedPauli, Translation,
};
pub use config::{ConfigError, EstimatorSpec, RunConfig, ValidatedConfig};
pub use freefermion::{
    build_evolution, corr_oracle, find_zero_modes, FreeFermionError, MajoranaEvolution, Sector,
    ZeroMode,
};
pub use model::{ModelError, ModelParams, PauliAxis, PauliString, SymmetryOp};
pub use noise::{
    noisy_expectation, readout_mitigate, run_mitigated_series, zne_extrapolate, MitigationPipeline,
    NoiseConfig, NoiseError, NoiseMetadata,
};
pub use statevector::{StateError, StateVector};
pub use trace::{
    eigenbasis_for, full_trace, partial_trace, AutocorrSeries, Estimator, TraceError, TraceOptions,
};
