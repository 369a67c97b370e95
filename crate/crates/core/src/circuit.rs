//! Gate-level construction of the Floquet step and derived circuits.
//!
//! Every rotation uses `R_P(θ) = exp(-i θ/2 P)`. With that convention the
//! layer `exp(-i H_zz / 2)` is one `RZZ(J)` per bond, and likewise for the
//! twist (`RZX(J)`), field (`RX(g)`) and interaction (`RXX(Jx)`) layers.
//! Sequences list gates in the order they act on a state.

mod clifford;
pub mod qasm;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelParams, PauliAxis, PauliString};

pub use clifford::SignedPauli;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("gate acts on site {site} but the register has {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("two-site gate needs distinct sites, got ({0}, {0})")]
    RepeatedSite(usize),
    #[error("translation count {count} must be below the chain length {sites}")]
    TranslationCount { count: usize, sites: usize },
    #[error("noise factor {0} must be odd and at least 1")]
    NoiseFactor(i64),
    #[error("basis layer needs one axis per site ({expected}), got {got}")]
    AxisCount { expected: usize, got: usize },
    #[error("sequence acts on {got} sites, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rx { site: usize, angle: f64 },
    Ry { site: usize, angle: f64 },
    Rzz { a: usize, b: usize, angle: f64 },
    /// `exp(-i θ/2 σz_z ⊗ σx_x)`; the first site carries σz.
    Rzx { z_site: usize, x_site: usize, angle: f64 },
    Rxx { a: usize, b: usize, angle: f64 },
    H { site: usize },
    Cz { a: usize, b: usize },
}

impl Gate {
    /// The sites the gate touches, in gate order.
    pub fn sites(&self) -> GateSites {
        match *self {
            Gate::Rx { site, .. } | Gate::Ry { site, .. } | Gate::H { site } => {
                GateSites::One(site)
            }
            Gate::Rzz { a, b, .. } | Gate::Rxx { a, b, .. } | Gate::Cz { a, b } => {
                GateSites::Two(a, b)
            }
            Gate::Rzx { z_site, x_site, .. } => GateSites::Two(z_site, x_site),
        }
    }

    pub fn is_two_site(&self) -> bool {
        matches!(self.sites(), GateSites::Two(..))
    }

    /// Diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, Gate::Rzz { .. } | Gate::Cz { .. })
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { site, angle } => Gate::Rx { site, angle: -angle },
            Gate::Ry { site, angle } => Gate::Ry { site, angle: -angle },
            Gate::Rzz { a, b, angle } => Gate::Rzz { a, b, angle: -angle },
            Gate::Rzx {
                z_site,
                x_site,
                angle,
            } => Gate::Rzx {
                z_site,
                x_site,
                angle: -angle,
            },
            Gate::Rxx { a, b, angle } => Gate::Rxx { a, b, angle: -angle },
            g @ (Gate::H { .. } | Gate::Cz { .. }) => g,
        }
    }

    fn check(&self, num_sites: usize) -> Result<(), CircuitError> {
        let (a, b) = match self.sites() {
            GateSites::One(s) => (s, None),
            GateSites::Two(a, b) => (a, Some(b)),
        };
        for site in std::iter::once(a).chain(b) {
            if site >= num_sites {
                return Err(CircuitError::SiteOutOfRange {
                    site,
                    sites: num_sites,
                });
            }
        }
        if b == Some(a) {
            return Err(CircuitError::RepeatedSite(a));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateSites {
    One(usize),
    Two(usize, usize),
}

/// An ordered gate list on a fixed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    num_sites: usize,
    gates: Vec<Gate>,
    label: String,
}

impl GateSequence {
    pub fn new(num_sites: usize, label: impl Into<String>) -> Self {
        Self {
            num_sites,
            gates: Vec::new(),
            label: label.into(),
        }
    }

    pub fn from_gates(
        num_sites: usize,
        label: impl Into<String>,
        gates: impl IntoIterator<Item = Gate>,
    ) -> Result<Self, CircuitError> {
        let mut seq = Self::new(num_sites, label);
        for gate in gates {
            seq.push(gate)?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.check(self.num_sites)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends all gates of `other`.
    pub fn extend(&mut self, other: &GateSequence) -> Result<(), CircuitError> {
        if other.num_sites != self.num_sites {
            return Err(CircuitError::WidthMismatch {
                expected: self.num_sites,
                got: other.num_sites,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    pub fn then(mut self, other: &GateSequence) -> Result<Self, CircuitError> {
        self.extend(other)?;
        Ok(self)
    }

    /// Reversed order with every gate inverted.
    pub fn inverse(&self) -> GateSequence {
        GateSequence {
            num_sites: self.num_sites,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            label: format!("{}_inv", self.label),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    // Builders only emit in-range gates.
    fn push_valid(&mut self, gate: Gate) {
        debug_assert!(gate.check(self.num_sites).is_ok());
        self.gates.push(gate);
    }
}

/// One Floquet period: `RZZ(J)` on every untwisted bond, `RZX(J)` on the
/// twisted bond `(r-1, r)`, `RX(g)` on every site but `r`, then `RXX(Jx)` on
/// every bond when the interaction is switched on. Zero-angle layers are
/// left out.
pub fn build_floquet_step(params: &ModelParams) -> GateSequence {
    let n = params.num_sites();
    let r = params.defect();
    let twisted = params.wrap(r as isize - 1);
    let mut seq = GateSequence::new(n, "floquet_step");

    if params.coupling() != 0.0 {
        // Ascending first site puts the ring-closing bond (L-1, 0) last.
        for j in (0..n).filter(|&j| j != twisted) {
            seq.push_valid(Gate::Rzz {
                a: j,
                b: (j + 1) % n,
                angle: params.coupling(),
            });
        }
        seq.push_valid(Gate::Rzx {
            z_site: twisted,
            x_site: r,
            angle: params.coupling(),
        });
    }
    if params.field() != 0.0 {
        for j in (0..n).filter(|&j| j != r) {
            seq.push_valid(Gate::Rx {
                site: j,
                angle: params.field(),
            });
        }
    }
    if params.is_interacting() {
        for j in 0..n {
            seq.push_valid(Gate::Rxx {
                a: j,
                b: (j + 1) % n,
                angle: params.interaction(),
            });
        }
    }
    seq
}

/// Defect translation `T` together with its effect on the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    /// Gates of `T`, in state order.
    pub sequence: GateSequence,
    /// Field-free site of the translated model.
    pub defect: usize,
    /// `T† σy_r T`: the spin-language image of the zero mode after the move.
    pub zero_mode: SignedPauli,
}

impl Translation {
    /// Heisenberg image `T† O T` of an observable in the original frame.
    pub fn pull_back(&self, obs: &SignedPauli) -> SignedPauli {
        self.sequence
            .gates()
            .iter()
            .rev()
            .fold(obs.clone(), |acc, gate| acc.conjugate_by(gate))
    }

    /// `T O T†`: what must be measured after evolving `T|k⟩` with the
    /// untranslated step to sample `O` under the translated dynamics.
    pub fn push_forward(&self, obs: &SignedPauli) -> SignedPauli {
        self.sequence
            .gates()
            .iter()
            .fold(obs.clone(), |acc, gate| acc.conjugate_by(gate))
    }
}

/// Moves the twist `count` bonds backwards with `U_s = CZ_{s-1,s} H_{s-1}`.
///
/// The translated model's step is `T† U T` with `T = U_r U_{r-1} ⋯`, so the
/// factor nearest the state, `U_{r-count+1}`, is emitted first.
pub fn build_translation(params: &ModelParams, count: usize) -> Result<Translation, CircuitError> {
    let n = params.num_sites();
    if count >= n {
        return Err(CircuitError::TranslationCount { count, sites: n });
    }
    let r = params.defect() as isize;
    let mut seq = GateSequence::new(n, "translation");
    for shift in (0..count as isize).rev() {
        let site = params.wrap(r - shift);
        let left = params.wrap(r - shift - 1);
        seq.push_valid(Gate::H { site: left });
        seq.push_valid(Gate::Cz { a: left, b: site });
    }
    let mut translation = Translation {
        sequence: seq,
        defect: params.wrap(r - count as isize),
        zero_mode: SignedPauli::positive(
            PauliString::single(n, params.defect(), PauliAxis::Y)
                .expect("defect site is in range"),
        ),
    };
    translation.zero_mode = translation.pull_back(&translation.zero_mode);
    Ok(translation)
}

/// Global unitary folding: `seq (seq⁻¹ seq)^((k-1)/2)`.
pub fn fold(seq: &GateSequence, noise_factor: i64) -> Result<GateSequence, CircuitError> {
    if noise_factor < 1 || noise_factor % 2 == 0 {
        return Err(CircuitError::NoiseFactor(noise_factor));
    }
    if noise_factor == 1 {
        return Ok(seq.clone());
    }
    let inverse = seq.inverse();
    let mut folded = GateSequence::new(seq.num_sites(), format!("fold{noise_factor}"));
    folded.gates.reserve(seq.len() * noise_factor as usize);
    folded.gates.extend_from_slice(seq.gates());
    for _ in 0..(noise_factor - 1) / 2 {
        folded.gates.extend_from_slice(inverse.gates());
        folded.gates.extend_from_slice(seq.gates());
    }
    Ok(folded)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisDirection {
    /// Computational basis state → product eigenstate (bit 0 ↦ eigenvalue +1).
    Prepare,
    /// Inverse of `Prepare`.
    Measure,
}

/// Single-site rotations between the computational basis and the product
/// eigenbasis given per site. Preparation uses `RY(π/2)` for X and
/// `RX(-π/2)` for Y, which rotate the z direction onto x and y.
pub fn basis_layer(
    axes: &[PauliAxis],
    direction: BasisDirection,
) -> GateSequence {
    let mut seq = GateSequence::new(
        axes.len(),
        match direction {
            BasisDirection::Prepare => "prepare",
            BasisDirection::Measure => "measure",
        },
    );
    let sign = match direction {
        BasisDirection::Prepare => 1.0,
        BasisDirection::Measure => -1.0,
    };
    for (site, axis) in axes.iter().enumerate() {
        match axis {
            PauliAxis::X => seq.push_valid(Gate::Ry {
                site,
                angle: sign * FRAC_PI_2,
            }),
            PauliAxis::Y => seq.push_valid(Gate::Rx {
                site,
                angle: -sign * FRAC_PI_2,
            }),
            PauliAxis::Z => {}
        }
    }
    seq
}

/// Eigenbasis axes of an observable: its own axis on the support, Z
/// elsewhere.
pub fn observable_axes(obs: &PauliString, num_sites: usize) -> Vec<PauliAxis> {
    let mut axes = vec![PauliAxis::Z; num_sites];
    for &(site, axis) in obs.terms() {
        axes[site] = axis;
    }
    axes
}
