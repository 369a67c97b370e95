//! Physical model parameters, Pauli observables and the twisted Z2 symmetry.
//!
//! Sites live on a closed ring: site `L + j` is site `j`. The duality twist
//! sits on the bond `(r - 1, r)` where `r` is the defect site; the defect
//! site carries no transverse field.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest chain accepted by the model. Statevector paths have a much
/// lower limit, see [`crate::statevector::MAX_STATE_SITES`].
pub const MAX_SITES: usize = 4096;

/// Exchange coupling used for every device-scale run, in radians.
pub const DEFAULT_COUPLING: f64 = 0.75 * PI;
/// Transverse field used for every device-scale run, in radians.
pub const DEFAULT_FIELD: f64 = 0.2 * PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("L: chain needs at least 3 sites (L < 3), got {0}")]
    TooFewSites(i64),
    #[error("L: {0} sites exceed the maximum of {MAX_SITES}")]
    TooManySites(i64),
    #[error("defect: site {defect} is outside [0, {sites})")]
    DefectOutOfRange { defect: i64, sites: usize },
    #[error("{field}: value must be finite")]
    NonFinite { field: &'static str },
    #[error("observable: empty Pauli string")]
    EmptyObservable,
    #[error("observable: site {site} is outside [0, {sites})")]
    SiteOutOfRange { site: i64, sites: usize },
    #[error("observable: site {0} appears more than once")]
    DuplicateSite(usize),
}

/// Couplings and geometry of the twisted chain. All angles are radians and
/// enter the gates without extra factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    num_sites: usize,
    coupling: f64,
    field: f64,
    interaction: f64,
    defect: usize,
}

impl ModelParams {
    pub fn new(
        num_sites: usize,
        coupling: f64,
        field: f64,
        interaction: f64,
        defect: usize,
    ) -> Result<Self, ModelError> {
        if num_sites < 3 {
            return Err(ModelError::TooFewSites(num_sites as i64));
        }
        if num_sites > MAX_SITES {
            return Err(ModelError::TooManySites(num_sites as i64));
        }
        if defect >= num_sites {
            return Err(ModelError::DefectOutOfRange {
                defect: defect as i64,
                sites: num_sites,
            });
        }
        for (field_name, value) in [("J", coupling), ("g", field), ("Jx", interaction)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { field: field_name });
            }
        }
        Ok(Self {
            num_sites,
            coupling,
            field,
            interaction,
            defect,
        })
    }

    /// The non-interacting chain at the standard couplings with the defect
    /// on the last site.
    pub fn standard(num_sites: usize) -> Result<Self, ModelError> {
        Self::new(
            num_sites,
            DEFAULT_COUPLING,
            DEFAULT_FIELD,
            0.0,
            num_sites.saturating_sub(1),
        )
    }

    pub fn with_interaction(mut self, interaction: f64) -> Result<Self, ModelError> {
        if !interaction.is_finite() {
            return Err(ModelError::NonFinite { field: "Jx" });
        }
        self.interaction = interaction;
        Ok(self)
    }

    pub fn with_defect(self, defect: usize) -> Result<Self, ModelError> {
        Self::new(
            self.num_sites,
            self.coupling,
            self.field,
            self.interaction,
            defect,
        )
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Exchange coupling `J`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Transverse field `g`.
    pub fn field(&self) -> f64 {
        self.field
    }

    /// Integrability-breaking `σxσx` strength `Jx`.
    pub fn interaction(&self) -> f64 {
        self.interaction
    }

    pub fn defect(&self) -> usize {
        self.defect
    }

    pub fn is_interacting(&self) -> bool {
        self.interaction != 0.0
    }

    /// Bulk probe site `L/2 - 1`, far from the default defect.
    pub fn bulk_site(&self) -> usize {
        self.num_sites / 2 - 1
    }

    /// Reduces any (possibly negative) index onto the ring.
    pub fn wrap(&self, site: isize) -> usize {
        site.rem_euclid(self.num_sites as isize) as usize
    }

    pub fn dimension(&self) -> usize {
        1 << self.num_sites
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn letter(self) -> char {
        match self {
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A tensor product of single-site Pauli matrices, sorted by site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    terms: Vec<(usize, PauliAxis)>,
}

impl PauliString {
    /// Builds a string on an `num_sites` chain. Terms may be given in any
    /// order; repeated sites are rejected.
    pub fn new(
        num_sites: usize,
        terms: impl IntoIterator<Item = (usize, PauliAxis)>,
    ) -> Result<Self, ModelError> {
        let mut terms: Vec<_> = terms.into_iter().collect();
        if terms.is_empty() {
            return Err(ModelError::EmptyObservable);
        }
        terms.sort_by_key(|&(site, _)| site);
        for pair in terms.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(ModelError::DuplicateSite(pair[0].0));
            }
        }
        if let Some(&(site, _)) = terms.iter().find(|(site, _)| *site >= num_sites) {
            return Err(ModelError::SiteOutOfRange {
                site: site as i64,
                sites: num_sites,
            });
        }
        Ok(Self { terms })
    }

    pub fn single(num_sites: usize, site: usize, axis: PauliAxis) -> Result<Self, ModelError> {
        Self::new(num_sites, [(site, axis)])
    }

    pub fn terms(&self) -> &[(usize, PauliAxis)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn axis_at(&self, site: usize) -> Option<PauliAxis> {
        self.terms
            .binary_search_by_key(&site, |&(s, _)| s)
            .ok()
            .map(|i| self.terms[i].1)
    }

    pub fn max_site(&self) -> usize {
        self.terms.last().map_or(0, |&(s, _)| s)
    }

    /// Bitmask of the sites the string acts on.
    pub fn support_mask(&self) -> u64 {
        self.terms.iter().fold(0, |m, &(s, _)| m | (1 << s))
    }

    /// Bitmasks `(flip, phase)`: sites carrying X or Y flip the bit, sites
    /// carrying Y or Z contribute a `(-1)^bit` sign.
    pub(crate) fn masks(&self) -> (u64, u64, u32) {
        let mut flip = 0;
        let mut phase = 0;
        let mut num_y = 0;
        for &(site, axis) in &self.terms {
            match axis {
                PauliAxis::X => flip |= 1 << site,
                PauliAxis::Y => {
                    flip |= 1 << site;
                    phase |= 1 << site;
                    num_y += 1;
                }
                PauliAxis::Z => phase |= 1 << site,
            }
        }
        (flip, phase, num_y)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (site, axis) in &self.terms {
            write!(f, "{axis}{site}")?;
        }
        Ok(())
    }
}

/// The twisted spin-flip symmetry `Ω_r = i σz_r ∏_j σx_j`.
///
/// On states it acts as: flip every bit, multiply by `(-1)` if the defect
/// bit of the flipped index is set, multiply by `i`. It squares to the
/// identity and commutes with the non-interacting Floquet step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryOp {
    pub defect: usize,
}

impl SymmetryOp {
    pub fn for_model(params: &ModelParams) -> Self {
        Self {
            defect: params.defect(),
        }
    }
}
