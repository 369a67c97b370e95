//! Exact Majorana-fermion description of the non-interacting twisted step.
//!
//! Order the sites starting just after the defect, `s_k = r + 1 + k`, so
//! the defect is the last site, and write the usual Jordan–Wigner
//! Majoranas `γ_2k = S_k σz_{s_k}`, `γ_2k+1 = S_k σy_{s_k}` with
//! `S_k = ∏_{m<k} σx_{s_m}`. The twisted chain only ever uses the first
//! `2L - 2` of them together with the parity `P = ∏ σx`. Multiplying each of
//! those `2L - 1` operators by `i γ_{2L-2}` gives a set `χ_0 … χ_{2L-2}`
//! that still anticommute pairwise, keep every bilinear unchanged, and
//! commute with `Ω_r`. In particular `χ_{2L-2} = -σy_r`.
//!
//! Every gate of the step is then `exp(-i θ/2 · i s χ_p χ_q)`, whose
//! Heisenberg action is a planar rotation of `(χ_p, χ_q)`. The sign `s` is
//! `+1` except for the ring-closing bond `(r, r+1)`, where it is the `Ω_r`
//! eigenvalue. Within each sector the step is therefore an SO(2L-1)
//! matrix, and `χ_a(n) = Σ_b (Mⁿ)_ab χ_b`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::circuit::SignedPauli;
use crate::model::{ModelParams, PauliAxis, PauliString};
use crate::trace::{AutocorrSeries, Estimator};

/// Default `|λ - 1|` threshold for counting unit eigenvalues.
pub const DEFAULT_ZERO_MODE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FreeFermionError {
    #[error("interacting model has no quadratic representation (Jx = {0})")]
    Interacting(f64),
    #[error("Majorana index {index} is outside [0, {dim})")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// Eigenvalue of `Ω_r` labelling a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sector {
    Even,
    Odd,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::Even, Sector::Odd];

    pub fn sign(self) -> f64 {
        match self {
            Sector::Even => 1.0,
            Sector::Odd => -1.0,
        }
    }
}

/// One-period orthogonal evolution of the `2L - 1` Majoranas in a sector.
#[derive(Debug, Clone)]
pub struct MajoranaEvolution {
    pub sector: Sector,
    pub matrix: DMatrix<f64>,
    /// Site hosting each Majorana; the last one sits on the defect.
    pub site_map: Vec<usize>,
    num_sites: usize,
}

impl MajoranaEvolution {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Index of the Majorana equal (up to sign) to `σy_r`.
    pub fn defect_index(&self) -> usize {
        self.dim() - 1
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// `max |MᵀM - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let gram = self.matrix.transpose() * &self.matrix;
        (gram - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.clone().determinant()
    }

    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        self.matrix
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect()
    }
}

/// Position of the `k`-th Jordan–Wigner site.
fn jw_site(params: &ModelParams, k: usize) -> usize {
    (params.defect() + 1 + k) % params.num_sites()
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, angle: f64, sign: f64) {
    let (s, c) = angle.sin_cos();
    m[(p, p)] = c;
    m[(q, q)] = c;
    m[(p, q)] = sign * s;
    m[(q, p)] = -sign * s;
}

pub fn build_evolution(
    params: &ModelParams,
    sector: Sector,
) -> Result<MajoranaEvolution, FreeFermionError> {
    if params.is_interacting() {
        return Err(FreeFermionError::Interacting(params.interaction()));
    }
    let n = params.num_sites();
    let dim = 2 * n - 1;
    let last = dim - 1;
    let (coupling, field) = (params.coupling(), params.field());

    let mut exchange = DMatrix::identity(dim, dim);
    for k in 0..n - 2 {
        rotate(&mut exchange, 2 * k + 1, 2 * k + 2, coupling, 1.0);
    }
    rotate(&mut exchange, 0, last, coupling, sector.sign());

    let mut twist = DMatrix::identity(dim, dim);
    rotate(&mut twist, 2 * n - 3, last, coupling, 1.0);

    let mut transverse = DMatrix::identity(dim, dim);
    for k in 0..n - 1 {
        rotate(&mut transverse, 2 * k, 2 * k + 1, field, 1.0);
    }

    // The field layer acts last on states, so it is the leftmost factor in
    // the Heisenberg picture.
    let matrix = transverse * twist * exchange;

    let mut site_map: Vec<usize> = (0..n - 1)
        .flat_map(|k| [jw_site(params, k); 2])
        .collect();
    site_map.push(params.defect());

    Ok(MajoranaEvolution {
        sector,
        matrix,
        site_map,
        num_sites: n,
    })
}

/// The spin operator equal to Majorana `χ_index`.
pub fn majorana_operator(params: &ModelParams, index: usize) -> Result<SignedPauli, FreeFermionError> {
    let n = params.num_sites();
    let dim = 2 * n - 1;
    if index >= dim {
        return Err(FreeFermionError::IndexOutOfRange { index, dim });
    }
    let r = params.defect();
    if index == dim - 1 {
        return Ok(SignedPauli {
            negative: true,
            string: PauliString::single(n, r, PauliAxis::Y).expect("defect in range"),
        });
    }
    let k = index / 2;
    let (head, negative) = if index % 2 == 0 {
        (PauliAxis::Y, false)
    } else {
        (PauliAxis::Z, true)
    };
    let terms = std::iter::once((jw_site(params, k), head))
        .chain((k + 1..n - 1).map(|m| (jw_site(params, m), PauliAxis::X)))
        .chain(std::iter::once((r, PauliAxis::Z)));
    Ok(SignedPauli {
        negative,
        string: PauliString::new(n, terms).expect("distinct in-range sites"),
    })
}

/// An eigenvalue-one eigenvector of a Majorana evolution.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroMode {
    pub vector: Vec<f64>,
    /// Squared weight per site.
    pub profile: Vec<f64>,
    /// Squared weight on the `σy_r` Majorana.
    pub defect_overlap: f64,
}

impl ZeroMode {
    pub fn peak_site(&self) -> usize {
        self.profile
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i)
    }
}

/// Orthonormal basis of `ker(M - I)`. For an orthogonal `M` the singular
/// values of `M - I` are exactly `|λ - 1|`, so thresholding them counts the
/// unit eigenvalues.
pub fn find_zero_modes(ev: &MajoranaEvolution, tol: f64) -> Vec<ZeroMode> {
    let dim = ev.dim();
    let shifted = &ev.matrix - DMatrix::<f64>::identity(dim, dim);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut modes: Vec<ZeroMode> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &sigma)| sigma <= tol)
        .map(|(row, _)| {
            let vector: Vec<f64> = v_t.row(row).iter().copied().collect();
            let mut profile = vec![0.0; ev.num_sites()];
            for (component, &site) in vector.iter().zip(&ev.site_map) {
                profile[site] += component * component;
            }
            ZeroMode {
                defect_overlap: vector[ev.defect_index()].powi(2),
                vector,
                profile,
            }
        })
        .collect();
    modes.sort_by(|a, b| b.defect_overlap.total_cmp(&a.defect_overlap));
    modes
}

/// `Σ_modes |v_a|²` averaged over sectors: the infinite-time mean of the
/// Majorana `a` autocorrelation.
pub fn persistent_weight(
    params: &ModelParams,
    index: usize,
    tol: f64,
) -> Result<f64, FreeFermionError> {
    let mut total = 0.0;
    for sector in Sector::BOTH {
        let ev = build_evolution(params, sector)?;
        if index >= ev.dim() {
            return Err(FreeFermionError::IndexOutOfRange {
                index,
                dim: ev.dim(),
            });
        }
        total += find_zero_modes(&ev, tol)
            .iter()
            .map(|m| m.vector[index].powi(2))
            .sum::<f64>();
    }
    Ok(total / 2.0)
}

/// `A(n) = ½ Σ_sectors (Mⁿ)_aa` for `n = 0..=n_max`.
pub fn corr_oracle(
    params: &ModelParams,
    index: usize,
    n_max: usize,
) -> Result<AutocorrSeries, FreeFermionError> {
    let observable = majorana_operator(params, index)?;
    let mut values = vec![0.0; n_max + 1];
    for sector in Sector::BOTH {
        let ev = build_evolution(params, sector)?;
        let mut column = DVector::<f64>::zeros(ev.dim());
        column[index] = 1.0;
        for value in values.iter_mut() {
            *value += column[index] / 2.0;
            column = &ev.matrix * column;
        }
    }
    Ok(AutocorrSeries::new(
        values,
        observable.string,
        Estimator::FreeFermion,
        *params,
        0,
    ))
}

/// Summary written by the `zero-mode` command.
#[derive(Debug, Clone, Serialize)]
pub struct SectorReport {
    pub sector: Sector,
    pub eigenvalues: Vec<(f64, f64)>,
    pub zero_mode_count: usize,
    pub orthogonality_error: f64,
    pub determinant: f64,
    pub modes: Vec<ZeroMode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroModeReport {
    pub num_sites: usize,
    pub coupling: f64,
    pub field: f64,
    pub defect: usize,
    pub tolerance: f64,
    pub sectors: Vec<SectorReport>,
    /// Sector-averaged long-time value of the `σy_r` autocorrelation.
    pub defect_overlap: f64,
}

pub fn analyze(params: &ModelParams, tol: f64) -> Result<ZeroModeReport, FreeFermionError> {
    let mut sectors = Vec::new();
    for sector in Sector::BOTH {
        let ev = build_evolution(params, sector)?;
        let modes = find_zero_modes(&ev, tol);
        sectors.push(SectorReport {
            sector,
            eigenvalues: ev.eigenvalues(),
            zero_mode_count: modes.len(),
            orthogonality_error: ev.orthogonality_error(),
            determinant: ev.determinant(),
            modes,
        });
    }
    let index = 2 * params.num_sites() - 2;
    let defect_overlap = sectors
        .iter()
        .map(|s| s.modes.iter().map(|m| m.vector[index].powi(2)).sum::<f64>())
        .sum::<f64>()
        / 2.0;
    Ok(ZeroModeReport {
        num_sites: params.num_sites(),
        coupling: params.coupling(),
        field: params.field(),
        defect: params.defect(),
        tolerance: tol,
        sectors,
        defect_overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_couplings_give_identity() {
        let p = ModelParams::new(5, 0.0, 0.0, 0.0, 4).unwrap();
        let ev = build_evolution(&p, Sector::Even).unwrap();
        assert_eq!(ev.matrix, DMatrix::identity(9, 9));
        assert_eq!(find_zero_modes(&ev, DEFAULT_ZERO_MODE_TOL).len(), 9);
    }

    #[test]
    fn interacting_model_is_rejected() {
        let p = ModelParams::standard(6).unwrap().with_interaction(0.1).unwrap();
        assert_eq!(
            build_evolution(&p, Sector::Odd).unwrap_err(),
            FreeFermionError::Interacting(0.1)
        );
        assert!(corr_oracle(&p, 0, 3).is_err());
    }

    #[test]
    fn standard_chain_is_special_orthogonal() {
        let p = ModelParams::standard(7).unwrap();
        for sector in Sector::BOTH {
            let ev = build_evolution(&p, sector).unwrap();
            assert!(ev.orthogonality_error() < 1e-12);
            assert!((ev.determinant() - 1.0).abs() < 1e-12);
            for (re, im) in ev.eigenvalues() {
                assert!(((re * re + im * im).sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_starts_at_one() {
        let p = ModelParams::standard(5).unwrap();
        let s = corr_oracle(&p, 8, 4).unwrap();
        assert_eq!(s.values[0], 1.0);
        assert_eq!(s.observable.to_string(), "Y4");
    }

    #[test]
    fn majorana_strings() {
        let p = ModelParams::standard(4).unwrap();
        let ops: Vec<String> = (0..7)
            .map(|a| majorana_operator(&p, a).unwrap().to_string())
            .collect();
        assert_eq!(ops, ["Y0X1X2Z3", "-Z0X1X2Z3", "Y1X2Z3", "-Z1X2Z3", "Y2Z3", "-Z2Z3", "-Y3"]);
        assert!(majorana_operator(&p, 7).is_err());
    }

    #[test]
    fn out_of_range_index() {
        let p = ModelParams::standard(4).unwrap();
        assert_eq!(
            corr_oracle(&p, 9, 2).unwrap_err(),
            FreeFermionError::IndexOutOfRange { index: 9, dim: 7 }
        );
    }
}
