//! Dense-matrix reference implementations, used only to check the fast
//! paths. Everything here is built from Pauli matrices and a generic
//! matrix exponential, independently of the gate kernels.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{Gate, GateSequence};
use crate::model::{ModelParams, PauliAxis, PauliString};

pub type Dense = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(axis: PauliAxis) -> Dense {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match axis {
        PauliAxis::X => Dense::from_row_slice(2, 2, &[z, one, one, z]),
        PauliAxis::Y => Dense::from_row_slice(2, 2, &[z, -i, i, z]),
        PauliAxis::Z => Dense::from_row_slice(2, 2, &[one, z, z, -one]),
    }
}

pub fn identity(num_sites: usize) -> Dense {
    Dense::identity(1 << num_sites, 1 << num_sites)
}

/// `⊗_j P_j` with site 0 as the least significant bit, i.e. the rightmost
/// Kronecker factor.
pub fn embed(num_sites: usize, factors: &[(usize, Dense)]) -> Dense {
    let mut out = Dense::identity(1, 1);
    for site in (0..num_sites).rev() {
        let factor = factors
            .iter()
            .find(|(s, _)| *s == site)
            .map_or_else(|| Dense::identity(2, 2), |(_, m)| m.clone());
        out = out.kronecker(&factor);
    }
    out
}

pub fn pauli_string(num_sites: usize, obs: &PauliString) -> Dense {
    let factors: Vec<_> = obs.terms().iter().map(|&(s, a)| (s, pauli(a))).collect();
    embed(num_sites, &factors)
}

fn term(num_sites: usize, ops: &[(usize, PauliAxis)]) -> Dense {
    let factors: Vec<_> = ops.iter().map(|&(s, a)| (s, pauli(a))).collect();
    embed(num_sites, &factors)
}

/// `exp(A)` by scaling and squaring of a Taylor series.
pub fn expm(a: &Dense) -> Dense {
    let norm = a.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
    let scaled = a / c(2f64.powi(squarings as i32), 0.0);
    let mut result = Dense::identity(a.nrows(), a.ncols());
    let mut term = Dense::identity(a.nrows(), a.ncols());
    for k in 1..=30 {
        term = &term * &scaled / c(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(-i θ/2 H)`.
pub fn evolve(h: &Dense, theta: f64) -> Dense {
    expm(&(h * c(0.0, -theta / 2.0)))
}

pub fn gate(num_sites: usize, g: &Gate) -> Dense {
    use PauliAxis::*;
    match *g {
        Gate::Rx { site, angle } => evolve(&term(num_sites, &[(site, X)]), angle),
        Gate::Ry { site, angle } => evolve(&term(num_sites, &[(site, Y)]), angle),
        Gate::Rzz { a, b, angle } => evolve(&term(num_sites, &[(a, Z), (b, Z)]), angle),
        Gate::Rzx {
            z_site,
            x_site,
            angle,
        } => evolve(&term(num_sites, &[(z_site, Z), (x_site, X)]), angle),
        Gate::Rxx { a, b, angle } => evolve(&term(num_sites, &[(a, X), (b, X)]), angle),
        Gate::H { site } => {
            let h = (pauli(X) + pauli(Z)) / c(std::f64::consts::SQRT_2, 0.0);
            embed(num_sites, &[(site, h)])
        }
        Gate::Cz { a, b } => {
            let id = identity(num_sites);
            let za = term(num_sites, &[(a, Z)]);
            let zb = term(num_sites, &[(b, Z)]);
            let zz = term(num_sites, &[(a, Z), (b, Z)]);
            (&id + za + zb - zz) / c(2.0, 0.0)
        }
    }
}

/// Product of the gate matrices, last gate leftmost.
pub fn sequence(seq: &GateSequence) -> Dense {
    seq.gates()
        .iter()
        .fold(identity(seq.num_sites()), |acc, g| gate(seq.num_sites(), g) * acc)
}

/// `Σ` of weighted Pauli terms.
pub fn hamiltonian(num_sites: usize, terms: &[(f64, Vec<(usize, PauliAxis)>)]) -> Dense {
    terms.iter().fold(
        Dense::zeros(1 << num_sites, 1 << num_sites),
        |acc, (w, ops)| acc + term(num_sites, ops) * c(*w, 0.0),
    )
}

/// One period `e^{-iH_xx/2} e^{-iH_x/2} e^{-iH_zx/2} e^{-iH_zz/2}` built from
/// the Hamiltonian layers.
pub fn floquet_unitary(params: &ModelParams) -> Dense {
    use PauliAxis::*;
    let n = params.num_sites();
    let r = params.defect();
    let left = params.wrap(r as isize - 1);
    let zz: Vec<_> = (0..n)
        .filter(|&j| j != left)
        .map(|j| (params.coupling(), vec![(j, Z), ((j + 1) % n, Z)]))
        .collect();
    let zx = vec![(params.coupling(), vec![(left, Z), (r, X)])];
    let x: Vec<_> = (0..n)
        .filter(|&j| j != r)
        .map(|j| (params.field(), vec![(j, X)]))
        .collect();
    let xx: Vec<_> = (0..n)
        .map(|j| (params.interaction(), vec![(j, X), ((j + 1) % n, X)]))
        .collect();
    [xx, x, zx, zz]
        .iter()
        .map(|layer| evolve(&hamiltonian(n, layer), 1.0))
        .fold(identity(n), |acc, m| acc * m)
}

/// `Ω_r = i σz_r ∏ σx_j`.
pub fn symmetry(num_sites: usize, defect: usize) -> Dense {
    let flips: Vec<_> = (0..num_sites).map(|j| (j, PauliAxis::X)).collect();
    term(num_sites, &[(defect, PauliAxis::Z)]) * term(num_sites, &flips) * c(0.0, 1.0)
}

/// `2^-L Tr[U†ⁿ O Uⁿ O]` for `n = 0..=n_max`.
pub fn autocorrelation(u: &Dense, obs: &Dense, n_max: usize) -> Vec<f64> {
    let dim = u.nrows() as f64;
    let mut evolved = obs.clone();
    let adjoint = u.adjoint();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            evolved = &adjoint * &evolved * u;
        }
        out.push((&evolved * obs).trace().re / dim);
    }
    out
}

pub fn distance(a: &Dense, b: &Dense) -> f64 {
    (a - b).norm()
}
