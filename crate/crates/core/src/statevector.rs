//! Dense statevector over `2^L` amplitudes.
//!
//! Site `j` is bit `j` of the basis index (site 0 is the least significant
//! bit). Gate kernels work in place over strided amplitude pairs; diagonal
//! runs can be fused into one phase table with [`Program`].

use std::ops::Range;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Gate, GateSequence};
use crate::model::{PauliAxis, PauliString, SymmetryOp};

type C64 = Complex64;

/// Largest register a dense statevector is allocated for.
pub const MAX_STATE_SITES: usize = 30;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("basis index {bits} is outside [0, 2^{sites})")]
    BitsOutOfRange { bits: u64, sites: usize },
    #[error("operand acts on {got} sites but the state has {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("site {site} is outside the {sites}-site register")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("L: {0} sites exceed the statevector limit of {MAX_STATE_SITES}")]
    TooLarge(usize),
    #[error("amplitude vector has length {0}, not a power of two")]
    BadLength(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_sites: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Computational basis state `|bits⟩`.
    pub fn basis(num_sites: usize, bits: u64) -> Result<Self, StateError> {
        if num_sites > MAX_STATE_SITES {
            return Err(StateError::TooLarge(num_sites));
        }
        let dim = 1usize << num_sites;
        if bits >= dim as u64 {
            return Err(StateError::BitsOutOfRange {
                bits,
                sites: num_sites,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[bits as usize] = C64::new(1.0, 0.0);
        Ok(Self { num_sites, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, StateError> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(StateError::BadLength(len));
        }
        Ok(Self {
            num_sites: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Resets to `|bits⟩` without reallocating.
    pub fn reset_to_basis(&mut self, bits: u64) {
        self.amps.fill(C64::new(0.0, 0.0));
        self.amps[bits as usize] = C64::new(1.0, 0.0);
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Returns the state after `seq`.
    pub fn apply(&self, seq: &GateSequence) -> Result<StateVector, StateError> {
        let mut out = self.clone();
        out.apply_in_place(seq)?;
        Ok(out)
    }

    pub fn apply_in_place(&mut self, seq: &GateSequence) -> Result<(), StateError> {
        self.check_width(seq.num_sites())?;
        for gate in seq.gates() {
            self.apply_gate(gate);
        }
        Ok(())
    }

    fn check_width(&self, got: usize) -> Result<(), StateError> {
        if got != self.num_sites {
            return Err(StateError::WidthMismatch {
                expected: self.num_sites,
                got,
            });
        }
        Ok(())
    }

    /// Applies one gate. Sites must already be validated against the width.
    pub fn apply_gate(&mut self, gate: &Gate) {
        let amps = &mut self.amps;
        match *gate {
            Gate::Rx { site, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                for_pairs(amps, site, |x, y| rx_pair(x, y, c, s));
            }
            Gate::Ry { site, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                for_pairs(amps, site, |x, y| {
                    let (a, b) = (*x, *y);
                    *x = a * c - b * s;
                    *y = a * s + b * c;
                });
            }
            Gate::H { site } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for_pairs(amps, site, |x, y| {
                    let (a, b) = (*x, *y);
                    *x = (a + b) * h;
                    *y = (a - b) * h;
                });
            }
            Gate::Rzz { a, b, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let even = C64::new(c, -s);
                let odd = C64::new(c, s);
                for (i, amp) in amps.iter_mut().enumerate() {
                    *amp *= if ((i >> a) ^ (i >> b)) & 1 == 0 { even } else { odd };
                }
            }
            Gate::Rzx {
                z_site,
                x_site,
                angle,
            } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let stride = 1 << x_site;
                for (chunk_index, chunk) in amps.chunks_exact_mut(2 * stride).enumerate() {
                    let base = chunk_index * 2 * stride;
                    let (lo, hi) = chunk.split_at_mut(stride);
                    for (offset, (x, y)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                        let control = ((base + offset) >> z_site) & 1;
                        rx_pair(x, y, c, if control == 0 { s } else { -s });
                    }
                }
            }
            Gate::Rxx { a, b, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let mask = (1usize << a) | (1usize << b);
                for i in 0..amps.len() {
                    if (i >> a) & 1 == 0 {
                        let j = i ^ mask;
                        let (x, y) = (amps[i], amps[j]);
                        amps[i] = x * c - I * y * s;
                        amps[j] = y * c - I * x * s;
                    }
                }
            }
            Gate::Cz { a, b } => {
                let mask = (1usize << a) | (1usize << b);
                for (i, amp) in amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
        }
    }

    /// Applies a single-site Pauli matrix.
    pub fn apply_pauli(&mut self, site: usize, axis: PauliAxis) {
        match axis {
            PauliAxis::X => for_pairs(&mut self.amps, site, |x, y| std::mem::swap(x, y)),
            PauliAxis::Y => for_pairs(&mut self.amps, site, |x, y| {
                let (a, b) = (*x, *y);
                *x = -I * b;
                *y = I * a;
            }),
            PauliAxis::Z => for_pairs(&mut self.amps, site, |_, y| *y = -*y),
        }
    }

    /// Runs a compiled program.
    pub fn run(&mut self, program: &Program) -> Result<(), StateError> {
        self.check_width(program.num_sites)?;
        for op in &program.ops {
            self.run_op(op);
        }
        Ok(())
    }

    pub(crate) fn run_op(&mut self, op: &Op) {
        match &op.kind {
            OpKind::Gate(gate) => self.apply_gate(gate),
            OpKind::Diagonal(phases) => {
                for (amp, phase) in self.amps.iter_mut().zip(phases.iter()) {
                    *amp *= phase;
                }
            }
        }
    }

    /// `⟨ψ|P|ψ⟩` accumulated in one pass without forming `P|ψ⟩`.
    pub fn expectation(&self, obs: &PauliString) -> Result<f64, StateError> {
        if obs.max_site() >= self.num_sites {
            return Err(StateError::SiteOutOfRange {
                site: obs.max_site(),
                sites: self.num_sites,
            });
        }
        let (flip, phase, num_y) = obs.masks();
        let (flip, phase) = (flip as usize, phase as usize);
        let mut acc = C64::new(0.0, 0.0);
        for (i, amp) in self.amps.iter().enumerate() {
            let term = self.amps[i ^ flip].conj() * amp;
            if (i & phase).count_ones() & 1 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Ok((acc * I.powu(num_y)).re)
    }

    /// `Ω_r |ψ⟩`: flip every bit, then `σz_r`, then multiply by `i`.
    pub fn apply_symmetry(&self, sym: &SymmetryOp) -> StateVector {
        let mask = self.amps.len() - 1;
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (i, amp) in self.amps.iter().enumerate() {
            let j = !i & mask;
            let sign = if (j >> sym.defect) & 1 == 0 { 1.0 } else { -1.0 };
            amps[j] = I * amp * sign;
        }
        StateVector {
            num_sites: self.num_sites,
            amps,
        }
    }

    /// Probability of each bit pattern on `sites`; entry `t` has bit `k` of
    /// `t` equal to the value of `sites[k]`.
    pub fn marginal(&self, sites: &[usize]) -> Vec<f64> {
        let mut probs = vec![0.0; 1 << sites.len()];
        for (i, amp) in self.amps.iter().enumerate() {
            let pattern = sites
                .iter()
                .enumerate()
                .fold(0, |acc, (k, &s)| acc | (((i >> s) & 1) << k));
            probs[pattern] += amp.norm_sqr();
        }
        probs
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[inline]
fn rx_pair(x: &mut C64, y: &mut C64, c: f64, s: f64) {
    // [[c, -is], [-is, c]]
    let (a, b) = (*x, *y);
    *x = C64::new(c * a.re + s * b.im, c * a.im - s * b.re);
    *y = C64::new(c * b.re + s * a.im, c * b.im - s * a.re);
}

#[inline]
fn for_pairs(amps: &mut [C64], site: usize, mut f: impl FnMut(&mut C64, &mut C64)) {
    let stride = 1 << site;
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            f(x, y);
        }
    }
}

/// A gate sequence with runs of diagonal gates fused into phase tables.
#[derive(Debug, Clone)]
pub struct Program {
    num_sites: usize,
    ops: Vec<Op>,
}

#[derive(Debug, Clone)]
pub(crate) struct Op {
    /// Indices of the source gates this op covers.
    pub(crate) gates: Range<usize>,
    pub(crate) kind: OpKind,
}

#[derive(Debug, Clone)]
pub(crate) enum OpKind {
    Gate(Gate),
    Diagonal(Vec<C64>),
}

impl Program {
    pub fn compile(seq: &GateSequence) -> Program {
        let gates = seq.gates();
        let dim = 1usize << seq.num_sites();
        let mut ops = Vec::new();
        let mut start = 0;
        while start < gates.len() {
            let mut end = start;
            while end < gates.len() && gates[end].is_diagonal() {
                end += 1;
            }
            if end - start >= 2 {
                let mut phases = vec![C64::new(1.0, 0.0); dim];
                for gate in &gates[start..end] {
                    multiply_phases(&mut phases, gate);
                }
                ops.push(Op {
                    gates: start..end,
                    kind: OpKind::Diagonal(phases),
                });
                start = end;
            } else {
                ops.push(Op {
                    gates: start..start + 1,
                    kind: OpKind::Gate(gates[start]),
                });
                start += 1;
            }
        }
        Program {
            num_sites: seq.num_sites(),
            ops,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub(crate) fn ops(&self) -> &[Op] {
        &self.ops
    }
}

fn multiply_phases(phases: &mut [C64], gate: &Gate) {
    match *gate {
        Gate::Rzz { a, b, angle } => {
            let (s, c) = (angle / 2.0).sin_cos();
            for (i, p) in phases.iter_mut().enumerate() {
                *p *= if ((i >> a) ^ (i >> b)) & 1 == 0 {
                    C64::new(c, -s)
                } else {
                    C64::new(c, s)
                };
            }
        }
        Gate::Cz { a, b } => {
            let mask = (1usize << a) | (1usize << b);
            for (i, p) in phases.iter_mut().enumerate() {
                if i & mask == mask {
                    *p = -*p;
                }
            }
        }
        _ => unreachable!("only diagonal gates are fused"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_floquet_step;
    use crate::model::ModelParams;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn basis_states_are_little_endian() {
        let s = StateVector::basis(3, 0).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        let s = StateVector::basis(3, 5).unwrap();
        assert_eq!(s.amplitudes()[5], C64::new(1.0, 0.0));
        assert_eq!(s.marginal(&[0, 1, 2]), vec![0., 0., 0., 0., 0., 1., 0., 0.]);
        assert_eq!(s.marginal(&[2]), vec![0.0, 1.0]);
        assert_eq!(s.marginal(&[1]), vec![1.0, 0.0]);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert_eq!(
            StateVector::basis(3, 8),
            Err(StateError::BitsOutOfRange { bits: 8, sites: 3 })
        );
    }

    #[test]
    fn hadamard_and_rx_pi() {
        let mut s = StateVector::basis(1, 0).unwrap();
        s.apply_gate(&Gate::H { site: 0 });
        assert!(close(s.amplitudes()[0], C64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.amplitudes()[1], C64::new(FRAC_1_SQRT_2, 0.0)));

        let mut s = StateVector::basis(1, 0).unwrap();
        s.apply_gate(&Gate::Rx { site: 0, angle: PI });
        assert!(close(s.amplitudes()[0], C64::new(0.0, 0.0)));
        assert!(close(s.amplitudes()[1], C64::new(0.0, -1.0)));
    }

    #[test]
    fn single_site_expectations() {
        let z0 = PauliString::single(1, 0, PauliAxis::Z).unwrap();
        let s = StateVector::basis(1, 0).unwrap();
        assert_eq!(s.expectation(&z0).unwrap(), 1.0);
        let mut plus = s.clone();
        plus.apply_gate(&Gate::H { site: 0 });
        assert!(plus.expectation(&z0).unwrap().abs() < 1e-15);
        let x0 = PauliString::single(1, 0, PauliAxis::X).unwrap();
        assert!((plus.expectation(&x0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expectation_rejects_wide_observable() {
        let s = StateVector::basis(2, 0).unwrap();
        let z3 = PauliString::single(4, 3, PauliAxis::Z).unwrap();
        assert!(matches!(
            s.expectation(&z3),
            Err(StateError::SiteOutOfRange { site: 3, sites: 2 })
        ));
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let s = StateVector::basis(3, 0).unwrap();
        let seq = GateSequence::new(4, "w");
        assert!(matches!(s.apply(&seq), Err(StateError::WidthMismatch { .. })));
    }

    #[test]
    fn symmetry_on_all_zero_state() {
        let s = StateVector::basis(3, 0).unwrap();
        let out = s.apply_symmetry(&SymmetryOp { defect: 0 });
        // ∏σx gives |111⟩, σz_0 then contributes -1, times i.
        assert!(close(out.amplitudes()[7], C64::new(0.0, -1.0)));
        let twice = out.apply_symmetry(&SymmetryOp { defect: 0 });
        assert!(close(twice.amplitudes()[0], C64::new(1.0, 0.0)));
    }

    #[test]
    fn compiled_program_matches_gate_by_gate() {
        let p = ModelParams::standard(6).unwrap().with_interaction(0.2).unwrap();
        let mut seq = build_floquet_step(&p);
        seq.push(Gate::Cz { a: 1, b: 4 }).unwrap();
        seq.push(Gate::Cz { a: 2, b: 3 }).unwrap();
        let mut a = StateVector::basis(6, 0b101101).unwrap();
        a.apply_gate(&Gate::H { site: 0 });
        a.apply_gate(&Gate::Ry { site: 3, angle: 0.4 });
        let mut b = a.clone();
        a.apply_in_place(&seq).unwrap();
        b.run(&Program::compile(&seq)).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!(close(*x, *y));
        }
    }

    #[test]
    fn pauli_y_matches_matrix() {
        let mut s = StateVector::basis(1, 0).unwrap();
        s.apply_pauli(0, PauliAxis::Y);
        assert!(close(s.amplitudes()[1], C64::new(0.0, 1.0)));
    }
}
