use std::f64::consts::PI;

use majorana_twist::circuit::{basis_layer, observable_axes, BasisDirection, GateSites};
use majorana_twist::oracle::{self, Dense};
use majorana_twist::{
    build_floquet_step, build_translation, fold, full_trace, Gate, GateSequence, ModelParams,
    PauliAxis, PauliString, StateVector, SymmetryOp, TraceOptions,
};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let amps: Vec<Complex64> = (0..1 << n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn random_gate(n: usize, rng: &mut ChaCha8Rng) -> Gate {
    let a = rng.gen_range(0..n);
    let b = (a + rng.gen_range(1..n)) % n;
    let angle = rng.gen_range(-PI..PI);
    match rng.gen_range(0..7) {
        0 => Gate::Rx { site: a, angle },
        1 => Gate::Ry { site: a, angle },
        2 => Gate::Rzz { a, b, angle },
        3 => Gate::Rzx { z_site: a, x_site: b, angle },
        4 => Gate::Rxx { a, b, angle },
        5 => Gate::H { site: a },
        _ => Gate::Cz { a, b },
    }
}

fn random_pauli(n: usize, rng: &mut ChaCha8Rng) -> PauliString {
    loop {
        let terms: Vec<_> = (0..n)
            .filter_map(|s| match rng.gen_range(0..4) {
                0 => None,
                k => Some((s, PauliAxis::ALL[k - 1])),
            })
            .collect();
        if let Ok(p) = PauliString::new(n, terms) {
            return p;
        }
    }
}

fn as_vector(state: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(state.amplitudes())
}

fn max_dev(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn four_site_step_matches_hamiltonian_layers() {
    let p = ModelParams::standard(4).unwrap();
    let d = oracle::distance(&oracle::sequence(&build_floquet_step(&p)), &oracle::floquet_unitary(&p));
    assert!(d < 1e-10, "distance {d}");
}

#[test]
fn interacting_step_matches_hamiltonian_layers() {
    let p = ModelParams::standard(6).unwrap().with_interaction(0.1).unwrap();
    let d = oracle::distance(&oracle::sequence(&build_floquet_step(&p)), &oracle::floquet_unitary(&p));
    assert!(d < 1e-10, "distance {d}");
}

#[test]
fn other_defects_match_hamiltonian_layers() {
    for r in 0..5 {
        let p = ModelParams::new(5, 0.4, 1.1, 0.0, r).unwrap();
        let d = oracle::distance(&oracle::sequence(&build_floquet_step(&p)), &oracle::floquet_unitary(&p));
        assert!(d < 1e-10, "defect {r}: distance {d}");
    }
}

#[test]
fn random_sequences_match_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let mut seq = GateSequence::new(4, "random");
        for _ in 0..25 {
            seq.push(random_gate(4, &mut rng)).unwrap();
        }
        let psi = random_state(4, &mut rng);
        let got = as_vector(&psi.apply(&seq).unwrap());
        let want = oracle::sequence(&seq) * as_vector(&psi);
        assert!(max_dev(&got, &want) <= 1e-12);
    }
}

#[test]
fn expectation_matches_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let psi = random_state(5, &mut rng);
        let obs = random_pauli(5, &mut rng);
        let v = as_vector(&psi);
        let want = (v.adjoint() * oracle::pauli_string(5, &obs) * &v)[(0, 0)];
        assert!(want.im.abs() < 1e-12);
        assert!((psi.expectation(&obs).unwrap() - want.re).abs() <= 1e-12);
    }
}

#[test]
fn symmetry_matches_dense_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for r in 0..4 {
        let psi = random_state(4, &mut rng);
        let got = as_vector(&psi.apply_symmetry(&SymmetryOp { defect: r }));
        let want = oracle::symmetry(4, r) * as_vector(&psi);
        assert!(max_dev(&got, &want) <= 1e-12);
    }
    let omega = oracle::symmetry(3, 1);
    assert!(oracle::distance(&(&omega * &omega), &oracle::identity(3)) < 1e-12);
}

fn commutator_norm(p: &ModelParams) -> f64 {
    let u = oracle::sequence(&build_floquet_step(p));
    let omega = oracle::symmetry(p.num_sites(), p.defect());
    oracle::distance(&(&u * &omega), &(&omega * &u))
}

#[test]
fn symmetry_commutes_only_without_interactions() {
    for n in 3..=8 {
        let p = ModelParams::standard(n).unwrap();
        assert!(commutator_norm(&p) <= 1e-10, "L = {n}");
        let q = ModelParams::new(n, 0.3, 1.2, 0.0, n / 2).unwrap();
        assert!(commutator_norm(&q) <= 1e-10, "L = {n}, defect {}", n / 2);
    }
    let p = ModelParams::standard(6).unwrap().with_interaction(0.1).unwrap();
    assert!(commutator_norm(&p) > 1e-3);
}

// Field J on the old defect, no field on the new one, twist (r-2, r-1) and
// coupling g across (r-1, r).
#[test]
fn translation_moves_the_defect() {
    use PauliAxis::*;
    let (j, g) = (0.75 * PI, 0.2 * PI);
    let p = ModelParams::standard(4).unwrap();
    let t = build_translation(&p, 1).unwrap();
    let u = oracle::sequence(&build_floquet_step(&p));
    let tm = oracle::sequence(&t.sequence);
    let translated = tm.adjoint() * u * &tm;

    let layer = |terms: &[(f64, Vec<(usize, PauliAxis)>)]| oracle::evolve(&oracle::hamiltonian(4, terms), 1.0);
    let fields = layer(&[(g, vec![(0, X)]), (g, vec![(1, X)]), (g, vec![(2, Z), (3, Z)])]);
    let defect = layer(&[(j, vec![(3, X)])]);
    let bonds = layer(&[(j, vec![(0, Z), (1, Z)]), (j, vec![(1, Z), (2, X)]), (j, vec![(3, Z), (0, Z)])]);
    let expected = fields * defect * bonds;
    assert!(oracle::distance(&translated, &expected) < 1e-10);
    assert_eq!(t.defect, 2);
}

#[test]
fn translated_zero_mode_commutes_with_translated_step() {
    for n in [4, 5, 6] {
        let p = ModelParams::standard(n).unwrap();
        for count in 0..3 {
            let t = build_translation(&p, count).unwrap();
            let tm = oracle::sequence(&t.sequence);
            let u = tm.adjoint() * oracle::sequence(&build_floquet_step(&p)) * &tm;
            let mode = oracle::pauli_string(n, &t.zero_mode.string) * Complex64::new(t.zero_mode.sign(), 0.0);
            // Heisenberg image of σy_r under T.
            let want = tm.adjoint() * oracle::pauli_string(n, &PauliString::single(n, n - 1, PauliAxis::Y).unwrap()) * &tm;
            assert!(oracle::distance(&mode, &want) < 1e-10);
            let omega = tm.adjoint() * oracle::symmetry(n, n - 1) * &tm;
            assert!(oracle::distance(&(&u * &omega), &(&omega * &u)) < 1e-10);
        }
    }
}

#[test]
fn folding_preserves_the_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seq = GateSequence::new(4, "random");
    for _ in 0..15 {
        seq.push(random_gate(4, &mut rng)).unwrap();
    }
    let base = oracle::sequence(&seq);
    for k in [1, 3, 5] {
        let folded = fold(&seq, k).unwrap();
        assert_eq!(folded.len(), k as usize * seq.len());
        assert!(oracle::distance(&oracle::sequence(&folded), &base) <= 1e-10);
    }
}

#[test]
fn basis_layers_are_inverse_and_diagonalize() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let obs = random_pauli(3, &mut rng);
        let axes = observable_axes(&obs, 3);
        let prep = oracle::sequence(&basis_layer(&axes, BasisDirection::Prepare));
        let meas = oracle::sequence(&basis_layer(&axes, BasisDirection::Measure));
        assert!(oracle::distance(&(&meas * &prep), &oracle::identity(3)) <= 1e-12);
        // Prepared basis states are eigenstates with λ = ∏ (-1)^bit.
        let o = oracle::pauli_string(3, &obs);
        let rotated: Dense = prep.adjoint() * o * &prep;
        for k in 0..8usize {
            let lambda = if (k as u64 & obs.support_mask()).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            assert!((rotated[(k, k)].re - lambda).abs() < 1e-12);
        }
    }
}

#[test]
fn prepared_x_state_has_unit_polarization() {
    let prep = basis_layer(&[PauliAxis::X], BasisDirection::Prepare);
    let psi = StateVector::basis(1, 0).unwrap().apply(&prep).unwrap();
    let x = PauliString::single(1, 0, PauliAxis::X).unwrap();
    assert!((psi.expectation(&x).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn three_site_trace_matches_dense_formula() {
    let p = ModelParams::new(3, 0.3, 0.7, 0.0, 2).unwrap();
    let obs = PauliString::single(3, 2, PauliAxis::Y).unwrap();
    let series = full_trace(&p, &obs, TraceOptions::new(10)).unwrap();
    let want = oracle::autocorrelation(&oracle::floquet_unitary(&p), &oracle::pauli_string(3, &obs), 10);
    for (a, b) in series.values.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn translated_trace_matches_dense_formula() {
    let p = ModelParams::standard(5).unwrap();
    let t = build_translation(&p, 2).unwrap();
    let tm = oracle::sequence(&t.sequence);
    let u = tm.adjoint() * oracle::sequence(&build_floquet_step(&p)) * &tm;
    let obs = PauliString::new(5, [(2, PauliAxis::X), (4, PauliAxis::Z)]).unwrap();
    let series = full_trace(&p, &obs, TraceOptions::new(8).with_translations(2)).unwrap();
    let want = oracle::autocorrelation(&u, &oracle::pauli_string(5, &obs), 8);
    for (a, b) in series.values.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn gate_site_reporting() {
    assert_eq!(Gate::Rzx { z_site: 2, x_site: 3, angle: 0.0 }.sites(), GateSites::Two(2, 3));
}
