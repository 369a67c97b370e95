use majorana_twist::circuit::{build_floquet_step, SignedPauli};
use majorana_twist::noise::{
    mix_seed, noisy_expectation, readout_mitigate, Experiment, ReadoutError, ReadoutSpec, Sampling,
};
use majorana_twist::trace::eigenbasis_for;
use majorana_twist::{
    fold, full_trace, partial_trace, run_mitigated_series, GateSequence, MitigationPipeline, ModelParams,
    NoiseConfig, NoiseMetadata, PauliAxis, PauliString, TraceOptions,
};

fn noise(p2: f64, readout: f64, shots: u64, seed: u64) -> NoiseConfig {
    NoiseConfig {
        p1: 0.0,
        p2,
        readout: ReadoutSpec::Uniform(readout),
        shots,
        seed,
    }
}

fn bare(n: usize, initial: u64, obs: PauliString) -> Experiment {
    Experiment {
        initial,
        preparation: GateSequence::new(n, "prep"),
        evolution: GateSequence::new(n, "evo"),
        observable: SignedPauli::positive(obs),
        model: None,
    }
}

fn defect_experiment(p: &ModelParams, steps: usize, factor: i64) -> Experiment {
    let obs = PauliString::single(p.num_sites(), p.defect(), PauliAxis::Y).unwrap();
    let mut evolution = GateSequence::new(p.num_sites(), "evo");
    for _ in 0..steps {
        evolution.extend(&build_floquet_step(p)).unwrap();
    }
    Experiment {
        initial: 0b1011,
        preparation: eigenbasis_for(&obs, p.num_sites()).prepare(),
        evolution: fold(&evolution, factor).unwrap(),
        observable: SignedPauli::positive(obs),
        model: Some(*p),
    }
}

#[test]
fn symmetric_readout_attenuates_by_one_minus_two_p() {
    let exp = bare(1, 0, PauliString::single(1, 0, PauliAxis::Z).unwrap());
    let out = noisy_expectation(&exp, &noise(0.0, 0.1, 8000, 3), 11).unwrap();
    assert!((out.estimate - 0.8).abs() <= 4.0 / 8000f64.sqrt(), "estimate {}", out.estimate);
    let corrected = readout_mitigate(&out.histogram, &[ReadoutError::symmetric(0.1)]).unwrap();
    assert!((corrected - out.estimate / 0.8).abs() <= 1e-12);
}

#[test]
fn multi_qubit_inversion_recovers_the_noiseless_value() {
    let obs = PauliString::new(3, [(0, PauliAxis::Z), (1, PauliAxis::Z), (2, PauliAxis::Z)]).unwrap();
    let exp = bare(3, 0b001, obs);
    let errors = vec![
        ReadoutError { p01: 0.02, p10: 0.05 },
        ReadoutError { p01: 0.08, p10: 0.03 },
        ReadoutError { p01: 0.04, p10: 0.04 },
    ];
    let shots = 4000;
    let cfg = NoiseConfig {
        readout: ReadoutSpec::PerQubit(errors.clone()),
        ..noise(0.0, 0.0, shots, 0)
    };
    let contrast: f64 = errors.iter().map(|e| 1.0 - e.p01 - e.p10).product();
    let sigma = 1.0 / (contrast * (shots as f64).sqrt());
    let mut sum = 0.0;
    for seed in 0..100 {
        let out = noisy_expectation(&exp, &cfg, seed).unwrap();
        let v = readout_mitigate(&out.histogram, &errors).unwrap();
        assert!((v + 1.0).abs() <= 5.0 * sigma, "seed {seed}: {v}");
        sum += v;
    }
    let mean = sum / 100.0;
    assert!((mean + 1.0).abs() <= 4.0 * sigma / 10.0, "mean {mean}");
}

#[test]
fn folding_with_noise_off_changes_nothing() {
    let p = ModelParams::standard(6).unwrap();
    let cfg = noise(0.0, 0.0, 2000, 0);
    let one = noisy_expectation(&defect_experiment(&p, 4, 1), &cfg, 9).unwrap();
    let three = noisy_expectation(&defect_experiment(&p, 4, 3), &cfg, 9).unwrap();
    assert_eq!(one.histogram, three.histogram);
}

#[test]
fn noiseless_pipeline_matches_the_partial_trace() {
    let p = ModelParams::standard(6).unwrap();
    for axis in [PauliAxis::Y, PauliAxis::X] {
        let obs = PauliString::single(6, 5, axis).unwrap();
        let settings = NoiseMetadata {
            config: noise(0.0, 0.0, 8000, 2),
            pipeline: MitigationPipeline::default(),
        };
        let sampling = Sampling::Partial { samples: 4, seed: 1 };
        let series = run_mitigated_series(&p, &obs, 8, 0, sampling, &settings).unwrap();
        let exact = partial_trace(&p, &obs, 4, 1, TraceOptions::new(8)).unwrap();
        // Extrapolation from (1, 3) scales shot noise by about 1.6.
        let tol = 1.6 * 4.0 / 8000f64.sqrt();
        assert!(series.raw.max_abs_deviation(&exact) <= 4.0 / 8000f64.sqrt());
        assert!(series.mitigated.max_abs_deviation(&exact) <= tol);
    }
}

#[test]
fn raw_signal_degrades_with_gate_noise() {
    let p = ModelParams::standard(8).unwrap();
    let obs = PauliString::single(8, 7, PauliAxis::Y).unwrap();
    let mut means = Vec::new();
    for p2 in [0.0, 0.01, 0.03] {
        let mut total = 0.0;
        for seed in 0..5 {
            let settings = NoiseMetadata {
                config: noise(p2, 0.0, 4000, seed),
                pipeline: MitigationPipeline::default(),
            };
            let s = run_mitigated_series(&p, &obs, 8, 0, Sampling::Partial { samples: 2, seed }, &settings).unwrap();
            total += s.raw.values[8].abs();
        }
        means.push(total / 5.0);
    }
    assert!(means.windows(2).all(|w| w[0] >= w[1]), "{means:?}");
}

#[test]
fn extrapolation_reduces_depolarizing_bias() {
    let p = ModelParams::standard(8).unwrap();
    let obs = PauliString::single(8, 7, PauliAxis::Y).unwrap();
    let exact = full_trace(&p, &obs, TraceOptions::new(10)).unwrap().values[10];
    let (mut raw_err, mut zne_err) = (0.0, 0.0);
    for seed in 0..10 {
        let settings = NoiseMetadata {
            config: noise(0.005, 0.0, 8000, seed),
            pipeline: MitigationPipeline::default(),
        };
        let s = run_mitigated_series(&p, &obs, 10, 0, Sampling::Partial { samples: 1, seed }, &settings).unwrap();
        raw_err += (s.raw.values[10] - exact).abs();
        zne_err += (s.mitigated.values[10] - exact).abs();
    }
    assert!(zne_err < raw_err, "zne {zne_err}, raw {raw_err}");
}

#[test]
fn streams_are_reproducible() {
    let p = ModelParams::standard(6).unwrap();
    let cfg = noise(0.02, 0.02, 1000, 0);
    let stream = mix_seed(42, &[3, 5, 1]);
    let a = noisy_expectation(&defect_experiment(&p, 3, 1), &cfg, stream).unwrap();
    let b = noisy_expectation(&defect_experiment(&p, 3, 1), &cfg, stream).unwrap();
    assert_eq!(a.histogram, b.histogram);
}
