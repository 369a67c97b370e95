//! Shared inputs for the kernel benchmarks.

use majorana_twist::circuit::{build_floquet_step, SignedPauli};
use majorana_twist::noise::Experiment;
use majorana_twist::trace::eigenbasis_for;
use majorana_twist::{GateSequence, ModelParams, PauliAxis, PauliString};

pub fn model(num_sites: usize) -> ModelParams {
    ModelParams::standard(num_sites).expect("valid size")
}

pub fn defect_y(params: &ModelParams) -> PauliString {
    let n = params.num_sites();
    PauliString::single(n, params.defect(), PauliAxis::Y).expect("defect in range")
}

/// `steps` Floquet periods probed by the defect σy, as the noisy trace runs them.
pub fn defect_experiment(params: &ModelParams, steps: usize) -> Experiment {
    let obs = defect_y(params);
    let basis = eigenbasis_for(&obs, params.num_sites());
    let step = build_floquet_step(params);
    let mut evolution = GateSequence::new(params.num_sites(), "evolution");
    for _ in 0..steps {
        evolution.extend(&step).expect("same width");
    }
    Experiment {
        initial: 0,
        preparation: basis.prepare(),
        evolution,
        observable: SignedPauli::positive(obs),
        model: Some(*params),
    }
}
