//! Fixtures shared by the benchmarks: the GPS-2 operating point under the
//! experimental loss budget.

use heraldkit::experiment::table_row;
use heraldkit::fock::herald_fock;
use heraldkit::tomography::{default_phases, synthesize_homodyne};
use heraldkit::{
    Detector, FockDensityMatrix, HeraldSpec, LossBudget, TomographyDataset, TwoModeState,
};

pub fn gps2_spec() -> HeraldSpec {
    table_row("GPS-2")
        .expect("GPS-2 is tabulated")
        .spec(LossBudget::EXPERIMENTAL)
        .expect("valid spec")
}

pub fn gps2_state(n_trunc: usize) -> TwoModeState {
    let s = gps2_spec();
    TwoModeState::squeezed_inputs(s.r1, s.r2, s.t, n_trunc).expect("truncation suffices")
}

pub fn gps2_density(n_trunc: usize) -> FockDensityMatrix {
    herald_fock(
        &gps2_state(n_trunc),
        Detector::OnOff,
        LossBudget::EXPERIMENTAL,
    )
    .expect("herald fires")
    .0
}

/// `phases × samples` synthetic homodyne quadratures of the heralded state.
pub fn gps2_dataset(phases: usize, samples: usize) -> TomographyDataset {
    synthesize_homodyne(&gps2_density(30), &default_phases(phases), samples, 7)
        .expect("valid density")
}
