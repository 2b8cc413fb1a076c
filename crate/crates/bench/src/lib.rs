//! Shared inputs for the benchmarks.

use casimir_core::analysis::MeasurementSet;
use casimir_core::materials::{DielectricTable, DrudeParams, OpticalSpectrum, Oscillator, OscillatorSet, TabulatedKk};
use casimir_core::synth::{reference_truth, Synthesizer};
use casimir_core::{Layer, LayerStack, MaterialModel};

pub fn quartz() -> MaterialModel {
    let xi: Vec<f64> = (0..200).map(|i| if i == 0 { 0.0 } else { 1e-3 * 1.08f64.powi(i) }).collect();
    let eps = xi
        .iter()
        .map(|x| 1.0 + 1.93 / (1.0 + (x / 0.1378).powi(2)) + 1.359 / (1.0 + (x / 13.38).powi(2)))
        .collect();
    MaterialModel::DielectricTable(DielectricTable::new(xi, eps).unwrap())
}

pub fn gold() -> LayerStack {
    LayerStack::half_space(MaterialModel::drude(9.0, 0.035).unwrap())
}

/// 74.6 nm Drude ITO film on quartz.
pub fn ito_on_quartz() -> LayerStack {
    LayerStack::new(vec![Layer::new(74.6e-9, MaterialModel::drude(1.5, 0.128).unwrap()).unwrap()], quartz())
}

/// Drude carriers plus one interband oscillator, tabulated on 401 points.
pub fn tabulated_ito() -> TabulatedKk {
    let drude = DrudeParams::new(1.5, 0.128).unwrap();
    let osc = Oscillator { strength: 2.8, resonance: 6.5, width: 2.5 };
    let omega: Vec<f64> = (0..401).map(|i| 0.04 * (8.27f64 / 0.04).powf(i as f64 / 400.0)).collect();
    TabulatedKk {
        spectrum: OpticalSpectrum::sample(omega, |w| drude.im_eps(w) + osc.im_eps(w)).unwrap(),
        low_extrapolation: drude,
        high_extrapolation: OscillatorSet::new(vec![osc]).unwrap(),
        high_extrapolation_upper: None,
        carriers_included: true,
    }
}

pub fn measurement_set(seed: u64) -> MeasurementSet {
    Synthesizer::new(reference_truth(seed)).unwrap().simulate_set().unwrap()
}
