//! Synthetic sweeps with a Casimir force, reduced by the analysis pipeline.

use casimir_core::analysis::{calibrate, error_budget, extract_casimir, CalibrationOptions, ErrorModel};
use casimir_core::lifshitz::force_curve;
use casimir_core::materials::DielectricTable;
use casimir_core::synth::{reference_truth, CasimirTruth, Synthesizer};
use casimir_core::{Layer, LayerStack, LifshitzSettings, MaterialModel};

fn quartz() -> MaterialModel {
    let xi: Vec<f64> = (0..200).map(|i| if i == 0 { 0.0 } else { 1e-3 * 1.08f64.powi(i) }).collect();
    let eps = xi
        .iter()
        .map(|x| 1.0 + 1.93 / (1.0 + (x / 0.1378).powi(2)) + 1.359 / (1.0 + (x / 13.38).powi(2)))
        .collect();
    MaterialModel::DielectricTable(DielectricTable::new(xi, eps).unwrap())
}

fn casimir_truth() -> CasimirTruth {
    CasimirTruth {
        sphere_stack: LayerStack::half_space(MaterialModel::drude(9.0, 0.035).unwrap()),
        plate: LayerStack::new(vec![Layer::new(74.6e-9, MaterialModel::drude(1.5, 0.128).unwrap()).unwrap()], quartz()),
        temperature: 275.15,
    }
}

#[test]
fn extracted_force_matches_theory_within_total_error() {
    let mut truth = reference_truth(7);
    let cas = casimir_truth();
    truth.casimir = Some(cas.clone());
    let set = Synthesizer::new(truth.clone()).unwrap().simulate_set().unwrap();
    let cal = calibrate(&set, &CalibrationOptions::default()).unwrap();
    assert!((cal.v0 - truth.v0).abs() <= cal.v0_uncertainty, "V0 {} ± {}", cal.v0, cal.v0_uncertainty);
    assert!((cal.k - truth.k).abs() <= cal.k_uncertainty, "k {} ± {}", cal.k, cal.k_uncertainty);
    assert!((cal.z0_nm - truth.z0_nm).abs() <= cal.z0_uncertainty_nm, "z0 {} ± {}", cal.z0_nm, cal.z0_uncertainty_nm);

    let a_nm: Vec<f64> = (0..=220).map(|i| 80.0 + i as f64).collect();
    let curves = extract_casimir(&set, &cal, &a_nm).unwrap();
    let budget = error_budget(&curves, &ErrorModel::default()).unwrap();
    let grid_m: Vec<f64> = a_nm.iter().map(|a| a * 1e-9).collect();
    let theory = force_curve(
        &grid_m,
        &truth.sphere,
        &cas.sphere_stack,
        &cas.plate,
        &LifshitzSettings::at_temperature(cas.temperature),
    )
    .unwrap();
    let tot = budget.err_tot_pn.as_ref().unwrap();
    let inside = (0..a_nm.len())
        .filter(|&i| (budget.force_pn[i] - theory.force_pn[i]).abs() <= tot[i])
        .count();
    assert!(inside as f64 >= 0.9 * a_nm.len() as f64, "{inside} of {} within the total error", a_nm.len());
}

#[test]
fn casimir_sweeps_jump_earlier_than_electrostatic_only() {
    let mut truth = reference_truth(1);
    truth.voltages = vec![-0.26];
    truth.repetitions = 1;
    truth.noise_sigma = 0.0;
    let bare = Synthesizer::new(truth.clone()).unwrap().simulate_set().unwrap();
    truth.casimir = Some(casimir_truth());
    let with = Synthesizer::new(truth).unwrap().simulate_set().unwrap();
    let jz = |s: &casimir_core::analysis::RawSweep| s.jump_to_contact_nm.unwrap_or(f64::NEG_INFINITY);
    assert!(jz(&with.sweeps[0]) > jz(&bare.sweeps[0]));
}
