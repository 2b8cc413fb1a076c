//! Reduction of raw deflection sweeps to calibrated Casimir-force curves.
//!
//! The pipeline follows the measurement: drift removal, resampling onto a
//! relative-separation grid, per-separation parabola fits in the applied
//! voltage, the residual potential and kinematic calibration, subtraction
//! of the electrostatic force, and the error budget.

mod calibration;
mod extraction;
mod preprocess;
pub mod stats;

pub use calibration::{
    calibrate, estimate_v0, fit_kinematics, fit_parabola_per_separation, CalibrationOptions, CalibrationResult,
    CurvatureModel, KinematicsFit, ParabolaFit, V0Estimate,
};
pub use extraction::{
    compare_curves, error_budget, extract_casimir, CasimirCurves, CombinationRule, Comparison, ErrorModel,
    SweepCurve,
};
pub use preprocess::{relative_separation, resample, subtract_drift, DriftFit, ResampledSweep};

use std::collections::BTreeSet;

use crate::error::{CoreError, Result};
use crate::lifshitz::SphereGeometry;

/// One recorded sweep at fixed applied voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSweep {
    /// Volts.
    pub applied_voltage: f64,
    pub repetition: usize,
    /// Piezo extension in nm, strictly monotone.
    pub z_piezo_nm: Vec<f64>,
    /// Deflection signal in signal units.
    pub s_def: Vec<f64>,
    /// Nominal spacing of `z_piezo_nm`.
    pub sampling_step_nm: f64,
    /// Piezo position at which the sphere jumped to contact, if it did.
    pub jump_to_contact_nm: Option<f64>,
}

impl RawSweep {
    pub fn new(applied_voltage: f64, repetition: usize, z_piezo_nm: Vec<f64>, s_def: Vec<f64>, sampling_step_nm: f64) -> Result<Self> {
        let sweep = Self { applied_voltage, repetition, z_piezo_nm, s_def, sampling_step_nm, jump_to_contact_nm: None };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.z_piezo_nm.len();
        if n < 2 || self.s_def.len() != n {
            return Err(CoreError::Config(format!(
                "sweep V = {} rep {} needs ≥2 aligned samples",
                self.applied_voltage, self.repetition
            )));
        }
        if !(self.sampling_step_nm > 0.0) {
            return Err(CoreError::Config("sampling step must be positive".into()));
        }
        let up = self.z_piezo_nm.windows(2).all(|w| w[1] > w[0]);
        let down = self.z_piezo_nm.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(CoreError::Config(format!(
                "z_piezo is not strictly monotone in sweep V = {} rep {}",
                self.applied_voltage, self.repetition
            )));
        }
        if self.z_piezo_nm.iter().chain(&self.s_def).any(|v| !v.is_finite()) {
            return Err(CoreError::Config("sweep contains non-finite samples".into()));
        }
        Ok(())
    }

    /// Samples ordered by ascending z_piezo.
    pub fn ascending(&self) -> (Vec<f64>, Vec<f64>) {
        if self.z_piezo_nm[0] < self.z_piezo_nm[self.z_piezo_nm.len() - 1] {
            (self.z_piezo_nm.clone(), self.s_def.clone())
        } else {
            (
                self.z_piezo_nm.iter().rev().copied().collect(),
                self.s_def.iter().rev().copied().collect(),
            )
        }
    }
}

/// All sweeps of one experiment with the shared instrument constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub sweeps: Vec<RawSweep>,
    /// Deflection coefficient m in nm per signal unit.
    pub m: f64,
    /// 95% half-width of m.
    pub m_uncertainty: f64,
    pub sphere: SphereGeometry,
    /// 95% half-width of the radius (m).
    pub radius_uncertainty: f64,
}

impl MeasurementSet {
    pub fn new(sweeps: Vec<RawSweep>, m: f64, m_uncertainty: f64, sphere: SphereGeometry, radius_uncertainty: f64) -> Result<Self> {
        let set = Self { sweeps, m, m_uncertainty, sphere, radius_uncertainty };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps.is_empty() {
            return Err(CoreError::Config("measurement set has no sweeps".into()));
        }
        if !(self.m > 0.0 && self.m_uncertainty >= 0.0 && self.radius_uncertainty >= 0.0) {
            return Err(CoreError::Config("deflection coefficient must be positive, uncertainties ≥ 0".into()));
        }
        let mut seen = BTreeSet::new();
        let step = self.sweeps[0].sampling_step_nm;
        for s in &self.sweeps {
            s.validate()?;
            if !seen.insert((s.applied_voltage.to_bits(), s.repetition)) {
                return Err(CoreError::Config(format!(
                    "duplicate sweep for V = {} rep {}",
                    s.applied_voltage, s.repetition
                )));
            }
            if (s.sampling_step_nm - step).abs() > 1e-12 * step {
                return Err(CoreError::Config("sweeps differ in sampling step".into()));
            }
        }
        Ok(())
    }

    /// Distinct applied voltages in ascending order.
    pub fn voltages(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.sweeps.iter().map(|s| s.applied_voltage).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}
