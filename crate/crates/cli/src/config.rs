//! Per-command run configurations. A configuration comes from defaults, then
//! an optional JSON file (a plain config or a previous run manifest), then
//! command-line flags. Paths are made absolute while merging so the recorded
//! configuration re-executes from any working directory.

use std::path::{Path, PathBuf};

use casimir_core::analysis::{CalibrationOptions, ErrorModel};
use casimir_core::io::{resolve_path, MaterialRef, StackRef, TruthSpec};
use casimir_core::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Absolute form of a path given relative to `base` (or found through the
/// data directory).
pub fn absolute_path(base: &Path, reference: &str) -> Result<String> {
    let p = resolve_path(base, reference)?;
    Ok(std::fs::canonicalize(&p)?.to_string_lossy().into_owned())
}

pub fn absolute_stack(base: &Path, stack: &mut StackRef) -> Result<()> {
    if let StackRef::Path(p) = stack {
        *p = absolute_path(base, p)?;
    }
    Ok(())
}

pub fn absolute_material(base: &Path, material: &mut MaterialRef) -> Result<()> {
    if let MaterialRef::Path(p) = material {
        *p = absolute_path(base, p)?;
    }
    Ok(())
}

/// Surface height distribution for geometrical roughness averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RoughnessSpec {
    /// Gaussian surrogate with this standard deviation.
    SigmaNm(f64),
    /// Measured histogram, CSV `height_nm,weight`.
    Histogram(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComputeConfig {
    pub sphere: Option<StackRef>,
    pub plate: Option<StackRef>,
    pub radius_um: f64,
    pub temperature_k: f64,
    pub a_min_nm: f64,
    pub a_max_nm: f64,
    pub a_step_nm: f64,
    /// Emit the extrapolation band as lower/upper columns.
    pub band: bool,
    /// Also fold radius and film-thickness uncertainties into the band.
    pub spread_radius_um: Option<f64>,
    pub spread_thickness_nm: Option<f64>,
    pub l_max_cap: usize,
    pub matsubara_rel_tol: f64,
    pub quadrature_rel_tol: f64,
    pub roughness_sphere: Option<RoughnessSpec>,
    pub roughness_plate: Option<RoughnessSpec>,
    /// Sphere-plate electrostatic force at `dv_v` instead of the Casimir force.
    pub electrostatic: bool,
    pub dv_v: f64,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        Self {
            sphere: None,
            plate: None,
            radius_um: 101.23,
            temperature_k: 275.15,
            a_min_nm: 60.0,
            a_max_nm: 300.0,
            a_step_nm: 1.0,
            band: false,
            spread_radius_um: None,
            spread_thickness_nm: None,
            l_max_cap: 20_000,
            matsubara_rel_tol: 1e-7,
            quadrature_rel_tol: 1e-9,
            roughness_sphere: None,
            roughness_plate: None,
            electrostatic: false,
            dv_v: 0.0,
        }
    }
}

impl ComputeConfig {
    pub fn absolutize(&mut self, base: &Path) -> Result<()> {
        for s in [&mut self.sphere, &mut self.plate].into_iter().flatten() {
            absolute_stack(base, s)?;
        }
        for r in [&mut self.roughness_sphere, &mut self.roughness_plate].into_iter().flatten() {
            if let RoughnessSpec::Histogram(p) = r {
                *p = absolute_path(base, p)?;
            }
        }
        Ok(())
    }

    /// Separation grid in nm, endpoints included.
    pub fn grid_nm(&self) -> Result<Vec<f64>> {
        grid(self.a_min_nm, self.a_max_nm, self.a_step_nm)
    }
}

pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(CoreError::Config(format!("bad grid {lo}..{hi} step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub manifest: Option<String>,
    /// Reuse this calibration report instead of calibrating.
    pub calibration: Option<String>,
    pub options: CalibrationOptions,
    pub a_min_nm: f64,
    pub a_max_nm: f64,
    pub a_step_nm: f64,
    pub error_model: ErrorModel,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            calibration: None,
            options: CalibrationOptions::default(),
            a_min_nm: 60.0,
            a_max_nm: 300.0,
            a_step_nm: 1.0,
            error_model: ErrorModel::default(),
        }
    }
}

impl AnalyzeConfig {
    pub fn absolutize(&mut self, base: &Path) -> Result<()> {
        for p in [&mut self.manifest, &mut self.calibration].into_iter().flatten() {
            *p = absolute_path(base, p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Ground truth; the built-in electrostatics-only reference when absent.
    pub truth: Option<TruthSpec>,
}

impl SynthConfig {
    pub fn absolutize(&mut self, base: &Path) -> Result<()> {
        if let Some(t) = &mut self.truth {
            if let Some(c) = &mut t.casimir {
                absolute_stack(base, &mut c.sphere)?;
                absolute_stack(base, &mut c.plate)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub reference: Option<String>,
    pub other: Option<String>,
}

impl CompareConfig {
    pub fn absolutize(&mut self, base: &Path) -> Result<()> {
        for p in [&mut self.reference, &mut self.other].into_iter().flatten() {
            *p = absolute_path(base, p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KkConfig {
    pub material: Option<MaterialRef>,
    pub xi_min_ev: f64,
    pub xi_max_ev: f64,
    pub points: usize,
    /// Evaluate at the Matsubara frequencies l = 1..=l_max of this
    /// temperature instead of the log grid.
    pub temperature_k: Option<f64>,
    pub l_max: usize,
    pub band: bool,
}

impl Default for KkConfig {
    fn default() -> Self {
        Self {
            material: None,
            xi_min_ev: 0.01,
            xi_max_ev: 10.0,
            points: 201,
            temperature_k: None,
            l_max: 100,
            band: false,
        }
    }
}

impl KkConfig {
    pub fn absolutize(&mut self, base: &Path) -> Result<()> {
        if let Some(m) = &mut self.material {
            absolute_material(base, m)?;
        }
        Ok(())
    }
}

/// Directory holding `path`, for resolving paths written inside it.
pub fn dir_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
