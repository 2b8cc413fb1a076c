//! File formats: material and stack definitions, dielectric tables, raw
//! sweeps with their metadata sidecars, measurement manifests, force curves,
//! topography histograms and synthetic ground truth.
//!
//! Every numeric value is written with the shortest representation that
//! parses back to the same `f64`, so write/read round trips are lossless.
//! Relative paths inside JSON files resolve against the referencing file's
//! directory first and then against `$CASIMIR_LAB_DATA`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{CalibrationResult, MeasurementSet, RawSweep};
use crate::curve::ForceCurve;
use crate::error::{CoreError, Result};
use crate::lifshitz::{Layer, LayerStack, SphereGeometry};
use crate::materials::{DielectricTable, DrudeParams, MaterialModel, OpticalSpectrum, Oscillator, OscillatorSet, TabulatedKk};
use crate::roughness::{HeightDistribution, RecenterReport};
use crate::synth::{CasimirTruth, GroundTruth};

/// Environment variable naming the default material-table directory.
pub const DATA_ENV: &str = "CASIMIR_LAB_DATA";

/// Resolves `reference` against `base_dir`, then against `$CASIMIR_LAB_DATA`.
pub fn resolve_path(base_dir: &Path, reference: &str) -> Result<PathBuf> {
    let p = Path::new(reference);
    if p.is_absolute() {
        return if p.exists() { Ok(p.to_path_buf()) } else { Err(CoreError::Config(format!("file not found: {reference}"))) };
    }
    let local = base_dir.join(p);
    if local.exists() {
        return Ok(local);
    }
    if let Some(dir) = std::env::var_os(DATA_ENV) {
        let data = Path::new(&dir).join(p);
        if data.exists() {
            return Ok(data);
        }
    }
    Err(CoreError::Config(format!(
        "file not found: {reference} (looked in {} and ${DATA_ENV})",
        base_dir.display()
    )))
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CoreError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text).map_err(|e| CoreError::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

// ---------------------------------------------------------------------------
// CSV tables

/// Numeric CSV table keyed by header name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str], columns: Vec<Vec<f64>>) -> Result<Self> {
        if headers.len() != columns.len() {
            return Err(CoreError::Config("table header and column counts differ".into()));
        }
        if columns.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(CoreError::Config("table columns differ in length".into()));
        }
        Ok(Self { headers: headers.iter().map(|h| h.to_string()).collect(), columns })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }

    fn require(&self, name: &str, path: &Path) -> Result<Vec<f64>> {
        self.column(name)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| CoreError::Config(format!("{}: missing column `{name}`", path.display())))
    }

    fn expect_headers(&self, expected: &[&str], path: &Path) -> Result<()> {
        if self.headers.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(CoreError::Config(format!(
                "{}: expected header `{}`, found `{}`",
                path.display(),
                expected.join(","),
                self.headers.join(",")
            )));
        }
        Ok(())
    }
}

/// Shortest round-trip decimal form; NaN and infinities use Rust spelling.
pub fn format_f64(x: f64) -> String {
    format!("{x}")
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CoreError::Io(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(CoreError::Config(format!("{}: row {} has {} fields", path.display(), row + 2, record.len())));
        }
        for (col, field) in record.iter().enumerate() {
            let value = field.parse::<f64>().map_err(|_| {
                CoreError::Config(format!("{}: row {}: `{field}` is not a number", path.display(), row + 2))
            })?;
            columns[col].push(value);
        }
    }
    Ok(Table { headers, columns })
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut text = table.headers.join(",");
    text.push('\n');
    for i in 0..table.rows() {
        let row: Vec<String> = table.columns.iter().map(|c| format_f64(c[i])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

// ---------------------------------------------------------------------------
// Materials and stacks

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrudeSpec {
    pub omega_p_ev: f64,
    pub gamma_ev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSpec {
    pub strength: f64,
    pub resonance_ev: f64,
    pub width_ev: f64,
}

fn oscillator_set(specs: &[OscillatorSpec]) -> Result<OscillatorSet> {
    OscillatorSet::new(
        specs
            .iter()
            .map(|o| Oscillator { strength: o.strength, resonance: o.resonance_ev, width: o.width_ev })
            .collect(),
    )
}

/// Material definition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    Drude {
        omega_p_ev: f64,
        gamma_ev: f64,
    },
    GeneralizedPlasma {
        omega_p_ev: f64,
        #[serde(default)]
        oscillators: Vec<OscillatorSpec>,
    },
    TabulatedKk {
        /// CSV `omega_ev,im_eps`.
        spectrum: String,
        low_extrapolation: DrudeSpec,
        #[serde(default)]
        high_extrapolation: Vec<OscillatorSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        high_extrapolation_upper: Option<Vec<OscillatorSpec>>,
        #[serde(default = "default_true")]
        carriers_included: bool,
    },
    DielectricTable {
        /// CSV `xi_ev,eps`.
        table: String,
    },
    IdealMetal,
}

fn default_true() -> bool {
    true
}

impl MaterialSpec {
    /// Builds the model, loading referenced tables relative to `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<MaterialModel> {
        match self {
            Self::Drude { omega_p_ev, gamma_ev } => MaterialModel::drude(*omega_p_ev, *gamma_ev),
            Self::GeneralizedPlasma { omega_p_ev, oscillators } => {
                MaterialModel::generalized_plasma(*omega_p_ev, oscillator_set(oscillators)?)
            }
            Self::TabulatedKk { spectrum, low_extrapolation, high_extrapolation, high_extrapolation_upper, carriers_included } => {
                let spectrum = read_spectrum(&resolve_path(base_dir, spectrum)?)?;
                Ok(MaterialModel::TabulatedKk(TabulatedKk {
                    spectrum,
                    low_extrapolation: DrudeParams::new(low_extrapolation.omega_p_ev, low_extrapolation.gamma_ev)?,
                    high_extrapolation: oscillator_set(high_extrapolation)?,
                    high_extrapolation_upper: high_extrapolation_upper.as_deref().map(oscillator_set).transpose()?,
                    carriers_included: *carriers_included,
                }))
            }
            Self::DielectricTable { table } => Ok(MaterialModel::DielectricTable(read_dielectric_table(&resolve_path(base_dir, table)?)?)),
            Self::IdealMetal => Ok(MaterialModel::IdealMetal),
        }
    }

    /// Rewrites table references as absolute paths.
    pub fn absolutize(&mut self, base_dir: &Path) -> Result<()> {
        match self {
            Self::TabulatedKk { spectrum: path, .. } | Self::DielectricTable { table: path } => {
                *path = absolute(&resolve_path(base_dir, path)?)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Table files this definition depends on.
    pub fn referenced_files(&self, base_dir: &Path) -> Result<Vec<PathBuf>> {
        match self {
            Self::TabulatedKk { spectrum: path, .. } | Self::DielectricTable { table: path } => Ok(vec![resolve_path(base_dir, path)?]),
            _ => Ok(Vec::new()),
        }
    }
}

fn absolute(path: &Path) -> Result<String> {
    Ok(fs::canonicalize(path)?.to_string_lossy().into_owned())
}

/// A material given inline or as a path to a material file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialRef {
    Path(String),
    Inline(MaterialSpec),
}

impl MaterialRef {
    fn load(&self, base_dir: &Path) -> Result<(MaterialSpec, PathBuf)> {
        match self {
            Self::Path(p) => {
                let path = resolve_path(base_dir, p)?;
                Ok((read_json(&path)?, parent_dir(&path)))
            }
            Self::Inline(spec) => Ok((spec.clone(), base_dir.to_path_buf())),
        }
    }

    pub fn build(&self, base_dir: &Path) -> Result<MaterialModel> {
        let (spec, dir) = self.load(base_dir)?;
        spec.build(&dir)
    }

    /// Inlines file references and makes table paths absolute.
    pub fn absolutize(&mut self, base_dir: &Path) -> Result<()> {
        let (mut spec, dir) = self.load(base_dir)?;
        spec.absolutize(&dir)?;
        *self = Self::Inline(spec);
        Ok(())
    }

    pub fn referenced_files(&self, base_dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        if let Self::Path(p) = self {
            files.push(resolve_path(base_dir, p)?);
        }
        let (spec, dir) = self.load(base_dir)?;
        files.extend(spec.referenced_files(&dir)?);
        Ok(files)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub thickness_nm: f64,
    pub material: MaterialRef,
}

/// Stack definition: films listed from the gap outward, then the substrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSpec {
    #[serde(default)]
    pub layers: Vec<LayerSpec>,
    pub substrate: MaterialRef,
}

impl StackSpec {
    pub fn build(&self, base_dir: &Path) -> Result<LayerStack> {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer::new(l.thickness_nm * 1e-9, l.material.build(base_dir)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(LayerStack::new(layers, self.substrate.build(base_dir)?))
    }

    pub fn absolutize(&mut self, base_dir: &Path) -> Result<()> {
        for l in &mut self.layers {
            l.material.absolutize(base_dir)?;
        }
        self.substrate.absolutize(base_dir)
    }

    pub fn referenced_files(&self, base_dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for l in &self.layers {
            files.extend(l.material.referenced_files(base_dir)?);
        }
        files.extend(self.substrate.referenced_files(base_dir)?);
        Ok(files)
    }
}

/// A stack given inline, as a path to a stack file, or as a path to a
/// single material file (read as a half-space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StackRef {
    Path(String),
    Inline(StackSpec),
}

impl StackRef {
    fn load(&self, base_dir: &Path) -> Result<(StackSpec, PathBuf)> {
        match self {
            Self::Path(p) => {
                let path = resolve_path(base_dir, p)?;
                Ok((read_stack_spec(&path)?, parent_dir(&path)))
            }
            Self::Inline(s) => Ok((s.clone(), base_dir.to_path_buf())),
        }
    }

    pub fn build(&self, base_dir: &Path) -> Result<LayerStack> {
        let (spec, dir) = self.load(base_dir)?;
        spec.build(&dir)
    }

    pub fn absolutize(&mut self, base_dir: &Path) -> Result<()> {
        let (mut spec, dir) = self.load(base_dir)?;
        spec.absolutize(&dir)?;
        *self = Self::Inline(spec);
        Ok(())
    }

    pub fn referenced_files(&self, base_dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        if let Self::Path(p) = self {
            files.push(resolve_path(base_dir, p)?);
        }
        let (spec, dir) = self.load(base_dir)?;
        files.extend(spec.referenced_files(&dir)?);
        Ok(files)
    }
}

fn read_stack_spec(path: &Path) -> Result<StackSpec> {
    let value: serde_json::Value = read_json(path)?;
    let spec = if value.get("type").is_some() {
        StackSpec { layers: Vec::new(), substrate: MaterialRef::Inline(serde_json::from_value(value)?) }
    } else {
        serde_json::from_value(value).map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?
    };
    Ok(spec)
}

pub fn read_material(path: &Path) -> Result<MaterialModel> {
    let spec: MaterialSpec = read_json(path)?;
    spec.build(&parent_dir(path))
}

/// Reads a stack file, or a material file as a half-space.
pub fn read_stack(path: &Path) -> Result<LayerStack> {
    read_stack_spec(path)?.build(&parent_dir(path))
}

pub fn read_spectrum(path: &Path) -> Result<OpticalSpectrum> {
    let t = read_table(path)?;
    t.expect_headers(&["omega_ev", "im_eps"], path)?;
    OpticalSpectrum::new(t.columns[0].clone(), t.columns[1].clone())
}

pub fn write_spectrum(path: &Path, spectrum: &OpticalSpectrum) -> Result<()> {
    write_table(path, &Table::new(&["omega_ev", "im_eps"], vec![spectrum.frequencies().to_vec(), spectrum.im_eps().to_vec()])?)
}

pub fn read_dielectric_table(path: &Path) -> Result<DielectricTable> {
    let t = read_table(path)?;
    t.expect_headers(&["xi_ev", "eps"], path)?;
    DielectricTable::new(t.columns[0].clone(), t.columns[1].clone())
}

pub fn write_dielectric_table(path: &Path, xi_ev: &[f64], eps: &[f64]) -> Result<()> {
    write_table(path, &Table::new(&["xi_ev", "eps"], vec![xi_ev.to_vec(), eps.to_vec()])?)
}

// ---------------------------------------------------------------------------
// Sweeps and measurement manifests

/// Metadata sidecar of a sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub applied_voltage_v: f64,
    pub repetition: usize,
    pub sampling_step_nm: f64,
    /// Piezo extension at which the sweep jumped to contact, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_to_contact_nm: Option<f64>,
}

/// Sidecar path for a sweep CSV: same stem, `.json` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_sweep(csv_path: &Path, sweep: &RawSweep) -> Result<()> {
    write_table(csv_path, &Table::new(&["z_piezo_nm", "s_def"], vec![sweep.z_piezo_nm.clone(), sweep.s_def.clone()])?)?;
    write_json(
        &sidecar_path(csv_path),
        &SweepMeta {
            applied_voltage_v: sweep.applied_voltage,
            repetition: sweep.repetition,
            sampling_step_nm: sweep.sampling_step_nm,
            jump_to_contact_nm: sweep.jump_to_contact_nm,
        },
    )
}

pub fn read_sweep(csv_path: &Path) -> Result<RawSweep> {
    let t = read_table(csv_path)?;
    t.expect_headers(&["z_piezo_nm", "s_def"], csv_path)?;
    let meta: SweepMeta = read_json(&sidecar_path(csv_path))?;
    let mut sweep = RawSweep::new(meta.applied_voltage_v, meta.repetition, t.columns[0].clone(), t.columns[1].clone(), meta.sampling_step_nm)?;
    sweep.jump_to_contact_nm = meta.jump_to_contact_nm;
    Ok(sweep)
}

/// Measurement-set manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSpec {
    /// Sweep CSV paths relative to the manifest.
    pub sweeps: Vec<String>,
    /// nm per signal unit.
    pub m: f64,
    pub m_uncertainty: f64,
    pub radius_m: f64,
    pub radius_uncertainty_m: f64,
}

/// A loaded measurement set and the sweeps that could not be read.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub set: MeasurementSet,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Loads every readable sweep of a manifest. Unreadable or missing sweeps
/// are skipped with a warning; a manifest with no readable sweep is an error.
pub fn read_manifest(path: &Path) -> Result<LoadedManifest> {
    let spec: ManifestSpec = read_json(path)?;
    let dir = parent_dir(path);
    let mut sweeps = Vec::new();
    let mut files = vec![path.to_path_buf()];
    let mut warnings = Vec::new();
    for rel in &spec.sweeps {
        let csv_path = dir.join(rel);
        match read_sweep(&csv_path) {
            Ok(s) => {
                files.push(csv_path.clone());
                files.push(sidecar_path(&csv_path));
                sweeps.push(s);
            }
            Err(e) => warnings.push(format!("skipping sweep {rel}: {e}")),
        }
    }
    let set = MeasurementSet::new(sweeps, spec.m, spec.m_uncertainty, SphereGeometry::new(spec.radius_m)?, spec.radius_uncertainty_m)?;
    Ok(LoadedManifest { set, files, warnings })
}

/// File name used for a sweep in a written dataset.
pub fn sweep_file_name(voltage_index: usize, repetition: usize) -> String {
    format!("sweep_v{voltage_index:02}_r{repetition:02}.csv")
}

/// Writes every sweep and a manifest into `dir`; returns the manifest path.
pub fn write_measurement_set(dir: &Path, set: &MeasurementSet) -> Result<PathBuf> {
    let voltages = set.voltages();
    let mut names = Vec::with_capacity(set.sweeps.len());
    for sweep in &set.sweeps {
        let vi = voltages.iter().position(|&v| v == sweep.applied_voltage).unwrap_or(0);
        let name = sweep_file_name(vi, sweep.repetition);
        write_sweep(&dir.join(&name), sweep)?;
        names.push(name);
    }
    let manifest = dir.join("manifest.json");
    write_json(
        &manifest,
        &ManifestSpec {
            sweeps: names,
            m: set.m,
            m_uncertainty: set.m_uncertainty,
            radius_m: set.sphere.radius,
            radius_uncertainty_m: set.radius_uncertainty,
        },
    )?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// Force curves

const A: &str = "a_nm";
const F: &str = "force_pN";
const LO: &str = "force_lo_pN";
const HI: &str = "force_hi_pN";
const SYS: &str = "err_sys_pN";
const RAND: &str = "err_rand_pN";
const TOT: &str = "err_tot_pN";

fn curve_columns(curve: &ForceCurve) -> Result<(Vec<&'static str>, Vec<Vec<f64>>)> {
    curve.validate()?;
    let mut headers = vec![A, F];
    let mut cols = vec![curve.a_nm.clone(), curve.force_pn.clone()];
    if let (Some(lo), Some(hi)) = (&curve.force_lo_pn, &curve.force_hi_pn) {
        headers.extend([LO, HI]);
        cols.extend([lo.clone(), hi.clone()]);
    }
    if let (Some(sys), Some(rand), Some(tot)) = (&curve.err_sys_pn, curve.err_rand_pn, &curve.err_tot_pn) {
        headers.extend([SYS, RAND, TOT]);
        cols.extend([sys.clone(), vec![rand; curve.len()], tot.clone()]);
    }
    Ok((headers, cols))
}

fn curve_from_columns(get: impl Fn(&str) -> Option<Vec<f64>>, origin: &str) -> Result<ForceCurve> {
    let missing = |c: &str| CoreError::Config(format!("{origin}: missing column `{c}`"));
    let mut curve = ForceCurve::new(get(A).ok_or_else(|| missing(A))?, get(F).ok_or_else(|| missing(F))?)?;
    match (get(LO), get(HI)) {
        (Some(lo), Some(hi)) => {
            curve.force_lo_pn = Some(lo);
            curve.force_hi_pn = Some(hi);
        }
        (None, None) => {}
        _ => return Err(CoreError::Config(format!("{origin}: band columns must appear together"))),
    }
    match (get(SYS), get(RAND), get(TOT)) {
        (Some(sys), Some(rand), Some(tot)) => {
            let r = rand.first().copied().unwrap_or(0.0);
            if rand.iter().any(|&x| x.to_bits() != r.to_bits()) {
                return Err(CoreError::Config(format!("{origin}: `{RAND}` must be constant")));
            }
            curve.err_sys_pn = Some(sys);
            curve.err_rand_pn = Some(r);
            curve.err_tot_pn = Some(tot);
        }
        (None, None, None) => {}
        _ => return Err(CoreError::Config(format!("{origin}: error columns must appear together"))),
    }
    curve.validate()?;
    Ok(curve)
}

pub fn write_curve_csv(path: &Path, curve: &ForceCurve) -> Result<()> {
    let (headers, cols) = curve_columns(curve)?;
    write_table(path, &Table::new(&headers, cols)?)
}

pub fn read_curve_csv(path: &Path) -> Result<ForceCurve> {
    let t = read_table(path)?;
    curve_from_columns(|c| t.column(c).map(<[f64]>::to_vec), &path.display().to_string())
}

/// JSON mirror of the CSV: one array per column. Non-finite values are
/// written as strings (`"NaN"`, `"inf"`) since JSON has no literal for them.
pub fn curve_to_json(curve: &ForceCurve) -> Result<serde_json::Value> {
    let (headers, cols) = curve_columns(curve)?;
    let mut map = serde_json::Map::new();
    for (h, c) in headers.iter().zip(cols) {
        let values = c
            .iter()
            .map(|&x| match serde_json::Number::from_f64(x) {
                Some(n) => serde_json::Value::Number(n),
                None => serde_json::Value::String(format_f64(x)),
            })
            .collect();
        map.insert(h.to_string(), serde_json::Value::Array(values));
    }
    Ok(serde_json::Value::Object(map))
}

pub fn write_curve_json(path: &Path, curve: &ForceCurve) -> Result<()> {
    write_json(path, &curve_to_json(curve)?)
}

pub fn read_curve_json(path: &Path) -> Result<ForceCurve> {
    let origin = path.display().to_string();
    let map: HashMap<String, Vec<serde_json::Value>> = read_json(path)?;
    let mut cols: HashMap<String, Vec<f64>> = HashMap::new();
    for (k, values) in map {
        let parsed = values
            .iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => n.as_f64(),
                serde_json::Value::String(s) => s.parse().ok(),
                _ => None,
            })
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CoreError::Config(format!("{origin}: column `{k}` has a non-numeric entry")))?;
        cols.insert(k, parsed);
    }
    curve_from_columns(|c| cols.get(c).cloned(), &origin)
}

/// Reads a force curve, choosing the format from the extension.
pub fn read_curve(path: &Path) -> Result<ForceCurve> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_curve_json(path),
        _ => read_curve_csv(path),
    }
}

// ---------------------------------------------------------------------------
// Calibration report

pub fn write_calibration(path: &Path, cal: &CalibrationResult) -> Result<()> {
    write_json(path, cal)
}

pub fn read_calibration(path: &Path) -> Result<CalibrationResult> {
    read_json(path)
}

// ---------------------------------------------------------------------------
// Topography

/// Reads a `height_nm,weight` histogram, re-centred and renormalised.
pub fn read_topography(path: &Path) -> Result<(HeightDistribution, RecenterReport)> {
    let t = read_table(path)?;
    t.expect_headers(&["height_nm", "weight"], path)?;
    HeightDistribution::from_histogram(t.require("height_nm", path)?, t.require("weight", path)?)
}

pub fn write_topography(path: &Path, dist: &HeightDistribution) -> Result<()> {
    write_table(path, &Table::new(&["height_nm", "weight"], vec![dist.heights().to_vec(), dist.weights().to_vec()])?)
}

// ---------------------------------------------------------------------------
// Synthetic ground truth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CasimirTruthSpec {
    pub sphere: StackRef,
    pub plate: StackRef,
    pub temperature_k: f64,
}

/// Ground-truth configuration for synthetic sweeps, echoed as `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    pub v0_v: f64,
    pub k_n_per_m: f64,
    pub z0_nm: f64,
    /// nm per signal unit.
    pub m: f64,
    pub m_uncertainty: f64,
    pub radius_m: f64,
    #[serde(default)]
    pub radius_uncertainty_m: f64,
    /// Omitted for electrostatics-only sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub casimir: Option<CasimirTruthSpec>,
    pub voltages_v: Vec<f64>,
    pub repetitions: usize,
    pub noise_sigma: f64,
    /// Signal units per nm of piezo extension.
    #[serde(default)]
    pub drift_slope: f64,
    pub seed: u64,
    #[serde(default = "default_z_max")]
    pub z_max_nm: f64,
    #[serde(default = "default_step")]
    pub sampling_step_nm: f64,
}

fn default_z_max() -> f64 {
    2000.0
}

fn default_step() -> f64 {
    0.2
}

impl TruthSpec {
    pub fn from_truth(t: &GroundTruth) -> Self {
        Self {
            v0_v: t.v0,
            k_n_per_m: t.k,
            z0_nm: t.z0_nm,
            m: t.m,
            m_uncertainty: t.m_uncertainty,
            radius_m: t.sphere.radius,
            radius_uncertainty_m: t.radius_uncertainty,
            casimir: None,
            voltages_v: t.voltages.clone(),
            repetitions: t.repetitions,
            noise_sigma: t.noise_sigma,
            drift_slope: t.drift_slope,
            seed: t.seed,
            z_max_nm: t.z_max_nm,
            sampling_step_nm: t.sampling_step_nm,
        }
    }

    pub fn build(&self, base_dir: &Path) -> Result<GroundTruth> {
        let casimir = self
            .casimir
            .as_ref()
            .map(|c| -> Result<CasimirTruth> {
                Ok(CasimirTruth { sphere_stack: c.sphere.build(base_dir)?, plate: c.plate.build(base_dir)?, temperature: c.temperature_k })
            })
            .transpose()?;
        let truth = GroundTruth {
            v0: self.v0_v,
            k: self.k_n_per_m,
            z0_nm: self.z0_nm,
            m: self.m,
            m_uncertainty: self.m_uncertainty,
            sphere: SphereGeometry::new(self.radius_m)?,
            radius_uncertainty: self.radius_uncertainty_m,
            casimir,
            voltages: self.voltages_v.clone(),
            repetitions: self.repetitions,
            noise_sigma: self.noise_sigma,
            drift_slope: self.drift_slope,
            seed: self.seed,
            z_max_nm: self.z_max_nm,
            sampling_step_nm: self.sampling_step_nm,
        };
        truth.validate()?;
        Ok(truth)
    }

    /// Inlines stack references so the truth no longer depends on its location.
    pub fn absolutize(&mut self, base_dir: &Path) -> Result<()> {
        if let Some(c) = &mut self.casimir {
            c.sphere.absolutize(base_dir)?;
            c.plate.absolutize(base_dir)?;
        }
        Ok(())
    }

    pub fn referenced_files(&self, base_dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        if let Some(c) = &self.casimir {
            files.extend(c.sphere.referenced_files(base_dir)?);
            files.extend(c.plate.referenced_files(base_dir)?);
        }
        Ok(files)
    }
}

pub fn read_truth(path: &Path) -> Result<(TruthSpec, GroundTruth)> {
    let spec: TruthSpec = read_json(path)?;
    let truth = spec.build(&parent_dir(path))?;
    Ok((spec, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::reference_truth;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -196.8e-3, 6.02214076e23, 5e-324, f64::MAX, -0.0] {
            let back: f64 = format_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
        assert!(format_f64(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn curve_csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ForceCurve::new(vec![60.0, 61.0, 62.0], vec![-198.123456789, f64::NAN, -1.0 / 3.0]).unwrap();
        c.err_sys_pn = Some(vec![2.1, 2.05, 2.0]);
        c.err_rand_pn = Some(0.55);
        c.err_tot_pn = Some(vec![2.17, 2.12, 2.07]);
        c.force_lo_pn = Some(vec![-199.0, -150.0, -0.4]);
        c.force_hi_pn = Some(vec![-197.0, -149.0, -0.3]);
        for name in ["c.csv", "c.json"] {
            let p = dir.path().join(name);
            if name.ends_with("csv") {
                write_curve_csv(&p, &c).unwrap();
            } else {
                write_curve_json(&p, &c).unwrap();
            }
            let back = read_curve(&p).unwrap();
            assert_eq!(back.a_nm, c.a_nm);
            assert_eq!(back.force_pn[0].to_bits(), c.force_pn[0].to_bits());
            assert!(back.force_pn[1].is_nan());
            assert_eq!(back.force_pn[2].to_bits(), c.force_pn[2].to_bits());
            assert_eq!(back.err_rand_pn, Some(0.55));
            assert_eq!(back.force_lo_pn, c.force_lo_pn);
            assert_eq!(back.err_tot_pn, c.err_tot_pn);
        }
    }

    #[test]
    fn csv_header_is_units_tagged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        write_curve_csv(&p, &ForceCurve::new(vec![100.0], vec![-275.6]).unwrap()).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a_nm,force_pN\n100,-275.6\n");
    }

    #[test]
    fn sweep_and_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = reference_truth(3);
        t.voltages = vec![-0.3, -0.2];
        t.repetitions = 2;
        t.z_max_nm = 300.0;
        let set = crate::synth::Synthesizer::new(t).unwrap().simulate_set().unwrap();
        let manifest = write_measurement_set(dir.path(), &set).unwrap();
        let loaded = read_manifest(&manifest).unwrap();
        assert!(loaded.warnings.is_empty());
        assert_eq!(loaded.set, set);
    }

    #[test]
    fn missing_sweep_is_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = reference_truth(3);
        t.voltages = vec![-0.3, -0.2];
        t.repetitions = 1;
        t.z_max_nm = 300.0;
        let set = crate::synth::Synthesizer::new(t).unwrap().simulate_set().unwrap();
        let manifest = write_measurement_set(dir.path(), &set).unwrap();
        fs::remove_file(dir.path().join(sweep_file_name(1, 0))).unwrap();
        let loaded = read_manifest(&manifest).unwrap();
        assert_eq!(loaded.warnings.len(), 1);
        assert_eq!(loaded.set.sweeps.len(), 1);
    }

    #[test]
    fn materials_resolve_relative_to_their_file() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("tables");
        fs::create_dir(&sub).unwrap();
        write_dielectric_table(&sub.join("q.csv"), &[0.0, 1.0, 10.0], &[4.0, 3.0, 1.5]).unwrap();
        fs::write(sub.join("q.json"), r#"{"type": "dielectric_table", "table": "q.csv"}"#).unwrap();
        fs::write(
            dir.path().join("plate.json"),
            r#"{"layers": [{"thickness_nm": 74.6, "material": {"type": "drude", "omega_p_ev": 1.5, "gamma_ev": 0.128}}],
                "substrate": "tables/q.json"}"#,
        )
        .unwrap();
        let stack = read_stack(&dir.path().join("plate.json")).unwrap();
        assert_eq!(stack.layers.len(), 1);
        assert!((stack.layers[0].thickness - 74.6e-9).abs() < 1e-20);
        assert!(matches!(stack.substrate, MaterialModel::DielectricTable(_)));
        let half = read_stack(&sub.join("q.json")).unwrap();
        assert!(half.layers.is_empty());
        let mut spec = StackRef::Path("plate.json".into());
        assert_eq!(spec.referenced_files(dir.path()).unwrap().len(), 3);
        spec.absolutize(dir.path()).unwrap();
        assert_eq!(spec.build(Path::new("/")).unwrap(), stack);
    }

    #[test]
    fn unknown_material_type_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        fs::write(&p, r#"{"type": "lorentz", "omega_p_ev": 1.0}"#).unwrap();
        assert!(matches!(read_material(&p), Err(CoreError::Config(_))));
        fs::write(&p, r#"{"type": "dielectric_table", "table": "absent.csv"}"#).unwrap();
        assert!(matches!(read_material(&p), Err(CoreError::Config(_))));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "omega,im_eps\n1,2\n2,3\n").unwrap();
        assert!(matches!(read_spectrum(&p), Err(CoreError::Config(_))));
    }

    #[test]
    fn calibration_report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = reference_truth(5);
        t.repetitions = 2;
        let set = crate::synth::Synthesizer::new(t).unwrap().simulate_set().unwrap();
        let cal = crate::analysis::calibrate(&set, &Default::default()).unwrap();
        let p = dir.path().join("cal.json");
        write_calibration(&p, &cal).unwrap();
        assert_eq!(read_calibration(&p).unwrap(), cal);
    }

    #[test]
    fn truth_spec_round_trip() {
        let t = reference_truth(11);
        let spec = TruthSpec::from_truth(&t);
        let text = serde_json::to_string(&spec).unwrap();
        let back: TruthSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.build(Path::new(".")).unwrap(), t);
    }
}
