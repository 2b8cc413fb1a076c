//! `casimir-lab`: Casimir and electrostatic force curves, AFM sweep
//! reduction, synthetic sweeps, curve comparison and Kramers–Kronig tables.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use casimir_core::analysis::{calibrate, compare_curves, error_budget, extract_casimir, CalibrationResult, CombinationRule};
use casimir_core::electrostatics::electrostatic_force;
use casimir_core::interp::PowerScaledTable;
use casimir_core::io::{self, StackRef, Table, TruthSpec};
use casimir_core::lifshitz::{force_curve, force_curve_band, ParameterSpread};
use casimir_core::materials::{eps_imaginary, extrapolation_band, matsubara_frequencies, MaterialModel};
use casimir_core::roughness::{averaged_force, HeightDistribution};
use casimir_core::synth::{reference_truth, Synthesizer};
use casimir_core::{CoreError, ForceCurve, LifshitzSettings, Result, SphereGeometry};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use config::{
    absolute_path, dir_of, grid, AnalyzeConfig, CompareConfig, ComputeConfig, KkConfig, RoughnessSpec, SynthConfig,
};
use run::{read_config, write_run_manifest};

#[derive(Parser, Debug)]
#[command(name = "casimir-lab", version, about = "Casimir-force theory and AFM force-curve reduction")]
struct Cli {
    /// JSON configuration for the command, or a run manifest to re-execute.
    /// Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Table format of the outputs.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (0: one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sphere-plate force curve from materials (or electrostatics).
    Compute(ComputeArgs),
    /// Calibrate a measurement set and extract the Casimir force.
    Analyze(AnalyzeArgs),
    /// Write synthetic sweeps from a ground truth.
    Synth(SynthArgs),
    /// Relative difference between two force curves.
    Compare(CompareArgs),
    /// ε(iξ) of a material along the imaginary axis.
    Kk(KkArgs),
}

#[derive(Args, Debug)]
struct ComputeArgs {
    /// Sphere coating: stack file or material file (half-space).
    #[arg(long)]
    sphere: Option<String>,
    /// Plate: stack file or material file (half-space).
    #[arg(long)]
    plate: Option<String>,
    #[arg(long)]
    radius_um: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    a_min: Option<f64>,
    #[arg(long)]
    a_max: Option<f64>,
    #[arg(long)]
    a_step: Option<f64>,
    /// Emit force_lo_pN and force_hi_pN from the extrapolation envelopes.
    #[arg(long)]
    band: bool,
    #[arg(long)]
    spread_radius_um: Option<f64>,
    #[arg(long)]
    spread_thickness_nm: Option<f64>,
    #[arg(long)]
    l_max_cap: Option<usize>,
    #[arg(long)]
    roughness_sigma_sphere: Option<f64>,
    #[arg(long)]
    roughness_sigma_plate: Option<f64>,
    /// Height histogram CSV (`height_nm,weight`) of the sphere.
    #[arg(long)]
    topography_sphere: Option<String>,
    #[arg(long)]
    topography_plate: Option<String>,
    /// Electrostatic force instead of the Casimir force.
    #[arg(long)]
    electrostatic: bool,
    /// Potential difference in volts for --electrostatic.
    #[arg(long, allow_hyphen_values = true)]
    dv: Option<f64>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Measurement-set manifest.
    #[arg(long)]
    manifest: Option<String>,
    /// Reuse a calibration report instead of calibrating.
    #[arg(long)]
    calibration: Option<String>,
    #[arg(long)]
    a_min: Option<f64>,
    #[arg(long)]
    a_max: Option<f64>,
    #[arg(long)]
    a_step: Option<f64>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long, value_enum)]
    rule: Option<Rule>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rule {
    Rss,
    Linear,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Ground-truth JSON; the built-in electrostatics-only reference when absent.
    #[arg(long)]
    truth: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Reference curve (CSV or JSON).
    reference: Option<String>,
    /// Curve compared with the reference.
    other: Option<String>,
}

#[derive(Args, Debug)]
struct KkArgs {
    /// Material file.
    #[arg(long)]
    material: Option<String>,
    #[arg(long)]
    xi_min: Option<f64>,
    #[arg(long)]
    xi_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Use the Matsubara frequencies of this temperature.
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    l_max: Option<usize>,
    /// Emit both high-frequency envelopes.
    #[arg(long)]
    band: bool,
}

/// Exit status for a library error.
fn exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::Convergence { .. } | CoreError::Numerical { .. } => 3,
        CoreError::Fit(_) => 4,
        _ => 2,
    }
}

struct Context {
    out: PathBuf,
    format: Format,
    threads: usize,
}

/// Files read and written by a command.
#[derive(Default)]
struct Files {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

fn load_config<T: DeserializeOwned + Default>(cli: &Cli, command: &str) -> Result<(T, Option<Format>)> {
    let Some(path) = &cli.config else {
        return Ok((T::default(), None));
    };
    let (value, format) = read_config(path, command)?;
    let cfg = serde_json::from_value(value).map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
    let format = match format.as_deref() {
        Some("json") => Some(Format::Json),
        Some("csv") => Some(Format::Csv),
        _ => None,
    };
    Ok((cfg, format))
}

fn config_dir(cli: &Cli) -> PathBuf {
    cli.config.as_deref().map(dir_of).unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run_cli(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run_cli(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CoreError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Compute(a) => {
            let (mut cfg, fmt) = load_config::<ComputeConfig>(cli, "compute")?;
            cfg.absolutize(&config_dir(cli))?;
            merge_compute(&mut cfg, a)?;
            execute(cli, "compute", fmt, &cfg, cmd_compute)
        }
        Command::Analyze(a) => {
            let (mut cfg, fmt) = load_config::<AnalyzeConfig>(cli, "analyze")?;
            cfg.absolutize(&config_dir(cli))?;
            merge_analyze(&mut cfg, a)?;
            execute(cli, "analyze", fmt, &cfg, cmd_analyze)
        }
        Command::Synth(a) => {
            let (mut cfg, fmt) = load_config::<SynthConfig>(cli, "synth")?;
            cfg.absolutize(&config_dir(cli))?;
            merge_synth(&mut cfg, a)?;
            execute(cli, "synth", fmt, &cfg, cmd_synth)
        }
        Command::Compare(a) => {
            let (mut cfg, fmt) = load_config::<CompareConfig>(cli, "compare")?;
            cfg.absolutize(&config_dir(cli))?;
            let cwd = Path::new(".");
            if let Some(p) = &a.reference {
                cfg.reference = Some(absolute_path(cwd, p)?);
            }
            if let Some(p) = &a.other {
                cfg.other = Some(absolute_path(cwd, p)?);
            }
            execute(cli, "compare", fmt, &cfg, cmd_compare)
        }
        Command::Kk(a) => {
            let (mut cfg, fmt) = load_config::<KkConfig>(cli, "kk")?;
            cfg.absolutize(&config_dir(cli))?;
            merge_kk(&mut cfg, a)?;
            execute(cli, "kk", fmt, &cfg, cmd_kk)
        }
    })
}

fn execute<T: Serialize>(
    cli: &Cli,
    command: &str,
    recorded_format: Option<Format>,
    cfg: &T,
    body: fn(&T, &Context) -> Result<Files>,
) -> Result<()> {
    let ctx = Context {
        out: cli.out.clone(),
        format: cli.format.or(recorded_format).unwrap_or(Format::Csv),
        threads: rayon::current_num_threads(),
    };
    std::fs::create_dir_all(&ctx.out)?;
    let files = body(cfg, &ctx)?;
    write_run_manifest(
        &ctx.out,
        command,
        ctx.format.ext(),
        ctx.threads,
        serde_json::to_value(cfg)?,
        &files.inputs,
        &files.outputs,
    )?;
    Ok(())
}

fn write_curve(ctx: &Context, stem: &str, curve: &ForceCurve) -> Result<PathBuf> {
    let path = ctx.out.join(format!("{stem}.{}", ctx.format.ext()));
    match ctx.format {
        Format::Csv => io::write_curve_csv(&path, curve)?,
        Format::Json => io::write_curve_json(&path, curve)?,
    }
    Ok(path)
}

fn write_columns(ctx: &Context, stem: &str, table: &Table) -> Result<PathBuf> {
    let path = ctx.out.join(format!("{stem}.{}", ctx.format.ext()));
    match ctx.format {
        Format::Csv => io::write_table(&path, table)?,
        Format::Json => {
            let mut map = serde_json::Map::new();
            for (h, c) in table.headers.iter().zip(&table.columns) {
                let values = c
                    .iter()
                    .map(|&x| {
                        serde_json::Number::from_f64(x)
                            .map(serde_json::Value::Number)
                            .unwrap_or_else(|| serde_json::Value::String(io::format_f64(x)))
                    })
                    .collect();
                map.insert(h.clone(), serde_json::Value::Array(values));
            }
            io::write_json(&path, &serde_json::Value::Object(map))?;
        }
    }
    Ok(path)
}

// ---------------------------------------------------------------------------
// compute

fn merge_compute(cfg: &mut ComputeConfig, a: &ComputeArgs) -> Result<()> {
    let cwd = Path::new(".");
    if let Some(s) = &a.sphere {
        cfg.sphere = Some(StackRef::Path(absolute_path(cwd, s)?));
    }
    if let Some(s) = &a.plate {
        cfg.plate = Some(StackRef::Path(absolute_path(cwd, s)?));
    }
    macro_rules! set {
        ($($field:ident = $arg:expr),* $(,)?) => { $(if let Some(v) = $arg { cfg.$field = v; })* };
    }
    set!(
        radius_um = a.radius_um,
        temperature_k = a.temperature,
        a_min_nm = a.a_min,
        a_max_nm = a.a_max,
        a_step_nm = a.a_step,
        l_max_cap = a.l_max_cap,
        dv_v = a.dv,
    );
    if a.spread_radius_um.is_some() {
        cfg.spread_radius_um = a.spread_radius_um;
    }
    if a.spread_thickness_nm.is_some() {
        cfg.spread_thickness_nm = a.spread_thickness_nm;
    }
    cfg.band |= a.band;
    cfg.electrostatic |= a.electrostatic;
    if let Some(s) = a.roughness_sigma_sphere {
        cfg.roughness_sphere = Some(RoughnessSpec::SigmaNm(s));
    }
    if let Some(s) = a.roughness_sigma_plate {
        cfg.roughness_plate = Some(RoughnessSpec::SigmaNm(s));
    }
    if let Some(p) = &a.topography_sphere {
        cfg.roughness_sphere = Some(RoughnessSpec::Histogram(absolute_path(cwd, p)?));
    }
    if let Some(p) = &a.topography_plate {
        cfg.roughness_plate = Some(RoughnessSpec::Histogram(absolute_path(cwd, p)?));
    }
    Ok(())
}

fn load_roughness(spec: &Option<RoughnessSpec>, files: &mut Files) -> Result<HeightDistribution> {
    match spec {
        None => Ok(HeightDistribution::delta()),
        Some(RoughnessSpec::SigmaNm(s)) => HeightDistribution::gaussian_default(*s),
        Some(RoughnessSpec::Histogram(p)) => {
            let path = PathBuf::from(p);
            let (dist, report) = io::read_topography(&path)?;
            if report.mean_shift_nm != 0.0 {
                warn!("{p}: heights re-centred by {} nm", report.mean_shift_nm);
            }
            files.inputs.push(path);
            Ok(dist)
        }
    }
}

fn cmd_compute(cfg: &ComputeConfig, ctx: &Context) -> Result<Files> {
    let mut files = Files::default();
    let a_nm = cfg.grid_nm()?;
    let sphere = SphereGeometry::new(cfg.radius_um * 1e-6)?;
    let curve = if cfg.electrostatic {
        let forces = a_nm
            .iter()
            .map(|a| electrostatic_force(a * 1e-9, sphere.radius, cfg.dv_v).map(|f| f * 1e12))
            .collect::<Result<Vec<_>>>()?;
        ForceCurve::new(a_nm, forces)?
    } else {
        let root = Path::new("/");
        let (Some(s), Some(p)) = (&cfg.sphere, &cfg.plate) else {
            return Err(CoreError::Config("compute needs --sphere and --plate (or --electrostatic)".into()));
        };
        files.inputs.extend(s.referenced_files(root)?);
        files.inputs.extend(p.referenced_files(root)?);
        let sphere_stack = s.build(root)?;
        let plate = p.build(root)?;
        let settings = LifshitzSettings {
            temperature: cfg.temperature_k,
            matsubara_rel_tol: cfg.matsubara_rel_tol,
            quadrature_rel_tol: cfg.quadrature_rel_tol,
            l_max_cap: cfg.l_max_cap,
        };
        let spread = match (cfg.spread_radius_um, cfg.spread_thickness_nm) {
            (None, None) => None,
            (r, t) => Some(ParameterSpread { radius: r.unwrap_or(0.0) * 1e-6, thickness: t.unwrap_or(0.0) * 1e-9 }),
        };
        let ds = load_roughness(&cfg.roughness_sphere, &mut files)?;
        let dp = load_roughness(&cfg.roughness_plate, &mut files)?;
        let theory = |grid_m: &[f64]| -> Result<ForceCurve> {
            if cfg.band || spread.is_some() {
                force_curve_band(grid_m, &sphere, &sphere_stack, &plate, &settings, spread)
            } else {
                force_curve(grid_m, &sphere, &sphere_stack, &plate, &settings)
            }
        };
        let mut curve = if cfg.roughness_sphere.is_none() && cfg.roughness_plate.is_none() {
            let grid_m: Vec<f64> = a_nm.iter().map(|a| a * 1e-9).collect();
            theory(&grid_m)?
        } else {
            rough_curve(&a_nm, &ds, &dp, theory)?
        };
        curve.a_nm = a_nm;
        curve
    };
    files.outputs.push(write_curve(ctx, "force", &curve)?);
    Ok(files)
}

/// Geometrically averaged curve: the flat force is tabulated on a log grid
/// spanning every local separation and interpolated.
fn rough_curve(
    a_nm: &[f64],
    ds: &HeightDistribution,
    dp: &HeightDistribution,
    theory: impl Fn(&[f64]) -> Result<ForceCurve>,
) -> Result<ForceCurve> {
    const STEP_LN: f64 = 0.01;
    let reach = |d: &HeightDistribution| d.heights().iter().fold(0.0f64, |m, h| m.max(h.abs()));
    let span = reach(ds) + reach(dp);
    let lo = a_nm[0] - span - 1.0;
    if lo <= 0.0 {
        return Err(CoreError::Config(format!(
            "roughness of total reach {span} nm does not fit below a = {} nm",
            a_nm[0]
        )));
    }
    let nodes = PowerScaledTable::grid(lo * 1e-9, (a_nm[a_nm.len() - 1] + span + 1.0) * 1e-9, STEP_LN)?;
    let flat = theory(&nodes)?;
    let average = |values_pn: &[f64]| -> Result<Vec<f64>> {
        let values: Vec<f64> = values_pn.iter().map(|f| f * 1e-12).collect();
        let table = PowerScaledTable::from_values(nodes[0], STEP_LN, 3, &nodes, &values)?;
        a_nm.iter()
            .map(|a| averaged_force(|x| table.eval(x).map(|(f, _)| f), a * 1e-9, ds, dp).map(|f| f * 1e12))
            .collect()
    };
    if let (Some(flo), Some(fhi)) = (&flat.force_lo_pn, &flat.force_hi_pn) {
        let lo = average(flo)?;
        let hi = average(fhi)?;
        let mut curve = ForceCurve::new(a_nm.to_vec(), lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect())?;
        curve.force_lo_pn = Some(lo);
        curve.force_hi_pn = Some(hi);
        Ok(curve)
    } else {
        ForceCurve::new(a_nm.to_vec(), average(&flat.force_pn)?)
    }
}

// ---------------------------------------------------------------------------
// analyze

fn merge_analyze(cfg: &mut AnalyzeConfig, a: &AnalyzeArgs) -> Result<()> {
    let cwd = Path::new(".");
    if let Some(p) = &a.manifest {
        cfg.manifest = Some(absolute_path(cwd, p)?);
    }
    if let Some(p) = &a.calibration {
        cfg.calibration = Some(absolute_path(cwd, p)?);
    }
    if let Some(v) = a.a_min {
        cfg.a_min_nm = v;
    }
    if let Some(v) = a.a_max {
        cfg.a_max_nm = v;
    }
    if let Some(v) = a.a_step {
        cfg.a_step_nm = v;
    }
    if let Some(c) = a.confidence {
        cfg.options.confidence = c;
        cfg.error_model.confidence = c;
    }
    if let Some(r) = a.rule {
        cfg.error_model.rule = match r {
            Rule::Rss => CombinationRule::RootSumSquare,
            Rule::Linear => CombinationRule::LinearSum,
        };
    }
    Ok(())
}

/// Calibration report written by `analyze`.
#[derive(Debug, Serialize, Deserialize)]
struct AnalysisReport {
    calibration: CalibrationResult,
    /// Whether V₀ shows no significant trend with separation.
    v0_independent_of_separation: bool,
    sweeps_loaded: usize,
    incomplete_sweeps: usize,
    warnings: Vec<String>,
}

fn read_calibration_any(path: &Path) -> Result<CalibrationResult> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("calibration").is_some() {
        Ok(serde_json::from_value::<AnalysisReport>(value)?.calibration)
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

fn cmd_analyze(cfg: &AnalyzeConfig, ctx: &Context) -> Result<Files> {
    let mut files = Files::default();
    let manifest = cfg
        .manifest
        .as_ref()
        .ok_or_else(|| CoreError::Config("analyze needs --manifest".into()))?;
    let loaded = io::read_manifest(Path::new(manifest))?;
    for w in &loaded.warnings {
        warn!("{w}");
    }
    files.inputs.extend(loaded.files.iter().cloned());
    let cal = match &cfg.calibration {
        Some(p) => {
            files.inputs.push(PathBuf::from(p));
            read_calibration_any(Path::new(p))?
        }
        None => calibrate(&loaded.set, &cfg.options)?,
    };
    if !cal.v0_estimate.independent {
        warn!(
            "V0 trend with separation: slope {:.3e} V/nm against sigma {:.3e}",
            cal.v0_estimate.slope, cal.v0_estimate.sigma_slope
        );
    }
    let a_nm = grid(cfg.a_min_nm, cfg.a_max_nm, cfg.a_step_nm)?;
    let curves = extract_casimir(&loaded.set, &cal, &a_nm)?;
    let mut warnings = loaded.warnings.clone();
    if curves.incomplete_sweeps > 0 {
        let w = format!("{} sweeps do not cover the full separation grid", curves.incomplete_sweeps);
        warn!("{w}");
        warnings.push(w);
    }
    let curve = if curves.sweeps.len() >= 2 {
        error_budget(&curves, &cfg.error_model)?
    } else {
        warnings.push("a single sweep carries no random error; error columns omitted".into());
        curves.mean.clone()
    };
    let report = AnalysisReport {
        v0_independent_of_separation: cal.v0_estimate.independent,
        calibration: cal,
        sweeps_loaded: loaded.set.sweeps.len(),
        incomplete_sweeps: curves.incomplete_sweeps,
        warnings,
    };
    let report_path = ctx.out.join("calibration.json");
    io::write_json(&report_path, &report)?;
    files.outputs.push(report_path);
    files.outputs.push(write_curve(ctx, "casimir", &curve)?);
    Ok(files)
}

// ---------------------------------------------------------------------------
// synth

fn merge_synth(cfg: &mut SynthConfig, a: &SynthArgs) -> Result<()> {
    if let Some(p) = &a.truth {
        let path = PathBuf::from(absolute_path(Path::new("."), p)?);
        let text = std::fs::read_to_string(&path)?;
        let mut spec: TruthSpec =
            serde_json::from_str(&text).map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        spec.absolutize(&dir_of(&path))?;
        cfg.truth = Some(spec);
    }
    let spec = cfg.truth.get_or_insert_with(|| TruthSpec::from_truth(&reference_truth(0)));
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    Ok(())
}

fn cmd_synth(cfg: &SynthConfig, ctx: &Context) -> Result<Files> {
    let mut files = Files::default();
    let mut spec = cfg.truth.clone().ok_or_else(|| CoreError::Config("synth needs a ground truth".into()))?;
    let root = Path::new("/");
    files.inputs.extend(spec.referenced_files(root)?);
    let truth = spec.build(root)?;
    let set = Synthesizer::new(truth)?.simulate_set()?;
    let manifest = io::write_measurement_set(&ctx.out, &set)?;
    for s in &set.sweeps {
        let vi = set.voltages().iter().position(|&v| v == s.applied_voltage).unwrap_or(0);
        let csv = ctx.out.join(io::sweep_file_name(vi, s.repetition));
        files.outputs.push(io::sidecar_path(&csv));
        files.outputs.push(csv);
    }
    files.outputs.push(manifest);
    spec.absolutize(root)?;
    let truth_path = ctx.out.join("truth.json");
    io::write_json(&truth_path, &spec)?;
    files.outputs.push(truth_path);
    Ok(files)
}

// ---------------------------------------------------------------------------
// compare

fn cmd_compare(cfg: &CompareConfig, ctx: &Context) -> Result<Files> {
    let (Some(a), Some(b)) = (&cfg.reference, &cfg.other) else {
        return Err(CoreError::Config("compare needs two curve files".into()));
    };
    let (pa, pb) = (PathBuf::from(a), PathBuf::from(b));
    let c = compare_curves(&io::read_curve(&pa)?, &io::read_curve(&pb)?)?;
    let mut headers = vec!["a_nm", "rel_diff_pct"];
    let mut cols = vec![c.a_nm.clone(), c.relative.iter().map(|r| 100.0 * r).collect()];
    if let Some(s) = &c.sigma {
        headers.push("rel_diff_err_pct");
        cols.push(s.iter().map(|r| 100.0 * r).collect());
    }
    let out = write_columns(ctx, "comparison", &Table::new(&headers, cols)?)?;
    Ok(Files { inputs: vec![pa, pb], outputs: vec![out] })
}

// ---------------------------------------------------------------------------
// kk

fn merge_kk(cfg: &mut KkConfig, a: &KkArgs) -> Result<()> {
    if let Some(p) = &a.material {
        cfg.material = Some(io::MaterialRef::Path(absolute_path(Path::new("."), p)?));
    }
    if let Some(v) = a.xi_min {
        cfg.xi_min_ev = v;
    }
    if let Some(v) = a.xi_max {
        cfg.xi_max_ev = v;
    }
    if let Some(v) = a.points {
        cfg.points = v;
    }
    if a.temperature.is_some() {
        cfg.temperature_k = a.temperature;
    }
    if let Some(v) = a.l_max {
        cfg.l_max = v;
    }
    cfg.band |= a.band;
    Ok(())
}

fn cmd_kk(cfg: &KkConfig, ctx: &Context) -> Result<Files> {
    let mut files = Files::default();
    let root = Path::new("/");
    let material = cfg.material.as_ref().ok_or_else(|| CoreError::Config("kk needs --material".into()))?;
    files.inputs.extend(material.referenced_files(root)?);
    let model = material.build(root)?;
    let xi: Vec<f64> = match cfg.temperature_k {
        Some(t) => matsubara_frequencies(t, cfg.l_max)?.into_iter().skip(1).collect(),
        None => {
            if !(cfg.xi_min_ev > 0.0 && cfg.xi_max_ev > cfg.xi_min_ev && cfg.points >= 2) {
                return Err(CoreError::Config("kk grid needs 0 < xi_min < xi_max and ≥ 2 points".into()));
            }
            let r = cfg.xi_max_ev / cfg.xi_min_ev;
            (0..cfg.points).map(|i| cfg.xi_min_ev * r.powf(i as f64 / (cfg.points - 1) as f64)).collect()
        }
    };
    let table = if cfg.band {
        let MaterialModel::TabulatedKk(t) = &model else {
            return Err(CoreError::Config("--band needs a tabulated_kk material".into()));
        };
        let (lo, hi): (Vec<f64>, Vec<f64>) = xi.iter().map(|&x| extrapolation_band(t, x)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
        Table::new(&["xi_ev", "eps_lo", "eps_hi"], vec![xi, lo, hi])?
    } else {
        let eps = xi.iter().map(|&x| eps_imaginary(&model, x)).collect::<Result<Vec<_>>>()?;
        Table::new(&["xi_ev", "eps"], vec![xi, eps])?
    };
    files.outputs.push(write_columns(ctx, "eps", &table)?);
    Ok(files)
}
