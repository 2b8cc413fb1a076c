//! Residual potential, contact separation and spring constant from the
//! voltage dependence of the deflection.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::preprocess::{subtract_drift, uniform_grid, ResampledSweep};
use super::stats::{fit_line, mean, sample_variance, student_t};
use super::MeasurementSet;
use crate::electrostatics::CurvatureTable;
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationOptions {
    /// z_piezo interval (nm) used for the drift line.
    pub far_window_nm: (f64, f64),
    pub grid_step_nm: f64,
    /// Lower end of the a_rel calibration range; by default the smallest
    /// separation reached by every sweep plus `contact_margin_nm`.
    pub calibration_min_nm: Option<f64>,
    pub contact_margin_nm: f64,
    pub calibration_max_nm: f64,
    /// Half-width (samples) of the local quadratic smoothing of the
    /// deflection used for a_rel.
    pub smoothing_half_width: usize,
    /// Average repetitions before the parabola fit, otherwise fit every sweep.
    pub average_repetitions: bool,
    pub confidence: f64,
    pub initial_z0_nm: f64,
    /// N/m.
    pub initial_k: f64,
    pub max_iterations: usize,
    /// Passes that recompute a_rel with the far-field electrostatic
    /// deflection, which the drift line absorbs, restored from the previous
    /// calibration.
    pub refinement_passes: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            far_window_nm: (1700.0, 2000.0),
            grid_step_nm: 1.0,
            calibration_min_nm: None,
            contact_margin_nm: 10.0,
            calibration_max_nm: 1000.0,
            smoothing_half_width: 5,
            average_repetitions: true,
            confidence: 0.95,
            initial_z0_nm: 30.0,
            initial_k: 0.01,
            max_iterations: 200,
            refinement_passes: 2,
        }
    }
}

/// S = curvature·V² + linear·V + offset at one separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolaFit {
    pub a_rel_nm: f64,
    /// Signal units per V².
    pub curvature: f64,
    pub linear: f64,
    pub offset: f64,
    /// (XᵀX)⁻¹ for the coefficient order (curvature, linear, offset).
    pub unscaled_cov: [[f64; 3]; 3],
    pub rss: f64,
    pub dof: usize,
    pub sigma_curvature: f64,
    /// −linear/(2·curvature); `None` when the curvature is not significant.
    pub vertex: Option<f64>,
    pub sigma_vertex: Option<f64>,
}

impl ParabolaFit {
    /// Coefficient errors for residual variance `sigma2`.
    pub fn with_variance(mut self, sigma2: f64) -> Self {
        let c = &self.unscaled_cov;
        let (a, b) = (self.curvature, self.linear);
        self.sigma_curvature = (sigma2 * c[0][0]).sqrt();
        let significant = a != 0.0 && a.abs() > 2.0 * self.sigma_curvature;
        if significant {
            let (ga, gb) = (b / (2.0 * a * a), -1.0 / (2.0 * a));
            let var = sigma2 * (ga * ga * c[0][0] + 2.0 * ga * gb * c[0][1] + gb * gb * c[1][1]);
            self.vertex = Some(-b / (2.0 * a));
            self.sigma_vertex = Some(var.max(0.0).sqrt());
        } else {
            self.vertex = None;
            self.sigma_vertex = None;
        }
        self
    }
}

/// Ordinary least-squares parabola of `signals` against `voltages`. The
/// coefficient errors use this fit's own residual variance.
pub fn fit_parabola_per_separation(a_rel_nm: f64, voltages: &[f64], signals: &[f64]) -> Result<ParabolaFit> {
    let fit = parabola_raw(a_rel_nm, voltages, signals)?;
    let sigma2 = if fit.dof > 0 { fit.rss / fit.dof as f64 } else { 0.0 };
    Ok(fit.with_variance(sigma2))
}

fn parabola_raw(a_rel_nm: f64, voltages: &[f64], signals: &[f64]) -> Result<ParabolaFit> {
    let n = voltages.len();
    let mut distinct = voltages.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 || signals.len() != n {
        return Err(CoreError::Fit(format!(
            "parabola at a_rel = {a_rel_nm} nm needs ≥3 distinct voltages, got {}",
            distinct.len()
        )));
    }
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => voltages[i] * voltages[i],
        1 => voltages[i],
        _ => 1.0,
    });
    let y = DVector::from_column_slice(signals);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-13 * smax {
        return Err(CoreError::Fit(format!("singular parabola design at a_rel = {a_rel_nm} nm")));
    }
    let coef = svd.solve(&y, 0.0).map_err(|e| CoreError::Fit(e.to_string()))?;
    let resid = &y - &x * &coef;
    let v_t = svd.v_t.as_ref().expect("computed");
    let mut cov = [[0.0; 3]; 3];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = (0..3).map(|k| v_t[(k, i)] * v_t[(k, j)] / svd.singular_values[k].powi(2)).sum();
        }
    }
    Ok(ParabolaFit {
        a_rel_nm,
        curvature: coef[0],
        linear: coef[1],
        offset: coef[2],
        unscaled_cov: cov,
        rss: resid.norm_squared(),
        dof: n - 3,
        sigma_curvature: 0.0,
        vertex: None,
        sigma_vertex: None,
    })
}

/// Uncertainty that the drift lines of the sweeps share across all
/// separations. Column c of the parabola design carries a line error
/// δa_c + δb_c·z with covariance `column_cov[c]`, and vertex j responds to
/// column c with sensitivity `sensitivity[j][c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedDriftError {
    pub column_cov: Vec<[[f64; 2]; 2]>,
    pub sensitivity: Vec<Vec<f64>>,
}

impl SharedDriftError {
    /// Variance of Σ_j g_j·v_j from the shared line errors, taking z ≈ a_rel.
    fn variance(&self, g: &[f64], a_rel: &[f64]) -> f64 {
        let mut var = 0.0;
        for (c, cov) in self.column_cov.iter().enumerate() {
            let p: f64 = g.iter().zip(&self.sensitivity).map(|(g, u)| g * u[c]).sum();
            let q: f64 = g.iter().zip(&self.sensitivity).zip(a_rel).map(|((g, u), a)| g * u[c] * a).sum();
            var += p * p * cov[0][0] + 2.0 * p * q * cov[0][1] + q * q * cov[1][1];
        }
        var
    }
}

/// Residual potential with its separation-independence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct V0Estimate {
    /// Inverse-variance weighted mean of the vertices (V).
    pub v0: f64,
    /// Student coefficient times the weighted standard deviation of the
    /// vertices (V).
    pub uncertainty: f64,
    /// Standard error of the weighted mean (V).
    pub sigma_mean: f64,
    /// Linear trend of the vertices (V/nm).
    pub slope: f64,
    pub sigma_slope: f64,
    /// |slope| < 2σ_slope.
    pub independent: bool,
    pub separations_used: usize,
}

/// Combines per-separation vertices `(a_rel_nm, vertex, sigma)`. With
/// `shared`, the standard errors of the mean and of the trend include the
/// drift-line uncertainty common to all separations.
pub fn estimate_v0(vertices: &[(f64, f64, f64)], shared: Option<&SharedDriftError>, confidence: f64) -> Result<V0Estimate> {
    let n = vertices.len();
    if n < 10 {
        return Err(CoreError::Fit(format!("residual potential needs ≥10 separations with a vertex, got {n}")));
    }
    if shared.is_some_and(|s| s.sensitivity.len() != n) {
        return Err(CoreError::Config("shared drift sensitivities do not match the vertices".into()));
    }
    let a: Vec<f64> = vertices.iter().map(|v| v.0).collect();
    let v: Vec<f64> = vertices.iter().map(|v| v.1).collect();
    let weighted = vertices.iter().all(|x| x.2 > 0.0);
    let w: Vec<f64> = if weighted { vertices.iter().map(|x| 1.0 / (x.2 * x.2)).collect() } else { vec![1.0; n] };
    let sw: f64 = w.iter().sum();
    let v0 = w.iter().zip(&v).map(|(w, v)| w * v).sum::<f64>() / sw;
    let wvar = w.iter().zip(&v).map(|(w, v)| w * (v - v0) * (v - v0)).sum::<f64>() / sw * n as f64 / (n - 1) as f64;
    let uncertainty = student_t(confidence, n - 1)? * wvar.sqrt();

    let trend = fit_line(&a, &v, weighted.then_some(w.as_slice()))?;
    let (mut var_mean, mut var_slope) = if weighted {
        (1.0 / sw, trend.sigma_slope * trend.sigma_slope)
    } else {
        (sample_variance(&v) / n as f64, trend.sigma_slope * trend.sigma_slope)
    };
    if let Some(sh) = shared {
        let g_mean: Vec<f64> = w.iter().map(|w| w / sw).collect();
        let sxx: f64 = w.iter().zip(&a).map(|(w, a)| w * (a - trend.x_mean).powi(2)).sum();
        let g_slope: Vec<f64> = w.iter().zip(&a).map(|(w, a)| w * (a - trend.x_mean) / sxx).collect();
        var_mean += sh.variance(&g_mean, &a);
        var_slope += sh.variance(&g_slope, &a);
    }
    let sigma_slope = var_slope.sqrt();
    let independent = trend.slope.abs() < 2.0 * sigma_slope
        || (sigma_slope == 0.0 && trend.slope.abs() < 1e-15 * mean(&v).abs().max(1.0));
    Ok(V0Estimate {
        v0,
        uncertainty,
        sigma_mean: var_mean.sqrt(),
        slope: trend.slope,
        sigma_slope,
        independent,
        separations_used: n,
    })
}

/// Electrostatic force curvature expressed in deflection signal, with the
/// far-window line that the drift fit removes.
#[derive(Debug, Clone)]
pub struct CurvatureModel {
    table: CurvatureTable,
    window_z_nm: Vec<f64>,
    /// nm per signal unit.
    m: f64,
}

impl CurvatureModel {
    const A_MIN_NM: f64 = 5.0;

    pub fn new(radius: f64, window_z_nm: Vec<f64>, m: f64) -> Result<Self> {
        let top = window_z_nm.iter().cloned().fold(0.0, f64::max);
        let table = CurvatureTable::new(radius, Self::A_MIN_NM * 1e-9, (top + 500.0) * 1e-9)?;
        Ok(Self { table, window_z_nm, m })
    }

    /// Uniform window samples k·step inside `window`.
    pub fn window_samples(window: (f64, f64), step: f64) -> Vec<f64> {
        let first = (window.0 / step).ceil() as i64;
        let last = (window.1 / step).floor() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    }

    fn check(&self, a_nm: f64) -> Result<f64> {
        if !(a_nm >= Self::A_MIN_NM && a_nm * 1e-9 <= self.table.a_max()) {
            return Err(CoreError::Domain(format!("separation {a_nm} nm outside the electrostatic model range")));
        }
        Ok(a_nm * 1e-9)
    }

    /// Line (intercept, slope per nm) fitted to C(z + z0) over the window:
    /// the part of the electrostatic force the drift fit absorbs.
    pub fn window_line(&self, z0: f64) -> Result<(f64, f64)> {
        let c = self
            .window_z_nm
            .iter()
            .map(|&z| Ok(self.table.eval(self.check(z + z0)?)?.0))
            .collect::<Result<Vec<f64>>>()?;
        let l = fit_line(&self.window_z_nm, &c, None)?;
        Ok((l.intercept, l.slope))
    }

    /// C(a) − L(z) in N/V² for absolute separations `a_nm` and piezo
    /// positions `z_nm`.
    pub fn excess_many(&self, a_nm: &[f64], z_nm: &[f64], z0: f64) -> Result<Vec<f64>> {
        let (i, s) = self.window_line(z0)?;
        a_nm.iter()
            .zip(z_nm)
            .map(|(&a, &z)| Ok(self.table.eval(self.check(a)?)?.0 - (i + s * z)))
            .collect()
    }

    /// C(a_rel + z0)/(k·m) in signal/V² and its derivative with respect to
    /// z0 (per nm).
    pub fn signal_curvature(&self, a_rel_nm: &[f64], z0: f64, k: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let scale = 1.0 / (k * self.m * 1e-9);
        let mut model = Vec::with_capacity(a_rel_nm.len());
        let mut deriv = Vec::with_capacity(a_rel_nm.len());
        for &a in a_rel_nm {
            let (c, dc) = self.table.eval(self.check(a + z0)?)?;
            model.push(c * scale);
            deriv.push(dc * 1e-9 * scale);
        }
        Ok((model, deriv))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicsFit {
    pub z0_nm: f64,
    /// N/m.
    pub k: f64,
    pub sigma_z0_nm: f64,
    pub sigma_k: f64,
    /// Confidence half-widths; the one for k includes the uncertainty of m.
    pub z0_uncertainty_nm: f64,
    pub k_uncertainty: f64,
    /// Straight line p + q·(a_rel − a_ref) absorbed from the drift
    /// correction (signal/V², signal/V²/nm, nm).
    pub line: (f64, f64, f64),
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
}

/// Damped Gauss–Newton (Levenberg–Marquardt) fit of the measured
/// curvatures to C(a_rel + z0)/(k·m) plus a straight line in a_rel. The
/// line takes up whatever the drift subtraction removed, both the
/// far-field electrostatic force and the random error of each drift fit.
pub fn fit_kinematics(
    model: &CurvatureModel,
    a_rel_nm: &[f64],
    curvatures: &[f64],
    m_uncertainty: f64,
    options: &CalibrationOptions,
) -> Result<KinematicsFit> {
    const NP: usize = 4;
    let n = a_rel_nm.len();
    if n < 100 || curvatures.len() != n {
        return Err(CoreError::Fit(format!("kinematic fit needs ≥100 separations, got {n}")));
    }
    let a_ref = mean(a_rel_nm);
    // params: z0, k, p, q
    let eval = |p: &[f64; NP]| -> Option<(f64, Vec<f64>, Vec<[f64; NP]>)> {
        if !(p[1] > 0.0) {
            return None;
        }
        let (mdl, dz) = model.signal_curvature(a_rel_nm, p[0], p[1]).ok()?;
        let mut chi2 = 0.0;
        let mut r = Vec::with_capacity(n);
        let mut jac = Vec::with_capacity(n);
        for i in 0..n {
            let x = a_rel_nm[i] - a_ref;
            let ri = curvatures[i] - (mdl[i] + p[2] + p[3] * x);
            chi2 += ri * ri;
            r.push(ri);
            jac.push([dz[i], -mdl[i] / p[1], 1.0, x]);
        }
        Some((chi2, r, jac))
    };
    let normal = |r: &[f64], jac: &[[f64; NP]]| {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (ri, j) in r.iter().zip(jac) {
            let j = Vector4::from_column_slice(j);
            jtj += j * j.transpose();
            jtr += j * *ri;
        }
        (jtj, jtr)
    };
    let mut p = [options.initial_z0_nm, options.initial_k, 0.0, 0.0];
    let (mut chi2, mut r, mut jac) =
        eval(&p).ok_or_else(|| CoreError::Fit("kinematic model undefined at the initial guess".into()))?;
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let (jtj, jtr) = normal(&r, &jac);
        let mut accepted = false;
        for _ in 0..60 {
            let damped = jtj + Matrix4::from_diagonal(&(jtj.diagonal() * lambda));
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            match eval(&trial) {
                Some((c2, nr, nj)) if c2 <= chi2 => {
                    let small = step[0].abs() <= 1e-10 * (1.0 + p[0].abs()) && step[1].abs() <= 1e-10 * p[1];
                    let flat = chi2 - c2 <= 1e-15 * chi2;
                    (p, chi2, r, jac) = (trial, c2, nr, nj);
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    converged = small || flat;
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !accepted {
            // no downhill step at any damping: at the minimum to round-off
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(CoreError::Fit(format!(
            "kinematic fit did not converge in {iterations} iterations (z0 = {} nm, k = {} N/m, χ² = {chi2:e})",
            p[0], p[1]
        )));
    }
    let (jtj, _) = normal(&r, &jac);
    let dof = n - NP;
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| CoreError::Fit("singular kinematic covariance".into()))?
        * (chi2 / dof as f64);
    let (sz, sk) = (cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt());
    let t = student_t(options.confidence, dof)?;
    let k = p[1];
    let k_rel_m = m_uncertainty / model.m;
    Ok(KinematicsFit {
        z0_nm: p[0],
        k,
        sigma_z0_nm: sz,
        sigma_k: sk,
        z0_uncertainty_nm: t * sz,
        k_uncertainty: k * ((t * sk / k).powi(2) + k_rel_m * k_rel_m).sqrt(),
        line: (p[2], p[3], a_ref),
        chi2,
        dof,
        iterations,
    })
}

/// Complete calibration of a measurement set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Volts.
    pub v0: f64,
    pub v0_uncertainty: f64,
    /// N/m.
    pub k: f64,
    pub k_uncertainty: f64,
    pub z0_nm: f64,
    pub z0_uncertainty_nm: f64,
    pub m: f64,
    pub m_uncertainty: f64,
    pub radius_m: f64,
    pub confidence: f64,
    pub far_window_nm: (f64, f64),
    pub sampling_step_nm: f64,
    pub smoothing_half_width: usize,
    pub contact_margin_nm: f64,
    pub calibration_range_nm: (f64, f64),
    pub v0_estimate: V0Estimate,
    pub kinematics: KinematicsFit,
    /// (a_rel nm, vertex V, σ V) for every separation with a defined vertex.
    pub v0_vs_separation: Vec<(f64, f64, f64)>,
    /// (a_rel nm, curvature, σ) in signal/V².
    pub curvature_vs_separation: Vec<(f64, f64, f64)>,
    /// Separations whose vertex was undefined.
    pub undefined_vertices: usize,
    pub refinement_passes: usize,
}

impl CalibrationResult {
    pub fn curvature_model(&self) -> Result<CurvatureModel> {
        CurvatureModel::new(
            self.radius_m,
            CurvatureModel::window_samples(self.far_window_nm, self.sampling_step_nm),
            self.m,
        )
    }
}

/// Electrostatic deflection absorbed by the drift line, from a previous
/// calibration: L(z)·(V − V₀)²/(k·m) in signal units.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Restoration {
    line: (f64, f64),
    v0: f64,
    km: f64,
}

impl Restoration {
    pub(crate) fn from_calibration(cal: &CalibrationResult, model: &CurvatureModel) -> Result<Self> {
        Ok(Self { line: model.window_line(cal.z0_nm)?, v0: cal.v0, km: cal.k * cal.m * 1e-9 })
    }
}

pub(crate) fn prepare_sweeps(
    set: &MeasurementSet,
    options: &CalibrationOptions,
    restore: Option<Restoration>,
) -> Result<Vec<ResampledSweep>> {
    set.sweeps
        .par_iter()
        .map(|s| {
            let (corrected, drift) = subtract_drift(s, options.far_window_nm)?;
            let mut out = match restore {
                None => ResampledSweep::new(&corrected, set.m, options.smoothing_half_width, None),
                Some(r) => {
                    let dv2 = (s.applied_voltage - r.v0).powi(2);
                    let f = move |z: f64| (r.line.0 + r.line.1 * z) * dv2 / r.km;
                    ResampledSweep::new(&corrected, set.m, options.smoothing_half_width, Some(&f))
                }
            };
            out.drift = Some(drift.line);
            Ok(out)
        })
        .collect()
}

pub fn calibrate(set: &MeasurementSet, options: &CalibrationOptions) -> Result<CalibrationResult> {
    set.validate()?;
    let step = set.sweeps[0].sampling_step_nm;
    let model = CurvatureModel::new(set.sphere.radius, CurvatureModel::window_samples(options.far_window_nm, step), set.m)?;
    let mut cal = calibration_pass(set, options, &model, None)?;
    for pass in 1..=options.refinement_passes {
        let restore = Restoration::from_calibration(&cal, &model)?;
        cal = calibration_pass(set, options, &model, Some(restore))?;
        cal.refinement_passes = pass;
    }
    Ok(cal)
}

fn calibration_pass(
    set: &MeasurementSet,
    options: &CalibrationOptions,
    model: &CurvatureModel,
    restore: Option<Restoration>,
) -> Result<CalibrationResult> {
    let sweeps = prepare_sweeps(set, options, restore)?;
    let common_lo = sweeps.iter().map(|s| s.a_rel_range.0).fold(f64::NEG_INFINITY, f64::max);
    let common_hi = sweeps.iter().map(|s| s.a_rel_range.1).fold(f64::INFINITY, f64::min);
    let lo = options
        .calibration_min_nm
        .unwrap_or(((common_lo + options.contact_margin_nm) / options.grid_step_nm).ceil() * options.grid_step_nm)
        .max(common_lo);
    let hi = options.calibration_max_nm.min(common_hi);
    let grid = uniform_grid(lo, hi, options.grid_step_nm);
    if grid.len() < 100 {
        return Err(CoreError::Fit(format!(
            "calibration range [{lo}, {hi}] nm holds {} separations; need ≥ 100",
            grid.len()
        )));
    }
    let values: Vec<Vec<f64>> = sweeps.par_iter().map(|s| s.s_at(&grid)).collect::<Result<_>>()?;

    let drift_cov = |s: &ResampledSweep| s.drift.map_or([[0.0; 2]; 2], |l| l.covariance());
    // (voltage, per-grid signal, drift-line covariance) columns of the
    // parabola fits
    let columns: Vec<(f64, Vec<f64>, [[f64; 2]; 2])> = if options.average_repetitions {
        set.voltages()
            .into_iter()
            .map(|v| {
                let members: Vec<(&ResampledSweep, &Vec<f64>)> =
                    sweeps.iter().zip(&values).filter(|(s, _)| s.applied_voltage == v).collect();
                let nm = members.len() as f64;
                let avg = (0..grid.len()).map(|i| members.iter().map(|m| m.1[i]).sum::<f64>() / nm).collect();
                let mut cov = [[0.0; 2]; 2];
                for (s, _) in &members {
                    let c = drift_cov(s);
                    for r in 0..2 {
                        for q in 0..2 {
                            cov[r][q] += c[r][q] / (nm * nm);
                        }
                    }
                }
                (v, avg, cov)
            })
            .collect()
    } else {
        sweeps.iter().zip(&values).map(|(s, x)| (s.applied_voltage, x.clone(), drift_cov(s))).collect()
    };
    let voltages: Vec<f64> = columns.iter().map(|c| c.0).collect();
    let raw: Vec<ParabolaFit> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            let y: Vec<f64> = columns.iter().map(|c| c.1[i]).collect();
            parabola_raw(a, &voltages, &y)
        })
        .collect::<Result<_>>()?;
    let dof: usize = raw.iter().map(|f| f.dof).sum();
    let pooled = if dof > 0 { raw.iter().map(|f| f.rss).sum::<f64>() / dof as f64 } else { 0.0 };
    let fits: Vec<ParabolaFit> = raw.into_iter().map(|f| f.with_variance(pooled)).collect();

    let with_vertex: Vec<&ParabolaFit> = fits.iter().filter(|f| f.vertex.is_some()).collect();
    let vertices: Vec<(f64, f64, f64)> = with_vertex
        .iter()
        .map(|f| (f.a_rel_nm, f.vertex.unwrap(), f.sigma_vertex.unwrap()))
        .collect();
    let undefined = fits.len() - vertices.len();
    if undefined > 0 {
        log::warn!("{undefined} separations have no significant curvature; their vertices are skipped");
    }
    // vertex response to a unit signal offset in each column: hᵀ(XᵀX)⁻¹x_c
    let sensitivity = with_vertex
        .iter()
        .map(|f| {
            let h = [f.linear / (2.0 * f.curvature * f.curvature), -1.0 / (2.0 * f.curvature), 0.0];
            voltages
                .iter()
                .map(|&v| {
                    let x = [v * v, v, 1.0];
                    (0..3).map(|k| (0..3).map(|l| h[k] * f.unscaled_cov[k][l] * x[l]).sum::<f64>()).sum()
                })
                .collect()
        })
        .collect();
    let shared = SharedDriftError { column_cov: columns.iter().map(|c| c.2).collect(), sensitivity };
    let v0_estimate = estimate_v0(&vertices, Some(&shared), options.confidence)?;
    if !v0_estimate.independent {
        log::warn!(
            "residual potential drifts with separation: slope {:.3e} ± {:.3e} V/nm",
            v0_estimate.slope,
            v0_estimate.sigma_slope
        );
    }

    let step = set.sweeps[0].sampling_step_nm;
    let curv: Vec<f64> = fits.iter().map(|f| f.curvature).collect();
    let kin = fit_kinematics(model, &grid, &curv, set.m_uncertainty, options)?;
    if !(kin.k > 0.0 && kin.z0_nm > 0.0) {
        return Err(CoreError::Fit(format!(
            "unphysical calibration: k = {} N/m, z0 = {} nm",
            kin.k, kin.z0_nm
        )));
    }
    Ok(CalibrationResult {
        v0: v0_estimate.v0,
        v0_uncertainty: v0_estimate.uncertainty,
        k: kin.k,
        k_uncertainty: kin.k_uncertainty,
        z0_nm: kin.z0_nm,
        z0_uncertainty_nm: kin.z0_uncertainty_nm,
        m: set.m,
        m_uncertainty: set.m_uncertainty,
        radius_m: set.sphere.radius,
        confidence: options.confidence,
        far_window_nm: options.far_window_nm,
        sampling_step_nm: step,
        smoothing_half_width: options.smoothing_half_width,
        contact_margin_nm: options.contact_margin_nm,
        calibration_range_nm: (lo, grid[grid.len() - 1]),
        v0_estimate,
        kinematics: kin,
        v0_vs_separation: vertices,
        curvature_vs_separation: fits.iter().map(|f| (f.a_rel_nm, f.curvature, f.sigma_curvature)).collect(),
        undefined_vertices: undefined,
        refinement_passes: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn voltages() -> Vec<f64> {
        (0..10).map(|i| -0.26 + i as f64 * 0.16 / 9.0).collect()
    }

    #[test]
    fn exact_quadratic_recovered() {
        let v = voltages();
        let (c, v0, d) = (-3.7, -0.1968, 0.012);
        let s: Vec<f64> = v.iter().map(|x| c * (x - v0) * (x - v0) + d).collect();
        let f = fit_parabola_per_separation(100.0, &v, &s).unwrap();
        assert!((f.curvature - c).abs() < 1e-10);
        assert!((f.vertex.unwrap() - v0).abs() < 1e-12);
        assert!((f.offset - (c * v0 * v0 + d)).abs() < 1e-11);
    }

    #[test]
    fn zero_curvature_has_no_vertex() {
        let v = voltages();
        let s: Vec<f64> = v.iter().enumerate().map(|(i, x)| 0.3 * x + if i % 2 == 0 { 1e-4 } else { -1e-4 }).collect();
        let f = fit_parabola_per_separation(100.0, &v, &s).unwrap();
        assert!(f.vertex.is_none());
    }

    #[test]
    fn duplicate_voltages_are_singular() {
        let v = [0.1, 0.1, 0.2, 0.2];
        assert!(matches!(fit_parabola_per_separation(1.0, &v, &[1.0, 1.0, 2.0, 2.0]), Err(CoreError::Fit(_))));
    }

    #[test]
    fn constant_vertices_give_exact_mean() {
        let vs: Vec<(f64, f64, f64)> = (0..50).map(|i| (50.0 + i as f64, 0.065, 1e-3)).collect();
        let e = estimate_v0(&vs, None, 0.95).unwrap();
        assert!((e.v0 - 0.065).abs() < 1e-15);
        assert!(e.slope.abs() < 1e-15 && e.independent);
    }

    #[test]
    fn tilted_vertices_fail_independence() {
        let vs: Vec<(f64, f64, f64)> =
            (0..500).map(|i| (50.0 + i as f64, -0.1968 + 0.5e-3 * i as f64 / 100.0, 1e-4)).collect();
        assert!(!estimate_v0(&vs, None, 0.95).unwrap().independent);
    }

    #[test]
    fn noiseless_kinematics_recovered() {
        let window = CurvatureModel::window_samples((1700.0, 2000.0), 0.2);
        let model = CurvatureModel::new(101.23e-6, window, 104.4).unwrap();
        let grid = uniform_grid(40.0, 1000.0, 1.0);
        let (c, _) = model.signal_curvature(&grid, 29.5, 0.0139).unwrap();
        // the drift fit removes the far-window line of the force
        let (li, ls) = model.window_line(29.5).unwrap();
        let km = 0.0139 * 104.4e-9;
        let y: Vec<f64> = c.iter().zip(&grid).map(|(c, a)| c - (li + ls * a) / km).collect();
        let fit = fit_kinematics(&model, &grid, &y, 0.0, &CalibrationOptions::default()).unwrap();
        assert!((fit.z0_nm - 29.5).abs() < 1e-6, "{}", fit.z0_nm);
        assert!((fit.k / 0.0139 - 1.0).abs() < 1e-9, "{}", fit.k);
    }

    #[test]
    fn z0_derivative_matches_finite_difference() {
        let window = CurvatureModel::window_samples((1700.0, 2000.0), 0.2);
        let model = CurvatureModel::new(101.23e-6, window, 104.4).unwrap();
        let grid = [40.0, 120.0, 700.0];
        let (_, d) = model.signal_curvature(&grid, 29.5, 0.0139).unwrap();
        let (p, _) = model.signal_curvature(&grid, 29.5 + 1e-4, 0.0139).unwrap();
        let (m, _) = model.signal_curvature(&grid, 29.5 - 1e-4, 0.0139).unwrap();
        for i in 0..3 {
            let fd = (p[i] - m[i]) / 2e-4;
            assert!((d[i] / fd - 1.0).abs() < 1e-5, "{} vs {fd}", d[i]);
        }
    }
}
