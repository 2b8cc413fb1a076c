//! Casimir force from calibrated sweeps, and its error budget.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibration::{prepare_sweeps, CalibrationOptions, CalibrationResult, Restoration};
use super::stats::{mean, sample_variance, student_t};
use super::MeasurementSet;
use crate::curve::ForceCurve;
use crate::error::{CoreError, Result};

/// Casimir force of one sweep on the absolute-separation grid; NaN where
/// the sweep does not reach.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub applied_voltage: f64,
    pub repetition: usize,
    pub force_pn: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CasimirCurves {
    pub a_nm: Vec<f64>,
    pub sweeps: Vec<SweepCurve>,
    /// Arithmetic mean over the sweeps covering each separation.
    pub mean: ForceCurve,
    /// Sweeps contributing at each separation.
    pub counts: Vec<usize>,
    /// Sweeps that do not cover the full grid.
    pub incomplete_sweeps: usize,
}

/// F = k·m·S − [C(a) − L(z)]·(V − V₀)² on the absolute grid `a_grid_nm`.
pub fn extract_casimir(set: &MeasurementSet, cal: &CalibrationResult, a_grid_nm: &[f64]) -> Result<CasimirCurves> {
    if a_grid_nm.is_empty() {
        return Err(CoreError::Config("empty extraction grid".into()));
    }
    let options = CalibrationOptions {
        far_window_nm: cal.far_window_nm,
        smoothing_half_width: cal.smoothing_half_width,
        ..Default::default()
    };
    let model = cal.curvature_model()?;
    let sweeps = prepare_sweeps(set, &options, Some(Restoration::from_calibration(cal, &model)?))?;
    let km = cal.k * cal.m * 1e-9;
    let curves: Vec<SweepCurve> = sweeps
        .par_iter()
        .map(|s| {
            // samples close to a jump-to-contact are left out like in the calibration
            let margin = if s.jumped { cal.contact_margin_nm } else { 0.0 };
            let idx: Vec<usize> = (0..a_grid_nm.len())
                .filter(|&i| {
                    let a = a_grid_nm[i] - cal.z0_nm;
                    s.covers(a) && a >= s.a_rel_range.0 + margin
                })
                .collect();
            let a_rel: Vec<f64> = idx.iter().map(|&i| a_grid_nm[i] - cal.z0_nm).collect();
            let mut force = vec![f64::NAN; a_grid_nm.len()];
            if !idx.is_empty() {
                let sig = s.s_at(&a_rel)?;
                let z = s.z_at(&a_rel)?;
                let a_abs: Vec<f64> = idx.iter().map(|&i| a_grid_nm[i]).collect();
                let excess = model.excess_many(&a_abs, &z, cal.z0_nm)?;
                let dv = s.applied_voltage - cal.v0;
                for (j, &i) in idx.iter().enumerate() {
                    force[i] = (km * sig[j] - excess[j] * dv * dv) * 1e12;
                }
            }
            Ok(SweepCurve { applied_voltage: s.applied_voltage, repetition: s.repetition, force_pn: force })
        })
        .collect::<Result<_>>()?;
    let incomplete = curves.iter().filter(|c| c.force_pn.iter().any(|f| f.is_nan())).count();
    if incomplete > 0 {
        log::warn!("{incomplete} of {} sweeps do not cover the full separation grid", curves.len());
    }
    let mut counts = Vec::with_capacity(a_grid_nm.len());
    let mut mean_force = Vec::with_capacity(a_grid_nm.len());
    for i in 0..a_grid_nm.len() {
        let vals: Vec<f64> = curves.iter().map(|c| c.force_pn[i]).filter(|f| !f.is_nan()).collect();
        counts.push(vals.len());
        mean_force.push(if vals.is_empty() { f64::NAN } else { mean(&vals) });
    }
    if counts.contains(&0) {
        log::warn!("some separations are not covered by any sweep");
    }
    Ok(CasimirCurves {
        a_nm: a_grid_nm.to_vec(),
        sweeps: curves,
        mean: ForceCurve::new(a_grid_nm.to_vec(), mean_force)?,
        counts,
        incomplete_sweeps: incomplete,
    })
}

/// How systematic and random errors at equal confidence are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CombinationRule {
    #[default]
    RootSumSquare,
    LinearSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    /// (a nm, systematic error pN) anchors, ascending in a.
    pub systematic_anchors: Vec<(f64, f64)>,
    pub confidence: f64,
    pub rule: CombinationRule,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            systematic_anchors: vec![(60.0, 2.1), (100.0, 1.5), (200.0, 1.1)],
            confidence: 0.95,
            rule: CombinationRule::RootSumSquare,
        }
    }
}

impl ErrorModel {
    pub fn validate(&self) -> Result<()> {
        let a = &self.systematic_anchors;
        if a.is_empty() || a.iter().any(|(x, e)| !(*x > 0.0 && *e >= 0.0)) {
            return Err(CoreError::Config("systematic anchors need a > 0 and errors ≥ 0".into()));
        }
        if a.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 <= w[0].1)) {
            return Err(CoreError::Config("systematic anchors must ascend in a with nonincreasing errors".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(CoreError::Config("confidence must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Linear in ln a between anchors, constant outside them.
    pub fn systematic(&self, a_nm: f64) -> f64 {
        let a = &self.systematic_anchors;
        if a_nm <= a[0].0 {
            return a[0].1;
        }
        if a_nm >= a[a.len() - 1].0 {
            return a[a.len() - 1].1;
        }
        let i = a.partition_point(|p| p.0 <= a_nm) - 1;
        let (x0, y0) = a[i];
        let (x1, y1) = a[i + 1];
        let t = (a_nm / x0).ln() / (x1 / x0).ln();
        y0 + t * (y1 - y0)
    }

    pub fn combine(&self, systematic: f64, random: f64) -> f64 {
        match self.rule {
            CombinationRule::RootSumSquare => systematic.hypot(random),
            CombinationRule::LinearSum => systematic + random,
        }
    }

    pub fn total(&self, a_nm: f64, random: f64) -> f64 {
        self.combine(self.systematic(a_nm), random)
    }
}

/// Mean curve with systematic, random and total error columns. The random
/// error is the Student coefficient for N − 1 degrees of freedom times the
/// standard deviation of the mean, pooled over separations.
pub fn error_budget(curves: &CasimirCurves, model: &ErrorModel) -> Result<ForceCurve> {
    model.validate()?;
    let n = curves.sweeps.len();
    if n < 2 {
        return Err(CoreError::Config("error budget needs at least two sweeps".into()));
    }
    let mut var_of_mean = Vec::new();
    for i in 0..curves.a_nm.len() {
        let vals: Vec<f64> = curves.sweeps.iter().map(|c| c.force_pn[i]).filter(|f| !f.is_nan()).collect();
        if vals.len() >= 2 {
            var_of_mean.push(sample_variance(&vals) / vals.len() as f64);
        }
    }
    if var_of_mean.is_empty() {
        return Err(CoreError::Config("no separation is covered by two or more sweeps".into()));
    }
    let random = student_t(model.confidence, n - 1)? * mean(&var_of_mean).sqrt();
    let mut out = curves.mean.clone();
    let sys: Vec<f64> = out.a_nm.iter().map(|&a| model.systematic(a)).collect();
    out.err_tot_pn = Some(sys.iter().map(|&s| model.combine(s, random)).collect());
    out.err_sys_pn = Some(sys);
    out.err_rand_pn = Some(random);
    Ok(out)
}

/// Relative decrease (|F_a| − |F_b|)/|F_a| with first-order errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a_nm: Vec<f64>,
    pub relative: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

pub fn compare_curves(curve_a: &ForceCurve, curve_b: &ForceCurve) -> Result<Comparison> {
    curve_a.validate()?;
    curve_b.validate()?;
    let aligned = curve_a.len() == curve_b.len()
        && curve_a.a_nm.iter().zip(&curve_b.a_nm).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0));
    if !aligned {
        return Err(CoreError::Config("curves are not on a common separation grid".into()));
    }
    let relative = curve_a
        .force_pn
        .iter()
        .zip(&curve_b.force_pn)
        .map(|(fa, fb)| (fa.abs() - fb.abs()) / fa.abs())
        .collect();
    let sigma = match (&curve_a.err_tot_pn, &curve_b.err_tot_pn) {
        (Some(ea), Some(eb)) => Some(
            (0..curve_a.len())
                .map(|i| {
                    let (fa, fb) = (curve_a.force_pn[i].abs(), curve_b.force_pn[i].abs());
                    (fb / fa) * ((ea[i] / fa).powi(2) + (eb[i] / fb).powi(2)).sqrt()
                })
                .collect(),
        ),
        _ => None,
    };
    Ok(Comparison { a_nm: curve_a.a_nm.clone(), relative, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curves_from(values: Vec<Vec<f64>>) -> CasimirCurves {
        let a: Vec<f64> = (0..values[0].len()).map(|i| 60.0 + i as f64).collect();
        let sweeps: Vec<SweepCurve> = values
            .iter()
            .enumerate()
            .map(|(r, v)| SweepCurve { applied_voltage: 0.0, repetition: r, force_pn: v.clone() })
            .collect();
        let m: Vec<f64> = (0..a.len()).map(|i| mean(&values.iter().map(|v| v[i]).collect::<Vec<_>>())).collect();
        CasimirCurves {
            counts: vec![values.len(); a.len()],
            mean: ForceCurve::new(a.clone(), m).unwrap(),
            a_nm: a,
            sweeps,
            incomplete_sweeps: 0,
        }
    }

    #[test]
    fn systematic_profile_hits_anchors_and_plateaus() {
        let m = ErrorModel::default();
        assert_eq!(m.systematic(60.0), 2.1);
        assert_eq!(m.systematic(100.0), 1.5);
        assert_eq!(m.systematic(200.0), 1.1);
        assert_eq!(m.systematic(300.0), 1.1);
        assert_eq!(m.systematic(40.0), 2.1);
        let mut prev = f64::INFINITY;
        for a in 60..=300 {
            let s = m.systematic(a as f64);
            assert!(s <= prev);
            prev = s;
        }
    }

    #[test]
    fn zero_noise_total_equals_systematic() {
        let c = curves_from(vec![vec![-100.0; 241]; 10]);
        let out = error_budget(&c, &ErrorModel::default()).unwrap();
        assert_eq!(out.err_rand_pn, Some(0.0));
        assert_eq!(out.err_tot_pn, out.err_sys_pn);
    }

    #[test]
    fn total_dominates_components() {
        let vals: Vec<Vec<f64>> = (0..20).map(|r| vec![-100.0 + (r % 5) as f64; 50]).collect();
        let out = error_budget(&curves_from(vals), &ErrorModel::default()).unwrap();
        let rand = out.err_rand_pn.unwrap();
        for (t, s) in out.err_tot_pn.unwrap().iter().zip(out.err_sys_pn.unwrap()) {
            assert!(*t >= s && *t >= rand);
        }
    }

    #[test]
    fn comparison_of_scaled_curves() {
        let a: Vec<f64> = (60..=300).map(|x| x as f64).collect();
        let f: Vec<f64> = a.iter().map(|x| -1e6 / (x * x * x)).collect();
        let ca = ForceCurve::new(a.clone(), f.clone()).unwrap();
        let cb = ForceCurve::new(a.clone(), f.iter().map(|x| 0.65 * x).collect()).unwrap();
        let same = compare_curves(&ca, &ca).unwrap();
        assert!(same.relative.iter().all(|r| *r == 0.0));
        let c = compare_curves(&ca, &cb).unwrap();
        assert!(c.relative.iter().all(|r| (r - 0.35).abs() < 1e-14));
        let shifted = ForceCurve::new(a.iter().map(|x| x + 0.5).collect(), f).unwrap();
        assert!(compare_curves(&ca, &shifted).is_err());
    }

    #[test]
    fn linear_rule_is_selectable() {
        let m = ErrorModel { rule: CombinationRule::LinearSum, ..Default::default() };
        assert_eq!(m.total(300.0, 0.5), 1.6);
    }
}
