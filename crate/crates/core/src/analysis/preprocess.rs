//! Drift removal and resampling of individual sweeps.

use super::stats::{fit_line, LineFit};
use super::RawSweep;
use crate::error::{CoreError, Result};

const MIN_WINDOW_SAMPLES: usize = 50;

/// Straight line fitted to the far-separation part of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftFit {
    pub line: LineFit,
    pub samples: usize,
    /// z_piezo of the window samples, ascending.
    pub window_z_nm: Vec<f64>,
}

/// Fits a line to the samples with z_piezo inside `window` (nm) and removes
/// it from the whole sweep.
pub fn subtract_drift(sweep: &RawSweep, window: (f64, f64)) -> Result<(RawSweep, DriftFit)> {
    let (lo, hi) = window;
    let (z, s) = sweep.ascending();
    let idx: Vec<usize> = (0..z.len()).filter(|&i| z[i] >= lo && z[i] <= hi).collect();
    if idx.len() < MIN_WINDOW_SAMPLES {
        return Err(CoreError::Config(format!(
            "drift window [{lo}, {hi}] nm holds {} samples of sweep V = {} rep {} (need ≥ {MIN_WINDOW_SAMPLES})",
            idx.len(),
            sweep.applied_voltage,
            sweep.repetition
        )));
    }
    let wz: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
    let ws: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
    let line = fit_line(&wz, &ws, None)?;
    let mut out = sweep.clone();
    for (zi, si) in out.z_piezo_nm.iter().zip(out.s_def.iter_mut()) {
        *si -= line.eval(*zi);
    }
    Ok((out, DriftFit { line, samples: idx.len(), window_z_nm: wz }))
}

/// Relative separation a_rel = z + m·S̃ for ascending z, where S̃ is a
/// centred local quadratic fit over ±`half_width` samples (narrowed at the
/// ends). The result is made nondecreasing so it can serve as an
/// interpolation abscissa.
pub fn relative_separation(z_nm: &[f64], s_def: &[f64], m: f64, half_width: usize) -> Vec<f64> {
    let n = z_nm.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let h = half_width.min(i).min(n - 1 - i);
        let smooth = if h == 0 {
            s_def[i]
        } else {
            // Savitzky–Golay quadratic, centre value
            let hf = h as f64;
            let norm = (2.0 * hf - 1.0) * (2.0 * hf + 1.0) * (2.0 * hf + 3.0);
            let base = 3.0 * hf * hf + 3.0 * hf - 1.0;
            let mut acc = 0.0;
            for j in 0..=2 * h {
                let kf = j as f64 - hf;
                acc += 3.0 * (base - 5.0 * kf * kf) / norm * s_def[i + j - h];
            }
            acc
        };
        out.push(z_nm[i] + m * smooth);
    }
    for i in 1..n {
        if out[i] < out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    out
}

/// Linear interpolation of (xs, ys) onto `grid`. `xs` must be nondecreasing;
/// grid points outside [xs₀, xs_last] are a range error.
pub fn resample(xs: &[f64], ys: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(CoreError::Config("resampling needs ≥2 aligned samples".into()));
    }
    let (lo, hi) = (xs[0], xs[n - 1]);
    grid.iter()
        .map(|&t| {
            if !(t >= lo && t <= hi) {
                return Err(CoreError::Range(format!("resampling point {t} outside data range [{lo}, {hi}]")));
            }
            if t == hi {
                return Ok(ys[n - 1]);
            }
            let i = xs.partition_point(|&x| x <= t) - 1;
            let f = (t - xs[i]) / (xs[i + 1] - xs[i]);
            Ok(ys[i] + f * (ys[i + 1] - ys[i]))
        })
        .collect()
}

/// Uniform grid lo, lo + step, … up to hi (inclusive within round-off).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// A drift-corrected sweep expressed on a relative-separation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledSweep {
    pub applied_voltage: f64,
    pub repetition: usize,
    /// Covered range of a_rel in the source sweep (nm).
    pub a_rel_range: (f64, f64),
    /// Drift line that was removed, if known.
    pub drift: Option<LineFit>,
    /// The source sweep ended in a jump to contact.
    pub jumped: bool,
    a_rel: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
}

impl ResampledSweep {
    /// `restore`, when given, maps z_piezo to a deflection that the drift
    /// fit removed but that is physical; it enters a_rel only.
    pub fn new(sweep: &RawSweep, m: f64, half_width: usize, restore: Option<&dyn Fn(f64) -> f64>) -> Self {
        let (z, s) = sweep.ascending();
        let a_rel = match restore {
            None => relative_separation(&z, &s, m, half_width),
            Some(r) => {
                let full: Vec<f64> = z.iter().zip(&s).map(|(&z, &s)| s + r(z)).collect();
                relative_separation(&z, &full, m, half_width)
            }
        };
        let range = (a_rel[0], a_rel[a_rel.len() - 1]);
        Self { applied_voltage: sweep.applied_voltage, repetition: sweep.repetition, a_rel_range: range, drift: None, jumped: sweep.jump_to_contact_nm.is_some(), a_rel, z, s }
    }

    pub fn covers(&self, a_rel: f64) -> bool {
        a_rel >= self.a_rel_range.0 && a_rel <= self.a_rel_range.1
    }

    /// Deflection at the grid points.
    pub fn s_at(&self, grid: &[f64]) -> Result<Vec<f64>> {
        resample(&self.a_rel, &self.s, grid)
    }

    /// Piezo position at the grid points.
    pub fn z_at(&self, grid: &[f64]) -> Result<Vec<f64>> {
        resample(&self.a_rel, &self.z, grid)
    }
}
