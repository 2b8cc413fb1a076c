//! Geometrical averaging of a force law over the height distributions of two
//! rough surfaces.

use crate::error::{CoreError, Result};

/// Discrete distribution of surface heights (nm, positive toward the gap).
#[derive(Debug, Clone, PartialEq)]
pub struct HeightDistribution {
    heights: Vec<f64>,
    weights: Vec<f64>,
    variance: f64,
}

/// Shifts applied when a histogram was normalised on load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecenterReport {
    /// Mean height that was subtracted (nm).
    pub mean_shift_nm: f64,
    /// Original total weight that was divided out.
    pub weight_total: f64,
}

impl HeightDistribution {
    /// Strict constructor: weights must already sum to one and the mean must
    /// already be zero.
    pub fn new(heights: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if heights.len() != weights.len() || heights.is_empty() {
            return Err(CoreError::Config("height distribution needs aligned, non-empty columns".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || heights.iter().any(|h| !h.is_finite()) {
            return Err(CoreError::Config("height distribution has invalid entries".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::Config(format!("weights sum to {total}, expected 1")));
        }
        let mean: f64 = heights.iter().zip(&weights).map(|(h, w)| h * w).sum();
        if mean.abs() > 1e-9 {
            return Err(CoreError::Config(format!("height distribution mean is {mean} nm, expected 0")));
        }
        let variance = heights.iter().zip(&weights).map(|(h, w)| w * h * h).sum();
        Ok(Self { heights, weights, variance })
    }

    /// Renormalises and re-centres an arbitrary histogram.
    pub fn from_histogram(heights: Vec<f64>, weights: Vec<f64>) -> Result<(Self, RecenterReport)> {
        if heights.len() != weights.len() || heights.is_empty() {
            return Err(CoreError::Config("height histogram needs aligned, non-empty columns".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(CoreError::Config("histogram weights must be non-negative with positive total".into()));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mean: f64 = heights.iter().zip(&weights).map(|(h, w)| h * w).sum();
        let heights: Vec<f64> = heights.iter().map(|h| h - mean).collect();
        // one more pass absorbs the rounding left by the first
        let residual: f64 = heights.iter().zip(&weights).map(|(h, w)| h * w).sum();
        let heights = heights.iter().map(|h| h - residual).collect();
        let wsum: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / wsum).collect();
        let dist = Self::new(heights, weights)?;
        Ok((dist, RecenterReport { mean_shift_nm: mean + residual, weight_total: total }))
    }

    /// A perfectly flat surface.
    pub fn delta() -> Self {
        Self { heights: vec![0.0], weights: vec![1.0], variance: 0.0 }
    }

    /// Gaussian of standard deviation `sigma_nm` on bins of `bin_nm`,
    /// truncated at ±`cutoff` σ and renormalised.
    pub fn gaussian(sigma_nm: f64, bin_nm: f64, cutoff: f64) -> Result<Self> {
        if !(sigma_nm > 0.0 && bin_nm > 0.0 && cutoff > 0.0) {
            return Err(CoreError::Config("gaussian surrogate needs positive sigma, bin and cutoff".into()));
        }
        let kmax = (cutoff * sigma_nm / bin_nm).floor() as i64;
        let heights: Vec<f64> = (-kmax..=kmax).map(|k| k as f64 * bin_nm).collect();
        let weights: Vec<f64> = heights
            .iter()
            .map(|h| (-h * h / (2.0 * sigma_nm * sigma_nm)).exp())
            .collect();
        Ok(Self::from_histogram(heights, weights)?.0)
    }

    /// Default surrogate: 0.5 nm bins truncated at ±4σ.
    pub fn gaussian_default(sigma_nm: f64) -> Result<Self> {
        Self::gaussian(sigma_nm, 0.5, 4.0)
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ w h² in nm².
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Combined offsets h_i + h_j (nm) with weights, sorted so the result does
/// not depend on the order of the two distributions.
fn pair_offsets(d1: &HeightDistribution, d2: &HeightDistribution) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(d1.heights.len() * d2.heights.len());
    for (h1, w1) in d1.heights.iter().zip(&d1.weights) {
        for (h2, w2) in d2.heights.iter().zip(&d2.weights) {
            pairs.push((h1 + h2, w1 * w2));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    // merge identical offsets so the force is evaluated once per offset
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (h, w) in pairs {
        match merged.last_mut() {
            Some(last) if last.0 == h => last.1 += w,
            _ => merged.push((h, w)),
        }
    }
    merged
}

/// Σ_i Σ_j w_i v_j F(a − h_i − h_j), with `a` in meters and heights in nm.
pub fn averaged_force<F>(force_fn: F, a: f64, dist_sphere: &HeightDistribution, dist_plate: &HeightDistribution) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let a_nm = a * 1e9;
    let need = dist_sphere.max_height() + dist_plate.max_height();
    if a_nm - need <= 0.0 {
        let i = dist_sphere.heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let j = dist_plate.heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return Err(CoreError::Domain(format!(
            "local separation {:.3} nm ≤ 0 for heights (sphere {i} nm, plate {j} nm) at a = {a_nm} nm",
            a_nm - need
        )));
    }
    let mut total = 0.0;
    for (offset, w) in pair_offsets(dist_sphere, dist_plate) {
        total += w * force_fn((a_nm - offset) * 1e-9)?;
    }
    Ok(total)
}

/// averaged_force / force_fn(a).
pub fn correction_factor<F>(force_fn: F, a: f64, dist_sphere: &HeightDistribution, dist_plate: &HeightDistribution) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let flat = force_fn(a)?;
    Ok(averaged_force(&force_fn, a, dist_sphere, dist_plate)? / flat)
}
