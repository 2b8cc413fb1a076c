//! Small statistics helpers shared by the calibration and error stages.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{CoreError, Result};

/// Two-sided Student coefficient t such that P(|T| ≤ t) = `confidence`.
pub fn student_t(confidence: f64, dof: usize) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) || dof == 0 {
        return Err(CoreError::Config(format!(
            "Student coefficient needs confidence in (0,1) and dof ≥ 1 (got {confidence}, {dof})"
        )));
    }
    let dist = StudentsT::new(0.0, 1.0, dof as f64).map_err(|e| CoreError::Config(e.to_string()))?;
    Ok(dist.inverse_cdf(0.5 + 0.5 * confidence))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Least-squares line y = intercept + slope·x with optional weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub sigma_intercept: f64,
    pub sigma_slope: f64,
    /// Σ w r².
    pub chi2: f64,
    /// Mean of x, useful for evaluating near the centroid.
    pub x_mean: f64,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// Covariance of (intercept, slope).
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let vs = self.sigma_slope * self.sigma_slope;
        let c = -self.x_mean * vs;
        [[self.sigma_intercept * self.sigma_intercept, c], [c, vs]]
    }
}

/// With `weights = None` the residual scatter sets the parameter errors;
/// with weights 1/σ² the errors follow from the weights alone.
pub fn fit_line(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(CoreError::Fit("line fit needs ≥2 aligned points".into()));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(w).sum();
    let xm = (0..n).map(|i| w(i) * xs[i]).sum::<f64>() / sw;
    let ym = (0..n).map(|i| w(i) * ys[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w(i) * (xs[i] - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(CoreError::Fit("line fit abscissae are degenerate".into()));
    }
    let sxy: f64 = (0..n).map(|i| w(i) * (xs[i] - xm) * (ys[i] - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2: f64 = (0..n).map(|i| w(i) * (ys[i] - intercept - slope * xs[i]).powi(2)).sum();
    let scale = if weights.is_some() {
        1.0
    } else if n > 2 {
        chi2 / (n - 2) as f64
    } else {
        0.0
    };
    let var_slope = scale / sxx;
    let var_intercept = scale * (1.0 / sw + xm * xm / sxx);
    Ok(LineFit {
        intercept,
        slope,
        sigma_intercept: var_intercept.sqrt(),
        sigma_slope: var_slope.sqrt(),
        chi2,
        x_mean: xm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn student_values() {
        assert!((student_t(0.95, 99).unwrap() - 1.984_216_951_6).abs() < 1e-8);
        assert!((student_t(0.95, 1).unwrap() - 12.706_204_736).abs() < 1e-6);
        assert!(student_t(1.0, 5).is_err());
    }

    #[test]
    fn exact_line_recovered() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = fit_line(&xs, &ys, None).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-13);
        assert!(f.sigma_slope < 1e-12);
    }

    #[test]
    fn line_covariance_matches_monte_carlo_identity() {
        // intercept error at the centroid is uncorrelated with the slope
        let xs: Vec<f64> = (0..20).map(|i| 10.0 + i as f64).collect();
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x + if i % 3 == 0 { 0.1 } else { -0.05 }).collect();
        let f = fit_line(&xs, &ys, None).unwrap();
        let c = f.covariance();
        let var_at_mean = c[0][0] + 2.0 * f.x_mean * c[0][1] + f.x_mean * f.x_mean * c[1][1];
        let n = xs.len() as f64;
        let s2 = f.chi2 / (n - 2.0);
        assert!((var_at_mean - s2 / n).abs() < 1e-15);
    }

    #[test]
    fn variance_of_known_sample() {
        assert_eq!(sample_variance(&[1.0, 2.0, 3.0, 4.0]), 5.0 / 3.0);
        assert_eq!(sample_variance(&[3.0]), 0.0);
    }
}
