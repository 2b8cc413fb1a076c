//! Kramers–Kronig transform of Im ε(ω) onto the imaginary axis:
//!
//! ε(iξ) = 1 + (2/π) ∫₀^∞ ω Im ε(ω) / (ω² + ξ²) dω
//!
//! split into an analytic Drude tail below the tabulated band, adaptive
//! quadrature over the band and an analytic Lorentz tail above it.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{DrudeParams, Oscillator, OscillatorSet, TabulatedKk};
use crate::error::{CoreError, Result};
use crate::quadrature::{integrate, QuadOptions};

const BAND_REL_TOL: f64 = 1e-8;

/// ε(iξ) of a tabulated spectrum. ξ = 0 is accepted only when the carrier
/// tail is excluded (otherwise the transform diverges).
pub fn kk_transform(model: &TabulatedKk, xi: f64) -> Result<f64> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(CoreError::Domain(format!("kk_transform needs xi ≥ 0, got {xi}")));
    }
    if xi == 0.0 && model.carriers_included {
        return Err(CoreError::Domain("carrier tail diverges at xi = 0".into()));
    }
    let (lo, hi) = model.spectrum.band();
    let low = if model.carriers_included {
        drude_tail(&model.low_extrapolation, lo, xi)
    } else {
        0.0
    };
    let band = band_integral(model, xi)?;
    let high = oscillator_tail(&model.high_extrapolation, hi, xi);
    let eps = 1.0 + (2.0 / PI) * (low + band + high);
    if !eps.is_finite() {
        return Err(CoreError::Numerical {
            lo: 0.0,
            hi: f64::INFINITY,
            reason: format!("non-finite KK result at xi = {xi}"),
        });
    }
    Ok(eps)
}

/// (lower, upper) ε(iξ) from the two high-frequency envelopes.
pub fn extrapolation_band(model: &TabulatedKk, xi: f64) -> Result<(f64, f64)> {
    let upper_env = model.high_extrapolation_upper.as_ref().ok_or_else(|| {
        CoreError::Config("extrapolation band needs an upper high-frequency envelope".into())
    })?;
    let lower = kk_transform(model, xi)?;
    let mut upper_model = model.clone();
    upper_model.high_extrapolation = upper_env.clone();
    let upper = kk_transform(&upper_model, xi)?;
    if lower > upper {
        return Err(CoreError::Config(format!(
            "extrapolation envelopes cross at xi = {xi} eV ({lower} > {upper})"
        )));
    }
    Ok((lower, upper))
}

fn band_integral(model: &TabulatedKk, xi: f64) -> Result<f64> {
    let spectrum = &model.spectrum;
    let xs = spectrum.frequencies();
    let ys = spectrum.im_eps();
    if ys.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let xi2 = xi * xi;
    // Each table segment is its own initial panel so the interpolation kinks
    // never sit inside a Kronrod rule.
    let mut hint = 0usize;
    let integrand = |w: f64| {
        while hint + 2 < xs.len() && w > xs[hint + 1] {
            hint += 1;
        }
        while hint > 0 && w < xs[hint] {
            hint -= 1;
        }
        let t = (w - xs[hint]) / (xs[hint + 1] - xs[hint]);
        let im = ys[hint] + t * (ys[hint + 1] - ys[hint]);
        w * im / (w * w + xi2)
    };
    let opts = QuadOptions {
        rel_tol: BAND_REL_TOL,
        abs_tol: 1e-300,
        max_intervals: 4 * xs.len() + 2000,
    };
    Ok(integrate(integrand, xs, opts)?.value)
}

/// ∫₀^Ω ω Im ε_D(ω)/(ω²+ξ²) dω = ω_p²γ ∫₀^Ω dω / ((ω²+γ²)(ω²+ξ²)).
pub(crate) fn drude_tail(d: &DrudeParams, omega_min: f64, xi: f64) -> f64 {
    let g = |x: f64| (omega_min / x).atan() / x;
    let gamma = d.gamma;
    let wp2 = d.omega_p * d.omega_p;
    let diff = xi - gamma;
    let core = if diff.abs() > 1e-4 * gamma {
        (g(gamma) - g(xi)) / ((xi - gamma) * (xi + gamma))
    } else {
        // −g'(x)/(2x) at the midpoint
        let x = 0.5 * (xi + gamma);
        let dg = -omega_min / (x * (x * x + omega_min * omega_min)) - (omega_min / x).atan() / (x * x);
        -dg / (2.0 * x)
    };
    wp2 * gamma * core
}

/// ∫_Ω^∞ ω Im ε_osc(ω)/(ω²+ξ²) dω summed over the oscillators.
pub(crate) fn oscillator_tail(set: &OscillatorSet, omega_min: f64, xi: f64) -> f64 {
    set.oscillators()
        .iter()
        .map(|o| single_oscillator_tail(o, omega_min, xi))
        .sum()
}

fn single_oscillator_tail(o: &Oscillator, omega_min: f64, xi: f64) -> f64 {
    let w2 = o.resonance * o.resonance;
    if o.strength == 0.0 {
        return 0.0;
    }
    if o.width < 1e-7 * o.resonance {
        // Line of weight (π/2) f ω₀ at ω₀.
        return if o.resonance > omega_min {
            FRAC_PI_2 * o.strength * w2 * o.resonance / (w2 + xi * xi)
        } else {
            0.0
        };
    }
    let mut g = o.width;
    if (g - 2.0 * o.resonance).abs() < 1e-7 * o.resonance {
        // critically damped: nudge off the double pole
        g *= 1.0 + 1e-6;
    }
    // (ω₀² − u)² + γ² u = (u − u₁)(u − u₂)
    let disc = Complex64::new(g.powi(4) / 4.0 - g * g * w2, 0.0).sqrt();
    let centre = Complex64::new(w2 - g * g / 2.0, 0.0);
    let mut poles = vec![centre + disc, centre - disc];
    let numerator_is_u = xi > 0.0;
    if numerator_is_u {
        poles.push(Complex64::new(-xi * xi, 0.0));
    }
    let prefactor = o.strength * w2 * g;
    prefactor * rational_tail(&poles, numerator_is_u, omega_min)
}

/// ∫_Ω^∞ N(ω²) / Π (ω² − u_i) dω with N(u) = u or 1, via partial fractions
/// over simple poles u_i off the positive real axis.
fn rational_tail(poles: &[Complex64], numerator_is_u: bool, omega_min: f64) -> f64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (i, &ui) in poles.iter().enumerate() {
        let mut coeff = if numerator_is_u { ui } else { Complex64::new(1.0, 0.0) };
        for (j, &uj) in poles.iter().enumerate() {
            if i != j {
                coeff /= ui - uj;
            }
        }
        let s = (-ui).sqrt();
        let piece = if omega_min > 0.0 {
            (s / omega_min).atan() / s
        } else {
            Complex64::new(FRAC_PI_2, 0.0) / s
        };
        total += coeff * piece;
    }
    total.re
}
