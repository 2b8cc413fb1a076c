//! Exact electrostatic force between a sphere and a plate held at a
//! potential difference ΔV:
//!
//! F = 2πε₀ ΔV² Σ_{n≥1} (coth α − n coth nα) / sinh nα,  cosh α = 1 + a/R.
//!
//! Attractive forces are negative.

use crate::constants::CODATA;
use crate::error::{CoreError, Result};
use crate::interp::PowerScaledTable;
use crate::lifshitz::SphereGeometry;
use crate::special::coth_minus_inverse;

const SERIES_REL_TOL: f64 = 1e-12;
const MAX_TERMS: usize = 1_000_000;
/// Above nα = 30 the term is evaluated as (coth α − n)·2e^{−nα}.
const ASYMPTOTIC_SWITCH: f64 = 30.0;

/// α = arccosh(1 + a/R) in the cancellation-free log form.
pub fn alpha(a: f64, radius: f64) -> f64 {
    let x = a / radius;
    (x + (x * (2.0 + x)).sqrt()).ln_1p()
}

/// n-th series term (coth α − n coth nα) / sinh nα.
pub fn series_term(alpha: f64, n: usize) -> f64 {
    let nf = n as f64;
    let na = nf * alpha;
    if na > ASYMPTOTIC_SWITCH {
        let coth_a = 1.0 / alpha.tanh();
        return (coth_a - nf) * 2.0 * (-na).exp();
    }
    // coth α − n coth nα = h(α) − n h(nα) with h(x) = coth x − 1/x
    (coth_minus_inverse(alpha) - nf * coth_minus_inverse(na)) / na.sinh()
}

/// Direct evaluation of a term, without the small-argument rewrite or the
/// asymptotic form. Used to check the crossover.
pub fn series_term_direct(alpha: f64, n: usize) -> f64 {
    let nf = n as f64;
    (1.0 / alpha.tanh() - nf / (nf * alpha).tanh()) / (nf * alpha).sinh()
}

fn check_args(a: f64, radius: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && radius > 0.0 && radius.is_finite()) {
        return Err(CoreError::Domain(format!(
            "sphere-plate electrostatics needs a > 0 and R > 0 (a = {a}, R = {radius})"
        )));
    }
    Ok(())
}

/// Σ_{n≥2} of the series (the n = 1 term vanishes identically).
fn series_sum(alpha: f64) -> Result<f64> {
    // Neumaier summation; the terms all share a sign.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for n in 2..=MAX_TERMS {
        let t = series_term(alpha, n);
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
        if t.abs() <= SERIES_REL_TOL * (sum + comp).abs() {
            return Ok(sum + comp);
        }
    }
    Err(CoreError::Convergence {
        iterations: MAX_TERMS,
        achieved: series_term(alpha, MAX_TERMS).abs() / sum.abs(),
        target: SERIES_REL_TOL,
        context: format!("sphere-plate series at alpha = {alpha:e}"),
    })
}

/// ΔV-independent factor 2πε₀ Σ(…) in N/V², so that F = factor·ΔV².
pub fn electrostatic_curvature(a: f64, radius: f64) -> Result<f64> {
    check_args(a, radius)?;
    let s = series_sum(alpha(a, radius))?;
    Ok(2.0 * std::f64::consts::PI * CODATA.epsilon_0 * s)
}

/// Force in newtons for separation `a` (m), radius (m) and ΔV = V − V₀ (V).
pub fn electrostatic_force(a: f64, radius: f64, delta_v: f64) -> Result<f64> {
    check_args(a, radius)?;
    if delta_v == 0.0 {
        return Ok(0.0);
    }
    Ok(electrostatic_curvature(a, radius)? * delta_v * delta_v)
}

/// Leading small-a/R asymptote −πε₀RΔV²/a.
pub fn electrostatic_force_asymptote(a: f64, radius: f64, delta_v: f64) -> f64 {
    -std::f64::consts::PI * CODATA.epsilon_0 * radius * delta_v * delta_v / a
}

/// A sphere–plate configuration at fixed potential difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePlateVoltage {
    /// V − V₀ in volts.
    pub delta_v: f64,
    pub geometry: SphereGeometry,
    /// Meters.
    pub separation: f64,
}

impl SpherePlateVoltage {
    pub fn force(&self) -> Result<f64> {
        electrostatic_force(self.separation, self.geometry.radius, self.delta_v)
    }
}

/// Dense table of [`electrostatic_curvature`] for one sphere radius, for
/// inner loops that need many evaluations.
#[derive(Debug, Clone)]
pub struct CurvatureTable {
    radius: f64,
    table: PowerScaledTable,
}

impl CurvatureTable {
    const STEP_LN: f64 = 0.005;

    /// Covers separations [a_min, a_max] in meters.
    pub fn new(radius: f64, a_min: f64, a_max: f64) -> Result<Self> {
        check_args(a_min, radius)?;
        let nodes = PowerScaledTable::grid(a_min, a_max, Self::STEP_LN)?;
        let values = nodes
            .iter()
            .map(|&a| electrostatic_curvature(a, radius))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { radius, table: PowerScaledTable::from_values(a_min, Self::STEP_LN, 1, &nodes, &values)? })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn a_min(&self) -> f64 {
        self.table.a_min()
    }

    pub fn a_max(&self) -> f64 {
        self.table.a_max()
    }

    /// (C(a), dC/da) with C in N/V².
    pub fn eval(&self, a: f64) -> Result<(f64, f64)> {
        self.table.eval(a)
    }
}
