//! Finite-temperature Lifshitz free energy between two planar stacks and the
//! sphere–plate force in the proximity force approximation.
//!
//! The free energy per unit area is
//!
//! E(a) = (k_B T / 2π) Σ′_l ∫₀^∞ k dk Σ_p ln(1 − r₁ r₂ e^{−2 a q₀}),
//!
//! with q₀ = sqrt(k² + ξ_l²/c²) and the l = 0 term halved. The k integral is
//! done in y = 2 a q₀, which turns the weight into a plain decaying
//! exponential.

mod reflection;

use std::f64::consts::PI;
use std::sync::OnceLock;

use log::warn;
use rayon::prelude::*;

pub use reflection::{fresnel_interface, stack_reflection, MediumResponse, Polarization};

use crate::constants::CODATA;
use crate::curve::ForceCurve;
use crate::error::{CoreError, Result};
use crate::materials::{BandEdge, MaterialModel};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::polylog23_exp_neg;

/// Beyond y − y_l = 64 the integrand is below e⁻⁶⁴ of its peak.
const Y_PANELS: [f64; 8] = [0.0, 0.5, 2.0, 6.0, 14.0, 24.0, 40.0, 64.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Thickness in meters.
    pub thickness: f64,
    pub material: MaterialModel,
}

impl Layer {
    pub fn new(thickness: f64, material: MaterialModel) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(CoreError::Config(format!("layer thickness must be positive, got {thickness}")));
        }
        Ok(Self { thickness, material })
    }
}

/// Films on a semi-infinite substrate, vacuum-adjacent film first.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
    pub substrate: MaterialModel,
}

impl LayerStack {
    pub fn half_space(material: MaterialModel) -> Self {
        Self { layers: Vec::new(), substrate: material }
    }

    pub fn new(layers: Vec<Layer>, substrate: MaterialModel) -> Self {
        Self { layers, substrate }
    }

    /// Medium facing the gap.
    pub fn top(&self) -> &MaterialModel {
        self.layers.first().map(|l| &l.material).unwrap_or(&self.substrate)
    }

    pub fn materials(&self) -> impl Iterator<Item = &MaterialModel> {
        self.layers.iter().map(|l| &l.material).chain(std::iter::once(&self.substrate))
    }

    /// Responses of the layers followed by the substrate at `xi_ev`.
    pub fn responses(&self, xi_ev: f64) -> Result<Vec<MediumResponse>> {
        self.materials().map(|m| MediumResponse::of(m, xi_ev)).collect()
    }

    pub fn has_band(&self) -> bool {
        self.materials().any(|m| m.has_band())
    }

    pub fn band_member(&self, edge: BandEdge) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer { thickness: l.thickness, material: l.material.band_member(edge) })
                .collect(),
            substrate: self.substrate.band_member(edge),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifshitzSettings {
    /// Kelvin.
    pub temperature: f64,
    pub matsubara_rel_tol: f64,
    pub quadrature_rel_tol: f64,
    pub l_max_cap: usize,
}

impl Default for LifshitzSettings {
    fn default() -> Self {
        Self {
            temperature: 275.15,
            matsubara_rel_tol: 1e-7,
            quadrature_rel_tol: 1e-9,
            l_max_cap: 20_000,
        }
    }
}

impl LifshitzSettings {
    pub fn at_temperature(temperature: f64) -> Self {
        Self { temperature, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(CoreError::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        for (name, tol) in [("matsubara_rel_tol", self.matsubara_rel_tol), ("quadrature_rel_tol", self.quadrature_rel_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(CoreError::Config(format!("{name} must lie in (0, 1e-2], got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereGeometry {
    /// Meters.
    pub radius: f64,
}

impl SphereGeometry {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CoreError::Config(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }
}

/// A stack with its per-Matsubara-index responses memoised. Safe to share
/// between threads; every entry is a pure function of `l`.
struct PreparedStack<'a> {
    stack: &'a LayerStack,
    ideal_top: bool,
    step_ev: f64,
    cache: Vec<OnceLock<Result<Vec<MediumResponse>>>>,
}

impl<'a> PreparedStack<'a> {
    fn new(stack: &'a LayerStack, settings: &LifshitzSettings) -> Self {
        Self {
            stack,
            ideal_top: matches!(stack.top(), MaterialModel::IdealMetal),
            step_ev: CODATA.matsubara_step_ev(settings.temperature),
            cache: (0..=settings.l_max_cap).map(|_| OnceLock::new()).collect(),
        }
    }

    fn responses(&self, l: usize) -> Result<&[MediumResponse]> {
        let slot = &self.cache[l];
        let entry = slot.get_or_init(|| self.stack.responses(self.step_ev * l as f64));
        entry.as_deref().map_err(Clone::clone)
    }
}

/// ∫₀^∞ k dk Σ_p ln(1 − r₁r₂e^{−2aq₀}) for one Matsubara index, in 1/m².
fn matsubara_term(a: f64, l: usize, s1: &PreparedStack, s2: &PreparedStack, quad_tol: f64) -> Result<f64> {
    let xi_ev = s1.step_ev * l as f64;
    let w = CODATA.ev_to_wavenumber(xi_ev);
    let y0 = 2.0 * a * w;
    let jac = 1.0 / (4.0 * a * a);

    if s1.ideal_top && s2.ideal_top {
        // r₁r₂ = 1 for both polarizations:
        // ∫_{y0}^∞ y ln(1 − e^{−y}) dy = −[Li₃(e^{−y0}) + y0 Li₂(e^{−y0})]
        let (li2, li3) = polylog23_exp_neg(y0);
        return Ok(-2.0 * jac * (li3 + y0 * li2));
    }

    let m1 = s1.responses(l)?;
    let m2 = s2.responses(l)?;
    let vacuum = MediumResponse::vacuum(xi_ev);
    let integrand = |y: f64| {
        let q0 = y / (2.0 * a);
        let k = (q0 * q0 - w * w).max(0.0).sqrt();
        let decay = (-y).exp();
        let mut acc = 0.0;
        for pol in Polarization::BOTH {
            let r1 = reflection::stack_from_responses(pol, s1.stack, &vacuum, m1, k);
            let r2 = reflection::stack_from_responses(pol, s2.stack, &vacuum, m2, k);
            let x = r1 * r2 * decay;
            if x != 0.0 {
                acc += (-x).ln_1p();
            }
        }
        y * acc
    };
    let breaks: Vec<f64> = Y_PANELS.iter().map(|d| y0 + d).collect();
    let opts = QuadOptions { rel_tol: quad_tol, abs_tol: 1e-300, max_intervals: 5000 };
    let r = integrate(integrand, &breaks, opts)?;
    Ok(jac * r.value)
}

/// Matsubara terms l = 0..count (unprimed) at separation `a`, in 1/m².
/// Exposed for convergence studies.
pub fn matsubara_terms(a: f64, stack_1: &LayerStack, stack_2: &LayerStack, settings: &LifshitzSettings, count: usize) -> Result<Vec<f64>> {
    settings.validate()?;
    let capped = LifshitzSettings { l_max_cap: count.max(1), ..*settings };
    let s1 = PreparedStack::new(stack_1, &capped);
    let s2 = PreparedStack::new(stack_2, &capped);
    (0..count).map(|l| matsubara_term(a, l, &s1, &s2, settings.quadrature_rel_tol)).collect()
}

fn free_energy_prepared(a: f64, s1: &PreparedStack, s2: &PreparedStack, settings: &LifshitzSettings) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(CoreError::Domain(format!("separation must be positive, got {a}")));
    }
    let tol = settings.matsubara_rel_tol;
    let mut sum = 0.5 * matsubara_term(a, 0, s1, s2, settings.quadrature_rel_tol)?;
    let mut last = f64::INFINITY;
    let mut converged = false;
    for l in 1..=settings.l_max_cap {
        let term = matsubara_term(a, l, s1, s2, settings.quadrature_rel_tol)?;
        sum += term;
        last = term.abs();
        if last <= tol * sum.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(CoreError::Convergence {
            iterations: settings.l_max_cap,
            achieved: last / sum.abs(),
            target: tol,
            context: format!("Matsubara sum at a = {a:e} m"),
        });
    }
    Ok(CODATA.thermal_energy_j(settings.temperature) / (2.0 * PI) * sum)
}

/// Free energy per unit area (J/m²) between two stacks facing each other
/// across a vacuum gap of width `a` (m). Negative when attractive.
pub fn free_energy_per_area(a: f64, stack_1: &LayerStack, stack_2: &LayerStack, settings: &LifshitzSettings) -> Result<f64> {
    settings.validate()?;
    let s1 = PreparedStack::new(stack_1, settings);
    let s2 = PreparedStack::new(stack_2, settings);
    free_energy_prepared(a, &s1, &s2, settings)
}

fn check_pfa(a: f64, sphere: &SphereGeometry) {
    if a / sphere.radius > 0.01 {
        warn!("a/R = {:.3e} exceeds 0.01; proximity force approximation is unreliable", a / sphere.radius);
    }
}

/// Sphere–plate force F = 2πR·E(a) in newtons (negative when attractive).
pub fn pfa_sphere_plate_force(
    a: f64,
    sphere: &SphereGeometry,
    sphere_stack: &LayerStack,
    plate: &LayerStack,
    settings: &LifshitzSettings,
) -> Result<f64> {
    check_pfa(a, sphere);
    Ok(2.0 * PI * sphere.radius * free_energy_per_area(a, sphere_stack, plate, settings)?)
}

fn forces_on_grid(
    a_grid: &[f64],
    sphere: &SphereGeometry,
    sphere_stack: &LayerStack,
    plate: &LayerStack,
    settings: &LifshitzSettings,
) -> Result<Vec<f64>> {
    settings.validate()?;
    if a_grid.is_empty() {
        return Err(CoreError::Config("empty separation grid".into()));
    }
    if a_grid[0] <= 0.0 || a_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::Config("separation grid must be positive and strictly ascending".into()));
    }
    check_pfa(*a_grid.last().unwrap(), sphere);
    let s1 = PreparedStack::new(sphere_stack, settings);
    let s2 = PreparedStack::new(plate, settings);
    let results: Vec<Result<f64>> = a_grid
        .par_iter()
        .map(|&a| free_energy_prepared(a, &s1, &s2, settings).map(|e| 2.0 * PI * sphere.radius * e))
        .collect();
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, r)| r.is_err()).map(|(i, _)| i).collect();
    if let Some(&first) = failed.first() {
        let cause = results[first].as_ref().unwrap_err().clone();
        return Err(match cause {
            CoreError::Convergence { iterations, achieved, target, context } => CoreError::Convergence {
                iterations,
                achieved,
                target,
                context: format!("{context}; failed grid indices {failed:?}"),
            },
            other => other,
        });
    }
    Ok(results.into_iter().map(|r| r.unwrap()).collect())
}

/// PFA force at every separation of `a_grid` (m). The returned curve is in
/// nm and pN.
pub fn force_curve(
    a_grid: &[f64],
    sphere: &SphereGeometry,
    sphere_stack: &LayerStack,
    plate: &LayerStack,
    settings: &LifshitzSettings,
) -> Result<ForceCurve> {
    let forces = forces_on_grid(a_grid, sphere, sphere_stack, plate, settings)?;
    ForceCurve::new(
        a_grid.iter().map(|a| a * 1e9).collect(),
        forces.iter().map(|f| f * 1e12).collect(),
    )
}

/// Experimental parameter spread folded into a theory band.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParameterSpread {
    /// Absolute uncertainty of the sphere radius (m).
    pub radius: f64,
    /// Absolute uncertainty of the first plate film thickness (m).
    pub thickness: f64,
}

/// Force curves for the lower and upper extrapolation envelopes of every
/// banded material. `force_lo_pn ≤ force_hi_pn` pointwise; `force_pn` is
/// their midpoint. With `spread`, the band also covers radius and thickness
/// at ± their uncertainties.
pub fn force_curve_band(
    a_grid: &[f64],
    sphere: &SphereGeometry,
    sphere_stack: &LayerStack,
    plate: &LayerStack,
    settings: &LifshitzSettings,
    spread: Option<ParameterSpread>,
) -> Result<ForceCurve> {
    let mut members: Vec<Vec<f64>> = Vec::new();
    let thickness_shifts: Vec<f64> = match spread {
        Some(s) if s.thickness > 0.0 && !plate.layers.is_empty() => vec![-s.thickness, s.thickness],
        _ => vec![0.0],
    };
    for edge in [BandEdge::Lower, BandEdge::Upper] {
        let s_stack = sphere_stack.band_member(edge);
        for &dt in &thickness_shifts {
            let mut p = plate.band_member(edge);
            if dt != 0.0 {
                let t = p.layers[0].thickness + dt;
                p.layers[0] = Layer::new(t, p.layers[0].material.clone())?;
            }
            members.push(forces_on_grid(a_grid, sphere, &s_stack, &p, settings)?);
        }
    }
    let radius_factors: Vec<f64> = match spread {
        Some(s) if s.radius > 0.0 => vec![1.0 - s.radius / sphere.radius, 1.0 + s.radius / sphere.radius],
        _ => vec![1.0],
    };
    let n = a_grid.len();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for m in &members {
        for &rf in &radius_factors {
            for i in 0..n {
                let f = m[i] * rf * 1e12;
                lo[i] = lo[i].min(f);
                hi[i] = hi[i].max(f);
            }
        }
    }
    let mut curve = ForceCurve::new(
        a_grid.iter().map(|a| a * 1e9).collect(),
        lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect(),
    )?;
    curve.force_lo_pn = Some(lo);
    curve.force_hi_pn = Some(hi);
    Ok(curve)
}

/// −π²ħc/(720 a³): ideal-metal plates at zero temperature (J/m²).
pub fn ideal_metal_free_energy_t0(a: f64) -> f64 {
    -PI * PI * CODATA.hbar_c_si() / (720.0 * a.powi(3))
}
