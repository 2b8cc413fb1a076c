//! Dielectric permittivities evaluated along the imaginary frequency axis.
//!
//! All frequencies in this module are photon energies in eV. Conversion to
//! wavenumbers happens in [`crate::lifshitz`].

mod kk;

pub use kk::{extrapolation_band, kk_transform};

use crate::constants::CODATA;
use crate::error::{CoreError, Result};
use crate::interp;

/// Drude parameters in eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    pub omega_p: f64,
    pub gamma: f64,
}

impl DrudeParams {
    pub fn new(omega_p: f64, gamma: f64) -> Result<Self> {
        if !(omega_p > 0.0 && omega_p.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return Err(CoreError::Config(format!(
                "Drude parameters must be positive (omega_p = {omega_p}, gamma = {gamma})"
            )));
        }
        Ok(Self { omega_p, gamma })
    }

    /// ε(iξ) = 1 + ω_p² / (ξ(ξ + γ)).
    pub fn eps_imaginary(&self, xi: f64) -> f64 {
        1.0 + self.omega_p * self.omega_p / (xi * (xi + self.gamma))
    }

    /// Im ε(ω) on the real axis.
    pub fn im_eps(&self, omega: f64) -> f64 {
        let wp2 = self.omega_p * self.omega_p;
        wp2 * self.gamma / (omega * (omega * omega + self.gamma * self.gamma))
    }
}

/// Lorentz oscillator: strength is dimensionless, resonance and width in eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub strength: f64,
    pub resonance: f64,
    pub width: f64,
}

impl Oscillator {
    /// Contribution f·ω₀² / (ω₀² + ξ² + γξ) to ε(iξ).
    pub fn eps_imaginary(&self, xi: f64) -> f64 {
        let w2 = self.resonance * self.resonance;
        self.strength * w2 / (w2 + xi * xi + self.width * xi)
    }

    /// Im ε(ω) = f ω₀² γ ω / ((ω₀² − ω²)² + γ²ω²).
    pub fn im_eps(&self, omega: f64) -> f64 {
        let w2 = self.resonance * self.resonance;
        let d = w2 - omega * omega;
        self.strength * w2 * self.width * omega / (d * d + self.width * self.width * omega * omega)
    }
}

/// Oscillators with strictly ascending resonances. May be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OscillatorSet(Vec<Oscillator>);

impl OscillatorSet {
    pub fn new(oscillators: Vec<Oscillator>) -> Result<Self> {
        for o in &oscillators {
            if !(o.strength >= 0.0 && o.resonance > 0.0 && o.width >= 0.0)
                || !(o.strength.is_finite() && o.resonance.is_finite() && o.width.is_finite())
            {
                return Err(CoreError::Config(format!("invalid oscillator {o:?}")));
            }
        }
        let resonances: Vec<f64> = oscillators.iter().map(|o| o.resonance).collect();
        interp::ensure_ascending(&resonances, "oscillator resonances")?;
        Ok(Self(oscillators))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn oscillators(&self) -> &[Oscillator] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eps_imaginary(&self, xi: f64) -> f64 {
        1.0 + self.0.iter().map(|o| o.eps_imaginary(xi)).sum::<f64>()
    }

    pub fn im_eps(&self, omega: f64) -> f64 {
        self.0.iter().map(|o| o.im_eps(omega)).sum()
    }
}

/// Measured Im ε(ω) on a strictly ascending frequency grid (eV).
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalSpectrum {
    frequencies: Vec<f64>,
    im_eps: Vec<f64>,
}

impl OpticalSpectrum {
    pub fn new(frequencies: Vec<f64>, im_eps: Vec<f64>) -> Result<Self> {
        if frequencies.len() != im_eps.len() {
            return Err(CoreError::Config("spectrum columns differ in length".into()));
        }
        if frequencies.len() < 2 {
            return Err(CoreError::Config("spectrum needs at least two samples".into()));
        }
        interp::ensure_ascending(&frequencies, "spectrum frequencies")?;
        if frequencies[0] <= 0.0 {
            return Err(CoreError::Config("spectrum frequencies must be positive".into()));
        }
        if im_eps.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CoreError::Config("Im eps must be finite and non-negative".into()));
        }
        Ok(Self { frequencies, im_eps })
    }

    /// Samples `f` on `frequencies`.
    pub fn sample<F: Fn(f64) -> f64>(frequencies: Vec<f64>, f: F) -> Result<Self> {
        let im = frequencies.iter().map(|&w| f(w)).collect();
        Self::new(frequencies, im)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn im_eps(&self) -> &[f64] {
        &self.im_eps
    }

    pub fn band(&self) -> (f64, f64) {
        (self.frequencies[0], *self.frequencies.last().unwrap())
    }

    /// Linearly interpolated Im ε inside the band.
    pub fn interpolate(&self, omega: f64) -> Result<f64> {
        interp::linear(&self.frequencies, &self.im_eps, omega)
    }
}

/// Tabulated Im ε with analytic extrapolations on both sides of the band.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKk {
    pub spectrum: OpticalSpectrum,
    pub low_extrapolation: DrudeParams,
    pub high_extrapolation: OscillatorSet,
    /// Second high-frequency envelope; together with `high_extrapolation`
    /// it delimits the extrapolation band.
    pub high_extrapolation_upper: Option<OscillatorSet>,
    pub carriers_included: bool,
}

/// ε(iξ) given directly on a ξ grid (eV), e.g. literature data for quartz.
#[derive(Debug, Clone, PartialEq)]
pub struct DielectricTable {
    xi: Vec<f64>,
    eps: Vec<f64>,
}

impl DielectricTable {
    pub fn new(xi: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if xi.len() != eps.len() || xi.len() < 2 {
            return Err(CoreError::Config("dielectric table needs ≥2 aligned rows".into()));
        }
        interp::ensure_ascending(&xi, "dielectric table xi")?;
        if xi[0] < 0.0 {
            return Err(CoreError::Config("dielectric table xi must be ≥ 0".into()));
        }
        if eps.iter().any(|e| !(e.is_finite() && *e >= 1.0)) {
            return Err(CoreError::Config("dielectric table values must be ≥ 1".into()));
        }
        if let Some(w) = eps.windows(2).find(|w| w[1] > w[0]) {
            return Err(CoreError::Config(format!(
                "dielectric table must be nonincreasing in xi ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { xi, eps })
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// Linear in ln ξ between rows (linear in ξ on a segment starting at 0),
    /// held constant below the table and decaying as ξ⁻² above it.
    pub fn eval(&self, xi: f64) -> f64 {
        let n = self.xi.len();
        if xi <= self.xi[0] {
            return self.eps[0];
        }
        if xi >= self.xi[n - 1] {
            let r = self.xi[n - 1] / xi;
            return 1.0 + (self.eps[n - 1] - 1.0) * r * r;
        }
        let i = interp::bracket(&self.xi, xi).expect("inside table");
        let (x0, x1) = (self.xi[i], self.xi[i + 1]);
        let t = if x0 == 0.0 {
            xi / x1
        } else {
            (xi / x0).ln() / (x1 / x0).ln()
        };
        self.eps[i] + t * (self.eps[i + 1] - self.eps[i])
    }
}

/// Behaviour of a material as ξ → 0, which fixes the zero-frequency
/// Matsubara term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticLimit {
    /// Finite static permittivity.
    Finite(f64),
    /// ε diverges but εξ² → 0 (dissipative conductor, Drude-like).
    Conductor,
    /// ε diverges with εξ² → ω_p² (dissipationless plasma term).
    Plasma { omega_p: f64 },
    /// Perfect reflector at all frequencies.
    Ideal,
}

/// Dielectric response of a substance.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialModel {
    Drude(DrudeParams),
    GeneralizedPlasma { omega_p: f64, oscillators: OscillatorSet },
    TabulatedKk(TabulatedKk),
    DielectricTable(DielectricTable),
    IdealMetal,
}

/// Which envelope of an extrapolation band to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandEdge {
    Lower,
    Upper,
}

impl MaterialModel {
    pub fn drude(omega_p: f64, gamma: f64) -> Result<Self> {
        Ok(Self::Drude(DrudeParams::new(omega_p, gamma)?))
    }

    pub fn generalized_plasma(omega_p: f64, oscillators: OscillatorSet) -> Result<Self> {
        if !(omega_p > 0.0 && omega_p.is_finite()) {
            return Err(CoreError::Config(format!("plasma frequency must be positive, got {omega_p}")));
        }
        Ok(Self::GeneralizedPlasma { omega_p, oscillators })
    }

    pub fn static_limit(&self) -> Result<StaticLimit> {
        Ok(match self {
            Self::Drude(_) => StaticLimit::Conductor,
            Self::GeneralizedPlasma { omega_p, .. } => StaticLimit::Plasma { omega_p: *omega_p },
            Self::TabulatedKk(t) if t.carriers_included => StaticLimit::Conductor,
            Self::TabulatedKk(t) => StaticLimit::Finite(kk_transform(t, 0.0)?),
            Self::DielectricTable(t) => StaticLimit::Finite(t.eval(0.0)),
            Self::IdealMetal => StaticLimit::Ideal,
        })
    }

    /// Whether the model carries a second high-frequency envelope.
    pub fn has_band(&self) -> bool {
        matches!(self, Self::TabulatedKk(t) if t.high_extrapolation_upper.is_some())
    }

    /// The model with one envelope of its extrapolation band selected.
    /// Models without a band are returned unchanged.
    pub fn band_member(&self, edge: BandEdge) -> Self {
        match (self, edge) {
            (Self::TabulatedKk(t), BandEdge::Upper) if t.high_extrapolation_upper.is_some() => {
                let mut t = t.clone();
                t.high_extrapolation = t.high_extrapolation_upper.take().unwrap();
                Self::TabulatedKk(t)
            }
            (Self::TabulatedKk(t), _) => {
                let mut t = t.clone();
                t.high_extrapolation_upper = None;
                Self::TabulatedKk(t)
            }
            _ => self.clone(),
        }
    }
}

/// ε(iξ) for `model` at imaginary frequency `xi` (eV).
///
/// Models whose permittivity diverges at ξ = 0 return a domain error there;
/// the Lifshitz code handles that term through [`MaterialModel::static_limit`].
/// [`MaterialModel::IdealMetal`] returns `f64::INFINITY`.
pub fn eps_imaginary(model: &MaterialModel, xi: f64) -> Result<f64> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(CoreError::Domain(format!("imaginary frequency must be finite and ≥ 0, got {xi}")));
    }
    let diverging = |name: &str| {
        Err(CoreError::Domain(format!(
            "{name} permittivity diverges at xi = 0; use the zero-frequency handling"
        )))
    };
    match model {
        MaterialModel::Drude(d) => {
            if xi == 0.0 {
                return diverging("Drude");
            }
            Ok(d.eps_imaginary(xi))
        }
        MaterialModel::GeneralizedPlasma { omega_p, oscillators } => {
            if xi == 0.0 {
                return diverging("plasma-like");
            }
            Ok(oscillators.eps_imaginary(xi) + omega_p * omega_p / (xi * xi))
        }
        MaterialModel::TabulatedKk(t) => {
            if xi == 0.0 && t.carriers_included {
                return diverging("tabulated (carriers included)");
            }
            kk_transform(t, xi)
        }
        MaterialModel::DielectricTable(t) => Ok(t.eval(xi)),
        MaterialModel::IdealMetal => Ok(f64::INFINITY),
    }
}

/// Matsubara frequencies ħξ_l = 2π k_B T l in eV for l = 0..=l_max.
pub fn matsubara_frequencies(temperature: f64, l_max: usize) -> Result<Vec<f64>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(CoreError::Config(format!("temperature must be positive, got {temperature}")));
    }
    let step = CODATA.matsubara_step_ev(temperature);
    Ok((0..=l_max).map(|l| step * l as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drude_gold_at_nine_ev() {
        let m = MaterialModel::drude(9.0, 0.035).unwrap();
        let v = eps_imaginary(&m, 9.0).unwrap();
        let oracle = 1.0 + 81.0 / (9.0 * 9.035);
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 1.9961).abs() < 5e-5);
    }

    #[test]
    fn drude_ito_at_first_matsubara() {
        let m = MaterialModel::drude(1.5, 0.128).unwrap();
        let v = eps_imaginary(&m, 0.14898).unwrap();
        assert!((v - 55.53).abs() < 0.01, "{v}");
    }

    #[test]
    fn vanishing_plasma_frequency_is_vacuum() {
        let m = MaterialModel::drude(1e-12, 0.1).unwrap();
        assert!((eps_imaginary(&m, 0.3).unwrap() - 1.0).abs() < 1e-20);
    }

    #[test]
    fn zero_frequency_domain_errors() {
        let d = MaterialModel::drude(9.0, 0.035).unwrap();
        assert!(matches!(eps_imaginary(&d, 0.0), Err(CoreError::Domain(_))));
        let gp = MaterialModel::generalized_plasma(9.0, OscillatorSet::empty()).unwrap();
        assert!(eps_imaginary(&gp, 0.0).is_err());
        assert_eq!(eps_imaginary(&MaterialModel::IdealMetal, 0.0).unwrap(), f64::INFINITY);
        assert!(eps_imaginary(&d, -1.0).is_err());
    }

    #[test]
    fn static_limits() {
        assert_eq!(
            MaterialModel::drude(1.0, 0.1).unwrap().static_limit().unwrap(),
            StaticLimit::Conductor
        );
        assert_eq!(
            MaterialModel::generalized_plasma(9.0, OscillatorSet::empty())
                .unwrap()
                .static_limit()
                .unwrap(),
            StaticLimit::Plasma { omega_p: 9.0 }
        );
        let t = DielectricTable::new(vec![0.0, 1.0], vec![4.0, 3.0]).unwrap();
        assert_eq!(
            MaterialModel::DielectricTable(t).static_limit().unwrap(),
            StaticLimit::Finite(4.0)
        );
    }

    #[test]
    fn parameter_validation() {
        assert!(DrudeParams::new(0.0, 0.1).is_err());
        assert!(DrudeParams::new(1.0, -0.1).is_err());
        let o = |r: f64| Oscillator { strength: 1.0, resonance: r, width: 0.1 };
        assert!(OscillatorSet::new(vec![o(2.0), o(1.0)]).is_err());
        assert!(OscillatorSet::new(vec![o(1.0), o(2.0)]).is_ok());
        assert!(OpticalSpectrum::new(vec![1.0], vec![0.0]).is_err());
        assert!(OpticalSpectrum::new(vec![1.0, 0.5], vec![0.0, 0.0]).is_err());
        assert!(OpticalSpectrum::new(vec![0.5, 1.0], vec![0.0, -1.0]).is_err());
        assert!(DielectricTable::new(vec![0.0, 1.0], vec![3.0, 3.5]).is_err());
        assert!(DielectricTable::new(vec![0.0, 1.0], vec![3.0, 0.5]).is_err());
    }

    #[test]
    fn dielectric_table_interpolation() {
        let t = DielectricTable::new(vec![0.0, 0.1, 10.0], vec![4.0, 3.8, 2.0]).unwrap();
        assert_eq!(t.eval(0.0), 4.0);
        assert!((t.eval(0.05) - 3.9).abs() < 1e-15);
        // midpoint in ln ξ between 0.1 and 10 is 1.0
        assert!((t.eval(1.0) - 2.9).abs() < 1e-14);
        assert!((t.eval(20.0) - 1.25).abs() < 1e-14);
    }

    #[test]
    fn matsubara_grid() {
        let xs = matsubara_frequencies(275.15, 2).unwrap();
        assert_eq!(xs[0], 0.0);
        assert!((xs[1] - 0.14898).abs() < 1e-5);
        let x300 = matsubara_frequencies(300.0, 1).unwrap()[1];
        assert!((x300 - 0.16244).abs() < 1e-5);
        assert!(matsubara_frequencies(0.0, 3).is_err());
    }

    #[test]
    fn matsubara_linear_in_temperature_and_index() {
        let a = matsubara_frequencies(137.0, 40).unwrap();
        let b = matsubara_frequencies(274.0, 40).unwrap();
        for l in 0..=40 {
            assert_eq!(b[l], 2.0 * a[l]);
            assert!((a[l] - l as f64 * a[1]).abs() <= 1e-15 * a[l]);
        }
    }

    #[test]
    fn band_member_swaps_envelopes() {
        let spectrum = OpticalSpectrum::new(vec![0.1, 1.0], vec![1.0, 1.0]).unwrap();
        let osc = |f| OscillatorSet::new(vec![Oscillator { strength: f, resonance: 5.0, width: 1.0 }]).unwrap();
        let m = MaterialModel::TabulatedKk(TabulatedKk {
            spectrum,
            low_extrapolation: DrudeParams::new(1.5, 0.128).unwrap(),
            high_extrapolation: osc(1.0),
            high_extrapolation_upper: Some(osc(2.0)),
            carriers_included: true,
        });
        assert!(m.has_band());
        match m.band_member(BandEdge::Upper) {
            MaterialModel::TabulatedKk(t) => {
                assert_eq!(t.high_extrapolation, osc(2.0));
                assert!(t.high_extrapolation_upper.is_none());
            }
            _ => unreachable!(),
        }
        assert!(!m.band_member(BandEdge::Lower).has_band());
    }
}
