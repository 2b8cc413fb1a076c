//! Reflection coefficients at imaginary frequency for planar interfaces and
//! layered stacks.

use crate::constants::CODATA;
use crate::error::{CoreError, Result};
use crate::materials::{eps_imaginary, MaterialModel, StaticLimit};

use super::LayerStack;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    Tm,
    Te,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Tm, Polarization::Te];
}

/// A medium at one imaginary frequency: ε and κ² = εξ²/c² (1/m²).
///
/// Either may be infinite: a conductor at ξ = 0 has ε = ∞ with κ² = 0, a
/// plasma has ε = ∞ with finite κ², an ideal metal has both infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumResponse {
    pub eps: f64,
    pub kappa2: f64,
}

impl MediumResponse {
    pub fn vacuum(xi_ev: f64) -> Self {
        let w = CODATA.ev_to_wavenumber(xi_ev);
        Self { eps: 1.0, kappa2: w * w }
    }

    pub fn from_eps(eps: f64, xi_ev: f64) -> Self {
        if eps.is_infinite() {
            return Self { eps, kappa2: f64::INFINITY };
        }
        let w = CODATA.ev_to_wavenumber(xi_ev);
        Self { eps, kappa2: eps * w * w }
    }

    pub fn from_static(limit: StaticLimit) -> Self {
        match limit {
            StaticLimit::Finite(eps) => Self { eps, kappa2: 0.0 },
            StaticLimit::Conductor => Self { eps: f64::INFINITY, kappa2: 0.0 },
            StaticLimit::Plasma { omega_p } => {
                let w = CODATA.ev_to_wavenumber(omega_p);
                Self { eps: f64::INFINITY, kappa2: w * w }
            }
            StaticLimit::Ideal => Self { eps: f64::INFINITY, kappa2: f64::INFINITY },
        }
    }

    /// Response of `model` at `xi_ev`, routing ξ = 0 through the static limit.
    pub fn of(model: &MaterialModel, xi_ev: f64) -> Result<Self> {
        if xi_ev == 0.0 {
            return Ok(Self::from_static(model.static_limit()?));
        }
        Ok(Self::from_eps(eps_imaginary(model, xi_ev)?, xi_ev))
    }

    /// q = sqrt(k² + κ²).
    pub fn q(&self, k_perp: f64) -> f64 {
        (k_perp * k_perp + self.kappa2).sqrt()
    }
}

/// Reflection at the interface from medium `a` (incidence side) into `b`.
pub(crate) fn interface(pol: Polarization, a: &MediumResponse, b: &MediumResponse, k_perp: f64) -> f64 {
    match pol {
        Polarization::Tm => match (a.eps.is_infinite(), b.eps.is_infinite()) {
            (true, true) => 0.0,
            (false, true) => 1.0,
            (true, false) => -1.0,
            (false, false) => {
                let (qa, qb) = (a.q(k_perp), b.q(k_perp));
                let num = b.eps * qa - a.eps * qb;
                let den = b.eps * qa + a.eps * qb;
                if num == 0.0 {
                    0.0
                } else {
                    num / den
                }
            }
        },
        Polarization::Te => {
            let (qa, qb) = (a.q(k_perp), b.q(k_perp));
            match (qa.is_infinite(), qb.is_infinite()) {
                (true, true) => 0.0,
                (false, true) => -1.0,
                (true, false) => 1.0,
                (false, false) => {
                    if qa == qb {
                        0.0
                    } else {
                        (qa - qb) / (qa + qb)
                    }
                }
            }
        }
    }
}

/// Fresnel coefficient between media of permittivity `eps_a` and `eps_b` at
/// imaginary frequency `xi_ev` and transverse wavenumber `k_perp` (1/m).
/// `f64::INFINITY` marks an ideal metal.
pub fn fresnel_interface(pol: Polarization, eps_a: f64, eps_b: f64, k_perp: f64, xi_ev: f64) -> Result<f64> {
    if !(k_perp >= 0.0 && xi_ev >= 0.0) || (k_perp == 0.0 && xi_ev == 0.0) {
        return Err(CoreError::Domain(format!(
            "fresnel_interface needs k_perp ≥ 0, xi ≥ 0, not both zero (k = {k_perp}, xi = {xi_ev})"
        )));
    }
    if !(eps_a >= 1.0 && eps_b >= 1.0) {
        return Err(CoreError::Domain(format!("permittivities must be ≥ 1 ({eps_a}, {eps_b})")));
    }
    let a = MediumResponse::from_eps(eps_a, xi_ev);
    let b = MediumResponse::from_eps(eps_b, xi_ev);
    Ok(interface(pol, &a, &b, k_perp))
}

/// Reflection of a stack seen from vacuum, given the responses of its layers
/// followed by the substrate.
pub(crate) fn stack_from_responses(
    pol: Polarization,
    stack: &LayerStack,
    vacuum: &MediumResponse,
    media: &[MediumResponse],
    k_perp: f64,
) -> f64 {
    let n = stack.layers.len();
    debug_assert_eq!(media.len(), n + 1);
    if n == 0 {
        return interface(pol, vacuum, &media[0], k_perp);
    }
    let mut r = interface(pol, &media[n - 1], &media[n], k_perp);
    for j in (0..n).rev() {
        let above = if j == 0 { vacuum } else { &media[j - 1] };
        let film = &media[j];
        let rho = interface(pol, above, film, k_perp);
        let q = film.q(k_perp);
        let e = if q.is_infinite() {
            0.0
        } else {
            (-2.0 * q * stack.layers[j].thickness).exp()
        };
        let re = r * e;
        r = (rho + re) / (1.0 + rho * re);
    }
    r
}

/// Reflection coefficient of a layered plate at (`k_perp`, `xi_ev`).
pub fn stack_reflection(stack: &LayerStack, pol: Polarization, k_perp: f64, xi_ev: f64) -> Result<f64> {
    if !(k_perp >= 0.0 && xi_ev >= 0.0) || (k_perp == 0.0 && xi_ev == 0.0) {
        return Err(CoreError::Domain("stack_reflection needs k_perp, xi ≥ 0 and not both zero".into()));
    }
    let media = stack.responses(xi_ev)?;
    Ok(stack_from_responses(pol, stack, &MediumResponse::vacuum(xi_ev), &media, k_perp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_media_do_not_reflect() {
        for pol in Polarization::BOTH {
            assert_eq!(fresnel_interface(pol, 3.2, 3.2, 1e7, 0.5).unwrap(), 0.0);
        }
    }

    #[test]
    fn ideal_metal_is_perfect_reflector() {
        assert_eq!(fresnel_interface(Polarization::Tm, 1.0, f64::INFINITY, 1e7, 0.5).unwrap(), 1.0);
        assert_eq!(fresnel_interface(Polarization::Te, 1.0, f64::INFINITY, 1e7, 0.5).unwrap(), -1.0);
    }

    #[test]
    fn vacuum_to_drude_ito_against_direct_formula() {
        let (eps_b, xi, k): (f64, f64, f64) = (55.53, 0.14898, 1e7);
        // independent evaluation in SI: ξ/c with ξ in rad/s
        let hbar = 1.054_571_817e-34;
        let xi_rad = xi * 1.602_176_634e-19 / hbar;
        let w = xi_rad / 299_792_458.0;
        let qa = (k * k + w * w).sqrt();
        let qb = (k * k + eps_b * w * w).sqrt();
        let tm = (eps_b * qa - qb) / (eps_b * qa + qb);
        let te = (qa - qb) / (qa + qb);
        let got_tm = fresnel_interface(Polarization::Tm, 1.0, eps_b, k, xi).unwrap();
        let got_te = fresnel_interface(Polarization::Te, 1.0, eps_b, k, xi).unwrap();
        assert!((got_tm - tm).abs() < 1e-9, "{got_tm} vs {tm}");
        assert!((got_te - te).abs() < 1e-9, "{got_te} vs {te}");
        assert!(got_tm > 0.0 && got_tm < 1.0 && got_te < 0.0 && got_te > -1.0);
    }

    #[test]
    fn rejects_degenerate_arguments() {
        assert!(fresnel_interface(Polarization::Tm, 1.0, 2.0, 0.0, 0.0).is_err());
        assert!(fresnel_interface(Polarization::Tm, 0.5, 2.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn zero_frequency_conductor_limits() {
        let vac = MediumResponse::vacuum(0.0);
        let drude = MediumResponse::from_static(StaticLimit::Conductor);
        let plasma = MediumResponse::from_static(StaticLimit::Plasma { omega_p: 9.0 });
        let ideal = MediumResponse::from_static(StaticLimit::Ideal);
        let k = 1e7;
        assert_eq!(interface(Polarization::Te, &vac, &drude, k), 0.0);
        assert_eq!(interface(Polarization::Tm, &vac, &drude, k), 1.0);
        assert_eq!(interface(Polarization::Te, &vac, &ideal, k), -1.0);
        // κ = ω_p/ħc for the plasma at ξ = 0
        let kappa = 9.0 / 197.326_980_459_302_47e-9;
        let expected = (k - (k * k + kappa * kappa).sqrt()) / (k + (k * k + kappa * kappa).sqrt());
        let te_plasma = interface(Polarization::Te, &vac, &plasma, k);
        assert!((te_plasma - expected).abs() < 1e-14, "{te_plasma} vs {expected}");
    }
}
