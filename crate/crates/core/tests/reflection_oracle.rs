//! Layered-plate reflection against a characteristic-matrix oracle.

use casimir_core::lifshitz::{stack_reflection, Polarization};
use casimir_core::materials::{eps_imaginary, DielectricTable};
use casimir_core::{Layer, LayerStack, MaterialModel};

const HBAR: f64 = 6.626_070_15e-34 / (2.0 * std::f64::consts::PI);
const E_CHARGE: f64 = 1.602_176_634e-19;
const C: f64 = 299_792_458.0;

fn quartz() -> MaterialModel {
    let xi: Vec<f64> = (0..200).map(|i| if i == 0 { 0.0 } else { 1e-3 * 1.08f64.powi(i) }).collect();
    let eps = xi
        .iter()
        .map(|x| 1.0 + 1.93 / (1.0 + (x / 0.1378).powi(2)) + 1.359 / (1.0 + (x / 13.38).powi(2)))
        .collect();
    MaterialModel::DielectricTable(DielectricTable::new(xi, eps).unwrap())
}

fn ito() -> MaterialModel {
    MaterialModel::drude(1.5, 0.128).unwrap()
}

fn gold() -> MaterialModel {
    MaterialModel::drude(9.0, 0.035).unwrap()
}

/// Abelès matrices for the state (ψ, ψ'/p) with p = 1 (TE) or ε (TM).
fn oracle(films: &[(f64, &MaterialModel)], substrate: &MaterialModel, pol: Polarization, k: f64, xi_ev: f64) -> f64 {
    let w = xi_ev * E_CHARGE / HBAR / C;
    let admittance = |eps: f64| {
        let q = (k * k + eps * w * w).sqrt();
        let p = if pol == Polarization::Tm { eps } else { 1.0 };
        (q, p)
    };
    let (q0, p0) = admittance(1.0);
    let y0 = q0 / p0;
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for (d, mat) in films {
        let (q, p) = admittance(eps_imaginary(mat, xi_ev).unwrap());
        let (ch, sh) = ((q * d).cosh(), (q * d).sinh());
        let layer = [[ch, p / q * sh], [q / p * sh, ch]];
        m = [
            [layer[0][0] * m[0][0] + layer[0][1] * m[1][0], layer[0][0] * m[0][1] + layer[0][1] * m[1][1]],
            [layer[1][0] * m[0][0] + layer[1][1] * m[1][0], layer[1][0] * m[0][1] + layer[1][1] * m[1][1]],
        ];
    }
    let (qs, ps) = admittance(eps_imaginary(substrate, xi_ev).unwrap());
    let ys = qs / ps;
    let num = y0 * m[1][1] + ys * y0 * m[0][1] - ys * m[0][0] - m[1][0];
    let den = ys * m[0][0] + ys * y0 * m[0][1] + m[1][0] + y0 * m[1][1];
    num / den
}

const XI: [f64; 6] = [0.01, 0.14898, 0.5, 1.0, 5.0, 20.0];
const K: [f64; 6] = [1e5, 1e6, 5e6, 1e7, 5e7, 2e8];

#[test]
fn single_film_matches_characteristic_matrix() {
    let (film, sub) = (ito(), quartz());
    let stack = LayerStack::new(vec![Layer::new(74.6e-9, film.clone()).unwrap()], sub.clone());
    for pol in Polarization::BOTH {
        for &xi in &XI {
            for &k in &K {
                let got = stack_reflection(&stack, pol, k, xi).unwrap();
                let want = oracle(&[(74.6e-9, &film)], &sub, pol, k, xi);
                assert!((got - want).abs() < 1e-10, "{pol:?} xi {xi} k {k}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn two_films_match_characteristic_matrix() {
    let (au, film, sub) = (gold(), ito(), quartz());
    let stack = LayerStack::new(
        vec![Layer::new(20e-9, au.clone()).unwrap(), Layer::new(74.6e-9, film.clone()).unwrap()],
        sub.clone(),
    );
    for pol in Polarization::BOTH {
        for &xi in &XI {
            for &k in &K {
                let got = stack_reflection(&stack, pol, k, xi).unwrap();
                let want = oracle(&[(20e-9, &au), (74.6e-9, &film)], &sub, pol, k, xi);
                assert!((got - want).abs() < 1e-10, "{pol:?} xi {xi} k {k}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn film_limits() {
    let (film, sub) = (ito(), quartz());
    let thin = LayerStack::new(vec![Layer::new(1e-30, film.clone()).unwrap()], sub.clone());
    let thick = LayerStack::new(vec![Layer::new(1e-2, film.clone()).unwrap()], sub.clone());
    let bare = LayerStack::half_space(sub);
    let film_only = LayerStack::half_space(film);
    for pol in Polarization::BOTH {
        for &xi in &XI {
            for &k in &K {
                let r_thin = stack_reflection(&thin, pol, k, xi).unwrap();
                let r_bare = stack_reflection(&bare, pol, k, xi).unwrap();
                assert!((r_thin - r_bare).abs() < 1e-10, "thin {pol:?} xi {xi} k {k}");
                let r_thick = stack_reflection(&thick, pol, k, xi).unwrap();
                let r_film = stack_reflection(&film_only, pol, k, xi).unwrap();
                assert!((r_thick - r_film).abs() < 1e-10, "thick {pol:?} xi {xi} k {k}");
            }
        }
    }
}
