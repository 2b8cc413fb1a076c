//! Special functions needed by the series and integrals in this crate.

use std::f64::consts::PI;

const ZETA2: f64 = PI * PI / 6.0;
const ZETA3: f64 = 1.202_056_903_159_594_3;

/// ζ(−j) for j = 0..=24, i.e. −B_{j+1}/(j+1) (zero for even j ≥ 2).
const ZETA_NEG: [f64; 25] = [
    -0.5,
    -1.0 / 12.0,
    0.0,
    1.0 / 120.0,
    0.0,
    -1.0 / 252.0,
    0.0,
    1.0 / 240.0,
    0.0,
    -1.0 / 132.0,
    0.0,
    691.0 / 32760.0,
    0.0,
    -1.0 / 12.0,
    0.0,
    3617.0 / 8160.0,
    0.0,
    -43867.0 / 14364.0,
    0.0,
    174611.0 / 6600.0,
    0.0,
    -77683.0 / 276.0,
    0.0,
    236364091.0 / 65520.0,
    0.0,
];

/// Returns (Li₂(e^{−y}), Li₃(e^{−y})) for y ≥ 0.
///
/// Near y = 0 the expansion in μ = −y around the branch point is used;
/// elsewhere the defining power series in x = e^{−y}.
pub fn polylog23_exp_neg(y: f64) -> (f64, f64) {
    debug_assert!(y >= 0.0);
    if y == 0.0 {
        return (ZETA2, ZETA3);
    }
    if y > 1.0 {
        let x = (-y).exp();
        let (mut li2, mut li3) = (0.0, 0.0);
        let mut xn = x;
        for n in 1..200 {
            let nf = n as f64;
            let t2 = xn / (nf * nf);
            li2 += t2;
            li3 += t2 / nf;
            if t2 < 1e-18 * li2 {
                break;
            }
            xn *= x;
        }
        return (li2, li3);
    }
    let mu = -y;
    let ln_neg_mu = y.ln();
    // Li2 = ζ(2) + μ(1 − ln(−μ)) + Σ_{k≥2} ζ(2−k) μ^k/k!
    // Li3 = ζ(3) + ζ(2)μ + μ²/2 (3/2 − ln(−μ)) + Σ_{k≥3} ζ(3−k) μ^k/k!
    let mut li2 = ZETA2 + mu * (1.0 - ln_neg_mu);
    let mut li3 = ZETA3 + ZETA2 * mu + 0.5 * mu * mu * (1.5 - ln_neg_mu);
    let mut pow = mu * mu / 2.0; // μ^k / k! at k = 2
    for k in 2..26usize {
        li2 += ZETA_NEG[k - 2] * pow;
        if k >= 3 {
            li3 += ZETA_NEG[k - 3] * pow;
        }
        pow *= mu / (k + 1) as f64;
    }
    (li2, li3)
}

/// coth(x) − 1/x, accurate for small x where the two terms nearly cancel.
pub fn coth_minus_inverse(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.5 {
        // x/3 − x³/45 + 2x⁵/945 − x⁷/4725 + 2x⁹/93555 − 1382x¹¹/638512875 + ...
        const C: [f64; 8] = [
            1.0 / 3.0,
            -1.0 / 45.0,
            2.0 / 945.0,
            -1.0 / 4725.0,
            2.0 / 93555.0,
            -1382.0 / 638_512_875.0,
            4.0 / 18_243_225.0,
            -3617.0 / 162_820_783_125.0,
        ];
        let x2 = x * x;
        let mut acc = 0.0;
        for c in C.iter().rev() {
            acc = acc * x2 + c;
        }
        acc * x
    } else {
        1.0 / x.tanh() - 1.0 / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polylog_direct(s: i32, x: f64) -> f64 {
        (1..200_000).map(|n| x.powi(n) / (n as f64).powi(s)).sum()
    }

    #[test]
    fn polylog_branches_agree_with_direct_series() {
        for &y in &[0.05, 0.3, 0.9, 1.0, 1.1, 2.0, 8.0] {
            let (li2, li3) = polylog23_exp_neg(y);
            let x = (-y).exp();
            let (d2, d3) = (polylog_direct(2, x), polylog_direct(3, x));
            assert!((li2 - d2).abs() < 1e-12, "Li2 at y={y}: {li2} vs {d2}");
            assert!((li3 - d3).abs() < 1e-12, "Li3 at y={y}: {li3} vs {d3}");
        }
    }

    #[test]
    fn polylog_continuous_at_switch() {
        // reference values from an arbitrary-precision polylog
        let (a2, a3) = polylog23_exp_neg(1.0 - 1e-12);
        let (b2, b3) = polylog23_exp_neg(1.0 + 1e-12);
        assert!((a2 - 0.408_754_287_349_355).abs() < 2e-15, "{a2}");
        assert!((a3 - 0.386_995_424_210_609).abs() < 2e-15, "{a3}");
        assert!((b2 - 0.408_754_287_348_438).abs() < 2e-15, "{b2}");
        assert!((b3 - 0.386_995_424_209_791).abs() < 2e-15, "{b3}");
    }

    #[test]
    fn coth_helper_matches_direct_away_from_zero() {
        for &x in &[0.1, 0.3, 0.49, 0.5, 2.0] {
            let direct = 1.0 / f64::tanh(x) - 1.0 / x;
            assert!((coth_minus_inverse(x) - direct).abs() < 1e-12 * direct.abs().max(1e-3));
        }
        let expected = 1e-6 / 3.0 - 1e-18 / 45.0;
        assert!((coth_minus_inverse(1e-6) - expected).abs() < 1e-15 * expected);
    }
}
