//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `max(rel_tol·|I|, abs_tol)`. Breakpoints supplied by
//! the caller are never straddled by a single panel, which is how tabulated
//! integrands with kinks at their nodes are handled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{CoreError, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// One K15 panel with the embedded G7 error estimate.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn checked_panel<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<Panel> {
    let (value, error) = gauss_kronrod(f, lo, hi);
    if !value.is_finite() || !error.is_finite() {
        return Err(CoreError::Numerical {
            lo,
            hi,
            reason: format!("non-finite panel value {value}"),
        });
    }
    Ok(Panel { lo, hi, value, error })
}

/// Integrates `f` over `[breakpoints[0], breakpoints[last]]`.
///
/// `breakpoints` must be ascending with at least two entries; each consecutive
/// pair seeds one panel.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if breakpoints.len() < 2 {
        return Err(CoreError::Config("quadrature needs at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::with_capacity(breakpoints.len() * 2);
    for w in breakpoints.windows(2) {
        if !(w[1] > w[0]) {
            if w[1] == w[0] {
                continue;
            }
            return Err(CoreError::Config(format!(
                "quadrature breakpoints not ascending: {} then {}",
                w[0], w[1]
            )));
        }
        heap.push(checked_panel(&mut f, w[0], w[1])?);
    }
    if heap.is_empty() {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let max_intervals = opts.max_intervals.max(heap.len() + 1);
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if error <= (opts.rel_tol * value.abs()).max(opts.abs_tol) {
            return Ok(finish(heap));
        }
        if heap.len() >= max_intervals {
            return Err(CoreError::Convergence {
                iterations: heap.len(),
                achieved: error / value.abs().max(f64::MIN_POSITIVE),
                target: opts.rel_tol,
                context: "adaptive quadrature interval budget exhausted".into(),
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval cannot be split further in floating point.
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        heap.push(checked_panel(&mut f, worst.lo, mid)?);
        heap.push(checked_panel(&mut f, mid, worst.hi)?);
    }
}

fn finish(heap: BinaryHeap<Panel>) -> QuadResult {
    let mut panels = heap.into_vec();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let intervals = panels.len();
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    QuadResult { value, error, intervals }
}
