//! Interpolation helpers shared by the table-backed models.

use crate::error::{CoreError, Result};

/// Index `i` such that `xs[i] <= x <= xs[i+1]`, for strictly ascending `xs`.
pub fn bracket(xs: &[f64], x: f64) -> Option<usize> {
    let n = xs.len();
    if n < 2 || !(x >= xs[0] && x <= xs[n - 1]) {
        return None;
    }
    let i = xs.partition_point(|&v| v <= x);
    Some(i.saturating_sub(1).min(n - 2))
}

/// Piecewise-linear interpolation without extrapolation.
pub fn linear(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let i = bracket(xs, x).ok_or_else(|| {
        CoreError::Range(format!(
            "x = {x} outside [{}, {}]",
            xs.first().copied().unwrap_or(f64::NAN),
            xs.last().copied().unwrap_or(f64::NAN)
        ))
    })?;
    let (x0, x1) = (xs[i], xs[i + 1]);
    let t = (x - x0) / (x1 - x0);
    if t == 0.0 {
        return Ok(ys[i]);
    }
    if t == 1.0 {
        return Ok(ys[i + 1]);
    }
    Ok(ys[i] + t * (ys[i + 1] - ys[i]))
}

/// Checks that `xs` is strictly ascending and finite.
pub fn ensure_ascending(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Config(format!("{what}: non-finite abscissa")));
    }
    if let Some(w) = xs.windows(2).find(|w| w[1] <= w[0]) {
        return Err(CoreError::Config(format!(
            "{what}: abscissae must be strictly ascending ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Four-point Lagrange interpolation on a uniform grid, returning the value
/// and the first derivative. Used for the dense force tables in `synth`.
#[derive(Debug, Clone)]
pub struct UniformCubic {
    x0: f64,
    step: f64,
    ys: Vec<f64>,
}

impl UniformCubic {
    pub fn new(x0: f64, step: f64, ys: Vec<f64>) -> Result<Self> {
        if ys.len() < 4 || !(step > 0.0) {
            return Err(CoreError::Config("uniform cubic table needs ≥4 samples and step > 0".into()));
        }
        Ok(Self { x0, step, ys })
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.step * (self.ys.len() - 1) as f64
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        if !(x >= self.x0 && x <= self.x_max()) {
            return Err(CoreError::Range(format!(
                "x = {x} outside table [{}, {}]",
                self.x0,
                self.x_max()
            )));
        }
        let n = self.ys.len();
        let u = (x - self.x0) / self.step;
        let i = (u.floor() as usize).clamp(1, n - 3) - 1;
        let t = u - i as f64; // position relative to node i, in [0, 3]
        let y = &self.ys[i..i + 4];
        // Lagrange basis on nodes 0,1,2,3.
        let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        let d0 = -((t - 2.0) * (t - 3.0) + (t - 1.0) * (t - 3.0) + (t - 1.0) * (t - 2.0)) / 6.0;
        let d1 = ((t - 2.0) * (t - 3.0) + t * (t - 3.0) + t * (t - 2.0)) / 2.0;
        let d2 = -((t - 1.0) * (t - 3.0) + t * (t - 3.0) + t * (t - 1.0)) / 2.0;
        let d3 = ((t - 1.0) * (t - 2.0) + t * (t - 2.0) + t * (t - 1.0)) / 6.0;
        let value = l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3];
        let deriv = (d0 * y[0] + d1 * y[1] + d2 * y[2] + d3 * y[3]) / self.step;
        Ok((value, deriv))
    }
}

/// f(a) tabulated as g(ln a) = f(a)·aᵖ on a uniform grid in ln a, which
/// keeps power-law-like functions nearly constant between nodes.
#[derive(Debug, Clone)]
pub struct PowerScaledTable {
    power: i32,
    inner: UniformCubic,
}

impl PowerScaledTable {
    /// Nodes a_i = a_min·e^{i·step_ln} covering [a_min, a_max].
    pub fn grid(a_min: f64, a_max: f64, step_ln: f64) -> Result<Vec<f64>> {
        if !(a_min > 0.0 && a_max > a_min && step_ln > 0.0) {
            return Err(CoreError::Config("log grid needs 0 < a_min < a_max and step > 0".into()));
        }
        let n = ((a_max / a_min).ln() / step_ln).ceil() as usize + 1;
        Ok((0..n.max(4)).map(|i| a_min * (i as f64 * step_ln).exp()).collect())
    }

    /// `values` are f at the nodes returned by [`PowerScaledTable::grid`].
    pub fn from_values(a_min: f64, step_ln: f64, power: i32, nodes: &[f64], values: &[f64]) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(CoreError::Config("table nodes and values differ in length".into()));
        }
        let ys = nodes.iter().zip(values).map(|(a, f)| f * a.powi(power)).collect();
        Ok(Self { power, inner: UniformCubic::new(a_min.ln(), step_ln, ys)? })
    }

    pub fn a_min(&self) -> f64 {
        self.inner.x_min().exp()
    }

    pub fn a_max(&self) -> f64 {
        self.inner.x_max().exp()
    }

    /// (f(a), df/da).
    pub fn eval(&self, a: f64) -> Result<(f64, f64)> {
        let x = a.ln();
        // guard the end nodes against ln/exp round-off
        let x = if x < self.inner.x_min() && x > self.inner.x_min() - 1e-12 {
            self.inner.x_min()
        } else if x > self.inner.x_max() && x < self.inner.x_max() + 1e-12 {
            self.inner.x_max()
        } else {
            x
        };
        let (g, dg) = self.inner.eval(x)?;
        let scale = a.powi(-self.power);
        let p = self.power as f64;
        Ok((g * scale, (dg - p * g) * scale / a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_hits_nodes_exactly() {
        let xs = [0.0, 0.5, 2.0];
        let ys = [1.0, -3.0, 7.0];
        for (x, y) in xs.iter().zip(ys) {
            assert_eq!(linear(&xs, &ys, *x).unwrap(), y);
        }
        assert!(linear(&xs, &ys, 2.1).is_err());
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let f = |x: f64| 2.0 * x * x * x - x + 4.0;
        let ys: Vec<f64> = (0..20).map(|i| f(i as f64 * 0.25)).collect();
        let t = UniformCubic::new(0.0, 0.25, ys).unwrap();
        for &x in &[0.0, 0.13, 1.7, 4.74, 4.75] {
            let (v, d) = t.eval(x).unwrap();
            assert!((v - f(x)).abs() < 1e-11);
            assert!((d - (6.0 * x * x - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn power_scaled_table_reproduces_smooth_law() {
        let nodes = PowerScaledTable::grid(10.0, 3000.0, 0.02).unwrap();
        let f = |a: f64| -1.0 / (a * a * a) * (1.0 + 0.1 * (a / 100.0).ln_1p());
        let vals: Vec<f64> = nodes.iter().map(|&a| f(a)).collect();
        let t = PowerScaledTable::from_values(10.0, 0.02, 3, &nodes, &vals).unwrap();
        for a in [10.0, 17.3, 99.9, 250.0, 2999.0] {
            let (v, d) = t.eval(a).unwrap();
            assert!((v / f(a) - 1.0).abs() < 1e-8, "{a}");
            let fd = (f(a * (1.0 + 1e-6)) - f(a * (1.0 - 1e-6))) / (2e-6 * a);
            assert!((d / fd - 1.0).abs() < 1e-5, "{a}");
        }
        assert!(t.eval(5.0).is_err());
    }
}
