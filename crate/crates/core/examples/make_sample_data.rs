//! Writes the sample material tables shipped in `data/`.
//!
//! Usage: cargo run -p casimir-core --example make_sample_data -- [DIR]

use std::fs;
use std::path::PathBuf;

use casimir_core::io::{write_dielectric_table, write_spectrum};
use casimir_core::materials::{DrudeParams, OpticalSpectrum, Oscillator};

/// Two-oscillator fit of fused quartz on the imaginary axis (Hough and White).
fn quartz(xi: f64) -> f64 {
    let (c_ir, w_ir) = (1.93, 0.1378);
    let (c_uv, w_uv) = (1.359, 13.38);
    1.0 + c_ir / (1.0 + (xi / w_ir).powi(2)) + c_uv / (1.0 + (xi / w_uv).powi(2))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    fs::create_dir_all(&dir)?;

    let mut xi = vec![0.0];
    xi.extend(log_grid(1e-4, 1e3, 351));
    let eps: Vec<f64> = xi.iter().map(|&x| quartz(x)).collect();
    write_dielectric_table(&dir.join("quartz.csv"), &xi, &eps)?;

    let carriers = DrudeParams::new(1.5, 0.128)?;
    let interband = Oscillator { strength: 2.8, resonance: 6.5, width: 2.5 };
    let omega = log_grid(0.04, 8.27, 401);
    let ito = OpticalSpectrum::sample(omega, |w| carriers.im_eps(w) + interband.im_eps(w))?;
    write_spectrum(&dir.join("ito_spectrum.csv"), &ito)?;
    Ok(())
}
