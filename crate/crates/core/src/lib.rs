//! Casimir forces between a coated sphere and a layered plate, sphere–plate
//! electrostatics, and the reduction of AFM deflection sweeps to calibrated
//! Casimir-force curves.
//!
//! The crate is organised by stage:
//!
//! * [`materials`]: ε(iξ) models including Kramers–Kronig transformed spectra
//! * [`lifshitz`]: Matsubara-sum free energy and the sphere–plate force
//! * [`electrostatics`]: exact sphere–plate series for a potential difference
//! * [`roughness`]: geometrical averaging over surface height distributions
//! * [`synth`]: synthetic raw sweeps from known ground truth
//! * [`analysis`]: calibration, Casimir extraction and error budget
//! * [`io`]: file formats shared with the command-line tool

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod curve;
pub mod electrostatics;
pub mod error;
pub mod interp;
pub mod io;
pub mod lifshitz;
pub mod materials;
pub mod quadrature;
pub mod roughness;
pub mod special;
pub mod synth;

pub use constants::{PhysicalConstants, CODATA};
pub use error::{CoreError, Result};
pub use curve::ForceCurve;
pub use lifshitz::{Layer, LayerStack, LifshitzSettings, SphereGeometry};
pub use materials::{eps_imaginary, MaterialModel};
