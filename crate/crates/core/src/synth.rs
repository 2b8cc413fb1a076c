//! Synthetic deflection sweeps generated from known ground truth.
//!
//! Each sample solves the cantilever force balance k·(m·S) = F(a) with
//! a = z_piezo + m·S + z0, where F is the Casimir force plus the exact
//! sphere–plate electrostatic force at ΔV = V − V₀. Noise and a linear
//! drift are added afterwards.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::analysis::{MeasurementSet, RawSweep};
use crate::electrostatics::CurvatureTable;
use crate::error::{CoreError, Result};
use crate::interp::PowerScaledTable;
use crate::lifshitz::{force_curve, LayerStack, LifshitzSettings, SphereGeometry};

/// Materials entering the Casimir part of the synthetic force.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirTruth {
    pub sphere_stack: LayerStack,
    pub plate: LayerStack,
    /// Kelvin.
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Volts.
    pub v0: f64,
    /// N/m.
    pub k: f64,
    pub z0_nm: f64,
    /// nm per signal unit.
    pub m: f64,
    /// Reported 95% half-width of m; not applied to the data.
    pub m_uncertainty: f64,
    pub sphere: SphereGeometry,
    pub radius_uncertainty: f64,
    /// `None` disables the Casimir force.
    pub casimir: Option<CasimirTruth>,
    pub voltages: Vec<f64>,
    pub repetitions: usize,
    /// Signal units.
    pub noise_sigma: f64,
    /// Signal units per nm of z_piezo.
    pub drift_slope: f64,
    pub seed: u64,
    pub z_max_nm: f64,
    pub sampling_step_nm: f64,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.z0_nm > 0.0 && self.m > 0.0) {
            return Err(CoreError::Config("ground truth needs k > 0, z0 > 0 and m > 0".into()));
        }
        if self.voltages.is_empty() || self.repetitions == 0 {
            return Err(CoreError::Config("ground truth needs voltages and at least one repetition".into()));
        }
        let mut v = self.voltages.clone();
        v.sort_by(f64::total_cmp);
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(CoreError::Config("applied voltages must be distinct".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.drift_slope.is_finite()) {
            return Err(CoreError::Config("noise must be ≥ 0 and drift finite".into()));
        }
        if !(self.sampling_step_nm > 0.0 && self.z_max_nm > self.sampling_step_nm) {
            return Err(CoreError::Config("piezo range needs z_max > step > 0".into()));
        }
        Ok(())
    }
}

/// Solution of the force balance at one piezo position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Balance {
    /// Stable equilibrium deflection m·S in nm.
    Stable(f64),
    /// No stable equilibrium: the sphere jumps to contact.
    Jump,
}

/// Precomputed force tables for one ground truth.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    truth: GroundTruth,
    electrostatic: CurvatureTable,
    casimir: Option<PowerScaledTable>,
}

const A_MIN_ELECTROSTATIC_NM: f64 = 5.0;
const A_MIN_CASIMIR_NM: f64 = 15.0;
const CASIMIR_STEP_LN: f64 = 0.02;
const FIXED_POINT_ITERATIONS: usize = 500;
const BALANCE_REL_TOL: f64 = 1e-10;

impl Synthesizer {
    pub fn new(truth: GroundTruth) -> Result<Self> {
        truth.validate()?;
        let a_max_nm = truth.z_max_nm + truth.z0_nm + 500.0;
        let electrostatic = CurvatureTable::new(truth.sphere.radius, A_MIN_ELECTROSTATIC_NM * 1e-9, a_max_nm * 1e-9)?;
        let casimir = match &truth.casimir {
            None => None,
            Some(c) => {
                let nodes = PowerScaledTable::grid(A_MIN_CASIMIR_NM * 1e-9, a_max_nm * 1e-9, CASIMIR_STEP_LN)?;
                let settings = LifshitzSettings::at_temperature(c.temperature);
                let curve = force_curve(&nodes, &truth.sphere, &c.sphere_stack, &c.plate, &settings)?;
                let forces: Vec<f64> = curve.force_pn.iter().map(|f| f * 1e-12).collect();
                Some(PowerScaledTable::from_values(A_MIN_CASIMIR_NM * 1e-9, CASIMIR_STEP_LN, 3, &nodes, &forces)?)
            }
        };
        Ok(Self { truth, electrostatic, casimir })
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// Smallest separation (nm) the force model covers.
    pub fn a_min_nm(&self) -> f64 {
        if self.casimir.is_some() {
            A_MIN_CASIMIR_NM
        } else {
            A_MIN_ELECTROSTATIC_NM
        }
    }

    /// Total force (N) and dF/da (N/m) at absolute separation `a_nm`.
    pub fn total_force(&self, delta_v: f64, a_nm: f64) -> Result<(f64, f64)> {
        let a = a_nm * 1e-9;
        let (c, dc) = self.electrostatic.eval(a)?;
        let (mut f, mut df) = (c * delta_v * delta_v, dc * delta_v * delta_v);
        if let Some(t) = &self.casimir {
            let (fc, dfc) = t.eval(a)?;
            f += fc;
            df += dfc;
        }
        Ok((f, df))
    }

    /// Force balance at piezo position `z_nm`, starting from `guess` (nm).
    pub fn solve_deflection(&self, delta_v: f64, z_nm: f64, guess: f64) -> Result<Balance> {
        let (k, z0) = (self.truth.k, self.truth.z0_nm);
        let a_min = self.a_min_nm();
        // φ(d) = F(z + d + z0)/k in nm, and its slope F'/k
        let phi = |d: f64| -> Result<Option<(f64, f64)>> {
            let a = z_nm + d + z0;
            if a < a_min {
                return Ok(None);
            }
            let (f, df) = self.total_force(delta_v, a)?;
            Ok(Some((f * 1e9 / k, df / k)))
        };
        let mut d = guess;
        for _ in 0..FIXED_POINT_ITERATIONS {
            let Some((p, q)) = phi(d)? else { return Ok(Balance::Jump) };
            if (p - d).abs() <= BALANCE_REL_TOL * p.abs() {
                return Ok(if q >= 1.0 { Balance::Jump } else { Balance::Stable(p) });
            }
            let omega = if q.abs() > 0.5 { 0.5 } else { 1.0 };
            d += omega * (p - d);
        }
        self.bisect(&phi, guess)
    }

    /// Largest root of d − φ(d) by bisection.
    fn bisect(&self, phi: &dyn Fn(f64) -> Result<Option<(f64, f64)>>, guess: f64) -> Result<Balance> {
        let g = |d: f64| -> Result<Option<f64>> { Ok(phi(d)?.map(|(p, _)| d - p)) };
        let mut hi = guess.max(0.0);
        let mut step = 1.0;
        while g(hi)?.is_some_and(|v| v <= 0.0) {
            hi += step;
            step *= 2.0;
        }
        let mut lo = hi;
        step = 1e-3;
        loop {
            lo -= step;
            step *= 2.0;
            match g(lo)? {
                None => return Ok(Balance::Jump),
                Some(v) if v < 0.0 => break,
                Some(_) => {}
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            match g(mid)? {
                Some(v) if v < 0.0 => lo = mid,
                _ => hi = mid,
            }
        }
        match phi(hi)? {
            Some((p, q)) if q < 1.0 => Ok(Balance::Stable(p)),
            _ => Ok(Balance::Jump),
        }
    }

    /// Noise-free deflection m·S (nm) along a far-to-near sweep; stops at
    /// jump-to-contact and returns the piezo position where it happened.
    pub fn deflection_profile(&self, voltage: f64) -> Result<(Vec<f64>, Vec<f64>, Option<f64>)> {
        let t = &self.truth;
        let n = (t.z_max_nm / t.sampling_step_nm).round() as usize;
        let dv = voltage - t.v0;
        let mut z_out = Vec::with_capacity(n + 1);
        let mut d_out = Vec::with_capacity(n + 1);
        let mut d = 0.0;
        for i in (0..=n).rev() {
            let z = i as f64 * t.sampling_step_nm;
            match self.solve_deflection(dv, z, d)? {
                Balance::Stable(x) => {
                    d = x;
                    z_out.push(z);
                    d_out.push(x);
                }
                Balance::Jump => return Ok((z_out, d_out, Some(z))),
            }
        }
        Ok((z_out, d_out, None))
    }

    fn rng(&self, voltage_index: usize, repetition: usize, seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((voltage_index as u64) << 32) | repetition as u64);
        rng
    }

    fn sweep_from_profile(
        &self,
        voltage: f64,
        voltage_index: usize,
        repetition: usize,
        seed: u64,
        profile: &(Vec<f64>, Vec<f64>, Option<f64>),
    ) -> Result<RawSweep> {
        let t = &self.truth;
        let (z, d, jump) = profile;
        if z.len() < 2 {
            return Err(CoreError::Numerical {
                lo: 0.0,
                hi: t.z_max_nm,
                reason: format!("sweep at V = {voltage} jumps to contact immediately"),
            });
        }
        let mut rng = self.rng(voltage_index, repetition, seed);
        let noise = Normal::new(0.0, t.noise_sigma).map_err(|e| CoreError::Config(e.to_string()))?;
        let s: Vec<f64> = z
            .iter()
            .zip(d)
            .map(|(&z, &d)| {
                let n = if t.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                d / t.m + t.drift_slope * z + n
            })
            .collect();
        let mut sweep = RawSweep::new(voltage, repetition, z.clone(), s, t.sampling_step_nm)?;
        sweep.jump_to_contact_nm = *jump;
        Ok(sweep)
    }

    /// One sweep; the noise stream depends only on the seed, the voltage
    /// index and the repetition.
    pub fn simulate_sweep(&self, voltage: f64, repetition: usize) -> Result<RawSweep> {
        let index = self.truth.voltages.iter().position(|&v| v == voltage).unwrap_or(self.truth.voltages.len());
        let profile = self.deflection_profile(voltage)?;
        self.sweep_from_profile(voltage, index, repetition, self.truth.seed, &profile)
    }

    /// Every voltage × repetition sweep with the truth's seed.
    pub fn simulate_set(&self) -> Result<MeasurementSet> {
        self.simulate_set_with_seed(self.truth.seed)
    }

    pub fn simulate_set_with_seed(&self, seed: u64) -> Result<MeasurementSet> {
        let t = &self.truth;
        let profiles: Vec<_> = t.voltages.par_iter().map(|&v| self.deflection_profile(v)).collect::<Result<_>>()?;
        let jobs: Vec<(usize, usize)> =
            (0..t.voltages.len()).flat_map(|vi| (0..t.repetitions).map(move |r| (vi, r))).collect();
        let sweeps: Vec<RawSweep> = jobs
            .par_iter()
            .map(|&(vi, r)| self.sweep_from_profile(t.voltages[vi], vi, r, seed, &profiles[vi]))
            .collect::<Result<_>>()?;
        let jumps = sweeps.iter().filter(|s| s.jump_to_contact_nm.is_some()).count();
        if jumps > 0 {
            log::info!("{jumps} sweeps end in jump-to-contact");
        }
        MeasurementSet::new(sweeps, t.m, t.m_uncertainty, t.sphere, t.radius_uncertainty)
    }
}

/// Ten voltages from −260 to −100 mV.
pub fn default_voltages() -> Vec<f64> {
    (0..10).map(|i| -0.26 + i as f64 * 0.16 / 9.0).collect()
}

/// Electrostatics-only ground truth with the reference instrument values.
pub fn reference_truth(seed: u64) -> GroundTruth {
    GroundTruth {
        v0: -0.1968,
        k: 0.0139,
        z0_nm: 29.5,
        m: 104.4,
        m_uncertainty: 0.5,
        sphere: SphereGeometry { radius: 101.23e-6 },
        radius_uncertainty: 0.0,
        casimir: None,
        voltages: default_voltages(),
        repetitions: 10,
        noise_sigma: 5.5e-12 / (0.0139 * 104.4e-9),
        drift_slope: 0.0,
        seed,
        z_max_nm: 2000.0,
        sampling_step_nm: 0.2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electrostatics::electrostatic_force;
    use crate::lifshitz::pfa_sphere_plate_force;
    use crate::materials::MaterialModel;

    fn quiet(mut t: GroundTruth) -> GroundTruth {
        t.noise_sigma = 0.0;
        t.repetitions = 2;
        t
    }

    #[test]
    fn no_forces_gives_drift_and_noise_only() {
        let mut t = reference_truth(7);
        t.voltages = vec![t.v0];
        t.drift_slope = 1e-3;
        let syn = Synthesizer::new(t.clone()).unwrap();
        let s = syn.simulate_sweep(t.v0, 0).unwrap();
        let resid: Vec<f64> = s.z_piezo_nm.iter().zip(&s.s_def).map(|(z, s)| s - 1e-3 * z).collect();
        let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
        assert!((var.sqrt() / t.noise_sigma - 1.0).abs() < 0.03);
        assert!(s.jump_to_contact_nm.is_none());
    }

    #[test]
    fn electrostatic_deflection_at_large_separation() {
        let t = quiet(reference_truth(1));
        let syn = Synthesizer::new(t.clone()).unwrap();
        let v = -0.1;
        let s = syn.simulate_sweep(v, 0).unwrap();
        let z = s.z_piezo_nm[0];
        assert_eq!(z, 2000.0);
        let a = (z + t.z0_nm) * 1e-9;
        let expected = electrostatic_force(a, t.sphere.radius, v - t.v0).unwrap() / (t.k * t.m * 1e-9);
        assert!((s.s_def[0] / expected - 1.0).abs() < 1e-3, "{} vs {expected}", s.s_def[0]);
    }

    #[test]
    fn force_balance_residual() {
        let mut t = quiet(reference_truth(1));
        t.casimir = Some(CasimirTruth {
            sphere_stack: LayerStack::half_space(MaterialModel::drude(9.0, 0.035).unwrap()),
            plate: LayerStack::half_space(MaterialModel::drude(9.0, 0.035).unwrap()),
            temperature: 300.0,
        });
        let syn = Synthesizer::new(t.clone()).unwrap();
        let dv = -0.05;
        let (z, d, jump) = syn.deflection_profile(t.v0 + dv).unwrap();
        assert!(jump.is_some());
        for (z, d) in z.iter().zip(&d).step_by(37) {
            let (f, _) = syn.total_force(dv, z + d + t.z0_nm).unwrap();
            let kms = t.k * d * 1e-9;
            assert!((kms - f).abs() <= 1e-6 * f.abs(), "z = {z}");
        }
        // the tabulated Casimir force follows the direct computation
        let c = t.casimir.as_ref().unwrap();
        let direct = pfa_sphere_plate_force(
            80e-9,
            &t.sphere,
            &c.sphere_stack,
            &c.plate,
            &LifshitzSettings::at_temperature(300.0),
        )
        .unwrap();
        let (tab, _) = syn.total_force(0.0, 80.0).unwrap();
        assert!((tab / direct - 1.0).abs() < 1e-6);
    }

    #[test]
    fn jump_separation_grows_with_voltage() {
        let t = quiet(reference_truth(1));
        let syn = Synthesizer::new(t.clone()).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for dv in [0.2, 0.5, 1.0, 2.0] {
            let (z, d, jump) = syn.deflection_profile(t.v0 + dv).unwrap();
            assert!(jump.is_some());
            let a_jump = z.last().unwrap() + d.last().unwrap() + t.z0_nm;
            assert!(a_jump > prev, "dv = {dv}: {a_jump}");
            prev = a_jump;
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let mut t = reference_truth(42);
        t.voltages = vec![-0.2, -0.1];
        t.repetitions = 2;
        let syn = Synthesizer::new(t).unwrap();
        let a = syn.simulate_set().unwrap();
        let b = syn.simulate_set().unwrap();
        assert_eq!(a, b);
        let c = syn.simulate_set_with_seed(43).unwrap();
        assert_ne!(a.sweeps[0].s_def, c.sweeps[0].s_def);
        assert_ne!(a.sweeps[0].s_def, a.sweeps[1].s_def);
    }

    #[test]
    fn noiseless_repetitions_identical() {
        let mut t = quiet(reference_truth(3));
        t.voltages = vec![-0.25, -0.15, -0.1];
        let set = Synthesizer::new(t).unwrap().simulate_set().unwrap();
        assert_eq!(set.sweeps.len(), 6);
        assert_eq!(set.sweeps[0].s_def, set.sweeps[1].s_def);
    }
}
