//! Force-versus-separation table shared by the theory and analysis stages.

use crate::error::{CoreError, Result};

/// Force curve in the units of its output columns: separations in nm,
/// forces and errors in pN. Attractive forces are negative.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForceCurve {
    pub a_nm: Vec<f64>,
    pub force_pn: Vec<f64>,
    pub force_lo_pn: Option<Vec<f64>>,
    pub force_hi_pn: Option<Vec<f64>>,
    pub err_sys_pn: Option<Vec<f64>>,
    /// Separation-independent random error.
    pub err_rand_pn: Option<f64>,
    pub err_tot_pn: Option<Vec<f64>>,
}

impl ForceCurve {
    pub fn new(a_nm: Vec<f64>, force_pn: Vec<f64>) -> Result<Self> {
        if a_nm.len() != force_pn.len() {
            return Err(CoreError::Config("force curve columns differ in length".into()));
        }
        Ok(Self { a_nm, force_pn, ..Default::default() })
    }

    pub fn len(&self) -> usize {
        self.a_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_nm.is_empty()
    }

    pub fn has_band(&self) -> bool {
        self.force_lo_pn.is_some() && self.force_hi_pn.is_some()
    }

    pub fn has_errors(&self) -> bool {
        self.err_sys_pn.is_some() && self.err_rand_pn.is_some() && self.err_tot_pn.is_some()
    }

    /// Checks column alignment.
    pub fn validate(&self) -> Result<()> {
        let n = self.a_nm.len();
        let ok = self.force_pn.len() == n
            && self.force_lo_pn.as_ref().is_none_or(|v| v.len() == n)
            && self.force_hi_pn.as_ref().is_none_or(|v| v.len() == n)
            && self.err_sys_pn.as_ref().is_none_or(|v| v.len() == n)
            && self.err_tot_pn.as_ref().is_none_or(|v| v.len() == n);
        if ok {
            Ok(())
        } else {
            Err(CoreError::Config("force curve columns are misaligned".into()))
        }
    }
}
