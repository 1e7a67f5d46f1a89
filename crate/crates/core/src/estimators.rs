//! Channel recovery: least squares, Kronecker OMP, MMPSR and the oracle.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::frob2;
use crate::timing::StageTiming;
use crate::CMat;

pub mod ls;
pub mod metrics;
pub mod mmpsr;
pub mod omp;
pub mod oracle;
pub mod sensing;
pub mod subspace;
#[cfg(test)]
mod testkit;

pub use ls::{estimate_1dls, estimate_2dls};
pub use metrics::{angle_mse, AngleMse};
pub use mmpsr::{mmpsr, Matcher, SensingContext};
pub use omp::estimate_komp;
pub use oracle::{estimate_2dols, lower_bound};
pub use subspace::{correlation_coefficient, svd_subspace, SubspaceSlice};

/// RIS-side parameters of one atom: virtual angles and inverse range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisParams {
    pub theta_t: f64,
    pub phi_t: f64,
    pub inv_r: f64,
}

/// User-side virtual angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserParams {
    pub theta_t: f64,
    pub phi_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSupport {
    pub ris_atom: usize,
    pub user_atom: usize,
    pub ris_coarse: RisParams,
    pub user_coarse: UserParams,
    pub ris_refined: RisParams,
    pub user_refined: UserParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub paths: Vec<PathSupport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub method: String,
    pub support: Option<SupportEstimate>,
    #[serde(skip)]
    pub h_hat: Vec<CMat>,
    pub nmse_per_k: Vec<f64>,
    pub nmse: f64,
    pub timings: Vec<StageTiming>,
}

impl EstimationResult {
    pub fn new(
        method: &str,
        support: Option<SupportEstimate>,
        h_hat: Vec<CMat>,
        h_true: &[CMat],
        timings: Vec<StageTiming>,
    ) -> Result<Self> {
        let nmse_per_k = nmse_per_k(h_true, &h_hat)?;
        let nmse = nmse_per_k.iter().sum::<f64>() / nmse_per_k.len() as f64;
        Ok(Self { method: method.into(), support, h_hat, nmse_per_k, nmse, timings })
    }

    pub fn stage_seconds(&self, stage: &str) -> f64 {
        self.timings.iter().filter(|t| t.stage == stage).map(|t| t.seconds).sum()
    }
}

/// Per-subcarrier `‖H − Ĥ‖²_F / ‖H‖²_F`.
pub fn nmse_per_k(h_true: &[CMat], h_hat: &[CMat]) -> Result<Vec<f64>> {
    if h_true.len() != h_hat.len() || h_true.is_empty() {
        return Err(Error::Dimension(format!("{} true vs {} estimated subcarriers", h_true.len(), h_hat.len())));
    }
    h_true
        .iter()
        .zip(h_hat)
        .map(|(h, e)| {
            if h.shape() != e.shape() {
                return Err(Error::Dimension("channel shapes differ".into()));
            }
            let energy = frob2(h);
            if energy == 0.0 {
                return Err(Error::ZeroEnergy);
            }
            Ok(frob2(&(h - e)) / energy)
        })
        .collect()
}

/// Mean per-subcarrier NMSE.
pub fn nmse(h_true: &[CMat], h_hat: &[CMat]) -> Result<f64> {
    let v = nmse_per_k(h_true, h_hat)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}
