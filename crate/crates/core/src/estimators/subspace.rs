//! Per-subcarrier signal subspaces and the complex correlation coefficient.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::svd_sorted;
use crate::measurement::MeasurementSet;
use crate::{CMat, C64};

/// Top-`P` factors of `Y[k] ≈ T_R T_Uᴴ`, each carrying `√σ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSlice {
    /// `Q × P`.
    pub t_ris: CMat,
    /// `N_X × P`.
    pub t_user: CMat,
    pub singular_values: Vec<f64>,
    /// Set when `P` exceeded the rank bound and zero columns were appended.
    pub padded: bool,
}

pub fn subspace_of(y: &CMat, p: usize) -> SubspaceSlice {
    let (q, n_x) = y.shape();
    let (u, s, v) = svd_sorted(y);
    let keep = p.min(s.len());
    let mut t_ris = CMat::zeros(q, p);
    let mut t_user = CMat::zeros(n_x, p);
    for j in 0..keep {
        let w = s[j].sqrt();
        t_ris.set_column(j, &(u.column(j) * C64::new(w, 0.0)));
        t_user.set_column(j, &(v.column(j) * C64::new(w, 0.0)));
    }
    SubspaceSlice { t_ris, t_user, singular_values: s, padded: keep < p }
}

/// Subspace slices for every subcarrier.
pub fn svd_subspace(meas: &MeasurementSet, p: usize) -> Vec<SubspaceSlice> {
    meas.y.iter().map(|y| subspace_of(y, p)).collect()
}

/// Complex Pearson coefficient `⟨x − x̄, y − ȳ⟩ / (‖x − x̄‖ ‖y − ȳ‖)` with the
/// conjugate on `x`.
pub fn correlation_coefficient(x: &[C64], y: &[C64]) -> Result<C64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Dimension("correlation needs equal lengths of at least 2".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<C64>() / n;
    let my = y.iter().sum::<C64>() / n;
    let mut num = C64::new(0.0, 0.0);
    let (mut ex, mut ey) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (a, b) = (a - mx, b - my);
        num += a.conj() * b;
        ex += a.norm_sqr();
        ey += b.norm_sqr();
    }
    if ex == 0.0 || ey == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(num / (ex.sqrt() * ey.sqrt()))
}
