//! Unstructured least squares on the full RIS-user channel.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{scale_rows, LeastSquares, GRAM_COND_LIMIT};
use crate::measurement::MeasurementSet;
use crate::{CMat, C64};

/// Two-sided LS `Ĥ = Ṽ⁺ Y (Fᴴ)⁺ᴴ`. Factors `V` and `Fᴴ` once and applies
/// the per-subcarrier diagonal `diag(h̃_B[k])⁻¹` separately.
pub fn estimate_2dls(meas: &MeasurementSet) -> Result<Vec<CMat>> {
    let setup = &meas.setup;
    let (q, n_r) = setup.v_rows.shape();
    let (n_u, n_x) = setup.f.shape();
    if q < n_r || n_x < n_u {
        return Err(Error::Dimension(format!("2D-LS needs Q >= N_R and N_X >= N_U, got Q={q}, N_R={n_r}, N_X={n_x}, N_U={n_u}")));
    }
    let v_ls = LeastSquares::new(&setup.v_rows)?;
    let f_ls = LeastSquares::new(&setup.f.adjoint())?;
    meas.y
        .iter()
        .enumerate()
        .map(|(k, y)| {
            let h = &setup.h_b_tilde[k];
            let hi = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let lo = h.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            let cond = v_ls.gram_cond() * (hi / lo).powi(2);
            if !(cond < GRAM_COND_LIMIT) {
                return Err(Error::IllConditioned { cond });
            }
            let mut x = v_ls.solve(y);
            let inv: Vec<C64> = h.iter().map(|z| z.inv()).collect();
            scale_rows(&mut x, &inv);
            Ok(f_ls.solve(&x.adjoint()).adjoint())
        })
        .collect()
}

/// Vectorized LS `vec(Ĥ) = (Fᵀ ⊗ Ṽ)⁺ vec(Y)`. The Kronecker operator is
/// materialized, so `max_entries` guards its size.
pub fn estimate_1dls(meas: &MeasurementSet, max_entries: usize) -> Result<Vec<CMat>> {
    let (n_u, n_x) = meas.f().shape();
    let f_t = meas.f().transpose();
    (0..meas.subcarriers())
        .map(|k| {
            let vt = meas.vtilde(k);
            let (q, n_r) = vt.shape();
            let need = q * n_x * n_r * n_u;
            if need > max_entries {
                return Err(Error::MemoryBudget { need, cap: max_entries });
            }
            let op = f_t.kronecker(vt);
            let y = &meas.y[k];
            let yv = CMat::from_column_slice(q * n_x, 1, y.as_slice());
            let hv = LeastSquares::new(&op)?.solve(&yv);
            Ok(CMat::from_column_slice(n_r, n_u, hv.as_slice()))
        })
        .collect()
}
