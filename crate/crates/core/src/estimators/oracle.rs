//! Oracle least squares on the true path responses and its analytic
//! lower bound.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::EstimationResult;
use crate::channel::ChannelPath;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{exact_response_into, planar_response_into};
use crate::linalg::{frob2, hermitian_extremes, matmul, LeastSquares, Op};
use crate::measurement::{MeasurementSet, SensingSetup};
use crate::timing::{Clock, Stopwatch};
use crate::CMat;

/// True RIS responses `B̄_R` (exact spherical) and user responses `Ā_U`.
pub fn true_responses(cfg: &SystemConfig, paths: &[ChannelPath], f: f64) -> (CMat, CMat) {
    let (ris, user) = (cfg.ris_shape(), cfg.user_shape());
    let mut b = CMat::zeros(ris.len(), paths.len());
    let mut a = CMat::zeros(user.len(), paths.len());
    for (j, p) in paths.iter().enumerate() {
        let pt = &p.ris_point;
        exact_response_into(&ris, f, pt.theta_t(), pt.phi_t(), pt.r, b.column_mut(j).data.into_slice_mut());
        planar_response_into(&user, f, p.user_theta_t, p.user_phi_t, a.column_mut(j).data.into_slice_mut());
    }
    (b, a)
}

/// Two-sided LS with the true responses; ill-conditioned Grams are errors.
pub fn estimate_2dols(
    cfg: &SystemConfig,
    meas: &MeasurementSet,
    paths: &[ChannelPath],
    h_true: &[CMat],
    clock: &dyn Clock,
) -> Result<EstimationResult> {
    let mut watch = Stopwatch::start(clock);
    let freqs = cfg.carriers().freqs();
    let h_hat = (0..meas.subcarriers())
        .map(|k| {
            let (b, a) = true_responses(cfg, paths, freqs[k]);
            let phi_r = matmul(meas.vtilde(k), Op::None, &b, Op::None);
            let phi_u = matmul(meas.f(), Op::Adjoint, &a, Op::None);
            let left = LeastSquares::new(&phi_r)?.solve(&meas.y[k]);
            let xi = LeastSquares::new(&phi_u)?.solve(&left.adjoint()).adjoint();
            Ok(matmul(&matmul(&b, Op::None, &xi, Op::None), Op::None, &a, Op::Adjoint))
        })
        .collect::<Result<Vec<CMat>>>()?;
    watch.lap("rebuild");
    EstimationResult::new("2d-ols", None, h_hat, h_true, watch.finish())
}

/// `K σ_n² P⁵ / (κ N_R N_U Σ_k γ_k)`.
pub fn lower_bound(cfg: &SystemConfig, paths: &[ChannelPath], setup: &SensingSetup) -> Result<f64> {
    let kappa: f64 = paths.iter().map(|p| p.beta.norm_sqr()).sum();
    if !(kappa > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let freqs = cfg.carriers().freqs();
    let k_count = freqs.len();
    let mut gamma_sum = 0.0;
    for (k, &f) in freqs.iter().enumerate() {
        let (b, a) = true_responses(cfg, paths, f);
        let (b_lo, b_hi) = hermitian_extremes(&matmul(&b, Op::Adjoint, &b, Op::None));
        let (a_lo, a_hi) = hermitian_extremes(&matmul(&a, Op::Adjoint, &a, Op::None));
        let phi_r = matmul(&setup.vtilde[k], Op::None, &b, Op::None);
        let phi_u = matmul(&setup.f, Op::Adjoint, &a, Op::None);
        gamma_sum += b_hi * a_hi * frob2(&phi_u) * frob2(&phi_r) / (b_lo * a_lo);
    }
    let sigma_n2 = setup.noise_var.iter().sum::<f64>() / setup.noise_var.len() as f64;
    let p = paths.len() as f64;
    let (n_r, n_u) = (cfg.n_ris() as f64, cfg.n_user() as f64);
    Ok(k_count as f64 * sigma_n2 * p.powi(5) / (kappa * n_r * n_u * gamma_sum))
}
