//! Ground-truth wideband channels: the near-field RIS-user multipath channel
//! and the far-field LoS BS-RIS link.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{invalid, Result};
use crate::geometry::{exact_response_into, fresnel_response_into, planar_response_into, SphericalPoint, UpaShape};
use crate::linalg::{matmul, Op};
use crate::rng::{complex_normal, normal, seeded, uniform, Rng};
use crate::{CMat, C64, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPath {
    pub beta: C64,
    pub tau: f64,
    pub ris_point: SphericalPoint,
    pub user_theta_t: f64,
    pub user_phi_t: f64,
    pub los: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsRisLink {
    pub alpha: C64,
    pub tau0: f64,
    pub bs_theta_t: f64,
    pub bs_phi_t: f64,
    pub ris_theta_t: f64,
    pub ris_phi_t: f64,
}

impl BsRisLink {
    /// LoS link with the configured gain, angles and distance.
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            alpha: C64::new(cfg.bs_ris_gain, 0.0),
            tau0: cfg.bs_ris_distance / SPEED_OF_LIGHT,
            bs_theta_t: cfg.bs_theta_t,
            bs_phi_t: cfg.bs_phi_t,
            ris_theta_t: cfg.ris_theta_t,
            ris_phi_t: cfg.ris_phi_t,
        }
    }
}

/// Which spherical model builds the RIS-side path responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ResponseModel {
    #[default]
    Exact,
    Fresnel,
}

/// `e^{-j 2π x}`.
pub(crate) fn cis_cycles(x: f64) -> C64 {
    let (s, c) = (-2.0 * PI * x).sin_cos();
    C64::new(c, s)
}

/// RIS-user channel at one frequency:
/// `scale · Σ_p β_p e^{-j2πτ_p f} b_R(f, p) a_U(f, p)ᴴ`.
pub fn ris_user_matrix(
    ris: &UpaShape,
    user: &UpaShape,
    paths: &[ChannelPath],
    f: f64,
    scale: f64,
    model: ResponseModel,
) -> CMat {
    let p = paths.len();
    let mut b = CMat::zeros(ris.len(), p);
    let mut a = CMat::zeros(user.len(), p);
    for (i, path) in paths.iter().enumerate() {
        let pt = &path.ris_point;
        let out = b.column_mut(i).data.into_slice_mut();
        match model {
            ResponseModel::Exact => exact_response_into(ris, f, pt.theta_t(), pt.phi_t(), pt.r, out),
            ResponseModel::Fresnel => fresnel_response_into(ris, f, pt.theta_t(), pt.phi_t(), pt.inv_r(), out),
        }
        let coef = path.beta * cis_cycles(path.tau * f) * scale;
        for z in b.column_mut(i).iter_mut() {
            *z *= coef;
        }
        planar_response_into(user, f, path.user_theta_t, path.user_phi_t, a.column_mut(i).data.into_slice_mut());
    }
    matmul(&b, Op::None, &a, Op::Adjoint)
}

/// `H_U[k]` for every subcarrier from the exact spherical model.
pub fn synthesize_ris_user_channel(cfg: &SystemConfig, paths: &[ChannelPath]) -> Result<Vec<CMat>> {
    synthesize_ris_user_channel_with(cfg, paths, ResponseModel::Exact)
}

pub fn synthesize_ris_user_channel_with(
    cfg: &SystemConfig,
    paths: &[ChannelPath],
    model: ResponseModel,
) -> Result<Vec<CMat>> {
    if paths.is_empty() {
        return Err(invalid("channel needs at least one path"));
    }
    for p in paths {
        if !(p.tau >= 0.0) || !p.beta.norm().is_finite() || !(p.ris_point.r > 0.0) {
            return Err(invalid("path needs tau >= 0, finite gain and positive range"));
        }
    }
    let (ris, user) = (cfg.ris_shape(), cfg.user_shape());
    let scale = ((ris.len() * user.len()) as f64 / paths.len() as f64).sqrt();
    Ok(cfg.carriers().freqs().into_iter().map(|f| ris_user_matrix(&ris, &user, paths, f, scale, model)).collect())
}

/// `H_B` at one frequency, `N_B × N_R`.
pub fn bs_ris_matrix(cfg: &SystemConfig, link: &BsRisLink, f: f64) -> CMat {
    let (bs, ris) = (cfg.bs_shape(), cfg.ris_shape());
    let mut a_b = CMat::zeros(bs.len(), 1);
    let mut a_r = CMat::zeros(ris.len(), 1);
    planar_response_into(&bs, f, link.bs_theta_t, link.bs_phi_t, a_b.as_mut_slice());
    planar_response_into(&ris, f, link.ris_theta_t, link.ris_phi_t, a_r.as_mut_slice());
    a_b *= link.alpha * cis_cycles(link.tau0 * f);
    matmul(&a_b, Op::None, &a_r, Op::Adjoint)
}

/// `H_B[k]` for every subcarrier.
pub fn synthesize_bs_ris_channel(cfg: &SystemConfig, link: &BsRisLink) -> Vec<CMat> {
    cfg.carriers().freqs().into_iter().map(|f| bs_ris_matrix(cfg, link, f)).collect()
}

/// Log-distance pathloss in dB with lognormal shadowing.
pub fn pathloss_db(rng: &mut Rng, los: bool, distance: f64) -> f64 {
    let (a1, a2, sigma) = if los { (61.4, 2.0, 5.8) } else { (72.0, 2.92, 8.7) };
    a1 + 10.0 * a2 * distance.log10() + sigma * normal(rng)
}

/// Random multipath geometry and gains. The first path is the LoS path.
pub fn sample_paths(cfg: &SystemConfig, seed: u64) -> Result<Vec<ChannelPath>> {
    if cfg.paths < 1 {
        return Err(invalid("need at least one path"));
    }
    let mut rng = seeded(seed);
    let deg = PI / 180.0;
    let draw_angles = |rng: &mut Rng| {
        let theta = uniform(rng, cfg.theta_min_deg, cfg.theta_max_deg) * deg;
        let phi = uniform(rng, cfg.phi_min_deg, cfg.phi_max_deg) * deg;
        (theta, phi)
    };
    let mut out = Vec::with_capacity(cfg.paths);
    for i in 0..cfg.paths {
        let los = i == 0;
        let r = uniform(&mut rng, cfg.dist_min, cfg.dist_max);
        let (theta, phi) = draw_angles(&mut rng);
        let (ut, up) = draw_angles(&mut rng);
        let excess = if los { 0.0 } else { uniform(&mut rng, 0.0, cfg.nlos_excess_max) };
        let k1 = uniform(&mut rng, 0.0, 1.0);
        let k2 = 4.0 * normal(&mut rng);
        let aleph = k1.powf(1.8) * 10f64.powf(0.1 * k2);
        let pl = pathloss_db(&mut rng, los, r);
        let beta = complex_normal(&mut rng, aleph * 10f64.powf(-0.1 * pl));
        out.push(ChannelPath {
            beta,
            tau: (r + excess) / SPEED_OF_LIGHT,
            ris_point: SphericalPoint::new(theta, phi, r)?,
            user_theta_t: ut.cos(),
            user_phi_t: ut.sin() * up.sin(),
            los,
        });
    }
    Ok(out)
}

/// Paths, BS-RIS link and the RIS-user matrices they generate. `H_B[k]` is
/// rank one and regenerated on demand from `bs_link`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<ChannelPath>,
    pub bs_link: BsRisLink,
    pub h_u: Vec<CMat>,
}

impl ChannelRealization {
    pub fn new(cfg: &SystemConfig, paths: Vec<ChannelPath>, bs_link: BsRisLink) -> Result<Self> {
        Self::with_model(cfg, paths, bs_link, ResponseModel::Exact)
    }

    pub fn with_model(cfg: &SystemConfig, paths: Vec<ChannelPath>, bs_link: BsRisLink, model: ResponseModel) -> Result<Self> {
        let h_u = synthesize_ris_user_channel_with(cfg, &paths, model)?;
        Ok(Self { paths, bs_link, h_u })
    }

    pub fn h_b(&self, cfg: &SystemConfig, k: usize) -> CMat {
        bs_ris_matrix(cfg, &self.bs_link, cfg.carriers().freq(k))
    }

    /// `Σ_p |β_p|²`.
    pub fn kappa(&self) -> f64 {
        self.paths.iter().map(|p| p.beta.norm_sqr()).sum()
    }
}
