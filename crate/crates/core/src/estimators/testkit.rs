//! Planted-channel fixtures shared by the estimator tests.

use alloc::sync::Arc;
use alloc::vec::Vec;

use super::SensingContext;
use crate::channel::{BsRisLink, ChannelPath, ChannelRealization, ResponseModel};
use crate::config::SystemConfig;
use crate::dictionary::{build_angular_dictionary, build_spherical_dictionary};
use crate::geometry::SphericalPoint;
use crate::measurement::{observe, MeasurementSet, SensingSetup, TrainingSchedule};
use crate::C64;

pub fn small_cfg(subcarriers: usize, noise_dbm: f64) -> SystemConfig {
    SystemConfig {
        ris_ny: 128,
        ris_nz: 2,
        user_ny: 4,
        user_nz: 2,
        bs_ny: 2,
        bs_nz: 2,
        subcarriers,
        paths: 2,
        q: 32,
        n_x: 8,
        grid_ris_y: 32,
        grid_ris_z: 4,
        grid_user_y: 8,
        grid_user_z: 4,
        sigma_n2_dbm: noise_dbm,
        ..Default::default()
    }
}

pub struct Planted {
    pub cfg: SystemConfig,
    pub ctx: SensingContext,
    pub channel: ChannelRealization,
    pub meas: MeasurementSet,
}

/// Channel built from dictionary atoms under the Fresnel model, so the
/// support is exactly representable.
pub fn plant(cfg: SystemConfig, atoms: &[(usize, usize)], gains: &[C64]) -> Planted {
    let ris_dict = build_spherical_dictionary(&cfg).unwrap();
    let user_dict = build_angular_dictionary(&cfg).unwrap();
    let paths: Vec<ChannelPath> = atoms
        .iter()
        .zip(gains)
        .enumerate()
        .map(|(i, (&(r, u), &beta))| {
            let l = ris_dict.labels[r];
            let (ut, up) = user_dict.labels[u];
            ChannelPath {
                beta,
                tau: i as f64 * 3e-9,
                ris_point: SphericalPoint::from_virtual(l.theta_t, l.phi_t, 1.0 / l.inv_r).unwrap(),
                user_theta_t: ut,
                user_phi_t: up,
                los: i == 0,
            }
        })
        .collect();
    let link = BsRisLink::from_config(&cfg);
    let channel = ChannelRealization::with_model(&cfg, paths, link, ResponseModel::Fresnel).unwrap();
    let sched = TrainingSchedule::draw(&cfg, 11);
    let setup = Arc::new(SensingSetup::new(&cfg, &sched, &channel.bs_link).unwrap());
    let meas = observe(&setup, &channel.h_u, 12);
    let ctx = SensingContext::new(ris_dict, user_dict, &setup, &cfg.carriers().freqs());
    Planted { cfg, ctx, channel, meas }
}

/// Near-field RIS atom at the given grid direction and ring.
pub fn ris_atom(cfg: &SystemConfig, i_z: u32, i_y: u32, i_r: u32) -> usize {
    let d = build_spherical_dictionary(cfg).unwrap();
    d.labels
        .iter()
        .position(|l| l.i_z == i_z && l.i_y == i_y && l.i_r == i_r && l.inv_r > 0.0)
        .expect("requested ring exists")
}
