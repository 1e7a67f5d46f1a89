//! System hyperparameters. Defaults mirror the desk-scale simulation setup.

use alloc::format;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{CarrierGrid, UpaShape};
use crate::SPEED_OF_LIGHT;

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    num_traits::Float::powf(10.0, (dbm - 30.0) / 10.0)
}

/// Grid-refinement stepsizes. `inv_r` is a fraction of the local ring step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineSteps {
    pub ris_theta: f64,
    pub ris_phi: f64,
    pub user_theta: f64,
    pub user_phi: f64,
    pub inv_r: f64,
}

impl Default for RefineSteps {
    fn default() -> Self {
        Self { ris_theta: 0.005, ris_phi: 0.005, user_theta: 0.005, user_phi: 0.005, inv_r: 0.005 }
    }
}

/// Every physical and simulation knob. Angles are in degrees, distances in
/// meters, powers in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub ris_ny: usize,
    pub ris_nz: usize,
    pub user_ny: usize,
    pub user_nz: usize,
    pub bs_ny: usize,
    pub bs_nz: usize,
    pub f_c: f64,
    pub f_s: f64,
    pub subcarriers: usize,
    pub paths: usize,
    pub q: usize,
    pub n_x: usize,
    pub sigma_p2_dbm: f64,
    pub sigma_n2_dbm: f64,
    pub grid_ris_y: usize,
    pub grid_ris_z: usize,
    pub grid_user_y: usize,
    pub grid_user_z: usize,
    pub mu_m: f64,
    pub r_min: f64,
    pub dist_min: f64,
    pub dist_max: f64,
    pub bs_ris_distance: f64,
    /// Modulus of the BS-RIS LoS gain.
    pub bs_ris_gain: f64,
    pub bs_theta_t: f64,
    pub bs_phi_t: f64,
    pub ris_theta_t: f64,
    pub ris_phi_t: f64,
    /// Elevation coverage of the scatterers, degrees.
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    /// Azimuth coverage, degrees.
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
    /// Upper bound of the extra NLoS path length, meters.
    pub nlos_excess_max: f64,
    pub refine: RefineSteps,
    /// Cap on Kronecker sensing entries held by K-OMP.
    pub omp_entry_cap: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            ris_ny: 128,
            ris_nz: 4,
            user_ny: 8,
            user_nz: 4,
            bs_ny: 16,
            bs_nz: 16,
            f_c: 28e9,
            f_s: 2e9,
            subcarriers: 32,
            paths: 3,
            q: 48,
            n_x: 32,
            sigma_p2_dbm: 30.0,
            sigma_n2_dbm: -90.0,
            grid_ris_y: 128,
            grid_ris_z: 32,
            grid_user_y: 64,
            grid_user_z: 32,
            mu_m: 0.5,
            r_min: 5.0,
            dist_min: 5.0,
            dist_max: 20.0,
            bs_ris_distance: 45.0,
            bs_ris_gain: 1.0,
            bs_theta_t: 0.3,
            bs_phi_t: -0.2,
            ris_theta_t: 0.1,
            ris_phi_t: 0.25,
            theta_min_deg: 30.0,
            theta_max_deg: 150.0,
            phi_min_deg: -60.0,
            phi_max_deg: 60.0,
            nlos_excess_max: 10.0,
            refine: RefineSteps::default(),
            omp_entry_cap: 1 << 27,
            trials: 100,
            seed: 1,
        }
    }
}

impl SystemConfig {
    /// Element spacing, half a wavelength at the central frequency.
    pub fn spacing(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.f_c)
    }

    pub fn ris_shape(&self) -> UpaShape {
        UpaShape { n_y: self.ris_ny, n_z: self.ris_nz, spacing_d: self.spacing() }
    }

    pub fn user_shape(&self) -> UpaShape {
        UpaShape { n_y: self.user_ny, n_z: self.user_nz, spacing_d: self.spacing() }
    }

    pub fn bs_shape(&self) -> UpaShape {
        UpaShape { n_y: self.bs_ny, n_z: self.bs_nz, spacing_d: self.spacing() }
    }

    pub fn carriers(&self) -> CarrierGrid {
        CarrierGrid { f_c: self.f_c, f_s: self.f_s, k: self.subcarriers }
    }

    pub fn n_ris(&self) -> usize {
        self.ris_ny * self.ris_nz
    }

    pub fn n_user(&self) -> usize {
        self.user_ny * self.user_nz
    }

    pub fn sigma_p2(&self) -> f64 {
        dbm_to_watts(self.sigma_p2_dbm)
    }

    pub fn sigma_n2(&self) -> f64 {
        dbm_to_watts(self.sigma_n2_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("ris_ny", self.ris_ny),
            ("ris_nz", self.ris_nz),
            ("user_ny", self.user_ny),
            ("user_nz", self.user_nz),
            ("bs_ny", self.bs_ny),
            ("bs_nz", self.bs_nz),
            ("subcarriers", self.subcarriers),
            ("q", self.q),
            ("n_x", self.n_x),
            ("grid_ris_y", self.grid_ris_y),
            ("grid_ris_z", self.grid_ris_z),
            ("grid_user_y", self.grid_user_y),
            ("grid_user_z", self.grid_user_z),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(invalid(format!("{name} must be at least 1")));
            }
        }
        let finite = [
            ("f_c", self.f_c),
            ("f_s", self.f_s),
            ("sigma_p2_dbm", self.sigma_p2_dbm),
            ("sigma_n2_dbm", self.sigma_n2_dbm),
            ("mu_m", self.mu_m),
            ("r_min", self.r_min),
            ("dist_min", self.dist_min),
            ("dist_max", self.dist_max),
            ("bs_ris_distance", self.bs_ris_distance),
            ("bs_ris_gain", self.bs_ris_gain),
            ("nlos_excess_max", self.nlos_excess_max),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        if self.f_c <= 0.0 || self.f_s < 0.0 {
            return Err(invalid("f_c must be positive and f_s nonnegative"));
        }
        self.carriers().validate()?;
        if !(self.mu_m > 0.0 && self.mu_m < 1.0) {
            return Err(invalid("mu_m must lie in (0, 1)"));
        }
        if self.r_min <= 0.0 {
            return Err(invalid("r_min must be positive"));
        }
        if !(self.dist_min > 0.0 && self.dist_min <= self.dist_max) {
            return Err(invalid("distance range must satisfy 0 < dist_min <= dist_max"));
        }
        if self.nlos_excess_max < 0.0 {
            return Err(invalid("nlos_excess_max must be nonnegative"));
        }
        for (name, v) in [
            ("bs_theta_t", self.bs_theta_t),
            ("bs_phi_t", self.bs_phi_t),
            ("ris_theta_t", self.ris_theta_t),
            ("ris_phi_t", self.ris_phi_t),
        ] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} must lie in [-1, 1]")));
            }
        }
        if !(self.theta_min_deg <= self.theta_max_deg && self.phi_min_deg <= self.phi_max_deg) {
            return Err(invalid("angle coverage bounds are inverted"));
        }
        let r = &self.refine;
        for v in [r.ris_theta, r.ris_phi, r.user_theta, r.user_phi, r.inv_r] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid("refinement stepsizes must be positive"));
            }
        }
        Ok(())
    }
}
