//! Wideband sparse dictionaries.
//!
//! Both dictionaries share one label set across subcarriers (the common
//! support); columns are regenerated on demand at each subcarrier frequency,
//! so memory is `O(G)` labels rather than `O(K N G)` entries.
//!
//! The elevation virtual angle is sampled on the z-axis grid and the azimuth
//! virtual angle on the y-axis grid. Column `(i_y, i_z)` of the angular
//! dictionary sits at index `i_y * G_z + i_z`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{invalid, Result};
use crate::geometry::{fresnel_response_into, planar_response_into, UpaShape};
use crate::squint::axis_gain;
use crate::{CMat, SPEED_OF_LIGHT};

/// Grid-point parameters of one spherical-domain atom. `inv_r = 0` is the
/// far-field atom of its direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomLabel {
    pub theta_t: f64,
    pub phi_t: f64,
    pub inv_r: f64,
    pub i_z: u32,
    pub i_y: u32,
    pub i_r: u32,
}

/// One angular direction of the spherical grid and its distance rings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta_t: f64,
    pub phi_t: f64,
    /// Inverse-distance spacing between rings; `+∞` for a lone far-field atom.
    /// Serialized as `null` when infinite.
    #[serde(with = "infinite_as_null")]
    pub ring_step: f64,
    pub first_atom: usize,
    pub atoms: usize,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Angular grid point `i` of `g`, starting at −1 with spacing `2/g`.
pub fn grid_from_minus_one(i: usize, g: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / g as f64
}

/// Angular grid point `i` of `g`, ending at +1 with spacing `2/g`.
pub fn grid_to_plus_one(i: usize, g: usize) -> f64 {
    -1.0 + 2.0 * (i + 1) as f64 / g as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularDictionary {
    pub shape: UpaShape,
    pub grid_y: usize,
    pub grid_z: usize,
    /// `(theta_t, phi_t)` per atom.
    pub labels: Vec<(f64, f64)>,
}

impl AngularDictionary {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(i_y, i_z)` of atom `g`.
    pub fn grid_index(&self, g: usize) -> (usize, usize) {
        (g / self.grid_z, g % self.grid_z)
    }

    pub fn column_into(&self, g: usize, f: f64, out: &mut [crate::C64]) {
        let (t, p) = self.labels[g];
        planar_response_into(&self.shape, f, t, p, out);
    }

    /// `A_U` at frequency `f`, `N × G`.
    pub fn matrix(&self, f: f64) -> CMat {
        let mut m = CMat::zeros(self.shape.len(), self.len());
        for g in 0..self.len() {
            self.column_into(g, f, m.column_mut(g).data.into_slice_mut());
        }
        m
    }
}

pub fn build_angular_dictionary(cfg: &SystemConfig) -> Result<AngularDictionary> {
    angular_dictionary(cfg.user_shape(), cfg.grid_user_y, cfg.grid_user_z)
}

pub fn angular_dictionary(shape: UpaShape, grid_y: usize, grid_z: usize) -> Result<AngularDictionary> {
    if grid_y == 0 || grid_z == 0 {
        return Err(invalid("angular grid needs at least one point per axis"));
    }
    let mut labels = Vec::with_capacity(grid_y * grid_z);
    for iy in 0..grid_y {
        for iz in 0..grid_z {
            labels.push((grid_from_minus_one(iz, grid_z), grid_from_minus_one(iy, grid_y)));
        }
    }
    Ok(AngularDictionary { shape, grid_y, grid_z, labels })
}

/// Coherence predicted by the separable Fresnel approximation between two
/// same-direction atoms whose inverse distances differ by `delta`.
pub fn ring_coherence(shape: &UpaShape, f_c: f64, theta_t: f64, phi_t: f64, delta: f64) -> f64 {
    let s = shape.spacing_d * shape.spacing_d * f_c / SPEED_OF_LIGHT;
    axis_gain(s * (1.0 - phi_t * phi_t) * delta, shape.n_y) * axis_gain(s * (1.0 - theta_t * theta_t) * delta, shape.n_z)
}

const DEGENERATE: f64 = 1e-12;

/// Smallest inverse-distance separation whose predicted coherence equals
/// `mu_m`. Returns `+∞` when no finite separation decorrelates the atoms.
pub fn distance_ring_step(mu_m: f64, theta_t: f64, phi_t: f64, cfg: &SystemConfig) -> Result<f64> {
    ring_step_for(&cfg.ris_shape(), cfg.f_c, mu_m, theta_t, phi_t)
}

pub fn ring_step_for(shape: &UpaShape, f_c: f64, mu_m: f64, theta_t: f64, phi_t: f64) -> Result<f64> {
    if !(mu_m > 0.0 && mu_m < 1.0) {
        return Err(invalid("mu_m must lie in (0, 1)"));
    }
    let (ay, az) = (1.0 - phi_t * phi_t, 1.0 - theta_t * theta_t);
    let active_y = ay > DEGENERATE && shape.n_y > 1;
    let active_z = az > DEGENERATE && shape.n_z > 1;
    if !active_y && !active_z {
        return Ok(f64::INFINITY);
    }
    let coh = |delta: f64| ring_coherence(shape, f_c, theta_t, phi_t, delta);
    // Walk up geometrically to bracket the first crossing, then bisect.
    let mut lo = 0.0;
    let mut hi = 1e-9;
    while coh(hi) >= mu_m {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if coh(mid) >= mu_m {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Spherical-domain dictionary with coherence-controlled distance rings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalDictionary {
    pub shape: UpaShape,
    pub f_c: f64,
    pub grid_y: usize,
    pub grid_z: usize,
    pub mu_m: f64,
    pub r_min: f64,
    pub directions: Vec<Direction>,
    pub labels: Vec<AtomLabel>,
    /// Index into `directions` for every atom.
    pub atom_direction: Vec<u32>,
}

impl SphericalDictionary {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn column_into(&self, g: usize, f: f64, out: &mut [crate::C64]) {
        let l = &self.labels[g];
        fresnel_response_into(&self.shape, f, l.theta_t, l.phi_t, l.inv_r, out);
    }

    /// Columns `range` of `B_R` at frequency `f`.
    pub fn block(&self, range: core::ops::Range<usize>, f: f64) -> CMat {
        let mut m = CMat::zeros(self.shape.len(), range.len());
        for (j, g) in range.enumerate() {
            self.column_into(g, f, m.column_mut(j).data.into_slice_mut());
        }
        m
    }

    /// Full `B_R` at frequency `f`, `N_R × G_R`.
    pub fn matrix(&self, f: f64) -> CMat {
        self.block(0..self.len(), f)
    }

    pub fn direction_of(&self, g: usize) -> &Direction {
        &self.directions[self.atom_direction[g] as usize]
    }
}

pub fn build_spherical_dictionary(cfg: &SystemConfig) -> Result<SphericalDictionary> {
    spherical_dictionary(cfg.ris_shape(), cfg.f_c, cfg.grid_ris_y, cfg.grid_ris_z, cfg.mu_m, cfg.r_min)
}

pub fn spherical_dictionary(
    shape: UpaShape,
    f_c: f64,
    grid_y: usize,
    grid_z: usize,
    mu_m: f64,
    r_min: f64,
) -> Result<SphericalDictionary> {
    if grid_y == 0 || grid_z == 0 {
        return Err(invalid("spherical grid needs at least one point per axis"));
    }
    if !(r_min > 0.0 && r_min.is_finite()) {
        return Err(invalid("r_min must be positive"));
    }
    let mut directions = Vec::with_capacity(grid_y * grid_z);
    let mut labels = Vec::new();
    let mut atom_direction = Vec::new();
    for iz in 0..grid_z {
        let theta_t = grid_to_plus_one(iz, grid_z);
        for iy in 0..grid_y {
            let phi_t = grid_to_plus_one(iy, grid_y);
            let step = ring_step_for(&shape, f_c, mu_m, theta_t, phi_t)?;
            let first_atom = labels.len();
            let mut push = |inv_r: f64, i_r: usize| {
                labels.push(AtomLabel { theta_t, phi_t, inv_r, i_z: iz as u32, i_y: iy as u32, i_r: i_r as u32 });
                atom_direction.push(directions.len() as u32);
            };
            let mut i_r = 0;
            if step.is_finite() {
                loop {
                    let inv_r = 1.0 / r_min - i_r as f64 * step;
                    if inv_r <= 0.0 {
                        break;
                    }
                    push(inv_r, i_r);
                    i_r += 1;
                }
            }
            push(0.0, i_r);
            let atoms = labels.len() - first_atom;
            directions.push(Direction { theta_t, phi_t, ring_step: step, first_atom, atoms });
        }
    }
    Ok(SphericalDictionary { shape, f_c, grid_y, grid_z, mu_m, r_min, directions, labels, atom_direction })
}
