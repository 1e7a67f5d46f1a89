//! UPA steering vectors in the near and far field.
//!
//! Elements sit in the y-z plane at `(0, m_y d, m_z d)` with symmetric
//! half-integer indices. Vector entry `iy * n_z + iz` holds element
//! `(m_y, m_z) = (iy - (n_y-1)/2, iz - (n_z-1)/2)`, so every response is the
//! Kronecker product of a y-factor and a z-factor when it separates.
//!
//! All three constructors share one phase convention: the planar response is
//! the far-field limit of the spherical ones.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Result};
use crate::{CVec, C64, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaShape {
    pub n_y: usize,
    pub n_z: usize,
    pub spacing_d: f64,
}

impl UpaShape {
    pub fn new(n_y: usize, n_z: usize, spacing_d: f64) -> Result<Self> {
        if n_y == 0 || n_z == 0 {
            return Err(invalid("array needs at least one element per axis"));
        }
        if !(spacing_d > 0.0 && spacing_d.is_finite()) {
            return Err(invalid("element spacing must be positive"));
        }
        Ok(Self { n_y, n_z, spacing_d })
    }

    pub fn len(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Symmetric index of element `i` along an axis of `n` elements.
    #[inline]
    pub fn centered(i: usize, n: usize) -> f64 {
        i as f64 - (n as f64 - 1.0) / 2.0
    }

    /// `(m_y, m_z)` for every entry, in vector order.
    pub fn indices(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n_y).flat_map(move |iy| {
            (0..self.n_z).map(move |iz| (Self::centered(iy, self.n_y), Self::centered(iz, self.n_z)))
        })
    }

    /// Aperture diagonal.
    pub fn aperture(&self) -> f64 {
        let ly = (self.n_y as f64 - 1.0) * self.spacing_d;
        let lz = (self.n_z as f64 - 1.0) * self.spacing_d;
        (ly * ly + lz * lz).sqrt()
    }

    /// Rayleigh distance `2 D² f / c`.
    pub fn rayleigh_distance(&self, f: f64) -> f64 {
        2.0 * self.aperture().powi(2) * f / SPEED_OF_LIGHT
    }
}

/// Elevation, azimuth (radians) and range (meters) seen from an array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub theta: f64,
    pub phi: f64,
    pub r: f64,
}

impl SphericalPoint {
    pub fn new(theta: f64, phi: f64, r: f64) -> Result<Self> {
        ensure_finite(theta, "theta")?;
        ensure_finite(phi, "phi")?;
        ensure_finite(r, "r")?;
        if r <= 0.0 {
            return Err(invalid("range must be positive"));
        }
        Ok(Self { theta, phi, r })
    }

    /// Builds a point from virtual angles. The physical azimuth is chosen in
    /// `[-π/2, π/2]`; requires `theta_t² + phi_t² <= 1`.
    pub fn from_virtual(theta_t: f64, phi_t: f64, r: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&theta_t) {
            return Err(invalid("theta_t outside [-1, 1]"));
        }
        let theta = theta_t.acos();
        let s = theta.sin();
        let ratio = if s > 0.0 { phi_t / s } else { 0.0 };
        if ratio.abs() > 1.0 + 1e-12 {
            return Err(invalid("virtual angles outside the visible region"));
        }
        Self::new(theta, ratio.clamp(-1.0, 1.0).asin(), r)
    }

    pub fn theta_t(&self) -> f64 {
        self.theta.cos()
    }

    pub fn phi_t(&self) -> f64 {
        self.theta.sin() * self.phi.sin()
    }

    pub fn inv_r(&self) -> f64 {
        1.0 / self.r
    }
}

/// OFDM subcarrier grid. Subcarrier `k` is zero-based here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierGrid {
    pub f_c: f64,
    pub f_s: f64,
    pub k: usize,
}

impl CarrierGrid {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.f_c, "f_c")?;
        ensure_finite(self.f_s, "f_s")?;
        if self.k == 0 {
            return Err(invalid("need at least one subcarrier"));
        }
        if self.freq(0) <= 0.0 {
            return Err(invalid("lowest subcarrier frequency is not positive"));
        }
        Ok(())
    }

    /// Frequency of zero-based subcarrier `k`.
    pub fn freq(&self, k: usize) -> f64 {
        let offset = k as f64 - (self.k as f64 - 1.0) / 2.0;
        self.f_c + self.f_s / self.k as f64 * offset
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.k).map(|k| self.freq(k)).collect()
    }

    /// Zero-based central subcarrier; exact `f_c` when `K` is odd.
    pub fn center(&self) -> usize {
        (self.k - 1) / 2
    }
}

fn unit_phasors(shape: &UpaShape, out: &mut [C64], mut cycles: impl FnMut(f64, f64) -> f64) {
    let scale = 1.0 / (shape.len() as f64).sqrt();
    for (slot, (my, mz)) in out.iter_mut().zip(shape.indices()) {
        let (s, c) = (-2.0 * PI * cycles(my, mz)).sin_cos();
        *slot = C64::new(c * scale, s * scale);
    }
}

fn check_len(shape: &UpaShape, out: &[C64]) {
    assert_eq!(out.len(), shape.len(), "output slice length must equal element count");
}

/// Exact spherical response written into `out`; `r` must be positive.
pub fn exact_response_into(shape: &UpaShape, f: f64, theta_t: f64, phi_t: f64, r: f64, out: &mut [C64]) {
    check_len(shape, out);
    let d = shape.spacing_d;
    let k = f / SPEED_OF_LIGHT;
    unit_phasors(shape, out, |my, mz| {
        let (y, z) = (my * d, mz * d);
        // r_m² - r², divided stably by (r_m + r).
        let excess = -2.0 * r * (y * phi_t + z * theta_t) + y * y + z * z;
        let rm = (r * r + excess).sqrt();
        k * excess / (rm + r)
    });
}

/// Second-order (Fresnel) response written into `out`. `inv_r = 0` gives the
/// planar response.
pub fn fresnel_response_into(shape: &UpaShape, f: f64, theta_t: f64, phi_t: f64, inv_r: f64, out: &mut [C64]) {
    check_len(shape, out);
    let d = shape.spacing_d;
    let k = f / SPEED_OF_LIGHT;
    let cz = 0.5 * (1.0 - theta_t * theta_t) * inv_r;
    let cy = 0.5 * (1.0 - phi_t * phi_t) * inv_r;
    let cyz = theta_t * phi_t * inv_r;
    unit_phasors(shape, out, |my, mz| {
        let (y, z) = (my * d, mz * d);
        k * (-y * phi_t - z * theta_t + z * z * cz + y * y * cy - y * z * cyz)
    });
}

/// Planar response written into `out`.
pub fn planar_response_into(shape: &UpaShape, f: f64, theta_t: f64, phi_t: f64, out: &mut [C64]) {
    check_len(shape, out);
    let kd = f * shape.spacing_d / SPEED_OF_LIGHT;
    unit_phasors(shape, out, |my, mz| -kd * (mz * theta_t + my * phi_t));
}

fn check_point(f: f64, point: &SphericalPoint) -> Result<()> {
    ensure_finite(f, "frequency")?;
    ensure_finite(point.theta, "theta")?;
    ensure_finite(point.phi, "phi")?;
    ensure_finite(point.r, "r")?;
    if point.r <= 0.0 {
        return Err(invalid("range must be positive"));
    }
    Ok(())
}

/// Spherical-wave response using the exact element-to-source distance.
pub fn exact_spherical_response(shape: &UpaShape, f: f64, point: &SphericalPoint) -> Result<CVec> {
    check_point(f, point)?;
    let mut out = vec![C64::new(0.0, 0.0); shape.len()];
    exact_response_into(shape, f, point.theta_t(), point.phi_t(), point.r, &mut out);
    Ok(CVec::from_vec(out))
}

/// Spherical-wave response under the second-order distance expansion.
pub fn fresnel_spherical_response(shape: &UpaShape, f: f64, point: &SphericalPoint) -> Result<CVec> {
    check_point(f, point)?;
    let mut out = vec![C64::new(0.0, 0.0); shape.len()];
    fresnel_response_into(shape, f, point.theta_t(), point.phi_t(), point.inv_r(), &mut out);
    Ok(CVec::from_vec(out))
}

/// Far-field (plane-wave) response at virtual angles.
pub fn planar_response(shape: &UpaShape, f: f64, theta_t: f64, phi_t: f64) -> Result<CVec> {
    ensure_finite(f, "frequency")?;
    ensure_finite(theta_t, "theta_t")?;
    ensure_finite(phi_t, "phi_t")?;
    if !(-1.0..=1.0).contains(&theta_t) || !(-1.0..=1.0).contains(&phi_t) {
        return Err(invalid("virtual angles must lie in [-1, 1]"));
    }
    let mut out = vec![C64::new(0.0, 0.0); shape.len()];
    planar_response_into(shape, f, theta_t, phi_t, &mut out);
    Ok(CVec::from_vec(out))
}
