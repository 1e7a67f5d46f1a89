//! Near-field loss of far-field (planar) RIS bases.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{exact_spherical_response, planar_response, SphericalPoint, UpaShape};
use crate::{CMat, SPEED_OF_LIGHT};

/// Default path directions `(theta, phi)` in degrees for the gain curve.
pub const DEFAULT_DIRECTIONS_DEG: [(f64, f64); 3] = [(60.0, -30.0), (90.0, 10.0), (110.0, 40.0)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainCurvePoint {
    pub distance: f64,
    pub ris_ny: usize,
    pub ris_nz: usize,
    /// `|det(B_planar^H B_exact)|`, in `[0, 1]` since all columns have unit norm.
    pub gain: f64,
}

/// Gain of planar responses at the true angles against exact spherical
/// responses at the true distance, for every `(size, distance)` pair.
/// Sizes are `(n_y, n_z)`; angles are physical, in radians.
pub fn gain_vs_distance(
    f_c: f64,
    sizes: &[(usize, usize)],
    distances: &[f64],
    directions: &[(f64, f64)],
) -> Result<Vec<GainCurvePoint>> {
    if directions.is_empty() {
        return Err(invalid("at least one direction is required"));
    }
    let d = SPEED_OF_LIGHT / (2.0 * f_c);
    let mut out = Vec::with_capacity(sizes.len() * distances.len());
    for &(n_y, n_z) in sizes {
        let shape = UpaShape::new(n_y, n_z, d)?;
        let p = directions.len();
        let mut planar = CMat::zeros(shape.len(), p);
        for (j, &(theta, phi)) in directions.iter().enumerate() {
            let pt = SphericalPoint::new(theta, phi, 1.0)?;
            planar.set_column(j, &planar_response(&shape, f_c, pt.theta_t(), pt.phi_t())?);
        }
        for &r in distances {
            let mut exact = CMat::zeros(shape.len(), p);
            for (j, &(theta, phi)) in directions.iter().enumerate() {
                let pt = SphericalPoint::new(theta, phi, r)?;
                exact.set_column(j, &exact_spherical_response(&shape, f_c, &pt)?);
            }
            let gram = planar.adjoint() * exact;
            out.push(GainCurvePoint { distance: r, ris_ny: n_y, ris_nz: n_z, gain: gram.determinant().norm() });
        }
    }
    Ok(out)
}
