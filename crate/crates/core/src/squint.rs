//! Near-field beam squint: array gain of a beam focused at `f_c` when probed
//! on another subcarrier, its Fresnel-integral approximation and the
//! per-subcarrier focal trajectory.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::geometry::{CarrierGrid, SphericalPoint, UpaShape};
use crate::special::fresnel;
use crate::{C64, SPEED_OF_LIGHT};

/// Beam focused at `desired` on the central frequency, observed at `probe`
/// on zero-based subcarrier `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternQuery {
    pub desired: SphericalPoint,
    pub probe: SphericalPoint,
    pub k: usize,
}

/// Quadratic-phase rates along y (`zeta_phi`) and z (`zeta_theta`). Element
/// `m` along an axis picks up phase `-π ζ m²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaPair {
    pub zeta_phi: f64,
    pub zeta_theta: f64,
}

/// Fresnel phase in cycles of element `(m_y, m_z)` for virtual angles and
/// inverse range.
#[inline]
fn fresnel_cycles(f: f64, d: f64, theta_t: f64, phi_t: f64, inv_r: f64, my: f64, mz: f64) -> f64 {
    let (y, z) = (my * d, mz * d);
    f / SPEED_OF_LIGHT
        * (-y * phi_t - z * theta_t
            + 0.5 * z * z * (1.0 - theta_t * theta_t) * inv_r
            + 0.5 * y * y * (1.0 - phi_t * phi_t) * inv_r
            - y * z * theta_t * phi_t * inv_r)
}

/// Normalized pattern gain by direct summation over every element,
/// cross term included. Lies in `[0, 1]`.
pub fn pattern_gain_exact(shape: &UpaShape, grid: &CarrierGrid, query: &PatternQuery) -> f64 {
    let d = shape.spacing_d;
    let (des, pr) = (&query.desired, &query.probe);
    let (dt, dp, dx) = (des.theta_t(), des.phi_t(), des.inv_r());
    let (pt, pp, px) = (pr.theta_t(), pr.phi_t(), pr.inv_r());
    let fk = grid.freq(query.k);
    let mut acc = C64::new(0.0, 0.0);
    for (my, mz) in shape.indices() {
        let delta = fresnel_cycles(fk, d, pt, pp, px, my, mz) - fresnel_cycles(grid.f_c, d, dt, dp, dx, my, mz);
        let (s, c) = (-2.0 * PI * delta).sin_cos();
        acc += C64::new(c, s);
    }
    (acc.norm() / shape.len() as f64).min(1.0)
}

/// `ζ` of a probe at frequency `f_k` against a focus at `f_c`.
pub fn zeta_pair(
    d: f64,
    f_k: f64,
    f_c: f64,
    probe: (f64, f64, f64),
    desired: (f64, f64, f64),
) -> ZetaPair {
    let (pt, pp, px) = probe;
    let (dt, dp, dx) = desired;
    let s = d * d / SPEED_OF_LIGHT;
    ZetaPair {
        zeta_phi: s * (f_k * (1.0 - pp * pp) * px - f_c * (1.0 - dp * dp) * dx),
        zeta_theta: s * (f_k * (1.0 - pt * pt) * px - f_c * (1.0 - dt * dt) * dx),
    }
}

/// Single-axis gain `|C(u) + jS(u)| / u`, `u = (n/2)√(2|ζ|)`; equals the
/// modulus of the normalized complex-erf form and is 1 at `ζ = 0`.
pub fn axis_gain(zeta: f64, n: usize) -> f64 {
    let u = 0.5 * n as f64 * (2.0 * zeta.abs()).sqrt();
    if u < 1e-8 {
        return 1.0;
    }
    let (c, s) = fresnel(u);
    ((c * c + s * s).sqrt() / u).min(1.0)
}

/// Separable Fresnel-integral approximation `g̃_y(ζ_φ) · g̃_z(ζ_θ)`.
pub fn gain_erf_approx(zeta: &ZetaPair, shape: &UpaShape) -> f64 {
    axis_gain(zeta.zeta_phi, shape.n_y) * axis_gain(zeta.zeta_theta, shape.n_z)
}

const SCAN_POINTS: usize = 2001;
const X_TOL: f64 = 1e-6;

/// Focal point on subcarrier `k` of a beam focused at `desired` on `f_c`.
/// Angles follow the linear-phase rule; the range maximizes the Fresnel gain
/// over `x = 1/r`.
pub fn solve_trajectory_point(cfg: &SystemConfig, desired: &SphericalPoint, k: usize) -> Result<SphericalPoint> {
    let shape = cfg.ris_shape();
    let grid = cfg.carriers();
    grid.validate()?;
    if k >= grid.k {
        return Err(invalid("subcarrier index out of range"));
    }
    if !(desired.r > shape.aperture()) {
        return Err(invalid("desired range must exceed the array aperture"));
    }
    let f_k = grid.freq(k);
    if f_k == grid.f_c {
        return Ok(*desired);
    }
    let ratio = grid.f_c / f_k;
    let theta_t = (ratio * desired.theta_t()).clamp(-1.0, 1.0);
    let phi_t = (ratio * desired.phi_t()).clamp(-1.0, 1.0);
    let target = (desired.theta_t(), desired.phi_t(), desired.inv_r());
    let d = shape.spacing_d;
    let objective = |x: f64| gain_erf_approx(&zeta_pair(d, f_k, grid.f_c, (theta_t, phi_t, x), target), &shape);

    let lo = 1.0 / (10.0 * desired.r * (f_k / grid.f_c + 1.0));
    let hi = (1.0 / cfg.r_min).min(10.0 / desired.r);
    if !(hi > lo) {
        return Err(Error::Optimization("empty inverse-range bracket".into()));
    }
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let (mut best_i, mut best, mut worst) = (0, f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..SCAN_POINTS {
        let v = objective(lo + step * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
        worst = worst.min(v);
    }
    if best - worst < 1e-12 {
        return Err(Error::Optimization("gain is flat over the inverse-range bracket".into()));
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (objective(c), objective(e));
    while b - a > X_TOL * 1e-3 {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = objective(e);
        }
    }
    let x = 0.5 * (a + b);
    SphericalPoint::from_virtual(theta_t, phi_t, 1.0 / x)
}

/// One row of a beam-trajectory table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    /// One-based subcarrier index.
    pub k: usize,
    pub f_k: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub r: f64,
    /// Exact pattern gain of the focused beam at the trajectory point.
    pub gain: f64,
}

pub fn trajectory(cfg: &SystemConfig, desired: &SphericalPoint) -> Result<Vec<TrajectoryRow>> {
    let grid = cfg.carriers();
    let shape = cfg.ris_shape();
    (0..grid.k)
        .map(|k| {
            let p = solve_trajectory_point(cfg, desired, k)?;
            let gain = pattern_gain_exact(&shape, &grid, &PatternQuery { desired: *desired, probe: p, k });
            Ok(TrajectoryRow {
                k: k + 1,
                f_k: grid.freq(k),
                theta_deg: p.theta.to_degrees(),
                phi_deg: p.phi.to_degrees(),
                r: p.r,
                gain,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half_wave(n_y: usize, n_z: usize) -> UpaShape {
        UpaShape::new(n_y, n_z, SPEED_OF_LIGHT / 56e9).unwrap()
    }

    fn quadratic_sum(zeta: f64, n: usize) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let m = UpaShape::centered(i, n);
            acc += C64::from_polar(1.0, -PI * zeta * m * m);
        }
        acc.norm() / n as f64
    }

    #[test]
    fn aligned_probe_has_unit_gain() {
        let shape = half_wave(32, 4);
        let grid = CarrierGrid { f_c: 28e9, f_s: 2e9, k: 9 };
        let p = SphericalPoint::new(1.0, 0.4, 9.0).unwrap();
        let g = pattern_gain_exact(&shape, &grid, &PatternQuery { desired: p, probe: p, k: 4 });
        assert_eq!(g, 1.0);
    }

    #[test]
    fn linear_rule_beats_unsquinted_angle() {
        let shape = half_wave(64, 1);
        let grid = CarrierGrid { f_c: 28e9, f_s: 4e9, k: 16 };
        let desired = SphericalPoint::from_virtual(0.0, 0.6, 15.0).unwrap();
        for k in [0, 3, 12, 15] {
            let fk = grid.freq(k);
            let moved = SphericalPoint::from_virtual(0.0, 0.6 * grid.f_c / fk, 15.0).unwrap();
            let g_rule = pattern_gain_exact(&shape, &grid, &PatternQuery { desired, probe: moved, k });
            let g_stay = pattern_gain_exact(&shape, &grid, &PatternQuery { desired, probe: desired, k });
            assert!(g_rule >= g_stay, "k={k}: {g_rule} < {g_stay}");
        }
    }

    #[test]
    fn erf_form_is_one_at_zero() {
        let z = ZetaPair { zeta_phi: 0.0, zeta_theta: 0.0 };
        assert_eq!(gain_erf_approx(&z, &half_wave(256, 4)), 1.0);
    }

    #[test]
    fn erf_form_matches_quadratic_sum_in_fresnel_regime() {
        // Desk-scale squint: a 256×4 beam at 20 m observed at the band edge.
        let shape = half_wave(256, 4);
        let z = zeta_pair(shape.spacing_d, 26e9, 28e9, (0.7, 0.5, 1.0 / 20.0), (0.7, 0.5, 1.0 / 20.0));
        let approx = gain_erf_approx(&z, &shape);
        let direct = quadratic_sum(z.zeta_phi, 256) * quadratic_sum(z.zeta_theta, 4);
        assert!((approx / direct - 1.0).abs() < 0.02, "{approx} vs {direct}");
    }

    #[test]
    fn axis_gain_tracks_sum_below_aliasing() {
        for n in [64usize, 128, 256] {
            for i in 0..40 {
                let zeta = 1e-6 * 10f64.powf(i as f64 * 0.1);
                if zeta > 0.25 / n as f64 {
                    break;
                }
                let (a, b) = (axis_gain(zeta, n), quadratic_sum(zeta, n));
                assert!((a / b - 1.0).abs() < 0.02, "n={n} zeta={zeta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn figure_trajectory_endpoints() {
        let cfg = SystemConfig { ris_ny: 256, ris_nz: 4, subcarriers: 32, f_s: 4e9, ..Default::default() };
        let q = core::f64::consts::FRAC_PI_4;
        let desired = SphericalPoint::new(q, q, 20.0).unwrap();
        let first = solve_trajectory_point(&cfg, &desired, 0).unwrap();
        let last = solve_trajectory_point(&cfg, &desired, 31).unwrap();
        let check = |p: SphericalPoint, th: f64, ph: f64, r: f64| {
            assert!((p.theta.to_degrees() - th).abs() < 0.5, "{p:?}");
            assert!((p.phi.to_degrees() - ph).abs() < 0.5, "{p:?}");
            assert!((p.r - r).abs() < 0.5, "{p:?}");
        };
        check(first, 40.56, 55.69, 17.65);
        check(last, 48.6, 38.57, 22.28);
        let rows = trajectory(&cfg, &desired).unwrap();
        assert!(rows.windows(2).all(|w| w[1].r > w[0].r));
    }

    #[test]
    fn center_subcarrier_is_identity() {
        let cfg = SystemConfig { subcarriers: 33, ..Default::default() };
        let p = SphericalPoint::new(1.0, -0.3, 12.0).unwrap();
        assert_eq!(solve_trajectory_point(&cfg, &p, 16).unwrap(), p);
    }

    proptest! {
        #[test]
        fn gain_bounded(theta in 0.3f64..2.8, phi in -1.2f64..1.2, r in 3.0f64..50.0, k in 0usize..8) {
            let shape = half_wave(16, 4);
            let grid = CarrierGrid { f_c: 28e9, f_s: 4e9, k: 8 };
            let desired = SphericalPoint::new(1.2, 0.2, 10.0).unwrap();
            let probe = SphericalPoint::new(theta, phi, r).unwrap();
            let g = pattern_gain_exact(&shape, &grid, &PatternQuery { desired, probe, k });
            prop_assert!((0.0..=1.0).contains(&g));
        }

        #[test]
        fn axis_gain_is_even(z in -0.1f64..0.1, n in 1usize..300) {
            prop_assert_eq!(axis_gain(z, n), axis_gain(-z, n));
        }

        #[test]
        fn identity_on_center_for_any_focus(theta in 0.5f64..2.6, phi in -1.0f64..1.0, r in 5.0f64..40.0) {
            let cfg = SystemConfig { ris_ny: 32, subcarriers: 5, ..Default::default() };
            let p = SphericalPoint::new(theta, phi, r).unwrap();
            prop_assert_eq!(solve_trajectory_point(&cfg, &p, 2).unwrap(), p);
        }
    }
}
