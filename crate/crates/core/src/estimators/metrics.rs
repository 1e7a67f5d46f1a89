//! Angle-estimation error with optimal path matching.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::SupportEstimate;
use crate::channel::ChannelPath;
use crate::error::{Error, Result};

/// Mean squared virtual-angle error per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleMse {
    pub ris_theta: f64,
    pub ris_phi: f64,
    pub user_theta: f64,
    pub user_phi: f64,
}

impl AngleMse {
    pub fn total(&self) -> f64 {
        self.ris_theta + self.ris_phi + self.user_theta + self.user_phi
    }
}

/// Minimum-cost perfect matching on a square cost matrix (row-major).
/// Returns `assign[row] = col`.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // Potentials formulation, one-based with a virtual column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Refined-angle MSE after matching estimates to true paths by minimal total
/// squared virtual-angle distance.
pub fn angle_mse(truth: &[ChannelPath], support: &SupportEstimate) -> Result<AngleMse> {
    let n = truth.len();
    if n != support.paths.len() || n == 0 {
        return Err(Error::Dimension("estimated and true path counts differ".into()));
    }
    let errs = |t: &ChannelPath, j: usize| {
        let e = &support.paths[j];
        let pt = &t.ris_point;
        [
            (pt.theta_t() - e.ris_refined.theta_t).powi(2),
            (pt.phi_t() - e.ris_refined.phi_t).powi(2),
            (t.user_theta_t - e.user_refined.theta_t).powi(2),
            (t.user_phi_t - e.user_refined.phi_t).powi(2),
        ]
    };
    let mut cost = Vec::with_capacity(n * n);
    for t in truth {
        for j in 0..n {
            cost.push(errs(t, j).iter().sum());
        }
    }
    let assign = hungarian(&cost, n);
    let mut out = AngleMse::default();
    for (i, t) in truth.iter().enumerate() {
        let e = errs(t, assign[i]);
        out.ris_theta += e[0];
        out.ris_phi += e[1];
        out.user_theta += e[2];
        out.user_phi += e[3];
    }
    let nf = n as f64;
    out.ris_theta /= nf;
    out.ris_phi /= nf;
    out.user_theta /= nf;
    out.user_phi /= nf;
    Ok(out)
}
