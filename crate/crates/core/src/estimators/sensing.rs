//! Precomputed per-subcarrier sensing matrices `Φ[k] = M[k] D[k]` with the
//! column statistics needed by the correlation matcher.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dictionary::{AngularDictionary, SphericalDictionary};
use crate::linalg::{matmul, Op};
use crate::measurement::SensingSetup;
use crate::{CMat, C64};

/// Atom scoring rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Matcher {
    /// Modulus of the complex correlation coefficient.
    Cc,
    /// Modulus of the raw inner product.
    In,
}

impl Matcher {
    pub fn name(&self) -> &'static str {
        match self {
            Matcher::Cc => "cc",
            Matcher::In => "in",
        }
    }
}

/// Summary of a measured factor vector `t`, shared by every atom it is
/// scored against.
#[derive(Debug, Clone, Copy)]
pub struct FactorStats {
    pub sum_conj: C64,
    pub centered_norm: f64,
}

impl FactorStats {
    pub fn of(t: &[C64]) -> Self {
        let n = t.len() as f64;
        let sum: C64 = t.iter().sum();
        let energy: f64 = t.iter().map(|z| z.norm_sqr()).sum();
        let centered = (energy - sum.norm_sqr() / n).max(0.0);
        Self { sum_conj: sum.conj(), centered_norm: centered.sqrt() }
    }
}

/// Score from `c = conj(φᴴ t)` and the atom's mean and centered norm.
#[inline]
pub fn score_from_product(matcher: Matcher, c: C64, mean: C64, centered_norm: f64, t: &FactorStats) -> f64 {
    match matcher {
        Matcher::In => c.norm(),
        Matcher::Cc => {
            let denom = centered_norm * t.centered_norm;
            if denom > 0.0 {
                // conj of (φ_cᴴ t) = conj(φᴴ t) − mean(φ)·conj(Σ t).
                (c - mean * t.sum_conj).norm() / denom
            } else {
                0.0
            }
        }
    }
}

/// Scores of one atom column `phi` against factor `t`.
pub fn score_column(matcher: Matcher, phi: &[C64], t: &[C64]) -> f64 {
    let n = phi.len() as f64;
    let c: C64 = phi.iter().zip(t).map(|(a, b)| a * b.conj()).sum();
    let sum: C64 = phi.iter().sum();
    let energy: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    let centered = (energy - sum.norm_sqr() / n).max(0.0).sqrt();
    score_from_product(matcher, c, sum / n, centered, &FactorStats::of(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideOperator {
    pub phi: Vec<CMat>,
    pub means: Vec<Vec<C64>>,
    pub centered_norms: Vec<Vec<f64>>,
}

const BLOCK: usize = 512;

impl SideOperator {
    pub fn from_phi(phi: Vec<CMat>) -> Self {
        let mut means = Vec::with_capacity(phi.len());
        let mut centered_norms = Vec::with_capacity(phi.len());
        for m in &phi {
            let n = m.nrows() as f64;
            let mut mu = Vec::with_capacity(m.ncols());
            let mut cn = Vec::with_capacity(m.ncols());
            for col in m.column_iter() {
                let sum: C64 = col.iter().sum();
                let energy: f64 = col.iter().map(|z| z.norm_sqr()).sum();
                mu.push(sum / n);
                cn.push((energy - sum.norm_sqr() / n).max(0.0).sqrt());
            }
            means.push(mu);
            centered_norms.push(cn);
        }
        Self { phi, means, centered_norms }
    }

    /// `Φ_R[k] = Ṽ[k] B_R[k]`.
    pub fn ris(dict: &SphericalDictionary, setup: &SensingSetup, freqs: &[f64]) -> Self {
        let g = dict.len();
        let phi = freqs
            .iter()
            .enumerate()
            .map(|(k, &f)| {
                let vt = &setup.vtilde[k];
                let mut out = CMat::zeros(vt.nrows(), g);
                let mut start = 0;
                while start < g {
                    let end = (start + BLOCK).min(g);
                    let prod = matmul(vt, Op::None, &dict.block(start..end, f), Op::None);
                    out.columns_mut(start, end - start).copy_from(&prod);
                    start = end;
                }
                out
            })
            .collect();
        Self::from_phi(phi)
    }

    /// `Φ_U[k] = Fᴴ A_U[k]`.
    pub fn user(dict: &AngularDictionary, f: &CMat, freqs: &[f64]) -> Self {
        let phi = freqs.iter().map(|&fk| matmul(f, Op::Adjoint, &dict.matrix(fk), Op::None)).collect();
        Self::from_phi(phi)
    }

    /// Keeps the first `rows` measurement rows.
    pub fn truncated(&self, rows: usize) -> Self {
        Self::from_phi(self.phi.iter().map(|m| m.rows(0, rows).into_owned()).collect())
    }

    pub fn atoms(&self) -> usize {
        self.phi.first().map_or(0, |m| m.ncols())
    }

    pub fn rows(&self) -> usize {
        self.phi.first().map_or(0, |m| m.nrows())
    }

    /// Adds the score of every atom against every column of `t` on
    /// subcarrier `k` into `acc` (`G × P`, column-major).
    pub fn accumulate_scores(&self, k: usize, t: &CMat, matcher: Matcher, acc: &mut [f64]) {
        let g = self.atoms();
        let t_conj = t.map(|z| z.conj());
        // conj(Φᴴ t) = Φᵀ conj(t) avoids conjugating Φ.
        let prod = matmul(&self.phi[k], Op::Trans, &t_conj, Op::None);
        for p in 0..t.ncols() {
            let col: Vec<C64> = t.column(p).iter().cloned().collect();
            let stats = FactorStats::of(&col);
            let out = &mut acc[p * g..(p + 1) * g];
            let (means, norms) = (&self.means[k], &self.centered_norms[k]);
            for (i, slot) in out.iter_mut().enumerate() {
                *slot += score_from_product(matcher, prod[(i, p)], means[i], norms[i], &stats);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::subspace::correlation_coefficient;
    use crate::rng::{complex_normal_matrix, seeded};

    #[test]
    fn batched_scores_match_direct_formulas() {
        let mut rng = seeded(8);
        let phi = complex_normal_matrix(&mut rng, 6, 10, 1.0);
        let t = complex_normal_matrix(&mut rng, 6, 2, 1.0);
        let op = SideOperator::from_phi(alloc::vec![phi.clone()]);
        for matcher in [Matcher::Cc, Matcher::In] {
            let mut acc = alloc::vec![0.0; 20];
            op.accumulate_scores(0, &t, matcher, &mut acc);
            for p in 0..2 {
                let tp: Vec<C64> = t.column(p).iter().cloned().collect();
                for g in 0..10 {
                    let col: Vec<C64> = phi.column(g).iter().cloned().collect();
                    let want = match matcher {
                        Matcher::Cc => correlation_coefficient(&col, &tp).unwrap().norm(),
                        Matcher::In => phi.column(g).dotc(&t.column(p)).norm(),
                    };
                    assert!((acc[p * 10 + g] - want).abs() < 1e-12);
                    assert!((score_column(matcher, &col, &tp) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cc_is_scale_invariant_and_in_is_not() {
        let mut rng = seeded(9);
        let phi = complex_normal_matrix(&mut rng, 8, 1, 1.0);
        let t: Vec<C64> = complex_normal_matrix(&mut rng, 8, 1, 1.0).iter().cloned().collect();
        let col: Vec<C64> = phi.iter().cloned().collect();
        let scaled: Vec<C64> = col.iter().map(|z| z * C64::new(3.0, -2.0)).collect();
        let (a, b) = (score_column(Matcher::Cc, &col, &t), score_column(Matcher::Cc, &scaled, &t));
        assert!((a - b).abs() < 1e-12);
        let (a, b) = (score_column(Matcher::In, &col, &t), score_column(Matcher::In, &scaled, &t));
        assert!((b / a - 13f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_atom_scores_zero_under_cc() {
        let col = [C64::new(1.0, 1.0); 5];
        let t = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)];
        assert_eq!(score_column(Matcher::Cc, &col, &t), 0.0);
    }
}
