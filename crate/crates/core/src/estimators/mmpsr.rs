//! Multi-measurement parallelizable subspace recovery.
//!
//! Per subcarrier the pilot matrix is split into RIS-side and user-side
//! factors by SVD. Each side is matched against its own sensing matrix, the
//! scores are summed over subcarriers to exploit the common support, the
//! winning atoms are refined on a local grid and the channel is rebuilt by
//! two-sided least squares on the recovered responses.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

pub use super::sensing::Matcher;
use super::sensing::{score_column, SideOperator};
use super::subspace::{svd_subspace, SubspaceSlice};
use super::{EstimationResult, PathSupport, RisParams, SupportEstimate, UserParams};
use crate::config::RefineSteps;
use crate::dictionary::{AngularDictionary, SphericalDictionary};
use crate::error::{invalid, Result};
use crate::geometry::{fresnel_response_into, planar_response_into, UpaShape};
use crate::linalg::{matmul, solve_or_pinv, Op};
use crate::measurement::{MeasurementSet, SensingSetup};
use crate::timing::{Clock, Stopwatch};
use crate::{CMat, C64};

/// Dictionaries and sensing matrices shared by every trial of a campaign.
pub struct SensingContext {
    pub ris_dict: SphericalDictionary,
    pub user_dict: AngularDictionary,
    pub ris_op: SideOperator,
    pub user_op: SideOperator,
    pub freqs: Vec<f64>,
}

impl SensingContext {
    pub fn new(ris_dict: SphericalDictionary, user_dict: AngularDictionary, setup: &SensingSetup, freqs: &[f64]) -> Self {
        let ris_op = SideOperator::ris(&ris_dict, setup, freqs);
        let user_op = SideOperator::user(&user_dict, &setup.f, freqs);
        Self { ris_dict, user_dict, ris_op, user_op, freqs: freqs.to_vec() }
    }

    /// Same dictionaries with the RIS operator cut to the first `q` rows.
    pub fn truncated(&self, q: usize) -> Self {
        Self {
            ris_dict: self.ris_dict.clone(),
            user_dict: self.user_dict.clone(),
            ris_op: self.ris_op.truncated(q),
            user_op: self.user_op.clone(),
            freqs: self.freqs.clone(),
        }
    }
}

/// Index of the largest score not already taken.
fn best_unused(scores: &[f64], taken: &[usize]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &s) in scores.iter().enumerate() {
        if s > best.1 && !taken.contains(&i) {
            best = (i, s);
        }
    }
    best.0
}

/// Symmetric offsets `j·step`, `|j·step| <= half_width`, including zero.
fn offsets(half_width: f64, step: f64) -> Vec<f64> {
    let n = (half_width / step + 1e-9).floor() as i64;
    (-n..=n).map(|j| j as f64 * step).collect()
}

fn factor_columns(slices: &[SubspaceSlice], p: usize, ris: bool) -> Vec<Vec<C64>> {
    slices
        .iter()
        .map(|s| {
            let m = if ris { &s.t_ris } else { &s.t_user };
            m.column(p).iter().cloned().collect()
        })
        .collect()
}

/// Sum over subcarriers of each candidate's score. `build` fills the
/// candidate responses (one column per candidate) at a frequency; `sense`
/// maps them through the subcarrier's measurement operator.
fn candidate_scores(
    n_cand: usize,
    n_elem: usize,
    freqs: &[f64],
    factors: &[Vec<C64>],
    matcher: Matcher,
    mut build: impl FnMut(usize, f64, &mut [C64]),
    sense: impl Fn(usize, &CMat) -> CMat,
) -> Vec<f64> {
    let mut total = vec![0.0; n_cand];
    let mut resp = CMat::zeros(n_elem, n_cand);
    for (k, &f) in freqs.iter().enumerate() {
        for c in 0..n_cand {
            build(c, f, resp.column_mut(c).data.into_slice_mut());
        }
        let phi = sense(k, &resp);
        for (c, slot) in total.iter_mut().enumerate() {
            *slot += score_column(matcher, phi.column(c).as_slice(), &factors[k]);
        }
    }
    total
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &s)| if s > b.1 { (i, s) } else { b }).0
}

fn refine_ris(
    ctx: &SensingContext,
    setup: &SensingSetup,
    factors: &[Vec<C64>],
    atom: usize,
    steps: &RefineSteps,
    matcher: Matcher,
) -> RisParams {
    let dict = &ctx.ris_dict;
    let label = dict.labels[atom];
    let shape = dict.shape;
    let sense = |k: usize, b: &CMat| matmul(&setup.vtilde[k], Op::None, b, Op::None);
    let dt = offsets(1.0 / dict.grid_z as f64, steps.ris_theta);
    let dp = offsets(1.0 / dict.grid_y as f64, steps.ris_phi);
    let plane: Vec<(f64, f64)> = dt
        .iter()
        .flat_map(|&a| dp.iter().map(move |&b| ((label.theta_t + a).clamp(-1.0, 1.0), (label.phi_t + b).clamp(-1.0, 1.0))))
        .collect();
    let scores = candidate_scores(
        plane.len(),
        shape.len(),
        &ctx.freqs,
        factors,
        matcher,
        |c, f, out| fresnel_response_into(&shape, f, plane[c].0, plane[c].1, label.inv_r, out),
        sense,
    );
    let (theta_t, phi_t) = plane[argmax(&scores)];
    let step = dict.direction_of(atom).ring_step;
    if !step.is_finite() {
        return RisParams { theta_t, phi_t, inv_r: label.inv_r };
    }
    let line: Vec<f64> = offsets(0.5, steps.inv_r)
        .into_iter()
        .map(|o| label.inv_r + o * step)
        .filter(|&x| x >= 0.0)
        .collect();
    let scores = candidate_scores(
        line.len(),
        shape.len(),
        &ctx.freqs,
        factors,
        matcher,
        |c, f, out| fresnel_response_into(&shape, f, theta_t, phi_t, line[c], out),
        sense,
    );
    RisParams { theta_t, phi_t, inv_r: line[argmax(&scores)] }
}

fn refine_user(
    ctx: &SensingContext,
    f_mat: &CMat,
    factors: &[Vec<C64>],
    atom: usize,
    steps: &RefineSteps,
    matcher: Matcher,
) -> UserParams {
    let dict = &ctx.user_dict;
    let (t0, p0) = dict.labels[atom];
    let shape = dict.shape;
    let dt = offsets(1.0 / dict.grid_z as f64, steps.user_theta);
    let dp = offsets(1.0 / dict.grid_y as f64, steps.user_phi);
    let grid: Vec<(f64, f64)> = dt
        .iter()
        .flat_map(|&a| dp.iter().map(move |&b| ((t0 + a).clamp(-1.0, 1.0), (p0 + b).clamp(-1.0, 1.0))))
        .collect();
    let scores = candidate_scores(
        grid.len(),
        shape.len(),
        &ctx.freqs,
        factors,
        matcher,
        |c, f, out| planar_response_into(&shape, f, grid[c].0, grid[c].1, out),
        |_, a| matmul(f_mat, Op::Adjoint, a, Op::None),
    );
    let (theta_t, phi_t) = grid[argmax(&scores)];
    UserParams { theta_t, phi_t }
}

/// Two-sided LS on known responses: `Ĥ = B Ξ̂ Aᴴ` with
/// `Ξ̂ = (Φ_Rᴴ Φ_R)⁻¹ Φ_Rᴴ Y Φ_U (Φ_Uᴴ Φ_U)⁻¹`, `Φ_R = Ṽ B`, `Φ_U = Fᴴ A`.
pub fn rebuild_from_responses(vtilde: &CMat, f_mat: &CMat, y: &CMat, b: &CMat, a: &CMat) -> CMat {
    let phi_r = matmul(vtilde, Op::None, b, Op::None);
    let phi_u = matmul(f_mat, Op::Adjoint, a, Op::None);
    let left = solve_or_pinv(&phi_r, y);
    let xi = solve_or_pinv(&phi_u, &left.adjoint()).adjoint();
    matmul(&matmul(b, Op::None, &xi, Op::None), Op::None, a, Op::Adjoint)
}

fn response_matrix(shape: &UpaShape, f: f64, params: &[(f64, f64, f64)], planar: bool) -> CMat {
    let mut m = CMat::zeros(shape.len(), params.len());
    for (j, &(t, p, x)) in params.iter().enumerate() {
        let out = m.column_mut(j).data.into_slice_mut();
        if planar {
            planar_response_into(shape, f, t, p, out);
        } else {
            fresnel_response_into(shape, f, t, p, x, out);
        }
    }
    m
}

/// Runs MMPSR with `paths` recovered paths. `h_true` is used only for the
/// reported NMSE.
pub fn mmpsr(
    meas: &MeasurementSet,
    ctx: &SensingContext,
    paths: usize,
    matcher: Matcher,
    steps: &RefineSteps,
    h_true: &[CMat],
    clock: &dyn Clock,
) -> Result<EstimationResult> {
    if paths == 0 {
        return Err(invalid("MMPSR needs at least one path"));
    }
    let k_count = meas.subcarriers();
    if ctx.freqs.len() != k_count || ctx.ris_op.rows() != meas.setup.q() {
        return Err(invalid("MMPSR context does not match the measurement set"));
    }
    let mut watch = Stopwatch::start(clock);
    let slices = svd_subspace(meas, paths);
    watch.lap("subspace");

    let (g_r, g_u) = (ctx.ris_op.atoms(), ctx.user_op.atoms());
    let mut ris_scores = vec![0.0; g_r * paths];
    let mut user_scores = vec![0.0; g_u * paths];
    for (k, s) in slices.iter().enumerate() {
        ctx.ris_op.accumulate_scores(k, &s.t_ris, matcher, &mut ris_scores);
        ctx.user_op.accumulate_scores(k, &s.t_user, matcher, &mut user_scores);
    }
    let (mut ris_atoms, mut user_atoms) = (Vec::with_capacity(paths), Vec::with_capacity(paths));
    for p in 0..paths {
        ris_atoms.push(best_unused(&ris_scores[p * g_r..(p + 1) * g_r], &ris_atoms));
        user_atoms.push(best_unused(&user_scores[p * g_u..(p + 1) * g_u], &user_atoms));
    }
    watch.lap("matching");

    let mut support = SupportEstimate::default();
    for p in 0..paths {
        let ris_f = factor_columns(&slices, p, true);
        let user_f = factor_columns(&slices, p, false);
        let ris_refined = refine_ris(ctx, &meas.setup, &ris_f, ris_atoms[p], steps, matcher);
        let user_refined = refine_user(ctx, meas.f(), &user_f, user_atoms[p], steps, matcher);
        let l = ctx.ris_dict.labels[ris_atoms[p]];
        let (ut, up) = ctx.user_dict.labels[user_atoms[p]];
        support.paths.push(PathSupport {
            ris_atom: ris_atoms[p],
            user_atom: user_atoms[p],
            ris_coarse: RisParams { theta_t: l.theta_t, phi_t: l.phi_t, inv_r: l.inv_r },
            user_coarse: UserParams { theta_t: ut, phi_t: up },
            ris_refined,
            user_refined,
        });
    }
    watch.lap("refine");

    let ris_params: Vec<(f64, f64, f64)> =
        support.paths.iter().map(|s| (s.ris_refined.theta_t, s.ris_refined.phi_t, s.ris_refined.inv_r)).collect();
    let user_params: Vec<(f64, f64, f64)> =
        support.paths.iter().map(|s| (s.user_refined.theta_t, s.user_refined.phi_t, 0.0)).collect();
    let h_hat = (0..k_count)
        .map(|k| {
            let f = ctx.freqs[k];
            let b = response_matrix(&ctx.ris_dict.shape, f, &ris_params, false);
            let a = response_matrix(&ctx.user_dict.shape, f, &user_params, true);
            rebuild_from_responses(meas.vtilde(k), meas.f(), &meas.y[k], &b, &a)
        })
        .collect();
    watch.lap("rebuild");
    let name = match matcher {
        Matcher::Cc => "cc-mmpsr",
        Matcher::In => "in-mmpsr",
    };
    EstimationResult::new(name, Some(support), h_hat, h_true, watch.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::testkit::{plant, ris_atom, small_cfg};
    use crate::timing::NullClock;

    fn run(p: &crate::estimators::testkit::Planted, paths: usize, matcher: Matcher) -> EstimationResult {
        mmpsr(&p.meas, &p.ctx, paths, matcher, &p.cfg.refine, &p.channel.h_u, &NullClock).unwrap()
    }

    #[test]
    fn single_path_on_grid_is_recovered_exactly() {
        for k in [1, 3] {
            let cfg = small_cfg(k, f64::NEG_INFINITY);
            let atoms = [(ris_atom(&cfg, 1, 12, 1), 10)];
            let p = plant(cfg, &atoms, &[C64::new(0.6, -0.8)]);
            for matcher in [Matcher::Cc, Matcher::In] {
                let res = run(&p, 1, matcher);
                let s = &res.support.as_ref().unwrap().paths[0];
                assert_eq!((s.ris_atom, s.user_atom), atoms[0], "K={k} {matcher:?}");
                if matcher == Matcher::Cc {
                    // The planted atom scores exactly 1 on every subcarrier.
                    assert_eq!(s.ris_refined, s.ris_coarse);
                    assert_eq!(s.user_refined, s.user_coarse);
                    assert!(res.nmse < 1e-12, "K={k} nmse={}", res.nmse);
                }
            }
        }
    }

    #[test]
    fn two_separated_paths_recovered() {
        let cfg = small_cfg(3, -120.0);
        let atoms = [(ris_atom(&cfg, 1, 6, 0), 9), (ris_atom(&cfg, 2, 24, 1), 22)];
        let p = plant(cfg, &atoms, &[C64::new(1.0, 0.0), C64::new(0.0, 0.4)]);
        let res = run(&p, 2, Matcher::Cc);
        let mut got: Vec<(usize, usize)> = res.support.as_ref().unwrap().paths.iter().map(|s| (s.ris_atom, s.user_atom)).collect();
        got.sort();
        let mut want = atoms.to_vec();
        want.sort();
        assert_eq!(got, want);
        // Factor columns mix both paths, so refinement is biased off the grid.
        assert!(res.nmse < 5e-2, "nmse={}", res.nmse);
        let stages: Vec<&str> = res.timings.iter().map(|t| t.stage.as_str()).collect();
        assert_eq!(stages, ["subspace", "matching", "refine", "rebuild"]);
    }

    #[test]
    fn refined_support_stays_in_coarse_cell() {
        let cfg = small_cfg(3, -70.0);
        let atoms = [(ris_atom(&cfg, 1, 12, 1), 10), (ris_atom(&cfg, 2, 20, 0), 27)];
        let p = plant(cfg.clone(), &atoms, &[C64::new(1.0, 0.0), C64::new(0.7, 0.2)]);
        let res = run(&p, 2, Matcher::Cc);
        for s in &res.support.unwrap().paths {
            let step = p.ctx.ris_dict.direction_of(s.ris_atom).ring_step;
            assert!((s.ris_refined.theta_t - s.ris_coarse.theta_t).abs() <= 1.0 / cfg.grid_ris_z as f64 + 1e-12);
            assert!((s.ris_refined.phi_t - s.ris_coarse.phi_t).abs() <= 1.0 / cfg.grid_ris_y as f64 + 1e-12);
            assert!((s.ris_refined.inv_r - s.ris_coarse.inv_r).abs() <= 0.5 * step + 1e-12);
            assert!((s.user_refined.theta_t - s.user_coarse.theta_t).abs() <= 1.0 / cfg.grid_user_z as f64 + 1e-12);
            assert!((s.user_refined.phi_t - s.user_coarse.phi_t).abs() <= 1.0 / cfg.grid_user_y as f64 + 1e-12);
        }
    }

    #[test]
    fn single_subcarrier_coarse_pick_is_the_score_argmax() {
        let cfg = small_cfg(1, -80.0);
        let atoms = [(ris_atom(&cfg, 2, 8, 1), 5)];
        let p = plant(cfg, &atoms, &[C64::new(1.0, 0.0)]);
        let res = run(&p, 1, Matcher::Cc);
        let slice = &svd_subspace(&p.meas, 1)[0];
        let t: Vec<C64> = slice.t_ris.column(0).iter().cloned().collect();
        let phi = &p.ctx.ris_op.phi[0];
        let scores: Vec<f64> = (0..phi.ncols()).map(|g| score_column(Matcher::Cc, phi.column(g).as_slice(), &t)).collect();
        assert_eq!(res.support.unwrap().paths[0].ris_atom, argmax(&scores));
    }

    #[test]
    fn rejects_mismatched_context() {
        let cfg = small_cfg(1, -80.0);
        let atoms = [(ris_atom(&cfg, 2, 8, 1), 5)];
        let p = plant(cfg, &atoms, &[C64::new(1.0, 0.0)]);
        let short = p.ctx.truncated(10);
        assert!(mmpsr(&p.meas, &short, 1, Matcher::Cc, &p.cfg.refine, &p.channel.h_u, &NullClock).is_err());
        assert!(mmpsr(&p.meas, &p.ctx, 0, Matcher::Cc, &p.cfg.refine, &p.channel.h_u, &NullClock).is_err());
    }

    #[test]
    fn offsets_are_symmetric_and_contain_zero() {
        let o = offsets(0.25, 0.1);
        assert_eq!(o.len(), 5);
        assert!(o.contains(&0.0));
        for (a, b) in o.iter().zip(o.iter().rev()) {
            assert!((a + b).abs() < 1e-15);
        }
    }
}
