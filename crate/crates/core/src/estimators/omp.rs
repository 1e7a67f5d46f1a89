//! Per-subcarrier orthogonal matching pursuit over the Kronecker dictionary
//! `conj(Φ_U) ⊗ Φ_R`, never materialized: atom correlations are read off
//! `Φ_Rᴴ R Φ_U`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::mmpsr::SensingContext;
use super::{EstimationResult, PathSupport, RisParams, SupportEstimate, UserParams};
use crate::error::{Error, Result};
use crate::linalg::{matmul, solve_or_pinv, Op};
use crate::measurement::MeasurementSet;
use crate::timing::{Clock, Stopwatch};
use crate::{CMat, C64};

const BLOCK: usize = 512;

fn column_norms(m: &CMat) -> Vec<f64> {
    m.column_iter().map(|c| c.norm()).collect()
}

/// Best `(ris, user)` pair by normalized correlation with `resid`.
fn best_pair(
    phi_r: &CMat,
    phi_u: &CMat,
    nr: &[f64],
    nu: &[f64],
    resid: &CMat,
    taken: &[(usize, usize)],
) -> (usize, usize) {
    let t = matmul(resid, Op::None, phi_u, Op::None);
    let g_r = phi_r.ncols();
    let mut best = ((0, 0), f64::NEG_INFINITY);
    let mut start = 0;
    while start < g_r {
        let len = BLOCK.min(g_r - start);
        let blk = phi_r.columns(start, len).into_owned();
        let corr = matmul(&blk, Op::Adjoint, &t, Op::None);
        for (u, col) in corr.column_iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                let r = start + i;
                let denom = nr[r] * nu[u];
                if denom == 0.0 {
                    continue;
                }
                let s = z.norm() / denom;
                if s > best.1 && !taken.contains(&(r, u)) {
                    best = ((r, u), s);
                }
            }
        }
        start += len;
    }
    best.0
}

/// `φ_r φ_uᴴ` flattened column-major.
fn kron_atom(phi_r: &CMat, phi_u: &CMat, (r, u): (usize, usize)) -> Vec<C64> {
    let (q, n_x) = (phi_r.nrows(), phi_u.nrows());
    let mut out = Vec::with_capacity(q * n_x);
    for j in 0..n_x {
        let w = phi_u[(j, u)].conj();
        out.extend(phi_r.column(r).iter().map(|z| z * w));
    }
    out
}

/// Selected pairs and their LS coefficients on subcarrier `k`.
fn omp_one(
    ctx: &SensingContext,
    k: usize,
    y: &CMat,
    paths: usize,
) -> Result<(Vec<(usize, usize)>, Vec<C64>)> {
    let (phi_r, phi_u) = (&ctx.ris_op.phi[k], &ctx.user_op.phi[k]);
    let (nr, nu) = (column_norms(phi_r), column_norms(phi_u));
    let (q, n_x) = y.shape();
    let yv = CMat::from_column_slice(q * n_x, 1, y.as_slice());
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(paths);
    let mut atoms: Vec<C64> = Vec::with_capacity(paths * q * n_x);
    let mut resid = y.clone();
    let mut coef = Vec::new();
    for _ in 0..paths {
        let pick = best_pair(phi_r, phi_u, &nr, &nu, &resid, &chosen);
        chosen.push(pick);
        atoms.extend(kron_atom(phi_r, phi_u, pick));
        let m = CMat::from_column_slice(q * n_x, chosen.len(), &atoms);
        let c = solve_or_pinv(&m, &yv);
        let fit = matmul(&m, Op::None, &c, Op::None);
        resid = CMat::from_column_slice(q, n_x, (&yv - fit).as_slice());
        coef = c.iter().cloned().collect();
    }
    Ok((chosen, coef))
}

/// Kronecker OMP with `paths` iterations on every subcarrier. The reported
/// support is the one selected on the central subcarrier.
pub fn estimate_komp(
    meas: &MeasurementSet,
    ctx: &SensingContext,
    paths: usize,
    entry_cap: usize,
    h_true: &[CMat],
    clock: &dyn Clock,
) -> Result<EstimationResult> {
    let (g_r, g_u) = (ctx.ris_op.atoms(), ctx.user_op.atoms());
    let need = g_r.saturating_mul(g_u);
    if need > entry_cap {
        return Err(Error::MemoryBudget { need, cap: entry_cap });
    }
    let k_count = meas.subcarriers();
    let mut watch = Stopwatch::start(clock);
    if paths == 0 {
        let h_hat = h_true.iter().map(|h| CMat::zeros(h.nrows(), h.ncols())).collect();
        watch.lap("matching");
        return EstimationResult::new("komp", Some(SupportEstimate::default()), h_hat, h_true, watch.finish());
    }
    let picks: Vec<(Vec<(usize, usize)>, Vec<C64>)> =
        (0..k_count).map(|k| omp_one(ctx, k, &meas.y[k], paths)).collect::<Result<_>>()?;
    watch.lap("matching");
    let (ris_shape, user_shape) = (ctx.ris_dict.shape, ctx.user_dict.shape);
    let h_hat = picks
        .iter()
        .enumerate()
        .map(|(k, (sel, coef))| {
            let f = ctx.freqs[k];
            let mut h = CMat::zeros(ris_shape.len(), user_shape.len());
            let mut b = CMat::zeros(ris_shape.len(), 1);
            let mut a = CMat::zeros(user_shape.len(), 1);
            for (&(r, u), &c) in sel.iter().zip(coef) {
                ctx.ris_dict.column_into(r, f, b.as_mut_slice());
                ctx.user_dict.column_into(u, f, a.as_mut_slice());
                h += matmul(&b, Op::None, &a, Op::Adjoint) * c;
            }
            h
        })
        .collect();
    watch.lap("rebuild");
    let center = (k_count - 1) / 2;
    let support = SupportEstimate {
        paths: picks[center]
            .0
            .iter()
            .map(|&(r, u)| {
                let l = ctx.ris_dict.labels[r];
                let (ut, up) = ctx.user_dict.labels[u];
                let ris = RisParams { theta_t: l.theta_t, phi_t: l.phi_t, inv_r: l.inv_r };
                let user = UserParams { theta_t: ut, phi_t: up };
                PathSupport { ris_atom: r, user_atom: u, ris_coarse: ris, user_coarse: user, ris_refined: ris, user_refined: user }
            })
            .collect(),
    };
    EstimationResult::new("komp", Some(support), h_hat, h_true, watch.finish())
}
