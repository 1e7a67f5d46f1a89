//! Uplink training: random RIS phase schedules, user precoders, the BS
//! combiner and the received pilots `Y[k] = Ṽ[k] H_U[k] F + Ñ[k]`.

use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::{bs_ris_matrix, BsRisLink, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::planar_response_into;
use crate::linalg::{matmul, scale_rows, Op};
use crate::rng::{complex_normal_matrix, derive_seed, seeded, unit_phase, Rng};
use crate::{CMat, C64};

/// `rows × cols` matrix of `z/|z|`, `z ~ CN(0, 1)`.
pub fn random_unit_modulus(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = seeded(seed);
    unit_modulus_from(&mut rng, rows, cols)
}

/// Filled row by row, so a draw with fewer rows is a prefix of a larger one.
fn unit_modulus_from(rng: &mut Rng, rows: usize, cols: usize) -> CMat {
    let entries: Vec<C64> = (0..rows * cols).map(|_| unit_phase(rng)).collect();
    CMat::from_row_slice(rows, cols, &entries)
}

/// RIS phase configurations, precoder, combiners and powers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSchedule {
    /// `Q × N_R`; row `q` is the RIS configuration of slot `q`.
    pub v_rows: CMat,
    /// `N_U × N_X`, shared by all subcarriers; each column has energy `σ_p²`.
    pub f: CMat,
    /// Unit-norm BS combiner per subcarrier.
    pub w: Vec<CMat>,
    pub sigma_p2: f64,
    pub sigma_n2: f64,
}

impl TrainingSchedule {
    /// Draws V and F from `seed`; the combiner points at the RIS.
    pub fn draw(cfg: &SystemConfig, seed: u64) -> Self {
        let sigma_p2 = cfg.sigma_p2();
        let v_rows = random_unit_modulus(cfg.q, cfg.n_ris(), derive_seed(seed, 0x5649, 0));
        let f = random_unit_modulus(cfg.n_user(), cfg.n_x, derive_seed(seed, 0x4650, 0))
            * C64::new((sigma_p2 / cfg.n_user() as f64).sqrt(), 0.0);
        let bs = cfg.bs_shape();
        let w = cfg
            .carriers()
            .freqs()
            .into_iter()
            .map(|fk| {
                let mut w = CMat::zeros(bs.len(), 1);
                planar_response_into(&bs, fk, cfg.bs_theta_t, cfg.bs_phi_t, w.as_mut_slice());
                w
            })
            .collect();
        Self { v_rows, f, w, sigma_p2, sigma_n2: cfg.sigma_n2() }
    }

    /// Keeps the first `q` RIS configurations.
    pub fn truncated(&self, q: usize) -> Self {
        Self { v_rows: self.v_rows.rows(0, q).into_owned(), ..self.clone() }
    }
}

/// `Ṽ[k] = V diag(h̃_B[k])`.
pub fn effective_ris_matrix(v_rows: &CMat, h_b_tilde: &[C64]) -> Result<CMat> {
    if v_rows.ncols() != h_b_tilde.len() {
        return Err(Error::Dimension("h_b_tilde length must equal RIS element count".into()));
    }
    if h_b_tilde.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::ZeroEffectiveChannel);
    }
    let mut m = v_rows.transpose();
    scale_rows(&mut m, h_b_tilde);
    Ok(m.transpose())
}

/// Everything about the sensing operator that is fixed for one campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSetup {
    pub v_rows: CMat,
    /// `h̃_B[k] = w[k]ᴴ H_B[k]`, one row per subcarrier.
    pub h_b_tilde: Vec<Vec<C64>>,
    pub vtilde: Vec<CMat>,
    pub f: CMat,
    /// Per-entry noise variance `σ_n² ‖w‖²`.
    pub noise_var: Vec<f64>,
}

impl SensingSetup {
    pub fn new(cfg: &SystemConfig, sched: &TrainingSchedule, link: &BsRisLink) -> Result<Self> {
        let mut h_b_tilde = Vec::with_capacity(sched.w.len());
        let mut vtilde = Vec::with_capacity(sched.w.len());
        let mut noise_var = Vec::with_capacity(sched.w.len());
        for (k, w) in sched.w.iter().enumerate() {
            let h_b = bs_ris_matrix(cfg, link, cfg.carriers().freq(k));
            let h = matmul(w, Op::Adjoint, &h_b, Op::None);
            let h: Vec<C64> = h.iter().cloned().collect();
            vtilde.push(effective_ris_matrix(&sched.v_rows, &h)?);
            h_b_tilde.push(h);
            noise_var.push(sched.sigma_n2 * w.norm_squared());
        }
        Ok(Self { v_rows: sched.v_rows.clone(), h_b_tilde, vtilde, f: sched.f.clone(), noise_var })
    }

    /// Rebuilds the setup from stored parts; `Ṽ[k]` is recomputed.
    pub fn from_parts(v_rows: CMat, h_b_tilde: Vec<Vec<C64>>, f: CMat, noise_var: Vec<f64>) -> Result<Self> {
        if h_b_tilde.len() != noise_var.len() || h_b_tilde.is_empty() {
            return Err(Error::Dimension("one h_b_tilde and noise variance per subcarrier".into()));
        }
        let vtilde = h_b_tilde.iter().map(|h| effective_ris_matrix(&v_rows, h)).collect::<Result<_>>()?;
        Ok(Self { v_rows, h_b_tilde, vtilde, f, noise_var })
    }

    /// Keeps the first `q` training slots.
    pub fn truncated(&self, q: usize) -> Self {
        Self {
            v_rows: self.v_rows.rows(0, q).into_owned(),
            h_b_tilde: self.h_b_tilde.clone(),
            vtilde: self.vtilde.iter().map(|v| v.rows(0, q).into_owned()).collect(),
            f: self.f.clone(),
            noise_var: self.noise_var.clone(),
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.vtilde.len()
    }

    pub fn q(&self) -> usize {
        self.v_rows.nrows()
    }

    /// Noiseless pilots `Ṽ[k] H F`.
    pub fn noiseless(&self, k: usize, h_u: &CMat) -> CMat {
        let vh = matmul(&self.vtilde[k], Op::None, h_u, Op::None);
        matmul(&vh, Op::None, &self.f, Op::None)
    }
}

/// Received pilots for all subcarriers plus the sensing operator behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub setup: Arc<SensingSetup>,
    pub y: Vec<CMat>,
    pub noise_seed: u64,
}

impl MeasurementSet {
    pub fn vtilde(&self, k: usize) -> &CMat {
        &self.setup.vtilde[k]
    }

    pub fn f(&self) -> &CMat {
        &self.setup.f
    }

    pub fn subcarriers(&self) -> usize {
        self.y.len()
    }
}

/// `Q × N_X` i.i.d. `CN(0, var)` noise.
pub fn draw_noise(rng: &mut Rng, q: usize, n_x: usize, var: f64) -> CMat {
    complex_normal_matrix(rng, q, n_x, var)
}

/// Observes `h_u` through a prepared setup with noise drawn from `seed`.
pub fn observe(setup: &Arc<SensingSetup>, h_u: &[CMat], seed: u64) -> MeasurementSet {
    let mut rng = seeded(seed);
    let y = h_u
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let mut y = setup.noiseless(k, h);
            if setup.noise_var[k] > 0.0 {
                y += draw_noise(&mut rng, y.nrows(), y.ncols(), setup.noise_var[k]);
            }
            y
        })
        .collect();
    MeasurementSet { setup: Arc::clone(setup), y, noise_seed: seed }
}

/// Builds the sensing operator for `channel` and simulates training.
pub fn simulate_training(
    cfg: &SystemConfig,
    channel: &ChannelRealization,
    sched: &TrainingSchedule,
    seed: u64,
) -> Result<MeasurementSet> {
    let setup = Arc::new(SensingSetup::new(cfg, sched, &channel.bs_link)?);
    Ok(observe(&setup, &channel.h_u, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_paths;
    use crate::linalg::frob2;

    fn small_cfg() -> SystemConfig {
        SystemConfig {
            ris_ny: 8,
            ris_nz: 2,
            user_ny: 2,
            user_nz: 2,
            bs_ny: 4,
            bs_nz: 2,
            subcarriers: 4,
            q: 6,
            n_x: 3,
            ..Default::default()
        }
    }

    #[test]
    fn designs_are_nested_in_q() {
        let big = TrainingSchedule::draw(&SystemConfig { q: 9, ..small_cfg() }, 4);
        let small = TrainingSchedule::draw(&small_cfg(), 4);
        assert_eq!(big.truncated(small_cfg().q), small);
        let link = BsRisLink::from_config(&small_cfg());
        let a = SensingSetup::new(&SystemConfig { q: 9, ..small_cfg() }, &big, &link).unwrap().truncated(6);
        let b = SensingSetup::new(&small_cfg(), &small, &link).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_modulus_and_deterministic() {
        let a = random_unit_modulus(5, 7, 3);
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        assert_eq!(a, random_unit_modulus(5, 7, 3));
    }

    #[test]
    fn column_inner_products_scale_with_rows() {
        let rows = 50;
        let m = random_unit_modulus(rows, 2000, 8);
        let mut acc = 0.0;
        let mut n = 0;
        for j in (0..m.ncols()).step_by(2) {
            acc += m.column(j).dotc(&m.column(j + 1)).norm_sqr();
            n += 1;
        }
        let mean = acc / n as f64;
        assert!((mean / rows as f64 - 1.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn effective_matrix_cases() {
        let v = random_unit_modulus(3, 4, 1);
        let ones = [C64::new(1.0, 0.0); 4];
        assert_eq!(effective_ris_matrix(&v, &ones).unwrap(), v);
        let h = [C64::new(0.5, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, 2.0), C64::new(3.0, -1.0)];
        let row = CMat::from_element(1, 4, C64::new(1.0, 0.0));
        let e = effective_ris_matrix(&row, &h).unwrap();
        assert!(e.iter().zip(h.iter()).all(|(a, b)| a == b));
        assert_eq!(effective_ris_matrix(&v, &[C64::new(0.0, 0.0); 4]), Err(Error::ZeroEffectiveChannel));
    }

    #[test]
    fn matched_combiner_gives_flat_effective_channel() {
        let cfg = SystemConfig { bs_ris_gain: 0.7, ..small_cfg() };
        let sched = TrainingSchedule::draw(&cfg, 2);
        let setup = SensingSetup::new(&cfg, &sched, &BsRisLink::from_config(&cfg)).unwrap();
        let want = 0.7 / (cfg.n_ris() as f64).sqrt();
        for h in &setup.h_b_tilde {
            assert!(h.iter().all(|z| (z.norm() - want).abs() < 1e-14));
        }
        for n in 0..cfg.n_x {
            assert!((sched.f.column(n).norm_squared() - cfg.sigma_p2()).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_and_linear() {
        let cfg = SystemConfig { sigma_n2_dbm: f64::NEG_INFINITY, ..small_cfg() };
        let sched = TrainingSchedule::draw(&cfg, 2);
        let paths = sample_paths(&cfg, 4).unwrap();
        let ch = ChannelRealization::new(&cfg, paths, BsRisLink::from_config(&cfg)).unwrap();
        let m = simulate_training(&cfg, &ch, &sched, 5).unwrap();
        for k in 0..cfg.subcarriers {
            let want = m.vtilde(k) * &ch.h_u[k] * m.f();
            assert!(frob2(&(&m.y[k] - want)).sqrt() < 1e-12 * frob2(&m.y[k]).sqrt());
        }
        let doubled = TrainingSchedule { f: &sched.f * C64::new(2.0, 0.0), ..sched.clone() };
        let m2 = simulate_training(&cfg, &ch, &doubled, 5).unwrap();
        for k in 0..cfg.subcarriers {
            assert!(frob2(&(&m2.y[k] - &m.y[k] * C64::new(2.0, 0.0))).sqrt() < 1e-12 * frob2(&m2.y[k]).sqrt());
        }
    }

    #[test]
    fn noise_only_energy() {
        let cfg = small_cfg();
        let sched = TrainingSchedule::draw(&cfg, 2);
        let setup = Arc::new(SensingSetup::new(&cfg, &sched, &BsRisLink::from_config(&cfg)).unwrap());
        let zero = vec![CMat::zeros(cfg.n_ris(), cfg.n_user()); cfg.subcarriers];
        let trials = 2000;
        let mut acc = 0.0;
        for t in 0..trials {
            acc += observe(&setup, &zero, t).y.iter().map(frob2).sum::<f64>();
        }
        let mean = acc / (trials as usize * cfg.subcarriers) as f64;
        let want = (cfg.q * cfg.n_x) as f64 * cfg.sigma_n2();
        assert!((mean / want - 1.0).abs() < 0.03, "{mean} vs {want}");
    }

    #[test]
    fn noise_trace_identity() {
        let (q, nx, var) = (4, 3, 2.5);
        let mut rng = seeded(12);
        // Random PSD X keeps Tr{X} away from zero so the relative error is informative.
        let g = complex_normal_matrix(&mut rng, nx, nx, 1.0);
        let x = &g * g.adjoint();
        let trials = 10_000;
        let mut acc = CMat::zeros(q, q);
        for _ in 0..trials {
            let n = draw_noise(&mut rng, q, nx, var);
            acc += &n * &x * n.adjoint();
        }
        acc /= C64::new(trials as f64, 0.0);
        let want = CMat::identity(q, q) * (x.trace() * var);
        assert!(frob2(&(acc - &want)).sqrt() < 0.05 * frob2(&want).sqrt());
    }
}
