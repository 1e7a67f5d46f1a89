//! The experiment matrix: NMSE sweeps, angle MSE, beam trajectories,
//! near-field gain curves, bound-versus-oracle and complexity scans.
//!
//! Each run yields one CSV table plus a JSON manifest. Given the same
//! config and spec the CSV bytes are identical across runs, except for
//! `complexity_scan`, whose columns are wall-clock times.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use xlris_core::nearfield::{gain_vs_distance, DEFAULT_DIRECTIONS_DEG};
use xlris_core::squint::trajectory;
use xlris_core::timing::Clock;
use xlris_core::{SphericalPoint, SystemConfig};

use crate::cache::DictionaryCache;
use crate::campaign::{Campaign, Method};
use crate::config::{config_hash, with_param};
use crate::formats::{write_json, ChannelFile, MeasurementFile, ResultFile, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    NmseVsQ,
    NmseVsK,
    NmseVsPower,
    AngleMse,
    TrajectoryMap,
    GainVsDistance,
    LbVsOls,
    ComplexityScan,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::NmseVsQ,
        Experiment::NmseVsK,
        Experiment::NmseVsPower,
        Experiment::AngleMse,
        Experiment::TrajectoryMap,
        Experiment::GainVsDistance,
        Experiment::LbVsOls,
        Experiment::ComplexityScan,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::NmseVsQ => "nmse_vs_Q",
            Experiment::NmseVsK => "nmse_vs_K",
            Experiment::NmseVsPower => "nmse_vs_power",
            Experiment::AngleMse => "angle_mse",
            Experiment::TrajectoryMap => "trajectory_map",
            Experiment::GainVsDistance => "gain_vs_distance",
            Experiment::LbVsOls => "lb_vs_ols",
            Experiment::ComplexityScan => "complexity_scan",
        }
    }

    /// Config field swept by default, if the experiment sweeps one.
    fn default_param(self) -> Option<&'static str> {
        match self {
            Experiment::NmseVsQ | Experiment::LbVsOls => Some("q"),
            Experiment::NmseVsK => Some("subcarriers"),
            Experiment::NmseVsPower | Experiment::AngleMse => Some("sigma_p2_dbm"),
            _ => None,
        }
    }

    fn default_values(self) -> Vec<f64> {
        match self {
            Experiment::NmseVsQ => vec![32.0, 40.0, 48.0, 56.0, 64.0, 72.0],
            Experiment::NmseVsK => vec![1.0, 8.0, 32.0, 128.0],
            Experiment::NmseVsPower => vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            Experiment::AngleMse => vec![0.0, 10.0, 20.0, 30.0],
            Experiment::TrajectoryMap => vec![5.0, 10.0, 20.0, 50.0],
            Experiment::GainVsDistance => vec![5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0],
            Experiment::LbVsOls => vec![40.0, 72.0],
            Experiment::ComplexityScan => vec![1.0, 2.0],
        }
    }

    fn default_methods(self) -> Vec<Method> {
        match self {
            Experiment::NmseVsQ | Experiment::NmseVsPower => vec![Method::CcMmpsr, Method::InMmpsr, Method::Ols2d],
            Experiment::NmseVsK | Experiment::AngleMse => vec![Method::CcMmpsr, Method::InMmpsr],
            Experiment::LbVsOls => vec![Method::Ols2d],
            Experiment::ComplexityScan => vec![Method::CcMmpsr, Method::Komp],
            Experiment::TrajectoryMap | Experiment::GainVsDistance => vec![],
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.id() == s).ok_or_else(|| {
            let ids: Vec<&str> = Experiment::ALL.iter().map(|e| e.id()).collect();
            format!("unknown experiment `{s}` (expected one of {})", ids.join(", "))
        })
    }
}

/// What to sweep and which estimators to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    /// Swept config field, for the NMSE and bound experiments.
    pub param: Option<String>,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
    /// Target `(theta, phi)` in degrees for `trajectory_map`.
    pub target_deg: (f64, f64),
    /// RIS `n_y` values for `gain_vs_distance`; `n_z` comes from the config.
    pub ris_sizes: Vec<usize>,
    /// Trials whose channel, pilots and results are also written as JSON.
    pub save_trials: usize,
}

impl ExperimentSpec {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            param: experiment.default_param().map(String::from),
            values: experiment.default_values(),
            methods: experiment.default_methods(),
            target_deg: (45.0, 45.0),
            ris_sizes: vec![128, 256, 512],
            save_trials: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            bail!("{}: the swept value list is empty", self.experiment.id());
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            bail!("{}: swept value {v} is not finite", self.experiment.id());
        }
        let needs_methods = !matches!(self.experiment, Experiment::TrajectoryMap | Experiment::GainVsDistance);
        if needs_methods && self.methods.is_empty() {
            bail!("{}: no methods selected", self.experiment.id());
        }
        if self.experiment == Experiment::GainVsDistance && self.ris_sizes.is_empty() {
            bail!("gain_vs_distance: no RIS sizes given");
        }
        Ok(())
    }
}

/// Header plus rows of already-formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)?)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Cell parsed as a float; `NaN` for empty cells.
    pub fn value(&self, row: usize, col: &str) -> f64 {
        let c = self.column(col).unwrap_or_else(|| panic!("no column {col}"));
        self.rows[row][c].parse().unwrap_or(f64::NAN)
    }
}

/// Shortest round-trip representation; empty for absent values.
fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-method accumulator over trials.
#[derive(Default)]
struct MethodStats {
    nmse: Vec<f64>,
    failures: usize,
    first_error: Option<String>,
    angles: Vec<[f64; 4]>,
    matching_s: Vec<f64>,
    total_s: Vec<f64>,
}

impl MethodStats {
    fn angle_means(&self) -> [Option<f64>; 4] {
        let col = |i: usize| mean(&self.angles.iter().map(|a| a[i]).collect::<Vec<_>>());
        [col(0), col(1), col(2), col(3)]
    }

    fn angle_total_median(&self) -> Option<f64> {
        median(&self.angles.iter().map(|a| a.iter().sum()).collect::<Vec<_>>())
    }
}

pub struct RunContext<'a> {
    pub cache: &'a DictionaryCache,
    pub clock: &'a dyn Clock,
    /// Directory for per-trial JSON dumps, when `save_trials > 0`.
    pub trial_dir: Option<PathBuf>,
    /// Progress lines go here when set.
    pub progress: bool,
}

pub fn run_experiment(spec: &ExperimentSpec, cfg: &SystemConfig, rc: &RunContext<'_>) -> Result<Table> {
    spec.validate()?;
    cfg.validate()?;
    match spec.experiment {
        Experiment::NmseVsQ | Experiment::NmseVsK | Experiment::NmseVsPower | Experiment::AngleMse => {
            nmse_sweep(spec, cfg, rc)
        }
        Experiment::LbVsOls => bound_sweep(spec, cfg, rc),
        Experiment::TrajectoryMap => trajectory_map(spec, cfg),
        Experiment::GainVsDistance => gain_table(spec, cfg),
        Experiment::ComplexityScan => complexity_scan(spec, cfg, rc),
    }
}

fn param_of(spec: &ExperimentSpec) -> Result<&str> {
    spec.param.as_deref().ok_or_else(|| anyhow::anyhow!("{} needs a swept parameter", spec.experiment.id()))
}

/// One campaign per swept value. Sweeps over `q` share a single design
/// drawn at the largest `q` and truncated.
fn campaigns<'s>(
    spec: &'s ExperimentSpec,
    cfg: &SystemConfig,
    dictionaries: bool,
    cache: &DictionaryCache,
) -> Result<impl Iterator<Item = Result<(f64, Campaign)>> + 's> {
    let param = param_of(spec)?.to_string();
    let shared = if param == "q" {
        let q_max = spec.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some(Campaign::prepare(&with_param(cfg, "q", q_max)?, dictionaries, cache)?)
    } else {
        None
    };
    let cfg = cfg.clone();
    let cache = cache.clone();
    Ok(spec.values.iter().map(move |&v| {
        let c = match &shared {
            Some(big) => big.truncated(with_param(&cfg, "q", v)?.q)?,
            None => Campaign::prepare(&with_param(&cfg, &param, v)?, dictionaries, &cache)?,
        };
        Ok((v, c))
    }))
}

fn nmse_sweep(spec: &ExperimentSpec, cfg: &SystemConfig, rc: &RunContext<'_>) -> Result<Table> {
    let param = param_of(spec)?;
    let dictionaries = spec.methods.iter().any(|m| m.needs_dictionaries());
    let mut table = Table::new(&[
        "param",
        "value",
        "method",
        "trials",
        "failures",
        "median_nmse",
        "mean_nmse",
        "median_nmse_db",
        "ris_theta_mse",
        "ris_phi_mse",
        "user_theta_mse",
        "user_phi_mse",
        "median_angle_mse",
    ]);
    for item in campaigns(spec, cfg, dictionaries, rc.cache)? {
        let (value, camp) = item?;
        let mut stats: Vec<MethodStats> = spec.methods.iter().map(|_| MethodStats::default()).collect();
        for t in 0..camp.cfg.trials {
            let ch = camp.channel(t)?;
            let meas = camp.measure(&ch, t);
            let dump = rc.trial_dir.as_ref().filter(|_| t < spec.save_trials);
            if let Some(dir) = dump {
                let d = value_dir(dir, param, value);
                write_json(&d.join(format!("channel-{t:04}.json")), &ChannelFile::new(&camp.cfg, camp.channel_seed(t), &ch))?;
                write_json(&d.join(format!("measurement-{t:04}.json")), &MeasurementFile::new(&camp.cfg, &meas))?;
            }
            for (m, st) in spec.methods.iter().zip(stats.iter_mut()) {
                match camp.run(*m, &meas, &ch, rc.clock) {
                    Ok(out) => {
                        st.nmse.push(out.result.nmse);
                        if let Some(a) = out.angle {
                            st.angles.push([a.ris_theta, a.ris_phi, a.user_theta, a.user_phi]);
                        }
                        if let Some(dir) = dump {
                            let path = value_dir(dir, param, value).join(format!("result-{}-{t:04}.json", m.name()));
                            write_json(&path, &ResultFile::new(&camp.cfg, camp.channel_seed(t), &out.result))?;
                        }
                    }
                    Err(e) => {
                        st.failures += 1;
                        st.first_error.get_or_insert_with(|| format!("{e:#}"));
                    }
                }
            }
        }
        for (m, st) in spec.methods.iter().zip(&stats) {
            if rc.progress {
                let med = median(&st.nmse).map(num).unwrap_or_else(|| "-".into());
                eprintln!("{} {param}={value} {m}: median NMSE {med}, {} failures", spec.experiment.id(), st.failures);
                if let Some(e) = &st.first_error {
                    eprintln!("  first failure: {e}");
                }
            }
            let a = st.angle_means();
            let med = median(&st.nmse);
            table.rows.push(vec![
                param.to_string(),
                value.to_string(),
                m.name().to_string(),
                camp.cfg.trials.to_string(),
                st.failures.to_string(),
                opt(med),
                opt(mean(&st.nmse)),
                opt(med.map(|x| 10.0 * x.log10())),
                opt(a[0]),
                opt(a[1]),
                opt(a[2]),
                opt(a[3]),
                opt(st.angle_total_median()),
            ]);
        }
    }
    Ok(table)
}

fn value_dir(dir: &Path, param: &str, value: f64) -> PathBuf {
    dir.join(format!("{param}-{value}"))
}

/// Per trial: empirical 2D-OLS NMSE and the analytic lower bound.
fn bound_sweep(spec: &ExperimentSpec, cfg: &SystemConfig, rc: &RunContext<'_>) -> Result<Table> {
    let param = param_of(spec)?;
    let mut table = Table::new(&[
        "param",
        "value",
        "trials",
        "failures",
        "median_ols_nmse",
        "mean_ols_nmse",
        "median_lower_bound",
        "mean_lower_bound",
        "bound_violations",
    ]);
    for item in campaigns(spec, cfg, false, rc.cache)? {
        let (value, camp) = item?;
        let (mut ols, mut lb, mut failures, mut violations) = (Vec::new(), Vec::new(), 0, 0);
        for t in 0..camp.cfg.trials {
            let ch = camp.channel(t)?;
            let meas = camp.measure(&ch, t);
            match (camp.run(Method::Ols2d, &meas, &ch, rc.clock), camp.lower_bound(&ch)) {
                (Ok(o), Ok(b)) => {
                    if b > o.result.nmse {
                        violations += 1;
                    }
                    ols.push(o.result.nmse);
                    lb.push(b);
                }
                _ => failures += 1,
            }
        }
        if rc.progress {
            eprintln!("lb_vs_ols {param}={value}: {violations} violations, {failures} failures");
        }
        table.rows.push(vec![
            param.to_string(),
            value.to_string(),
            camp.cfg.trials.to_string(),
            failures.to_string(),
            opt(median(&ols)),
            opt(mean(&ols)),
            opt(median(&lb)),
            opt(mean(&lb)),
            violations.to_string(),
        ]);
    }
    Ok(table)
}

/// Trajectories for a fixed target direction at each swept distance.
fn trajectory_map(spec: &ExperimentSpec, cfg: &SystemConfig) -> Result<Table> {
    let mut table = Table::new(&["target_r", "k", "f_k", "theta_deg", "phi_deg", "r", "gain"]);
    let (theta, phi) = spec.target_deg;
    for &r in &spec.values {
        let desired = SphericalPoint::new(theta.to_radians(), phi.to_radians(), r)?;
        for row in trajectory(cfg, &desired)? {
            table.rows.push(vec![
                r.to_string(),
                row.k.to_string(),
                num(row.f_k),
                num(row.theta_deg),
                num(row.phi_deg),
                num(row.r),
                num(row.gain),
            ]);
        }
    }
    Ok(table)
}

fn gain_table(spec: &ExperimentSpec, cfg: &SystemConfig) -> Result<Table> {
    let mut table = Table::new(&["distance", "ris_ny", "ris_nz", "gain"]);
    let sizes: Vec<(usize, usize)> = spec.ris_sizes.iter().map(|&n| (n, cfg.ris_nz)).collect();
    let dirs: Vec<(f64, f64)> =
        DEFAULT_DIRECTIONS_DEG.iter().map(|&(t, p)| (t.to_radians(), p.to_radians())).collect();
    for p in gain_vs_distance(cfg.f_c, &sizes, &spec.values, &dirs)? {
        table.rows.push(vec![p.distance.to_string(), p.ris_ny.to_string(), p.ris_nz.to_string(), num(p.gain)]);
    }
    Ok(table)
}

/// Config for one complexity-scan point: MMPSR scales the RIS grid only,
/// K-OMP scales both grids.
pub fn scaled_grids(cfg: &SystemConfig, method: Method, scale: f64) -> Result<SystemConfig> {
    let scaled = |g: usize| -> Result<f64> {
        let v = g as f64 * scale;
        if v < 1.0 || v.fract() != 0.0 {
            bail!("grid scale {scale} does not give an integer grid from {g}");
        }
        Ok(v)
    };
    let mut out = with_param(cfg, "grid_ris_y", scaled(cfg.grid_ris_y)?)?;
    if method == Method::Komp {
        out = with_param(&out, "grid_user_y", scaled(cfg.grid_user_y)?)?;
    }
    Ok(out)
}

fn complexity_scan(spec: &ExperimentSpec, cfg: &SystemConfig, rc: &RunContext<'_>) -> Result<Table> {
    let mut table = Table::new(&[
        "scale",
        "method",
        "ris_atoms",
        "user_atoms",
        "trials",
        "median_matching_s",
        "mean_matching_s",
        "median_total_s",
    ]);
    for &scale in &spec.values {
        for &m in &spec.methods {
            let c = scaled_grids(cfg, m, scale)?;
            let camp = Campaign::prepare(&c, m.needs_dictionaries(), rc.cache)?;
            let mut st = MethodStats::default();
            for t in 0..c.trials {
                let ch = camp.channel(t)?;
                let meas = camp.measure(&ch, t);
                let out = camp.run(m, &meas, &ch, rc.clock)?;
                let stage = if out.result.timings.iter().any(|s| s.stage == "matching") { "matching" } else { "solve" };
                st.matching_s.push(out.result.stage_seconds(stage));
                st.total_s.push(out.result.timings.iter().map(|s| s.seconds).sum());
            }
            let (g_r, g_u) = camp.ctx.as_ref().map(|x| (x.ris_op.atoms(), x.user_op.atoms())).unwrap_or((0, 0));
            if rc.progress {
                eprintln!("complexity_scan scale={scale} {m}: G_R={g_r} G_U={g_u} median matching {:?}", median(&st.matching_s));
            }
            table.rows.push(vec![
                scale.to_string(),
                m.name().to_string(),
                g_r.to_string(),
                g_u.to_string(),
                c.trials.to_string(),
                opt(median(&st.matching_s)),
                opt(mean(&st.matching_s)),
                opt(median(&st.total_s)),
            ]);
        }
    }
    Ok(table)
}

/// Sidecar describing how a CSV was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub experiment: String,
    pub param: Option<String>,
    pub values: Vec<f64>,
    pub methods: Vec<String>,
    pub config_hash: String,
    pub seed: u64,
    pub trials: usize,
    pub git_describe: String,
    pub csv: String,
    /// False when the table holds wall-clock measurements.
    pub deterministic: bool,
    pub config: SystemConfig,
}

pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Writes `<id>.csv` and `<id>.manifest.json` into `out_dir`.
pub fn write_outputs(out_dir: &Path, spec: &ExperimentSpec, cfg: &SystemConfig, table: &Table) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let id = spec.experiment.id();
    let csv_path = out_dir.join(format!("{id}.csv"));
    fs::write(&csv_path, table.to_csv()?).with_context(|| format!("writing {}", csv_path.display()))?;
    let manifest = Manifest {
        format: "xlris-manifest".into(),
        version: FORMAT_VERSION,
        experiment: id.into(),
        param: spec.param.clone(),
        values: spec.values.clone(),
        methods: spec.methods.iter().map(|m| m.name().to_string()).collect(),
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        trials: cfg.trials,
        git_describe: git_describe(),
        csv: csv_path.file_name().expect("file name").to_string_lossy().into_owned(),
        deterministic: spec.experiment != Experiment::ComplexityScan,
        config: cfg.clone(),
    };
    let manifest_path = out_dir.join(format!("{id}.manifest.json"));
    write_json(&manifest_path, &manifest)?;
    Ok((csv_path, manifest_path))
}

/// One line per experiment id, for help output.
pub fn catalogue() -> String {
    let mut s = String::new();
    for e in Experiment::ALL {
        let _ = writeln!(s, "  {}", e.id());
    }
    s
}
