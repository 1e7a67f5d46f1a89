//! On-disk formats. All JSON documents carry `format`, `version` and the
//! SHA-256 config hash of the run that produced them.
//!
//! Complex matrices are stored as [`ComplexMatrix`]: `rows`, `cols` and
//! separate `re` / `im` arrays in column-major order, the same layout as an
//! `.npy` array with `fortran_order: True` split into real and imaginary
//! planes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use xlris_core::channel::{BsRisLink, ChannelPath, ChannelRealization};
use xlris_core::estimators::{EstimationResult, SupportEstimate};
use xlris_core::measurement::{MeasurementSet, SensingSetup};
use xlris_core::squint::TrajectoryRow;
use xlris_core::timing::StageTiming;
use xlris_core::{CMat, SystemConfig, C64};

use crate::config::config_hash;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMat> for ComplexMatrix {
    fn from(m: &CMat) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            re: m.iter().map(|z| z.re).collect(),
            im: m.iter().map(|z| z.im).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn to_cmat(&self) -> Result<CMat> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            bail!("matrix payload has {} / {} entries, expected {n}", self.re.len(), self.im.len());
        }
        let data: Vec<C64> = self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)).collect();
        Ok(CMat::from_column_slice(self.rows, self.cols, &data))
    }

    fn from_vec(v: &[C64]) -> Self {
        Self::from(&CMat::from_column_slice(v.len(), 1, v))
    }
}

/// Paths and BS-RIS link; `H_U[k]` is regenerated from them on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub paths: Vec<ChannelPath>,
    pub bs_link: BsRisLink,
}

impl ChannelFile {
    pub fn new(cfg: &SystemConfig, seed: u64, ch: &ChannelRealization) -> Self {
        Self {
            format: "xlris-channel".into(),
            version: FORMAT_VERSION,
            config_hash: config_hash(cfg),
            seed,
            paths: ch.paths.clone(),
            bs_link: ch.bs_link,
        }
    }

    pub fn realize(&self, cfg: &SystemConfig) -> Result<ChannelRealization> {
        check_header(&self.format, "xlris-channel", self.version)?;
        check_hash(&self.config_hash, cfg)?;
        Ok(ChannelRealization::new(cfg, self.paths.clone(), self.bs_link)?)
    }
}

/// Pilots plus everything needed to rebuild the sensing operator:
/// RIS configurations `V` (`Q × N_R`), precoder `F` (`N_U × N_X`), the
/// combined BS-RIS vectors `h̃_B[k]` (`N_R × 1` each), per-subcarrier noise
/// variance and the pilots `Y[k]` (`Q × N_X` each).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub noise_seed: u64,
    pub v_rows: ComplexMatrix,
    pub f: ComplexMatrix,
    pub h_b_tilde: Vec<ComplexMatrix>,
    pub noise_var: Vec<f64>,
    pub y: Vec<ComplexMatrix>,
}

impl MeasurementFile {
    pub fn new(cfg: &SystemConfig, m: &MeasurementSet) -> Self {
        let s = &m.setup;
        Self {
            format: "xlris-measurement".into(),
            version: FORMAT_VERSION,
            config_hash: config_hash(cfg),
            noise_seed: m.noise_seed,
            v_rows: (&s.v_rows).into(),
            f: (&s.f).into(),
            h_b_tilde: s.h_b_tilde.iter().map(|h| ComplexMatrix::from_vec(h)).collect(),
            noise_var: s.noise_var.clone(),
            y: m.y.iter().map(ComplexMatrix::from).collect(),
        }
    }

    pub fn measurement(&self, cfg: &SystemConfig) -> Result<MeasurementSet> {
        check_header(&self.format, "xlris-measurement", self.version)?;
        check_hash(&self.config_hash, cfg)?;
        let h_b_tilde = self
            .h_b_tilde
            .iter()
            .map(|h| Ok(h.to_cmat()?.iter().cloned().collect()))
            .collect::<Result<Vec<Vec<C64>>>>()?;
        let setup = SensingSetup::from_parts(self.v_rows.to_cmat()?, h_b_tilde, self.f.to_cmat()?, self.noise_var.clone())?;
        let y = self.y.iter().map(ComplexMatrix::to_cmat).collect::<Result<Vec<_>>>()?;
        if y.len() != setup.subcarriers() {
            bail!("{} pilot blocks for {} subcarriers", y.len(), setup.subcarriers());
        }
        Ok(MeasurementSet { setup: Arc::new(setup), y, noise_seed: self.noise_seed })
    }
}

/// Estimator output without the channel estimate itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub method: String,
    pub nmse: f64,
    pub nmse_per_k: Vec<f64>,
    pub support: Option<SupportEstimate>,
    pub timings: Vec<StageTiming>,
}

impl ResultFile {
    pub fn new(cfg: &SystemConfig, seed: u64, r: &EstimationResult) -> Self {
        Self {
            format: "xlris-result".into(),
            version: FORMAT_VERSION,
            config_hash: config_hash(cfg),
            seed,
            method: r.method.clone(),
            nmse: r.nmse,
            nmse_per_k: r.nmse_per_k.clone(),
            support: r.support.clone(),
            timings: r.timings.clone(),
        }
    }
}

fn check_header(got: &str, want: &str, version: u32) -> Result<()> {
    if got != want {
        bail!("expected a `{want}` document, found `{got}`");
    }
    if version != FORMAT_VERSION {
        bail!("unsupported {want} version {version}");
    }
    Ok(())
}

fn check_hash(stored: &str, cfg: &SystemConfig) -> Result<()> {
    let h = config_hash(cfg);
    if stored != h {
        bail!("document was produced under config {stored}, current config is {h}");
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Trajectory CSV with header `k,f_k,theta_deg,phi_deg,r,gain`; `k` is
/// one-based, `f_k` in Hz, `r` in meters.
pub fn write_trajectory_csv<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
