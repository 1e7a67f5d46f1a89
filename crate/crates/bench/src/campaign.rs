//! Seeded Monte-Carlo campaigns.
//!
//! A campaign fixes the training design (V, F, combiners) and the
//! dictionaries; trials redraw the channel and the noise. Every random draw
//! comes from `derive_seed(cfg.seed, stream, index)`, so trial `t` sees the
//! same channel whatever else is swept.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};
use xlris_core::channel::{sample_paths, BsRisLink, ChannelRealization};
use xlris_core::estimators::{
    angle_mse, estimate_1dls, estimate_2dls, estimate_2dols, estimate_komp, lower_bound, mmpsr, AngleMse,
    EstimationResult, Matcher, SensingContext,
};
use xlris_core::measurement::{observe, MeasurementSet, SensingSetup, TrainingSchedule};
use xlris_core::rng::derive_seed;
use xlris_core::timing::{Clock, Stopwatch};
use xlris_core::SystemConfig;

use crate::cache::DictionaryCache;

const STREAM_DESIGN: u64 = 0x4445_5349;
const STREAM_CHANNEL: u64 = 0x4348_414e;
const STREAM_NOISE: u64 = 0x4e4f_4953;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Ls2d,
    Ls1d,
    Komp,
    CcMmpsr,
    InMmpsr,
    Ols2d,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Ls2d, Method::Ls1d, Method::Komp, Method::CcMmpsr, Method::InMmpsr, Method::Ols2d];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ls2d => "2d-ls",
            Method::Ls1d => "1d-ls",
            Method::Komp => "komp",
            Method::CcMmpsr => "cc-mmpsr",
            Method::InMmpsr => "in-mmpsr",
            Method::Ols2d => "2d-ols",
        }
    }

    /// Methods that score against the dictionaries.
    pub fn needs_dictionaries(self) -> bool {
        matches!(self, Method::Komp | Method::CcMmpsr | Method::InMmpsr)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            format!("unknown method `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Design, sensing operator and (optionally) dictionaries shared by all
/// trials.
pub struct Campaign {
    pub cfg: SystemConfig,
    pub link: BsRisLink,
    pub setup: Arc<SensingSetup>,
    pub ctx: Option<SensingContext>,
}

pub struct Outcome {
    pub result: EstimationResult,
    pub angle: Option<AngleMse>,
}

impl Campaign {
    pub fn prepare(cfg: &SystemConfig, with_dictionaries: bool, cache: &DictionaryCache) -> Result<Self> {
        cfg.validate()?;
        let link = BsRisLink::from_config(cfg);
        let sched = TrainingSchedule::draw(cfg, derive_seed(cfg.seed, STREAM_DESIGN, 0));
        let setup = Arc::new(SensingSetup::new(cfg, &sched, &link)?);
        let ctx = if with_dictionaries {
            let freqs = cfg.carriers().freqs();
            Some(SensingContext::new(cache.spherical(cfg)?, cache.angular(cfg)?, &setup, &freqs))
        } else {
            None
        };
        Ok(Self { cfg: cfg.clone(), link, setup, ctx })
    }

    /// The same campaign restricted to its first `q` training slots.
    pub fn truncated(&self, q: usize) -> Result<Self> {
        if q == 0 || q > self.cfg.q {
            bail!("cannot truncate a Q={} design to {q} slots", self.cfg.q);
        }
        Ok(Self {
            cfg: SystemConfig { q, ..self.cfg.clone() },
            link: self.link,
            setup: Arc::new(self.setup.truncated(q)),
            ctx: self.ctx.as_ref().map(|c| c.truncated(q)),
        })
    }

    pub fn channel_seed(&self, trial: usize) -> u64 {
        derive_seed(self.cfg.seed, STREAM_CHANNEL, trial as u64)
    }

    pub fn noise_seed(&self, trial: usize) -> u64 {
        derive_seed(self.cfg.seed, STREAM_NOISE, trial as u64)
    }

    pub fn channel(&self, trial: usize) -> Result<ChannelRealization> {
        let paths = sample_paths(&self.cfg, self.channel_seed(trial))?;
        Ok(ChannelRealization::new(&self.cfg, paths, self.link)?)
    }

    pub fn measure(&self, ch: &ChannelRealization, trial: usize) -> MeasurementSet {
        observe(&self.setup, &ch.h_u, self.noise_seed(trial))
    }

    pub fn run(
        &self,
        method: Method,
        meas: &MeasurementSet,
        ch: &ChannelRealization,
        clock: &dyn Clock,
    ) -> Result<Outcome> {
        let cfg = &self.cfg;
        let ctx = || self.ctx.as_ref().ok_or_else(|| anyhow!("{method} needs a campaign prepared with dictionaries"));
        let result = match method {
            Method::Ls2d | Method::Ls1d => {
                let mut w = Stopwatch::start(clock);
                let h_hat = match method {
                    Method::Ls2d => estimate_2dls(meas)?,
                    _ => estimate_1dls(meas, cfg.omp_entry_cap)?,
                };
                w.lap("solve");
                EstimationResult::new(method.name(), None, h_hat, &ch.h_u, w.finish())?
            }
            Method::Komp => estimate_komp(meas, ctx()?, cfg.paths, cfg.omp_entry_cap, &ch.h_u, clock)?,
            Method::CcMmpsr => mmpsr(meas, ctx()?, cfg.paths, Matcher::Cc, &cfg.refine, &ch.h_u, clock)?,
            Method::InMmpsr => mmpsr(meas, ctx()?, cfg.paths, Matcher::In, &cfg.refine, &ch.h_u, clock)?,
            Method::Ols2d => estimate_2dols(cfg, meas, &ch.paths, &ch.h_u, clock)?,
        };
        let angle = match &result.support {
            Some(s) if s.paths.len() == ch.paths.len() => Some(angle_mse(&ch.paths, s)?),
            _ => None,
        };
        Ok(Outcome { result, angle })
    }

    pub fn lower_bound(&self, ch: &ChannelRealization) -> Result<f64> {
        Ok(lower_bound(&self.cfg, &ch.paths, &self.setup)?)
    }
}
