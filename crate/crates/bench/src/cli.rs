//! Command-line interface. Config resolution order: defaults, then the
//! `--config` file, then individual flags.

use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use xlris_core::nearfield::{gain_vs_distance, DEFAULT_DIRECTIONS_DEG};
use xlris_core::squint::trajectory;
use xlris_core::{SphericalPoint, SystemConfig};

use crate::cache::{DictionaryCache, DictionaryKey, CACHE_ENV};
use crate::campaign::Method;
use crate::clock::WallClock;
use crate::config::{load_file, short_hash};
use crate::experiments::{catalogue, run_experiment, write_outputs, Experiment, ExperimentSpec, RunContext};
use crate::formats::write_trajectory_csv;

macro_rules! config_flags {
    ($($field:ident: $ty:ty => $help:literal,)*; $($rfield:ident => $rflag:literal, $rhelp:literal,)*) => {
        /// One optional flag per config field.
        #[derive(Debug, Clone, Default, Args)]
        pub struct ConfigFlags {
            $(
                #[arg(long, global = true, allow_negative_numbers = true, help = $help)]
                pub $field: Option<$ty>,
            )*
            $(
                #[arg(long = $rflag, global = true, help = $rhelp)]
                pub $rfield: Option<f64>,
            )*
        }

        impl ConfigFlags {
            pub fn apply(&self, cfg: &mut SystemConfig) {
                $( if let Some(v) = self.$field { cfg.$field = v; } )*
                $( if let Some(v) = self.$rfield { cfg.refine.$rfield = v; } )*
            }
        }
    };
}

config_flags! {
    ris_ny: usize => "RIS elements along y",
    ris_nz: usize => "RIS elements along z",
    user_ny: usize => "User elements along y",
    user_nz: usize => "User elements along z",
    bs_ny: usize => "BS elements along y",
    bs_nz: usize => "BS elements along z",
    f_c: f64 => "Central carrier frequency [Hz]",
    f_s: f64 => "Bandwidth [Hz]",
    subcarriers: usize => "Number of subcarriers K",
    paths: usize => "Number of RIS-user paths P",
    q: usize => "Training slots Q",
    n_x: usize => "Pilot beams per slot N_X",
    sigma_p2_dbm: f64 => "Pilot power [dBm]",
    sigma_n2_dbm: f64 => "Noise power [dBm]",
    grid_ris_y: usize => "RIS dictionary grid along y",
    grid_ris_z: usize => "RIS dictionary grid along z",
    grid_user_y: usize => "User dictionary grid along y",
    grid_user_z: usize => "User dictionary grid along z",
    mu_m: f64 => "Target coherence between distance rings",
    r_min: f64 => "Closest distance ring [m]",
    dist_min: f64 => "Minimum scatterer distance [m]",
    dist_max: f64 => "Maximum scatterer distance [m]",
    bs_ris_distance: f64 => "BS-RIS distance [m]",
    bs_ris_gain: f64 => "BS-RIS gain modulus",
    bs_theta_t: f64 => "BS departure virtual elevation",
    bs_phi_t: f64 => "BS departure virtual azimuth",
    ris_theta_t: f64 => "RIS arrival virtual elevation",
    ris_phi_t: f64 => "RIS arrival virtual azimuth",
    theta_min_deg: f64 => "Lowest scatterer elevation [deg]",
    theta_max_deg: f64 => "Highest scatterer elevation [deg]",
    phi_min_deg: f64 => "Lowest scatterer azimuth [deg]",
    phi_max_deg: f64 => "Highest scatterer azimuth [deg]",
    nlos_excess_max: f64 => "Largest extra NLoS path length [m]",
    omp_entry_cap: usize => "Entry budget for Kronecker systems",
    trials: usize => "Monte-Carlo trials",
    seed: u64 => "Master seed",
    ;
    ris_theta => "refine-ris-theta", "Refinement step, RIS virtual elevation",
    ris_phi => "refine-ris-phi", "Refinement step, RIS virtual azimuth",
    user_theta => "refine-user-theta", "Refinement step, user virtual elevation",
    user_phi => "refine-user-phi", "Refinement step, user virtual azimuth",
    inv_r => "refine-inv-r", "Refinement step for 1/r, as a fraction of the ring step",
}

#[derive(Debug, Parser)]
#[command(name = "xlris", version, about = "Near-field wideband XL-RIS channel estimation benchmarks")]
pub struct Cli {
    /// TOML or JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Dictionary cache directory.
    #[arg(long, global = true, env = CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,

    #[command(flatten)]
    pub flags: ConfigFlags,

    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Dictionary operations.
    #[command(subcommand)]
    Dict(DictCommand),
    /// Per-subcarrier beam trajectory of a focused beam, as CSV.
    Trajectory(TrajectoryArgs),
    /// Run one experiment; writes `<id>.csv` and `<id>.manifest.json`.
    #[command(after_help = format!("Experiments:\n{}", catalogue()))]
    Run(RunArgs),
    /// Planar-versus-spherical gain over distance and RIS size, as CSV.
    GainCurve(GainCurveArgs),
    /// Print the resolved config as TOML.
    ShowConfig,
}

#[derive(Debug, Subcommand)]
pub enum DictCommand {
    /// Build the RIS and user dictionaries into the cache.
    Build,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    /// Focus elevation [deg].
    #[arg(long, default_value_t = 45.0, allow_negative_numbers = true)]
    pub theta_deg: f64,
    /// Focus azimuth [deg].
    #[arg(long, default_value_t = 45.0, allow_negative_numbers = true)]
    pub phi_deg: f64,
    /// Focus distance [m].
    #[arg(long, default_value_t = 20.0)]
    pub r: f64,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment id.
    pub experiment: Experiment,
    /// Config field to sweep (NMSE and bound experiments).
    #[arg(long)]
    pub param: Option<String>,
    /// Swept values, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Option<Vec<f64>>,
    /// Estimators, comma separated: 2d-ls, 1d-ls, komp, cc-mmpsr, in-mmpsr, 2d-ols.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Target elevation for trajectory_map [deg].
    #[arg(long, allow_negative_numbers = true)]
    pub theta_deg: Option<f64>,
    /// Target azimuth for trajectory_map [deg].
    #[arg(long, allow_negative_numbers = true)]
    pub phi_deg: Option<f64>,
    /// RIS n_y values for gain_vs_distance, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Also write channel, pilots and results of the first N trials as JSON.
    #[arg(long, default_value_t = 0)]
    pub save_trials: usize,
    /// Output directory.
    #[arg(long, short, default_value = "results")]
    pub out_dir: PathBuf,
    /// Print per-point progress to stderr.
    #[arg(long)]
    pub progress: bool,
}

#[derive(Debug, Args)]
pub struct GainCurveArgs {
    /// RIS n_y values; n_z comes from the config.
    #[arg(long, value_delimiter = ',', default_value = "128,256,512")]
    pub sizes: Vec<usize>,
    /// Distances [m].
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40,60,80,100")]
    pub distances: Vec<f64>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Defaults, then config file, then flags; validated.
pub fn resolve_config(cli: &Cli) -> Result<SystemConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_file(p)?,
        None => SystemConfig::default(),
    };
    cli.flags.apply(&mut cfg);
    cfg.validate().context("invalid configuration")?;
    Ok(cfg)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    let cache = DictionaryCache::new(cli.cache_dir.clone());
    match cli.command {
        Commands::Dict(DictCommand::Build) => {
            let dir = cache.dir().context(format!("dict build needs --cache-dir or {CACHE_ENV}"))?;
            let ris = cache.spherical(&cfg)?;
            let user = cache.angular(&cfg)?;
            let spherical = DictionaryKey::spherical(&cfg).file_name();
            let angular = DictionaryKey::angular(&cfg).file_name();
            println!("{}\t{} atoms", dir.join(spherical).display(), ris.len());
            println!("{}\t{} atoms", dir.join(angular).display(), user.len());
        }
        Commands::Trajectory(a) => {
            let desired = SphericalPoint::new(a.theta_deg.to_radians(), a.phi_deg.to_radians(), a.r)?;
            let rows = trajectory(&cfg, &desired)?;
            write_trajectory_csv(output(&a.out)?, &rows)?;
        }
        Commands::Run(a) => {
            let mut spec = ExperimentSpec::new(a.experiment);
            if a.param.is_some() {
                spec.param = a.param;
            }
            if let Some(v) = a.values {
                spec.values = v;
            }
            if let Some(m) = a.methods {
                spec.methods = m;
            }
            if let Some(s) = a.sizes {
                spec.ris_sizes = s;
            }
            spec.target_deg = (a.theta_deg.unwrap_or(spec.target_deg.0), a.phi_deg.unwrap_or(spec.target_deg.1));
            spec.save_trials = a.save_trials;
            let clock = WallClock::new();
            let trial_dir = (a.save_trials > 0).then(|| a.out_dir.join(format!("{}-trials", spec.experiment.id())));
            let rc = RunContext { cache: &cache, clock: &clock, trial_dir, progress: a.progress };
            let table = run_experiment(&spec, &cfg, &rc)?;
            let (csv, manifest) = write_outputs(&a.out_dir, &spec, &cfg, &table)?;
            println!("{}", csv.display());
            println!("{}", manifest.display());
        }
        Commands::GainCurve(a) => {
            let sizes: Vec<(usize, usize)> = a.sizes.iter().map(|&n| (n, cfg.ris_nz)).collect();
            let dirs: Vec<(f64, f64)> =
                DEFAULT_DIRECTIONS_DEG.iter().map(|&(t, p)| (t.to_radians(), p.to_radians())).collect();
            let points = gain_vs_distance(cfg.f_c, &sizes, &a.distances, &dirs)?;
            let mut w = csv::Writer::from_writer(output(&a.out)?);
            for p in points {
                w.serialize(p)?;
            }
            w.flush()?;
        }
        Commands::ShowConfig => {
            println!("# config hash {}", short_hash(&cfg));
            print!("{}", toml::to_string(&cfg)?);
        }
    }
    Ok(())
}
