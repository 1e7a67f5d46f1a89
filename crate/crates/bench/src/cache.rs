//! On-disk dictionary cache.
//!
//! One JSON file per dictionary, named `<kind>-<key hash>.json`:
//!
//! ```text
//! { "format": "xlris-dictionary", "version": 1, "kind": "spherical" | "angular",
//!   "key": { ...parameters that determine the atoms... },
//!   "dictionary": { ...labels... } }
//! ```
//!
//! The key hash covers only the parameters that change the atoms, so
//! unrelated config edits reuse the cache. Columns are never stored; they
//! are regenerated per frequency from the labels.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xlris_core::dictionary::{
    build_angular_dictionary, build_spherical_dictionary, AngularDictionary, SphericalDictionary,
};
use xlris_core::SystemConfig;

pub const CACHE_ENV: &str = "XLRIS_CACHE_DIR";
const FORMAT: &str = "xlris-dictionary";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryKey {
    pub kind: String,
    pub n_y: usize,
    pub n_z: usize,
    pub spacing: f64,
    pub f_c: f64,
    pub grid_y: usize,
    pub grid_z: usize,
    /// Only meaningful for the spherical kind.
    pub mu_m: f64,
    pub r_min: f64,
}

impl DictionaryKey {
    pub fn spherical(cfg: &SystemConfig) -> Self {
        Self {
            kind: "spherical".into(),
            n_y: cfg.ris_ny,
            n_z: cfg.ris_nz,
            spacing: cfg.spacing(),
            f_c: cfg.f_c,
            grid_y: cfg.grid_ris_y,
            grid_z: cfg.grid_ris_z,
            mu_m: cfg.mu_m,
            r_min: cfg.r_min,
        }
    }

    pub fn angular(cfg: &SystemConfig) -> Self {
        Self {
            kind: "angular".into(),
            n_y: cfg.user_ny,
            n_z: cfg.user_nz,
            spacing: cfg.spacing(),
            f_c: cfg.f_c,
            grid_y: cfg.grid_user_y,
            grid_z: cfg.grid_user_z,
            mu_m: 0.0,
            r_min: 0.0,
        }
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("key serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    pub fn file_name(&self) -> String {
        format!("{}-{}.json", self.kind, self.hash())
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile<T> {
    format: String,
    version: u32,
    kind: String,
    key: DictionaryKey,
    dictionary: T,
}

/// Cache rooted at a directory; `None` disables persistence.
#[derive(Debug, Clone, Default)]
pub struct DictionaryCache {
    dir: Option<PathBuf>,
}

impl DictionaryCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    /// Directory from `XLRIS_CACHE_DIR`, if set and nonempty.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, key: &DictionaryKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(key.file_name()))
    }

    pub fn spherical(&self, cfg: &SystemConfig) -> Result<SphericalDictionary> {
        self.load_or_build(DictionaryKey::spherical(cfg), || Ok(build_spherical_dictionary(cfg)?))
    }

    pub fn angular(&self, cfg: &SystemConfig) -> Result<AngularDictionary> {
        self.load_or_build(DictionaryKey::angular(cfg), || Ok(build_angular_dictionary(cfg)?))
    }

    fn load_or_build<T: Serialize + DeserializeOwned>(
        &self,
        key: DictionaryKey,
        build: impl FnOnce() -> Result<T>,
    ) -> Result<T> {
        let Some(path) = self.path_for(&key) else {
            return build();
        };
        if path.exists() {
            if let Ok(d) = read_entry(&path, &key) {
                return Ok(d);
            }
        }
        let dict = build()?;
        write_entry(&path, &key, &dict)?;
        Ok(dict)
    }
}

fn read_entry<T: DeserializeOwned>(path: &Path, key: &DictionaryKey) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let file: CacheFile<T> = serde_json::from_str(&text)?;
    if file.format != FORMAT || file.version != VERSION || &file.key != key {
        bail!("stale cache entry {}", path.display());
    }
    Ok(file.dictionary)
}

fn write_entry<T: Serialize>(path: &Path, key: &DictionaryKey, dict: &T) -> Result<()> {
    let dir = path.parent().expect("cache path has a parent");
    fs::create_dir_all(dir).with_context(|| format!("creating cache dir {}", dir.display()))?;
    let file = CacheFile {
        format: FORMAT.into(),
        version: VERSION,
        kind: key.kind.clone(),
        key: key.clone(),
        dictionary: dict,
    };
    // Write then rename so a concurrent reader never sees a partial file.
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(&file)?).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
