//! Config files, canonical hashing and single-field overrides.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;
use sha2::{Digest, Sha256};
use xlris_core::SystemConfig;

/// Reads a TOML (`.toml`) or JSON (`.json`) config. Missing keys keep their
/// defaults; unknown keys are errors.
pub fn load_file(path: &Path) -> Result<SystemConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let cfg = match ext.as_str() {
        "json" => serde_json::from_str(&text).with_context(|| format!("parsing JSON config {}", path.display()))?,
        "toml" => toml::from_str(&text).with_context(|| format!("parsing TOML config {}", path.display()))?,
        _ => bail!("config {} must end in .toml or .json", path.display()),
    };
    Ok(cfg)
}

/// Compact JSON with fields in declaration order; the hash input.
pub fn canonical_json(cfg: &SystemConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

/// SHA-256 of the canonical JSON, lowercase hex.
pub fn config_hash(cfg: &SystemConfig) -> String {
    hex::encode(Sha256::digest(canonical_json(cfg).as_bytes()))
}

/// First 16 hex digits of [`config_hash`], used in file names.
pub fn short_hash(cfg: &SystemConfig) -> String {
    config_hash(cfg)[..16].to_string()
}

/// Sets one top-level numeric field by name. Integer fields reject
/// fractional values.
pub fn with_param(cfg: &SystemConfig, name: &str, value: f64) -> Result<SystemConfig> {
    let mut v = serde_json::to_value(cfg)?;
    let obj = v.as_object_mut().expect("config is an object");
    let slot = obj.get_mut(name).ok_or_else(|| anyhow!("unknown config field `{name}`"))?;
    *slot = match slot {
        Value::Number(n) if n.is_u64() => {
            if value < 0.0 || value.fract() != 0.0 {
                bail!("`{name}` takes a nonnegative integer, got {value}");
            }
            Value::from(value as u64)
        }
        Value::Number(_) => Value::from(value),
        _ => bail!("`{name}` is not a numeric field"),
    };
    let out: SystemConfig = serde_json::from_value(v)?;
    out.validate().map_err(|e| anyhow!("{name} = {value}: {e}"))?;
    Ok(out)
}
