//! Config files, flag merging and output metadata.
//!
//! A config file is TOML with an optional top-level `seed` and one table per
//! subcommand (`[train-sg]`, `[influence]`, …) whose keys are the long flag
//! names with `-` replaced by `_`. Flags given on the command line win.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn load_file(path: Option<&Path>) -> Result<toml::Table> {
    match path {
        None => Ok(toml::Table::new()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            text.parse::<toml::Table>().with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

/// Overlays `flags` on the `[section]` table of `file` and deserializes the
/// result. `seed` comes from the flag, the section, or the top level, in
/// that order.
pub fn resolve<F: Serialize, R: DeserializeOwned>(
    file: &toml::Table,
    section: &str,
    flags: &F,
    seed: Option<u64>,
    needs_seed: bool,
) -> Result<R> {
    let mut merged = match file.get(section) {
        None => toml::Table::new(),
        Some(toml::Value::Table(t)) => t.clone(),
        Some(_) => bail!("config: `{section}` must be a table"),
    };
    if let Some(top) = file.get("seed") {
        merged.entry("seed").or_insert_with(|| top.clone());
    }
    let flags = toml::Table::try_from(flags).context("encoding flags")?;
    merged.extend(flags);
    if let Some(s) = seed {
        let s = i64::try_from(s).context("seed must fit in a signed 64-bit integer")?;
        merged.insert("seed".into(), toml::Value::Integer(s));
    }
    if needs_seed && !merged.contains_key("seed") {
        bail!("`{section}` is randomized and needs an explicit seed: pass --seed or set `seed` in the config file");
    }
    R::deserialize(toml::Value::Table(merged)).with_context(|| format!("invalid `{section}` configuration"))
}

/// Hex SHA-256 of the canonical JSON encoding of a resolved config.
pub fn config_hash<C: Serialize>(cfg: &C) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Provenance written next to every output file as `<file>.meta.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Meta<'a, C: Serialize> {
    pub command: &'a str,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub config: &'a C,
}

impl<'a, C: Serialize> Meta<'a, C> {
    pub fn new(command: &'a str, config: &'a C, seed: Option<u64>) -> Result<Self> {
        Ok(Self { command, config_hash: config_hash(config)?, seed, config })
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Writes `bytes` to `path` and the metadata sidecar beside it.
pub fn emit<C: Serialize>(path: &Path, bytes: &[u8], meta: &Meta<'_, C>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    let mut side = serde_json::to_vec_pretty(meta)?;
    side.push(b'\n');
    fs::write(sidecar_path(path), side).with_context(|| format!("writing metadata for {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Default)]
    struct Flags {
        #[serde(skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        lr: Option<f64>,
    }

    #[derive(Deserialize, Debug, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Resolved {
        seed: u64,
        #[serde(default)]
        dim: usize,
        #[serde(default)]
        lr: f64,
    }

    #[test]
    fn flags_override_file_values() {
        let file: toml::Table = "seed = 3\n[train]\ndim = 8\nlr = 0.5\n".parse().unwrap();
        let r: Resolved = resolve(&file, "train", &Flags { dim: Some(16), lr: None }, None, true).unwrap();
        assert_eq!(r, Resolved { seed: 3, dim: 16, lr: 0.5 });
        let r: Resolved = resolve(&file, "train", &Flags::default(), Some(9), true).unwrap();
        assert_eq!(r.seed, 9);
    }

    #[test]
    fn missing_seed_is_an_error() {
        let err = resolve::<_, Resolved>(&toml::Table::new(), "train", &Flags::default(), None, true).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file: toml::Table = "[train]\nseed = 1\ndims = 8\n".parse().unwrap();
        assert!(resolve::<_, Resolved>(&file, "train", &Flags::default(), None, true).is_err());
    }

    #[test]
    fn hash_tracks_config() {
        assert_eq!(config_hash(&(1, "a")).unwrap(), config_hash(&(1, "a")).unwrap());
        assert_ne!(config_hash(&(1, "a")).unwrap(), config_hash(&(2, "a")).unwrap());
        assert_eq!(sidecar_path(Path::new("out/x.csv")), Path::new("out/x.csv.meta.json"));
    }
}
