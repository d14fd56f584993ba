//! Setting resolution: command line, then the `[<command>]` section of the
//! config file, then `[paths]`, then the file's top level, then defaults.
//!
//! Every resolved value is recorded. Input files are recorded by content
//! hash rather than location, and the config hash covers the command, the
//! seed and those recorded values. Output directory and thread count are
//! never recorded, so they cannot change any artifact.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Failure, Outcome, Status, Tag};

pub const DEFAULT_SEED: u64 = 42;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A file read during the run.
#[derive(Clone, Debug, Serialize)]
pub struct InputFile {
    pub file: String,
    pub sha256: String,
}

struct ConfigFile {
    ini: Ini,
    dir: PathBuf,
}

pub struct Settings {
    command: &'static str,
    file: Option<ConfigFile>,
    seed: u64,
    resolved: BTreeMap<String, String>,
    inputs: BTreeMap<String, InputFile>,
}

impl Settings {
    pub fn load(command: &'static str, config: Option<&Path>, seed: Option<u64>) -> Outcome<Self> {
        let file = match config {
            None => None,
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Failure::new(Status::Usage, anyhow::Error::new(e).context(format!("cannot read config {}", path.display())))
                })?;
                let ini = Ini::load_from_str(&text)
                    .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                Some(ConfigFile { ini, dir })
            }
        };
        let mut s = Settings {
            command,
            file,
            seed: DEFAULT_SEED,
            resolved: BTreeMap::new(),
            inputs: BTreeMap::new(),
        };
        s.seed = s.parse_value("seed", seed)?.unwrap_or(DEFAULT_SEED);
        Ok(s)
    }

    pub fn command(&self) -> &'static str {
        self.command
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn from_file(&self, key: &str) -> Option<(&str, &Path)> {
        let f = self.file.as_ref()?;
        [Some(self.command), Some("paths"), None]
            .into_iter()
            .find_map(|section| f.ini.section(section).and_then(|p| p.get(key)))
            .map(|v| (v.trim(), f.dir.as_path()))
    }

    fn parse_value<T: FromStr>(&self, key: &str, cli: Option<T>) -> Outcome<Option<T>>
    where
        T::Err: Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.from_file(key) {
            None => Ok(None),
            Some(("", _)) => Ok(None),
            Some((raw, _)) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Failure::usage(format!("config key `{key}` = `{raw}`: {e}"))),
        }
    }

    /// Optional setting without a default; recorded when present.
    pub fn optional<T: FromStr + Display>(&mut self, key: &str, cli: Option<T>) -> Outcome<Option<T>>
    where
        T::Err: Display,
    {
        let v = self.parse_value(key, cli)?;
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn value<T: FromStr + Display>(&mut self, key: &str, cli: Option<T>, default: T) -> Outcome<T>
    where
        T::Err: Display,
    {
        let v = self.parse_value(key, cli)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Boolean switch: on if given on the command line or set true in the file.
    pub fn flag(&mut self, key: &str, cli: bool) -> Outcome<bool> {
        let v = if cli { true } else { self.parse_value::<bool>(key, None)?.unwrap_or(false) };
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Output-only setting: resolved but not recorded.
    pub fn unrecorded<T: FromStr>(&self, key: &str, cli: Option<T>) -> Outcome<Option<T>>
    where
        T::Err: Display,
    {
        self.parse_value(key, cli)
    }

    /// Input file path. Paths from the config file are relative to it.
    pub fn input(&mut self, key: &str, cli: Option<PathBuf>) -> Outcome<Option<PathBuf>> {
        let path = match cli {
            Some(p) => Some(p),
            None => self.from_file(key).filter(|(v, _)| !v.is_empty()).map(|(v, dir)| dir.join(v)),
        };
        let Some(path) = path else { return Ok(None) };
        let bytes = std::fs::read(&path).data(|| format!("cannot read {key} file {}", path.display()))?;
        let digest = sha256_hex(&bytes);
        self.resolved.insert(key.to_string(), format!("sha256:{digest}"));
        self.inputs.insert(
            key.to_string(),
            InputFile {
                file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                sha256: digest,
            },
        );
        Ok(Some(path))
    }

    pub fn required_input(&mut self, key: &str, cli: Option<PathBuf>) -> Outcome<PathBuf> {
        self.input(key, cli)?
            .ok_or_else(|| Failure::usage(format!("missing required input `--{key}` (or `{key}` in the config file)")))
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    pub fn inputs(&self) -> &BTreeMap<String, InputFile> {
        &self.inputs
    }

    pub fn config_hash(&self) -> String {
        let doc = serde_json::json!({
            "command": self.command,
            "seed": self.seed,
            "settings": self.resolved,
        });
        sha256_hex(doc.to_string().as_bytes())[..16].to_string()
    }
}
