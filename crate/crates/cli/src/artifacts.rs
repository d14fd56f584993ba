use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{sha256_hex, InputFile, Settings};
use crate::error::{Outcome, Tag};

/// Fields stamped into every JSON artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Stamp {
    pub tool_version: &'static str,
    pub seed: u64,
    pub config_hash: String,
}

impl Stamp {
    pub fn of(settings: &Settings) -> Self {
        Stamp {
            tool_version: lexiscreen::TOOL_VERSION,
            seed: settings.seed(),
            config_hash: settings.config_hash(),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    stamp: Stamp,
    command: &'a str,
    settings: &'a BTreeMap<String, String>,
    inputs: &'a BTreeMap<String, InputFile>,
    artifacts: &'a BTreeMap<String, String>,
}

/// Writes artifacts into the output directory and records their hashes in
/// `<command>.manifest.json`.
pub struct Artifacts {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Outcome<Self> {
        std::fs::create_dir_all(dir).internal(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Outcome<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, bytes).internal(|| format!("cannot write {}", path.display()))?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Outcome<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).internal(|| format!("cannot serialize {name}"))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>) -> Outcome<PathBuf> {
        let mut buf = Vec::new();
        fill(&mut buf).internal(|| format!("cannot format {name}"))?;
        self.write(name, &buf)
    }

    pub fn finish(self, settings: &Settings) -> Outcome<PathBuf> {
        let manifest = Manifest {
            stamp: Stamp::of(settings),
            command: settings.command(),
            settings: settings.resolved(),
            inputs: settings.inputs(),
            artifacts: &self.written,
        };
        let name = format!("{}.manifest.json", settings.command());
        let mut text = serde_json::to_string_pretty(&manifest).internal(|| "cannot serialize manifest".to_string())?;
        text.push('\n');
        let path = self.path(&name);
        std::fs::write(&path, text).internal(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
