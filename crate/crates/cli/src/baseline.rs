use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{read_json, write_json};

/// Relative drift a baseline band tolerates on either side.
pub const BASELINE_DRIFT: f64 = 0.10;

/// Environment variable that overrides the baseline directory.
pub const BASELINE_ENV: &str = "FSL_BASELINE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub date: String,
    pub commit: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn now(config_hash: &str) -> Self {
        Self {
            date: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            commit: git_commit(),
            config_hash: config_hash.to_string(),
        }
    }
}

fn git_commit() -> String {
    Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    /// Recorded `[min, max]`.
    pub band: [f64; 2],
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Pass,
    Missing,
    Drift { recorded: [f64; 2], observed: [f64; 2] },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct StoreFile {
    entries: BTreeMap<String, Vec<BaselineRecord>>,
}

/// Append-only history of recorded bands per check key, one JSON file per
/// fixture. The last record of a key is the active one.
#[derive(Debug, Clone)]
pub struct BaselineStore {
    path: PathBuf,
    file: StoreFile,
    dirty: bool,
}

impl BaselineStore {
    /// Opens `<dir>/<fixture>.json`; a missing file is an empty store.
    pub fn open(dir: &Path, fixture: &str) -> Result<Self> {
        let path = dir.join(format!("{fixture}.json"));
        let file = if path.is_file() {
            read_json(&path)?
        } else {
            StoreFile::default()
        };
        Ok(Self {
            path,
            file,
            dirty: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_empty(&self) -> bool {
        self.file.entries.is_empty()
    }

    pub fn active(&self, key: &str) -> Option<&BaselineRecord> {
        self.file.entries.get(key).and_then(|h| h.last())
    }

    pub fn history(&self, key: &str) -> &[BaselineRecord] {
        self.file.entries.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Appends a record unless the active one already has the same band and
    /// config hash.
    pub fn append(&mut self, key: &str, record: BaselineRecord) {
        let hist = self.file.entries.entry(key.to_string()).or_default();
        if let Some(last) = hist.last() {
            if last.band == record.band
                && last.provenance.config_hash == record.provenance.config_hash
            {
                return;
            }
        }
        hist.push(record);
        self.dirty = true;
    }

    pub fn gate(&self, key: &str, observed: [f64; 2]) -> Gate {
        match self.active(key) {
            None => Gate::Missing,
            Some(r) if within_band(r.band, observed) => Gate::Pass,
            Some(r) => Gate::Drift {
                recorded: r.band,
                observed,
            },
        }
    }

    /// Writes the store if anything was appended.
    pub fn save(&mut self) -> Result<()> {
        if self.dirty {
            write_json(&self.path, &self.file)?;
            self.dirty = false;
        }
        Ok(())
    }
}

/// `observed ⊂ [lo/(1+drift), hi(1+drift)]`, mirrored for negative ends.
pub fn within_band(recorded: [f64; 2], observed: [f64; 2]) -> bool {
    let f = 1.0 + BASELINE_DRIFT;
    let lo = if recorded[0] >= 0.0 { recorded[0] / f } else { recorded[0] * f };
    let hi = if recorded[1] >= 0.0 { recorded[1] * f } else { recorded[1] / f };
    observed[0] >= lo && observed[1] <= hi
}
