//! The manifest written next to a set of series files: derived seeds, one
//! entry per file with its SHA-256, and a hash over all entries.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use breathgest::signal::{read_series, spans_path, write_series, SubjectProfile};
use breathgest::{LabeledSeries, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{DerivedSeeds, RunConfig};

pub const MANIFEST_FORMAT: &str = "breathgest-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub id: String,
    pub seed: u64,
    pub profile: SubjectProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub subject: String,
    pub scenario: Scenario,
    pub variant: String,
    pub samples: usize,
    pub gestures: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub seeds: DerivedSeeds,
    pub config: RunConfig,
    pub subjects: Vec<SubjectEntry>,
    pub files: Vec<FileEntry>,
    /// SHA-256 over the file entries in order.
    pub hash: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_hash(path: &Path) -> anyhow::Result<String> {
    let mut bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    bytes.extend(std::fs::read(spans_path(path)).with_context(|| format!("reading spans of {}", path.display()))?);
    Ok(sha256_hex(&bytes))
}

fn variant_name(series: &LabeledSeries) -> String {
    serde_json::to_value(&series.provenance)
        .ok()
        .and_then(|v| v.get("type").and_then(|t| t.as_str()).map(str::to_owned))
        .unwrap_or_else(|| "original".into())
}

impl Manifest {
    pub fn new(config: &RunConfig, subjects: Vec<SubjectEntry>) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            seeds: config.seeds(),
            config: config.clone(),
            subjects,
            files: Vec::new(),
            hash: String::new(),
        }
    }

    /// Writes `series` below `dir` as `series/<name>.jsonl` and records it.
    pub fn add_series(&mut self, dir: &Path, name: &str, series: &LabeledSeries) -> anyhow::Result<()> {
        let rel = PathBuf::from("series").join(format!("{name}.jsonl"));
        let path = dir.join(&rel);
        std::fs::create_dir_all(path.parent().expect("has parent"))?;
        write_series(series, &path)?;
        self.files.push(FileEntry {
            path: rel,
            subject: series.subject_id.clone(),
            scenario: series.scenario,
            variant: variant_name(series),
            samples: series.len(),
            gestures: series.spans.len(),
            sha256: file_hash(&path)?,
        });
        Ok(())
    }

    fn compute_hash(&self) -> String {
        let mut h = Sha256::new();
        for f in &self.files {
            h.update(f.path.to_string_lossy().as_bytes());
            h.update(b"\0");
            h.update(f.sha256.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(mut self, dir: &Path) -> anyhow::Result<Self> {
        self.hash = self.compute_hash();
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(self)
    }

    pub fn load(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(breathgest::Error::FormatVersionMismatch {
                expected: format!("{MANIFEST_FORMAT} v{MANIFEST_VERSION}"),
                found: format!("{} v{}", m.format, m.version),
            }
            .into());
        }
        Ok(m)
    }

    /// Reads every listed series, checking file hashes.
    pub fn read_all(&self, dir: &Path) -> anyhow::Result<Vec<LabeledSeries>> {
        self.files
            .iter()
            .map(|f| {
                let path = dir.join(&f.path);
                let hash = file_hash(&path)?;
                if hash != f.sha256 {
                    bail!(breathgest::Error::Format(format!("{} does not match its manifest hash", path.display())));
                }
                read_series(&path).with_context(|| format!("reading {}", path.display()))
            })
            .collect()
    }
}
