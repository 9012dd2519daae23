//! Campaign directories: a manifest plus the artifacts it hashes.
//!
//! ```text
//! manifest.json     provenance: seeds, config, file names and SHA-256 hashes
//! data.jsonl        dataset
//! catalog.json      catalog the trials were run with
//! trials.jsonl      trial log
//! constraints.json  constraint report
//! mutation.json     mutation report
//! ```
//!
//! File names are recorded relative to the directory, so a campaign can be
//! moved or copied without breaking its manifest.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::datagen::{self, GenProfile, TestDatum};
use crate::digest::sha256_hex;
use crate::dsl::InputKind;
use crate::executor::{self, CampaignConfig, TrialRecord};
use crate::miner::{Atom, ConstraintReport, MineOptions};
use crate::mutation::MutationReport;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATASET_FILE: &str = "data.jsonl";
pub const CATALOG_FILE: &str = "catalog.json";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const CONSTRAINTS_FILE: &str = "constraints.json";
pub const MUTATION_FILE: &str = "mutation.json";

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
    #[error("{file} hash {found} does not match manifest {expected}")]
    Provenance { file: String, expected: String, found: String },
    #[error("campaign manifest has no {0}")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSection {
    pub kind: InputKind,
    pub profiles: Vec<GenProfile>,
    pub seed: u64,
    pub dataset_file: String,
    pub dataset_hash: String,
}

/// Where a child campaign came from: a constrained re-run of its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentLink {
    pub campaign_id: String,
    pub sut: String,
    pub mr: String,
    pub atoms: Vec<Atom>,
    pub seed: u64,
    pub requested: usize,
    pub accepted: usize,
    pub draws: u64,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Manifest {
    pub generate: Option<GenerateSection>,
    pub config: Option<CampaignConfig>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub catalog_file: Option<String>,
    pub catalog_hash: Option<String>,
    pub dataset_hash: Option<String>,
    /// Wall-clock start; left null unless requested, so reruns stay byte-identical.
    pub started_at: Option<String>,
    pub trial_count: Option<usize>,
    pub trials_file: Option<String>,
    pub trials_hash: Option<String>,
    pub mine_options: Option<MineOptions>,
    pub constraints_file: Option<String>,
    pub constraints_hash: Option<String>,
    pub mutation_file: Option<String>,
    pub mutation_hash: Option<String>,
    pub parent: Option<ParentLink>,
}

impl Manifest {
    /// Content-derived id: a digest of the provenance fields, which do not
    /// depend on formatting or on where the directory lives.
    pub fn campaign_id(&self) -> String {
        let key = serde_json::json!([
            self.generate.as_ref().map(|g| &g.dataset_hash),
            self.dataset_hash,
            self.config_hash,
            self.catalog_hash,
            self.trials_hash,
            self.parent,
        ]);
        sha256_hex(key.to_string().as_bytes())[..16].to_string()
    }
}

pub fn to_pretty_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io { path: path.display().to_string(), source }
}

pub fn read_text(path: &Path) -> Result<String, CampaignError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// Writes `text` and returns its SHA-256.
pub fn write_text(path: &Path, text: &str) -> Result<String, CampaignError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, text).map_err(io_err(path))?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, CampaignError> {
    serde_json::from_str(text).map_err(|e| CampaignError::Format { path: path.display().to_string(), reason: e.to_string() })
}

#[derive(Debug, Clone)]
pub struct CampaignDir {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl CampaignDir {
    /// Opens `root`, starting from an empty manifest if none exists yet.
    pub fn open_or_new(root: impl Into<PathBuf>) -> Result<Self, CampaignError> {
        let root = root.into();
        let path = root.join(MANIFEST_FILE);
        let manifest = if path.exists() { parse_json(&path, &read_text(&path)?)? } else { Manifest::default() };
        Ok(CampaignDir { root, manifest })
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CampaignError> {
        let root = root.into();
        let path = root.join(MANIFEST_FILE);
        let manifest = parse_json(&path, &read_text(&path)?)?;
        Ok(CampaignDir { root, manifest })
    }

    pub fn id(&self) -> String {
        self.manifest.campaign_id()
    }

    pub fn save(&self) -> Result<(), CampaignError> {
        write_text(&self.root.join(MANIFEST_FILE), &to_pretty_json(&self.manifest)).map(|_| ())
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    /// Reads a manifest-referenced file and checks its hash.
    pub fn read_verified(&self, file: &Option<String>, hash: &Option<String>, what: &'static str) -> Result<String, CampaignError> {
        let file = file.as_ref().ok_or(CampaignError::Missing(what))?;
        let expected = hash.as_ref().ok_or(CampaignError::Missing(what))?;
        let text = read_text(&self.path(file))?;
        let found = sha256_hex(text.as_bytes());
        if &found != expected {
            return Err(CampaignError::Provenance { file: file.clone(), expected: expected.clone(), found });
        }
        Ok(text)
    }

    pub fn dataset(&self) -> Result<Vec<TestDatum>, CampaignError> {
        let g = self.manifest.generate.as_ref().ok_or(CampaignError::Missing("dataset"))?;
        let text = self.read_verified(&Some(g.dataset_file.clone()), &Some(g.dataset_hash.clone()), "dataset")?;
        datagen::from_jsonl(&text).map_err(|e| CampaignError::Format { path: g.dataset_file.clone(), reason: e.to_string() })
    }

    pub fn catalog(&self) -> Result<Catalog, CampaignError> {
        let m = &self.manifest;
        let text = self.read_verified(&m.catalog_file, &m.catalog_hash, "catalog")?;
        let cat = Catalog::from_json(&text)
            .map_err(|e| CampaignError::Format { path: CATALOG_FILE.into(), reason: e.to_string() })?;
        Ok(cat)
    }

    pub fn trials(&self) -> Result<Vec<TrialRecord>, CampaignError> {
        let m = &self.manifest;
        let text = self.read_verified(&m.trials_file, &m.trials_hash, "trial log")?;
        executor::trials_from_jsonl(&text).map_err(|e| CampaignError::Format {
            path: m.trials_file.clone().unwrap_or_default(),
            reason: e.to_string(),
        })
    }

    pub fn constraints(&self) -> Result<ConstraintReport, CampaignError> {
        let m = &self.manifest;
        let text = self.read_verified(&m.constraints_file, &m.constraints_hash, "constraint report")?;
        parse_json(&self.path(CONSTRAINTS_FILE), &text)
    }

    pub fn mutation(&self) -> Result<MutationReport, CampaignError> {
        let m = &self.manifest;
        let text = self.read_verified(&m.mutation_file, &m.mutation_hash, "mutation report")?;
        parse_json(&self.path(MUTATION_FILE), &text)
    }
}

/// Finds campaign directories (those holding a manifest) under `root`, at
/// most `depth` levels down, in path order.
pub fn discover(root: &Path, depth: usize) -> Vec<PathBuf> {
    let mut out = Vec::new();
    fn walk(dir: &Path, depth: usize, out: &mut Vec<PathBuf>) {
        if dir.join(MANIFEST_FILE).is_file() {
            out.push(dir.to_path_buf());
        }
        if depth == 0 {
            return;
        }
        let Ok(entries) = std::fs::read_dir(dir) else { return };
        let mut subdirs: Vec<PathBuf> = entries.flatten().map(|e| e.path()).filter(|p| p.is_dir()).collect();
        subdirs.sort();
        for d in subdirs {
            walk(&d, depth - 1, out);
        }
    }
    walk(root, depth, &mut out);
    out
}
