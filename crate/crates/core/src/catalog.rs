//! MR catalogs: the six built-in relations, JSON catalog files, and the
//! signature gate that decides which MRs can be run against a SUT.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_hex;
use crate::dsl::{parse_mr, serialize_mr, MrSpec};
use crate::sut::SutDescriptor;

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub spec: MrSpec,
    pub domain_tag: Option<String>,
    pub source_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed catalog file: {0}")]
    Format(String),
    #[error("catalog entry {entry}: {reason}")]
    Validation { entry: String, reason: String },
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    dsl: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_note: Option<String>,
}

const CLASSIC_NOTE: &str = "transform/relation pair follows the usual convention for the six classic numeric MRs; \
where it actually holds for a given SUT is left to constraint mining";

const BUILTIN_DSL: [&str; 6] = [
    "mr additive {
  desc: \"adding a positive constant to every element does not decrease the output\";
  input: list-float;
  param c: float in (0.0, 10.0];
  follow: add(c);
  expect: out_f >= out_s;
}",
    "mr multiplicative {
  desc: \"scaling every element by k > 1 does not decrease the output\";
  input: list-float;
  param k: float in (1.0, 10.0];
  follow: scale(k);
  expect: out_f >= out_s;
}",
    "mr permutative {
  desc: \"permuting the elements leaves the output unchanged\";
  input: list-float;
  follow: permute;
  expect: out_f == out_s;
}",
    "mr invertive {
  desc: \"negating every element does not increase the output\";
  input: list-float;
  follow: negate;
  expect: out_f <= out_s;
}",
    "mr inclusive {
  desc: \"appending a positive element does not decrease the output\";
  input: list-float;
  param v: float in (0.0, 10.0];
  follow: include(v);
  expect: out_f >= out_s;
}",
    "mr exclusive {
  desc: \"removing the last element does not increase the output\";
  input: list-float;
  follow: exclude-last;
  expect: out_f <= out_s;
}",
];

/// The six predefined MRs: additive, multiplicative, permutative, invertive,
/// inclusive and exclusive, all over `list-float` inputs.
pub fn builtin_catalog() -> Catalog {
    Catalog {
        entries: BUILTIN_DSL
            .iter()
            .map(|src| CatalogEntry {
                spec: parse_mr(src).expect("built-in MR is valid"),
                domain_tag: Some("numeric".into()),
                source_note: Some(CLASSIC_NOTE.into()),
            })
            .collect(),
    }
}

impl Catalog {
    pub fn from_entries(entries: Vec<CatalogEntry>) -> Result<Self, CatalogError> {
        let mut ids = HashSet::new();
        for e in &entries {
            let diags = crate::dsl::validate_mr(&e.spec);
            if !diags.is_empty() {
                return Err(CatalogError::Validation {
                    entry: e.spec.id.clone(),
                    reason: diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "),
                });
            }
            if !ids.insert(e.spec.id.clone()) {
                return Err(CatalogError::Validation {
                    entry: e.spec.id.clone(),
                    reason: "duplicate MR id".into(),
                });
            }
        }
        Ok(Catalog { entries })
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let file: CatalogFile =
            serde_json::from_str(text).map_err(|e| CatalogError::Format(e.to_string()))?;
        let entries = file
            .entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let spec = parse_mr(&e.dsl).map_err(|err| CatalogError::Validation {
                    entry: format!("#{i}"),
                    reason: err.to_string(),
                })?;
                Ok(CatalogEntry {
                    spec,
                    domain_tag: e.domain,
                    source_note: e.source_note,
                })
            })
            .collect::<Result<Vec<_>, CatalogError>>()?;
        Self::from_entries(entries)
    }

    /// Canonical JSON: entries in catalog order, DSL in canonical form.
    pub fn to_json(&self) -> String {
        let file = CatalogFile {
            entries: self
                .entries
                .iter()
                .map(|e| EntryFile {
                    dsl: serialize_mr(&e.spec),
                    domain: e.domain_tag.clone(),
                    source_note: e.source_note.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("catalog serializes")
    }

    /// Content hash over the canonical JSON, so reformatting a catalog file
    /// does not change it.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_json())
    }

    pub fn get(&self, id: &str) -> Option<&MrSpec> {
        self.entries.iter().map(|e| &e.spec).find(|s| s.id == id)
    }

    pub fn specs(&self) -> impl Iterator<Item = &MrSpec> {
        self.entries.iter().map(|e| &e.spec)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Catalog::from_json(&text)
}

/// MRs whose input kind equals the SUT's, in catalog order.
pub fn match_mrs<'c>(catalog: &'c Catalog, sut: &SutDescriptor) -> Vec<&'c MrSpec> {
    catalog.specs().filter(|s| s.input_kind == sut.input_kind).collect()
}
