//! Corpus manifest: a CSV with header `name,path,domain`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::HarnessError;

pub const DOMAINS: [&str; 7] = [
    "biological",
    "economic",
    "informational",
    "social",
    "technological",
    "transportation",
    "other",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    /// Resolved against the manifest's directory when relative.
    pub path: PathBuf,
    pub domain: String,
}

#[derive(Deserialize)]
struct Row {
    name: String,
    path: String,
    domain: String,
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| HarnessError::Data(format!("manifest: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != ["name", "path", "domain"] {
        return Err(HarnessError::Data(format!(
            "manifest header must be name,path,domain, found {}",
            header.join(",")
        )));
    }
    let mut names = BTreeSet::new();
    let mut entries = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| HarnessError::Data(format!("manifest row {}: {e}", i + 1)))?;
        if !DOMAINS.contains(&row.domain.as_str()) {
            return Err(HarnessError::Data(format!(
                "manifest row {}: unknown domain {:?} (expected one of {})",
                i + 1,
                row.domain,
                DOMAINS.join(", ")
            )));
        }
        if row.name.is_empty() {
            return Err(HarnessError::Data(format!("manifest row {}: empty name", i + 1)));
        }
        if !names.insert(row.name.clone()) {
            return Err(HarnessError::Data(format!("manifest: duplicate network name {:?}", row.name)));
        }
        let path = Path::new(&row.path);
        entries.push(ManifestEntry {
            name: row.name,
            path: if path.is_absolute() { path.to_path_buf() } else { base.join(path) },
            domain: row.domain,
        });
    }
    Ok(entries)
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Data(format!("cannot read manifest {}: {e}", path.display())))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}
