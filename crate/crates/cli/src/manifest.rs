//! Patient manifest: `id,image,mask,centre,clinical_key`.
//!
//! `mask` may be empty, in which case the whole image is the ROI, and an
//! empty `clinical_key` defaults to the id. Paths are relative to the
//! manifest's directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub const MANIFEST_HEADER: [&str; 5] = ["id", "image", "mask", "centre", "clinical_key"];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub image: PathBuf,
    pub mask: Option<PathBuf>,
    pub centre: String,
    pub clinical_key: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> CliResult<Self> {
        let mut ids = HashSet::new();
        for e in &entries {
            if e.id.is_empty() {
                return Err(CliError::data("manifest: empty patient id"));
            }
            if !ids.insert(e.id.as_str()) {
                return Err(CliError::data(format!("manifest: duplicate id '{}'", e.id)));
            }
            if e.centre.trim().is_empty() {
                return Err(CliError::data(format!("manifest: patient '{}' has no centre", e.id)));
            }
        }
        if entries.is_empty() {
            return Err(CliError::data("manifest lists no patients"));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| CliError::data(format!("cannot read manifest {}: {e}", path.display())))?;
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (Some(id), Some(image), Some(centre)) = (col("id"), col("image"), col("centre")) else {
            return Err(CliError::data(format!(
                "manifest {} must have id, image and centre columns",
                path.display()
            )));
        };
        let (mask, key) = (col("mask"), col("clinical_key"));
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let get = |i: Option<usize>| i.and_then(|i| rec.get(i)).map(str::trim).unwrap_or("");
            let id = get(Some(id)).to_string();
            let clinical_key = match get(key) {
                "" => id.clone(),
                k => k.to_string(),
            };
            entries.push(ManifestEntry {
                image: base.join(get(Some(image))),
                mask: match get(mask) {
                    "" => None,
                    m => Some(base.join(m)),
                },
                centre: get(Some(centre)).to_string(),
                clinical_key,
                id,
            });
        }
        Self::new(entries)
    }

    /// Writes paths relative to `path`'s directory when possible.
    pub fn write(&self, path: &Path) -> CliResult<()> {
        let base = path.parent().unwrap_or(Path::new("."));
        let rel = |p: &Path| p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/");
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(MANIFEST_HEADER)?;
        for e in &self.entries {
            w.write_record([
                e.id.clone(),
                rel(&e.image),
                e.mask.as_deref().map(rel).unwrap_or_default(),
                e.centre.clone(),
                e.clinical_key.clone(),
            ])?;
        }
        w.flush()
            .map_err(|e| CliError::Data(lungtex_core::Error::io(path, e)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    /// Fails with the list of clinical keys absent from `known`.
    pub fn check_clinical_keys(&self, known: &HashSet<&str>) -> CliResult<()> {
        let missing: Vec<&str> = self
            .entries
            .iter()
            .filter(|e| !known.contains(e.clinical_key.as_str()))
            .map(|e| e.clinical_key.as_str())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(CliError::data(format!(
                "clinical table has no row for: {}",
                missing.join(", ")
            )))
        }
    }
}
