//! Column declarations for the clinical table.
//!
//! One column per line, `name|kind|eligible|units`, with `#` comments:
//!
//! ```text
//! PatientID|id|no|
//! Age|continuous|yes|years
//! Sex|binary|yes|1 = male
//! Prognosis|label|no|mild/severe
//! Hospital|centre|no|
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
    Categorical,
    Label,
    Centre,
    Id,
}

impl ColumnKind {
    /// Kinds that become feature columns.
    pub fn is_feature(self) -> bool {
        matches!(self, Self::Continuous | Self::Binary | Self::Categorical)
    }
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "continuous" => Self::Continuous,
            "binary" => Self::Binary,
            "categorical" => Self::Categorical,
            "label" => Self::Label,
            "centre" | "center" => Self::Centre,
            "id" => Self::Id,
            other => return Err(Error::Schema(format!("unknown column kind '{other}'"))),
        })
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Continuous => "continuous",
            Self::Binary => "binary",
            Self::Categorical => "categorical",
            Self::Label => "label",
            Self::Centre => "centre",
            Self::Id => "id",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Therapy- and outcome-derived columns are loaded but not offered to
    /// the learners.
    pub eligible: bool,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalSchema {
    columns: Vec<ColumnSpec>,
}

fn parse_flag(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "yes" | "y" | "true" | "1" => Ok(true),
        "no" | "n" | "false" | "0" => Ok(false),
        other => Err(Error::Schema(format!("bad eligibility flag '{other}'"))),
    }
}

impl ClinicalSchema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column '{}'", c.name)));
            }
        }
        let count = |k: ColumnKind| columns.iter().filter(|c| c.kind == k).count();
        if count(ColumnKind::Label) != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one label column, found {}",
                count(ColumnKind::Label)
            )));
        }
        if count(ColumnKind::Centre) != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one centre column, found {}",
                count(ColumnKind::Centre)
            )));
        }
        if count(ColumnKind::Id) > 1 {
            return Err(Error::Schema("more than one id column".into()));
        }
        Ok(Self { columns })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('|').collect();
            if parts.len() < 3 || parts.len() > 4 {
                return Err(Error::Schema(format!(
                    "line {}: expected name|kind|eligible|units",
                    lineno + 1
                )));
            }
            columns.push(ColumnSpec {
                name: parts[0].trim().to_string(),
                kind: parts[1].parse()?,
                eligible: parse_flag(parts[2])?,
                units: parts.get(3).map(|s| s.trim().to_string()).unwrap_or_default(),
            });
        }
        Self::new(columns)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# name|kind|eligible|units\n");
        for c in &self.columns {
            out.push_str(&format!(
                "{}|{}|{}|{}\n",
                c.name,
                c.kind,
                if c.eligible { "yes" } else { "no" },
                c.units
            ));
        }
        out
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    fn single(&self, kind: ColumnKind) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.kind == kind)
    }

    pub fn label_column(&self) -> &ColumnSpec {
        self.single(ColumnKind::Label).expect("validated")
    }

    pub fn centre_column(&self) -> &ColumnSpec {
        self.single(ColumnKind::Centre).expect("validated")
    }

    pub fn id_column(&self) -> Option<&ColumnSpec> {
        self.single(ColumnKind::Id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "# demo\nPatientID|id|no|\nAge|continuous|yes|years\nSex|binary|yes|\nPrognosis|label|no|\nHospital|centre|no|\n";

    #[test]
    fn parse_and_render_round_trip() {
        let s = ClinicalSchema::parse(TEXT).unwrap();
        assert_eq!(s.columns().len(), 5);
        assert_eq!(s.label_column().name, "Prognosis");
        assert_eq!(s.column("Age").unwrap().units, "years");
        assert_eq!(ClinicalSchema::parse(&s.render()).unwrap(), s);
    }

    #[test]
    fn rejects_duplicates_and_missing_label() {
        assert!(ClinicalSchema::parse("A|continuous|yes\nA|binary|yes\nP|label|no\nH|centre|no").is_err());
        let err = ClinicalSchema::parse("A|continuous|yes\nH|centre|no").unwrap_err();
        assert!(err.to_string().contains("label"));
        assert!(ClinicalSchema::parse("A|weird|yes\nP|label|no\nH|centre|no").is_err());
    }
}
