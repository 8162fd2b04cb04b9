//! Dense patient-by-feature matrices and their CSV forms.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{ClinicalSchema, ColumnKind};
use crate::{Error, Result};

pub const MILD: u8 = 0;
pub const SEVERE: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnOrigin {
    Clinical,
    Image,
}

/// Row-major real-valued features with per-row label, centre and id.
/// Missing cells are NaN until imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub data: Vec<f64>,
    pub n_rows: usize,
    pub labels: Vec<u8>,
    pub centres: Vec<String>,
    pub ids: Vec<String>,
    pub eligible: Vec<bool>,
    pub origin: Vec<ColumnOrigin>,
}

pub fn is_missing_cell(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na")
}

pub fn parse_label(s: &str) -> Result<u8> {
    match s.trim().to_ascii_lowercase().as_str() {
        "mild" | "0" => Ok(MILD),
        "severe" | "1" => Ok(SEVERE),
        other => Err(Error::format("label", format!("expected mild/severe, got '{other}'"))),
    }
}

pub fn label_name(label: u8) -> &'static str {
    if label == SEVERE {
        "SEVERE"
    } else {
        "MILD"
    }
}

fn parse_binary(col: &str, s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "yes" => Ok(1.0),
        "0" | "0.0" | "false" | "no" => Ok(0.0),
        other => Err(Error::format(
            "clinical CSV",
            format!("column '{col}' is binary but holds '{other}'"),
        )),
    }
}

impl FeatureMatrix {
    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.names.len() + col]
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.value(row, col).is_nan()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let d = self.names.len();
        &self.data[row * d..(row + 1) * d]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.value(r, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn columns_of(&self, origin: ColumnOrigin) -> Vec<usize> {
        (0..self.n_cols()).filter(|&c| self.origin[c] == origin).collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let d = self.n_cols();
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for r in 0..self.n_rows {
            let row = &self.data[r * d..(r + 1) * d];
            data.extend(cols.iter().map(|&c| row[c]));
        }
        FeatureMatrix {
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            data,
            n_rows: self.n_rows,
            labels: self.labels.clone(),
            centres: self.centres.clone(),
            ids: self.ids.clone(),
            eligible: cols.iter().map(|&c| self.eligible[c]).collect(),
            origin: cols.iter().map(|&c| self.origin[c]).collect(),
        }
    }

    pub fn select_names(&self, names: &[String]) -> Result<FeatureMatrix> {
        let cols = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::invalid(format!("unknown column '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&cols))
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            names: self.names.clone(),
            data,
            n_rows: rows.len(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            centres: rows.iter().map(|&r| self.centres[r].clone()).collect(),
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            eligible: self.eligible.clone(),
            origin: self.origin.clone(),
        }
    }

    /// Keeps only the columns offered to the learners.
    pub fn eligible_only(&self) -> FeatureMatrix {
        let cols: Vec<usize> = (0..self.n_cols()).filter(|&c| self.eligible[c]).collect();
        self.select_columns(&cols)
    }

    /// Appends image feature columns, matching rows through `keys[row]`,
    /// the feature-table id of each row.
    pub fn with_image_features(&self, table: &FeatureTable, keys: &[String]) -> Result<FeatureMatrix> {
        if keys.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: (self.n_rows, 1),
                found: (keys.len(), 1),
            });
        }
        let index: HashMap<&str, usize> =
            table.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let missing: Vec<&str> = keys
            .iter()
            .filter(|k| !index.contains_key(k.as_str()))
            .map(|k| k.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::invalid(format!(
                "no image features for: {}",
                missing.join(", ")
            )));
        }
        for n in &table.names {
            if self.column_index(n).is_some() {
                return Err(Error::invalid(format!("column '{n}' present in both tables")));
            }
        }
        let d = self.n_cols() + table.names.len();
        let mut data = Vec::with_capacity(self.n_rows * d);
        for (r, key) in keys.iter().enumerate() {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(table.row(index[key.as_str()]));
        }
        let mut names = self.names.clone();
        names.extend(table.names.iter().cloned());
        let mut eligible = self.eligible.clone();
        eligible.extend(std::iter::repeat_n(true, table.names.len()));
        let mut origin = self.origin.clone();
        origin.extend(std::iter::repeat_n(ColumnOrigin::Image, table.names.len()));
        Ok(FeatureMatrix {
            names,
            data,
            n_rows: self.n_rows,
            labels: self.labels.clone(),
            centres: self.centres.clone(),
            ids: self.ids.clone(),
            eligible,
            origin,
        })
    }

    /// `id,centre,label,<features...>` with missing cells as `NaN`; image
    /// columns carry an `img:` prefix and ineligible ones a trailing `*`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
        let mut header = vec!["id".to_string(), "centre".into(), "label".into()];
        for c in 0..self.n_cols() {
            let prefix = if self.origin[c] == ColumnOrigin::Image { "img:" } else { "" };
            let suffix = if self.eligible[c] { "" } else { "*" };
            header.push(format!("{prefix}{}{suffix}", self.names[c]));
        }
        w.write_record(&header)?;
        for r in 0..self.n_rows {
            let mut rec = vec![self.ids[r].clone(), self.centres[r].clone(), label_name(self.labels[r]).into()];
            rec.extend(self.row(r).iter().map(|v| format_value(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        if header.len() < 3 || header[0] != "id" || header[1] != "centre" || header[2] != "label" {
            return Err(Error::format("feature matrix CSV", "header must start with id,centre,label"));
        }
        let mut names = Vec::new();
        let mut eligible = Vec::new();
        let mut origin = Vec::new();
        for h in &header[3..] {
            let (o, rest) = match h.strip_prefix("img:") {
                Some(rest) => (ColumnOrigin::Image, rest),
                None => (ColumnOrigin::Clinical, h.as_str()),
            };
            let (name, e) = match rest.strip_suffix('*') {
                Some(n) => (n, false),
                None => (rest, true),
            };
            names.push(name.to_string());
            eligible.push(e);
            origin.push(o);
        }
        let mut m = FeatureMatrix {
            names,
            data: Vec::new(),
            n_rows: 0,
            labels: Vec::new(),
            centres: Vec::new(),
            ids: Vec::new(),
            eligible,
            origin,
        };
        for rec in rdr.records() {
            let rec = rec?;
            m.ids.push(rec[0].to_string());
            m.centres.push(rec[1].to_string());
            m.labels.push(parse_label(&rec[2])?);
            for (i, cell) in rec.iter().skip(3).enumerate() {
                m.data.push(parse_number(&m.names[i], cell)?);
            }
            m.n_rows += 1;
        }
        Ok(m)
    }
}

pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        // shortest representation that round-trips
        format!("{v:?}")
    }
}

fn parse_number(col: &str, cell: &str) -> Result<f64> {
    if is_missing_cell(cell) {
        return Ok(f64::NAN);
    }
    cell.trim().parse::<f64>().map_err(|_| {
        Error::format("CSV", format!("column '{col}' holds non-numeric value '{}'", cell.trim()))
    })
}

/// Reads the clinical CSV described by `schema`. Binary columns map to
/// {0, 1}, categorical columns expand to one indicator column per level
/// (`name=level`), and `NaN` or empty cells become missing. Rows without a
/// label are rejected.
pub fn parse_clinical_csv(path: &Path, schema: &ClinicalSchema) -> Result<FeatureMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_clinical_reader(file, schema)
}

pub fn parse_clinical_reader<R: std::io::Read>(reader: R, schema: &ClinicalSchema) -> Result<FeatureMatrix> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for h in &header {
        if schema.column(h).is_none() {
            return Err(Error::Schema(format!("unknown column '{h}'")));
        }
    }
    let pos = |name: &str| header.iter().position(|h| h == name);
    for c in schema.columns() {
        if pos(&c.name).is_none() {
            return Err(Error::Schema(format!("missing column '{}'", c.name)));
        }
    }
    let rows: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let label_at = pos(&schema.label_column().name).expect("checked");
    let centre_at = pos(&schema.centre_column().name).expect("checked");
    let id_at = schema.id_column().map(|c| pos(&c.name).expect("checked"));

    let mut labels = Vec::with_capacity(rows.len());
    let mut centres = Vec::with_capacity(rows.len());
    let mut ids = Vec::with_capacity(rows.len());
    for (r, rec) in rows.iter().enumerate() {
        let cell = &rec[label_at];
        if is_missing_cell(cell) {
            return Err(Error::format("clinical CSV", format!("row {} has no label", r + 1)));
        }
        labels.push(parse_label(cell)?);
        centres.push(rec[centre_at].trim().to_string());
        ids.push(match id_at {
            Some(i) => rec[i].trim().to_string(),
            None => r.to_string(),
        });
    }

    // feature columns in schema order
    let mut names = Vec::new();
    let mut eligible = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for spec in schema.columns().iter().filter(|c| c.kind.is_feature()) {
        let at = pos(&spec.name).expect("checked");
        match spec.kind {
            ColumnKind::Continuous | ColumnKind::Binary => {
                let mut col = Vec::with_capacity(rows.len());
                for rec in &rows {
                    let cell = &rec[at];
                    col.push(if is_missing_cell(cell) {
                        f64::NAN
                    } else if spec.kind == ColumnKind::Binary {
                        parse_binary(&spec.name, cell)?
                    } else {
                        parse_number(&spec.name, cell)?
                    });
                }
                names.push(spec.name.clone());
                eligible.push(spec.eligible);
                columns.push(col);
            }
            ColumnKind::Categorical => {
                let levels: BTreeSet<String> = rows
                    .iter()
                    .map(|rec| rec[at].trim().to_string())
                    .filter(|s| !is_missing_cell(s))
                    .collect();
                for level in &levels {
                    let col = rows
                        .iter()
                        .map(|rec| {
                            let cell = rec[at].trim();
                            if is_missing_cell(cell) {
                                f64::NAN
                            } else if cell == level {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    names.push(format!("{}={level}", spec.name));
                    eligible.push(spec.eligible);
                    columns.push(col);
                }
            }
            _ => unreachable!(),
        }
    }

    let d = names.len();
    let mut data = vec![0.0; rows.len() * d];
    for (c, col) in columns.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            data[r * d + c] = *v;
        }
    }
    Ok(FeatureMatrix {
        origin: vec![ColumnOrigin::Clinical; d],
        names,
        data,
        n_rows: rows.len(),
        labels,
        centres,
        ids,
        eligible,
    })
}

/// Unlabelled features keyed by id, the output of image extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    pub data: Vec<f64>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            ids: Vec::new(),
            names,
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, id: String, values: &[f64]) -> Result<()> {
        if values.len() != self.names.len() {
            return Err(Error::DimensionMismatch {
                expected: (self.names.len(), 1),
                found: (values.len(), 1),
            });
        }
        self.ids.push(id);
        self.data.extend_from_slice(values);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let d = self.names.len();
        &self.data[r * d..(r + 1) * d]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
        let mut header = vec!["id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec = vec![self.ids[r].clone()];
            rec.extend(self.row(r).iter().map(|v| format_value(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        if header.first().map(String::as_str) != Some("id") {
            return Err(Error::format("feature CSV", "first column must be 'id'"));
        }
        let mut t = FeatureTable::new(header[1..].to_vec());
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::format("feature CSV", format!("row '{}' has {} cells", &rec[0], rec.len())));
            }
            let values = rec
                .iter()
                .skip(1)
                .zip(&t.names)
                .map(|(cell, name)| parse_number(name, cell))
                .collect::<Result<Vec<_>>>()?;
            t.push(rec[0].to_string(), &values)?;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> ClinicalSchema {
        ClinicalSchema::parse(
            "PatientID|id|no|\nAge|continuous|yes|\nLDH|continuous|yes|U/L\nSex|binary|yes|\nTherapy|categorical|no|\nPrognosis|label|no|\nHospital|centre|no|\n",
        )
        .unwrap()
    }

    const CSV: &str = "PatientID,Age,LDH,Sex,Therapy,Prognosis,Hospital\n\
p1,60,300,1,a,SEVERE,A\n\
p2,45,NaN,0,b,MILD,A\n\
p3,70,410,1,NaN,severe,B\n";

    #[test]
    fn parses_kinds_and_missing() {
        let m = parse_clinical_reader(CSV.as_bytes(), &schema()).unwrap();
        assert_eq!(m.names, ["Age", "LDH", "Sex", "Therapy=a", "Therapy=b"]);
        assert_eq!(m.labels, [SEVERE, MILD, SEVERE]);
        assert_eq!(m.centres, ["A", "A", "B"]);
        assert!(m.is_missing(1, 1));
        assert_eq!(m.value(0, 2), 1.0);
        assert_eq!(m.value(1, 2), 0.0);
        assert_eq!(m.row(0)[3..], [1.0, 0.0]);
        assert!(m.is_missing(2, 3) && m.is_missing(2, 4));
        assert_eq!(m.eligible, [true, true, true, false, false]);
        assert_eq!(m.eligible_only().names, ["Age", "LDH", "Sex"]);
    }

    #[test]
    fn header_errors() {
        let no_age = "PatientID,LDH,Sex,Therapy,Prognosis,Hospital\np1,1,1,a,MILD,A\n";
        let err = parse_clinical_reader(no_age.as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("missing column 'Age'"), "{err}");
        let extra = "PatientID,Age,LDH,Sex,Therapy,Prognosis,Hospital,Zzz\np1,1,1,1,a,MILD,A,3\n";
        assert!(parse_clinical_reader(extra.as_bytes(), &schema()).is_err());
    }

    #[test]
    fn cell_errors() {
        let bad = "PatientID,Age,LDH,Sex,Therapy,Prognosis,Hospital\np1,old,1,1,a,MILD,A\n";
        assert!(parse_clinical_reader(bad.as_bytes(), &schema()).is_err());
        let nolabel = "PatientID,Age,LDH,Sex,Therapy,Prognosis,Hospital\np1,1,1,1,a,NaN,A\n";
        assert!(parse_clinical_reader(nolabel.as_bytes(), &schema()).is_err());
        let badsex = "PatientID,Age,LDH,Sex,Therapy,Prognosis,Hospital\np1,1,1,2,a,MILD,A\n";
        assert!(parse_clinical_reader(badsex.as_bytes(), &schema()).is_err());
    }

    #[test]
    fn csv_round_trips_and_fuses() {
        let dir = tempfile::tempdir().unwrap();
        let m = parse_clinical_reader(CSV.as_bytes(), &schema()).unwrap();
        let mut t = FeatureTable::new(vec!["f__mean".into()]);
        for (i, id) in ["p3", "p1", "p2"].iter().enumerate() {
            t.push(id.to_string(), &[i as f64 + 0.5]).unwrap();
        }
        let tp = dir.path().join("t.csv");
        t.write_csv(&tp).unwrap();
        assert_eq!(FeatureTable::read_csv(&tp).unwrap(), t);

        let fused = m.with_image_features(&t, &m.ids.clone()).unwrap();
        assert_eq!(fused.column(fused.column_index("f__mean").unwrap()), [1.5, 2.5, 0.5]);
        assert_eq!(fused.columns_of(ColumnOrigin::Image), [5]);
        let p = dir.path().join("m.csv");
        fused.write_csv(&p).unwrap();
        let back = FeatureMatrix::read_csv(&p).unwrap();
        assert_eq!(back.names, fused.names);
        assert_eq!(back.eligible, fused.eligible);
        assert_eq!(back.origin, fused.origin);
        for (a, b) in back.data.iter().zip(&fused.data) {
            assert!(a == b || (a.is_nan() && b.is_nan()));
        }

        let err = m.with_image_features(&t, &["p1".into(), "zz".into(), "p2".into()]).unwrap_err();
        assert!(err.to_string().contains("zz"));
    }
}
