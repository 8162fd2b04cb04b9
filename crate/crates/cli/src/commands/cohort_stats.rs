//! Per-variable cohort description split by outcome.
//!
//! Continuous variables are reported as median [Q1, Q3] and compared with
//! the Mann-Whitney U test; binary and one-hot columns as counts and
//! percentages, compared with the Yates-corrected two-proportion z-test.

use std::path::Path;

use lungtex_core::evaluation::{mann_whitney_u, proportion_ztest_yates, MwuMode};
use lungtex_core::tabular::{ClinicalSchema, ColumnKind, FeatureMatrix, MILD, SEVERE};
use lungtex_core::{Error, Result};

pub const COHORT_STATS_FILE: &str = "cohort_stats.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct VariableStats {
    pub variable: String,
    pub kind: ColumnKind,
    pub eligible: bool,
    pub missing_pct: f64,
    pub all: String,
    pub mild: String,
    pub severe: String,
    pub test: &'static str,
    pub p_value: Option<f64>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median_iqr(values: &[f64]) -> String {
    if values.is_empty() {
        return "-".into();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    format!(
        "{} [{}, {}]",
        fmt(quantile(&v, 0.5)),
        fmt(quantile(&v, 0.25)),
        fmt(quantile(&v, 0.75))
    )
}

fn proportion(values: &[f64]) -> String {
    if values.is_empty() {
        return "-".into();
    }
    let k = values.iter().filter(|&&v| v != 0.0).count();
    format!("{k}/{} ({:.1}%)", values.len(), 100.0 * k as f64 / values.len() as f64)
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn column_kind(schema: &ClinicalSchema, name: &str) -> ColumnKind {
    if let Some(spec) = schema.column(name) {
        return spec.kind;
    }
    // one-hot indicator `base=level`
    name.split_once('=')
        .and_then(|(base, _)| schema.column(base))
        .map_or(ColumnKind::Continuous, |s| s.kind)
}

pub fn cohort_stats(m: &FeatureMatrix, schema: &ClinicalSchema) -> Result<Vec<VariableStats>> {
    if m.n_rows == 0 {
        return Err(Error::EmptyInput);
    }
    let mut out = Vec::with_capacity(m.n_cols());
    for c in 0..m.n_cols() {
        let kind = column_kind(schema, &m.names[c]);
        let observed = |label: Option<u8>| -> Vec<f64> {
            (0..m.n_rows)
                .filter(|&r| label.is_none_or(|l| m.labels[r] == l))
                .map(|r| m.value(r, c))
                .filter(|v| !v.is_nan())
                .collect()
        };
        let (all, mild, severe) = (observed(None), observed(Some(MILD)), observed(Some(SEVERE)));
        let missing_pct = 100.0 * (m.n_rows - all.len()) as f64 / m.n_rows as f64;
        let categorical = matches!(kind, ColumnKind::Binary | ColumnKind::Categorical);
        let (describe, test): (fn(&[f64]) -> String, &'static str) = if categorical {
            (proportion, "Yates z-test")
        } else {
            (median_iqr, "Mann-Whitney U")
        };
        let p_value = if mild.is_empty() || severe.is_empty() {
            None
        } else if categorical {
            let ones = |v: &[f64]| v.iter().filter(|&&x| x != 0.0).count() as u64;
            Some(proportion_ztest_yates(ones(&mild), mild.len() as u64, ones(&severe), severe.len() as u64)?.p)
        } else {
            Some(mann_whitney_u(&mild, &severe, MwuMode::Auto)?.p)
        };
        out.push(VariableStats {
            variable: m.names[c].clone(),
            kind,
            eligible: m.eligible[c],
            missing_pct,
            all: describe(&all),
            mild: describe(&mild),
            severe: describe(&severe),
            test,
            p_value,
        });
    }
    Ok(out)
}

pub fn write_cohort_stats(rows: &[VariableStats], m: &FeatureMatrix, path: &Path) -> Result<()> {
    let n_mild = m.labels.iter().filter(|&&l| l == MILD).count();
    let n_severe = m.n_rows - n_mild;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format("csv", e.to_string()))?;
    w.write_record([
        "variable".to_string(),
        "kind".into(),
        "eligible".into(),
        "missing_pct".into(),
        format!("all (n={})", m.n_rows),
        format!("mild (n={n_mild})"),
        format!("severe (n={n_severe})"),
        "test".into(),
        "p_value".into(),
    ])?;
    for r in rows {
        w.write_record([
            r.variable.clone(),
            r.kind.to_string(),
            if r.eligible { "yes" } else { "no" }.into(),
            format!("{:.1}", r.missing_pct),
            r.all.clone(),
            r.mild.clone(),
            r.severe.clone(),
            r.test.into(),
            r.p_value.map_or("-".into(), |p| format!("{p:.4e}")),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lungtex_core::rng::{seeded, standard_normal};
    use lungtex_core::tabular::parse_clinical_reader;

    fn schema() -> ClinicalSchema {
        ClinicalSchema::parse(
            "c|centre|no|\ny|label|no|\nx|continuous|yes|\nb|binary|yes|\nk|categorical|yes|\n",
        )
        .unwrap()
    }

    #[test]
    fn balanced_binary_has_p_one_and_missing_is_counted() {
        let mut csv = String::from("c,y,x,b,k\n");
        for i in 0..10 {
            let label = if i < 5 { "mild" } else { "severe" };
            let x = if i % 3 == 0 && i < 9 { "NaN".to_string() } else { i.to_string() };
            csv.push_str(&format!("A,{label},{x},{},{}\n", i % 2, if i % 2 == 0 { "u" } else { "v" }));
        }
        let m = parse_clinical_reader(csv.as_bytes(), &schema()).unwrap();
        let rows = cohort_stats(&m, &schema()).unwrap();
        let x = rows.iter().find(|r| r.variable == "x").unwrap();
        assert_eq!(x.missing_pct, 30.0);
        assert_eq!(x.test, "Mann-Whitney U");
        // mild rows 0..5 hold 1, 2, 4 after dropping 0 and 3
        assert_eq!(x.mild, "2 [1.5, 3]");
        let b = rows.iter().find(|r| r.variable == "b").unwrap();
        assert_eq!(b.test, "Yates z-test");
        assert_eq!(b.mild, "2/5 (40.0%)");
        assert_eq!(b.severe, "3/5 (60.0%)");
        assert_eq!(b.p_value, Some(1.0));
        let k = rows.iter().find(|r| r.variable == "k=u").unwrap();
        assert_eq!(k.kind, ColumnKind::Categorical);
    }

    #[test]
    fn exact_balance_gives_p_one() {
        let mut csv = String::from("c,y,x,b,k\n");
        for i in 0..8 {
            let label = if i < 4 { "mild" } else { "severe" };
            csv.push_str(&format!("A,{label},{i},{},u\n", (i / 2) % 2));
        }
        let m = parse_clinical_reader(csv.as_bytes(), &schema()).unwrap();
        let rows = cohort_stats(&m, &schema()).unwrap();
        assert_eq!(rows.iter().find(|r| r.variable == "b").unwrap().p_value, Some(1.0));
    }

    #[test]
    fn shifted_continuous_is_significant() {
        let mut rng = seeded(5, &[]);
        let mut csv = String::from("c,y,x,b,k\n");
        for i in 0..200 {
            let (label, shift) = if i < 100 { ("mild", 0.0) } else { ("severe", 3.0) };
            csv.push_str(&format!("A,{label},{},0,u\n", standard_normal(&mut rng) + shift));
        }
        let m = parse_clinical_reader(csv.as_bytes(), &schema()).unwrap();
        let rows = cohort_stats(&m, &schema()).unwrap();
        assert!(rows[0].p_value.unwrap() < 1e-3);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(median_iqr(&[]), "-");
    }
}
