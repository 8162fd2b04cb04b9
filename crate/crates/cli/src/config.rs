//! Flat `key = value` run configuration.
//!
//! ```text
//! # one experiment variant per line set
//! pipeline = clinical_only, images_only, fused
//! learners = lgr, svm, rf
//! cv = 10x20, loco
//! d_pr = grid
//! window = 21
//! seed = 7
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lungtex_core::evaluation::Pipeline;
use lungtex_core::tabular::{d_pr_grid, LearnerKind, DEFAULT_INNER_FOLDS, DEFAULT_NEIGHBORS};
use lungtex_core::texture::{ExtractionConfig, GlcmAngle, MapConfig};

use crate::error::{CliError, CliResult};

pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.10;
pub const DEFAULT_RESIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvSpec {
    Kfold { k: usize, repetitions: usize },
    Loco,
}

impl CvSpec {
    /// Short form used in file names.
    pub fn tag(&self) -> String {
        match self {
            CvSpec::Kfold { k, repetitions } => format!("{k}x{repetitions}"),
            CvSpec::Loco => "loco".into(),
        }
    }
}

impl FromStr for CvSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "loco" {
            return Ok(CvSpec::Loco);
        }
        let bad = || CliError::usage(format!("cv entry '{s}' must be 'loco' or KxR, e.g. 10x20"));
        let (k, r) = t.split_once('x').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        let repetitions: usize = r.parse().map_err(|_| bad())?;
        if k < 2 || repetitions < 1 {
            return Err(bad());
        }
        Ok(CvSpec::Kfold { k, repetitions })
    }
}

impl fmt::Display for CvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Number of image descriptors kept by the MI filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DprSetting {
    /// One run per grid value; the best run is reported.
    Grid,
    All,
    Values(Vec<usize>),
}

impl DprSetting {
    /// Candidate values for `n_image` available descriptors; `None` keeps all.
    pub fn candidates(&self, n_image: usize) -> Vec<Option<usize>> {
        if n_image == 0 {
            return vec![None];
        }
        match self {
            DprSetting::Grid => d_pr_grid(n_image)
                .into_iter()
                .map(|d| if d >= n_image { None } else { Some(d) })
                .collect(),
            DprSetting::All => vec![None],
            DprSetting::Values(v) => {
                let mut out: Vec<Option<usize>> =
                    v.iter().map(|&d| if d >= n_image { None } else { Some(d) }).collect();
                out.dedup();
                out
            }
        }
    }
}

impl FromStr for DprSetting {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grid" => Ok(DprSetting::Grid),
            "all" => Ok(DprSetting::All),
            other => {
                let mut v = other
                    .split(',')
                    .map(|p| p.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::usage(format!("d_pr must be grid, all or a list of integers, got '{s}'")))?;
                if v.contains(&0) {
                    return Err(CliError::usage("d_pr values must be >= 1"));
                }
                v.sort_unstable();
                v.dedup();
                Ok(DprSetting::Values(v))
            }
        }
    }
}

impl fmt::Display for DprSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DprSetting::Grid => f.write_str("grid"),
            DprSetting::All => f.write_str("all"),
            DprSetting::Values(v) => {
                let parts: Vec<String> = v.iter().map(|d| d.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Whether intensity standardization happens before or after resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessOrder {
    StandardizeThenResize,
    ResizeThenStandardize,
}

impl FromStr for PreprocessOrder {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standardize_then_resize" => Ok(Self::StandardizeThenResize),
            "resize_then_standardize" => Ok(Self::ResizeThenStandardize),
            other => Err(CliError::usage(format!(
                "order must be standardize_then_resize or resize_then_standardize, got '{other}'"
            ))),
        }
    }
}

impl fmt::Display for PreprocessOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::StandardizeThenResize => "standardize_then_resize",
            Self::ResizeThenStandardize => "resize_then_standardize",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipelines: Vec<Pipeline>,
    pub learners: Vec<LearnerKind>,
    pub cv: Vec<CvSpec>,
    pub stratified: bool,
    pub d_pr: DprSetting,
    pub extraction: ExtractionConfig,
    /// Square output side; `None` keeps the native size.
    pub resize: Option<usize>,
    pub order: PreprocessOrder,
    pub seed: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub failure_threshold: f64,
    pub mi_neighbors: usize,
    pub inner_folds: usize,
    pub schema: Option<PathBuf>,
    pub save_maps: bool,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipelines: vec![Pipeline::ClinicalOnly, Pipeline::ImagesOnly, Pipeline::Fused],
            learners: LearnerKind::ALL.to_vec(),
            cv: vec![
                CvSpec::Kfold {
                    k: 10,
                    repetitions: 20,
                },
                CvSpec::Loco,
            ],
            stratified: false,
            d_pr: DprSetting::Grid,
            extraction: ExtractionConfig::default(),
            resize: Some(DEFAULT_RESIZE),
            order: PreprocessOrder::StandardizeThenResize,
            seed: None,
            cache_dir: None,
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            mi_neighbors: DEFAULT_NEIGHBORS,
            inner_folds: DEFAULT_INNER_FOLDS,
            schema: None,
            save_maps: false,
            jobs: None,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::usage(format!("{key}: expected true/false, got '{v}'"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::usage(format!("{key}: cannot parse '{v}'")))
}

fn list<T, F>(v: &str, f: F) -> CliResult<Vec<T>>
where
    F: Fn(&str) -> CliResult<T>,
{
    let items: Vec<T> = v.split(',').filter(|p| !p.trim().is_empty()).map(|p| f(p.trim())).collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(CliError::usage(format!("empty list '{v}'")));
    }
    Ok(items)
}

fn resolve(base: &Path, v: &str) -> PathBuf {
    let p = PathBuf::from(v);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut c = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", lineno + 1)))?;
            c.set(key.trim(), value.trim())
                .map_err(|e| CliError::usage(format!("config line {}: {e}", lineno + 1)))?;
        }
        c.validate()?;
        Ok(c.with_base(base))
    }

    fn with_base(mut self, base: &Path) -> Self {
        self.cache_dir = self.cache_dir.map(|p| resolve(base, &p.to_string_lossy()));
        self.schema = self.schema.map(|p| resolve(base, &p.to_string_lossy()));
        self
    }

    /// Applies one setting; unknown keys are rejected.
    pub fn set(&mut self, key: &str, v: &str) -> CliResult<()> {
        let maps = &mut self.extraction.maps;
        match key {
            "pipeline" | "pipelines" => {
                self.pipelines = list(v, |p| p.parse().map_err(CliError::Data))?;
            }
            "learner" | "learners" => {
                self.learners = if v.eq_ignore_ascii_case("all") {
                    LearnerKind::ALL.to_vec()
                } else {
                    list(v, |p| p.parse().map_err(CliError::Data))?
                };
            }
            "cv" => self.cv = list(v, |p| p.parse())?,
            "stratified" => self.stratified = parse_bool(key, v)?,
            "d_pr" => self.d_pr = v.parse()?,
            "window" => maps.window = parse_num(key, v)?,
            "bin_width" => maps.bin_width = parse_num(key, v)?,
            "glcm_delta" => maps.delta = parse_num(key, v)?,
            "glcm_angle" => {
                maps.angle = GlcmAngle::from_degrees(parse_num(key, v)?).map_err(CliError::Data)?
            }
            "glcm_symmetric" => maps.symmetric = parse_bool(key, v)?,
            "extended" => self.extraction.extended = parse_bool(key, v)?,
            "resize" => {
                self.resize = if v.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(parse_num(key, v)?)
                }
            }
            "order" => self.order = v.parse()?,
            "seed" => self.seed = Some(parse_num(key, v)?),
            "cache_dir" => self.cache_dir = Some(PathBuf::from(v)),
            "failure_threshold" => self.failure_threshold = parse_num(key, v)?,
            "mi_neighbors" => self.mi_neighbors = parse_num(key, v)?,
            "inner_folds" => self.inner_folds = parse_num(key, v)?,
            "schema" => self.schema = Some(PathBuf::from(v)),
            "save_maps" => self.save_maps = parse_bool(key, v)?,
            "jobs" => self.jobs = Some(parse_num(key, v)?),
            other => return Err(CliError::usage(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        let maps = &self.extraction.maps;
        if maps.window % 2 == 0 || maps.window == 0 {
            return Err(CliError::usage(format!("window must be odd, got {}", maps.window)));
        }
        if !(maps.bin_width > 0.0 && maps.bin_width.is_finite()) {
            return Err(CliError::usage("bin_width must be > 0"));
        }
        if maps.delta == 0 {
            return Err(CliError::usage("glcm_delta must be >= 1"));
        }
        if self.resize == Some(0) {
            return Err(CliError::usage("resize must be >= 1 or none"));
        }
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return Err(CliError::usage("failure_threshold must lie in [0, 1]"));
        }
        if self.mi_neighbors == 0 {
            return Err(CliError::usage("mi_neighbors must be >= 1"));
        }
        if self.inner_folds < 2 {
            return Err(CliError::usage("inner_folds must be >= 2"));
        }
        if self.jobs == Some(0) {
            return Err(CliError::usage("jobs must be >= 1"));
        }
        Ok(())
    }

    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::usage("a seed is required: set seed in the config or pass --seed"))
    }

    /// Canonical text of every setting that changes extracted features.
    pub fn extraction_key(&self) -> String {
        let m: &MapConfig = &self.extraction.maps;
        format!(
            "window={}\nbin_width={:?}\nglcm_delta={}\nglcm_angle={}\nglcm_symmetric={}\nextended={}\nresize={}\norder={}\n",
            m.window,
            m.bin_width,
            m.delta,
            m.angle.degrees(),
            m.symmetric,
            self.extraction.extended,
            self.resize.map_or("none".to_string(), |r| r.to_string()),
            self.order,
        )
    }

    /// Full configuration in the same format `parse` reads.
    pub fn render(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        s.push_str(&format!(
            "pipeline = {}\n",
            join(self.pipelines.iter().map(pipeline_key).map(String::from).collect())
        ));
        s.push_str(&format!(
            "learners = {}\n",
            join(self.learners.iter().map(|l| l.short_name().to_ascii_lowercase()).collect())
        ));
        s.push_str(&format!("cv = {}\n", join(self.cv.iter().map(|c| c.tag()).collect())));
        s.push_str(&format!("stratified = {}\n", self.stratified));
        s.push_str(&format!("d_pr = {}\n", self.d_pr));
        for line in self.extraction_key().lines() {
            let (k, v) = line.split_once('=').expect("key=value");
            s.push_str(&format!("{k} = {v}\n"));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!("seed = {seed}\n"));
        }
        s.push_str(&format!("failure_threshold = {}\n", self.failure_threshold));
        s.push_str(&format!("mi_neighbors = {}\n", self.mi_neighbors));
        s.push_str(&format!("inner_folds = {}\n", self.inner_folds));
        s.push_str(&format!("save_maps = {}\n", self.save_maps));
        if let Some(p) = &self.schema {
            s.push_str(&format!("schema = {}\n", p.display()));
        }
        if let Some(p) = &self.cache_dir {
            s.push_str(&format!("cache_dir = {}\n", p.display()));
        }
        if let Some(j) = self.jobs {
            s.push_str(&format!("jobs = {j}\n"));
        }
        s
    }
}

pub fn pipeline_key(p: &Pipeline) -> &'static str {
    match p {
        Pipeline::ClinicalOnly => "clinical_only",
        Pipeline::ImagesOnly => "images_only",
        Pipeline::Fused => "fused",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let c = RunConfig::parse("seed = 3\n", Path::new(".")).unwrap();
        assert_eq!(c.cv, vec![CvSpec::Kfold { k: 10, repetitions: 20 }, CvSpec::Loco]);
        assert_eq!(c.d_pr, DprSetting::Grid);
        assert_eq!(c.inner_folds, 5);
        assert_eq!(c.learners.len(), 3);
        assert_eq!(c.resize, Some(1024));
        assert_eq!(c.order, PreprocessOrder::StandardizeThenResize);
        assert_eq!(c.extraction.maps.window, 21);
        assert_eq!(c.require_seed().unwrap(), 3);
    }

    #[test]
    fn parses_every_key() {
        let text = "\
# comment
pipeline = fused, clinical
learners = rf
cv = 3x20, loco
stratified = yes
d_pr = 10, 2
window = 11
bin_width = 0.25
glcm_delta = 2
glcm_angle = 90
glcm_symmetric = false
extended = true
resize = none
order = resize_then_standardize
seed = 42
cache_dir = cache
failure_threshold = 0.2
mi_neighbors = 5
inner_folds = 3
schema = schema.txt
save_maps = true
jobs = 2
";
        let c = RunConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(c.pipelines, vec![Pipeline::Fused, Pipeline::ClinicalOnly]);
        assert_eq!(c.learners, vec![LearnerKind::RandomForest]);
        assert_eq!(c.cv[0], CvSpec::Kfold { k: 3, repetitions: 20 });
        assert!(c.stratified);
        assert_eq!(c.d_pr, DprSetting::Values(vec![2, 10]));
        assert_eq!(c.extraction.maps.window, 11);
        assert_eq!(c.extraction.maps.angle, GlcmAngle::Deg90);
        assert!(!c.extraction.maps.symmetric && c.extraction.extended);
        assert_eq!(c.resize, None);
        assert_eq!(c.cache_dir, Some(PathBuf::from("/data/cache")));
        assert_eq!(c.schema, Some(PathBuf::from("/data/schema.txt")));
        assert_eq!(c.jobs, Some(2));
        // render round-trips
        let again = RunConfig::parse(&c.render(), Path::new("/")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "window = 20",
            "frobnicate = 1",
            "cv = 10",
            "d_pr = 0",
            "learners = knn",
            "glcm_angle = 30",
            "failure_threshold = 2",
            "no equals sign",
        ] {
            let err = RunConfig::parse(bad, Path::new(".")).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{bad}");
        }
        assert!(RunConfig::default().require_seed().is_err());
    }

    #[test]
    fn d_pr_candidates() {
        assert_eq!(
            DprSetting::Grid.candidates(12),
            vec![Some(2), Some(4), Some(6), Some(8), Some(10), None]
        );
        assert_eq!(DprSetting::Grid.candidates(0), vec![None]);
        assert_eq!(DprSetting::Values(vec![5, 40, 50]).candidates(30), vec![Some(5), None]);
        assert_eq!(DprSetting::All.candidates(30), vec![None]);
    }

    #[test]
    fn extraction_key_ignores_learning_settings() {
        let a = RunConfig::parse("seed = 1\nlearners = rf\n", Path::new(".")).unwrap();
        let b = RunConfig::parse("seed = 2\ncv = loco\n", Path::new(".")).unwrap();
        assert_eq!(a.extraction_key(), b.extraction_key());
        let c = RunConfig::parse("window = 11\n", Path::new(".")).unwrap();
        assert_ne!(a.extraction_key(), c.extraction_key());
    }
}
