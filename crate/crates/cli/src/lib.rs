//! `lungtex` command-line driver: synthetic cohorts, cached batch feature
//! extraction, experiments, cohort statistics and report tables.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 more patients failed extraction than the configured threshold allows.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use lungtex_core::tabular::{parse_clinical_csv, ClinicalSchema, FeatureTable};

use commands::synthesize::SynthSpec;
use config::RunConfig;
use error::{CliError, CliResult};
use manifest::DatasetManifest;

pub const CACHE_ENV: &str = "LUNGTEX_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "lungtex", version, about = "Radiograph texture features and prognostic experiments")]
pub struct Cli {
    /// Log verbosity: -v info, -vv debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// key = value run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: config value, else all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract image descriptors for every manifest entry.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        /// Feature cache (default: config cache_dir, else <out>/cache).
        #[arg(long, env = CACHE_ENV)]
        cache_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the configured pipelines, learners and validation schemes.
    Experiment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        clinical: PathBuf,
        /// Feature CSV written by `extract`; needed by image pipelines.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Clinical schema (default: config schema).
        #[arg(long)]
        schema: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Describe the clinical table by outcome group.
    CohortStats {
        #[arg(long)]
        clinical: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a seeded synthetic cohort.
    Synthesize {
        #[arg(long, default_value_t = 120)]
        n_patients: usize,
        #[arg(long, default_value_t = 6)]
        n_centres: usize,
        /// Signal preset: none, moderate or strong.
        #[arg(long, default_value = "moderate")]
        signal: String,
        /// Overrides the preset's clinical separation (SDs).
        #[arg(long)]
        clinical_signal: Option<f64>,
        /// Overrides the preset's texture separation (SDs).
        #[arg(long)]
        texture_signal: Option<f64>,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 0.05)]
        missing_rate: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild summary tables from saved reports.
    Report {
        /// Directory of report JSON files.
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> CliResult<RunConfig> {
    let mut c = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        c.seed = Some(seed);
    }
    if let Some(j) = common.jobs {
        c.jobs = Some(j);
    }
    c.validate()?;
    Ok(c)
}

fn jobs(c: &RunConfig) -> usize {
    c.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn schema(flag: &Option<PathBuf>, c: &RunConfig) -> CliResult<ClinicalSchema> {
    let path = flag
        .clone()
        .or_else(|| c.schema.clone())
        .ok_or_else(|| CliError::usage("a clinical schema is required: pass --schema or set schema in the config"))?;
    Ok(ClinicalSchema::load(&path)?)
}

fn ensure_dir(p: &Path) -> CliResult<()> {
    std::fs::create_dir_all(p).map_err(|e| CliError::Data(lungtex_core::Error::io(p, e)))
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Extract {
            manifest,
            cache_dir,
            common,
        } => {
            let c = load_config(&common)?;
            let m = DatasetManifest::load(&manifest)?;
            let cache = cache_dir
                .or_else(|| c.cache_dir.clone())
                .unwrap_or_else(|| common.out.join("cache"));
            let o = commands::extract::cmd_extract(&m, &c, &common.out, Some(&cache), jobs(&c))?;
            println!(
                "{} patients: {} cache hits, {} computed, {} failed",
                m.len(),
                o.cache_hits,
                o.computed,
                o.failures.len()
            );
        }
        Command::Experiment {
            manifest,
            clinical,
            features,
            schema: schema_flag,
            common,
        } => {
            let c = load_config(&common)?;
            let seed = c.require_seed()?;
            let m = DatasetManifest::load(&manifest)?;
            let clin = parse_clinical_csv(&clinical, &schema(&schema_flag, &c)?)?;
            let table = features.as_deref().map(FeatureTable::read_csv).transpose()?;
            let outcome = commands::experiment::cmd_experiment(&m, &clin, table.as_ref(), &c, seed, &common.out, jobs(&c))?;
            for r in &outcome.best {
                println!(
                    "{:<30} {:<4} {:<14} accuracy {}",
                    r.config.pipeline.approach(),
                    r.config.learner.short_name(),
                    r.scheme.label(),
                    r.aggregate
                        .accuracy
                        .map_or("n/a".into(), |a| format!("{:.3} ± {:.3}", a.mean, a.std))
                );
            }
        }
        Command::CohortStats {
            clinical,
            schema: schema_flag,
            common,
        } => {
            let c = load_config(&common)?;
            let s = schema(&schema_flag, &c)?;
            let clin = parse_clinical_csv(&clinical, &s)?;
            let rows = commands::cohort_stats::cohort_stats(&clin, &s)?;
            ensure_dir(&common.out)?;
            let path = common.out.join(commands::cohort_stats::COHORT_STATS_FILE);
            commands::cohort_stats::write_cohort_stats(&rows, &clin, &path)?;
            log::info!("wrote {}", path.display());
        }
        Command::Synthesize {
            n_patients,
            n_centres,
            signal,
            clinical_signal,
            texture_signal,
            size,
            missing_rate,
            common,
        } => {
            let c = load_config(&common)?;
            let mut spec = SynthSpec::preset(&signal, c.require_seed()?)?;
            spec.n_patients = n_patients;
            spec.n_centres = n_centres;
            spec.size = size;
            spec.missing_rate = missing_rate;
            if let Some(s) = clinical_signal {
                spec.clinical_signal = s;
            }
            if let Some(s) = texture_signal {
                spec.texture_signal = s;
            }
            ensure_dir(&common.out)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs(&c))
                .build()
                .map_err(|e| CliError::usage(e.to_string()))?;
            pool.install(|| commands::synthesize::cmd_synthesize(&spec, &common.out))?;
        }
        Command::Report { reports, out } => {
            let files = commands::report::report_files(&reports)?;
            commands::report::cmd_report(&files, &out)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
