//! Batch image-feature extraction with a content-hash cache.
//!
//! Cache entries live at `<cache>/features/<key>.tsv`, one `name<TAB>value`
//! line per descriptor. The key hashes the image bytes, its sidecar, the
//! mask bytes and every extraction setting, so any change to the inputs
//! or the configuration misses the cache.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use lungtex_core::imaging::{
    load_image, load_mask, resize_bilinear, resize_mask_nearest, sidecar_path, standardize, GrayImage,
    RoiMask,
};
use lungtex_core::tabular::{format_value, FeatureTable};
use lungtex_core::texture::{parametric_maps, summarize_maps, FeatureSelection, FeatureVector};
use lungtex_core::{Error, Result};

use crate::config::{PreprocessOrder, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{DatasetManifest, ManifestEntry};

pub const FEATURES_FILE: &str = "features.csv";
pub const FAILURES_FILE: &str = "extract_failures.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub table: FeatureTable,
    /// `(patient id, error)` in manifest order.
    pub failures: Vec<(String, String)>,
    pub cache_hits: usize,
    pub computed: usize,
}

/// Standardization and optional square resampling, in the configured order.
pub fn preprocess(img: &GrayImage, mask: &RoiMask, config: &RunConfig) -> Result<(GrayImage, RoiMask)> {
    mask.check_matches(img)?;
    let Some(side) = config.resize else {
        return Ok((standardize(img)?, mask.clone()));
    };
    let img = match config.order {
        PreprocessOrder::StandardizeThenResize => resize_bilinear(&standardize(img)?, side, side)?,
        PreprocessOrder::ResizeThenStandardize => standardize(&resize_bilinear(img, side, side)?)?,
    };
    Ok((img, resize_mask_nearest(mask, side, side)?))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn hash_part(h: &mut Sha256, tag: &str, bytes: &[u8]) {
    h.update(tag.as_bytes());
    h.update((bytes.len() as u64).to_le_bytes());
    h.update(bytes);
}

/// SHA-256 over image bytes, sidecar, mask bytes and extraction settings.
pub fn cache_key(entry: &ManifestEntry, config: &RunConfig) -> Result<String> {
    let mut h = Sha256::new();
    hash_part(&mut h, "image", &read_bytes(&entry.image)?);
    let sidecar = sidecar_path(&entry.image);
    if sidecar.is_file() {
        hash_part(&mut h, "sidecar", &read_bytes(&sidecar)?);
    }
    match &entry.mask {
        Some(m) => hash_part(&mut h, "mask", &read_bytes(m)?),
        None => hash_part(&mut h, "mask", b"full"),
    }
    hash_part(&mut h, "config", config.extraction_key().as_bytes());
    Ok(hex::encode(h.finalize()))
}

fn cache_file(cache: &Path, key: &str) -> PathBuf {
    cache.join("features").join(format!("{key}.tsv"))
}

fn read_cached(path: &Path, expected: &[String]) -> Option<Vec<f64>> {
    let text = fs::read_to_string(path).ok()?;
    let mut values = Vec::with_capacity(expected.len());
    let mut lines = text.lines();
    for name in expected {
        let (n, v) = lines.next()?.split_once('\t')?;
        if n != name {
            return None;
        }
        values.push(if v == "NaN" { f64::NAN } else { v.parse().ok()? });
    }
    lines.next().is_none().then_some(values)
}

fn write_cached(path: &Path, fv: &FeatureVector, id: &str) -> Result<()> {
    let dir = path.parent().expect("cache file has a parent");
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut text = String::new();
    for (n, v) in fv.names.iter().zip(&fv.values) {
        text.push_str(&format!("{n}\t{}\n", format_value(*v)));
    }
    // write-then-rename so a crashed run never leaves a truncated entry
    let tmp = path.with_extension(format!("tmp-{id}"));
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Features of one patient and whether they came from the cache.
pub fn extract_patient(
    entry: &ManifestEntry,
    config: &RunConfig,
    cache: Option<&Path>,
) -> Result<(Vec<f64>, bool)> {
    let columns = FeatureVector::column_names(config.extraction.extended);
    let key = cache_key(entry, config)?;
    if let Some(cache) = cache {
        let path = cache_file(cache, &key);
        if path.is_file() {
            match read_cached(&path, &columns) {
                Some(values) => {
                    log::info!("{}: cache hit {}", entry.id, &key[..12]);
                    return Ok((values, true));
                }
                None => log::warn!("{}: unreadable cache entry {}, recomputing", entry.id, path.display()),
            }
        }
    }

    let img = load_image(&entry.image)?;
    let mask = match &entry.mask {
        Some(m) => load_mask(m)?,
        None => RoiMask::full(img.width(), img.height()),
    };
    let (img, mask) = preprocess(&img, &mask, config)?;
    if mask.count() < 2 {
        return Err(Error::invalid("mask must cover at least 2 pixels"));
    }
    let maps = parametric_maps(
        &img,
        &mask,
        &config.extraction.maps,
        &FeatureSelection::All {
            extended: config.extraction.extended,
        },
    )?;
    let fv = summarize_maps(&maps)?;
    if fv.names != columns {
        return Err(Error::invalid("feature names differ from the expected column layout"));
    }
    if let Some(cache) = cache {
        if config.save_maps {
            maps.save(&cache.join("maps").join(&key))?;
        }
        write_cached(&cache_file(cache, &key), &fv, &entry.id)?;
    }
    log::info!("{}: extracted {} descriptors", entry.id, fv.len());
    Ok((fv.values, false))
}

/// Runs every manifest entry on a pool of `jobs` workers. Per-patient
/// errors are collected, not raised.
pub fn extract_all(
    manifest: &DatasetManifest,
    config: &RunConfig,
    cache: Option<&Path>,
    jobs: usize,
) -> CliResult<ExtractOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {jobs} workers: {e}")))?;
    let results: Vec<Result<(Vec<f64>, bool)>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| extract_patient(e, config, cache))
            .collect()
    });

    let mut out = ExtractOutcome {
        table: FeatureTable::new(FeatureVector::column_names(config.extraction.extended)),
        failures: Vec::new(),
        cache_hits: 0,
        computed: 0,
    };
    for (entry, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok((values, hit)) => {
                out.table.push(entry.id.clone(), &values)?;
                if hit {
                    out.cache_hits += 1;
                } else {
                    out.computed += 1;
                }
            }
            Err(e) => {
                log::error!("{}: {e}", entry.id);
                out.failures.push((entry.id.clone(), e.to_string()));
            }
        }
    }
    Ok(out)
}

/// Extracts, writes `features.csv` and `extract_failures.csv` under
/// `out_dir`, then enforces the failure threshold.
pub fn cmd_extract(
    manifest: &DatasetManifest,
    config: &RunConfig,
    out_dir: &Path,
    cache: Option<&Path>,
    jobs: usize,
) -> CliResult<ExtractOutcome> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outcome = extract_all(manifest, config, cache, jobs)?;
    outcome.table.write_csv(&out_dir.join(FEATURES_FILE))?;

    let fail_path = out_dir.join(FAILURES_FILE);
    let mut w = csv::Writer::from_path(&fail_path)?;
    w.write_record(["id", "error"])?;
    for (id, err) in &outcome.failures {
        w.write_record([id, err])?;
    }
    w.flush().map_err(|e| Error::io(&fail_path, e))?;

    let total = manifest.len();
    let failed = outcome.failures.len();
    log::info!(
        "extracted {} patients ({} cache hits, {} computed, {} failed)",
        total - failed,
        outcome.cache_hits,
        outcome.computed,
        failed
    );
    if failed as f64 > config.failure_threshold * total as f64 {
        return Err(CliError::PartialFailure {
            failed,
            total,
            threshold: config.failure_threshold,
        });
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lungtex_core::imaging::{save_image_pgm16, save_mask};

    fn config() -> RunConfig {
        let mut c = RunConfig::parse("seed = 1\nwindow = 5\nresize = none\n", Path::new(".")).unwrap();
        c.extraction.maps.bin_width = 0.5;
        c
    }

    fn patient(dir: &Path, id: &str, phase: f64) -> ManifestEntry {
        let (w, h) = (24, 20);
        let data = (0..w * h)
            .map(|i| 1000.0 + 300.0 * ((i as f64) * 0.37 + phase).sin() + (i % 7) as f64 * 20.0)
            .collect();
        let img = GrayImage::new(w, h, data, 0.5).unwrap();
        let mask = RoiMask::from_fn(w, h, |x, y| (3..20).contains(&x) && (2..17).contains(&y));
        let image = dir.join(format!("{id}.pgm"));
        let mask_path = dir.join(format!("{id}_mask.pgm"));
        save_image_pgm16(&image, &img).unwrap();
        save_mask(&mask_path, &mask).unwrap();
        ManifestEntry {
            id: id.into(),
            image,
            mask: Some(mask_path),
            centre: "A".into(),
            clinical_key: id.into(),
        }
    }

    #[test]
    fn cache_key_tracks_inputs_and_config() {
        let dir = tempfile::tempdir().unwrap();
        let a = patient(dir.path(), "a", 0.0);
        let b = patient(dir.path(), "b", 1.0);
        let c = config();
        let ka = cache_key(&a, &c).unwrap();
        assert_eq!(ka, cache_key(&a, &c).unwrap());
        assert_ne!(ka, cache_key(&b, &c).unwrap());
        let mut c2 = c.clone();
        c2.extraction.maps.window = 7;
        assert_ne!(ka, cache_key(&a, &c2).unwrap());
        let mut c3 = c.clone();
        c3.learners.truncate(1);
        assert_eq!(ka, cache_key(&a, &c3).unwrap());
        let mut no_mask = a.clone();
        no_mask.mask = None;
        assert_ne!(ka, cache_key(&no_mask, &c).unwrap());
    }

    #[test]
    fn cached_and_fresh_features_agree() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![patient(dir.path(), "a", 0.0), patient(dir.path(), "b", 2.0)];
        let m = DatasetManifest::new(entries).unwrap();
        let cache = dir.path().join("cache");
        let c = config();
        let first = extract_all(&m, &c, Some(&cache), 2).unwrap();
        assert_eq!((first.computed, first.cache_hits), (2, 0));
        assert_eq!(first.table.names.len(), 266);
        let second = extract_all(&m, &c, Some(&cache), 1).unwrap();
        assert_eq!((second.computed, second.cache_hits), (0, 2));
        let bits = |t: &FeatureTable| t.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&first.table), bits(&second.table));
        let uncached = extract_all(&m, &c, None, 1).unwrap();
        assert_eq!(bits(&first.table), bits(&uncached.table));
    }

    #[test]
    fn corrupt_image_is_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let mut entries: Vec<_> = (0..4).map(|i| patient(dir.path(), &format!("p{i}"), i as f64)).collect();
        fs::write(&entries[2].image, b"P5\n24 20\n65535\ngarbage").unwrap();
        entries[3].mask = Some(dir.path().join("missing.pgm"));
        let m = DatasetManifest::new(entries).unwrap();
        let out = dir.path().join("out");
        let err = cmd_extract(&m, &config(), &out, None, 1).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let table = FeatureTable::read_csv(&out.join(FEATURES_FILE)).unwrap();
        assert_eq!(table.ids, vec!["p0", "p1"]);
        let failures = fs::read_to_string(out.join(FAILURES_FILE)).unwrap();
        assert!(failures.contains("p2") && failures.contains("p3"));

        let mut lenient = config();
        lenient.failure_threshold = 0.5;
        let ok = cmd_extract(&m, &lenient, &out, None, 1).unwrap();
        assert_eq!(ok.failures.len(), 2);
    }

    #[test]
    fn preprocess_orders() {
        let img = GrayImage::new(4, 4, (0..16).map(|v| v as f64 * v as f64).collect(), 1.0).unwrap();
        let mask = RoiMask::full(4, 4);
        let mut c = config();
        c.resize = Some(8);
        let (a, m) = preprocess(&img, &mask, &c).unwrap();
        assert_eq!((a.dims(), m.dims()), ((8, 8), (8, 8)));
        assert!((a.pixel_spacing() - 0.5).abs() < 1e-15);
        c.order = PreprocessOrder::ResizeThenStandardize;
        let (b, _) = preprocess(&img, &mask, &c).unwrap();
        let mean = b.data().iter().sum::<f64>() / 64.0;
        assert!(mean.abs() < 1e-12);
        assert_ne!(a.data(), b.data());
    }
}
