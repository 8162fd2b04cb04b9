//! Seeded synthetic cohort: lung-like radiographs, lung masks, a clinical
//! table and the manifest and config that tie them together.
//!
//! Every patient carries a latent image score `z = texture_signal·(y − ½) +
//! ε`. Inside the lungs the texture is a blend of fine and coarse noise
//! with coarse weight `sigmoid(z)`, so the planted image signal lives in
//! co-occurrence structure rather than in brightness. Three clinical
//! columns (Age, LDH, SpO2) shift with the label by `clinical_signal`
//! standard deviations; the others are noise. A therapy column that
//! follows the outcome is present but marked ineligible.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use lungtex_core::imaging::{save_image_pgm16, save_mask, sidecar_path, GrayImage, RoiMask, Sidecar};
use lungtex_core::rng::{seeded, standard_normal};
use lungtex_core::{Error, Result};

use crate::error::{CliError, CliResult};
use crate::manifest::{DatasetManifest, ManifestEntry};

pub const SCHEMA: &str = "\
# synthetic cohort
PatientID|id|no|
Hospital|centre|no|
Prognosis|label|no|mild/severe
Age|continuous|yes|years
LDH|continuous|yes|U/L
SpO2|continuous|yes|%
Sex|binary|yes|1 = male
Fever|binary|yes|
Cough|binary|yes|
WBC|continuous|yes|10^9/L
CRP|continuous|yes|mg/dL
Platelets|continuous|yes|10^9/L
DDimer|continuous|yes|ng/mL
Smoking|categorical|yes|never/former/current
Antiviral_therapy|binary|no|
";

/// Columns whose distribution depends on the label.
pub const INFORMATIVE_CLINICAL: [&str; 3] = ["Age", "LDH", "SpO2"];

const BIT_DEPTH: u8 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_patients: usize,
    pub n_centres: usize,
    /// Image side in pixels.
    pub size: usize,
    /// Class separation of each informative clinical column, in SDs.
    pub clinical_signal: f64,
    /// Class separation of the latent texture score, in SDs.
    pub texture_signal: f64,
    pub missing_rate: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// `none`, `moderate` or `strong`.
    pub fn preset(name: &str, seed: u64) -> CliResult<Self> {
        let (clinical_signal, texture_signal) = match name {
            "none" => (0.0, 0.0),
            "moderate" => (0.6, 2.0),
            "strong" => (1.0, 4.0),
            other => {
                return Err(CliError::usage(format!(
                    "unknown signal preset '{other}' (none, moderate, strong)"
                )))
            }
        };
        Ok(Self {
            n_patients: 120,
            n_centres: 6,
            size: 128,
            clinical_signal,
            texture_signal,
            missing_rate: 0.05,
            seed,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n_centres == 0 || self.n_patients < 2 * self.n_centres {
            return Err(CliError::usage(format!(
                "need at least 2 patients per centre, got {} patients for {} centres",
                self.n_patients, self.n_centres
            )));
        }
        if self.size < 32 {
            return Err(CliError::usage("image size must be >= 32"));
        }
        if !(0.0..0.5).contains(&self.missing_rate) {
            return Err(CliError::usage("missing rate must lie in [0, 0.5)"));
        }
        if !self.clinical_signal.is_finite() || !self.texture_signal.is_finite() {
            return Err(CliError::usage("signal strengths must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
}

impl Ellipse {
    fn contains(&self, u: f64, v: f64) -> bool {
        ((u - self.cx) / self.rx).powi(2) + ((v - self.cy) / self.ry).powi(2) <= 1.0
    }
}

/// Two passes of a clamped separable box blur, rescaled to unit variance.
fn smooth_noise(rng: &mut impl Rng, n: usize, radius: usize) -> Vec<f64> {
    let mut f: Vec<f64> = (0..n * n).map(|_| standard_normal(rng)).collect();
    let mut tmp = vec![0.0; n * n];
    let r = radius as isize;
    for _ in 0..2 {
        for y in 0..n {
            for x in 0..n {
                let s: f64 = (-r..=r)
                    .map(|d| f[y * n + (x as isize + d).clamp(0, n as isize - 1) as usize])
                    .sum();
                tmp[y * n + x] = s;
            }
        }
        for y in 0..n {
            for x in 0..n {
                let s: f64 = (-r..=r)
                    .map(|d| tmp[(y as isize + d).clamp(0, n as isize - 1) as usize * n + x])
                    .sum();
                f[y * n + x] = s;
            }
        }
    }
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let sd = (f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / f.len() as f64).sqrt();
    f.iter().map(|v| (v - mean) / sd).collect()
}

/// 12-bit radiograph and lung mask for one patient.
fn render_patient(spec: &SynthSpec, index: usize, latent: f64, centre: usize) -> Result<(GrayImage, RoiMask)> {
    let mut rng = seeded(spec.seed, &[0x1a, index as u64]);
    let n = spec.size;
    let body = Ellipse {
        cx: 0.5,
        cy: 0.55,
        rx: 0.46 + jitter(&mut rng, 0.04),
        ry: 0.47,
    };
    let lungs = [0.31, 0.69].map(|cx| Ellipse {
        cx: cx + jitter(&mut rng, 0.03),
        cy: 0.5 + jitter(&mut rng, 0.04),
        rx: 0.14 + jitter(&mut rng, 0.02),
        ry: 0.31 + jitter(&mut rng, 0.04),
    });
    let weight = 1.0 / (1.0 + (-latent).exp());
    let fine = smooth_noise(&mut rng, n, 1);
    let coarse = smooth_noise(&mut rng, n, 4);
    let grain = smooth_noise(&mut rng, n, 0);

    // acquisition differs by centre, slightly by patient
    let mut crng = seeded(spec.seed, &[0xce, centre as u64]);
    let gain = (2600.0 + 800.0 * crng.random::<f64>()) * (1.0 + jitter(&mut rng, 0.1));
    let offset = 150.0 + 250.0 * crng.random::<f64>();
    let spacing = 350.0 / n as f64 * (1.0 + 0.05 * centre as f64);

    let mut data = Vec::with_capacity(n * n);
    let mut bits = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let (u, v) = ((x as f64 + 0.5) / n as f64, (y as f64 + 0.5) / n as f64);
            let i = y * n + x;
            let in_lung = lungs.iter().any(|e| e.contains(u, v));
            let base = if in_lung {
                0.25 + 0.12 * ((1.0 - weight) * fine[i] + weight * coarse[i])
            } else if body.contains(u, v) {
                0.6 + 0.03 * coarse[i]
            } else {
                0.05
            };
            let value = offset + gain * (base + 0.01 * grain[i]);
            data.push(value.round().clamp(0.0, 4095.0));
            bits.push(in_lung);
        }
    }
    Ok((
        GrayImage::with_bit_depth(n, n, data, spacing, BIT_DEPTH)?,
        RoiMask::new(n, n, bits)?,
    ))
}

/// Uniform in `[-s/2, s/2)`.
fn jitter(rng: &mut impl Rng, s: f64) -> f64 {
    s * (rng.random::<f64>() - 0.5)
}

fn normal(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    mean + sd * standard_normal(rng)
}

fn bernoulli(rng: &mut impl Rng, p: f64) -> u8 {
    u8::from(rng.random::<f64>() < p)
}

/// One clinical CSV row, cells in `SCHEMA` order.
fn clinical_row(spec: &SynthSpec, index: usize, id: &str, centre: &str, label: u8) -> Vec<String> {
    let mut rng = seeded(spec.seed, &[0xc1, index as u64]);
    let shift = spec.clinical_signal * (label as f64 - 0.5);
    let age = normal(&mut rng, 65.0 + 12.0 * shift, 12.0).clamp(18.0, 100.0).round();
    let ldh = normal(&mut rng, 350.0 + 120.0 * shift, 120.0).max(80.0).round();
    let spo2 = normal(&mut rng, 94.0 - 3.0 * shift, 3.0).clamp(70.0, 100.0);
    let sex = bernoulli(&mut rng, 0.6);
    let fever = bernoulli(&mut rng, 0.7);
    let cough = bernoulli(&mut rng, 0.5);
    let wbc = normal(&mut rng, 7.0, 2.5).max(0.5);
    let crp = normal(&mut rng, 1.5, 0.8).exp() / 2.0;
    let platelets = normal(&mut rng, 230.0, 60.0).max(20.0).round();
    let ddimer = normal(&mut rng, 6.5, 0.7).exp().round();
    let smoking = ["never", "former", "current"][match rng.random::<f64>() {
        p if p < 0.5 => 0,
        p if p < 0.8 => 1,
        _ => 2,
    }];
    let therapy = bernoulli(&mut rng, if label == 1 { 0.85 } else { 0.2 });

    let mut features = vec![
        format!("{age}"),
        format!("{ldh}"),
        format!("{spo2:.1}"),
        sex.to_string(),
        fever.to_string(),
        cough.to_string(),
        format!("{wbc:.2}"),
        format!("{crp:.2}"),
        format!("{platelets}"),
        format!("{ddimer}"),
        smoking.to_string(),
    ];
    for cell in features.iter_mut() {
        if rng.random::<f64>() < spec.missing_rate {
            *cell = "NaN".into();
        }
    }
    let mut row = vec![
        id.to_string(),
        centre.to_string(),
        if label == 1 { "severe" } else { "mild" }.to_string(),
    ];
    row.extend(features);
    row.push(therapy.to_string());
    row
}

fn header() -> Vec<&'static str> {
    SCHEMA
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split('|').next().expect("name"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub manifest: DatasetManifest,
    pub labels: Vec<u8>,
    pub latent: Vec<f64>,
}

/// Writes `manifest.csv`, `clinical.csv`, `schema.txt`, `config.txt`,
/// `truth.csv`, and `images/` plus `masks/` under `out_dir`.
pub fn cmd_synthesize(spec: &SynthSpec, out_dir: &Path) -> CliResult<SynthOutcome> {
    spec.validate()?;
    let n = spec.n_patients;
    let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| Error::io(p, e));
    let (img_dir, mask_dir) = (out_dir.join("images"), out_dir.join("masks"));
    mkdir(&img_dir)?;
    mkdir(&mask_dir)?;

    // exact class balance and round-robin centres over a shuffled order
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(spec.seed, &[0x4c]));
    let mut labels = vec![0u8; n];
    let mut centres = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = u8::from(rank % 2 == 1);
        centres[i] = (rank / 2) % spec.n_centres;
    }
    let latent: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = seeded(spec.seed, &[0x1b, i as u64]);
            spec.texture_signal * (labels[i] as f64 - 0.5) + standard_normal(&mut rng)
        })
        .collect();

    let ids: Vec<String> = (0..n).map(|i| format!("P{:04}", i + 1)).collect();
    let centre_name = |c: usize| format!("C{}", c + 1);
    (0..n).into_par_iter().try_for_each(|i| -> Result<()> {
        let (img, mask) = render_patient(spec, i, latent[i], centres[i])?;
        let path = img_dir.join(format!("{}.pgm", ids[i]));
        save_image_pgm16(&path, &img)?;
        let sidecar = Sidecar {
            width: Some(img.width()),
            height: Some(img.height()),
            bit_depth: Some(BIT_DEPTH),
            pixel_spacing_mm: Some(img.pixel_spacing()),
        };
        let sp = sidecar_path(&path);
        fs::write(&sp, sidecar.render()).map_err(|e| Error::io(&sp, e))?;
        save_mask(&mask_dir.join(format!("{}.pgm", ids[i])), &mask)
    })?;

    let clinical = out_dir.join("clinical.csv");
    let mut w = csv::Writer::from_path(&clinical)?;
    w.write_record(header())?;
    for i in 0..n {
        // clinical keys differ from image ids, as in a blinded repository
        let key = format!("K{:04}", i + 1);
        w.write_record(clinical_row(spec, i, &key, &centre_name(centres[i]), labels[i]))?;
    }
    w.flush().map_err(|e| Error::io(&clinical, e))?;

    let truth = out_dir.join("truth.csv");
    let mut w = csv::Writer::from_path(&truth)?;
    w.write_record(["id", "label", "latent"])?;
    for i in 0..n {
        w.write_record([ids[i].clone(), labels[i].to_string(), format!("{:.6}", latent[i])])?;
    }
    w.flush().map_err(|e| Error::io(&truth, e))?;

    let write = |name: &str, text: String| {
        let p = out_dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("schema.txt", SCHEMA.to_string())?;
    write(
        "config.txt",
        format!(
            "# synthetic cohort defaults: small images, so a smaller window and no resampling\n\
             pipeline = clinical_only, images_only, fused\n\
             learners = lgr, svm, rf\n\
             cv = 10x20, loco\n\
             d_pr = 10\n\
             window = 11\n\
             resize = none\n\
             seed = {}\n\
             schema = schema.txt\n",
            spec.seed
        ),
    )?;

    let manifest = DatasetManifest::new(
        (0..n)
            .map(|i| ManifestEntry {
                id: ids[i].clone(),
                image: img_dir.join(format!("{}.pgm", ids[i])),
                mask: Some(mask_dir.join(format!("{}.pgm", ids[i]))),
                centre: centre_name(centres[i]),
                clinical_key: format!("K{:04}", i + 1),
            })
            .collect(),
    )?;
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(SynthOutcome {
        manifest,
        labels,
        latent,
    })
}
