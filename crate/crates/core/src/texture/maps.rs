//! Pixel-wise parametric maps.
//!
//! Every ROI pixel is the centre of a square window; the window's in-ROI,
//! in-bounds pixels are reduced to the first-order and co-occurrence
//! features, and each feature is written to its own map. Along a row the
//! window slides one column at a time and only the leaving and entering
//! columns touch the histogram and pair counts. Rows are independent and
//! run in parallel.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::first_order::{first_order_features, EXTENDED_FIRST_ORDER_NAMES, FIRST_ORDER_NAMES};
use super::glcm::{symmetrize, GlcmAngle, GlcmState};
use super::histogram::{grid_bin, WindowHistogram, DEFAULT_BIN_WIDTH};
use super::second_order::{second_order_features, SECOND_ORDER_NAMES};
use crate::imaging::{GrayImage, RoiMask};
use crate::{Error, Result};

/// Upper bound on gray levels inside one window; beyond it the dense
/// co-occurrence matrix stops being practical.
pub const MAX_WINDOW_LEVELS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub window: usize,
    pub bin_width: f64,
    pub delta: usize,
    pub angle: GlcmAngle,
    pub symmetric: bool,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            window: 21,
            bin_width: DEFAULT_BIN_WIDTH,
            delta: 1,
            angle: GlcmAngle::Deg0,
            symmetric: true,
        }
    }
}

impl MapConfig {
    fn validate(&self) -> Result<()> {
        if self.window % 2 == 0 {
            return Err(Error::EvenWindow(self.window));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::invalid("bin width must be > 0"));
        }
        if self.delta == 0 {
            return Err(Error::invalid("GLCM distance must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSelection {
    /// The 16 first-order and 22 co-occurrence maps, plus P10/P90 if extended.
    All { extended: bool },
    Named(Vec<String>),
}

/// Map names in emission order.
pub fn feature_names(extended: bool) -> Vec<&'static str> {
    let mut names: Vec<&'static str> = FIRST_ORDER_NAMES.to_vec();
    if extended {
        names.extend(EXTENDED_FIRST_ORDER_NAMES);
    }
    names.extend(SECOND_ORDER_NAMES);
    names
}

#[derive(Debug, Clone, Copy)]
enum Source {
    First(usize),
    Extended(usize),
    Second(usize),
}

fn resolve(selection: &FeatureSelection) -> Result<(Vec<String>, Vec<Source>)> {
    let names: Vec<String> = match selection {
        FeatureSelection::All { extended } => {
            feature_names(*extended).into_iter().map(String::from).collect()
        }
        FeatureSelection::Named(list) => list.clone(),
    };
    if names.is_empty() {
        return Err(Error::invalid("no features selected"));
    }
    let mut sources = Vec::with_capacity(names.len());
    for name in &names {
        let src = if let Some(i) = FIRST_ORDER_NAMES.iter().position(|n| n == name) {
            Source::First(i)
        } else if let Some(i) = EXTENDED_FIRST_ORDER_NAMES.iter().position(|n| n == name) {
            Source::Extended(i)
        } else if let Some(i) = SECOND_ORDER_NAMES.iter().position(|n| n == name) {
            Source::Second(i)
        } else {
            return Err(Error::invalid(format!("unknown map feature '{name}'")));
        };
        sources.push(src);
    }
    Ok((names, sources))
}

/// Image, mask and per-pixel grid bins shared by every window.
pub struct PreparedImage<'a> {
    width: usize,
    height: usize,
    values: &'a [f64],
    mask: &'a [bool],
    bins: Vec<i64>,
    base_bin: i64,
    pixel_spacing: f64,
    config: MapConfig,
}

impl<'a> PreparedImage<'a> {
    pub fn new(img: &'a GrayImage, mask: &'a RoiMask, config: MapConfig) -> Result<Self> {
        config.validate()?;
        mask.check_matches(img)?;
        let bins: Vec<i64> = img.data().iter().map(|&v| grid_bin(v, config.bin_width)).collect();
        let base_bin = bins
            .iter()
            .zip(mask.bits())
            .filter(|(_, &m)| m)
            .map(|(&b, _)| b)
            .min()
            .ok_or(Error::EmptyMask)?;
        Ok(Self {
            width: img.width(),
            height: img.height(),
            values: img.data(),
            mask: mask.bits(),
            bins,
            base_bin,
            pixel_spacing: img.pixel_spacing(),
            config,
        })
    }

    #[inline]
    fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// Contents of one window: raw values in raster order, histogram, and the
/// co-occurrence state when at least one pair exists.
#[derive(Debug, Clone)]
pub struct WindowSnapshot {
    pub values: Vec<f64>,
    pub histogram: WindowHistogram,
    pub glcm: Option<GlcmState>,
}

/// Incremental window state for one row of centres.
pub struct SlidingWindow<'p, 'a> {
    img: &'p PreparedImage<'a>,
    cy: usize,
    rows: (usize, usize),
    cols: Option<(usize, usize)>,
    centre: Option<usize>,
    hist: BTreeMap<i64, u32>,
    pairs: HashMap<u64, u32>,
    offset: (isize, isize),
}

impl<'p, 'a> SlidingWindow<'p, 'a> {
    pub fn new(img: &'p PreparedImage<'a>, cy: usize) -> Self {
        let r = img.config.window / 2;
        let rows = (cy.saturating_sub(r), (cy + r).min(img.height - 1));
        Self {
            img,
            cy,
            rows,
            cols: None,
            centre: None,
            hist: BTreeMap::new(),
            pairs: HashMap::new(),
            offset: img.config.angle.offset(img.config.delta),
        }
    }

    pub fn centre(&self) -> Option<(usize, usize)> {
        self.centre.map(|cx| (cx, self.cy))
    }

    #[inline]
    fn inside(&self, x: isize, y: isize, cols: (usize, usize)) -> bool {
        x >= cols.0 as isize
            && x <= cols.1 as isize
            && y >= self.rows.0 as isize
            && y <= self.rows.1 as isize
            && self.img.mask[self.img.idx(x as usize, y as usize)]
    }

    #[inline]
    fn pair_key(&self, a: usize, b: usize) -> u64 {
        let ga = (self.img.bins[a] - self.img.base_bin) as u64;
        let gb = (self.img.bins[b] - self.img.base_bin) as u64;
        (ga << 32) | gb
    }

    /// Applies `sign` to column `c` and every pair touching it, given the
    /// window column range `cols` that contains `c`.
    fn touch_column(&mut self, c: usize, cols: (usize, usize), add: bool) {
        let (dx, dy) = self.offset;
        for y in self.rows.0..=self.rows.1 {
            let (xi, yi) = (c as isize, y as isize);
            if !self.inside(xi, yi, cols) {
                continue;
            }
            let here = self.img.idx(c, y);
            let bin = self.img.bins[here];
            bump(&mut self.hist, bin, add);
            if self.inside(xi + dx, yi + dy, cols) {
                let there = self.img.idx((xi + dx) as usize, (yi + dy) as usize);
                let key = self.pair_key(here, there);
                bump(&mut self.pairs, key, add);
            }
            // partner before us in the offset direction, unless it lies in
            // this same column and was handled as its own forward pair
            if dx != 0 && self.inside(xi - dx, yi - dy, cols) {
                let there = self.img.idx((xi - dx) as usize, (yi - dy) as usize);
                let key = self.pair_key(there, here);
                bump(&mut self.pairs, key, add);
            }
        }
    }

    /// Moves the window centre to `cx`. The first call builds the window
    /// from scratch; later calls must move right by exactly one column.
    pub fn advance_to(&mut self, cx: usize) {
        let r = self.img.config.window / 2;
        let w = self.img.width;
        let new_cols = (cx.saturating_sub(r), (cx + r).min(w - 1));
        match (self.centre, self.cols) {
            (Some(prev), Some(old)) if cx == prev + 1 => {
                if new_cols.0 > old.0 {
                    self.touch_column(old.0, old, false);
                }
                let mid = (new_cols.0, old.1);
                if new_cols.1 > old.1 {
                    self.touch_column(new_cols.1, (mid.0, new_cols.1), true);
                }
            }
            _ => {
                self.hist.clear();
                self.pairs.clear();
                for c in new_cols.0..=new_cols.1 {
                    self.touch_column(c, (new_cols.0, c), true);
                }
            }
        }
        self.cols = Some(new_cols);
        self.centre = Some(cx);
    }

    pub fn n_pixels(&self) -> u64 {
        self.hist.values().map(|&c| c as u64).sum()
    }

    pub fn snapshot(&self) -> Result<WindowSnapshot> {
        let cols = self.cols.ok_or_else(|| Error::invalid("window not positioned"))?;
        let (&first, _) = self.hist.iter().next().ok_or(Error::EmptyInput)?;
        let (&last, _) = self.hist.iter().next_back().expect("non-empty");
        let n_levels = (last - first + 1) as usize;
        if n_levels > MAX_WINDOW_LEVELS {
            return Err(Error::invalid(format!(
                "window spans {n_levels} gray levels (limit {MAX_WINDOW_LEVELS}); standardize the image first"
            )));
        }
        let mut counts = vec![0u64; n_levels];
        for (&b, &c) in &self.hist {
            counts[(b - first) as usize] = c as u64;
        }
        let histogram =
            WindowHistogram::from_grid_counts(first, self.img.config.bin_width, counts)?;

        let mut values = Vec::with_capacity(histogram.n_pixels() as usize);
        for y in self.rows.0..=self.rows.1 {
            for x in cols.0..=cols.1 {
                let i = self.img.idx(x, y);
                if self.img.mask[i] {
                    values.push(self.img.values[i]);
                }
            }
        }

        let glcm = if self.pairs.is_empty() {
            None
        } else {
            let shift = first - self.img.base_bin;
            let mut m = vec![0u64; n_levels * n_levels];
            for (&key, &c) in &self.pairs {
                let a = ((key >> 32) as i64 - shift) as usize;
                let b = ((key & 0xFFFF_FFFF) as i64 - shift) as usize;
                m[a * n_levels + b] = c as u64;
            }
            if self.img.config.symmetric {
                symmetrize(&mut m, n_levels);
            }
            Some(GlcmState::from_counts(m, n_levels)?)
        };
        Ok(WindowSnapshot {
            values,
            histogram,
            glcm,
        })
    }
}

fn bump<K: Ord + std::hash::Hash + Copy, M: CountMap<K>>(map: &mut M, key: K, add: bool) {
    if add {
        map.inc(key);
    } else {
        map.dec(key);
    }
}

trait CountMap<K> {
    fn inc(&mut self, key: K);
    fn dec(&mut self, key: K);
}

impl CountMap<i64> for BTreeMap<i64, u32> {
    fn inc(&mut self, key: i64) {
        *self.entry(key).or_insert(0) += 1;
    }
    fn dec(&mut self, key: i64) {
        let c = self.get_mut(&key).expect("removing absent bin");
        *c -= 1;
        if *c == 0 {
            self.remove(&key);
        }
    }
}

impl CountMap<u64> for HashMap<u64, u32> {
    fn inc(&mut self, key: u64) {
        *self.entry(key).or_insert(0) += 1;
    }
    fn dec(&mut self, key: u64) {
        let c = self.get_mut(&key).expect("removing absent pair");
        *c -= 1;
        if *c == 0 {
            self.remove(&key);
        }
    }
}

/// Feature values of one window in `sources` order, plus a validity flag
/// (at least two pixels, at least one pair, nonzero variance).
fn window_features(
    snap: &WindowSnapshot,
    sources: &[Source],
    pixel_spacing: f64,
    out: &mut [f64],
) -> Result<bool> {
    let needs_first = sources
        .iter()
        .any(|s| matches!(s, Source::First(_) | Source::Extended(_)));
    let needs_second = sources.iter().any(|s| matches!(s, Source::Second(_)));
    let first = first_order_features(&snap.values, &snap.histogram, pixel_spacing)?;
    let first_vals = if needs_first { first.values() } else { [0.0; 16] };
    let ext_vals = first.extended_values();
    let second_vals = match (&snap.glcm, needs_second) {
        (Some(g), true) => second_order_features(g).values(),
        _ => [0.0; 22],
    };
    for (slot, src) in out.iter_mut().zip(sources) {
        *slot = match *src {
            Source::First(i) => first_vals[i],
            Source::Extended(i) => ext_vals[i],
            Source::Second(i) => second_vals[i],
        };
    }
    Ok(snap.values.len() >= 2 && snap.glcm.is_some() && first.variance > 0.0)
}

/// Feature maps stored pixel-major: the `F` feature values of pixel
/// `(x, y)` sit at `(y * width + x) * F ..`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricMapSet {
    width: usize,
    height: usize,
    names: Vec<String>,
    data: Vec<f64>,
    roi: Vec<bool>,
    valid: Vec<bool>,
}

impl ParametricMapSet {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// ROI pixels for which a value was written.
    pub fn roi(&self) -> &[bool] {
        &self.roi
    }

    pub fn value(&self, feature: usize, x: usize, y: usize) -> f64 {
        self.data[(y * self.width + x) * self.names.len() + feature]
    }

    /// One map as a row-major raster; pixels outside the ROI hold 0.
    pub fn map(&self, feature: usize) -> Vec<f64> {
        let f = self.names.len();
        self.data.iter().skip(feature).step_by(f).copied().collect()
    }

    pub fn map_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.names.iter().position(|n| n == name).map(|i| self.map(i))
    }

    /// Values of one map over ROI pixels, raster order.
    pub fn roi_values(&self, feature: usize) -> Vec<f64> {
        let f = self.names.len();
        self.roi
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.data[i * f + feature])
            .collect()
    }

    /// Writes one little-endian `f32` raster per map plus `manifest.json`.
    pub fn save(&self, dir: &Path) -> Result<MapManifest> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.names.len());
        for (i, name) in self.names.iter().enumerate() {
            let file = format!("{name}.f32");
            let path = dir.join(&file);
            let mut bytes = Vec::with_capacity(self.width * self.height * 4);
            for v in self.map(i) {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            entries.push(MapEntry {
                name: name.clone(),
                file,
            });
        }
        let valid_file = "valid.u8".to_string();
        let valid_path = dir.join(&valid_file);
        let vbytes: Vec<u8> = self
            .roi
            .iter()
            .zip(&self.valid)
            .map(|(&r, &v)| r as u8 | ((v as u8) << 1))
            .collect();
        fs::write(&valid_path, vbytes).map_err(|e| Error::io(&valid_path, e))?;
        let manifest = MapManifest {
            width: self.width,
            height: self.height,
            valid_pixels: self.valid_count(),
            valid_file,
            maps: entries,
        };
        let path = dir.join("manifest.json");
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }

    /// Reads maps written by [`save`](Self::save); values come back rounded
    /// to `f32`.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: MapManifest = serde_json::from_str(&text)?;
        let n = manifest.width * manifest.height;
        let f = manifest.maps.len();
        let mut data = vec![0.0; n * f];
        for (k, entry) in manifest.maps.iter().enumerate() {
            let p = dir.join(&entry.file);
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            if bytes.len() != n * 4 {
                return Err(Error::format("map raster", format!("{} has wrong size", entry.file)));
            }
            for (i, c) in bytes.chunks_exact(4).enumerate() {
                data[i * f + k] = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
            }
        }
        let vp = dir.join(&manifest.valid_file);
        let vbytes = fs::read(&vp).map_err(|e| Error::io(&vp, e))?;
        if vbytes.len() != n {
            return Err(Error::format("map raster", "valid mask has wrong size"));
        }
        Ok(Self {
            width: manifest.width,
            height: manifest.height,
            names: manifest.maps.into_iter().map(|e| e.name).collect(),
            data,
            roi: vbytes.iter().map(|b| b & 1 != 0).collect(),
            valid: vbytes.iter().map(|b| b & 2 != 0).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEntry {
    pub name: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapManifest {
    pub width: usize,
    pub height: usize,
    pub valid_pixels: usize,
    pub valid_file: String,
    pub maps: Vec<MapEntry>,
}

/// Computes the selected feature maps for every ROI pixel of `img`.
pub fn parametric_maps(
    img: &GrayImage,
    mask: &RoiMask,
    config: &MapConfig,
    selection: &FeatureSelection,
) -> Result<ParametricMapSet> {
    let (names, sources) = resolve(selection)?;
    let prepared = PreparedImage::new(img, mask, *config)?;
    let (w, h) = img.dims();
    let f = names.len();
    let mut data = vec![0.0; w * h * f];
    let mut valid = vec![false; w * h];

    data.par_chunks_mut(w * f)
        .zip(valid.par_chunks_mut(w))
        .enumerate()
        .try_for_each(|(y, (row, row_valid))| -> Result<()> {
            let row_mask = &prepared.mask[y * w..(y + 1) * w];
            let (Some(first), Some(last)) = (
                row_mask.iter().position(|&m| m),
                row_mask.iter().rposition(|&m| m),
            ) else {
                return Ok(());
            };
            let mut win = SlidingWindow::new(&prepared, y);
            for x in first..=last {
                win.advance_to(x);
                if !row_mask[x] {
                    continue;
                }
                let snap = win.snapshot()?;
                row_valid[x] =
                    window_features(&snap, &sources, prepared.pixel_spacing, &mut row[x * f..(x + 1) * f])?;
            }
            Ok(())
        })?;

    Ok(ParametricMapSet {
        width: w,
        height: h,
        names,
        data,
        roi: mask.bits().to_vec(),
        valid,
    })
}
