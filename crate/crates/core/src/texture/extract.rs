use serde::{Deserialize, Serialize};

use super::maps::{parametric_maps, FeatureSelection, MapConfig, ParametricMapSet};
use super::summary::{summarize_values, SUMMARY_NAMES};
use crate::imaging::{GrayImage, RoiMask};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub maps: MapConfig,
    /// Adds the P10 and P90 maps to the 38 tabulated ones.
    pub extended: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            maps: MapConfig::default(),
            extended: false,
        }
    }
}

/// Named image descriptors, `<map>__<statistic>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn column_names(extended: bool) -> Vec<String> {
        super::maps::feature_names(extended)
            .into_iter()
            .flat_map(|m| SUMMARY_NAMES.iter().map(move |s| format!("{m}__{s}")))
            .collect()
    }
}

/// Parametric maps of `img` over `mask`, each reduced to seven statistics.
pub fn extract_image_features(
    img: &GrayImage,
    mask: &RoiMask,
    config: &ExtractionConfig,
) -> Result<FeatureVector> {
    mask.check_matches(img)?;
    if mask.count() < 2 {
        return Err(Error::invalid("mask must cover at least 2 pixels"));
    }
    let maps = parametric_maps(
        img,
        mask,
        &config.maps,
        &FeatureSelection::All {
            extended: config.extended,
        },
    )?;
    summarize_maps(&maps)
}

/// Seven-statistic summary of every map in `maps`.
pub fn summarize_maps(maps: &ParametricMapSet) -> Result<FeatureVector> {
    let mut names = Vec::with_capacity(maps.n_features() * SUMMARY_NAMES.len());
    let mut values = Vec::with_capacity(names.capacity());
    for (k, map_name) in maps.names().iter().enumerate() {
        let summary = summarize_values(&maps.roi_values(k))?;
        for (stat, v) in SUMMARY_NAMES.iter().zip(summary.values()) {
            names.push(format!("{map_name}__{stat}"));
            values.push(v);
        }
    }
    Ok(FeatureVector { names, values })
}
