use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major grayscale raster with isotropic pixel spacing in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    pixel_spacing: f64,
    bit_depth_origin: u8,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>, pixel_spacing: f64) -> Result<Self> {
        Self::with_bit_depth(width, height, data, pixel_spacing, 0)
    }

    pub fn with_bit_depth(
        width: usize,
        height: usize,
        data: Vec<f64>,
        pixel_spacing: f64,
        bit_depth_origin: u8,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if !(pixel_spacing > 0.0 && pixel_spacing.is_finite()) {
            return Err(Error::invalid(format!("pixel spacing {pixel_spacing} must be > 0")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite intensity at index {pos}")));
        }
        Ok(Self {
            width,
            height,
            data,
            pixel_spacing,
            bit_depth_origin,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], 1.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel_spacing(&self) -> f64 {
        self.pixel_spacing
    }

    /// Pixel area in mm², used as the voxel volume of a 2-D radiograph.
    pub fn pixel_volume(&self) -> f64 {
        self.pixel_spacing * self.pixel_spacing
    }

    pub fn bit_depth_origin(&self) -> u8 {
        self.bit_depth_origin
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub(crate) fn replace_data(&self, width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_bit_depth(width, height, data, self.pixel_spacing, self.bit_depth_origin)
    }
}

/// Binary raster aligned with a [`GrayImage`]; `true` marks lung pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RoiMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid(format!(
                "mask length {} != {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn check_matches(&self, image: &GrayImage) -> Result<()> {
        if self.dims() != image.dims() {
            return Err(Error::DimensionMismatch {
                expected: image.dims(),
                found: self.dims(),
            });
        }
        Ok(())
    }
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        debug_assert!(x0 <= x1 && y0 <= y1);
        Self { x0, y0, x1, y1 }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }
}
