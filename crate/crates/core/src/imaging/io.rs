//! Image and mask file formats.
//!
//! Three intensity formats are accepted: binary PGM (`P5`, 8 or 16 bit),
//! grayscale PNG (8 or 16 bit) and headerless little-endian raw data
//! described by a `key=value` sidecar. PGM and PNG files may also carry a
//! sidecar, in which case its pixel spacing is used and its dimensions are
//! checked against the file header.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use super::types::{GrayImage, RoiMask};
use crate::{Error, Result};

pub const DEFAULT_PIXEL_SPACING_MM: f64 = 1.0;
const ALLOWED_BIT_DEPTHS: [u8; 5] = [8, 10, 12, 14, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
    Raw,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("pgm") => Ok(ImageFormat::Pgm),
            Some("png") => Ok(ImageFormat::Png),
            Some("raw") => Ok(ImageFormat::Raw),
            other => Err(Error::invalid(format!(
                "unsupported image extension {other:?} for {}",
                path.display()
            ))),
        }
    }
}

/// Plain-text acquisition metadata stored next to an image.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub bit_depth: Option<u8>,
    pub pixel_spacing_mm: Option<f64>,
}

impl Sidecar {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Sidecar {
            width: None,
            height: None,
            bit_depth: None,
            pixel_spacing_mm: None,
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format("sidecar", format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| {
                Error::format("sidecar", format!("line {}: {key}: {e}", lineno + 1))
            };
            match key {
                "width" => out.width = Some(value.parse().map_err(|e| bad(&e))?),
                "height" => out.height = Some(value.parse().map_err(|e| bad(&e))?),
                "bit_depth" => out.bit_depth = Some(value.parse().map_err(|e| bad(&e))?),
                "pixel_spacing_mm" => {
                    out.pixel_spacing_mm = Some(value.parse().map_err(|e| bad(&e))?)
                }
                _ => log::debug!("ignoring unknown sidecar key '{key}'"),
            }
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(w) = self.width {
            s.push_str(&format!("width={w}\n"));
        }
        if let Some(h) = self.height {
            s.push_str(&format!("height={h}\n"));
        }
        if let Some(b) = self.bit_depth {
            s.push_str(&format!("bit_depth={b}\n"));
        }
        if let Some(p) = self.pixel_spacing_mm {
            s.push_str(&format!("pixel_spacing_mm={p}\n"));
        }
        s
    }
}

/// `scan.raw` → `scan.txt`; same rule for PGM and PNG files.
pub fn sidecar_path(image_path: &Path) -> PathBuf {
    image_path.with_extension("txt")
}

fn read_sidecar(image_path: &Path) -> Result<Option<Sidecar>> {
    let path = sidecar_path(image_path);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Sidecar::parse(&text).map(Some)
}

fn depth_for_maxval(maxval: u32) -> u8 {
    let bits = (32 - maxval.leading_zeros()) as u8;
    ALLOWED_BIT_DEPTHS
        .iter()
        .copied()
        .find(|&d| d >= bits)
        .unwrap_or(16)
}

fn check_bit_depth(depth: u8) -> Result<()> {
    if ALLOWED_BIT_DEPTHS.contains(&depth) {
        Ok(())
    } else {
        Err(Error::format(
            "image",
            format!("bit depth {depth} not in {ALLOWED_BIT_DEPTHS:?}"),
        ))
    }
}

struct Decoded {
    width: usize,
    height: usize,
    bit_depth: u8,
    samples: Vec<u16>,
}

fn parse_pgm(bytes: &[u8]) -> Result<Decoded> {
    let mut pos = 0usize;
    let mut tokens: Vec<u32> = Vec::with_capacity(3);
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format("pgm", "missing P5 magic"));
    }
    pos += 2;
    while tokens.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("pgm", "truncated header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        tokens.push(
            text.parse()
                .map_err(|e| Error::format("pgm", format!("header value {text}: {e}")))?,
        );
    }
    // exactly one whitespace byte separates the header from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format("pgm", "missing whitespace after maxval"));
    }
    pos += 1;
    let (width, height, maxval) = (tokens[0] as usize, tokens[1] as usize, tokens[2]);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::format(
            "pgm",
            format!("invalid header {width}x{height} maxval {maxval}"),
        ));
    }
    let n = width * height;
    let payload = &bytes[pos..];
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    if payload.len() < n * bytes_per {
        return Err(Error::format("pgm", "payload shorter than width×height"));
    }
    let samples: Vec<u16> = if bytes_per == 1 {
        payload[..n].iter().map(|&b| b as u16).collect()
    } else {
        payload[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(v) = samples.iter().find(|&&v| v as u32 > maxval) {
        return Err(Error::format("pgm", format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(Decoded {
        width,
        height,
        bit_depth: depth_for_maxval(maxval),
        samples,
    })
}

fn parse_png(path: &Path) -> Result<Decoded> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format("png", e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format("png", "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format("png", e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::format(
            "png",
            format!("expected grayscale, found {:?}", info.color_type),
        ));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let n = width * height;
    let samples: Vec<u16> = match info.bit_depth {
        png::BitDepth::Eight => buf[..n].iter().map(|&b| b as u16).collect(),
        png::BitDepth::Sixteen => buf[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
        other => {
            return Err(Error::format("png", format!("unsupported bit depth {other:?}")));
        }
    };
    let bit_depth = match info.bit_depth {
        png::BitDepth::Eight => 8,
        _ => 16,
    };
    Ok(Decoded {
        width,
        height,
        bit_depth,
        samples,
    })
}

fn parse_raw(bytes: &[u8], sidecar: &Sidecar) -> Result<Decoded> {
    let width = sidecar
        .width
        .ok_or_else(|| Error::format("sidecar", "missing width"))?;
    let height = sidecar
        .height
        .ok_or_else(|| Error::format("sidecar", "missing height"))?;
    let bit_depth = sidecar
        .bit_depth
        .ok_or_else(|| Error::format("sidecar", "missing bit_depth"))?;
    check_bit_depth(bit_depth)?;
    let n = width * height;
    let bytes_per = if bit_depth <= 8 { 1 } else { 2 };
    if bytes.len() < n * bytes_per {
        return Err(Error::format("raw", "payload shorter than width×height"));
    }
    if bytes.len() > n * bytes_per {
        return Err(Error::format("raw", "payload longer than width×height"));
    }
    let samples: Vec<u16> = if bytes_per == 1 {
        bytes.iter().map(|&b| b as u16).collect()
    } else {
        bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    };
    let limit = (1u32 << bit_depth) - 1;
    if let Some(v) = samples.iter().find(|&&v| v as u32 > limit) {
        return Err(Error::format(
            "raw",
            format!("sample {v} exceeds declared bit depth {bit_depth}"),
        ));
    }
    Ok(Decoded {
        width,
        height,
        bit_depth,
        samples,
    })
}

fn decode(path: &Path) -> Result<(Decoded, Option<Sidecar>)> {
    let format = ImageFormat::from_path(path)?;
    let sidecar = read_sidecar(path)?;
    let decoded = match format {
        ImageFormat::Pgm => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_pgm(&bytes)?
        }
        ImageFormat::Png => parse_png(path)?,
        ImageFormat::Raw => {
            let side = sidecar
                .as_ref()
                .ok_or_else(|| Error::format("raw", "raw image requires a sidecar"))?;
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_raw(&bytes, side)?
        }
    };
    if let Some(side) = &sidecar {
        let header = (decoded.width, decoded.height);
        let declared = (
            side.width.unwrap_or(decoded.width),
            side.height.unwrap_or(decoded.height),
        );
        if header != declared {
            return Err(Error::DimensionMismatch {
                expected: declared,
                found: header,
            });
        }
        if let Some(depth) = side.bit_depth {
            check_bit_depth(depth)?;
            let limit = (1u32 << depth) - 1;
            if decoded.samples.iter().any(|&v| v as u32 > limit) {
                return Err(Error::format(
                    "image",
                    format!("payload exceeds sidecar bit depth {depth}"),
                ));
            }
        }
    }
    Ok((decoded, sidecar))
}

/// Reads a radiograph, converting stored integers to `f64` one-to-one.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let (decoded, sidecar) = decode(path)?;
    let spacing = sidecar
        .as_ref()
        .and_then(|s| s.pixel_spacing_mm)
        .unwrap_or(DEFAULT_PIXEL_SPACING_MM);
    let bit_depth = sidecar
        .as_ref()
        .and_then(|s| s.bit_depth)
        .unwrap_or(decoded.bit_depth);
    let data = decoded.samples.iter().map(|&v| v as f64).collect();
    GrayImage::with_bit_depth(decoded.width, decoded.height, data, spacing, bit_depth)
}

/// Reads a mask; any nonzero sample is foreground.
pub fn load_mask(path: &Path) -> Result<RoiMask> {
    let (decoded, _) = decode(path)?;
    RoiMask::new(
        decoded.width,
        decoded.height,
        decoded.samples.iter().map(|&v| v != 0).collect(),
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Writes a 16-bit P5 file. Intensities are rounded and clamped to `0..=65535`.
pub fn save_image_pgm16(path: &Path, image: &GrayImage) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n65535\n", image.width(), image.height()).into_bytes();
    for &v in image.data() {
        let q = v.round().clamp(0.0, 65535.0) as u16;
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    write_file(path, &bytes)
}

/// Writes an 8-bit P5 mask with foreground stored as 255.
pub fn save_mask(path: &Path, mask: &RoiMask) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    bytes.extend(mask.bits().iter().map(|&b| if b { 255u8 } else { 0 }));
    write_file(path, &bytes)
}

/// Writes little-endian 16-bit samples plus the sidecar describing them.
pub fn save_raw_with_sidecar(path: &Path, image: &GrayImage, bit_depth: u8) -> Result<()> {
    check_bit_depth(bit_depth)?;
    let limit = ((1u32 << bit_depth) - 1) as f64;
    let mut bytes = Vec::with_capacity(image.data().len() * 2);
    for &v in image.data() {
        let q = v.round().clamp(0.0, limit) as u16;
        bytes.extend_from_slice(&q.to_le_bytes());
    }
    if bit_depth <= 8 {
        bytes = bytes.chunks_exact(2).map(|c| c[0]).collect();
    }
    write_file(path, &bytes)?;
    let side = Sidecar {
        width: Some(image.width()),
        height: Some(image.height()),
        bit_depth: Some(bit_depth),
        pixel_spacing_mm: Some(image.pixel_spacing()),
    };
    write_file(&sidecar_path(path), side.render().as_bytes())
}
