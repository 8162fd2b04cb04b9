use super::types::{GrayImage, Rect, RoiMask};
use crate::{Error, Result};

/// Z-scores the whole image with the population standard deviation.
pub fn standardize(img: &GrayImage) -> Result<GrayImage> {
    let n = img.data().len() as f64;
    let mean = img.data().iter().sum::<f64>() / n;
    let var = img.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > 0.0) || img.data().iter().all(|&v| v == img.data()[0]) {
        return Err(Error::ZeroVariance);
    }
    let data = img.data().iter().map(|v| (v - mean) / std).collect();
    img.replace_data(img.width(), img.height(), data)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // a + t(b - a) keeps constant inputs exact; clamp absorbs rounding.
    let v = a + t * (b - a);
    v.clamp(a.min(b), a.max(b))
}

/// Pixel-centre source coordinate, clamped to the valid sample range.
#[inline]
fn source_coord(i: usize, scale: f64, len: usize) -> (usize, usize, f64) {
    let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, s - i0 as f64)
}

/// Bilinear resampling with pixel-centre alignment and edge clamping. The
/// pixel spacing is rescaled so the image covers the same physical area.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("output dimensions must be >= 1"));
    }
    if (out_w, out_h) == img.dims() {
        return Ok(img.clone());
    }
    let (w, h) = img.dims();
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let cols: Vec<_> = (0..out_w).map(|i| source_coord(i, sx, w)).collect();
    let mut data = Vec::with_capacity(out_w * out_h);
    for j in 0..out_h {
        let (y0, y1, ty) = source_coord(j, sy, h);
        for &(x0, x1, tx) in &cols {
            let top = lerp(img.get(x0, y0), img.get(x1, y0), tx);
            let bottom = lerp(img.get(x0, y1), img.get(x1, y1), tx);
            data.push(lerp(top, bottom, ty));
        }
    }
    // keep the physical extent: the pixel area scales by (w·h)/(out_w·out_h)
    let spacing = img.pixel_spacing() * (sx * sy).sqrt();
    GrayImage::with_bit_depth(out_w, out_h, data, spacing, img.bit_depth_origin())
}

/// Nearest-neighbour mask resampling on the same pixel-centre grid.
pub fn resize_mask_nearest(mask: &RoiMask, out_w: usize, out_h: usize) -> Result<RoiMask> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("output dimensions must be >= 1"));
    }
    let (w, h) = mask.dims();
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let pick = |i: usize, scale: f64, len: usize| {
        (((i as f64 + 0.5) * scale).floor() as usize).min(len - 1)
    };
    Ok(RoiMask::from_fn(out_w, out_h, |x, y| {
        mask.get(pick(x, sx, w), pick(y, sy, h))
    }))
}

pub fn bounding_box(mask: &RoiMask) -> Result<Rect> {
    let mut rect: Option<Rect> = None;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if !mask.get(x, y) {
                continue;
            }
            rect = Some(match rect {
                None => Rect::new(x, y, x, y),
                Some(r) => Rect::new(r.x0.min(x), r.y0.min(y), r.x1.max(x), r.y1.max(y)),
            });
        }
    }
    rect.ok_or(Error::EmptyMask)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub dice: f64,
    pub jaccard: f64,
}

pub fn overlap_scores(a: &RoiMask, b: &RoiMask) -> Result<Overlap> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&p, &q) in a.bits().iter().zip(b.bits()) {
        na += p as usize;
        nb += q as usize;
        inter += (p && q) as usize;
    }
    if na + nb == 0 {
        return Err(Error::UndefinedOverlap);
    }
    let union = na + nb - inter;
    Ok(Overlap {
        dice: 2.0 * inter as f64 / (na + nb) as f64,
        jaccard: inter as f64 / union as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, data: &[f64]) -> GrayImage {
        GrayImage::new(w, h, data.to_vec(), 1.0).unwrap()
    }

    fn mean_std(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
    }

    #[test]
    fn standardize_small() {
        let out = standardize(&img(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        let (m, s) = mean_std(out.data());
        assert!(m.abs() < 1e-9 && (s - 1.0).abs() < 1e-9);
        let again = standardize(&out).unwrap();
        for (a, b) in again.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn standardize_constant_fails() {
        let err = standardize(&img(2, 2, &[5.0; 4])).unwrap_err();
        assert_eq!(err.to_string(), "zero variance");
    }

    #[test]
    fn resize_pixel_centres() {
        let out = resize_bilinear(&img(2, 1, &[0.0, 10.0]), 3, 1).unwrap();
        assert_eq!(out.data(), &[0.0, 5.0, 10.0]);
    }

    #[test]
    fn resize_constant_and_identity() {
        let c = img(3, 2, &[7.0; 6]);
        let out = resize_bilinear(&c, 11, 5).unwrap();
        assert!(out.data().iter().all(|&v| v == 7.0));
        let src = img(2, 2, &[0.1, 0.2, 0.3, 0.7]);
        let same = resize_bilinear(&src, 2, 2).unwrap();
        assert_eq!(
            same.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            src.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(resize_bilinear(&src, 0, 2).is_err());
    }

    #[test]
    fn bbox_examples() {
        let mut m = RoiMask::empty(8, 8);
        m.set(3, 5, true);
        assert_eq!(bounding_box(&m).unwrap(), Rect::new(3, 5, 3, 5));
        let mut m = RoiMask::empty(8, 8);
        m.set(1, 1, true);
        m.set(4, 2, true);
        assert_eq!(bounding_box(&m).unwrap(), Rect::new(1, 1, 4, 2));
        assert!(matches!(bounding_box(&RoiMask::empty(3, 3)), Err(Error::EmptyMask)));
    }

    #[test]
    fn overlap_examples() {
        let a = RoiMask::from_fn(4, 1, |x, _| x < 2);
        let o = overlap_scores(&a, &a).unwrap();
        assert_eq!((o.dice, o.jaccard), (1.0, 1.0));
        let b = RoiMask::from_fn(4, 1, |x, _| x >= 2);
        let o = overlap_scores(&a, &b).unwrap();
        assert_eq!((o.dice, o.jaccard), (0.0, 0.0));
        let c = RoiMask::from_fn(4, 1, |x, _| x == 1 || x == 2);
        let o = overlap_scores(&a, &c).unwrap();
        assert!((o.dice - 0.5).abs() < 1e-15);
        assert!((o.jaccard - 1.0 / 3.0).abs() < 1e-15);
        let e = RoiMask::empty(4, 1);
        assert!(matches!(overlap_scores(&e, &e), Err(Error::UndefinedOverlap)));
        assert!(overlap_scores(&a, &RoiMask::empty(2, 2)).is_err());
    }

    fn mask_strategy() -> impl Strategy<Value = (RoiMask, RoiMask)> {
        (1usize..8, 1usize..8).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(any::<bool>(), w * h),
                proptest::collection::vec(any::<bool>(), w * h),
            )
                .prop_map(move |(a, b)| {
                    (RoiMask::new(w, h, a).unwrap(), RoiMask::new(w, h, b).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn dice_jaccard_identity((a, b) in mask_strategy()) {
            if let Ok(o) = overlap_scores(&a, &b) {
                prop_assert!(o.dice >= o.jaccard);
                prop_assert!((o.dice - 2.0 * o.jaccard / (1.0 + o.jaccard)).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&o.dice));
            }
        }

        #[test]
        fn bbox_is_tight((a, _) in mask_strategy()) {
            if let Ok(r) = bounding_box(&a) {
                let inside = |x: usize, y: usize| r.contains(x, y);
                for y in 0..a.height() {
                    for x in 0..a.width() {
                        if a.get(x, y) { prop_assert!(inside(x, y)); }
                    }
                }
                // every side touches a foreground pixel
                prop_assert!((r.y0..=r.y1).any(|y| a.get(r.x0, y)));
                prop_assert!((r.y0..=r.y1).any(|y| a.get(r.x1, y)));
                prop_assert!((r.x0..=r.x1).any(|x| a.get(x, r.y0)));
                prop_assert!((r.x0..=r.x1).any(|x| a.get(x, r.y1)));
            }
        }

        #[test]
        fn resize_stays_in_bounds(
            data in proptest::collection::vec(-100.0f64..100.0, 12),
            ow in 1usize..9, oh in 1usize..9,
        ) {
            let src = img(4, 3, &data);
            let out = resize_bilinear(&src, ow, oh).unwrap();
            let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out.data().iter().all(|&v| v >= lo && v <= hi));
        }

        #[test]
        fn standardize_idempotent(data in proptest::collection::vec(-1e3f64..1e3, 2..40)) {
            let n = data.len();
            let src = img(n, 1, &data);
            if let Ok(once) = standardize(&src) {
                let twice = standardize(&once).unwrap();
                for (a, b) in once.data().iter().zip(twice.data()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
