use lungtex_core::imaging::{GrayImage, RoiMask};
use lungtex_core::rng::seeded;
use lungtex_core::texture::{
    compute_glcm, first_order_features, parametric_maps, second_order_features, window_histogram,
    FeatureSelection, GlcmAngle, GlcmParams, LevelRaster, MapConfig, PreparedImage, SlidingWindow,
    FIRST_ORDER_NAMES, SECOND_ORDER_NAMES,
};
use lungtex_oracles::rel_err;
use lungtex_oracles::texture as oracle;
use rand::Rng;

fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = seeded(seed, &[0]);
    let data = (0..w * h).map(|_| rng.random_range(-2.0..2.0)).collect();
    GrayImage::new(w, h, data, 1.0).unwrap()
}

#[test]
fn random_windows_match_direct_sums() {
    let mut rng = seeded(11, &[1]);
    for case in 0..40 {
        let spread = [0.3, 1.0, 3.0][case % 3];
        let values: Vec<f64> = (0..441).map(|_| rng.random_range(-spread..spread)).collect();
        let hist = window_histogram(&values, 0.1).unwrap();
        let fo = first_order_features(&values, &hist, 0.7).unwrap();
        let want = oracle::first_order(&values, 0.1, 0.7);
        for name in FIRST_ORDER_NAMES {
            let e = rel_err(fo.get(name).unwrap(), want[name]);
            assert!(e <= 1e-9, "case {case} {name}: {} vs {}", fo.get(name).unwrap(), want[name]);
        }

        let bins: Vec<i64> = values.iter().map(|v| (v / 0.1).floor() as i64).collect();
        let lo = *bins.iter().min().unwrap();
        let n = (*bins.iter().max().unwrap() - lo + 1) as usize;
        let levels: Vec<u32> = bins.iter().map(|b| (b - lo + 1) as u32).collect();
        let angle = [GlcmAngle::Deg0, GlcmAngle::Deg45, GlcmAngle::Deg90, GlcmAngle::Deg135][case % 4];
        let params = GlcmParams {
            angle,
            ..GlcmParams::new(n)
        };
        let g = compute_glcm(&LevelRaster::from_levels(21, 21, &levels).unwrap(), &params).unwrap();
        let so = second_order_features(&g);
        let raster: Vec<Option<u32>> = levels.iter().map(|&l| Some(l)).collect();
        let p = oracle::cooccurrence(21, 21, &raster, n, angle.offset(1), true);
        let want = oracle::second_order(&p);
        for name in SECOND_ORDER_NAMES {
            let (got, exp) = (so.get(name).unwrap(), want[name]);
            let tol = 1e-9;
            assert!(rel_err(got, exp) <= tol, "case {case} {name}: {got} vs {exp}");
        }
    }
}

#[test]
fn incremental_maps_equal_naive_recomputation() {
    let (w, h) = (40, 36);
    let img = random_image(w, h, 5);
    let mask = RoiMask::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - 18.0, y as f64 - 17.0);
        dx * dx / 300.0 + dy * dy / 200.0 < 1.0 && !(x % 7 == 3 && y % 5 == 1)
    });
    let cfg = MapConfig {
        window: 7,
        ..MapConfig::default()
    };
    let maps = parametric_maps(&img, &mask, &cfg, &FeatureSelection::All { extended: true }).unwrap();
    let prepared = PreparedImage::new(&img, &mask, cfg).unwrap();
    for y in 0..h {
        let mut win = SlidingWindow::new(&prepared, y);
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            win.advance_to(x);
            let snap = win.snapshot().unwrap();
            let naive = oracle::naive_window(img.data(), mask.bits(), w, h, x, y, 7, 0.1);
            assert_eq!(snap.values.len(), naive.values.len());

            let lr = LevelRaster {
                width: naive.width,
                height: naive.height,
                levels: naive.levels.clone(),
            };
            let direct = compute_glcm(&lr, &GlcmParams::new(naive.n_levels));
            match (&snap.glcm, direct) {
                (Some(g), Ok(d)) => assert_eq!(g.counts(), d.counts(), "pair counts at ({x},{y})"),
                (None, Err(_)) => {}
                (a, b) => panic!("pair presence differs at ({x},{y}): {} vs {}", a.is_some(), b.is_ok()),
            }

            let fo = oracle::first_order(&naive.values, 0.1, 1.0);
            let p = oracle::cooccurrence(naive.width, naive.height, &naive.levels, naive.n_levels, (1, 0), true);
            let has_pairs = !p.iter().flatten().any(|v| v.is_nan());
            let so = if has_pairs { oracle::second_order(&p) } else { Default::default() };
            for (k, name) in maps.names().iter().enumerate() {
                let got = maps.value(k, x, y);
                let want = match fo.get(name.as_str()) {
                    Some(v) => *v,
                    None if has_pairs => so[name.as_str()],
                    None => continue,
                };
                let tol = 1e-9;
                assert!(rel_err(got, want) <= tol, "{name} at ({x},{y}): {got} vs {want}");
            }
        }
    }
}

#[test]
fn outside_roi_is_zero_and_maps_are_deterministic() {
    let img = random_image(24, 20, 9);
    let mask = RoiMask::from_fn(24, 20, |x, _| x >= 4 && x < 18);
    let cfg = MapConfig {
        window: 5,
        ..MapConfig::default()
    };
    let a = parametric_maps(&img, &mask, &cfg, &FeatureSelection::All { extended: false }).unwrap();
    let b = parametric_maps(&img, &mask, &cfg, &FeatureSelection::All { extended: false }).unwrap();
    assert_eq!(a, b);
    for k in 0..a.n_features() {
        for y in 0..20 {
            assert_eq!(a.value(k, 0, y), 0.0);
            assert_eq!(a.value(k, 23, y), 0.0);
        }
    }
}

#[test]
fn two_textures_separate() {
    // left half smooth, right half a fine checkerboard
    let (w, h) = (48, 24);
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if x < w / 2 {
                0.5 + 0.01 * (x as f64 / w as f64)
            } else if (x + y) % 2 == 0 {
                1.5
            } else {
                -0.5
            }
        })
        .collect();
    let img = GrayImage::new(w, h, data, 1.0).unwrap();
    let cfg = MapConfig {
        window: 5,
        ..MapConfig::default()
    };
    let sel = FeatureSelection::Named(vec!["contrast".into(), "variance".into()]);
    let maps = parametric_maps(&img, &RoiMask::full(w, h), &cfg, &sel).unwrap();
    let smooth = maps.value(0, 6, 12);
    let rough = maps.value(0, 40, 12);
    assert!(rough > 100.0 * smooth.max(1e-6), "contrast {smooth} vs {rough}");
    assert!(maps.value(1, 40, 12) > maps.value(1, 6, 12));
}
