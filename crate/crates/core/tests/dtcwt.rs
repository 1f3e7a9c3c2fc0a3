use inpaint_forensics::dtcwt::{
    forward, inverse, level1_bands, split_bands, BandLayout, FilterBank, Part, ORIENTATIONS,
};
use inpaint_forensics::raster::GrayImage;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(w, h, |_, _| rng.random_range(0.0..255.0))
}

fn max_abs_diff(a: &GrayImage, b: &GrayImage) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn modulate(h: &[f64]) -> Vec<f64> {
    h.iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { *v } else { -v })
        .collect()
}

// Distortion term must be a scaled delta and the alias term must vanish.
fn assert_pr_pair(h0: &[f64], h1: &[f64], g0: &[f64], g1: &[f64], gain: f64) {
    let dist: Vec<f64> = convolve(h0, g0)
        .iter()
        .zip(convolve(h1, g1))
        .map(|(a, b)| a + b)
        .collect();
    let centre = dist.len() / 2;
    for (i, v) in dist.iter().enumerate() {
        let want = if i == centre { gain } else { 0.0 };
        assert!((v - want).abs() < 1e-10, "distortion[{i}] = {v}");
    }
    let alias: Vec<f64> = convolve(&modulate(h0), g0)
        .iter()
        .zip(convolve(&modulate(h1), g1))
        .map(|(a, b)| a + b)
        .collect();
    assert!(alias.iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn filter_pairs_reconstruct_a_delta() {
    let bank = FilterBank::kingsbury();
    assert_pr_pair(
        &bank.level1_analysis.low,
        &bank.level1_analysis.high,
        &bank.level1_synthesis.low,
        &bank.level1_synthesis.high,
        1.0,
    );
    let (a, s) = (&bank.qshift_analysis, &bank.qshift_synthesis);
    assert_pr_pair(&a.tree_a.low, &a.tree_a.high, &s.tree_a.low, &s.tree_a.high, 2.0);
    assert_pr_pair(&a.tree_b.low, &a.tree_b.high, &s.tree_b.low, &s.tree_b.high, 2.0);
}

#[test]
fn qshift_trees_are_time_reverses() {
    let bank = FilterBank::kingsbury();
    let a = &bank.qshift_analysis;
    let rev = |h: &[f64]| h.iter().rev().copied().collect::<Vec<_>>();
    assert_eq!(rev(&a.tree_a.low), a.tree_b.low);
    assert_eq!(rev(&a.tree_a.high), a.tree_b.high);
}

#[test]
fn matches_reference_coefficients() {
    // Reference values from an independent implementation of the same
    // filter bank on a 26x21 integer pattern.
    let img = GrayImage::from_fn(26, 21, |r, c| ((r * 31 + c * 17) % 23) as f64 - 11.0);
    let p = forward(&img, 2).unwrap();
    let cases: [(usize, usize, usize, [(f64, f64); 6]); 3] = [
        (
            1,
            3,
            5,
            [
                (-0.5295198994293767, -0.11091618426322691),
                (-0.5973363239295028, -0.6835043586664149),
                (0.07255838343373748, -0.5575306537662253),
                (-0.0725583834337374, -2.22894828898512),
                (0.6088226165961336, -10.396360741015926),
                (0.5338147740786386, -4.34479274636219),
            ],
        ),
        (
            1,
            10,
            0,
            [
                (2.807760521500959, 0.9097507619222376),
                (0.04231354099714313, 0.6100490302107656),
                (0.23240578200944084, 0.6375869543248773),
                (1.4794626581066237, 0.004622361683169929),
                (-0.7775449504294731, 0.4237920768351654),
                (1.8136123886551896, 2.966945426649816),
            ],
        ),
        (
            2,
            5,
            6,
            [
                (3.43795959837226, 0.5691961668566934),
                (1.065734281396999, 0.4438613796089499),
                (-7.518385305496086, -3.4355368166783355),
                (3.1701532807372708, 9.283361377377364),
                (0.228860961529528, -3.1103313574290183),
                (-2.4973490023206897, 3.807926835958458),
            ],
        ),
    ];
    for (level, r, c, want) in cases {
        for (k, (re, im)) in want.iter().enumerate() {
            let got = p.level(level)[k].get(r, c);
            assert!(
                (got.re - re).abs() < 1e-10 && (got.im - im).abs() < 1e-10,
                "level {level} band {k} at ({r},{c}): {got}"
            );
        }
    }
    assert_eq!(p.lowpass.dims(), (14, 12));
    assert!((p.lowpass.get(4, 7) - 0.2689532467270358).abs() < 1e-10);
}

#[test]
fn constant_image_has_empty_highpass() {
    let img = GrayImage::filled(32, 32, 117.0);
    let p = forward(&img, 1).unwrap();
    assert_eq!(p.level(1).len(), ORIENTATIONS);
    for band in p.level(1) {
        let peak = band.data().iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(peak < 1e-9, "peak {peak}");
    }
    let (lo, hi) = p.lowpass.min_max();
    assert!((hi - lo) < 1e-9 && (lo - 117.0).abs() < 1e-9);
}

#[test]
fn three_level_shapes() {
    let p = forward(&random_image(64, 64, 1), 3).unwrap();
    assert_eq!(p.num_levels(), 3);
    for (level, side) in [(1, 32), (2, 16), (3, 8)] {
        for band in p.level(level) {
            assert_eq!(band.dims(), (side, side));
        }
    }
}

#[test]
fn impulse_energy_stays_near_its_source() {
    let mut img = GrayImage::zeros(32, 32);
    img.set(16, 16, 1.0);
    let p = forward(&img, 1).unwrap();
    let radius = 5isize;
    for (k, band) in p.level(1).iter().enumerate() {
        let total = band.energy();
        assert!(total > 0.0);
        let mut near = 0.0;
        for r in 0..band.height() {
            for c in 0..band.width() {
                if (r as isize - 8).abs() <= radius && (c as isize - 8).abs() <= radius {
                    near += band.get(r, c).norm_sqr();
                }
            }
        }
        assert!(near / total >= 0.95, "band {k}: {}", near / total);
    }
}

#[test]
fn zeroed_pyramid_inverts_to_zero() {
    let p = forward(&random_image(40, 36, 2), 2).unwrap().zeroed();
    let back = inverse(&p).unwrap();
    assert!(back.data().iter().all(|&v| v == 0.0));
}

#[test]
fn reconstruction_at_one_and_three_levels() {
    let x = random_image(64, 64, 3);
    for levels in [1, 3] {
        let back = inverse(&forward(&x, levels).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &x) < 1e-8);
    }
}

#[test]
fn split_bands_is_exact() {
    let p = forward(&random_image(48, 40, 4), 1).unwrap();
    let set = split_bands(&p, BandLayout::RealImag);
    assert_eq!(set.source_level, 1);
    for k in 0..ORIENTATIONS {
        let band = &p.level(1)[k];
        let re = set.get(k, Part::Real);
        let im = set.get(k, Part::Imag);
        assert_eq!(re.dims(), band.dims());
        for (i, c) in band.data().iter().enumerate() {
            assert_eq!(re.data()[i], c.re);
            assert_eq!(im.data()[i], c.im);
        }
        assert_eq!(set.by_index(2 * k), re);
        assert_eq!(set.describe(2 * k + 1), (k, Part::Imag));
    }
}

#[test]
fn abs_layout_holds_magnitudes() {
    let img = random_image(32, 32, 5);
    let set = level1_bands(&img, BandLayout::RealAbs).unwrap();
    let p = forward(&img, 1).unwrap();
    assert_eq!(set.describe(3), (1, Part::Abs));
    for (i, c) in p.level(1)[1].data().iter().enumerate() {
        assert_eq!(set.get(1, Part::Abs).data()[i], c.norm());
    }
}

#[test]
fn constant_image_bands_vanish() {
    let set = level1_bands(&GrayImage::filled(32, 32, 9.0), BandLayout::RealImag).unwrap();
    for (_, _, band) in set.iter() {
        let (lo, hi) = band.min_max();
        assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perfect_reconstruction(w in 32usize..80, h in 32usize..80, levels in 1usize..=3, seed: u64) {
        let x = random_image(w, h, seed);
        let back = inverse(&forward(&x, levels).unwrap()).unwrap();
        prop_assert_eq!(back.dims(), x.dims());
        prop_assert!(max_abs_diff(&back, &x) < 1e-8);
    }

    #[test]
    fn forward_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed: u64) {
        let x = random_image(34, 30, seed);
        let y = random_image(34, 30, seed ^ 0x5555);
        let mut combo = x.scale(a);
        for (v, yv) in combo.data_mut().iter_mut().zip(y.data()) {
            *v += b * yv;
        }
        let px = forward(&x, 2).unwrap();
        let py = forward(&y, 2).unwrap();
        let pc = forward(&combo, 2).unwrap();
        for l in 1..=2 {
            for k in 0..ORIENTATIONS {
                let (bx, by, bc) = (&px.level(l)[k], &py.level(l)[k], &pc.level(l)[k]);
                for i in 0..bc.data().len() {
                    let want = bx.data()[i] * a + by.data()[i] * b;
                    prop_assert!((bc.data()[i] - want).norm() < 1e-10);
                }
            }
        }
    }
}
