use inpaint_forensics::error::Error;
use inpaint_forensics::raster::{GrayImage, Mask, Raster, RgbImage};
use inpaint_forensics::segmentation::{
    load_segment_map, merge_regions, segment_band_mask, segment_mask, slic_superpixels, SegmentMap,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gray(img: GrayImage) -> Raster {
    Raster::Gray(img)
}

fn write_gray_png(path: &std::path::Path, w: u32, h: u32, px: Vec<u8>) {
    image::GrayImage::from_raw(w, h, px).unwrap().save(path).unwrap();
}

// Connectivity oracle: flood fill from one pixel of each label must reach
// every pixel of that label.
fn flood_fill_connected(map: &SegmentMap) -> bool {
    let (w, h) = map.dims();
    for id in map.segment_ids() {
        let start = map.labels().iter().position(|&l| l == id).unwrap();
        let mut seen = vec![false; w * h];
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0;
        while let Some(i) = stack.pop() {
            reached += 1;
            let (r, c) = (i / w, i % w);
            let mut nbrs = Vec::new();
            if r > 0 {
                nbrs.push(i - w);
            }
            if r + 1 < h {
                nbrs.push(i + w);
            }
            if c > 0 {
                nbrs.push(i - 1);
            }
            if c + 1 < w {
                nbrs.push(i + 1);
            }
            for j in nbrs {
                if !seen[j] && map.labels()[j] == id {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if reached != map.areas()[id] {
            return false;
        }
    }
    true
}

fn assert_partition(map: &SegmentMap) {
    let (w, h) = map.dims();
    assert_eq!(map.labels().len(), w * h);
    assert!(!map.is_empty());
    assert_eq!(map.areas().iter().sum::<usize>(), w * h);
    assert!(map.labels().iter().all(|&l| l < map.len()));
    for id in map.segment_ids() {
        assert_eq!(map.labels().iter().filter(|&&l| l == id).count(), map.areas()[id]);
    }
}

#[test]
fn uniform_image_splits_into_grid_quadrants() {
    let map = slic_superpixels(&gray(GrayImage::filled(64, 64, 128.0)), 4, 10.0).unwrap();
    assert_eq!(map.len(), 4);
    for &a in map.areas() {
        assert_eq!(a, 32 * 32);
    }
    assert!(map.labels().chunks(64).all(|row| row[0] != row[63]));
}

#[test]
fn halves_are_recovered() {
    let img = GrayImage::from_fn(64, 48, |_, c| if c < 32 { 0.0 } else { 255.0 });
    let map = slic_superpixels(&gray(img), 2, 1.0).unwrap();
    assert_eq!(map.len(), 2);
    let left = map.label(0, 0);
    let agree = (0..48)
        .flat_map(|r| (0..64).map(move |c| (r, c)))
        .filter(|&(r, c)| (map.label(r, c) == left) == (c < 32))
        .count();
    assert!(agree as f64 / (64.0 * 48.0) >= 0.98);
}

#[test]
fn superpixels_are_connected_on_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let img = GrayImage::from_fn(80, 60, |_, _| rng.random_range(0.0..255.0));
    let map = slic_superpixels(&gray(img), 24, 5.0).unwrap();
    assert_partition(&map);
    assert!(flood_fill_connected(&map));
}

#[test]
fn color_input_is_supported() {
    let r = GrayImage::from_fn(40, 40, |row, _| if row < 20 { 250.0 } else { 10.0 });
    let g = GrayImage::filled(40, 40, 30.0);
    let b = GrayImage::from_fn(40, 40, |_, c| c as f64);
    let img = Raster::Rgb(RgbImage::from_planes(r, g, b).unwrap());
    let map = slic_superpixels(&img, 8, 10.0).unwrap();
    assert_partition(&map);
    assert!(flood_fill_connected(&map));
}

#[test]
fn invalid_parameters_are_rejected() {
    let img = gray(GrayImage::zeros(16, 16));
    assert!(slic_superpixels(&img, 0, 10.0).is_err());
    assert!(slic_superpixels(&img, 4, 0.0).is_err());
}

#[test]
fn identical_neighbours_merge() {
    let img = GrayImage::filled(20, 10, 77.0);
    let sp = SegmentMap::from_raw_labels(20, 10, &(0..200).map(|i| usize::from(i % 20 >= 10)).collect::<Vec<_>>()).unwrap();
    let merged = merge_regions(&sp, &gray(img), 1.0).unwrap();
    assert_eq!(merged.len(), 1);
}

#[test]
fn zero_threshold_changes_nothing() {
    let img = GrayImage::filled(32, 32, 5.0);
    let sp = slic_superpixels(&gray(img.clone()), 9, 10.0).unwrap();
    assert_eq!(merge_regions(&sp, &gray(img), 0.0).unwrap(), sp);
}

#[test]
fn thirds_collapse_to_three_segments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = GrayImage::from_fn(60, 45, |_, c| {
        let base: f64 = [0.0, 128.0, 255.0][c / 20];
        (base + rng.random_range(-3.0..3.0)).clamp(0.0, 255.0)
    });
    let sp = slic_superpixels(&gray(img.clone()), 12, 10.0).unwrap();
    assert_eq!(sp.len(), 12);
    // Intra-band mean gaps are below 6, inter-band gaps above 120.
    let merged = merge_regions(&sp, &gray(img), 40.0).unwrap();
    assert_eq!(merged.len(), 3);
    for r in 0..45 {
        for c in 0..60 {
            assert_eq!(merged.label(r, c), merged.label(0, c / 20 * 20));
        }
    }
}

#[test]
fn merge_rejects_mismatched_raster() {
    let sp = SegmentMap::single(8, 8);
    assert!(matches!(
        merge_regions(&sp, &gray(GrayImage::zeros(8, 9)), 1.0),
        Err(Error::ShapeMismatch { .. })
    ));
}

#[test]
fn label_png_values_become_segments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.png");
    write_gray_png(&path, 2, 2, vec![0, 7, 7, 0]);
    let map = load_segment_map(&path, (2, 2)).unwrap();
    assert_eq!(map.len(), 2);
    assert_eq!(map.areas(), &[2, 2]);
    let seven = map.label(0, 1);
    let mask = segment_mask(&map, seven).unwrap();
    assert_eq!(mask.data(), &[false, true, true, false]);

    assert!(matches!(
        load_segment_map(&path, (3, 2)),
        Err(Error::ShapeMismatch { .. })
    ));

    let zeros = dir.path().join("zeros.png");
    write_gray_png(&zeros, 4, 3, vec![0; 12]);
    let one = load_segment_map(&zeros, (4, 3)).unwrap();
    assert_eq!(one.len(), 1);
    assert!(segment_mask(&one, 0).unwrap().data().iter().all(|&b| b));
}

#[test]
fn sixteen_bit_label_maps_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wide.png");
    let px: Vec<u16> = vec![1000, 1000, 65535, 3];
    image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 2, px).unwrap().save(&path).unwrap();
    let map = load_segment_map(&path, (2, 2)).unwrap();
    assert_eq!(map.len(), 3);
    // Ascending value order: 3 -> 0, 1000 -> 1, 65535 -> 2.
    assert_eq!(map.labels(), &[1, 1, 2, 0]);
}

#[test]
fn saved_label_map_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.png");
    let map = slic_superpixels(&gray(GrayImage::filled(32, 32, 1.0)), 6, 10.0).unwrap();
    map.save_png(&path).unwrap();
    let back = load_segment_map(&path, (32, 32)).unwrap();
    assert_eq!(back.len(), map.len());
    for id in map.segment_ids() {
        let m = segment_mask(&map, id).unwrap();
        let first = map.labels().iter().position(|&l| l == id).unwrap();
        let b = segment_mask(&back, back.labels()[first]).unwrap();
        assert_eq!(m, b);
    }

    let many = SegmentMap::from_raw_labels(300, 1, &(0..300).collect::<Vec<_>>()).unwrap();
    let wide = dir.path().join("many.png");
    many.save_png(&wide).unwrap();
    assert_eq!(load_segment_map(&wide, (300, 1)).unwrap(), many);
}

#[test]
fn unknown_label_is_an_error() {
    let map = SegmentMap::single(4, 4);
    assert!(matches!(segment_mask(&map, 1), Err(Error::UnknownLabel(1))));
}

#[test]
fn band_mask_uses_majority_vote() {
    // Oracle: enumerate each 2x2 source block by hand.
    let raw = vec![
        1, 1, 0, 0, //
        1, 0, 0, 1, //
        0, 0, 1, 1, //
        0, 1, 1, 0, //
    ];
    let map = SegmentMap::from_raw_labels(4, 4, &raw).unwrap();
    let ones = map.label(0, 0);
    let band = segment_band_mask(&map, ones, (2, 2)).unwrap();
    let expect: Vec<bool> = [(0, 0), (0, 2), (2, 0), (2, 2)]
        .iter()
        .map(|&(r, c)| {
            let votes = [(0, 0), (0, 1), (1, 0), (1, 1)]
                .iter()
                .filter(|&&(dr, dc)| raw[(r + dr) * 4 + c + dc] == 1)
                .count();
            votes >= 2
        })
        .collect();
    assert_eq!(band.data(), expect.as_slice());
    assert_eq!(band.data(), &[true, false, false, true]);
    let mask = Mask::filled(4, 4, true);
    assert_eq!(segment_band_mask(&SegmentMap::single(4, 4), 0, (4, 4)).unwrap(), mask);
}

#[test]
fn piecewise_constant_image_is_recovered_by_slic_then_merge() {
    let img = GrayImage::from_fn(64, 64, |r, c| match (r < 32, c < 40) {
        (true, true) => 20.0,
        (true, false) => 200.0,
        (false, _) => 110.0,
    });
    let sp = slic_superpixels(&gray(img.clone()), 16, 10.0).unwrap();
    let merged = merge_regions(&sp, &gray(img.clone()), 25.0).unwrap();
    assert_eq!(merged.len(), 3);
    let mut wrong = 0;
    for r in 0..64 {
        for c in 0..64 {
            let want = match (r < 32, c < 40) {
                (true, true) => merged.label(0, 0),
                (true, false) => merged.label(0, 63),
                (false, _) => merged.label(63, 0),
            };
            wrong += usize::from(merged.label(r, c) != want);
        }
    }
    assert_eq!(wrong, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn merging_preserves_partition(seed: u64, target in 2usize..30, threshold in 0.0f64..80.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = GrayImage::from_fn(40, 32, |r, c| ((r / 8 + c / 10) * 37 % 255) as f64 + rng.random_range(0.0..20.0));
        let sp = slic_superpixels(&gray(img.clone()), target, 10.0).unwrap();
        assert_partition(&sp);
        prop_assert!(flood_fill_connected(&sp));
        let merged = merge_regions(&sp, &gray(img.clone()), threshold).unwrap();
        assert_partition(&merged);
        prop_assert!(merged.len() <= sp.len());
        prop_assert!(flood_fill_connected(&merged));
        let again = slic_superpixels(&gray(img), target, 10.0).unwrap();
        prop_assert_eq!(again, sp);
    }
}
