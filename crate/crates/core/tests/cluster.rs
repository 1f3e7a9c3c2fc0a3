use inpaint_forensics::cluster::{
    cluster_segment, fuzzy_cmeans_1d, kmeans_1d, ClusterBackend, SegmentSplit,
};
use inpaint_forensics::error::Error;
use inpaint_forensics::raster::{GrayImage, Mask};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn bimodal(seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Normal::new(0.0, 1.0).unwrap();
    let b = Normal::new(8.0, 1.0).unwrap();
    let mut values = Vec::new();
    let mut truth = Vec::new();
    for i in 0..200 {
        if i % 2 == 0 {
            values.push(a.sample(&mut rng));
            truth.push(0);
        } else {
            values.push(b.sample(&mut rng));
            truth.push(1);
        }
    }
    (values, truth)
}

fn accuracy(labels: &[usize], truth: &[usize]) -> f64 {
    labels.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

#[test]
fn separated_values() {
    let v = [0.0, 0.0, 0.0, 10.0, 10.0, 10.0];
    let k = kmeans_1d(&v, 2, 0).unwrap();
    assert_eq!(k.centroids, vec![0.0, 10.0]);
    assert_eq!(k.labels, vec![0, 0, 0, 1, 1, 1]);
    let c = fuzzy_cmeans_1d(&v, 2, 2.0, 0).unwrap();
    assert_eq!(c.labels, k.labels);
}

#[test]
fn single_cluster_is_the_mean() {
    let v = [1.0, 2.0, 4.0, 9.0];
    let k = kmeans_1d(&v, 1, 3).unwrap();
    assert!((k.centroids[0] - 4.0).abs() < 1e-12);
    let expected: f64 = v.iter().map(|x| (x - 4.0) * (x - 4.0)).sum();
    assert!((k.inertia - expected).abs() < 1e-12);
    let c = fuzzy_cmeans_1d(&v, 1, 2.0, 3).unwrap();
    assert!((c.centroids[0] - 4.0).abs() < 1e-12);
}

#[test]
fn identical_values_are_degenerate() {
    assert!(matches!(kmeans_1d(&[3.0; 5], 2, 0), Err(Error::DegenerateInput { k: 2 })));
    assert!(matches!(
        fuzzy_cmeans_1d(&[3.0; 5], 2, 2.0, 0),
        Err(Error::DegenerateInput { .. })
    ));
    assert!(kmeans_1d(&[3.0; 5], 1, 0).is_ok());
    assert!(kmeans_1d(&[1.0], 2, 0).is_err());
}

#[test]
fn bimodal_recovery_for_both_backends() {
    for seed in 0..20 {
        let (values, truth) = bimodal(seed);
        for (name, c) in [
            ("kmeans", kmeans_1d(&values, 2, seed).unwrap()),
            ("cmeans", fuzzy_cmeans_1d(&values, 2, 2.0, seed).unwrap()),
        ] {
            assert!((c.centroids[0] - 0.0).abs() < 0.5, "{name} seed {seed}: {:?}", c.centroids);
            assert!((c.centroids[1] - 8.0).abs() < 0.5, "{name} seed {seed}: {:?}", c.centroids);
            assert!(accuracy(&c.labels, &truth) >= 0.95);
        }
    }
}

#[test]
fn constant_segment_is_uniform() {
    let band = GrayImage::filled(16, 16, 2.0);
    let seg = Mask::filled(16, 16, true);
    for backend in [ClusterBackend::Kmeans, ClusterBackend::Cmeans] {
        assert_eq!(cluster_segment(&band, &seg, backend, 0).unwrap(), SegmentSplit::Uniform);
    }
}

#[test]
fn blob_is_recovered() {
    let blob = Mask::disk(48, 48, (20.0, 26.0), 7.0);
    let band = GrayImage::from_fn(48, 48, |r, c| if blob.get(r, c) { 9.0 } else { 1.0 });
    let seg = Mask::from_fn(48, 48, |r, c| r > 4 && c > 4 && r < 44 && c < 44);
    let SegmentSplit::Split { low, high } =
        cluster_segment(&band, &seg, ClusterBackend::Kmeans, 1).unwrap()
    else {
        panic!("expected a split");
    };
    let hit = high.and(&blob).count() as f64 / blob.count() as f64;
    assert!(hit >= 0.9);
    assert_eq!(low.or(&high), seg);
    assert!(low.and(&high).is_empty());
}

#[test]
fn two_exact_levels_split_however_small() {
    let band = GrayImage::from_fn(10, 10, |r, c| ((r * 10 + c) % 2) as f64 * 1e-9);
    let seg = Mask::filled(10, 10, true);
    match cluster_segment(&band, &seg, ClusterBackend::Kmeans, 0).unwrap() {
        SegmentSplit::Split { low, high } => {
            assert_eq!(low.count(), 50);
            assert_eq!(high.count(), 50);
        }
        SegmentSplit::Uniform => panic!("two exact levels should split"),
    }
}

#[test]
fn empty_segment_is_rejected() {
    let band = GrayImage::zeros(4, 4);
    assert!(cluster_segment(&band, &Mask::filled(4, 4, false), ClusterBackend::Kmeans, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deterministic_and_canonical(values in prop::collection::vec(-100.0f64..100.0, 3..60), k in 1usize..4, seed: u64) {
        prop_assume!(values.len() >= k);
        prop_assume!(values.iter().any(|&v| v != values[0]));
        let a = kmeans_1d(&values, k, seed).unwrap();
        let b = kmeans_1d(&values, k, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.centroids.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(a.labels.iter().all(|&l| l < k));
        prop_assert_eq!(a.labels.len(), values.len());
        let c = fuzzy_cmeans_1d(&values, k, 2.0, seed).unwrap();
        prop_assert_eq!(&c, &fuzzy_cmeans_1d(&values, k, 2.0, seed).unwrap());
        prop_assert!(c.centroids.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn inertia_never_increases(values in prop::collection::vec(-50.0f64..50.0, 4..80), k in 1usize..4, seed: u64) {
        prop_assume!(values.iter().any(|&v| v != values[0]));
        let c = kmeans_1d(&values, k, seed).unwrap();
        for w in c.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
        prop_assert!(c.inertia <= c.inertia_trace[0] + 1e-9);
    }

    #[test]
    fn labels_ignore_affine_maps(values in prop::collection::vec(-50.0f64..50.0, 4..60), a in 0.1f64..10.0, b in -100.0f64..100.0, seed: u64) {
        prop_assume!(values.iter().any(|&v| v != values[0]));
        let base = kmeans_1d(&values, 2, seed).unwrap();
        let mapped: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let moved = kmeans_1d(&mapped, 2, seed).unwrap();
        prop_assert_eq!(base.labels, moved.labels);
    }

    #[test]
    fn split_partitions_the_segment(seed: u64, cx in 10.0f64..30.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let band = GrayImage::from_fn(40, 40, |_, c| {
            let bump = if (c as f64 - cx).abs() < 6.0 { 6.0 } else { 0.0 };
            bump + noise.sample(&mut rng) * 0.3
        });
        let seg = Mask::disk(40, 40, (20.0, 20.0), 15.0);
        if let SegmentSplit::Split { low, high } = cluster_segment(&band, &seg, ClusterBackend::Kmeans, seed).unwrap() {
            prop_assert_eq!(low.or(&high), seg);
            prop_assert!(low.and(&high).is_empty());
        }
    }
}
