//! Pixel metrics, dataset evaluation and synthetic forgeries.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::detector::{detect, PipelineConfig};
use crate::error::{Error, Result};
use crate::raster::{load_image, load_mask, reflect_index, save_mask_png, save_raster_png, GrayImage, Mask, Raster};

/// Minimum distance between a forged region and the image border.
pub const REGION_MARGIN: usize = 8;

/// Pixel-level confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

pub fn confusion(pred: &Mask, truth: &Mask) -> Result<Confusion> {
    truth.check_same_dims(pred.dims())?;
    let mut c = Confusion::default();
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelMetrics {
    pub accuracy: f64,
    /// `None` when the truth mask is empty.
    pub recall: Option<f64>,
    pub iou: f64,
    pub confusion: Confusion,
}

impl PixelMetrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let accuracy = (c.tp + c.tn) as f64 / c.total() as f64;
        let recall = (c.tp + c.fn_ > 0).then(|| c.tp as f64 / (c.tp + c.fn_) as f64);
        let union = c.tp + c.fp + c.fn_;
        let iou = if union == 0 { 1.0 } else { c.tp as f64 / union as f64 };
        Self {
            accuracy,
            recall,
            iou,
            confusion: c,
        }
    }
}

/// Accuracy, recall and IoU of `pred` against `truth`.
pub fn pixel_metrics(pred: &Mask, truth: &Mask) -> Result<PixelMetrics> {
    Ok(PixelMetrics::from_confusion(confusion(pred, truth)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub name: String,
    pub accuracy: f64,
    pub recall: Option<f64>,
    pub iou: f64,
    pub empty_truth: bool,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: f64,
    pub recall: Option<f64>,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedImage {
    pub name: String,
    pub reason: String,
}

/// Per-image rows, their macro averages and the pooled confusion counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_image: Vec<ImageScore>,
    pub aggregate: Aggregate,
    pub counts: Confusion,
    pub failed: Vec<FailedImage>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricsReport {
    pub fn new(per_image: Vec<ImageScore>, failed: Vec<FailedImage>) -> Self {
        let mut counts = Confusion::default();
        for row in &per_image {
            counts.add(&row.confusion);
        }
        let aggregate = Aggregate {
            accuracy: mean(per_image.iter().map(|r| r.accuracy)).unwrap_or(0.0),
            recall: mean(per_image.iter().filter_map(|r| r.recall)),
            iou: mean(per_image.iter().map(|r| r.iou)).unwrap_or(0.0),
        };
        Self {
            per_image,
            aggregate,
            counts,
            failed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table with Accuracy, Recall and IoU columns.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let width = self
            .per_image
            .iter()
            .map(|r| r.name.len())
            .chain([5])
            .max()
            .unwrap_or(5);
        let mut out = format!("{:<width$}  {:>8}  {:>8}  {:>8}\n", "image", "Accuracy", "Recall", "IoU");
        for r in &self.per_image {
            out += &format!(
                "{:<width$}  {:>8}  {:>8}  {:>8}\n",
                r.name,
                fmt(Some(r.accuracy)),
                fmt(r.recall),
                fmt(Some(r.iou))
            );
        }
        out += &format!(
            "{:<width$}  {:>8}  {:>8}  {:>8}\n",
            "mean",
            fmt(Some(self.aggregate.accuracy)),
            fmt(self.aggregate.recall),
            fmt(Some(self.aggregate.iou))
        );
        for f in &self.failed {
            out += &format!("failed: {}: {}\n", f.name, f.reason);
        }
        out
    }
}

pub fn score_image(name: &str, pred: &Mask, truth: &Mask) -> Result<ImageScore> {
    let m = pixel_metrics(pred, truth)?;
    Ok(ImageScore {
        name: name.to_string(),
        accuracy: m.accuracy,
        recall: m.recall,
        iou: m.iou,
        empty_truth: m.recall.is_none(),
        confusion: m.confusion,
    })
}

/// Matched `inpainted/NAME.png` and `mask/NAME.png` pairs, sorted by name.
pub fn dataset_pairs(root: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let inpainted = root.join("inpainted");
    let masks = root.join("mask");
    let mut pairs = Vec::new();
    if let Ok(entries) = std::fs::read_dir(&inpainted) {
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&inpainted, e))?.path();
            let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
            let Some(file) = path.file_name() else { continue };
            let truth = masks.join(file);
            if is_png && truth.is_file() {
                let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                pairs.push((name, path, truth));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(pairs)
}

/// Scores `predict` over a dataset directory. Images that fail to load or
/// predict are listed in `failed` and excluded from the aggregates.
pub fn evaluate_dataset_with(
    root: impl AsRef<Path>,
    mut predict: impl FnMut(&str, &Raster) -> Result<Mask>,
) -> Result<MetricsReport> {
    let root = root.as_ref();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (name, image_path, mask_path) in dataset_pairs(root)? {
        let scored = load_image(&image_path).and_then(|img| {
            let truth = load_mask(&mask_path)?;
            let pred = predict(&name, &img)?;
            score_image(&name, &pred, &truth)
        });
        match scored {
            Ok(row) => rows.push(row),
            Err(e) => failed.push(FailedImage {
                name,
                reason: e.to_string(),
            }),
        }
    }
    Ok(MetricsReport::new(rows, failed))
}

/// Runs the detector on every pair under `root`.
pub fn evaluate_dataset(root: impl AsRef<Path>, config: &PipelineConfig) -> Result<MetricsReport> {
    config.validate()?;
    evaluate_dataset_with(root, |_, img| Ok(detect(img, config, None)?.mask))
}

/// How a synthetic forgery replaces its region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthMode {
    /// 5×5 Gaussian (σ = 1) smoothing of the noisy image.
    Denoise,
    /// 9×9 box blur of the noisy image.
    Blur,
    /// Inward propagation of boundary values.
    TeleaFill,
}

impl SynthMode {
    pub const ALL: [SynthMode; 3] = [SynthMode::Denoise, SynthMode::Blur, SynthMode::TeleaFill];

    pub fn name(self) -> &'static str {
        match self {
            SynthMode::Denoise => "denoise",
            SynthMode::Blur => "blur",
            SynthMode::TeleaFill => "telea-fill",
        }
    }
}

impl std::fmt::Display for SynthMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SynthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown synthesis mode `{s}`")))
    }
}

fn convolve_separable(img: &GrayImage, taps: &[f64]) -> GrayImage {
    let (w, h) = img.dims();
    let half = (taps.len() / 2) as isize;
    let rows = GrayImage::from_fn(w, h, |r, c| {
        taps.iter()
            .enumerate()
            .map(|(i, t)| t * img.get(r, reflect_index(c as isize + i as isize - half, w)))
            .sum()
    });
    GrayImage::from_fn(w, h, |r, c| {
        taps.iter()
            .enumerate()
            .map(|(i, t)| t * rows.get(reflect_index(r as isize + i as isize - half, h), c))
            .sum()
    })
}

pub fn gaussian_smooth(img: &GrayImage) -> GrayImage {
    let raw: Vec<f64> = (-2..=2).map(|x: i32| (-(x * x) as f64 / 2.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    let taps: Vec<f64> = raw.iter().map(|t| t / total).collect();
    convolve_separable(img, &taps)
}

pub fn box_blur(img: &GrayImage) -> GrayImage {
    convolve_separable(img, &[1.0 / 9.0; 9])
}

/// Fills `region` from its boundary inward: pixels are visited in order of
/// 4-connected distance from the known area, each taking the
/// inverse-distance-weighted mean of already known pixels within a radius.
pub fn telea_fill(img: &GrayImage, region: &Mask) -> GrayImage {
    const RADIUS: isize = 4;
    let (w, h) = img.dims();
    let mut out = img.clone();
    let mut known: Vec<bool> = region.data().iter().map(|&r| !r).collect();
    let mut dist = vec![usize::MAX; w * h];
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if known[i] {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    let mut order = Vec::new();
    while let Some(i) = queue.pop_front() {
        let (r, c) = (i / w, i % w);
        let mut push = |j: usize| {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                order.push(j);
                queue.push_back(j);
            }
        };
        if r > 0 {
            push(i - w);
        }
        if r + 1 < h {
            push(i + w);
        }
        if c > 0 {
            push(i - 1);
        }
        if c + 1 < w {
            push(i + 1);
        }
    }
    let mut start = 0;
    while start < order.len() {
        let layer = dist[order[start]];
        let end = order[start..]
            .iter()
            .position(|&j| dist[j] != layer)
            .map_or(order.len(), |p| start + p);
        let values: Vec<f64> = order[start..end]
            .iter()
            .map(|&i| {
                let (r, c) = ((i / w) as isize, (i % w) as isize);
                let mut num = 0.0;
                let mut den = 0.0;
                for dr in -RADIUS..=RADIUS {
                    for dc in -RADIUS..=RADIUS {
                        let d2 = dr * dr + dc * dc;
                        let (sr, sc) = (r + dr, c + dc);
                        if d2 == 0 || d2 > RADIUS * RADIUS || sr < 0 || sc < 0 || sr >= h as isize || sc >= w as isize {
                            continue;
                        }
                        let j = sr as usize * w + sc as usize;
                        if known[j] {
                            let wt = 1.0 / d2 as f64;
                            num += wt * out.data()[j];
                            den += wt;
                        }
                    }
                }
                num / den
            })
            .collect();
        for (&i, v) in order[start..end].iter().zip(values) {
            out.data_mut()[i] = v;
        }
        for &i in &order[start..end] {
            known[i] = true;
        }
        start = end;
    }
    out
}

fn quantize(img: &GrayImage) -> GrayImage {
    img.map(|v| v.round().clamp(0.0, 255.0))
}

fn check_region(region: &Mask, dims: (usize, usize)) -> Result<()> {
    region.check_same_dims(dims)?;
    if region.is_empty() {
        return Err(Error::InvalidArgument("forgery region is empty".into()));
    }
    let fraction = region.fraction();
    if fraction > 0.5 {
        return Err(Error::RegionTooLarge { fraction });
    }
    let (w, h) = dims;
    let m = REGION_MARGIN;
    for r in 0..h {
        for c in 0..w {
            if region.get(r, c) && (r < m || c < m || r + m >= h || c + m >= w) {
                return Err(Error::InvalidArgument(format!(
                    "forgery region must stay {m} pixels away from the border"
                )));
            }
        }
    }
    Ok(())
}

/// Adds Gaussian noise of `noise_sigma` to every plane of `clean`, then
/// replaces `region` with a low-noise version. Output is rounded to 8-bit
/// values. Returns the forged image and the truth mask.
pub fn synth_forgery(
    clean: &Raster,
    region: &Mask,
    mode: SynthMode,
    noise_sigma: f64,
    seed: u64,
) -> Result<(Raster, Mask)> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma must be non-negative, got {noise_sigma}")));
    }
    check_region(region, clean.dims())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).expect("valid sigma");
    let forged = clean.map_planes(|plane| {
        let noisy = if noise_sigma > 0.0 {
            GrayImage::from_fn(plane.width(), plane.height(), |r, c| plane.get(r, c) + noise.sample(&mut rng))
        } else {
            plane.clone()
        };
        let low = match mode {
            SynthMode::Denoise => gaussian_smooth(&noisy),
            SynthMode::Blur => box_blur(&noisy),
            SynthMode::TeleaFill => telea_fill(&noisy, region),
        };
        let mixed = GrayImage::from_fn(plane.width(), plane.height(), |r, c| {
            if region.get(r, c) {
                low.get(r, c)
            } else {
                noisy.get(r, c)
            }
        });
        quantize(&mixed)
    });
    Ok((forged, region.clone()))
}

/// Seeded clean test image: Voronoi cells of flat gray plus two gentle
/// sinusoids, rounded to 8-bit values.
pub fn clean_texture(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = rng.random_range(4..=7);
    let sites: Vec<(f64, f64, f64)> = (0..cells)
        .map(|_| {
            (
                rng.random_range(0.0..height as f64),
                rng.random_range(0.0..width as f64),
                rng.random_range(50.0..200.0),
            )
        })
        .collect();
    let waves: Vec<(f64, f64, f64, f64)> = (0..2)
        .map(|_| {
            (
                rng.random_range(6.0..12.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(60.0..140.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    quantize(&GrayImage::from_fn(width, height, |r, c| {
        let (y, x) = (r as f64, c as f64);
        let base = sites
            .iter()
            .min_by(|a, b| {
                let da = (a.0 - y).powi(2) + (a.1 - x).powi(2);
                let db = (b.0 - y).powi(2) + (b.1 - x).powi(2);
                da.total_cmp(&db)
            })
            .map(|s| s.2)
            .unwrap_or(128.0);
        let wave: f64 = waves
            .iter()
            .map(|&(amp, angle, period, phase)| {
                let t = x * angle.cos() + y * angle.sin();
                amp * (std::f64::consts::TAU * t / period + phase).sin()
            })
            .sum();
        base + wave
    }))
}

/// Disk of `radius` placed uniformly at random, keeping the border margin.
pub fn random_disk(width: usize, height: usize, radius: f64, rng: &mut impl Rng) -> Result<Mask> {
    let lo = radius + REGION_MARGIN as f64 + 1.0;
    if 2.0 * lo >= width.min(height) as f64 {
        return Err(Error::InvalidArgument(format!("radius {radius} does not fit in {width}x{height}")));
    }
    let cy = rng.random_range(lo..height as f64 - lo);
    let cx = rng.random_range(lo..width as f64 - lo);
    Ok(Mask::disk(width, height, (cy, cx), radius))
}

/// One generated test image with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCase {
    pub name: String,
    pub image: Raster,
    pub truth: Mask,
    pub mode: Option<SynthMode>,
    pub sigma: f64,
}

/// `count` forgeries of `size`² images cycling through the three modes and
/// σ ∈ {5, 10}, with disk radii drawn from 24–56.
pub fn forgery_suite(count: usize, size: usize, seed: u64) -> Result<Vec<SynthCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mode = SynthMode::ALL[i % 3];
            let sigma = [5.0, 10.0][i % 2];
            let radius = rng.random_range(24..=56) as f64;
            let clean = clean_texture(size, size, rng.random());
            let region = random_disk(size, size, radius, &mut rng)?;
            let (image, truth) = synth_forgery(&Raster::Gray(clean), &region, mode, sigma, rng.random())?;
            Ok(SynthCase {
                name: format!("forgery-{i:02}"),
                image,
                truth,
                mode: Some(mode),
                sigma,
            })
        })
        .collect()
}

/// Untampered controls: constant gray plus Gaussian noise, σ ∈ {5, 10}.
pub fn negative_controls(count: usize, size: usize, seed: u64) -> Vec<SynthCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let sigma = [5.0, 10.0][i % 2];
            let noise = Normal::new(0.0, sigma).expect("valid sigma");
            let img = quantize(&GrayImage::from_fn(size, size, |_, _| 128.0 + noise.sample(&mut rng)));
            SynthCase {
                name: format!("control-{i:02}"),
                image: Raster::Gray(img),
                truth: Mask::filled(size, size, false),
                mode: None,
                sigma,
            }
        })
        .collect()
}

/// Writes cases in the `inpainted/` + `mask/` dataset layout.
pub fn write_dataset(root: impl AsRef<Path>, cases: &[SynthCase]) -> Result<()> {
    let root = root.as_ref();
    for case in cases {
        save_raster_png(&case.image, root.join("inpainted").join(format!("{}.png", case.name)))?;
        save_mask_png(&case.truth, root.join("mask").join(format!("{}.png", case.name)))?;
    }
    Ok(())
}
