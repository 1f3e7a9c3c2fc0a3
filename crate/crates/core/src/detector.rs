//! The full localization pipeline: segmentation, level-1 bands, per-segment
//! gating, enhancement, clustering, noise-outlier selection and heat-map
//! aggregation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bandops::{local_log_magnitude, median_filter, mmwf, normalize, patch_mean_cv, smfr, wiener_filter, Filter};
use crate::cluster::{cluster_segment, ClusterBackend, SegmentSplit};
use crate::dtcwt::{level1_bands, BandLayout, BandSet, Part};
use crate::error::{Error, Result};
use crate::noise::{estimate_region_noise_with, NoiseMode, PatchMoments};
use crate::raster::{pad_image, touching_origins, valid_origins, GrayImage, Mask, Padded, Raster, MIN_PIPELINE_SIDE};
use crate::segmentation::{merge_regions, segment_band_mask, segment_mask, slic_superpixels, SegmentMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Binarize {
    #[default]
    Otsu,
    Fixed,
}

/// What the per-pixel heat is averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatDenominator {
    /// Evidence images actually produced for the pixel's segment.
    #[default]
    Produced,
    /// All 48 band-part × filter combinations of the segment.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub slic_superpixels: usize,
    /// When set, overrides `slic_superpixels` with one superpixel per
    /// `cell`×`cell` pixels.
    pub slic_cell_size: Option<usize>,
    pub compactness: f64,
    pub merge_threshold: f64,
    pub relevance_patch: usize,
    pub relevance_tolerance: f64,
    pub noise_patch: usize,
    pub noise_padding: usize,
    pub noise_mode: NoiseMode,
    pub suspicion_threshold: f64,
    pub filter_window: usize,
    pub linthresh: f64,
    /// Window of the log-magnitude map that is clustered; 0 clusters the
    /// enhanced values directly.
    pub activity_window: usize,
    /// Added to the local magnitude before the log.
    pub activity_floor: f64,
    pub cluster_backend: ClusterBackend,
    pub cluster_seed: u64,
    pub binarize: Binarize,
    pub fixed_threshold: f64,
    /// Pixels at or below this heat never enter the mask, whatever the
    /// binarization picks.
    pub min_heat: f64,
    pub min_segment_band_pixels: usize,
    pub band_part: BandLayout,
    pub heat_denominator: HeatDenominator,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            slic_superpixels: 32,
            slic_cell_size: None,
            compactness: 10.0,
            merge_threshold: 25.0,
            relevance_patch: 32,
            relevance_tolerance: 0.5,
            noise_patch: 8,
            noise_padding: 3,
            noise_mode: NoiseMode::Refined,
            suspicion_threshold: 0.4,
            filter_window: 3,
            linthresh: 1.0,
            activity_window: 15,
            activity_floor: 0.05,
            cluster_backend: ClusterBackend::Kmeans,
            cluster_seed: 0,
            binarize: Binarize::Otsu,
            fixed_threshold: 0.5,
            min_heat: 0.25,
            min_segment_band_pixels: 64,
            band_part: BandLayout::RealImag,
            heat_denominator: HeatDenominator::Produced,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.slic_superpixels == 0 {
            return fail("slic-superpixels must be at least 1".into());
        }
        if self.slic_cell_size.is_some_and(|s| s < 2) {
            return fail("slic-cell-size must be at least 2".into());
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return fail(format!("compactness must be positive, got {}", self.compactness));
        }
        if !(self.merge_threshold >= 0.0 && self.merge_threshold.is_finite()) {
            return fail(format!("merge-threshold must be non-negative, got {}", self.merge_threshold));
        }
        if self.relevance_patch < 2 || self.noise_patch < 2 {
            return fail("patch sizes must be at least 2".into());
        }
        if !(self.relevance_tolerance >= 0.0 && self.relevance_tolerance.is_finite()) {
            return fail(format!("relevance-tolerance must be non-negative, got {}", self.relevance_tolerance));
        }
        if !(self.suspicion_threshold >= 0.0 && self.suspicion_threshold.is_finite()) {
            return fail(format!("suspicion-threshold must be non-negative, got {}", self.suspicion_threshold));
        }
        if self.filter_window < 3 || self.filter_window % 2 == 0 {
            return fail(format!("filter-window must be odd and at least 3, got {}", self.filter_window));
        }
        if !(self.linthresh > 0.0 && self.linthresh.is_finite()) {
            return fail(format!("linthresh must be positive, got {}", self.linthresh));
        }
        if self.activity_window != 0 && self.activity_window % 2 == 0 {
            return fail(format!("activity-window must be 0 or odd, got {}", self.activity_window));
        }
        if !(self.activity_floor > 0.0 && self.activity_floor.is_finite()) {
            return fail(format!("activity-floor must be positive, got {}", self.activity_floor));
        }
        if !(0.0..=1.0).contains(&self.fixed_threshold) {
            return fail(format!("fixed-threshold must lie in [0, 1], got {}", self.fixed_threshold));
        }
        if !(0.0..1.0).contains(&self.min_heat) {
            return fail(format!("min-heat must lie in [0, 1), got {}", self.min_heat));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn superpixel_target(&self, dims: (usize, usize)) -> usize {
        match self.slic_cell_size {
            Some(cell) => (dims.0 * dims.1).div_ceil(cell * cell).max(1),
            None => self.slic_superpixels,
        }
    }
}

/// Superpixels followed by mean-color merging.
pub fn segment_image(img: &Raster, config: &PipelineConfig) -> Result<SegmentMap> {
    let sp = slic_superpixels(img, config.superpixel_target(img.dims()), config.compactness)?;
    merge_regions(&sp, img, config.merge_threshold)
}

/// One completed (segment, band-part, filter) job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Contribution {
    pub segment_id: usize,
    pub band_index: usize,
    pub part: Part,
    pub filter: Filter,
    /// Full-resolution pixels marked by this evidence image (0 if none).
    pub selected_region_pixels: usize,
    /// Discrepancy of the selected region against its reference.
    pub discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SkipReason {
    SegmentTooSmall { band_pixels: usize },
    NotRelevant { cv: Option<f64> },
    Failed { message: String },
}

/// A band-part that produced no evidence. `filter` is `None` when all
/// four filters were skipped together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Skipped {
    pub segment_id: usize,
    pub band_index: usize,
    pub part: Part,
    pub filter: Option<Filter>,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Per-pixel evidence in [0, 1].
    pub heatmap: GrayImage,
    pub mask: Mask,
    pub threshold: f64,
    pub segments: SegmentMap,
    pub contributions: Vec<Contribution>,
    pub skipped: Vec<Skipped>,
}

/// Serializable summary of a detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DetectionReport {
    pub width: usize,
    pub height: usize,
    pub segments: usize,
    pub threshold: f64,
    pub mask_pixels: usize,
    pub heat_max: f64,
    pub config: PipelineConfig,
    pub contributions: Vec<Contribution>,
    pub skipped: Vec<Skipped>,
}

impl DetectionResult {
    pub fn report(&self, config: &PipelineConfig) -> DetectionReport {
        DetectionReport {
            width: self.heatmap.width(),
            height: self.heatmap.height(),
            segments: self.segments.len(),
            threshold: self.threshold,
            mask_pixels: self.mask.count(),
            heat_max: self.heatmap.min_max().1,
            config: config.clone(),
            contributions: self.contributions.clone(),
            skipped: self.skipped.clone(),
        }
    }

    /// Heat-map scaled linearly onto 0–255.
    pub fn heat_u8(&self) -> GrayImage {
        self.heatmap.scale(255.0)
    }
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Which candidate won the outlier vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate {
    A,
    B,
}

/// Outcome of the outlier rule on four variance estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub candidate: Candidate,
    pub discrepancy: f64,
}

/// Picks the candidate whose variance deviates most, relatively, from the
/// whole-band variance and keeps it if it differs from the reference by
/// more than `threshold`. The reference is the outside region, or the
/// other candidate when the outside has no estimate.
pub fn pick_outlier(
    a: Option<f64>,
    b: Option<f64>,
    outside: Option<f64>,
    whole: Option<f64>,
    threshold: f64,
) -> Option<Selection> {
    let (a, b, whole) = (a?, b?, whole?);
    if !(whole > 0.0) {
        return None;
    }
    let dev_a = (a - whole).abs() / whole;
    let dev_b = (b - whole).abs() / whole;
    let (candidate, value, other) = if dev_a >= dev_b {
        (Candidate::A, a, b)
    } else {
        (Candidate::B, b, a)
    };
    let reference = outside.filter(|&v| v > 0.0).unwrap_or(other);
    if !(reference > 0.0) {
        return None;
    }
    let discrepancy = (value - reference).abs() / reference;
    (discrepancy > threshold).then_some(Selection { candidate, discrepancy })
}

/// Noise-outlier selection between two candidate regions of `band`.
/// Regions without enough patches yield `None` rather than an error.
pub fn select_forged_region(
    band: &GrayImage,
    region_a: &Mask,
    region_b: &Mask,
    outside: &Mask,
    config: &PipelineConfig,
) -> Result<Option<Mask>> {
    for m in [region_a, region_b, outside] {
        m.check_same_dims(band.dims())?;
    }
    if !region_a.and(region_b).is_empty() || !region_a.and(outside).is_empty() || !region_b.and(outside).is_empty() {
        return Err(Error::InvalidArgument("candidate regions must be disjoint".into()));
    }
    let estimate = |m: &Mask| {
        estimate_region_noise_with(band, m, config.noise_patch, config.noise_padding, config.noise_mode)
            .ok()
            .map(|e| e.variance)
    };
    let whole = estimate(&Mask::filled(band.width(), band.height(), true));
    let picked = pick_outlier(
        estimate(region_a),
        estimate(region_b),
        estimate(outside),
        whole,
        config.suspicion_threshold,
    );
    Ok(picked.map(|s| match s.candidate {
        Candidate::A => region_a.clone(),
        Candidate::B => region_b.clone(),
    }))
}

const OTSU_BINS: usize = 256;

fn heat_bin(v: f64) -> usize {
    ((v * OTSU_BINS as f64) as usize).min(OTSU_BINS - 1)
}

/// Last background bin of the Otsu split over the nonzero heat values.
/// `None` when there is no nonzero heat; `Some(None)` when every nonzero
/// value falls in one bin, so nothing separates them.
fn otsu_bin(heatmap: &GrayImage) -> Option<Option<usize>> {
    let mut hist = [0usize; OTSU_BINS];
    for &v in heatmap.data() {
        if v > 0.0 {
            hist[heat_bin(v)] += 1;
        }
    }
    let total: usize = hist.iter().sum();
    if total == 0 {
        return None;
    }
    let weighted: f64 = hist.iter().enumerate().map(|(i, &n)| i as f64 * n as f64).sum();
    let mut best: Option<(f64, usize)> = None;
    let mut w0 = 0usize;
    let mut s0 = 0.0;
    for t in 0..OTSU_BINS - 1 {
        w0 += hist[t];
        s0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = s0 / w0 as f64;
        let m1 = (weighted - s0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m1 - m0).powi(2);
        if best.is_none_or(|(b, _)| between > b) {
            best = Some((between, t));
        }
    }
    Some(best.map(|(_, t)| t))
}

/// Heat value separating background from foreground under Otsu. `None`
/// when the nonzero heat occupies at most one histogram bin.
pub fn otsu_threshold(heatmap: &GrayImage) -> Option<f64> {
    match otsu_bin(heatmap) {
        Some(Some(t)) => Some((t + 1) as f64 / OTSU_BINS as f64),
        _ => None,
    }
}

/// Thresholds a heat-map. Otsu keeps nonzero values above the split bin
/// (all of them when they share one bin); fixed keeps values strictly
/// above `fixed_threshold`.
pub fn binarize(heatmap: &GrayImage, method: Binarize, fixed_threshold: f64) -> Mask {
    let (w, h) = heatmap.dims();
    match method {
        Binarize::Fixed => Mask::from_fn(w, h, |r, c| heatmap.get(r, c) > fixed_threshold),
        Binarize::Otsu => match otsu_bin(heatmap) {
            None => Mask::filled(w, h, false),
            Some(None) => Mask::from_fn(w, h, |r, c| heatmap.get(r, c) > 0.0),
            Some(Some(t)) => Mask::from_fn(w, h, |r, c| {
                let v = heatmap.get(r, c);
                v > 0.0 && heat_bin(v) > t
            }),
        },
    }
}

fn binarize_threshold(heatmap: &GrayImage, config: &PipelineConfig) -> f64 {
    let t = match config.binarize {
        Binarize::Fixed => config.fixed_threshold,
        Binarize::Otsu => otsu_threshold(heatmap).unwrap_or(0.0),
    };
    t.max(config.min_heat)
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Runs `f` on a worker pool capped at `jobs` threads (`None` keeps the
/// default pool). Results never depend on the pool size.
#[cfg(feature = "parallel")]
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match jobs {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_jobs<R: Send>(_jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Per band-part data shared by every segment.
struct BandContext {
    index: usize,
    band: usize,
    part: Part,
    raw: GrayImage,
    padded: Padded<f64>,
    shift: f64,
    whole: PatchMoments,
    whole_variance: Option<f64>,
    normalized: GrayImage,
    /// Median, SMFR and MMWF outputs; Wiener depends on the segment.
    filtered: [Option<GrayImage>; 4],
}

struct SegmentContext {
    id: usize,
    full: Mask,
    band: Mask,
}

enum PairState {
    Skip(SkipReason),
    Ready {
        outside_variance: Option<f64>,
        wiener_noise: Option<f64>,
    },
}

struct JobOutcome {
    selected: Option<Mask>,
    discrepancy: Option<f64>,
}

fn filter_slot(f: Filter) -> usize {
    Filter::ALL.iter().position(|&g| g == f).expect("known filter")
}

fn band_context(index: usize, bands: &BandSet, config: &PipelineConfig) -> Result<BandContext> {
    let (band, part) = bands.describe(index);
    let raw = bands.by_index(index).clone();
    let padded = pad_image(&raw, config.noise_padding);
    let shift = raw.mean();
    let origins = valid_origins(raw.dims(), config.noise_patch, 1, None, config.noise_padding);
    let whole = PatchMoments::from_origins(&padded, &origins, config.noise_patch, shift);
    let whole_variance = whole.estimate(config.noise_patch, config.noise_mode).ok().map(|e| e.variance);
    let normalized = normalize(&raw, config.linthresh)?;
    let k = config.filter_window;
    let filtered = [
        Some(median_filter(&normalized, k)?),
        Some(smfr(&normalized, k)?),
        None,
        Some(mmwf(&normalized, k)?),
    ];
    Ok(BandContext {
        index,
        band,
        part,
        raw,
        padded,
        shift,
        whole,
        whole_variance,
        normalized,
        filtered,
    })
}

fn pair_state(b: &BandContext, s: &SegmentContext, config: &PipelineConfig) -> Result<PairState> {
    let pixels = s.band.count();
    if pixels < config.min_segment_band_pixels {
        return Ok(PairState::Skip(SkipReason::SegmentTooSmall { band_pixels: pixels }));
    }
    let cv = patch_mean_cv(&b.raw, &s.band, config.relevance_patch)?;
    if !cv.is_some_and(|v| v > config.relevance_tolerance) {
        return Ok(PairState::Skip(SkipReason::NotRelevant { cv }));
    }
    let touching = touching_origins(&s.band, config.noise_patch, config.noise_padding);
    let inner = PatchMoments::from_origins(&b.padded, &touching, config.noise_patch, b.shift);
    let outside_variance = b
        .whole
        .sub(&inner)
        .estimate(config.noise_patch, config.noise_mode)
        .ok()
        .map(|e| e.variance);
    let wiener_noise = estimate_region_noise_with(
        &b.normalized,
        &s.band,
        config.noise_patch,
        config.noise_padding,
        config.noise_mode,
    )
    .ok()
    .map(|e| e.variance);
    Ok(PairState::Ready {
        outside_variance,
        wiener_noise,
    })
}

fn region_variance(b: &BandContext, region: &Mask, config: &PipelineConfig) -> Option<f64> {
    let origins = valid_origins(region.dims(), config.noise_patch, 1, Some(region), config.noise_padding);
    PatchMoments::from_origins(&b.padded, &origins, config.noise_patch, b.shift)
        .estimate(config.noise_patch, config.noise_mode)
        .ok()
        .map(|e| e.variance)
}

fn run_job(
    b: &BandContext,
    s: &SegmentContext,
    filter: Filter,
    outside_variance: Option<f64>,
    wiener_noise: Option<f64>,
    config: &PipelineConfig,
) -> Result<JobOutcome> {
    let owned;
    let enhanced = match &b.filtered[filter_slot(filter)] {
        Some(m) => m,
        None => {
            owned = wiener_filter(&b.normalized, config.filter_window, wiener_noise)?;
            &owned
        }
    };
    let feature = if config.activity_window == 0 {
        enhanced.clone()
    } else {
        local_log_magnitude(enhanced, config.activity_window, config.activity_floor)?
    };
    let (low, high) = match cluster_segment(&feature, &s.band, config.cluster_backend, config.cluster_seed)? {
        SegmentSplit::Uniform => {
            return Ok(JobOutcome {
                selected: None,
                discrepancy: None,
            })
        }
        SegmentSplit::Split { low, high } => (low, high),
    };
    let (va, vb) = (region_variance(b, &low, config), region_variance(b, &high, config));
    let picked = pick_outlier(
        va,
        vb,
        outside_variance,
        b.whole_variance,
        config.suspicion_threshold,
    );
    Ok(match picked {
        None => JobOutcome {
            selected: None,
            discrepancy: None,
        },
        Some(sel) => JobOutcome {
            selected: Some(match sel.candidate {
                Candidate::A => low,
                Candidate::B => high,
            }),
            discrepancy: Some(sel.discrepancy),
        },
    })
}

/// One evidence image: the producing segment and its selected pixels at
/// full resolution (`None` when nothing was selected).
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub segment_id: usize,
    pub selected: Option<Mask>,
}

fn heat_from_counts(counts: &[u32], segments: &SegmentMap, produced: &[u32], denominator: HeatDenominator) -> GrayImage {
    let per_segment = (BandSet::LEN * Filter::ALL.len()) as u32;
    let heat = counts
        .iter()
        .zip(segments.labels())
        .map(|(&n, &label)| {
            let denom = match denominator {
                HeatDenominator::Produced => produced[label],
                HeatDenominator::All => per_segment,
            };
            if n == 0 || denom == 0 {
                0.0
            } else {
                f64::from(n).min(f64::from(denom)) / f64::from(denom)
            }
        })
        .collect();
    GrayImage::new(segments.width(), segments.height(), heat).expect("counts match the segment map")
}

/// Per-pixel mean of evidence images within each segment.
pub fn aggregate_heat(segments: &SegmentMap, evidence: &[Evidence], denominator: HeatDenominator) -> Result<GrayImage> {
    let (w, h) = segments.dims();
    let mut counts = vec![0u32; w * h];
    let mut produced = vec![0u32; segments.len()];
    for e in evidence {
        if e.segment_id >= segments.len() {
            return Err(Error::InvalidArgument(format!("unknown segment {}", e.segment_id)));
        }
        produced[e.segment_id] += 1;
        if let Some(sel) = &e.selected {
            sel.check_same_dims((w, h))?;
            for (i, (&on, &label)) in sel.data().iter().zip(segments.labels()).enumerate() {
                if on && label == e.segment_id {
                    counts[i] += 1;
                }
            }
        }
    }
    Ok(heat_from_counts(&counts, segments, &produced, denominator))
}

/// Runs the pipeline. Without `segments` the image is segmented with
/// [`segment_image`].
pub fn detect(img: &Raster, config: &PipelineConfig, segments: Option<&SegmentMap>) -> Result<DetectionResult> {
    config.validate()?;
    let (w, h) = img.dims();
    if w < MIN_PIPELINE_SIDE || h < MIN_PIPELINE_SIDE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            reason: format!("both sides must be at least {MIN_PIPELINE_SIDE}"),
        });
    }
    let segments = match segments {
        Some(map) => {
            if map.dims() != (w, h) {
                return Err(Error::ShapeMismatch {
                    expected: (w, h),
                    actual: map.dims(),
                });
            }
            map.clone()
        }
        None => segment_image(img, config)?,
    };
    let gray = img.to_gray();
    let bands = level1_bands(&gray, config.band_part)?;
    let band_dims = bands.dims();

    let indices: Vec<usize> = (0..BandSet::LEN).collect();
    let band_ctx = par_map(&indices, |&i| band_context(i, &bands, config))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<usize> = segments.segment_ids().collect();
    let seg_ctx = par_map(&ids, |&id| -> Result<SegmentContext> {
        Ok(SegmentContext {
            id,
            full: segment_mask(&segments, id)?,
            band: segment_band_mask(&segments, id, band_dims)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    // Stage 1: gating and per-pair references, in (segment, band) order.
    let pairs: Vec<(usize, usize)> = (0..seg_ctx.len())
        .flat_map(|s| (0..BandSet::LEN).map(move |b| (s, b)))
        .collect();
    let states = par_map(&pairs, |&(s, b)| {
        pair_state(&band_ctx[b], &seg_ctx[s], config)
            .unwrap_or_else(|e| PairState::Skip(SkipReason::Failed { message: e.to_string() }))
    });

    // Stage 2: one job per ready pair and filter.
    let jobs: Vec<(usize, Filter)> = states
        .iter()
        .enumerate()
        .filter(|(_, st)| matches!(st, PairState::Ready { .. }))
        .flat_map(|(p, _)| Filter::ALL.into_iter().map(move |f| (p, f)))
        .collect();
    let outcomes = par_map(&jobs, |&(p, filter)| {
        let (s, b) = pairs[p];
        let PairState::Ready {
            outside_variance,
            wiener_noise,
        } = states[p]
        else {
            unreachable!("jobs are built from ready pairs")
        };
        run_job(&band_ctx[b], &seg_ctx[s], filter, outside_variance, wiener_noise, config)
    });

    // Deterministic reduction in job order.
    let mut skipped = Vec::new();
    for (p, st) in states.iter().enumerate() {
        if let PairState::Skip(reason) = st {
            let (s, b) = pairs[p];
            skipped.push(Skipped {
                segment_id: seg_ctx[s].id,
                band_index: band_ctx[b].band,
                part: band_ctx[b].part,
                filter: None,
                reason: reason.clone(),
            });
        }
    }
    let mut counts = vec![0u32; w * h];
    let mut produced = vec![0u32; seg_ctx.len()];
    let mut contributions = Vec::new();
    for (&(p, filter), outcome) in jobs.iter().zip(outcomes) {
        let (s, b) = pairs[p];
        let seg = &seg_ctx[s];
        let ctx = &band_ctx[b];
        match outcome {
            Err(e) => skipped.push(Skipped {
                segment_id: seg.id,
                band_index: ctx.band,
                part: ctx.part,
                filter: Some(filter),
                reason: SkipReason::Failed { message: e.to_string() },
            }),
            Ok(out) => {
                produced[s] += 1;
                let mut pixels = 0;
                if let Some(sel) = &out.selected {
                    let full = sel.upsample_nearest(w, h).and(&seg.full);
                    for (i, &on) in full.data().iter().enumerate() {
                        if on {
                            counts[i] += 1;
                            pixels += 1;
                        }
                    }
                }
                contributions.push(Contribution {
                    segment_id: seg.id,
                    band_index: ctx.band,
                    part: ctx.part,
                    filter,
                    selected_region_pixels: pixels,
                    discrepancy: out.discrepancy.filter(|_| pixels > 0),
                });
            }
        }
    }
    debug_assert!(band_ctx.iter().enumerate().all(|(i, b)| b.index == i));
    skipped.sort_by_key(|k| (k.segment_id, k.band_index, k.part.slot(), k.filter.map(filter_slot)));

    let heatmap = heat_from_counts(&counts, &segments, &produced, config.heat_denominator);
    let threshold = binarize_threshold(&heatmap, config);
    let floor = Mask::from_fn(w, h, |r, c| heatmap.get(r, c) > config.min_heat);
    let mask = binarize(&heatmap, config.binarize, config.fixed_threshold).and(&floor);
    Ok(DetectionResult {
        heatmap,
        mask,
        threshold,
        segments,
        contributions,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outlier_rule_arithmetic() {
        let s = pick_outlier(Some(100.0), Some(210.0), Some(205.0), Some(200.0), 0.4).unwrap();
        assert_eq!(s.candidate, Candidate::A);
        assert!((s.discrepancy - 105.0 / 205.0).abs() < 1e-12);
        assert!(pick_outlier(Some(200.0), Some(201.0), Some(200.0), Some(200.0), 0.4).is_none());
        assert!(pick_outlier(None, Some(50.0), Some(200.0), Some(200.0), 0.4).is_none());
    }

    #[test]
    fn outlier_falls_back_to_the_other_candidate() {
        let s = pick_outlier(Some(30.0), Some(100.0), None, Some(90.0), 0.4).unwrap();
        assert_eq!(s.candidate, Candidate::A);
        assert!((s.discrepancy - 0.7).abs() < 1e-12);
    }

    #[test]
    fn default_config_is_valid() {
        PipelineConfig::default().validate().unwrap();
        let bad = PipelineConfig {
            filter_window: 4,
            ..PipelineConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
    }
}
