//! Band normalization, relevance gating and enhancement filters.

use serde::{Deserialize, Serialize};

use crate::dtcwt::Part;
use crate::error::{Error, Result};
use crate::raster::{reflect_index, valid_origins, GrayImage, Mask};

const CV_EPSILON: f64 = 1e-9;

/// Enhancement filter applied to a normalized band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Filter {
    Median,
    Smfr,
    Wiener,
    Mmwf,
}

impl Filter {
    pub const ALL: [Filter; 4] = [Filter::Median, Filter::Smfr, Filter::Wiener, Filter::Mmwf];

    pub fn name(self) -> &'static str {
        match self {
            Filter::Median => "median",
            Filter::Smfr => "smfr",
            Filter::Wiener => "wiener",
            Filter::Mmwf => "mmwf",
        }
    }

    /// `noise_var` only affects the Wiener filter.
    pub fn apply(self, m: &GrayImage, k: usize, noise_var: Option<f64>) -> Result<GrayImage> {
        match self {
            Filter::Median => median_filter(m, k),
            Filter::Smfr => smfr(m, k),
            Filter::Wiener => wiener_filter(m, k, noise_var),
            Filter::Mmwf => mmwf(m, k),
        }
    }
}

impl std::fmt::Display for Filter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Filter::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown filter `{s}`")))
    }
}

/// A filtered band tied to the segment it was produced for.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedBand {
    pub data: GrayImage,
    pub band_index: usize,
    pub part: Part,
    pub method: Filter,
    pub segment_id: usize,
}

/// Symmetric log followed by a population z-score. A constant band maps
/// to zeros.
pub fn normalize(band: &GrayImage, linthresh: f64) -> Result<GrayImage> {
    if !(linthresh > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "linthresh must be positive, got {linthresh}"
        )));
    }
    let y = band.map(|x| x.signum() * (x.abs() / linthresh).ln_1p());
    let n = y.data().len() as f64;
    // Offset by the first sample so constant input yields exactly zero spread.
    let y0 = y.data()[0];
    let mean = y0 + y.data().iter().map(|v| v - y0).sum::<f64>() / n;
    let var = y.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || !std.is_finite() {
        return Ok(GrayImage::zeros(band.width(), band.height()));
    }
    Ok(y.map(|v| (v - mean) / std))
}

/// Whether the band varies enough inside `segment` to be worth analyzing:
/// the coefficient of variation of the means of all stride-1 patches lying
/// entirely inside the segment must exceed `tolerance`.
pub fn band_relevance(band: &GrayImage, segment: &Mask, patch_size: usize, tolerance: f64) -> Result<bool> {
    Ok(patch_mean_cv(band, segment, patch_size)?.is_some_and(|cv| cv > tolerance))
}

/// Coefficient of variation of in-segment patch means, or `None` with
/// fewer than two patches.
pub fn patch_mean_cv(band: &GrayImage, segment: &Mask, patch_size: usize) -> Result<Option<f64>> {
    if patch_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "patch size must be at least 2, got {patch_size}"
        )));
    }
    segment.check_same_dims(band.dims())?;
    let origins = valid_origins(band.dims(), patch_size, 1, Some(segment), 0);
    if origins.len() < 2 {
        return Ok(None);
    }
    let sums = IntegralSum::new(band);
    let area = (patch_size * patch_size) as f64;
    let means: Vec<f64> = origins
        .iter()
        .map(|&(r, c)| sums.window(r, c, patch_size) / area)
        .collect();
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let std = (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Some(std / (mean.abs() + CV_EPSILON)))
}

struct IntegralSum {
    stride: usize,
    table: Vec<f64>,
}

impl IntegralSum {
    fn new(img: &GrayImage) -> Self {
        let (w, h) = img.dims();
        let stride = w + 1;
        let mut table = vec![0.0; stride * (h + 1)];
        for r in 0..h {
            let mut run = 0.0;
            for c in 0..w {
                run += img.get(r, c);
                table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + run;
            }
        }
        Self { stride, table }
    }

    fn window(&self, r: usize, c: usize, size: usize) -> f64 {
        let s = self.stride;
        self.table[(r + size) * s + c + size] - self.table[r * s + c + size]
            - self.table[(r + size) * s + c]
            + self.table[r * s + c]
    }
}

fn check_window(k: usize) -> Result<()> {
    if k < 3 || k % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "filter window must be odd and at least 3, got {k}"
        )));
    }
    Ok(())
}

/// Collects the k×k neighbourhood of every pixel (mirrored at borders)
/// and maps it to one output value.
fn window_map(m: &GrayImage, k: usize, mut f: impl FnMut(&mut [f64], f64) -> f64) -> GrayImage {
    let (w, h) = m.dims();
    let half = (k / 2) as isize;
    let rows: Vec<Vec<usize>> = (0..h)
        .map(|r| (-half..=half).map(|d| reflect_index(r as isize + d, h)).collect())
        .collect();
    let cols: Vec<Vec<usize>> = (0..w)
        .map(|c| (-half..=half).map(|d| reflect_index(c as isize + d, w)).collect())
        .collect();
    let mut buf = vec![0.0; k * k];
    let mut out = Vec::with_capacity(w * h);
    for (r, rr) in rows.iter().enumerate() {
        for (c, cc) in cols.iter().enumerate() {
            let mut i = 0;
            for &sr in rr {
                let row = &m.data()[sr * w..(sr + 1) * w];
                for &sc in cc {
                    buf[i] = row[sc];
                    i += 1;
                }
            }
            out.push(f(&mut buf, m.get(r, c)));
        }
    }
    GrayImage::new(w, h, out).expect("same dims")
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// k×k median with mirrored borders.
pub fn median_filter(m: &GrayImage, k: usize) -> Result<GrayImage> {
    check_window(k)?;
    Ok(window_map(m, k, |buf, _| median_in_place(buf)))
}

/// Small median filter residue: d1 − median(d1) with d1 = m − median(m).
pub fn smfr(m: &GrayImage, k: usize) -> Result<GrayImage> {
    let first = median_filter(m, k)?;
    let d1 = GrayImage::new(
        m.width(),
        m.height(),
        m.data().iter().zip(first.data()).map(|(a, b)| a - b).collect(),
    )?;
    let d2 = median_filter(&d1, k)?;
    GrayImage::new(
        m.width(),
        m.height(),
        d1.data().iter().zip(d2.data()).map(|(a, b)| a - b).collect(),
    )
}

/// Local mean and population variance of every k×k window. Deviations are
/// taken from the centre pixel so that flat windows come out exact.
fn local_stats(m: &GrayImage, k: usize) -> (GrayImage, GrayImage) {
    let area = (k * k) as f64;
    let mut variances = Vec::with_capacity(m.data().len());
    let means = window_map(m, k, |buf, centre| {
        let offset = buf.iter().map(|v| v - centre).sum::<f64>() / area;
        let var = buf.iter().map(|v| (v - centre - offset).powi(2)).sum::<f64>() / area;
        variances.push(var);
        centre + offset
    });
    let vars = GrayImage::new(m.width(), m.height(), variances).expect("same dims");
    (means, vars)
}

/// Locally adaptive Wiener filter. Without `noise_var` the noise power is
/// the mean of all local variances.
pub fn wiener_filter(m: &GrayImage, k: usize, noise_var: Option<f64>) -> Result<GrayImage> {
    check_window(k)?;
    if let Some(v) = noise_var {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance must be non-negative, got {v}")));
        }
    }
    let (mu, var) = local_stats(m, k);
    let v2 = noise_var.unwrap_or_else(|| var.mean());
    let out = m
        .data()
        .iter()
        .zip(mu.data())
        .zip(var.data())
        .map(|((&x, &mu), &s2)| {
            if s2 <= 0.0 {
                return mu;
            }
            let gain = ((s2 - v2) / s2).clamp(0.0, 1.0);
            if gain == 1.0 {
                x
            } else {
                mu + gain * (x - mu)
            }
        })
        .collect();
    GrayImage::new(m.width(), m.height(), out)
}

/// Median pre-filter followed by the plug-in Wiener filter.
pub fn mmwf(m: &GrayImage, k: usize) -> Result<GrayImage> {
    wiener_filter(&median_filter(m, k)?, k, None)
}

/// `ln(floor + median |m|)` over k×k windows (mirrored borders). Unlike a
/// windowed mean, the median switches level halfway across a step between
/// a quiet and a busy area.
pub fn local_log_magnitude(m: &GrayImage, k: usize, floor: f64) -> Result<GrayImage> {
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument(format!("floor must be positive, got {floor}")));
    }
    Ok(median_filter(&m.map(f64::abs), k)?.map(|v| (floor + v).ln()))
}
