//! Raster containers, image file I/O, grayscale conversion and patch
//! extraction.
//!
//! All rasters are row-major `f64` grids. Decoded 8-bit images keep their
//! native 0–255 scale; transforms may produce arbitrary reals.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::error::{Error, Result};

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Smallest side accepted at pipeline entry.
pub const MIN_PIPELINE_SIDE: usize = 16;

/// A single-channel real raster. Also used as the carrier for wavelet band
/// matrices and filter outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Value at a possibly out-of-range position, mirrored back into the raster.
    #[inline]
    pub fn get_reflected(&self, row: isize, col: isize) -> f64 {
        self.get(reflect_index(row, self.height), reflect_index(col, self.width))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Circular shift by `dy` rows and `dx` columns.
    pub fn roll(&self, dy: isize, dx: isize) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        Self::from_fn(self.width, self.height, |r, c| {
            let sr = (r as isize - dy).rem_euclid(h) as usize;
            let sc = (c as isize - dx).rem_euclid(w) as usize;
            self.get(sr, sc)
        })
    }

    /// Rounds and clamps to 8-bit, the scale used for PNG/PGM output.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    /// Linear stretch of the value range onto 0–255 for previews.
    pub fn to_u8_normalized(&self) -> Vec<u8> {
        let (lo, hi) = self.min_max();
        let span = hi - lo;
        self.data
            .iter()
            .map(|&v| {
                if span > 0.0 {
                    ((v - lo) / span * 255.0).round() as u8
                } else {
                    0
                }
            })
            .collect()
    }

    pub(crate) fn check_same_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::ShapeMismatch {
                expected: dims,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// A three-channel raster stored as separate planes.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    channels: [GrayImage; 3],
}

impl RgbImage {
    pub fn from_planes(r: GrayImage, g: GrayImage, b: GrayImage) -> Result<Self> {
        g.check_same_dims(r.dims())?;
        b.check_same_dims(r.dims())?;
        Ok(Self {
            channels: [r, g, b],
        })
    }

    pub fn from_interleaved(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::InvalidArgument(format!(
                "interleaved buffer of {} bytes does not match {width}x{height}x3",
                rgb.len()
            )));
        }
        let plane = |k: usize| GrayImage {
            width,
            height,
            data: rgb.chunks_exact(3).map(|px| f64::from(px[k])).collect(),
        };
        Ok(Self {
            channels: [plane(0), plane(1), plane(2)],
        })
    }

    pub fn width(&self) -> usize {
        self.channels[0].width
    }

    pub fn height(&self) -> usize {
        self.channels[0].height
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn channels(&self) -> &[GrayImage; 3] {
        &self.channels
    }

    pub fn channel(&self, k: usize) -> &GrayImage {
        &self.channels[k]
    }

    pub fn map_channels(&self, mut f: impl FnMut(&GrayImage) -> GrayImage) -> Self {
        Self {
            channels: [
                f(&self.channels[0]),
                f(&self.channels[1]),
                f(&self.channels[2]),
            ],
        }
    }

    pub fn to_interleaved_u8(&self) -> Vec<u8> {
        let planes: Vec<Vec<u8>> = self.channels.iter().map(GrayImage::to_u8).collect();
        (0..self.width() * self.height())
            .flat_map(|i| [planes[0][i], planes[1][i], planes[2][i]])
            .collect()
    }
}

/// A decoded image: either single-channel or three-channel.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Raster {
    pub fn width(&self) -> usize {
        self.dims().0
    }

    pub fn height(&self) -> usize {
        self.dims().1
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Raster::Gray(g) => g.dims(),
            Raster::Rgb(c) => c.dims(),
        }
    }

    /// Channel planes (one for gray, three for color).
    pub fn planes(&self) -> Vec<&GrayImage> {
        match self {
            Raster::Gray(g) => vec![g],
            Raster::Rgb(c) => c.channels().iter().collect(),
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        match self {
            Raster::Gray(g) => g.clone(),
            Raster::Rgb(c) => luma(c),
        }
    }

    pub fn map_planes(&self, mut f: impl FnMut(&GrayImage) -> GrayImage) -> Self {
        match self {
            Raster::Gray(g) => Raster::Gray(f(g)),
            Raster::Rgb(c) => Raster::Rgb(c.map_channels(f)),
        }
    }
}

impl From<GrayImage> for Raster {
    fn from(g: GrayImage) -> Self {
        Raster::Gray(g)
    }
}

impl From<RgbImage> for Raster {
    fn from(c: RgbImage) -> Self {
        Raster::Rgb(c)
    }
}

/// Boolean raster. `true` marks foreground (region member, tampered pixel).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "mask length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Filled disk, the usual synthetic tamper region.
    pub fn disk(width: usize, height: usize, center: (f64, f64), radius: f64) -> Self {
        let (cy, cx) = center;
        Self::from_fn(width, height, |r, c| {
            let dy = r as f64 - cy;
            let dx = c as f64 - cx;
            dy * dy + dx * dx <= radius * radius
        })
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

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.data.len() as f64
    }

    pub fn and(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && !b)
    }

    pub fn not(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| !b).collect(),
        }
    }

    fn zip(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.dims(), other.dims(), "mask dimensions differ");
        Mask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Halves the resolution (rounding up) by 2×2 majority vote; ties vote
    /// true. Missing samples past an odd edge repeat the last row/column.
    pub fn downsample_majority(&self) -> Mask {
        let w2 = self.width.div_ceil(2);
        let h2 = self.height.div_ceil(2);
        Mask::from_fn(w2, h2, |r, c| {
            let mut votes = 0;
            for dr in 0..2 {
                for dc in 0..2 {
                    let sr = (2 * r + dr).min(self.height - 1);
                    let sc = (2 * c + dc).min(self.width - 1);
                    votes += usize::from(self.get(sr, sc));
                }
            }
            votes >= 2
        })
    }

    /// 2× nearest-neighbour upsampling cropped to `width`×`height`.
    pub fn upsample_nearest(&self, width: usize, height: usize) -> Mask {
        Mask::from_fn(width, height, |r, c| {
            self.get((r / 2).min(self.height - 1), (c / 2).min(self.width - 1))
        })
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }

    pub fn from_gray(img: &GrayImage, threshold: f64) -> Mask {
        Mask {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| v >= threshold).collect(),
        }
    }

    pub(crate) fn check_same_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::ShapeMismatch {
                expected: dims,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Mirror an index into `0..n` without repeating the edge sample
/// (`… 2 1 | 0 1 2 … n-1 | n-2 …`).
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Collection of flattened square patches. Patch `i` occupies
/// `data[i*d .. (i+1)*d]` with `d = patch_size²`, row-major within the patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub patch_size: usize,
    pub stride: usize,
    data: Vec<f64>,
    origins: Vec<(isize, isize)>,
}

impl PatchSet {
    /// Builds a patch set from explicit vectors; every vector must hold
    /// `patch_size²` values.
    pub fn from_vectors(patch_size: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let d = patch_size * patch_size;
        if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
            return Err(Error::InvalidArgument(format!(
                "patch vector of length {} for patch size {patch_size}",
                bad.len()
            )));
        }
        Ok(Self {
            patch_size,
            stride: 1,
            data: vectors.concat(),
            origins: vec![(0, 0); vectors.len()],
        })
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.patch_size * self.patch_size
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn patches(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim().max(1))
    }

    /// Top-left corners in source coordinates; negative when the patch
    /// starts in the padding.
    pub fn origins(&self) -> &[(isize, isize)] {
        &self.origins
    }

    /// All patch values, patch-major.
    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Reflectively padded copy of a raster or mask, used for patch walks.
pub(crate) struct Padded<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Padded<T> {
    fn build(width: usize, height: usize, padding: usize, get: impl Fn(usize, usize) -> T) -> Self {
        let pw = width + 2 * padding;
        let ph = height + 2 * padding;
        let p = padding as isize;
        let mut data = Vec::with_capacity(pw * ph);
        for r in 0..ph {
            let sr = reflect_index(r as isize - p, height);
            for c in 0..pw {
                let sc = reflect_index(c as isize - p, width);
                data.push(get(sr, sc));
            }
        }
        Self {
            width: pw,
            height: ph,
            data,
        }
    }
}

pub(crate) fn pad_image(img: &GrayImage, padding: usize) -> Padded<f64> {
    Padded::build(img.width, img.height, padding, |r, c| img.get(r, c))
}

/// Top-left corners (in padded coordinates) of every `patch_size` window,
/// stepped by `stride`, whose footprint lies inside the padded raster and,
/// when a region is given, entirely inside the region.
pub(crate) fn valid_origins(
    dims: (usize, usize),
    patch_size: usize,
    stride: usize,
    region: Option<&Mask>,
    padding: usize,
) -> Vec<(usize, usize)> {
    let (width, height) = dims;
    let pw = width + 2 * padding;
    let ph = height + 2 * padding;
    if patch_size > pw || patch_size > ph {
        return Vec::new();
    }
    let rows = (0..=ph - patch_size).step_by(stride);
    let cols: Vec<usize> = (0..=pw - patch_size).step_by(stride).collect();
    match region {
        None => rows
            .flat_map(|r| cols.iter().map(move |&c| (r, c)))
            .collect(),
        Some(mask) => {
            let padded = Padded::build(width, height, padding, |r, c| mask.get(r, c));
            let integral = IntegralCount::new(&padded);
            let full = patch_size * patch_size;
            rows.flat_map(|r| cols.iter().map(move |&c| (r, c)))
                .filter(|&(r, c)| integral.count(r, c, patch_size) == full)
                .collect()
        }
    }
}

/// Origins (padded coordinates, stride 1) of every window that overlaps
/// `region` in at least one pixel.
pub(crate) fn touching_origins(region: &Mask, patch_size: usize, padding: usize) -> Vec<(usize, usize)> {
    let (width, height) = region.dims();
    let padded = Padded::build(width, height, padding, |r, c| region.get(r, c));
    if patch_size > padded.width || patch_size > padded.height {
        return Vec::new();
    }
    let integral = IntegralCount::new(&padded);
    let mut out = Vec::new();
    for r in 0..=padded.height - patch_size {
        for c in 0..=padded.width - patch_size {
            if integral.count(r, c, patch_size) > 0 {
                out.push((r, c));
            }
        }
    }
    out
}

/// Summed-area table over a boolean raster.
struct IntegralCount {
    stride: usize,
    table: Vec<usize>,
}

impl IntegralCount {
    fn new(mask: &Padded<bool>) -> Self {
        let stride = mask.width + 1;
        let mut table = vec![0usize; stride * (mask.height + 1)];
        for r in 0..mask.height {
            let mut run = 0;
            for c in 0..mask.width {
                run += usize::from(mask.data[r * mask.width + c]);
                table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + run;
            }
        }
        Self { stride, table }
    }

    fn count(&self, r: usize, c: usize, size: usize) -> usize {
        let s = self.stride;
        self.table[(r + size) * s + c + size] + self.table[r * s + c]
            - self.table[r * s + c + size]
            - self.table[(r + size) * s + c]
    }
}

/// Collects square patches from `img`.
///
/// With `padding > 0` the raster is first mirrored outward by that many
/// pixels. When `region` is given, only patches whose whole footprint lies
/// inside the region are kept.
pub fn extract_patches(
    img: &GrayImage,
    patch_size: usize,
    stride: usize,
    region: Option<&Mask>,
    padding: usize,
) -> Result<PatchSet> {
    if patch_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "patch size must be at least 2, got {patch_size}"
        )));
    }
    if stride < 1 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if let Some(mask) = region {
        mask.check_same_dims(img.dims())?;
    }
    let origins = valid_origins(img.dims(), patch_size, stride, region, padding);
    if origins.is_empty() {
        return Err(Error::EmptyPatchSet);
    }
    let padded = pad_image(img, padding);
    let data = gather_patches(&padded, &origins, patch_size);
    let p = padding as isize;
    Ok(PatchSet {
        patch_size,
        stride,
        data,
        origins: origins
            .iter()
            .map(|&(r, c)| (r as isize - p, c as isize - p))
            .collect(),
    })
}

pub(crate) fn gather_patches(
    padded: &Padded<f64>,
    origins: &[(usize, usize)],
    patch_size: usize,
) -> Vec<f64> {
    let mut data = Vec::with_capacity(origins.len() * patch_size * patch_size);
    for &(r, c) in origins {
        for dr in 0..patch_size {
            let start = (r + dr) * padded.width + c;
            data.extend_from_slice(&padded.data[start..start + patch_size]);
        }
    }
    data
}

/// BT.601 luma of a color raster.
pub fn to_grayscale(rgb: &RgbImage) -> Result<GrayImage> {
    let [r, g, b] = rgb.channels();
    g.check_same_dims(r.dims())?;
    b.check_same_dims(r.dims())?;
    Ok(luma(rgb))
}

fn luma(rgb: &RgbImage) -> GrayImage {
    let [r, g, b] = rgb.channels();
    let [wr, wg, wb] = LUMA_WEIGHTS;
    GrayImage {
        width: r.width,
        height: r.height,
        data: r
            .data
            .iter()
            .zip(&g.data)
            .zip(&b.data)
            .map(|((&r, &g), &b)| wr * r + wg * g + wb * b)
            .collect(),
    }
}

/// Decodes a PNG or binary PGM file. Color images come back as
/// [`Raster::Rgb`], everything else as [`Raster::Gray`]. Alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let dynamic = decode_dynamic(path)?;
    let (width, height) = (dynamic.width() as usize, dynamic.height() as usize);
    if dynamic.color().has_color() {
        let rgb = dynamic.to_rgb8();
        Ok(Raster::Rgb(RgbImage::from_interleaved(width, height, rgb.as_raw())?))
    } else {
        let luma = dynamic.to_luma8();
        Ok(Raster::Gray(GrayImage {
            width,
            height,
            data: luma.as_raw().iter().map(|&v| f64::from(v)).collect(),
        }))
    }
}

pub(crate) fn decode_dynamic(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::decode(path, e))
}

/// Loads a single-channel mask; pixels ≥ 128 are foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let gray = load_image(path)?.to_gray();
    Ok(Mask::from_gray(&gray, 128.0))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_png(width: usize, height: usize, pixels: &[u8], color: image::ExtendedColorType) -> Vec<u8> {
    let mut out = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut out);
    image::ImageEncoder::write_image(encoder, pixels, width as u32, height as u32, color)
        .expect("in-memory PNG encoding cannot fail for consistent buffers");
    out
}

/// 8-bit grayscale PNG (values rounded and clamped to 0–255).
pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_png(img.width, img.height, &img.to_u8(), image::ExtendedColorType::L8);
    write_bytes(path.as_ref(), &bytes)
}

pub fn save_rgb_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_png(
        img.width(),
        img.height(),
        &img.to_interleaved_u8(),
        image::ExtendedColorType::Rgb8,
    );
    write_bytes(path.as_ref(), &bytes)
}

pub fn save_raster_png(img: &Raster, path: impl AsRef<Path>) -> Result<()> {
    match img {
        Raster::Gray(g) => save_gray_png(g, path),
        Raster::Rgb(c) => save_rgb_png(c, path),
    }
}

/// Min–max stretched preview of an arbitrary real matrix.
pub fn save_preview_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_png(
        img.width,
        img.height,
        &img.to_u8_normalized(),
        image::ExtendedColorType::L8,
    );
    write_bytes(path.as_ref(), &bytes)
}

/// 0 = background, 255 = foreground.
pub fn save_mask_png(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_png(mask.width, mask.height, &mask.to_u8(), image::ExtendedColorType::L8);
    write_bytes(path.as_ref(), &bytes)
}

/// Binary (P5) PGM with maxval 255.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::with_capacity(img.data.len() + 32);
    write!(bytes, "P5\n{} {}\n255\n", img.width, img.height).expect("write to Vec");
    bytes.extend_from_slice(&img.to_u8());
    write_bytes(path.as_ref(), &bytes)
}
