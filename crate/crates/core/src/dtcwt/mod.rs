//! Dual-tree complex wavelet transform (2-D).
//!
//! Level 1 uses the near-symmetric biorthogonal pair, deeper levels the
//! quarter-shift pair. Each level yields six complex subbands oriented at
//! roughly +15, +45, +75, -75, -45 and -15 degrees (indices 0..6).

mod filters;
mod lowlevel;

pub use filters::{FilterBank, FilterPair, QshiftPairs, BIORT_NAME, QSHIFT_NAME};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::GrayImage;
use lowlevel::{c2q, coldfilt, colfilter, colifilt, q2c, CMat, Mat};

/// Smallest side accepted as input to any decomposition level.
pub const MIN_LEVEL_INPUT: usize = 8;

/// Number of oriented subbands per level.
pub const ORIENTATIONS: usize = 6;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBand {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexBand {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn real(&self) -> GrayImage {
        self.project(|c| c.re)
    }

    pub fn imag(&self) -> GrayImage {
        self.project(|c| c.im)
    }

    pub fn abs(&self) -> GrayImage {
        self.project(|c| c.norm())
    }

    fn project(&self, f: impl Fn(Complex64) -> f64) -> GrayImage {
        GrayImage::new(self.width, self.height, self.data.iter().map(|&c| f(c)).collect())
            .expect("consistent band dims")
    }

    fn from_cmat(m: CMat) -> Self {
        Self {
            width: m.cols,
            height: m.rows,
            data: m.data,
        }
    }

    fn to_cmat(&self) -> CMat {
        CMat {
            rows: self.height,
            cols: self.width,
            data: self.data.clone(),
        }
    }
}

/// Multi-level transform output.
#[derive(Debug, Clone, PartialEq)]
pub struct DtcwtPyramid {
    pub levels: Vec<[ComplexBand; ORIENTATIONS]>,
    pub lowpass: GrayImage,
    /// Width and height of the transformed image before even extension.
    pub original_dims: (usize, usize),
}

impl DtcwtPyramid {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, level: usize) -> &[ComplexBand; ORIENTATIONS] {
        &self.levels[level - 1]
    }

    /// Same geometry, every coefficient zero.
    pub fn zeroed(&self) -> Self {
        Self {
            levels: self
                .levels
                .iter()
                .map(|bands| {
                    std::array::from_fn(|k| ComplexBand::zeros(bands[k].width, bands[k].height))
                })
                .collect(),
            lowpass: GrayImage::zeros(self.lowpass.width(), self.lowpass.height()),
            original_dims: self.original_dims,
        }
    }
}

fn pack(pair: (CMat, CMat), bands: &mut [Option<ComplexBand>; ORIENTATIONS], idx: (usize, usize)) {
    bands[idx.0] = Some(ComplexBand::from_cmat(pair.0));
    bands[idx.1] = Some(ComplexBand::from_cmat(pair.1));
}

fn too_small(width: usize, height: usize, level: usize, side: usize) -> Error {
    Error::ImageTooSmall {
        width,
        height,
        reason: format!(
            "level {level} input side {side} is below the minimum of {MIN_LEVEL_INPUT}"
        ),
    }
}

/// Forward transform with the default filter bank.
pub fn forward(img: &GrayImage, levels: usize) -> Result<DtcwtPyramid> {
    forward_with(&FilterBank::kingsbury(), img, levels)
}

pub fn forward_with(bank: &FilterBank, img: &GrayImage, levels: usize) -> Result<DtcwtPyramid> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    let (w, h) = img.dims();
    let mut x = Mat::from_image(img);
    x = x.extend_last(h % 2 == 1, w % 2 == 1);
    if x.rows < MIN_LEVEL_INPUT || x.cols < MIN_LEVEL_INPUT {
        return Err(too_small(w, h, 1, x.rows.min(x.cols)));
    }

    let h0o = &bank.level1_analysis.low;
    let h1o = &bank.level1_analysis.high;
    let mut out_levels = Vec::with_capacity(levels);

    let lo = colfilter(&x, h0o).transpose();
    let hi = colfilter(&x, h1o).transpose();
    let mut lolo = colfilter(&lo, h0o).transpose();
    let mut bands: [Option<ComplexBand>; ORIENTATIONS] = Default::default();
    pack(q2c(&colfilter(&hi, h0o).transpose()), &mut bands, (0, 5));
    pack(q2c(&colfilter(&lo, h1o).transpose()), &mut bands, (2, 3));
    pack(q2c(&colfilter(&hi, h1o).transpose()), &mut bands, (1, 4));
    out_levels.push(bands.map(|b| b.expect("all orientations filled")));

    let qa = &bank.qshift_analysis;
    let (h0a, h1a) = (&qa.tree_a.low, &qa.tree_a.high);
    let (h0b, h1b) = (&qa.tree_b.low, &qa.tree_b.high);
    for level in 2..=levels {
        lolo = lolo.extend_both_ends(lolo.rows % 4 != 0, lolo.cols % 4 != 0);
        if lolo.rows.min(lolo.cols) < MIN_LEVEL_INPUT {
            return Err(too_small(w, h, level, lolo.rows.min(lolo.cols)));
        }
        let lo = coldfilt(&lolo, h0b, h0a).transpose();
        let hi = coldfilt(&lolo, h1b, h1a).transpose();
        lolo = coldfilt(&lo, h0b, h0a).transpose();
        let mut bands: [Option<ComplexBand>; ORIENTATIONS] = Default::default();
        pack(q2c(&coldfilt(&hi, h0b, h0a).transpose()), &mut bands, (0, 5));
        pack(q2c(&coldfilt(&lo, h1b, h1a).transpose()), &mut bands, (2, 3));
        pack(q2c(&coldfilt(&hi, h1b, h1a).transpose()), &mut bands, (1, 4));
        out_levels.push(bands.map(|b| b.expect("all orientations filled")));
    }

    Ok(DtcwtPyramid {
        levels: out_levels,
        lowpass: lolo.into_image(),
        original_dims: (w, h),
    })
}

/// Inverse transform with the default filter bank.
pub fn inverse(pyramid: &DtcwtPyramid) -> Result<GrayImage> {
    inverse_with(&FilterBank::kingsbury(), pyramid)
}

fn check_pyramid(p: &DtcwtPyramid) -> Result<()> {
    if p.levels.is_empty() {
        return Err(Error::InvalidArgument("pyramid has no levels".into()));
    }
    let (w, h) = p.original_dims;
    let mut expect = ((w + 1) / 2 * 2, (h + 1) / 2 * 2);
    if p.lowpass.dims() != expect && p.levels.len() == 1 {
        return Err(Error::ShapeMismatch {
            expected: expect,
            actual: p.lowpass.dims(),
        });
    }
    for (i, bands) in p.levels.iter().enumerate() {
        if i > 0 {
            expect = (expect.0.div_ceil(4) * 4 / 2, expect.1.div_ceil(4) * 4 / 2);
        }
        let sub = (expect.0 / 2, expect.1 / 2);
        for b in bands {
            if b.dims() != sub {
                return Err(Error::ShapeMismatch {
                    expected: sub,
                    actual: b.dims(),
                });
            }
        }
    }
    if p.levels.len() > 1 && p.lowpass.dims() != expect {
        return Err(Error::ShapeMismatch {
            expected: expect,
            actual: p.lowpass.dims(),
        });
    }
    Ok(())
}

pub fn inverse_with(bank: &FilterBank, pyramid: &DtcwtPyramid) -> Result<GrayImage> {
    check_pyramid(pyramid)?;
    let qs = &bank.qshift_synthesis;
    let (g0a, g1a) = (&qs.tree_a.low, &qs.tree_a.high);
    let (g0b, g1b) = (&qs.tree_b.low, &qs.tree_b.high);
    let mut z = Mat::from_image(&pyramid.lowpass);
    let unpack = |bands: &[ComplexBand; ORIENTATIONS], i: usize, j: usize| {
        c2q(&bands[i].to_cmat(), &bands[j].to_cmat())
    };

    for level in (2..=pyramid.num_levels()).rev() {
        let bands = pyramid.level(level);
        let lh = unpack(bands, 0, 5);
        let hl = unpack(bands, 2, 3);
        let hh = unpack(bands, 1, 4);
        let y1 = colifilt(&z, g0b, g0a).add(&colifilt(&lh, g1b, g1a));
        let y2 = colifilt(&hl, g0b, g0a).add(&colifilt(&hh, g1b, g1a));
        z = colifilt(&y1.transpose(), g0b, g0a)
            .add(&colifilt(&y2.transpose(), g1b, g1a))
            .transpose();
        let finer = &pyramid.level(level - 1)[0];
        z = z.crop_both_ends(z.rows != 2 * finer.height(), z.cols != 2 * finer.width());
    }

    let g0o = &bank.level1_synthesis.low;
    let g1o = &bank.level1_synthesis.high;
    let bands = pyramid.level(1);
    let lh = unpack(bands, 0, 5);
    let hl = unpack(bands, 2, 3);
    let hh = unpack(bands, 1, 4);
    let y1 = colfilter(&z, g0o).add(&colfilter(&lh, g1o));
    let y2 = colfilter(&hl, g0o).add(&colfilter(&hh, g1o));
    z = colfilter(&y1.transpose(), g0o)
        .add(&colfilter(&y2.transpose(), g1o))
        .transpose();
    let (w, h) = pyramid.original_dims;
    Ok(z.crop(h, w).into_image())
}

/// Which real quantity occupies the second slot of each band pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandLayout {
    #[default]
    RealImag,
    RealAbs,
}

/// Part of a complex subband viewed as a real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Real,
    Imag,
    Abs,
}

impl Part {
    /// 0 for the real slot, 1 for the second slot.
    pub fn slot(self) -> usize {
        match self {
            Part::Real => 0,
            Part::Imag | Part::Abs => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Part::Real => "real",
            Part::Imag => "imag",
            Part::Abs => "abs",
        }
    }
}

impl std::fmt::Display for Part {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The 12 real level-1 matrices, ordered band 0 real, band 0 imag (or abs),
/// band 1 real, and so on. Index `2 * k + slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    bands: Vec<GrayImage>,
    layout: BandLayout,
    pub source_level: usize,
}

impl BandSet {
    pub const LEN: usize = 2 * ORIENTATIONS;

    pub fn layout(&self) -> BandLayout {
        self.layout
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bands[0].dims()
    }

    pub fn by_index(&self, index: usize) -> &GrayImage {
        &self.bands[index]
    }

    pub fn get(&self, band: usize, part: Part) -> &GrayImage {
        &self.bands[2 * band + part.slot()]
    }

    /// (band, part) for a flat index.
    pub fn describe(&self, index: usize) -> (usize, Part) {
        let part = match (index % 2, self.layout) {
            (0, _) => Part::Real,
            (_, BandLayout::RealImag) => Part::Imag,
            (_, BandLayout::RealAbs) => Part::Abs,
        };
        (index / 2, part)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Part, &GrayImage)> {
        self.bands.iter().enumerate().map(|(i, b)| {
            let (k, p) = self.describe(i);
            (k, p, b)
        })
    }
}

/// Splits level 1 of `pyramid` into real matrices.
pub fn split_bands(pyramid: &DtcwtPyramid, layout: BandLayout) -> BandSet {
    let level = pyramid.level(1);
    let mut bands = Vec::with_capacity(BandSet::LEN);
    for band in level {
        bands.push(band.real());
        bands.push(match layout {
            BandLayout::RealImag => band.imag(),
            BandLayout::RealAbs => band.abs(),
        });
    }
    BandSet {
        bands,
        layout,
        source_level: 1,
    }
}

/// Level-1 real/imaginary bands of `img`.
pub fn level1_bands(img: &GrayImage, layout: BandLayout) -> Result<BandSet> {
    Ok(split_bands(&forward(img, 1)?, layout))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |r, c| ((r * 31 + c * 17) % 23) as f64 - 11.0)
    }

    #[test]
    fn level_shapes_follow_ceil_halving() {
        for (w, h) in [(64, 64), (33, 47), (50, 38)] {
            let p = forward(&ramp(w, h), 3).unwrap();
            let mut ew = w.div_ceil(2);
            let mut eh = h.div_ceil(2);
            for l in 1..=3 {
                assert_eq!(p.level(l)[0].dims(), (ew, eh), "{w}x{h} level {l}");
                ew = ew.div_ceil(2);
                eh = eh.div_ceil(2);
            }
        }
    }

    #[test]
    fn odd_sizes_reconstruct() {
        let x = ramp(37, 29);
        let back = inverse(&forward(&x, 2).unwrap()).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn tiny_input_is_rejected() {
        assert!(matches!(
            forward(&ramp(6, 20), 1),
            Err(Error::ImageTooSmall { .. })
        ));
        assert!(matches!(
            forward(&ramp(16, 16), 4),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn mismatched_pyramid_is_rejected() {
        let mut p = forward(&ramp(32, 32), 2).unwrap();
        p.levels[1][3] = ComplexBand::zeros(3, 3);
        assert!(matches!(inverse(&p), Err(Error::ShapeMismatch { .. })));
    }
}
