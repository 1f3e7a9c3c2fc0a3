//! Browser bindings: generate a synthetic forgery, run the detector on any
//! image, and preview individual wavelet bands.

use inpaint_forensics::detector::PipelineConfig;
use inpaint_forensics::dtcwt::{level1_bands, BandLayout, BandSet};
use inpaint_forensics::evalkit::{clean_texture, pixel_metrics, random_disk, synth_forgery};
use inpaint_forensics::raster::RgbImage;
use inpaint_forensics::{detect, GrayImage, Mask, Raster, SynthMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const MAX_SIDE: usize = 1024;

fn rgba_to_raster(rgba: &[u8], width: usize, height: usize) -> Result<Raster, String> {
    if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
        return Err(format!("image sides must lie in 1..={MAX_SIDE}, got {width}x{height}"));
    }
    if rgba.len() != width * height * 4 {
        return Err(format!("expected {} RGBA bytes, got {}", width * height * 4, rgba.len()));
    }
    let rgb: Vec<u8> = rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
    let img = RgbImage::from_interleaved(width, height, &rgb).map_err(|e| e.to_string())?;
    let gray = rgb.chunks_exact(3).all(|p| p[0] == p[1] && p[1] == p[2]);
    Ok(if gray { Raster::Gray(img.channel(0).clone()) } else { Raster::Rgb(img) })
}

fn mask_bytes(mask: &Mask) -> Vec<u8> {
    mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect()
}

fn mask_from_bytes(bytes: &[u8], width: usize, height: usize) -> Result<Mask, String> {
    Mask::new(width, height, bytes.iter().map(|&b| b > 127).collect()).map_err(|e| e.to_string())
}

/// A generated forgery: 8-bit gray pixels and the tampered region.
#[wasm_bindgen]
pub struct Sample {
    size: usize,
    image: Vec<u8>,
    truth: Vec<u8>,
}

#[wasm_bindgen]
impl Sample {
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.size
    }

    #[wasm_bindgen(getter)]
    pub fn image(&self) -> Vec<u8> {
        self.image.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<u8> {
        self.truth.clone()
    }
}

/// Textured `size`² image with a disk forged by `mode` ("denoise", "blur"
/// or "telea-fill") after adding noise of standard deviation `sigma`.
#[wasm_bindgen]
pub fn synthesize(size: usize, mode: &str, sigma: f64, seed: u32) -> Result<Sample, String> {
    if !(64..=MAX_SIDE).contains(&size) {
        return Err(format!("size must lie in 64..={MAX_SIDE}"));
    }
    let mode: SynthMode = mode.parse().map_err(|e: inpaint_forensics::Error| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from(seed));
    let clean = clean_texture(size, size, rng.random());
    let max_radius = (size as f64 * 0.22).max(8.0);
    let radius = rng.random_range(max_radius * 0.45..=max_radius).round();
    let region = random_disk(size, size, radius, &mut rng).map_err(|e| e.to_string())?;
    let (forged, truth) =
        synth_forgery(&Raster::Gray(clean), &region, mode, sigma, rng.random()).map_err(|e| e.to_string())?;
    Ok(Sample {
        size,
        image: forged.to_gray().to_u8(),
        truth: mask_bytes(&truth),
    })
}

/// Detector output: heat (0–255), mask (0/255) and a JSON summary.
#[wasm_bindgen]
pub struct Analysis {
    heat: Vec<u8>,
    mask: Vec<u8>,
    summary: String,
}

#[wasm_bindgen]
impl Analysis {
    #[wasm_bindgen(getter)]
    pub fn heat(&self) -> Vec<u8> {
        self.heat.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn mask(&self) -> Vec<u8> {
        self.mask.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// Runs the detector on RGBA pixels. `truth` may be empty; when given
/// (one byte per pixel, nonzero = tampered) the summary includes metrics.
#[wasm_bindgen]
pub fn analyze(
    rgba: &[u8],
    width: usize,
    height: usize,
    suspicion_threshold: f64,
    truth: &[u8],
) -> Result<Analysis, String> {
    let img = rgba_to_raster(rgba, width, height)?;
    let config = PipelineConfig {
        suspicion_threshold,
        ..PipelineConfig::default()
    };
    let result = detect(&img, &config, None).map_err(|e| e.to_string())?;
    let mut summary = format!(
        "{{\"segments\":{},\"evidence\":{},\"selections\":{},\"mask_pixels\":{},\"threshold\":{}",
        result.segments.len(),
        result.contributions.len(),
        result.contributions.iter().filter(|c| c.selected_region_pixels > 0).count(),
        result.mask.count(),
        result.threshold
    );
    if !truth.is_empty() {
        let truth = mask_from_bytes(truth, width, height)?;
        let m = pixel_metrics(&result.mask, &truth).map_err(|e| e.to_string())?;
        let recall = m.recall.map_or("null".to_string(), |r| r.to_string());
        summary += &format!(",\"accuracy\":{},\"recall\":{recall},\"iou\":{}", m.accuracy, m.iou);
    }
    summary.push('}');
    Ok(Analysis {
        heat: result.heat_u8().to_u8(),
        mask: mask_bytes(&result.mask),
        summary,
    })
}

/// Min–max stretched preview of level-1 band matrix `index` (0–11, real and
/// imaginary parts alternating). The result is half the input size,
/// rounded up.
#[wasm_bindgen]
pub fn band_preview(rgba: &[u8], width: usize, height: usize, index: usize) -> Result<Vec<u8>, String> {
    if index >= BandSet::LEN {
        return Err(format!("band index must be below {}", BandSet::LEN));
    }
    let gray: GrayImage = rgba_to_raster(rgba, width, height)?.to_gray();
    let bands = level1_bands(&gray, BandLayout::RealImag).map_err(|e| e.to_string())?;
    Ok(bands.by_index(index).to_u8_normalized())
}
