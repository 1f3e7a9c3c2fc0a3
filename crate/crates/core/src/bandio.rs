//! WBND band files: a 16-byte header (magic, width, height, tag) followed
//! by little-endian `f32` samples in row-major order.

use std::path::{Path, PathBuf};

use crate::dtcwt::{BandSet, Part};
use crate::error::{Error, Result};
use crate::raster::{save_preview_png, write_bytes, GrayImage};

pub const WBND_MAGIC: &[u8; 4] = b"WBND";
pub const WBND_HEADER_LEN: usize = 16;

/// A decoded band file. `tag` is `band_index * 2 + part slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFile {
    pub tag: u32,
    pub band: GrayImage,
}

impl BandFile {
    pub fn new(band_index: usize, part: Part, band: GrayImage) -> Self {
        Self {
            tag: (band_index * 2 + part.slot()) as u32,
            band,
        }
    }

    pub fn band_index(&self) -> usize {
        self.tag as usize / 2
    }

    pub fn slot(&self) -> usize {
        self.tag as usize % 2
    }

    pub fn encode(&self) -> Vec<u8> {
        let (w, h) = self.band.dims();
        let mut out = Vec::with_capacity(WBND_HEADER_LEN + 4 * w * h);
        out.extend_from_slice(WBND_MAGIC);
        out.extend_from_slice(&(w as u32).to_le_bytes());
        out.extend_from_slice(&(h as u32).to_le_bytes());
        out.extend_from_slice(&self.tag.to_le_bytes());
        for &v in self.band.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < WBND_HEADER_LEN {
            return Err(format!("{} bytes is shorter than the header", bytes.len()));
        }
        if &bytes[..4] != WBND_MAGIC {
            return Err("missing WBND magic".into());
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let (w, h, tag) = (word(4) as usize, word(8) as usize, word(12));
        let expected = w
            .checked_mul(h)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(WBND_HEADER_LEN))
            .ok_or("dimensions overflow")?;
        if bytes.len() != expected {
            return Err(format!("expected {expected} bytes for {w}x{h}, found {}", bytes.len()));
        }
        let data = bytes[WBND_HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect();
        let band = GrayImage::new(w, h, data).map_err(|e| e.to_string())?;
        Ok(Self { tag, band })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes).map_err(|reason| Error::decode(path, reason))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_bytes(path.as_ref(), &self.encode())
    }
}

/// File stem used for a dumped band, e.g. `band3-imag`.
pub fn band_stem(band_index: usize, part: Part) -> String {
    format!("band{band_index}-{part}")
}

/// Writes every band as `STEM.wbnd` plus a stretched `STEM.png` preview.
/// Returns the `.wbnd` paths in band order.
pub fn dump_bands(bands: &BandSet, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut written = Vec::with_capacity(BandSet::LEN);
    for (k, part, band) in bands.iter() {
        let stem = band_stem(k, part);
        let path = dir.join(format!("{stem}.wbnd"));
        BandFile::new(k, part, band.clone()).write(&path)?;
        save_preview_png(band, dir.join(format!("{stem}.png")))?;
        written.push(path);
    }
    Ok(written)
}
