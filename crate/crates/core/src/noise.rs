//! Noise variance from the smallest eigenvalues of the patch covariance.
//!
//! For patches of an image corrupted by white Gaussian noise, the
//! covariance of the flattened patch vectors is the clean-signal
//! covariance plus σ²·I. Natural image content occupies a low-dimensional
//! subspace, so the bottom of the spectrum sits at σ².

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{gather_patches, pad_image, valid_origins, GrayImage, Mask, Padded, PatchSet};

/// How the variance is read off the eigenvalue spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Smallest eigenvalue.
    Raw,
    /// Median of the smallest quarter of the eigenvalues.
    #[default]
    Refined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub variance: f64,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub patch_size: usize,
    pub patch_count: usize,
}

impl NoiseEstimate {
    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap_or(&0.0)
    }
}

const CHUNK: usize = 2048;

/// First and second moments of a patch collection, accumulated about a
/// fixed `shift` to limit cancellation. Moments with the same shift and
/// dimension can be added and subtracted.
#[derive(Debug, Clone)]
pub(crate) struct PatchMoments {
    pub count: usize,
    shift: f64,
    sum: DVector<f64>,
    gram: DMatrix<f64>,
}

impl PatchMoments {
    pub fn zero(dim: usize, shift: f64) -> Self {
        Self {
            count: 0,
            shift,
            sum: DVector::zeros(dim),
            gram: DMatrix::zeros(dim, dim),
        }
    }

    fn dim(&self) -> usize {
        self.sum.len()
    }

    /// Adds patch-major vectors (each `dim` long).
    pub fn add_vectors(&mut self, data: &[f64]) {
        let d = self.dim();
        let n = data.len() / d;
        if n == 0 {
            return;
        }
        let shifted: Vec<f64> = data.iter().map(|v| v - self.shift).collect();
        let x = DMatrix::from_vec(d, n, shifted);
        for col in x.column_iter() {
            self.sum += col;
        }
        self.gram.gemm(1.0, &x, &x.transpose(), 1.0);
        self.count += n;
    }

    pub fn from_origins(
        padded: &Padded<f64>,
        origins: &[(usize, usize)],
        patch_size: usize,
        shift: f64,
    ) -> Self {
        let mut m = Self::zero(patch_size * patch_size, shift);
        for chunk in origins.chunks(CHUNK) {
            m.add_vectors(&gather_patches(padded, chunk, patch_size));
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.shift, other.shift);
        Self {
            count: self.count - other.count,
            shift: self.shift,
            sum: &self.sum - &other.sum,
            gram: &self.gram - &other.gram,
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.count as f64;
        let mut cov = &self.gram - (&self.sum * self.sum.transpose()) / n;
        cov /= n - 1.0;
        // Restore exact symmetry lost to rounding.
        let t = cov.transpose();
        (cov + t) * 0.5
    }

    pub fn estimate(&self, patch_size: usize, mode: NoiseMode) -> Result<NoiseEstimate> {
        let required = patch_size * patch_size;
        if self.count < required {
            return Err(Error::InsufficientPatches {
                count: self.count,
                required,
            });
        }
        let eig = SymmetricEigen::new(self.covariance());
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let variance = read_variance(&eigenvalues, mode);
        Ok(NoiseEstimate {
            variance,
            eigenvalues,
            patch_size,
            patch_count: self.count,
        })
    }
}

fn read_variance(desc: &[f64], mode: NoiseMode) -> f64 {
    match mode {
        NoiseMode::Raw => *desc.last().unwrap_or(&0.0),
        NoiseMode::Refined => {
            let tail = desc.len().div_ceil(4).max(1);
            let smallest = &desc[desc.len() - tail..];
            let mid = tail / 2;
            if tail % 2 == 1 {
                smallest[mid]
            } else {
                0.5 * (smallest[mid - 1] + smallest[mid])
            }
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Refined-mode estimate from a patch set.
pub fn estimate_noise(patches: &PatchSet) -> Result<NoiseEstimate> {
    estimate_noise_with(patches, NoiseMode::default())
}

pub fn estimate_noise_with(patches: &PatchSet, mode: NoiseMode) -> Result<NoiseEstimate> {
    let mut m = PatchMoments::zero(patches.dim(), mean(patches.raw()));
    m.add_vectors(patches.raw());
    m.estimate(patches.patch_size, mode)
}

/// Estimate from every stride-1 patch whose footprint lies inside `region`.
pub fn estimate_region_noise(
    band: &GrayImage,
    region: &Mask,
    patch_size: usize,
    padding: usize,
) -> Result<NoiseEstimate> {
    estimate_region_noise_with(band, region, patch_size, padding, NoiseMode::default())
}

pub fn estimate_region_noise_with(
    band: &GrayImage,
    region: &Mask,
    patch_size: usize,
    padding: usize,
    mode: NoiseMode,
) -> Result<NoiseEstimate> {
    if patch_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "patch size must be at least 2, got {patch_size}"
        )));
    }
    region.check_same_dims(band.dims())?;
    let origins = valid_origins(band.dims(), patch_size, 1, Some(region), padding);
    let required = patch_size * patch_size;
    if origins.len() < required {
        return Err(Error::InsufficientPatches {
            count: origins.len(),
            required,
        });
    }
    let padded = pad_image(band, padding);
    let shift = mean_over(&padded, &origins, patch_size);
    PatchMoments::from_origins(&padded, &origins, patch_size, shift).estimate(patch_size, mode)
}

// Mean of all values the patches cover, matching the shift that
// `estimate_noise` would pick for the same patch set.
fn mean_over(padded: &Padded<f64>, origins: &[(usize, usize)], patch_size: usize) -> f64 {
    let mut total = 0.0;
    for &(r, c) in origins {
        for dr in 0..patch_size {
            let start = (r + dr) * padded.width + c;
            total += padded.data[start..start + patch_size].iter().sum::<f64>();
        }
    }
    total / (origins.len() * patch_size * patch_size) as f64
}

/// Relative gap |inside − outside| / outside.
pub fn noise_discrepancy(inside: &NoiseEstimate, outside: &NoiseEstimate) -> Result<f64> {
    if outside.variance <= 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok((inside.variance - outside.variance).abs() / outside.variance)
}
