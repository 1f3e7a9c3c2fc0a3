//! Localizes inpainted regions of an image from inconsistencies in the
//! noise of its level-1 dual-tree complex wavelet bands.
//!
//! ```no_run
//! use inpaint_forensics::{detect, load_image, PipelineConfig};
//!
//! let img = load_image("photo.png")?;
//! let result = detect(&img, &PipelineConfig::default(), None)?;
//! println!("{} suspicious pixels", result.mask.count());
//! # Ok::<(), inpaint_forensics::Error>(())
//! ```

pub mod bandio;
pub mod bandops;
pub mod cluster;
pub mod detector;
pub mod dtcwt;
pub mod error;
pub mod evalkit;
pub mod noise;
pub mod raster;
pub mod segmentation;

pub use bandops::Filter;
pub use detector::{binarize, detect, DetectionReport, DetectionResult, PipelineConfig};
pub use error::{Error, Result};
pub use evalkit::{evaluate_dataset, pixel_metrics, synth_forgery, MetricsReport, SynthMode};
pub use raster::{load_image, load_mask, GrayImage, Mask, Raster};
pub use segmentation::SegmentMap;
