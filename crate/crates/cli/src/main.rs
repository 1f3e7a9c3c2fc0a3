use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::LazyLock;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use inpaint_forensics::bandio::{dump_bands, BandFile};
use inpaint_forensics::detector::{segment_image, with_jobs, PipelineConfig};
use inpaint_forensics::dtcwt::{level1_bands, BandLayout, BIORT_NAME, QSHIFT_NAME};
use inpaint_forensics::evalkit::{evaluate_dataset, forgery_suite, negative_controls, synth_forgery, write_dataset};
use inpaint_forensics::noise::estimate_region_noise_with;
use inpaint_forensics::raster::{save_gray_png, save_mask_png, save_preview_png, save_raster_png};
use inpaint_forensics::segmentation::load_segment_map;
use inpaint_forensics::{detect, load_image, load_mask, Filter, Mask, SynthMode};

static VERSION: LazyLock<String> = LazyLock::new(|| {
    let filters: Vec<&str> = Filter::ALL.iter().map(|f| f.name()).collect();
    format!(
        "{} (dtcwt level-1 filters: {BIORT_NAME}, {QSHIFT_NAME}; enhancement: {})",
        env!("CARGO_PKG_VERSION"),
        filters.join(", ")
    )
});

#[derive(Parser)]
#[command(name = "inpaint-forensics", version = VERSION.as_str(), about = "Localize inpainted regions from wavelet-band noise inconsistencies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Heat-map and mask for one image
    Detect(DetectArgs),
    /// Score the detector over an inpainted/ + mask/ dataset
    Evaluate(EvaluateArgs),
    /// Segment an image and write its label map
    Segment(SegmentArgs),
    /// Patch-PCA noise estimate of an image or a masked region
    Noise(NoiseArgs),
    /// Apply an enhancement filter to a dumped band file
    Enhance(EnhanceArgs),
    /// Generate a synthetic forgery, or a whole evaluation suite
    Synth(SynthArgs),
    /// Write the 12 level-1 band matrices with previews
    DumpBands(DumpBandsArgs),
}

/// Pipeline settings; flags take precedence over `--config`.
#[derive(Args, Default)]
struct ConfigArgs {
    /// JSON file with kebab-case pipeline settings
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    slic_superpixels: Option<usize>,
    #[arg(long)]
    slic_cell_size: Option<usize>,
    #[arg(long)]
    compactness: Option<f64>,
    #[arg(long)]
    merge_threshold: Option<f64>,
    #[arg(long)]
    relevance_patch: Option<usize>,
    #[arg(long)]
    relevance_tolerance: Option<f64>,
    #[arg(long)]
    noise_patch: Option<usize>,
    #[arg(long)]
    noise_padding: Option<usize>,
    /// refined or raw
    #[arg(long, value_parser = kebab_value::<inpaint_forensics::noise::NoiseMode>)]
    noise_mode: Option<inpaint_forensics::noise::NoiseMode>,
    #[arg(long)]
    suspicion_threshold: Option<f64>,
    #[arg(long)]
    filter_window: Option<usize>,
    #[arg(long)]
    linthresh: Option<f64>,
    #[arg(long)]
    activity_window: Option<usize>,
    #[arg(long)]
    activity_floor: Option<f64>,
    /// kmeans or cmeans
    #[arg(long, value_parser = kebab_value::<inpaint_forensics::cluster::ClusterBackend>)]
    cluster_backend: Option<inpaint_forensics::cluster::ClusterBackend>,
    /// Clustering seed
    #[arg(long)]
    seed: Option<u64>,
    /// otsu or fixed
    #[arg(long, value_parser = kebab_value::<inpaint_forensics::detector::Binarize>)]
    binarize: Option<inpaint_forensics::detector::Binarize>,
    #[arg(long)]
    fixed_threshold: Option<f64>,
    /// Heat floor below which pixels never enter the mask
    #[arg(long)]
    min_heat: Option<f64>,
    #[arg(long)]
    min_segment_band_pixels: Option<usize>,
    /// real-imag or real-abs
    #[arg(long, value_parser = kebab_value::<BandLayout>)]
    band_part: Option<BandLayout>,
    /// produced or all
    #[arg(long, value_parser = kebab_value::<inpaint_forensics::detector::HeatDenominator>)]
    heat_denominator: Option<inpaint_forensics::detector::HeatDenominator>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    image: PathBuf,
    /// Label map PNG to use instead of the built-in segmentation
    #[arg(long)]
    segments: Option<PathBuf>,
    #[arg(long)]
    out_mask: PathBuf,
    #[arg(long)]
    out_heat: PathBuf,
    /// JSON provenance report
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// JSON metrics report
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    image: PathBuf,
    /// Label map PNG
    #[arg(long)]
    out: PathBuf,
    /// Random-color preview PNG
    #[arg(long)]
    preview: Option<PathBuf>,
    /// Seed for the preview colors
    #[arg(long, default_value_t = 0)]
    color_seed: u64,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    image: PathBuf,
    /// Restrict patches to this mask
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    patch: usize,
    #[arg(long, default_value_t = 3)]
    padding: usize,
    /// refined or raw
    #[arg(long, default_value = "refined", value_parser = kebab_value::<inpaint_forensics::noise::NoiseMode>)]
    mode: inpaint_forensics::noise::NoiseMode,
}

#[derive(Args)]
struct EnhanceArgs {
    /// WBND band file
    #[arg(long)]
    band: PathBuf,
    /// median, smfr, wiener or mmwf
    #[arg(long)]
    filter: Filter,
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Noise variance for the Wiener filter (default: plug-in estimate)
    #[arg(long)]
    noise_var: Option<f64>,
    /// Output WBND file
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    preview: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["image", "suite"]))]
struct SynthArgs {
    /// Clean image to forge
    #[arg(long, requires_all = ["region", "out_image", "out_truth"])]
    image: Option<PathBuf>,
    /// Region mask PNG
    #[arg(long)]
    region: Option<PathBuf>,
    /// denoise, blur or telea-fill
    #[arg(long, default_value = "denoise")]
    mode: SynthMode,
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_image: Option<PathBuf>,
    #[arg(long)]
    out_truth: Option<PathBuf>,
    /// Write a generated dataset (inpainted/ + mask/) here instead
    #[arg(long, conflicts_with_all = ["image", "region"])]
    suite: Option<PathBuf>,
    /// Forgeries in the suite
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Pure-noise controls added to the suite
    #[arg(long, default_value_t = 0)]
    controls: usize,
    /// Side length of suite images
    #[arg(long, default_value_t = 256)]
    size: usize,
}

#[derive(Args)]
struct DumpBandsArgs {
    #[arg(long)]
    image: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// real-imag or real-abs
    #[arg(long, default_value = "real-imag", value_parser = kebab_value::<BandLayout>)]
    band_part: BandLayout,
}

fn kebab_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig, inpaint_forensics::Error> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        set!(
            slic_superpixels,
            compactness,
            merge_threshold,
            relevance_patch,
            relevance_tolerance,
            noise_patch,
            noise_padding,
            noise_mode,
            suspicion_threshold,
            filter_window,
            linthresh,
            activity_window,
            activity_floor,
            cluster_backend,
            binarize,
            fixed_threshold,
            min_heat,
            min_segment_band_pixels,
            band_part,
            heat_denominator
        );
        if self.slic_cell_size.is_some() {
            c.slic_cell_size = self.slic_cell_size;
        }
        if let Some(seed) = self.seed {
            c.cluster_seed = seed;
        }
        c.validate()?;
        Ok(c)
    }
}

fn write_text(path: &Path, text: &str) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}

fn run_detect(a: &DetectArgs) -> CliResult {
    let config = a.config.resolve()?;
    let img = load_image(&a.image)?;
    let segments = a
        .segments
        .as_ref()
        .map(|p| load_segment_map(p, img.dims()))
        .transpose()?;
    let result = with_jobs(a.jobs, || detect(&img, &config, segments.as_ref()))
        .map_err(|e| format!("{}: {e}", a.image.display()))?;
    save_mask_png(&result.mask, &a.out_mask)?;
    save_gray_png(&result.heat_u8(), &a.out_heat)?;
    if let Some(path) = &a.report {
        write_text(path, &result.report(&config).to_json())?;
    }
    eprintln!(
        "{} segments, {} evidence images, {} mask pixels",
        result.segments.len(),
        result.contributions.len(),
        result.mask.count()
    );
    Ok(())
}

fn run_evaluate(a: &EvaluateArgs) -> CliResult {
    let config = a.config.resolve()?;
    let report = with_jobs(a.jobs, || evaluate_dataset(&a.dataset, &config))?;
    write_text(&a.out, &report.to_json())?;
    print!("{}", report.to_table());
    Ok(())
}

fn run_segment(a: &SegmentArgs) -> CliResult {
    let config = a.config.resolve()?;
    let img = load_image(&a.image)?;
    let map = segment_image(&img, &config)?;
    map.save_png(&a.out)?;
    if let Some(path) = &a.preview {
        inpaint_forensics::raster::save_rgb_png(&map.preview(a.color_seed), path)?;
    }
    println!("{}", map.len());
    Ok(())
}

#[derive(Serialize)]
struct NoiseOutput {
    variance: f64,
    sigma: f64,
    patch_count: usize,
    top_eigenvalues: Vec<f64>,
    bottom_eigenvalues: Vec<f64>,
}

fn run_noise(a: &NoiseArgs) -> CliResult {
    if a.patch < 2 {
        return Err("--patch must be at least 2".into());
    }
    let img = load_image(&a.image)?.to_gray();
    let mask = match &a.mask {
        Some(p) => load_mask(p)?,
        None => Mask::filled(img.width(), img.height(), true),
    };
    let e = estimate_region_noise_with(&img, &mask, a.patch, a.padding, a.mode)
        .map_err(|e| format!("{}: {e}", a.image.display()))?;
    let n = e.eigenvalues.len().min(5);
    let out = NoiseOutput {
        variance: e.variance,
        sigma: e.sigma(),
        patch_count: e.patch_count,
        top_eigenvalues: e.eigenvalues[..n].to_vec(),
        bottom_eigenvalues: e.eigenvalues[e.eigenvalues.len() - n..].to_vec(),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn run_enhance(a: &EnhanceArgs) -> CliResult {
    if a.window < 3 || a.window % 2 == 0 {
        return Err(format!("--window must be odd and at least 3, got {}", a.window).into());
    }
    let input = BandFile::read(&a.band)?;
    let filtered = a.filter.apply(&input.band, a.window, a.noise_var)?;
    let out = BandFile {
        tag: input.tag,
        band: filtered,
    };
    out.write(&a.out)?;
    if let Some(path) = &a.preview {
        save_preview_png(&out.band, path)?;
    }
    Ok(())
}

fn run_synth(a: &SynthArgs) -> CliResult {
    if let Some(root) = &a.suite {
        let mut cases = forgery_suite(a.count, a.size, a.seed)?;
        cases.extend(negative_controls(a.controls, a.size, a.seed.wrapping_add(1)));
        write_dataset(root, &cases)?;
        println!("{} images", cases.len());
        return Ok(());
    }
    let (Some(image), Some(region), Some(out_image), Some(out_truth)) = (&a.image, &a.region, &a.out_image, &a.out_truth)
    else {
        unreachable!("clap enforces the single-image arguments")
    };
    let clean = load_image(image)?;
    let region = load_mask(region)?;
    let (forged, truth) = synth_forgery(&clean, &region, a.mode, a.sigma, a.seed)?;
    save_raster_png(&forged, out_image)?;
    save_mask_png(&truth, out_truth)?;
    Ok(())
}

fn run_dump_bands(a: &DumpBandsArgs) -> CliResult {
    let img = load_image(&a.image)?.to_gray();
    let bands = level1_bands(&img, a.band_part).map_err(|e| format!("{}: {e}", a.image.display()))?;
    for path in dump_bands(&bands, &a.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Segment(a) => run_segment(a),
        Command::Noise(a) => run_noise(a),
        Command::Enhance(a) => run_enhance(a),
        Command::Synth(a) => run_synth(a),
        Command::DumpBands(a) => run_dump_bands(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
