//! Argument parsing and subcommand drivers.

use std::ffi::OsString;
use std::path::PathBuf;

use cellcount_core::archspec::{build_resunet, summarize, ArchConfig, ShortcutPolicy, UpsampleMode};
use cellcount_core::imgcore::object_stats;
use cellcount_core::matcheval::{aggregate, evaluate_instances, DEFAULT_MATCH_DISTANCE};
use cellcount_core::postproc::{postprocess, PostprocConfig};
use cellcount_core::synthgen::{
    apply_augment, generate_scene, ideal_heatmap, yellow_rgb, AugmentKind, AugmentOp, SceneConfig, SynthScene,
};
use cellcount_core::threshopt::{evaluate_threshold, linear_grid, validate_grid, SweepResult};
use cellcount_core::weightmap::{build_weight_map, Combination, WeightConfig};
use cellcount_core::{BitDepth, Connectivity, Error, GrayRaster};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::{config, io, overlay, report};

#[derive(Debug, Parser)]
#[command(name = "cellcount", version, about = "Count cells in microscopy heatmaps and evaluate the counts")]
#[command(after_help = "Any flag may also come from a `key = value` file passed with --config; \
command-line flags take precedence. CELLCOUNT_THREADS caps the worker threads.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the loss weight map of a ground-truth mask
    Weightmap(WeightmapArgs),
    /// Threshold, clean and split a heatmap, then count the objects
    Count(CountArgs),
    /// Score predicted masks against target masks
    Eval(EvalArgs),
    /// Dataset F1 over a grid of thresholds
    Sweep(SweepArgs),
    /// Render synthetic scenes with ground truth
    Synth(SynthArgs),
    /// Apply one augmentation to an image and its mask
    Augment(AugmentArgs),
    /// Describe the segmentation network: shapes, parameters, receptive field
    Archinfo(ArchinfoArgs),
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be non-negative"))
    }
}

fn connectivity(s: &str) -> Result<Connectivity, String> {
    match s {
        "4" => Ok(Connectivity::Four),
        "8" => Ok(Connectivity::Eight),
        _ => Err(format!("connectivity must be 4 or 8, got `{s}`")),
    }
}

fn shape(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split(['x', 'X'])
        .map(|p| p.trim().parse().map_err(|_| format!("`{s}` is not HxWxC")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [h, w, c] if h > 0 && w > 0 && c > 0 => Ok((h, w, c)),
        _ => Err(format!("`{s}` is not HxWxC")),
    }
}

/// Threshold grid parsed from one argument.
#[derive(Debug, Clone)]
pub struct Grid(pub Vec<f64>);

fn grid(s: &str) -> Result<Grid, String> {
    let g = if s.contains(':') {
        let p: Vec<f64> = s
            .split(':')
            .map(|v| v.trim().parse().map_err(|_| format!("bad grid `{s}`")))
            .collect::<Result<_, _>>()?;
        match p[..] {
            [a, b, c] => linear_grid(a, b, c).map_err(|e| e.to_string())?,
            _ => return Err(format!("grid range must be start:stop:step, got `{s}`")),
        }
    } else {
        s.split(',')
            .map(|v| v.trim().parse().map_err(|_| format!("bad grid `{s}`")))
            .collect::<Result<_, _>>()?
    };
    validate_grid(&g).map_err(|e| e.to_string())?;
    Ok(Grid(g))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CombineArg {
    Additive,
    Multiplicative,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct WeightmapArgs {
    /// Binary ground-truth mask (PNG, 0 and full scale)
    #[arg(long)]
    pub mask: PathBuf,
    /// Output CCWM file
    #[arg(long)]
    pub out: PathBuf,
    /// Width of the border-proximity falloff in pixels
    #[arg(long, default_value_t = 25.0, value_parser = positive)]
    pub sigma: f64,
    /// Base weight of cell pixels
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub fg_weight: f64,
    /// Base weight of background pixels
    #[arg(long, default_value_t = 1.5, value_parser = positive)]
    pub bg_weight: f64,
    /// How the base weight and the proximity term combine
    #[arg(long, value_enum, default_value_t = CombineArg::Additive)]
    pub combine: CombineArg,
    /// Whether cell pixels also receive the proximity term
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub foreground_proximity: bool,
    /// Pixel adjacency that defines objects (4 or 8)
    #[arg(long, default_value = "8", value_parser = connectivity)]
    pub connectivity: Connectivity,
    /// Also write a 16-bit PNG visualization
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PostArgs {
    /// Cells are pixels strictly above this probability
    #[arg(long, default_value_t = 0.55, value_parser = unit_interval)]
    pub threshold: f64,
    /// Expected cell radius in pixels; watershed markers lie at least this far apart
    #[arg(long, default_value_t = 25.0, value_parser = positive)]
    pub cell_radius: f64,
    /// Components smaller than this many pixels are dropped
    #[arg(long, default_value_t = 30)]
    pub min_area: usize,
    /// Split touching cells with a watershed
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub split: bool,
    /// Pixel adjacency for counting (4 or 8)
    #[arg(long, default_value = "8", value_parser = connectivity)]
    pub connectivity: Connectivity,
}

impl PostArgs {
    fn config(&self) -> CliResult<PostprocConfig> {
        let cfg = PostprocConfig {
            threshold: self.threshold,
            min_area: self.min_area,
            cell_radius: self.cell_radius,
            split_enabled: self.split,
            connectivity: self.connectivity,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CountArgs {
    /// Probability heatmap (grayscale PNG, value / full scale)
    #[arg(long)]
    pub heatmap: PathBuf,
    #[command(flatten)]
    pub post: PostArgs,
    /// JSON report with every object's centroid, box and area
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// PNG with a box around every counted object
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    /// 16-bit PNG of the object labels
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    /// Predictions: binary masks, or 16-bit label images
    #[arg(long)]
    pub pred: PathBuf,
    /// Targets with the same file names: binary masks, or 16-bit label images
    #[arg(long)]
    pub target: PathBuf,
    /// Output directory for report.csv, report.json and overlays/
    #[arg(long)]
    pub out: PathBuf,
    /// Centroids closer than this many pixels can match
    #[arg(long, default_value_t = DEFAULT_MATCH_DISTANCE, value_parser = positive)]
    pub match_dist: f64,
    /// Write one overlay per image
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub overlays: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    /// Heatmaps (grayscale PNG)
    #[arg(long)]
    pub heatmaps: PathBuf,
    /// Targets with the same file names: binary masks, or 16-bit label images
    #[arg(long)]
    pub targets: PathBuf,
    /// Thresholds as start:stop:step or a comma list
    #[arg(long, default_value = "0.05:0.95:0.05", value_parser = grid)]
    pub grid: Grid,
    #[command(flatten)]
    pub post: PostArgs,
    /// Centroids closer than this many pixels can match
    #[arg(long, default_value_t = DEFAULT_MATCH_DISTANCE, value_parser = positive)]
    pub match_dist: f64,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    /// Number of scenes; seeds run from --seed upwards
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    /// Cells per scene
    #[arg(long, default_value_t = 10)]
    pub cells: usize,
    /// Probability that a cell is placed touching another
    #[arg(long, default_value_t = 0.3, value_parser = unit_interval)]
    pub clump: f64,
    /// Minimum distance between cell centers in pixels
    #[arg(long, default_value_t = 50.0, value_parser = non_negative)]
    pub min_distance: f64,
    /// Dim non-cell blobs per scene
    #[arg(long, default_value_t = 0)]
    pub distractors: usize,
    /// Image noise standard deviation
    #[arg(long, default_value_t = 0.03, value_parser = non_negative)]
    pub noise: f64,
    /// Blur of the ideal heatmap's edges in pixels
    #[arg(long, default_value_t = 3.0, value_parser = non_negative)]
    pub softness: f64,
    /// Noise standard deviation of the ideal heatmap
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    pub heatmap_noise: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OpArg {
    Rot90,
    Noise,
    Brightness,
    Elastic,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AugmentArgs {
    /// Input image (grayscale or RGB PNG; processed as gray)
    #[arg(long)]
    pub image: PathBuf,
    /// Binary mask of the same size
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, value_enum)]
    pub op: OpArg,
    /// Quarter turns clockwise (rot90)
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Noise standard deviation (noise)
    #[arg(long, default_value_t = 0.05, value_parser = non_negative)]
    pub sigma: f64,
    /// Intensity factor (brightness)
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    pub scale: f64,
    /// Displacement scale (elastic)
    #[arg(long, default_value_t = 300.0, value_parser = non_negative)]
    pub alpha: f64,
    /// Smoothing of the displacement field in pixels (elastic)
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    pub elastic_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_image: PathBuf,
    #[arg(long)]
    pub out_mask: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UpsampleArg {
    Nearest,
    Transposed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShortcutArg {
    /// 1x1 convolution only where the channel count changes
    Changes,
    /// 1x1 convolution on every shortcut
    Always,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ArchinfoArgs {
    /// Input size as HxWxC
    #[arg(long, default_value = "512x512x3", value_parser = shape)]
    pub input: (usize, usize, usize),
    /// Pooling levels
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 16)]
    pub base_filters: usize,
    /// Filter multiplier per level
    #[arg(long, default_value_t = 2)]
    pub growth: usize,
    /// Leading 1x1 convolution to a single channel
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub colorspace: bool,
    /// Extra bottleneck block with larger filters
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub wide_bottleneck: bool,
    #[arg(long, default_value_t = 5)]
    pub bottleneck_kernel: usize,
    #[arg(long, default_value_t = 3)]
    pub kernel: usize,
    #[arg(long, value_enum, default_value_t = UpsampleArg::Nearest)]
    pub upsample: UpsampleArg,
    #[arg(long, value_enum, default_value_t = ShortcutArg::Changes)]
    pub shortcut: ShortcutArg,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let args = match config::expand(args.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match configure_threads().and_then(|_| run(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("CELLCOUNT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CELLCOUNT_THREADS must be a positive integer, got `{v}`")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Weightmap(a) => cmd_weightmap(&a),
        Command::Count(a) => cmd_count(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Augment(a) => cmd_augment(&a),
        Command::Archinfo(a) => cmd_archinfo(&a),
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn cmd_weightmap(a: &WeightmapArgs) -> CliResult<()> {
    let cfg = WeightConfig {
        sigma: a.sigma,
        foreground_base: a.fg_weight,
        background_base: a.bg_weight,
        include_foreground_proximity: a.foreground_proximity,
        combination: match a.combine {
            CombineArg::Additive => Combination::Additive,
            CombineArg::Multiplicative => Combination::Multiplicative,
        },
        connectivity: a.connectivity,
    };
    cfg.validate().map_err(usage)?;
    let mask = io::read_mask(&a.mask)?;
    let wm = build_weight_map(&mask, &cfg)?;
    let vis = a.png.as_ref().map(|_| io::weight_png(&wm)).transpose()?;
    io::write_atomic(&a.out, &io::ccwm_bytes(wm.raster()))?;
    if let (Some(path), Some(bytes)) = (&a.png, vis) {
        io::write_atomic(path, &bytes)?;
    }
    println!("{}x{} min {} max {}", mask.width(), mask.height(), wm.min(), wm.max());
    Ok(())
}

#[derive(Serialize)]
struct CountObject {
    label: u32,
    area: usize,
    centroid: (f64, f64),
    bbox: (usize, usize, usize, usize),
}

#[derive(Serialize)]
struct CountReport<'a> {
    file: String,
    threshold: f64,
    cell_radius: f64,
    min_area: usize,
    split: bool,
    count: u32,
    objects: &'a [CountObject],
}

fn cmd_count(a: &CountArgs) -> CliResult<()> {
    let cfg = a.post.config()?;
    let heat = io::read_heatmap(&a.heatmap)?;
    let lm = postprocess(&heat, &cfg)?;
    let stats = object_stats(&lm);
    let mut outputs = Vec::new();
    if let Some(p) = &a.report {
        let objects: Vec<CountObject> = stats
            .iter()
            .map(|s| CountObject {
                label: s.label,
                area: s.area,
                centroid: s.centroid,
                bbox: s.bbox,
            })
            .collect();
        let r = CountReport {
            file: a.heatmap.display().to_string(),
            threshold: cfg.threshold,
            cell_radius: cfg.cell_radius,
            min_area: cfg.min_area,
            split: cfg.split_enabled,
            count: lm.object_count(),
            objects: &objects,
        };
        let mut bytes = serde_json::to_vec_pretty(&r)?;
        bytes.push(b'\n');
        outputs.push((p, bytes));
    }
    if let Some(p) = &a.overlay {
        outputs.push((p, io::rgb_png(&overlay::objects_overlay(heat.raster(), &stats))?));
    }
    if let Some(p) = &a.labels {
        outputs.push((p, io::labels_png(&lm)?));
    }
    for (p, bytes) in outputs {
        io::write_atomic(p, &bytes)?;
    }
    println!("{}", lm.object_count());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let pairs = io::pair_by_name(&a.pred, &a.target)?;
    let results = pairs
        .par_iter()
        .map(|(name, pred_path, target_path)| {
            let pred = io::read_instances(pred_path)?;
            let target = io::read_instances(target_path)?;
            let eval = evaluate_instances(&pred, &target, a.match_dist).map_err(|e| CliError::at(pred_path, e))?;
            let overlay = if a.overlays {
                let base = target.foreground().map(|&b| if b { 0.45 } else { 0.0 });
                Some(io::rgb_png(&overlay::evaluation_overlay(&base, &eval))?)
            } else {
                None
            };
            Ok((name.clone(), eval.metrics, overlay))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let files: Vec<String> = results.iter().map(|r| r.0.clone()).collect();
    let dataset = aggregate(results.iter().map(|r| r.1).collect())?;
    let csv = report::metrics_csv(&files, &dataset.per_image)?;
    let json = report::metrics_json(&files, &dataset, a.match_dist)?;
    for (name, _, png) in &results {
        if let Some(bytes) = png {
            io::write_atomic(&a.out.join("overlays").join(name), bytes)?;
        }
    }
    io::write_atomic(&a.out.join("report.csv"), &csv)?;
    io::write_atomic(&a.out.join("report.json"), &json)?;
    println!(
        "images {} f1_micro {:.4} f1_macro {:.4} mae {:.4} medae {} mean_iou {:.4}",
        files.len(),
        dataset.f1_micro,
        dataset.f1_macro,
        dataset.mae,
        dataset.medae,
        dataset.mean_iou
    );
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let cfg = a.post.config()?;
    let pairs = io::pair_by_name(&a.heatmaps, &a.targets)?;
    let data = pairs
        .par_iter()
        .map(|(_, h, t)| Ok((io::read_heatmap(h)?, io::read_instances(t)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let points = a
        .grid
        .0
        .par_iter()
        .map(|&t| evaluate_threshold(&data, &cfg, t, a.match_dist).map(|m| (t, m.f1_micro)))
        .collect::<Result<Vec<_>, _>>()?;
    let result = SweepResult::from_points(points)?;
    io::write_atomic(&a.out, &report::sweep_csv(&result))?;
    println!("best threshold {} f1 {}", result.best_threshold, result.best_f1);
    Ok(())
}

fn manifest_row(s: &SynthScene) -> Vec<String> {
    let cells = s
        .cells
        .iter()
        .map(|e| format!("{:.3}:{:.3}:{:.3}:{:.3}:{:.4}:{:.3}", e.cx, e.cy, e.a, e.b, e.angle, e.peak))
        .collect::<Vec<_>>()
        .join(";");
    vec![
        s.seed.to_string(),
        s.count().to_string(),
        s.distractors.len().to_string(),
        cells,
    ]
}

fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let cfg = SceneConfig {
        width: a.width,
        height: a.height,
        cell_count: a.cells,
        clump_probability: a.clump,
        min_center_distance: a.min_distance,
        distractor_count: a.distractors,
        noise_sigma: a.noise,
        ..SceneConfig::default()
    };
    cfg.validate().map_err(usage)?;
    let seeds: Vec<u64> = (0..a.n).map(|i| a.seed.wrapping_add(i)).collect();
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let s = generate_scene(&cfg, seed)?;
            let heat = ideal_heatmap(&s.mask, a.softness, a.heatmap_noise, seed);
            let stem = a.out.join(format!("scene_{seed}"));
            let path = |suffix: &str| PathBuf::from(format!("{}{suffix}.png", stem.display()));
            io::write_atomic(&path(""), &io::rgb_png(&yellow_rgb(&s.image))?)?;
            io::write_atomic(&path("_mask"), &io::mask_png(&s.mask)?)?;
            io::write_atomic(&path("_heatmap"), &io::heatmap_png(&heat, BitDepth::Sixteen)?)?;
            io::write_atomic(&path("_labels"), &io::labels_png(&s.instances)?)?;
            Ok(manifest_row(&s))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "count", "distractors", "cells"])?;
    for r in &rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    io::write_atomic(&a.out.join("manifest.csv"), &bytes)?;
    println!("wrote {} scenes to {}", rows.len(), a.out.display());
    Ok(())
}

fn cmd_augment(a: &AugmentArgs) -> CliResult<()> {
    let kind = match a.op {
        OpArg::Rot90 => AugmentKind::Rot90 { k: a.k },
        OpArg::Noise => AugmentKind::GaussianNoise { sigma: a.sigma },
        OpArg::Brightness => AugmentKind::Brightness { scale: a.scale },
        OpArg::Elastic => AugmentKind::Elastic {
            alpha: a.alpha,
            sigma: a.elastic_sigma,
        },
    };
    kind.validate().map_err(usage)?;
    let image = io::read_gray(&a.image)?;
    let mask = io::read_mask(&a.mask)?;
    let (img, m) = apply_augment(&image.to_unit(), &mask, &AugmentOp::new(kind, a.seed))?;
    let img_bytes = io::gray_png(&GrayRaster::from_unit(&img, image.depth()))?;
    let mask_bytes = io::mask_png(&m)?;
    io::write_atomic(&a.out_image, &img_bytes)?;
    io::write_atomic(&a.out_mask, &mask_bytes)?;
    Ok(())
}

#[derive(Serialize)]
struct NodeInfo<'a> {
    id: usize,
    name: &'a str,
    layer: &'a cellcount_core::archspec::LayerKind,
    inputs: &'a [usize],
    shape: (usize, usize, usize),
}

#[derive(Serialize)]
struct ArchInfo<'a> {
    config: &'a ArchConfig,
    input: (usize, usize, usize),
    output: (usize, usize, usize),
    param_count: u64,
    receptive_field: (usize, usize),
    required_multiple: usize,
    nodes: Vec<NodeInfo<'a>>,
}

fn cmd_archinfo(a: &ArchinfoArgs) -> CliResult<()> {
    let cfg = ArchConfig {
        depth: a.depth,
        base_filters: a.base_filters,
        filter_growth: a.growth,
        colorspace_conv: a.colorspace,
        extra_bottleneck_block: a.wide_bottleneck,
        bottleneck_kernel: a.bottleneck_kernel,
        standard_kernel: a.kernel,
        input_channels: a.input.2,
        upsample: match a.upsample {
            UpsampleArg::Nearest => UpsampleMode::NearestConv,
            UpsampleArg::Transposed => UpsampleMode::Transposed,
        },
        shortcut: match a.shortcut {
            ShortcutArg::Changes => ShortcutPolicy::WhenChannelsChange,
            ShortcutArg::Always => ShortcutPolicy::Always,
        },
    };
    let g = build_resunet(&cfg).map_err(usage)?;
    let summary = summarize(&g, a.input).map_err(usage)?;
    let info = ArchInfo {
        config: &cfg,
        input: summary.input,
        output: summary.output,
        param_count: summary.param_count,
        receptive_field: summary.receptive_field,
        required_multiple: summary.required_multiple,
        nodes: g
            .nodes()
            .iter()
            .map(|n| NodeInfo {
                id: n.id,
                name: &n.name,
                layer: &n.layer,
                inputs: &n.inputs,
                shape: summary.shapes[n.id],
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&info)?;
    bytes.push(b'\n');
    match &a.out {
        Some(p) => io::write_atomic(p, &bytes)?,
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(())
}

