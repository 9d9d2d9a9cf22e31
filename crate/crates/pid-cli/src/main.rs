//! Command-line front end: generate synthetic sheets, digitize rasters into
//! structured tables, score detections against ground truth, and render
//! overlay images for inspection.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pid_core::aggregate::emit_result;
use pid_core::config::PipelineConfig;
use pid_core::dataset::{load_annotation, write_dataset, GenConfig, NoiseConfig};
use pid_core::error::Result;
use pid_core::eval::{line_accuracy, match_symbols, text_metrics};
use pid_core::geometry::Rect;
use pid_core::lines::{detect_lines_hough, HoughParams};
use pid_core::pipeline::digitize;
use pid_core::raster::{BinarizePolicy, GrayRaster};
use pid_core::symbols::TemplateBank;

#[derive(Parser)]
#[command(name = "pid", about = "Digitize piping & instrumentation diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sheet dataset with ground-truth annotations.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 1792)]
        width: u32,
        #[arg(long, default_value_t = 1152)]
        height: u32,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Apply pixelation, blur, and salt-and-pepper noise.
        #[arg(long)]
        noisy: bool,
    },
    /// Run the full pipeline on one sheet and write the structured output.
    Digitize {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also run the straight-line Hough baseline and report both counts.
        #[arg(long)]
        compare_hough: bool,
    },
    /// Score a digitization against the annotation JSON of a generated sheet.
    Evaluate {
        input: PathBuf,
        annotation: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Exit nonzero when symbol F1 falls below this threshold.
        #[arg(long)]
        min_f1: Option<f64>,
    },
    /// Write a copy of the sheet with detected boxes burned in.
    Overlay {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { out, count, width, height, seed, noisy } => {
            let cfg = GenConfig {
                width,
                height,
                seed,
                noise: if noisy { NoiseConfig::moderate() } else { NoiseConfig::default() },
                ..GenConfig::default()
            };
            let summary = write_dataset(&cfg, count, &out)?;
            println!("wrote {} train / {} test sheets to {}", summary.train, summary.test, out.display());
            Ok(true)
        }
        Command::Digitize { input, out, config, compare_hough } => {
            let cfg = load_config(&config)?;
            let sheet = GrayRaster::load_path(&input)?;
            let bank = TemplateBank::builtin();
            let result = digitize(&sheet, &bank, &cfg)?;
            emit_result(&result.result, &out)?;
            println!(
                "{}: {} symbols, {} edges, {} text boxes",
                input.display(),
                result.result.symbols.len(),
                result.result.graph.edges.len(),
                result.result.texts.len()
            );
            if compare_hough {
                let bin = sheet.binarize(BinarizePolicy::Otsu);
                let hough = detect_lines_hough(&bin, &HoughParams::default());
                println!(
                    "line counts: morphology {} vs hough {}",
                    result.segments.len(),
                    hough.len()
                );
            }
            Ok(true)
        }
        Command::Evaluate { input, annotation, config, min_f1 } => {
            let cfg = load_config(&config)?;
            let sheet = GrayRaster::load_path(&input)?;
            let ann = load_annotation(&annotation)?;
            let bank = TemplateBank::builtin();
            let result = digitize(&sheet, &bank, &cfg)?;

            let truth: Vec<(u8, Rect, String)> = ann
                .symbols
                .iter()
                .map(|s| (s.class_id, s.bbox, s.label.clone()))
                .collect();
            let symbols = match_symbols(&truth, &result.result.symbols, 0.75, false);
            let boxes: Vec<Rect> = ann.symbols.iter().map(|s| s.bbox).collect();
            let lines = line_accuracy(&ann.lines, &boxes, &result.segments, 3, 0.9, 20);
            let texts = text_metrics(&ann.texts, &result.result.texts, &[0.5]);
            println!(
                "symbols: precision {:.3} recall {:.3} f1 {:.3}",
                symbols.precision, symbols.recall, symbols.f1
            );
            println!(
                "lines: solid {:.3} dashed {:.3}",
                lines.solid_accuracy(),
                lines.dashed_accuracy()
            );
            println!(
                "text: recall {:.3} recognition {:.3}",
                texts[0].detection.recall, texts[0].recognition
            );
            Ok(min_f1.map(|t| symbols.f1 >= t).unwrap_or(true))
        }
        Command::Overlay { input, out, config } => {
            let cfg = load_config(&config)?;
            let sheet = GrayRaster::load_path(&input)?;
            let bank = TemplateBank::builtin();
            let result = digitize(&sheet, &bank, &cfg)?;
            let mut img = sheet.clone();
            for s in &result.result.symbols {
                draw_box(&mut img, s.bbox, 0);
            }
            for t in &result.result.texts {
                draw_box(&mut img, t.bbox, 96);
            }
            std::fs::write(&out, img.to_png()?)
                .map_err(|e| pid_core::Error::io(&out, e))?;
            println!("wrote {}", out.display());
            Ok(true)
        }
    }
}

fn draw_box(img: &mut GrayRaster, r: Rect, v: u8) {
    for x in r.x..r.right() {
        for &y in &[r.y, r.bottom() - 1] {
            if x >= 0 && y >= 0 && (x as u32) < img.width && (y as u32) < img.height {
                img.set(x as u32, y as u32, v);
            }
        }
    }
    for y in r.y..r.bottom() {
        for &x in &[r.x, r.right() - 1] {
            if x >= 0 && y >= 0 && (x as u32) < img.width && (y as u32) < img.height {
                img.set(x as u32, y as u32, v);
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
