//! The `cabin` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, unknown config keys),
//! 2 runtime or data error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::parse_override;
use crate::datacube::{
    generate_synthetic, load_cube, load_labels, save_cube, save_labels, write_labels, HyperCube, SynthSpec,
};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, confusion, default_palette, render_class_map, render_uncertainty_map};
use crate::protocol::{run_experiment, ProtocolConfig};

pub const SEED_ENV: &str = "CABIN_SEED";

#[derive(Debug, Parser)]
#[command(name = "cabin", version, about = "Evidential semi-supervised classification of hyperspectral cubes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic cube and its label map.
    Gen(GenArgs),
    /// Run one experiment, or a sweep over one config key.
    Run(RunArgs),
    /// Score a prediction map against ground truth.
    Eval(EvalArgs),
    /// Render a label map or a single-band cube as a PPM image.
    Map(MapArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub h: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub w: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub b: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; receives `cube.txt` and `labels.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub copies: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `random` runs the matched-budget random baseline.
    #[arg(long, value_name = "none|cabin|random")]
    pub baseline: Option<String>,
    /// Run one experiment per listed value, e.g. `ratio=0,0.25,0.5`.
    #[arg(long, value_name = "KEY=V1,V2,...")]
    pub sweep: Option<String>,
    /// Experiments run concurrently during a sweep.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted label map.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth label map; unlabeled pixels are skipped.
    #[arg(long)]
    pub labels: PathBuf,
    /// Also write the metrics JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Label map to colour.
    #[arg(long, conflicts_with = "uncertainty", required_unless_present = "uncertainty")]
    pub labels: Option<PathBuf>,
    /// Single-band cube of values in [0, 1] to render in grey.
    #[arg(long)]
    pub uncertainty: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse arguments, run, print errors to stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        _ => 2,
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Run(a) => cmd_run(&a).map(|_| ()),
        Command::Eval(a) => {
            let json = cmd_eval(&a)?;
            println!("{json}");
            Ok(())
        }
        Command::Map(a) => cmd_map(&a),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let spec = SynthSpec {
        height: a.h as usize,
        width: a.w as usize,
        bands: a.b as usize,
        num_classes: a.k as usize,
        noise_sigma: a.sigma,
        seed,
    };
    let (cube, labels) = generate_synthetic(spec)?;
    fs::create_dir_all(&a.out)?;
    save_cube(&cube, a.out.join("cube.txt"))?;
    save_labels(&labels, a.out.join("labels.txt"))?;
    Ok(())
}

/// Defaults, then `CABIN_SEED`, the config file, `--set` overrides, and the
/// dedicated flags, each layer winning over the previous one.
pub fn resolve_config(a: &RunArgs) -> Result<ProtocolConfig> {
    let mut config = ProtocolConfig::default();
    if let Some(seed) = env_seed()? {
        config.seed = seed;
    }
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path)?;
        config.apply_file_text(&text)?;
    }
    for o in &a.overrides {
        let (k, v) = parse_override(o)?;
        config.set(&k, &v)?;
    }
    if let Some(r) = a.ratio {
        config.set("annotation_ratio", &r.to_string())?;
    }
    if let Some(c) = a.copies {
        config.set("gfp_copies", &c.to_string())?;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(b) = &a.baseline {
        config.set("baseline", b)?;
    }
    config.validate()?;
    Ok(config)
}

/// Expand `key=v1,v2,...` into one config per value.
pub fn expand_sweep(base: &ProtocolConfig, sweep: &str) -> Result<Vec<ProtocolConfig>> {
    let (key, values) = parse_override(sweep)?;
    let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(Error::Config(format!("sweep {sweep:?} lists no values")));
    }
    values
        .into_iter()
        .map(|v| {
            let mut c = base.clone();
            c.set(&key, v)?;
            c.validate()?;
            Ok(c)
        })
        .collect()
}

/// Directory name of one experiment's outputs.
pub fn run_dir_name(config: &ProtocolConfig) -> String {
    format!("run-{}-s{}", config.hash(), config.seed)
}

#[derive(Serialize)]
struct Timing {
    wall_clock_seconds: f64,
}

/// Run the experiment(s) and return the directories written.
pub fn cmd_run(a: &RunArgs) -> Result<Vec<PathBuf>> {
    let base = resolve_config(a)?;
    let configs = match &a.sweep {
        Some(s) => expand_sweep(&base, s)?,
        None => vec![base],
    };
    let cube = load_cube(&a.cube)?;
    let labels = load_labels(&a.labels)?;
    fs::create_dir_all(&a.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs as usize)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} jobs: {e}", a.jobs)))?;
    pool.install(|| {
        configs
            .par_iter()
            .map(|config| {
                let dir = a.out.join(run_dir_name(config));
                run_one(config, &cube, &labels, &dir)?;
                Ok(dir)
            })
            .collect()
    })
}

fn run_one(config: &ProtocolConfig, cube: &HyperCube, labels: &crate::datacube::LabelMap, dir: &Path) -> Result<()> {
    let start = Instant::now();
    let output = run_experiment(config, cube, labels)?;
    let elapsed = start.elapsed().as_secs_f64();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), output.report.to_json())?;
    fs::write(dir.join("classification.ppm"), output.class_map_ppm()?)?;
    fs::write(dir.join("uncertainty.ppm"), output.uncertainty_map_ppm()?)?;
    fs::write(dir.join("predictions.txt"), write_labels(&output.predictions))?;
    let p = &output.predictions;
    let u = HyperCube::new(p.height(), p.width(), 1, output.uncertainty.clone())?;
    save_cube(&u, dir.join("uncertainty.txt"))?;
    let timing = serde_json::to_string_pretty(&Timing { wall_clock_seconds: elapsed })?;
    fs::write(dir.join("timing.json"), timing)?;
    Ok(())
}

/// Metrics JSON of `--pred` against `--labels` over labeled pixels.
pub fn cmd_eval(a: &EvalArgs) -> Result<String> {
    let pred = load_labels(&a.pred)?;
    let truth = load_labels(&a.labels)?;
    if (pred.height(), pred.width()) != (truth.height(), truth.width()) {
        return Err(Error::Argument(format!(
            "prediction grid is {}x{} but labels are {}x{}",
            pred.height(),
            pred.width(),
            truth.height(),
            truth.width()
        )));
    }
    let (t, p): (Vec<usize>, Vec<usize>) = truth
        .labels()
        .iter()
        .zip(pred.labels())
        .filter(|(&t, _)| t > 0)
        .map(|(&t, &p)| (t, p))
        .unzip();
    let k = truth.num_classes().max(pred.num_classes());
    let report = compute_metrics(&confusion(&t, &p, k)?)?;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &a.out {
        fs::write(out, &json)?;
    }
    Ok(json)
}

pub fn cmd_map(a: &MapArgs) -> Result<()> {
    let ppm = match (&a.labels, &a.uncertainty) {
        (Some(path), _) => {
            let map = load_labels(path)?;
            render_class_map(map.labels(), map.width(), map.height(), &default_palette(map.num_classes()))?
        }
        (None, Some(path)) => {
            let cube = load_cube(path)?;
            if cube.bands() != 1 {
                return Err(Error::Argument(format!("uncertainty cube has {} bands, expected 1", cube.bands())));
            }
            render_uncertainty_map(cube.values(), cube.width(), cube.height())?
        }
        (None, None) => return Err(Error::Config("map needs --labels or --uncertainty".into())),
    };
    if let Some(parent) = a.out.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&a.out, ppm)?;
    Ok(())
}
