//! Command-line front end. Flags override `--config` entries, which
//! override defaults; every run writes its resolved flags back out as a
//! config file that reproduces it.

mod config;
mod plot;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ded::{ded_pipeline, ContextMode, DedParams, GtSource};
use crate::dtsnn::{self, Network, SampleConfig, ThresholdMode};
use crate::error::Error;
use crate::event::{Geometry, Label, LabeledEventStream};
use crate::evio::{self, load_manifest, DatasetManifest, Format, SequenceEntry, Split};
use crate::filters::{DensityParams, Filter, RowColParams, TimeSurfaceParams};
use crate::metrics::DenoiseReport;
use crate::simulator::{
    dual_sample, render_signal_events, sample_ba_noise, DualStream, MovingBar, MovingTexture, NoiseParams, PixelModelParams,
    Scene, SceneKind, ThresholdLevel,
};

pub use config::{config_tokens, parse_config, render_config};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "evdn", version, about = "Event-stream denoising: simulation, dual-sampling ground truth, spiking denoiser")]
struct Cli {
    /// Worker threads; falls back to EVDN_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key = value` file supplying flags for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a scene with background-activity noise, optionally twice.
    Simulate(SimulateArgs),
    /// Label each event of a stream as signal or noise.
    Denoise(DenoiseArgs),
    /// Train the spiking denoiser on a dataset manifest.
    Train(TrainArgs),
    /// Score a prediction against ground-truth labels.
    Eval(EvalArgs),
    /// Render event frames and metric plots.
    Report(ReportArgs),
}

const SUBCOMMANDS: [&str; 5] = ["simulate", "denoise", "train", "eval", "report"];

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum SceneArg {
    MovingBar,
    MovingTexture,
    Static,
    Ramp,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum FormatArg {
    Text,
    Binary,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Binary => Format::Binary,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SceneArg::MovingBar)]
    scene: SceneArg,
    /// Sensor size as WIDTHxHEIGHT.
    #[arg(long, default_value = "128x128")]
    res: String,
    #[arg(long, default_value_t = 1000)]
    duration_ms: u64,
    /// Threshold preset: 0, -10, -20 or -30 (percent); sets C and the noise rate.
    #[arg(long, default_value = "-30", allow_hyphen_values = true)]
    level: String,
    /// Background-activity rate in events per pixel per second (both polarities); overrides the preset.
    #[arg(long, allow_negative_numbers = true)]
    noise_rate: Option<f64>,
    /// Log-intensity contrast threshold; overrides the preset.
    #[arg(long, allow_negative_numbers = true)]
    contrast_threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    refractory_us: u64,
    #[arg(long, default_value_t = 100)]
    dt_sim_us: u64,
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    bar_width: f64,
    #[arg(long, default_value_t = 48.0, allow_negative_numbers = true)]
    bar_length: f64,
    /// Pixels per second.
    #[arg(long, default_value_t = 60.0, allow_negative_numbers = true)]
    velocity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise seed of the second sampling; required with --dual.
    #[arg(long)]
    seed2: Option<u64>,
    #[arg(long)]
    dual: bool,
    /// Gaussian timestamp jitter applied independently to each sampling.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    jitter_us: f64,
    /// Window length recorded in the manifest.
    #[arg(long, default_value_t = 10_000)]
    dt_us: u64,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    split: SplitArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    format: FormatArg,
    /// Output directory.
    #[arg(short = 'o', long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    Ded,
    Density,
    Rowcol,
    Timesurface,
    Snn,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum ContextArg {
    Centered,
    Trailing,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum SourceArg {
    Stream1,
    Stream2,
    Union,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct DenoiseArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(short = 'i', long)]
    input: PathBuf,
    /// Second sampling of the same scene (`-i2` is accepted too).
    #[arg(long)]
    i2: Option<PathBuf>,
    /// Trained network for `--method snn`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    dt_us: u64,
    #[arg(long, default_value_t = 3)]
    n_windows: usize,
    #[arg(long, default_value_t = 2)]
    radius: u16,
    #[arg(long, default_value_t = 3)]
    min_count: usize,
    #[arg(long, default_value_t = 10_000)]
    tau_corr_us: u64,
    #[arg(long, value_enum, default_value_t = ContextArg::Centered)]
    context: ContextArg,
    #[arg(long, value_enum, default_value_t = SourceArg::Stream1)]
    gt_source: SourceArg,
    #[arg(long, default_value_t = DensityParams::default().radius)]
    density_radius: u16,
    #[arg(long, default_value_t = DensityParams::default().window_us)]
    density_window_us: u64,
    #[arg(long, default_value_t = DensityParams::default().support)]
    density_support: usize,
    #[arg(long, default_value_t = RowColParams::default().depth)]
    rowcol_depth: usize,
    #[arg(long, default_value_t = RowColParams::default().window_us)]
    rowcol_window_us: u64,
    #[arg(long, default_value_t = TimeSurfaceParams::default().tau_us)]
    ts_tau_us: f64,
    #[arg(long, default_value_t = TimeSurfaceParams::default().radius)]
    ts_radius: u16,
    #[arg(long, default_value_t = TimeSurfaceParams::default().theta)]
    ts_theta: f64,
    /// Windows per network pass for `--method snn`.
    #[arg(long, default_value_t = 5)]
    time_steps: usize,
    /// Write only the events judged signal.
    #[arg(long)]
    kept_only: bool,
    /// Output format; inferred from the extension when absent.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(short = 'o', long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Dt,
    Ft,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Manifest entries used for training.
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    split: SplitArg,
    /// Dynamic (dt) or fixed (ft) output threshold.
    #[arg(long, value_enum, default_value_t = ModeArg::Dt)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.5)]
    fixed_threshold: f64,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 0.002)]
    lr: f64,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 5)]
    time_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    w_l1: f64,
    #[arg(long, default_value_t = 1.0)]
    w_bce: f64,
    #[arg(long, default_value_t = 0.5)]
    w_threshold: f64,
    /// Square crop side in pixels; 0 trains on whole frames.
    #[arg(long, default_value_t = 32)]
    crop: usize,
    #[arg(long, default_value_t = 4)]
    crops_per_chunk: usize,
    #[arg(long, default_value_t = 3)]
    label_windows: usize,
    #[arg(long, default_value_t = 1)]
    label_radius: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the checkpoint and loss log.
    #[arg(short = 'o', long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Method name recorded in the report; defaults to the prediction's file stem.
    #[arg(long)]
    method: Option<String>,
    /// Tile side for the blank-patch ratio.
    #[arg(long, default_value_t = 16)]
    patch: usize,
    #[arg(short = 'o', long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct ReportArgs {
    /// DenoiseReport JSON files; drawn as one bar group each.
    #[arg(long = "report")]
    reports: Vec<PathBuf>,
    /// Loss CSV files from `train`; drawn as one line each.
    #[arg(long = "loss")]
    losses: Vec<PathBuf>,
    /// Event streams rendered as per-window frames.
    #[arg(long = "stream")]
    streams: Vec<PathBuf>,
    /// Frames rendered per stream.
    #[arg(long, default_value_t = 4)]
    frames: usize,
    #[arg(long, default_value_t = 10_000)]
    dt_us: u64,
    #[arg(short = 'o', long)]
    out: PathBuf,
}

/// Rewrites `-i2` to `--i2` and splices `--config` entries in front of the
/// subcommand's own flags.
fn preprocess(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut args: Vec<OsString> = args
        .into_iter()
        .map(|a| if a == "-i2" { OsString::from("--i2") } else { a })
        .collect();
    let mut config = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            config = args.get(i + 1).map(PathBuf::from);
            break;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
            break;
        }
        i += 1;
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Runtime(Error::io(&path, e)))?;
    let entries = parse_config(&text).map_err(|m| usage(format!("{}: {m}", path.display())))?;
    let Some(sub) = args.iter().position(|a| SUBCOMMANDS.iter().any(|s| a == *s)) else {
        return Ok(args);
    };
    let tokens = config_tokens(&entries);
    args.splice(sub + 1..sub + 1, tokens.into_iter().map(OsString::from));
    Ok(args)
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("EVDN_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| usage(format!("EVDN_THREADS must be a positive integer, got '{v}'")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // The global pool can only be built once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let outcome = preprocess(args.into_iter().map(Into::into).collect()).and_then(|args| match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            if code == EXIT_OK {
                Ok(())
            } else {
                Err(CliError::Usage(String::new()))
            }
        }
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            if !m.is_empty() {
                eprintln!("error: {m}");
            }
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Denoise(a) => denoise(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(Error::io(dir, e)))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Runtime(Error::io(path, e)))
}

/// Resolved config lands at `dir/config.txt`.
fn write_run_config(dir: &Path, command: &str, args: &impl Serialize) -> CliResult<()> {
    write_file(&dir.join("config.txt"), render_config(command, args))
}

/// Resolved config for a single-file output lands beside it as `<file>.config.txt`.
fn write_side_config(out: &Path, command: &str, args: &impl Serialize) -> CliResult<()> {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".config.txt");
    write_file(&out.with_file_name(name), render_config(command, args))
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn parse_res(s: &str) -> CliResult<Geometry> {
    let bad = || usage(format!("--res expects WIDTHxHEIGHT, got '{s}'"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h): (u16, u16) = (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?);
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok(Geometry::new(w, h))
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let geometry = parse_res(&a.res)?;
    let level: ThresholdLevel = a.level.parse().map_err(|_| usage(format!("--level must be 0, -10, -20 or -30, got '{}'", a.level)))?;
    let rate = a.noise_rate.unwrap_or(level.noise_rate());
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(usage(format!("--noise-rate must be >= 0, got {rate}")));
    }
    let c = a.contrast_threshold.unwrap_or(level.contrast_threshold());
    if !(c > 0.0) || !c.is_finite() {
        return Err(usage(format!("--contrast-threshold must be > 0, got {c}")));
    }
    if a.duration_ms == 0 {
        return Err(usage("--duration-ms must be positive"));
    }
    if a.dt_us == 0 {
        return Err(usage("--dt-us must be positive"));
    }
    let seed2 = match (a.dual, a.seed2) {
        (true, None) => return Err(usage("--dual requires --seed2")),
        (true, Some(s)) if s == a.seed => return Err(usage("--seed2 must differ from --seed")),
        (false, Some(_)) => return Err(usage("--seed2 is only meaningful with --dual")),
        (_, s) => s,
    };
    let kind = match a.scene {
        SceneArg::MovingBar => SceneKind::MovingBar(MovingBar {
            width: a.bar_width,
            length: a.bar_length,
            velocity: a.velocity,
            ..MovingBar::default()
        }),
        SceneArg::MovingTexture => SceneKind::MovingTexture(MovingTexture {
            seed: a.seed,
            ..MovingTexture::default()
        }),
        SceneArg::Static => SceneKind::Constant { log_intensity: 0.0 },
        SceneArg::Ramp => SceneKind::Ramp { base: 0.0, slope: 1.0 },
    };
    let scene = Scene::new(kind, geometry, a.duration_ms * 1000).map_err(|e| usage(e.to_string()))?;
    let pix = PixelModelParams {
        contrast_threshold: c,
        refractory_us: a.refractory_us,
        dt_sim_us: a.dt_sim_us,
    };
    pix.validate().map_err(|e| usage(e.to_string()))?;
    let noise = NoiseParams::uniform(rate, a.seed);

    create_dir(&a.out)?;
    let ext = match a.format {
        FormatArg::Text => "txt",
        FormatArg::Binary => "evd",
    };
    let mut manifest = DatasetManifest::new(geometry, a.dt_us);
    let raw = if let Some(seed2) = seed2 {
        let DualStream { s1, s2 } = dual_sample(&scene, &pix, &noise, a.seed, seed2, a.jitter_us)?;
        let names = [format!("s1.{ext}"), format!("s2.{ext}")];
        evio::write_events(&s1, a.out.join(&names[0]), a.format.into())?;
        evio::write_events(&s2, a.out.join(&names[1]), a.format.into())?;
        names
            .into_iter()
            .map(PathBuf::from)
            .collect::<Vec<_>>()
    } else {
        let signal = render_signal_events(&scene, &pix)?;
        let noise = sample_ba_noise(&noise, geometry, scene.duration)?;
        let s = LabeledEventStream::merge(&signal, &noise)?;
        let name = format!("stream.{ext}");
        evio::write_events(&s, a.out.join(&name), a.format.into())?;
        vec![PathBuf::from(name)]
    };
    manifest.sequences.push(SequenceEntry {
        name: "sim".into(),
        gt: Some(raw[0].clone()),
        raw,
        split: a.split.into(),
    });
    manifest.save(a.out.join("manifest.json"))?;
    write_run_config(&a.out, "simulate", &a)?;
    Ok(())
}

fn read_stream(path: &Path) -> CliResult<LabeledEventStream> {
    Ok(evio::read_events(path, Format::from_path(path))?)
}

fn denoise(a: DenoiseArgs) -> CliResult<()> {
    if a.dt_us == 0 {
        return Err(usage("--dt-us must be positive"));
    }
    let ded_params = DedParams {
        dt_us: a.dt_us,
        n_windows: a.n_windows,
        radius: a.radius,
        min_count: a.min_count,
        tau_corr_us: a.tau_corr_us,
        context: match a.context {
            ContextArg::Centered => ContextMode::Centered,
            ContextArg::Trailing => ContextMode::Trailing,
        },
        source: match a.gt_source {
            SourceArg::Stream1 => GtSource::Stream1,
            SourceArg::Stream2 => GtSource::Stream2,
            SourceArg::Union => GtSource::Union,
        },
    };
    match a.method {
        MethodArg::Ded => {
            ded_params.validate().map_err(|e| usage(e.to_string()))?;
            if a.i2.is_none() {
                return Err(usage("--method ded requires a second input via --i2 (or -i2)"));
            }
        }
        MethodArg::Snn if a.checkpoint.is_none() => return Err(usage("--method snn requires --checkpoint")),
        MethodArg::Snn if a.time_steps == 0 => return Err(usage("--time-steps must be positive")),
        _ => {}
    }
    let input = read_stream(&a.input)?;
    let pred = match a.method {
        MethodArg::Ded => {
            let second = read_stream(a.i2.as_ref().expect("checked above"))?;
            let dual = DualStream::new(input, second)?;
            ded_pipeline(&dual, &ded_params)?
        }
        MethodArg::Density => Filter::Density(DensityParams {
            radius: a.density_radius,
            window_us: a.density_window_us,
            support: a.density_support,
        })
        .apply(input.stream())?,
        MethodArg::Rowcol => Filter::RowCol(RowColParams {
            depth: a.rowcol_depth,
            window_us: a.rowcol_window_us,
        })
        .apply(input.stream())?,
        MethodArg::Timesurface => Filter::TimeSurface(TimeSurfaceParams {
            tau_us: a.ts_tau_us,
            radius: a.ts_radius,
            theta: a.ts_theta,
        })
        .apply(input.stream())?,
        MethodArg::Snn => {
            let net = dtsnn::load_checkpoint(a.checkpoint.as_ref().expect("checked above"))?;
            dtsnn::denoise_stream(&net, input.stream(), a.dt_us, a.time_steps)?
        }
    };
    let pred = if a.kept_only {
        LabeledEventStream::uniform(pred.select(Label::Signal), Label::Signal)
    } else {
        pred
    };
    let format = a.format.map(Format::from).unwrap_or_else(|| Format::from_path(&a.out));
    ensure_parent(&a.out)?;
    evio::write_events(&pred, &a.out, format)?;
    write_side_config(&a.out, "denoise", &a)?;
    Ok(())
}

fn train(a: TrainArgs) -> CliResult<()> {
    let mode = match a.mode {
        ModeArg::Dt => ThresholdMode::Dynamic,
        ModeArg::Ft => ThresholdMode::Fixed(a.fixed_threshold),
    };
    let cfg = dtsnn::TrainConfig {
        lr: a.lr,
        batch_size: a.batch_size,
        weights: dtsnn::LossWeights {
            l1: a.w_l1,
            bce: a.w_bce,
            threshold: a.w_threshold,
        },
        time_steps: a.time_steps,
        iterations: a.iterations,
        seed: a.seed,
        ..dtsnn::TrainConfig::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let manifest = load_manifest(&a.manifest)?;
    let split: Split = a.split.into();
    let selected = DatasetManifest {
        sequences: manifest.sequences.iter().filter(|s| s.split == split).cloned().collect(),
        ..manifest.clone()
    };
    if selected.sequences.is_empty() {
        return Err(usage(format!("manifest has no '{}' entries", serde_json::to_string(&split).unwrap_or_default().trim_matches('"'))));
    }
    let mut samples = Vec::new();
    for (i, pair) in evio::iterate_pairs(&selected).enumerate() {
        let (raw, gt) = pair?;
        let sc = SampleConfig {
            dt_us: manifest.dt_us,
            time_steps: a.time_steps,
            crop: a.crop,
            crops_per_chunk: a.crops_per_chunk,
            label_windows: a.label_windows,
            label_radius: a.label_radius,
            seed: a.seed.wrapping_add(i as u64),
        };
        samples.extend(dtsnn::make_samples(&raw, &gt, &sc)?);
    }
    create_dir(&a.out)?;
    let mut net = Network::new(mode, a.seed);
    let mut log = String::from("step,total,l1,bce,threshold\n");
    let started = Instant::now();
    dtsnn::fit(&mut net, &samples, &cfg, |step, l| {
        log.push_str(&format!("{step},{},{},{},{}\n", l.total, l.l1, l.bce, l.threshold));
        if step % 50 == 0 {
            eprintln!("step {step}: loss {:.5} ({:.1}s)", l.total, started.elapsed().as_secs_f64());
        }
    })?;
    dtsnn::save_checkpoint(&net, a.out.join("checkpoint.dtsn"))?;
    write_file(&a.out.join("loss.csv"), log)?;
    write_run_config(&a.out, "train", &a)?;
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult<()> {
    if a.patch == 0 {
        return Err(usage("--patch must be positive"));
    }
    let pred = read_stream(&a.pred)?;
    let gt = read_stream(&a.gt)?;
    let method = a
        .method
        .clone()
        .unwrap_or_else(|| a.pred.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "pred".into()));
    let report = DenoiseReport::build(&method, &pred, &gt, a.patch)?;
    ensure_parent(&a.out)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&a.out, json + "\n")?;
    write_side_config(&a.out, "eval", &a)?;
    Ok(())
}

fn report(a: ReportArgs) -> CliResult<()> {
    if a.reports.is_empty() && a.losses.is_empty() && a.streams.is_empty() {
        return Err(usage("report needs at least one --report, --loss or --stream"));
    }
    if a.dt_us == 0 {
        return Err(usage("--dt-us must be positive"));
    }
    create_dir(&a.out)?;
    if !a.reports.is_empty() {
        let mut reports = Vec::new();
        for p in &a.reports {
            let text = fs::read_to_string(p).map_err(|e| CliError::Runtime(Error::io(p, e)))?;
            let r: DenoiseReport = serde_json::from_str(&text).map_err(|e| {
                CliError::Runtime(Error::Parse {
                    path: p.clone(),
                    location: format!("line {}", e.line()),
                    message: e.to_string(),
                })
            })?;
            reports.push(r);
        }
        write_file(&a.out.join("metrics.svg"), plot::metrics_svg(&reports))?;
    }
    if !a.losses.is_empty() {
        let mut series = Vec::new();
        for p in &a.losses {
            let text = fs::read_to_string(p).map_err(|e| CliError::Runtime(Error::io(p, e)))?;
            let values = plot::parse_loss_csv(&text).map_err(|m| {
                CliError::Runtime(Error::Parse {
                    path: p.clone(),
                    location: m.0,
                    message: m.1,
                })
            })?;
            let name = p
                .parent()
                .and_then(|d| d.file_name())
                .or(p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            series.push((name, values));
        }
        write_file(&a.out.join("loss.svg"), plot::loss_svg(&series))?;
    }
    for p in &a.streams {
        let s = read_stream(p)?;
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "stream".into());
        for (k, img) in plot::event_frames_ppm(&s, a.dt_us, a.frames).into_iter().enumerate() {
            write_file(&a.out.join(format!("{stem}_{k:04}.ppm")), img)?;
        }
    }
    write_run_config(&a.out, "report", &a)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn short_i2_is_rewritten() {
        let out = preprocess(os(&["evdn", "denoise", "-i", "a", "-i2", "b"])).unwrap();
        assert_eq!(out, os(&["evdn", "denoise", "-i", "a", "--i2", "b"]));
    }

    #[test]
    fn config_entries_precede_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        fs::write(&cfg, "# run\nseed = 4\ndual = true\nres = 64x32\nout = o\n").unwrap();
        let out = preprocess(os(&["evdn", "simulate", "--config", cfg.to_str().unwrap(), "--seed", "9"])).unwrap();
        let s: Vec<String> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(&s[..7], ["evdn", "simulate", "--seed", "4", "--dual", "--res", "64x32"]);
        let cli = Cli::try_parse_from(out).unwrap();
        let Command::Simulate(a) = cli.command else { panic!() };
        assert_eq!(a.seed, 9);
        assert!(a.dual);
        assert_eq!(a.res, "64x32");
    }

    #[test]
    fn resolutions() {
        assert_eq!(parse_res("64x32").unwrap(), Geometry::new(64, 32));
        assert!(parse_res("64").is_err());
        assert!(parse_res("0x4").is_err());
    }
}
