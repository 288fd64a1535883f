//! The `thermoscan` command line.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, inputs a mode
//! needs but was not given) and 2 for data or contract errors (unreadable
//! files, a lost anchor, infeasible scenes).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adaptive::{init_anchor, AnchorSpec, ReferenceAnchor};
use crate::background::BackgroundModel;
use crate::classify::codec;
use crate::config::Config;
use crate::detect::{self, Pipeline};
use crate::error::Error;
use crate::eval::{self, BenchInput, BenchReport};
use crate::imaging::{pgm, BoundingBox, FrameSequence};
use crate::records;
use crate::synth::{generate_scene, PanSpec, SceneParams};
use crate::training;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "thermoscan",
    version,
    about = "Human detection in thermal video from fixed or panning cameras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic panning-camera sequence with ground truth.
    Synth(SynthArgs),
    /// Write an anchor file after checking the object is centred in the region.
    BgInit(BgInitArgs),
    /// Train a linear SVM on a sequence and its truth boxes.
    Train(TrainArgs),
    /// Detect people in every frame of a sequence.
    Detect(DetectArgs),
    /// Measure precision, recall and time for several modes.
    Bench(BenchArgs),
}

/// Settings shared by commands that run the detector.
#[derive(Debug, Args)]
struct Tuning {
    /// Config file (key = value); falls back to $THERMOSCAN_CONFIG.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    tau: Option<u8>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    /// Comma-separated scale ladder starting at 1.0.
    #[arg(long)]
    scales: Option<String>,
    /// Score windows on all cores.
    #[arg(long)]
    parallel: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    frames: usize,
    /// `dx:dy,...` per-frame steps or `lin:X,Y,K`; default `lin:45,10,FRAMES`.
    #[arg(long, value_name = "SPEC")]
    pan: Option<String>,
    #[arg(long, default_value_t = 1)]
    humans: usize,
    #[arg(long, default_value_t = 2.0)]
    noise: f64,
    #[arg(long, default_value_t = 2)]
    decoys: usize,
    #[arg(long, default_value_t = 352)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
}

#[derive(Debug, Args)]
struct BgInitArgs {
    #[arg(long, value_name = "DIR")]
    seq: PathBuf,
    #[arg(long, value_name = "X,Y,W,H")]
    region: String,
    #[arg(long, value_name = "X,Y,W,H")]
    object: String,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_name = "DIR")]
    seq: PathBuf,
    #[arg(long, value_name = "FILE")]
    truth: PathBuf,
    #[arg(long, value_name = "MODEL")]
    out: PathBuf,
    /// Also train on background-subtracted views of the frames.
    #[arg(long, value_name = "FILE")]
    bg: Option<PathBuf>,
    /// Register the background per frame before subtracting (needs --bg).
    #[arg(long, value_name = "FILE")]
    anchor: Option<PathBuf>,
    /// Retrain once with windows the first model wrongly accepts.
    #[arg(long)]
    hard_negatives: bool,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[arg(long, value_name = "DIR")]
    seq: PathBuf,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// hog, bs or abs.
    #[arg(long)]
    mode: Pipeline,
    #[arg(long, value_name = "FILE")]
    bg: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    anchor: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_name = "DIR")]
    seq: PathBuf,
    #[arg(long, value_name = "FILE")]
    truth: PathBuf,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Comma-separated modes, e.g. `hog,bs,abs`.
    #[arg(long, value_delimiter = ',', default_value = "hog,bs,abs")]
    modes: Vec<Pipeline>,
    #[arg(long, value_name = "FILE")]
    bg: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    anchor: Option<PathBuf>,
    /// Report CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Per mode, use the highest theta that still finds every person.
    #[arg(long)]
    tune_theta: bool,
    #[command(flatten)]
    tuning: Tuning,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Synth(a) => synth(a),
        Command::BgInit(a) => bg_init(a),
        Command::Train(a) => train(a),
        Command::Detect(a) => detect_cmd(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

impl Tuning {
    /// Flags over `--set` over the config file over defaults.
    fn config(&self) -> CliResult<Config> {
        let mut c = Config::resolve(self.config.as_deref())?;
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            c.set(k.trim(), v).map_err(usage)?;
        }
        let flags = [
            ("tau", self.tau.map(|v| v.to_string())),
            ("rho", self.rho.map(|v| v.to_string())),
            ("theta", self.theta.map(|v| v.to_string())),
            ("stride", self.stride.map(|v| v.to_string())),
            ("scales", self.scales.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, &v).map_err(|m| usage(format!("--{m}")))?;
            }
        }
        if self.parallel {
            c.parallel = true;
        }
        c.validate().map_err(|e| usage(e.to_string()))?;
        Ok(c)
    }
}

fn parse_box(flag: &str, s: &str) -> CliResult<BoundingBox> {
    s.parse().map_err(|e: Error| usage(format!("--{flag} {s:?}: {e}")))
}

fn synth(a: SynthArgs) -> CliResult {
    let pan = match &a.pan {
        Some(spec) => spec.parse::<PanSpec>().map_err(|e| usage(format!("--pan: {e}")))?,
        None => PanSpec::Linear {
            x: eval::STANDARD_PAN.0,
            y: eval::STANDARD_PAN.1,
            frames: a.frames.max(1),
        },
    };
    if a.frames == 0 {
        return Err(usage("--frames must be at least 1"));
    }
    if !(a.noise >= 0.0 && a.noise.is_finite()) {
        return Err(usage(format!("--noise must be a non-negative number, got {}", a.noise)));
    }
    let params = SceneParams {
        viewport_w: a.width,
        viewport_h: a.height,
        frames: a.frames,
        pan,
        humans_per_frame: a.humans,
        noise_sigma: a.noise,
        decoys: a.decoys,
        ..SceneParams::default()
    };
    let scene = generate_scene(a.seed, &params)?;
    scene.export(&a.out)?;
    println!(
        "wrote {} frames, truth.csv, shifts.csv, anchor.txt and background.pgm to {}",
        scene.len(),
        a.out.display()
    );
    Ok(())
}

fn bg_init(a: BgInitArgs) -> CliResult {
    let region = parse_box("region", &a.region)?;
    let object = parse_box("object", &a.object)?;
    let seq = FrameSequence::load_dir(&a.seq)?;
    let first = &seq.frames()[0];
    init_anchor(first, region, object).map_err(|e| e.in_frame(seq.ids()[0].clone()))?;
    AnchorSpec { region, object }.save(&a.out)?;
    println!("anchor written to {}", a.out.display());
    Ok(())
}

fn load_bg(path: &Path) -> CliResult<BackgroundModel> {
    Ok(BackgroundModel::new(pgm::load(path)?))
}

/// The anchor's template is cut from the reference background.
fn load_anchor(path: &Path, bg: &BackgroundModel) -> CliResult<ReferenceAnchor> {
    let spec = AnchorSpec::load(path)?;
    Ok(spec.anchor(bg.reference()).map_err(|e| e.in_file(path))?)
}

fn check_dims(seq: &FrameSequence, bg: Option<&BackgroundModel>, bg_path: Option<&Path>) -> CliResult {
    if let (Some(bg), Some(p)) = (bg, bg_path) {
        if bg.dims() != seq.dims() {
            return Err(Error::DimensionMismatch {
                expected: seq.dims(),
                actual: bg.dims(),
            }
            .in_file(p)
            .into());
        }
    }
    Ok(())
}

fn train(a: TrainArgs) -> CliResult {
    let cfg = a.tuning.config()?;
    if a.anchor.is_some() && a.bg.is_none() {
        return Err(usage("--anchor needs --bg"));
    }
    let seq = FrameSequence::load_dir(&a.seq)?;
    let truths = records::truth_for(&a.truth, seq.ids())?;
    let bg = a.bg.as_deref().map(load_bg).transpose()?;
    check_dims(&seq, bg.as_ref(), a.bg.as_deref())?;
    let anchor = match (&a.anchor, &bg) {
        (Some(p), Some(bg)) => Some(load_anchor(p, bg)?),
        _ => None,
    };
    let mut tc = cfg.train_config();
    tc.hard_negatives |= a.hard_negatives;
    let views = training::training_views(&seq, &truths, bg.as_ref(), anchor.as_ref(), &tc.detect)?;
    let model = training::train_on_views(&views, &tc)?;
    codec::save(&a.out, &model)?;
    println!("model written to {}", a.out.display());
    Ok(())
}

/// Background and anchor as the pipeline needs them; missing ones are usage errors.
fn mode_inputs(
    pipelines: &[Pipeline],
    seq: &FrameSequence,
    bg_path: Option<&Path>,
    anchor_path: Option<&Path>,
) -> CliResult<(Option<BackgroundModel>, Option<ReferenceAnchor>)> {
    for p in pipelines {
        if p.needs_background() && bg_path.is_none() {
            return Err(usage(format!("--mode {p} requires --bg")));
        }
        if p.needs_anchor() && anchor_path.is_none() {
            return Err(usage(format!("--mode {p} requires --anchor")));
        }
    }
    let bg = bg_path.map(load_bg).transpose()?;
    check_dims(seq, bg.as_ref(), bg_path)?;
    let anchor = match (anchor_path, &bg) {
        (Some(p), Some(bg)) if pipelines.iter().any(|p| p.needs_anchor()) => Some(load_anchor(p, bg)?),
        _ => None,
    };
    Ok((bg, anchor))
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn detect_cmd(a: DetectArgs) -> CliResult {
    let cfg = a.tuning.config()?;
    if same_dir(&a.seq, &a.out) {
        return Err(usage("--out must differ from --seq"));
    }
    let seq = FrameSequence::load_dir(&a.seq)?;
    let (bg, anchor) = mode_inputs(&[a.mode], &seq, a.bg.as_deref(), a.anchor.as_deref())?;
    let model = codec::load(&a.model)?;
    let mode = cfg.detect_mode(a.mode);
    std::fs::create_dir_all(&a.out).map_err(|e| Error::from(e).in_file(&a.out))?;
    let mut all = Vec::with_capacity(seq.len());
    for (frame, id) in seq.iter() {
        let (dets, _) =
            detect::detect(frame, &model, &mode, bg.as_ref(), anchor.as_ref()).map_err(|e| e.in_frame(id))?;
        let (w, h) = frame.dims();
        let masked = detect::apply_mask(frame, &detect::prediction_mask(&dets, w, h)?)?;
        pgm::save(a.out.join(format!("frame_{id}.masked.pgm")), &masked)?;
        records::write_detections(a.out.join(format!("frame_{id}.boxes.csv")), [(id, &dets[..])])?;
        all.push((id.to_string(), dets));
    }
    records::write_detections(
        a.out.join("detections.csv"),
        all.iter().map(|(id, d)| (id.as_str(), &d[..])),
    )?;
    let total: usize = all.iter().map(|(_, d)| d.len()).sum();
    println!(
        "{total} detections in {} frames written to {}",
        seq.len(),
        a.out.display()
    );
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult {
    let cfg = a.tuning.config()?;
    if a.modes.is_empty() {
        return Err(usage("--modes is empty"));
    }
    let seq = FrameSequence::load_dir(&a.seq)?;
    let truths = records::truth_for(&a.truth, seq.ids())?;
    let (bg, anchor) = mode_inputs(&a.modes, &seq, a.bg.as_deref(), a.anchor.as_deref())?;
    let model = codec::load(&a.model)?;
    let input = BenchInput {
        seq: &seq,
        truths: &truths,
        bg: bg.as_ref(),
        anchor: anchor.as_ref(),
        match_iou: cfg.match_iou,
    };
    let mut report = BenchReport::default();
    for &p in &a.modes {
        let mut mode = cfg.detect_mode(p);
        if a.tune_theta {
            match eval::tune_theta(&input, &model, &mode)? {
                Some(t) => mode.theta = t,
                None => eprintln!(
                    "warning: mode {p} cannot reach full recall; keeping theta {}",
                    mode.theta
                ),
            }
        }
        report.rows.push(eval::run_mode(&input, &model, p.name(), &mode)?);
    }
    report.write_csv(&a.out)?;
    print!("{}", report.to_table());
    Ok(())
}
