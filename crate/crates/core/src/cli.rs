//! Command-line front end. Every command is a pure function of its flags,
//! input files and `--seed`; the seed is written into every artifact.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baseline::calibrate_segments;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvalReport, Prediction, DEFAULT_IOU};
use crate::height_model::{task_error, task_error_curve, HeightPreset};
use crate::keypoints::{normalize_pose, read_poses, BoundingBox, Pose2D, PoseRecord};
use crate::regressor::{
    load_weights, save_weights, train, Architecture, LocalizationEstimate, LossKind, McConfig, TrainingConfig,
};
use crate::social::{analyze, GroundPose, SocialConfig, SocialMode};
use crate::synthetic::{generate_dataset, Frustum, GroundPlacement, SceneConfig};

pub const SUBCOMMANDS: [&str; 6] = ["simulate", "train", "predict", "eval", "task-error", "monitor"];

#[derive(Debug, Parser)]
#[command(name = "pedloc", version, about = "Monocular 3D pedestrian localization with uncertainty")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed for every random choice; recorded in each output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// JSON object whose keys are injected as `--key value` flags ahead of
    /// the command line (explicit flags win).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// No progress messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset (JSON lines).
    Simulate(SimulateArgs),
    /// Train the regressor.
    Train(TrainArgs),
    /// Run a trained network on a pose file.
    Predict(PredictArgs),
    /// Score estimates against a labeled dataset.
    Eval(EvalArgs),
    /// Tabulate the height-ambiguity error against distance.
    TaskError(TaskErrorArgs),
    /// Detect interactions or distancing violations.
    Monitor(MonitorArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Heights {
    Adults,
    #[value(name = "adults+teens")]
    AdultsTeens,
}

impl Heights {
    fn preset(self) -> HeightPreset {
        match self {
            Heights::Adults => HeightPreset::Adults,
            Heights::AdultsTeens => HeightPreset::AdultsAndTeens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ground {
    /// Every person on their own ground level (repo default).
    PerPerson,
    /// One flat ground plane 1.65 m below the camera.
    Plane,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of people.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Std of Gaussian keypoint noise, pixels.
    #[arg(long, default_value_t = 0.0)]
    pub noise_px: f64,
    #[arg(long, value_enum, default_value_t = Heights::Adults)]
    pub heights: Heights,
    /// People per image (repo default 1).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub people_per_scene: u64,
    #[arg(long, value_enum, default_value_t = Ground::PerPerson)]
    pub ground: Ground,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Laplace,
    L1,
    Gaussian,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Laplace => LossKind::Laplace,
            LossArg::L1 => LossKind::L1,
            LossArg::Gaussian => LossKind::Gaussian,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled dataset (JSON lines).
    #[arg(long)]
    pub data: PathBuf,
    /// Weight file to write; history and calibration sidecars go next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    /// Dropout probability.
    #[arg(long, default_value_t = 0.2)]
    pub p_drop: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Laplace)]
    pub loss: LossArg,
    /// Hidden layer width.
    #[arg(long, default_value_t = 1024)]
    pub width: usize,
    #[arg(long, default_value_t = 6)]
    pub hidden_layers: usize,
    #[arg(long, default_value_t = 2)]
    pub residual_blocks: usize,
    /// Add the dropout weight regularizer (repo default: off).
    #[arg(long)]
    pub regularize: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub weights: PathBuf,
    /// Pose file (JSON lines, ground truth optional).
    #[arg(long)]
    pub poses: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Stochastic forward passes; 0 disables MC dropout.
    #[arg(long, default_value_t = 50)]
    pub mc_passes: usize,
    /// Laplace samples per pass.
    #[arg(long, default_value_t = 100)]
    pub mc_samples: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output of `predict`.
    #[arg(long)]
    pub estimates: PathBuf,
    /// Labeled dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one CSV row per bin and threshold.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write a (distance, ALE, task error) table per bin.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_IOU)]
    pub iou: f64,
    /// Height distribution for the task-error column.
    #[arg(long, value_enum, default_value_t = Heights::Adults)]
    pub heights: Heights,
}

#[derive(Debug, Args)]
pub struct TaskErrorArgs {
    #[arg(long, value_enum, default_value_t = Heights::Adults)]
    pub heights: Heights,
    #[arg(long, default_value_t = 40.0)]
    pub max_distance: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// `predict` output (JSON) or a labeled dataset (JSON lines, ground truth
    /// used as input).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Interaction)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub d_max: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.3, 0.5, 1.0])]
    pub radii: Vec<f64>,
    /// Laplace samples per person (repo default 100).
    #[arg(long, default_value_t = 100)]
    pub n_samples: usize,
    /// Vote fraction needed for a positive verdict.
    #[arg(long, default_value_t = 0.25)]
    pub threshold: f64,
    /// Ignore spreads: one exact check per pair (voting with a single
    /// sample at zero spread).
    #[arg(long)]
    pub deterministic: bool,
    /// Drop the mutual-orientation condition.
    #[arg(long)]
    pub no_orientation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Interaction,
    Distancing,
}

/// One line of `predict` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<u64>,
    pub d: f64,
    /// Relative spread.
    pub b: Option<f64>,
    /// Spread in meters.
    pub spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub beta: f64,
    pub psi: f64,
    pub theta: f64,
    pub xyz: [f64; 3],
    pub dims: [f64; 3],
    #[serde(rename = "box")]
    pub bbox: Option<BoundingBox>,
    pub pose: Pose2D,
}

impl EstimateRow {
    fn new(index: usize, rec: &PoseRecord, e: &LocalizationEstimate) -> Self {
        Self {
            index,
            scene: rec.scene,
            d: e.d,
            b: e.b,
            spread: e.spread_m(),
            sigma: e.sigma,
            beta: e.beta,
            psi: e.psi,
            theta: e.theta,
            xyz: e.xyz().to_array(),
            dims: e.dims,
            bbox: rec.pose.bounding_box(),
            pose: rec.pose,
        }
    }

    pub fn estimate(&self) -> LocalizationEstimate {
        LocalizationEstimate {
            d: self.d,
            b: self.b,
            beta: self.beta,
            psi: self.psi,
            theta: self.theta,
            dims: self.dims,
            sigma: self.sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatesFile {
    pub seed: u64,
    pub estimates: Vec<EstimateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub seed: u64,
    pub mode: SocialMode,
    /// Pairs of input indices in the same scene.
    pub pairs: Vec<crate::social::PairVerdict>,
    pub at_risk: Vec<usize>,
}

/// Inserts the keys of the `--config` JSON object right after the
/// subcommand so flags given on the command line, which come later, win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let map: BTreeMap<String, serde_json::Value> = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("{}: config must be a JSON object ({e})", path.display())))?;
    let mut injected = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            serde_json::Value::Bool(true) => injected.push(OsString::from(flag)),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => {
                injected.push(flag.into());
                injected.push(s.into());
            }
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|v| v.as_str().map(str::to_owned).unwrap_or_else(|| v.to_string()))
                    .collect();
                injected.push(flag.into());
                injected.push(joined.join(",").into());
            }
            other => {
                injected.push(flag.into());
                injected.push(other.to_string().into());
            }
        }
    }
    let at = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|i| i + 1)
        .unwrap_or(args.len());
    let mut out = args[..at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

struct Ctx {
    seed: u64,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Path of a sidecar next to `base`, e.g. `w.json` -> `w.json.history.csv`.
pub fn sidecar(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn check_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Error::InvalidArgument(format!(
            "output directory {} does not exist",
            p.display()
        ))),
        _ => Ok(()),
    }
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::InvalidArgument(format!("input file {} does not exist", path.display())));
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = expand_config(args.into_iter().map(Into::into).collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::InvalidArgument(e.to_string())),
    };
    dispatch(cli)
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Ctx { seed: cli.seed, quiet: cli.quiet };
    match cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Predict(a) => predict(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::TaskError(a) => cmd_task_error(&ctx, a),
        Command::Monitor(a) => monitor(&ctx, a),
    }
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<()> {
    check_parent(&a.out)?;
    let ground = match a.ground {
        Ground::PerPerson => Frustum::default().ground,
        Ground::Plane => GroundPlacement::Plane { y: 1.65 },
    };
    let cfg = SceneConfig {
        heights: a.heights.preset().distribution(),
        pixel_noise_std: a.noise_px,
        people_per_scene: a.people_per_scene as usize,
        frustum: Frustum { ground, ..Frustum::default() },
        ..SceneConfig::default()
    };
    generate_dataset(a.n as usize, &cfg, ctx.seed, &a.out)?;
    ctx.note(format!("wrote {} records to {}", a.n, a.out.display()));
    Ok(())
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    check_input(&a.data)?;
    check_parent(&a.out)?;
    let records = read_poses(&a.data)?;
    let cfg = TrainingConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch_size,
        p_drop: a.p_drop,
        seed: ctx.seed,
        loss: a.loss.into(),
        regularize: a.regularize,
        architecture: Architecture {
            width: a.width,
            hidden_layers: a.hidden_layers,
            residual_blocks: a.residual_blocks,
            ..Architecture::default()
        },
        ..TrainingConfig::default()
    };
    ctx.note(format!("training on {} records for {} epochs", records.len(), cfg.epochs));
    let (model, history) = train(&records, &cfg)?;
    save_weights(&model, &a.out)?;
    let mut csv = format!("# seed: {}\nepoch,train_loss\n", ctx.seed);
    for e in &history {
        let _ = writeln!(csv, "{},{}", e.epoch, e.train_loss);
    }
    write_file(&sidecar(&a.out, ".history.csv"), csv)?;
    match calibrate_segments(&records) {
        Ok(cal) => cal.save(sidecar(&a.out, ".calibration.json"))?,
        Err(e) => ctx.note(format!("skipping segment calibration: {e}")),
    }
    if let Some(last) = history.last() {
        ctx.note(format!("final training loss {:.5}", last.train_loss));
    }
    Ok(())
}

fn predict(ctx: &Ctx, a: PredictArgs) -> Result<()> {
    check_input(&a.weights)?;
    check_input(&a.poses)?;
    check_parent(&a.out)?;
    let model = load_weights(&a.weights)?;
    let records = read_poses(&a.poses)?;
    let inputs = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            normalize_pose(&r.pose, &r.intrinsics).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })
        })
        .collect::<Result<Vec<_>>>()?;
    let estimates = if a.mc_passes == 0 {
        model.predict_batch(&inputs)?
    } else {
        model.predict_mc_batch(&inputs, McConfig { passes: a.mc_passes, samples: a.mc_samples }, ctx.seed)?
    };
    let rows = records.iter().zip(&estimates).enumerate().map(|(i, (r, e))| EstimateRow::new(i, r, e)).collect();
    let file = EstimatesFile { seed: ctx.seed, estimates: rows };
    write_file(&a.out, serde_json::to_string_pretty(&file)?)?;
    ctx.note(format!("wrote {} estimates to {}", estimates.len(), a.out.display()));
    Ok(())
}

fn read_estimates(path: &Path) -> Result<EstimatesFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    seed: u64,
    #[serde(flatten)]
    report: &'a EvalReport,
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    check_input(&a.estimates)?;
    check_input(&a.data)?;
    check_parent(&a.out)?;
    let est = read_estimates(&a.estimates)?;
    let records = read_poses(&a.data)?;
    let preds: Vec<Prediction> = est
        .estimates
        .iter()
        .map(|r| Prediction { pose: r.pose, estimate: r.estimate(), scene: r.scene })
        .collect();
    let report = evaluate(&preds, &records, a.iou)?;
    write_file(&a.out, serde_json::to_string_pretty(&EvalOutput { seed: est.seed, report: &report })?)?;
    if let Some(csv_path) = &a.csv {
        let mut csv = format!("# seed: {}\nmetric,key,value,count\n", est.seed);
        for b in &report.bins {
            let _ = writeln!(csv, "ale,\"{}\",{},{}", b.label(), b.ale, b.count);
        }
        for (t, acc) in &report.ala.accuracy {
            let _ = writeln!(csv, "ala,{t},{acc},{}", report.ground_truths);
        }
        let _ = writeln!(csv, "recall,,{},{}", report.ala.recall, report.ground_truths);
        if let Some(r) = report.interval_recall_b {
            let _ = writeln!(csv, "interval_recall,b,{r},{}", report.matched);
        }
        if let Some(r) = report.interval_recall_sigma {
            let _ = writeln!(csv, "interval_recall,sigma,{r},{}", report.matched);
        }
        write_file(csv_path, csv)?;
    }
    if let Some(curve_path) = &a.curve {
        let dist = a.heights.preset().distribution();
        let mut csv = format!("# seed: {}\ndistance_m,ale_m,task_error_m\n", est.seed);
        for b in &report.bins {
            let _ = writeln!(csv, "{},{},{}", b.mean_distance, b.ale, task_error(&dist, b.mean_distance));
        }
        write_file(curve_path, csv)?;
    }
    ctx.note(format!("matched {} of {} ground truths", report.matched, report.ground_truths));
    Ok(())
}

fn cmd_task_error(ctx: &Ctx, a: TaskErrorArgs) -> Result<()> {
    if let Some(out) = &a.out {
        check_parent(out)?;
    }
    let dist = a.heights.preset().distribution();
    let curve = task_error_curve(&dist, a.max_distance, a.step)?;
    let mut csv = format!("# seed: {}\n# heights: {}\ndistance_m,task_error_m\n", ctx.seed, a.heights.preset().name());
    for (d, e) in curve {
        let _ = writeln!(csv, "{d},{e}");
    }
    match &a.out {
        Some(p) => write_file(p, csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// People grouped by scene, with their input indices.
fn monitor_input(path: &Path, deterministic: bool) -> Result<Vec<(Option<u64>, usize, GroundPose)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut people = Vec::new();
    if let Ok(file) = serde_json::from_str::<EstimatesFile>(&text) {
        for r in &file.estimates {
            let mut g = GroundPose::from_estimate(&r.estimate());
            if deterministic {
                g.b = 0.0;
            }
            people.push((r.scene, r.index, g));
        }
    } else {
        let records = crate::keypoints::parse_poses(text.as_bytes())?;
        for (i, r) in records.iter().enumerate() {
            let gt = r.gt.as_ref().ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "monitoring a pose file needs ground truth; run predict first".into(),
            })?;
            people.push((r.scene, i, GroundPose::from_ground_truth(gt)));
        }
    }
    Ok(people)
}

fn monitor(ctx: &Ctx, a: MonitorArgs) -> Result<()> {
    check_input(&a.input)?;
    check_parent(&a.out)?;
    let mode = match a.mode {
        ModeArg::Interaction => SocialMode::Interaction,
        ModeArg::Distancing => SocialMode::Distancing,
    };
    let cfg = SocialConfig {
        d_max: a.d_max,
        radii: a.radii.clone(),
        mode,
        n_samples: a.n_samples,
        threshold: a.threshold,
        seed: ctx.seed,
        use_orientation: !a.no_orientation,
    };
    let people = monitor_input(&a.input, a.deterministic)?;
    let mut scenes: BTreeMap<Option<u64>, Vec<(usize, GroundPose)>> = BTreeMap::new();
    for (scene, idx, g) in people {
        scenes.entry(scene).or_default().push((idx, g));
    }
    let mut pairs = Vec::new();
    let mut at_risk = Vec::new();
    for members in scenes.values() {
        let poses: Vec<GroundPose> = members.iter().map(|(_, g)| *g).collect();
        let scene_cfg = SocialConfig { seed: cfg.seed ^ members[0].0 as u64, ..cfg.clone() };
        let report = analyze(&poses, &scene_cfg)?;
        for mut p in report.pairs {
            p.i = members[p.i].0;
            p.j = members[p.j].0;
            pairs.push(p);
        }
        at_risk.extend(report.at_risk.iter().map(|&k| members[k].0));
    }
    pairs.sort_by_key(|p| (p.i, p.j));
    at_risk.sort_unstable();
    let n_pos = pairs.iter().filter(|p| p.interacting).count();
    let report = MonitorReport { seed: ctx.seed, mode, pairs, at_risk };
    write_file(&a.out, serde_json::to_string_pretty(&report)?)?;
    ctx.note(format!("{n_pos} positive pairs, {} people flagged", report.at_risk.len()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_keys_follow_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"epochs": 3, "regularize": true, "p_drop": 0.1, "radii": [0.3, 1.0]}"#).unwrap();
        let args = os(&["pedloc", "--config", cfg.to_str().unwrap(), "train", "--epochs", "5"]);
        let out = expand_config(args).unwrap();
        let s: Vec<String> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        let t = s.iter().position(|a| a == "train").unwrap();
        assert_eq!(s[t + 1..t + 3], ["--epochs".to_string(), "3".to_string()]);
        assert!(s.contains(&"--regularize".to_string()));
        assert!(s.contains(&"0.3,1.0".to_string()));
        assert_eq!(s.last().unwrap(), "5");
    }

    #[test]
    fn later_flags_win() {
        let cli = Cli::try_parse_from(os(&[
            "pedloc", "train", "--data", "d", "--out", "w", "--epochs", "3", "--epochs", "5",
        ]))
        .unwrap();
        match cli.command {
            Command::Train(a) => assert_eq!(a.epochs, 5),
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_follow_published_hyperparameters() {
        let cli = Cli::try_parse_from(os(&["pedloc", "train", "--data", "d", "--out", "w"])).unwrap();
        let Command::Train(a) = cli.command else { unreachable!() };
        assert_eq!((a.epochs, a.lr, a.batch_size, a.width, a.hidden_layers), (200, 1e-3, 512, 1024, 6));
        let cli = Cli::try_parse_from(os(&["pedloc", "predict", "--weights", "w", "--poses", "p", "--out", "o"])).unwrap();
        let Command::Predict(a) = cli.command else { unreachable!() };
        assert_eq!((a.mc_passes, a.mc_samples), (50, 100));
    }

    #[test]
    fn zero_records_is_a_usage_error() {
        assert!(Cli::try_parse_from(os(&["pedloc", "simulate", "--n", "0", "--out", "x"])).is_err());
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("a/w.json"), ".history.csv"), PathBuf::from("a/w.json.history.csv"));
    }
}
