//! Batch command-line front end. Every command is deterministic in `--seed`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use crate::demos::{benchmark_dataset, DatasetSpec};
use crate::error::{Error, Result};
use crate::evaluation::compare::{compare_methods, parse_methods, report_csv, report_svg, CompareOptions};
use crate::evaluation::task::{reference_model, replay_task, ReplayContext, TaskScript, TASK_SCHEMA, TASK_TRACE_SCHEMA};
use crate::frames::{via_header, FramesCalibration, ViaPoint, FRAMES_SCHEMA};
use crate::grasp::{trace_header, GraspScenario, GRASP_SCHEMA};
use crate::hand::{HandModel, JointConfig, HAND_MODEL_SCHEMA};
use crate::io;
use crate::perception::corpus::{build_corpus, evaluate_confusion, ORIENTATIONS, CORPUS_SCHEMA};
use crate::perception::pipeline::{detect_objects, format_detections, DetectionParams};
use crate::perception::scene::{find_class, generate_scene, resting_pose, SceneObject, SceneSpec, SCENE_SCHEMA};
use crate::perception::svm::{svm_train, SvmModel, SvmParams, SVM_SCHEMA};
use crate::perception::{load_pcd, save_pcd};
use crate::synergy::{build_config_matrix, extract_synergies, SynergySubspace, SYNERGY_SCHEMA};
use crate::trajectory::gmm::{GmmFile, GMM_SCHEMA};
use crate::trajectory::kmp::{KmpFile, KMP_SCHEMA};
use crate::trajectory::{
    build_reference, fit_gmm, insert_via_point, split_at_time_resets, uniform_grid, GmmModel, KmpModel, KmpParams,
    SynergyTrajectory,
};

#[derive(Parser, Debug)]
#[command(name = "kinsyn", about = "Synergy-based grasp planning from point clouds", disable_version_flag = true)]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override a module default, `key=value`; see `kinsyn params`.
    #[arg(long = "params", global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Hand model file; the bundled model when absent.
    #[arg(long, global = true)]
    pub hand: Option<PathBuf>,
    /// Print the model file schema versions.
    #[arg(long)]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write synthetic benchmark demonstrations as joint-angle CSV.
    GenDemos(GenDemosArgs),
    /// Extract synergies from demonstrations; optionally fit the GMM.
    Teach(TeachArgs),
    /// Adapt a trajectory with via- and end-points.
    Adapt(AdaptArgs),
    /// Sample a synthetic scene into a PCD file.
    GenScene(GenSceneArgs),
    /// Build the synthetic corpus and train the classifier.
    TrainSvm(TrainSvmArgs),
    /// Detect and recognize objects in a point cloud.
    Detect(DetectArgs),
    /// Run a closing simulation from a grasp scenario.
    Grasp(GraspArgs),
    /// Replay a scripted task end to end.
    Replay(ReplayArgs),
    /// Compare methods on the synthetic benchmark.
    Eval(EvalArgs),
    /// List the keys accepted by `--params`.
    Params,
}

#[derive(Args, Debug)]
pub struct GenDemosArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// `train` or `test`.
    #[arg(long, default_value = "train")]
    pub split: String,
}

#[derive(Args, Debug)]
pub struct TeachArgs {
    #[arg(long)]
    pub demos: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also fit a GMM over the projected demonstrations.
    #[arg(long)]
    pub gmm_out: Option<PathBuf>,
    /// Also write the projected demonstrations as `t,e1..eS` CSV.
    #[arg(long)]
    pub trajectories_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AdaptArgs {
    #[arg(long, conflicts_with = "trajectories", required_unless_present = "trajectories")]
    pub gmm: Option<PathBuf>,
    /// `t,e1..eS` CSV, demonstrations separated by time resets.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    /// `t,mean_1..mean_S,var_1..var_S`; repeatable.
    #[arg(long = "via", allow_hyphen_values = true)]
    pub via: Vec<String>,
    /// Same layout as `--via`; repeatable.
    #[arg(long = "end", allow_hyphen_values = true)]
    pub end: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trajectory_out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenSceneArgs {
    /// Scene description file.
    #[arg(long, conflicts_with_all = ["objects", "task"])]
    pub spec: Option<PathBuf>,
    /// Catalog labels placed in a row across the table.
    #[arg(long, value_delimiter = ',')]
    pub objects: Vec<String>,
    /// Use the scene of a task script.
    #[arg(long)]
    pub task: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub spec_out: Option<PathBuf>,
    /// Write the matching frames calibration.
    #[arg(long)]
    pub frames_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainSvmArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub corpus_out: Option<PathBuf>,
    /// Evaluate on the held-out corpus and write `confusion.csv` and `confusion.svg` here.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub svm: PathBuf,
    /// Calibration; poses stay in the camera frame without it.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GraspArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    #[arg(long)]
    pub task: PathBuf,
    /// Scene description; the script's placement when absent.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Classifier; trained on the standard corpus when absent.
    #[arg(long)]
    pub svm: Option<PathBuf>,
    /// Reference trajectory; the built-in benchmark reference when absent.
    #[arg(long, requires = "synergy")]
    pub kmp: Option<PathBuf>,
    #[arg(long)]
    pub synergy: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Comma-separated method ids (`a`, `b`, `c`).
    #[arg(long, default_value = "a,b,c")]
    pub methods: String,
    /// `lo..hi` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "2..6")]
    pub components: String,
    /// Directory for `report.csv` and `report.svg`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Keys accepted by `--params`, with defaults.
pub const PARAM_KEYS: [(&str, f64, &str); 21] = [
    ("detect.leaf", 0.005, "voxel leaf size, m"),
    ("detect.ransac_iterations", 200.0, "RANSAC iterations"),
    ("detect.ransac_distance", 0.008, "RANSAC inlier distance, m"),
    ("detect.planes", 1.0, "dominant planes to remove"),
    ("detect.epsilon", 0.02, "cluster radius, m"),
    ("detect.min_pts", 30.0, "smallest kept cluster"),
    ("svm.c", 10.0, "SVM box constraint"),
    ("svm.gamma", 2.0, "RBF width"),
    ("svm.reject_threshold", 0.35, "vote share below which a detection is rejected"),
    ("corpus.orientations", 10.0, "training instances per class"),
    ("scene.density", 60_000.0, "surface samples per m^2"),
    ("scene.noise", 0.001, "sensor noise sigma, m"),
    ("scene.outliers", 0.0, "clutter fraction"),
    ("gmm.components", 5.0, "Gaussians in the trajectory model"),
    ("kmp.samples", 51.0, "reference grid size"),
    ("kmp.length_scale", 0.1, "kernel length scale, s"),
    ("kmp.lambda", 1.0, "mean regularization"),
    ("kmp.lambda_cov", 10.0, "covariance regularization"),
    ("eval.tolerance", 0.05, "primitive accuracy tolerance, rad"),
    ("eval.via_cov", 1e-4, "key frame variance"),
    ("replay.ticks", 200.0, "manipulation ticks"),
];

/// Parsed `--params` overrides.
#[derive(Clone, Debug, Default)]
pub struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    pub fn parse(items: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("--params `{item}` is not key=value")))?;
            let k = k.trim();
            if !PARAM_KEYS.iter().any(|(name, _, _)| *name == k) {
                return Err(Error::invalid(format!("unknown parameter `{k}`, see `kinsyn params`")));
            }
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("parameter `{k}` needs a number, got `{v}`")))?;
            if !v.is_finite() {
                return Err(Error::invalid(format!("parameter `{k}` must be finite")));
            }
            values.insert(k.to_string(), v);
        }
        Ok(Self { values })
    }

    pub fn f64(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(v) => *v,
            None => PARAM_KEYS
                .iter()
                .find(|(k, _, _)| *k == key)
                .map(|(_, d, _)| *d)
                .expect("documented parameter key"),
        }
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        let v = self.f64(key);
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::invalid(format!("parameter `{key}` must be a non-negative integer, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn detection(&self, seed: u64) -> Result<DetectionParams> {
        Ok(DetectionParams {
            leaf: self.f64("detect.leaf"),
            ransac_iters: self.count("detect.ransac_iterations")?,
            ransac_distance: self.f64("detect.ransac_distance"),
            planes: self.count("detect.planes")?,
            epsilon: self.f64("detect.epsilon"),
            min_pts: self.count("detect.min_pts")?,
            seed,
        })
    }

    pub fn svm(&self) -> SvmParams {
        SvmParams {
            c: self.f64("svm.c"),
            gamma: self.f64("svm.gamma"),
            reject_threshold: self.f64("svm.reject_threshold"),
            ..SvmParams::default()
        }
    }

    /// Explicit length scale only when overridden; otherwise 0.1 of the span.
    pub fn kmp(&self) -> KmpParams {
        KmpParams {
            length_scale: self.values.get("kmp.length_scale").copied(),
            lambda: self.f64("kmp.lambda"),
            lambda_cov: self.f64("kmp.lambda_cov"),
            ..KmpParams::default()
        }
    }

    fn scene(&self, spec: &mut SceneSpec) {
        spec.density = self.f64("scene.density");
        spec.noise_sigma = self.f64("scene.noise");
        spec.outlier_fraction = self.f64("scene.outliers");
    }
}

fn print_version() {
    println!("kinsyn {}", env!("CARGO_PKG_VERSION"));
    for s in [
        HAND_MODEL_SCHEMA,
        SYNERGY_SCHEMA,
        GMM_SCHEMA,
        KMP_SCHEMA,
        GRASP_SCHEMA,
        FRAMES_SCHEMA,
        SCENE_SCHEMA,
        CORPUS_SCHEMA,
        SVM_SCHEMA,
        TASK_SCHEMA,
        TASK_TRACE_SCHEMA,
    ] {
        println!("{s}");
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_hand(path: &Option<PathBuf>) -> Result<HandModel> {
    match path {
        Some(p) => HandModel::load(p),
        None => Ok(HandModel::default_model()),
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    if cli.version {
        print_version();
        return Ok(0);
    }
    let params = Params::parse(&cli.params)?;
    let Some(command) = &cli.command else {
        return Err(Error::invalid("no command given, see --help"));
    };
    let hand = load_hand(&cli.hand)?;
    match command {
        Command::GenDemos(a) => gen_demos(a, &hand, cli.seed),
        Command::Teach(a) => teach(a, &hand, &params, cli.seed),
        Command::Adapt(a) => adapt(a, &params, cli.seed),
        Command::GenScene(a) => gen_scene(a, &params, cli.seed),
        Command::TrainSvm(a) => train_svm(a, &params, cli.seed),
        Command::Detect(a) => detect(a, &params, cli.seed),
        Command::Grasp(a) => grasp(a, &hand),
        Command::Replay(a) => replay(a, hand, &params, cli.seed),
        Command::Eval(a) => eval(a, &hand, &params, cli.seed),
        Command::Params => {
            for (k, d, help) in PARAM_KEYS {
                println!("{k:28} {d:<10} {help}");
            }
            Ok(0)
        }
    }
}

fn gen_demos(a: &GenDemosArgs, hand: &HandModel, seed: u64) -> Result<i32> {
    let data = benchmark_dataset(&hand.nominal(), &DatasetSpec::default(), seed);
    let demos = match a.split.as_str() {
        "train" => data.train,
        "test" => data.test,
        other => return Err(Error::invalid(format!("split must be `train` or `test`, got `{other}`"))),
    };
    let samples: Vec<JointConfig> = demos.iter().flat_map(|d| d.samples.iter().copied()).collect();
    io::write_demos_csv(&a.out, &samples)?;
    println!("wrote {} demonstrations ({} samples)", demos.len(), samples.len());
    Ok(0)
}

/// Splits a flat recording at every time reset.
pub fn split_recordings(samples: &[JointConfig]) -> Vec<Vec<JointConfig>> {
    let mut out: Vec<Vec<JointConfig>> = Vec::new();
    for q in samples {
        let reset = match out.last().and_then(|d| d.last()) {
            Some(prev) => q.timestamp.unwrap_or(0.0) <= prev.timestamp.unwrap_or(0.0),
            None => true,
        };
        if reset {
            out.push(Vec::new());
        }
        out.last_mut().expect("pushed above").push(*q);
    }
    out
}

fn teach(a: &TeachArgs, hand: &HandModel, params: &Params, seed: u64) -> Result<i32> {
    let demos = io::read_demos_csv(&a.demos)?;
    let c = build_config_matrix(&demos, &hand.nominal())?;
    let sub = extract_synergies(&c, a.components)?;
    sub.save(&a.out)?;
    println!("component,singular_value,explained_variance_ratio");
    for (i, (s, r)) in sub.singular_values.iter().zip(&sub.explained_variance_ratio).enumerate() {
        println!("{},{s},{r}", i + 1);
    }
    if a.gmm_out.is_some() || a.trajectories_out.is_some() {
        let trajs = split_recordings(&demos)
            .iter()
            .map(|d| SynergyTrajectory::from_joint_recording(&sub, d))
            .collect::<Result<Vec<_>>>()?;
        if let Some(path) = &a.trajectories_out {
            let rows: Vec<Vec<f64>> = trajs.iter().flat_map(|t| t.to_rows()).collect();
            io::write_numeric_csv(path, &io::coeff_header(sub.components()), &rows)?;
        }
        if let Some(path) = &a.gmm_out {
            let gmm = fit_gmm(&trajs, params.count("gmm.components")?, seed)?;
            io::write_json(path, &gmm.to_file())?;
        }
    }
    Ok(0)
}

fn parse_via(flag: &str, value: &str) -> Result<ViaPoint> {
    let nums = value
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::invalid(format!("malformed {flag} `{value}`: {e}")))?;
    ViaPoint::from_row(&nums).map_err(|e| Error::invalid(format!("malformed {flag} `{value}`: {e}")))
}

fn adapt(a: &AdaptArgs, params: &Params, seed: u64) -> Result<i32> {
    let mut points = Vec::new();
    for v in &a.via {
        points.push(parse_via("--via", v)?);
    }
    for v in &a.end {
        points.push(parse_via("--end", v)?);
    }
    let gmm = match (&a.gmm, &a.trajectories) {
        (Some(path), _) => GmmModel::from_file(&io::read_json::<GmmFile>(path)?)?,
        (None, Some(path)) => {
            let (header, rows) = io::read_numeric_csv(path)?;
            if header.first().map(String::as_str) != Some("t") {
                return Err(Error::parse(1, "trajectory CSV must start with a `t` column"));
            }
            fit_gmm(&split_at_time_resets(&rows)?, params.count("gmm.components")?, seed)?
        }
        (None, None) => return Err(Error::invalid("give --gmm or --trajectories")),
    };
    let times = uniform_grid(0.0, 1.0, params.count("kmp.samples")?.max(2));
    let reference = build_reference(&gmm, &times)?;
    let mut kmp = KmpModel::new(reference.clone(), params.kmp())?;
    for p in &points {
        kmp = insert_via_point(&kmp, p.t, &p.mean, &p.cov)?;
    }
    io::write_json(&a.out, &kmp.to_file())?;
    let s = kmp.dim();
    // Without constraints the reference itself is the answer.
    let rows: Vec<(f64, DVector<f64>, DMatrix<f64>)> = if points.is_empty() {
        reference.into_iter().map(|p| (p.t, p.mean, p.cov)).collect()
    } else {
        kmp.predictor()?.predict_many(&times)?
    };
    let rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|(t, m, c)| std::iter::once(*t).chain(m.iter().copied()).chain(c.diagonal().iter().copied()).collect())
        .collect();
    io::write_numeric_csv(&a.trajectory_out, &via_header(s), &rows)?;
    println!("adapted with {} point(s) over {} samples", points.len(), times.len());
    Ok(0)
}

fn row_scene(labels: &[String]) -> Result<SceneSpec> {
    let n = labels.len();
    let objects = labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let class = find_class(label)?;
            let x = if n == 1 { 0.0 } else { -0.18 + 0.36 * i as f64 / (n - 1) as f64 };
            let pose = resting_pose(&class.shape, x, 0.0, 0.3 * i as f64, 0);
            Ok(SceneObject {
                label: class.label,
                shape: class.shape,
                pose: (&pose).into(),
                color: class.color,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SceneSpec::new(objects))
}

fn gen_scene(a: &GenSceneArgs, params: &Params, seed: u64) -> Result<i32> {
    let spec = if let Some(path) = &a.spec {
        SceneSpec::load(path)?
    } else if let Some(path) = &a.task {
        let mut s = TaskScript::load(path)?.scene_spec()?;
        params.scene(&mut s);
        s
    } else {
        let mut s = row_scene(&a.objects)?;
        params.scene(&mut s);
        s
    };
    spec.validate()?;
    let scene = generate_scene(&spec, seed)?;
    save_pcd(&a.out, &scene.cloud)?;
    if let Some(path) = &a.spec_out {
        io::write_json(path, &spec)?;
    }
    if let Some(path) = &a.frames_out {
        io::write_json(path, &FramesCalibration::with_camera(&spec.camera.to_pose()?))?;
    }
    if scene.truth.overlap_warning {
        eprintln!("warning: object bounding spheres overlap");
    }
    println!("{} points, {} objects", scene.cloud.len(), spec.objects.len());
    Ok(0)
}

fn train_svm(a: &TrainSvmArgs, params: &Params, seed: u64) -> Result<i32> {
    let det = params.detection(seed)?;
    let orientations = params.count("corpus.orientations")?;
    let corpus = build_corpus(orientations, "train", seed, &det)?;
    if let Some(path) = &a.corpus_out {
        corpus.save(path)?;
    }
    let model = svm_train(&corpus.pairs(), &params.svm(), seed)?;
    model.save(&a.out)?;
    println!("trained {} classes on {} samples", model.classes.len(), corpus.samples.len());
    if let Some(dir) = &a.confusion {
        let test = build_corpus(ORIENTATIONS, "test", seed.wrapping_add(1), &det)?;
        let conf = evaluate_confusion(&model, &test.pairs())?;
        io::write_text(dir.join("confusion.csv"), &conf.to_csv())?;
        io::write_text(dir.join("confusion.svg"), &conf.to_svg())?;
        println!("held-out accuracy {:.4} ({} rejected)", conf.accuracy, conf.rejected);
    }
    Ok(0)
}

fn detect(a: &DetectArgs, params: &Params, seed: u64) -> Result<i32> {
    let frames = a.frames.as_ref().map(FramesCalibration::load).transpose()?;
    let mut model = SvmModel::load(&a.svm)?;
    model.reject_threshold = params.f64("svm.reject_threshold");
    let cloud = load_pcd(&a.scene)?;
    let detections = detect_objects(&cloud, &model, &params.detection(seed)?)?;
    let to_frame = match &frames {
        Some(f) => f.camera_to_base()?,
        None => crate::pose::Pose::identity(),
    };
    io::write_text(&a.out, &format_detections(&detections, &to_frame)?)?;
    if detections.is_empty() {
        println!("no candidates");
    } else {
        for d in &detections {
            println!(
                "{} ({:.2}), {} points",
                d.recognition.label().unwrap_or("unknown"),
                d.recognition.confidence(),
                d.points
            );
        }
    }
    Ok(0)
}

fn grasp(a: &GraspArgs, hand: &HandModel) -> Result<i32> {
    let scenario = GraspScenario::load(&a.scenario)?;
    let sub = crate::demos::default_subspace(hand)?;
    if scenario.e_start.len() != sub.components() {
        return Err(Error::invalid(format!(
            "scenario has {} coefficients, the subspace has {}",
            scenario.e_start.len(),
            sub.components()
        )));
    }
    let outcome = scenario.run(hand, &sub)?;
    io::write_numeric_csv(&a.out, &trace_header(sub.components()), &outcome.trace_rows())?;
    println!(
        "{} ticks, mean contact force {:.3} N, threshold {}",
        outcome.trace.len() - 1,
        outcome.final_force(),
        if outcome.reached { "reached" } else { "not reached" }
    );
    Ok(if outcome.reached { 0 } else { 5 })
}

fn replay(a: &ReplayArgs, hand: HandModel, params: &Params, seed: u64) -> Result<i32> {
    let script = TaskScript::load(&a.task)?;
    let scene = match &a.scene {
        Some(p) => SceneSpec::load(p)?,
        None => script.scene_spec()?,
    };
    let det = params.detection(seed)?;
    let mut svm = match &a.svm {
        Some(p) => SvmModel::load(p)?,
        None => {
            let corpus = build_corpus(params.count("corpus.orientations")?, "train", 0, &det)?;
            svm_train(&corpus.pairs(), &params.svm(), 0)?
        }
    };
    svm.reject_threshold = params.f64("svm.reject_threshold");
    let (subspace, kmp) = match (&a.kmp, &a.synergy) {
        (Some(k), Some(s)) => (SynergySubspace::load(s)?, KmpModel::from_file(&io::read_json::<KmpFile>(k)?)?),
        _ => reference_model(&hand)?,
    };
    let frames = a.frames.as_ref().map(FramesCalibration::load).transpose()?;
    let ctx = ReplayContext {
        hand,
        subspace,
        kmp,
        svm,
        frames,
        detection: det,
        manipulation_ticks: params.count("replay.ticks")?.max(1),
    };
    let trace = replay_task(&script, &scene, &ctx, seed)?;
    trace.write(&a.out)?;
    let s = &trace.summary;
    println!(
        "{}: grasp {:.3} N, final {:.3} N, coefficient error {:.4}, success {}",
        s.name, s.grasp_force, s.final_force, s.coefficient_error, s.success
    );
    if s.success {
        Ok(0)
    } else {
        Err(Error::TaskFailure {
            stage: "check".into(),
            message: format!("task `{}` missed its targets, see {}", s.name, display(&a.out)),
        })
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn parse_components(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid(format!("components must be `lo..hi` or a list, got `{text}`"));
    let list: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if list.is_empty() || list.contains(&0) {
        return Err(bad());
    }
    Ok(list)
}

fn eval(a: &EvalArgs, hand: &HandModel, params: &Params, seed: u64) -> Result<i32> {
    let methods = parse_methods(&a.methods)?;
    let components = parse_components(&a.components)?;
    let data = benchmark_dataset(&hand.nominal(), &DatasetSpec::default(), seed);
    let opts = CompareOptions {
        gmm_components: params.count("gmm.components")?,
        kmp: params.kmp(),
        via_cov: params.f64("eval.via_cov"),
        tolerance: params.f64("eval.tolerance"),
        seed,
        ..CompareOptions::default()
    };
    let reports = compare_methods(&data, &methods, &components, &opts)?;
    io::write_text(a.out.join("report.csv"), &report_csv(&reports))?;
    io::write_text(a.out.join("report.svg"), &report_svg(&reports))?;
    for r in &reports {
        println!("{} S={} nse {:.4} pa {:.4}", r.method.name(), r.components, r.nse, r.pa);
    }
    Ok(0)
}
