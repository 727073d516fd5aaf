use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use pun_core::avs::{
    baseline_select, run_episode, AggregatePolicy, BaselineKind, EpisodeConfig, EpisodeTrajectory, FilterPolicy,
    ViewSelection,
};
use pun_core::eval::{evaluate_selection, EvalConfig, EvalPoseSet, EvalReport};
use pun_core::predictor::{
    DatasetOracle, ExternalPredictor, KnnModel, KnnPredictor, Lookup, Predictor, PredictorKind, SimulatorOracle,
};
use pun_core::sim::dataset::MANIFEST_FILE;
use pun_core::sim::mesh::{procedural, PROCEDURAL_NAMES};
use pun_core::sim::{load_obj, write_obj, DatasetSpec, SimConfig, TriMesh};
use pun_core::umap::manifest::{load_manifest, DatasetManifest, PathCheck};
use pun_core::umap::{read_umap, render_polar_map};
use pun_core::{UncertaintyKind, Viewpoint};

use crate::config::{merge, write_provenance};

pub const TRAJECTORY_FILE: &str = "trajectory.txt";
pub const SELECTION_FILE: &str = "selection.txt";
pub const CANDIDATE_LOG_FILE: &str = "candidates.csv";
pub const KNN_MODEL_FILE: &str = "knn_model.json";
pub const PLOTS_DIR: &str = "plots";
pub const DEFAULT_PLOT_SIZE: usize = 256;

/// Simulator flags shared by several subcommands; all optional.
fn sim_config(resolution: Option<usize>, grid: Option<usize>, fov: Option<f64>, fallback_res: usize) -> SimConfig {
    let d = SimConfig::default();
    SimConfig {
        resolution: resolution.unwrap_or(fallback_res),
        grid_dim: grid.unwrap_or(d.grid_dim),
        fov_deg: fov.unwrap_or(d.fov_deg),
        half_extent: d.half_extent,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.with_context(|| format!("missing required flag --{flag}"))
}

fn load_mesh(path: &Path) -> Result<TriMesh> {
    if !path.exists() {
        bail!("mesh file {} does not exist", path.display());
    }
    load_obj(path).with_context(|| format!("cannot load mesh {}", path.display()))
}

/// Accepts a dataset directory or its manifest file.
fn open_manifest(path: &Path) -> Result<DatasetManifest> {
    let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    if !file.exists() {
        bail!("dataset manifest {} does not exist", file.display());
    }
    Ok(load_manifest(&file, PathCheck::Verify)?)
}

fn parse_kinds(kinds: &[String]) -> Result<Vec<UncertaintyKind>> {
    kinds
        .iter()
        .map(|k| Ok(k.parse::<UncertaintyKind>()?.ensure_computable()?))
        .collect()
}

// ---------------------------------------------------------------- gen-meshes

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenMeshesOpts {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Meshes to write (default: all built-in shapes).
    #[arg(long, value_delimiter = ',')]
    pub names: Option<Vec<String>>,
}

pub fn gen_meshes(o: &GenMeshesOpts, cfg: Option<&Path>) -> Result<()> {
    let o = merge(o, cfg, "gen-meshes")?;
    let out = require(o.out, "out")?;
    let names = o.names.unwrap_or_else(|| PROCEDURAL_NAMES.iter().map(|s| s.to_string()).collect());
    create_dir(&out)?;
    for name in &names {
        let mesh = procedural(name).with_context(|| {
            format!("unknown mesh `{name}` (available: {})", PROCEDURAL_NAMES.join(", "))
        })?;
        let path = out.join(format!("{name}.obj"));
        write_obj(&mesh.normalized()?, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

// --------------------------------------------------------------- gen-dataset

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDatasetOpts {
    /// Directory of OBJ files, or a single OBJ file.
    #[arg(long)]
    pub meshes: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input views per mesh.
    #[arg(long)]
    pub views: Option<usize>,
    /// Uncertainty kinds, comma separated (psnr, ssim, mse).
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub fov: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GenDatasetRun {
    meshes: Vec<PathBuf>,
    views: usize,
    kind: Vec<UncertaintyKind>,
    seed: u64,
    sim: SimConfig,
}

fn obj_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.exists() {
        bail!("mesh path {} does not exist", path.display());
    }
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("cannot list {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .obj files in {}", path.display());
    }
    Ok(files)
}

pub fn gen_dataset(o: &GenDatasetOpts, cfg: Option<&Path>) -> Result<()> {
    let o = merge(o, cfg, "gen-dataset")?;
    let meshes = obj_files(&require(o.meshes, "meshes")?)?;
    let out = require(o.out, "out")?;
    let defaults = DatasetSpec::default();
    let run = GenDatasetRun {
        meshes,
        views: o.views.unwrap_or(defaults.views_per_instance),
        kind: match o.kind {
            Some(k) => parse_kinds(&k)?,
            None => defaults.kinds,
        },
        seed: o.seed.unwrap_or(defaults.seed),
        sim: sim_config(o.resolution, o.grid, o.fov, defaults.sim.resolution),
    };
    create_dir(&out)?;
    let spec = DatasetSpec { views_per_instance: run.views, kinds: run.kind.clone(), seed: run.seed, sim: run.sim };
    let manifest = pun_core::sim::gen_dataset(&run.meshes, &spec, &out)?;
    write_provenance(&run, &out, "gen-dataset")?;
    let records: usize = manifest.instances.iter().map(|i| i.view_records.len()).sum();
    println!(
        "instances {} records {} umaps {} skipped {}",
        manifest.instances.len(),
        records,
        records * run.kind.len(),
        manifest.skipped.len()
    );
    for s in &manifest.skipped {
        eprintln!("skipped {}: {}", s.instance_id, s.reason);
    }
    Ok(())
}

// ----------------------------------------------------------------- train-knn

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainKnnOpts {
    /// Dataset directory or manifest file.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub kind: Option<String>,
}

#[derive(Debug, Serialize)]
struct TrainKnnRun {
    dataset: PathBuf,
    k: usize,
    kind: UncertaintyKind,
}

pub fn train_knn(o: &TrainKnnOpts, cfg: Option<&Path>) -> Result<()> {
    let o = merge(o, cfg, "train-knn")?;
    let run = TrainKnnRun {
        dataset: require(o.dataset, "dataset")?,
        k: o.k.unwrap_or(pun_core::predictor::knn::DEFAULT_K),
        kind: o.kind.as_deref().unwrap_or("psnr").parse()?,
    };
    let out = require(o.out, "out")?;
    let manifest = open_manifest(&run.dataset)?;
    let model = pun_core::predictor::knn_fit(&manifest, run.k, run.kind)?;
    create_dir(&out)?;
    model.save(out.join(KNN_MODEL_FILE))?;
    write_provenance(&run, &out, "train-knn")?;
    println!("rows {} k {} kind {}", model.rows.len(), model.k, model.kind);
    Ok(())
}

// ------------------------------------------------------------------- run-avs

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunAvsOpts {
    /// Ground-truth mesh (OBJ). Needed by every predictor that renders.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// dataset, sim, knn or external.
    #[arg(long)]
    pub predictor: Option<String>,
    /// Dataset directory or manifest (dataset predictor).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Restrict the dataset predictor to one instance; its mesh is used when
    /// --mesh is absent.
    #[arg(long)]
    pub instance: Option<String>,
    /// exact or nearest dataset lookup.
    #[arg(long)]
    pub lookup: Option<String>,
    /// Fitted k-NN model directory or file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// External predictor executable.
    #[arg(long)]
    pub peer: Option<String>,
    /// Argument passed to the peer; repeatable.
    #[arg(long = "peer-arg", allow_hyphen_values = true)]
    pub peer_arg: Option<Vec<String>>,
    /// Seconds to wait for each peer reply.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub candidates: Option<usize>,
    /// small[:t] | disable | top32[:n] | single[:deg]
    #[arg(long)]
    pub filter: Option<String>,
    /// product | last | diff[:deg]
    #[arg(long)]
    pub agg: Option<String>,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub start_elevation: Option<f64>,
    #[arg(long)]
    pub start_azimuth: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub fov: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a polar plot of every step's map.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plots: Option<bool>,
    #[arg(long)]
    pub plot_size: Option<usize>,
    /// Write every candidate of every round to candidates.csv.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub candidate_log: Option<bool>,
}

#[derive(Debug, Serialize)]
struct RunAvsRun {
    mesh: Option<PathBuf>,
    predictor: String,
    dataset: Option<PathBuf>,
    instance: Option<String>,
    lookup: String,
    model: Option<PathBuf>,
    peer: Option<String>,
    peer_arg: Vec<String>,
    timeout: f64,
    episode: EpisodeConfig,
    sim: SimConfig,
    plots: bool,
    plot_size: usize,
    candidate_log: bool,
}

pub fn run_avs(o: &RunAvsOpts, cfg: Option<&Path>) -> Result<()> {
    let o = merge(o, cfg, "run-avs")?;
    let out = require(o.out.clone(), "out")?;
    let predictor_kind: PredictorKind = o.predictor.as_deref().unwrap_or("sim").parse()?;
    let defaults = EpisodeConfig::default();
    let radius = o.radius.unwrap_or(defaults.start.radius);
    let episode = EpisodeConfig {
        budget: o.budget.unwrap_or(defaults.budget),
        n_candidates: o.candidates.unwrap_or(defaults.n_candidates),
        filter: match &o.filter {
            Some(f) => f.parse::<FilterPolicy>()?,
            None => defaults.filter,
        },
        agg: match &o.agg {
            Some(a) => a.parse::<AggregatePolicy>()?,
            None => defaults.agg,
        },
        kind: o.kind.as_deref().unwrap_or("psnr").parse::<UncertaintyKind>()?.ensure_computable()?,
        seed: o.seed.unwrap_or(defaults.seed),
        start: Viewpoint::new(o.start_elevation.unwrap_or(0.0), o.start_azimuth.unwrap_or(0.0), radius)?,
    };
    episode.validate()?;
    let lookup = o.lookup.clone().unwrap_or_else(|| "nearest".into());

    let manifest = o.dataset.as_deref().map(open_manifest).transpose()?;
    let fallback_res = manifest.as_ref().map_or(SimConfig::default().resolution, |m| m.render_resolution);
    let sim = sim_config(o.resolution, o.grid, o.fov, fallback_res);

    let mesh_path = match (&o.mesh, &manifest, &o.instance) {
        (Some(p), _, _) => Some(p.clone()),
        (None, Some(m), Some(id)) => m
            .instances
            .iter()
            .find(|i| &i.instance_id == id)
            .map(|i| m.resolve(&i.mesh_path)),
        _ => None,
    };
    let mesh = mesh_path.as_deref().map(load_mesh).transpose()?.map(Arc::new);

    let run = RunAvsRun {
        mesh: mesh_path,
        predictor: predictor_kind.to_string(),
        dataset: o.dataset.clone(),
        instance: o.instance.clone(),
        lookup: lookup.clone(),
        model: o.model.clone(),
        peer: o.peer.clone(),
        peer_arg: o.peer_arg.clone().unwrap_or_default(),
        timeout: o.timeout.unwrap_or(pun_core::predictor::external::DEFAULT_TIMEOUT.as_secs_f64()),
        episode,
        sim,
        plots: o.plots.unwrap_or(false),
        plot_size: o.plot_size.unwrap_or(DEFAULT_PLOT_SIZE),
        candidate_log: o.candidate_log.unwrap_or(false),
    };

    let mut predictor: Box<dyn Predictor> = match predictor_kind {
        PredictorKind::SimulatorOracle => {
            let m = mesh.clone().context("the sim predictor needs --mesh")?;
            Box::new(SimulatorOracle::new(m, sim))
        }
        PredictorKind::DatasetOracle => {
            let m = manifest.clone().context("the dataset predictor needs --dataset")?;
            let lookup = match lookup.as_str() {
                "exact" => Lookup::Exact,
                "nearest" => Lookup::Nearest,
                other => bail!("unknown lookup `{other}` (expected exact or nearest)"),
            };
            Box::new(DatasetOracle::new(m, o.instance.clone(), lookup)?)
        }
        PredictorKind::KnnRegressor => {
            let path = require(o.model.clone(), "model")?;
            let file = if path.is_dir() { path.join(KNN_MODEL_FILE) } else { path };
            Box::new(KnnPredictor { model: KnnModel::load(&file)? })
        }
        PredictorKind::External => {
            let peer = require(o.peer.clone(), "peer")?;
            if !(run.timeout > 0.0 && run.timeout.is_finite()) {
                bail!("--timeout must be a positive number of seconds");
            }
            Box::new(ExternalPredictor::spawn(&peer, &run.peer_arg, Duration::from_secs_f64(run.timeout))?)
        }
    };

    if predictor.needs_image() && mesh.is_none() {
        bail!("the {predictor_kind} predictor reads rendered images and needs --mesh");
    }
    create_dir(&out)?;
    write_provenance(&run, &out, "run-avs")?;
    let result = run_episode(mesh.as_deref(), predictor.as_mut(), predictor_kind.as_str(), &episode, &sim);
    let traj = match result {
        Ok(t) => t,
        Err(e) => {
            e.partial.write(out.join(TRAJECTORY_FILE))?;
            return Err(e).context(format!("partial trajectory written to {}", out.join(TRAJECTORY_FILE).display()));
        }
    };
    write_outputs(&traj, &out, &run)?;
    let exhausted = traj.steps.iter().filter(|s| s.round.as_ref().is_some_and(|r| r.filter_exhausted)).count();
    println!(
        "views {} filter {} agg {} exhausted-rounds {exhausted} -> {}",
        traj.steps.len(),
        episode.filter,
        episode.agg,
        out.join(TRAJECTORY_FILE).display()
    );
    Ok(())
}

fn write_outputs(traj: &EpisodeTrajectory, out: &Path, run: &RunAvsRun) -> Result<()> {
    traj.write(out.join(TRAJECTORY_FILE))?;
    if run.candidate_log {
        let path = out.join(CANDIDATE_LOG_FILE);
        fs::write(&path, traj.candidate_log_csv()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    if run.plots {
        let dir = out.join(PLOTS_DIR);
        create_dir(&dir)?;
        for (i, s) in traj.steps.iter().enumerate() {
            render_polar_map(&s.umap, run.plot_size)?.write_ppm(dir.join(format!("step_{i:02}.ppm")))?;
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ baseline

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineOpts {
    /// random or farthest.
    #[arg(long)]
    pub method: Option<String>,
    /// Mesh whose fingerprint is recorded for later evaluation.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub start_elevation: Option<f64>,
    #[arg(long)]
    pub start_azimuth: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct BaselineRun {
    method: String,
    mesh: Option<PathBuf>,
    budget: usize,
    seed: u64,
    start: Viewpoint,
}

pub fn baseline(o: &BaselineOpts, cfg: Option<&Path>) -> Result<()> {
    let o = merge(o, cfg, "baseline")?;
    let out = require(o.out, "out")?;
    let kind: BaselineKind = o.method.as_deref().unwrap_or("random").parse()?;
    let run = BaselineRun {
        method: kind.to_string(),
        mesh: o.mesh,
        budget: o.budget.unwrap_or(pun_core::avs::episode::DEFAULT_BUDGET),
        seed: o.seed.unwrap_or(0),
        start: Viewpoint::new(
            o.start_elevation.unwrap_or(0.0),
            o.start_azimuth.unwrap_or(0.0),
            o.radius.unwrap_or(pun_core::geometry::DEFAULT_RADIUS),
        )?,
    };
    let fingerprint = run.mesh.as_deref().map(load_mesh).transpose()?.map(|m| m.fingerprint());
    let views = baseline_select(kind, run.budget, run.seed, &run.start)?;
    create_dir(&out)?;
    let sel = ViewSelection { method: run.method.clone(), mesh_fingerprint: fingerprint, seed: run.seed, views };
    sel.write(out.join(SELECTION_FILE))?;
    write_provenance(&run, &out, "baseline")?;
    println!("views {} method {} -> {}", sel.views.len(), sel.method, out.join(SELECTION_FILE).display());
    Ok(())
}

// ------------------------------------------------------------------ evaluate

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateOpts {
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Trajectory or selection file (or a run directory holding one);
    /// repeatable, one summary row each.
    #[arg(long)]
    pub selection: Option<Vec<PathBuf>>,
    /// Row labels, one per selection (default: the recorded method).
    #[arg(long)]
    pub label: Option<Vec<String>>,
    #[arg(long)]
    pub poses_seed: Option<u64>,
    #[arg(long)]
    pub max_views: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub cr_samples: Option<usize>,
    #[arg(long)]
    pub sample_seed: Option<u64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub fov: Option<f64>,
    /// Directory for per-selection report files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvaluateRun {
    mesh: PathBuf,
    selection: Vec<PathBuf>,
    label: Vec<String>,
    poses_seed: u64,
    eval: EvalConfig,
}

/// Reads either file kind; returns (method, fingerprint, views).
fn read_selection(path: &Path) -> Result<(String, Option<String>, Vec<Viewpoint>)> {
    let path = if path.is_dir() {
        [TRAJECTORY_FILE, SELECTION_FILE]
            .iter()
            .map(|f| path.join(f))
            .find(|p| p.exists())
            .with_context(|| format!("no {TRAJECTORY_FILE} or {SELECTION_FILE} in {}", path.display()))?
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let origin = path.display().to_string();
    if text.starts_with(pun_core::avs::episode::TRAJECTORY_MAGIC) {
        let t = EpisodeTrajectory::parse(&text, &origin)?;
        if !t.complete {
            eprintln!("warning: {origin} is an incomplete trajectory ({} views)", t.steps.len());
        }
        Ok(("pun".to_string(), t.mesh_fingerprint.clone(), t.selected()))
    } else {
        let s = ViewSelection::parse(&text, &origin)?;
        Ok((s.method, s.mesh_fingerprint, s.views))
    }
}

pub fn evaluate(o: &EvaluateOpts, cfg: Option<&Path>) -> Result<()> {
    let o = merge(o, cfg, "evaluate")?;
    let mesh_path = require(o.mesh, "mesh")?;
    let selections = require(o.selection, "selection")?;
    if selections.is_empty() {
        bail!("missing required flag --selection");
    }
    let d = EvalConfig::default();
    let eval = EvalConfig {
        sim: sim_config(o.resolution, o.grid, o.fov, d.sim.resolution),
        max_views: o.max_views.unwrap_or(d.max_views),
        tau: o.tau.unwrap_or(d.tau),
        cr_samples: o.cr_samples.unwrap_or(d.cr_samples),
        sample_seed: o.sample_seed.unwrap_or(d.sample_seed),
    };
    let mesh = load_mesh(&mesh_path)?;
    let fingerprint = mesh.fingerprint();
    let mut loaded = Vec::new();
    for p in &selections {
        let (method, fp, views) = read_selection(p)?;
        if let Some(fp) = fp {
            if fp != fingerprint {
                bail!(
                    "{} was produced for a different mesh (fingerprint {} vs {} for {})",
                    p.display(),
                    &fp[..fp.len().min(12)],
                    &fingerprint[..12],
                    mesh_path.display()
                );
            }
        }
        loaded.push((method, views));
    }
    let labels: Vec<String> = match o.label {
        Some(l) if l.len() == loaded.len() => l,
        Some(l) => bail!("{} labels given for {} selections", l.len(), loaded.len()),
        None => loaded.iter().map(|(m, _)| m.clone()).collect(),
    };
    let run = EvaluateRun {
        mesh: mesh_path,
        selection: selections,
        label: labels.clone(),
        poses_seed: o.poses_seed.unwrap_or(0),
        eval,
    };
    let poses = EvalPoseSet::new(run.poses_seed, pun_core::geometry::DEFAULT_RADIUS)?;
    if let Some(out) = &o.out {
        create_dir(out)?;
        write_provenance(&run, out, "evaluate")?;
    }
    println!("{}", EvalReport::summary_header());
    for (label, (_, views)) in labels.iter().zip(&loaded) {
        let report = evaluate_selection(&mesh, views, &poses, &eval)?;
        println!("{}", report.summary_row(label));
        if let Some(out) = &o.out {
            report.write(out, label)?;
        }
    }
    Ok(())
}

// --------------------------------------------------------------- render-umap

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderUmapOpts {
    #[arg(long)]
    pub umap: Option<PathBuf>,
    /// Output portable pixmap.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub size: Option<usize>,
}

pub fn render_umap(o: &RenderUmapOpts, cfg: Option<&Path>) -> Result<()> {
    let o = merge(o, cfg, "render-umap")?;
    let umap = read_umap(require(o.umap, "umap")?)?;
    let out = require(o.out, "out")?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    render_polar_map(&umap, o.size.unwrap_or(DEFAULT_PLOT_SIZE))?.write_ppm(&out)?;
    println!("{}", out.display());
    Ok(())
}
