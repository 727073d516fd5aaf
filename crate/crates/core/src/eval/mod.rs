//! Evaluation of a selected view set: a multi-view hull is carved from the
//! selection and compared against ground truth at a fixed set of 40 poses.

pub mod surface;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Viewpoint, DEFAULT_RADIUS};
use crate::metrics::{mse, psnr, ssim};
use crate::sim::hull::render_hull;
use crate::sim::mesh::TriMesh;
use crate::sim::render::render_view;
use crate::sim::umapgen::SimConfig;

pub use surface::{completion_ratio, mesh_accuracy, visibility, visible_faces};

pub const N_EVAL_AZIMUTHS: usize = 8;
pub const N_EVAL_ELEVATIONS: usize = 5;
pub const DEFAULT_MAX_VIEWS: usize = 20;

/// 8 azimuths × 5 elevations, drawn once per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoseSet {
    pub seed: u64,
    pub poses: Vec<Viewpoint>,
}

impl EvalPoseSet {
    /// Azimuths uniform in `[0, 360)`, elevations area-uniform; both sorted.
    pub fn new(seed: u64, radius: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize, f: &mut dyn FnMut(&mut ChaCha8Rng) -> f64| {
            let mut out: Vec<f64> = Vec::with_capacity(n);
            while out.len() < n {
                let v = f(&mut rng);
                if out.iter().all(|o| (o - v).abs() > 1e-9) {
                    out.push(v);
                }
            }
            out.sort_by(f64::total_cmp);
            out
        };
        let azimuths = draw(N_EVAL_AZIMUTHS, &mut |r| r.random_range(0.0..360.0));
        let elevations = draw(N_EVAL_ELEVATIONS, &mut |r| r.random_range(-1.0f64..=1.0).acos().to_degrees());
        let poses = elevations
            .iter()
            .flat_map(|e| azimuths.iter().map(move |a| Viewpoint::new(*e, *a, radius)))
            .collect::<Result<_>>()?;
        Ok(EvalPoseSet { seed, poses })
    }

    pub fn with_seed(seed: u64) -> Result<Self> {
        EvalPoseSet::new(seed, DEFAULT_RADIUS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub sim: SimConfig,
    pub max_views: usize,
    pub tau: f64,
    pub cr_samples: usize,
    pub sample_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            sim: SimConfig::default(),
            max_views: DEFAULT_MAX_VIEWS,
            tau: surface::DEFAULT_TAU,
            cr_samples: surface::DEFAULT_CR_SAMPLES,
            sample_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseScore {
    pub view: Viewpoint,
    pub psnr: f64,
    pub ssim: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub psnr: f64,
    pub ssim: f64,
    pub mse: f64,
    pub acc: f64,
    pub cr: f64,
    pub vis: f64,
    pub vis_area: f64,
    pub n_views: usize,
    pub per_pose: Vec<PoseScore>,
}

pub const SUMMARY_COLUMNS: [&str; 7] = ["PSNR", "SSIM", "MSE", "Acc", "CR", "Vis", "VisA"];

impl EvalReport {
    /// Flat `key = value` text, values in shortest round-trip form.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("psnr", self.psnr),
            ("ssim", self.ssim),
            ("mse", self.mse),
            ("acc", self.acc),
            ("cr", self.cr),
            ("vis", self.vis),
            ("vis_area", self.vis_area),
        ] {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        let _ = writeln!(out, "n_views = {}", self.n_views);
        let _ = writeln!(out, "n_poses = {}", self.per_pose.len());
        out
    }

    pub fn per_pose_csv(&self) -> String {
        let mut out = String::from("pose,elevation_deg,azimuth_deg,psnr,ssim,mse\n");
        for (i, p) in self.per_pose.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{:?},{:?},{:?},{:?},{:?}",
                p.view.elevation_deg, p.view.azimuth_deg, p.psnr, p.ssim, p.mse
            );
        }
        out
    }

    /// Writes `<stem>.txt` and `<stem>_poses.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let kv = dir.join(format!("{stem}.txt"));
        fs::write(&kv, self.to_kv_text()).map_err(|e| Error::io(&kv, e))?;
        let csv = dir.join(format!("{stem}_poses.csv"));
        fs::write(&csv, self.per_pose_csv()).map_err(|e| Error::io(&csv, e))
    }

    pub fn summary_header() -> String {
        let mut s = format!("{:<16}", "method");
        for c in SUMMARY_COLUMNS {
            let _ = write!(s, "{c:>10}");
        }
        s
    }

    pub fn summary_row(&self, label: &str) -> String {
        format!(
            "{label:<16}{:>10.3}{:>10.4}{:>10.5}{:>10.4}{:>10.4}{:>10.4}{:>10.4}",
            self.psnr, self.ssim, self.mse, self.acc, self.cr, self.vis, self.vis_area
        )
    }
}

pub fn evaluate_selection(mesh: &TriMesh, selected: &[Viewpoint], poses: &EvalPoseSet, cfg: &EvalConfig) -> Result<EvalReport> {
    if selected.is_empty() || selected.len() > cfg.max_views {
        return Err(Error::InvalidArgument(format!(
            "selection must hold 1..={} views, got {}",
            cfg.max_views,
            selected.len()
        )));
    }
    let hull = cfg.sim.hull(mesh, selected)?;
    let per_pose: Vec<PoseScore> = poses
        .poses
        .par_iter()
        .map(|view| {
            let pose = cfg.sim.pose(view)?;
            let gt = render_view(mesh, &pose);
            let synth = render_hull(&hull, &pose)?;
            Ok(PoseScore { view: *view, psnr: psnr(&gt, &synth)?, ssim: ssim(&gt, &synth)?, mse: mse(&gt, &synth)? })
        })
        .collect::<Result<_>>()?;
    let n = per_pose.len() as f64;
    let mean = |f: fn(&PoseScore) -> f64| per_pose.iter().map(f).sum::<f64>() / n;

    let recon = hull.surface_points();
    let acc = mesh_accuracy(&recon, mesh)?;
    let gt_samples = mesh.sample_surface(cfg.cr_samples, cfg.sample_seed);
    let cr = completion_ratio(&gt_samples, &recon, cfg.tau)?;
    let (vis, vis_area) = visibility(mesh, selected)?;
    Ok(EvalReport {
        psnr: mean(|p| p.psnr),
        ssim: mean(|p| p.ssim),
        mse: mean(|p| p.mse),
        acc,
        cr,
        vis,
        vis_area,
        n_views: selected.len(),
        per_pose,
    })
}
