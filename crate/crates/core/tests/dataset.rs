use std::path::{Path, PathBuf};

use pun_core::avs::{run_episode, EpisodeConfig, EpisodeTrajectory};
use pun_core::predictor::{knn_fit, DatasetOracle, Lookup, Predictor};
use pun_core::sim::mesh::{procedural, PROCEDURAL_NAMES};
use pun_core::sim::{gen_dataset, write_obj, DatasetSpec, SimConfig};
use pun_core::umap::manifest::{load_manifest, DatasetManifest, PathCheck};
use pun_core::umap::read_umap;
use pun_core::{Image, UncertaintyKind};

fn build(dir: &Path, views: usize) -> DatasetManifest {
    let paths: Vec<PathBuf> = PROCEDURAL_NAMES
        .iter()
        .map(|n| {
            let p = dir.join(format!("{n}.obj"));
            write_obj(&procedural(n).unwrap(), &p).unwrap();
            p
        })
        .collect();
    let spec = DatasetSpec {
        views_per_instance: views,
        kinds: vec![UncertaintyKind::Psnr, UncertaintyKind::Mse],
        seed: 5,
        sim: SimConfig { resolution: 48, grid_dim: 32, ..SimConfig::default() },
    };
    gen_dataset(&paths, &spec, &dir.join("ds")).unwrap();
    load_manifest(dir.join("ds/manifest.toml"), PathCheck::Verify).unwrap()
}

#[test]
fn knn_beats_the_constant_mean_on_held_out_views() {
    let dir = tempfile::tempdir().unwrap();
    let full = build(dir.path(), 12);
    let mut train = full.clone();
    let mut held = Vec::new();
    for inst in &mut train.instances {
        let (keep, out): (Vec<_>, Vec<_>) = inst.view_records.drain(..).enumerate().partition(|(i, _)| i % 4 != 1);
        inst.view_records = keep.into_iter().map(|(_, r)| r).collect();
        held.extend(out.into_iter().map(|(_, r)| r));
    }
    let model = knn_fit(&train, 3, UncertaintyKind::Psnr).unwrap();
    assert_eq!(model.rows.len(), 4 * 9);

    // per-anchor mean of the training maps
    let mut mean = vec![0.0; 48];
    for r in &model.rows {
        for (m, v) in mean.iter_mut().zip(&r.values) {
            *m += v / model.rows.len() as f64;
        }
    }
    let (mut knn_err, mut mean_err) = (0.0, 0.0);
    for rec in &held {
        let image = Image::read_pnm(full.resolve(&rec.image_path)).unwrap();
        let truth = read_umap(full.resolve(rec.umap_path(UncertaintyKind::Psnr).unwrap())).unwrap();
        let pred = model.predict_values(&image);
        for ((p, m), t) in pred.iter().zip(&mean).zip(truth.values()) {
            knn_err += (p - t) * (p - t);
            mean_err += (m - t) * (m - t);
        }
    }
    assert!(knn_err <= mean_err, "knn {knn_err} vs constant mean {mean_err}");
}

#[test]
fn exact_lookup_returns_the_stored_maps_and_drives_an_episode() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = build(dir.path(), 4);
    // instances share viewpoints, so each lookup is restricted to its own
    for (inst, rec) in manifest.view_records() {
        let mut oracle = DatasetOracle::new(manifest.clone(), Some(inst.instance_id.clone()), Lookup::Exact).unwrap();
        for kind in [UncertaintyKind::Psnr, UncertaintyKind::Mse] {
            let stored = read_umap(manifest.resolve(rec.umap_path(kind).unwrap())).unwrap();
            let got = oracle.predict(None, &rec.viewpoint, kind).unwrap();
            assert_eq!(got.values(), stored.values());
        }
    }

    let mut oracle = DatasetOracle::new(manifest, Some("l_shape".into()), Lookup::Nearest).unwrap();
    let cfg = EpisodeConfig { budget: 6, seed: 2, kind: UncertaintyKind::Mse, ..EpisodeConfig::default() };
    let traj = run_episode(None, &mut oracle, "dataset", &cfg, &SimConfig::default()).unwrap();
    assert!(traj.complete);
    let path = dir.path().join("trajectory.txt");
    traj.write(&path).unwrap();
    let back = EpisodeTrajectory::read(&path).unwrap();
    assert_eq!(back.steps, traj.steps);
    assert_eq!(back.to_text(), traj.to_text());
    let csv = traj.candidate_log_csv();
    assert_eq!(csv.lines().count(), 1 + 5 * 512);
}
