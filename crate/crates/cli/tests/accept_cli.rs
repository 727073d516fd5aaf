use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pun(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pun")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn meshes(dir: &Path) {
    let o = pun(dir, &["gen-meshes", "--out", "meshes", "--names", "cube,l_shape"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

/// Answers the handshake, then `replies` predictions of 48 × 0.5, then
/// reports an error.
fn peer_script(replies: usize) -> String {
    let umap = format!("UMAP{}", " 0.5".repeat(48));
    format!(
        "read h; echo 'OK PUN 1'; i=0; while read line; do \
         if [ $i -ge {replies} ]; then echo 'ERR out of budget'; else echo '{umap}'; fi; i=$((i+1)); done"
    )
}

#[test]
fn missing_mesh_path_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = pun(dir.path(), &["gen-dataset", "--meshes", "no_such_dir", "--out", "ds"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_dir"), "{}", stderr(&o));
}

#[test]
fn bad_policy_grammar_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    meshes(dir.path());
    for (flag, value) in [("--filter", "small:-1"), ("--filter", "most"), ("--agg", "diff:x")] {
        let o = pun(dir.path(), &["run-avs", "--mesh", "meshes/cube.obj", flag, value, "--out", "r"]);
        assert_eq!(o.status.code(), Some(2), "{flag} {value}: {}", stderr(&o));
    }
}

#[test]
fn unknown_subcommand_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pun(dir.path(), &["baseline", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn peer_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    meshes(dir.path());
    let base = ["run-avs", "--mesh", "meshes/cube.obj", "--predictor", "external", "--resolution", "32"];
    let o = pun(dir.path(), &[&base[..], &["--peer", "/definitely/not/here", "--out", "a"]].concat());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let o = pun(dir.path(), &[&base[..], &["--peer", "sh", "--peer-arg", "-c", "--peer-arg", "read h; echo nope", "--out", "b"]].concat());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn external_peer_runs_and_partial_trajectory_survives_failure() {
    let dir = tempfile::tempdir().unwrap();
    meshes(dir.path());
    let run = |script: &str, out: &str| {
        pun(
            dir.path(),
            &[
                "run-avs", "--mesh", "meshes/cube.obj", "--predictor", "external", "--peer", "sh",
                "--peer-arg", "-c", "--peer-arg", script, "--budget", "4", "--resolution", "32", "--out", out,
            ],
        )
    };
    let o = run(&peer_script(10), "ok");
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("ok/trajectory.txt")).unwrap();
    assert!(text.contains("complete true") && text.contains("predictor external"));

    let o = run(&peer_script(2), "partial");
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("partial/trajectory.txt")).unwrap();
    assert!(text.contains("complete false") && text.contains("steps 2\n"), "{text}");
}

#[test]
fn evaluate_rejects_a_selection_for_another_mesh() {
    let dir = tempfile::tempdir().unwrap();
    meshes(dir.path());
    let o = pun(dir.path(), &["baseline", "--mesh", "meshes/cube.obj", "--budget", "3", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pun(dir.path(), &["evaluate", "--mesh", "meshes/l_shape.obj", "--selection", "b", "--resolution", "32", "--grid", "24"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("different mesh"), "{}", stderr(&o));
}

#[test]
fn evaluate_prints_the_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    meshes(dir.path());
    let o = pun(dir.path(), &["baseline", "--mesh", "meshes/cube.obj", "--method", "farthest", "--budget", "4", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pun(
        dir.path(),
        &["evaluate", "--mesh", "meshes/cube.obj", "--selection", "b/selection.txt", "--label", "fps", "--resolution", "32", "--grid", "24"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method                PSNR      SSIM       MSE       Acc        CR       Vis      VisA"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("fps "));
    assert_eq!(row.split_whitespace().count(), 8);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pun.toml");
    fs::write(&cfg, "[baseline]\nbudget = 7\nseed = 3\nmethod = \"farthest\"\n").unwrap();
    let o = pun(dir.path(), &["--config", "pun.toml", "baseline", "--seed", "9", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sel = fs::read_to_string(dir.path().join("b/selection.txt")).unwrap();
    assert!(sel.contains("method farthest\nseed 9\n"), "{sel}");
    assert_eq!(sel.lines().count(), 4 + 7);
    let prov = fs::read_to_string(dir.path().join("b/run_config.toml")).unwrap();
    assert!(prov.starts_with("[baseline]") && prov.contains("budget = 7"), "{prov}");

    fs::write(&cfg, "[baseline]\nbudgte = 7\n").unwrap();
    let o = pun(dir.path(), &["--config", "pun.toml", "baseline", "--out", "c"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_avs_writes_plots_and_candidate_log() {
    let dir = tempfile::tempdir().unwrap();
    meshes(dir.path());
    let o = pun(
        dir.path(),
        &[
            "run-avs", "--mesh", "meshes/l_shape.obj", "--budget", "3", "--candidates", "64", "--resolution", "32",
            "--grid", "24", "--plots", "--plot-size", "96", "--candidate-log", "--agg", "last", "--out", "r",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = dir.path().join("r");
    for f in ["trajectory.txt", "run_config.toml", "plots/step_00.ppm", "plots/step_02.ppm"] {
        assert!(r.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(r.join("candidates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 64);
    assert!(fs::read_to_string(r.join("trajectory.txt")).unwrap().contains("agg last\n"));
}

#[test]
fn dataset_knn_and_render_umap() {
    let dir = tempfile::tempdir().unwrap();
    meshes(dir.path());
    let o = pun(dir.path(), &["gen-dataset", "--meshes", "meshes", "--views", "3", "--resolution", "32", "--grid", "24", "--out", "ds"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("instances 2 records 6"));

    let o = pun(dir.path(), &["train-knn", "--dataset", "ds", "--k", "2", "--out", "knn"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pun(
        dir.path(),
        &["run-avs", "--predictor", "knn", "--model", "knn", "--mesh", "meshes/cube.obj", "--budget", "3", "--resolution", "32", "--out", "k"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pun(dir.path(), &["run-avs", "--predictor", "dataset", "--dataset", "ds", "--instance", "cube", "--budget", "3", "--out", "d"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let umap = fs::read_dir(dir.path().join("ds"))
        .unwrap()
        .flat_map(|e| {
            let p = e.unwrap().path();
            if p.is_dir() { fs::read_dir(p).unwrap().map(|e| e.unwrap().path()).collect() } else { vec![p] }
        })
        .find(|p| p.extension().is_some_and(|e| e == "umap"))
        .expect("dataset holds umap files");
    let o = pun(dir.path(), &["render-umap", "--umap", umap.to_str().unwrap(), "--out", "plot/u.ppm", "--size", "80"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = fs::read(dir.path().join("plot/u.ppm")).unwrap();
    assert!(bytes.starts_with(b"P6\n80 80\n255\n"), "{:?}", &bytes[..16]);
}
