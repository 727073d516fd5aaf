//! The greedy selection loop and its audit record.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::avs::policy::{AggregatePolicy, FilterPolicy};
use crate::avs::select::{select_next, CandidateSet};
use crate::error::{Error, Result};
use crate::geometry::{anchors_for_view, sample_candidates_with, Viewpoint, ANCHOR_N_SIDE, N_ANCHORS};
use crate::predictor::Predictor;
use crate::sim::mesh::TriMesh;
use crate::sim::umapgen::SimConfig;
use crate::umap::{fmt_real, UMap, UncertaintyKind};

pub const DEFAULT_BUDGET: usize = 20;
pub const DEFAULT_CANDIDATES: usize = 512;
pub const TRAJECTORY_MAGIC: &str = "PUNTRAJ";
pub const TRAJECTORY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub budget: usize,
    pub n_candidates: usize,
    pub filter: FilterPolicy,
    pub agg: AggregatePolicy,
    pub kind: UncertaintyKind,
    /// Seeds the per-step candidate draws.
    pub seed: u64,
    pub start: Viewpoint,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            budget: DEFAULT_BUDGET,
            n_candidates: DEFAULT_CANDIDATES,
            filter: FilterPolicy::default(),
            agg: AggregatePolicy::default(),
            kind: UncertaintyKind::Psnr,
            seed: 0,
            start: Viewpoint::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidArgument("budget must be at least 1".into()));
        }
        if self.n_candidates == 0 {
            return Err(Error::InvalidArgument("candidate count must be at least 1".into()));
        }
        self.kind.ensure_computable()?;
        self.filter.validate()?;
        self.agg.validate()?;
        Ok(())
    }
}

/// The candidate round that picked a step's view.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub alive: usize,
    pub candidate: usize,
    pub score: f64,
    pub filter_exhausted: bool,
    /// The chosen candidate's interpolated value in each earlier map.
    pub interp: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStep {
    pub view: Viewpoint,
    pub umap: UMap,
    /// `None` for the start view.
    pub round: Option<Round>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrajectory {
    pub mesh_fingerprint: Option<String>,
    pub predictor: String,
    pub config: EpisodeConfig,
    pub complete: bool,
    pub steps: Vec<EpisodeStep>,
    /// Full candidate sets per round, in memory only; the text form keeps
    /// the chosen candidate's values.
    pub candidate_log: Vec<CandidateSet>,
}

#[derive(Debug, thiserror::Error)]
#[error("episode aborted after {} of {} steps", .partial.steps.len(), .partial.config.budget)]
pub struct EpisodeError {
    pub partial: Box<EpisodeTrajectory>,
    #[source]
    pub source: Error,
}

impl EpisodeTrajectory {
    pub fn selected(&self) -> Vec<Viewpoint> {
        self.steps.iter().map(|s| s.view).collect()
    }

    pub fn history(&self) -> Vec<&UMap> {
        self.steps.iter().map(|s| &s.umap).collect()
    }
}

/// Runs one episode. `mesh` is needed when the predictor reads images.
pub fn run_episode(
    mesh: Option<&TriMesh>,
    predictor: &mut dyn Predictor,
    predictor_name: &str,
    cfg: &EpisodeConfig,
    sim: &SimConfig,
) -> std::result::Result<EpisodeTrajectory, EpisodeError> {
    let mut traj = EpisodeTrajectory {
        mesh_fingerprint: mesh.map(TriMesh::fingerprint),
        predictor: predictor_name.to_string(),
        config: *cfg,
        complete: false,
        steps: Vec::new(),
        candidate_log: Vec::new(),
    };
    match episode_loop(mesh, predictor, cfg, sim, &mut traj) {
        Ok(()) => {
            traj.complete = true;
            Ok(traj)
        }
        Err(source) => Err(EpisodeError { partial: Box::new(traj), source }),
    }
}

fn episode_loop(
    mesh: Option<&TriMesh>,
    predictor: &mut dyn Predictor,
    cfg: &EpisodeConfig,
    sim: &SimConfig,
    traj: &mut EpisodeTrajectory,
) -> Result<()> {
    cfg.validate()?;
    if predictor.needs_image() && mesh.is_none() {
        return Err(Error::InvalidArgument("this predictor needs a mesh to render observations".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut view = cfg.start;
    let mut round = None;
    loop {
        let image = match (predictor.needs_image(), mesh) {
            (true, Some(m)) => Some(sim.render(m, &view)?),
            _ => None,
        };
        let umap = predictor.predict(image.as_ref(), &view, cfg.kind)?;
        if umap.kind() != cfg.kind {
            return Err(Error::InvalidArgument(format!("predictor returned a `{}` map, expected `{}`", umap.kind(), cfg.kind)));
        }
        let t = traj.steps.len();
        traj.steps.push(EpisodeStep { view, umap: umap.with_step_index(t), round: round.take() });
        if traj.steps.len() == cfg.budget {
            return Ok(());
        }

        let candidates = sample_candidates_with(&mut rng, cfg.n_candidates, cfg.start.radius)?;
        let history: Vec<UMap> = traj.steps.iter().map(|s| s.umap.clone()).collect();
        let mut set = CandidateSet::from_history(candidates, &history, cfg.agg)?;
        let selected = traj.selected();
        let pick = select_next(&mut set, &selected, cfg.filter, cfg.agg)?;
        view = set.viewpoints[pick.index];
        round = Some(Round {
            alive: set.alive_count(),
            candidate: pick.index,
            score: pick.score,
            filter_exhausted: set.filter_exhausted,
            interp: set.values[pick.index].clone(),
        });
        traj.candidate_log.push(set);
    }
}

fn join_reals(values: &[f64]) -> String {
    values.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(" ")
}

fn view_text(v: &Viewpoint) -> String {
    join_reals(&[v.elevation_deg, v.azimuth_deg, v.radius])
}

impl EpisodeTrajectory {
    /// Line-oriented text form.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "{TRAJECTORY_MAGIC} {TRAJECTORY_VERSION}");
        let _ = writeln!(out, "mesh_fingerprint {}", self.mesh_fingerprint.as_deref().unwrap_or("-"));
        let _ = writeln!(out, "predictor {}", self.predictor);
        let _ = writeln!(out, "kind {}", c.kind);
        let _ = writeln!(out, "filter {}", c.filter);
        let _ = writeln!(out, "agg {}", c.agg);
        let _ = writeln!(out, "seed {}", c.seed);
        let _ = writeln!(out, "budget {}", c.budget);
        let _ = writeln!(out, "candidates {}", c.n_candidates);
        let _ = writeln!(out, "start {}", view_text(&c.start));
        let _ = writeln!(out, "complete {}", self.complete);
        let _ = writeln!(out, "steps {}", self.steps.len());
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "step {i} {}", view_text(&s.view));
            let _ = writeln!(out, "umap {}", join_reals(s.umap.values()));
            if let Some(r) = &s.round {
                let _ = writeln!(
                    out,
                    "round {} {} {} {}",
                    r.alive,
                    r.candidate,
                    fmt_real(r.score),
                    u8::from(r.filter_exhausted)
                );
                let _ = writeln!(out, "interp {}", join_reals(&r.interp));
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut p = Lines { lines: text.lines().enumerate().peekable(), origin };
        let (ln, magic) = p.field("header")?;
        if magic != format!("{TRAJECTORY_MAGIC} {TRAJECTORY_VERSION}") {
            return Err(Error::format(origin, ln, "header", format!("expected `{TRAJECTORY_MAGIC} {TRAJECTORY_VERSION}`")));
        }
        let fp = p.keyed("mesh_fingerprint")?.1;
        let predictor = p.keyed("predictor")?.1;
        let kind = p.parsed("kind")?;
        let filter = p.parsed("filter")?;
        let agg = p.parsed("agg")?;
        let seed = p.parsed("seed")?;
        let budget = p.parsed("budget")?;
        let n_candidates = p.parsed("candidates")?;
        let (ln, start) = p.keyed("start")?;
        let start = p.view(ln, &start)?;
        let complete = p.parsed("complete")?;
        let n_steps: usize = p.parsed("steps")?;
        let config = EpisodeConfig { budget, n_candidates, filter, agg, kind, seed, start };

        let mut steps = Vec::with_capacity(n_steps);
        for i in 0..n_steps {
            let (ln, rest) = p.keyed("step")?;
            let (idx, view) = rest.split_once(' ').unwrap_or((rest.as_str(), ""));
            if idx != i.to_string() {
                return Err(Error::format(origin, ln, "step", format!("expected step {i}")));
            }
            let view = p.view(ln, view)?;
            let (ln, vals) = p.keyed("umap")?;
            let values = p.reals(ln, &vals, "umap", Some(N_ANCHORS))?;
            let umap = UMap::new(values, anchors_for_view(&view, ANCHOR_N_SIDE)?, view, kind, i)
                .map_err(|e| Error::format(origin, ln, "umap", e.to_string()))?;
            let round = if p.peek_key() == Some("round") {
                let (ln, r) = p.keyed("round")?;
                let parts: Vec<&str> = r.split_whitespace().collect();
                let bad = || Error::format(origin, ln, "round", "expected `<alive> <candidate> <score> <0|1>`");
                if parts.len() != 4 {
                    return Err(bad());
                }
                let alive = parts[0].parse().map_err(|_| bad())?;
                let candidate = parts[1].parse().map_err(|_| bad())?;
                let score: f64 = parts[2].parse().map_err(|_| bad())?;
                let filter_exhausted = match parts[3] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                };
                let (ln, iv) = p.keyed("interp")?;
                let interp = p.reals(ln, &iv, "interp", Some(i))?;
                Some(Round { alive, candidate, score, filter_exhausted, interp })
            } else {
                None
            };
            if (i == 0) != round.is_none() {
                return Err(Error::format(origin, ln, "round", "only steps after the first carry a round"));
            }
            steps.push(EpisodeStep { view, umap, round });
        }
        let (ln, end) = p.field("end")?;
        if end != "end" {
            return Err(Error::format(origin, ln, "end", "expected `end`"));
        }
        if complete && steps.len() != budget {
            return Err(Error::format(origin, ln, "steps", "complete trajectory must hold `budget` steps"));
        }
        Ok(EpisodeTrajectory {
            mesh_fingerprint: (fp != "-").then_some(fp),
            predictor,
            config,
            complete,
            steps,
            candidate_log: Vec::new(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EpisodeTrajectory::parse(&text, &path.display().to_string())
    }

    /// One CSV row per candidate per round.
    pub fn candidate_log_csv(&self) -> String {
        let mut out = String::from("round,candidate,elevation_deg,azimuth_deg,alive,values\n");
        for (r, set) in self.candidate_log.iter().enumerate() {
            for i in 0..set.len() {
                let v = &set.viewpoints[i];
                let _ = writeln!(
                    out,
                    "{r},{i},{:?},{:?},{},{}",
                    v.elevation_deg,
                    v.azimuth_deg,
                    u8::from(set.alive[i]),
                    set.values[i].iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";")
                );
            }
        }
        out
    }
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: std::iter::Peekable<I>,
    origin: &'a str,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn field(&mut self, name: &str) -> Result<(usize, String)> {
        match self.lines.next() {
            Some((i, l)) => Ok((i + 1, l.trim_end().to_string())),
            None => Err(Error::format(self.origin, 0, name, "unexpected end of file")),
        }
    }

    fn peek_key(&mut self) -> Option<&str> {
        self.lines.peek().and_then(|(_, l)| l.split_whitespace().next())
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, String)> {
        let (ln, line) = self.field(key)?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok((ln, rest.to_string())),
            _ => Err(Error::format(self.origin, ln, key, format!("expected `{key} ...`, got `{line}`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (ln, v) = self.keyed(key)?;
        v.parse().map_err(|_| Error::format(self.origin, ln, key, format!("cannot parse `{v}`")))
    }

    fn reals(&self, ln: usize, text: &str, field: &str, n: Option<usize>) -> Result<Vec<f64>> {
        let vals = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::format(self.origin, ln, field, format!("`{t}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(n) = n {
            if vals.len() != n {
                return Err(Error::format(self.origin, ln, field, format!("expected {n} numbers, got {}", vals.len())));
            }
        }
        Ok(vals)
    }

    fn view(&self, ln: usize, text: &str) -> Result<Viewpoint> {
        let r = self.reals(ln, text, "view", Some(3))?;
        Viewpoint::new(r[0], r[1], r[2]).map_err(|e| Error::format(self.origin, ln, "view", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angular_distance;
    use crate::image::Image;

    /// Map whose value grows with angular distance from its source view,
    /// so the loop should keep moving away from what it has seen.
    struct DistancePredictor {
        calls: usize,
        fail_at: Option<usize>,
    }

    impl Predictor for DistancePredictor {
        fn needs_image(&self) -> bool {
            false
        }

        fn predict(&mut self, _image: Option<&Image>, view: &Viewpoint, kind: UncertaintyKind) -> Result<UMap> {
            if Some(self.calls) == self.fail_at {
                return Err(Error::Peer("boom".into()));
            }
            self.calls += 1;
            let anchors = anchors_for_view(view, ANCHOR_N_SIDE)?;
            let d = view.dir();
            let values = anchors.iter().map(|a| angular_distance(a, &d) / std::f64::consts::PI).collect();
            UMap::new(values, anchors, *view, kind, 0)
        }
    }

    fn cfg(budget: usize) -> EpisodeConfig {
        EpisodeConfig { budget, seed: 11, ..EpisodeConfig::default() }
    }

    fn run(budget: usize) -> EpisodeTrajectory {
        let mut p = DistancePredictor { calls: 0, fail_at: None };
        run_episode(None, &mut p, "test", &cfg(budget), &SimConfig::default()).unwrap()
    }

    #[test]
    fn budget_one_is_the_start_view_only() {
        let t = run(1);
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.steps[0].view, Viewpoint::default());
        assert!(t.steps[0].round.is_none() && t.candidate_log.is_empty());
    }

    #[test]
    fn steps_are_numbered_and_rounds_logged() {
        let t = run(6);
        assert_eq!(t.steps.len(), 6);
        assert_eq!(t.candidate_log.len(), 5);
        for (i, s) in t.steps.iter().enumerate() {
            assert_eq!(s.umap.step_index(), i);
            if let Some(r) = &s.round {
                assert_eq!(r.interp.len(), i);
                let set = &t.candidate_log[i - 1];
                assert_eq!(set.viewpoints[r.candidate], s.view);
                assert_eq!(set.len(), 512);
            }
        }
        // the second view heads away from the start
        assert!(t.steps[1].view.elevation_deg > 120.0, "{:?}", t.steps[1].view);
    }

    #[test]
    fn text_roundtrip_and_determinism() {
        let a = run(5);
        let text = a.to_text();
        assert_eq!(text, run(5).to_text());
        let back = EpisodeTrajectory::parse(&text, "t").unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.steps, a.steps);
    }

    #[test]
    fn parse_rejects_damage() {
        let text = run(3).to_text();
        assert!(EpisodeTrajectory::parse(&text.replace("PUNTRAJ 1", "PUNTRAJ 2"), "t").is_err());
        assert!(EpisodeTrajectory::parse(&text.replace("budget 3", "budget 4"), "t").is_err());
        assert!(EpisodeTrajectory::parse(text.trim_end_matches("end\n"), "t").is_err());
        let cut: String = text.lines().filter(|l| !l.starts_with("interp")).map(|l| format!("{l}\n")).collect();
        assert!(EpisodeTrajectory::parse(&cut, "t").is_err());
    }

    #[test]
    fn failure_keeps_partial_trajectory() {
        let mut p = DistancePredictor { calls: 0, fail_at: Some(3) };
        let err = run_episode(None, &mut p, "test", &cfg(8), &SimConfig::default()).unwrap_err();
        assert!(!err.partial.complete);
        assert_eq!(err.partial.steps.len(), 3);
        assert!(matches!(err.source, Error::Peer(_)));
        let text = err.partial.to_text();
        assert!(text.contains("complete false"));
        assert_eq!(EpisodeTrajectory::parse(&text, "t").unwrap().steps.len(), 3);
    }

    #[test]
    fn image_predictor_without_mesh_is_rejected() {
        struct NeedsImage;
        impl Predictor for NeedsImage {
            fn predict(&mut self, _: Option<&Image>, view: &Viewpoint, kind: UncertaintyKind) -> Result<UMap> {
                UMap::new(vec![0.5; 48], anchors_for_view(view, ANCHOR_N_SIDE)?, *view, kind, 0)
            }
        }
        let err = run_episode(None, &mut NeedsImage, "x", &cfg(2), &SimConfig::default()).unwrap_err();
        assert!(err.partial.steps.is_empty());
        assert!(run_episode(None, &mut NeedsImage, "x", &EpisodeConfig { budget: 0, ..cfg(1) }, &SimConfig::default()).is_err());
    }
}
