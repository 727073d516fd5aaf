//! Uncertainty-free comparison policies.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{healpix_anchor_dirs, sample_candidates_with, UnitDir, Viewpoint};
use crate::umap::fmt_real;

pub const SELECTION_MAGIC: &str = "PUNVIEWS";

/// HEALPix resolution of the farthest-point pool (49 152 directions, about
/// 0.9° apart).
pub const FARTHEST_POOL_N_SIDE: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Random,
    FarthestPoint,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Random => "random",
            BaselineKind::FarthestPoint => "farthest",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(BaselineKind::Random),
            "farthest" => Ok(BaselineKind::FarthestPoint),
            _ => Err(Error::InvalidArgument(format!("unknown baseline `{s}` (expected random or farthest)"))),
        }
    }
}

/// `budget` views at `start.radius`. Random draws every view; farthest-point
/// starts from `start` and greedily maximizes the minimum angular gap over a
/// seed-rotated HEALPix pool.
pub fn baseline_select(kind: BaselineKind, budget: usize, seed: u64, start: &Viewpoint) -> Result<Vec<Viewpoint>> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        BaselineKind::Random => sample_candidates_with(&mut rng, budget, start.radius),
        BaselineKind::FarthestPoint => {
            let spin = random_rotation(&mut rng);
            let pool: Vec<UnitDir> = healpix_anchor_dirs(FARTHEST_POOL_N_SIDE)?
                .iter()
                .map(|d| UnitDir::new_unchecked(spin * d.as_vector()))
                .collect();
            let first = start.dir();
            let mut max_dot: Vec<f64> = pool.iter().map(|p| p.dot(&first)).collect();
            let mut out = vec![*start];
            while out.len() < budget {
                // smallest maximum cosine is the largest minimum angle
                let mut best = 0;
                for (j, d) in max_dot.iter().enumerate() {
                    if *d < max_dot[best] {
                        best = j;
                    }
                }
                let pick = pool[best];
                for (m, p) in max_dot.iter_mut().zip(&pool) {
                    *m = m.max(p.dot(&pick));
                }
                out.push(Viewpoint::from_dir(&pick, start.radius));
            }
            Ok(out)
        }
    }
}

/// A bare list of selected views, as written for baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSelection {
    pub method: String,
    pub mesh_fingerprint: Option<String>,
    pub seed: u64,
    pub views: Vec<Viewpoint>,
}

impl ViewSelection {
    pub fn to_text(&self) -> String {
        let mut out = format!("{SELECTION_MAGIC} 1\n");
        let _ = writeln!(out, "mesh_fingerprint {}", self.mesh_fingerprint.as_deref().unwrap_or("-"));
        let _ = writeln!(out, "method {}", self.method);
        let _ = writeln!(out, "seed {}", self.seed);
        for v in &self.views {
            let _ = writeln!(out, "{} {} {}", fmt_real(v.elevation_deg), fmt_real(v.azimuth_deg), fmt_real(v.radius));
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut keyed = |key: &str| -> Result<String> {
            let (ln, line) = lines.next().ok_or_else(|| Error::format(origin, 0, key, "unexpected end of file"))?;
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok(v.trim().to_string()),
                _ => Err(Error::format(origin, ln, key, format!("expected `{key} ...`"))),
            }
        };
        if keyed(SELECTION_MAGIC)? != "1" {
            return Err(Error::format(origin, 1, "header", format!("expected `{SELECTION_MAGIC} 1`")));
        }
        let fp = keyed("mesh_fingerprint")?;
        let method = keyed("method")?;
        let seed_text = keyed("seed")?;
        let seed = seed_text.parse().map_err(|_| Error::format(origin, 4, "seed", format!("bad seed `{seed_text}`")))?;
        let mut views = Vec::new();
        for (ln, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let r = crate::umap::parse_reals(line, 3, origin, ln, "view")?;
            views.push(Viewpoint::new(r[0], r[1], r[2]).map_err(|e| Error::format(origin, ln, "view", e.to_string()))?);
        }
        if views.is_empty() {
            return Err(Error::format(origin, 0, "views", "no views listed"));
        }
        Ok(ViewSelection { method, mesh_fingerprint: (fp != "-").then_some(fp), seed, views })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ViewSelection::parse(&text, &path.display().to_string())
    }
}

/// Uniform random rotation (Shoemake's subgroup method).
fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    UnitQuaternion::from_quaternion(Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ))
}
