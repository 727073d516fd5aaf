//! Uncertainty maps: 48 per-anchor uncertainties tied to one input view.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angular_distance, healpix_anchor_dirs, UnitDir, Viewpoint, ANCHOR_N_SIDE, N_ANCHORS};

pub mod manifest;
pub mod plot;

pub use manifest::{DatasetManifest, InstanceRecord, SkippedInstance, ViewRecord};
pub use plot::render_polar_map;

const UMAP_MAGIC: &str = "PUNUMAP";
const UMAP_VERSION: u32 = 1;
const ANCHOR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UncertaintyKind {
    #[serde(rename = "psnr")]
    Psnr,
    #[serde(rename = "ssim")]
    Ssim,
    #[serde(rename = "mse")]
    Mse,
    /// Perceptual metric slot; may be stored but never computed.
    #[serde(rename = "lpips")]
    LpipsReserved,
}

impl UncertaintyKind {
    pub const COMPUTABLE: [UncertaintyKind; 3] =
        [UncertaintyKind::Psnr, UncertaintyKind::Ssim, UncertaintyKind::Mse];

    pub fn as_str(&self) -> &'static str {
        match self {
            UncertaintyKind::Psnr => "psnr",
            UncertaintyKind::Ssim => "ssim",
            UncertaintyKind::Mse => "mse",
            UncertaintyKind::LpipsReserved => "lpips",
        }
    }

    pub fn ensure_computable(self) -> Result<Self> {
        if self == UncertaintyKind::LpipsReserved {
            Err(Error::UnsupportedKind(self))
        } else {
            Ok(self)
        }
    }
}

impl fmt::Display for UncertaintyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UncertaintyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psnr" => Ok(UncertaintyKind::Psnr),
            "ssim" => Ok(UncertaintyKind::Ssim),
            "mse" => Ok(UncertaintyKind::Mse),
            "lpips" => Ok(UncertaintyKind::LpipsReserved),
            other => Err(Error::InvalidArgument(format!("unknown uncertainty kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UMap {
    values: Vec<f64>,
    anchors_world: Vec<UnitDir>,
    source_view: Viewpoint,
    kind: UncertaintyKind,
    step_index: usize,
}

impl UMap {
    /// Checks the count, the `[0, 1]` range and that the anchors are a
    /// rigid rotation of the canonical set.
    pub fn new(
        values: Vec<f64>,
        anchors_world: Vec<UnitDir>,
        source_view: Viewpoint,
        kind: UncertaintyKind,
        step_index: usize,
    ) -> Result<Self> {
        if values.len() != N_ANCHORS {
            return Err(Error::InvalidArgument(format!(
                "values: expected {N_ANCHORS}, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "values[{i}] = {v} outside [0, 1]"
            )));
        }
        if anchors_world.len() != N_ANCHORS {
            return Err(Error::InvalidArgument(format!(
                "anchors: expected {N_ANCHORS}, got {}",
                anchors_world.len()
            )));
        }
        check_anchor_geometry(&anchors_world)?;
        Ok(UMap {
            values,
            anchors_world,
            source_view,
            kind,
            step_index,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchors(&self) -> &[UnitDir] {
        &self.anchors_world
    }

    pub fn source_view(&self) -> &Viewpoint {
        &self.source_view
    }

    pub fn kind(&self) -> UncertaintyKind {
        self.kind
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn with_step_index(mut self, step_index: usize) -> Self {
        self.step_index = step_index;
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{UMAP_MAGIC} {UMAP_VERSION} {} {}\n{} {} {}\n",
            self.kind,
            self.step_index,
            fmt_real(self.source_view.elevation_deg),
            fmt_real(self.source_view.azimuth_deg),
            fmt_real(self.source_view.radius)
        );
        for (a, v) in self.anchors_world.iter().zip(&self.values) {
            out.push_str(&format!(
                "{} {} {} {}\n",
                fmt_real(a.x()),
                fmt_real(a.y()),
                fmt_real(a.z()),
                fmt_real(*v)
            ));
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::format(origin, 1, "header", "empty file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != UMAP_MAGIC {
            return Err(Error::format(origin, ln, "header", format!("expected `{UMAP_MAGIC} 1 <kind> <step>`, got `{header}`")));
        }
        if h[1] != "1" {
            return Err(Error::format(origin, ln, "version", format!("unsupported version {}", h[1])));
        }
        let kind: UncertaintyKind = h[2]
            .parse()
            .map_err(|_| Error::format(origin, ln, "kind", format!("unknown kind `{}`", h[2])))?;
        let step_index: usize = h[3]
            .parse()
            .map_err(|_| Error::format(origin, ln, "step_index", format!("not an integer: `{}`", h[3])))?;

        let (ln, view_line) = lines
            .next()
            .ok_or_else(|| Error::format(origin, 2, "source_view", "missing line"))?;
        let view = parse_reals(view_line, 3, origin, ln, "source_view")?;
        let source_view = Viewpoint::new(view[0], view[1], view[2])
            .map_err(|e| Error::format(origin, ln, "source_view", e.to_string()))?;

        let mut values = Vec::with_capacity(N_ANCHORS);
        let mut anchors = Vec::with_capacity(N_ANCHORS);
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let r = parse_reals(line, 4, origin, ln, "anchor")?;
            let v = nalgebra::Vector3::new(r[0], r[1], r[2]);
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::format(origin, ln, "anchor", "anchor is not unit length"));
            }
            // stored verbatim so the round trip is bit exact
            let dir = UnitDir::new_unchecked(v);
            if !(0.0..=1.0).contains(&r[3]) {
                return Err(Error::format(origin, ln, "values", format!("value {} outside [0, 1]", r[3])));
            }
            anchors.push(dir);
            values.push(r[3]);
        }
        if values.len() != N_ANCHORS {
            return Err(Error::format(
                origin,
                2 + values.len(),
                "values",
                format!("expected {N_ANCHORS} values, found {}", values.len()),
            ));
        }
        UMap::new(values, anchors, source_view, kind, step_index)
            .map_err(|e| Error::format(origin, 0, "anchors", e.to_string()))
    }
}

pub fn write_umap(umap: &UMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, umap.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_umap(path: impl AsRef<Path>) -> Result<UMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    UMap::parse(&text, &path.display().to_string())
}

/// 17 significant digits; round-trips every finite `f64` exactly.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_reals(line: &str, n: usize, origin: &str, ln: usize, field: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != n {
        return Err(Error::format(origin, ln, field, format!("expected {n} numbers, got {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(origin, ln, field, format!("not a real number: `{p}`")))
        })
        .collect()
}

fn sorted_pairwise(dirs: &[UnitDir]) -> Vec<f64> {
    let mut out = Vec::with_capacity(dirs.len() * (dirs.len() - 1) / 2);
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            out.push(angular_distance(&dirs[i], &dirs[j]));
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn canonical_pairwise() -> &'static [f64] {
    static CANON: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    CANON.get_or_init(|| sorted_pairwise(&healpix_anchor_dirs(ANCHOR_N_SIDE).expect("n_side 2")))
}

fn check_anchor_geometry(anchors: &[UnitDir]) -> Result<()> {
    let got = sorted_pairwise(anchors);
    let bad = got
        .iter()
        .zip(canonical_pairwise())
        .any(|(a, b)| (a - b).abs() > ANCHOR_TOL);
    if bad {
        return Err(Error::InvalidArgument(
            "anchors are not a rotation of the canonical HEALPix set".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::anchors_for_view;

    pub(crate) fn sample_umap(view: Viewpoint, f: impl Fn(usize) -> f64) -> UMap {
        let anchors = anchors_for_view(&view, 2).unwrap();
        UMap::new((0..48).map(f).collect(), anchors, view, UncertaintyKind::Psnr, 3).unwrap()
    }

    #[test]
    fn construction_enforces_invariants() {
        let view = Viewpoint::default();
        let anchors = anchors_for_view(&view, 2).unwrap();
        assert!(UMap::new(vec![0.5; 47], anchors.clone(), view, UncertaintyKind::Psnr, 0).is_err());
        let mut v = vec![0.5; 48];
        v[7] = 1.0000001;
        assert!(UMap::new(v, anchors.clone(), view, UncertaintyKind::Psnr, 0).is_err());
        let mut bent = anchors.clone();
        bent[0] = UnitDir::new(1.0, 0.0, 0.0).unwrap();
        assert!(UMap::new(vec![0.5; 48], bent, view, UncertaintyKind::Psnr, 0).is_err());
        assert!(UMap::new(vec![0.0; 48], anchors, view, UncertaintyKind::Psnr, 0).is_ok());
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let view = Viewpoint::new(37.25, 301.5, 2.73).unwrap();
        let u = sample_umap(view, |i| (i as f64 * 0.7).sin().abs() / 3.0);
        let back = UMap::parse(&u.to_text(), "mem").unwrap();
        assert_eq!(u, back);
        for (a, b) in u.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn golden_bytes() {
        let u = sample_umap(Viewpoint::default(), |_| 0.5);
        let text = u.to_text();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("PUNUMAP 1 psnr 3"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0 0.0000000000000000e0 2.7300000000000000e0")
        );
        // first canonical anchor: z = 11/12, phi = pi/4
        let st = (1.0f64 - (11.0f64 / 12.0).powi(2)).sqrt();
        let c = std::f64::consts::FRAC_PI_4.cos() * st;
        let s = std::f64::consts::FRAC_PI_4.sin() * st;
        assert_eq!(
            lines.next().unwrap(),
            format!("{c:.16e} {s:.16e} {:.16e} 5.0000000000000000e-1", 11.0f64 / 12.0)
        );
        assert_eq!(text.lines().count(), 50);
        assert!(!text.contains(','));
    }

    #[test]
    fn short_file_names_values_and_count() {
        let u = sample_umap(Viewpoint::default(), |_| 0.5);
        let text: String = u.to_text().lines().take(49).map(|l| format!("{l}\n")).collect();
        match UMap::parse(&text, "short.umap") {
            Err(Error::Format { field, message, .. }) => {
                assert_eq!(field, "values");
                assert!(message.contains("47"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_location() {
        let u = sample_umap(Viewpoint::default(), |_| 0.5);
        let text = u.to_text().replacen("5.0000000000000000e-1", "abc", 1);
        match UMap::parse(&text, "bad.umap") {
            Err(Error::Format { line, field, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "anchor");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(UMap::parse("NOPE", "x"), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.umap");
        let u = sample_umap(Viewpoint::new(120.0, 45.0, 2.73).unwrap(), |i| i as f64 / 47.0);
        write_umap(&u, &path).unwrap();
        assert_eq!(read_umap(&path).unwrap(), u);
    }

    #[test]
    fn kind_parsing() {
        for k in [UncertaintyKind::Psnr, UncertaintyKind::Ssim, UncertaintyKind::Mse, UncertaintyKind::LpipsReserved] {
            assert_eq!(k.as_str().parse::<UncertaintyKind>().unwrap(), k);
        }
        assert!("lpip".parse::<UncertaintyKind>().is_err());
        assert!(UncertaintyKind::LpipsReserved.ensure_computable().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn out_of_range_values_never_construct(
                vals in proptest::collection::vec(-2.0f64..3.0, 48)
            ) {
                let view = Viewpoint::default();
                let anchors = anchors_for_view(&view, 2).unwrap();
                let ok = vals.iter().all(|v| (0.0..=1.0).contains(v));
                let built = UMap::new(vals, anchors, view, UncertaintyKind::Mse, 0);
                prop_assert_eq!(built.is_ok(), ok);
                if let Ok(u) = built {
                    prop_assert!(u.values().iter().all(|v| (0.0..=1.0).contains(v)));
                }
            }
        }
    }
}
