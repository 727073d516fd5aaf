//! Uncertainty-map predictors behind one interface.

pub mod external;
pub mod knn;
pub mod oracle;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Viewpoint;
use crate::image::Image;
use crate::umap::{UMap, UncertaintyKind};

pub use external::ExternalPredictor;
pub use knn::{knn_fit, KnnModel, KnnPredictor};
pub use oracle::{DatasetOracle, Lookup, SimulatorOracle};

/// Maps the image observed at `view` to an uncertainty map anchored at
/// `view`. The returned map has step index 0; callers renumber it.
pub trait Predictor {
    /// Whether `predict` reads the image. Episodes skip rendering otherwise.
    fn needs_image(&self) -> bool {
        true
    }

    fn predict(&mut self, image: Option<&Image>, view: &Viewpoint, kind: UncertaintyKind) -> Result<UMap>;
}

pub(crate) fn require_image<'a>(image: Option<&'a Image>, who: &str) -> Result<&'a Image> {
    image.ok_or_else(|| Error::InvalidArgument(format!("{who} predictor needs the observed image")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    DatasetOracle,
    SimulatorOracle,
    KnnRegressor,
    External,
}

impl PredictorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PredictorKind::DatasetOracle => "dataset",
            PredictorKind::SimulatorOracle => "sim",
            PredictorKind::KnnRegressor => "knn",
            PredictorKind::External => "external",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset" => Ok(PredictorKind::DatasetOracle),
            "sim" => Ok(PredictorKind::SimulatorOracle),
            "knn" => Ok(PredictorKind::KnnRegressor),
            "external" => Ok(PredictorKind::External),
            other => Err(Error::InvalidArgument(format!(
                "unknown predictor `{other}` (expected dataset, sim, knn or external)"
            ))),
        }
    }
}
