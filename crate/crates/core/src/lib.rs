//! Uncertainty-map guided active view selection for single-object 3D
//! reconstruction.
//!
//! A predictor maps the current image to a 48-value uncertainty map (UMap)
//! defined on view-relative HEALPix anchors. Each step, fresh candidate
//! viewpoints are scored by interpolating every historical UMap at their
//! direction, filtering redundant ones and taking the argmax of the product.
//!
//! A deterministic ray-cast renderer and a voxel visual hull stand in for a
//! photorealistic renderer and a learned reconstructor.

pub mod avs;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod metrics;
pub mod predictor;
pub mod sim;
pub mod umap;

pub use error::{Error, Result};
pub use geometry::{UnitDir, ViewFrame, Viewpoint};
pub use image::Image;
pub use umap::{UMap, UncertaintyKind};
