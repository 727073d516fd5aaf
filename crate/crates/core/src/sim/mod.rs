//! Deterministic stand-in for a renderer plus single-view reconstructor.

pub mod bvh;
pub mod camera;
pub mod dataset;
pub mod hull;
pub mod mesh;
pub mod render;
pub mod umapgen;

pub use camera::CameraPose;
pub use dataset::{gen_dataset, DatasetSpec};
pub use hull::{carve_hull, render_hull, VoxelGrid};
pub use mesh::{load_obj, write_obj, TriMesh};
pub use render::render_view;
pub use umapgen::{make_umap, make_umaps, SimConfig};
