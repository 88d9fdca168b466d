//! Geometry, rasterization and UV-space kernels for painting UV-mapped
//! meshes from conditional image generators.
//!
//! The crate is `no_std` with `alloc`. File formats, networking and the
//! orchestrating pipeline live in the `uvforge` crate.
//!
//! Conventions shared by every module:
//! * meshes are normalized into `[-0.5, 0.5]^3` before rendering;
//! * UV `(0, 0)` is the top-left texel of the atlas (`v` flipped on load);
//! * raster pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)`.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod camera;
pub mod geometry;
pub mod grid;
pub mod math;
pub mod raster;
pub mod sampler;
pub mod uvspace;

pub use camera::{
    schedule_viewpoints, view_project, Projection, ViewLabel, ViewSchedule, Viewpoint,
};
pub use geometry::{
    inspect, normalize_to_unit, parse_obj, write_obj, GeometryError, Mesh, MeshReport,
};
pub use grid::{
    compose_grid, split_grid, Grid, GridError, Mask, Rgb, RgbImage, TextureAtlas, UvMask,
};
pub use math::{Vec2, Vec3};
pub use raster::{
    normalize_depth_for_conditioning, render_depth, render_textured, DepthMap, ViewMasks,
};
pub use sampler::{
    enforce_contract, mock_backend, Backend, Condition, ControlKind, MockBackend, SampleError,
    SampleKind, SampleRequest, SampleResponse,
};
pub use uvspace::{
    backproject, dilate_seams, fuse, rasterize_chart_coverage, rasterize_position_map,
    BackprojectOptions, PositionMap, UvRaster,
};
