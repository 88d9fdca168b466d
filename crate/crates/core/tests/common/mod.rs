#![allow(dead_code)]

use uvforge_core::{parse_obj, Mesh, RgbImage, Vec3, ViewLabel, Viewpoint};

pub const CUBE_OBJ: &str = include_str!("../../../../fixtures/cube.obj");
pub const QUAD_OBJ: &str = include_str!("../../../../fixtures/quad.obj");

pub fn cube() -> Mesh {
    parse_obj(CUBE_OBJ).unwrap()
}

pub fn quad() -> Mesh {
    parse_obj(QUAD_OBJ).unwrap()
}

pub fn front() -> Viewpoint {
    Viewpoint::look_at_origin(Vec3::new(0.0, 0.0, 2.2), 50.0, ViewLabel::Front)
}

/// Distinct solid color per cell of the cube fixture's 3x2 UV layout, so
/// nearest-texel lookups just outside an island still see its color.
pub fn cube_cell_atlas(size: usize) -> RgbImage {
    const COLORS: [[f32; 3]; 6] = [
        [0.9, 0.1, 0.1],
        [0.1, 0.8, 0.2],
        [0.2, 0.3, 0.9],
        [0.9, 0.8, 0.1],
        [0.7, 0.2, 0.8],
        [0.1, 0.8, 0.8],
    ];
    RgbImage::from_fn(size, size, |x, y| {
        let col = (3 * x / size).min(2);
        // Atlas rows are top-down; file v is bottom-up.
        let row = if 2 * y < size { 1 } else { 0 };
        COLORS[row * 3 + col]
    })
}
