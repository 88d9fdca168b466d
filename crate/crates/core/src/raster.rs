//! Software rasterizer: z-buffered depth maps, atlas-textured
//! renders with coverage / uncolored masks, and depth normalization for
//! backend conditioning.
//!
//! Pixel centers are sampled at `(x + 0.5, y + 0.5)` with a top-left fill
//! rule. Triangles are clipped against the near plane; fragments beyond the
//! far plane are discarded. No backface culling. Equal depths resolve to the
//! lower triangle index, which is the serial submission order.

use alloc::vec;
use alloc::vec::Vec;

use crate::camera::Viewpoint;
use crate::geometry::Mesh;
use crate::grid::{GridError, Mask, RgbImage, TextureAtlas, UvMask};
use crate::math::{edge, Vec2, Vec3};
#[allow(unused_imports)]
use num_traits::Float;

/// Face id stored for pixels not covered by any triangle.
pub const NO_FACE: u32 = u32::MAX;
/// Depth stored for uncovered pixels.
pub const DEPTH_SENTINEL: f64 = f64::INFINITY;

/// Per-pixel view-space depth with coverage and the winning face id.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    faces: Vec<u32>,
    coverage: Mask,
}

impl DepthMap {
    fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depth: vec![DEPTH_SENTINEL; width * height],
            faces: vec![NO_FACE; width * height],
            coverage: Mask::filled(width, height, false),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn depth(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    /// Face rasterized at `(x, y)`, or [`NO_FACE`].
    #[inline]
    pub fn face(&self, x: usize, y: usize) -> u32 {
        self.faces[y * self.width + x]
    }

    #[inline]
    pub fn covered(&self, x: usize, y: usize) -> bool {
        *self.coverage.get(x, y)
    }

    pub fn coverage(&self) -> &Mask {
        &self.coverage
    }

    pub fn depths(&self) -> &[f64] {
        &self.depth
    }
}

/// Silhouette and not-yet-colored masks of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMasks {
    pub coverage: Mask,
    /// Covered pixels whose sampled texel is uncolored; always a subset of
    /// `coverage`.
    pub uncolored: Mask,
}

struct Fragments {
    depth: DepthMap,
    /// Barycentric coordinates with respect to the winning original face.
    bary: Vec<[f64; 3]>,
}

#[derive(Clone, Copy)]
struct ClipVertex {
    cam: Vec3,
    bary: [f64; 3],
}

fn lerp_vertex(a: ClipVertex, b: ClipVertex, t: f64) -> ClipVertex {
    let mut bary = [0.0; 3];
    for (k, slot) in bary.iter_mut().enumerate() {
        *slot = a.bary[k] + (b.bary[k] - a.bary[k]) * t;
    }
    ClipVertex {
        cam: a.cam + (b.cam - a.cam) * t,
        bary,
    }
}

/// Sutherland-Hodgman against the plane `z = near`. Returns at most 4 vertices.
fn clip_near(tri: [ClipVertex; 3], near: f64, out: &mut Vec<ClipVertex>) {
    out.clear();
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let a_in = a.cam.z >= near;
        let b_in = b.cam.z >= near;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (near - a.cam.z) / (b.cam.z - a.cam.z);
            out.push(lerp_vertex(a, b, t));
        }
    }
}

#[inline]
fn is_top_left(a: Vec2, b: Vec2) -> bool {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

fn rasterize(mesh: &Mesh, view: &Viewpoint, width: usize, height: usize) -> Fragments {
    let mut depth = DepthMap::empty(width, height);
    let mut bary = vec![[0.0; 3]; width * height];
    if width == 0 || height == 0 {
        return Fragments { depth, bary };
    }
    let frame = view.frame();
    let perspective = view.is_perspective();
    let mut poly = Vec::with_capacity(4);

    for face in 0..mesh.faces().len() {
        let pos = mesh.face_positions(face);
        let tri = [0, 1, 2].map(|k| {
            let mut b = [0.0; 3];
            b[k] = 1.0;
            ClipVertex {
                cam: frame.to_camera(view.eye, pos[k]),
                bary: b,
            }
        });
        clip_near(tri, view.near, &mut poly);
        for i in 1..poly.len().saturating_sub(1) {
            let sub = [poly[0], poly[i], poly[i + 1]];
            raster_triangle(view, perspective, sub, face as u32, &mut depth, &mut bary);
        }
    }

    Fragments { depth, bary }
}

/// Visits every pixel whose center lies inside the screen-space triangle
/// `s`, passing barycentric weights in the original vertex order.
pub(crate) fn scan_triangle(
    s: [Vec2; 3],
    width: usize,
    height: usize,
    mut visit: impl FnMut(usize, usize, [f64; 3]),
) {
    let area = edge(s[0], s[1], s[2]);
    if area == 0.0 || !area.is_finite() || width == 0 || height == 0 {
        return;
    }
    let (s, order) = if area < 0.0 {
        ([s[0], s[2], s[1]], [0, 2, 1])
    } else {
        (s, [0, 1, 2])
    };
    let area = area.abs();

    let min_x = s[0].x.min(s[1].x).min(s[2].x);
    let max_x = s[0].x.max(s[1].x).max(s[2].x);
    let min_y = s[0].y.min(s[1].y).min(s[2].y);
    let max_y = s[0].y.max(s[1].y).max(s[2].y);
    let x0 = (min_x - 0.5).ceil().max(0.0);
    let y0 = (min_y - 0.5).ceil().max(0.0);
    let x1 = (max_x - 0.5).floor().min(width as f64 - 1.0);
    let y1 = (max_y - 0.5).floor().min(height as f64 - 1.0);
    if x1 < x0 || y1 < y0 {
        return;
    }
    let (x0, y0, x1, y1) = (x0 as usize, y0 as usize, x1 as usize, y1 as usize);

    let top_left = [
        is_top_left(s[1], s[2]),
        is_top_left(s[2], s[0]),
        is_top_left(s[0], s[1]),
    ];
    for py in y0..=y1 {
        for px in x0..=x1 {
            let p = Vec2::new(px as f64 + 0.5, py as f64 + 0.5);
            let e = [
                edge(s[1], s[2], p),
                edge(s[2], s[0], p),
                edge(s[0], s[1], p),
            ];
            if (0..3).all(|k| e[k] > 0.0 || (e[k] == 0.0 && top_left[k])) {
                let mut b = [0.0; 3];
                for k in 0..3 {
                    b[order[k]] = e[k] / area;
                }
                visit(px, py, b);
            }
        }
    }
}

fn raster_triangle(
    view: &Viewpoint,
    perspective: bool,
    tri: [ClipVertex; 3],
    face: u32,
    out: &mut DepthMap,
    bary_out: &mut [[f64; 3]],
) {
    let (w, h) = out.dims();
    let s = tri.map(|v| view.camera_to_pixel(v.cam, w, h));
    let inv_z = tri.map(|v| 1.0 / v.cam.z);
    scan_triangle(s, w, h, |px, py, b| {
        let (d, lambda) = if perspective {
            let iz = b[0] * inv_z[0] + b[1] * inv_z[1] + b[2] * inv_z[2];
            let d = 1.0 / iz;
            (d, [0, 1, 2].map(|k| b[k] * inv_z[k] * d))
        } else {
            let d = b[0] * tri[0].cam.z + b[1] * tri[1].cam.z + b[2] * tri[2].cam.z;
            (d, b)
        };
        if d.is_nan() || d > view.far || d < view.near * (1.0 - 1e-12) {
            return;
        }
        let idx = py * w + px;
        if d < out.depth[idx] {
            out.depth[idx] = d;
            out.faces[idx] = face;
            out.coverage.as_mut_slice()[idx] = true;
            let mut ob = [0.0; 3];
            for (k, slot) in ob.iter_mut().enumerate() {
                *slot = lambda[0] * tri[0].bary[k]
                    + lambda[1] * tri[1].bary[k]
                    + lambda[2] * tri[2].bary[k];
            }
            bary_out[idx] = ob;
        }
    });
}

/// Z-buffered depth render of `mesh` from `view`.
pub fn render_depth(mesh: &Mesh, view: &Viewpoint, width: usize, height: usize) -> DepthMap {
    rasterize(mesh, view, width, height).depth
}

/// Renders `mesh` textured by `atlas` with nearest-texel sampling, and marks
/// covered pixels whose texel is not yet `colored`.
pub fn render_textured(
    mesh: &Mesh,
    atlas: &TextureAtlas,
    colored: &UvMask,
    view: &Viewpoint,
    width: usize,
    height: usize,
) -> Result<(RgbImage, ViewMasks, DepthMap), GridError> {
    atlas.ensure_same_dims(colored)?;
    let frags = rasterize(mesh, view, width, height);
    let (aw, ah) = atlas.dims();
    let mut rgb = RgbImage::filled(width, height, [0.0; 3]);
    let mut uncolored = Mask::filled(width, height, false);
    if aw > 0 && ah > 0 {
        for idx in 0..width * height {
            let face = frags.depth.faces[idx];
            if face == NO_FACE {
                continue;
            }
            let uv = mesh.face_uvs(face as usize);
            let b = frags.bary[idx];
            let u = b[0] * uv[0].x + b[1] * uv[1].x + b[2] * uv[2].x;
            let v = b[0] * uv[0].y + b[1] * uv[1].y + b[2] * uv[2].y;
            let tx = texel_index(u, aw);
            let ty = texel_index(v, ah);
            rgb.as_mut_slice()[idx] = *atlas.get(tx, ty);
            uncolored.as_mut_slice()[idx] = !*colored.get(tx, ty);
        }
    }
    let masks = ViewMasks {
        coverage: frags.depth.coverage.clone(),
        uncolored,
    };
    Ok((rgb, masks, frags.depth))
}

#[inline]
pub(crate) fn texel_index(coord: f64, size: usize) -> usize {
    let t = (coord * size as f64).floor();
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t as usize).min(size - 1)
    }
}

/// Relative depth span below which a view counts as constant depth;
/// absorbs rounding in perspective-correct interpolation.
const DEPTH_FLAT_TOLERANCE: f64 = 1e-9;

/// Maps covered depths to `(d_max - d) / (d_max - d_min)` (nearer is
/// brighter), uncovered pixels to 0, constant depth to 1, replicated over
/// three channels.
pub fn normalize_depth_for_conditioning(depth: &DepthMap) -> RgbImage {
    let covered = || {
        depth
            .depth
            .iter()
            .zip(depth.coverage.as_slice())
            .filter(|(_, &c)| c)
            .map(|(&d, _)| d)
    };
    let d_min = covered().fold(f64::INFINITY, f64::min);
    let d_max = covered().fold(f64::NEG_INFINITY, f64::max);
    let span = d_max - d_min;
    let data = depth
        .depth
        .iter()
        .zip(depth.coverage.as_slice())
        .map(|(&d, &c)| {
            let v = if !c {
                0.0
            } else if span > DEPTH_FLAT_TOLERANCE * d_max.abs() {
                ((d_max - d) / span) as f32
            } else {
                1.0
            };
            [v; 3]
        })
        .collect();
    RgbImage::from_vec(depth.width, depth.height, data).expect("sizes agree")
}
