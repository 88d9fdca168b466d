//! UV-domain operations: chart coverage, position maps, back-projection of
//! view images into the atlas, masked fusion and seam dilation.
//!
//! Texel `(i, j)` of a `W x H` atlas has its center at UV
//! `((i + 0.5) / W, (j + 0.5) / H)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::camera::{view_project, Viewpoint};
use crate::geometry::Mesh;
use crate::grid::{GridError, Mask, Rgb, RgbImage, TextureAtlas, UvMask};
use crate::math::{Vec2, Vec3};
use crate::raster::{scan_triangle, DepthMap, NO_FACE};
#[allow(unused_imports)]
use num_traits::Float;

/// Per-texel face assignment of the UV layout.
#[derive(Debug, Clone, PartialEq)]
pub struct UvRaster {
    width: usize,
    height: usize,
    faces: Vec<u32>,
    bary: Vec<[f64; 3]>,
}

impl UvRaster {
    /// Rasterizes every face's UV triangle at texel centers. Where UV
    /// triangles overlap, the lowest face index keeps the texel.
    pub fn new(mesh: &Mesh, width: usize, height: usize) -> UvRaster {
        let mut faces = vec![NO_FACE; width * height];
        let mut bary = vec![[0.0; 3]; width * height];
        for f in 0..mesh.faces().len() {
            let s = mesh
                .face_uvs(f)
                .map(|t| Vec2::new(t.x * width as f64, t.y * height as f64));
            scan_triangle(s, width, height, |x, y, b| {
                let idx = y * width + x;
                if faces[idx] == NO_FACE {
                    faces[idx] = f as u32;
                    bary[idx] = b;
                }
            });
        }
        UvRaster {
            width,
            height,
            faces,
            bary,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Face owning texel index `idx`, if any.
    #[inline]
    pub fn face(&self, idx: usize) -> Option<usize> {
        let f = self.faces[idx];
        (f != NO_FACE).then_some(f as usize)
    }

    /// 3D surface point under texel index `idx`.
    pub fn position(&self, mesh: &Mesh, idx: usize) -> Option<Vec3> {
        let f = self.face(idx)?;
        let [a, b, c] = mesh.face_positions(f);
        let w = self.bary[idx];
        Some(a * w[0] + b * w[1] + c * w[2])
    }

    pub fn coverage(&self) -> Mask {
        Mask::from_vec(
            self.width,
            self.height,
            self.faces.iter().map(|&f| f != NO_FACE).collect(),
        )
        .expect("sizes agree")
    }
}

/// Texels whose center lies inside some face's UV triangle.
pub fn rasterize_chart_coverage(mesh: &Mesh, width: usize, height: usize) -> UvMask {
    UvRaster::new(mesh, width, height).coverage()
}

/// UV-space image of surface positions, mapped from the unit cube
/// `[-0.5, 0.5]^3` to `[0, 1]^3`. Uncovered texels are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMap {
    pub map: RgbImage,
    pub coverage: Mask,
}

pub fn rasterize_position_map(mesh: &Mesh, width: usize, height: usize) -> PositionMap {
    position_map_from(mesh, &UvRaster::new(mesh, width, height))
}

pub fn position_map_from(mesh: &Mesh, uv: &UvRaster) -> PositionMap {
    let (w, h) = uv.dims();
    let map = RgbImage::from_fn(w, h, |x, y| match uv.position(mesh, y * w + x) {
        Some(p) => [p.x, p.y, p.z].map(|c| (c + 0.5).clamp(0.0, 1.0) as f32),
        None => [0.0; 3],
    });
    PositionMap {
        map,
        coverage: uv.coverage(),
    }
}

/// Visibility thresholds for [`backproject`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackprojectOptions {
    /// Minimum cosine between face normal and direction to the eye.
    pub cos_threshold: f64,
    /// Maximum |texel depth - depth buffer| in scene units.
    pub depth_epsilon: f64,
}

impl Default for BackprojectOptions {
    fn default() -> Self {
        Self {
            cos_threshold: 0.1,
            depth_epsilon: 1e-3,
        }
    }
}

/// Transfers `image`, rendered from `view`, onto atlas texels.
///
/// A texel is valid when its face points toward the eye, it projects inside
/// the image, and its depth agrees with `depth` at the nearest pixel. Valid
/// texels take the bilinearly sampled color; samples from pixels whose face
/// belongs to a different UV chart are excluded so colors do not bleed
/// across silhouettes or chart borders.
pub fn backproject(
    mesh: &Mesh,
    image: &RgbImage,
    view: &Viewpoint,
    depth: &DepthMap,
    width: usize,
    height: usize,
    options: &BackprojectOptions,
) -> Result<(TextureAtlas, UvMask), GridError> {
    backproject_with(
        mesh,
        &UvRaster::new(mesh, width, height),
        image,
        view,
        depth,
        options,
    )
}

/// [`backproject`] with a precomputed UV raster.
pub fn backproject_with(
    mesh: &Mesh,
    uv: &UvRaster,
    image: &RgbImage,
    view: &Viewpoint,
    depth: &DepthMap,
    options: &BackprojectOptions,
) -> Result<(TextureAtlas, UvMask), GridError> {
    if image.dims() != depth.dims() {
        let (iw, ih) = image.dims();
        let (dw, dh) = depth.dims();
        return Err(GridError::DimensionMismatch {
            left_w: iw,
            left_h: ih,
            right_w: dw,
            right_h: dh,
        });
    }
    let (w, h) = uv.dims();
    let (iw, ih) = image.dims();
    let mut atlas = TextureAtlas::filled(w, h, [0.0; 3]);
    let mut mask = UvMask::filled(w, h, false);

    for idx in 0..w * h {
        let Some(face) = uv.face(idx) else { continue };
        let Some(point) = uv.position(mesh, idx) else {
            continue;
        };
        let normal = mesh.face_normal(face);
        if normal.dot(view.direction_to_eye(point)) < options.cos_threshold {
            continue;
        }
        let proj = view_project(view, point, iw, ih);
        if !proj.inside {
            continue;
        }
        let px = (proj.pixel.x.floor().max(0.0) as usize).min(iw - 1);
        let py = (proj.pixel.y.floor().max(0.0) as usize).min(ih - 1);
        if !depth.covered(px, py)
            || (proj.depth - depth.depth(px, py)).abs() > options.depth_epsilon
        {
            continue;
        }
        let chart = mesh.face_chart(face);
        let color =
            sample_same_chart(mesh, image, depth, proj.pixel, chart).unwrap_or(*image.get(px, py));
        atlas.as_mut_slice()[idx] = color;
        mask.as_mut_slice()[idx] = true;
    }
    Ok((atlas, mask))
}

/// Bilinear sample at continuous raster position `p` over pixels whose
/// rasterized face lies in `chart`, renormalizing the weights.
fn sample_same_chart(
    mesh: &Mesh,
    image: &RgbImage,
    depth: &DepthMap,
    p: Vec2,
    chart: u32,
) -> Option<Rgb> {
    let (w, h) = image.dims();
    let sx = p.x - 0.5;
    let sy = p.y - 0.5;
    let fx = sx.floor();
    let fy = sy.floor();
    let tx = sx - fx;
    let ty = sy - fy;
    let mut acc = [0.0f64; 3];
    let mut total = 0.0;
    for (dx, dy, wgt) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        let x = fx as isize + dx;
        let y = fy as isize + dy;
        if wgt <= 0.0 || x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            continue;
        }
        let (x, y) = (x as usize, y as usize);
        let f = depth.face(x, y);
        if f == NO_FACE || mesh.face_chart(f as usize) != chart {
            continue;
        }
        let c = image.get(x, y);
        for k in 0..3 {
            acc[k] += wgt * c[k] as f64;
        }
        total += wgt;
    }
    (total > 0.0).then(|| acc.map(|a| (a / total).clamp(0.0, 1.0) as f32))
}

/// Masked fusion of a new partial atlas into the running one: texels already
/// colored keep their value, otherwise texels valid in the new view take the
/// new value, everything else is zero. The returned mask is the union.
pub fn fuse(
    prev: &TextureAtlas,
    prev_mask: &UvMask,
    new: &TextureAtlas,
    new_mask: &UvMask,
) -> Result<(TextureAtlas, UvMask), GridError> {
    prev.ensure_same_dims(prev_mask)?;
    prev.ensure_same_dims(new)?;
    prev.ensure_same_dims(new_mask)?;
    let (w, h) = prev.dims();
    let pairs = prev
        .as_slice()
        .iter()
        .zip(prev_mask.as_slice())
        .zip(new.as_slice().iter().zip(new_mask.as_slice()));
    let mut colors = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for ((&p, &pm), (&n, &nm)) in pairs {
        colors.push(if pm {
            p
        } else if nm {
            n
        } else {
            [0.0; 3]
        });
        mask.push(pm || nm);
    }
    Ok((
        TextureAtlas::from_vec(w, h, colors)?,
        UvMask::from_vec(w, h, mask)?,
    ))
}

/// Fills uncolored texels within Chebyshev distance `radius` of a colored
/// texel with the color of the nearest (Euclidean) colored texel; ties go to
/// the first in row-major order. Colored texels are unchanged.
pub fn dilate_seams(atlas: &TextureAtlas, mask: &UvMask, radius: usize) -> TextureAtlas {
    let mut out = atlas.clone();
    if radius == 0 || atlas.dims() != mask.dims() {
        return out;
    }
    let (w, h) = atlas.dims();
    let r = radius as isize;
    for y in 0..h {
        for x in 0..w {
            if *mask.get(x, y) {
                continue;
            }
            let mut best: Option<(isize, usize, usize)> = None;
            let y_lo = (y as isize - r).max(0) as usize;
            let y_hi = (y as isize + r).min(h as isize - 1) as usize;
            let x_lo = (x as isize - r).max(0) as usize;
            let x_hi = (x as isize + r).min(w as isize - 1) as usize;
            for ny in y_lo..=y_hi {
                for nx in x_lo..=x_hi {
                    if !*mask.get(nx, ny) {
                        continue;
                    }
                    let dx = nx as isize - x as isize;
                    let dy = ny as isize - y as isize;
                    let d2 = dx * dx + dy * dy;
                    if best.is_none_or(|(b, _, _)| d2 < b) {
                        best = Some((d2, nx, ny));
                    }
                }
            }
            if let Some((_, nx, ny)) = best {
                out.set(x, y, *atlas.get(nx, ny));
            }
        }
    }
    out
}
