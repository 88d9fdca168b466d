//! Viewpoints, the shared projection kernel and the coarse-stage view
//! schedule.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math::{Vec2, Vec3};
#[allow(unused_imports)]
use num_traits::Float;

pub const DEFAULT_DISTANCE: f64 = 2.2;
pub const DEFAULT_FOV_DEG: f64 = 50.0;
pub const DEFAULT_NEAR: f64 = 0.1;
pub const DEFAULT_FAR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CameraError {
    #[error("unsupported viewpoint total {0} (expected 2, 4, 6 or 8)")]
    UnsupportedCount(usize),
    #[error("viewpoints per iteration must be 1 or 2, got {0}")]
    UnsupportedGrouping(usize),
    #[error("invalid viewpoint: {0}")]
    InvalidViewpoint(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Perspective { fov_y_deg: f64 },
    Orthographic { half_extent: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViewLabel {
    Front,
    Back,
    Left,
    Right,
    Top,
    Bottom,
    Custom(String),
}

impl ViewLabel {
    pub fn as_str(&self) -> &str {
        match self {
            ViewLabel::Front => "front",
            ViewLabel::Back => "back",
            ViewLabel::Left => "left",
            ViewLabel::Right => "right",
            ViewLabel::Top => "top",
            ViewLabel::Bottom => "bottom",
            ViewLabel::Custom(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Viewpoint {
    pub eye: Vec3,
    pub target: Vec3,
    pub up: Vec3,
    pub projection: Projection,
    pub near: f64,
    pub far: f64,
    pub label: ViewLabel,
}

/// Result of projecting a world point into a view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    /// Continuous raster coordinates; pixel `(i, j)` spans `[i, i+1) x [j, j+1)`.
    pub pixel: Vec2,
    /// Distance along the camera forward axis.
    pub depth: f64,
    pub inside: bool,
}

/// Orthonormal camera frame: `right`, `up`, `forward` (into the scene).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFrame {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl Viewpoint {
    /// Perspective camera looking at the origin. The up vector is `+Y`
    /// unless the view axis is nearly vertical, in which case `+Z`.
    pub fn look_at_origin(eye: Vec3, fov_y_deg: f64, label: ViewLabel) -> Viewpoint {
        let forward = (-eye).normalize();
        let up = if forward.dot(Vec3::Y).abs() > 0.999 {
            Vec3::Z
        } else {
            Vec3::Y
        };
        Viewpoint {
            eye,
            target: Vec3::ZERO,
            up,
            projection: Projection::Perspective { fov_y_deg },
            near: DEFAULT_NEAR,
            far: DEFAULT_FAR,
            label,
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let dir = self.target - self.eye;
        if !(self.eye.is_finite() && self.target.is_finite() && self.up.is_finite()) {
            return Err(CameraError::InvalidViewpoint("non-finite vector"));
        }
        if dir.length() == 0.0 {
            return Err(CameraError::InvalidViewpoint("eye equals target"));
        }
        if dir.normalize().cross(self.up.normalize()).length() < 1e-9 {
            return Err(CameraError::InvalidViewpoint(
                "up parallel to view direction",
            ));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(CameraError::InvalidViewpoint("require 0 < near < far"));
        }
        match self.projection {
            Projection::Perspective { fov_y_deg } if !(fov_y_deg > 0.0 && fov_y_deg < 180.0) => {
                Err(CameraError::InvalidViewpoint("field of view out of range"))
            }
            Projection::Orthographic { half_extent }
                if half_extent.is_nan() || half_extent <= 0.0 =>
            {
                Err(CameraError::InvalidViewpoint(
                    "orthographic extent must be positive",
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn frame(&self) -> CameraFrame {
        let forward = (self.target - self.eye).normalize();
        let right = forward.cross(self.up).normalize();
        let up = right.cross(forward);
        CameraFrame { right, up, forward }
    }

    /// Camera-space coordinates `(x right, y up, depth forward)` of `point`.
    pub fn to_camera(&self, point: Vec3) -> Vec3 {
        self.frame().to_camera(self.eye, point)
    }

    /// Half-height of the image plane at unit depth (perspective) or in
    /// scene units (orthographic).
    fn half_height(&self) -> f64 {
        match self.projection {
            Projection::Perspective { fov_y_deg } => (fov_y_deg.to_radians() * 0.5).tan(),
            Projection::Orthographic { half_extent } => half_extent,
        }
    }

    pub fn is_perspective(&self) -> bool {
        matches!(self.projection, Projection::Perspective { .. })
    }

    /// Maps a camera-space point to continuous raster coordinates for an
    /// image of `width x height` pixels.
    pub fn camera_to_pixel(&self, cam: Vec3, width: usize, height: usize) -> Vec2 {
        let aspect = width as f64 / height as f64;
        let hh = self.half_height();
        let scale = if self.is_perspective() {
            cam.z * hh
        } else {
            hh
        };
        let ndc_x = cam.x / (scale * aspect);
        let ndc_y = cam.y / scale;
        Vec2::new(
            (ndc_x + 1.0) * 0.5 * width as f64,
            (1.0 - ndc_y) * 0.5 * height as f64,
        )
    }

    /// Unit direction from `point` toward the camera.
    pub fn direction_to_eye(&self, point: Vec3) -> Vec3 {
        if self.is_perspective() {
            (self.eye - point).normalize()
        } else {
            -self.frame().forward
        }
    }
}

impl CameraFrame {
    #[inline]
    pub fn to_camera(&self, eye: Vec3, point: Vec3) -> Vec3 {
        let d = point - eye;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }
}

/// Projects `point` into `view` rendered at `width x height`. `inside` is
/// set when the point lies within the frustum and between the clip planes.
pub fn view_project(view: &Viewpoint, point: Vec3, width: usize, height: usize) -> Projected {
    let cam = view.to_camera(point);
    let depth = cam.z;
    let in_depth = depth >= view.near && depth <= view.far;
    let pixel = if view.is_perspective() && depth <= 0.0 {
        Vec2::new(f64::NAN, f64::NAN)
    } else {
        view.camera_to_pixel(cam, width, height)
    };
    let inside = in_depth
        && pixel.x >= 0.0
        && pixel.x <= width as f64
        && pixel.y >= 0.0
        && pixel.y <= height as f64;
    Projected {
        pixel,
        depth,
        inside,
    }
}

/// Ordered groups of viewpoints; each group is sampled in one backend call.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSchedule {
    pub iterations: Vec<Vec<Viewpoint>>,
}

impl ViewSchedule {
    pub fn total(&self) -> usize {
        self.iterations.iter().map(Vec::len).sum()
    }

    pub fn views(&self) -> impl Iterator<Item = &Viewpoint> {
        self.iterations.iter().flatten()
    }
}

/// Axis-aligned viewpoints ordered `+Z, -Z, +X, -X, +Y, -Y`; a total of 8
/// adds the diagonal pair `(+X+Z, -X-Z)`. With `per_iteration = 2` each
/// mirror pair forms one group.
pub fn schedule_viewpoints(
    total: usize,
    per_iteration: usize,
    distance: f64,
    fov_y_deg: f64,
) -> Result<ViewSchedule, CameraError> {
    if !matches!(total, 2 | 4 | 6 | 8) {
        return Err(CameraError::UnsupportedCount(total));
    }
    if !matches!(per_iteration, 1 | 2) {
        return Err(CameraError::UnsupportedGrouping(per_iteration));
    }
    let diag = distance / 2.0.sqrt();
    let axes = [
        (Vec3::Z * distance, ViewLabel::Front),
        (Vec3::Z * -distance, ViewLabel::Back),
        (Vec3::X * distance, ViewLabel::Right),
        (Vec3::X * -distance, ViewLabel::Left),
        (Vec3::Y * distance, ViewLabel::Top),
        (Vec3::Y * -distance, ViewLabel::Bottom),
        (
            Vec3::new(diag, 0.0, diag),
            ViewLabel::Custom(String::from("front-right")),
        ),
        (
            Vec3::new(-diag, 0.0, -diag),
            ViewLabel::Custom(String::from("back-left")),
        ),
    ];
    let views: Vec<Viewpoint> = axes
        .into_iter()
        .take(total)
        .map(|(eye, label)| Viewpoint::look_at_origin(eye, fov_y_deg, label))
        .collect();
    let iterations = views.chunks(per_iteration).map(<[_]>::to_vec).collect();
    Ok(ViewSchedule { iterations })
}

/// `count` viewpoints evenly spaced in azimuth around the `Y` axis at a fixed
/// elevation; viewpoint `i` has azimuth `360 * i / count` degrees, azimuth 0
/// being the `+Z` (front) direction.
pub fn orbit_viewpoints(
    count: usize,
    elevation_deg: f64,
    distance: f64,
    fov_y_deg: f64,
) -> Vec<Viewpoint> {
    let el = elevation_deg.to_radians();
    (0..count)
        .map(|i| {
            let az = (360.0 * i as f64 / count as f64).to_radians();
            let eye = Vec3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos()) * distance;
            Viewpoint::look_at_origin(
                eye,
                fov_y_deg,
                ViewLabel::Custom(alloc::format!("orbit-{i}")),
            )
        })
        .collect()
}
