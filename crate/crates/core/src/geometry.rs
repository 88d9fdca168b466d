//! Triangle meshes with per-corner UVs, Wavefront OBJ ingestion and
//! unit-cube normalization.
//!
//! UV convention: `v` is flipped on load so that `(0, 0)` is the top-left
//! corner of the texture image. Every other module assumes this frame.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::math::{Vec2, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: face corner has no texture coordinate")]
    MissingUv { line: usize },
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("mesh bounds have zero extent")]
    DegenerateBounds,
    #[error("face {face}: {kind} index {index} out of range")]
    IndexOutOfRange {
        face: usize,
        kind: &'static str,
        index: u32,
    },
    #[error("non-finite coordinate")]
    NonFinite,
}

/// One triangle: per-corner vertex, UV and normal indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [u32; 3],
    pub uvs: [u32; 3],
    pub normals: [u32; 3],
}

/// Corner-indexed triangle mesh. Immutable once built; construct with
/// [`Mesh::new`] or [`parse_obj`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    uvs: Vec<Vec2>,
    normals: Vec<Vec3>,
    faces: Vec<Triangle>,
    face_normals: Vec<Vec3>,
    face_charts: Vec<u32>,
    chart_count: usize,
    dropped_degenerate: usize,
    ignored_directives: usize,
}

/// Summary statistics of a [`Mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport {
    pub vertices: usize,
    pub faces: usize,
    pub charts: usize,
    pub dropped_degenerate: usize,
    pub ignored_directives: usize,
    pub bounds_min: Vec3,
    pub bounds_max: Vec3,
}

/// Corner normals left as `u32::MAX` by the caller are filled with the
/// geometric face normal.
pub const COMPUTED_NORMAL: u32 = u32::MAX;

impl Mesh {
    /// Validates indices and coordinates, drops zero-area faces and derives
    /// face normals and UV charts. `normals` may be empty when every corner
    /// uses [`COMPUTED_NORMAL`].
    pub fn new(
        vertices: Vec<Vec3>,
        uvs: Vec<Vec2>,
        mut normals: Vec<Vec3>,
        faces: Vec<Triangle>,
    ) -> Result<Mesh, GeometryError> {
        if !vertices.iter().all(|v| v.is_finite())
            || !uvs.iter().all(|t| t.x.is_finite() && t.y.is_finite())
            || !normals.iter().all(|n| n.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        for (i, f) in faces.iter().enumerate() {
            check_indices(i, "vertex", &f.vertices, vertices.len(), false)?;
            check_indices(i, "uv", &f.uvs, uvs.len(), false)?;
            check_indices(i, "normal", &f.normals, normals.len(), true)?;
        }

        let (lo, hi) = bounds_of(&vertices);
        let extent = (hi - lo).max_element().max(0.0);
        let area_floor = 1e-12 * extent * extent;

        let mut kept = Vec::with_capacity(faces.len());
        let mut face_normals = Vec::with_capacity(faces.len());
        let mut dropped = 0;
        for mut f in faces {
            let [a, b, c] = f.vertices.map(|i| vertices[i as usize]);
            let cross = (b - a).cross(c - a);
            let len = cross.length();
            if len.is_nan() || len <= area_floor {
                dropped += 1;
                continue;
            }
            let mut n = cross / len;
            let provided = f
                .normals
                .iter()
                .filter(|&&i| i != COMPUTED_NORMAL)
                .fold(Vec3::ZERO, |acc, &i| acc + normals[i as usize]);
            if provided.dot(n) < 0.0 {
                n = -n;
            }
            if f.normals.contains(&COMPUTED_NORMAL) {
                let idx = normals.len() as u32;
                normals.push(n);
                for slot in f.normals.iter_mut().filter(|s| **s == COMPUTED_NORMAL) {
                    *slot = idx;
                }
            }
            face_normals.push(n);
            kept.push(f);
        }
        for n in normals.iter_mut() {
            if let Some(u) = n.try_normalize() {
                *n = u;
            }
        }

        let (face_charts, chart_count) = label_charts(&kept, uvs.len());
        Ok(Mesh {
            vertices,
            uvs,
            normals,
            faces: kept,
            face_normals,
            face_charts,
            chart_count,
            dropped_degenerate: dropped,
            ignored_directives: 0,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn uvs(&self) -> &[Vec2] {
        &self.uvs
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn faces(&self) -> &[Triangle] {
        &self.faces
    }

    /// Unit geometric normal of face `i`, oriented to agree with the file's
    /// vertex normals when present.
    pub fn face_normal(&self, i: usize) -> Vec3 {
        self.face_normals[i]
    }

    /// UV chart id of face `i`, in `0..chart_count()`.
    pub fn face_chart(&self, i: usize) -> u32 {
        self.face_charts[i]
    }

    pub fn chart_count(&self) -> usize {
        self.chart_count
    }

    pub fn dropped_degenerate(&self) -> usize {
        self.dropped_degenerate
    }

    /// Number of OBJ directives skipped while parsing.
    pub fn ignored_directives(&self) -> usize {
        self.ignored_directives
    }

    pub fn face_positions(&self, i: usize) -> [Vec3; 3] {
        self.faces[i].vertices.map(|v| self.vertices[v as usize])
    }

    pub fn face_uvs(&self, i: usize) -> [Vec2; 3] {
        self.faces[i].uvs.map(|t| self.uvs[t as usize])
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        bounds_of(&self.vertices)
    }
}

fn check_indices(
    face: usize,
    kind: &'static str,
    idx: &[u32; 3],
    len: usize,
    allow_computed: bool,
) -> Result<(), GeometryError> {
    for &i in idx {
        if allow_computed && i == COMPUTED_NORMAL {
            continue;
        }
        if i as usize >= len {
            return Err(GeometryError::IndexOutOfRange {
                face,
                kind,
                index: i,
            });
        }
    }
    Ok(())
}

fn bounds_of(points: &[Vec3]) -> (Vec3, Vec3) {
    if points.is_empty() {
        return (Vec3::ZERO, Vec3::ZERO);
    }
    points.iter().fold(
        (Vec3::splat(f64::INFINITY), Vec3::splat(f64::NEG_INFINITY)),
        |(lo, hi), &p| (lo.min(p), hi.max(p)),
    )
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let grand = parent[parent[i as usize] as usize];
        parent[i as usize] = grand;
        i = grand;
    }
    i
}

/// Union-find over UV indices: faces sharing any UV index share a chart.
/// Chart ids are assigned in order of first appearance.
fn label_charts(faces: &[Triangle], uv_count: usize) -> (Vec<u32>, usize) {
    let mut parent: Vec<u32> = (0..uv_count as u32).collect();
    for f in faces {
        let [a, b, c] = f.uvs;
        for other in [b, c] {
            let (ra, ro) = (find(&mut parent, a), find(&mut parent, other));
            if ra != ro {
                parent[ra.max(ro) as usize] = ra.min(ro);
            }
        }
    }
    let mut label = alloc::vec![u32::MAX; uv_count];
    let mut next = 0u32;
    let charts = faces
        .iter()
        .map(|f| {
            let root = find(&mut parent, f.uvs[0]) as usize;
            if label[root] == u32::MAX {
                label[root] = next;
                next += 1;
            }
            label[root]
        })
        .collect();
    (charts, next as usize)
}

/// Translates and uniformly scales the mesh so its bounding box is centered
/// at the origin with largest side 1, i.e. it fits `[-0.5, 0.5]^3`.
pub fn normalize_to_unit(mesh: &Mesh) -> Result<Mesh, GeometryError> {
    let (lo, hi) = mesh.bounds();
    let extent = (hi - lo).max_element();
    if mesh.vertices.is_empty() || extent.is_nan() || extent <= 0.0 {
        return Err(GeometryError::DegenerateBounds);
    }
    let center = (lo + hi) * 0.5;
    let scale = 1.0 / extent;
    let mut out = mesh.clone();
    for v in out.vertices.iter_mut() {
        *v = (*v - center) * scale;
    }
    Ok(out)
}

pub fn inspect(mesh: &Mesh) -> MeshReport {
    let (bounds_min, bounds_max) = mesh.bounds();
    MeshReport {
        vertices: mesh.vertices.len(),
        faces: mesh.faces.len(),
        charts: mesh.chart_count,
        dropped_degenerate: mesh.dropped_degenerate,
        ignored_directives: mesh.ignored_directives,
        bounds_min,
        bounds_max,
    }
}

/// Parses the Wavefront OBJ subset `v`, `vt`, `vn`, `f` (forms `v/vt` and
/// `v/vt/vn`, negative indices allowed). Polygons are fan-triangulated.
/// Other directives are counted and skipped; parsing stops at a second `o`.
pub fn parse_obj(text: &str) -> Result<Mesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    let mut normals = Vec::new();
    let mut faces = Vec::new();
    let mut ignored = 0usize;
    let mut objects = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let c = parse_floats(tokens, 3, line_no)?;
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            "vt" => {
                let c = parse_floats(tokens, 2, line_no)?;
                uvs.push(Vec2::new(c[0], 1.0 - c[1]));
            }
            "vn" => {
                let c = parse_floats(tokens, 3, line_no)?;
                normals.push(Vec3::new(c[0], c[1], c[2]));
            }
            "f" => {
                let corners = tokens
                    .map(|t| parse_corner(t, line_no, vertices.len(), uvs.len(), normals.len()))
                    .collect::<Result<Vec<_>, _>>()?;
                if corners.len() < 3 {
                    return Err(parse_err(line_no, "face needs at least 3 corners"));
                }
                for i in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[i], corners[i + 1]];
                    faces.push(Triangle {
                        vertices: tri.map(|c| c.0),
                        uvs: tri.map(|c| c.1),
                        normals: tri.map(|c| c.2),
                    });
                }
            }
            "o" => {
                objects += 1;
                if objects > 1 {
                    ignored += 1;
                    break;
                }
            }
            _ => ignored += 1,
        }
    }

    let mut mesh = Mesh::new(vertices, uvs, normals, faces)?;
    if mesh.faces.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    mesh.ignored_directives = ignored;
    Ok(mesh)
}

fn parse_err(line: usize, message: &str) -> GeometryError {
    GeometryError::Parse {
        line,
        message: String::from(message),
    }
}

fn parse_floats<'a>(
    tokens: impl Iterator<Item = &'a str>,
    needed: usize,
    line: usize,
) -> Result<[f64; 3], GeometryError> {
    let mut out = [0.0; 3];
    let mut n = 0;
    for t in tokens.take(needed) {
        out[n] = t
            .parse::<f64>()
            .map_err(|_| parse_err(line, "invalid number"))?;
        if !out[n].is_finite() {
            return Err(parse_err(line, "non-finite number"));
        }
        n += 1;
    }
    if n < needed {
        return Err(parse_err(line, "too few components"));
    }
    Ok(out)
}

fn resolve_index(token: &str, len: usize, line: usize) -> Result<u32, GeometryError> {
    let i: i64 = token
        .parse()
        .map_err(|_| parse_err(line, "invalid index"))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        len as i64 + i
    } else {
        return Err(parse_err(line, "index 0 is invalid"));
    };
    if resolved < 0 || resolved >= len as i64 {
        return Err(parse_err(line, "index out of range"));
    }
    Ok(resolved as u32)
}

fn parse_corner(
    token: &str,
    line: usize,
    nv: usize,
    nt: usize,
    nn: usize,
) -> Result<(u32, u32, u32), GeometryError> {
    let mut parts = token.split('/');
    let v = resolve_index(parts.next().unwrap_or(""), nv, line)?;
    let vt = match parts.next() {
        Some(s) if !s.is_empty() => resolve_index(s, nt, line)?,
        _ => return Err(GeometryError::MissingUv { line }),
    };
    let vn = match parts.next() {
        Some(s) if !s.is_empty() => resolve_index(s, nn, line)?,
        _ => COMPUTED_NORMAL,
    };
    if parts.next().is_some() {
        return Err(parse_err(line, "too many '/' in face corner"));
    }
    Ok((v, vt, vn))
}

/// Serializes the mesh back to OBJ (debug writer). UVs are written in the
/// file convention, undoing the load-time flip.
pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.uvs {
        let _ = writeln!(out, "vt {} {}", t.x, 1.0 - t.y);
    }
    for n in &mesh.normals {
        let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
    }
    for f in &mesh.faces {
        out.push('f');
        for k in 0..3 {
            let _ = write!(
                out,
                " {}/{}/{}",
                f.vertices[k] + 1,
                f.uvs[k] + 1,
                f.normals[k] + 1
            );
        }
        out.push('\n');
    }
    out
}
