#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use uvforge::core::{Condition, ControlKind, Grid, RgbImage, SampleKind, SampleRequest};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares `actual` with a committed golden file, or rewrites the file when
/// `UPDATE_GOLDEN` is set.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected =
        std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!(
            "{name} differs from golden ({} vs {} bytes)",
            actual.len(),
            expected.len()
        ))
    }
}

/// The fixed request used for each kind's golden file. View kinds use a 1x2
/// grid (width twice the height); UV kinds are square.
pub fn golden_request(kind: SampleKind) -> SampleRequest {
    let uv = matches!(kind, SampleKind::UvInpaint | SampleKind::UvHd);
    let (w, h) = if uv { (4, 4) } else { (8, 4) };
    let ramp = |x: usize, y: usize| {
        [
            x as f32 * 30.0 / 255.0,
            y as f32 * 60.0 / 255.0,
            128.0 / 255.0,
        ]
    };
    let control = Grid::from_fn(w, h, |x, y| {
        let v = ((x + 2 * y) * 20) as f32 / 255.0;
        [v, v, v]
    });
    let mut condition = Condition::text("wooden crate");
    condition.negative_prompt = Some("blurry".into());
    let mut req = SampleRequest {
        kind,
        condition,
        init_image: None,
        keep_mask: None,
        control_image: Some(control),
        control_kind: Some(if uv {
            ControlKind::Position
        } else {
            ControlKind::Depth
        }),
        seed: 42,
        strength: if uv { 0.75 } else { 1.0 },
        width: w,
        height: h,
    };
    match kind {
        SampleKind::Generate => {}
        SampleKind::Inpaint | SampleKind::UvInpaint => {
            req.init_image = Some(Grid::from_fn(w, h, ramp));
            req.keep_mask = Some(Grid::from_fn(w, h, |x, y| (x + y) % 2 == 0));
        }
        SampleKind::UvHd => req.init_image = Some(Grid::from_fn(w, h, ramp)),
    }
    req
}

/// Payload of the stub's golden response: an 8x4 image on exact 8-bit levels.
pub fn golden_response_image() -> RgbImage {
    Grid::from_fn(8, 4, |x, y| {
        [
            (x * 32) as f32 / 255.0,
            (y * 64) as f32 / 255.0,
            200.0 / 255.0,
        ]
    })
}

#[derive(Clone)]
pub enum Reply {
    Status(u16, String),
    Delayed(Duration, u16, String),
}

/// Minimal HTTP/1.1 server on a loopback port, one thread per connection.
pub struct Stub {
    pub endpoint: String,
    pub bodies: Arc<Mutex<Vec<String>>>,
}

impl Stub {
    pub fn spawn(reply: Reply) -> Stub {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let endpoint = format!("http://{}", listener.local_addr().unwrap());
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let seen = Arc::clone(&bodies);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let reply = reply.clone();
                let seen = Arc::clone(&seen);
                thread::spawn(move || {
                    let _ = serve(stream, &reply, &seen);
                });
            }
        });
        Stub { endpoint, bodies }
    }

    pub fn hits(&self) -> usize {
        self.bodies.lock().unwrap().len()
    }
}

fn serve(stream: TcpStream, reply: &Reply, seen: &Mutex<Vec<String>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body)?;
    seen.lock()
        .unwrap()
        .push(String::from_utf8_lossy(&body).into_owned());
    let (status, payload) = match reply {
        Reply::Status(s, p) => (*s, p),
        Reply::Delayed(d, s, p) => {
            thread::sleep(*d);
            (*s, p)
        }
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

pub mod oracle {
    //! Brute-force references, independent of the engine's rasterizers.

    use uvforge::core::{Mesh, Vec2, Vec3, Viewpoint};

    /// 3D point, face normal and chart of the surface under each texel center,
    /// found by testing every UV triangle.
    pub struct TexelSurface {
        pub points: Vec<Option<(Vec3, Vec3, u32)>>,
        pub width: usize,
    }

    fn bary(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> Option<[f64; 3]> {
        let d = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if d.abs() < 1e-15 {
            return None;
        }
        let l1 = ((p.x - a.x) * (c.y - a.y) - (p.y - a.y) * (c.x - a.x)) / d;
        let l2 = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / d;
        let l0 = 1.0 - l1 - l2;
        let eps = -1e-12;
        (l0 >= eps && l1 >= eps && l2 >= eps).then_some([l0, l1, l2])
    }

    pub fn texel_surface(mesh: &Mesh, res: usize) -> TexelSurface {
        let mut points = vec![None; res * res];
        for y in 0..res {
            for x in 0..res {
                let p = Vec2::new((x as f64 + 0.5) / res as f64, (y as f64 + 0.5) / res as f64);
                for f in 0..mesh.faces().len() {
                    let [a, b, c] = mesh.face_uvs(f);
                    if let Some(l) = bary(p, a, b, c) {
                        let [pa, pb, pc] = mesh.face_positions(f);
                        let pos = pa * l[0] + pb * l[1] + pc * l[2];
                        let n = (pb - pa).cross(pc - pa).normalize();
                        points[y * res + x] = Some((pos, n, mesh.face_chart(f)));
                        break;
                    }
                }
            }
        }
        TexelSurface { points, width: res }
    }

    fn ray_hits(mesh: &Mesh, origin: Vec3, dir: Vec3, max_t: f64) -> bool {
        (0..mesh.faces().len()).any(|f| {
            let [a, b, c] = mesh.face_positions(f);
            let (e1, e2) = (b - a, c - a);
            let p = dir.cross(e2);
            let det = e1.dot(p);
            if det.abs() < 1e-12 {
                return false;
            }
            let s = origin - a;
            let u = s.dot(p) / det;
            let q = s.cross(e1);
            let v = dir.dot(q) / det;
            let t = e2.dot(q) / det;
            (0.0..=1.0).contains(&u) && v >= 0.0 && u + v <= 1.0 && t > 1e-9 && t < max_t
        })
    }

    /// Whether the texel's surface point faces the camera at the given
    /// cosine threshold, projects inside the square image and is unoccluded.
    pub fn visible(
        mesh: &Mesh,
        view: &Viewpoint,
        point: Vec3,
        normal: Vec3,
        cos_threshold: f64,
    ) -> bool {
        let to_eye = view.eye - point;
        let dist = to_eye.length();
        if normal.dot(to_eye / dist) < cos_threshold {
            return false;
        }
        let forward = (view.target - view.eye).normalize();
        let right = forward.cross(view.up).normalize();
        let up = right.cross(forward);
        let rel = point - view.eye;
        let z = rel.dot(forward);
        let half = match view.projection {
            uvforge::core::Projection::Perspective { fov_y_deg } => {
                (fov_y_deg.to_radians() / 2.0).tan()
            }
            uvforge::core::Projection::Orthographic { .. } => {
                unreachable!("perspective views only")
            }
        };
        if z <= 0.0 || (rel.dot(right) / z).abs() > half || (rel.dot(up) / z).abs() > half {
            return false;
        }
        !ray_hits(mesh, view.eye, -to_eye / dist, dist - 1e-4)
    }

    /// Per-texel visibility from any of `views`; `None` outside the charts.
    pub fn visible_from_any(
        mesh: &Mesh,
        surface: &TexelSurface,
        views: &[Viewpoint],
    ) -> Vec<Option<bool>> {
        surface
            .points
            .iter()
            .map(|s| s.map(|(p, n, _)| views.iter().any(|v| visible(mesh, v, p, n, 0.1))))
            .collect()
    }
}
