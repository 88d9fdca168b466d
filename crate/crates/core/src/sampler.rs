//! Conditional image-generation interface: request/response types, the
//! engine-side keep contract, and a deterministic mock backend.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::time::Duration;

use crate::grid::{luminance, Mask, Rgb, RgbImage};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend rejected request: {0}")]
    BackendRejected(String),
    #[error("backend timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("backend response violates contract: {0}")]
    ContractViolation(String),
    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),
}

/// Appearance condition: text prompt and/or reference image.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub prompt: Option<String>,
    pub reference_image: Option<RgbImage>,
    pub negative_prompt: Option<String>,
}

impl Condition {
    pub fn new(
        prompt: Option<String>,
        reference_image: Option<RgbImage>,
        negative_prompt: Option<String>,
    ) -> Result<Self, SampleError> {
        let c = Self {
            prompt,
            reference_image,
            negative_prompt,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn text(prompt: impl Into<String>) -> Self {
        Self {
            prompt: Some(prompt.into()),
            reference_image: None,
            negative_prompt: None,
        }
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        if self.prompt.is_none() && self.reference_image.is_none() {
            return Err(SampleError::InvalidRequest(
                "condition needs a prompt or a reference image",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleKind {
    /// Depth-conditioned generation of a fresh view (grid).
    Generate,
    /// Depth-aware inpainting of the uncolored part of a rendered view.
    Inpaint,
    /// Position-conditioned hole filling in UV space.
    UvInpaint,
    /// Position-conditioned enhancement of the whole atlas.
    UvHd,
}

impl SampleKind {
    pub const ALL: [SampleKind; 4] = [
        SampleKind::Generate,
        SampleKind::Inpaint,
        SampleKind::UvInpaint,
        SampleKind::UvHd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::Generate => "generate",
            SampleKind::Inpaint => "inpaint",
            SampleKind::UvInpaint => "uv_inpaint",
            SampleKind::UvHd => "uv_hd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Kinds whose response must preserve `keep_mask` pixels.
    pub fn keeps_pixels(self) -> bool {
        matches!(self, SampleKind::Inpaint | SampleKind::UvInpaint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlKind {
    Depth,
    Position,
}

impl ControlKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlKind::Depth => "depth",
            ControlKind::Position => "position",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRequest {
    pub kind: SampleKind,
    pub condition: Condition,
    pub init_image: Option<RgbImage>,
    /// `true` marks pixels the response must preserve.
    pub keep_mask: Option<Mask>,
    /// Absent when running without shape conditioning.
    pub control_image: Option<RgbImage>,
    pub control_kind: Option<ControlKind>,
    pub seed: u64,
    pub strength: f64,
    pub width: usize,
    pub height: usize,
}

impl SampleRequest {
    pub fn validate(&self) -> Result<(), SampleError> {
        self.condition.validate()?;
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(SampleError::InvalidRequest("strength outside [0, 1]"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(SampleError::InvalidRequest("zero-sized request"));
        }
        let dims = (self.width, self.height);
        match self.kind {
            SampleKind::Inpaint | SampleKind::UvInpaint => {
                if self.init_image.is_none() || self.keep_mask.is_none() {
                    return Err(SampleError::InvalidRequest(
                        "inpainting needs init_image and keep_mask",
                    ));
                }
            }
            SampleKind::UvHd if self.init_image.is_none() => {
                return Err(SampleError::InvalidRequest("uv_hd needs init_image"));
            }
            _ => {}
        }
        let image_dims = [
            self.init_image.as_ref().map(RgbImage::dims),
            self.keep_mask.as_ref().map(Mask::dims),
            self.control_image.as_ref().map(RgbImage::dims),
        ];
        if image_dims.iter().flatten().any(|&d| d != dims) {
            return Err(SampleError::InvalidRequest(
                "request images must match width x height",
            ));
        }
        if self.control_image.is_some() != self.control_kind.is_some() {
            return Err(SampleError::InvalidRequest(
                "control_kind must accompany control_image",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResponse {
    pub image: RgbImage,
    pub backend_id: String,
    pub elapsed: Duration,
}

/// A conditional image generator. At most one request is in flight per
/// instance; implementations may block.
pub trait Backend: Send {
    fn id(&self) -> &str;

    fn sample(&mut self, request: &SampleRequest) -> Result<RgbImage, SampleError>;
}

impl<B: Backend + ?Sized> Backend for alloc::boxed::Box<B> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn sample(&mut self, request: &SampleRequest) -> Result<RgbImage, SampleError> {
        (**self).sample(request)
    }
}

/// Checks the response dimensions and, for inpainting kinds, re-composites
/// the kept pixels of `init_image` over the backend output so they are
/// preserved bit-exactly.
pub fn enforce_contract(
    request: &SampleRequest,
    mut image: RgbImage,
) -> Result<RgbImage, SampleError> {
    if image.dims() != (request.width, request.height) {
        let (w, h) = image.dims();
        return Err(SampleError::ContractViolation(alloc::format!(
            "response is {w}x{h}, requested {}x{}",
            request.width,
            request.height
        )));
    }
    if request.kind.keeps_pixels() {
        if let (Some(init), Some(keep)) = (&request.init_image, &request.keep_mask) {
            let out = image.as_mut_slice();
            for (i, (&k, &px)) in keep.as_slice().iter().zip(init.as_slice()).enumerate() {
                if k {
                    out[i] = px;
                }
            }
        }
    }
    Ok(image)
}

/// Deterministic stand-in for a diffusion backend.
///
/// * `generate`: smooth color field whose hue derives from a hash of the
///   condition, seed and palette seed; brightness follows the control
///   image's luminance so depth structure shows in the output.
/// * `inpaint`: the same field, with kept pixels preserved.
/// * `uv_inpaint`: each non-kept pixel takes the mean of kept pixels inside a
///   square window whose radius doubles from 1 until non-empty (capped at
///   the image diagonal); the palette color if nothing is kept.
/// * `uv_hd`: returns `init_image` unchanged.
#[derive(Debug, Clone)]
pub struct MockBackend {
    palette_seed: u64,
    id: String,
}

pub fn mock_backend(palette_seed: u64) -> MockBackend {
    MockBackend {
        palette_seed,
        id: alloc::format!("mock/{palette_seed}"),
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> Rgb {
    let h = (h - h.floor()) * 6.0;
    let sector = h.floor();
    let f = h - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match sector as u32 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r, g, b].map(|c| c.clamp(0.0, 1.0) as f32)
}

struct Palette {
    hue: f64,
    phases: [f64; 3],
    freqs: [f64; 2],
}

impl MockBackend {
    fn condition_key(&self, request: &SampleRequest) -> u64 {
        let c = &request.condition;
        let mut h = FNV_OFFSET;
        h = fnv1a(h, c.prompt.as_deref().unwrap_or("").as_bytes());
        h = fnv1a(h, &[0xff]);
        h = fnv1a(h, c.negative_prompt.as_deref().unwrap_or("").as_bytes());
        if let Some(img) = &c.reference_image {
            let mut sum = [0.0f64; 3];
            for px in img.as_slice() {
                for k in 0..3 {
                    sum[k] += px[k] as f64;
                }
            }
            let n = img.len().max(1) as f64;
            for s in sum {
                h = fnv1a(h, &((s / n) as f32).to_bits().to_le_bytes());
            }
        }
        h = fnv1a(h, &request.seed.to_le_bytes());
        splitmix(h ^ splitmix(self.palette_seed))
    }

    fn palette(&self, request: &SampleRequest) -> Palette {
        let key = self.condition_key(request);
        let r1 = splitmix(key);
        let r2 = splitmix(r1);
        let r3 = splitmix(r2);
        Palette {
            hue: unit(key),
            phases: [unit(r1), unit(r2), unit(r3)],
            freqs: [0.5 + 1.5 * unit(r1 ^ r3), 0.5 + 1.5 * unit(r2 ^ r3)],
        }
    }

    fn palette_color(p: &Palette) -> Rgb {
        hsv_to_rgb(p.hue, 0.6, 0.8)
    }

    fn color_field(&self, request: &SampleRequest) -> RgbImage {
        let p = self.palette(request);
        let (w, h) = (request.width, request.height);
        RgbImage::from_fn(w, h, |x, y| {
            let u = (x as f64 + 0.5) / w as f64;
            let v = (y as f64 + 0.5) / h as f64;
            let hue = p.hue
                + 0.08 * (TAU * (u * p.freqs[0] + p.phases[0])).sin()
                + 0.08 * (TAU * (v * p.freqs[1] + p.phases[1])).sin();
            let sat = 0.55 + 0.25 * (TAU * (0.5 * (u + v) + p.phases[2])).sin();
            let val = match &request.control_image {
                Some(c) => 0.25 + 0.75 * luminance(*c.get(x, y)).clamp(0.0, 1.0) as f64,
                None => 0.85,
            };
            hsv_to_rgb(hue, sat, val)
        })
    }

    fn ring_fill(&self, request: &SampleRequest, init: &RgbImage, keep: &Mask) -> RgbImage {
        let fallback = Self::palette_color(&self.palette(request));
        ring_mean_fill(init, keep, fallback)
    }
}

/// Summed-area tables over kept pixels; `(w + 1) x (h + 1)` with a zero
/// border.
struct KeptSums {
    w: usize,
    count: Vec<u32>,
    sum: Vec<[f64; 3]>,
}

impl KeptSums {
    fn new(image: &RgbImage, keep: &Mask) -> Self {
        let (w, h) = image.dims();
        let stride = w + 1;
        let mut count = alloc::vec![0u32; stride * (h + 1)];
        let mut sum = alloc::vec![[0.0f64; 3]; stride * (h + 1)];
        for y in 0..h {
            let mut row_n = 0u32;
            let mut row_s = [0.0f64; 3];
            for x in 0..w {
                if *keep.get(x, y) {
                    row_n += 1;
                    let c = image.get(x, y);
                    for k in 0..3 {
                        row_s[k] += c[k] as f64;
                    }
                }
                let above = y * stride + x + 1;
                let here = (y + 1) * stride + x + 1;
                count[here] = count[above] + row_n;
                for k in 0..3 {
                    sum[here][k] = sum[above][k] + row_s[k];
                }
            }
        }
        Self { w, count, sum }
    }

    /// Count and channel sums over the inclusive box `[x0, x1] x [y0, y1]`.
    fn query(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> (u32, [f64; 3]) {
        let s = self.w + 1;
        let (a, b, c, d) = (
            y0 * s + x0,
            y0 * s + x1 + 1,
            (y1 + 1) * s + x0,
            (y1 + 1) * s + x1 + 1,
        );
        let n = self.count[d] + self.count[a] - self.count[b] - self.count[c];
        let out = core::array::from_fn(|k| {
            self.sum[d][k] + self.sum[a][k] - self.sum[b][k] - self.sum[c][k]
        });
        (n, out)
    }
}

/// Fills every non-kept pixel with the mean of kept pixels in the smallest
/// window (Chebyshev radius 1, 2, 4, ... up to the image diagonal) that
/// contains any; `fallback` when none exist.
pub fn ring_mean_fill(init: &RgbImage, keep: &Mask, fallback: Rgb) -> RgbImage {
    let (w, h) = init.dims();
    let sums = KeptSums::new(init, keep);
    let diag = ((w * w + h * h) as f64).sqrt().ceil() as usize;
    let mut out = init.clone();
    for y in 0..h {
        for x in 0..w {
            if *keep.get(x, y) {
                continue;
            }
            let mut r = 1usize;
            let mut color = fallback;
            loop {
                let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
                let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
                let (n, s) = sums.query(x0, y0, x1, y1);
                if n > 0 {
                    color = s.map(|v| (v / n as f64) as f32);
                    break;
                }
                if r >= diag {
                    break;
                }
                r = (r * 2).min(diag);
            }
            out.set(x, y, color);
        }
    }
    out
}

impl Backend for MockBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn sample(&mut self, request: &SampleRequest) -> Result<RgbImage, SampleError> {
        request.validate()?;
        let out = match request.kind {
            SampleKind::Generate => self.color_field(request),
            SampleKind::Inpaint => {
                let mut img = self.color_field(request);
                let init = request.init_image.as_ref().expect("validated");
                let keep = request.keep_mask.as_ref().expect("validated");
                for (i, &k) in keep.as_slice().iter().enumerate() {
                    if k {
                        img.as_mut_slice()[i] = init.as_slice()[i];
                    }
                }
                img
            }
            SampleKind::UvInpaint => {
                let init = request.init_image.as_ref().expect("validated");
                let keep = request.keep_mask.as_ref().expect("validated");
                self.ring_fill(request, init, keep)
            }
            SampleKind::UvHd => request.init_image.clone().expect("validated"),
        };
        Ok(out)
    }
}

/// Wraps a backend and records every request it receives.
#[derive(Debug, Clone, Default)]
pub struct RecordingBackend<B> {
    pub inner: B,
    pub requests: Vec<SampleRequest>,
}

impl<B> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            requests: Vec::new(),
        }
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn sample(&mut self, request: &SampleRequest) -> Result<RgbImage, SampleError> {
        self.requests.push(request.clone());
        self.inner.sample(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn request(kind: SampleKind, w: usize, h: usize) -> SampleRequest {
        SampleRequest {
            kind,
            condition: Condition::text("wooden crate"),
            init_image: None,
            keep_mask: None,
            control_image: None,
            control_kind: None,
            seed: 7,
            strength: 1.0,
            width: w,
            height: h,
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let mut a = mock_backend(3);
        let mut b = mock_backend(3);
        let r = request(SampleKind::Generate, 32, 16);
        assert_eq!(a.sample(&r).unwrap(), b.sample(&r).unwrap());
        let mut other = r.clone();
        other.seed = 8;
        assert_ne!(a.sample(&r).unwrap(), a.sample(&other).unwrap());
    }

    #[test]
    fn generate_follows_control_luminance() {
        let mut m = mock_backend(0);
        let mut r = request(SampleKind::Generate, 16, 16);
        r.control_image = Some(Grid::from_fn(16, 16, |x, _| {
            if x < 8 {
                [1.0; 3]
            } else {
                [0.0; 3]
            }
        }));
        r.control_kind = Some(ControlKind::Depth);
        let img = m.sample(&r).unwrap();
        let bright = img.get(4, 8).iter().cloned().fold(0.0f32, f32::max);
        let dark = img.get(12, 8).iter().cloned().fold(0.0f32, f32::max);
        assert!(bright > dark + 0.4);
    }

    #[test]
    fn inpaint_with_full_keep_returns_init() {
        let mut m = mock_backend(1);
        let init = Grid::from_fn(8, 8, |x, y| [x as f32 / 8.0, y as f32 / 8.0, 0.3]);
        let mut r = request(SampleKind::Inpaint, 8, 8);
        r.init_image = Some(init.clone());
        r.keep_mask = Some(Mask::filled(8, 8, true));
        assert_eq!(m.sample(&r).unwrap(), init);
    }

    #[test]
    fn uv_hd_is_identity() {
        let mut m = mock_backend(1);
        let init = Grid::from_fn(8, 4, |x, y| [x as f32 / 8.0, y as f32 / 4.0, 0.9]);
        let mut r = request(SampleKind::UvHd, 8, 4);
        r.init_image = Some(init.clone());
        r.strength = 0.75;
        assert_eq!(m.sample(&r).unwrap(), init);
    }

    #[test]
    fn uv_inpaint_single_hole_in_blue() {
        let mut m = mock_backend(1);
        let blue = [0.0, 0.0, 1.0];
        let mut init = Grid::filled(5, 5, blue);
        init.set(2, 2, [0.0; 3]);
        let mut keep = Mask::filled(5, 5, true);
        keep.set(2, 2, false);
        let mut r = request(SampleKind::UvInpaint, 5, 5);
        r.init_image = Some(init);
        r.keep_mask = Some(keep);
        assert_eq!(*m.sample(&r).unwrap().get(2, 2), blue);
    }

    #[test]
    fn uv_inpaint_without_kept_pixels_uses_palette() {
        let mut m = mock_backend(1);
        let mut r = request(SampleKind::UvInpaint, 4, 4);
        r.init_image = Some(Grid::filled(4, 4, [0.0; 3]));
        r.keep_mask = Some(Mask::filled(4, 4, false));
        let out = m.sample(&r).unwrap();
        let first = *out.get(0, 0);
        assert!(out.as_slice().iter().all(|p| *p == first));
        assert_ne!(first, [0.0; 3]);
    }

    #[test]
    fn request_validation() {
        let mut r = request(SampleKind::Inpaint, 4, 4);
        assert!(r.validate().is_err());
        r.init_image = Some(Grid::filled(4, 4, [0.0; 3]));
        r.keep_mask = Some(Mask::filled(4, 3, true));
        assert!(r.validate().is_err());
        r.keep_mask = Some(Mask::filled(4, 4, true));
        r.validate().unwrap();
        r.strength = 1.5;
        assert!(r.validate().is_err());
        assert!(Condition::new(None, None, Some("x".into())).is_err());
        let mut g = request(SampleKind::Generate, 4, 4);
        g.control_image = Some(Grid::filled(4, 4, [0.0; 3]));
        assert!(g.validate().is_err());
    }

    #[test]
    fn contract_recomposites_kept_pixels_and_checks_size() {
        let init = Grid::from_fn(4, 4, |x, _| [x as f32 / 4.0; 3]);
        let mut keep = Mask::filled(4, 4, false);
        keep.set(1, 1, true);
        let mut r = request(SampleKind::Inpaint, 4, 4);
        r.init_image = Some(init.clone());
        r.keep_mask = Some(keep);
        let noisy = Grid::filled(4, 4, [0.9; 3]);
        let out = enforce_contract(&r, noisy).unwrap();
        assert_eq!(out.get(1, 1), init.get(1, 1));
        assert_eq!(*out.get(2, 2), [0.9; 3]);
        assert!(matches!(
            enforce_contract(&r, Grid::filled(4, 3, [0.0; 3])),
            Err(SampleError::ContractViolation(_))
        ));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SampleKind::ALL {
            assert_eq!(SampleKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(SampleKind::parse("paint"), None);
    }
}
