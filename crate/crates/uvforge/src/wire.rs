//! The `uvforge/1` wire protocol.
//!
//! Requests are posted as JSON to `{endpoint}/v1/sample`. Images travel as
//! base64-encoded PNG: RGB images as 8-bit RGB, masks as 8-bit grayscale
//! with 255 meaning "keep". Serialization is canonical: keys sorted, no
//! insignificant whitespace.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use uvforge_core::{RgbImage, SampleKind, SampleRequest};

use crate::error::Result;
use crate::io::{decode_rgb_png, encode_mask_png, encode_rgb_png};

pub const PROTOCOL_VERSION: &str = "uvforge/1";
pub const SAMPLE_PATH: &str = "/v1/sample";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub kind: String,
    pub prompt: Option<String>,
    pub negative_prompt: Option<String>,
    pub reference_image_b64: Option<String>,
    pub init_image_b64: Option<String>,
    pub keep_mask_b64: Option<String>,
    pub control_image_b64: Option<String>,
    pub control_kind: Option<String>,
    pub seed: u64,
    pub strength: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub image_b64: String,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub message: String,
}

fn b64_png(bytes: Vec<u8>) -> String {
    B64.encode(bytes)
}

impl WireRequest {
    pub fn from_request(req: &SampleRequest) -> Result<Self> {
        let rgb = |img: &Option<RgbImage>| -> Result<Option<String>> {
            img.as_ref()
                .map(|i| encode_rgb_png(i).map(b64_png))
                .transpose()
        };
        Ok(WireRequest {
            kind: req.kind.as_str().to_owned(),
            prompt: req.condition.prompt.clone(),
            negative_prompt: req.condition.negative_prompt.clone(),
            reference_image_b64: rgb(&req.condition.reference_image)?,
            init_image_b64: rgb(&req.init_image)?,
            keep_mask_b64: req
                .keep_mask
                .as_ref()
                .map(|m| encode_mask_png(m).map(b64_png))
                .transpose()?,
            control_image_b64: rgb(&req.control_image)?,
            control_kind: req.control_kind.map(|k| k.as_str().to_owned()),
            seed: req.seed,
            strength: req.strength,
            width: req.width,
            height: req.height,
        })
    }

    pub fn kind(&self) -> Option<SampleKind> {
        SampleKind::parse(&self.kind)
    }

    /// Compact JSON with keys in lexicographic order.
    pub fn to_canonical_json(&self) -> Result<String> {
        canonical_json(self)
    }
}

impl WireResponse {
    pub fn decode_image(&self) -> Result<RgbImage> {
        let bytes = B64.decode(&self.image_b64).map_err(|e| {
            crate::Error::Sample(uvforge_core::SampleError::ContractViolation(format!(
                "image_b64: {e}"
            )))
        })?;
        decode_rgb_png(&bytes)
    }

    pub fn from_image(image: &RgbImage, backend_id: impl Into<String>) -> Result<Self> {
        Ok(WireResponse {
            image_b64: b64_png(encode_rgb_png(image)?),
            backend_id: backend_id.into(),
        })
    }
}

/// Serializes through `serde_json::Value`, whose object map is ordered by key.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&serde_json::to_value(value)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use uvforge_core::{Condition, ControlKind, Grid};

    fn request() -> SampleRequest {
        SampleRequest {
            kind: SampleKind::Inpaint,
            condition: Condition::text("crate"),
            init_image: Some(Grid::filled(2, 2, [1.0, 0.0, 0.0])),
            keep_mask: Some(Grid::from_fn(2, 2, |x, _| x == 0)),
            control_image: Some(Grid::filled(2, 2, [0.5; 3])),
            control_kind: Some(ControlKind::Depth),
            seed: 9,
            strength: 1.0,
            width: 2,
            height: 2,
        }
    }

    #[test]
    fn keys_are_sorted() {
        let json = WireRequest::from_request(&request())
            .unwrap()
            .to_canonical_json()
            .unwrap();
        let keys: Vec<&str> = json
            .match_indices("\":")
            .map(|(i, _)| {
                let start = json[..i].rfind('"').unwrap() + 1;
                &json[start..i]
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
        assert_eq!(keys.len(), 12);
        assert!(json.contains("\"negative_prompt\":null"));
        assert!(json.contains("\"control_kind\":\"depth\""));
    }

    #[test]
    fn json_round_trip() {
        let w = WireRequest::from_request(&request()).unwrap();
        let back: WireRequest = serde_json::from_str(&w.to_canonical_json().unwrap()).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.kind(), Some(SampleKind::Inpaint));
    }

    #[test]
    fn response_image_round_trip() {
        let img = Grid::from_fn(3, 2, |x, y| [x as f32 / 255.0, y as f32 / 255.0, 0.0]);
        let r = WireResponse::from_image(&img, "stub").unwrap();
        assert_eq!(r.decode_image().unwrap(), img);
    }
}
