//! JSON wire format shared by the remote backend and the HTTP service.
//!
//! Planes travel as base64-encoded raw little-endian `f32`, row-major; RGB
//! planes are pixel-interleaved (`H * W * 3` values).

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::FusionInput;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub height: usize,
    pub width: usize,
    pub clicks: Vec<[usize; 2]>,
    pub rgb_b64: String,
    pub prompt_b64: String,
}

impl SegmentRequest {
    pub fn from_fusion(input: &FusionInput) -> Self {
        Self {
            height: input.rgb.height(),
            width: input.rgb.width(),
            clicks: input.clicks.points().iter().map(|&(r, c)| [r, c]).collect(),
            rgb_b64: encode_f32le(input.rgb.data()),
            prompt_b64: encode_f32le(input.spectral_prompt.scores()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub height: usize,
    pub width: usize,
    pub scores_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// Header carrying the request correlation id; servers may echo it back.
pub const REQUEST_ID_HEADER: &str = "x-request-id";

pub fn encode_f32le(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for &v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_f32le(b64: &str) -> Result<Vec<f32>, String> {
    let bytes = STANDARD
        .decode(b64)
        .map_err(|e| format!("invalid base64: {e}"))?;
    if bytes.len() % 4 != 0 {
        return Err(format!(
            "payload length {} is not a multiple of 4",
            bytes.len()
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn f32_planes_round_trip(values in proptest::collection::vec(-1e30f32..1e30, 0..64)) {
            let wide: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            let back = decode_f32le(&encode_f32le(&wide)).unwrap();
            prop_assert_eq!(back, values);
        }
    }

    #[test]
    fn rejects_bad_payloads() {
        assert!(decode_f32le("!!!").is_err());
        assert!(decode_f32le(&STANDARD.encode([1u8, 2, 3])).is_err());
    }
}
