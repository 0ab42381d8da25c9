use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use thiserror::Error;

use super::wire::{decode_f32le, ErrorBody, SegmentRequest, SegmentResponse, REQUEST_ID_HEADER};
use super::{build_fusion_input, SegmentationBackend};
use crate::hsi::{HyperCube, PseudoRgb};
use crate::imgproc::resize_bilinear;
use crate::scf::{ClickSet, ScoreMap};

const MAX_RESPONSE_BYTES: u64 = 512 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("transport failure contacting {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("request to {endpoint} timed out after {timeout:?}")]
    Timeout { endpoint: String, timeout: Duration },
    #[error("remote backend returned status {status}: {message}")]
    Status { status: u16, message: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("response shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("score out of range: value {value} at index {index}")]
    ScoreOutOfRange { index: usize, value: f64 },
    #[error("correlation id mismatch: sent {sent}, received {received}")]
    CorrelationMismatch { sent: String, received: String },
}

/// Forwards segmentation requests to `{endpoint}/segment`.
///
/// The returned map is validated (shape, finiteness, `[0, 1]` range) before
/// it leaves this type, and resized back to the cube grid when the RGB
/// image has a different resolution.
#[derive(Debug)]
pub struct RemoteBackend {
    endpoint: String,
    timeout: Duration,
    agent: ureq::Agent,
    next_id: AtomicU64,
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let endpoint = endpoint.into().trim_end_matches('/').to_string();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint,
            timeout,
            agent,
            next_id: AtomicU64::new(1),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn transport(&self, e: ureq::Error) -> RemoteError {
        match e {
            ureq::Error::Timeout(_) => RemoteError::Timeout {
                endpoint: self.endpoint.clone(),
                timeout: self.timeout,
            },
            ureq::Error::Io(io)
                if matches!(
                    io.kind(),
                    std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock
                ) =>
            {
                RemoteError::Timeout {
                    endpoint: self.endpoint.clone(),
                    timeout: self.timeout,
                }
            }
            other => RemoteError::Transport {
                endpoint: self.endpoint.clone(),
                message: other.to_string(),
            },
        }
    }

    /// Sends one request and returns the validated score plane.
    pub fn request(&self, request: &SegmentRequest) -> Result<ScoreMap, RemoteError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed).to_string();
        let body = serde_json::to_string(request).expect("request serializes");
        let url = format!("{}/segment", self.endpoint);
        let mut resp = self
            .agent
            .post(&url)
            .header("content-type", "application/json")
            .header(REQUEST_ID_HEADER, &id)
            .send(body.as_str())
            .map_err(|e| self.transport(e))?;

        let status = resp.status().as_u16();
        let echoed = resp
            .headers()
            .get(REQUEST_ID_HEADER)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let text = resp
            .body_mut()
            .with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_to_string()
            .map_err(|e| self.transport(e))?;

        if status != 200 {
            let message = serde_json::from_str::<ErrorBody>(&text)
                .map(|b| b.error)
                .unwrap_or(text);
            return Err(RemoteError::Status { status, message });
        }
        if let Some(received) = echoed {
            if received != id {
                return Err(RemoteError::CorrelationMismatch { sent: id, received });
            }
        }
        let parsed: SegmentResponse =
            serde_json::from_str(&text).map_err(|e| RemoteError::Malformed(e.to_string()))?;
        let expected = (request.height, request.width);
        if (parsed.height, parsed.width) != expected {
            return Err(RemoteError::ShapeMismatch {
                expected,
                actual: (parsed.height, parsed.width),
            });
        }
        let values = decode_f32le(&parsed.scores_b64).map_err(RemoteError::Malformed)?;
        if values.len() != expected.0 * expected.1 {
            return Err(RemoteError::Malformed(format!(
                "expected {} scores, got {}",
                expected.0 * expected.1,
                values.len()
            )));
        }
        let scores: Vec<f64> = values.into_iter().map(f64::from).collect();
        if let Some((index, &value)) = scores
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || !(0.0..=1.0).contains(*v))
        {
            return Err(RemoteError::ScoreOutOfRange { index, value });
        }
        ScoreMap::new(expected.0, expected.1, scores)
            .map_err(|e| RemoteError::Malformed(e.to_string()))
    }
}

impl SegmentationBackend for RemoteBackend {
    fn name(&self) -> String {
        format!("remote:{}", self.endpoint)
    }

    fn segment(
        &self,
        cube: &HyperCube,
        rgb: &PseudoRgb,
        clicks: &ClickSet,
    ) -> crate::Result<ScoreMap> {
        let input = build_fusion_input(cube, rgb, clicks)?;
        let scores = self.request(&SegmentRequest::from_fusion(&input))?;
        if scores.dims() == cube.dims() {
            Ok(scores)
        } else {
            resize_bilinear(&scores, cube.height(), cube.width())
        }
    }
}
