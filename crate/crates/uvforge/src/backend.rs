//! Backend construction, the timed `sample` entry point and the HTTP client.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use uvforge_core::{
    enforce_contract, mock_backend, Backend, RgbImage, SampleError, SampleRequest, SampleResponse,
};

use crate::wire::{WireError, WireRequest, WireResponse, SAMPLE_PATH};

/// Runs one request: validates it, times the backend call, checks the
/// response dimensions and re-composites kept pixels.
pub fn sample<B: Backend + ?Sized>(
    backend: &mut B,
    request: &SampleRequest,
) -> Result<SampleResponse, SampleError> {
    request.validate()?;
    let start = Instant::now();
    let image = backend.sample(request)?;
    let image = enforce_contract(request, image)?;
    Ok(SampleResponse {
        image,
        backend_id: backend.id().to_owned(),
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub timeout_secs: f64,
    /// Total attempts per request for transient failures (minimum 1).
    pub retries: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            endpoint: None,
            timeout_secs: 300.0,
            retries: 3,
        }
    }
}

impl BackendConfig {
    /// The mock backend takes its palette seed from `seed`.
    pub fn build(&self, seed: u64) -> Result<Box<dyn Backend>, SampleError> {
        match self.kind {
            BackendKind::Mock => Ok(Box::new(mock_backend(seed))),
            BackendKind::Http => {
                let endpoint = self.endpoint.as_deref().ok_or(SampleError::InvalidRequest(
                    "http backend needs an endpoint",
                ))?;
                if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
                    return Err(SampleError::InvalidRequest("timeout must be positive"));
                }
                let backend = http_backend(
                    endpoint,
                    Duration::from_secs_f64(self.timeout_secs),
                    self.retries,
                )?;
                Ok(Box::new(backend))
            }
        }
    }
}

const MAX_RESPONSE_BYTES: u64 = 512 * 1024 * 1024;

#[derive(Debug)]
pub struct HttpBackend {
    url: String,
    retries: u32,
    agent: ureq::Agent,
    id: String,
}

pub fn http_backend(
    endpoint: &str,
    timeout: Duration,
    retries: u32,
) -> Result<HttpBackend, SampleError> {
    let endpoint = endpoint.trim_end_matches('/');
    let uri: ureq::http::Uri = endpoint
        .parse()
        .map_err(|_| SampleError::InvalidRequest("malformed endpoint URL"))?;
    if !matches!(uri.scheme_str(), Some("http" | "https")) || uri.authority().is_none() {
        return Err(SampleError::InvalidRequest(
            "endpoint must be an http(s) URL",
        ));
    }
    let agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .new_agent();
    Ok(HttpBackend {
        url: format!("{endpoint}{SAMPLE_PATH}"),
        retries: retries.max(1),
        agent,
        id: format!("http:{endpoint}"),
    })
}

enum Attempt {
    Done(Result<RgbImage, SampleError>),
    Timeout,
    Transient(String),
}

impl HttpBackend {
    pub fn attempts(&self) -> u32 {
        self.retries
    }

    fn attempt(&mut self, body: &str) -> Attempt {
        let mut resp = match self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body)
        {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Attempt::Timeout,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp
            .body_mut()
            .with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_to_string()
        {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Attempt::Timeout,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        match status {
            200 => Attempt::Done(self.decode(&text)),
            503 => Attempt::Transient("backend busy (503)".to_owned()),
            400 | 422 => {
                let message = serde_json::from_str::<WireError>(&text)
                    .map(|e| e.message)
                    .unwrap_or(text);
                Attempt::Done(Err(SampleError::BackendRejected(message)))
            }
            other => Attempt::Done(Err(SampleError::BackendUnavailable(format!(
                "unexpected HTTP status {other}"
            )))),
        }
    }

    fn decode(&mut self, text: &str) -> Result<RgbImage, SampleError> {
        let resp: WireResponse = serde_json::from_str(text)
            .map_err(|e| SampleError::ContractViolation(format!("response body: {e}")))?;
        let image = resp
            .decode_image()
            .map_err(|e| SampleError::ContractViolation(format!("response image: {e}")))?;
        self.id = resp.backend_id;
        Ok(image)
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn sample(&mut self, request: &SampleRequest) -> Result<RgbImage, SampleError> {
        let body = WireRequest::from_request(request)
            .and_then(|w| w.to_canonical_json())
            .map_err(|e| SampleError::BackendUnavailable(format!("encoding request: {e}")))?;
        let mut timeouts = 0;
        let mut last = String::new();
        for _ in 0..self.retries {
            match self.attempt(&body) {
                Attempt::Done(result) => return result,
                Attempt::Timeout => timeouts += 1,
                Attempt::Transient(msg) => last = msg,
            }
        }
        if timeouts == self.retries {
            Err(SampleError::Timeout { attempts: timeouts })
        } else {
            Err(SampleError::BackendUnavailable(last))
        }
    }
}
