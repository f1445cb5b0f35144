//! Blocking JSON-over-HTTP helper shared by the remote embedder and LLM client.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug)]
pub(crate) enum HttpFailure {
    Timeout,
    Transport(String),
    Decode(String),
}

#[derive(Debug, Clone)]
pub(crate) struct JsonClient {
    agent: ureq::Agent,
}

impl JsonClient {
    pub(crate) fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }

    pub(crate) fn post<B: Serialize, T: DeserializeOwned>(&self, url: &str, body: &B) -> Result<T, HttpFailure> {
        let mut response = self.agent.post(url).send_json(body).map_err(classify)?;
        response
            .body_mut()
            .read_json::<T>()
            .map_err(|e| match classify(e) {
                HttpFailure::Transport(msg) => HttpFailure::Decode(msg),
                other => other,
            })
    }
}

fn classify(err: ureq::Error) -> HttpFailure {
    match err {
        ureq::Error::Timeout(_) => HttpFailure::Timeout,
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => HttpFailure::Timeout,
        other => HttpFailure::Transport(other.to_string()),
    }
}

/// Appends `path` to a base endpoint unless it already ends with it.
pub(crate) fn endpoint_url(base: &str, path: &str) -> String {
    let trimmed = base.trim_end_matches('/');
    if trimmed.ends_with(path) {
        trimmed.to_string()
    } else {
        format!("{trimmed}{path}")
    }
}
