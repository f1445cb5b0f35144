use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{endpoint_url, HttpFailure, JsonClient};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("LLM request timed out")]
    Timeout,
    #[error("LLM transport error: {0}")]
    Transport(String),
    #[error("LLM returned a malformed response: {0}")]
    BadResponse(String),
}

/// A text-completion backend. Implementations must be callable from any
/// thread; one call is made per query.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str, max_tokens: u32) -> Result<String, LlmError>;
}

#[derive(Serialize)]
struct CompleteRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct CompleteResponse {
    text: String,
}

/// Client for `POST /complete` with `{"prompt", "max_tokens"}` → `{"text"}`.
#[derive(Debug, Clone)]
pub struct HttpLlmClient {
    url: String,
    client: JsonClient,
}

impl HttpLlmClient {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        Self {
            url: endpoint_url(endpoint, "/complete"),
            client: JsonClient::new(timeout),
        }
    }
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, prompt: &str, max_tokens: u32) -> Result<String, LlmError> {
        let response: CompleteResponse = self
            .client
            .post(&self.url, &CompleteRequest { prompt, max_tokens })
            .map_err(|e| match e {
                HttpFailure::Timeout => LlmError::Timeout,
                HttpFailure::Transport(m) => LlmError::Transport(m),
                HttpFailure::Decode(m) => LlmError::BadResponse(m),
            })?;
        Ok(response.text)
    }
}
