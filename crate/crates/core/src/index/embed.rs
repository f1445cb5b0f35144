//! Text embedders: a deterministic local trigram hasher and an HTTP client.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{endpoint_url, HttpFailure, JsonClient};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(String),
    #[error("embedder returned a malformed response: {0}")]
    BadResponse(String),
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("vector has zero norm")]
    ZeroNorm,
}

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f32>);

impl Vector {
    /// L2-normalizes `values`. The norm is accumulated in f64.
    pub fn normalized(values: Vec<f32>) -> Result<Self, EmbedError> {
        let norm = values.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbedError::ZeroNorm);
        }
        Ok(Self(values.into_iter().map(|v| (v as f64 / norm) as f32).collect()))
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt()
    }

    /// Cosine similarity of two unit vectors, accumulated in f64.
    pub fn dot(&self, other: &[f32]) -> f64 {
        dot(&self.0, other)
    }
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += *x as f64 * *y as f64;
    }
    acc
}

pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vector>, EmbedError>;

    fn embed_one(&self, text: &str) -> Result<Vector, EmbedError> {
        self.embed(&[text])?
            .pop()
            .ok_or_else(|| EmbedError::BadResponse("no vector returned".into()))
    }
}

pub const LOCAL_DIMS: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Hashed character-trigram counts, 256 buckets, L2-normalized.
///
/// The text is lowercased and padded with one space at each end; each
/// trigram of chars is hashed as UTF-8 with 64-bit FNV-1a and counted in
/// bucket `hash % 256`. Deterministic across runs and platforms.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalHashEmbedder;

impl LocalHashEmbedder {
    pub fn raw_counts(text: &str) -> Vec<f32> {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(text.to_lowercase().chars())
            .chain(std::iter::once(' '))
            .collect();
        let mut counts = vec![0f32; LOCAL_DIMS];
        let mut buf = [0u8; 12];
        for w in padded.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            counts[(fnv1a64(&buf[..len]) % LOCAL_DIMS as u64) as usize] += 1.0;
        }
        counts
    }
}

impl Embedder for LocalHashEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vector>, EmbedError> {
        texts
            .iter()
            .map(|t| {
                if t.trim().is_empty() {
                    return Err(EmbedError::EmptyText);
                }
                Vector::normalized(Self::raw_counts(t))
            })
            .collect()
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

/// Client for `POST /embed` with `{"texts": [...]}` → `{"vectors": [[...]...]}`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    url: String,
    client: JsonClient,
    batch_size: usize,
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        Self {
            url: endpoint_url(endpoint, "/embed"),
            client: JsonClient::new(timeout),
            batch_size: 64,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vector>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        let mut dims: Option<usize> = None;
        for batch in texts.chunks(self.batch_size) {
            let response: EmbedResponse = self
                .client
                .post(&self.url, &EmbedRequest { texts: batch })
                .map_err(|e| match e {
                    HttpFailure::Timeout => EmbedError::EmbedderUnavailable("request timed out".into()),
                    HttpFailure::Transport(m) => EmbedError::EmbedderUnavailable(m),
                    HttpFailure::Decode(m) => EmbedError::BadResponse(m),
                })?;
            if response.vectors.len() != batch.len() {
                return Err(EmbedError::BadResponse(format!(
                    "{} vectors for {} texts",
                    response.vectors.len(),
                    batch.len()
                )));
            }
            for v in response.vectors {
                match dims {
                    None => dims = Some(v.len()),
                    Some(d) if d != v.len() => {
                        return Err(EmbedError::BadResponse(format!("mixed dimensions {d} and {}", v.len())))
                    }
                    Some(_) => {}
                }
                out.push(Vector::normalized(v)?);
            }
        }
        Ok(out)
    }
}
