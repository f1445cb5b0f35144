//! Deterministic LLM stand-ins for tests and offline benchmarks.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{prompt_candidates, prompt_query, LlmClient, LlmError};
use crate::ata::AtaId;

#[derive(Debug, Clone)]
pub enum Reply {
    Text(String),
    Fail(LlmError),
}

/// Scripted replies keyed by the query found in the prompt.
#[derive(Debug, Clone)]
pub struct ScriptedLlm {
    replies: HashMap<String, Reply>,
    default: Reply,
}

impl ScriptedLlm {
    pub fn new(default: Reply) -> Self {
        Self { replies: HashMap::new(), default }
    }

    pub fn always(text: &str) -> Self {
        Self::new(Reply::Text(text.into()))
    }

    pub fn with(mut self, query: &str, reply: Reply) -> Self {
        self.replies.insert(query.into(), reply);
        self
    }
}

impl LlmClient for ScriptedLlm {
    fn complete(&self, prompt: &str, _max_tokens: u32) -> Result<String, LlmError> {
        let reply = prompt_query(prompt)
            .and_then(|q| self.replies.get(&q))
            .unwrap_or(&self.default);
        match reply {
            Reply::Text(t) => Ok(t.clone()),
            Reply::Fail(e) => Err(e.clone()),
        }
    }
}

/// Puts the known ground truth first whenever it is among the candidates,
/// otherwise returns the candidates in their given order.
#[derive(Debug, Clone, Default)]
pub struct OracleLlm {
    truths: HashMap<String, AtaId>,
}

impl OracleLlm {
    pub fn new(truths: impl IntoIterator<Item = (String, AtaId)>) -> Self {
        Self { truths: truths.into_iter().collect() }
    }
}

impl LlmClient for OracleLlm {
    fn complete(&self, prompt: &str, _max_tokens: u32) -> Result<String, LlmError> {
        let candidates = prompt_candidates(prompt);
        let truth = prompt_query(prompt).and_then(|q| self.truths.get(&q).copied());
        let hit = candidates.iter().find(|(_, id)| Some(*id) == truth).map(|(i, _)| *i);
        let order: Vec<usize> = match hit {
            Some(i) => vec![i],
            None => candidates.iter().map(|(i, _)| *i).collect(),
        };
        Ok(serde_json::to_string(&order).expect("integers serialize"))
    }
}

/// Seeded adversarial output: shuffled, partial, duplicated, out-of-range,
/// prose-wrapped, fenced, malformed and failing responses.
#[derive(Debug)]
pub struct FuzzLlm {
    rng: Mutex<ChaCha8Rng>,
}

impl FuzzLlm {
    pub fn new(seed: u64) -> Self {
        Self { rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)) }
    }
}

impl LlmClient for FuzzLlm {
    fn complete(&self, prompt: &str, _max_tokens: u32) -> Result<String, LlmError> {
        let n = prompt_candidates(prompt).len() as i64;
        let mut rng = self.rng.lock().expect("fuzz rng poisoned");
        let mut indices: Vec<i64> = (1..=n).collect();
        indices.shuffle(&mut *rng);
        let keep = rng.random_range(0..=indices.len());
        indices.truncate(keep);
        for _ in 0..rng.random_range(0..5) {
            let noise = match rng.random_range(0..4) {
                0 => rng.random_range(-5..=0),
                1 => n + rng.random_range(1..100),
                _ => rng.random_range(1..=n.max(1)),
            };
            let at = rng.random_range(0..=indices.len());
            indices.insert(at, noise);
        }
        let array = format!("[{}]", indices.iter().map(i64::to_string).collect::<Vec<_>>().join(", "));
        Ok(match rng.random_range(0..10) {
            0 => array,
            1 => format!("Here is the ranking: {array}. Hope that helps."),
            2 => format!("```json\n{array}\n```"),
            3 => format!("[\"{}\"] {array}", rng.random_range(0..9)),
            4 => array[..array.len() / 2].to_string(),
            5 => String::new(),
            6 => "I cannot rank these.".into(),
            7 => format!("[{array}, {array}]"),
            8 => return Err(if rng.random_bool(0.5) { LlmError::Timeout } else { LlmError::Transport("reset".into()) }),
            _ => format!("{{\"ranking\": {array}}}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureMode {
    Garbage,
    Empty,
    Timeout,
    Transport,
    /// Sleeps before answering, to exercise the caller's deadline.
    Hang(Duration),
}

const GARBAGE: &[&str] = &[
    "I cannot rank these.",
    "Ranking: three, one, two",
    "{\"order\": \"unknown\"}",
    "[\"first\", \"second\"]",
    "[0, -1, 1000]",
    "[1.5, 2.5]",
    "[3, 1",
    "```\n```",
];

#[derive(Debug)]
pub struct FailingLlm {
    mode: FailureMode,
    calls: AtomicUsize,
}

impl FailingLlm {
    pub fn new(mode: FailureMode) -> Self {
        Self { mode, calls: AtomicUsize::new(0) }
    }
}

impl LlmClient for FailingLlm {
    fn complete(&self, _prompt: &str, _max_tokens: u32) -> Result<String, LlmError> {
        let call = self.calls.fetch_add(1, Ordering::Relaxed);
        match self.mode {
            FailureMode::Garbage => Ok(GARBAGE[call % GARBAGE.len()].to_string()),
            FailureMode::Empty => Ok(String::new()),
            FailureMode::Timeout => Err(LlmError::Timeout),
            FailureMode::Transport => Err(LlmError::Transport("connection refused".into())),
            FailureMode::Hang(d) => {
                std::thread::sleep(d);
                Ok("[1]".into())
            }
        }
    }
}
