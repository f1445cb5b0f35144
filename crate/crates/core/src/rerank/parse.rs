//! Lenient extraction of an index array from model output.

use serde_json::{Deserializer, Value};

/// The response cannot be used; callers must fall back to dense order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FallbackSignal {
    pub reason: String,
}

impl FallbackSignal {
    fn new(reason: impl Into<String>) -> Self {
        Self { reason: reason.into() }
    }
}

/// Finds the first JSON array of integers anywhere in `text` (prose and
/// code fences around it are ignored), keeps indices in `1..=n_candidates`
/// at their first occurrence, and returns them in order.
pub fn parse_response(text: &str, n_candidates: usize) -> Result<Vec<usize>, FallbackSignal> {
    let Some(values) = first_integer_array(text) else {
        return Err(FallbackSignal::new("no JSON integer array in response"));
    };
    let mut seen = vec![false; n_candidates + 1];
    let mut order = Vec::new();
    for v in values {
        let Ok(i) = usize::try_from(v) else { continue };
        if (1..=n_candidates).contains(&i) && !seen[i] {
            seen[i] = true;
            order.push(i);
        }
    }
    if order.is_empty() {
        return Err(FallbackSignal::new("no in-range indices in response"));
    }
    Ok(order)
}

fn first_integer_array(text: &str) -> Option<Vec<i128>> {
    for (pos, _) in text.match_indices('[') {
        let mut stream = Deserializer::from_str(&text[pos..]).into_iter::<Value>();
        let Some(Ok(Value::Array(items))) = stream.next() else { continue };
        let ints: Option<Vec<i128>> = items
            .iter()
            .map(|v| match v {
                Value::Number(n) => n.as_i64().map(i128::from).or_else(|| n.as_u64().map(i128::from)),
                _ => None,
            })
            .collect();
        if let Some(ints) = ints {
            return Some(ints);
        }
    }
    None
}
