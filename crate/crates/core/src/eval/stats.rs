use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;
use crate::ata::AtaId;
use crate::index::CandidateList;

/// Two-sided 95% normal quantile, fixed so published intervals reproduce.
pub const Z_95: f64 = 1.959964;

pub fn hit_at_k(candidates: &CandidateList, truth: &AtaId, k: usize) -> bool {
    candidates.rank_of(truth).is_some_and(|r| r <= k)
}

/// Wilson score interval for `successes` out of `n`, as fractions.
pub fn wilson_ci(successes: u64, n: u64, confidence: f64) -> Result<(f64, f64), EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroSample);
    }
    if successes > n {
        return Err(EvalError::InvalidInput(format!("{successes} successes out of {n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EvalError::InvalidInput(format!("confidence {confidence} outside (0, 1)")));
    }
    let z = if confidence == 0.95 {
        Z_95
    } else {
        Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
    };
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    Ok((lo, hi))
}
