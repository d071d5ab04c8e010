//! Sliding-window planning for contexts longer than one model call can hold.

use serde::{Deserialize, Serialize};

use super::RunnerError;

pub const DEFAULT_WINDOW_TOKENS: u64 = 200_000;
pub const DEFAULT_OVERLAP_TOKENS: u64 = 50_000;

/// Ordered token spans covering a long context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    /// Half-open `(start, end)` token spans in order.
    pub spans: Vec<(u64, u64)>,
    pub window: u64,
    pub overlap: u64,
}

impl WindowPlan {
    pub fn is_single(&self) -> bool {
        self.spans.len() == 1
    }
}

/// Plan overlapping windows over `total_tokens`.
///
/// Each span starts a stride (`window − overlap`) after the previous one and
/// runs for `window` tokens, clamped to the total; generation stops once a
/// span reaches the end. A context that fits in one window yields a single
/// span `[0, total)`.
pub fn plan_windows(total_tokens: u64, window: u64, overlap: u64) -> Result<WindowPlan, RunnerError> {
    if overlap >= window {
        return Err(RunnerError::InvalidOverlap { window, overlap });
    }
    if total_tokens <= window {
        return Ok(WindowPlan {
            spans: vec![(0, total_tokens)],
            window,
            overlap,
        });
    }
    let stride = window - overlap;
    let mut spans = Vec::new();
    let mut start = 0u64;
    loop {
        let end = (start + window).min(total_tokens);
        spans.push((start, end));
        if end >= total_tokens {
            break;
        }
        start += stride;
    }
    Ok(WindowPlan {
        spans,
        window,
        overlap,
    })
}
