//! Gelman-Rubin potential scale reduction: the ratio of pooled to
//! within-chain variance, reported over a growing window schedule so the
//! approach to 1 is visible.
//!
//! With m chains of length n, W the mean within-chain variance and B/n the
//! variance of the chain means, the ratio used here is
//!
//! ```text
//! R = sqrt((W + B/n) / W)
//! ```
//!
//! Identical chains give exactly 1; chains stuck at different levels give
//! values far above 1. The ratio is invariant under a common affine
//! transformation of all chains.

use crate::diagnostics::stats::{mean, sample_variance};
use crate::error::{ErnmError, Result};

/// Potential scale reduction over full chains (trimmed to the shortest).
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
    gelman_rubin_window(&refs, refs.iter().map(|c| c.len()).min().unwrap_or(0))
}

/// Potential scale reduction over the first `window` draws of each chain.
pub fn gelman_rubin_window(chains: &[&[f64]], window: usize) -> Result<f64> {
    if chains.len() < 2 {
        return Err(ErnmError::TooFewChains(chains.len()));
    }
    if window < 10 || chains.iter().any(|c| c.len() < window) {
        return Err(ErnmError::TooFewSamples {
            needed: 10,
            got: window.min(chains.iter().map(|c| c.len()).min().unwrap_or(0)),
        });
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..window])).collect();
    let within = mean(
        &chains
            .iter()
            .map(|c| sample_variance(&c[..window]))
            .collect::<Vec<f64>>(),
    );
    let between_over_n = sample_variance(&means);
    if between_over_n == 0.0 {
        // Identical chains (possibly constant): converged by construction.
        return Ok(1.0);
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(((within + between_over_n) / within).sqrt())
}

/// Cumulative window schedule: geometric growth from `start` to `len`,
/// always ending exactly at `len`.
pub fn geometric_windows(len: usize, start: usize, factor: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut w = start.max(10) as f64;
    while (w as usize) < len {
        out.push(w as usize);
        w *= factor.max(1.01);
    }
    if out.last() != Some(&len) && len >= 10 {
        out.push(len);
    }
    out
}

/// Ratio series over a window schedule, one series entry per window.
pub fn gelman_rubin_series(
    chains: &[Vec<f64>],
    windows: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
    windows
        .iter()
        .map(|&w| gelman_rubin_window(&refs, w).map(|r| (w, r)))
        .collect()
}
