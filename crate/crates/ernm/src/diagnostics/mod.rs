//! Convergence diagnostics, posterior-predictive goodness of fit, relative
//! rank comparison of posterior samples, and the exact-enumeration oracle.

pub mod exact;
pub mod gelman;
pub mod gof;
pub mod relrank;
pub mod stats;

pub use exact::{
    enumerate_exact, exact_grid_posterior, ExactModel, GridAxis, GridPosterior, MAX_EXACT_NODES,
};
pub use gelman::{gelman_rubin, gelman_rubin_series, gelman_rubin_window, geometric_windows};
pub use gof::{posterior_predictive_gof, Band, GofReport, GroupSpec};
pub use relrank::{relative_rank_kl, relative_rank_kl_with, relative_ranks, RankKdeConfig};

use crate::error::{ErnmError, Result};
use crate::exchange::Chain;

/// One row of a chain trace: iteration index, acceptance flag and the draw.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub accepted: bool,
    pub values: Vec<f64>,
}

/// The chain as a plottable table, one row per retained draw with columns in
/// term order.
pub fn trace_export(chain: &Chain) -> Result<Vec<TraceRow>> {
    if chain.draws.is_empty() {
        return Err(ErnmError::EmptyChain);
    }
    Ok(chain
        .draws
        .iter()
        .zip(&chain.accept_flags)
        .enumerate()
        .map(|(iteration, (draw, &accepted))| TraceRow {
            iteration,
            accepted,
            values: draw.as_slice().to_vec(),
        })
        .collect())
}
