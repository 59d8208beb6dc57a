//! Joint exponential-family models for networks with random edges and random
//! binary nodal outcomes, with the machinery to use them for causal
//! inference: single-toggle Metropolis samplers and a temporal simulator,
//! exchange-algorithm posterior sampling with Fisher-scaled proposals,
//! posterior imputation of equilibrium potential outcomes (main and k-peer
//! effects), posterior-predictive goodness of fit, convergence diagnostics,
//! and an exact-enumeration oracle for toy networks.

pub mod error;
pub mod exchange;
pub mod net;
pub mod sampler;
pub mod terms;
pub mod vector;

pub use error::{ErnmError, Result};
pub use net::{Histogram, Network, NetworkSchema};
pub use terms::{ModelClass, ModelSpec, TermSide, TermSpec};
pub use vector::{ParamVector, StatVector};
