//! Posterior sampling for doubly-intractable network likelihoods via the
//! exchange algorithm, with Gaussian proposals scaled by an inverse Fisher
//! information estimate; tractable model classes (logistic outcome models)
//! fall back to direct Metropolis-Hastings.
//!
//! At each outer step a parameter eta' is drawn from N(eta, Sigma) with
//! Sigma = alpha * I(eta)^{-1}, an auxiliary network y' is simulated from the
//! model at eta', and eta' is accepted with probability
//!
//! ```text
//! min(1, exp((eta' - eta) . (g_obs - g(y'))) * prior(eta') / prior(eta))
//! ```
//!
//! in which both intractable normalizers have cancelled; nothing on this
//! path ever evaluates a normalizing constant. The Fisher information is the
//! covariance of g(y), estimated from the inner-simulation samples that the
//! exchange update already produces. Sigma adapts from those samples for
//! `adapt_iters` iterations and is then frozen; only fixed-proposal draws
//! are retained, so the kept sample targets the exact posterior.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ErnmError, Result};
use crate::net::Network;
use crate::sampler::{mcmc_run, SamplerConfig};
use crate::terms::{ModelClass, ModelSpec, TermSide};
use crate::vector::{ParamVector, StatVector};

/// Prior over the natural parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Flat, optionally boxed per coordinate.
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Vec<(f64, f64)>>,
    },
    /// Independent Gaussians per coordinate.
    Gaussian { mean: Vec<f64>, sd: Vec<f64> },
}

impl PriorSpec {
    pub fn flat() -> Self {
        PriorSpec::Uniform { bounds: None }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            PriorSpec::Uniform { bounds: None } => Ok(()),
            PriorSpec::Uniform { bounds: Some(b) } => {
                if b.len() != p {
                    return Err(ErnmError::LengthMismatch {
                        expected: p,
                        got: b.len(),
                    });
                }
                for &(lo, hi) in b {
                    if !(lo < hi) {
                        return Err(ErnmError::InvalidConfig(format!(
                            "prior bounds [{lo}, {hi}] are not ordered"
                        )));
                    }
                }
                Ok(())
            }
            PriorSpec::Gaussian { mean, sd } => {
                if mean.len() != p || sd.len() != p {
                    return Err(ErnmError::LengthMismatch {
                        expected: p,
                        got: mean.len().min(sd.len()),
                    });
                }
                if sd.iter().any(|&s| !(s > 0.0)) {
                    return Err(ErnmError::InvalidConfig(
                        "Gaussian prior sd must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Log prior density, -inf outside the support. The unbounded uniform
    /// returns 0 everywhere (improper, used only in ratios).
    pub fn log_density(&self, eta: &ParamVector) -> f64 {
        match self {
            PriorSpec::Uniform { bounds: None } => 0.0,
            PriorSpec::Uniform { bounds: Some(b) } => {
                for (value, &(lo, hi)) in eta.iter().zip(b) {
                    if *value < lo || *value > hi {
                        return f64::NEG_INFINITY;
                    }
                }
                0.0
            }
            PriorSpec::Gaussian { mean, sd } => {
                let mut total = 0.0;
                for ((value, m), s) in eta.iter().zip(mean).zip(sd) {
                    let z = (value - m) / s;
                    total += -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
                }
                total
            }
        }
    }

    /// Restrict the prior to a coordinate subset (separable fits).
    pub fn subset(&self, indices: &[usize]) -> PriorSpec {
        match self {
            PriorSpec::Uniform { bounds: None } => PriorSpec::flat(),
            PriorSpec::Uniform { bounds: Some(b) } => PriorSpec::Uniform {
                bounds: Some(indices.iter().map(|&i| b[i]).collect()),
            },
            PriorSpec::Gaussian { mean, sd } => PriorSpec::Gaussian {
                mean: indices.iter().map(|&i| mean[i]).collect(),
                sd: indices.iter().map(|&i| sd[i]).collect(),
            },
        }
    }
}

/// Log prior density (-inf outside support).
pub fn log_prior(prior: &PriorSpec, eta: &ParamVector) -> f64 {
    prior.log_density(eta)
}

/// Outer-sampler tuning.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExchangeConfig {
    /// Proposal scale on the inverse Fisher information, in (0, 1].
    pub alpha: f64,
    /// Outer iterations, adaptation included.
    pub n_outer: usize,
    /// Iterations of covariance adaptation before the proposal is frozen;
    /// adaptation draws are discarded.
    pub adapt_iters: usize,
    /// Inner sampler used to simulate the auxiliary network each step.
    pub inner: SamplerConfig,
    /// Starting point; default is zero except an `edges` term, which starts
    /// at the logit of the observed density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_eta: Option<Vec<f64>>,
    pub n_chains: usize,
    pub seed: u64,
}

impl ExchangeConfig {
    /// Defaults: alpha 0.25, 8 chains, 10^4-toggle inner burn-in, and enough
    /// inner samples to keep the p x p covariance estimate well conditioned.
    pub fn with_defaults(p: usize, seed: u64) -> Self {
        ExchangeConfig {
            alpha: 0.25,
            n_outer: 2_000,
            adapt_iters: 250,
            inner: SamplerConfig::new(10_000, 10, (4 * (p + 1)).max(64) as u64, seed),
            init_eta: None,
            n_chains: 8,
            seed,
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(ErnmError::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.alpha > 1.0 {
            log::warn!("alpha {} is above the (0, 1] tuning range", self.alpha);
        }
        if self.adapt_iters >= self.n_outer {
            return Err(ErnmError::InvalidConfig(format!(
                "adapt_iters ({}) must be below n_outer ({})",
                self.adapt_iters, self.n_outer
            )));
        }
        if (self.inner.n_samples as usize) < p + 1 {
            return Err(ErnmError::InvalidConfig(format!(
                "inner n_samples ({}) must be at least p + 1 = {}",
                self.inner.n_samples,
                p + 1
            )));
        }
        if self.n_chains < 1 {
            return Err(ErnmError::InvalidConfig("n_chains must be >= 1".into()));
        }
        Ok(())
    }
}

/// One posterior chain: frozen-phase draws plus the bookkeeping needed to
/// report and reuse the fit.
#[derive(Clone, Debug)]
pub struct Chain {
    pub term_names: Vec<String>,
    pub draws: Vec<ParamVector>,
    pub accept_flags: Vec<bool>,
    /// Proposal covariance at freeze.
    pub proposal_cov: DMatrix<f64>,
    /// Statistic samples from the last inner simulation (Fisher reuse).
    pub inner_stat_samples: Vec<StatVector>,
    /// Proposals rejected because they fell outside the prior support.
    pub auto_rejects: u64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl Chain {
    pub fn accept_rate(&self) -> f64 {
        if self.accept_flags.is_empty() {
            0.0
        } else {
            self.accept_flags.iter().filter(|&&a| a).count() as f64
                / self.accept_flags.len() as f64
        }
    }

    /// Values of one coordinate along the chain.
    pub fn column(&self, term: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[term]).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Sample covariance of the statistic samples, ridge-jittered to keep it
/// invertible. The jitter is 1e-8 * trace(C)/p, floored at 1e-8 so that
/// all-constant samples still yield a (diagonal) usable matrix.
pub fn estimate_fisher_cov(samples: &[StatVector]) -> Result<DMatrix<f64>> {
    let m = samples.len();
    let p = samples.first().map(|s| s.len()).unwrap_or(0);
    if m < p + 1 {
        return Err(ErnmError::TooFewSamples { needed: p + 1, got: m });
    }
    let mut mean = vec![0.0; p];
    for s in samples {
        for (acc, v) in mean.iter_mut().zip(s.iter()) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);

    let mut cov = DMatrix::<f64>::zeros(p, p);
    for s in samples {
        for a in 0..p {
            let da = s[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += da * (s[b] - mean[b]);
            }
        }
    }
    let denom = (m - 1) as f64;
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let trace: f64 = (0..p).map(|a| cov[(a, a)]).sum();
    if !trace.is_finite() {
        return Err(ErnmError::NonFiniteStatistic {
            term: "statistic covariance".into(),
        });
    }
    let degenerate: Vec<usize> = (0..p).filter(|&a| cov[(a, a)] <= 1e-12).collect();
    if !degenerate.is_empty() {
        log::warn!(
            "statistic covariance has zero-variance coordinates {degenerate:?}; ridge jitter applied"
        );
    }
    let ridge = (1e-8 * trace / p as f64).max(1e-8);
    for a in 0..p {
        cov[(a, a)] += ridge;
    }
    Ok(cov)
}

/// Indices whose sample variance is effectively zero (reported by term name
/// at the fit level).
pub fn zero_variance_coords(fisher: &DMatrix<f64>) -> Vec<usize> {
    (0..fisher.nrows())
        .filter(|&a| fisher[(a, a)] <= 2e-8)
        .collect()
}

/// Proposal covariance Sigma = alpha * fisher^{-1}.
pub fn proposal_cov(fisher: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha > 0.0) {
        return Err(ErnmError::InvalidConfig(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let chol = Cholesky::new(fisher.clone())
        .ok_or_else(|| ErnmError::SingularMatrix("fisher information".into()))?;
    let mut inv = chol.inverse();
    inv *= alpha;
    // Symmetrize away round-off.
    let inv_t = inv.transpose();
    Ok((inv + inv_t) * 0.5)
}

/// The exchange acceptance logit with a symmetric proposal and the
/// normalizing constants cancelled: (eta' - eta) . (g_obs - g(y')).
/// Swapping eta and eta' negates it exactly (detailed balance of the frozen
/// phase under a flat prior).
pub fn exchange_accept_logit(
    eta: &ParamVector,
    eta_prime: &ParamVector,
    g_obs: &StatVector,
    g_sim: &StatVector,
) -> f64 {
    eta_prime.sub(eta).dot(g_obs.sub(g_sim).as_slice())
}

/// Zero start, except an `edges` term which starts at the logit of the
/// observed density (the high-probability ridge runs through it).
pub fn initial_eta(model: &ModelSpec, net_obs: &Network) -> ParamVector {
    let mut eta = ParamVector::zeros(model.term_count());
    for (i, term) in model.terms.iter().enumerate() {
        if matches!(term, crate::terms::TermSpec::Edges) {
            let dyads = net_obs.dyad_count() as f64;
            let density =
                (net_obs.edge_count() as f64 / dyads).clamp(0.5 / dyads, 1.0 - 0.5 / dyads);
            eta[i] = (density / (1.0 - density)).ln();
        }
    }
    eta
}

fn clamp_into_support(eta: &mut ParamVector, prior: &PriorSpec) {
    if let PriorSpec::Uniform { bounds: Some(b) } = prior {
        for (value, &(lo, hi)) in eta.0.iter_mut().zip(b) {
            let pad = 1e-6 * (hi - lo);
            *value = value.clamp(lo + pad, hi - pad);
        }
    }
}

/// Mutable outer-sampler state: current parameter and the Cholesky factor of
/// the proposal covariance.
pub struct ExchangeState {
    pub eta: ParamVector,
    pub log_prior: f64,
    chol: DMatrix<f64>,
}

impl ExchangeState {
    pub fn new(eta: ParamVector, sigma: &DMatrix<f64>, prior: &PriorSpec) -> Result<Self> {
        let chol = Cholesky::new(sigma.clone())
            .ok_or_else(|| ErnmError::SingularMatrix("proposal covariance".into()))?;
        let log_prior = prior.log_density(&eta);
        Ok(ExchangeState {
            eta,
            log_prior,
            chol: chol.l(),
        })
    }

    pub fn set_proposal(&mut self, sigma: &DMatrix<f64>) -> Result<()> {
        let chol = Cholesky::new(sigma.clone())
            .ok_or_else(|| ErnmError::SingularMatrix("proposal covariance".into()))?;
        self.chol = chol.l();
        Ok(())
    }

    fn draw_proposal<R: Rng>(&self, rng: &mut R) -> ParamVector {
        let p = self.eta.len();
        let z = DVector::<f64>::from_fn(p, |_, _| rng.sample(StandardNormal));
        let shift = &self.chol * z;
        let mut eta = self.eta.clone();
        for i in 0..p {
            eta[i] += shift[i];
        }
        eta
    }
}

/// Result of one exchange step.
pub struct StepOutcome {
    pub accepted: bool,
    /// Proposal fell outside the prior support; no inner run happened.
    pub auto_rejected: bool,
    /// Inner statistic samples (empty on auto-reject).
    pub inner_stats: Vec<StatVector>,
    /// Statistics of the auxiliary draw y'.
    pub g_sim: Option<StatVector>,
}

/// One exchange update: propose eta' ~ N(eta, Sigma), simulate an auxiliary
/// network at eta' starting from `net_init`, and accept or keep eta.
pub fn exchange_step<R: Rng>(
    state: &mut ExchangeState,
    g_obs: &StatVector,
    model: &ModelSpec,
    prior: &PriorSpec,
    inner_cfg: &SamplerConfig,
    net_init: &Network,
    rng: &mut R,
) -> Result<StepOutcome> {
    let eta_prime = state.draw_proposal(rng);
    let lp_prime = prior.log_density(&eta_prime);
    if lp_prime == f64::NEG_INFINITY {
        return Ok(StepOutcome {
            accepted: false,
            auto_rejected: true,
            inner_stats: Vec::new(),
            g_sim: None,
        });
    }
    let mut cfg = inner_cfg.clone();
    cfg.seed = rng.random();
    let inner = mcmc_run(model, &eta_prime, net_init, &cfg, false)?;
    let logit = exchange_accept_logit(&state.eta, &eta_prime, g_obs, &inner.final_stats)
        + lp_prime
        - state.log_prior;
    let accepted = logit >= 0.0 || rng.random::<f64>() < logit.exp();
    if accepted {
        state.eta = eta_prime;
        state.log_prior = lp_prime;
    }
    Ok(StepOutcome {
        accepted,
        auto_rejected: false,
        inner_stats: inner.stats,
        g_sim: Some(inner.final_stats),
    })
}

/// Relative Frobenius distance between successive proposal covariances, used
/// to flag adaptation that has not settled by freeze time.
fn relative_change(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm().max(1e-300);
    diff / scale
}

fn exchange_fit_chain(
    model: &ModelSpec,
    net_obs: &Network,
    g_obs: &StatVector,
    prior: &PriorSpec,
    cfg: &ExchangeConfig,
    stream: u64,
) -> Result<Chain> {
    let p = model.term_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut warnings = Vec::new();

    let mut eta = match &cfg.init_eta {
        Some(values) => {
            let eta = ParamVector(values.clone());
            eta.check_len(p)?;
            eta
        }
        None => initial_eta(model, net_obs),
    };
    clamp_into_support(&mut eta, prior);

    // Seed the proposal covariance from a pilot simulation at the start point.
    let mut inner_cfg = cfg.inner.clone();
    inner_cfg.seed = rng.random();
    let pilot = mcmc_run(model, &eta, net_obs, &inner_cfg, false)?;
    let name_coords = |coords: &[usize]| -> String {
        coords
            .iter()
            .map(|&c| model.terms[c].name())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let fisher = estimate_fisher_cov(&pilot.stats)?;
    let flat = zero_variance_coords(&fisher);
    if !flat.is_empty() {
        warnings.push(format!(
            "zero-variance statistic directions at initialization: {}",
            name_coords(&flat)
        ));
    }
    let mut sigma = proposal_cov(&fisher, cfg.alpha)
        .map_err(|_| ErnmError::SingularMatrix(name_coords(&flat)))?;
    let mut state = ExchangeState::new(eta, &sigma, prior)?;
    let mut last_inner = pilot.stats;

    let mut draws = Vec::with_capacity(cfg.n_outer - cfg.adapt_iters);
    let mut accept_flags = Vec::with_capacity(cfg.n_outer - cfg.adapt_iters);
    let mut auto_rejects = 0u64;
    let mut adapt_accepts = 0u64;
    let mut last_sigma_change = 0.0;

    for iter in 0..cfg.n_outer {
        let outcome = exchange_step(
            &mut state, g_obs, model, prior, &cfg.inner, net_obs, &mut rng,
        )?;
        if outcome.auto_rejected {
            auto_rejects += 1;
        } else {
            last_inner = outcome.inner_stats;
        }
        if iter < cfg.adapt_iters {
            if outcome.accepted {
                adapt_accepts += 1;
            }
            if !outcome.auto_rejected {
                match estimate_fisher_cov(&last_inner).and_then(|f| proposal_cov(&f, cfg.alpha)) {
                    Ok(next) => {
                        last_sigma_change = relative_change(&next, &sigma);
                        if state.set_proposal(&next).is_ok() {
                            sigma = next;
                        }
                    }
                    Err(err) => {
                        log::warn!("keeping previous proposal covariance: {err}");
                    }
                }
            }
            if iter + 1 == cfg.adapt_iters {
                if cfg.adapt_iters >= 20 && adapt_accepts == 0 {
                    return Err(ErnmError::AllRejected { alpha: cfg.alpha });
                }
                if last_sigma_change > 0.5 {
                    let msg = format!(
                        "proposal covariance still oscillating at freeze (relative change {last_sigma_change:.2}); frozen anyway"
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
        } else {
            draws.push(state.eta.clone());
            accept_flags.push(outcome.accepted);
        }
    }

    Ok(Chain {
        term_names: model.term_names(),
        draws,
        accept_flags,
        proposal_cov: sigma,
        inner_stat_samples: last_inner,
        auto_rejects,
        seed: cfg.seed ^ stream,
        warnings,
    })
}

/// Logistic log-likelihood with frozen covariates: sum_i y_i s_i - log(1 + e^{s_i}).
fn logistic_loglik(design: &[Vec<f64>], y: &[u8], beta: &ParamVector) -> f64 {
    let mut total = 0.0;
    for (x, &yi) in design.iter().zip(y) {
        let s = beta.dot(x);
        let log1pexp = if s > 0.0 {
            s + (-s).exp().ln_1p()
        } else {
            s.exp().ln_1p()
        };
        total += yi as f64 * s - log1pexp;
    }
    total
}

fn logistic_fisher(design: &[Vec<f64>], beta: &ParamVector) -> DMatrix<f64> {
    let p = beta.len();
    let mut fisher = DMatrix::<f64>::zeros(p, p);
    for x in design {
        let s = beta.dot(x);
        let prob = 1.0 / (1.0 + (-s).exp());
        let w = prob * (1.0 - prob);
        for a in 0..p {
            for b in a..p {
                fisher[(a, b)] += w * x[a] * x[b];
            }
        }
    }
    for a in 0..p {
        for b in (a + 1)..p {
            fisher[(b, a)] = fisher[(a, b)];
        }
        fisher[(a, a)] += 1e-8;
    }
    fisher
}

/// Design matrix of the node-side terms over the observed network: one row
/// per node with the frozen neighbour covariates.
pub fn node_design_matrix(model: &ModelSpec, net: &Network) -> Result<Vec<Vec<f64>>> {
    use crate::terms::{NeighborAttr, TermSpec};
    let n = net.node_count();
    let mut rows = vec![Vec::with_capacity(model.term_count()); n];
    for term in &model.terms {
        match term {
            TermSpec::Intercept => {
                for row in rows.iter_mut() {
                    row.push(1.0);
                }
            }
            TermSpec::MainCovariate { attr } => {
                let id = if attr == &model.outcome_attr {
                    return Err(ErnmError::InvalidModel(
                        "main covariate cannot be the outcome itself".into(),
                    ));
                } else if attr == "treatment" {
                    crate::net::AttrId::Treatment
                } else {
                    crate::net::AttrId::Covariate(net.resolve_covariate(attr)?)
                };
                for (i, row) in rows.iter_mut().enumerate() {
                    row.push(net.attr_value(id, i));
                }
            }
            TermSpec::NeighborCount { attr } => {
                let id = match attr {
                    NeighborAttr::Treatment => crate::net::AttrId::Treatment,
                    NeighborAttr::Outcome => crate::net::AttrId::Outcome,
                };
                for (i, row) in rows.iter_mut().enumerate() {
                    let count = net
                        .neighbors(i)
                        .iter()
                        .filter(|&&v| net.attr_is_one(id, v as usize))
                        .count();
                    row.push(count as f64);
                }
            }
            other => {
                return Err(ErnmError::InvalidModel(format!(
                    "term `{}` is not a node-side term",
                    other.name()
                )));
            }
        }
    }
    Ok(rows)
}

fn logistic_fit_chain(
    model: &ModelSpec,
    net_obs: &Network,
    prior: &PriorSpec,
    cfg: &ExchangeConfig,
    stream: u64,
) -> Result<Chain> {
    let p = model.term_count();
    let design = node_design_matrix(model, net_obs)?;
    let y = net_obs.outcomes().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);

    let mut beta = match &cfg.init_eta {
        Some(values) => {
            let b = ParamVector(values.clone());
            b.check_len(p)?;
            b
        }
        None => ParamVector::zeros(p),
    };
    clamp_into_support(&mut beta, prior);

    let mut sigma = proposal_cov(&logistic_fisher(&design, &beta), cfg.alpha)?;
    let mut state = ExchangeState::new(beta, &sigma, prior)?;
    let mut loglik = logistic_loglik(&design, &y, &state.eta);

    let mut draws = Vec::with_capacity(cfg.n_outer - cfg.adapt_iters);
    let mut accept_flags = Vec::with_capacity(cfg.n_outer - cfg.adapt_iters);
    let mut auto_rejects = 0u64;
    let mut adapt_accepts = 0u64;

    for iter in 0..cfg.n_outer {
        let proposal = state.draw_proposal(&mut rng);
        let lp_prime = prior.log_density(&proposal);
        let mut accepted = false;
        if lp_prime == f64::NEG_INFINITY {
            auto_rejects += 1;
        } else {
            let ll_prime = logistic_loglik(&design, &y, &proposal);
            let logit = ll_prime - loglik + lp_prime - state.log_prior;
            accepted = logit >= 0.0 || rng.random::<f64>() < logit.exp();
            if accepted {
                state.eta = proposal;
                state.log_prior = lp_prime;
                loglik = ll_prime;
            }
        }
        if iter < cfg.adapt_iters {
            if accepted {
                adapt_accepts += 1;
            }
            if let Ok(next) = proposal_cov(&logistic_fisher(&design, &state.eta), cfg.alpha) {
                if state.set_proposal(&next).is_ok() {
                    sigma = next;
                }
            }
            if iter + 1 == cfg.adapt_iters && cfg.adapt_iters >= 20 && adapt_accepts == 0 {
                return Err(ErnmError::AllRejected { alpha: cfg.alpha });
            }
        } else {
            draws.push(state.eta.clone());
            accept_flags.push(accepted);
        }
    }

    Ok(Chain {
        term_names: model.term_names(),
        draws,
        accept_flags,
        proposal_cov: sigma,
        inner_stat_samples: Vec::new(),
        auto_rejects,
        seed: cfg.seed ^ stream,
        warnings: Vec::new(),
    })
}

fn merge_separable_chains(
    model: &ModelSpec,
    edge: Chain,
    node: Chain,
) -> Chain {
    let edge_idx = model.side_indices(TermSide::Edge);
    let node_idx = model.side_indices(TermSide::Node);
    let p = model.term_count();
    let len = edge.draws.len().min(node.draws.len());
    let mut draws = Vec::with_capacity(len);
    let mut accept_flags = Vec::with_capacity(len);
    for k in 0..len {
        let mut full = ParamVector::zeros(p);
        for (sub, &orig) in edge_idx.iter().enumerate() {
            full[orig] = edge.draws[k][sub];
        }
        for (sub, &orig) in node_idx.iter().enumerate() {
            full[orig] = node.draws[k][sub];
        }
        draws.push(full);
        accept_flags.push(edge.accept_flags[k] || node.accept_flags[k]);
    }
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for (sa, &oa) in edge_idx.iter().enumerate() {
        for (sb, &ob) in edge_idx.iter().enumerate() {
            cov[(oa, ob)] = edge.proposal_cov[(sa, sb)];
        }
    }
    for (sa, &oa) in node_idx.iter().enumerate() {
        for (sb, &ob) in node_idx.iter().enumerate() {
            cov[(oa, ob)] = node.proposal_cov[(sa, sb)];
        }
    }
    let mut warnings = edge.warnings;
    warnings.extend(node.warnings);
    Chain {
        term_names: model.term_names(),
        draws,
        accept_flags,
        proposal_cov: cov,
        inner_stat_samples: edge.inner_stat_samples,
        auto_rejects: edge.auto_rejects + node.auto_rejects,
        seed: edge.seed,
        warnings,
    }
}

/// Fit the posterior for the model's class: exchange sampling for the
/// doubly-intractable classes (joint, network-only and outcome-field
/// likelihoods), direct Metropolis for the tractable logistic outcome
/// block. Separable classes fit their two blocks independently and
/// concatenate the draws. Returns `n_chains` independent chains.
pub fn fit_posterior(
    net_obs: &Network,
    model: &ModelSpec,
    prior: &PriorSpec,
    cfg: &ExchangeConfig,
) -> Result<Vec<Chain>> {
    prior.validate(model.term_count())?;
    cfg.validate(model.term_count())?;
    model.bind(net_obs)?;

    match model.class {
        ModelClass::Ernm | ModelClass::Mrf => {
            let g_obs = model.bind(net_obs)?.eval(net_obs)?;
            (0..cfg.n_chains)
                .into_par_iter()
                .map(|c| {
                    exchange_fit_chain(model, net_obs, &g_obs, prior, cfg, c as u64 + 1)
                })
                .collect()
        }
        ModelClass::ErgmLogistic => {
            let edge_model = model.edge_block()?;
            let node_model = model.node_block()?;
            let edge_prior = prior.subset(&model.side_indices(TermSide::Edge));
            let node_prior = prior.subset(&model.side_indices(TermSide::Node));
            let g_obs_edge = edge_model.bind(net_obs)?.eval(net_obs)?;
            let mut edge_cfg = cfg.clone();
            edge_cfg.init_eta = cfg.init_eta.as_ref().map(|full| {
                model
                    .side_indices(TermSide::Edge)
                    .iter()
                    .map(|&i| full[i])
                    .collect()
            });
            let mut node_cfg = cfg.clone();
            node_cfg.init_eta = cfg.init_eta.as_ref().map(|full| {
                model
                    .side_indices(TermSide::Node)
                    .iter()
                    .map(|&i| full[i])
                    .collect()
            });
            (0..cfg.n_chains)
                .into_par_iter()
                .map(|c| {
                    let edge = exchange_fit_chain(
                        &edge_model,
                        net_obs,
                        &g_obs_edge,
                        &edge_prior,
                        &edge_cfg,
                        2 * c as u64 + 1,
                    )?;
                    let node = logistic_fit_chain(
                        &node_model,
                        net_obs,
                        &node_prior,
                        &node_cfg,
                        2 * c as u64 + 2,
                    )?;
                    Ok(merge_separable_chains(model, edge, node))
                })
                .collect()
        }
        ModelClass::Logistic => {
            let node_model = model.node_block()?;
            if node_model.term_count() != model.term_count() {
                log::warn!(
                    "logistic class ignores the {} edge-side term(s) in the model",
                    model.term_count() - node_model.term_count()
                );
            }
            let node_prior = prior.subset(&model.side_indices(TermSide::Node));
            let mut node_cfg = cfg.clone();
            node_cfg.init_eta = cfg.init_eta.as_ref().map(|full| {
                model
                    .side_indices(TermSide::Node)
                    .iter()
                    .map(|&i| full[i])
                    .collect()
            });
            (0..cfg.n_chains)
                .into_par_iter()
                .map(|c| {
                    logistic_fit_chain(
                        &node_model,
                        net_obs,
                        &node_prior,
                        &node_cfg,
                        c as u64 + 1,
                    )
                })
                .collect()
        }
    }
}
