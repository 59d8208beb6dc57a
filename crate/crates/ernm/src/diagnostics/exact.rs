//! Exact enumeration of toy models: every joint (edge, outcome) state with
//! its probability, the log normalizer, exact moments of the sufficient
//! statistics, and an exact grid posterior for validating the exchange
//! sampler. The state space doubles per dyad and per node, so this is capped
//! at 5 nodes (a full 4-node joint model has 2^6 * 2^4 = 1024 states).

use nalgebra::DMatrix;

use crate::error::{ErnmError, Result};
use crate::exchange::PriorSpec;
use crate::net::Network;
use crate::terms::ModelSpec;
use crate::vector::{ParamVector, StatVector};

/// Hard cap on enumerable node counts.
pub const MAX_EXACT_NODES: usize = 5;

/// Full state table of a toy model at a fixed parameter.
#[derive(Clone, Debug)]
pub struct ExactModel {
    pub n: usize,
    /// log c(eta): log-sum of exp(eta . g) over all states.
    pub log_normalizer: f64,
    /// Probability of each enumerated state (sums to 1).
    pub probabilities: Vec<f64>,
    /// Sufficient statistics of each state, aligned with `probabilities`.
    pub state_stats: Vec<StatVector>,
    /// Exact E[g].
    pub expected_stats: StatVector,
    /// Exact Cov[g].
    pub stat_covariance: DMatrix<f64>,
}

impl ExactModel {
    pub fn state_count(&self) -> usize {
        self.probabilities.len()
    }

    /// log c(eta') for an arbitrary parameter over the same state table.
    pub fn log_normalizer_at(&self, eta: &ParamVector) -> f64 {
        log_sum_exp(self.state_stats.iter().map(|g| eta.dot(g.as_slice())))
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let collected: Vec<f64> = values.collect();
    let max = collected.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + collected.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Evaluate g over every state of the model's sample space (edges and/or
/// outcomes free, the rest frozen at `base`).
pub fn enumerate_state_stats(model: &ModelSpec, base: &Network) -> Result<Vec<StatVector>> {
    let n = base.node_count();
    if n > MAX_EXACT_NODES {
        return Err(ErnmError::EnumerationTooLarge {
            n,
            max: MAX_EXACT_NODES,
        });
    }
    let bound = model.bind(base)?;
    let dyads: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let edge_states: u64 = if model.edges_stochastic {
        1 << dyads.len()
    } else {
        1
    };
    let outcome_states: u64 = if model.outcomes_stochastic { 1 << n } else { 1 };

    let mut stats = Vec::with_capacity((edge_states * outcome_states) as usize);
    let mut net = base.clone();
    for edge_bits in 0..edge_states {
        if model.edges_stochastic {
            for (b, &(i, j)) in dyads.iter().enumerate() {
                let want = edge_bits >> b & 1 == 1;
                if net.has_edge(i, j) != want {
                    net.toggle_edge(i, j)?;
                }
            }
        }
        for outcome_bits in 0..outcome_states {
            if model.outcomes_stochastic {
                net.set_outcomes((0..n).map(|i| (outcome_bits >> i & 1) as u8).collect());
            }
            stats.push(bound.eval(&net)?);
        }
    }
    Ok(stats)
}

/// Enumerate the model exactly at `eta`.
pub fn enumerate_exact(
    model: &ModelSpec,
    eta: &ParamVector,
    base: &Network,
) -> Result<ExactModel> {
    let state_stats = enumerate_state_stats(model, base)?;
    let p = model.term_count();
    eta.check_len(p)?;

    let log_weights: Vec<f64> = state_stats
        .iter()
        .map(|g| eta.dot(g.as_slice()))
        .collect();
    let log_normalizer = log_sum_exp(log_weights.iter().copied());
    let probabilities: Vec<f64> = log_weights
        .iter()
        .map(|w| (w - log_normalizer).exp())
        .collect();

    let mut expected = vec![0.0; p];
    for (prob, g) in probabilities.iter().zip(&state_stats) {
        for (acc, v) in expected.iter_mut().zip(g.iter()) {
            *acc += prob * v;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for (prob, g) in probabilities.iter().zip(&state_stats) {
        for a in 0..p {
            let da = g[a] - expected[a];
            for b in a..p {
                cov[(a, b)] += prob * da * (g[b] - expected[b]);
            }
        }
    }
    for a in 0..p {
        for b in (a + 1)..p {
            cov[(b, a)] = cov[(a, b)];
        }
    }

    Ok(ExactModel {
        n: base.node_count(),
        log_normalizer,
        probabilities,
        state_stats,
        expected_stats: StatVector(expected),
        stat_covariance: cov,
    })
}

/// One free coordinate of a parameter grid.
#[derive(Clone, Debug)]
pub struct GridAxis {
    /// Term index the axis varies.
    pub term: usize,
    pub values: Vec<f64>,
}

/// Normalized posterior over a small parameter grid.
#[derive(Clone, Debug)]
pub struct GridPosterior {
    pub points: Vec<ParamVector>,
    pub probabilities: Vec<f64>,
}

impl GridPosterior {
    /// Mode of the grid posterior.
    pub fn mode(&self) -> &ParamVector {
        let (idx, _) = self
            .probabilities
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("grid is nonempty");
        &self.points[idx]
    }

    /// Marginal CDF along one term, evaluated at each distinct grid value
    /// (ascending). Usable as a one-sample KS reference.
    pub fn marginal_cdf(&self, term: usize) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self
            .points
            .iter()
            .zip(&self.probabilities)
            .map(|(pt, &pr)| (pt[term], pr))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut acc = 0.0;
        for (value, prob) in pairs {
            acc += prob;
            match out.last_mut() {
                Some(last) if last.0 == value => last.1 = acc,
                _ => out.push((value, acc)),
            }
        }
        out
    }
}

/// Exact posterior over a grid with at most two free coordinates: the density
/// is exp(eta . g_obs - log c(eta)) * prior(eta), normalized over the grid.
/// Coordinates not named by an axis stay at `base_eta`.
pub fn exact_grid_posterior(
    net_obs: &Network,
    model: &ModelSpec,
    prior: &PriorSpec,
    base_eta: &ParamVector,
    axes: &[GridAxis],
) -> Result<GridPosterior> {
    let p = model.term_count();
    base_eta.check_len(p)?;
    prior.validate(p)?;
    if axes.is_empty() || axes.len() > 2 {
        return Err(ErnmError::InvalidConfig(format!(
            "grid posterior supports 1 or 2 free coordinates, got {}",
            axes.len()
        )));
    }
    for axis in axes {
        if axis.term >= p {
            return Err(ErnmError::InvalidConfig(format!(
                "grid axis term {} out of range",
                axis.term
            )));
        }
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    if total > 1_000_000 {
        return Err(ErnmError::GridTooLarge(total));
    }

    let state_stats = enumerate_state_stats(model, net_obs)?;
    let g_obs = model.bind(net_obs)?.eval(net_obs)?;

    let mut points = Vec::with_capacity(total);
    let mut log_post = Vec::with_capacity(total);
    let second: &[f64] = axes.get(1).map(|a| a.values.as_slice()).unwrap_or(&[f64::NAN]);
    for &v0 in &axes[0].values {
        for &v1 in second {
            let mut eta = base_eta.clone();
            eta[axes[0].term] = v0;
            if axes.len() == 2 {
                eta[axes[1].term] = v1;
            }
            let lp = prior.log_density(&eta);
            let value = if lp == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                let log_c = log_sum_exp(state_stats.iter().map(|g| eta.dot(g.as_slice())));
                eta.dot(g_obs.as_slice()) - log_c + lp
            };
            points.push(eta);
            log_post.push(value);
        }
    }
    let log_total = log_sum_exp(log_post.iter().copied());
    let probabilities = log_post
        .iter()
        .map(|w| (w - log_total).exp())
        .collect();
    Ok(GridPosterior {
        points,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{ModelClass, NeighborAttr, TermSpec};

    fn four_node_model() -> ModelSpec {
        ModelSpec::new(
            ModelClass::Ernm,
            vec![
                TermSpec::Edges,
                TermSpec::Homophily {
                    attr: "outcome".into(),
                    variant: Default::default(),
                },
                TermSpec::Intercept,
                TermSpec::NeighborCount {
                    attr: NeighborAttr::Outcome,
                },
            ],
            "outcome",
        )
        .unwrap()
    }

    #[test]
    fn four_node_joint_model_has_1024_states() {
        let model = four_node_model();
        let base = Network::empty(4);
        let eta = ParamVector(vec![-0.5, 0.5, 0.2, 0.1]);
        let exact = enumerate_exact(&model, &eta, &base).unwrap();
        assert_eq!(exact.state_count(), 1024);
        let total: f64 = exact.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_parameter_is_uniform_with_mean_edges_three() {
        let model = four_node_model();
        let base = Network::empty(4);
        let eta = ParamVector::zeros(4);
        let exact = enumerate_exact(&model, &eta, &base).unwrap();
        let uniform = 1.0 / 1024.0;
        assert!(exact
            .probabilities
            .iter()
            .all(|p| (p - uniform).abs() < 1e-15));
        assert!((exact.expected_stats[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_edges_shrink_the_state_space() {
        let mut model = four_node_model();
        model.edges_stochastic = false;
        let mut base = Network::empty(4);
        base.toggle_edge(0, 1).unwrap();
        let exact = enumerate_exact(&model, &ParamVector::zeros(4), &base).unwrap();
        assert_eq!(exact.state_count(), 16);
        // Edge count is frozen at 1 in every state.
        assert!((exact.expected_stats[0] - 1.0).abs() < 1e-12);
        assert!(exact.stat_covariance[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn refuses_large_networks() {
        let model = four_node_model();
        let base = Network::empty(6);
        assert!(matches!(
            enumerate_exact(&model, &ParamVector::zeros(4), &base),
            Err(ErnmError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn expected_stats_are_probability_weighted_sums() {
        let model = four_node_model();
        let base = Network::empty(4);
        let eta = ParamVector(vec![-0.4, 0.3, 0.1, 0.2]);
        let exact = enumerate_exact(&model, &eta, &base).unwrap();
        for t in 0..4 {
            let weighted: f64 = exact
                .probabilities
                .iter()
                .zip(&exact.state_stats)
                .map(|(p, g)| p * g[t])
                .sum();
            assert_eq!(weighted, exact.expected_stats[t]);
        }
    }

    #[test]
    fn grid_posterior_mode_near_density_logit() {
        // Edges-only model: the exact posterior mode under a flat prior sits
        // at the maximum-likelihood point, the logit of the observed density.
        let mut net = Network::empty(4);
        net.toggle_edge(0, 1).unwrap();
        net.toggle_edge(1, 2).unwrap();
        let mut model = four_node_model();
        model.terms = vec![TermSpec::Edges];
        model.outcomes_stochastic = false;
        let prior = PriorSpec::Uniform {
            bounds: Some(vec![(-6.0, 6.0)]),
        };
        let axis = GridAxis {
            term: 0,
            values: (0..2001).map(|k| -6.0 + 12.0 * k as f64 / 2000.0).collect(),
        };
        let grid =
            exact_grid_posterior(&net, &model, &prior, &ParamVector::zeros(1), &[axis]).unwrap();
        let density: f64 = 2.0 / 6.0;
        let expect = (density / (1.0 - density)).ln();
        assert!((grid.mode()[0] - expect).abs() < 0.02, "mode {}", grid.mode()[0]);
        let total: f64 = grid.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_likelihood_gives_uniform_grid() {
        // With the statistic forced constant (model over outcomes, grid over
        // a term whose statistic never moves), the posterior is the prior.
        let net = Network::empty(3);
        let mut model = four_node_model();
        model.terms = vec![TermSpec::Edges, TermSpec::Intercept];
        model.edges_stochastic = false;
        // Grid over the edges coefficient: with edges frozen empty, the edge
        // statistic is 0 in every state, so the likelihood is flat in it.
        let axis = GridAxis {
            term: 0,
            values: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        };
        let grid = exact_grid_posterior(
            &net,
            &model,
            &PriorSpec::flat(),
            &ParamVector::zeros(2),
            &[axis],
        )
        .unwrap();
        for p in &grid.probabilities {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_data_symmetric_posterior() {
        // Empty observed graph at grid +-v: P(v) vs P(-v) need not match, but
        // a symmetric two-point likelihood check does: use outcome intercept
        // with half the outcomes set, which makes g_obs exactly half the
        // maximum, a symmetric configuration.
        let mut net = Network::empty(4);
        net.set_outcomes(vec![1, 1, 0, 0]);
        let mut model = four_node_model();
        model.terms = vec![TermSpec::Intercept];
        model.edges_stochastic = false;
        let axis = GridAxis {
            term: 0,
            values: vec![-1.0, 1.0],
        };
        let grid = exact_grid_posterior(
            &net,
            &model,
            &PriorSpec::flat(),
            &ParamVector::zeros(1),
            &[axis],
        )
        .unwrap();
        assert!((grid.probabilities[0] - grid.probabilities[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_grid_and_too_many_axes() {
        let net = Network::empty(3);
        let mut model = four_node_model();
        model.terms = vec![TermSpec::Edges];
        model.outcomes_stochastic = false;
        let big = GridAxis {
            term: 0,
            values: vec![0.0; 1_000_001],
        };
        assert!(matches!(
            exact_grid_posterior(&net, &model, &PriorSpec::flat(), &ParamVector::zeros(1), &[big]),
            Err(ErnmError::GridTooLarge(_))
        ));
    }
}
