//! Simulating networks from a fitted model class at given parameters.
//!
//! The joint and outcome-field classes run the toggle sampler to equilibrium.
//! The separable classes simulate their edge block with the toggle sampler
//! and score outcomes through the logistic block, either as Bernoulli draws
//! (posterior-predictive networks) or as expected outcomes (potential-outcome
//! imputation, where the logistic block is deterministic given the network).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exchange::node_design_matrix;
use crate::net::Network;
use crate::sampler::{mcmc_run, SamplerConfig};
use crate::terms::{ModelClass, ModelSpec, TermSide};
use crate::vector::ParamVector;

/// How separable classes realize outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeMode {
    /// Bernoulli draws from the logistic block (networks look like data).
    Sample,
    /// Expected outcomes; deterministic given the simulated network.
    Expectation,
}

/// One simulated network. For separable classes `outcome_probs` holds the
/// logistic block's per-node success probabilities (the network's stored
/// outcomes are draws from them under [`OutcomeMode::Sample`], or the frozen
/// observed outcomes under [`OutcomeMode::Expectation`]).
#[derive(Clone, Debug)]
pub struct SimulatedNetwork {
    pub network: Network,
    pub outcome_probs: Option<Vec<f64>>,
}

/// Simulate one network from the model class at `eta`, starting the toggle
/// chain at `net_obs` and running `equilibrium.burn_in` proposals.
pub fn simulate_from_params(
    model: &ModelSpec,
    eta: &ParamVector,
    net_obs: &Network,
    equilibrium: &SamplerConfig,
    mode: OutcomeMode,
    seed: u64,
) -> Result<SimulatedNetwork> {
    match model.class {
        ModelClass::Ernm | ModelClass::Mrf => {
            let cfg = SamplerConfig {
                burn_in: equilibrium.burn_in,
                thin: 1,
                n_samples: 1,
                edge_proposal_prob: equilibrium.edge_proposal_prob,
                seed,
            };
            let run = mcmc_run(model, eta, net_obs, &cfg, false)?;
            Ok(SimulatedNetwork {
                network: run.final_network,
                outcome_probs: None,
            })
        }
        ModelClass::ErgmLogistic | ModelClass::Logistic => {
            let node_model = model.node_block()?;
            let node_idx = model.side_indices(TermSide::Node);
            let eta_node =
                ParamVector(node_idx.iter().map(|&i| eta[i]).collect());

            let mut network = if model.class == ModelClass::ErgmLogistic {
                let edge_model = model.edge_block()?;
                let edge_idx = model.side_indices(TermSide::Edge);
                let eta_edge =
                    ParamVector(edge_idx.iter().map(|&i| eta[i]).collect());
                let cfg = SamplerConfig {
                    burn_in: equilibrium.burn_in,
                    thin: 1,
                    n_samples: 1,
                    edge_proposal_prob: None,
                    seed,
                };
                mcmc_run(&edge_model, &eta_edge, net_obs, &cfg, false)?.final_network
            } else {
                net_obs.clone()
            };

            // Frozen-covariate convention: the logistic block reads neighbour
            // counts off the (possibly simulated) adjacency with the observed
            // outcomes still in place.
            let design = node_design_matrix(&node_model, &network)?;
            let probs: Vec<f64> = design
                .iter()
                .map(|x| {
                    let s = eta_node.dot(x);
                    1.0 / (1.0 + (-s).exp())
                })
                .collect();
            if mode == OutcomeMode::Sample {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0u64);
                let outcomes = probs
                    .iter()
                    .map(|&p| u8::from(rng.random::<f64>() < p))
                    .collect();
                network.set_outcomes(outcomes);
            }
            Ok(SimulatedNetwork {
                network,
                outcome_probs: Some(probs),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{ModelClass, NeighborAttr, TermSpec};

    fn observed() -> Network {
        let mut net = Network::empty(6);
        for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)] {
            net.toggle_edge(i, j).unwrap();
        }
        net.set_outcomes(vec![1, 0, 1, 0, 1, 0]);
        net.set_treatment(vec![1, 1, 0, 0, 1, 0]);
        net
    }

    fn model(class: ModelClass) -> ModelSpec {
        ModelSpec::new(
            class,
            vec![
                TermSpec::Edges,
                TermSpec::Homophily {
                    attr: "outcome".into(),
                    variant: Default::default(),
                },
                TermSpec::Intercept,
                TermSpec::NeighborCount {
                    attr: NeighborAttr::Treatment,
                },
            ],
            "outcome",
        )
        .unwrap()
    }

    #[test]
    fn mrf_simulation_freezes_edges() {
        let net = observed();
        let eta = ParamVector(vec![0.0, 0.3, -0.2, 0.1]);
        let sim = simulate_from_params(
            &model(ModelClass::Mrf),
            &eta,
            &net,
            &SamplerConfig::new(2_000, 1, 1, 1),
            OutcomeMode::Sample,
            9,
        )
        .unwrap();
        assert_eq!(sim.network.edge_count(), net.edge_count());
        for (i, j) in net.edges() {
            assert!(sim.network.has_edge(i, j));
        }
    }

    #[test]
    fn logistic_expectation_is_deterministic() {
        let net = observed();
        let eta = ParamVector(vec![0.0, 0.3, -0.2, 0.4]);
        let a = simulate_from_params(
            &model(ModelClass::Logistic),
            &eta,
            &net,
            &SamplerConfig::new(100, 1, 1, 1),
            OutcomeMode::Expectation,
            3,
        )
        .unwrap();
        let b = simulate_from_params(
            &model(ModelClass::Logistic),
            &eta,
            &net,
            &SamplerConfig::new(100, 1, 1, 1),
            OutcomeMode::Expectation,
            999,
        )
        .unwrap();
        assert_eq!(a.outcome_probs, b.outcome_probs);
        assert_eq!(a.network, b.network);
        // Edge-side coordinates do not enter the logistic block.
        assert!(a.outcome_probs.is_some());
    }

    #[test]
    fn ergm_logistic_resimulates_edges_only_from_edge_block() {
        let net = observed();
        // Strongly negative edges coefficient: simulated networks near-empty.
        let eta = ParamVector(vec![-6.0, 0.0, 0.0, 0.0]);
        let sim = simulate_from_params(
            &model(ModelClass::ErgmLogistic),
            &eta,
            &net,
            &SamplerConfig::new(3_000, 1, 1, 1),
            OutcomeMode::Expectation,
            17,
        )
        .unwrap();
        assert!(sim.network.edge_count() <= 2);
        // Expectation mode keeps the observed outcomes in place.
        assert_eq!(sim.network.outcomes(), net.outcomes());
    }
}
