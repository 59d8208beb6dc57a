//! Posterior-predictive goodness of fit: networks are simulated by drawing a
//! parameter from the posterior sample and simulating a network at it, then
//! the observed structural summaries are compared against per-bin quantile
//! bands of the simulated ones.
//!
//! Classes that hold the network fixed skip the families that involve edges
//! only (degree, shared partners, geodesics); subgroup families depend on
//! the outcomes and are always assessable.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::stats::quantile;
use crate::error::{ErnmError, Result};
use crate::exchange::Chain;
use crate::net::{AttrId, HistBin, Histogram, Network};
use crate::sampler::SamplerConfig;
use crate::simulate::{simulate_from_params, OutcomeMode};
use crate::terms::ModelSpec;
use crate::vector::ParamVector;

/// 5% / 50% / 95% posterior-predictive band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

fn band_of(values: &mut Vec<f64>) -> Band {
    values.sort_by(f64::total_cmp);
    Band {
        q05: quantile(values, 0.05),
        q50: quantile(values, 0.50),
        q95: quantile(values, 0.95),
    }
}

/// A histogram-valued statistic family: observed count and simulated band
/// per bin.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistogramFamily {
    pub name: String,
    pub observed: BTreeMap<HistBin, f64>,
    pub bands: BTreeMap<HistBin, Band>,
}

/// A scalar statistic family (subgroup proportions). `None` marks the
/// undefined case (no edges / no triangles).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarFamily {
    pub name: String,
    pub observed: Option<f64>,
    pub band: Option<Band>,
    /// Simulations in which the statistic was defined.
    pub defined_count: usize,
}

/// Posterior-predictive goodness-of-fit report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GofReport {
    pub n_sim: usize,
    pub histograms: Vec<HistogramFamily>,
    pub scalars: Vec<ScalarFamily>,
}

impl GofReport {
    pub fn histogram(&self, name: &str) -> Option<&HistogramFamily> {
        self.histograms.iter().find(|f| f.name == name)
    }

    /// Fraction of observed occupied bins inside the [q05, q95] band.
    pub fn coverage(&self, name: &str) -> Option<f64> {
        let family = self.histogram(name)?;
        let occupied: Vec<_> = family
            .observed
            .iter()
            .filter(|(_, &count)| count > 0.0)
            .collect();
        if occupied.is_empty() {
            return None;
        }
        let inside = occupied
            .iter()
            .filter(|(bin, &count)| {
                family
                    .bands
                    .get(bin)
                    .is_some_and(|b| count >= b.q05 && count <= b.q95)
            })
            .count();
        Some(inside as f64 / occupied.len() as f64)
    }
}

/// Node-group predicate for subgroup statistics, e.g. outcome == 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub attr: String,
    pub value: f64,
}

impl GroupSpec {
    fn members(&self, net: &Network, outcome_attr: &str) -> Result<Vec<bool>> {
        let id = if self.attr == outcome_attr {
            AttrId::Outcome
        } else if self.attr == "treatment" {
            AttrId::Treatment
        } else {
            AttrId::Covariate(net.resolve_covariate(&self.attr)?)
        };
        Ok((0..net.node_count())
            .map(|i| net.attr_value(id, i) == self.value)
            .collect())
    }
}

struct FamilyAccumulator {
    name: &'static str,
    observed: Histogram,
    simulated: Vec<Histogram>,
}

impl FamilyAccumulator {
    fn finish(mut self, n_sim: usize) -> HistogramFamily {
        let mut bins: Vec<HistBin> = self.observed.bins.keys().copied().collect();
        for sim in &self.simulated {
            bins.extend(sim.bins.keys().copied());
        }
        bins.sort();
        bins.dedup();
        let mut bands = BTreeMap::new();
        for bin in &bins {
            let mut values: Vec<f64> = self
                .simulated
                .iter()
                .map(|h| h.count(*bin) as f64)
                .collect();
            bands.insert(*bin, band_of(&mut values));
        }
        let observed = bins
            .iter()
            .map(|bin| (*bin, self.observed.count(*bin) as f64))
            .collect();
        let _ = n_sim;
        self.simulated.clear();
        HistogramFamily {
            name: self.name.to_string(),
            observed,
            bands,
        }
    }
}

/// Simulate `n_sim` posterior-predictive networks (one posterior draw each)
/// and band the structural summaries. `group` enables the subgroup families.
pub fn posterior_predictive_gof(
    chains: &[Chain],
    model: &ModelSpec,
    net_obs: &Network,
    n_sim: usize,
    equilibrium: &SamplerConfig,
    group: Option<&GroupSpec>,
    seed: u64,
) -> Result<GofReport> {
    if chains.iter().all(|c| c.is_empty()) {
        return Err(ErnmError::EmptyChain);
    }
    if n_sim == 0 {
        return Err(ErnmError::InvalidConfig("n_sim must be >= 1".into()));
    }
    let pool: Vec<&ParamVector> = chains.iter().flat_map(|c| c.draws.iter()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks: Vec<(ParamVector, u64)> = (0..n_sim)
        .map(|_| {
            (
                pool[rng.random_range(0..pool.len())].clone(),
                rng.random::<u64>(),
            )
        })
        .collect();
    let sims: Vec<Network> = tasks
        .par_iter()
        .map(|(eta, sim_seed)| {
            simulate_from_params(model, eta, net_obs, equilibrium, OutcomeMode::Sample, *sim_seed)
                .map(|s| s.network)
        })
        .collect::<Result<_>>()?;

    let mut histograms = Vec::new();
    let mut scalars = Vec::new();

    if model.edges_stochastic {
        for (name, f) in [
            ("degree", Network::degree_distribution as fn(&Network) -> Histogram),
            ("esp", Network::esp_distribution as fn(&Network) -> Histogram),
            (
                "geodesic",
                Network::geodesic_distribution as fn(&Network) -> Histogram,
            ),
        ] {
            let acc = FamilyAccumulator {
                name,
                observed: f(net_obs),
                simulated: sims.iter().map(f).collect(),
            };
            histograms.push(acc.finish(n_sim));
        }
    }

    if let Some(group) = group {
        let observed_members = group.members(net_obs, &model.outcome_attr)?;
        let observed_stats = net_obs.subgroup_stats(&observed_members);
        let sim_stats: Vec<_> = sims
            .iter()
            .map(|net| {
                group
                    .members(net, &model.outcome_attr)
                    .map(|members| net.subgroup_stats(&members))
            })
            .collect::<Result<Vec<_>>>()?;

        let acc = FamilyAccumulator {
            name: "group_degree",
            observed: observed_stats.degree.clone(),
            simulated: sim_stats.iter().map(|s| s.degree.clone()).collect(),
        };
        histograms.push(acc.finish(n_sim));

        for (name, get) in [
            (
                "group_edge_proportion",
                (|s: &crate::net::SubgroupStats| s.edge_proportion)
                    as fn(&crate::net::SubgroupStats) -> Option<f64>,
            ),
            ("group_triad_proportion", |s: &crate::net::SubgroupStats| {
                s.triad_proportion
            }),
        ] {
            let mut defined: Vec<f64> = sim_stats.iter().filter_map(get).collect();
            let defined_count = defined.len();
            scalars.push(ScalarFamily {
                name: name.to_string(),
                observed: get(&observed_stats),
                band: (!defined.is_empty()).then(|| band_of(&mut defined)),
                defined_count,
            });
        }
    }

    Ok(GofReport {
        n_sim,
        histograms,
        scalars,
    })
}
