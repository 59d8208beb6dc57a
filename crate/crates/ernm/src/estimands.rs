//! Equilibrium potential outcomes by posterior imputation, and the causal
//! estimands computed from them: the main treatment effect and the k-peer
//! treatment and outcome effects.
//!
//! For each of M parameter draws from the posterior, networks are simulated
//! to equilibrium and every node contributes a record of its realized
//! one-step neighbourhood configuration (own treatment, treated neighbours,
//! positive-outcome neighbours) and its realized outcome. Effects contrast
//! records whose configurations match except for the quantity of interest,
//! frequency-weighted over realized configurations; a configuration never
//! realized in a draw is omitted and the denominator reduced, and a draw
//! with no contrastable configurations contributes no sample. An estimand
//! with no contributing draws at all is reported missing (NA), which is how
//! fixed-network classes behave at exposure levels their network never
//! shows.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::stats::quantile;
use crate::error::{ErnmError, Result};
use crate::exchange::Chain;
use crate::net::Network;
use crate::sampler::SamplerConfig;
use crate::simulate::{simulate_from_params, OutcomeMode, SimulatedNetwork};
use crate::terms::{ModelClass, ModelSpec};
use crate::vector::{KahanSum, ParamVector};

/// One node in one simulated network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub treated: bool,
    pub treated_neighbors: u32,
    pub positive_neighbors: u32,
    /// Realized outcome; a probability for the separable classes, whose
    /// outcome block is deterministic given the network.
    pub outcome: f64,
}

/// Records of every (node, simulation) pair under one posterior draw.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DrawRecords {
    pub records: Vec<NodeRecord>,
}

/// Imputed potential-outcome material: M draws of simulated cross-sections.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialOutcomeDraws {
    pub draws: Vec<DrawRecords>,
    pub node_count: usize,
    pub sims_per_draw: usize,
}

/// Imputation sizing. `equilibrium` is the inner sampler reused as the
/// per-simulation burn-in; one network is retained per simulation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImputeConfig {
    pub m_draws: usize,
    pub sims_per_draw: usize,
    pub equilibrium: SamplerConfig,
    pub seed: u64,
}

fn node_records(sim: &SimulatedNetwork) -> Vec<NodeRecord> {
    let net = &sim.network;
    let n = net.node_count();
    (0..n)
        .map(|i| {
            let mut treated_neighbors = 0u32;
            let mut positive_neighbors = 0u32;
            for &v in net.neighbors(i) {
                let v = v as usize;
                treated_neighbors += net.treated(v) as u32;
                positive_neighbors += net.outcome(v) as u32;
            }
            NodeRecord {
                treated: net.treated(i) == 1,
                treated_neighbors,
                positive_neighbors,
                outcome: sim
                    .outcome_probs
                    .as_ref()
                    .map(|p| p[i])
                    .unwrap_or(net.outcome(i) as f64),
            }
        })
        .collect()
}

/// Simulate the imputation material: M parameter draws with replacement from
/// the pooled chains, `sims_per_draw` equilibrium networks per draw, one
/// record per node per network. Configurations always come from the
/// simulated networks.
pub fn impute_missing_outcomes(
    chains: &[Chain],
    model: &ModelSpec,
    net_obs: &Network,
    cfg: &ImputeConfig,
) -> Result<PotentialOutcomeDraws> {
    if chains.iter().all(|c| c.is_empty()) {
        return Err(ErnmError::EmptyChain);
    }
    if cfg.m_draws == 0 || cfg.sims_per_draw == 0 {
        return Err(ErnmError::InvalidConfig(
            "m_draws and sims_per_draw must be >= 1".into(),
        ));
    }
    // The logistic class is fitted (and simulated) through its node block.
    let model_eff = if model.class == ModelClass::Logistic {
        model.node_block()?
    } else {
        model.clone()
    };
    let expected_names = model_eff.term_names();
    for chain in chains {
        if chain.term_names != expected_names {
            return Err(ErnmError::InvalidModel(format!(
                "chain terms {:?} do not match model terms {:?}",
                chain.term_names, expected_names
            )));
        }
    }
    let mode = match model_eff.class {
        ModelClass::Ernm | ModelClass::Mrf => OutcomeMode::Sample,
        ModelClass::ErgmLogistic | ModelClass::Logistic => OutcomeMode::Expectation,
    };

    let pool: Vec<&ParamVector> = chains.iter().flat_map(|c| c.draws.iter()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tasks: Vec<(usize, ParamVector, u64)> = (0..cfg.m_draws)
        .flat_map(|draw| {
            let eta = pool[rng.random_range(0..pool.len())].clone();
            (0..cfg.sims_per_draw)
                .map(|_| (draw, eta.clone(), rng.random::<u64>()))
                .collect::<Vec<_>>()
        })
        .collect();

    let per_sim: Vec<Vec<NodeRecord>> = tasks
        .par_iter()
        .map(|(_, eta, seed)| {
            simulate_from_params(&model_eff, eta, net_obs, &cfg.equilibrium, mode, *seed)
                .map(|sim| node_records(&sim))
        })
        .collect::<Result<_>>()?;

    let mut draws = vec![DrawRecords::default(); cfg.m_draws];
    for ((draw, _, _), records) in tasks.iter().zip(per_sim) {
        draws[*draw].records.extend(records);
    }
    Ok(PotentialOutcomeDraws {
        draws,
        node_count: net_obs.node_count(),
        sims_per_draw: cfg.sims_per_draw,
    })
}

/// Posterior sample of one estimand: one value per draw that had the
/// contrast available.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EffectSamples {
    pub values: Vec<f64>,
    /// Draws that contributed a value.
    pub availability: usize,
    pub total_draws: usize,
}

impl EffectSamples {
    pub fn missing(&self) -> bool {
        self.availability == 0
    }
}

#[derive(Default)]
struct Arm {
    sum: KahanSum,
    count: u64,
}

impl Arm {
    fn push(&mut self, value: f64) {
        self.sum.add(value);
        self.count += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum.value() / self.count as f64)
    }
}

/// Main treatment effect: within each realized neighbourhood configuration
/// (treated neighbours, positive neighbours), contrast the mean outcome of
/// treated versus untreated records, then average the contrasts over
/// configurations weighted by how often they were realized. Configurations
/// missing either arm drop out of both the sum and the denominator.
pub fn main_effect(draws: &PotentialOutcomeDraws) -> EffectSamples {
    let mut out = EffectSamples {
        total_draws: draws.draws.len(),
        ..Default::default()
    };
    for draw in &draws.draws {
        let mut groups: BTreeMap<(u32, u32), (Arm, Arm)> = BTreeMap::new();
        for r in &draw.records {
            let entry = groups
                .entry((r.treated_neighbors, r.positive_neighbors))
                .or_default();
            if r.treated {
                entry.0.push(r.outcome);
            } else {
                entry.1.push(r.outcome);
            }
        }
        let mut contrast = KahanSum::default();
        let mut weight = 0u64;
        for (treated_arm, control_arm) in groups.values() {
            if let (Some(t), Some(c)) = (treated_arm.mean(), control_arm.mean()) {
                let w = treated_arm.count + control_arm.count;
                contrast.add((t - c) * w as f64);
                weight += w;
            }
        }
        if weight > 0 {
            out.values.push(contrast.value() / weight as f64);
        }
    }
    out.availability = out.values.len();
    out
}

fn peer_effect(
    draws: &PotentialOutcomeDraws,
    k: u32,
    exposure: impl Fn(&NodeRecord) -> u32,
) -> EffectSamples {
    let mut out = EffectSamples {
        total_draws: draws.draws.len(),
        ..Default::default()
    };
    for draw in &draws.draws {
        let mut exposed = Arm::default();
        let mut baseline = Arm::default();
        for r in &draw.records {
            if r.treated {
                continue;
            }
            let e = exposure(r);
            if e == k {
                exposed.push(r.outcome);
            }
            if e == 0 {
                baseline.push(r.outcome);
            }
        }
        if let (Some(at_k), Some(at_0)) = (exposed.mean(), baseline.mean()) {
            // k = 0 contrasts the baseline group with itself: identically 0.
            out.values.push(if k == 0 { 0.0 } else { at_k - at_0 });
        }
    }
    out.availability = out.values.len();
    out
}

/// k-peer treatment effect: among untreated records, mean outcome with
/// exactly k treated neighbours minus mean outcome with none. Draws in which
/// either exposure level was never realized are omitted.
pub fn k_peer_treatment_effect(draws: &PotentialOutcomeDraws, k: u32) -> EffectSamples {
    peer_effect(draws, k, |r| r.treated_neighbors)
}

/// k-peer outcome effect: among untreated records, mean outcome with exactly
/// k positive-outcome neighbours minus mean outcome with none.
pub fn k_peer_outcome_effect(draws: &PotentialOutcomeDraws, k: u32) -> EffectSamples {
    peer_effect(draws, k, |r| r.positive_neighbors)
}

/// Central credible interval at level gamma: the ((1-gamma)/2, (1+gamma)/2)
/// empirical quantiles.
pub fn credible_interval(samples: &[f64], gamma: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(ErnmError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(ErnmError::InvalidConfig(format!(
            "credible level must lie in (0, 1), got {gamma}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((
        quantile(&sorted, (1.0 - gamma) / 2.0),
        quantile(&sorted, (1.0 + gamma) / 2.0),
    ))
}

/// One reported estimand.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimandEntry {
    pub name: String,
    pub samples: Vec<f64>,
    pub mean: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub availability: usize,
    pub total_draws: usize,
    pub missing: bool,
}

impl EstimandEntry {
    fn from_samples(name: String, effect: EffectSamples, gamma: f64) -> Self {
        let mean = (!effect.values.is_empty()).then(|| {
            effect.values.iter().sum::<f64>() / effect.values.len() as f64
        });
        let interval = credible_interval(&effect.values, gamma).ok();
        EstimandEntry {
            name,
            missing: effect.missing(),
            mean,
            interval,
            availability: effect.availability,
            total_draws: effect.total_draws,
            samples: effect.values,
        }
    }
}

/// The full estimand table: main effect plus 1..=k_max peer outcome and peer
/// treatment effects, with posterior means and central credible intervals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimandReport {
    pub gamma: f64,
    pub entries: Vec<EstimandEntry>,
}

impl EstimandReport {
    pub fn entry(&self, name: &str) -> Option<&EstimandEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn estimand_names(k_max: u32) -> Vec<String> {
        let mut names = vec!["main".to_string()];
        names.extend((1..=k_max).map(|k| format!("{k}-peer-out")));
        names.extend((1..=k_max).map(|k| format!("{k}-peer-treat")));
        names
    }
}

pub fn estimand_report(
    draws: &PotentialOutcomeDraws,
    k_max: u32,
    gamma: f64,
) -> EstimandReport {
    let mut entries = Vec::with_capacity(1 + 2 * k_max as usize);
    entries.push(EstimandEntry::from_samples(
        "main".into(),
        main_effect(draws),
        gamma,
    ));
    for k in 1..=k_max {
        entries.push(EstimandEntry::from_samples(
            format!("{k}-peer-out"),
            k_peer_outcome_effect(draws, k),
            gamma,
        ));
    }
    for k in 1..=k_max {
        entries.push(EstimandEntry::from_samples(
            format!("{k}-peer-treat"),
            k_peer_treatment_effect(draws, k),
            gamma,
        ));
    }
    EstimandReport { gamma, entries }
}
