//! Sufficient statistics of the joint edge/outcome exponential family and
//! their exact change statistics under single edge or outcome toggles.
//!
//! The family is P(Y=y, X=x | eta) ∝ exp(eta · g(y, x)) over whichever of the
//! edge set and the outcome vector a model class leaves random. Samplers only
//! ever evaluate g once per run; every proposal thereafter is scored through
//! the change statistics here, so these are the throughput-critical paths.
//!
//! Statistic definitions (theta is the fixed decay, u = 1 - e^{-theta}):
//!
//! ```text
//! Edges              |A|
//! GWESP              e^theta * sum_k (1 - u^k) * EP_k,  EP_k = #edges with
//!                    exactly k shared partners (optionally restricted to
//!                    partners matching both endpoints on an attribute)
//! GWDEG              e^theta * sum_i (1 - u^{d_i})
//! Homophily          #edges whose endpoints share the attribute value
//! Intercept          sum_i y_i
//! MainCovariate(a)   sum_i y_i * a_i
//! NeighborCount(a)   sum_i y_i * #{j in N(i): a_j = 1},  a in {treatment, outcome}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{ErnmError, Result};
use crate::net::{AttrId, Network};
use crate::vector::StatVector;

/// Which side of the model a term belongs to for reporting: terms over the
/// edge variables versus terms over the nodal outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermSide {
    Edge,
    Node,
}

/// Homophily statistic variants. Only the concordant-edge count is
/// implemented; the `Regularized` slot is reserved for the regularized form
/// from the original joint-model literature and errors until transcribed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomophilyVariant {
    MatchCount,
    Regularized,
}

impl Default for HomophilyVariant {
    fn default() -> Self {
        HomophilyVariant::MatchCount
    }
}

/// Attributes a neighbour-count term may count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborAttr {
    Treatment,
    Outcome,
}

/// One sufficient-statistic term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermSpec {
    Edges,
    Gwesp {
        decay: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        homogeneity: Option<String>,
    },
    Gwdeg {
        decay: f64,
    },
    Homophily {
        attr: String,
        #[serde(default)]
        variant: HomophilyVariant,
    },
    Intercept,
    MainCovariate {
        attr: String,
    },
    NeighborCount {
        attr: NeighborAttr,
    },
}

impl TermSpec {
    pub fn side(&self) -> TermSide {
        match self {
            TermSpec::Edges
            | TermSpec::Gwesp { .. }
            | TermSpec::Gwdeg { .. }
            | TermSpec::Homophily { .. } => TermSide::Edge,
            TermSpec::Intercept
            | TermSpec::MainCovariate { .. }
            | TermSpec::NeighborCount { .. } => TermSide::Node,
        }
    }

    /// Column label used in chain CSVs and reports.
    pub fn name(&self) -> String {
        match self {
            TermSpec::Edges => "edges".into(),
            TermSpec::Gwesp { decay, homogeneity } => match homogeneity {
                Some(attr) => format!("gwesp({decay},{attr})"),
                None => format!("gwesp({decay})"),
            },
            TermSpec::Gwdeg { decay } => format!("gwdeg({decay})"),
            TermSpec::Homophily { attr, .. } => format!("homophily({attr})"),
            TermSpec::Intercept => "intercept".into(),
            TermSpec::MainCovariate { attr } => format!("main({attr})"),
            TermSpec::NeighborCount { attr } => match attr {
                NeighborAttr::Treatment => "neighbors_treated".into(),
                NeighborAttr::Outcome => "neighbors_outcome".into(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TermSpec::Gwesp { decay, .. } | TermSpec::Gwdeg { decay } => {
                if !decay.is_finite() || *decay < 0.0 {
                    return Err(ErnmError::InvalidModel(format!(
                        "decay must be finite and >= 0, got {decay}"
                    )));
                }
            }
            TermSpec::Homophily { variant, .. } => {
                if *variant == HomophilyVariant::Regularized {
                    return Err(ErnmError::UnsupportedTerm);
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// The four supported model classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    /// Joint family over edges and outcomes.
    Ernm,
    /// Outcomes random over a fixed network.
    Mrf,
    /// Independent edge family and logistic outcome model.
    ErgmLogistic,
    /// Logistic outcome model with frozen observed neighbour covariates.
    Logistic,
}

impl ModelClass {
    pub fn name(&self) -> &'static str {
        match self {
            ModelClass::Ernm => "ernm",
            ModelClass::Mrf => "mrf",
            ModelClass::ErgmLogistic => "ergm_logistic",
            ModelClass::Logistic => "logistic",
        }
    }
}

/// An ordered term list plus the class flags that pick the sample space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub terms: Vec<TermSpec>,
    pub class: ModelClass,
    pub edges_stochastic: bool,
    pub outcomes_stochastic: bool,
    pub separable: bool,
    /// Name of the stochastic nodal covariate (reporting only; the outcome
    /// vector itself lives on the network).
    pub outcome_attr: String,
}

impl ModelSpec {
    pub fn new(class: ModelClass, terms: Vec<TermSpec>, outcome_attr: &str) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        if terms.is_empty() {
            return Err(ErnmError::InvalidModel("term list is empty".into()));
        }
        let (edges_stochastic, outcomes_stochastic, separable) = match class {
            ModelClass::Ernm => (true, true, false),
            ModelClass::Mrf => (false, true, false),
            ModelClass::ErgmLogistic => (true, true, true),
            ModelClass::Logistic => (false, true, true),
        };
        Ok(ModelSpec {
            terms,
            class,
            edges_stochastic,
            outcomes_stochastic,
            separable,
            outcome_attr: outcome_attr.to_string(),
        })
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn term_names(&self) -> Vec<String> {
        self.terms.iter().map(TermSpec::name).collect()
    }

    /// Indices of the edge-side and node-side terms, in model order.
    pub fn side_indices(&self, side: TermSide) -> Vec<usize> {
        self.terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.side() == side)
            .map(|(i, _)| i)
            .collect()
    }

    /// The edge-side block as a stand-alone edge-only model (used by the
    /// separable classes, where the edge family conditions on the observed
    /// outcomes).
    pub fn edge_block(&self) -> Result<ModelSpec> {
        let terms: Vec<TermSpec> = self
            .terms
            .iter()
            .filter(|t| t.side() == TermSide::Edge)
            .cloned()
            .collect();
        if terms.is_empty() {
            return Err(ErnmError::InvalidModel(
                "separable model has no edge-side terms".into(),
            ));
        }
        Ok(ModelSpec {
            terms,
            class: self.class,
            edges_stochastic: true,
            outcomes_stochastic: false,
            separable: false,
            outcome_attr: self.outcome_attr.clone(),
        })
    }

    /// The node-side block as a stand-alone outcome-only model.
    pub fn node_block(&self) -> Result<ModelSpec> {
        let terms: Vec<TermSpec> = self
            .terms
            .iter()
            .filter(|t| t.side() == TermSide::Node)
            .cloned()
            .collect();
        if terms.is_empty() {
            return Err(ErnmError::InvalidModel(
                "model has no node-side terms".into(),
            ));
        }
        Ok(ModelSpec {
            terms,
            class: self.class,
            edges_stochastic: false,
            outcomes_stochastic: true,
            separable: false,
            outcome_attr: self.outcome_attr.clone(),
        })
    }

    /// Resolve attribute names against a network. The result is what the
    /// samplers actually evaluate.
    pub fn bind(&self, net: &Network) -> Result<BoundModel> {
        let resolve = |name: &str| -> Result<AttrId> {
            if name == self.outcome_attr {
                Ok(AttrId::Outcome)
            } else if name == "treatment" {
                Ok(AttrId::Treatment)
            } else {
                Ok(AttrId::Covariate(net.resolve_covariate(name)?))
            }
        };
        let mut terms = Vec::with_capacity(self.terms.len());
        for spec in &self.terms {
            spec.validate()?;
            let bound = match spec {
                TermSpec::Edges => BoundTerm::Edges,
                TermSpec::Gwesp { decay, homogeneity } => BoundTerm::Gwesp {
                    weights: GwWeights::new(*decay),
                    homogeneity: homogeneity.as_deref().map(&resolve).transpose()?,
                },
                TermSpec::Gwdeg { decay } => BoundTerm::Gwdeg {
                    weights: GwWeights::new(*decay),
                },
                TermSpec::Homophily { attr, .. } => BoundTerm::Homophily {
                    attr: resolve(attr)?,
                },
                TermSpec::Intercept => BoundTerm::Intercept,
                TermSpec::MainCovariate { attr } => BoundTerm::MainCovariate {
                    attr: resolve(attr)?,
                },
                TermSpec::NeighborCount { attr } => BoundTerm::NeighborCount {
                    attr: match attr {
                        NeighborAttr::Treatment => AttrId::Treatment,
                        NeighborAttr::Outcome => AttrId::Outcome,
                    },
                },
            };
            terms.push(bound);
        }
        Ok(BoundModel {
            terms,
            names: self.term_names(),
        })
    }
}

/// Precomputed constants of a geometric weight w(k) = e^theta (1 - u^k).
#[derive(Clone, Copy, Debug)]
pub(crate) struct GwWeights {
    exp_decay: f64,
    u: f64,
}

impl GwWeights {
    fn new(decay: f64) -> Self {
        GwWeights {
            exp_decay: decay.exp(),
            u: 1.0 - (-decay).exp(),
        }
    }

    #[inline]
    fn weight(&self, k: usize) -> f64 {
        self.exp_decay * (1.0 - self.u.powi(k as i32))
    }

    /// w(k + 1) - w(k).
    #[inline]
    fn step_up(&self, k: usize) -> f64 {
        self.exp_decay * self.u.powi(k as i32) * (1.0 - self.u)
    }
}

#[derive(Clone, Debug)]
pub(crate) enum BoundTerm {
    Edges,
    Gwesp {
        weights: GwWeights,
        homogeneity: Option<AttrId>,
    },
    Gwdeg {
        weights: GwWeights,
    },
    Homophily {
        attr: AttrId,
    },
    Intercept,
    MainCovariate {
        attr: AttrId,
    },
    NeighborCount {
        attr: AttrId,
    },
}

/// A model with attribute names resolved to dense ids; cheap to share, holds
/// no reference to any particular network.
#[derive(Clone, Debug)]
pub struct BoundModel {
    pub(crate) terms: Vec<BoundTerm>,
    names: Vec<String>,
}

impl BoundModel {
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn term_names(&self) -> &[String] {
        &self.names
    }

    /// Evaluate g(y, x) from scratch.
    pub fn eval(&self, net: &Network) -> Result<StatVector> {
        let mut out = StatVector::zeros(self.terms.len());
        for (idx, term) in self.terms.iter().enumerate() {
            let value = match term {
                BoundTerm::Edges => net.edge_count() as f64,
                BoundTerm::Gwesp {
                    weights,
                    homogeneity,
                } => {
                    let mut total = 0.0;
                    for (i, j) in net.edges() {
                        total += weights.weight(restricted_sp(net, i, j, *homogeneity, None));
                    }
                    total
                }
                BoundTerm::Gwdeg { weights } => (0..net.node_count())
                    .map(|i| weights.weight(net.degree(i)))
                    .sum(),
                BoundTerm::Homophily { attr } => net
                    .edges()
                    .filter(|&(i, j)| net.attr_matches(*attr, i, j))
                    .count() as f64,
                BoundTerm::Intercept => {
                    net.outcomes().iter().map(|&y| y as f64).sum()
                }
                BoundTerm::MainCovariate { attr } => (0..net.node_count())
                    .filter(|&i| net.outcome(i) == 1)
                    .map(|i| net.attr_value(*attr, i))
                    .sum(),
                BoundTerm::NeighborCount { attr } => (0..net.node_count())
                    .filter(|&i| net.outcome(i) == 1)
                    .map(|i| count_ones(net, *attr, i) as f64)
                    .sum(),
            };
            if !value.is_finite() {
                return Err(ErnmError::NonFiniteStatistic {
                    term: self.names[idx].clone(),
                });
            }
            out[idx] = value;
        }
        Ok(out)
    }

    /// Change statistics for toggling the dyad {i, j}, written into `out`.
    /// `out` must have one slot per term. Equals eval(after) - eval(before)
    /// without evaluating either.
    pub fn change_edge(&self, net: &Network, i: usize, j: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.terms.len());
        let adding = !net.has_edge(i, j);
        let sign = if adding { 1.0 } else { -1.0 };
        for (idx, term) in self.terms.iter().enumerate() {
            out[idx] = match term {
                BoundTerm::Edges => sign,
                BoundTerm::Gwesp {
                    weights,
                    homogeneity,
                } => gwesp_change_edge(net, i, j, adding, weights, *homogeneity),
                BoundTerm::Gwdeg { weights } => {
                    let di = net.degree(i);
                    let dj = net.degree(j);
                    if adding {
                        weights.step_up(di) + weights.step_up(dj)
                    } else {
                        -(weights.step_up(di - 1) + weights.step_up(dj - 1))
                    }
                }
                BoundTerm::Homophily { attr } => {
                    if net.attr_matches(*attr, i, j) {
                        sign
                    } else {
                        0.0
                    }
                }
                BoundTerm::Intercept | BoundTerm::MainCovariate { .. } => 0.0,
                BoundTerm::NeighborCount { attr } => {
                    let from_i = if net.outcome(i) == 1 && net.attr_is_one(*attr, j) {
                        1.0
                    } else {
                        0.0
                    };
                    let from_j = if net.outcome(j) == 1 && net.attr_is_one(*attr, i) {
                        1.0
                    } else {
                        0.0
                    };
                    sign * (from_i + from_j)
                }
            };
        }
    }

    /// Change statistics for toggling the outcome of node `i`.
    pub fn change_node(&self, net: &Network, i: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.terms.len());
        let y_old = net.outcome(i);
        let sign = if y_old == 0 { 1.0 } else { -1.0 };
        for (idx, term) in self.terms.iter().enumerate() {
            out[idx] = match term {
                BoundTerm::Edges | BoundTerm::Gwdeg { .. } => 0.0,
                BoundTerm::Gwesp {
                    weights,
                    homogeneity,
                } => match homogeneity {
                    // Outcome-homogeneous shared partners shift when the
                    // outcome flips; fixed-covariate homogeneity does not.
                    Some(AttrId::Outcome) => gwesp_change_node(net, i, weights),
                    _ => 0.0,
                },
                BoundTerm::Homophily { attr } => match attr {
                    AttrId::Outcome => {
                        let mut matched_old = 0i64;
                        let mut matched_new = 0i64;
                        for &v in net.neighbors(i) {
                            let yv = net.outcome(v as usize);
                            if yv == y_old {
                                matched_old += 1;
                            }
                            if yv == 1 - y_old {
                                matched_new += 1;
                            }
                        }
                        (matched_new - matched_old) as f64
                    }
                    _ => 0.0,
                },
                BoundTerm::Intercept => sign,
                BoundTerm::MainCovariate { attr } => sign * net.attr_value(*attr, i),
                BoundTerm::NeighborCount { attr } => match attr {
                    AttrId::Outcome => {
                        // Ego gains/loses its positive neighbours; each
                        // positive neighbour gains/loses one positive
                        // neighbour. Both contributions share the count.
                        let positive = count_ones(net, AttrId::Outcome, i) as f64;
                        sign * 2.0 * positive
                    }
                    _ => sign * count_ones(net, *attr, i) as f64,
                },
            };
        }
    }
}

#[inline]
fn count_ones(net: &Network, attr: AttrId, i: usize) -> usize {
    net.neighbors(i)
        .iter()
        .filter(|&&v| net.attr_is_one(attr, v as usize))
        .count()
}

/// Shared partners of the pair (i, j), restricted to partners matching both
/// endpoints when a homogeneity attribute applies. `flip` reads node
/// `flip.0`'s outcome as `flip.1` (used to score an outcome toggle without
/// applying it).
fn restricted_sp(
    net: &Network,
    i: usize,
    j: usize,
    homogeneity: Option<AttrId>,
    flip: Option<(usize, u8)>,
) -> usize {
    match homogeneity {
        None => net.shared_partners(i, j),
        Some(attr) => {
            let value = |node: usize| -> f64 {
                if let Some((f, v)) = flip {
                    if f == node && attr == AttrId::Outcome {
                        return v as f64;
                    }
                }
                net.attr_value(attr, node)
            };
            let (vi, vj) = (value(i), value(j));
            if vi != vj {
                return 0;
            }
            let mut count = 0;
            net.for_common_neighbors(i, j, |w| {
                if value(w) == vi {
                    count += 1;
                }
            });
            count
        }
    }
}

fn gwesp_change_edge(
    net: &Network,
    i: usize,
    j: usize,
    adding: bool,
    weights: &GwWeights,
    homogeneity: Option<AttrId>,
) -> f64 {
    // The toggled edge contributes its own weight; every edge from i or j to
    // a common neighbour gains or loses one shared partner (the opposite
    // endpoint), subject to the homogeneity restriction.
    let own = weights.weight(restricted_sp(net, i, j, homogeneity, None));
    let mut delta = if adding { own } else { -own };
    let eligible = |a: usize, b: usize, partner: usize| -> bool {
        match homogeneity {
            None => true,
            Some(attr) => {
                net.attr_matches(attr, a, b) && net.attr_matches(attr, a, partner)
            }
        }
    };
    let mut common: Vec<usize> = Vec::new();
    net.for_common_neighbors(i, j, |w| common.push(w));
    for &w in &common {
        if eligible(i, w, j) {
            let sp = restricted_sp(net, i, w, homogeneity, None);
            delta += if adding {
                weights.step_up(sp)
            } else {
                -weights.step_up(sp - 1)
            };
        }
        if eligible(j, w, i) {
            let sp = restricted_sp(net, j, w, homogeneity, None);
            delta += if adding {
                weights.step_up(sp)
            } else {
                -weights.step_up(sp - 1)
            };
        }
    }
    delta
}

/// Outcome-homogeneous shared-partner change when y_i flips: re-score the
/// edges incident to i (their endpoint attribute changes) and the edges
/// between neighbours of i (i's eligibility as partner changes).
fn gwesp_change_node(net: &Network, i: usize, weights: &GwWeights) -> f64 {
    let homog = Some(AttrId::Outcome);
    let flipped = Some((i, 1 - net.outcome(i)));
    let mut delta = 0.0;
    let nbs = net.neighbors(i);
    for &u in nbs {
        let u = u as usize;
        let before = weights.weight(restricted_sp(net, i, u, homog, None));
        let after = weights.weight(restricted_sp(net, i, u, homog, flipped));
        delta += after - before;
    }
    for (a, &u) in nbs.iter().enumerate() {
        for &v in &nbs[a + 1..] {
            let (u, v) = (u as usize, v as usize);
            if net.has_edge(u, v) {
                let before = weights.weight(restricted_sp(net, u, v, homog, None));
                let after = weights.weight(restricted_sp(net, u, v, homog, flipped));
                delta += after - before;
            }
        }
    }
    delta
}

/// Convenience wrappers matching the operation contracts; samplers use the
/// buffer-based methods on [`BoundModel`] directly.
pub fn eval_statistics(net: &Network, model: &ModelSpec) -> Result<StatVector> {
    model.bind(net)?.eval(net)
}

pub fn change_stat_edge(net: &Network, model: &ModelSpec, i: usize, j: usize) -> Result<StatVector> {
    if i == j {
        return Err(ErnmError::SelfLoop(i.to_string()));
    }
    if i >= net.node_count() || j >= net.node_count() {
        return Err(ErnmError::NodeOutOfRange {
            index: i.max(j),
            n: net.node_count(),
        });
    }
    let bound = model.bind(net)?;
    let mut out = vec![0.0; bound.term_count()];
    bound.change_edge(net, i, j, &mut out);
    Ok(StatVector(out))
}

pub fn change_stat_node(net: &Network, model: &ModelSpec, i: usize) -> Result<StatVector> {
    if i >= net.node_count() {
        return Err(ErnmError::NodeOutOfRange {
            index: i,
            n: net.node_count(),
        });
    }
    let bound = model.bind(net)?;
    let mut out = vec![0.0; bound.term_count()];
    bound.change_node(net, i, &mut out);
    Ok(StatVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Column;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn full_term_model(outcome_attr: &str) -> ModelSpec {
        ModelSpec::new(
            ModelClass::Ernm,
            vec![
                TermSpec::Edges,
                TermSpec::Gwesp {
                    decay: 0.5,
                    homogeneity: None,
                },
                TermSpec::Gwesp {
                    decay: 0.5,
                    homogeneity: Some("grade".into()),
                },
                TermSpec::Gwesp {
                    decay: 0.3,
                    homogeneity: Some(outcome_attr.into()),
                },
                TermSpec::Gwdeg { decay: 0.5 },
                TermSpec::Homophily {
                    attr: outcome_attr.into(),
                    variant: HomophilyVariant::MatchCount,
                },
                TermSpec::Homophily {
                    attr: "grade".into(),
                    variant: HomophilyVariant::MatchCount,
                },
                TermSpec::Intercept,
                TermSpec::MainCovariate {
                    attr: "treatment".into(),
                },
                TermSpec::NeighborCount {
                    attr: NeighborAttr::Treatment,
                },
                TermSpec::NeighborCount {
                    attr: NeighborAttr::Outcome,
                },
            ],
            outcome_attr,
        )
        .unwrap()
    }

    fn random_network(n: usize, density: f64, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < density {
                    net.toggle_edge(i, j).unwrap();
                }
            }
        }
        net.set_outcomes((0..n).map(|_| rng.random_range(0..2) as u8).collect());
        net.set_treatment((0..n).map(|_| rng.random_range(0..2) as u8).collect());
        let grades: Vec<f64> = (0..n).map(|_| rng.random_range(9..13) as f64).collect();
        net.covariates_mut().insert("grade", Column::Numeric(grades));
        net
    }

    fn triangle_net() -> Network {
        let mut net = Network::empty(3);
        net.toggle_edge(0, 1).unwrap();
        net.toggle_edge(1, 2).unwrap();
        net.toggle_edge(0, 2).unwrap();
        net
    }

    #[test]
    fn empty_graph_all_zero() {
        let net = random_network(6, 0.0, 1) /* covariates only */;
        let mut net = net;
        net.set_outcomes(vec![0; 6]);
        net.set_treatment(vec![0; 6]);
        let g = eval_statistics(&net, &full_term_model("outcome")).unwrap();
        assert!(g.iter().all(|&v| v == 0.0), "{g:?}");
    }

    #[test]
    fn triangle_gwesp_closed_form() {
        let net = triangle_net();
        let model = ModelSpec::new(
            ModelClass::Ernm,
            vec![TermSpec::Gwesp {
                decay: 0.5,
                homogeneity: None,
            }],
            "outcome",
        )
        .unwrap();
        let g = eval_statistics(&net, &model).unwrap();
        // Each edge has exactly one shared partner: 3 * e^0.5 * e^-0.5 = 3.
        assert!((g[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_gwdeg_closed_form() {
        let net = triangle_net();
        let model = ModelSpec::new(
            ModelClass::Ernm,
            vec![TermSpec::Gwdeg { decay: 0.5 }],
            "outcome",
        )
        .unwrap();
        let g = eval_statistics(&net, &model).unwrap();
        let expected = 3.0 * 0.5f64.exp() * (1.0 - (1.0 - (-0.5f64).exp()).powi(2));
        assert!((g[0] - expected).abs() < 1e-12);
        assert!((g[0] - 4.1804).abs() < 1e-4);
    }

    #[test]
    fn change_edge_on_empty_graph() {
        let net = Network::empty(3);
        let model = ModelSpec::new(
            ModelClass::Ernm,
            vec![
                TermSpec::Edges,
                TermSpec::Gwesp {
                    decay: 0.5,
                    homogeneity: None,
                },
            ],
            "outcome",
        )
        .unwrap();
        let delta = change_stat_edge(&net, &model, 0, 1).unwrap();
        assert_eq!(delta.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn change_edge_closing_two_path() {
        let mut net = Network::empty(3);
        net.toggle_edge(0, 1).unwrap();
        net.toggle_edge(1, 2).unwrap();
        let model = ModelSpec::new(
            ModelClass::Ernm,
            vec![TermSpec::Gwesp {
                decay: 0.5,
                homogeneity: None,
            }],
            "outcome",
        )
        .unwrap();
        let delta = change_stat_edge(&net, &model, 0, 2).unwrap();
        assert!((delta[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn change_node_on_triangle() {
        let mut net = triangle_net();
        net.set_outcomes(vec![1, 1, 0]);
        let model = ModelSpec::new(
            ModelClass::Ernm,
            vec![
                TermSpec::Intercept,
                TermSpec::NeighborCount {
                    attr: NeighborAttr::Outcome,
                },
            ],
            "outcome",
        )
        .unwrap();
        let delta = change_stat_node(&net, &model, 2).unwrap();
        assert_eq!(delta.as_slice(), &[1.0, 4.0]);
    }

    #[test]
    fn homophily_bounded_by_edges() {
        for seed in 0..20 {
            let net = random_network(12, 0.3, seed);
            let model = ModelSpec::new(
                ModelClass::Ernm,
                vec![
                    TermSpec::Edges,
                    TermSpec::Homophily {
                        attr: "outcome".into(),
                        variant: HomophilyVariant::MatchCount,
                    },
                ],
                "outcome",
            )
            .unwrap();
            let g = eval_statistics(&net, &model).unwrap();
            assert!(g[1] <= g[0]);
        }
    }

    #[test]
    fn gwesp_small_decay_counts_supported_edges() {
        let net = random_network(10, 0.35, 7);
        let model = ModelSpec::new(
            ModelClass::Ernm,
            vec![TermSpec::Gwesp {
                decay: 1e-9,
                homogeneity: None,
            }],
            "outcome",
        )
        .unwrap();
        let g = eval_statistics(&net, &model).unwrap();
        let supported = net
            .edges()
            .filter(|&(i, j)| net.shared_partners(i, j) >= 1)
            .count() as f64;
        assert!((g[0] - supported).abs() < 1e-6);
    }

    /// Enumerate all 5-node graphs (up to sampling 200 random ones) and check
    /// GWESP never decreases when an edge is added.
    #[test]
    fn gwesp_monotone_under_edge_addition() {
        let model = ModelSpec::new(
            ModelClass::Ernm,
            vec![TermSpec::Gwesp {
                decay: 0.5,
                homogeneity: None,
            }],
            "outcome",
        )
        .unwrap();
        for bits in 0u32..1024 {
            let mut net = Network::empty(5);
            let mut b = 0;
            for i in 0..5 {
                for j in (i + 1)..5 {
                    if bits >> b & 1 == 1 {
                        net.toggle_edge(i, j).unwrap();
                    }
                    b += 1;
                }
            }
            let before = eval_statistics(&net, &model).unwrap()[0];
            for i in 0..5 {
                for j in (i + 1)..5 {
                    if !net.has_edge(i, j) {
                        let mut bigger = net.clone();
                        bigger.toggle_edge(i, j).unwrap();
                        let after = eval_statistics(&bigger, &model).unwrap()[0];
                        assert!(after >= before - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn term_order_permutation_permutes_stats() {
        let net = random_network(10, 0.3, 3);
        let model = full_term_model("outcome");
        let g = eval_statistics(&net, &model).unwrap();
        let mut reversed = model.clone();
        reversed.terms.reverse();
        let g_rev = eval_statistics(&net, &reversed).unwrap();
        let forward: Vec<f64> = g_rev.iter().rev().copied().collect();
        assert_eq!(g.as_slice(), &forward[..]);
    }

    #[test]
    fn missing_attribute_is_reported() {
        let net = Network::empty(3);
        let model = ModelSpec::new(
            ModelClass::Ernm,
            vec![TermSpec::Homophily {
                attr: "no_such".into(),
                variant: HomophilyVariant::MatchCount,
            }],
            "outcome",
        )
        .unwrap();
        assert!(matches!(
            eval_statistics(&net, &model),
            Err(ErnmError::MissingAttribute(_))
        ));
    }

    #[test]
    fn regularized_homophily_is_rejected_loudly() {
        let err = ModelSpec::new(
            ModelClass::Ernm,
            vec![TermSpec::Homophily {
                attr: "outcome".into(),
                variant: HomophilyVariant::Regularized,
            }],
            "outcome",
        )
        .unwrap_err();
        assert!(matches!(err, ErnmError::UnsupportedTerm));
    }

    fn assert_change_matches_recompute(net: &mut Network, model: &ModelSpec, seed: u64) {
        let bound = model.bind(net).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = net.node_count();
        let mut delta = vec![0.0; bound.term_count()];
        for _ in 0..40 {
            let before = bound.eval(net).unwrap();
            if rng.random::<f64>() < 0.5 {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                bound.change_edge(net, i, j, &mut delta);
                net.toggle_edge(i, j).unwrap();
            } else {
                let i = rng.random_range(0..n);
                bound.change_node(net, i, &mut delta);
                net.toggle_node_outcome(i).unwrap();
            }
            let after = bound.eval(net).unwrap();
            for t in 0..bound.term_count() {
                let expect = after[t] - before[t];
                assert!(
                    (delta[t] - expect).abs() < 1e-9,
                    "term {} delta {} recompute {}",
                    bound.term_names()[t],
                    delta[t],
                    expect
                );
            }
        }
    }

    #[test]
    fn change_stats_match_full_recompute() {
        for seed in 0..25 {
            let mut net = random_network(12, 0.25, seed);
            let model = full_term_model("outcome");
            assert_change_matches_recompute(&mut net, &model, seed.wrapping_add(1000));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn change_stats_consistent_on_random_states(seed in 0u64..10_000, density in 0.05f64..0.6) {
            let mut net = random_network(9, density, seed);
            let model = full_term_model("outcome");
            assert_change_matches_recompute(&mut net, &model, seed ^ 0xABCD);
        }
    }
}
