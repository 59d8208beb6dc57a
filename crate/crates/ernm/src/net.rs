//! Undirected binary networks with binary nodal outcomes, treatments and
//! fixed covariates, plus the structural summaries (degree, edgewise shared
//! partners, geodesics, subgroup statistics) used by model terms and
//! goodness-of-fit.
//!
//! Adjacency is stored twice: a dyad bitmap for O(1) membership tests and
//! toggles, and per-node sorted neighbour lists for fast common-neighbour
//! iteration. Both are updated on every toggle; change-statistic evaluation
//! dominates sampler runtime and leans on both views.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ErnmError, Result};

/// A fixed per-node attribute column. Numeric columns keep their values;
/// string columns are coded to dense integer levels at load time.
#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical { codes: Vec<u32>, levels: Vec<String> },
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    fn value(&self, i: usize) -> f64 {
        match self {
            Column::Numeric(v) => v[i],
            Column::Categorical { codes, .. } => codes[i] as f64,
        }
    }

    fn matches(&self, i: usize, j: usize) -> bool {
        match self {
            Column::Numeric(v) => v[i] == v[j],
            Column::Categorical { codes, .. } => codes[i] == codes[j],
        }
    }
}

/// Named fixed covariate columns, all of length `n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CovariateTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
    columns: Vec<Column>,
}

impl CovariateTable {
    pub fn insert(&mut self, name: &str, column: Column) {
        if let Some(&i) = self.index.get(name) {
            self.columns[i] = column;
        } else {
            self.index.insert(name.to_string(), self.columns.len());
            self.names.push(name.to_string());
            self.columns.push(column);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Column> {
        self.index.get(name).map(|&i| &self.columns[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Resolved reference to a node attribute, used on the hot path so term
/// evaluation never looks names up by string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrId {
    Outcome,
    Treatment,
    Covariate(usize),
}

/// Histogram bin key; geodesic histograms bucket disconnected pairs under a
/// distinguished key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HistBin {
    Value(u32),
    Unreachable,
}

impl std::fmt::Display for HistBin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HistBin::Value(v) => write!(f, "{v}"),
            HistBin::Unreachable => write!(f, "unreachable"),
        }
    }
}

/// Integer-keyed histogram with nonnegative counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: BTreeMap<HistBin, u64>,
}

impl Histogram {
    pub fn bump(&mut self, key: HistBin) {
        *self.bins.entry(key).or_insert(0) += 1;
    }

    pub fn count(&self, key: HistBin) -> u64 {
        self.bins.get(&key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }
}

/// Subgroup structural summary: degree histogram of the group's nodes, the
/// share of edges with both endpoints in the group and the share of
/// triangles entirely inside it. Proportions are `None` when the network has
/// no edges (or no triangles) to take a share of.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupStats {
    pub degree: Histogram,
    pub edge_proportion: Option<f64>,
    pub triad_proportion: Option<f64>,
}

/// Network state: undirected simple graph over `n` nodes with a binary
/// outcome and treatment per node and fixed covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    n: usize,
    labels: Vec<String>,
    /// Upper-triangular dyad bitmap, words of 64 dyads.
    dyad_bits: Vec<u64>,
    neighbors: Vec<Vec<u32>>,
    edge_count: usize,
    outcomes: Vec<u8>,
    treatment: Vec<u8>,
    covariates: CovariateTable,
}

impl Network {
    /// Edge-less network with all-zero outcomes and treatments and labels
    /// "0".."n-1".
    pub fn empty(n: usize) -> Self {
        let dyads = n * n.saturating_sub(1) / 2;
        Network {
            n,
            labels: (0..n).map(|i| i.to_string()).collect(),
            dyad_bits: vec![0u64; dyads.div_ceil(64)],
            neighbors: vec![Vec::new(); n],
            edge_count: 0,
            outcomes: vec![0; n],
            treatment: vec![0; n],
            covariates: CovariateTable::default(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn dyad_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn set_labels(&mut self, labels: Vec<String>) {
        assert_eq!(labels.len(), self.n);
        self.labels = labels;
    }

    pub fn covariates(&self) -> &CovariateTable {
        &self.covariates
    }

    pub fn covariates_mut(&mut self) -> &mut CovariateTable {
        &mut self.covariates
    }

    fn dyad_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        // Row-major upper triangle: row i starts after i rows of shrinking width.
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn check_dyad(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n {
            return Err(ErnmError::NodeOutOfRange { index: i, n: self.n });
        }
        if j >= self.n {
            return Err(ErnmError::NodeOutOfRange { index: j, n: self.n });
        }
        if i == j {
            return Err(ErnmError::SelfLoop(self.labels[i].clone()));
        }
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self.dyad_index(a, b);
        self.dyad_bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    /// Flip membership of the dyad {i, j}. Both adjacency views and the edge
    /// count stay consistent. Toggling twice restores the original network.
    pub fn toggle_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_dyad(i, j)?;
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self.dyad_index(a, b);
        let word = &mut self.dyad_bits[idx / 64];
        let mask = 1u64 << (idx % 64);
        if *word & mask == 0 {
            *word |= mask;
            insert_sorted(&mut self.neighbors[a], b as u32);
            insert_sorted(&mut self.neighbors[b], a as u32);
            self.edge_count += 1;
        } else {
            *word &= !mask;
            remove_sorted(&mut self.neighbors[a], b as u32);
            remove_sorted(&mut self.neighbors[b], a as u32);
            self.edge_count -= 1;
        }
        Ok(())
    }

    /// Flip the binary outcome of node `i`.
    pub fn toggle_node_outcome(&mut self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(ErnmError::NodeOutOfRange { index: i, n: self.n });
        }
        self.outcomes[i] ^= 1;
        Ok(())
    }

    pub fn outcome(&self, i: usize) -> u8 {
        self.outcomes[i]
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn set_outcomes(&mut self, outcomes: Vec<u8>) {
        assert_eq!(outcomes.len(), self.n);
        debug_assert!(outcomes.iter().all(|&v| v <= 1));
        self.outcomes = outcomes;
    }

    pub fn treated(&self, i: usize) -> u8 {
        self.treatment[i]
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn set_treatment(&mut self, treatment: Vec<u8>) {
        assert_eq!(treatment.len(), self.n);
        debug_assert!(treatment.iter().all(|&v| v <= 1));
        self.treatment = treatment;
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Sorted neighbour list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    /// Iterate edges as ordered pairs (i < j).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, nb)| {
            nb.iter()
                .map(move |&j| (i, j as usize))
                .filter(|&(i, j)| i < j)
        })
    }

    /// Resolve an attribute name; `outcome`/`treatment` resolution is decided
    /// by the caller (model specs name their own outcome attribute).
    pub fn resolve_covariate(&self, name: &str) -> Result<usize> {
        self.covariates
            .position(name)
            .ok_or_else(|| ErnmError::MissingAttribute(name.to_string()))
    }

    #[inline]
    pub fn attr_value(&self, attr: AttrId, i: usize) -> f64 {
        match attr {
            AttrId::Outcome => self.outcomes[i] as f64,
            AttrId::Treatment => self.treatment[i] as f64,
            AttrId::Covariate(c) => self.covariates.column(c).value(i),
        }
    }

    #[inline]
    pub fn attr_matches(&self, attr: AttrId, i: usize, j: usize) -> bool {
        match attr {
            AttrId::Outcome => self.outcomes[i] == self.outcomes[j],
            AttrId::Treatment => self.treatment[i] == self.treatment[j],
            AttrId::Covariate(c) => self.covariates.column(c).matches(i, j),
        }
    }

    /// Binary attribute indicator (1 exactly when the value is 1).
    #[inline]
    pub fn attr_is_one(&self, attr: AttrId, i: usize) -> bool {
        match attr {
            AttrId::Outcome => self.outcomes[i] == 1,
            AttrId::Treatment => self.treatment[i] == 1,
            AttrId::Covariate(c) => self.covariates.column(c).value(i) == 1.0,
        }
    }

    /// Number of common neighbours of i and j.
    pub fn shared_partners(&self, i: usize, j: usize) -> usize {
        sorted_intersection_count(&self.neighbors[i], &self.neighbors[j])
    }

    /// Visit every common neighbour of i and j.
    #[inline]
    pub fn for_common_neighbors(&self, i: usize, j: usize, mut f: impl FnMut(usize)) {
        let (mut a, mut b) = (self.neighbors[i].iter(), self.neighbors[j].iter());
        let (mut x, mut y) = (a.next(), b.next());
        while let (Some(&u), Some(&v)) = (x, y) {
            match u.cmp(&v) {
                std::cmp::Ordering::Less => x = a.next(),
                std::cmp::Ordering::Greater => y = b.next(),
                std::cmp::Ordering::Equal => {
                    f(u as usize);
                    x = a.next();
                    y = b.next();
                }
            }
        }
    }

    /// Reset edges and outcomes to zero, keeping treatments, covariates and
    /// labels. This is the initial state of the temporal simulator.
    pub fn clear_dynamic_state(&mut self) {
        self.dyad_bits.iter_mut().for_each(|w| *w = 0);
        self.neighbors.iter_mut().for_each(|nb| nb.clear());
        self.edge_count = 0;
        self.outcomes.iter_mut().for_each(|y| *y = 0);
    }

    pub fn degree_distribution(&self) -> Histogram {
        let mut h = Histogram::default();
        for nb in &self.neighbors {
            h.bump(HistBin::Value(nb.len() as u32));
        }
        h
    }

    /// For each existing edge, the number of common neighbours of its
    /// endpoints. Counts sum to the edge count.
    pub fn esp_distribution(&self) -> Histogram {
        let mut h = Histogram::default();
        for (i, j) in self.edges() {
            h.bump(HistBin::Value(self.shared_partners(i, j) as u32));
        }
        h
    }

    /// Shortest-path-length histogram over unordered node pairs, found by a
    /// BFS from every node; disconnected pairs land in the unreachable bin.
    /// Counts sum to n(n-1)/2.
    pub fn geodesic_distribution(&self) -> Histogram {
        let mut h = Histogram::default();
        let mut dist = vec![u32::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        let mut reached_pairs = 0u64;
        for s in 0..self.n {
            dist.iter_mut().for_each(|d| *d = u32::MAX);
            dist[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &self.neighbors[u] {
                    let v = v as usize;
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            // Count each unordered pair once.
            for (t, &d) in dist.iter().enumerate().skip(s + 1) {
                if d != u32::MAX {
                    h.bump(HistBin::Value(d));
                    reached_pairs += 1;
                }
                let _ = t;
            }
        }
        let unreachable = (self.n * (self.n - 1) / 2) as u64 - reached_pairs;
        if unreachable > 0 {
            h.bins.insert(HistBin::Unreachable, unreachable);
        }
        h
    }

    /// Degree histogram, edge share and triangle share for the nodes where
    /// `group[i]` is true.
    pub fn subgroup_stats(&self, group: &[bool]) -> SubgroupStats {
        assert_eq!(group.len(), self.n);
        let mut degree = Histogram::default();
        for (i, nb) in self.neighbors.iter().enumerate() {
            if group[i] {
                degree.bump(HistBin::Value(nb.len() as u32));
            }
        }
        let mut group_edges = 0u64;
        let mut triangles = 0u64;
        let mut group_triangles = 0u64;
        for (i, j) in self.edges() {
            if group[i] && group[j] {
                group_edges += 1;
            }
            // Each triangle counted once via its lowest edge and a higher third node.
            self.for_common_neighbors(i, j, |w| {
                if w > j {
                    triangles += 1;
                    if group[i] && group[j] && group[w] {
                        group_triangles += 1;
                    }
                }
            });
        }
        let edge_proportion = if self.edge_count > 0 {
            Some(group_edges as f64 / self.edge_count as f64)
        } else {
            None
        };
        let triad_proportion = if triangles > 0 {
            Some(group_triangles as f64 / triangles as f64)
        } else {
            None
        };
        SubgroupStats {
            degree,
            edge_proportion,
            triad_proportion,
        }
    }
}

fn insert_sorted(v: &mut Vec<u32>, value: u32) {
    match v.binary_search(&value) {
        Ok(_) => {}
        Err(pos) => v.insert(pos, value),
    }
}

fn remove_sorted(v: &mut Vec<u32>, value: u32) {
    if let Ok(pos) = v.binary_search(&value) {
        v.remove(pos);
    }
}

fn sorted_intersection_count(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Which node-table columns hold the binary outcome and treatment. Columns
/// named here must exist and be 0/1; all other columns become covariates.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NetworkSchema {
    pub outcome: Option<String>,
    pub treatment: Option<String>,
}

/// Load a network from node-table and edge-list CSV readers.
///
/// Node table: required `id` column, arbitrary further columns. Edge list:
/// `from,to` columns referencing node ids. Duplicate and reversed edge rows
/// collapse to a single stored edge; self-loops are rejected.
pub fn load_network<R1: Read, R2: Read>(
    node_table: R1,
    edge_list: R2,
    schema: &NetworkSchema,
) -> Result<Network> {
    let mut nodes = csv::Reader::from_reader(node_table);
    let headers = nodes.headers()?.clone();
    let id_col = headers
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| ErnmError::MissingColumn("id".into()))?;

    let mut labels: Vec<String> = Vec::new();
    let mut raw_columns: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for record in nodes.records() {
        let record = record?;
        for (c, field) in record.iter().enumerate() {
            raw_columns[c].push(field.to_string());
        }
        labels.push(record.get(id_col).unwrap_or_default().to_string());
    }

    let n = labels.len();
    let mut index: HashMap<String, usize> = HashMap::with_capacity(n);
    for (i, label) in labels.iter().enumerate() {
        if index.insert(label.clone(), i).is_some() {
            return Err(ErnmError::DuplicateNodeId(label.clone()));
        }
    }

    let mut net = Network::empty(n);
    net.set_labels(labels);

    let parse_binary = |column: &str, raw: &[String]| -> Result<Vec<u8>> {
        raw.iter()
            .enumerate()
            .map(|(row, v)| match v.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(ErnmError::NonBinaryValue {
                    column: column.to_string(),
                    value: other.to_string(),
                    row: row + 1,
                }),
            })
            .collect()
    };

    for (c, header) in headers.iter().enumerate() {
        if c == id_col {
            continue;
        }
        let raw = &raw_columns[c];
        if Some(header) == schema.outcome.as_deref() {
            net.set_outcomes(parse_binary(header, raw)?);
        } else if Some(header) == schema.treatment.as_deref() {
            net.set_treatment(parse_binary(header, raw)?);
        } else {
            net.covariates_mut().insert(header, parse_column(raw));
        }
    }
    if let Some(col) = &schema.outcome {
        if !headers.iter().any(|h| h == col) {
            return Err(ErnmError::MissingColumn(col.clone()));
        }
    }
    if let Some(col) = &schema.treatment {
        if !headers.iter().any(|h| h == col) {
            return Err(ErnmError::MissingColumn(col.clone()));
        }
    }

    let mut edges = csv::Reader::from_reader(edge_list);
    let eheaders = edges.headers()?.clone();
    let from_col = eheaders
        .iter()
        .position(|h| h == "from")
        .ok_or_else(|| ErnmError::MissingColumn("from".into()))?;
    let to_col = eheaders
        .iter()
        .position(|h| h == "to")
        .ok_or_else(|| ErnmError::MissingColumn("to".into()))?;
    for record in edges.records() {
        let record = record?;
        let from = record.get(from_col).unwrap_or_default().trim();
        let to = record.get(to_col).unwrap_or_default().trim();
        let &i = index
            .get(from)
            .ok_or_else(|| ErnmError::UnknownNodeId(from.to_string()))?;
        let &j = index
            .get(to)
            .ok_or_else(|| ErnmError::UnknownNodeId(to.to_string()))?;
        if i == j {
            return Err(ErnmError::SelfLoop(from.to_string()));
        }
        if !net.has_edge(i, j) {
            net.toggle_edge(i, j)?;
        }
    }
    Ok(net)
}

/// Load a network from node/edge CSV files on disk.
pub fn load_network_files(
    node_path: &Path,
    edge_path: &Path,
    schema: &NetworkSchema,
) -> Result<Network> {
    let nodes = std::fs::File::open(node_path)?;
    let edges = std::fs::File::open(edge_path)?;
    load_network(nodes, edges, schema)
}

fn parse_column(raw: &[String]) -> Column {
    let numeric: Option<Vec<f64>> = raw.iter().map(|v| v.trim().parse::<f64>().ok()).collect();
    match numeric {
        Some(values) => Column::Numeric(values),
        None => {
            let mut levels: Vec<String> = Vec::new();
            let mut level_index: HashMap<&str, u32> = HashMap::new();
            let codes = raw
                .iter()
                .map(|v| {
                    let v = v.trim();
                    *level_index.entry(v).or_insert_with(|| {
                        levels.push(v.to_string());
                        (levels.len() - 1) as u32
                    })
                })
                .collect();
            Column::Categorical { codes, levels }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> Network {
        let mut net = Network::empty(3);
        net.toggle_edge(0, 1).unwrap();
        net.toggle_edge(1, 2).unwrap();
        net.toggle_edge(0, 2).unwrap();
        net
    }

    fn path3() -> Network {
        let mut net = Network::empty(3);
        net.toggle_edge(0, 1).unwrap();
        net.toggle_edge(1, 2).unwrap();
        net
    }

    #[test]
    fn load_path_graph() {
        let nodes = "id\n1\n2\n3\n";
        let edges = "from,to\n1,2\n2,3\n";
        let net = load_network(
            nodes.as_bytes(),
            edges.as_bytes(),
            &NetworkSchema::default(),
        )
        .unwrap();
        assert_eq!(net.edge_count(), 2);
        assert_eq!(
            (net.degree(0), net.degree(1), net.degree(2)),
            (1, 2, 1)
        );
    }

    #[test]
    fn load_deduplicates_reversed_edges() {
        let nodes = "id\n1\n2\n";
        let edges = "from,to\n1,2\n2,1\n";
        let net = load_network(
            nodes.as_bytes(),
            edges.as_bytes(),
            &NetworkSchema::default(),
        )
        .unwrap();
        assert_eq!(net.edge_count(), 1);
    }

    #[test]
    fn load_rejects_self_loop_and_unknown_id() {
        let nodes = "id\n1\n2\n3\n4\n";
        let selfloop = "from,to\n4,4\n";
        let err = load_network(
            nodes.as_bytes(),
            selfloop.as_bytes(),
            &NetworkSchema::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ErnmError::SelfLoop(_)));

        let unknown = "from,to\n1,9\n";
        let err = load_network(
            nodes.as_bytes(),
            unknown.as_bytes(),
            &NetworkSchema::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ErnmError::UnknownNodeId(_)));
    }

    #[test]
    fn load_rejects_non_binary_outcome() {
        let nodes = "id,smoke\n1,0\n2,2\n";
        let edges = "from,to\n";
        let schema = NetworkSchema {
            outcome: Some("smoke".into()),
            treatment: None,
        };
        let err = load_network(nodes.as_bytes(), edges.as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, ErnmError::NonBinaryValue { .. }));
    }

    #[test]
    fn load_rejects_missing_declared_column() {
        let nodes = "id\n1\n";
        let edges = "from,to\n";
        let schema = NetworkSchema {
            outcome: Some("smoke".into()),
            treatment: None,
        };
        let err = load_network(nodes.as_bytes(), edges.as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, ErnmError::MissingColumn(_)));
    }

    #[test]
    fn toggle_edge_involution() {
        let mut net = Network::empty(3);
        net.toggle_edge(0, 1).unwrap();
        assert_eq!(net.edge_count(), 1);
        let snapshot = net.clone();
        net.toggle_edge(1, 2).unwrap();
        net.toggle_edge(1, 2).unwrap();
        assert_eq!(net, snapshot);
    }

    #[test]
    fn toggle_rejects_self_loop_and_out_of_range() {
        let mut net = Network::empty(3);
        assert!(matches!(
            net.toggle_edge(1, 1),
            Err(ErnmError::SelfLoop(_))
        ));
        assert!(matches!(
            net.toggle_edge(0, 3),
            Err(ErnmError::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn toggle_outcome_involution() {
        let mut net = Network::empty(3);
        net.toggle_node_outcome(1).unwrap();
        assert_eq!(net.outcomes(), &[0, 1, 0]);
        net.toggle_node_outcome(1).unwrap();
        assert_eq!(net.outcomes(), &[0, 0, 0]);
    }

    #[test]
    fn triangle_toggle_updates_esp() {
        let mut net = triangle();
        net.toggle_edge(0, 1).unwrap();
        let esp = net.esp_distribution();
        assert_eq!(esp.count(HistBin::Value(0)), 2);
        assert_eq!(esp.total(), 2);
    }

    #[test]
    fn triangle_distributions() {
        let net = triangle();
        assert_eq!(net.degree_distribution().count(HistBin::Value(2)), 3);
        assert_eq!(net.esp_distribution().count(HistBin::Value(1)), 3);
        assert_eq!(
            net.geodesic_distribution().count(HistBin::Value(1)),
            3
        );
    }

    #[test]
    fn empty_network_distributions() {
        let net = Network::empty(4);
        assert_eq!(net.degree_distribution().count(HistBin::Value(0)), 4);
        assert!(net.esp_distribution().bins.is_empty());
        let geo = net.geodesic_distribution();
        assert_eq!(geo.count(HistBin::Unreachable), 6);
        assert_eq!(geo.total(), 6);
    }

    #[test]
    fn path_geodesics() {
        let net = path3();
        let geo = net.geodesic_distribution();
        assert_eq!(geo.count(HistBin::Value(1)), 2);
        assert_eq!(geo.count(HistBin::Value(2)), 1);
    }

    #[test]
    fn subgroup_triangle_all_in_group() {
        let mut net = triangle();
        net.set_outcomes(vec![1, 1, 1]);
        let group: Vec<bool> = net.outcomes().iter().map(|&y| y == 1).collect();
        let stats = net.subgroup_stats(&group);
        assert_eq!(stats.edge_proportion, Some(1.0));
        assert_eq!(stats.triad_proportion, Some(1.0));
    }

    #[test]
    fn subgroup_triangle_partial_group() {
        let mut net = triangle();
        net.set_outcomes(vec![1, 1, 0]);
        let group: Vec<bool> = net.outcomes().iter().map(|&y| y == 1).collect();
        let stats = net.subgroup_stats(&group);
        assert_eq!(stats.edge_proportion, Some(1.0 / 3.0));
        assert_eq!(stats.triad_proportion, Some(0.0));
    }

    #[test]
    fn subgroup_edgeless_undefined() {
        let net = Network::empty(3);
        let stats = net.subgroup_stats(&[true, true, true]);
        assert_eq!(stats.edge_proportion, None);
        assert_eq!(stats.triad_proportion, None);
    }

    /// All-pairs shortest paths by boolean matrix powers, used as an
    /// independent oracle for the BFS geodesics.
    fn geodesics_by_matrix_powers(net: &Network) -> Histogram {
        let n = net.node_count();
        let mut reach: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| net.has_edge(i, j)).collect())
            .collect();
        let mut hist = Histogram::default();
        let mut settled: Vec<Vec<bool>> = vec![vec![false; n]; n];
        let mut remaining = n * (n - 1) / 2;
        for d in 1..=n {
            for i in 0..n {
                for j in (i + 1)..n {
                    if reach[i][j] && !settled[i][j] {
                        settled[i][j] = true;
                        hist.bump(HistBin::Value(d as u32));
                        remaining -= 1;
                    }
                }
            }
            // One more matrix "power": extend reachability by one hop.
            let prev = reach.clone();
            for i in 0..n {
                for j in 0..n {
                    if !reach[i][j] {
                        reach[i][j] =
                            (0..n).any(|k| prev[i][k] && net.has_edge(k, j));
                    }
                }
            }
        }
        if remaining > 0 {
            hist.bins.insert(HistBin::Unreachable, remaining as u64);
        }
        hist
    }

    proptest! {
        #[test]
        fn geodesics_match_matrix_power_oracle(
            n in 2usize..=8,
            edges in proptest::collection::vec((0usize..8, 0usize..8), 0..24)
        ) {
            let mut net = Network::empty(n);
            for (i, j) in edges {
                let (i, j) = (i % n, j % n);
                if i != j {
                    net.toggle_edge(i, j).unwrap();
                }
            }
            prop_assert_eq!(net.geodesic_distribution(), geodesics_by_matrix_powers(&net));
        }

        #[test]
        fn toggle_sequences_keep_views_consistent(
            n in 2usize..=10,
            toggles in proptest::collection::vec((0usize..10, 0usize..10), 1..60)
        ) {
            let mut net = Network::empty(n);
            for (i, j) in toggles {
                let (i, j) = (i % n, j % n);
                if i == j {
                    continue;
                }
                net.toggle_edge(i, j).unwrap();
                // Degrees recomputed from the bitmap must match neighbour lists.
                for v in 0..n {
                    let bitmap_degree = (0..n).filter(|&u| net.has_edge(v, u)).count();
                    prop_assert_eq!(bitmap_degree, net.degree(v));
                }
                prop_assert!(net.neighbors(i).windows(2).all(|w| w[0] < w[1]));
            }
            let esp = net.esp_distribution();
            prop_assert_eq!(esp.total(), net.edge_count() as u64);
            let geo = net.geodesic_distribution();
            prop_assert_eq!(geo.total(), (n * (n - 1) / 2) as u64);
        }

        #[test]
        fn toggle_twice_is_identity(
            n in 2usize..=10,
            seq in proptest::collection::vec((0usize..10, 0usize..10), 1..20)
        ) {
            let mut net = Network::empty(n);
            for (k, &(i, j)) in seq.iter().enumerate() {
                let (i, j) = (i % n, j % n);
                if i != j && k % 2 == 0 {
                    net.toggle_edge(i, j).unwrap();
                }
            }
            let before = net.clone();
            for &(i, j) in &seq {
                let (i, j) = (i % n, j % n);
                if i != j {
                    net.toggle_edge(i, j).unwrap();
                    net.toggle_edge(i, j).unwrap();
                }
            }
            prop_assert_eq!(net, before);
        }
    }
}
