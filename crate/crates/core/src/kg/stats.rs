use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Dimension, StatementSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgStats {
    pub total: usize,
    /// All 13 dimensions, zeros included.
    pub per_dimension: BTreeMap<Dimension, usize>,
    pub per_relation: BTreeMap<String, usize>,
    /// Distinct head/tail texts.
    pub node_count: usize,
}

pub fn kg_stats(set: &StatementSet) -> KgStats {
    let mut per_relation = BTreeMap::new();
    let mut nodes = HashSet::new();
    for s in set {
        *per_relation.entry(s.relation.clone()).or_insert(0) += 1;
        nodes.insert(s.head.as_str());
        nodes.insert(s.tail.as_str());
    }
    KgStats { total: set.len(), per_dimension: set.dimension_counts(), per_relation, node_count: nodes.len() }
}
