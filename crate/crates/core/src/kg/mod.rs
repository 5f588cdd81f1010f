//! Knowledge-graph statements and the commonsense dimension taxonomy.

mod ingest;
mod mapping;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

pub use ingest::{load_edge_files, load_edges, parse_edges, LoadOptions, LoadReport, Loaded};
pub use mapping::{classify_dimension, RelationMapping};
pub use stats::{kg_stats, KgStats};

/// The 13 knowledge dimensions a statement can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Lexical,
    Similarity,
    Distinctness,
    Taxonomic,
    PartWhole,
    Creation,
    Utility,
    Comparative,
    Quality,
    Temporal,
    Spatial,
    Motivational,
    RelationalOther,
}

impl Dimension {
    pub const COUNT: usize = 13;

    pub const ALL: [Dimension; Dimension::COUNT] = [
        Dimension::Lexical,
        Dimension::Similarity,
        Dimension::Distinctness,
        Dimension::Taxonomic,
        Dimension::PartWhole,
        Dimension::Creation,
        Dimension::Utility,
        Dimension::Comparative,
        Dimension::Quality,
        Dimension::Temporal,
        Dimension::Spatial,
        Dimension::Motivational,
        Dimension::RelationalOther,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Lexical => "lexical",
            Dimension::Similarity => "similarity",
            Dimension::Distinctness => "distinctness",
            Dimension::Taxonomic => "taxonomic",
            Dimension::PartWhole => "part-whole",
            Dimension::Creation => "creation",
            Dimension::Utility => "utility",
            Dimension::Comparative => "comparative",
            Dimension::Quality => "quality",
            Dimension::Temporal => "temporal",
            Dimension::Spatial => "spatial",
            Dimension::Motivational => "motivational",
            Dimension::RelationalOther => "relational-other",
        }
    }

    /// Position in [`Dimension::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    /// Accepts the canonical names, `_` in place of `-`, and the
    /// `desire` / `desire/goal` / `goal` aliases for [`Dimension::Motivational`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "desire" | "desire/goal" | "goal" => return Ok(Dimension::Motivational),
            "part-of" | "partwhole" => return Ok(Dimension::PartWhole),
            "other" | "relational" => return Ok(Dimension::RelationalOther),
            _ => {}
        }
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str() == norm)
            .ok_or_else(|| Error::UnknownDimension(s.to_string()))
    }
}

/// One knowledge-graph edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: String,
    pub head: String,
    pub relation: String,
    pub tail: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub qualifiers: BTreeMap<String, String>,
    pub dimension: Dimension,
}

/// Statements in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementSet {
    pub source_name: String,
    pub statements: Vec<Statement>,
}

impl StatementSet {
    pub fn new(source_name: impl Into<String>, statements: Vec<Statement>) -> Self {
        Self { source_name: source_name.into(), statements }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Statement> {
        self.statements.iter()
    }

    pub fn count(&self, dimension: Dimension) -> usize {
        self.statements.iter().filter(|s| s.dimension == dimension).count()
    }

    /// Counts for all 13 dimensions, zeros included.
    pub fn dimension_counts(&self) -> BTreeMap<Dimension, usize> {
        let mut counts: BTreeMap<Dimension, usize> = Dimension::ALL.iter().map(|d| (*d, 0)).collect();
        for s in &self.statements {
            *counts.get_mut(&s.dimension).expect("all dimensions present") += 1;
        }
        counts
    }
}

impl<'a> IntoIterator for &'a StatementSet {
    type Item = &'a Statement;
    type IntoIter = std::slice::Iter<'a, Statement>;

    fn into_iter(self) -> Self::IntoIter {
        self.statements.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_names_round_trip() {
        for d in Dimension::ALL {
            assert_eq!(d.as_str().parse::<Dimension>().unwrap(), d);
            let json = serde_json::to_string(&d).unwrap();
            assert_eq!(json, format!("\"{}\"", d.as_str()));
        }
        assert_eq!(Dimension::ALL.len(), 13);
    }

    #[test]
    fn desire_is_an_alias_for_motivational() {
        for alias in ["desire", "Desire/Goal", "goal"] {
            assert_eq!(alias.parse::<Dimension>().unwrap(), Dimension::Motivational);
        }
        assert_eq!("relational_other".parse::<Dimension>().unwrap(), Dimension::RelationalOther);
        assert!(matches!("colour".parse::<Dimension>(), Err(Error::UnknownDimension(_))));
    }

    #[test]
    fn index_matches_all_order() {
        for (i, d) in Dimension::ALL.iter().enumerate() {
            assert_eq!(d.index(), i);
        }
    }
}
