use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::Dimension;
use crate::{Error, Result};

const DEFAULT_MAPPING: &str = include_str!("../../data/relation_dimensions.tsv");

/// Relation identifier to dimension table, loaded from a two-column TSV.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationMapping {
    map: HashMap<String, Dimension>,
}

impl RelationMapping {
    /// Lines are `relation<TAB>dimension`. `#` comments, blank lines and a
    /// `relation<TAB>dimension` header are skipped.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let parse_err = |message: String| Error::Parse { source_name: source_name.to_string(), line: i + 1, message };
            if cols.len() != 2 {
                return Err(parse_err(format!("expected 2 columns, found {}", cols.len())));
            }
            let (relation, dim) = (cols[0].trim(), cols[1].trim());
            if relation.eq_ignore_ascii_case("relation") && dim.eq_ignore_ascii_case("dimension") {
                continue;
            }
            if relation.is_empty() {
                return Err(parse_err("empty relation".into()));
            }
            let dimension: Dimension = dim.parse().map_err(|_| parse_err(format!("unknown dimension `{dim}`")))?;
            if let Some(prev) = map.insert(relation.to_string(), dimension) {
                if prev != dimension {
                    return Err(parse_err(format!("relation `{relation}` mapped to both {prev} and {dimension}")));
                }
            }
        }
        Ok(Self { map })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The bundled table covering ConceptNet, ATOMIC and the other CSKG sources.
    pub fn default_cskg() -> Self {
        Self::parse(DEFAULT_MAPPING, "relation_dimensions.tsv").expect("bundled mapping is valid")
    }

    pub fn insert(&mut self, relation: impl Into<String>, dimension: Dimension) {
        self.map.insert(relation.into(), dimension);
    }

    pub fn get(&self, relation: &str) -> Option<Dimension> {
        self.map.get(relation).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `(relation, dimension)` pairs sorted by relation.
    pub fn entries(&self) -> Vec<(&str, Dimension)> {
        let mut v: Vec<_> = self.map.iter().map(|(r, d)| (r.as_str(), *d)).collect();
        v.sort();
        v
    }
}

impl FromIterator<(String, Dimension)> for RelationMapping {
    fn from_iter<I: IntoIterator<Item = (String, Dimension)>>(iter: I) -> Self {
        Self { map: iter.into_iter().collect() }
    }
}

pub fn classify_dimension(relation: &str, mapping: &RelationMapping) -> Result<Dimension> {
    mapping.get(relation).ok_or_else(|| Error::UnknownRelation(relation.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_lookups() {
        let m = RelationMapping::default_cskg();
        assert_eq!(classify_dimension("/r/IsA", &m).unwrap(), Dimension::Taxonomic);
        assert_eq!(classify_dimension("/r/AtLocation", &m).unwrap(), Dimension::Spatial);
        assert_eq!(classify_dimension("at:xIntent", &m).unwrap(), Dimension::Motivational);
        assert_eq!(
            classify_dimension("/r/Causes", &m).unwrap(),
            classify_dimension("/r/Causes", &m).unwrap()
        );
    }

    #[test]
    fn default_table_covers_every_dimension() {
        let m = RelationMapping::default_cskg();
        for d in Dimension::ALL {
            assert!(m.entries().iter().any(|(_, x)| *x == d), "{d} has no relation");
        }
    }

    #[test]
    fn unknown_relation_is_a_lookup_error() {
        let m = RelationMapping::default_cskg();
        assert!(matches!(classify_dimension("/r/Nope", &m), Err(Error::UnknownRelation(r)) if r == "/r/Nope"));
    }

    #[test]
    fn parse_accepts_alias_and_rejects_conflicts() {
        let m = RelationMapping::parse("relation\tdimension\n# c\n/r/Desires\tdesire\n", "t").unwrap();
        assert_eq!(m.get("/r/Desires"), Some(Dimension::Motivational));
        let err = RelationMapping::parse("/r/A\ttemporal\n/r/A\tspatial\n", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = RelationMapping::parse("/r/A\ttemporal\textra\n", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
