use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use super::{RelationMapping, Statement, StatementSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Fail on relations missing from the mapping instead of dropping the rows.
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows: usize,
    pub loaded: usize,
    pub dropped: usize,
    /// Dropped rows per unmapped relation.
    pub unmapped: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub set: StatementSet,
    pub report: LoadReport,
}

struct Columns {
    width: usize,
    id: usize,
    node1: usize,
    relation: usize,
    node2: usize,
    node1_label: Option<usize>,
    node2_label: Option<usize>,
    qualifiers: Vec<(usize, String)>,
}

impl Columns {
    fn from_header(header: &str, source_name: &str) -> Result<Self> {
        let names: Vec<&str> = header.split('\t').map(str::trim).collect();
        let find = |name: &str| names.iter().position(|n| *n == name);
        let require = |name: &str| {
            find(name).ok_or_else(|| Error::Parse {
                source_name: source_name.to_string(),
                line: 1,
                message: format!("header is missing the `{name}` column"),
            })
        };
        let (id, node1, relation, node2) = (require("id")?, require("node1")?, require("relation")?, require("node2")?);
        let node1_label = find("node1;label");
        let node2_label = find("node2;label");
        let reserved = [Some(id), Some(node1), Some(relation), Some(node2), node1_label, node2_label];
        let qualifiers = names
            .iter()
            .enumerate()
            .filter(|(i, _)| !reserved.contains(&Some(*i)))
            .map(|(i, n)| (i, n.to_string()))
            .collect();
        Ok(Self { width: names.len(), id, node1, relation, node2, node1_label, node2_label, qualifiers })
    }
}

/// Human-readable text for a node: the label when present, otherwise the
/// identifier with punctuation turned into spaces. ConceptNet-style
/// `/c/<lang>/<term>/...` identifiers contribute only their term.
fn node_text(id: &str, label: Option<&str>) -> String {
    if let Some(label) = label.and_then(clean_label) {
        return label;
    }
    let term = if let Some(rest) = id.strip_prefix("/c/") {
        rest.split('/').nth(1).unwrap_or(rest)
    } else {
        id
    };
    normalize_identifier(term)
}

/// KGTK label cells may hold `|`-separated alternatives, quoted strings and
/// language tags; keep the first alternative's bare text.
fn clean_label(cell: &str) -> Option<String> {
    let first = cell.split('|').next()?.trim();
    let mut text = first;
    if let Some(at) = text.rfind("'@") {
        text = &text[..=at];
    }
    let text = text.trim_matches(|c| c == '"' || c == '\'').trim();
    if text.is_empty() {
        None
    } else {
        Some(text.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

fn normalize_identifier(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses a tab-separated edge file with a header row naming at least
/// `id`, `node1`, `relation` and `node2`. `node1;label` / `node2;label`
/// supply node text; every other column becomes a qualifier.
pub fn parse_edges<R: BufRead>(
    mut reader: R,
    source_name: &str,
    mapping: &RelationMapping,
    options: LoadOptions,
) -> Result<Loaded> {
    let mut line = String::new();
    let io_err = |e| Error::io(Path::new(source_name), e);
    if reader.read_line(&mut line).map_err(io_err)? == 0 {
        return Err(Error::Parse { source_name: source_name.into(), line: 1, message: "missing header row".into() });
    }
    let columns = Columns::from_header(line.trim_end_matches(['\n', '\r']), source_name)?;

    let mut statements = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut report = LoadReport::default();
    let mut line_no = 1;
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(io_err)? == 0 {
            break;
        }
        line_no += 1;
        let row = line.trim_end_matches(['\n', '\r']);
        if row.trim().is_empty() {
            continue;
        }
        let parse_err =
            |message: String| Error::Parse { source_name: source_name.to_string(), line: line_no, message };
        let cells: Vec<&str> = row.split('\t').collect();
        if cells.len() != columns.width {
            return Err(parse_err(format!("expected {} columns, found {}", columns.width, cells.len())));
        }
        report.rows += 1;

        let relation = cells[columns.relation].trim();
        let Some(dimension) = mapping.get(relation) else {
            report.dropped += 1;
            *report.unmapped.entry(relation.to_string()).or_default() += 1;
            continue;
        };

        let id = cells[columns.id].trim();
        if id.is_empty() {
            return Err(parse_err("empty id".into()));
        }
        if !seen_ids.insert(id.to_string()) {
            return Err(parse_err(format!("duplicate id `{id}`")));
        }
        let head = node_text(cells[columns.node1].trim(), columns.node1_label.map(|i| cells[i]));
        let tail = node_text(cells[columns.node2].trim(), columns.node2_label.map(|i| cells[i]));
        if head.is_empty() {
            return Err(parse_err("empty head".into()));
        }
        if tail.is_empty() {
            return Err(parse_err("empty tail".into()));
        }
        let qualifiers = columns
            .qualifiers
            .iter()
            .filter_map(|(i, name)| {
                let v = cells[*i].trim();
                (!v.is_empty()).then(|| (name.clone(), v.to_string()))
            })
            .collect();
        statements.push(Statement {
            id: id.to_string(),
            head,
            relation: relation.to_string(),
            tail,
            qualifiers,
            dimension,
        });
    }

    if options.strict && !report.unmapped.is_empty() {
        return Err(Error::UnmappedRelations(report.unmapped.keys().cloned().collect()));
    }
    report.loaded = statements.len();
    Ok(Loaded { set: StatementSet::new(source_name, statements), report })
}

pub fn load_edges(path: &Path, mapping: &RelationMapping, options: LoadOptions) -> Result<Loaded> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    parse_edges(BufReader::with_capacity(1 << 16, file), &name, mapping, options)
}

/// Loads several edge files, one worker per file, and concatenates them in
/// argument order. Ids must be unique across files.
pub fn load_edge_files(paths: &[PathBuf], mapping: &RelationMapping, options: LoadOptions) -> Result<Loaded> {
    if paths.is_empty() {
        return Err(Error::Config("no edge files given".into()));
    }
    let parts: Vec<Loaded> = paths.par_iter().map(|p| load_edges(p, mapping, options)).collect::<Result<_>>()?;
    let names: Vec<&str> = parts.iter().map(|p| p.set.source_name.as_str()).collect();
    let source_name = names.join("+");
    let mut report = LoadReport::default();
    let mut statements = Vec::with_capacity(parts.iter().map(|p| p.set.len()).sum());
    let mut seen = HashSet::new();
    for part in parts {
        report.rows += part.report.rows;
        report.loaded += part.report.loaded;
        report.dropped += part.report.dropped;
        for (rel, n) in part.report.unmapped {
            *report.unmapped.entry(rel).or_default() += n;
        }
        for s in part.set.statements {
            if !seen.insert(s.id.clone()) {
                return Err(Error::Parse {
                    source_name: part.set.source_name.clone(),
                    line: 0,
                    message: format!("id `{}` also appears in an earlier file", s.id),
                });
            }
            statements.push(s);
        }
    }
    Ok(Loaded { set: StatementSet::new(source_name, statements), report })
}
