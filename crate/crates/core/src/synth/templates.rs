use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::kg::Statement;
use crate::{Error, Result};

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.tsv");
const HEAD_SLOT: &str = "{head}";

/// Question template per relation. The tail of a statement is always the
/// answer. A `*` row, if present, serves relations without their own row.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemplateTable {
    templates: HashMap<String, String>,
}

impl TemplateTable {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut table = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let Some((relation, template)) = line.split_once('\t') else {
                return Err(Error::Parse {
                    source_name: source_name.into(),
                    line: i + 1,
                    message: "expected `relation<TAB>template`".into(),
                });
            };
            if relation.trim() == "relation" && template.trim() == "template" {
                continue;
            }
            table.insert(relation.trim(), template.trim())?;
        }
        Ok(table)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn default_cskg() -> Self {
        Self::parse(DEFAULT_TEMPLATES, "templates.tsv").expect("bundled templates are valid")
    }

    pub fn insert(&mut self, relation: &str, template: &str) -> Result<()> {
        if !template.contains(HEAD_SLOT) {
            return Err(Error::InvalidTemplate { relation: relation.into(), message: format!("missing {HEAD_SLOT} slot") });
        }
        self.templates.insert(relation.to_string(), template.to_string());
        Ok(())
    }

    pub fn get(&self, relation: &str) -> Option<&str> {
        self.templates.get(relation).or_else(|| self.templates.get("*")).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Rows sorted by relation, for digests.
    pub fn entries(&self) -> Vec<(&str, &str)> {
        let mut v: Vec<_> = self.templates.iter().map(|(r, t)| (r.as_str(), t.as_str())).collect();
        v.sort();
        v
    }
}

fn squash(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Returns `(question, answer)` for a statement.
pub fn verbalize(statement: &Statement, templates: &TemplateTable) -> Result<(String, String)> {
    let template = templates.get(&statement.relation).ok_or_else(|| Error::MissingTemplate(statement.relation.clone()))?;
    let question = template.replace(HEAD_SLOT, &squash(&statement.head));
    Ok((question, squash(&statement.tail)))
}
