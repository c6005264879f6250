//! File-backed scholarly knowledge graph: papers, properties, contributions,
//! statements, and saved comparisons.
//!
//! A store directory holds two line-delimited JSON files:
//!
//! - `graph.jsonl`: every paper, property, contribution and statement, one
//!   record per line in the ingestion format, written in kind order then id
//!   order. The file is a valid ingestion file on its own.
//! - `comparisons.jsonl`: one saved comparison per line, in id order.
//!
//! Both files are replaced atomically (write to a temporary sibling, then
//! rename), so a reader never sees a partial write.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, ErrorCode, Result};
use crate::quantity::QuantityValue;

pub const GRAPH_FILE: &str = "graph.jsonl";
pub const COMPARISONS_FILE: &str = "comparisons.jsonl";

const ID_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
const ID_LEN: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    pub id: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_ref: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub id: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatementValue {
    Literal(String),
    Quantity(QuantityValue),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub id: String,
    pub contribution_id: String,
    pub property_id: String,
    pub value: StatementValue,
}

impl Statement {
    pub fn quantity(&self) -> Option<&QuantityValue> {
        match &self.value {
            StatementValue::Quantity(q) => Some(q),
            StatementValue::Literal(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub id: String,
    pub paper_id: String,
    pub label: String,
    pub statements: Vec<Statement>,
}

/// What to save: the row and column selection plus per-property display units.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    pub contributions: Vec<String>,
    pub properties: Vec<String>,
    #[serde(default)]
    pub unit_overrides: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavedComparison {
    pub id: String,
    pub contributions: Vec<String>,
    pub properties: Vec<String>,
    pub unit_overrides: BTreeMap<String, String>,
    /// RFC 3339, UTC.
    pub created: String,
}

impl SavedComparison {
    pub fn spec(&self) -> ComparisonSpec {
        ComparisonSpec {
            contributions: self.contributions.clone(),
            properties: self.properties.clone(),
            unit_overrides: self.unit_overrides.clone(),
        }
    }
}

/// One line of an ingestion file (and of `graph.jsonl`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Record {
    Paper {
        id: String,
        title: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        external_ref: Option<String>,
    },
    Property {
        id: String,
        label: String,
    },
    Contribution {
        id: String,
        paper: String,
        label: String,
    },
    Statement {
        id: String,
        contribution: String,
        property: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        literal: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quantity: Option<QuantityRecord>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantityRecord {
    pub value: f64,
    /// UCUM code.
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity_kind: Option<String>,
}

impl Record {
    fn id(&self) -> &str {
        match self {
            Record::Paper { id, .. }
            | Record::Property { id, .. }
            | Record::Contribution { id, .. }
            | Record::Statement { id, .. } => id,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Record::Paper { .. } => 0,
            Record::Property { .. } => 1,
            Record::Contribution { .. } => 2,
            Record::Statement { .. } => 3,
        }
    }
}

/// A rejected record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub id: String,
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub papers: usize,
    pub properties: usize,
    pub contributions: usize,
    pub statements: usize,
    pub rejected: usize,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Graph {
    papers: BTreeMap<String, Paper>,
    properties: BTreeMap<String, Property>,
    contributions: BTreeMap<String, (String, String)>,
    statements: BTreeMap<String, Statement>,
    by_contribution: BTreeMap<String, BTreeSet<String>>,
}

impl Graph {
    fn insert_statement(&mut self, st: Statement) {
        if let Some(old) = self.statements.get(&st.id) {
            if let Some(set) = self.by_contribution.get_mut(&old.contribution_id) {
                set.remove(&st.id);
            }
        }
        self.by_contribution
            .entry(st.contribution_id.clone())
            .or_default()
            .insert(st.id.clone());
        self.statements.insert(st.id.clone(), st);
    }

    fn statements_of(&self, contribution: &str) -> impl Iterator<Item = &Statement> {
        self.by_contribution
            .get(contribution)
            .into_iter()
            .flatten()
            .filter_map(|id| self.statements.get(id))
    }

    /// Applies parsed records in kind order; returns counts and rejections.
    fn apply(&mut self, catalog: &Catalog, mut records: Vec<(usize, Record)>) -> IngestReport {
        records.sort_by_key(|(line, r)| (r.rank(), *line));
        let mut report = IngestReport::default();
        for (line, record) in records {
            let id = record.id().to_string();
            if let Err(e) = self.apply_one(catalog, record, &mut report) {
                report.rejected += 1;
                report.diagnostics.push(Diagnostic {
                    line,
                    id,
                    code: e.code(),
                    message: e.to_string(),
                });
            }
        }
        report
    }

    fn apply_one(&mut self, catalog: &Catalog, record: Record, report: &mut IngestReport) -> Result<()> {
        match record {
            Record::Paper {
                id,
                title,
                external_ref,
            } => {
                self.papers.insert(
                    id.clone(),
                    Paper {
                        id,
                        title,
                        external_ref,
                    },
                );
                report.papers += 1;
            }
            Record::Property { id, label } => {
                self.properties.insert(id.clone(), Property { id, label });
                report.properties += 1;
            }
            Record::Contribution { id, paper, label } => {
                if !self.papers.contains_key(&paper) {
                    return Err(Error::DanglingReference { kind: "paper", id: paper });
                }
                self.contributions.insert(id, (paper, label));
                report.contributions += 1;
            }
            Record::Statement {
                id,
                contribution,
                property,
                literal,
                quantity,
            } => {
                if !self.contributions.contains_key(&contribution) {
                    return Err(Error::DanglingReference {
                        kind: "contribution",
                        id: contribution,
                    });
                }
                if !self.properties.contains_key(&property) {
                    return Err(Error::DanglingReference { kind: "property", id: property });
                }
                let value = match (literal, quantity) {
                    (Some(text), None) => StatementValue::Literal(text),
                    (None, Some(q)) => StatementValue::Quantity(
                        catalog
                            .quantity_value(q.value, &q.unit, q.quantity_kind.as_deref())?
                            .into_inner(),
                    ),
                    _ => unreachable!("checked while parsing"),
                };
                self.insert_statement(Statement {
                    id,
                    contribution_id: contribution,
                    property_id: property,
                    value,
                });
                report.statements += 1;
            }
        }
        Ok(())
    }

    fn to_records(&self) -> Vec<Record> {
        let mut out = Vec::new();
        out.extend(self.papers.values().map(|p| Record::Paper {
            id: p.id.clone(),
            title: p.title.clone(),
            external_ref: p.external_ref.clone(),
        }));
        out.extend(self.properties.values().map(|p| Record::Property {
            id: p.id.clone(),
            label: p.label.clone(),
        }));
        out.extend(self.contributions.iter().map(|(id, (paper, label))| Record::Contribution {
            id: id.clone(),
            paper: paper.clone(),
            label: label.clone(),
        }));
        out.extend(self.statements.values().map(|s| {
            let (literal, quantity) = match &s.value {
                StatementValue::Literal(t) => (Some(t.clone()), None),
                StatementValue::Quantity(q) => (
                    None,
                    Some(QuantityRecord {
                        value: q.numeric_value,
                        unit: q.ucum_code.clone(),
                        quantity_kind: Some(q.quantity_kind_id.clone()),
                    }),
                ),
            };
            Record::Statement {
                id: s.id.clone(),
                contribution: s.contribution_id.clone(),
                property: s.property_id.clone(),
                literal,
                quantity,
            }
        }));
        out
    }
}

/// Parses an ingestion document. Any malformed line fails the whole file.
pub fn parse_records(text: &str) -> Result<Vec<(usize, Record)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(raw).map_err(|e| Error::Format {
            line,
            message: e.to_string(),
        })?;
        if record.id().is_empty() {
            return Err(Error::Format {
                line,
                message: "empty id".into(),
            });
        }
        if let Record::Statement { literal, quantity, .. } = &record {
            if literal.is_some() == quantity.is_some() {
                return Err(Error::Format {
                    line,
                    message: "statement needs exactly one of \"literal\" or \"quantity\"".into(),
                });
            }
        }
        out.push((line, record));
    }
    Ok(out)
}

/// The knowledge graph store. Writes go through `&mut self`; callers that
/// share a store across threads wrap it in a lock.
#[derive(Clone, Debug)]
pub struct GraphStore {
    dir: Option<PathBuf>,
    graph: Graph,
    comparisons: BTreeMap<String, SavedComparison>,
    load_diagnostics: Vec<Diagnostic>,
}

impl GraphStore {
    pub fn in_memory() -> Self {
        GraphStore {
            dir: None,
            graph: Graph::default(),
            comparisons: BTreeMap::new(),
            load_diagnostics: Vec::new(),
        }
    }

    /// Opens (creating if needed) a store directory.
    pub fn open(dir: impl AsRef<Path>, catalog: &Catalog) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut graph = Graph::default();
        let mut load_diagnostics = Vec::new();
        let graph_path = dir.join(GRAPH_FILE);
        if graph_path.exists() {
            let records = parse_records(&fs::read_to_string(&graph_path)?)?;
            load_diagnostics = graph.apply(catalog, records).diagnostics;
        }
        let mut comparisons = BTreeMap::new();
        let cmp_path = dir.join(COMPARISONS_FILE);
        if cmp_path.exists() {
            for (n, raw) in fs::read_to_string(&cmp_path)?.lines().enumerate() {
                if raw.trim().is_empty() {
                    continue;
                }
                let saved: SavedComparison = serde_json::from_str(raw).map_err(|e| Error::Format {
                    line: n + 1,
                    message: e.to_string(),
                })?;
                comparisons.insert(saved.id.clone(), saved);
            }
        }
        Ok(GraphStore {
            dir: Some(dir),
            graph,
            comparisons,
            load_diagnostics,
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Records that failed validation when the store was opened.
    pub fn load_diagnostics(&self) -> &[Diagnostic] {
        &self.load_diagnostics
    }

    /// Ingests a line-delimited JSON document. Records replace existing ones
    /// with the same id. Format errors abort without changing anything;
    /// invalid records are skipped and reported.
    pub fn ingest_str(&mut self, catalog: &Catalog, text: &str) -> Result<IngestReport> {
        let records = parse_records(text)?;
        let mut staged = self.graph.clone();
        let report = staged.apply(catalog, records);
        if staged != self.graph {
            self.persist_graph(&staged)?;
            self.graph = staged;
        }
        Ok(report)
    }

    pub fn ingest_file(&mut self, catalog: &Catalog, path: impl AsRef<Path>) -> Result<IngestReport> {
        let text = fs::read_to_string(path)?;
        self.ingest_str(catalog, &text)
    }

    /// Removes a contribution and its statements.
    pub fn remove_contribution(&mut self, id: &str) -> Result<()> {
        if !self.graph.contributions.contains_key(id) {
            return Err(Error::NotFound {
                kind: "contribution",
                id: id.to_string(),
            });
        }
        let mut staged = self.graph.clone();
        staged.contributions.remove(id);
        for sid in staged.by_contribution.remove(id).unwrap_or_default() {
            staged.statements.remove(&sid);
        }
        self.persist_graph(&staged)?;
        self.graph = staged;
        Ok(())
    }

    pub fn paper(&self, id: &str) -> Option<&Paper> {
        self.graph.papers.get(id)
    }

    pub fn property(&self, id: &str) -> Option<&Property> {
        self.graph.properties.get(id)
    }

    pub fn properties(&self) -> impl Iterator<Item = &Property> {
        self.graph.properties.values()
    }

    pub fn papers(&self) -> impl Iterator<Item = &Paper> {
        self.graph.papers.values()
    }

    pub fn contribution_ids(&self) -> impl Iterator<Item = &str> {
        self.graph.contributions.keys().map(String::as_str)
    }

    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.graph.statements.values()
    }

    pub fn has_contribution(&self, id: &str) -> bool {
        self.graph.contributions.contains_key(id)
    }

    pub fn get_contribution(&self, id: &str) -> Result<Contribution> {
        let (paper_id, label) = self.graph.contributions.get(id).ok_or_else(|| Error::NotFound {
            kind: "contribution",
            id: id.to_string(),
        })?;
        Ok(Contribution {
            id: id.to_string(),
            paper_id: paper_id.clone(),
            label: label.clone(),
            statements: self.graph.statements_of(id).cloned().collect(),
        })
    }

    /// Statements of one contribution, in statement-id order.
    pub fn statements_of(&self, contribution: &str) -> impl Iterator<Item = &Statement> {
        self.graph.statements_of(contribution)
    }

    /// Contributions with at least one statement on `property`, in id order.
    pub fn list_contributions(&self, property: &str) -> Result<Vec<String>> {
        if !self.graph.properties.contains_key(property) {
            return Err(Error::NotFound {
                kind: "property",
                id: property.to_string(),
            });
        }
        let ids: BTreeSet<&str> = self
            .graph
            .statements
            .values()
            .filter(|s| s.property_id == property)
            .map(|s| s.contribution_id.as_str())
            .collect();
        Ok(ids.into_iter().map(str::to_string).collect())
    }

    pub fn save_comparison(&mut self, spec: ComparisonSpec) -> Result<String> {
        for c in &spec.contributions {
            if !self.graph.contributions.contains_key(c) {
                return Err(Error::DanglingReference {
                    kind: "contribution",
                    id: c.clone(),
                });
            }
        }
        for p in &spec.properties {
            if !self.graph.properties.contains_key(p) {
                return Err(Error::DanglingReference { kind: "property", id: p.clone() });
            }
        }
        if let Some(p) = spec.unit_overrides.keys().find(|p| !spec.properties.contains(p)) {
            return Err(Error::Invalid(format!("unit override for unselected property {p:?}")));
        }

        let id = self.fresh_id();
        let saved = SavedComparison {
            id: id.clone(),
            contributions: spec.contributions,
            properties: spec.properties,
            unit_overrides: spec.unit_overrides,
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        let mut staged = self.comparisons.clone();
        staged.insert(id.clone(), saved);
        self.persist_comparisons(&staged)?;
        self.comparisons = staged;
        Ok(id)
    }

    pub fn load_comparison(&self, id: &str) -> Result<&SavedComparison> {
        self.comparisons.get(id).ok_or_else(|| Error::NotFound {
            kind: "comparison",
            id: id.to_string(),
        })
    }

    pub fn comparisons(&self) -> impl Iterator<Item = &SavedComparison> {
        self.comparisons.values()
    }

    fn fresh_id(&self) -> String {
        let mut rng = rand::thread_rng();
        loop {
            let id: String = (0..ID_LEN)
                .map(|_| ID_ALPHABET[rng.gen_range(0..ID_ALPHABET.len())] as char)
                .collect();
            if !self.comparisons.contains_key(&id) {
                return id;
            }
        }
    }

    fn persist_graph(&self, graph: &Graph) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut buf = Vec::new();
        for record in graph.to_records() {
            serde_json::to_writer(&mut buf, &record).map_err(std::io::Error::from)?;
            buf.push(b'\n');
        }
        write_atomic(&dir.join(GRAPH_FILE), &buf)
    }

    fn persist_comparisons(&self, comparisons: &BTreeMap<String, SavedComparison>) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut buf = Vec::new();
        for saved in comparisons.values() {
            serde_json::to_writer(&mut buf, saved).map_err(std::io::Error::from)?;
            buf.push(b'\n');
        }
        write_atomic(&dir.join(COMPARISONS_FILE), &buf)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
