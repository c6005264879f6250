//! Contribution × property comparison tables and their unit-converted views.
//!
//! Conversions never touch the store: a converted view is a new table whose
//! quantity cells carry the displayed value plus a tooltip with the stored
//! original. Every conversion starts from that original, so converting a
//! column twice, or back to the stored unit, loses nothing.

use std::collections::HashSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::number;
use crate::store::{ComparisonSpec, GraphStore, SavedComparison, StatementValue};
use crate::ucum::convert_reduced;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Column {
    pub property_id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_unit: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Row {
    pub contribution_id: String,
    pub label: String,
    pub paper_id: String,
    pub paper_title: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    /// Shown as stored.
    Original,
    /// Shown in a display unit different from the stored one.
    Converted,
    /// The column has a display unit the stored unit cannot convert to.
    Inconvertible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tooltip {
    #[serde(with = "number::as_string")]
    pub original_value: f64,
    pub original_unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_unit: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuantityCell {
    #[serde(with = "number::as_string")]
    pub value: f64,
    pub unit: String,
    pub quantity_kind_id: String,
    pub status: CellStatus,
    pub converted: bool,
    pub tooltip: Tooltip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Cell {
    Absent,
    Literal { value: String },
    Quantity(QuantityCell),
}

impl Cell {
    pub fn as_quantity(&self) -> Option<&QuantityCell> {
        match self {
            Cell::Quantity(q) => Some(q),
            _ => None,
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Absent => String::new(),
            Cell::Literal { value } => value.clone(),
            Cell::Quantity(q) => format!("{} {}", number::format_decimal(q.value), q.unit),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<Cell>>,
}

impl ComparisonTable {
    /// Rows and columns in input order; a contribution with several
    /// statements on one property shows the first by statement id.
    pub fn build(store: &GraphStore, contributions: &[String], properties: &[String]) -> Result<Self> {
        reject_duplicates(contributions)?;
        reject_duplicates(properties)?;

        let columns = properties
            .iter()
            .map(|p| {
                let prop = store.property(p).ok_or_else(|| Error::NotFound {
                    kind: "property",
                    id: p.clone(),
                })?;
                Ok(Column {
                    property_id: prop.id.clone(),
                    label: prop.label.clone(),
                    display_unit: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut rows = Vec::with_capacity(contributions.len());
        let mut cells = Vec::with_capacity(contributions.len());
        for id in contributions {
            let c = store.get_contribution(id)?;
            let paper_title = store.paper(&c.paper_id).map(|p| p.title.clone()).unwrap_or_default();
            cells.push(
                properties
                    .iter()
                    .map(|p| match c.statements.iter().find(|s| &s.property_id == p) {
                        None => Cell::Absent,
                        Some(s) => match &s.value {
                            StatementValue::Literal(text) => Cell::Literal { value: text.clone() },
                            StatementValue::Quantity(q) => Cell::Quantity(QuantityCell {
                                value: q.numeric_value,
                                unit: q.ucum_code.clone(),
                                quantity_kind_id: q.quantity_kind_id.clone(),
                                status: CellStatus::Original,
                                converted: false,
                                tooltip: Tooltip {
                                    original_value: q.numeric_value,
                                    original_unit: q.ucum_code.clone(),
                                    target_unit: None,
                                },
                            }),
                        },
                    })
                    .collect(),
            );
            rows.push(Row {
                contribution_id: c.id,
                label: c.label,
                paper_id: c.paper_id,
                paper_title,
            });
        }
        Ok(ComparisonTable { columns, rows, cells })
    }

    /// Rebuilds a saved comparison against the current store, then applies
    /// its unit overrides in column order.
    pub fn render_saved(store: &GraphStore, catalog: &Catalog, saved: &SavedComparison) -> Result<Self> {
        let mut table = Self::build(store, &saved.contributions, &saved.properties)?;
        for p in &saved.properties {
            if let Some(unit) = saved.unit_overrides.get(p) {
                table = table.convert_column(catalog, p, unit)?;
            }
        }
        Ok(table)
    }

    /// Returns a new table with `property`'s column shown in `target`.
    ///
    /// The column's quantity kind is that of its first quantity cell; `target`
    /// must match its dimension. Cells whose own unit does not are marked
    /// inconvertible and keep their stored value.
    pub fn convert_column(&self, catalog: &Catalog, property: &str, target: &str) -> Result<Self> {
        let col = self
            .columns
            .iter()
            .position(|c| c.property_id == property)
            .ok_or_else(|| Error::UnknownProperty(property.to_string()))?;
        let first = self
            .cells
            .iter()
            .find_map(|r| r[col].as_quantity())
            .ok_or_else(|| Error::Invalid(format!("column {property:?} holds no quantity values")))?;
        let kind = catalog.quantity_kind(&first.quantity_kind_id)?;
        let target_reduced = catalog.reduce(target)?;
        if target_reduced.dimension != kind.dimension {
            return Err(Error::IncommensurableUnits {
                source_code: kind.id.clone(),
                target_code: target.to_string(),
                source_dimension: kind.dimension,
                target_dimension: target_reduced.dimension,
            });
        }

        let mut out = self.clone();
        out.columns[col].display_unit = Some(target.to_string());
        for row in &mut out.cells {
            let Cell::Quantity(cell) = &mut row[col] else { continue };
            let original = &cell.tooltip;
            let converted = catalog
                .reduce(&original.original_unit)
                .ok()
                .filter(|r| r.dimension == target_reduced.dimension)
                .map(|r| convert_reduced(original.original_value, &r, &target_reduced));
            let (value, unit, status) = match converted {
                _ if original.original_unit == target => {
                    (original.original_value, original.original_unit.clone(), CellStatus::Original)
                }
                Some(Ok(v)) => (v, target.to_string(), CellStatus::Converted),
                Some(Err(_)) | None => (
                    original.original_value,
                    original.original_unit.clone(),
                    CellStatus::Inconvertible,
                ),
            };
            cell.value = value;
            cell.unit = unit;
            cell.status = status;
            cell.converted = status == CellStatus::Converted;
            cell.tooltip.target_unit = Some(target.to_string());
        }
        Ok(out)
    }

    pub fn spec(&self) -> ComparisonSpec {
        ComparisonSpec {
            contributions: self.rows.iter().map(|r| r.contribution_id.clone()).collect(),
            properties: self.columns.iter().map(|c| c.property_id.clone()).collect(),
            unit_overrides: self
                .columns
                .iter()
                .filter_map(|c| Some((c.property_id.clone(), c.display_unit.clone()?)))
                .collect(),
        }
    }

    /// Persists this view (selection plus unit overrides) and returns its id.
    pub fn save_view(&self, store: &mut GraphStore) -> Result<String> {
        store.save_comparison(self.spec())
    }

    pub fn export(&self, format: ExportFormat) -> Result<String> {
        match format {
            ExportFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let mut header = vec!["contribution".to_string(), "paper".to_string()];
                header.extend(self.columns.iter().map(|c| c.label.clone()));
                w.write_record(&header).map_err(csv_err)?;
                for (row, cells) in self.rows.iter().zip(&self.cells) {
                    let mut record = vec![row.contribution_id.clone(), row.paper_title.clone()];
                    record.extend(cells.iter().map(Cell::text));
                    w.write_record(&record).map_err(csv_err)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
            }
            ExportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(std::io::Error::from)?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn reject_duplicates(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateInput(id.clone()));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}
