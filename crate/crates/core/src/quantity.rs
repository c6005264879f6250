//! QUDT-pattern quantity model backed by a bundled snapshot of quantity kinds
//! and units.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number;
use crate::ucum::{Dimension, UnitExpr, UnitRegistry};

pub const SEED_SNAPSHOT: &str = include_str!("../data/qudt_snapshot.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantityKind {
    pub id: String,
    pub label: String,
    pub dimension: Dimension,
    /// Unit ids in facet order; the first one is the default display unit.
    pub applicable_units: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub id: String,
    pub label: String,
    pub ucum_code: String,
    /// Quantity kinds listing this unit, in snapshot order.
    pub quantity_kind_ids: Vec<String>,
}

/// Source of unit metadata (quantity kind links, label, UCUM code).
///
/// The bundled [`QudtSnapshot`] is the only implementation shipped; a client
/// for a live QUDT endpoint would implement the same trait.
pub trait UnitMetadataSource: Send + Sync {
    /// Looks up a unit by UCUM code or unit id.
    fn lookup_unit(&self, code_or_id: &str) -> Option<Unit>;

    fn quantity_kind(&self, id: &str) -> Option<QuantityKind>;

    /// Looks up a unit whose code parses to the same terms as `expr`.
    fn lookup_equivalent(&self, _expr: &UnitExpr) -> Option<Unit> {
        None
    }
}

#[derive(Deserialize)]
struct SnapshotFile {
    version: String,
    quantity_kinds: Vec<QuantityKind>,
    units: Vec<UnitRecord>,
}

#[derive(Deserialize)]
struct UnitRecord {
    id: String,
    label: String,
    ucum_code: String,
}

#[derive(Clone, Debug)]
pub struct QudtSnapshot {
    version: String,
    kinds: Vec<QuantityKind>,
    units: Vec<Unit>,
    kind_index: HashMap<String, usize>,
    unit_by_id: HashMap<String, usize>,
    unit_by_code: HashMap<String, usize>,
    /// Parsed form of every unit code, for matching equivalent spellings.
    parsed_codes: Vec<UnitExpr>,
}

impl QudtSnapshot {
    pub fn seed(registry: &UnitRegistry) -> Self {
        Self::from_json(SEED_SNAPSHOT, registry).expect("bundled snapshot is valid")
    }

    pub fn load(path: impl AsRef<Path>, registry: &UnitRegistry) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, registry)
    }

    /// Parses and checks a snapshot: every unit code must reduce under
    /// `registry`, and every applicable unit must share its kind's dimension.
    pub fn from_json(text: &str, registry: &UnitRegistry) -> Result<Self> {
        let file: SnapshotFile = serde_json::from_str(text).map_err(|e| Error::Format {
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.version.is_empty() {
            return Err(Error::Format {
                line: 0,
                message: "snapshot has no version".into(),
            });
        }

        let mut units = Vec::with_capacity(file.units.len());
        let mut unit_by_id = HashMap::new();
        let mut unit_by_code = HashMap::new();
        let mut parsed_codes = Vec::with_capacity(file.units.len());
        let mut unit_dims = Vec::with_capacity(file.units.len());
        for rec in file.units {
            let expr = registry.parse(&rec.ucum_code)?;
            let dim = registry.reduce(&expr)?.dimension;
            if unit_by_id.insert(rec.id.clone(), units.len()).is_some() {
                return Err(Error::DuplicateCode(rec.id));
            }
            if unit_by_code.insert(rec.ucum_code.clone(), units.len()).is_some() {
                return Err(Error::DuplicateCode(rec.ucum_code));
            }
            parsed_codes.push(expr);
            unit_dims.push(dim);
            units.push(Unit {
                id: rec.id,
                label: rec.label,
                ucum_code: rec.ucum_code,
                quantity_kind_ids: Vec::new(),
            });
        }

        let mut kind_index = HashMap::new();
        for (k, kind) in file.quantity_kinds.iter().enumerate() {
            if kind_index.insert(kind.id.clone(), k).is_some() {
                return Err(Error::DuplicateCode(kind.id.clone()));
            }
            for unit_id in &kind.applicable_units {
                let &u = unit_by_id.get(unit_id).ok_or_else(|| Error::Format {
                    line: 0,
                    message: format!("quantity kind {:?} lists unknown unit {unit_id:?}", kind.id),
                })?;
                if unit_dims[u] != kind.dimension {
                    return Err(Error::DimensionMismatch {
                        unit: units[u].ucum_code.clone(),
                        quantity_kind: kind.id.clone(),
                        unit_dimension: unit_dims[u],
                        kind_dimension: kind.dimension,
                    });
                }
                units[u].quantity_kind_ids.push(kind.id.clone());
            }
        }

        Ok(QudtSnapshot {
            version: file.version,
            kinds: file.quantity_kinds,
            units,
            kind_index,
            unit_by_id,
            unit_by_code,
            parsed_codes,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn quantity_kinds(&self) -> &[QuantityKind] {
        &self.kinds
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn kind(&self, id: &str) -> Option<&QuantityKind> {
        self.kind_index.get(id).map(|&i| &self.kinds[i])
    }

    pub fn unit_by_id(&self, id: &str) -> Option<&Unit> {
        self.unit_by_id.get(id).map(|&i| &self.units[i])
    }

    /// Exact code match first, then any unit whose code parses to the same
    /// terms (`km/h` and `km.h-1` name the same unit).
    pub fn unit_by_code(&self, code: &str, registry: &UnitRegistry) -> Option<&Unit> {
        if let Some(&i) = self.unit_by_code.get(code) {
            return Some(&self.units[i]);
        }
        let expr = registry.parse(code).ok()?;
        self.equivalent(&expr)
    }

    fn equivalent(&self, expr: &UnitExpr) -> Option<&Unit> {
        self.parsed_codes
            .iter()
            .position(|p| p.terms == expr.terms)
            .map(|i| &self.units[i])
    }
}

impl UnitMetadataSource for QudtSnapshot {
    fn lookup_unit(&self, code_or_id: &str) -> Option<Unit> {
        self.unit_by_code
            .get(code_or_id)
            .or_else(|| self.unit_by_id.get(code_or_id))
            .map(|&i| self.units[i].clone())
    }

    fn quantity_kind(&self, id: &str) -> Option<QuantityKind> {
        self.kind(id).cloned()
    }

    fn lookup_equivalent(&self, expr: &UnitExpr) -> Option<Unit> {
        self.equivalent(expr).cloned()
    }
}

/// A numeric value bound to a unit and a quantity kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantityValue {
    pub numeric_value: f64,
    pub unit_id: String,
    /// UCUM code of `unit_id`, kept alongside so records are self-describing.
    pub ucum_code: String,
    pub quantity_kind_id: String,
}

/// A [`QuantityValue`] that passed dimension and finiteness checks.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedQuantityValue(pub(crate) QuantityValue);

impl ValidatedQuantityValue {
    pub fn get(&self) -> &QuantityValue {
        &self.0
    }

    pub fn into_inner(self) -> QuantityValue {
        self.0
    }
}

impl std::ops::Deref for ValidatedQuantityValue {
    type Target = QuantityValue;

    fn deref(&self) -> &QuantityValue {
        &self.0
    }
}

/// Renders `{kind label, value, unit code}`, e.g. `{Speed, 25, m/s}`.
pub struct Structured<'a> {
    pub kind_label: &'a str,
    pub value: f64,
    pub ucum_code: &'a str,
}

impl fmt::Display for Structured<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{}, {}, {}}}",
            self.kind_label,
            number::format_decimal(self.value),
            self.ucum_code
        )
    }
}
