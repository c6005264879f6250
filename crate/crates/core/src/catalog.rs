use std::path::Path;

use crate::error::{Error, Result};
use crate::quantity::{
    QudtSnapshot, QuantityKind, QuantityValue, Structured, Unit, UnitMetadataSource, ValidatedQuantityValue,
};
use crate::ucum::{Reduced, UnitRegistry};

/// Unit registry plus quantity-kind snapshot. Immutable once built.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub registry: UnitRegistry,
    pub snapshot: QudtSnapshot,
}

impl Catalog {
    pub fn bundled() -> Self {
        let registry = UnitRegistry::seed();
        let snapshot = QudtSnapshot::seed(&registry);
        Catalog { registry, snapshot }
    }

    /// Loads either file from disk, falling back to the bundled copy.
    pub fn load(registry: Option<&Path>, snapshot: Option<&Path>) -> Result<Self> {
        let registry = match registry {
            Some(p) => UnitRegistry::load(p)?,
            None => UnitRegistry::seed(),
        };
        let snapshot = match snapshot {
            Some(p) => QudtSnapshot::load(p, &registry)?,
            None => QudtSnapshot::seed(&registry),
        };
        Ok(Catalog { registry, snapshot })
    }

    /// Resolves a unit code to its snapshot record with quantity-kind links.
    pub fn materialize_unit(&self, ucum_code: &str) -> Result<Unit> {
        materialize_unit(ucum_code, &self.registry, &self.snapshot)
    }

    pub fn quantity_kind(&self, id: &str) -> Result<&QuantityKind> {
        self.snapshot
            .kind(id)
            .ok_or_else(|| Error::UnknownQuantityKind(id.to_string()))
    }

    pub fn units_for_quantity_kind(&self, id: &str) -> Result<Vec<Unit>> {
        let kind = self.quantity_kind(id)?;
        Ok(kind
            .applicable_units
            .iter()
            .filter_map(|u| self.snapshot.unit_by_id(u).cloned())
            .collect())
    }

    pub fn validate_quantity_value(&self, qv: QuantityValue) -> Result<ValidatedQuantityValue> {
        if !qv.numeric_value.is_finite() {
            return Err(Error::NonFiniteValue);
        }
        let kind = self.quantity_kind(&qv.quantity_kind_id)?;
        let unit_dim = self.registry.dimension_of(&qv.ucum_code)?;
        if unit_dim != kind.dimension {
            return Err(Error::DimensionMismatch {
                unit: qv.ucum_code.clone(),
                quantity_kind: kind.id.clone(),
                unit_dimension: unit_dim,
                kind_dimension: kind.dimension,
            });
        }
        Ok(ValidatedQuantityValue(qv))
    }

    /// Builds a quantity value from raw ingestion fields. Without an explicit
    /// kind, the unit's snapshot links must name exactly one.
    pub fn quantity_value(&self, value: f64, ucum_code: &str, kind: Option<&str>) -> Result<ValidatedQuantityValue> {
        let unit = self.materialize_unit(ucum_code)?;
        let kind_id = match kind {
            Some(k) => k.to_string(),
            None => match unit.quantity_kind_ids.as_slice() {
                [only] => only.clone(),
                [] => return Err(Error::MissingMetadata(ucum_code.to_string())),
                many => {
                    return Err(Error::AmbiguousQuantityKind {
                        unit: ucum_code.to_string(),
                        candidates: many.join(", "),
                    })
                }
            },
        };
        self.validate_quantity_value(QuantityValue {
            numeric_value: value,
            unit_id: unit.id,
            ucum_code: ucum_code.to_string(),
            quantity_kind_id: kind_id,
        })
    }

    /// `{kind label, value, unit}` for a stored quantity.
    pub fn structured(&self, qv: &QuantityValue) -> String {
        let label = self
            .snapshot
            .kind(&qv.quantity_kind_id)
            .map_or(qv.quantity_kind_id.as_str(), |k| k.label.as_str());
        Structured {
            kind_label: label,
            value: qv.numeric_value,
            ucum_code: &qv.ucum_code,
        }
        .to_string()
    }

    pub fn reduce(&self, code: &str) -> Result<Reduced> {
        self.registry.reduce_code(code)
    }
}

/// Snapshot lookup first (by code, then by equivalent parse, then by unit id).
/// A code with no metadata reports `MissingMetadata` unless it is not even
/// syntactically a unit expression.
pub fn materialize_unit(ucum_code: &str, registry: &UnitRegistry, source: &dyn UnitMetadataSource) -> Result<Unit> {
    if let Some(unit) = source.lookup_unit(ucum_code) {
        return Ok(unit);
    }
    match registry.parse(ucum_code) {
        Err(e @ Error::Syntax { .. }) => return Err(e),
        Err(_) => {}
        Ok(expr) => {
            if let Some(unit) = source.lookup_equivalent(&expr) {
                return Ok(unit);
            }
        }
    }
    Err(Error::MissingMetadata(ucum_code.to_string()))
}
