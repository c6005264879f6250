//! Numeric facet index over quantity-valued statements.
//!
//! Every quantity is normalized once, at index time, into the coherent
//! reference unit of its dimension (kilogram for mass). Filters convert their
//! operands into the same unit, so comparisons run on plain floats regardless
//! of how each paper reported its value. A filter's meaning is fixed in its
//! own unit: values too close to a boundary for the reference comparison to
//! be decisive are converted into the filter unit and compared there.
//!
//! Boundary semantics: `gt` and `lt` are strict, `within` is the closed
//! interval `[min, max]`, `exclude` keeps values strictly outside it, and `eq`
//! matches within a relative tolerance of 1e-9.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, ErrorCode, Result};
use crate::number;
use crate::quantity::{QuantityKind, QuantityValue, Unit};
use crate::store::GraphStore;
use crate::ucum::{convert_reduced, Reduced};

pub const EQ_TOLERANCE: f64 = 1e-9;

/// Relative distance from a boundary below which a reference-unit
/// comparison is rechecked in the filter unit.
const BOUNDARY_MARGIN: f64 = 1e-12;

struct CompiledFilter {
    key: (String, String),
    reference: Predicate,
    original: Predicate,
    unit: Reduced,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexEntry {
    pub contribution_id: String,
    pub statement_id: String,
    /// Value in the reference unit of the quantity kind's dimension.
    pub normalized: f64,
    pub original: QuantityValue,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FacetBucket {
    pub entries: Vec<IndexEntry>,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    /// Unit ids seen in the data, first-seen order.
    pub observed_units: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexDiagnostic {
    pub statement_id: String,
    pub code: ErrorCode,
    pub message: String,
}

/// Keyed by `(property id, quantity kind id)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FacetIndex {
    buckets: BTreeMap<(String, String), FacetBucket>,
    property_labels: BTreeMap<String, String>,
    with_statements: BTreeSet<String>,
    diagnostics: Vec<IndexDiagnostic>,
}

impl FacetIndex {
    pub fn build(store: &GraphStore, catalog: &Catalog) -> FacetIndex {
        let mut index = FacetIndex {
            property_labels: store.properties().map(|p| (p.id.clone(), p.label.clone())).collect(),
            ..FacetIndex::default()
        };
        let mut statements: Vec<_> = store.statements().collect();
        statements.sort_by(|a, b| (&a.contribution_id, &a.id).cmp(&(&b.contribution_id, &b.id)));

        for st in statements {
            index.with_statements.insert(st.contribution_id.clone());
            let Some(qv) = st.quantity() else { continue };
            match normalize(catalog, qv) {
                Ok(normalized) => {
                    let bucket = index
                        .buckets
                        .entry((st.property_id.clone(), qv.quantity_kind_id.clone()))
                        .or_default();
                    if !bucket.observed_units.contains(&qv.unit_id) {
                        bucket.observed_units.push(qv.unit_id.clone());
                    }
                    bucket.entries.push(IndexEntry {
                        contribution_id: st.contribution_id.clone(),
                        statement_id: st.id.clone(),
                        normalized,
                        original: qv.clone(),
                    });
                }
                Err(e) => index.diagnostics.push(IndexDiagnostic {
                    statement_id: st.id.clone(),
                    code: e.code(),
                    message: e.to_string(),
                }),
            }
        }
        for bucket in index.buckets.values_mut() {
            bucket.count = bucket.entries.len();
            bucket.min = bucket.entries.iter().map(|e| e.normalized).fold(f64::INFINITY, f64::min);
            bucket.max = bucket.entries.iter().map(|e| e.normalized).fold(f64::NEG_INFINITY, f64::max);
        }
        index
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = (&str, &str)> {
        self.buckets.keys().map(|(p, k)| (p.as_str(), k.as_str()))
    }

    pub fn bucket(&self, property: &str, kind: &str) -> Option<&FacetBucket> {
        self.buckets.get(&(property.to_string(), kind.to_string()))
    }

    pub fn diagnostics(&self) -> &[IndexDiagnostic] {
        &self.diagnostics
    }

    pub fn property_label(&self, property: &str) -> Option<&str> {
        self.property_labels.get(property).map(String::as_str)
    }

    /// Contributions with any statement, in id order.
    pub fn contributions(&self) -> impl Iterator<Item = &str> {
        self.with_statements.iter().map(String::as_str)
    }

    /// Quantity kinds indexed under `property`.
    pub fn kinds_of(&self, property: &str) -> Vec<&str> {
        self.buckets
            .keys()
            .filter(|(p, _)| p == property)
            .map(|(_, k)| k.as_str())
            .collect()
    }

    fn require_property(&self, property: &str) -> Result<()> {
        if self.property_labels.contains_key(property) {
            Ok(())
        } else {
            Err(Error::UnknownProperty(property.to_string()))
        }
    }

    /// Builds the facet for one property: unit options, value range in the
    /// display unit, and entry count.
    pub fn generate_facets(
        &self,
        catalog: &Catalog,
        property: &str,
        quantity_kind: Option<&str>,
        display_unit: Option<&str>,
    ) -> Result<FacetDescriptor> {
        self.require_property(property)?;
        let kinds = self.kinds_of(property);
        let kind_id = match quantity_kind {
            Some(k) if kinds.contains(&k) => k.to_string(),
            Some(k) => {
                catalog.quantity_kind(k)?;
                return Err(Error::UnknownProperty(format!("{property} (no {k} values)")));
            }
            None => match kinds.as_slice() {
                [only] => only.to_string(),
                [] => return Err(Error::UnknownProperty(format!("{property} (no quantity values)"))),
                many => {
                    return Err(Error::AmbiguousQuantityKind {
                        unit: property.to_string(),
                        candidates: many.join(", "),
                    })
                }
            },
        };
        let kind = catalog.quantity_kind(&kind_id)?;
        let bucket = &self.buckets[&(property.to_string(), kind_id.clone())];

        let mut unit_options: Vec<UnitOption> = catalog
            .units_for_quantity_kind(&kind.id)?
            .into_iter()
            .map(|u| UnitOption::from_unit(u, false))
            .collect();
        for unit_id in &bucket.observed_units {
            if !unit_options.iter().any(|o| &o.id == unit_id) {
                if let Some(u) = catalog.snapshot.unit_by_id(unit_id) {
                    unit_options.push(UnitOption::from_unit(u.clone(), true));
                }
            }
        }
        for o in &mut unit_options {
            o.observed = bucket.observed_units.contains(&o.id);
        }

        let display = match display_unit {
            Some(code) => code.to_string(),
            None => unit_options
                .first()
                .map(|o| o.code.clone())
                .ok_or_else(|| Error::MissingMetadata(kind.id.clone()))?,
        };
        let display_reduced = reduce_for_kind(catalog, &display, kind)?;
        let reference = Reduced::reference(kind.dimension);

        Ok(FacetDescriptor {
            property_id: property.to_string(),
            property_label: self.property_labels[property].clone(),
            quantity_kind_id: kind.id.clone(),
            quantity_kind_label: kind.label.clone(),
            unit_options,
            display_unit: display,
            min: convert_reduced(bucket.min, &reference, &display_reduced)?,
            max: convert_reduced(bucket.max, &reference, &display_reduced)?,
            count: bucket.count,
        })
    }

    /// Contributions satisfying every filter, in id order. An empty filter
    /// list matches every contribution that has at least one statement.
    pub fn apply_filters(&self, catalog: &Catalog, filters: &[FilterSpec]) -> Result<Vec<String>> {
        let compiled: Vec<_> = filters
            .iter()
            .map(|f| self.compile(catalog, f))
            .collect::<Result<_>>()?;

        let mut result: BTreeSet<&str> = self.with_statements.iter().map(String::as_str).collect();
        for filter in &compiled {
            let mut matching = BTreeSet::new();
            for e in self.buckets.get(&filter.key).into_iter().flat_map(|b| &b.entries) {
                let hit = if filter.reference.near_boundary(e.normalized) {
                    let source = catalog.reduce(&e.original.ucum_code)?;
                    filter
                        .original
                        .matches(convert_reduced(e.original.numeric_value, &source, &filter.unit)?)
                } else {
                    filter.reference.matches(e.normalized)
                };
                if hit {
                    matching.insert(e.contribution_id.as_str());
                }
            }
            result.retain(|c| matching.contains(c));
        }
        Ok(result.into_iter().map(str::to_string).collect())
    }

    /// Validates a filter and converts its operands into the reference unit.
    fn compile(&self, catalog: &Catalog, filter: &FilterSpec) -> Result<CompiledFilter> {
        self.require_property(&filter.property)?;
        for v in filter.predicate.operands() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue);
            }
        }
        if let Predicate::Within { min, max } | Predicate::Exclude { min, max } = filter.predicate {
            if min > max {
                return Err(Error::EmptyInterval { min, max });
            }
        }
        let operand = catalog.reduce(&filter.unit)?;
        let kind = match &filter.quantity_kind {
            Some(k) => catalog.quantity_kind(k)?,
            None => {
                let indexed = self.kinds_of(&filter.property);
                let candidates: Vec<&str> = indexed
                    .iter()
                    .copied()
                    .filter(|k| catalog.quantity_kind(k).is_ok_and(|q| q.dimension == operand.dimension))
                    .collect();
                match (candidates.as_slice(), indexed.first()) {
                    ([only], _) => catalog.quantity_kind(only)?,
                    // property carries no quantities: nothing can match
                    ([], None) => {
                        return Ok(CompiledFilter {
                            key: (filter.property.clone(), String::new()),
                            reference: filter.predicate,
                            original: filter.predicate,
                            unit: operand,
                        });
                    }
                    ([], Some(first)) => {
                        let target = catalog.quantity_kind(first)?;
                        return Err(Error::IncommensurableUnits {
                            source_code: filter.unit.clone(),
                            target_code: target.id.clone(),
                            source_dimension: operand.dimension,
                            target_dimension: target.dimension,
                        });
                    }
                    (many, _) => {
                        return Err(Error::AmbiguousQuantityKind {
                            unit: filter.unit.clone(),
                            candidates: many.join(", "),
                        })
                    }
                }
            }
        };
        if operand.dimension != kind.dimension {
            return Err(Error::IncommensurableUnits {
                source_code: filter.unit.clone(),
                target_code: kind.id.clone(),
                source_dimension: operand.dimension,
                target_dimension: kind.dimension,
            });
        }
        let reference = Reduced::reference(kind.dimension);
        let to_ref = |v: f64| convert_reduced(v, &operand, &reference);
        let reference = match filter.predicate {
            Predicate::Eq(x) => Predicate::Eq(to_ref(x)?),
            Predicate::Gt(x) => Predicate::Gt(to_ref(x)?),
            Predicate::Lt(x) => Predicate::Lt(to_ref(x)?),
            Predicate::Within { min, max } => Predicate::Within {
                min: to_ref(min)?,
                max: to_ref(max)?,
            },
            Predicate::Exclude { min, max } => Predicate::Exclude {
                min: to_ref(min)?,
                max: to_ref(max)?,
            },
        };
        Ok(CompiledFilter {
            key: (filter.property.clone(), kind.id.clone()),
            reference,
            original: filter.predicate,
            unit: operand,
        })
    }
}

fn normalize(catalog: &Catalog, qv: &QuantityValue) -> Result<f64> {
    let kind = catalog.quantity_kind(&qv.quantity_kind_id)?;
    let unit = reduce_for_kind(catalog, &qv.ucum_code, kind)?;
    convert_reduced(qv.numeric_value, &unit, &Reduced::reference(kind.dimension))
}

fn reduce_for_kind(catalog: &Catalog, code: &str, kind: &QuantityKind) -> Result<Reduced> {
    let reduced = catalog.reduce(code)?;
    if reduced.dimension != kind.dimension {
        return Err(Error::IncommensurableUnits {
            source_code: code.to_string(),
            target_code: kind.id.clone(),
            source_dimension: reduced.dimension,
            target_dimension: kind.dimension,
        });
    }
    Ok(reduced)
}

/// Units of a quantity kind whose code starts with `prefix` (case-sensitive)
/// or whose label does (case-insensitive), in snapshot order.
pub fn autocomplete_units(catalog: &Catalog, prefix: &str, quantity_kind: &str) -> Result<Vec<Unit>> {
    let lower = prefix.to_lowercase();
    Ok(catalog
        .units_for_quantity_kind(quantity_kind)?
        .into_iter()
        .filter(|u| u.ucum_code.starts_with(prefix) || u.label.to_lowercase().starts_with(&lower))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Predicate {
    Eq(f64),
    Gt(f64),
    Lt(f64),
    Within { min: f64, max: f64 },
    Exclude { min: f64, max: f64 },
}

impl Predicate {
    pub fn matches(&self, v: f64) -> bool {
        match *self {
            Predicate::Eq(x) => (v - x).abs() <= EQ_TOLERANCE * v.abs().max(x.abs()),
            Predicate::Gt(x) => v > x,
            Predicate::Lt(x) => v < x,
            Predicate::Within { min, max } => min <= v && v <= max,
            Predicate::Exclude { min, max } => v < min || v > max,
        }
    }

    fn near_boundary(&self, v: f64) -> bool {
        let near = |b: f64, margin: f64| (v - b).abs() <= margin * v.abs().max(b.abs());
        match *self {
            Predicate::Eq(x) => near(x, 2.0 * EQ_TOLERANCE) && !near(x, 0.5 * EQ_TOLERANCE),
            _ => self.operands().into_iter().any(|b| near(b, BOUNDARY_MARGIN)),
        }
    }

    fn operands(&self) -> Vec<f64> {
        match *self {
            Predicate::Eq(x) | Predicate::Gt(x) | Predicate::Lt(x) => vec![x],
            Predicate::Within { min, max } | Predicate::Exclude { min, max } => vec![min, max],
        }
    }

    pub fn comparator(&self) -> Comparator {
        match self {
            Predicate::Eq(_) => Comparator::Eq,
            Predicate::Gt(_) => Comparator::Gt,
            Predicate::Lt(_) => Comparator::Lt,
            Predicate::Within { .. } => Comparator::Within,
            Predicate::Exclude { .. } => Comparator::Exclude,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    Eq,
    Gt,
    Lt,
    Within,
    Exclude,
}

/// A unit-qualified numeric predicate on one property.
///
/// JSON form: `{"property": "sea-level", "quantityKind": "Length",
/// "comparator": "gt", "value": 20, "unit": "cm"}`; interval comparators take
/// `"min"` and `"max"` instead of `"value"`. `quantityKind` may be omitted
/// when the property holds a single kind matching the unit's dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterWire", into = "FilterWire")]
pub struct FilterSpec {
    pub property: String,
    pub quantity_kind: Option<String>,
    pub predicate: Predicate,
    pub unit: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct FilterWire {
    property: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quantity_kind: Option<String>,
    comparator: Comparator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
    unit: String,
}

impl TryFrom<FilterWire> for FilterSpec {
    type Error = String;

    fn try_from(w: FilterWire) -> std::result::Result<Self, String> {
        let single = |v: Option<f64>| match (v, w.min, w.max) {
            (Some(x), None, None) => Ok(x),
            _ => Err(format!("comparator {:?} takes \"value\" only", w.comparator)),
        };
        let interval = || match (w.value, w.min, w.max) {
            (None, Some(min), Some(max)) => Ok((min, max)),
            _ => Err(format!("comparator {:?} takes \"min\" and \"max\" only", w.comparator)),
        };
        let predicate = match w.comparator {
            Comparator::Eq => Predicate::Eq(single(w.value)?),
            Comparator::Gt => Predicate::Gt(single(w.value)?),
            Comparator::Lt => Predicate::Lt(single(w.value)?),
            Comparator::Within => {
                let (min, max) = interval()?;
                Predicate::Within { min, max }
            }
            Comparator::Exclude => {
                let (min, max) = interval()?;
                Predicate::Exclude { min, max }
            }
        };
        Ok(FilterSpec {
            property: w.property,
            quantity_kind: w.quantity_kind,
            predicate,
            unit: w.unit,
        })
    }
}

impl From<FilterSpec> for FilterWire {
    fn from(f: FilterSpec) -> Self {
        let (value, min, max) = match f.predicate {
            Predicate::Eq(x) | Predicate::Gt(x) | Predicate::Lt(x) => (Some(x), None, None),
            Predicate::Within { min, max } | Predicate::Exclude { min, max } => (None, Some(min), Some(max)),
        };
        FilterWire {
            property: f.property,
            quantity_kind: f.quantity_kind,
            comparator: f.predicate.comparator(),
            value,
            min,
            max,
            unit: f.unit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnitOption {
    pub id: String,
    pub code: String,
    pub label: String,
    /// Present in the indexed data.
    pub observed: bool,
}

impl UnitOption {
    fn from_unit(u: Unit, observed: bool) -> Self {
        UnitOption {
            id: u.id,
            code: u.ucum_code,
            label: u.label,
            observed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FacetDescriptor {
    pub property_id: String,
    pub property_label: String,
    pub quantity_kind_id: String,
    pub quantity_kind_label: String,
    pub unit_options: Vec<UnitOption>,
    pub display_unit: String,
    #[serde(with = "number::as_string")]
    pub min: f64,
    #[serde(with = "number::as_string")]
    pub max: f64,
    pub count: usize,
}
