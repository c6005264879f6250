//! Randomized stores and a brute-force filter oracle.
//!
//! The oracle never touches the facet index: it walks every statement in the
//! store, converts the stored value into the filter's own unit, and evaluates
//! the comparator there.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use unitfacet_core::facet::{FilterSpec, Predicate, EQ_TOLERANCE};
use unitfacet_core::store::{GraphStore, Statement};
use unitfacet_core::Catalog;

/// Kinds used for generated statements. Energy and Torque share a dimension,
/// as do MicroF1Score and Dimensionless.
pub const KINDS: &[&str] = &[
    "Length",
    "Mass",
    "Time",
    "Speed",
    "Temperature",
    "Volume",
    "Energy",
    "Torque",
    "MicroF1Score",
    "Dimensionless",
];

pub fn unit_codes(catalog: &Catalog, kind: &str) -> Vec<String> {
    catalog
        .units_for_quantity_kind(kind)
        .unwrap()
        .into_iter()
        .map(|u| u.ucum_code)
        .collect()
}

/// A decimal with at most four significant digits, as papers report them.
pub fn nice_value<R: Rng>(rng: &mut R) -> f64 {
    let m: i64 = rng.gen_range(1..=9999);
    let e: i32 = rng.gen_range(-4..=3);
    let v: f64 = format!("{m}e{e}").parse().unwrap();
    if rng.gen_bool(0.2) {
        -v
    } else {
        v
    }
}

pub struct RandomStore {
    pub text: String,
    pub store: GraphStore,
    /// Property id to the kinds its statements may carry.
    pub properties: BTreeMap<String, Vec<String>>,
}

impl RandomStore {
    /// Quantity statements for one `(property, kind)` key.
    pub fn statements(&self, property: &str, kind: &str) -> Vec<&Statement> {
        self.store
            .statements()
            .filter(|s| s.property_id == property)
            .filter(|s| s.quantity().is_some_and(|q| q.quantity_kind_id == kind))
            .collect()
    }
}

pub fn random_store<R: Rng>(rng: &mut R, catalog: &Catalog, max_contributions: usize) -> RandomStore {
    let mut text = String::new();
    let mut properties = BTreeMap::new();
    for p in 0..rng.gen_range(1..=4) {
        let n = if rng.gen_bool(0.25) { 2 } else { 1 };
        let kinds: Vec<String> = KINDS.choose_multiple(rng, n).map(|k| k.to_string()).collect();
        let id = format!("prop-{p}");
        writeln!(text, r#"{{"kind":"property","id":"{id}","label":"property {p}"}}"#).unwrap();
        properties.insert(id, kinds);
    }
    writeln!(text, r#"{{"kind":"property","id":"note","label":"note"}}"#).unwrap();

    let n = rng.gen_range(0..=max_contributions);
    let mut statement = 0;
    for c in 0..n {
        if c % 3 == 0 {
            writeln!(text, r#"{{"kind":"paper","id":"P{c:04}","title":"paper {c}"}}"#).unwrap();
        }
        let cid = format!("C{c:04}");
        writeln!(
            text,
            r#"{{"kind":"contribution","id":"{cid}","paper":"P{:04}","label":"contribution {c}"}}"#,
            c - c % 3
        )
        .unwrap();
        for (pid, kinds) in &properties {
            if !rng.gen_bool(0.5) {
                continue;
            }
            for _ in 0..rng.gen_range(1..=2) {
                let kind = kinds.choose(rng).unwrap();
                let unit = unit_codes(catalog, kind).choose(rng).unwrap().clone();
                let value = nice_value(rng);
                writeln!(
                    text,
                    r#"{{"kind":"statement","id":"S{statement:06}","contribution":"{cid}","property":"{pid}","quantity":{{"value":{value},"unit":"{unit}","quantity_kind":"{kind}"}}}}"#,
                )
                .unwrap();
                statement += 1;
            }
        }
        if rng.gen_bool(0.1) {
            writeln!(
                text,
                r#"{{"kind":"statement","id":"S{statement:06}","contribution":"{cid}","property":"note","literal":"n/a"}}"#
            )
            .unwrap();
            statement += 1;
        }
    }

    let mut store = GraphStore::in_memory();
    let report = store.ingest_str(catalog, &text).unwrap();
    assert_eq!(report.rejected, 0, "{:?}", report.diagnostics);
    RandomStore {
        text,
        store,
        properties,
    }
}

/// A filter over one of the store's properties. Operands are either fresh
/// values or stored values converted into the filter unit, so boundaries are
/// hit exactly.
pub fn random_filter<R: Rng>(rng: &mut R, catalog: &Catalog, rs: &RandomStore) -> FilterSpec {
    let (property, kinds) = rs.properties.iter().collect::<Vec<_>>().choose(rng).map(|(p, k)| (*p, *k)).unwrap();
    let kind = kinds.choose(rng).unwrap();
    let unit = unit_codes(catalog, kind).choose(rng).unwrap().clone();
    let stored = rs.statements(property, kind);

    let operand = |rng: &mut R| match stored.choose(rng) {
        Some(s) if rng.gen_bool(0.4) => {
            let q = s.quantity().unwrap();
            catalog.registry.convert_codes(q.numeric_value, &q.ucum_code, &unit).unwrap().value
        }
        _ => nice_value(rng),
    };
    let predicate = match rng.gen_range(0..5) {
        0 => Predicate::Eq(operand(rng)),
        1 => Predicate::Gt(operand(rng)),
        2 => Predicate::Lt(operand(rng)),
        n => {
            let (a, b) = (operand(rng), operand(rng));
            let (min, max) = if a <= b { (a, b) } else { (b, a) };
            if n == 3 {
                Predicate::Within { min, max }
            } else {
                Predicate::Exclude { min, max }
            }
        }
    };

    // the kind may be left to inference when the property's indexed kinds
    // single it out by dimension
    let dim = catalog.registry.dimension_of(&unit).unwrap();
    let same_dim_indexed = kinds
        .iter()
        .filter(|k| catalog.quantity_kind(k).unwrap().dimension == dim)
        .filter(|k| !rs.statements(property, k).is_empty())
        .count();
    let infer = !stored.is_empty() && same_dim_indexed == 1 && rng.gen_bool(0.3);
    FilterSpec {
        property: property.clone(),
        quantity_kind: (!infer).then(|| kind.clone()),
        predicate,
        unit,
    }
}

fn holds(predicate: Predicate, v: f64) -> bool {
    match predicate {
        Predicate::Eq(x) => (v - x).abs() <= EQ_TOLERANCE * v.abs().max(x.abs()),
        Predicate::Gt(x) => v > x,
        Predicate::Lt(x) => v < x,
        Predicate::Within { min, max } => min <= v && v <= max,
        Predicate::Exclude { min, max } => v < min || v > max,
    }
}

fn satisfies(catalog: &Catalog, s: &Statement, f: &FilterSpec) -> bool {
    let Some(q) = s.quantity() else { return false };
    if s.property_id != f.property {
        return false;
    }
    let kind_ok = match &f.quantity_kind {
        Some(k) => &q.quantity_kind_id == k,
        None => {
            catalog.quantity_kind(&q.quantity_kind_id).unwrap().dimension
                == catalog.registry.dimension_of(&f.unit).unwrap()
        }
    };
    kind_ok
        && holds(
            f.predicate,
            catalog.registry.convert_codes(q.numeric_value, &q.ucum_code, &f.unit).unwrap().value,
        )
}

/// Contributions with at least one statement that satisfy every filter.
pub fn oracle(catalog: &Catalog, store: &GraphStore, filters: &[FilterSpec]) -> Vec<String> {
    let mut out: Vec<String> = store
        .contribution_ids()
        .filter(|c| {
            let stmts: Vec<&Statement> = store.statements_of(c).collect();
            !stmts.is_empty() && filters.iter().all(|f| stmts.iter().any(|s| satisfies(catalog, s, f)))
        })
        .map(str::to_string)
        .collect();
    out.sort();
    out
}
