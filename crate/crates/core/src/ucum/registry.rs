use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ucum::{Dimension, Scale};

/// The registry shipped with the crate.
pub const SEED_REGISTRY: &str = include_str!("../../data/registry.tsv");

#[derive(Clone, Debug, PartialEq)]
pub struct Prefix {
    pub code: String,
    pub label: String,
    /// Power of ten: `c` is -2, `k` is 3.
    pub exponent: i32,
}

impl Prefix {
    pub fn factor(&self) -> f64 {
        Scale::pow10(self.exponent).value()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitAtom {
    pub code: String,
    pub label: String,
    pub dimension: Dimension,
    pub scale: Scale,
    pub offset: Option<f64>,
    pub metric: bool,
}

impl UnitAtom {
    pub fn is_affine(&self) -> bool {
        self.offset.is_some()
    }
}

/// Immutable set of prefixes and unit atoms.
#[derive(Clone, Debug)]
pub struct UnitRegistry {
    version: String,
    prefixes: Vec<Prefix>,
    atoms: Vec<UnitAtom>,
    atom_index: HashMap<String, usize>,
    /// Prefix indices, longest code first.
    prefix_order: Vec<usize>,
    prefix_index: HashMap<String, usize>,
}

impl UnitRegistry {
    pub fn seed() -> Self {
        Self::from_text(SEED_REGISTRY).expect("bundled registry is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    /// Parses the tab-separated registry format described in
    /// `data/registry.tsv`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut version = None;
        let mut prefixes = Vec::new();
        let mut atoms = Vec::new();
        let mut prefix_index = HashMap::new();
        let mut atom_index = HashMap::new();

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let err = |message: String| Error::Format { line, message };
            match fields[0] {
                "version" => {
                    if fields.len() != 2 || fields[1].is_empty() {
                        return Err(err("version record takes exactly one field".into()));
                    }
                    if version.is_some() {
                        return Err(err("duplicate version record".into()));
                    }
                    version = Some(fields[1].to_string());
                }
                "prefix" => {
                    if fields.len() != 4 {
                        return Err(err(format!("prefix record needs 4 fields, got {}", fields.len())));
                    }
                    let code = non_empty(fields[1], line, "code")?;
                    let exponent = parse_power_of_ten(fields[3])
                        .ok_or_else(|| err(format!("prefix factor {:?} is not a power of ten", fields[3])))?;
                    if prefix_index.insert(code.clone(), prefixes.len()).is_some() {
                        return Err(Error::DuplicateCode(code));
                    }
                    prefixes.push(Prefix {
                        code,
                        label: fields[2].to_string(),
                        exponent,
                    });
                }
                "atom" => {
                    if fields.len() != 7 {
                        return Err(err(format!("atom record needs 7 fields, got {}", fields.len())));
                    }
                    let code = non_empty(fields[1], line, "code")?;
                    let scale = Scale::from_decimal(fields[3])
                        .ok_or_else(|| err(format!("scale {:?} is not a positive decimal", fields[3])))?;
                    let dimension = parse_dimension(fields[4]).ok_or_else(|| {
                        err(format!("dimension {:?} must be seven integers", fields[4]))
                    })?;
                    let offset = match fields[5] {
                        "-" => None,
                        s => Some(
                            s.parse::<f64>()
                                .ok()
                                .filter(|o| o.is_finite())
                                .ok_or_else(|| err(format!("offset {s:?} is not a number")))?,
                        ),
                    };
                    if offset.is_some() && dimension != Dimension::TEMPERATURE {
                        return Err(err(format!("offset on non-temperature atom {code:?}")));
                    }
                    let metric = match fields[6] {
                        "metric" => true,
                        "nonmetric" => false,
                        s => return Err(err(format!("metric flag {s:?} must be metric or nonmetric"))),
                    };
                    if atom_index.insert(code.clone(), atoms.len()).is_some() {
                        return Err(Error::DuplicateCode(code));
                    }
                    atoms.push(UnitAtom {
                        code,
                        label: fields[2].to_string(),
                        dimension,
                        scale,
                        offset,
                        metric,
                    });
                }
                other => return Err(err(format!("unknown record kind {other:?}"))),
            }
        }

        let version = version.ok_or(Error::Format {
            line: 0,
            message: "registry has no version record".into(),
        })?;
        if atoms.is_empty() {
            return Err(Error::Format {
                line: 0,
                message: "registry defines no atoms".into(),
            });
        }

        let mut prefix_order: Vec<usize> = (0..prefixes.len()).collect();
        prefix_order.sort_by(|&a, &b| {
            prefixes[b]
                .code
                .len()
                .cmp(&prefixes[a].code.len())
                .then_with(|| prefixes[a].code.cmp(&prefixes[b].code))
        });

        Ok(UnitRegistry {
            version,
            prefixes,
            atoms,
            atom_index,
            prefix_order,
            prefix_index,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn atoms(&self) -> &[UnitAtom] {
        &self.atoms
    }

    pub fn prefixes(&self) -> &[Prefix] {
        &self.prefixes
    }

    pub fn atom(&self, code: &str) -> Option<&UnitAtom> {
        self.atom_index.get(code).map(|&i| &self.atoms[i])
    }

    pub fn prefix(&self, code: &str) -> Option<&Prefix> {
        self.prefix_index.get(code).map(|&i| &self.prefixes[i])
    }

    pub(crate) fn prefixes_longest_first(&self) -> impl Iterator<Item = &Prefix> {
        self.prefix_order.iter().map(|&i| &self.prefixes[i])
    }
}

fn non_empty(field: &str, line: usize, what: &str) -> Result<String> {
    if field.is_empty() {
        return Err(Error::Format {
            line,
            message: format!("empty {what}"),
        });
    }
    Ok(field.to_string())
}

fn parse_power_of_ten(text: &str) -> Option<i32> {
    let exp = match text.strip_prefix("1e") {
        Some(e) => e.parse().ok()?,
        None if text == "1" => 0,
        None => return None,
    };
    Some(exp)
}

fn parse_dimension(text: &str) -> Option<Dimension> {
    let parts: Vec<i16> = text
        .split_whitespace()
        .map(|p| p.parse().ok())
        .collect::<Option<_>>()?;
    let exps: [i16; 7] = parts.try_into().ok()?;
    Some(Dimension::new(exps))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXPECTED_ATOMS: [&str; 20] = [
        "m", "g", "s", "A", "K", "mol", "cd", "Hz", "N", "Pa", "J", "W", "L", "min", "h", "d", "%", "Cel",
        "[in_i]", "[ft_i]",
    ];

    #[test]
    fn seed_contents() {
        let reg = UnitRegistry::seed();
        let mut codes: Vec<&str> = reg.atoms().iter().map(|a| a.code.as_str()).collect();
        codes.sort();
        let mut expected = EXPECTED_ATOMS.to_vec();
        expected.sort();
        assert_eq!(codes, expected);

        let prefixes: Vec<(&str, i32)> = reg.prefixes().iter().map(|p| (p.code.as_str(), p.exponent)).collect();
        assert_eq!(prefixes.len(), 20);
        for (code, exp) in [
            ("Y", 24), ("Z", 21), ("E", 18), ("P", 15), ("T", 12), ("G", 9), ("M", 6), ("k", 3), ("h", 2),
            ("da", 1), ("d", -1), ("c", -2), ("m", -3), ("u", -6), ("n", -9), ("p", -12), ("f", -15),
            ("a", -18), ("z", -21), ("y", -24),
        ] {
            assert!(prefixes.contains(&(code, exp)), "missing prefix {code}");
        }
        assert_eq!(reg.prefix("c").unwrap().factor(), 0.01);
    }

    #[test]
    fn seed_invariants() {
        let reg = UnitRegistry::seed();
        for atom in reg.atoms() {
            assert!(atom.scale.value() > 0.0);
            if atom.offset.is_some() {
                assert_eq!(atom.dimension, Dimension::TEMPERATURE);
            }
        }
        assert_eq!(reg.atom("Cel").unwrap().offset, Some(273.15));
        assert_eq!(reg.atom("[in_i]").unwrap().scale.value(), 0.0254);
    }

    #[test]
    fn empty_file_is_format_error() {
        assert!(matches!(UnitRegistry::from_text(""), Err(Error::Format { .. })));
        assert!(matches!(
            UnitRegistry::from_text("# only a comment\n"),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn duplicate_atom_rejected() {
        let text = "version\tt\n\
                    atom\tm\tmetre\t1\t1 0 0 0 0 0 0\t-\tmetric\n\
                    atom\tm\tmetre again\t1\t1 0 0 0 0 0 0\t-\tmetric\n";
        match UnitRegistry::from_text(text) {
            Err(Error::DuplicateCode(code)) => assert_eq!(code, "m"),
            other => panic!("expected DuplicateCode, got {other:?}"),
        }
    }

    #[test]
    fn malformed_records() {
        for bad in [
            "version\tt\natom\tm\tmetre\t0\t1 0 0 0 0 0 0\t-\tmetric\n",
            "version\tt\natom\tm\tmetre\t1\t1 0 0\t-\tmetric\n",
            "version\tt\natom\tm\tmetre\t1\t1 0 0 0 0 0 0\t5\tmetric\n",
            "version\tt\natom\tm\tmetre\t1\t1 0 0 0 0 0 0\t-\tmaybe\n",
            "version\tt\nprefix\tc\tcenti\t0.02\n",
            "version\tt\nunit\tm\n",
            "atom\tm\tmetre\t1\t1 0 0 0 0 0 0\t-\tmetric\n",
        ] {
            assert!(matches!(UnitRegistry::from_text(bad), Err(Error::Format { .. })), "{bad:?}");
        }
    }
}
