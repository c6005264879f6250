//! Local UCUM engine: parse unit codes, reduce them to a dimension vector and
//! a conversion factor, and convert values between commensurable units.

mod decimal;
mod dimension;
mod parser;
mod registry;
mod scale;

use serde::{Deserialize, Serialize};

pub use dimension::{Dimension, BASE_SYMBOLS};
pub use parser::{Factor, UnitExpr, UnitTerm};
pub use registry::{Prefix, UnitAtom, UnitRegistry, SEED_REGISTRY};
pub use scale::Scale;

use crate::error::{Error, Result};

/// A unit expression reduced against a registry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduced {
    pub dimension: Dimension,
    pub scale: Scale,
    /// Additive offset to the reference unit; only bare affine atoms keep one.
    pub offset: Option<f64>,
}

impl Reduced {
    /// The coherent reference unit used for normalization. Mass is anchored
    /// on the kilogram, so a dimension with mass exponent `k` has scale
    /// `1000^k` relative to the gram-based registry.
    pub fn reference(dimension: Dimension) -> Reduced {
        Reduced {
            dimension,
            scale: Scale::pow10(3 * dimension.mass() as i32),
            offset: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionResult {
    pub value: f64,
    pub source_code: String,
    pub target_code: String,
}

impl UnitRegistry {
    pub fn parse(&self, code: &str) -> Result<UnitExpr> {
        parser::parse(code, self)
    }

    pub fn reduce(&self, expr: &UnitExpr) -> Result<Reduced> {
        let mut dimension = Dimension::DIMENSIONLESS;
        let mut scale = Scale::ONE;
        let mut offset = None;
        let single = expr.terms.len() == 1;

        for factor in &expr.terms {
            match factor {
                Factor::Number { value, exponent } => {
                    scale = scale * Scale::from_integer(*value).powi(*exponent);
                }
                Factor::Unit(term) => {
                    let atom = self
                        .atom(&term.atom)
                        .ok_or_else(|| Error::UnknownUnit(term.atom.clone()))?;
                    if atom.is_affine() {
                        if !single || term.prefix.is_some() || term.exponent != 1 {
                            return Err(Error::AffineInCompound(expr.source.clone()));
                        }
                        offset = atom.offset;
                    }
                    let mut factor_scale = atom.scale;
                    if let Some(code) = &term.prefix {
                        let prefix = self.prefix(code).ok_or_else(|| Error::UnknownPrefix {
                            prefix: code.clone(),
                            token: format!("{code}{}", term.atom),
                        })?;
                        factor_scale = factor_scale * Scale::pow10(prefix.exponent);
                    }
                    scale = scale * factor_scale.powi(term.exponent);
                    dimension = dimension + atom.dimension * term.exponent;
                }
            }
        }
        Ok(Reduced {
            dimension,
            scale,
            offset,
        })
    }

    pub fn reduce_code(&self, code: &str) -> Result<Reduced> {
        self.reduce(&self.parse(code)?)
    }

    pub fn dimension_of(&self, code: &str) -> Result<Dimension> {
        Ok(self.reduce_code(code)?.dimension)
    }

    pub fn commensurable(&self, a: &UnitExpr, b: &UnitExpr) -> Result<bool> {
        Ok(self.reduce(a)?.dimension == self.reduce(b)?.dimension)
    }

    pub fn convert(&self, value: f64, source: &UnitExpr, target: &UnitExpr) -> Result<ConversionResult> {
        let src = self.reduce(source)?;
        let tgt = self.reduce(target)?;
        if src.dimension != tgt.dimension {
            return Err(Error::IncommensurableUnits {
                source_code: source.source.clone(),
                target_code: target.source.clone(),
                source_dimension: src.dimension,
                target_dimension: tgt.dimension,
            });
        }
        Ok(ConversionResult {
            value: convert_reduced(value, &src, &tgt)?,
            source_code: source.source.clone(),
            target_code: target.source.clone(),
        })
    }

    /// Parses both codes and converts.
    pub fn convert_codes(&self, value: f64, source: &str, target: &str) -> Result<ConversionResult> {
        let source = self.parse(source)?;
        let target = self.parse(target)?;
        self.convert(value, &source, &target)
    }
}

/// Converts between two reductions of equal dimension. Linear units go
/// through the exact scale ratio; affine units pass through the reference
/// unit, `((v·s_src + o_src) − o_tgt) / s_tgt`.
pub fn convert_reduced(value: f64, source: &Reduced, target: &Reduced) -> Result<f64> {
    debug_assert_eq!(source.dimension, target.dimension);
    if !value.is_finite() {
        return Err(Error::NonFiniteValue);
    }
    let out = match (source.offset, target.offset) {
        (None, None) => source.scale.ratio(target.scale).apply(value),
        (o_src, o_tgt) => {
            let reference = decimal::add(source.scale.apply(value), o_src.unwrap_or(0.0));
            target.scale.recip().apply(decimal::add(reference, -o_tgt.unwrap_or(0.0)))
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFiniteValue)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> UnitRegistry {
        UnitRegistry::seed()
    }

    #[test]
    fn reduce_examples() {
        let r = reg();
        let cm = r.reduce_code("cm").unwrap();
        assert_eq!(cm.dimension, Dimension::LENGTH);
        assert_eq!(cm.scale.value(), 0.01);
        assert_eq!(cm.offset, None);

        let m = r.reduce_code("m").unwrap();
        assert_eq!((m.dimension, m.scale.value(), m.offset), (Dimension::LENGTH, 1.0, None));

        let pct = r.reduce_code("%").unwrap();
        assert!(pct.dimension.is_dimensionless());
        assert_eq!(pct.scale.value(), 0.01);

        let newton = r.reduce_code("kg.m/s2").unwrap();
        // hand-summed: kg → M¹, m → L¹, s2 in the denominator → T⁻²
        assert_eq!(newton.dimension, Dimension::new([1, 1, -2, 0, 0, 0, 0]));
        assert_eq!(newton.dimension, r.dimension_of("N").unwrap());
    }

    #[test]
    fn affine_rules() {
        let r = reg();
        assert!(matches!(r.reduce_code("Cel.m"), Err(Error::AffineInCompound(_))));
        assert!(matches!(r.reduce_code("mCel"), Err(Error::AffineInCompound(_))));
        assert!(matches!(r.reduce_code("Cel2"), Err(Error::AffineInCompound(_))));
        assert!(matches!(r.reduce_code("/Cel"), Err(Error::AffineInCompound(_))));
        assert_eq!(r.reduce_code("Cel").unwrap().offset, Some(273.15));
        assert_eq!(r.reduce_code("Cel{ambient}").unwrap().offset, Some(273.15));
    }

    #[test]
    fn commensurability() {
        let r = reg();
        let p = |c: &str| r.parse(c).unwrap();
        assert!(r.commensurable(&p("m"), &p("cm")).unwrap());
        assert!(r.commensurable(&p("m"), &p("m")).unwrap());
        assert!(!r.commensurable(&p("m"), &p("s")).unwrap());
        assert!(r.commensurable(&p("Hz"), &p("/s")).unwrap());
    }

    #[test]
    fn convert_examples() {
        let r = reg();
        let c = |v: f64, a: &str, b: &str| r.convert_codes(v, a, b).unwrap().value;
        assert_eq!(c(0.25, "m", "cm"), 25.0);
        assert_eq!(c(12.0, "cm", "m"), 0.12);
        assert_eq!(c(7.3, "m", "m"), 7.3);
        assert_eq!(c(25.0, "m/s", "km/h"), 90.0);
        assert_eq!(c(0.0, "Cel", "K"), 273.15);
        assert_eq!(c(273.15, "K", "Cel"), 0.0);
        assert_eq!(c(85.6, "%", "1"), 0.856);
        assert_eq!(c(1.0, "[ft_i]", "[in_i]"), 12.0);
        assert_eq!(c(1.0, "h", "s"), 3600.0);
        assert_eq!(c(1.0, "kN", "N"), 1000.0);
        assert_eq!(c(2.0, "L", "m3"), 0.002);
        assert_eq!(c(1.0, "kg.m/s2", "N"), 1.0);
    }

    #[test]
    fn convert_errors() {
        let r = reg();
        match r.convert_codes(1.0, "m", "s") {
            Err(Error::IncommensurableUnits {
                source_dimension,
                target_dimension,
                ..
            }) => {
                assert_eq!(source_dimension, Dimension::LENGTH);
                assert_eq!(target_dimension, Dimension::TIME);
            }
            other => panic!("expected IncommensurableUnits, got {other:?}"),
        }
        assert!(matches!(r.convert_codes(1.0, "Cel.m", "K.m"), Err(Error::AffineInCompound(_))));
        assert!(matches!(r.convert_codes(1.0, "xqz", "m"), Err(Error::UnknownUnit(_))));
        assert!(matches!(r.convert_codes(f64::NAN, "m", "cm"), Err(Error::NonFiniteValue)));
        assert!(matches!(r.convert_codes(1e308, "Ym", "ym"), Err(Error::NonFiniteValue)));
    }

    #[test]
    fn reference_anchors_mass_on_kilogram() {
        let r = reg();
        let g = r.reduce_code("g").unwrap();
        let reference = Reduced::reference(g.dimension);
        assert_eq!(convert_reduced(75.1, &g, &reference).unwrap(), 0.0751);
        let cel = r.reduce_code("Cel").unwrap();
        assert_eq!(convert_reduced(0.0, &cel, &Reduced::reference(cel.dimension)).unwrap(), 273.15);
    }
}
