//! Decimal text for floating-point values.

/// Shortest decimal string that parses back to exactly `value`.
/// Integral values carry no trailing `.0`.
pub fn format_decimal(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    format!("{value}")
}

/// Parses decimal text, rejecting NaN and infinities.
pub fn parse_decimal(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.to_ascii_lowercase().contains("inf") {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Serde adapter writing `f64` as shortest round-trip decimal text and
/// accepting either text or a JSON number on input.
pub mod as_string {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_decimal(*value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => super::parse_decimal(&t).ok_or_else(|| de::Error::custom(format!("invalid decimal {t:?}"))),
        }
    }
}
