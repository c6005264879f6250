//! Exact decimal arithmetic on the shortest representation of an `f64`.
//!
//! A stored `0.29` is the decimal the author wrote, not the binary fraction
//! nearest to it. Scaling and offsetting that decimal exactly and rounding
//! once at the end keeps `0.29 m` equal to `29 cm` and `26.85 Cel` equal to
//! `300 K`, which in turn keeps facet boundaries independent of the unit a
//! filter was phrased in.

/// `mantissa × 10^exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Decimal {
    mantissa: i128,
    exp: i32,
}

/// Digits a quotient may grow by before it is declared non-terminating.
const MAX_EXTRA_DIGITS: usize = 40;

impl Decimal {
    pub(crate) fn from_f64(x: f64) -> Option<Decimal> {
        if !x.is_finite() {
            return None;
        }
        let text = format!("{x:e}");
        let (mantissa, exp) = text.split_once('e')?;
        let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        Some(Decimal {
            mantissa: format!("{int}{frac}").parse().ok()?,
            exp: exp.parse::<i32>().ok()? - frac.len() as i32,
        })
    }

    /// Correctly rounded.
    pub(crate) fn to_f64(self) -> f64 {
        format!("{}e{}", self.mantissa, self.exp)
            .parse()
            .expect("valid float text")
    }

    pub(crate) fn shift(self, by: i32) -> Decimal {
        Decimal {
            exp: self.exp + by,
            ..self
        }
    }

    pub(crate) fn mul_int(self, k: i128) -> Option<Decimal> {
        Some(Decimal {
            mantissa: self.mantissa.checked_mul(k)?,
            ..self
        })
    }

    /// Exact quotient, or `None` when it does not terminate.
    pub(crate) fn div_int(self, d: i128) -> Option<Decimal> {
        let (mut m, mut exp) = (self.mantissa, self.exp);
        for _ in 0..=MAX_EXTRA_DIGITS {
            if m % d == 0 {
                return Some(Decimal { mantissa: m / d, exp });
            }
            m = m.checked_mul(10)?;
            exp -= 1;
        }
        None
    }

    pub(crate) fn checked_add(self, other: Decimal) -> Option<Decimal> {
        let (hi, lo) = if self.exp >= other.exp { (self, other) } else { (other, self) };
        let gap = u32::try_from(hi.exp - lo.exp).ok()?;
        let aligned = hi.mantissa.checked_mul(10i128.checked_pow(gap)?)?;
        Some(Decimal {
            mantissa: aligned.checked_add(lo.mantissa)?,
            exp: lo.exp,
        })
    }
}

/// `a + b`, exact on the decimal forms when they fit.
pub(crate) fn add(a: f64, b: f64) -> f64 {
    Decimal::from_f64(a)
        .zip(Decimal::from_f64(b))
        .and_then(|(x, y)| x.checked_add(y))
        .map_or(a + b, Decimal::to_f64)
}
