//! Conversion factors kept as `num / den × 10^exp10`.
//!
//! Registry factors are short decimals and prefixes are exact powers of ten,
//! so keeping the decimal exponent apart from the integer mantissas lets
//! ratios such as `cm → m` or `m/s → km/h` cancel before any rounding happens.
//! `0.25 m` becomes `25 cm` rather than `25.000000000000004 cm`.

use std::fmt;
use std::ops::Mul;

use super::decimal::Decimal;

/// Largest integer magnitude representable exactly in an `f64`.
const EXACT_INT: f64 = 9_007_199_254_740_992.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scale {
    num: f64,
    den: f64,
    exp10: i32,
}

impl Scale {
    pub const ONE: Scale = Scale {
        num: 1.0,
        den: 1.0,
        exp10: 0,
    };

    pub fn pow10(exp10: i32) -> Scale {
        Scale {
            num: 1.0,
            den: 1.0,
            exp10,
        }
    }

    pub fn from_integer(value: u64) -> Scale {
        Scale {
            num: value as f64,
            den: 1.0,
            exp10: 0,
        }
        .normalized()
    }

    /// Parses a plain decimal (`1000`, `0.0254`, `1e-3`). Returns `None` for
    /// anything that is not a finite positive number.
    pub fn from_decimal(text: &str) -> Option<Scale> {
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int_part}{frac_part}");
        let digits = digits.trim_start_matches('0');
        if digits.is_empty() {
            return None;
        }
        let exp10 = exponent - frac_part.len() as i32;
        if digits.len() <= 15 {
            let num: u64 = digits.parse().ok()?;
            Some(
                Scale {
                    num: num as f64,
                    den: 1.0,
                    exp10,
                }
                .normalized(),
            )
        } else {
            let value: f64 = text.parse().ok()?;
            (value.is_finite() && value > 0.0).then_some(Scale {
                num: value,
                den: 1.0,
                exp10: 0,
            })
        }
    }

    pub fn recip(self) -> Scale {
        Scale {
            num: self.den,
            den: self.num,
            exp10: -self.exp10,
        }
    }

    pub fn powi(self, n: i32) -> Scale {
        let base = if n < 0 { self.recip() } else { self };
        let mut out = Scale::ONE;
        for _ in 0..n.unsigned_abs() {
            out = out * base;
        }
        out
    }

    /// Factor taking a value expressed in `self` to one expressed in `target`.
    pub fn ratio(self, target: Scale) -> Scale {
        self.mul(target.recip())
    }

    pub fn value(self) -> f64 {
        self.apply(1.0)
    }

    /// Multiplies `x` by this factor. Exact on the decimal form of `x`
    /// whenever the product terminates, rounded once at the end.
    pub fn apply(self, x: f64) -> f64 {
        if x == 0.0 || !x.is_finite() {
            return x;
        }
        self.apply_exact(x).unwrap_or_else(|| {
            let mut out = x;
            if self.num != 1.0 {
                out *= self.num;
            }
            if self.den != 1.0 {
                out /= self.den;
            }
            scale_pow10(out, self.exp10)
        })
    }

    fn apply_exact(self, x: f64) -> Option<f64> {
        if !(is_exact_int(self.num) && is_exact_int(self.den)) {
            return None;
        }
        let d = Decimal::from_f64(x)?
            .mul_int(self.num as i128)?
            .div_int(self.den as i128)?
            .shift(self.exp10);
        Some(d.to_f64())
    }

    fn normalized(mut self) -> Scale {
        if is_exact_int(self.num) && is_exact_int(self.den) {
            let g = gcd(self.num as u64, self.den as u64);
            if g > 1 {
                self.num /= g as f64;
                self.den /= g as f64;
            }
            while self.num >= 10.0 && self.num % 10.0 == 0.0 {
                self.num /= 10.0;
                self.exp10 += 1;
            }
            while self.den >= 10.0 && self.den % 10.0 == 0.0 {
                self.den /= 10.0;
                self.exp10 -= 1;
            }
        }
        self
    }
}

impl Mul for Scale {
    type Output = Scale;

    fn mul(self, other: Scale) -> Scale {
        Scale {
            num: self.num * other.num,
            den: self.den * other.den,
            exp10: self.exp10 + other.exp10,
        }
        .normalized()
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

fn is_exact_int(x: f64) -> bool {
    (1.0..=EXACT_INT).contains(&x) && x.fract() == 0.0
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `x × 10^e` as a shift of the decimal exponent of `x`'s shortest
/// representation, so `0.29 × 10^2` is `29` and `12 × 10^-2` is `0.12`.
fn scale_pow10(x: f64, e: i32) -> f64 {
    match Decimal::from_f64(x) {
        Some(d) if e != 0 => d.shift(e).to_f64(),
        _ => x,
    }
}
