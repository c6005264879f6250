use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Base dimension symbols in exponent order.
pub const BASE_SYMBOLS: [&str; 7] = ["L", "M", "T", "I", "Θ", "N", "J"];

/// Exponents over the seven SI base dimensions, ordered
/// length, mass, time, electric current, temperature, amount of substance,
/// luminous intensity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dimension([i16; 7]);

impl Dimension {
    pub const DIMENSIONLESS: Dimension = Dimension([0; 7]);
    pub const LENGTH: Dimension = Dimension([1, 0, 0, 0, 0, 0, 0]);
    pub const MASS: Dimension = Dimension([0, 1, 0, 0, 0, 0, 0]);
    pub const TIME: Dimension = Dimension([0, 0, 1, 0, 0, 0, 0]);
    pub const TEMPERATURE: Dimension = Dimension([0, 0, 0, 0, 1, 0, 0]);

    pub const fn new(exponents: [i16; 7]) -> Self {
        Dimension(exponents)
    }

    pub fn exponents(&self) -> [i16; 7] {
        self.0
    }

    pub fn is_dimensionless(&self) -> bool {
        self.0 == [0; 7]
    }

    pub fn length(&self) -> i16 {
        self.0[0]
    }

    pub fn mass(&self) -> i16 {
        self.0[1]
    }

    pub fn powi(self, n: i32) -> Self {
        let mut out = self.0;
        for e in &mut out {
            *e = (*e as i32 * n) as i16;
        }
        Dimension(out)
    }
}

impl Add for Dimension {
    type Output = Dimension;

    fn add(self, rhs: Dimension) -> Dimension {
        let mut out = self.0;
        for (e, r) in out.iter_mut().zip(rhs.0) {
            *e += r;
        }
        Dimension(out)
    }
}

impl Sub for Dimension {
    type Output = Dimension;

    fn sub(self, rhs: Dimension) -> Dimension {
        self + (-rhs)
    }
}

impl Neg for Dimension {
    type Output = Dimension;

    fn neg(self) -> Dimension {
        self.powi(-1)
    }
}

impl Mul<i32> for Dimension {
    type Output = Dimension;

    fn mul(self, rhs: i32) -> Dimension {
        self.powi(rhs)
    }
}

impl fmt::Display for Dimension {
    /// Renders as e.g. `L.T-2`; the dimensionless vector renders as `1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dimensionless() {
            return f.write_str("1");
        }
        let mut first = true;
        for (sym, e) in BASE_SYMBOLS.iter().zip(self.0) {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str(".")?;
            }
            first = false;
            f.write_str(sym)?;
            if e != 1 {
                write!(f, "{e}")?;
            }
        }
        Ok(())
    }
}
