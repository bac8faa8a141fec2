use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// How the frequency integral in the fixed-point equation is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Normalization {
    /// `(1/2pi) int_0^{2pi} ... dw`.
    Normalized,
    /// `int_0^{2pi} ... dw`.
    RawDOmega,
}

/// Which aspect ratio multiplies the integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RatioReading {
    /// `y = p/n`.
    AsPrinted,
    /// `1/y = n/p`.
    Inverse,
}

/// Whether the solution is the transform of the `p x p` Gram matrix itself
/// or of its `n x n` companion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformRole {
    Direct,
    /// Converted to the `p x p` transform via
    /// `s = w/y + (1/y - 1)/z`.
    Companion,
}

/// One reading of the limiting-law fixed-point equation
/// `1/s = -z + r * I(s)`, `I(s) = c * int f/(1 + f s) dw`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct EquationVariant {
    pub normalization: Normalization,
    pub ratio: RatioReading,
    pub role: TransformRole,
}

impl Default for EquationVariant {
    /// The reading consistent with the `p^{-1}` normalization: its first
    /// moment is `gamma(0) n/p`, matching `p^{-2} E tr X X^T`.
    fn default() -> Self {
        EquationVariant {
            normalization: Normalization::Normalized,
            ratio: RatioReading::Inverse,
            role: TransformRole::Direct,
        }
    }
}

impl EquationVariant {
    pub const fn new(normalization: Normalization, ratio: RatioReading, role: TransformRole) -> Self {
        EquationVariant {
            normalization,
            ratio,
            role,
        }
    }

    /// The equation exactly as printed: normalized below, `y = p/n`.
    pub const AS_PRINTED: EquationVariant = EquationVariant::new(
        Normalization::Normalized,
        RatioReading::AsPrinted,
        TransformRole::Direct,
    );

    pub fn all() -> Vec<EquationVariant> {
        let mut out = Vec::with_capacity(8);
        for normalization in [Normalization::Normalized, Normalization::RawDOmega] {
            for ratio in [RatioReading::AsPrinted, RatioReading::Inverse] {
                for role in [TransformRole::Direct, TransformRole::Companion] {
                    out.push(EquationVariant::new(normalization, ratio, role));
                }
            }
        }
        out
    }

    /// Multiplier `r` of the integral for aspect ratio `y`.
    pub fn ratio_factor(&self, y: f64) -> f64 {
        match self.ratio {
            RatioReading::AsPrinted => y,
            RatioReading::Inverse => 1.0 / y,
        }
    }

    /// Factor `c` applied to the mean of the integrand over the nodes.
    pub fn integral_factor(&self) -> f64 {
        match self.normalization {
            Normalization::Normalized => 1.0,
            Normalization::RawDOmega => 2.0 * std::f64::consts::PI,
        }
    }

    /// Maps the equation's solution `w` to the `p x p` Stieltjes transform.
    pub fn to_direct(&self, w: Complex64, z: Complex64, y: f64) -> Complex64 {
        match self.role {
            TransformRole::Direct => w,
            TransformRole::Companion => w / y + (1.0 / y - 1.0) / z,
        }
    }

    /// Two variants give the same law at aspect ratio `y`.
    pub fn coincides_with(&self, other: &EquationVariant, y: f64) -> bool {
        if y == 1.0 {
            self.normalization == other.normalization
        } else {
            self == other
        }
    }
}

impl fmt::Display for EquationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self.normalization {
            Normalization::Normalized => "normalized",
            Normalization::RawDOmega => "raw",
        };
        let r = match self.ratio {
            RatioReading::AsPrinted => "y",
            RatioReading::Inverse => "yinv",
        };
        let t = match self.role {
            TransformRole::Direct => "direct",
            TransformRole::Companion => "companion",
        };
        write!(f, "{n}-{r}-{t}")
    }
}

impl FromStr for EquationVariant {
    type Err = Error;

    /// Accepts `normalized-yinv-direct` with `-`, `:`, `,` or `/` separators.
    fn from_str(s: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = s
            .split(['-', ':', ',', '/'])
            .map(str::trim)
            .collect();
        let bad = || Error::InvalidParameter(format!("unknown equation variant '{s}'; expected {{normalized|raw}}-{{y|yinv}}-{{direct|companion}}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let normalization = match parts[0] {
            "normalized" => Normalization::Normalized,
            "raw" => Normalization::RawDOmega,
            _ => return Err(bad()),
        };
        let ratio = match parts[1] {
            "y" => RatioReading::AsPrinted,
            "yinv" => RatioReading::Inverse,
            _ => return Err(bad()),
        };
        let role = match parts[2] {
            "direct" => TransformRole::Direct,
            "companion" => TransformRole::Companion,
            _ => return Err(bad()),
        };
        Ok(EquationVariant::new(normalization, ratio, role))
    }
}

impl From<EquationVariant> for String {
    fn from(v: EquationVariant) -> String {
        v.to_string()
    }
}

impl TryFrom<String> for EquationVariant {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_names() {
        for v in EquationVariant::all() {
            assert_eq!(v.to_string().parse::<EquationVariant>().unwrap(), v);
        }
        assert_eq!(EquationVariant::all().len(), 8);
        assert_eq!(
            "raw:y:companion".parse::<EquationVariant>().unwrap(),
            EquationVariant::new(Normalization::RawDOmega, RatioReading::AsPrinted, TransformRole::Companion)
        );
        assert!("normalised-y-direct".parse::<EquationVariant>().is_err());
        assert_eq!(
            serde_json::to_string(&EquationVariant::default()).unwrap(),
            "\"normalized-yinv-direct\""
        );
    }

    #[test]
    fn companion_conversion_preserves_mass() {
        // w ~ -1/z at infinity must map to s ~ -1/z
        let z = Complex64::new(0.0, 1e8);
        let v = EquationVariant::new(Normalization::Normalized, RatioReading::AsPrinted, TransformRole::Companion);
        let s = v.to_direct(-z.inv(), z, 0.5);
        assert!((s * z + 1.0).norm() < 1e-12);
    }

    #[test]
    fn coincidence_at_unit_ratio() {
        let all = EquationVariant::all();
        let normalized = all
            .iter()
            .filter(|v| v.coincides_with(&EquationVariant::default(), 1.0))
            .count();
        assert_eq!(normalized, 4);
        assert_eq!(
            all.iter()
                .filter(|v| v.coincides_with(&EquationVariant::default(), 0.5))
                .count(),
            1
        );
    }
}
