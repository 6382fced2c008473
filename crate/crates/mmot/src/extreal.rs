//! Extended real values.
//!
//! Repulsive pairwise costs blow up on the diagonal, so transport values
//! live in `[0, +inf]`. `ExtReal` keeps the infinities typed instead of
//! relying on IEEE overflow: arithmetic is absorbing, comparisons are
//! total, and JSON round-trips use the tokens `"inf"` / `"-inf"` because
//! JSON has no native infinity. `NegInfinity` never appears as a cost;
//! it only shows up in report margins where a claimed finite bound is
//! compared against an infinite measurement.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

/// A finite `f64` or a signed infinity sentinel. Never NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    /// Wraps a finite value.
    ///
    /// Panics on NaN or infinite input: infinities must be introduced
    /// through the typed variants, never through float overflow.
    pub fn finite(value: f64) -> Self {
        assert!(value.is_finite(), "ExtReal::finite got {value}");
        ExtReal::Finite(value)
    }

    pub fn zero() -> Self {
        ExtReal::Finite(0.0)
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_infinite(self) -> bool {
        matches!(self, ExtReal::PosInfinity)
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Unwraps a finite value, panicking with `msg` on an infinity.
    pub fn expect_finite(self, msg: &str) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            other => panic!("{msg}: value is {other}"),
        }
    }

    /// Total order: `-inf < finite (by total_cmp) < +inf`.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInfinity, NegInfinity) => Ordering::Equal,
            (NegInfinity, _) => Ordering::Less,
            (_, NegInfinity) => Ordering::Greater,
            (PosInfinity, PosInfinity) => Ordering::Equal,
            (PosInfinity, _) => Ordering::Greater,
            (_, PosInfinity) => Ordering::Less,
            (Finite(a), Finite(b)) => a.total_cmp(b),
        }
    }

    /// Scales by a nonnegative weight with the integration convention
    /// `0 * inf = 0`, so that null sets never contribute to a cost.
    pub fn scale(self, weight: f64) -> Self {
        assert!(weight >= 0.0 && weight.is_finite(), "bad weight {weight}");
        match self {
            ExtReal::Finite(v) => ExtReal::finite(v * weight),
            inf => {
                if weight == 0.0 {
                    ExtReal::Finite(0.0)
                } else {
                    inf
                }
            }
        }
    }

    /// Difference with margin semantics: matching infinities cancel to 0.
    /// Used for report margins `claimed - measured`.
    pub fn sub_margin(self, other: Self) -> Self {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => ExtReal::finite(a - b),
            (PosInfinity, PosInfinity) | (NegInfinity, NegInfinity) => ExtReal::Finite(0.0),
            (PosInfinity, _) | (_, NegInfinity) => PosInfinity,
            (NegInfinity, _) | (_, PosInfinity) => NegInfinity,
        }
    }

    pub fn abs(self) -> Self {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v.abs()),
            _ => ExtReal::PosInfinity,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        use ExtReal::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => ExtReal::finite(a + b),
            (PosInfinity, NegInfinity) | (NegInfinity, PosInfinity) => {
                panic!("ExtReal: inf + (-inf) is undefined")
            }
            (PosInfinity, _) | (_, PosInfinity) => PosInfinity,
            (NegInfinity, _) | (_, NegInfinity) => NegInfinity,
        }
    }
}

impl AddAssign for ExtReal {
    fn add_assign(&mut self, rhs: ExtReal) {
        *self = *self + rhs;
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => write!(f, "inf"),
            ExtReal::NegInfinity => write!(f, "-inf"),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(value: f64) -> Self {
        if value.is_nan() {
            panic!("ExtReal::from got NaN");
        }
        if value == f64::INFINITY {
            ExtReal::PosInfinity
        } else if value == f64::NEG_INFINITY {
            ExtReal::NegInfinity
        } else {
            ExtReal::Finite(value)
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(*v),
            ExtReal::PosInfinity => serializer.serialize_str("inf"),
            ExtReal::NegInfinity => serializer.serialize_str("-inf"),
        }
    }
}

struct ExtRealVisitor;

impl<'de> Visitor<'de> for ExtRealVisitor {
    type Value = ExtReal;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a finite number or the string \"inf\" / \"-inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
        if v.is_finite() {
            Ok(ExtReal::Finite(v))
        } else {
            Err(E::custom("non-finite number; use the \"inf\" token"))
        }
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
        Ok(ExtReal::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
        Ok(ExtReal::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
        match v {
            "inf" => Ok(ExtReal::PosInfinity),
            "-inf" => Ok(ExtReal::NegInfinity),
            other => Err(E::custom(format!("unknown extended-real token {other:?}"))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(ExtRealVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addition_absorbs_infinity() {
        let c = ExtReal::finite(1.5) + ExtReal::PosInfinity;
        assert_eq!(c, ExtReal::PosInfinity);
        let d = ExtReal::finite(1.5) + ExtReal::finite(2.0);
        assert_eq!(d, ExtReal::finite(3.5));
    }

    #[test]
    fn zero_weight_kills_infinity() {
        assert_eq!(ExtReal::PosInfinity.scale(0.0), ExtReal::finite(0.0));
        assert_eq!(ExtReal::PosInfinity.scale(0.5), ExtReal::PosInfinity);
        assert_eq!(ExtReal::finite(4.0).scale(0.25), ExtReal::finite(1.0));
    }

    #[test]
    fn ordering_is_total() {
        let mut vals = vec![
            ExtReal::PosInfinity,
            ExtReal::finite(2.0),
            ExtReal::NegInfinity,
            ExtReal::finite(-1.0),
        ];
        vals.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(
            vals,
            vec![
                ExtReal::NegInfinity,
                ExtReal::finite(-1.0),
                ExtReal::finite(2.0),
                ExtReal::PosInfinity,
            ]
        );
    }

    #[test]
    fn json_round_trip_uses_inf_token() {
        let s = serde_json::to_string(&ExtReal::PosInfinity).unwrap();
        assert_eq!(s, "\"inf\"");
        let back: ExtReal = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ExtReal::PosInfinity);

        let s = serde_json::to_string(&ExtReal::finite(0.5)).unwrap();
        assert_eq!(s, "0.5");
        let back: ExtReal = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ExtReal::finite(0.5));
    }

    #[test]
    fn margin_of_matching_infinities_is_zero() {
        assert_eq!(
            ExtReal::PosInfinity.sub_margin(ExtReal::PosInfinity),
            ExtReal::finite(0.0)
        );
        assert_eq!(
            ExtReal::finite(1.0).sub_margin(ExtReal::PosInfinity),
            ExtReal::NegInfinity
        );
    }

    #[test]
    #[should_panic]
    fn nan_is_rejected() {
        let _ = ExtReal::finite(f64::NAN);
    }
}
