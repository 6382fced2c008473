//! Repulsive pairwise cost families.
//!
//! A cost is built from a pointwise profile `phi: (0, inf) -> [0, inf)`
//! that is continuous, strictly decreasing, and blows up at the origin;
//! the tuple cost sums `phi(|x_i - x_j|)` over unordered pairs. Two
//! families are provided:
//!
//! * power laws `phi(t) = t^-s` with `s > 0` (Coulomb is `s = 1`), with
//!   closed-form inverse and derivative envelopes;
//! * table-driven profiles interpolated by a monotone cubic (Fritsch and
//!   Carlson tangents), inverted by bisection. Outside the tabulated
//!   range the profile is clamped to its end values, so a table cost is
//!   bounded by its value at the smallest tabulated abscissa.
//!
//! An optional truncation level `alpha` clamps the profile at
//! `phi(alpha)`, which bounds the cost and keeps it continuous — the
//! form every dual computation here goes through.

use crate::extreal::ExtReal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("power-law exponent must be positive and finite, got {0}")]
    BadExponent(f64),
    #[error("distance must be nonnegative, got {0}")]
    NegativeDistance(f64),
    #[error("value {0} is outside the range of phi")]
    OutOfRange(f64),
    #[error("truncation level must be positive and finite, got {0}")]
    BadTruncation(f64),
    #[error("operation requires a truncated cost")]
    TruncationMissing,
    #[error("derivative bounds are only available for the power-law family")]
    NotDifferentiable,
    #[error("cost table invalid: {0}")]
    BadTable(&'static str),
    #[error("need at least 2 marginals, got {0}")]
    TooFewMarginals(usize),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("position dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Profile {
    Power { exponent: f64 },
    Table(MonotoneTable),
}

/// Strictly decreasing tabulated profile with monotone cubic Hermite
/// interpolation. Tangent limiting keeps the interpolant monotone, so the
/// bisection inverse is well defined.
#[derive(Clone, Debug, PartialEq)]
struct MonotoneTable {
    ts: Vec<f64>,
    values: Vec<f64>,
    tangents: Vec<f64>,
}

impl MonotoneTable {
    fn new(points: &[(f64, f64)]) -> Result<Self, CostError> {
        if points.len() < 2 {
            return Err(CostError::BadTable("need at least two points"));
        }
        let ts: Vec<f64> = points.iter().map(|p| p.0).collect();
        let values: Vec<f64> = points.iter().map(|p| p.1).collect();
        if ts.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(CostError::BadTable("abscissae must be positive and finite"));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CostError::BadTable("abscissae must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(CostError::BadTable("values must be nonnegative and finite"));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CostError::BadTable("values must be strictly decreasing"));
        }
        // Fritsch-Carlson tangents: secant averages, limited to keep the
        // Hermite pieces monotone.
        let k = ts.len();
        let secants: Vec<f64> = (0..k - 1)
            .map(|i| (values[i + 1] - values[i]) / (ts[i + 1] - ts[i]))
            .collect();
        let mut tangents = vec![0.0; k];
        tangents[0] = secants[0];
        tangents[k - 1] = secants[k - 2];
        for i in 1..k - 1 {
            tangents[i] = 0.5 * (secants[i - 1] + secants[i]);
        }
        for i in 0..k - 1 {
            let d = secants[i];
            let a = tangents[i] / d;
            let b = tangents[i + 1] / d;
            let norm = (a * a + b * b).sqrt();
            if norm > 3.0 {
                let tau = 3.0 / norm;
                tangents[i] = tau * a * d;
                tangents[i + 1] = tau * b * d;
            }
        }
        Ok(MonotoneTable {
            ts,
            values,
            tangents,
        })
    }

    /// Clamped evaluation: constant extension outside the table.
    fn eval(&self, t: f64) -> f64 {
        let k = self.ts.len();
        if t <= self.ts[0] {
            return self.values[0];
        }
        if t >= self.ts[k - 1] {
            return self.values[k - 1];
        }
        let i = match self.ts.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let h = self.ts[i + 1] - self.ts[i];
        let u = (t - self.ts[i]) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.values[i]
            + h10 * h * self.tangents[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.tangents[i + 1]
    }

    fn inverse(&self, v: f64) -> Result<f64, CostError> {
        let k = self.ts.len();
        let (v_max, v_min) = (self.values[0], self.values[k - 1]);
        if v > v_max || v < v_min {
            return Err(CostError::OutOfRange(v));
        }
        let (mut lo, mut hi) = (self.ts[0], self.ts[k - 1]);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) > v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// A repulsive pairwise cost: the profile `phi` plus an optional
/// truncation level.
#[derive(Clone, Debug, PartialEq)]
pub struct RepulsiveCost {
    profile: Profile,
    truncation: Option<f64>,
}

impl RepulsiveCost {
    /// Power law `phi(t) = t^-s`, `s > 0`.
    pub fn power(exponent: f64) -> Result<Self, CostError> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(CostError::BadExponent(exponent));
        }
        Ok(RepulsiveCost {
            profile: Profile::Power { exponent },
            truncation: None,
        })
    }

    /// The Coulomb profile `phi(t) = 1/t`.
    pub fn coulomb() -> Self {
        Self::power(1.0).expect("exponent 1 is valid")
    }

    /// Table-driven profile through the given `(t, phi(t))` points.
    pub fn table(points: &[(f64, f64)]) -> Result<Self, CostError> {
        Ok(RepulsiveCost {
            profile: Profile::Table(MonotoneTable::new(points)?),
            truncation: None,
        })
    }

    /// Same profile clamped at `phi(alpha)`.
    pub fn truncated(&self, alpha: f64) -> Result<Self, CostError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CostError::BadTruncation(alpha));
        }
        Ok(RepulsiveCost {
            profile: self.profile.clone(),
            truncation: Some(alpha),
        })
    }

    /// Same profile with the truncation removed.
    pub fn untruncated(&self) -> Self {
        RepulsiveCost {
            profile: self.profile.clone(),
            truncation: None,
        }
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn is_truncated(&self) -> bool {
        self.truncation.is_some()
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self.profile {
            Profile::Power { exponent } => Some(exponent),
            Profile::Table(_) => None,
        }
    }

    /// `phi(t)` for `t >= 0`; the `+inf` sentinel at `t = 0`.
    pub fn phi(&self, t: f64) -> Result<ExtReal, CostError> {
        if t < 0.0 || t.is_nan() {
            return Err(CostError::NegativeDistance(t));
        }
        if t == 0.0 {
            return Ok(ExtReal::PosInfinity);
        }
        Ok(ExtReal::finite(self.phi_positive(t)))
    }

    /// `min(phi(t), phi(alpha))`; finite everywhere, including `t = 0`.
    pub fn phi_truncated(&self, t: f64) -> Result<ExtReal, CostError> {
        let alpha = self.truncation.ok_or(CostError::TruncationMissing)?;
        if t < 0.0 || t.is_nan() {
            return Err(CostError::NegativeDistance(t));
        }
        let cap = self.phi_positive(alpha);
        if t == 0.0 {
            return Ok(ExtReal::finite(cap));
        }
        Ok(ExtReal::finite(self.phi_positive(t).min(cap)))
    }

    /// The clamp value `phi(alpha)` of a truncated cost.
    pub fn truncation_value(&self) -> Result<f64, CostError> {
        let alpha = self.truncation.ok_or(CostError::TruncationMissing)?;
        Ok(self.phi_positive(alpha))
    }

    fn phi_positive(&self, t: f64) -> f64 {
        debug_assert!(t > 0.0);
        match &self.profile {
            Profile::Power { exponent } => t.powf(-exponent),
            Profile::Table(table) => table.eval(t),
        }
    }

    /// Hot-path profile evaluation on a known-nonnegative distance.
    pub(crate) fn phi_dist(&self, dist: f64, truncated: bool) -> ExtReal {
        debug_assert!(dist >= 0.0);
        if truncated {
            let alpha = self.truncation.expect("caller checked truncation");
            let cap = self.phi_positive(alpha);
            if dist == 0.0 {
                ExtReal::finite(cap)
            } else {
                ExtReal::finite(self.phi_positive(dist).min(cap))
            }
        } else if dist == 0.0 {
            ExtReal::PosInfinity
        } else {
            ExtReal::finite(self.phi_positive(dist))
        }
    }

    /// Unique `t` with `phi(t) = v` (strict monotonicity). Closed form
    /// for power laws, bisection to `1e-12` for tables.
    pub fn phi_inverse(&self, v: f64) -> Result<f64, CostError> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(CostError::OutOfRange(v));
        }
        match &self.profile {
            Profile::Power { exponent } => Ok(v.powf(-1.0 / exponent)),
            Profile::Table(table) => table.inverse(v),
        }
    }

    /// The guaranteed separation radius `phi^-1(n^2 (n-1) / 2 * phi(beta))`
    /// of optimal supports: any truncation below it leaves the optimal
    /// value untouched. Strictly below `beta` because the multiplier
    /// exceeds one and `phi` is strictly decreasing.
    pub fn separation_threshold(&self, n: usize, beta: f64) -> Result<f64, CostError> {
        if n < 2 {
            return Err(CostError::TooFewMarginals(n));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(CostError::NonPositiveRadius(beta));
        }
        let n = n as f64;
        let multiplier = n * n * (n - 1.0) / 2.0;
        let phi_beta = self
            .phi(beta)?
            .expect_finite("phi is finite at positive arguments");
        self.phi_inverse(multiplier * phi_beta)
    }

    /// Total cost of a configuration: the sum of `phi` over the
    /// `n (n-1) / 2` unordered pairs of positions; `+inf` if a pair
    /// coincides and the cost is untruncated.
    pub fn pairwise_cost(&self, points: &[&[f64]], truncated: bool) -> Result<ExtReal, CostError> {
        if truncated && self.truncation.is_none() {
            return Err(CostError::TruncationMissing);
        }
        for pair in points.windows(2) {
            if pair[0].len() != pair[1].len() {
                return Err(CostError::DimensionMismatch(pair[0].len(), pair[1].len()));
            }
        }
        let mut total = ExtReal::zero();
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let dist = crate::measures::euclidean(points[i], points[j]);
                total += self.phi_dist(dist, truncated);
                if total.is_pos_infinite() {
                    return Ok(total);
                }
            }
        }
        Ok(total)
    }

    /// `sup_{s > t} |phi'(s)|`: the Lipschitz envelope of the profile away
    /// from the origin. For `phi(t) = t^-s` the supremum sits at `s = t`
    /// and equals `s * t^(-s-1)`. Power-law family only.
    pub fn lipschitz_bound(&self, t: f64) -> Result<f64, CostError> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(CostError::NonPositiveRadius(t));
        }
        match self.profile {
            Profile::Power { exponent } => Ok(exponent * t.powf(-exponent - 1.0)),
            Profile::Table(_) => Err(CostError::NotDifferentiable),
        }
    }

    /// `sup_{s > t} (phi''(s) - phi'(s)/s)`: the semiconcavity envelope.
    /// For the power law with exponent `e` the expression is
    /// `e (e+2) s^(-e-2)`, decreasing, so the supremum is at `s = t`.
    pub fn semiconcavity_bound(&self, t: f64) -> Result<f64, CostError> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(CostError::NonPositiveRadius(t));
        }
        match self.profile {
            Profile::Power { exponent } => {
                Ok(exponent * (exponent + 2.0) * t.powf(-exponent - 2.0))
            }
            Profile::Table(_) => Err(CostError::NotDifferentiable),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CostRepr {
    Power {
        exponent: f64,
        truncation: Option<f64>,
    },
    Table {
        points: Vec<[f64; 2]>,
        truncation: Option<f64>,
    },
}

impl Serialize for RepulsiveCost {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = match &self.profile {
            Profile::Power { exponent } => CostRepr::Power {
                exponent: *exponent,
                truncation: self.truncation,
            },
            Profile::Table(table) => CostRepr::Table {
                points: table
                    .ts
                    .iter()
                    .zip(&table.values)
                    .map(|(&t, &v)| [t, v])
                    .collect(),
                truncation: self.truncation,
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RepulsiveCost {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = CostRepr::deserialize(deserializer)?;
        let build = |profile: Result<RepulsiveCost, CostError>, truncation: Option<f64>| {
            let cost = profile.map_err(serde::de::Error::custom)?;
            match truncation {
                Some(alpha) => cost.truncated(alpha).map_err(serde::de::Error::custom),
                None => Ok(cost),
            }
        };
        match repr {
            CostRepr::Power {
                exponent,
                truncation,
            } => build(RepulsiveCost::power(exponent), truncation),
            CostRepr::Table { points, truncation } => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                build(RepulsiveCost::table(&pts), truncation)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phi_examples() {
        let coulomb = RepulsiveCost::coulomb();
        assert_eq!(coulomb.phi(2.0).unwrap(), ExtReal::finite(0.5));
        let s2 = RepulsiveCost::power(2.0).unwrap();
        assert_eq!(s2.phi(0.5).unwrap(), ExtReal::finite(4.0));
        assert_eq!(coulomb.phi(0.0).unwrap(), ExtReal::PosInfinity);
        assert!(coulomb.phi(-1.0).is_err());
        // blow-up near the origin
        assert!(coulomb.phi(1e-12).unwrap().expect_finite("") > 1e6);
    }

    #[test]
    fn phi_inverse_examples() {
        let coulomb = RepulsiveCost::coulomb();
        assert!((coulomb.phi_inverse(2.0).unwrap() - 0.5).abs() < 1e-15);
        let s2 = RepulsiveCost::power(2.0).unwrap();
        assert!((s2.phi_inverse(4.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separation_threshold_examples() {
        let coulomb = RepulsiveCost::coulomb();
        assert!((coulomb.separation_threshold(2, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((coulomb.separation_threshold(3, 1.0).unwrap() - 1.0 / 9.0).abs() < 1e-12);
        let s2 = RepulsiveCost::power(2.0).unwrap();
        // phi(2) = 0.25, doubled = 0.5, inverse = sqrt(2); cross-checked
        // through phi_inverse directly.
        let direct = s2.separation_threshold(2, 2.0).unwrap();
        assert!((direct - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((direct - s2.phi_inverse(0.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn pairwise_cost_examples() {
        let coulomb = RepulsiveCost::coulomb();
        let a = [0.0];
        let b = [1.0];
        let c = [2.0];
        assert_eq!(
            coulomb.pairwise_cost(&[&a, &b], false).unwrap(),
            ExtReal::finite(1.0)
        );
        let collinear = coulomb.pairwise_cost(&[&a, &b, &c], false).unwrap();
        assert!((collinear.expect_finite("") - 2.5).abs() < 1e-15);

        let truncated = coulomb.truncated(0.5).unwrap();
        let close = [0.1];
        assert_eq!(
            truncated.pairwise_cost(&[&a, &close], true).unwrap(),
            ExtReal::finite(2.0)
        );
        // coincident pair, untruncated: the infinity sentinel
        assert_eq!(
            coulomb.pairwise_cost(&[&a, &a], false).unwrap(),
            ExtReal::PosInfinity
        );
    }

    #[test]
    fn derivative_envelopes() {
        let coulomb = RepulsiveCost::coulomb();
        assert!((coulomb.lipschitz_bound(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((coulomb.lipschitz_bound(0.5).unwrap() - 4.0).abs() < 1e-12);
        let s2 = RepulsiveCost::power(2.0).unwrap();
        assert!((s2.lipschitz_bound(1.0).unwrap() - 2.0).abs() < 1e-15);

        // phi'' = 2 s^-3 and -phi'/s = s^-3 sum to 3 s^-3 for Coulomb.
        assert!((coulomb.semiconcavity_bound(1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((coulomb.semiconcavity_bound(2.0).unwrap() - 3.0 / 8.0).abs() < 1e-15);
        assert!((s2.semiconcavity_bound(1.0).unwrap() - 8.0).abs() < 1e-15);

        let table = RepulsiveCost::table(&[(0.5, 2.0), (1.0, 1.0), (2.0, 0.5)]).unwrap();
        assert!(table.lipschitz_bound(1.0).is_err());
        assert!(table.semiconcavity_bound(1.0).is_err());
    }

    #[test]
    fn table_interpolates_and_inverts() {
        // Sample the Coulomb profile on a log grid (resolves the steep
        // region); the interpolant must track it and the bisection
        // inverse must round-trip.
        let points: Vec<(f64, f64)> = (0..=60)
            .map(|k| {
                let t = 0.25 * (40.0f64).powf(k as f64 / 60.0);
                (t, 1.0 / t)
            })
            .collect();
        let table = RepulsiveCost::table(&points).unwrap();
        for k in 0..200 {
            let t = 0.25 + 9.7 * k as f64 / 199.0;
            let v = table.phi(t).unwrap().expect_finite("");
            assert!(
                (v - 1.0 / t).abs() < 2e-3 * (1.0 / t),
                "interp off at t={t}: {v}"
            );
        }
        for &v in &[0.2, 0.5, 1.0, 2.5] {
            let t = table.phi_inverse(v).unwrap();
            let back = table.phi(t).unwrap().expect_finite("");
            assert!(
                (back - v).abs() < 1e-9,
                "inverse round-trip {v} -> {t} -> {back}"
            );
        }
        assert!(table.phi_inverse(100.0).is_err());

        assert!(RepulsiveCost::table(&[(1.0, 1.0), (2.0, 1.5)]).is_err());
        assert!(RepulsiveCost::table(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn truncated_profile_is_bounded_and_continuous_at_the_clamp() {
        let cost = RepulsiveCost::coulomb().truncated(0.25).unwrap();
        let cap = cost.truncation_value().unwrap();
        assert!((cap - 4.0).abs() < 1e-15);
        for &t in &[0.0, 0.01, 0.249, 0.25, 0.2500001, 1.0, 100.0] {
            let v = cost.phi_truncated(t).unwrap().expect_finite("");
            assert!(v <= cap + 1e-15);
        }
        let just_below = cost.phi_truncated(0.25 - 1e-9).unwrap().expect_finite("");
        let just_above = cost.phi_truncated(0.25 + 1e-9).unwrap().expect_finite("");
        assert!((just_below - just_above).abs() < 1e-7);
    }

    #[test]
    fn serde_round_trip() {
        let cost = RepulsiveCost::power(2.0).unwrap().truncated(0.5).unwrap();
        let json = serde_json::to_string(&cost).unwrap();
        let back: RepulsiveCost = serde_json::from_str(&json).unwrap();
        assert_eq!(cost, back);
        assert!(json.contains("\"kind\":\"power\""));

        let plain: RepulsiveCost =
            serde_json::from_str(r#"{"kind":"power","exponent":1.0,"truncation":null}"#).unwrap();
        assert_eq!(plain, RepulsiveCost::coulomb());
    }

    proptest! {
        #[test]
        fn inverse_round_trip_power(s in 0.25..4.0f64, t in 0.001..10.0f64) {
            let cost = RepulsiveCost::power(s).unwrap();
            let v = cost.phi(t).unwrap().expect_finite("");
            let back = cost.phi_inverse(v).unwrap();
            prop_assert!((back - t).abs() <= 1e-12 * t.max(1.0));
        }

        #[test]
        fn separation_threshold_below_radius(
            s in 0.25..4.0f64,
            n in 2usize..6,
            beta in 0.001..50.0f64,
        ) {
            let cost = RepulsiveCost::power(s).unwrap();
            let alpha = cost.separation_threshold(n, beta).unwrap();
            prop_assert!(alpha > 0.0);
            prop_assert!(alpha < beta);
        }

        #[test]
        fn truncation_caps_pointwise(
            s in 0.25..3.0f64,
            alpha in 0.05..2.0f64,
            t in 0.0..5.0f64,
        ) {
            let cost = RepulsiveCost::power(s).unwrap().truncated(alpha).unwrap();
            let v = cost.phi_truncated(t).unwrap().expect_finite("");
            let cap = cost.truncation_value().unwrap();
            prop_assert!(v <= cap + 1e-15);
            if t > 0.0 {
                let raw = cost.phi(t).unwrap().expect_finite("");
                prop_assert!(v <= raw + 1e-15);
                if t >= alpha {
                    prop_assert!((v - raw).abs() < 1e-12 * raw.max(1.0));
                }
            }
        }
    }
}
