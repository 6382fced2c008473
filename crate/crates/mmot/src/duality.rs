//! Kantorovich potentials for the multimarginal dual problem.
//!
//! The dual maximizes `n * integral(u d rho)` over potentials `u` with
//! `u(x_1) + ... + u(x_n) <= c(x_1, ..., x_n)` for every tuple. Because
//! the cost is permutation-symmetric, it is enough to impose the
//! constraints on sorted index tuples; the LP actually solved here is
//! the symmetrized primal over multisets
//!
//! `min sum_M c(M) q_M  s.t.  sum_M mult_a(M) q_M = n w_a,  q >= 0`,
//!
//! whose simplex multipliers are exactly the optimal potential values.
//! This cuts the constraint count from `m^n` to `C(m+n-1, n)` and comes
//! with the same dual certificate as the primal solver.
//!
//! A potential is *canonical* when it is a fixed point of the averaged
//! improvement map `u <- (ubar + (n-1) u) / n` with
//! `ubar(x) = inf { c(x, y_2, .., y_n) - sum u(y_j) }`. Canonical
//! potentials extend pointwise off the atoms through the same infimum,
//! and the extension inherits boundedness, Lipschitz, and semiconcavity
//! constants from the profile's derivative envelopes. The infimum here
//! ranges over atom tuples — the natural finite relaxation for a
//! discrete marginal; it upper-bounds the full-space infimum, and the
//! verifiers treat it as such.

use crate::costs::{CostError, RepulsiveCost};
use crate::extreal::ExtReal;
use crate::measures::{euclidean, DiscreteMeasure, MeasureError};
use crate::simplex::{self, LinearProgram, LpError, LpOutcome, SparseColumn};
use crate::solver::{SolverError, TransportPlan};
use crate::tuples;
use serde::ser::SerializeStruct;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DualityError {
    #[error("need at least 2 marginals, got {0}")]
    TooFewMarginals(usize),
    #[error("dual solve requires a truncated (bounded) cost")]
    TruncationRequired,
    #[error("dual LP reported infeasible, which is impossible for a bounded cost")]
    UnexpectedInfeasible,
    #[error("potential violates dual feasibility by {0}")]
    Infeasible(f64),
    #[error("canonicalization stalled at sup-change {residual} after {iterations} iterations")]
    Stalled { residual: f64, iterations: usize },
    #[error("pointwise extension requires a canonical potential")]
    NotCanonical,
    #[error("potential value count {0} does not match atom count {1}")]
    WrongValueCount(usize, usize),
    #[error("shift count {0} does not match marginal count {1}")]
    WrongShiftCount(usize, usize),
    #[error("shifts must sum to zero within 1e-12, got {0}")]
    BadShifts(f64),
    #[error("plan has no support entry above the mass threshold")]
    EmptySupport,
    #[error("evaluation point has dimension {0}, expected {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Per-atom feasibility tolerance for dual constraints.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;

/// Dual variables on the atoms: the single symmetric potential, an
/// optional shifted `n`-tuple with shifts summing to zero, and the
/// canonical (inf-convolution fixed point) flag.
#[derive(Clone, Debug)]
pub struct PotentialSet {
    measure: DiscreteMeasure,
    n: usize,
    values: Vec<f64>,
    tuple: Option<Vec<Vec<f64>>>,
    canonical: bool,
}

impl PotentialSet {
    /// Builds a potential and checks dual feasibility against the cost
    /// (as configured: truncated costs check the clamped constraints).
    pub fn new_feasible(
        measure: DiscreteMeasure,
        n: usize,
        values: Vec<f64>,
        cost: &RepulsiveCost,
    ) -> Result<Self, DualityError> {
        if n < 2 {
            return Err(DualityError::TooFewMarginals(n));
        }
        if values.len() != measure.len() {
            return Err(DualityError::WrongValueCount(values.len(), measure.len()));
        }
        let pot = PotentialSet {
            measure,
            n,
            values,
            tuple: None,
            canonical: false,
        };
        let margin = pot.feasibility_margin(cost);
        if margin > DUAL_FEASIBILITY_TOL {
            return Err(DualityError::Infeasible(margin));
        }
        Ok(pot)
    }

    fn new_unchecked(measure: DiscreteMeasure, n: usize, values: Vec<f64>) -> Self {
        PotentialSet {
            measure,
            n,
            values,
            tuple: None,
            canonical: false,
        }
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        &self.measure
    }

    pub fn marginal_count(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tuple(&self) -> Option<&[Vec<f64>]> {
        self.tuple.as_deref()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Dual objective `n * sum_a w(a) u(a)`.
    pub fn objective(&self) -> f64 {
        let s: f64 = self
            .measure
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, u)| w * u)
            .sum();
        self.n as f64 * s
    }

    /// Worst violation `max_T (sum_i u(T_i) - c(T))` over sorted tuples;
    /// tuples with infinite cost cannot be violated and are skipped.
    /// Nonpositive means feasible.
    pub fn feasibility_margin(&self, cost: &RepulsiveCost) -> f64 {
        let truncated = cost.is_truncated();
        let mut worst = f64::NEG_INFINITY;
        for t in tuples::multisets(self.measure.len(), self.n) {
            let c = crate::solver::tuple_cost_on_measure(&self.measure, cost, &t, truncated);
            let ExtReal::Finite(c) = c else { continue };
            let s: f64 = t.iter().map(|&a| self.values[a]).sum();
            worst = worst.max(s - c);
        }
        worst
    }
}

impl Serialize for PotentialSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PotentialSet", 5)?;
        st.serialize_field("atoms", &self.measure)?;
        st.serialize_field("u", &self.values)?;
        st.serialize_field("tuple", &self.tuple)?;
        st.serialize_field("canonical", &self.canonical)?;
        st.serialize_field("objective", &self.objective())?;
        st.end()
    }
}

/// A dual solve: the potential plus its LP certificate.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub potential: PotentialSet,
    /// Optimal value of the symmetrized primal LP (equals the dual
    /// objective up to the certificate gap).
    pub primal_value: f64,
    /// `|c . q - y . b|` of the underlying LP, recomputed.
    pub gap: f64,
    /// Most negative reduced cost — dual feasibility margin of the LP.
    pub min_reduced_cost: f64,
    pub iterations: usize,
    pub certificate_ok: bool,
}

/// Maximizes `n * integral(u d rho)` subject to every sorted-tuple
/// constraint, for a truncated cost (bounded, so the LP is feasible and
/// bounded). The returned objective matches the primal optimum within
/// the certificate gap.
pub fn solve_dual(
    measure: &DiscreteMeasure,
    n: usize,
    cost: &RepulsiveCost,
) -> Result<DualSolution, DualityError> {
    if n < 2 {
        return Err(DualityError::TooFewMarginals(n));
    }
    if !cost.is_truncated() {
        return Err(DualityError::TruncationRequired);
    }
    let m = measure.len();
    let sorted_tuples = tuples::multisets(m, n);

    let mut columns = Vec::with_capacity(sorted_tuples.len());
    let mut objective = Vec::with_capacity(sorted_tuples.len());
    for t in &sorted_tuples {
        let c = crate::solver::tuple_cost_on_measure(measure, cost, t, true)
            .expect_finite("truncated costs are finite");
        objective.push(c);
        columns.push(SparseColumn {
            entries: tuples::multiplicities(t)
                .into_iter()
                .map(|(a, mult)| (a, mult as f64))
                .collect(),
        });
    }
    let cost_scale = objective.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let rhs: Vec<f64> = measure.weights().iter().map(|&w| n as f64 * w).collect();
    let lp = LinearProgram {
        nrows: m,
        columns,
        objective,
        rhs,
    };

    match simplex::solve(&lp)? {
        LpOutcome::Infeasible { .. } => Err(DualityError::UnexpectedInfeasible),
        LpOutcome::Optimal(sol) => {
            let potential = PotentialSet::new_unchecked(measure.clone(), n, sol.duals.clone());
            let margin = potential.feasibility_margin(cost);
            let certificate_ok = sol.primal_residual <= 1e-9 * n as f64
                && sol.duality_gap <= 1e-8 * (1.0 + sol.objective.abs())
                && margin <= DUAL_FEASIBILITY_TOL.max(1e-9 * cost_scale);
            Ok(DualSolution {
                potential,
                primal_value: sol.objective,
                gap: sol.duality_gap,
                min_reduced_cost: sol.min_reduced_cost,
                iterations: sol.iterations,
                certificate_ok,
            })
        }
    }
}

/// Precomputed competitor data for the inf-convolution: every
/// `(n-1)`-multiset of atoms with its internal pair cost and, per atom,
/// the cross cost to the multiset. Infinite entries (coinciding atoms
/// under an untruncated cost) are `f64::INFINITY` and drop out of the
/// minima.
struct CompetitorTable {
    sets: Vec<Vec<usize>>,
    inner: Vec<f64>,
    cross: Vec<Vec<f64>>,
}

impl CompetitorTable {
    fn new(measure: &DiscreteMeasure, cost: &RepulsiveCost, n: usize) -> Self {
        let truncated = cost.is_truncated();
        let m = measure.len();
        let sets = tuples::multisets(m, n - 1);
        let inner: Vec<f64> = sets
            .iter()
            .map(
                |t| match crate::solver::tuple_cost_on_measure(measure, cost, t, truncated) {
                    ExtReal::Finite(v) => v,
                    _ => f64::INFINITY,
                },
            )
            .collect();
        let mut cross = vec![vec![0.0f64; sets.len()]; m];
        for (k, t) in sets.iter().enumerate() {
            for (a, row) in cross.iter_mut().enumerate() {
                let mut total = 0.0f64;
                for &y in t {
                    let d = if a == y {
                        0.0
                    } else {
                        euclidean(measure.position(a), measure.position(y))
                    };
                    total += match cost.phi_dist(d, truncated) {
                        ExtReal::Finite(v) => v,
                        _ => f64::INFINITY,
                    };
                }
                row[k] = total;
            }
        }
        CompetitorTable { sets, inner, cross }
    }

    fn competitor_offsets(&self, values: &[f64]) -> Vec<f64> {
        self.sets
            .iter()
            .zip(&self.inner)
            .map(|(t, &inner)| inner - t.iter().map(|&y| values[y]).sum::<f64>())
            .collect()
    }
}

/// Iterates the averaged improvement map until the sup-change drops to
/// `1e-10` (at most `10^4` iterations): each pass replaces `u` by
/// `(ubar + (n-1) u) / n` with `ubar(a)` the competitor infimum at atom
/// `a`. From a feasible start the iterates increase pointwise, stay
/// feasible, and the objective is nondecreasing; the fixed point
/// satisfies the inf-convolution identity on the atoms.
pub fn canonicalize(
    pot: &PotentialSet,
    cost: &RepulsiveCost,
) -> Result<PotentialSet, DualityError> {
    let margin = pot.feasibility_margin(cost);
    if margin > DUAL_FEASIBILITY_TOL {
        return Err(DualityError::Infeasible(margin));
    }
    let n = pot.n;
    let m = pot.measure.len();
    let table = CompetitorTable::new(&pot.measure, cost, n);

    const MAX_ITERS: usize = 10_000;
    const TOL: f64 = 1e-10;
    let mut u = pot.values.clone();
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITERS {
        let offsets = table.competitor_offsets(&u);
        delta = 0.0;
        for a in 0..m {
            let ubar = table.cross[a]
                .iter()
                .zip(&offsets)
                .map(|(c, o)| c + o)
                .fold(f64::INFINITY, f64::min);
            let next = (ubar + (n as f64 - 1.0) * u[a]) / n as f64;
            delta = delta.max((next - u[a]).abs());
            u[a] = next;
        }
        iterations += 1;
        if delta <= TOL {
            break;
        }
    }
    if delta > TOL {
        return Err(DualityError::Stalled {
            residual: delta,
            iterations,
        });
    }
    Ok(PotentialSet {
        measure: pot.measure.clone(),
        n,
        values: u,
        tuple: None,
        canonical: true,
    })
}

/// Evaluates the canonical potential anywhere through the competitor
/// infimum `min { c(x, y_2, .., y_n) - sum u(y_j) }`. Agrees with the
/// stored values at atom positions (the fixed-point identity).
pub fn extend_potential(
    pot: &PotentialSet,
    cost: &RepulsiveCost,
    x: &[f64],
) -> Result<f64, DualityError> {
    if !pot.canonical {
        return Err(DualityError::NotCanonical);
    }
    if x.len() != pot.measure.dimension() {
        return Err(DualityError::DimensionMismatch(
            x.len(),
            pot.measure.dimension(),
        ));
    }
    let truncated = cost.is_truncated();
    let table = CompetitorTable::new(&pot.measure, cost, pot.n);
    let offsets = table.competitor_offsets(&pot.values);
    let mut best = f64::INFINITY;
    for (k, t) in table.sets.iter().enumerate() {
        let mut cross = 0.0f64;
        for &y in t {
            let d = euclidean(x, pot.measure.position(y));
            cross += match cost.phi_dist(d, truncated) {
                ExtReal::Finite(v) => v,
                _ => f64::INFINITY,
            };
        }
        best = best.min(cross + offsets[k]);
    }
    Ok(best)
}

/// Evaluates the extension on many points while reusing the competitor
/// table; identical to mapping `extend_potential` but without the
/// per-point setup cost.
pub fn extend_potential_batch(
    pot: &PotentialSet,
    cost: &RepulsiveCost,
    points: &[Vec<f64>],
) -> Result<Vec<f64>, DualityError> {
    if !pot.canonical {
        return Err(DualityError::NotCanonical);
    }
    let truncated = cost.is_truncated();
    let table = CompetitorTable::new(&pot.measure, cost, pot.n);
    let offsets = table.competitor_offsets(&pot.values);
    points
        .iter()
        .map(|x| {
            if x.len() != pot.measure.dimension() {
                return Err(DualityError::DimensionMismatch(
                    x.len(),
                    pot.measure.dimension(),
                ));
            }
            let mut best = f64::INFINITY;
            for (k, t) in table.sets.iter().enumerate() {
                let mut cross = 0.0f64;
                for &y in t {
                    let d = euclidean(x, pot.measure.position(y));
                    cross += match cost.phi_dist(d, truncated) {
                        ExtReal::Finite(v) => v,
                        _ => f64::INFINITY,
                    };
                }
                best = best.min(cross + offsets[k]);
            }
            Ok(best)
        })
        .collect()
}

/// Pointwise slackness residuals `c - sum_i u` over the plan's support.
#[derive(Clone, Debug, Serialize)]
pub struct SlacknessReport {
    /// Largest residual over support entries above the threshold.
    pub max_residual: ExtReal,
    /// `sum_T P(T) (c(T) - sum_i u(T_i))` — equals primal minus dual.
    pub total_weighted_residual: ExtReal,
    pub entries_checked: usize,
    /// True when the largest residual is at most `1e-7`.
    pub pass: bool,
}

/// Checks that the potential is tight on the plan's support. For an
/// optimal plan/potential pair the residuals vanish; for a suboptimal
/// plan the weighted total equals its optimality gap.
pub fn check_complementary_slackness(
    plan: &TransportPlan,
    pot: &PotentialSet,
    cost: &RepulsiveCost,
    mass_threshold: f64,
) -> SlacknessReport {
    let truncated = cost.is_truncated();
    let mut max_residual = ExtReal::NegInfinity;
    let mut total = ExtReal::zero();
    let mut entries_checked = 0usize;
    for (key, w) in plan.support(mass_threshold) {
        let c = crate::solver::tuple_cost_on_measure(plan.measure(), cost, key, truncated);
        let s: f64 = key.iter().map(|&a| pot.values[a]).sum();
        let residual = c.sub_margin(ExtReal::finite(s));
        if residual.total_cmp(&max_residual).is_gt() {
            max_residual = residual;
        }
        total += residual.scale(w);
        entries_checked += 1;
    }
    let pass = match max_residual {
        ExtReal::Finite(r) => r <= 1e-7,
        ExtReal::NegInfinity => true, // empty support
        ExtReal::PosInfinity => false,
    };
    SlacknessReport {
        max_residual,
        total_weighted_residual: total,
        entries_checked,
        pass,
    }
}

/// Splits the symmetric potential into the `n`-tuple `u_i = u + shift_i`
/// with shifts summing to zero. The tuple keeps the same total objective
/// and the same constraints (each constraint sums all shifts), which is
/// re-checked numerically.
pub fn tuple_from_symmetric(
    pot: &PotentialSet,
    shifts: &[f64],
    cost: &RepulsiveCost,
) -> Result<PotentialSet, DualityError> {
    if shifts.len() != pot.n {
        return Err(DualityError::WrongShiftCount(shifts.len(), pot.n));
    }
    let total: f64 = shifts.iter().sum();
    if total.abs() > 1e-12 {
        return Err(DualityError::BadShifts(total));
    }
    let margin = pot.feasibility_margin(cost);
    if margin > DUAL_FEASIBILITY_TOL {
        return Err(DualityError::Infeasible(margin));
    }
    let tuple: Vec<Vec<f64>> = shifts
        .iter()
        .map(|&s| pot.values.iter().map(|u| u + s).collect())
        .collect();
    Ok(PotentialSet {
        measure: pot.measure.clone(),
        n: pot.n,
        values: pot.values.clone(),
        tuple: Some(tuple),
        canonical: pot.canonical,
    })
}

/// Shifts that pin each `u_i` to `c(xbar) / n` at the coordinates of the
/// plan's heaviest support tuple — consistent because the shifts sum to
/// the slackness residual there, which vanishes at an optimal pair —
/// then centered to sum exactly to zero.
pub fn normalizing_shifts(
    plan: &TransportPlan,
    pot: &PotentialSet,
    cost: &RepulsiveCost,
    mass_threshold: f64,
) -> Result<Vec<f64>, DualityError> {
    let truncated = cost.is_truncated();
    let heaviest = plan
        .support(mass_threshold)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k.clone())
        .ok_or(DualityError::EmptySupport)?;
    let c = crate::solver::tuple_cost_on_measure(plan.measure(), cost, &heaviest, truncated)
        .expect_finite("support tuples of finite-cost plans");
    let n = pot.n as f64;
    let mut shifts: Vec<f64> = heaviest.iter().map(|&a| c / n - pot.values[a]).collect();
    let mean: f64 = shifts.iter().sum::<f64>() / n;
    for s in &mut shifts {
        *s -= mean;
    }
    Ok(shifts)
}
