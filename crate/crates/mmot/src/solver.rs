//! Primal solvers: exact linear programming over the multimarginal
//! transportation polytope, entropic proportional scaling, and a
//! brute-force oracle.
//!
//! A transport plan couples `n` copies of the marginal: a sparse
//! nonnegative tensor on `n`-fold index tuples whose every
//! one-dimensional marginal equals the marginal's weight vector. The
//! exact route enumerates the `m^n` tuples as LP columns (tuples with a
//! coinciding pair are excluded outright when the cost is untruncated —
//! their cost is the infinity sentinel, and variable elimination keeps
//! the LP conditioning clean), solves with the revised simplex, and
//! reports the dual certificate. Infeasibility of the restricted LP is
//! exactly the statement that every coupling pays an infinite cost, so
//! it is returned as the value `+inf`, not an error.
//!
//! The entropic route runs multimarginal proportional scaling on the
//! Gibbs kernel `exp(-c/eps)` in the log domain with an epsilon-scaling
//! warm start. It requires a truncated (hence bounded) cost and is a
//! diagnostic tool: its plans are approximate witnesses, never
//! certificates.

use crate::costs::{CostError, RepulsiveCost};
use crate::extreal::ExtReal;
use crate::measures::{euclidean, DiscreteMeasure, Exactness, MeasureError};
use crate::simplex::{self, LinearProgram, LpError, LpOutcome, SparseColumn};
use crate::tuples;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("need at least 2 marginals, got {0}")]
    TooFewMarginals(usize),
    #[error("instance needs {needed} variables, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: usize },
    #[error("entropic scaling requires a truncated cost")]
    TruncationRequired,
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("brute force requires uniform weights")]
    UniformWeightsRequired,
    #[error("brute force supports at most {max} atoms, got {m}")]
    TooManyAtoms { m: usize, max: usize },
    #[error("tuple is not in the plan's support")]
    NotInSupport,
    #[error("concentration {measured} at this radius is not below {threshold}")]
    ConcentrationTooLarge { measured: f64, threshold: f64 },
    #[error(
        "separated-point selection exhausted the support after {selected} of {needed} tuples; \
         this contradicts the separation guarantee under the stated concentration bound"
    )]
    SeparationFailed { selected: usize, needed: usize },
    #[error("plan entry invalid: {0}")]
    BadPlanEntry(&'static str),
    #[error("plan marginals deviate by {0}, beyond tolerance {1}")]
    MarginalMismatch(f64, f64),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

/// Knobs shared by the solvers.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Maximum number of tensor entries (`m^n`) a solve may enumerate.
    pub budget: usize,
    /// Mass threshold below which an entry does not count as support.
    pub support_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            budget: 2_000_000,
            support_threshold: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    ExactLp,
    Entropic,
    BruteForce,
}

/// Residuals and certificate data attached to a solve.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Worst marginal deviation of the returned plan (0 when no plan).
    pub marginal_residual: f64,
    /// `|primal - dual|` of the LP certificate, when one exists.
    pub duality_gap: Option<f64>,
    /// Most negative reduced cost over all columns, when available.
    pub min_reduced_cost: Option<f64>,
    /// Leftover artificial mass proving infeasibility, when relevant.
    pub infeasibility: Option<f64>,
    /// Whether the optimality certificate holds at the stated tolerances.
    pub certificate_ok: bool,
}

/// Outcome of a solve: value, plan (absent when the value is `+inf`),
/// method, and diagnostics.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub plan: Option<TransportPlan>,
    pub value: ExtReal,
    pub method: SolveMethod,
    pub diagnostics: SolveDiagnostics,
}

impl SolveResult {
    /// True when the result is backed by a machine-checked optimality
    /// certificate (exact LP or exhaustive enumeration). Entropic
    /// results are never certified.
    pub fn is_certified(&self) -> bool {
        self.method != SolveMethod::Entropic && self.diagnostics.certificate_ok
    }
}

/// Sparse coupling of `n` copies of a discrete marginal.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    measure: DiscreteMeasure,
    n: usize,
    entries: BTreeMap<Vec<usize>, f64>,
}

impl TransportPlan {
    /// Validates index ranges, positivity, total mass, and the marginal
    /// constraints within `marginal_tol` (mass within `m * marginal_tol`,
    /// since each marginal already pins the mass).
    pub fn new(
        measure: DiscreteMeasure,
        n: usize,
        entries: BTreeMap<Vec<usize>, f64>,
        marginal_tol: f64,
    ) -> Result<Self, SolverError> {
        if n < 2 {
            return Err(SolverError::TooFewMarginals(n));
        }
        let m = measure.len();
        for (key, &w) in &entries {
            if key.len() != n {
                return Err(SolverError::BadPlanEntry("index tuple has wrong length"));
            }
            if key.iter().any(|&a| a >= m) {
                return Err(SolverError::BadPlanEntry("atom index out of range"));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(SolverError::BadPlanEntry("weights must be positive"));
            }
        }
        let plan = TransportPlan {
            measure,
            n,
            entries,
        };
        let mass_err = (plan.mass() - 1.0).abs();
        if mass_err > marginal_tol * m as f64 + 1e-12 {
            return Err(SolverError::MarginalMismatch(mass_err, marginal_tol));
        }
        let residual = plan.marginal_residual();
        if residual > marginal_tol {
            return Err(SolverError::MarginalMismatch(residual, marginal_tol));
        }
        Ok(plan)
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        &self.measure
    }

    pub fn marginal_count(&self) -> usize {
        self.n
    }

    /// Entries in lexicographic index order (the export order).
    pub fn entries(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.entries
    }

    pub fn mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// The `i`-th one-dimensional marginal as a weight vector.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.measure.len()];
        for (key, &w) in &self.entries {
            out[key[i]] += w;
        }
        out
    }

    /// `max_{i,a} |marginal_i(a) - w(a)|`.
    pub fn marginal_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let marg = self.marginal(i);
            for (have, want) in marg.iter().zip(self.measure.weights()) {
                worst = worst.max((have - want).abs());
            }
        }
        worst
    }

    /// Transport cost of the plan under the given cost, absorbing on the
    /// infinity sentinel.
    pub fn value(&self, cost: &RepulsiveCost, truncated: bool) -> Result<ExtReal, CostError> {
        if truncated && !cost.is_truncated() {
            return Err(CostError::TruncationMissing);
        }
        let mut total = ExtReal::zero();
        for (key, &w) in &self.entries {
            let c = tuple_cost_on_measure(&self.measure, cost, key, truncated);
            total += c.scale(w);
            if total.is_pos_infinite() {
                return Ok(total);
            }
        }
        Ok(total)
    }

    /// Entries whose mass exceeds the threshold.
    pub fn support(&self, mass_threshold: f64) -> impl Iterator<Item = (&Vec<usize>, f64)> {
        self.entries
            .iter()
            .filter(move |(_, &w)| w > mass_threshold)
            .map(|(k, &w)| (k, w))
    }

    /// Smallest pairwise coordinate distance over entries above the mass
    /// threshold — the largest strip radius the (thresholded) support
    /// provably clears. `+inf` when nothing passes the threshold.
    pub fn min_interparticle_gap(&self, mass_threshold: f64) -> f64 {
        let mut gap = f64::INFINITY;
        for (key, _) in self.support(mass_threshold) {
            for i in 0..key.len() {
                for j in (i + 1)..key.len() {
                    let d = if key[i] == key[j] {
                        0.0
                    } else {
                        euclidean(self.measure.position(key[i]), self.measure.position(key[j]))
                    };
                    gap = gap.min(d);
                }
            }
        }
        gap
    }

    /// Averages the plan over coordinate permutations. The cost is
    /// symmetric, so this preserves both marginals and transport cost.
    pub fn symmetrize(&self) -> Result<TransportPlan, SolverError> {
        let mut count = 0usize;
        tuples::for_each_permutation(self.n, |_| count += 1);
        let inv = 1.0 / count as f64;
        let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (key, &w) in &self.entries {
            tuples::for_each_permutation(self.n, |perm| {
                let permuted: Vec<usize> = perm.iter().map(|&p| key[p]).collect();
                *out.entry(permuted).or_insert(0.0) += w * inv;
            });
        }
        TransportPlan::new(
            self.measure.clone(),
            self.n,
            out,
            self.marginal_residual() + 1e-12,
        )
    }
}

pub(crate) fn tuple_cost_on_measure(
    measure: &DiscreteMeasure,
    cost: &RepulsiveCost,
    key: &[usize],
    truncated: bool,
) -> ExtReal {
    let mut total = ExtReal::zero();
    for i in 0..key.len() {
        for j in (i + 1)..key.len() {
            let d = if key[i] == key[j] {
                0.0
            } else {
                euclidean(measure.position(key[i]), measure.position(key[j]))
            };
            total += cost.phi_dist(d, truncated);
            if total.is_pos_infinite() {
                return total;
            }
        }
    }
    total
}

fn check_budget(m: usize, n: usize, budget: usize) -> Result<(), SolverError> {
    let needed = (m as u128).pow(n as u32);
    if needed > budget as u128 {
        return Err(SolverError::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// Exact minimization of the transport cost over couplings of `n` copies
/// of the marginal, as a finite LP with `n * m` marginal equalities.
///
/// With an untruncated cost, tuples containing a coinciding pair cost
/// `+inf` and are eliminated; if the remaining LP is infeasible every
/// coupling pays an infinite cost and the result carries `value = +inf`
/// with no plan. Optimal solves carry the dual certificate in the
/// diagnostics.
pub fn solve_exact(
    measure: &DiscreteMeasure,
    n: usize,
    cost: &RepulsiveCost,
    options: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    if n < 2 {
        return Err(SolverError::TooFewMarginals(n));
    }
    let m = measure.len();
    check_budget(m, n, options.budget)?;
    let truncated = cost.is_truncated();

    let mut columns = Vec::new();
    let mut objective = Vec::new();
    let mut ranks: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    tuples::for_each_tuple(m, n, |t| {
        let include = truncated || t.iter().enumerate().all(|(i, &a)| !t[..i].contains(&a));
        if include {
            let c = tuple_cost_on_measure(measure, cost, t, truncated)
                .expect_finite("distinct atoms have positive distances");
            columns.push(SparseColumn {
                entries: t
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| (i * m + a, 1.0))
                    .collect(),
            });
            objective.push(c);
            ranks.push(rank);
        }
        rank += 1;
    });

    let mut rhs = Vec::with_capacity(n * m);
    for _ in 0..n {
        rhs.extend_from_slice(measure.weights());
    }
    let cost_scale = objective.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let lp = LinearProgram {
        nrows: n * m,
        columns,
        objective,
        rhs,
    };

    match simplex::solve(&lp)? {
        LpOutcome::Infeasible { infeasibility } => {
            if truncated {
                return Err(SolverError::Internal(
                    "truncated transport LP cannot be infeasible",
                ));
            }
            Ok(SolveResult {
                plan: None,
                value: ExtReal::PosInfinity,
                method: SolveMethod::ExactLp,
                diagnostics: SolveDiagnostics {
                    iterations: 0,
                    converged: true,
                    marginal_residual: 0.0,
                    duality_gap: None,
                    min_reduced_cost: None,
                    infeasibility: Some(infeasibility),
                    certificate_ok: true,
                },
            })
        }
        LpOutcome::Optimal(sol) => {
            let mut entries: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
            for (j, &xj) in sol.x.iter().enumerate() {
                if xj > 1e-12 {
                    entries.insert(tuples::tuple_from_rank(ranks[j], m, n), xj);
                }
            }
            let plan = TransportPlan::new(measure.clone(), n, entries, 1e-9)?;
            let certificate_ok = sol.primal_residual <= 1e-9
                && sol.duality_gap <= 1e-8 * (1.0 + sol.objective.abs())
                && sol.min_reduced_cost >= -1e-8 * (1.0 + cost_scale);
            Ok(SolveResult {
                plan: Some(plan),
                value: ExtReal::finite(sol.objective),
                method: SolveMethod::ExactLp,
                diagnostics: SolveDiagnostics {
                    iterations: sol.iterations,
                    converged: true,
                    marginal_residual: sol.primal_residual,
                    duality_gap: Some(sol.duality_gap),
                    min_reduced_cost: Some(sol.min_reduced_cost),
                    infeasibility: None,
                    certificate_ok,
                },
            })
        }
    }
}

/// Multimarginal proportional scaling on the Gibbs kernel
/// `exp(-c/eps)`, in the log domain, with an epsilon-scaling warm start.
/// Requires a truncated cost so the kernel is bounded away from zero.
///
/// Stops when the worst marginal deviation drops to `1e-8` or after
/// `max_iters` full sweeps; a non-converged run still returns its plan,
/// flagged through `diagnostics.converged` and the residual.
pub fn solve_entropic(
    measure: &DiscreteMeasure,
    n: usize,
    cost: &RepulsiveCost,
    epsilon: f64,
    max_iters: usize,
    options: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    if n < 2 {
        return Err(SolverError::TooFewMarginals(n));
    }
    if !cost.is_truncated() {
        return Err(SolverError::TruncationRequired);
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(SolverError::BadEpsilon(epsilon));
    }
    let m = measure.len();
    check_budget(m, n, options.budget)?;
    let size = m.pow(n as u32);

    // Dense cost tensor in odometer order.
    let mut tensor = Vec::with_capacity(size);
    tuples::for_each_tuple(m, n, |t| {
        tensor.push(
            tuple_cost_on_measure(measure, cost, t, true)
                .expect_finite("truncated costs are finite"),
        );
    });
    let osc = tensor.iter().fold(0.0f64, |a, &c| a.max(c))
        - tensor.iter().fold(f64::INFINITY, |a, &c| a.min(c));

    let log_w: Vec<f64> = measure.weights().iter().map(|&w| w.ln()).collect();
    let mut potentials = vec![vec![0.0f64; m]; n];
    const TARGET_RESIDUAL: f64 = 1e-8;

    // Epsilon scaling: start near the cost oscillation and halve down to
    // the requested level, carrying the potentials across stages.
    let mut stages = vec![epsilon];
    let mut eps_cur = epsilon;
    while eps_cur < osc {
        eps_cur *= 2.0;
        stages.push(eps_cur.min(osc));
        if eps_cur >= osc {
            break;
        }
    }
    stages.reverse();

    let mut sweeps = 0usize;
    let mut residual = f64::INFINITY;
    'stages: for (si, &eps) in stages.iter().enumerate() {
        let final_stage = si + 1 == stages.len();
        let stage_tol = if final_stage { TARGET_RESIDUAL } else { 1e-3 };
        loop {
            if sweeps >= max_iters {
                break 'stages;
            }
            sweep(&tensor, &log_w, &mut potentials, eps, m, n);
            sweeps += 1;
            residual = marginal_residual_of(&tensor, &potentials, measure.weights(), eps, m, n);
            if residual <= stage_tol {
                break;
            }
        }
    }
    let converged = residual <= TARGET_RESIDUAL;

    // Materialize the plan and its transport cost.
    let mut entries: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut value = 0.0f64;
    {
        let mut rank = 0usize;
        tuples::for_each_tuple(m, n, |t| {
            let mut score = -tensor[rank];
            for (i, &a) in t.iter().enumerate() {
                score += potentials[i][a];
            }
            let w = (score / epsilon).exp();
            if w > 1e-300 {
                value += w * tensor[rank];
                entries.insert(t.to_vec(), w);
            }
            rank += 1;
        });
    }
    let plan = TransportPlan::new(
        measure.clone(),
        n,
        entries,
        residual.max(1e-9) * (1.0 + 1e-9) + 1e-15,
    )?;

    Ok(SolveResult {
        plan: Some(plan),
        value: ExtReal::finite(value),
        method: SolveMethod::Entropic,
        diagnostics: SolveDiagnostics {
            iterations: sweeps,
            converged,
            marginal_residual: residual,
            duality_gap: None,
            min_reduced_cost: None,
            infeasibility: None,
            certificate_ok: false,
        },
    })
}

/// One cyclic pass: each marginal's potential is updated to match its
/// target exactly given the others (coordinate ascent on the dual).
fn sweep(tensor: &[f64], log_w: &[f64], potentials: &mut [Vec<f64>], eps: f64, m: usize, n: usize) {
    for i in 0..n {
        // log-sum-exp of scores per bucket a = t[i], streaming form
        let mut bucket_max = vec![f64::NEG_INFINITY; m];
        let mut bucket_sum = vec![0.0f64; m];
        let mut rank = 0usize;
        tuples::for_each_tuple(m, n, |t| {
            let mut score = -tensor[rank];
            for (j, &a) in t.iter().enumerate() {
                score += potentials[j][a];
            }
            let x = score / eps;
            let a = t[i];
            if x > bucket_max[a] {
                bucket_sum[a] = bucket_sum[a] * (bucket_max[a] - x).exp() + 1.0;
                bucket_max[a] = x;
            } else {
                bucket_sum[a] += (x - bucket_max[a]).exp();
            }
            rank += 1;
        });
        for a in 0..m {
            let lse = bucket_max[a] + bucket_sum[a].ln();
            potentials[i][a] += eps * (log_w[a] - lse);
        }
    }
}

fn marginal_residual_of(
    tensor: &[f64],
    potentials: &[Vec<f64>],
    weights: &[f64],
    eps: f64,
    m: usize,
    n: usize,
) -> f64 {
    let mut marg = vec![vec![0.0f64; m]; n];
    let mut rank = 0usize;
    tuples::for_each_tuple(m, n, |t| {
        let mut score = -tensor[rank];
        for (j, &a) in t.iter().enumerate() {
            score += potentials[j][a];
        }
        let w = (score / eps).exp();
        for (j, &a) in t.iter().enumerate() {
            marg[j][a] += w;
        }
        rank += 1;
    });
    let mut worst = 0.0f64;
    for row in &marg {
        for (have, want) in row.iter().zip(weights) {
            worst = worst.max((have - want).abs());
        }
    }
    worst
}

/// Exhaustive optimum over the `m!` permutation couplings: for two
/// marginals with uniform weights the transportation polytope's vertices
/// are exactly the permutation matrices, so this is an independent
/// optimality oracle for `solve_exact`.
pub fn brute_force_assignment(
    measure: &DiscreteMeasure,
    cost: &RepulsiveCost,
) -> Result<SolveResult, SolverError> {
    const MAX_ATOMS: usize = 8;
    let m = measure.len();
    if m > MAX_ATOMS {
        return Err(SolverError::TooManyAtoms { m, max: MAX_ATOMS });
    }
    let target = 1.0 / m as f64;
    if measure
        .weights()
        .iter()
        .any(|&w| (w - target).abs() > 1e-12)
    {
        return Err(SolverError::UniformWeightsRequired);
    }
    let truncated = cost.is_truncated();

    let mut best: Option<(ExtReal, Vec<usize>)> = None;
    let mut count = 0usize;
    tuples::for_each_permutation(m, |perm| {
        count += 1;
        let mut total = ExtReal::zero();
        for (j, &pj) in perm.iter().enumerate() {
            let d = if j == pj {
                0.0
            } else {
                euclidean(measure.position(j), measure.position(pj))
            };
            total += cost.phi_dist(d, truncated);
            if total.is_pos_infinite() {
                return;
            }
        }
        let value = total.scale(target);
        let replace = match &best {
            None => true,
            Some((cur, _)) => value.total_cmp(cur).is_lt(),
        };
        if replace {
            best = Some((value, perm.to_vec()));
        }
    });

    match best {
        Some((value, perm)) => {
            let mut entries = BTreeMap::new();
            for (j, &pj) in perm.iter().enumerate() {
                entries.insert(vec![j, pj], target);
            }
            let plan = TransportPlan::new(measure.clone(), 2, entries, 1e-12)?;
            Ok(SolveResult {
                plan: Some(plan),
                value,
                method: SolveMethod::BruteForce,
                diagnostics: SolveDiagnostics {
                    iterations: count,
                    converged: true,
                    marginal_residual: 0.0,
                    duality_gap: Some(0.0),
                    min_reduced_cost: None,
                    infeasibility: None,
                    certificate_ok: true,
                },
            })
        }
        None => Ok(SolveResult {
            plan: None,
            value: ExtReal::PosInfinity,
            method: SolveMethod::BruteForce,
            diagnostics: SolveDiagnostics {
                iterations: count,
                converged: true,
                marginal_residual: 0.0,
                duality_gap: None,
                min_reduced_cost: None,
                infeasibility: None,
                certificate_ok: true,
            },
        }),
    }
}

/// Greedily selects `n` support tuples, starting from `first`, such that
/// every coordinate of every selected tuple stays at distance `> radius`
/// from every coordinate of every other selected tuple. Existence is
/// guaranteed when the marginal's concentration at `radius` is below
/// `1 / (n (n-1)^2)`; exhausting the support under that precondition is
/// therefore surfaced as a hard error, not a silent skip.
pub fn select_separated_points(
    plan: &TransportPlan,
    first: &[usize],
    radius: f64,
) -> Result<Vec<Vec<usize>>, SolverError> {
    let n = plan.marginal_count();
    match plan.entries().get(first) {
        Some(&w) if w > 0.0 => {}
        _ => return Err(SolverError::NotInSupport),
    }
    let rho = plan.measure();
    let (mu, exactness) = rho.concentration(radius)?;
    if exactness != Exactness::Exact {
        return Err(SolverError::Measure(MeasureError::ExactnessUnavailable));
    }
    let threshold = crate::measures::small_concentration_threshold(n);
    if mu >= threshold {
        return Err(SolverError::ConcentrationTooLarge {
            measured: mu,
            threshold,
        });
    }

    let separated = |a: &[usize], b: &[usize]| -> bool {
        a.iter().all(|&p| {
            b.iter().all(|&q| {
                let d = if p == q {
                    0.0
                } else {
                    euclidean(rho.position(p), rho.position(q))
                };
                d > radius
            })
        })
    };

    let mut selected: Vec<Vec<usize>> = vec![first.to_vec()];
    while selected.len() < n {
        let next = plan
            .entries()
            .iter()
            .find(|(key, &w)| w > 0.0 && selected.iter().all(|s| separated(key, s)));
        match next {
            Some((key, _)) => selected.push(key.clone()),
            None => {
                return Err(SolverError::SeparationFailed {
                    selected: selected.len(),
                    needed: n,
                })
            }
        }
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_dirac() -> DiscreteMeasure {
        DiscreteMeasure::uniform_1d(&[0.0, 1.0]).unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn golden_two_dirac_value_is_one() {
        let r = solve_exact(&two_dirac(), 2, &RepulsiveCost::coulomb(), &opts()).unwrap();
        let v = r.value.expect_finite("finite");
        assert!((v - 1.0).abs() <= 1e-10, "value {v}");
        assert!(r.is_certified());
        let plan = r.plan.unwrap();
        assert!((plan.entries()[&vec![0, 1]] - 0.5).abs() < 1e-12);
        assert!((plan.entries()[&vec![1, 0]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perturbed_two_dirac_is_infinite() {
        for &t in &[1e-3, 0.1, 1.0 / 3.0] {
            let rho =
                DiscreteMeasure::new(1, vec![(vec![0.0], 0.5 + t), (vec![1.0], 0.5 - t)]).unwrap();
            let r = solve_exact(&rho, 2, &RepulsiveCost::coulomb(), &opts()).unwrap();
            assert_eq!(r.value, ExtReal::PosInfinity, "t = {t}");
            assert!(r.plan.is_none());
            assert!(r.is_certified());
        }
    }

    #[test]
    fn exact_matches_permutation_brute_force_on_four_atoms() {
        let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let cost = RepulsiveCost::coulomb();
        let r = solve_exact(&rho, 2, &cost, &opts()).unwrap();
        // independent oracle: all 24 permutations, fixed points forbidden
        let mut best = f64::INFINITY;
        tuples::for_each_permutation(4, |perm| {
            if perm.iter().enumerate().any(|(i, &p)| i == p) {
                return;
            }
            let total: f64 = perm
                .iter()
                .enumerate()
                .map(|(i, &p)| 1.0 / (i as f64 - p as f64).abs())
                .sum();
            best = best.min(total / 4.0);
        });
        assert!((r.value.expect_finite("") - best).abs() < 1e-10);
    }

    #[test]
    fn brute_force_examples() {
        let r = brute_force_assignment(&two_dirac(), &RepulsiveCost::coulomb()).unwrap();
        assert_eq!(r.value, ExtReal::finite(1.0));

        let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0, 3.0]).unwrap();
        let r = brute_force_assignment(&rho, &RepulsiveCost::coulomb()).unwrap();
        // oracle: 6 permutations by hand — the 3-cycles pay
        // (1/1 + 1/2 + 1/3)/3, each transposition leaves a fixed point.
        let expect = (1.0 + 0.5 + 1.0 / 3.0) / 3.0;
        assert!((r.value.expect_finite("") - expect).abs() < 1e-12);

        let single = DiscreteMeasure::uniform_1d(&[0.0]).unwrap();
        let r = brute_force_assignment(&single, &RepulsiveCost::coulomb()).unwrap();
        assert_eq!(r.value, ExtReal::PosInfinity);

        let non_uniform =
            DiscreteMeasure::new(1, vec![(vec![0.0], 0.7), (vec![1.0], 0.3)]).unwrap();
        assert!(matches!(
            brute_force_assignment(&non_uniform, &RepulsiveCost::coulomb()),
            Err(SolverError::UniformWeightsRequired)
        ));
    }

    #[test]
    fn exact_agrees_with_brute_force_on_random_instances() {
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for round in 0..25 {
            let m = 2 + (round % 6);
            let mut xs: Vec<f64> = Vec::new();
            while xs.len() < m {
                let x = next() * 4.0;
                if xs.iter().all(|&y| (x - y).abs() > 0.05) {
                    xs.push(x);
                }
            }
            let rho = DiscreteMeasure::uniform_1d(&xs).unwrap();
            let cost = RepulsiveCost::coulomb();
            let exact = solve_exact(&rho, 2, &cost, &opts()).unwrap();
            let brute = brute_force_assignment(&rho, &cost).unwrap();
            match (exact.value, brute.value) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                    assert!((a - b).abs() <= 1e-8, "round {round}: {a} vs {b}")
                }
                (a, b) => assert_eq!(a, b, "round {round}"),
            }
        }
    }

    #[test]
    fn exact_value_is_invariant_under_atom_reordering() {
        let xs = [0.0, 0.7, 1.9, 3.2, 4.1];
        let rho = DiscreteMeasure::uniform_1d(&xs).unwrap();
        let mut reversed = xs;
        reversed.reverse();
        let rho_rev = DiscreteMeasure::uniform_1d(&reversed).unwrap();
        let cost = RepulsiveCost::coulomb();
        let a = solve_exact(&rho, 2, &cost, &opts()).unwrap();
        let b = solve_exact(&rho_rev, 2, &cost, &opts()).unwrap();
        let (a, b) = (a.value.expect_finite(""), b.value.expect_finite(""));
        assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn three_marginals_solve_and_symmetrize() {
        let rho = DiscreteMeasure::uniform_1d(&[0.0, 0.5, 1.3, 2.0, 2.9, 3.7, 4.2, 5.0]).unwrap();
        let cost = RepulsiveCost::coulomb();
        let r = solve_exact(&rho, 3, &cost, &opts()).unwrap();
        assert!(r.is_certified());
        let plan = r.plan.unwrap();
        assert!(plan.marginal_residual() <= 1e-9);
        assert!((plan.mass() - 1.0).abs() <= 1e-10);

        let sym = plan.symmetrize().unwrap();
        let v0 = plan.value(&cost, false).unwrap().expect_finite("");
        let v1 = sym.value(&cost, false).unwrap().expect_finite("");
        assert!((v0 - v1).abs() <= 1e-9);
        assert!(sym.marginal_residual() <= 1e-9);
    }

    #[test]
    fn truncation_monotone_and_tight_below_the_separation_threshold() {
        let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let cost = RepulsiveCost::coulomb();
        let full = solve_exact(&rho, 2, &cost, &opts()).unwrap();
        let v_full = full.value.expect_finite("");
        let beta = rho.concentration_radius(2).unwrap().unwrap();
        assert!((beta - 1.0).abs() < 1e-6);
        let alpha_star = cost.separation_threshold(2, beta).unwrap();

        // monotone everywhere, equality at or below the separation threshold
        for &alpha in &[alpha_star / 2.0, alpha_star * 0.9999, 1.0, 2.0, 2.997] {
            let trunc = cost.truncated(alpha).unwrap();
            let r = solve_exact(&rho, 2, &trunc, &opts()).unwrap();
            let v = r.value.expect_finite("");
            assert!(v <= v_full + 1e-9, "alpha {alpha}: {v} > {v_full}");
            if alpha <= alpha_star {
                assert!((v - v_full).abs() <= 1e-8, "alpha {alpha}: {v} vs {v_full}");
            }
            // whenever the truncated optimizer stays separated by alpha,
            // clamped and unclamped prices agree on its support
            let gap = r.plan.as_ref().unwrap().min_interparticle_gap(1e-9);
            if gap >= alpha {
                assert!((v - v_full).abs() <= 1e-8, "alpha {alpha}, gap {gap}");
            }
        }
        // far above the threshold the clamp bites on this instance
        let coarse = solve_exact(&rho, 2, &cost.truncated(5.0).unwrap(), &opts()).unwrap();
        assert!(coarse.value.expect_finite("") < v_full);
    }

    #[test]
    fn entropic_three_marginals_matches_exact() {
        let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.2, 2.5, 3.9]).unwrap();
        let cost = RepulsiveCost::coulomb().truncated(0.9).unwrap();
        let exact = solve_exact(&rho, 3, &cost, &opts()).unwrap();
        let v_exact = exact.value.expect_finite("");
        let eps = 0.05;
        let r = solve_entropic(&rho, 3, &cost, eps, 200_000, &opts()).unwrap();
        assert!(
            r.diagnostics.converged,
            "residual {}",
            r.diagnostics.marginal_residual
        );
        let v = r.value.expect_finite("");
        assert!(v >= v_exact - 1e-6, "{v} below exact {v_exact}");
        assert!(
            v - v_exact <= eps * 3.0 * 4f64.ln() + 1e-6,
            "gap {} too large",
            v - v_exact
        );
        assert!(r.plan.unwrap().marginal_residual() <= 1e-8);
    }

    #[test]
    fn four_marginals_small_instance() {
        let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0, 2.5, 4.2, 6.0]).unwrap();
        let cost = RepulsiveCost::coulomb();
        let r = solve_exact(&rho, 4, &cost, &opts()).unwrap();
        assert!(r.is_certified());
        let plan = r.plan.unwrap();
        assert!(plan.marginal_residual() <= 1e-9);
        // untruncated tuples never repeat an atom
        for (key, _) in plan.support(0.0) {
            for i in 0..key.len() {
                assert!(!key[i + 1..].contains(&key[i]), "repeated atom in {key:?}");
            }
        }
        let recomputed = plan.value(&cost, false).unwrap().expect_finite("");
        let v = r.value.expect_finite("");
        assert!((recomputed - v).abs() <= 1e-9 * (1.0 + v));
    }

    #[test]
    fn entropic_product_limit_and_residual() {
        let rho = two_dirac();
        let cost = RepulsiveCost::coulomb().truncated(0.5).unwrap();
        let r = solve_entropic(&rho, 2, &cost, 1e6, 500, &opts()).unwrap();
        assert!(r.diagnostics.converged);
        let plan = r.plan.unwrap();
        for key in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let w = plan.entries()[&key.to_vec()];
            assert!((w - 0.25).abs() < 1e-6, "entry {key:?} = {w}");
        }
        assert!(plan.marginal_residual() <= 1e-8);
    }

    #[test]
    fn entropic_approaches_exact_truncated_value() {
        let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.5, 3.2, 5.0]).unwrap();
        let cost = RepulsiveCost::coulomb().truncated(1.0).unwrap();
        let exact = solve_exact(&rho, 2, &cost, &opts()).unwrap();
        let v_exact = exact.value.expect_finite("");
        let m = rho.len() as f64;
        let mut last = f64::INFINITY;
        for &eps in &[1.0, 0.1, 0.01] {
            let r = solve_entropic(&rho, 2, &cost, eps, 200_000, &opts()).unwrap();
            assert!(
                r.diagnostics.converged,
                "eps {eps} residual {}",
                r.diagnostics.marginal_residual
            );
            let v = r.value.expect_finite("");
            assert!(v <= last + 1e-9, "not monotone at eps {eps}");
            assert!(v >= v_exact - 1e-6, "below exact at eps {eps}");
            assert!(
                v - v_exact <= eps * 2.0 * m.ln() + 1e-6,
                "gap too large at eps {eps}: {v} vs {v_exact}"
            );
            last = v;
        }
    }

    #[test]
    fn entropic_requires_truncation() {
        assert!(matches!(
            solve_entropic(&two_dirac(), 2, &RepulsiveCost::coulomb(), 0.1, 10, &opts()),
            Err(SolverError::TruncationRequired)
        ));
    }

    #[test]
    fn min_gap_examples() {
        let r = solve_exact(&two_dirac(), 2, &RepulsiveCost::coulomb(), &opts()).unwrap();
        let plan = r.plan.unwrap();
        assert!((plan.min_interparticle_gap(0.0) - 1.0).abs() < 1e-12);

        // an artificial sub-threshold diagonal entry is ignored
        let mut entries = plan.entries().clone();
        entries.insert(vec![0, 0], 1e-12);
        let noisy = TransportPlan::new(two_dirac(), 2, entries, 1e-9).unwrap();
        assert!((noisy.min_interparticle_gap(1e-9) - 1.0).abs() < 1e-12);
        assert_eq!(noisy.min_interparticle_gap(0.0), 0.0);
    }

    #[test]
    fn separated_points_two_marginals() {
        let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let r = solve_exact(&rho, 2, &RepulsiveCost::coulomb(), &opts()).unwrap();
        let plan = r.plan.unwrap();
        let first = plan.entries().keys().next().unwrap().clone();
        let beta = 1.2; // a window of open length 2.4 holds at most 2 atoms: mass 1/4 < 1/2
        let picked = select_separated_points(&plan, &first, beta).unwrap();
        assert_eq!(picked.len(), 2);
        for (i, a) in picked.iter().enumerate() {
            for (j, b) in picked.iter().enumerate() {
                if i != j {
                    for &p in a {
                        for &q in b {
                            let d = (rho.position(p)[0] - rho.position(q)[0]).abs();
                            assert!(d > beta, "{a:?} vs {b:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn separated_points_preconditions() {
        let r = solve_exact(&two_dirac(), 2, &RepulsiveCost::coulomb(), &opts()).unwrap();
        let plan = r.plan.unwrap();
        // two atoms of mass 1/2 sit exactly at the threshold: precondition fails
        let first = plan.entries().keys().next().unwrap().clone();
        assert!(matches!(
            select_separated_points(&plan, &first, 0.3),
            Err(SolverError::ConcentrationTooLarge { .. })
        ));
        assert!(matches!(
            select_separated_points(&plan, &[0, 0], 0.3),
            Err(SolverError::NotInSupport)
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0, 2.0]).unwrap();
        let tight = SolverOptions {
            budget: 8,
            ..SolverOptions::default()
        };
        assert!(matches!(
            solve_exact(&rho, 2, &RepulsiveCost::coulomb(), &tight),
            Err(SolverError::BudgetExceeded { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn plans_satisfy_marginal_invariants(seed in 0u64..5000) {
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let m = 3 + (seed % 4) as usize;
            let mut xs: Vec<f64> = Vec::new();
            while xs.len() < m {
                let x = next() * 3.0;
                if xs.iter().all(|&y| (x - y).abs() > 0.05) {
                    xs.push(x);
                }
            }
            let mut ws: Vec<f64> = (0..m).map(|_| 0.2 + next()).collect();
            let total: f64 = ws.iter().sum();
            for w in &mut ws { *w /= total; }
            let rho = DiscreteMeasure::new(
                1,
                xs.into_iter().zip(ws).map(|(x, w)| (vec![x], w)).collect(),
            ).unwrap();
            let r = solve_exact(&rho, 2, &RepulsiveCost::coulomb(), &opts()).unwrap();
            if let Some(plan) = r.plan {
                prop_assert!(plan.marginal_residual() <= 1e-9);
                prop_assert!((plan.mass() - 1.0).abs() <= 1e-10);
                // value recomputation from the plan matches the LP objective
                let recomputed = plan.value(&RepulsiveCost::coulomb(), false).unwrap();
                let v = r.value.expect_finite("");
                prop_assert!((recomputed.expect_finite("") - v).abs() <= 1e-9 * (1.0 + v.abs()));
            }
        }
    }
}
