//! Finitely supported probability measures and their concentration geometry.
//!
//! Everything downstream is finite-dimensional, so marginals are discrete:
//! a measure is a list of distinct atoms with strictly positive weights
//! summing to one. The key geometric quantity is the concentration
//! function `mu(r) = sup_x rho(B(x, r))` over *open* balls — the largest
//! mass any radius-`r` ball can capture. Its behaviour as `r -> 0`
//! (which for atomic measures is just the largest atom weight) decides
//! whether the transport problem with `n` marginals is non-degenerate:
//! the threshold is `1 / (n (n-1)^2)`.
//!
//! Histogram densities (axis-aligned cells with constant density) are the
//! bridge to `L^p` norms: they carry an exact `L^p` norm and discretize to
//! atoms by lumping each cell's mass at its center.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Positions closer than this are treated as the same atom and merged.
/// Keeps numerical noise from manufacturing `phi(0) = inf` artifacts.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Weights must sum to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("measure needs at least one atom")]
    Empty,
    #[error("atom weight must be strictly positive and finite, got {0}")]
    BadWeight(f64),
    #[error("weights must sum to 1 within 1e-12, got {0}")]
    NotNormalized(f64),
    #[error("position has a non-finite coordinate")]
    NonFinitePosition,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("need at least 2 marginals, got {0}")]
    TooFewMarginals(usize),
    #[error("exact concentration is out of budget for this size; no certified value")]
    ExactnessUnavailable,
    #[error("Lp exponent must exceed 1, got {0}")]
    BadExponent(f64),
    #[error("cell must satisfy min < max on every axis")]
    BadCellBounds,
    #[error("cell value must be nonnegative and finite, got {0}")]
    BadCellValue(f64),
    #[error("density must integrate to 1 within 1e-9, got {0}")]
    NotNormalizedDensity(f64),
    #[error("radii must be strictly increasing and positive")]
    BadRadii,
}

/// Whether a concentration value is exact or only a certified lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Exact,
    LowerBound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct AtomRepr {
    position: Vec<f64>,
    weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MeasureRepr {
    dimension: usize,
    atoms: Vec<AtomRepr>,
}

/// A finitely supported probability measure on `R^d`.
///
/// Invariants enforced at construction: weights strictly positive and
/// summing to 1 within `1e-12`; atom positions pairwise distinct
/// (duplicates within `1e-12` are merged by summing their weights).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    positions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        let mut positions: Vec<Vec<f64>> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (pos, w) in atoms {
            if pos.len() != dim {
                return Err(MeasureError::DimensionMismatch(pos.len(), dim));
            }
            if pos.iter().any(|c| !c.is_finite()) {
                return Err(MeasureError::NonFinitePosition);
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(MeasureError::BadWeight(w));
            }
            // Merge with an existing atom if within the merge tolerance.
            match positions
                .iter()
                .position(|q| euclidean(q, &pos) <= MERGE_TOLERANCE)
            {
                Some(i) => weights[i] += w,
                None => {
                    positions.push(pos);
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(MeasureError::NotNormalized(total));
        }
        Ok(DiscreteMeasure {
            dim,
            positions,
            weights,
        })
    }

    /// Equal weights `1/m` on the given positions.
    pub fn uniform(dim: usize, positions: Vec<Vec<f64>>) -> Result<Self, MeasureError> {
        let m = positions.len();
        if m == 0 {
            return Err(MeasureError::Empty);
        }
        let w = 1.0 / m as f64;
        Self::new(dim, positions.into_iter().map(|p| (p, w)).collect())
    }

    /// Uniform measure on points of the real line.
    pub fn uniform_1d(xs: &[f64]) -> Result<Self, MeasureError> {
        Self::uniform(1, xs.iter().map(|&x| vec![x]).collect())
    }

    /// Same atoms, new weights (renormalized exactly to sum 1).
    pub fn reweighted(&self, weights: &[f64]) -> Result<Self, MeasureError> {
        if weights.len() != self.len() {
            return Err(MeasureError::DimensionMismatch(weights.len(), self.len()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(MeasureError::BadWeight(total));
        }
        let atoms = self
            .positions
            .iter()
            .zip(weights)
            .map(|(p, &w)| (p.clone(), w / total))
            .collect();
        Self::new(self.dim, atoms)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                d = f64::max(d, euclidean(&self.positions[i], &self.positions[j]));
            }
        }
        d
    }

    /// Smallest pairwise atom distance (`+inf` for a single atom).
    pub fn min_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                g = f64::min(g, euclidean(&self.positions[i], &self.positions[j]));
            }
        }
        g
    }

    /// Concentration function `mu(r)`: the largest total weight captured
    /// by any *open* ball of radius `r`.
    ///
    /// In dimension 1 this is an exact sliding window over sorted atoms
    /// (strict window length `2r`). In higher dimension the supremum is
    /// located by enumerating every ball whose closure is pinned by at
    /// most `d + 1` atoms (their equidistant center) plus atom-centered
    /// balls; that enumeration is exact. If the subset count exceeds the
    /// enumeration budget the value falls back to atom centers and pair
    /// midpoints and is flagged as a lower bound.
    pub fn concentration(&self, r: f64) -> Result<(f64, Exactness), MeasureError> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(MeasureError::NonPositiveRadius(r));
        }
        if self.dim == 1 {
            return Ok((self.concentration_1d(r), Exactness::Exact));
        }
        let m = self.len();
        let kmax = usize::min(self.dim + 1, m);
        let mut subsets: u128 = 0;
        for k in 2..=kmax {
            subsets += binomial(m, k);
        }
        const BUDGET: u128 = 250_000;
        let mut best = self.max_weight(); // atom-centered balls, any r > 0
        if subsets <= BUDGET {
            for k in 2..=kmax {
                for_each_combination(m, k, |idx| {
                    if let Some(center) = equidistant_center(&self.positions, idx) {
                        best = f64::max(best, self.open_ball_mass(&center, r));
                    }
                });
            }
            Ok((best, Exactness::Exact))
        } else {
            for i in 0..m {
                for j in (i + 1)..m {
                    let mid: Vec<f64> = self.positions[i]
                        .iter()
                        .zip(&self.positions[j])
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect();
                    best = f64::max(best, self.open_ball_mass(&mid, r));
                }
            }
            Ok((best, Exactness::LowerBound))
        }
    }

    fn concentration_1d(&self, r: f64) -> f64 {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.positions[a][0].total_cmp(&self.positions[b][0]));
        let xs: Vec<f64> = order.iter().map(|&i| self.positions[i][0]).collect();
        let ws: Vec<f64> = order.iter().map(|&i| self.weights[i]).collect();
        let mut best = 0.0f64;
        let mut j = 0usize;
        let mut window = 0.0f64;
        for i in 0..xs.len() {
            if j < i {
                j = i;
                window = 0.0;
            }
            while j < xs.len() && xs[j] - xs[i] < 2.0 * r {
                window += ws[j];
                j += 1;
            }
            best = f64::max(best, window);
            window -= ws[i];
        }
        best
    }

    fn open_ball_mass(&self, center: &[f64], r: f64) -> f64 {
        self.positions
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| euclidean(p, center) < r)
            .map(|(_, w)| w)
            .sum()
    }

    /// Largest radius at which the concentration stays strictly below
    /// `1 / (n (n-1)^2)`, located by bisection to relative tolerance
    /// `1e-9`. Returns `None` when no positive radius qualifies, i.e.
    /// some atom already carries at least the threshold mass.
    pub fn concentration_radius(&self, n: usize) -> Result<Option<f64>, MeasureError> {
        if n < 2 {
            return Err(MeasureError::TooFewMarginals(n));
        }
        let threshold = small_concentration_threshold(n);
        if self.max_weight() >= threshold {
            return Ok(None);
        }
        let mu = |r: f64| -> Result<f64, MeasureError> {
            let (v, exact) = self.concentration(r)?;
            if exact != Exactness::Exact {
                return Err(MeasureError::ExactnessUnavailable);
            }
            Ok(v)
        };
        // mu(lo) equals the max atom weight: a ball of radius below half
        // the minimum gap captures at most one atom.
        let mut lo = if self.len() >= 2 {
            self.min_gap() / 4.0
        } else {
            unreachable!("single atom has max weight 1 >= threshold")
        };
        debug_assert!(mu(lo)? < threshold);
        let mut hi = self.diameter() + 1.0;
        debug_assert!(mu(hi)? >= threshold);
        for _ in 0..200 {
            if hi - lo <= 1e-9 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mu(mid)? < threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(lo))
    }

    /// Whether the measure concentrates little enough for `n` marginals:
    /// the largest atom weight is strictly below `1 / (n (n-1)^2)`.
    /// For atomic measures this is exactly the small-`r` limit of the
    /// concentration function.
    pub fn has_small_concentration(&self, n: usize) -> bool {
        assert!(n >= 2, "need at least 2 marginals");
        self.max_weight() < small_concentration_threshold(n)
    }

    /// Atomic `l1` distance: sum of `|w1(x) - w2(x)|` over the union of
    /// atom positions, missing atoms counting as weight zero. This equals
    /// twice the total variation distance on probabilities.
    pub fn l1_distance(&self, other: &DiscreteMeasure) -> Result<f64, MeasureError> {
        if self.dim != other.dim {
            return Err(MeasureError::DimensionMismatch(self.dim, other.dim));
        }
        let mut used = vec![false; other.len()];
        let mut total = 0.0;
        for (p, &w) in self.positions.iter().zip(&self.weights) {
            let matched = other
                .positions
                .iter()
                .enumerate()
                .find(|(j, q)| !used[*j] && euclidean(p, q) <= MERGE_TOLERANCE);
            match matched {
                Some((j, _)) => {
                    used[j] = true;
                    total += (w - other.weights[j]).abs();
                }
                None => total += w,
            }
        }
        for (j, &w) in other.weights.iter().enumerate() {
            if !used[j] {
                total += w;
            }
        }
        Ok(total)
    }

    /// Evaluates `mu` on an increasing list of radii.
    pub fn concentration_profile(
        &self,
        radii: &[f64],
    ) -> Result<ConcentrationProfile, MeasureError> {
        if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || !(radii[0] > 0.0) {
            return Err(MeasureError::BadRadii);
        }
        let mut values = Vec::with_capacity(radii.len());
        let mut exactness = Vec::with_capacity(radii.len());
        for &r in radii {
            let (v, e) = self.concentration(r)?;
            values.push(v);
            exactness.push(e);
        }
        Ok(ConcentrationProfile {
            radii: radii.to_vec(),
            values,
            exactness,
        })
    }

    /// FNV-1a hash over the exact bit patterns of the atoms; used to key
    /// instances in reports deterministically.
    pub fn hash_hex(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(&(self.dim as u64).to_le_bytes());
        for (p, w) in self.positions.iter().zip(&self.weights) {
            for c in p {
                eat(&c.to_bits().to_le_bytes());
            }
            eat(&w.to_bits().to_le_bytes());
        }
        format!("{h:016x}")
    }
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let atoms = self
            .positions
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| AtomRepr {
                position: p.clone(),
                weight: w,
            })
            .collect();
        MeasureRepr {
            dimension: self.dim,
            atoms,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = MeasureRepr::deserialize(deserializer)?;
        DiscreteMeasure::new(
            repr.dimension,
            repr.atoms
                .into_iter()
                .map(|a| (a.position, a.weight))
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// The threshold `1 / (n (n-1)^2)` below which the concentration must
/// stay for the `n`-marginal problem to behave.
pub fn small_concentration_threshold(n: usize) -> f64 {
    assert!(n >= 2);
    let n = n as f64;
    1.0 / (n * (n - 1.0) * (n - 1.0))
}

/// Sampled concentration function with per-radius exactness flags.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub exactness: Vec<Exactness>,
}

impl ConcentrationProfile {
    /// Checks the structural facts: values nondecreasing in `r`, at most
    /// one, and at least the largest atom weight.
    pub fn validate(&self, measure: &DiscreteMeasure) -> bool {
        let max_w = measure.max_weight();
        self.values.windows(2).all(|w| w[1] >= w[0] - 1e-15)
            && self.values.iter().all(|&v| v <= 1.0 + 1e-15)
            && self.values.iter().all(|&v| v >= max_w - 1e-15)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistogramCell {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub value: f64,
}

/// Piecewise-constant density on axis-aligned cells. Cells are assumed
/// pairwise disjoint; the density must integrate to 1 within `1e-9`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "HistogramRepr", into = "HistogramRepr")]
pub struct HistogramDensity {
    dim: usize,
    cells: Vec<HistogramCell>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct HistogramRepr {
    dimension: usize,
    cells: Vec<HistogramCell>,
}

impl TryFrom<HistogramRepr> for HistogramDensity {
    type Error = MeasureError;

    fn try_from(repr: HistogramRepr) -> Result<Self, MeasureError> {
        HistogramDensity::new(repr.dimension, repr.cells)
    }
}

impl From<HistogramDensity> for HistogramRepr {
    fn from(h: HistogramDensity) -> Self {
        HistogramRepr {
            dimension: h.dim,
            cells: h.cells,
        }
    }
}

impl HistogramDensity {
    pub fn new(dim: usize, cells: Vec<HistogramCell>) -> Result<Self, MeasureError> {
        if cells.is_empty() {
            return Err(MeasureError::Empty);
        }
        for cell in &cells {
            if cell.min.len() != dim || cell.max.len() != dim {
                return Err(MeasureError::DimensionMismatch(cell.min.len(), dim));
            }
            if cell
                .min
                .iter()
                .zip(&cell.max)
                .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
            {
                return Err(MeasureError::BadCellBounds);
            }
            if !(cell.value >= 0.0) || !cell.value.is_finite() {
                return Err(MeasureError::BadCellValue(cell.value));
            }
        }
        let h = HistogramDensity { dim, cells };
        let total = h.integral();
        if (total - 1.0).abs() > 1e-9 {
            return Err(MeasureError::NotNormalizedDensity(total));
        }
        Ok(h)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[HistogramCell] {
        &self.cells
    }

    fn cell_volume(cell: &HistogramCell) -> f64 {
        cell.min.iter().zip(&cell.max).map(|(a, b)| b - a).product()
    }

    pub fn integral(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.value * Self::cell_volume(c))
            .sum()
    }

    /// `(sum_cells |value|^p * volume)^(1/p)` for `p > 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64, MeasureError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(MeasureError::BadExponent(p));
        }
        let s: f64 = self
            .cells
            .iter()
            .map(|c| c.value.powf(p) * Self::cell_volume(c))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// Lumps each cell's mass at its center; zero-mass cells are dropped
    /// and the result is renormalized exactly.
    pub fn discretize(&self) -> Result<DiscreteMeasure, MeasureError> {
        let mut atoms = Vec::new();
        for cell in &self.cells {
            let mass = cell.value * Self::cell_volume(cell);
            if mass <= 0.0 {
                continue;
            }
            let center: Vec<f64> = cell
                .min
                .iter()
                .zip(&cell.max)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            atoms.push((center, mass));
        }
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut atoms {
            *w /= total;
        }
        DiscreteMeasure::new(self.dim, atoms)
    }

    /// Largest cell mass — the discretized measure's largest atom weight.
    pub fn max_cell_mass(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.value * Self::cell_volume(c))
            .fold(0.0, f64::max)
    }

    /// Largest cell diagonal; controls the discretization slack in
    /// concentration estimates.
    pub fn max_cell_diameter(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                c.min
                    .iter()
                    .zip(&c.max)
                    .map(|(a, b)| (b - a) * (b - a))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Splits every cell in half along each axis (`2^d` children).
    pub fn refined(&self) -> Result<HistogramDensity, MeasureError> {
        let mut cells = Vec::with_capacity(self.cells.len() << self.dim);
        for cell in &self.cells {
            let mut stack = vec![(cell.min.clone(), cell.max.clone())];
            for axis in 0..self.dim {
                let mut next = Vec::with_capacity(stack.len() * 2);
                for (lo, hi) in stack {
                    let mid = 0.5 * (lo[axis] + hi[axis]);
                    let mut hi_left = hi.clone();
                    hi_left[axis] = mid;
                    let mut lo_right = lo.clone();
                    lo_right[axis] = mid;
                    next.push((lo, hi_left));
                    next.push((lo_right, hi));
                }
                stack = next;
            }
            for (lo, hi) in stack {
                cells.push(HistogramCell {
                    min: lo,
                    max: hi,
                    value: cell.value,
                });
            }
        }
        HistogramDensity::new(self.dim, cells)
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m || k == 0 {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance to the next k-combination of {0..m}
        let mut i = k;
        let mut found = false;
        while i > 0 {
            i -= 1;
            if idx[i] < i + m - k {
                found = true;
                break;
            }
        }
        if !found {
            return;
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Center equidistant from the given points within their affine hull —
/// the only candidate for the center of a smallest enclosing ball pinned
/// by exactly these points. `None` if the points are affinely dependent.
fn equidistant_center(positions: &[Vec<f64>], subset: &[usize]) -> Option<Vec<f64>> {
    let p0 = &positions[subset[0]];
    let k = subset.len() - 1;
    if k == 0 {
        return Some(p0.clone());
    }
    let vs: Vec<Vec<f64>> = subset[1..]
        .iter()
        .map(|&i| {
            positions[i]
                .iter()
                .zip(p0)
                .map(|(a, b)| a - b)
                .collect::<Vec<f64>>()
        })
        .collect();
    // Solve 2 G lambda = g with G the Gram matrix of the vs.
    let mut g = vec![vec![0.0; k + 1]; k];
    let mut scale = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let dot: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
            g[i][j] = 2.0 * dot;
            scale = f64::max(scale, dot.abs());
        }
        g[i][k] = vs[i].iter().map(|a| a * a).sum::<f64>();
    }
    if scale == 0.0 {
        return None;
    }
    let lambda = solve_dense(&mut g, 1e-12 * scale)?;
    let mut center = p0.clone();
    for (i, v) in vs.iter().enumerate() {
        for (c, vc) in center.iter_mut().zip(v) {
            *c += lambda[i] * vc;
        }
    }
    Some(center)
}

/// Gaussian elimination with partial pivoting on an augmented system.
fn solve_dense(aug: &mut [Vec<f64>], pivot_floor: f64) -> Option<Vec<f64>> {
    let k = aug.len();
    for col in 0..k {
        let (pivot_row, pivot_val) = (col..k)
            .map(|r| (r, aug[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if pivot_val <= pivot_floor {
            return None;
        }
        aug.swap(col, pivot_row);
        for r in 0..k {
            if r == col {
                continue;
            }
            let factor = aug[r][col] / aug[col][col];
            if factor != 0.0 {
                for c in col..=k {
                    aug[r][c] -= factor * aug[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| aug[i][k] / aug[i][i]).collect())
}

/// Concentration of a discretized histogram is controlled by the Hoelder
/// bound at an inflated radius: moving each cell's mass to its center
/// displaces it by at most half the cell diagonal.
pub fn histogram_concentration_bound(
    density: &HistogramDensity,
    p: f64,
    radius: f64,
) -> Result<f64, MeasureError> {
    let norm = density.lp_norm(p)?;
    let q = p / (p - 1.0);
    let d = density.dimension();
    let inflated = radius + 0.5 * density.max_cell_diameter();
    Ok(norm * (unit_ball_volume(d) * inflated.powi(d as i32)).powf(1.0 / q))
}
