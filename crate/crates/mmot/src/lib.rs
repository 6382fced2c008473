//! Multimarginal optimal transport with repulsive pairwise costs.
//!
//! Given a discrete probability measure `rho` on `R^d`, an integer
//! `n >= 2`, and a pairwise cost `c(x_1, ..., x_n) = sum_{i<j}
//! phi(|x_i - x_j|)` built from a decreasing profile `phi` that blows up
//! at zero (Coulomb is `phi(t) = 1/t`), this crate computes
//!
//! * the optimal transport value and plan over couplings of `n` copies
//!   of `rho` — by exact linear programming with a machine-checked dual
//!   certificate, by multimarginal entropic scaling, and by brute-force
//!   enumeration as an independent oracle;
//! * Kantorovich potentials for the dual problem, their inf-convolution
//!   canonicalization, and pointwise extensions off the atoms;
//! * quantitative verdicts for the structural facts that make the
//!   repulsive problem tractable: optimal plans keep all particles a
//!   computable distance apart, truncating the cost below that distance
//!   changes nothing, canonical potentials are bounded, Lipschitz, and
//!   semiconcave with explicit constants, and the optimal value is
//!   Lipschitz in the marginal.
//!
//! The `analysis` module packages those verdicts into deterministic JSON
//! reports with measured margins; the `cli` module drives everything
//! from a single config file (see the `mmot` binary and the `examples/`
//! directory).
//!
//! ```
//! use mmot::costs::RepulsiveCost;
//! use mmot::measures::DiscreteMeasure;
//! use mmot::solver::{solve_exact, SolverOptions};
//!
//! // Two equal atoms, two marginals, Coulomb cost: the optimal coupling
//! // swaps the atoms and pays 1 / |0 - 1| = 1.
//! let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0]).unwrap();
//! let result = solve_exact(&rho, 2, &RepulsiveCost::coulomb(), &SolverOptions::default()).unwrap();
//! assert!((result.value.expect_finite("finite") - 1.0).abs() < 1e-10);
//! ```

pub mod analysis;
pub mod cli;
pub mod costs;
pub mod duality;
pub mod extreal;
pub mod measures;
pub mod simplex;
pub mod solver;
mod tuples;

pub use extreal::ExtReal;
