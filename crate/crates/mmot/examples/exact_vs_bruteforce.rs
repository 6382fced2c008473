//! The LP solver against the permutation oracle: for two marginals with
//! uniform weights the transportation polytope's vertices are the
//! permutation matrices, so enumerating all m! couplings gives an
//! independent optimum to compare against.
//!
//! Run: cargo run --example exact_vs_bruteforce

use mmot::costs::RepulsiveCost;
use mmot::measures::DiscreteMeasure;
use mmot::solver::{brute_force_assignment, solve_exact, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let cost = RepulsiveCost::coulomb();
    let opts = SolverOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    println!("m  exact          brute-force    |diff|      lp-iters");
    for m in 2..=7 {
        let mut xs: Vec<f64> = Vec::new();
        while xs.len() < m {
            let x = rng.random_range(0.0..4.0);
            if xs.iter().all(|&y| (x - y).abs() > 0.05) {
                xs.push(x);
            }
        }
        let rho = DiscreteMeasure::uniform_1d(&xs).unwrap();
        let exact = solve_exact(&rho, 2, &cost, &opts).unwrap();
        let brute = brute_force_assignment(&rho, &cost).unwrap();
        let a = exact.value.expect_finite("spaced atoms");
        let b = brute.value.expect_finite("spaced atoms");
        println!(
            "{m}  {a:<14.10} {b:<14.10} {:<11.3e} {}",
            (a - b).abs(),
            exact.diagnostics.iterations
        );
    }
}
