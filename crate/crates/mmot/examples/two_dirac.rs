//! The two-atom picture in one screen: two equal atoms force the
//! optimal coupling to swap them (value 1/|x - y| for the Coulomb
//! profile), while any weight imbalance forces some mass to pair with
//! itself and the value blows up to +inf.
//!
//! Run: cargo run --example two_dirac

use mmot::costs::RepulsiveCost;
use mmot::measures::DiscreteMeasure;
use mmot::solver::{solve_exact, SolverOptions};

fn main() {
    let cost = RepulsiveCost::coulomb();
    let opts = SolverOptions::default();

    let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0]).unwrap();
    let result = solve_exact(&rho, 2, &cost, &opts).unwrap();
    println!("balanced pair:   C(rho) = {}", result.value);
    for (indices, weight) in result.plan.as_ref().unwrap().entries() {
        println!("  plan entry {indices:?} -> {weight}");
    }

    for t in [0.25, 0.1, 0.01] {
        let skewed =
            DiscreteMeasure::new(1, vec![(vec![0.0], 0.5 + t), (vec![1.0], 0.5 - t)]).unwrap();
        let result = solve_exact(&skewed, 2, &cost, &opts).unwrap();
        println!("weights (1/2 + {t}, 1/2 - {t}): C = {}", result.value);
    }
}
