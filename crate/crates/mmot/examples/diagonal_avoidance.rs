//! Optimal plans avoid the diagonal strip: every support tuple keeps
//! its particles separated by the threshold computed from the marginal's
//! concentration alone — verified here on a three-marginal instance,
//! together with the greedy selection of mutually separated support
//! tuples.
//!
//! Run: cargo run --example diagonal_avoidance

use mmot::analysis::random_instance;
use mmot::costs::RepulsiveCost;
use mmot::measures::small_concentration_threshold;
use mmot::solver::{select_separated_points, solve_exact, SolverOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 3;
    let rho = random_instance(&mut rng, 1, n).unwrap();
    let cost = RepulsiveCost::coulomb();

    let beta = rho.concentration_radius(n).unwrap().unwrap();
    let alpha_star = cost.separation_threshold(n, beta).unwrap();
    println!(
        "m = {}, n = {n}, threshold = {:.6}",
        rho.len(),
        small_concentration_threshold(n)
    );
    println!("beta = {beta:.6}, guaranteed separation = {alpha_star:.6}");

    let result = solve_exact(&rho, n, &cost, &SolverOptions::default()).unwrap();
    let plan = result.plan.as_ref().unwrap();
    let gap = plan.min_interparticle_gap(1e-9);
    println!(
        "optimal value = {}, support size = {}, min pair distance = {gap:.6}",
        result.value,
        plan.support(1e-9).count()
    );
    println!(
        "diagonal avoidance: gap >= threshold? {} (margin {:.6})",
        gap >= alpha_star,
        gap - alpha_star
    );

    // mutually separated support tuples at scale beta
    let first = plan.entries().keys().next().unwrap().clone();
    match select_separated_points(plan, &first, beta * 0.5) {
        Ok(selected) => {
            println!("\nseparated support tuples at radius {:.4}:", beta * 0.5);
            for t in &selected {
                let coords: Vec<f64> = t.iter().map(|&a| rho.position(a)[0]).collect();
                println!("  {t:?} -> {coords:?}");
            }
        }
        Err(e) => println!("selection failed: {e}"),
    }
}
