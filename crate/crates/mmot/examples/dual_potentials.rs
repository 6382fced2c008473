//! Kantorovich potentials end to end: dual solve on a truncated cost,
//! inf-convolution canonicalization, complementary slackness against
//! the optimal plan, and the shifted potential tuple.
//!
//! Run: cargo run --example dual_potentials

use mmot::analysis::random_instance;
use mmot::costs::RepulsiveCost;
use mmot::duality::{
    canonicalize, check_complementary_slackness, normalizing_shifts, solve_dual,
    tuple_from_symmetric,
};
use mmot::solver::{solve_exact, SolverOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let rho = random_instance(&mut rng, 1, 2).unwrap();
    let n = 2;
    let base = RepulsiveCost::coulomb();

    let beta = rho.concentration_radius(n).unwrap().unwrap();
    let alpha_star = base.separation_threshold(n, beta).unwrap();
    let cost = base.truncated(alpha_star / 2.0).unwrap();
    println!("beta = {beta:.6}, separation threshold = {alpha_star:.6}");

    let primal = solve_exact(&rho, n, &cost, &SolverOptions::default()).unwrap();
    let plan = primal.plan.as_ref().unwrap();
    let dual = solve_dual(&rho, n, &cost).unwrap();
    println!(
        "primal = {}, dual = {:.12}, lp gap = {:.3e}",
        primal.value,
        dual.potential.objective(),
        dual.gap
    );

    let canon = canonicalize(&dual.potential, &cost).unwrap();
    println!("canonical potential values:");
    for (atom, u) in rho.positions().iter().zip(canon.values()) {
        println!("  u({:?}) = {u:.8}", atom[0]);
    }
    println!(
        "feasible for the unclamped cost: margin {:.3e}",
        canon.feasibility_margin(&base)
    );

    let slack = check_complementary_slackness(plan, &canon, &cost, 1e-9);
    println!(
        "slackness: max residual {} over {} support entries (pass: {})",
        slack.max_residual, slack.entries_checked, slack.pass
    );

    let shifts = normalizing_shifts(plan, &canon, &cost, 1e-9).unwrap();
    let tuple = tuple_from_symmetric(&canon, &shifts, &cost).unwrap();
    println!("normalizing shifts: {shifts:?}");
    println!(
        "tuple potentials per marginal: {} lists of {} values",
        tuple.tuple().unwrap().len(),
        rho.len()
    );
}
