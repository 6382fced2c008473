//! Continuity of the optimal value in the marginal: a shrinking weight
//! perturbation drives the value back to the limit, while the classic
//! divergent family (imbalanced two-atom weights) stays at +inf and the
//! report flags the concentration-threshold violation instead of
//! claiming convergence.
//!
//! Run: cargo run --example continuity

use mmot::analysis::{
    perturbed_weights, random_instance, run_continuity_experiment, VerifyOptions,
};
use mmot::costs::RepulsiveCost;
use mmot::measures::DiscreteMeasure;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let cost = RepulsiveCost::coulomb();
    let opts = VerifyOptions::default();

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let limit = random_instance(&mut rng, 1, 2).unwrap();
    let sequence: Vec<DiscreteMeasure> = (1..=10)
        .map(|k| perturbed_weights(&limit, 2, 2e-3 / (k * k) as f64, &mut rng).unwrap())
        .collect();
    let report = run_continuity_experiment(&sequence, &limit, 2, &cost, 1e-3, &opts).unwrap();
    println!("limit value = {}", report.limit_value);
    println!("k   C(rho_k)        |C(rho_k) - C(rho)|   bl-distance");
    for (k, ((v, e), bl)) in report
        .values
        .iter()
        .zip(&report.errors)
        .zip(&report.bl_distances)
        .enumerate()
    {
        println!("{:<3} {v:<15} {e:<21} {bl:.3e}", k + 1);
    }
    println!(
        "tail pass: {:?}, uniformly spread from index {:?}",
        report.tail_pass, report.equidistribution_index
    );

    // the divergent family: weights (1/2 + t_k, 1/2 - t_k)
    let divergent_limit = DiscreteMeasure::uniform_1d(&[0.0, 1.0]).unwrap();
    let family: Vec<DiscreteMeasure> = (1..=6)
        .map(|k| {
            let t = 1.0 / (k as f64 + 2.0);
            DiscreteMeasure::new(1, vec![(vec![0.0], 0.5 + t), (vec![1.0], 0.5 - t)]).unwrap()
        })
        .collect();
    let report =
        run_continuity_experiment(&family, &divergent_limit, 2, &cost, 1e-3, &opts).unwrap();
    println!("\ndivergent family: values = {:?}", report.values);
    println!(
        "flagged: {} — {}",
        report.small_concentration_violated,
        report.note.as_deref().unwrap_or("")
    );
}
