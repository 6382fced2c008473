//! Concentration geometry of a discrete marginal: the function
//! `mu(r) = sup_x rho(B(x, r))`, the largest radius keeping it below
//! `1/(n (n-1)^2)`, and the separation threshold that radius buys.
//!
//! Run: cargo run --example concentration

use mmot::costs::RepulsiveCost;
use mmot::measures::{small_concentration_threshold, DiscreteMeasure};

fn main() {
    let rho = DiscreteMeasure::uniform_1d(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
    let radii: Vec<f64> = (1..=20).map(|k| 0.25 * k as f64).collect();
    let profile = rho.concentration_profile(&radii).unwrap();
    println!("r      mu(r)   exact");
    for ((r, v), e) in profile
        .radii
        .iter()
        .zip(&profile.values)
        .zip(&profile.exactness)
    {
        println!("{r:<6} {v:<7.4} {e:?}");
    }

    for n in [2usize, 3] {
        let threshold = small_concentration_threshold(n);
        println!("\nn = {n}: threshold 1/(n(n-1)^2) = {threshold:.6}");
        println!("  small concentration: {}", rho.has_small_concentration(n));
        match rho.concentration_radius(n).unwrap() {
            Some(beta) => {
                let alpha = RepulsiveCost::coulomb()
                    .separation_threshold(n, beta)
                    .unwrap();
                println!("  concentration radius beta = {beta:.6}");
                println!("  separation threshold      = {alpha:.6}");
            }
            None => println!("  no positive radius stays below the threshold"),
        }
    }

    // two equal atoms sit exactly at the n = 2 threshold: no radius works
    let pair = DiscreteMeasure::uniform_1d(&[0.0, 1.0]).unwrap();
    println!(
        "\ntwo equal atoms, n = 2: radius = {:?}",
        pair.concentration_radius(2).unwrap()
    );
}
