//! From a density to an a-priori value bound: the Hoelder inequality
//! turns an L^p norm into a concentration radius, the radius into a
//! bound on the optimal value; the discretized measure must respect the
//! slack-adjusted version of it.
//!
//! Run: cargo run --example lp_norm_bound

use mmot::analysis::{verify_lp_norm_bound, VerifyOptions};
use mmot::costs::RepulsiveCost;
use mmot::measures::{HistogramCell, HistogramDensity};

fn main() {
    // a piecewise-constant density on [0, 1] with a mild bump
    let mut cells = Vec::new();
    for k in 0..20 {
        let lo = k as f64 / 20.0;
        let hi = (k + 1) as f64 / 20.0;
        let value = if (5..10).contains(&k) { 1.6 } else { 0.8 };
        cells.push(HistogramCell {
            min: vec![lo],
            max: vec![hi],
            value,
        });
    }
    let density = HistogramDensity::new(1, cells).unwrap();
    println!(
        "integral = {}, |rho|_2 = {:.6}",
        density.integral(),
        density.lp_norm(2.0).unwrap()
    );

    for p in [1.5, 2.0, 3.0] {
        let entries = verify_lp_norm_bound(
            &density,
            2,
            &RepulsiveCost::coulomb(),
            p,
            &VerifyOptions::default(),
        )
        .unwrap();
        println!("\np = {p}");
        for entry in entries {
            println!(
                "  {:22} claimed {:<14} measured {:<14} pass {:?}",
                entry.name, entry.claimed, entry.measured, entry.pass
            );
        }
    }
}
