//! Regularity of canonical potentials, measured: the sup bound
//! `n (n-1)^2 phi(alpha/2)`, finite-difference slopes against the
//! profile's Lipschitz envelope, and second differences against the
//! semiconcavity envelope.
//!
//! Run: cargo run --example potential_regularity

use mmot::analysis::random_instance;
use mmot::costs::RepulsiveCost;
use mmot::duality::{canonicalize, extend_potential_batch, solve_dual};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let rho = random_instance(&mut rng, 1, 2).unwrap();
    let n = 2;
    let base = RepulsiveCost::coulomb();

    let beta = rho.concentration_radius(n).unwrap().unwrap();
    let alpha = base.separation_threshold(n, beta).unwrap();
    let cost = base.truncated(alpha).unwrap();
    let canon = canonicalize(&solve_dual(&rho, n, &cost).unwrap().potential, &cost).unwrap();

    let sup_bound = 2.0 * base.phi(alpha / 2.0).unwrap().expect_finite("positive");
    let lip_bound = base.lipschitz_bound(alpha).unwrap();
    let sc_bound = base.semiconcavity_bound(alpha).unwrap();

    // probe the extension on a segment sweep plus random second differences
    let lo = -2.0 * beta;
    let hi = 1.0 + 2.0 * beta;
    let sweep: Vec<Vec<f64>> = (0..=400)
        .map(|k| vec![lo + (hi - lo) * k as f64 / 400.0])
        .collect();
    let values = extend_potential_batch(&canon, &cost, &sweep).unwrap();
    let sup: f64 = values.iter().fold(0.0, |a, v| a.max(v.abs()));
    let mut max_slope = 0.0f64;
    for w in values.windows(2) {
        max_slope = max_slope.max((w[1] - w[0]).abs() / ((hi - lo) / 400.0));
    }

    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..300 {
        let x = rng.random_range(lo..hi);
        let h = 10f64.powf(rng.random_range(-3.0..-0.7));
        let pts = vec![vec![x], vec![x + h], vec![x - h]];
        let v = extend_potential_batch(&canon, &cost, &pts).unwrap();
        max_excess = max_excess.max(v[1] + v[2] - 2.0 * v[0] - 2.0 * sc_bound * h * h);
    }

    println!("beta = {beta:.6}, alpha = {alpha:.6}");
    println!("sup |u| on sweep      = {sup:<12.6} bound = {sup_bound:.6}");
    println!("max slope on sweep    = {max_slope:<12.6} bound = {lip_bound:.6}");
    println!("max 2nd-diff excess   = {max_excess:.3e} (must be <= 0 up to probe noise)");
}
