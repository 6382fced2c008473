//! A small randomized verification campaign: generated instances run
//! through the full theorem battery, results gathered into one
//! deterministic report with per-check margins.
//!
//! Run: cargo run --example verification_campaign

use mmot::analysis::{run_campaign, CampaignConfig, VerifyOptions};
use mmot::costs::RepulsiveCost;

fn main() {
    let config = CampaignConfig {
        seed: 2024,
        instances: 6,
        dimensions: vec![1, 2],
        marginals: vec![2, 3],
        cost: RepulsiveCost::coulomb(),
        verify: VerifyOptions {
            probe_points: 300,
            probe_pairs: 80,
            ..VerifyOptions::default()
        },
        workers: 2,
        continuity_terms: 8,
        include_divergent_family: true,
    };
    let outcome = run_campaign(&config).unwrap();

    for report in &outcome.report.instances {
        println!(
            "instance {} (d={}, m={}, n={}): beta={:.5}, separation={:.5}",
            report.instance.hash,
            report.instance.dimension,
            report.instance.atoms,
            report.instance.marginals,
            report.beta.unwrap_or(f64::NAN),
            report.separation_threshold.unwrap_or(f64::NAN),
        );
        for check in &report.checks {
            let verdict = match check.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "skip",
            };
            println!("  {:28} {verdict}  margin {}", check.name, check.margin);
        }
    }
    let s = &outcome.report.summary;
    println!(
        "\nsummary: {} passed, {} failed, {} skipped; {} reproducers",
        s.passed,
        s.failed,
        s.skipped,
        outcome.reproducers.len()
    );
}
