//! Closed-form allocators against a brute-force grid over (p, τ0).

use wpcn::calibration::{EpochAllocator, Multiuser, PointToPoint};
use wpcn::oracle::{self, Grid};
use wpcn::point_to_point::ActivationRule;
use wpcn::{generate_trace, NetworkConfig};

fn main() -> wpcn::Result<()> {
    let cfg = NetworkConfig {
        num_epochs: 20,
        ..NetworkConfig::reference_regime(4)
    };
    let trace = generate_trace(&cfg)?;
    let prices = oracle::price_ladder(Multiuser { cfg: &cfg }.lambda_scale(&trace));
    let s = oracle::validate_multiuser(&trace, &prices, &cfg, Grid::default())?;
    println!(
        "multiuser: {} checks, worst gap {:e}, passed {}",
        s.checks.len(),
        s.worst_gap(),
        s.passed()
    );

    let cfg = NetworkConfig {
        num_epochs: 20,
        processing_cost: 10e-6,
        ..NetworkConfig::reference_regime(1)
    };
    let trace = generate_trace(&cfg)?;
    for rule in [ActivationRule::Window, ActivationRule::DualOptimal] {
        let prices = oracle::price_ladder(PointToPoint { cfg: &cfg, rule }.lambda_scale(&trace));
        let s = oracle::validate_point_to_point(&trace, &prices, &cfg, Grid::default(), rule)?;
        println!(
            "point-to-point {rule:?}: {} checks, {} below the grid, {} window disagreements, worst gap {:e}",
            s.checks.len(),
            s.value_failures(),
            s.window_disagreements(),
            s.worst_gap()
        );
    }
    Ok(())
}
