//! Single node with a processing cost. Shows the activation window and
//! where it disagrees with the exact dual-optimal activation rule.

use wpcn::point_to_point::{self, ActivationRule, PointToPointDual};
use wpcn::NetworkConfig;

fn main() -> wpcn::Result<()> {
    let cfg = NetworkConfig {
        processing_cost: 10e-6,
        ..NetworkConfig::reference_regime(1)
    };
    let lambda = PointToPointDual(2e9);
    let (lo, hi) = point_to_point::activation_window(lambda, cfg.processing_cost);
    println!("window at λ = {:e}: ({lo:.4e}, {hi:.4e})", lambda.0);

    for x in [2e4, 6e4, 9e4, 2e5, 1e6] {
        let window = point_to_point::allocate_epoch_with(x, lambda, &cfg, ActivationRule::Window)?;
        let exact = point_to_point::allocate_epoch_with(x, lambda, &cfg, ActivationRule::DualOptimal)?;
        let value = |a: &point_to_point::P2PAllocation| {
            point_to_point::dual_objective(
                x,
                a.bs_power,
                a.eh_fraction,
                lambda,
                cfg.processing_cost,
                cfg.noise_power,
            )
        };
        println!(
            "x = {x:.1e}: window τ0 = {:.5} P_S = {:.3e} L = {:.5} | dual-optimal τ0 = {:.5} P_S = {:.3e} L = {:.5}",
            window.eh_fraction,
            window.ehn_tx_power,
            value(&window),
            exact.eh_fraction,
            exact.ehn_tx_power,
            value(&exact)
        );
    }
    Ok(())
}
