//! Calibrates the average-power price on a generated trace and checks the
//! delivered power against the budget.

use wpcn::calibration::Multiuser;
use wpcn::{calibrate_lambda, delivered_average_power, generate_trace, NetworkConfig};

fn main() -> wpcn::Result<()> {
    for avg_power in [1e-3, 1e-2, 0.1, 0.5] {
        let cfg = NetworkConfig {
            avg_power,
            ..NetworkConfig::reference_regime(5)
        }
        .validate()?;
        let trace = generate_trace(&cfg)?;
        let alloc = Multiuser { cfg: &cfg };
        let sol = calibrate_lambda(&trace, &cfg, &alloc)?;
        let check = delivered_average_power(&trace, sol.lambda, &alloc)?;
        println!(
            "P_avg = {avg_power:e} W: λ = {:.6e}, delivered = {check:.9e} W, active = {}, {} evaluations",
            sol.lambda, sol.constraint_active, sol.iterations
        );
    }
    Ok(())
}
