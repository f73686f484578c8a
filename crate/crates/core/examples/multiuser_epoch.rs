//! One fading block with three nodes: broadcast decision, harvest fraction,
//! TDMA slots and per-node rates at a few prices.

use wpcn::multiuser::{self, MultiuserDual};
use wpcn::{EpochChannelState, NetworkConfig};

fn main() -> wpcn::Result<()> {
    let cfg = NetworkConfig::reference_regime(3);
    // Raw power gains (60 dB path loss) for the three nodes.
    let state = EpochChannelState::new(vec![1.4e-6, 0.6e-6, 0.9e-6], cfg.noise_power)?;
    let (a, b) = multiuser::epoch_coefficients(&state);
    println!("a = {a:?}\nb = {b:.4}");

    for lambda in [0.0, 0.5 * b, 0.99 * b, b] {
        let alloc = multiuser::allocate_epoch(&state, MultiuserDual(lambda), &cfg)?;
        println!(
            "λ = {lambda:.4}: p = {} W, τ0 = {:.6}, τ = {:?}",
            alloc.bs_power, alloc.eh_fraction, alloc.time_shares
        );
        if alloc.is_active() {
            let bits: Vec<f64> = alloc.node_rates.iter().map(|r| r / std::f64::consts::LN_2).collect();
            println!(
                "    rates (bits/symbol) = {bits:.4?}, simplex error {:e}",
                alloc.simplex_error()
            );
        }
    }
    Ok(())
}
