//! Joint allocation against the fixed-power benchmark and the equal-share
//! floor, all on the same channel draws.

use wpcn::generate_trace;
use wpcn::sim::{run_on_trace, Scheme};
use wpcn::NetworkConfig;

fn main() -> wpcn::Result<()> {
    let cfg = NetworkConfig {
        avg_power: 0.05,
        ..NetworkConfig::reference_regime(1)
    }
    .validate()?;
    let trace = generate_trace(&cfg)?;
    for scheme in Scheme::applicable(&cfg) {
        let r = run_on_trace(&cfg, &trace, scheme)?;
        println!(
            "{:>16}: {:.5} bits/symbol, {:.4e} W delivered, {:>5} of {} blocks served, audit {:?}",
            scheme.id(),
            r.throughput_bits,
            r.achieved_power_w,
            r.active_epochs,
            r.num_epochs,
            r.audit
        );
    }
    Ok(())
}
