//! Configuration text and channel trace files: write, read back, and
//! confirm the simulation sees the same draws.

use wpcn::sim::{run_on_trace, Scheme};
use wpcn::{generate_trace, load_trace, save_trace, NetworkConfig};

fn main() -> wpcn::Result<()> {
    let dir = std::env::temp_dir().join(format!("wpcn-trace-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| wpcn::Error::io(&dir, e))?;

    let cfg = NetworkConfig {
        num_epochs: 1_000,
        rng_seed: 7,
        ..NetworkConfig::reference_regime(2)
    };
    let cfg_path = dir.join("net.cfg");
    cfg.save(&cfg_path)?;
    let cfg = NetworkConfig::load(&cfg_path)?.validate()?;
    println!("{}", cfg.to_text());

    let trace = generate_trace(&cfg)?;
    let trace_path = dir.join("trace.csv");
    save_trace(&trace, &trace_path)?;
    let loaded = load_trace(&trace_path, &cfg)?;
    println!("trace round trip exact: {}", trace.same_gains(&loaded));

    let a = run_on_trace(&cfg, &trace, Scheme::JointT1)?;
    let b = run_on_trace(&cfg, &loaded, Scheme::JointT1)?;
    println!("throughput {} vs {}", a.throughput_bits, b.throughput_bits);

    std::fs::remove_dir_all(&dir).map_err(|e| wpcn::Error::io(&dir, e))?;
    Ok(())
}
