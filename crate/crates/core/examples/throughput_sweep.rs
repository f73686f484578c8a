//! Throughput against the average power budget for K = 1 and K = 5, with
//! and without a processing cost, written as CSV.
//!
//! ```text
//! cargo run --release --example throughput_sweep -- sweep.csv
//! ```

use wpcn::sim::{self, render_results, Format, Scheme, SweepCurve};
use wpcn::NetworkConfig;

fn main() -> wpcn::Result<()> {
    let budgets = sim::log_spaced(1e-3, 1.0, 20)?;
    let runs = [
        (
            1,
            0.0,
            vec![
                Scheme::JointT1,
                Scheme::JointT2,
                Scheme::BenchmarkFixed,
                Scheme::EqualShare,
            ],
        ),
        (1, 10e-6, vec![Scheme::JointT2]),
        (
            5,
            0.0,
            vec![Scheme::JointT1, Scheme::BenchmarkFixed, Scheme::EqualShare],
        ),
    ];
    let mut csv = String::new();
    for (k, pc, schemes) in runs {
        let cfg = NetworkConfig {
            processing_cost: pc,
            ..NetworkConfig::reference_regime(k)
        };
        let curve: SweepCurve = sim::sweep_pavg(&cfg, &budgets, &schemes)?;
        for s in &schemes {
            let last = curve.series(*s).last().copied().unwrap_or_default();
            eprintln!("K={k} p_c={pc:e} {s}: {:.4} bits/symbol at {:e} W", last.1, last.0);
        }
        let body = render_results(&curve, Format::Csv)?;
        for line in body.lines().skip(usize::from(!csv.is_empty())) {
            csv.push_str(&format!("{line}\n"));
        }
    }
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(&path, csv).map_err(|e| wpcn::Error::io(&path, e))?,
        None => print!("{csv}"),
    }
    Ok(())
}
