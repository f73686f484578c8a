//! Monte Carlo harness: one calibrated run per scheme, budget sweeps over a
//! shared channel trace, and CSV/JSON result files.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{EqualShare, FixedPower};
use crate::calibration::{allocate_trace, calibrate_lambda, EpochAllocator, Multiuser, PointToPoint};
use crate::channel::{generate_trace, ChannelTrace};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::point_to_point::ActivationRule;

/// Relative slack on the average power constraint in the audit.
const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Multi-node closed form with a calibrated price.
    JointT1,
    /// Single node with processing cost, calibrated price.
    JointT2,
    /// Constant `P_avg` broadcast with optimal harvest fraction.
    BenchmarkFixed,
    /// Constant `P_avg` broadcast, `K + 1` equal slots.
    EqualShare,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::JointT1,
        Scheme::JointT2,
        Scheme::BenchmarkFixed,
        Scheme::EqualShare,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::JointT1 => "joint_t1",
            Scheme::JointT2 => "joint_t2",
            Scheme::BenchmarkFixed => "benchmark_fixed",
            Scheme::EqualShare => "equal_share",
        }
    }

    pub fn is_joint(self) -> bool {
        matches!(self, Scheme::JointT1 | Scheme::JointT2)
    }

    /// Schemes that apply to `cfg`; the point-to-point one needs `K = 1`.
    pub fn applicable(cfg: &NetworkConfig) -> Vec<Scheme> {
        Self::ALL
            .into_iter()
            .filter(|s| *s != Scheme::JointT2 || cfg.num_nodes == 1)
            .collect()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme '{s}'")))
    }
}

/// Post-run checks of the constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintAudit {
    /// Achieved average power within `AUDIT_TOL` of the budget from below,
    /// and on the budget when the price is positive.
    pub average_power_ok: bool,
    /// Every broadcast power is 0 or `P_max` (joint schemes) or `P_avg`.
    pub peak_power_ok: bool,
    pub max_simplex_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub scheme: Scheme,
    pub p_avg_w: f64,
    /// Average rate of each node, bits/symbol.
    pub per_node_bits: Vec<f64>,
    /// Sum over nodes, bits/symbol.
    pub throughput_bits: f64,
    pub achieved_power_w: f64,
    /// Calibrated price in the scheme's own units; 0 for fixed schemes.
    pub lambda: f64,
    pub constraint_active: bool,
    pub active_epochs: usize,
    pub num_epochs: usize,
    pub audit: ConstraintAudit,
    /// Not written to result files.
    pub wall_time_s: f64,
}

/// Generates the configured trace and runs `scheme` on it.
pub fn run_simulation(cfg: &NetworkConfig, scheme: Scheme) -> Result<ThroughputReport> {
    let cfg = cfg.clone().validate()?;
    let trace = generate_trace(&cfg)?;
    run_on_trace(&cfg, &trace, scheme)
}

pub fn run_on_trace(cfg: &NetworkConfig, trace: &ChannelTrace, scheme: Scheme) -> Result<ThroughputReport> {
    let started = Instant::now();
    if trace.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    if trace.num_nodes() != cfg.num_nodes {
        return Err(Error::InvalidArgument(format!(
            "trace has {} nodes, configuration {}",
            trace.num_nodes(),
            cfg.num_nodes
        )));
    }
    match scheme {
        Scheme::JointT1 => finish(cfg, trace, scheme, &Multiuser { cfg }, started),
        Scheme::JointT2 => finish(
            cfg,
            trace,
            scheme,
            &PointToPoint {
                cfg,
                rule: ActivationRule::Window,
            },
            started,
        ),
        Scheme::BenchmarkFixed => finish(cfg, trace, scheme, &FixedPower { cfg }, started),
        Scheme::EqualShare => finish(cfg, trace, scheme, &EqualShare { cfg }, started),
    }
}

fn finish<A: EpochAllocator>(
    cfg: &NetworkConfig,
    trace: &ChannelTrace,
    scheme: Scheme,
    allocator: &A,
    started: Instant,
) -> Result<ThroughputReport> {
    if scheme == Scheme::JointT2 && cfg.num_nodes != 1 {
        return Err(Error::InvalidArgument(format!(
            "{scheme} needs a single node, got {}",
            cfg.num_nodes
        )));
    }
    let (lambda, constraint_active) = if scheme.is_joint() {
        let sol = calibrate_lambda(trace, cfg, allocator)?;
        (sol.lambda, sol.constraint_active)
    } else {
        (0.0, false)
    };
    let outcomes = allocate_trace(trace, lambda, allocator)?;

    let m = outcomes.len() as f64;
    let mut rate_sums = vec![0.0; cfg.num_nodes];
    let mut energy = 0.0;
    let mut active = 0;
    let mut peak_ok = true;
    let mut max_simplex_error: f64 = 0.0;
    let allowed = if scheme.is_joint() {
        cfg.max_power
    } else {
        cfg.avg_power
    };
    for o in &outcomes {
        for (s, r) in rate_sums.iter_mut().zip(&o.node_rates) {
            *s += r;
        }
        energy += o.delivered_energy();
        active += usize::from(o.is_active());
        peak_ok &= o.bs_power == 0.0 || o.bs_power == allowed;
        max_simplex_error = max_simplex_error.max(o.simplex_error);
    }
    let achieved = energy / m;
    let slack = AUDIT_TOL * cfg.avg_power;
    let average_power_ok = achieved <= cfg.avg_power + slack
        && (!constraint_active || (achieved - cfg.avg_power).abs() <= cfg.lambda_tol * cfg.avg_power);

    let per_node_bits: Vec<f64> = rate_sums.iter().map(|s| s / m / std::f64::consts::LN_2).collect();
    Ok(ThroughputReport {
        scheme,
        p_avg_w: cfg.avg_power,
        throughput_bits: per_node_bits.iter().sum(),
        per_node_bits,
        achieved_power_w: achieved,
        lambda,
        constraint_active,
        active_epochs: active,
        num_epochs: outcomes.len(),
        audit: ConstraintAudit {
            average_power_ok,
            peak_power_ok: peak_ok,
            max_simplex_error,
        },
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Reports for every scheme at one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub p_avg_w: f64,
    pub reports: Vec<ThroughputReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    /// Throughput of `scheme` at every budget, in sweep order.
    pub fn series(&self, scheme: Scheme) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|pt| {
                pt.reports
                    .iter()
                    .find(|r| r.scheme == scheme)
                    .map(|r| (pt.p_avg_w, r.throughput_bits))
            })
            .collect()
    }
}

/// Runs every scheme at every budget on one generated trace.
pub fn sweep_pavg(cfg: &NetworkConfig, pavg_list: &[f64], schemes: &[Scheme]) -> Result<SweepCurve> {
    let cfg = cfg.clone().validate()?;
    let trace = generate_trace(&cfg)?;
    sweep_on_trace(&cfg, &trace, pavg_list, schemes)
}

pub fn sweep_on_trace(
    cfg: &NetworkConfig,
    trace: &ChannelTrace,
    pavg_list: &[f64],
    schemes: &[Scheme],
) -> Result<SweepCurve> {
    if pavg_list.is_empty() || schemes.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one budget and one scheme".into(),
        ));
    }
    if pavg_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "sweep budgets must be strictly increasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(pavg_list.len());
    for &p in pavg_list {
        let at = NetworkConfig {
            avg_power: p,
            ..cfg.clone()
        }
        .validate()?;
        let reports = schemes
            .iter()
            .map(|&s| run_on_trace(&at, trace, s))
            .collect::<Result<Vec<_>>>()?;
        points.push(SweepPoint { p_avg_w: p, reports });
    }
    Ok(SweepCurve { points })
}

/// `n` points from `lo` to `hi` evenly spaced in log scale; both ends exact.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "log spacing needs 0 < lo < hi and n >= 2, got lo={lo} hi={hi} n={n}"
        )));
    }
    let ratio = (hi / lo).ln();
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => lo * (ratio * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidArgument(format!(
                "unknown format '{s}', expected csv or json"
            ))),
        }
    }
}

/// One line of a result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRow {
    pub scheme: String,
    pub p_avg_w: f64,
    pub throughput_bits_per_symbol: f64,
    pub achieved_power_w: f64,
    pub lambda: f64,
    pub active_epochs: usize,
}

impl From<&ThroughputReport> for ResultRow {
    fn from(r: &ThroughputReport) -> Self {
        Self {
            scheme: r.scheme.id().to_string(),
            p_avg_w: r.p_avg_w,
            throughput_bits_per_symbol: r.throughput_bits,
            achieved_power_w: r.achieved_power_w,
            lambda: r.lambda,
            active_epochs: r.active_epochs,
        }
    }
}

pub trait ResultRows {
    fn rows(&self) -> Vec<ResultRow>;
}

impl ResultRows for ThroughputReport {
    fn rows(&self) -> Vec<ResultRow> {
        vec![self.into()]
    }
}

impl ResultRows for SweepCurve {
    fn rows(&self) -> Vec<ResultRow> {
        self.points
            .iter()
            .flat_map(|p| p.reports.iter().map(ResultRow::from))
            .collect()
    }
}

/// Result file contents. Deterministic for a given run: no timestamps or
/// timings.
pub fn render_results(results: &dyn ResultRows, format: Format) -> Result<String> {
    let rows = results.rows();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn emit_results(results: &dyn ResultRows, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_results(results, format)?).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: impl AsRef<Path>, format: Format) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        Format::Csv => csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(Error::from),
        Format::Json => Ok(serde_json::from_str(&text)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(k: usize) -> NetworkConfig {
        NetworkConfig {
            num_epochs: 400,
            ..NetworkConfig::reference_regime(k)
        }
    }

    #[test]
    fn scheme_ids_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.id().parse::<Scheme>().unwrap(), s);
        }
        assert!("joint".parse::<Scheme>().is_err());
    }

    #[test]
    fn joint_meets_budget_and_is_bang_bang() {
        let cfg = small(3);
        let r = run_simulation(&cfg, Scheme::JointT1).unwrap();
        assert!(r.constraint_active);
        assert!(r.audit.average_power_ok && r.audit.peak_power_ok);
        assert!(r.audit.max_simplex_error < 1e-12);
        assert!((r.achieved_power_w - cfg.avg_power).abs() <= cfg.lambda_tol * cfg.avg_power);
        assert!(r.active_epochs < r.num_epochs);
    }

    #[test]
    fn baselines_stay_under_budget() {
        let cfg = small(2);
        for s in [Scheme::BenchmarkFixed, Scheme::EqualShare] {
            let r = run_simulation(&cfg, s).unwrap();
            assert!(r.achieved_power_w <= cfg.avg_power, "{s}");
            assert!(r.audit.peak_power_ok, "{s}");
            assert_eq!(r.lambda, 0.0);
        }
    }

    #[test]
    fn scheme_ordering_on_shared_trace() {
        let cfg = small(2);
        let trace = generate_trace(&cfg).unwrap();
        let t = |s| run_on_trace(&cfg, &trace, s).unwrap().throughput_bits;
        let (joint, bench, equal) = (t(Scheme::JointT1), t(Scheme::BenchmarkFixed), t(Scheme::EqualShare));
        assert!(joint > bench, "{joint} vs {bench}");
        assert!(bench >= equal, "{bench} vs {equal}");
    }

    #[test]
    fn point_to_point_scheme_needs_one_node() {
        let err = run_simulation(&small(2), Scheme::JointT2).unwrap_err();
        assert_eq!(err.kind(), "invalid_argument");
        assert!(!Scheme::applicable(&small(2)).contains(&Scheme::JointT2));
        assert!(Scheme::applicable(&small(1)).contains(&Scheme::JointT2));
    }

    #[test]
    fn log_spacing_hits_both_ends() {
        let v = log_spaced(1e-3, 1.0, 4).unwrap();
        assert_eq!(v[0], 1e-3);
        assert_eq!(v[3], 1.0);
        assert!((v[1] - 1e-2).abs() < 1e-15);
        assert!(log_spaced(1.0, 1.0, 3).is_err());
        assert!(log_spaced(0.1, 1.0, 1).is_err());
    }

    #[test]
    fn sweep_rejects_unsorted_budgets() {
        let cfg = small(1);
        assert!(sweep_pavg(&cfg, &[0.2, 0.1], &[Scheme::JointT1]).is_err());
        assert!(sweep_pavg(&cfg, &[], &[Scheme::JointT1]).is_err());
    }

    #[test]
    fn results_round_trip_both_formats() {
        let cfg = NetworkConfig {
            num_epochs: 100,
            ..NetworkConfig::reference_regime(1)
        };
        let curve = sweep_pavg(&cfg, &[0.05, 0.2], &[Scheme::JointT1, Scheme::EqualShare]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (fmt, name) in [(Format::Csv, "r.csv"), (Format::Json, "r.json")] {
            let path = dir.path().join(name);
            emit_results(&curve, &path, fmt).unwrap();
            assert_eq!(read_results(&path, fmt).unwrap(), curve.rows());
        }
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"[{"scheme":"joint_t1","p_avg_w":0.1,"throughput_bits_per_symbol":1.0,
                "achieved_power_w":0.1,"lambda":0.0,"active_epochs":1,"extra":3}]"#,
        )
        .unwrap();
        assert!(read_results(&path, Format::Json).is_err());
    }
}
