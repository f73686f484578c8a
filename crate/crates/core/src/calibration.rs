//! Calibration of the average-power price `λ`.
//!
//! For a fixed trace the delivered average power `(1/M)·Σ p_i·τ0_i` is
//! non-increasing in `λ`: fewer blocks are served and the served ones
//! harvest for less time. It is also continuous, because a block switches
//! on with a vanishing harvest fraction. Bisection on `λ` therefore hits any
//! budget between 0 and the `λ = 0` power.
//!
//! The bisection keeps halving until the bracket reaches floating-point
//! resolution instead of stopping at the first point inside the tolerance.
//! Two allocators with rescaled prices then land on the same allocation.

use rayon::prelude::*;

use crate::channel::{ChannelTrace, EpochChannelState};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::multiuser::{self, MultiuserDual};
use crate::point_to_point::{self, ActivationRule, PointToPointDual};
use crate::root::MAX_ITERATIONS;

/// Relative bracket width at which the price bisection stops.
const LAMBDA_RESOLUTION: f64 = 1e-14;

/// Broadcast decision and rates of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub bs_power: f64,
    pub eh_fraction: f64,
    /// Per-node rates (nats/symbol).
    pub node_rates: Vec<f64>,
    /// `|τ0 + Σ τ_j − 1|` for served blocks, 0 otherwise.
    pub simplex_error: f64,
}

impl BlockOutcome {
    pub fn delivered_energy(&self) -> f64 {
        self.bs_power * self.eh_fraction
    }

    pub fn is_active(&self) -> bool {
        self.bs_power > 0.0
    }
}

/// A per-block allocation rule parameterized by a scalar price, in the
/// rule's own units.
pub trait EpochAllocator: Sync {
    /// `p·τ0` of one block at price `lambda`.
    fn delivered_energy(&self, epoch: &EpochChannelState, lambda: f64) -> Result<f64>;

    fn allocate(&self, epoch: &EpochChannelState, lambda: f64) -> Result<BlockOutcome>;

    /// Price scale at which typical blocks start to switch off. Seeds the
    /// bracket search.
    fn lambda_scale(&self, trace: &ChannelTrace) -> f64;
}

/// Multi-node allocator at a [`MultiuserDual`] price.
#[derive(Debug, Clone, Copy)]
pub struct Multiuser<'a> {
    pub cfg: &'a NetworkConfig,
}

impl EpochAllocator for Multiuser<'_> {
    fn delivered_energy(&self, epoch: &EpochChannelState, lambda: f64) -> Result<f64> {
        let lambda = MultiuserDual(lambda);
        let b = epoch.aux_sum();
        let p = multiuser::power_decision(b, lambda, self.cfg.max_power);
        if p == 0.0 {
            return Ok(0.0);
        }
        Ok(p * multiuser::solve_eh_duration(b, p, lambda, self.cfg.root_tol)?)
    }

    fn allocate(&self, epoch: &EpochChannelState, lambda: f64) -> Result<BlockOutcome> {
        let alloc = multiuser::allocate_epoch(epoch, MultiuserDual(lambda), self.cfg)?;
        Ok(BlockOutcome {
            bs_power: alloc.bs_power,
            eh_fraction: alloc.eh_fraction,
            simplex_error: if alloc.is_active() { alloc.simplex_error() } else { 0.0 },
            node_rates: alloc.node_rates,
        })
    }

    fn lambda_scale(&self, trace: &ChannelTrace) -> f64 {
        median(trace.epochs().iter().map(|e| e.aux_sum()))
    }
}

/// Point-to-point allocator at a [`PointToPointDual`] price.
#[derive(Debug, Clone, Copy)]
pub struct PointToPoint<'a> {
    pub cfg: &'a NetworkConfig,
    pub rule: ActivationRule,
}

impl PointToPoint<'_> {
    fn gain(epoch: &EpochChannelState) -> Result<f64> {
        match epoch.normalized_gains() {
            [x] => Ok(*x),
            gains => Err(Error::InvalidArgument(format!(
                "point-to-point allocation needs one node, epoch has {}",
                gains.len()
            ))),
        }
    }

    fn solve(&self, epoch: &EpochChannelState, lambda: f64) -> Result<point_to_point::P2PAllocation> {
        point_to_point::allocate_epoch_with(Self::gain(epoch)?, PointToPointDual(lambda), self.cfg, self.rule)
    }
}

impl EpochAllocator for PointToPoint<'_> {
    fn delivered_energy(&self, epoch: &EpochChannelState, lambda: f64) -> Result<f64> {
        Ok(self.solve(epoch, lambda)?.delivered_energy())
    }

    fn allocate(&self, epoch: &EpochChannelState, lambda: f64) -> Result<BlockOutcome> {
        let alloc = self.solve(epoch, lambda)?;
        Ok(BlockOutcome {
            bs_power: alloc.bs_power,
            eh_fraction: alloc.eh_fraction,
            node_rates: vec![alloc.rate],
            simplex_error: 0.0,
        })
    }

    fn lambda_scale(&self, trace: &ChannelTrace) -> f64 {
        // The window opens at x ≈ sqrt(λ).
        median(trace.epochs().iter().map(|e| e.normalized_gains()[0].powi(2)))
    }
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 1.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Every block of the trace at one price, in epoch order.
pub fn allocate_trace<A: EpochAllocator + ?Sized>(
    trace: &ChannelTrace,
    lambda: f64,
    allocator: &A,
) -> Result<Vec<BlockOutcome>> {
    trace
        .epochs()
        .par_iter()
        .enumerate()
        .map(|(i, e)| allocator.allocate(e, lambda).map_err(|err| err.at_epoch(i)))
        .collect()
}

/// `(1/M)·Σ p_i·τ0_i`. Summed in epoch order regardless of threading.
pub fn delivered_average_power<A: EpochAllocator + ?Sized>(
    trace: &ChannelTrace,
    lambda: f64,
    allocator: &A,
) -> Result<f64> {
    let energies: Vec<f64> = trace
        .epochs()
        .par_iter()
        .enumerate()
        .map(|(i, e)| allocator.delivered_energy(e, lambda).map_err(|err| err.at_epoch(i)))
        .collect::<Result<_>>()?;
    Ok(energies.iter().sum::<f64>() / trace.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSolution {
    /// Calibrated price, in the allocator's units.
    pub lambda: f64,
    pub achieved_avg_power: f64,
    /// Delivered-power evaluations spent.
    pub iterations: usize,
    /// False when the budget is slack at `λ = 0`.
    pub constraint_active: bool,
    /// False when delivered power jumps across the budget and the solution
    /// falls short of it by more than `lambda_tol`.
    pub within_tolerance: bool,
}

pub fn calibrate_lambda<A: EpochAllocator + ?Sized>(
    trace: &ChannelTrace,
    cfg: &NetworkConfig,
    allocator: &A,
) -> Result<LambdaSolution> {
    calibrate(trace, cfg, allocator, None)
}

/// As [`calibrate_lambda`], searching outward from `hint` first.
pub fn calibrate_lambda_from<A: EpochAllocator + ?Sized>(
    trace: &ChannelTrace,
    cfg: &NetworkConfig,
    allocator: &A,
    hint: f64,
) -> Result<LambdaSolution> {
    calibrate(trace, cfg, allocator, Some(hint))
}

fn calibrate<A: EpochAllocator + ?Sized>(
    trace: &ChannelTrace,
    cfg: &NetworkConfig,
    allocator: &A,
    hint: Option<f64>,
) -> Result<LambdaSolution> {
    if trace.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let target = cfg.avg_power;
    let evals = std::cell::Cell::new(0usize);
    let delivered = |lambda: f64| {
        evals.set(evals.get() + 1);
        delivered_average_power(trace, lambda, allocator)
    };

    let at_zero = delivered(0.0)?;
    if at_zero <= target {
        return Ok(LambdaSolution {
            lambda: 0.0,
            achieved_avg_power: at_zero,
            iterations: evals.get(),
            constraint_active: false,
            within_tolerance: true,
        });
    }

    // Invariant: delivered(lo) > target >= delivered(hi).
    let (mut lo, mut lo_power) = (0.0, at_zero);
    let start = match hint {
        Some(h) if h > 0.0 && h.is_finite() => h,
        _ => allocator.lambda_scale(trace).max(f64::MIN_POSITIVE),
    };
    let mut hi = start;
    let mut hi_power = delivered(hi)?;

    if hi_power > target {
        let mut doublings = 0;
        while hi_power > target {
            if doublings == MAX_ITERATIONS || !hi.is_finite() {
                return Err(Error::Calibration(format!(
                    "delivered power still {hi_power} > {target} at λ = {hi} after {doublings} doublings"
                )));
            }
            (lo, lo_power) = (hi, hi_power);
            hi *= 2.0;
            hi_power = delivered(hi)?;
            doublings += 1;
        }
    } else if hint.is_some() {
        // Shrink toward zero until the lower end overshoots the budget.
        let mut candidate = hi;
        for _ in 0..MAX_ITERATIONS {
            candidate *= 0.5;
            let p = delivered(candidate)?;
            if p > target {
                (lo, lo_power) = (candidate, p);
                break;
            }
            (hi, hi_power) = (candidate, p);
        }
    }

    for _ in 0..MAX_ITERATIONS {
        let mid = lo + 0.5 * (hi - lo);
        if hi - lo <= LAMBDA_RESOLUTION * hi || mid <= lo || mid >= hi {
            break;
        }
        let p = delivered(mid)?;
        if p > target {
            (lo, lo_power) = (mid, p);
        } else {
            (hi, hi_power) = (mid, p);
        }
    }

    let tol = cfg.lambda_tol * target;
    let (lambda, achieved) = if (lo_power - target).abs() < (hi_power - target).abs() {
        (lo, lo_power)
    } else {
        (hi, hi_power)
    };
    if (achieved - target).abs() <= tol {
        return Ok(LambdaSolution {
            lambda,
            achieved_avg_power: achieved,
            iterations: evals.get(),
            constraint_active: true,
            within_tolerance: true,
        });
    }
    if hi_power > target {
        return Err(Error::Calibration(format!(
            "bracket [{lo}, {hi}] ended above the budget: delivered {hi_power}, target {target}"
        )));
    }
    Ok(LambdaSolution {
        lambda: hi,
        achieved_avg_power: hi_power,
        iterations: evals.get(),
        constraint_active: true,
        within_tolerance: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_trace, Provenance};

    fn trace_cfg(k: usize, m: usize, avg: f64) -> NetworkConfig {
        NetworkConfig {
            num_nodes: k,
            num_epochs: m,
            avg_power: avg,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn single_block_half_harvest() {
        // With c = b·P_max = 3, g(1/2) = ln 4 + λ − 3/2, so λ = 3/2 − ln 4
        // puts the root at τ0 = 1/2.
        let cfg = NetworkConfig {
            noise_power: 1.0,
            max_power: 1.0,
            avg_power: 0.5,
            ..NetworkConfig::default()
        };
        let state = EpochChannelState::new(vec![3f64.sqrt()], 1.0).unwrap();
        let trace = ChannelTrace::from_epochs(vec![state], 1.0, Provenance::Generated { seed: 0 });
        let lambda = 1.5 - 4f64.ln();
        let d = delivered_average_power(&trace, lambda, &Multiuser { cfg: &cfg }).unwrap();
        assert!((d - 0.5 * cfg.max_power).abs() < 1e-9, "{d}");
    }

    #[test]
    fn delivered_single_epoch() {
        let cfg = trace_cfg(1, 1, 0.5);
        let state = EpochChannelState::new(vec![1e-6], cfg.noise_power).unwrap();
        let trace = ChannelTrace::from_epochs(vec![state.clone()], cfg.noise_power, Provenance::Generated { seed: 0 });
        let alloc = multiuser::allocate_epoch(&state, MultiuserDual(0.0), &cfg).unwrap();
        let d = delivered_average_power(&trace, 0.0, &Multiuser { cfg: &cfg }).unwrap();
        assert_eq!(d, cfg.max_power * alloc.eh_fraction);
    }

    #[test]
    fn delivered_zero_when_priced_out() {
        let cfg = trace_cfg(2, 200, 0.1);
        let trace = generate_trace(&cfg).unwrap();
        let max_b = trace.epochs().iter().map(|e| e.aux_sum()).fold(0.0, f64::max);
        let d = delivered_average_power(&trace, max_b, &Multiuser { cfg: &cfg }).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn delivered_at_zero_price_is_every_block_active() {
        let cfg = trace_cfg(3, 300, 0.1);
        let trace = generate_trace(&cfg).unwrap();
        let mut expected = 0.0;
        for e in trace.epochs() {
            let t = multiuser::solve_eh_duration(e.aux_sum(), cfg.max_power, MultiuserDual(0.0), cfg.root_tol).unwrap();
            expected += cfg.max_power * t;
        }
        expected /= trace.len() as f64;
        let d = delivered_average_power(&trace, 0.0, &Multiuser { cfg: &cfg }).unwrap();
        assert!((d - expected).abs() < 1e-14);
    }

    #[test]
    fn slack_budget_gives_zero_price() {
        let cfg = trace_cfg(2, 500, 1.0);
        let trace = generate_trace(&cfg).unwrap();
        let sol = calibrate_lambda(&trace, &cfg, &Multiuser { cfg: &cfg }).unwrap();
        assert_eq!(sol.lambda, 0.0);
        assert!(!sol.constraint_active);
        assert!(sol.achieved_avg_power <= cfg.avg_power);
    }

    #[test]
    fn binding_budget_is_met() {
        for avg in [1e-3, 0.02, 0.3] {
            let cfg = trace_cfg(5, 2_000, avg);
            let trace = generate_trace(&cfg).unwrap();
            let sol = calibrate_lambda(&trace, &cfg, &Multiuser { cfg: &cfg }).unwrap();
            assert!(sol.constraint_active);
            assert!(sol.lambda > 0.0);
            assert!((sol.achieved_avg_power - avg).abs() <= cfg.lambda_tol * avg, "{sol:?}");
        }
    }

    #[test]
    fn delivered_power_non_increasing_in_price() {
        let cfg = trace_cfg(2, 1_000, 0.1);
        let trace = generate_trace(&cfg).unwrap();
        let alloc = Multiuser { cfg: &cfg };
        let scale = alloc.lambda_scale(&trace);
        let powers: Vec<f64> = (0..60)
            .map(|i| delivered_average_power(&trace, scale * i as f64 / 10.0, &alloc).unwrap())
            .collect();
        assert!(powers.windows(2).all(|w| w[1] <= w[0]), "{powers:?}");
    }

    #[test]
    fn recalibration_from_hint_is_idempotent() {
        let cfg = trace_cfg(1, 2_000, 0.05);
        let trace = generate_trace(&cfg).unwrap();
        let alloc = Multiuser { cfg: &cfg };
        let first = calibrate_lambda(&trace, &cfg, &alloc).unwrap();
        let again = calibrate_lambda_from(&trace, &cfg, &alloc, first.lambda).unwrap();
        assert!((again.lambda - first.lambda).abs() <= cfg.lambda_tol * first.lambda);
        assert!((again.achieved_avg_power - cfg.avg_power).abs() <= cfg.lambda_tol * cfg.avg_power);
    }

    #[test]
    fn point_to_point_calibration_without_cost() {
        let cfg = trace_cfg(1, 2_000, 0.01);
        let trace = generate_trace(&cfg).unwrap();
        let alloc = PointToPoint {
            cfg: &cfg,
            rule: ActivationRule::Window,
        };
        let sol = calibrate_lambda(&trace, &cfg, &alloc).unwrap();
        assert!(sol.constraint_active && sol.within_tolerance);
        assert!((sol.achieved_avg_power - cfg.avg_power).abs() <= cfg.lambda_tol * cfg.avg_power);
    }

    #[test]
    fn window_jump_returns_feasible_side() {
        // Two blocks inside the window at λ = 0; the weaker one drops out
        // with a positive harvest fraction as the price rises.
        let cfg = NetworkConfig {
            noise_power: 1.0,
            max_power: 1.0,
            processing_cost: 0.2,
            avg_power: 0.1,
            ..NetworkConfig::default()
        };
        let epochs = [1.0, 3.0]
            .map(|x: f64| EpochChannelState::new(vec![x.sqrt()], 1.0).unwrap())
            .to_vec();
        let trace = ChannelTrace::from_epochs(epochs, 1.0, Provenance::Generated { seed: 0 });
        let alloc = PointToPoint {
            cfg: &cfg,
            rule: ActivationRule::Window,
        };
        let at_zero = delivered_average_power(&trace, 0.0, &alloc).unwrap();
        // Aim between the one-block and two-block levels.
        let cfg = NetworkConfig {
            avg_power: 0.9 * at_zero,
            ..cfg
        };
        let alloc = PointToPoint {
            cfg: &cfg,
            rule: ActivationRule::Window,
        };
        let sol = calibrate_lambda(&trace, &cfg, &alloc).unwrap();
        assert!(sol.constraint_active);
        assert!(sol.achieved_avg_power <= cfg.avg_power);
        if !sol.within_tolerance {
            let just_below = delivered_average_power(&trace, sol.lambda * (1.0 - 1e-9), &alloc).unwrap();
            assert!(just_below > cfg.avg_power);
        }
    }

    #[test]
    fn point_to_point_rejects_multi_node_trace() {
        let cfg = trace_cfg(2, 10, 0.1);
        let trace = generate_trace(&cfg).unwrap();
        let err = delivered_average_power(
            &trace,
            0.0,
            &PointToPoint {
                cfg: &cfg,
                rule: ActivationRule::Window,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Epoch { epoch: 0, .. }));
    }
}
