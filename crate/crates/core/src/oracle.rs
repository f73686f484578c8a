//! Brute-force checks of the closed-form allocators.
//!
//! Each check maximizes a block Lagrangian over a `(p, τ0)` grid: broadcast
//! power on `{0} ∪ {P_max·k/n_p}` and harvest fraction on the interior
//! points `i/(n_τ+1)`, followed by a three-point parabolic step around the
//! best harvest fraction of every power level. The objectives are written
//! out here rather than shared with the allocators, so a transcription
//! error in either place shows up as a mismatch.
//!
//! The grid cannot beat the true maximum, so the closed form passes when
//! its value is at least the grid value minus a small tolerance.

use rayon::prelude::*;

use crate::channel::{ChannelTrace, EpochChannelState};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::multiuser::{self, MultiuserDual};
use crate::point_to_point::{self, ActivationRule, PointToPointDual};

/// Tolerance of the closed form against the grid.
pub const DUAL_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    /// Interior harvest-fraction points.
    pub tau_points: usize,
    /// Non-zero broadcast power levels.
    pub power_points: usize,
}

impl Grid {
    pub fn new(tau_points: usize, power_points: usize) -> Self {
        Self {
            tau_points,
            power_points,
        }
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self::new(2000, 100)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub value: f64,
    pub bs_power: f64,
    pub eh_fraction: f64,
}

/// Best `f(t)` over `t_i = lo + (hi − lo)·i/(n+1)`, `i = 1..=n`, refined
/// by one parabolic step through the best point and its neighbours. The
/// refined point is evaluated, never extrapolated.
fn refined_line_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / (n + 1) as f64;
    let at = |i: usize| lo + h * i as f64;
    let (mut best_i, mut best) = (1, f(at(1)));
    for i in 2..=n {
        let v = f(at(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut best_t = at(best_i);
    if best_i > 1 && best_i < n {
        let (fm, fp) = (f(at(best_i - 1)), f(at(best_i + 1)));
        let curvature = fp - 2.0 * best + fm;
        if curvature < 0.0 {
            let t = best_t - 0.5 * h * (fp - fm) / curvature;
            let t = t.clamp(at(best_i - 1), at(best_i + 1));
            let v = f(t);
            if v > best {
                best = v;
                best_t = t;
            }
        }
    }
    (best_t, best)
}

fn grid_search(objective: impl Fn(f64, f64) -> f64 + Sync, max_power: f64, grid: Grid) -> GridOptimum {
    let levels = (1..=grid.power_points)
        .into_par_iter()
        .map(|k| {
            let p = max_power * k as f64 / grid.power_points as f64;
            let (t, v) = refined_line_max(|t| objective(p, t), 0.0, 1.0, grid.tau_points);
            GridOptimum {
                value: v,
                bs_power: p,
                eh_fraction: t,
            }
        })
        .collect::<Vec<_>>();
    // p = 0 first; strict improvement required, so ties resolve downward.
    levels.into_iter().fold(
        GridOptimum {
            value: 0.0,
            bs_power: 0.0,
            eh_fraction: 0.0,
        },
        |best, cand| if cand.value > best.value { cand } else { best },
    )
}

/// Grid maximum of `(1−τ0)·ln(1 + b·p·τ0/(1−τ0)) − λ·p·τ0`.
pub fn grid_max_dual_multiuser(
    state: &EpochChannelState,
    lambda: MultiuserDual,
    cfg: &NetworkConfig,
    grid: Grid,
) -> GridOptimum {
    let b = state.aux_sum();
    grid_search(
        |p, t| {
            let s = 1.0 - t;
            s * (1.0 + b * p * t / s).ln() - lambda.0 * p * t
        },
        cfg.max_power,
        grid,
    )
}

/// Grid maximum of `(1−τ0)·ln(1 + x·max(P_S, 0)) − λ·N0·p·τ0` with
/// `P_S = N0·p·x·τ0/(1−τ0) − p_c`.
pub fn grid_max_dual_point_to_point(x: f64, lambda: PointToPointDual, cfg: &NetworkConfig, grid: Grid) -> GridOptimum {
    let (n0, pc) = (cfg.noise_power, cfg.processing_cost);
    grid_search(
        |p, t| {
            let s = 1.0 - t;
            let harvested = n0 * p * x * t / s;
            let rate = if harvested > pc {
                s * (1.0 + x * (harvested - pc)).ln()
            } else {
                0.0
            };
            rate - lambda.0 * n0 * p * t
        },
        cfg.max_power,
        grid,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptimum {
    pub shares: [f64; 2],
    pub value: f64,
}

/// Best two-node slot split for broadcast energy `e = p·τ0`:
/// maximizes `Σ τ_j·ln(1 + a_j·e/τ_j)` over `τ_1 + τ_2 = 1 − τ0`.
pub fn grid_time_split(state: &EpochChannelState, energy: f64, tau0: f64, grid_n: usize) -> Result<SplitOptimum> {
    let [a1, a2] = match state.aux_coeffs() {
        [a1, a2] => [*a1, *a2],
        a => {
            return Err(Error::InvalidArgument(format!(
                "time-split search needs two nodes, got {}",
                a.len()
            )))
        }
    };
    let total = 1.0 - tau0;
    let value = |t1: f64| {
        let t2 = total - t1;
        t1 * (1.0 + a1 * energy / t1).ln() + t2 * (1.0 + a2 * energy / t2).ln()
    };
    let (t1, v) = refined_line_max(value, 0.0, total, grid_n);
    Ok(SplitOptimum {
        shares: [t1, total - t1],
        value: v,
    })
}

/// Price multipliers of the standard validation protocol, applied to an
/// allocator's `lambda_scale`: from free power through mostly idle.
pub const PRICE_MULTIPLIERS: [f64; 5] = [0.0, 0.25, 1.0, 4.0, 16.0];

pub fn price_ladder(scale: f64) -> Vec<f64> {
    PRICE_MULTIPLIERS.iter().map(|m| m * scale).collect()
}

/// One closed-form vs grid comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCheck {
    pub epoch: usize,
    pub lambda: f64,
    pub analytic_value: f64,
    pub analytic_power: f64,
    pub oracle: GridOptimum,
    /// Activation window verdict; point-to-point checks only.
    pub in_window: Option<bool>,
}

impl DualCheck {
    pub fn value_ok(&self) -> bool {
        self.analytic_value >= self.oracle.value - DUAL_TOLERANCE
    }

    pub fn oracle_at_endpoint(&self, max_power: f64) -> bool {
        self.oracle.bs_power == 0.0 || self.oracle.bs_power == max_power
    }

    pub fn window_agrees(&self) -> bool {
        self.in_window.is_none_or(|w| w == (self.oracle.bs_power > 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub checks: Vec<DualCheck>,
    pub max_power: f64,
}

impl ValidationSummary {
    pub fn value_failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.value_ok()).count()
    }

    pub fn interior_argmax(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| !c.oracle_at_endpoint(self.max_power))
            .count()
    }

    pub fn window_disagreements(&self) -> usize {
        self.checks.iter().filter(|c| !c.window_agrees()).count()
    }

    /// Largest `oracle − analytic` over all checks.
    pub fn worst_gap(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.oracle.value - c.analytic_value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.value_failures() == 0 && self.interior_argmax() == 0 && self.window_disagreements() == 0
    }
}

/// Multi-node closed form against the grid, for every epoch and price.
pub fn validate_multiuser(
    trace: &ChannelTrace,
    lambdas: &[f64],
    cfg: &NetworkConfig,
    grid: Grid,
) -> Result<ValidationSummary> {
    let mut checks = Vec::with_capacity(trace.len() * lambdas.len());
    for (i, state) in trace.epochs().iter().enumerate() {
        for &l in lambdas {
            let lambda = MultiuserDual(l);
            let alloc = multiuser::allocate_epoch(state, lambda, cfg).map_err(|e| e.at_epoch(i))?;
            checks.push(DualCheck {
                epoch: i,
                lambda: l,
                analytic_value: multiuser::dual_objective(state.aux_sum(), alloc.bs_power, alloc.eh_fraction, lambda),
                analytic_power: alloc.bs_power,
                oracle: grid_max_dual_multiuser(state, lambda, cfg, grid),
                in_window: None,
            });
        }
    }
    Ok(ValidationSummary {
        checks,
        max_power: cfg.max_power,
    })
}

/// Point-to-point allocation under `rule` against the grid. Window
/// verdicts are recorded for every check regardless of `rule`.
pub fn validate_point_to_point(
    trace: &ChannelTrace,
    lambdas: &[f64],
    cfg: &NetworkConfig,
    grid: Grid,
    rule: ActivationRule,
) -> Result<ValidationSummary> {
    let mut checks = Vec::with_capacity(trace.len() * lambdas.len());
    for (i, state) in trace.epochs().iter().enumerate() {
        let x = match state.normalized_gains() {
            [x] => *x,
            g => {
                return Err(
                    Error::InvalidArgument(format!("point-to-point check needs one node, got {}", g.len())).at_epoch(i),
                )
            }
        };
        for &l in lambdas {
            let lambda = PointToPointDual(l);
            let alloc = point_to_point::allocate_epoch_with(x, lambda, cfg, rule).map_err(|e| e.at_epoch(i))?;
            checks.push(DualCheck {
                epoch: i,
                lambda: l,
                analytic_value: point_to_point::dual_objective(
                    x,
                    alloc.bs_power,
                    alloc.eh_fraction,
                    lambda,
                    cfg.processing_cost,
                    cfg.noise_power,
                ),
                analytic_power: alloc.bs_power,
                oracle: grid_max_dual_point_to_point(x, lambda, cfg, grid),
                in_window: Some(point_to_point::in_window(x, lambda, cfg.processing_cost)),
            });
        }
    }
    Ok(ValidationSummary {
        checks,
        max_power: cfg.max_power,
    })
}
