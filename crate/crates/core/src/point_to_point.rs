//! Point-to-point harvest-then-transmit link with a fixed processing cost.
//!
//! A single node harvests `N0·p·x·τ0` and spends it during `1 − τ0` on its
//! radiated power `P_S` plus a fixed circuit power `p_c`:
//! `P_S = N0·p·x·τ0/(1−τ0) − p_c`. When that is not positive the node stays
//! silent. The rate is `(1−τ0)·ln(1 + P_S·x)`.
//!
//! At price `λ` (here the multiplier of the budget written as
//! `Σ (α + θ·p_c/x) ≤ N0·P_avg`, so `λ·N0` is the multi-node price) the
//! closed-form rule is:
//!
//! - broadcast `P_max` iff `x` lies in the activation window
//!   `(−λp_c/2 + sqrt((λp_c)²/4 + λ), 1/p_c)`;
//! - the harvest fraction is the root of
//!   `ln(A) + N0·λ·P_max − C/((1−τ0)·A)` where `C = N0·P_max·x²` and
//!   `A = 1 − x·p_c + C·τ0/(1−τ0)`.
//!
//! The window comes from the sign of the stationarity residual at `τ0 → 0`.
//! For `p_c > 0` it can disagree with the true maximizer of the block
//! Lagrangian: it ignores blocks with `x ≥ 1/p_c`, which still profit from a
//! longer harvest phase, and near its lower edge it can switch on blocks
//! whose best achievable Lagrangian is negative. [`ActivationRule::DualOptimal`]
//! decides activation by the sign of the block Lagrangian at the same
//! stationary point instead. With `p_c = 0` both rules coincide.

use crate::config::NetworkConfig;
use crate::error::Result;
use crate::multiuser::MultiuserDual;
use crate::root::{bisect, BRACKET_EPS};

/// Price of the point-to-point budget constraint. Not numerically
/// interchangeable with [`MultiuserDual`]; see [`Self::to_multiuser`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PointToPointDual(pub f64);

impl PointToPointDual {
    /// `λ_multiuser = N0·λ_p2p`.
    pub fn to_multiuser(self, noise_power: f64) -> MultiuserDual {
        MultiuserDual(noise_power * self.0)
    }

    pub fn from_multiuser(lambda: MultiuserDual, noise_power: f64) -> Self {
        Self(lambda.0 / noise_power)
    }
}

/// How [`allocate_epoch_with`] decides whether a block is served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationRule {
    /// Closed-form gain window.
    #[default]
    Window,
    /// Serve iff the block Lagrangian at its stationary harvest fraction is
    /// positive.
    DualOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2PAllocation {
    /// Base-station broadcast power (W).
    pub bs_power: f64,
    /// Harvest fraction τ0.
    pub eh_fraction: f64,
    /// Radiated power of the node, `P_S` (W), floored at 0.
    pub ehn_tx_power: f64,
    /// Rate (nats/symbol).
    pub rate: f64,
}

impl P2PAllocation {
    pub const IDLE: Self = Self {
        bs_power: 0.0,
        eh_fraction: 0.0,
        ehn_tx_power: 0.0,
        rate: 0.0,
    };

    /// Evaluates the link for a given broadcast power and harvest fraction.
    pub fn from_parts(x: f64, bs_power: f64, eh_fraction: f64, processing_cost: f64, noise_power: f64) -> Self {
        let ehn_tx_power = transmit_power(bs_power, x, eh_fraction, processing_cost, noise_power);
        Self {
            bs_power,
            eh_fraction,
            ehn_tx_power,
            rate: (1.0 - eh_fraction) * (ehn_tx_power * x).ln_1p(),
        }
    }

    pub fn is_active(&self) -> bool {
        self.bs_power > 0.0
    }

    pub fn delivered_energy(&self) -> f64 {
        self.bs_power * self.eh_fraction
    }
}

/// `(x_lo, x_hi)`: the block is served iff `x_lo < x < x_hi`. `x_hi` is
/// infinite without processing cost.
pub fn activation_window(lambda: PointToPointDual, processing_cost: f64) -> (f64, f64) {
    let half = 0.5 * lambda.0 * processing_cost;
    let lo = -half + (half * half + lambda.0).sqrt();
    let hi = if processing_cost > 0.0 {
        1.0 / processing_cost
    } else {
        f64::INFINITY
    };
    (lo, hi)
}

pub fn in_window(x: f64, lambda: PointToPointDual, processing_cost: f64) -> bool {
    let (lo, hi) = activation_window(lambda, processing_cost);
    x > lo && x < hi
}

/// Radiated power `P_S`, zero when the harvest does not cover the
/// processing cost.
pub fn transmit_power(bs_power: f64, x: f64, eh_fraction: f64, processing_cost: f64, noise_power: f64) -> f64 {
    if bs_power <= 0.0 || eh_fraction <= 0.0 {
        return 0.0;
    }
    let ps = noise_power * bs_power * x * eh_fraction / (1.0 - eh_fraction) - processing_cost;
    ps.max(0.0)
}

/// Stationarity residual of the harvest fraction with `p = P_max`. This is
/// the negated derivative of [`dual_objective`] wherever `P_S > 0`.
pub fn eh_residual(
    tau0: f64,
    x: f64,
    max_power: f64,
    noise_power: f64,
    lambda: PointToPointDual,
    processing_cost: f64,
) -> f64 {
    let c = noise_power * max_power * x * x;
    let base = 1.0 - x * processing_cost;
    let a = base + c * tau0 / (1.0 - tau0);
    a.ln() + noise_power * lambda.0 * max_power - c / ((1.0 - tau0) * base + c * tau0)
}

/// Harvest fraction of a block inside the activation window.
pub fn solve_eh_duration(
    x: f64,
    max_power: f64,
    noise_power: f64,
    lambda: PointToPointDual,
    processing_cost: f64,
    root_tol: f64,
) -> Result<f64> {
    solve_on(
        BRACKET_EPS,
        x,
        max_power,
        noise_power,
        lambda,
        processing_cost,
        root_tol,
    )
}

fn solve_on(
    lo: f64,
    x: f64,
    max_power: f64,
    noise_power: f64,
    lambda: PointToPointDual,
    processing_cost: f64,
    root_tol: f64,
) -> Result<f64> {
    bisect(
        |t| eh_residual(t, x, max_power, noise_power, lambda, processing_cost),
        lo,
        1.0 - BRACKET_EPS,
        root_tol,
    )
}

/// Block Lagrangian `(1−τ0)·ln(1 + x·P_S) − λ·N0·p·τ0`, with the silent
/// branch when `P_S ≤ 0`. Broadcast energy is charged either way.
pub fn dual_objective(
    x: f64,
    bs_power: f64,
    tau0: f64,
    lambda: PointToPointDual,
    processing_cost: f64,
    noise_power: f64,
) -> f64 {
    let ps = transmit_power(bs_power, x, tau0, processing_cost, noise_power);
    (1.0 - tau0) * (x * ps).ln_1p() - lambda.0 * noise_power * bs_power * tau0
}

/// Closed-form allocation of one block at price `λ`.
pub fn allocate_epoch(x: f64, lambda: PointToPointDual, cfg: &NetworkConfig) -> Result<P2PAllocation> {
    allocate_epoch_with(x, lambda, cfg, ActivationRule::Window)
}

pub fn allocate_epoch_with(
    x: f64,
    lambda: PointToPointDual,
    cfg: &NetworkConfig,
    rule: ActivationRule,
) -> Result<P2PAllocation> {
    let (p, pc, n0) = (cfg.max_power, cfg.processing_cost, cfg.noise_power);
    match rule {
        ActivationRule::Window => {
            if !in_window(x, lambda, pc) {
                return Ok(P2PAllocation::IDLE);
            }
            let tau0 = solve_eh_duration(x, p, n0, lambda, pc, cfg.root_tol)?;
            Ok(P2PAllocation::from_parts(x, p, tau0, pc, n0))
        }
        ActivationRule::DualOptimal => {
            // Below this harvest fraction the node cannot cover p_c.
            let tau_min = (pc / (pc + n0 * p * x)).max(BRACKET_EPS);
            if eh_residual(tau_min, x, p, n0, lambda, pc) >= 0.0 {
                return Ok(P2PAllocation::IDLE);
            }
            let tau0 = solve_on(tau_min, x, p, n0, lambda, pc, cfg.root_tol)?;
            if dual_objective(x, p, tau0, lambda, pc, n0) > 0.0 {
                Ok(P2PAllocation::from_parts(x, p, tau0, pc, n0))
            } else {
                Ok(P2PAllocation::IDLE)
            }
        }
    }
}
