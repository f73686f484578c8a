//! Per-block optimal allocation for K harvest-then-transmit nodes.
//!
//! With the price `λ` of the average-power budget fixed, each block is
//! solved independently:
//!
//! - broadcast power is `P_max` if `b > λ` and 0 otherwise;
//! - the harvest fraction `τ0` is the root of
//!   `g(τ0) = ln(1 + c·τ0/(1−τ0)) + λ·P_max − c/(1 − τ0 + c·τ0)` with
//!   `c = b·P_max`;
//! - the remaining time is split in proportion to `a_j`:
//!   `τ_j = (1 − τ0)·a_j / b`.
//!
//! `g` is the negated derivative of the concave block objective
//! `(1−τ0)·ln(1 + c·τ0/(1−τ0)) − λ·P_max·τ0`, so it is increasing, starts
//! at `P_max·(λ − b) < 0` and diverges to `+∞` as `τ0 → 1`. Active blocks
//! therefore always have exactly one root in (0, 1).

use crate::channel::EpochChannelState;
use crate::config::NetworkConfig;
use crate::error::Result;
use crate::root::{bisect, BRACKET_EPS};

/// Price of the average-power constraint in the multi-node problem.
/// Compared directly against `b` (units of 1/W).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MultiuserDual(pub f64);

/// Allocation of one fading block.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochAllocation {
    /// Base-station broadcast power (W).
    pub bs_power: f64,
    /// Harvest fraction τ0.
    pub eh_fraction: f64,
    /// Transmission fractions τ_1..τ_K.
    pub time_shares: Vec<f64>,
    /// Node transmit powers (W).
    pub node_tx_powers: Vec<f64>,
    /// Node rates (nats/symbol).
    pub node_rates: Vec<f64>,
}

impl EpochAllocation {
    /// Nothing broadcast, nothing sent. Shares are the proportional split
    /// of the whole block so the simplex still sums to one.
    pub fn idle(state: &EpochChannelState) -> Self {
        let k = state.num_nodes();
        Self {
            bs_power: 0.0,
            eh_fraction: 0.0,
            time_shares: time_shares(state.aux_coeffs(), state.aux_sum(), 0.0),
            node_tx_powers: vec![0.0; k],
            node_rates: vec![0.0; k],
        }
    }

    /// Builds the allocation for a given broadcast power, harvest fraction
    /// and slot lengths. Node powers and rates follow from the harvested
    /// energy being spent entirely in each node's slot.
    pub fn from_parts(state: &EpochChannelState, bs_power: f64, eh_fraction: f64, time_shares: Vec<f64>) -> Self {
        let n0 = state.noise_power();
        let (node_tx_powers, node_rates) = time_shares
            .iter()
            .zip(state.normalized_gains().iter().zip(state.uplink_gains()))
            .map(|(&tau, (&x, &y))| {
                if bs_power <= 0.0 || eh_fraction <= 0.0 || tau <= 0.0 {
                    return (0.0, 0.0);
                }
                let power = n0 * bs_power * x * eh_fraction / tau;
                (power, tau * (power * y).ln_1p())
            })
            .unzip();
        Self {
            bs_power,
            eh_fraction,
            time_shares,
            node_tx_powers,
            node_rates,
        }
    }

    pub fn is_active(&self) -> bool {
        self.bs_power > 0.0
    }

    /// Sum rate over nodes (nats/symbol).
    pub fn sum_rate(&self) -> f64 {
        self.node_rates.iter().sum()
    }

    /// Energy broadcast in this block per unit block length, `p·τ0`.
    pub fn delivered_energy(&self) -> f64 {
        self.bs_power * self.eh_fraction
    }

    /// `|τ0 + Σ τ_j − 1|`.
    pub fn simplex_error(&self) -> f64 {
        (self.eh_fraction + self.time_shares.iter().sum::<f64>() - 1.0).abs()
    }
}

/// `(a, b)` for one block.
pub fn epoch_coefficients(state: &EpochChannelState) -> (Vec<f64>, f64) {
    (state.aux_coeffs().to_vec(), state.aux_sum())
}

/// Bang-bang broadcast power. Ties `b = λ` go to 0.
pub fn power_decision(b: f64, lambda: MultiuserDual, max_power: f64) -> f64 {
    if b > lambda.0 {
        max_power
    } else {
        0.0
    }
}

/// Stationarity residual `g(τ0)` of the harvest fraction.
pub fn eh_residual(tau0: f64, b: f64, max_power: f64, lambda: MultiuserDual) -> f64 {
    let c = b * max_power;
    (c * tau0 / (1.0 - tau0)).ln_1p() + lambda.0 * max_power - c / (1.0 - tau0 + c * tau0)
}

/// Harvest fraction of an active block (`b > λ`).
pub fn solve_eh_duration(b: f64, max_power: f64, lambda: MultiuserDual, root_tol: f64) -> Result<f64> {
    bisect(
        |t| eh_residual(t, b, max_power, lambda),
        BRACKET_EPS,
        1.0 - BRACKET_EPS,
        root_tol,
    )
}

/// Slot lengths `τ_j = (1 − τ0)·a_j / b`.
pub fn time_shares(a: &[f64], b: f64, tau0: f64) -> Vec<f64> {
    // r − τ0·r rather than (1 − τ0)·r: skips rounding 1 − τ0 first.
    a.iter()
        .map(|aj| {
            let r = aj / b;
            r - tau0 * r
        })
        .collect()
}

/// Per-block Lagrangian with the shares already optimized:
/// `(1−τ0)·ln(1 + b·p·τ0/(1−τ0)) − λ·p·τ0`.
pub fn dual_objective(b: f64, bs_power: f64, tau0: f64, lambda: MultiuserDual) -> f64 {
    if tau0 <= 0.0 || bs_power <= 0.0 {
        return 0.0;
    }
    (1.0 - tau0) * (b * bs_power * tau0 / (1.0 - tau0)).ln_1p() - lambda.0 * bs_power * tau0
}

/// Optimal allocation of one block at price `λ`.
pub fn allocate_epoch(
    state: &EpochChannelState,
    lambda: MultiuserDual,
    cfg: &NetworkConfig,
) -> Result<EpochAllocation> {
    let (a, b) = epoch_coefficients(state);
    let p = power_decision(b, lambda, cfg.max_power);
    if p == 0.0 {
        return Ok(EpochAllocation::idle(state));
    }
    let tau0 = solve_eh_duration(b, p, lambda, cfg.root_tol)?;
    Ok(EpochAllocation::from_parts(state, p, tau0, time_shares(&a, b, tau0)))
}
