//! Reference schemes that broadcast a constant `P_avg` in every block.
//!
//! The fixed-power benchmark keeps the optimal harvest fraction and
//! proportional slots for that power: it is the multi-node block solution
//! at zero price with `P_max` replaced by `P_avg`. Its delivered power is
//! `P_avg·E[τ0] ≤ P_avg`. The equal-share floor splits every block into
//! `K + 1` equal slots.

use crate::calibration::{BlockOutcome, EpochAllocator};
use crate::channel::{ChannelTrace, EpochChannelState};
use crate::config::NetworkConfig;
use crate::error::Result;
use crate::multiuser::{self, EpochAllocation, MultiuserDual};

pub fn benchmark_fixed_power_epoch(
    state: &EpochChannelState,
    avg_power: f64,
    cfg: &NetworkConfig,
) -> Result<EpochAllocation> {
    let (a, b) = multiuser::epoch_coefficients(state);
    let tau0 = multiuser::solve_eh_duration(b, avg_power, MultiuserDual(0.0), cfg.root_tol)?;
    Ok(EpochAllocation::from_parts(
        state,
        avg_power,
        tau0,
        multiuser::time_shares(&a, b, tau0),
    ))
}

pub fn equal_share_epoch(state: &EpochChannelState, avg_power: f64) -> EpochAllocation {
    let share = 1.0 / (state.num_nodes() + 1) as f64;
    EpochAllocation::from_parts(state, avg_power, share, vec![share; state.num_nodes()])
}

fn outcome(alloc: EpochAllocation) -> BlockOutcome {
    BlockOutcome {
        bs_power: alloc.bs_power,
        eh_fraction: alloc.eh_fraction,
        simplex_error: alloc.simplex_error(),
        node_rates: alloc.node_rates,
    }
}

/// Fixed-power benchmark as an [`EpochAllocator`]. The price is ignored.
#[derive(Debug, Clone, Copy)]
pub struct FixedPower<'a> {
    pub cfg: &'a NetworkConfig,
}

impl EpochAllocator for FixedPower<'_> {
    fn delivered_energy(&self, epoch: &EpochChannelState, _lambda: f64) -> Result<f64> {
        Ok(benchmark_fixed_power_epoch(epoch, self.cfg.avg_power, self.cfg)?.delivered_energy())
    }

    fn allocate(&self, epoch: &EpochChannelState, _lambda: f64) -> Result<BlockOutcome> {
        Ok(outcome(benchmark_fixed_power_epoch(
            epoch,
            self.cfg.avg_power,
            self.cfg,
        )?))
    }

    fn lambda_scale(&self, _trace: &ChannelTrace) -> f64 {
        0.0
    }
}

/// Equal-share floor as an [`EpochAllocator`]. The price is ignored.
#[derive(Debug, Clone, Copy)]
pub struct EqualShare<'a> {
    pub cfg: &'a NetworkConfig,
}

impl EpochAllocator for EqualShare<'_> {
    fn delivered_energy(&self, epoch: &EpochChannelState, _lambda: f64) -> Result<f64> {
        Ok(equal_share_epoch(epoch, self.cfg.avg_power).delivered_energy())
    }

    fn allocate(&self, epoch: &EpochChannelState, _lambda: f64) -> Result<BlockOutcome> {
        Ok(outcome(equal_share_epoch(epoch, self.cfg.avg_power)))
    }

    fn lambda_scale(&self, _trace: &ChannelTrace) -> f64 {
        0.0
    }
}
