// Licensed under the Apache-2.0 license

//! Cycle-cost model for the bootstrap.
//!
//! The first frame costs more than the rest because the boot path erases
//! and reflashes its region after verification; every later frame pays a
//! uniform per-frame cost. Totals are `first + (n-1) * per_frame` for the
//! plain and the secured boot columns, and the boot-time overhead is the
//! cycle difference converted through the core clock.

/// Cycle cost of one HMAC-SHA256 block on the software implementation of
/// the crypto core, usable as a calibration constant.
pub const HMAC_CYCLES_SOFTWARE: u64 = 47_033;

/// Cycle cost of one HMAC-SHA256 block on the hardware crypto core.
pub const HMAC_CYCLES_HARDWARE: u64 = 2_926;

/// Per-frame cycle costs with and without the verification/recovery
/// machinery, and the core frequency used to convert cycles to time.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CycleCosts {
    pub first_frame_without: u64,
    pub first_frame_with: u64,
    pub per_frame_without: u64,
    pub per_frame_with: u64,
    /// Extra cycles per recovered frame; not part of the reference
    /// measurements, so it defaults to zero.
    pub recovery_per_frame: u64,
    pub frequency_hz: u64,
}

impl CycleCosts {
    /// Reference measurements from the 100 MHz FPGA prototype. The
    /// per-frame values are the exact per-frame quotients of the measured
    /// five-frame remainder (103330/5 and 133790/5).
    pub const fn reference() -> Self {
        Self {
            first_frame_without: 553_611,
            first_frame_with: 576_083,
            per_frame_without: 20_666,
            per_frame_with: 26_758,
            recovery_per_frame: 0,
            frequency_hz: 100_000_000,
        }
    }

    fn assert_valid(&self, n_frames: u32) {
        assert!(n_frames >= 1, "at least one frame required");
        assert!(self.first_frame_with >= self.first_frame_without);
        assert!(self.per_frame_with >= self.per_frame_without);
        assert!(self.frequency_hz > 0);
    }
}

/// Boot-time accounting for a given frame count.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TimingReport {
    pub n_frames: u32,
    pub frequency_hz: u64,
    pub total_cycles_without: u64,
    pub total_cycles_with: u64,
    /// Cycle increase caused by verification: `total_with - total_without`.
    pub t_delta_cycles: u64,
    /// The cycle increase expressed in seconds at `frequency_hz`.
    pub d_delta_seconds: f64,
    /// `total_with / total_without - 1`.
    pub overhead_fraction: f64,
}

/// Total bootstrap cycles for `n_frames`, secured or plain column.
pub fn total_cycles(costs: &CycleCosts, n_frames: u32, secure: bool) -> u64 {
    costs.assert_valid(n_frames);
    let (first, per) = if secure {
        (costs.first_frame_with, costs.per_frame_with)
    } else {
        (costs.first_frame_without, costs.per_frame_without)
    };
    first + u64::from(n_frames - 1) * per
}

/// Cycle increase of the secured boot over the plain boot.
pub fn t_delta(costs: &CycleCosts, n_frames: u32) -> u64 {
    costs.assert_valid(n_frames);
    (costs.first_frame_with - costs.first_frame_without)
        + u64::from(n_frames - 1) * (costs.per_frame_with - costs.per_frame_without)
}

/// Full report: totals, cycle delta, time delta, and overhead ratio.
pub fn report(costs: &CycleCosts, n_frames: u32) -> TimingReport {
    let total_without = total_cycles(costs, n_frames, false);
    let total_with = total_cycles(costs, n_frames, true);
    let delta = t_delta(costs, n_frames);
    TimingReport {
        n_frames,
        frequency_hz: costs.frequency_hz,
        total_cycles_without: total_without,
        total_cycles_with: total_with,
        t_delta_cycles: delta,
        d_delta_seconds: delta as f64 / costs.frequency_hz as f64,
        overhead_fraction: total_with as f64 / total_without as f64 - 1.0,
    }
}
