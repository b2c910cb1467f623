//! Static worst-case bounds for the integer-scaled accumulation.
//!
//! For a channel with group scales `int_scale_g`, the cross-group sum
//! `sum_g P_g * int_scale_g` is bounded by
//! `sum_g group_size * A_max * W_max * int_scale_g`, where `A_max` is the
//! largest activation level `2^(a-1) - 1` and `W_max = 2^(w-1)` the largest
//! weight magnitude. The bound also covers every running partial sum, so a
//! layer whose bound fits in `i32` can never overflow a 32-bit accumulator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::BitWidth;

pub const I32_LIMIT: i64 = i32::MAX as i64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverflowReport {
    /// Worst-case `|sum_g P_g * int_scale_g|` over all output channels.
    pub static_bound: i64,
    /// Largest accumulator magnitude observed during execution (0 before any run).
    pub observed_max: i64,
    /// `log2(2^31 - 1) - log2(observed_max)`; how many doublings the observed
    /// accumulators could take before leaving the 32-bit range.
    pub headroom_bits: f64,
    /// `static_bound <= 2^31 - 1`.
    pub safe: bool,
}

impl OverflowReport {
    pub(crate) fn new(static_bound: i64) -> Self {
        let mut report = Self {
            static_bound,
            observed_max: 0,
            headroom_bits: 0.0,
            safe: static_bound <= I32_LIMIT,
        };
        report.headroom_bits = headroom(0);
        report
    }

    /// Attaches an observed maximum. An observation above the static bound
    /// means the bound is unsound and is reported as an error.
    pub fn with_observed(mut self, observed_max: i64) -> Result<Self> {
        if observed_max > self.static_bound {
            return Err(Error::Value(format!(
                "observed accumulator {observed_max} exceeds static bound {}",
                self.static_bound
            )));
        }
        self.observed_max = observed_max;
        self.headroom_bits = headroom(observed_max);
        Ok(self)
    }
}

fn headroom(observed: i64) -> f64 {
    (I32_LIMIT as f64).log2() - (observed.max(1) as f64).log2()
}

/// Worst-case accumulator bound over channels, given one integer scale per
/// `(channel, group)` in channel-major order, with explicit level limits.
pub(crate) fn accumulator_bound(
    k: usize,
    group_size: usize,
    act_max: i64,
    weight_max: i64,
    int_scales: &[i32],
) -> Result<i64> {
    if group_size == 0 || k == 0 || !k.is_multiple_of(group_size) {
        return Err(Error::Parameter(format!(
            "group size {group_size} must be positive and divide K = {k}"
        )));
    }
    let groups = k / group_size;
    if int_scales.is_empty() || !int_scales.len().is_multiple_of(groups) {
        return Err(Error::Parameter(format!(
            "{} integer scales do not cover whole channels of {groups} groups",
            int_scales.len()
        )));
    }
    if let Some(s) = int_scales.iter().find(|s| **s < 1) {
        return Err(Error::Parameter(format!(
            "integer scales must be >= 1, got {s}"
        )));
    }
    let term = (group_size as i64)
        .saturating_mul(act_max)
        .saturating_mul(weight_max);
    let bound = int_scales
        .chunks_exact(groups)
        .map(|channel| {
            channel.iter().fold(0i64, |acc, &s| {
                acc.saturating_add(term.saturating_mul(i64::from(s)))
            })
        })
        .max()
        .expect("at least one channel");
    Ok(bound)
}

/// Static overflow report for an integer-scale GEMM with reduction length
/// `k`. `int_scales` holds one entry per `(channel, group)`; a list of
/// `k / group_size` entries describes a single channel.
pub fn overflow_analyzer(
    k: usize,
    group_size: usize,
    act_bits: BitWidth,
    weight_bits: BitWidth,
    int_scales: &[i32],
) -> Result<OverflowReport> {
    let act_max = i64::from(act_bits.symmetric_qmax());
    let weight_max = i64::from(weight_bits.symmetric_qmax()) + 1;
    accumulator_bound(k, group_size, act_max, weight_max, int_scales).map(OverflowReport::new)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_group_unit_scale() {
        let r = overflow_analyzer(128, 128, BitWidth::Eight, BitWidth::Four, &[1]).unwrap();
        assert_eq!(r.static_bound, 128 * 127 * 8);
        assert_eq!(r.static_bound, 130_048);
        assert!(r.safe);
    }

    #[test]
    fn full_width_default_amplifier_is_unsafe() {
        let scales = vec![1024; 32];
        let r = overflow_analyzer(4096, 128, BitWidth::Eight, BitWidth::Four, &scales).unwrap();
        assert_eq!(r.static_bound, 4096 * 127 * 8 * 1024);
        assert_eq!(r.static_bound, 4_261_412_864);
        assert!(!r.safe);
        assert!(r.headroom_bits > 30.9);
    }

    #[test]
    fn bound_takes_worst_channel() {
        // two channels of two groups each
        let r = overflow_analyzer(4, 2, BitWidth::Eight, BitWidth::Four, &[1, 1, 3, 5]).unwrap();
        assert_eq!(r.static_bound, 2 * 127 * 8 * 8);
    }

    #[test]
    fn zero_scales_rejected() {
        assert!(matches!(
            overflow_analyzer(128, 128, BitWidth::Eight, BitWidth::Four, &[0]),
            Err(Error::Parameter(_))
        ));
        assert!(overflow_analyzer(128, 3, BitWidth::Eight, BitWidth::Four, &[1]).is_err());
        assert!(overflow_analyzer(256, 128, BitWidth::Eight, BitWidth::Four, &[1, 1, 1]).is_err());
    }

    #[test]
    fn observed_cannot_exceed_bound() {
        let r = overflow_analyzer(128, 128, BitWidth::Eight, BitWidth::Four, &[1]).unwrap();
        let seen = r.with_observed(1000).unwrap();
        assert_eq!(seen.observed_max, 1000);
        assert!((seen.headroom_bits - ((I32_LIMIT as f64).log2() - 1000f64.log2())).abs() < 1e-12);
        assert!(r.with_observed(130_049).is_err());
    }
}
