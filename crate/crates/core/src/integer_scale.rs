//! Integer group scales: amplifier search, integerization, and the scale
//! distribution analyses used to pick an amplifier.
//!
//! A float group scale `s` becomes `max(1, round(s * alpha))` for a global
//! power-of-two amplifier `alpha`. The GEMM then accumulates
//! `partial * int_scale` in integers and divides by `alpha` once, after the
//! single conversion to float.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::{quantize, BitWidth, Granularity, QuantizedTensor, Scheme};
use crate::tensor_io::FloatTensor;

/// Power-of-two scale amplifier, `2^exponent` with `exponent <= 31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Amplifier {
    exponent: u32,
}

impl Amplifier {
    pub const MAX_EXPONENT: u32 = 31;
    pub const DEFAULT_EXPONENT: u32 = 10;

    pub fn from_exponent(exponent: u32) -> Result<Self> {
        if exponent > Self::MAX_EXPONENT {
            return Err(Error::Parameter(format!(
                "amplifier exponent {exponent} exceeds {}",
                Self::MAX_EXPONENT
            )));
        }
        Ok(Self { exponent })
    }

    pub fn new(value: u64) -> Result<Self> {
        if !value.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "amplifier must be a power of two >= 1, got {value}"
            )));
        }
        Self::from_exponent(value.trailing_zeros())
    }

    #[inline]
    pub fn exponent(self) -> u32 {
        self.exponent
    }

    #[inline]
    pub fn value(self) -> u64 {
        1u64 << self.exponent
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }
}

impl Default for Amplifier {
    fn default() -> Self {
        Self {
            exponent: Self::DEFAULT_EXPONENT,
        }
    }
}

impl TryFrom<u64> for Amplifier {
    type Error = Error;

    fn try_from(value: u64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Amplifier> for u64 {
    fn from(a: Amplifier) -> u64 {
        a.value()
    }
}

impl fmt::Display for Amplifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl FromStr for Amplifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value = s
            .parse::<u64>()
            .map_err(|_| Error::Parameter(format!("amplifier must be an integer, got {s:?}")))?;
        Self::new(value)
    }
}

/// The default amplifier, `2^10`.
pub fn default_amplifier() -> Amplifier {
    Amplifier::default()
}

/// How a layer's amplifier is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplifierChoice {
    /// Smallest power of two lifting every scale of the matrix to at least 1.
    Heuristic,
    Fixed(Amplifier),
}

impl Default for AmplifierChoice {
    fn default() -> Self {
        AmplifierChoice::Fixed(default_amplifier())
    }
}

impl AmplifierChoice {
    pub fn resolve(self, scales: &[f32]) -> Result<Amplifier> {
        match self {
            AmplifierChoice::Heuristic => search_amplifier(scales),
            AmplifierChoice::Fixed(a) => Ok(a),
        }
    }
}

impl FromStr for AmplifierChoice {
    type Err = Error;

    /// `heuristic`, `default`, or a power-of-two integer.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(AmplifierChoice::Heuristic),
            "default" => Ok(AmplifierChoice::default()),
            other => other.parse().map(AmplifierChoice::Fixed),
        }
    }
}

fn check_scales(scales: &[f32]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::Parameter("scale list is empty".into()));
    }
    if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::Parameter(format!(
            "scales must be positive and finite, got {s}"
        )));
    }
    Ok(())
}

/// Doubles from `2^0` until the smallest scale, amplified, reaches 1.
///
/// Scales that are already `>= 1` get an amplifier of 1. Fails when no
/// amplifier up to `2^31` suffices.
pub fn search_amplifier(scales: &[f32]) -> Result<Amplifier> {
    check_scales(scales)?;
    let scale_min = f64::from(scales.iter().copied().fold(f32::INFINITY, f32::min));
    let mut exponent = 0u32;
    let mut amplified = scale_min;
    while amplified < 1.0 {
        exponent += 1;
        if exponent > Amplifier::MAX_EXPONENT {
            return Err(Error::Parameter(format!(
                "minimum scale {scale_min:e} needs an amplifier above 2^{}",
                Amplifier::MAX_EXPONENT
            )));
        }
        amplified = scale_min * f64::from(exponent).exp2();
    }
    Amplifier::from_exponent(exponent)
}

/// Amplified integer scales sharing one power-of-two amplifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerScaleSet {
    int_scales: Vec<i32>,
    amplifier: Amplifier,
}

impl IntegerScaleSet {
    pub fn new(int_scales: Vec<i32>, amplifier: Amplifier) -> Result<Self> {
        if int_scales.is_empty() {
            return Err(Error::Parameter("integer scale set is empty".into()));
        }
        if let Some(s) = int_scales.iter().find(|s| **s < 1) {
            return Err(Error::Parameter(format!(
                "integer scales must be >= 1, got {s}"
            )));
        }
        Ok(Self {
            int_scales,
            amplifier,
        })
    }

    /// Integerizes the group scales of a quantized weight.
    pub fn for_weight(weight: &QuantizedTensor, choice: AmplifierChoice) -> Result<Self> {
        let scales = &weight.params().scales;
        integerize_scales(scales, choice.resolve(scales)?)
    }

    #[inline]
    pub fn int_scales(&self) -> &[i32] {
        &self.int_scales
    }

    #[inline]
    pub fn amplifier(&self) -> Amplifier {
        self.amplifier
    }

    pub fn len(&self) -> usize {
        self.int_scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.int_scales.is_empty()
    }

    /// Smallest and largest integer scale.
    pub fn range(&self) -> (i32, i32) {
        let min = *self.int_scales.iter().min().expect("non-empty");
        let max = *self.int_scales.iter().max().expect("non-empty");
        (min, max)
    }

    /// Scale actually applied by the integer path, `int_scale / alpha`.
    #[inline]
    pub fn effective_scale(&self, unit: usize) -> f64 {
        f64::from(self.int_scales[unit]) / self.amplifier.as_f64()
    }
}

/// `max(1, round(s * alpha))` per scale, rounding ties away from zero.
pub fn integerize_scales(scales: &[f32], amplifier: Amplifier) -> Result<IntegerScaleSet> {
    check_scales(scales)?;
    let alpha = amplifier.as_f64();
    let int_scales = scales
        .iter()
        .map(|&s| {
            // exact: multiplying by a power of two
            let amplified = (f64::from(s) * alpha).round();
            if amplified > f64::from(i32::MAX) {
                return Err(Error::ScaleOverflow {
                    scale: s,
                    amplifier: amplifier.value(),
                });
            }
            Ok((amplified as i32).max(1))
        })
        .collect::<Result<Vec<_>>>()?;
    IntegerScaleSet::new(int_scales, amplifier)
}

/// Reconstruction `q * int_scale / alpha` of a symmetric quantized tensor.
pub fn dequantize_integer_scale(q: &QuantizedTensor, set: &IntegerScaleSet) -> Result<FloatTensor> {
    check_set_matches(q, set)?;
    let mut data = Vec::with_capacity(q.values().len());
    for r in 0..q.rows() {
        for c in 0..q.cols() {
            let level = f64::from(q.value(r, c)) - f64::from(q.zero_point_at(r, c));
            data.push((level * set.effective_scale(q.unit_of(r, c))) as f32);
        }
    }
    FloatTensor::new(q.rows(), q.cols(), data)
}

fn check_set_matches(q: &QuantizedTensor, set: &IntegerScaleSet) -> Result<()> {
    if set.len() != q.params().scales.len() {
        return Err(Error::Parameter(format!(
            "{} integer scales for {} quantization units",
            set.len(),
            q.params().scales.len()
        )));
    }
    Ok(())
}

/// Sum of squared differences between integer-scale and float-scale
/// reconstructions, evaluated in `f64` from the integer levels.
pub(crate) fn squared_error_vs_float(q: &QuantizedTensor, set: &IntegerScaleSet) -> Result<f64> {
    check_set_matches(q, set)?;
    let mut sum = 0.0;
    for r in 0..q.rows() {
        for c in 0..q.cols() {
            let unit = q.unit_of(r, c);
            let level = f64::from(q.value(r, c)) - f64::from(q.zero_point_at(r, c));
            let d = level * (set.effective_scale(unit) - f64::from(q.params().scales[unit]));
            sum += d * d;
        }
    }
    Ok(sum)
}

/// Squared error of the integer-scale reconstruction against original values.
pub(crate) fn squared_error_vs_original(
    original: &FloatTensor,
    q: &QuantizedTensor,
    set: &IntegerScaleSet,
) -> Result<f64> {
    check_set_matches(q, set)?;
    let mut sum = 0.0;
    for r in 0..q.rows() {
        for c in 0..q.cols() {
            let level = f64::from(q.value(r, c)) - f64::from(q.zero_point_at(r, c));
            let d = f64::from(original.get(r, c)) - level * set.effective_scale(q.unit_of(r, c));
            sum += d * d;
        }
    }
    Ok(sum)
}

/// Scale statistics over a list of weight matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleAnalysis {
    /// Heuristic amplifier exponent -> number of matrices needing it.
    pub bit_shift_histogram: BTreeMap<u32, usize>,
    /// `(min, max)` integer scale at the default amplifier `2^10`.
    pub amplified_range: (i32, i32),
    /// Amplifier -> MSE between integer-scale and float-scale reconstructions.
    pub mse_by_amplifier: BTreeMap<u64, f64>,
}

impl ScaleAnalysis {
    /// Bits needed to store the largest amplified scale as an unsigned integer.
    pub fn amplified_bits(&self) -> u32 {
        u32::BITS - (self.amplified_range.1 as u32).leading_zeros()
    }
}

pub fn analyze_scales(
    weights: &[FloatTensor],
    bit_width: BitWidth,
    group_size: usize,
    amplifiers: &[Amplifier],
) -> Result<ScaleAnalysis> {
    if weights.is_empty() {
        return Err(Error::Parameter("no weight matrices to analyze".into()));
    }
    let quantized = weights
        .iter()
        .map(|w| {
            quantize(
                w,
                bit_width,
                Scheme::Symmetric,
                Granularity::group(group_size),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut bit_shift_histogram = BTreeMap::new();
    let mut range = (i32::MAX, i32::MIN);
    for q in &quantized {
        let scales = &q.params().scales;
        let exponent = search_amplifier(scales)?.exponent();
        *bit_shift_histogram.entry(exponent).or_insert(0) += 1;
        let (lo, hi) = integerize_scales(scales, default_amplifier())?.range();
        range = (range.0.min(lo), range.1.max(hi));
    }

    let total: usize = quantized.iter().map(|q| q.values().len()).sum();
    let mut mse_by_amplifier = BTreeMap::new();
    for &amp in amplifiers {
        let mut sum = 0.0;
        for q in &quantized {
            sum += squared_error_vs_float(q, &integerize_scales(&q.params().scales, amp)?)?;
        }
        mse_by_amplifier.insert(amp.value(), sum / total as f64);
    }

    Ok(ScaleAnalysis {
        bit_shift_histogram,
        amplified_range: range,
        mse_by_amplifier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_io::{generate_synthetic, Distribution};
    use proptest::prelude::*;

    fn amp(v: u64) -> Amplifier {
        Amplifier::new(v).unwrap()
    }

    #[test]
    fn search_traces() {
        assert_eq!(search_amplifier(&[0.9, 0.3, 2.0]).unwrap(), amp(4));
        assert_eq!(search_amplifier(&[0.5]).unwrap(), amp(2));
        assert_eq!(search_amplifier(&[1.5, 3.0]).unwrap(), amp(1));
        assert_eq!(search_amplifier(&[1.0]).unwrap(), amp(1));
        assert_eq!(
            search_amplifier(&[(-10f32).exp2(), 0.01]).unwrap(),
            amp(1024)
        );
    }

    #[test]
    fn search_rejects_bad_scales() {
        assert!(search_amplifier(&[]).is_err());
        assert!(search_amplifier(&[0.5, 0.0]).is_err());
        assert!(search_amplifier(&[-1.0]).is_err());
        assert!(search_amplifier(&[(-40f32).exp2()]).is_err());
    }

    #[test]
    fn integerize_examples() {
        assert_eq!(
            integerize_scales(&[0.25, 0.125], amp(8))
                .unwrap()
                .int_scales(),
            &[2, 1]
        );
        assert_eq!(
            integerize_scales(&[0.3], amp(4)).unwrap().int_scales(),
            &[1]
        );
        assert_eq!(
            integerize_scales(&[1.0], amp(1024)).unwrap().int_scales(),
            &[1024]
        );
        // 0.001 * 128 = 0.128 rounds to 0 and is floored to 1
        assert_eq!(
            integerize_scales(&[0.001], amp(128)).unwrap().int_scales(),
            &[1]
        );
        // 0.375 * 4 = 1.5 is a tie and rounds up
        assert_eq!(
            integerize_scales(&[0.375], amp(4)).unwrap().int_scales(),
            &[2]
        );
    }

    #[test]
    fn integerize_overflow() {
        let err = integerize_scales(&[4.0], amp(1 << 30)).unwrap_err();
        assert!(matches!(err, Error::ScaleOverflow { .. }));
    }

    #[test]
    fn zero_int_scales_rejected() {
        assert!(matches!(
            IntegerScaleSet::new(vec![0, 0], default_amplifier()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn default_and_overrides() {
        assert_eq!(default_amplifier().value(), 1024);
        assert_eq!(
            AmplifierChoice::default().resolve(&[0.5]).unwrap().value(),
            1024
        );
        let fixed: AmplifierChoice = "8192".parse().unwrap();
        assert_eq!(fixed.resolve(&[0.5]).unwrap().value(), 8192);
        let fixed: AmplifierChoice = "4096".parse().unwrap();
        assert_eq!(fixed.resolve(&[0.5]).unwrap().value(), 4096);
        assert_eq!(
            "heuristic".parse::<AmplifierChoice>().unwrap(),
            AmplifierChoice::Heuristic
        );
        assert!("1000".parse::<AmplifierChoice>().is_err());
        assert!("0".parse::<Amplifier>().is_err());
    }

    #[test]
    fn amplified_range_fits_eight_bits() {
        // scales spread over [2^-10, 2^-6]
        let scales: Vec<f32> = (0..=40).map(|i| (-10.0 + 0.1 * i as f32).exp2()).collect();
        let set = integerize_scales(&scales, default_amplifier()).unwrap();
        let (lo, hi) = set.range();
        assert!(lo >= 1 && hi <= 16);
    }

    #[test]
    fn analysis_on_llama_like() {
        let weights: Vec<_> = (0..3)
            .map(|seed| generate_synthetic(256, 64, Distribution::LlamaLike, seed).unwrap())
            .collect();
        let amps = [128, 512, 1024, 4096].map(amp);
        let a = analyze_scales(&weights, BitWidth::Four, 128, &amps).unwrap();
        assert_eq!(a.bit_shift_histogram.values().sum::<usize>(), 3);
        assert_eq!(a.bit_shift_histogram.get(&10), Some(&3));
        assert!(a.amplified_range.0 >= 1 && a.amplified_range.1 <= 16);
        assert!(a.amplified_bits() <= 8);
        let mse = |v| a.mse_by_amplifier[&v];
        assert!(mse(4096) <= mse(1024));
        assert!(mse(1024) <= mse(512));
        assert!(mse(1024) < mse(128));
    }

    #[test]
    fn analysis_rejects_empty_list() {
        assert!(matches!(
            analyze_scales(&[], BitWidth::Four, 128, &[default_amplifier()]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn analysis_json_keys() {
        let w = generate_synthetic(128, 4, Distribution::LlamaLike, 1).unwrap();
        let a = analyze_scales(&[w], BitWidth::Four, 128, &[amp(1024)]).unwrap();
        let json = serde_json::to_value(&a).unwrap();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            ["bit_shift_histogram", "amplified_range", "mse_by_amplifier"]
        );
    }

    proptest! {
        #[test]
        fn search_is_minimal(scales in prop::collection::vec(1e-9f32..16.0, 1..32)) {
            let a = search_amplifier(&scales).unwrap();
            let min = f64::from(scales.iter().copied().fold(f32::INFINITY, f32::min));
            prop_assert!(min * a.as_f64() >= 1.0);
            prop_assert!(a.value() == 1 || min * a.as_f64() / 2.0 < 1.0);
        }

        #[test]
        fn rounding_error_within_half_step(s in 1e-6f32..4.0, e in 0u32..20) {
            let a = Amplifier::from_exponent(e).unwrap();
            let set = integerize_scales(&[s], a).unwrap();
            if f64::from(s) * a.as_f64() >= 1.0 {
                let err = (set.effective_scale(0) - f64::from(s)).abs();
                prop_assert!(err <= 0.5 / a.as_f64());
            }
        }

        #[test]
        fn integerize_commutes_with_permutation(
            scales in prop::collection::vec(1e-4f32..2.0, 1..16),
            rot in 0usize..16,
        ) {
            let a = default_amplifier();
            let base = integerize_scales(&scales, a).unwrap();
            let mut rotated = scales.clone();
            rotated.rotate_left(rot % scales.len());
            let mut expected = base.int_scales().to_vec();
            expected.rotate_left(rot % scales.len());
            let permuted = integerize_scales(&rotated, a).unwrap();
            prop_assert_eq!(permuted.int_scales(), &expected[..]);
        }
    }
}
