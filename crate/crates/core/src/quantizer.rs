//! Uniform symmetric/asymmetric quantization at tensor, token, channel and
//! group granularity.
//!
//! Conventions:
//! - a tensor is `rows x cols`; activations are `M x K` (one token per row),
//!   weights are `K x N` (one output channel per column);
//! - `PerToken` gives one unit per row, `PerChannel` one per column, and
//!   `Group` splits every column into runs of `group_size` consecutive rows;
//! - group scales are laid out channel-major: unit `n * (K / g) + k / g`;
//! - rounding is to nearest, ties away from zero.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::{self, DType, FloatTensor, IntTensor, TensorPayload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum BitWidth {
    Four,
    Eight,
}

impl BitWidth {
    pub fn bits(self) -> u32 {
        match self {
            BitWidth::Four => 4,
            BitWidth::Eight => 8,
        }
    }

    /// Inclusive integer range for `scheme`.
    pub fn range(self, scheme: Scheme) -> (i32, i32) {
        let n = self.bits();
        match scheme {
            Scheme::Symmetric => (-(1 << (n - 1)), (1 << (n - 1)) - 1),
            Scheme::Asymmetric => (0, (1 << n) - 1),
        }
    }

    /// Largest positive level of the symmetric range, `2^(n-1) - 1`.
    pub fn symmetric_qmax(self) -> i32 {
        (1 << (self.bits() - 1)) - 1
    }

    fn file_dtype(self) -> DType {
        match self {
            BitWidth::Four => DType::PackedSigned4,
            BitWidth::Eight => DType::Signed8,
        }
    }
}

impl TryFrom<u8> for BitWidth {
    type Error = Error;

    fn try_from(bits: u8) -> Result<Self> {
        match bits {
            4 => Ok(BitWidth::Four),
            8 => Ok(BitWidth::Eight),
            other => Err(Error::Parameter(format!(
                "bit width must be 4 or 8, got {other}"
            ))),
        }
    }
}

impl From<BitWidth> for u8 {
    fn from(b: BitWidth) -> u8 {
        b.bits() as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Symmetric,
    Asymmetric,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" | "sym" => Ok(Scheme::Symmetric),
            "asymmetric" | "asym" => Ok(Scheme::Asymmetric),
            _ => Err(Error::Parameter(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Granularity {
    PerTensor,
    PerToken,
    PerChannel,
    Group { group_size: usize },
}

impl Granularity {
    pub const DEFAULT_GROUP: usize = 128;

    pub fn group(group_size: usize) -> Self {
        Granularity::Group { group_size }
    }

    pub fn validate(self, rows: usize, _cols: usize) -> Result<()> {
        if let Granularity::Group { group_size } = self {
            if group_size == 0 || !rows.is_multiple_of(group_size) {
                return Err(Error::Parameter(format!(
                    "group size {group_size} must be positive and divide the reduction dimension {rows}"
                )));
            }
        }
        Ok(())
    }

    pub fn unit_count(self, rows: usize, cols: usize) -> usize {
        match self {
            Granularity::PerTensor => 1,
            Granularity::PerToken => rows,
            Granularity::PerChannel => cols,
            Granularity::Group { group_size } => cols * (rows / group_size),
        }
    }

    #[inline]
    pub fn unit_index(self, rows: usize, row: usize, col: usize) -> usize {
        match self {
            Granularity::PerTensor => 0,
            Granularity::PerToken => row,
            Granularity::PerChannel => col,
            Granularity::Group { group_size } => col * (rows / group_size) + row / group_size,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Granularity::PerTensor => f.write_str("per-tensor"),
            Granularity::PerToken => f.write_str("per-token"),
            Granularity::PerChannel => f.write_str("per-channel"),
            Granularity::Group { group_size } => write!(f, "group:{group_size}"),
        }
    }
}

impl FromStr for Granularity {
    type Err = Error;

    /// `per-tensor`, `per-token`, `per-channel` or `group:<size>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "per-tensor" => Ok(Granularity::PerTensor),
            "per-token" => Ok(Granularity::PerToken),
            "per-channel" => Ok(Granularity::PerChannel),
            other => other
                .strip_prefix("group:")
                .and_then(|g| g.parse().ok())
                .map(Granularity::group)
                .ok_or_else(|| Error::Parameter(format!("unknown granularity {s:?}"))),
        }
    }
}

/// Scales and zero points for every quantization unit of a tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub bit_width: BitWidth,
    pub scheme: Scheme,
    pub granularity: Granularity,
    pub scales: Vec<f32>,
    /// Empty for symmetric quantization.
    pub zero_points: Vec<i32>,
}

/// Integer matrix together with the parameters that map it back to reals.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    rows: usize,
    cols: usize,
    values: Vec<i16>,
    params: QuantParams,
}

impl QuantizedTensor {
    /// Assembles a tensor from raw parts, checking every invariant.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        values: Vec<i16>,
        params: QuantParams,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} quantized tensor with {} values",
                values.len()
            )));
        }
        params.granularity.validate(rows, cols)?;
        let units = params.granularity.unit_count(rows, cols);
        if params.scales.len() != units {
            return Err(Error::Parameter(format!(
                "{} granularity needs {units} scales, got {}",
                params.granularity,
                params.scales.len()
            )));
        }
        if let Some(s) = params.scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Parameter(format!(
                "scales must be positive and finite, got {s}"
            )));
        }
        let (lo, hi) = params.bit_width.range(params.scheme);
        match params.scheme {
            Scheme::Symmetric if !params.zero_points.is_empty() => {
                return Err(Error::Parameter(
                    "symmetric quantization takes no zero points".into(),
                ))
            }
            Scheme::Asymmetric => {
                if params.zero_points.len() != units {
                    return Err(Error::Parameter(format!(
                        "asymmetric quantization needs {units} zero points, got {}",
                        params.zero_points.len()
                    )));
                }
                if let Some(z) = params.zero_points.iter().find(|z| !(lo..=hi).contains(*z)) {
                    return Err(Error::Parameter(format!(
                        "zero point {z} outside [{lo}, {hi}]"
                    )));
                }
            }
            Scheme::Symmetric => {}
        }
        if let Some(v) = values.iter().find(|v| !(lo..=hi).contains(&i32::from(**v))) {
            return Err(Error::Value(format!(
                "quantized value {v} outside [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            rows,
            cols,
            values,
            params,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn values(&self) -> &[i16] {
        &self.values
    }

    #[inline]
    pub fn params(&self) -> &QuantParams {
        &self.params
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> i16 {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn unit_of(&self, row: usize, col: usize) -> usize {
        self.params.granularity.unit_index(self.rows, row, col)
    }

    /// Scale that governs element `(row, col)`.
    #[inline]
    pub fn scale_at(&self, row: usize, col: usize) -> f32 {
        self.params.scales[self.unit_of(row, col)]
    }

    #[inline]
    pub fn zero_point_at(&self, row: usize, col: usize) -> i32 {
        match self.params.scheme {
            Scheme::Symmetric => 0,
            Scheme::Asymmetric => self.params.zero_points[self.unit_of(row, col)],
        }
    }

    /// Rows per scale along the reduction dimension, for weight layouts.
    /// Per-channel quantization is a single group spanning all rows.
    pub fn group_size(&self) -> Option<usize> {
        match self.params.granularity {
            Granularity::Group { group_size } => Some(group_size),
            Granularity::PerChannel => Some(self.rows),
            _ => None,
        }
    }

    fn file_values(&self) -> Vec<i8> {
        let offset = match self.params.scheme {
            Scheme::Symmetric => 0,
            Scheme::Asymmetric => 1 << (self.params.bit_width.bits() - 1),
        };
        self.values.iter().map(|&v| (v - offset) as i8).collect()
    }

    /// Writes the integer values to `path` as a `QTNS` file and the
    /// parameters to the JSON sidecar `<path>.json`.
    ///
    /// Asymmetric values are stored shifted down by `2^(n-1)` so they fit the
    /// signed payload types.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let payload = IntTensor::new(
            self.rows,
            self.cols,
            self.params.bit_width.file_dtype(),
            self.file_values(),
        )?;
        tensor_io::write_tensor(&TensorPayload::Int(payload), path)?;
        fs::write(sidecar_path(path), serde_json::to_vec_pretty(&self.params)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let ints = tensor_io::read_tensor(path)?.into_int()?;
        let params: QuantParams = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
        if ints.dtype != params.bit_width.file_dtype() {
            return Err(Error::Format(format!(
                "payload dtype {:?} does not match {}-bit params",
                ints.dtype,
                params.bit_width.bits()
            )));
        }
        let offset: i16 = match params.scheme {
            Scheme::Symmetric => 0,
            Scheme::Asymmetric => 1 << (params.bit_width.bits() - 1),
        };
        let values = ints.values.iter().map(|&v| i16::from(v) + offset).collect();
        Self::from_parts(ints.rows, ints.cols, values, params)
    }
}

/// Location of the parameter sidecar for a quantized values file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

#[inline]
fn round_half_away(x: f64) -> f64 {
    // f64::round rounds ties away from zero
    x.round()
}

/// `x / s` rounded and clamped into `[lo, hi]`, before adding any zero point.
#[inline]
fn quantize_value(x: f32, scale: f32, zero_point: i32, lo: i32, hi: i32) -> i16 {
    let q = round_half_away(f64::from(x) / f64::from(scale)) + f64::from(zero_point);
    q.clamp(f64::from(lo), f64::from(hi)) as i16
}

/// Symmetric scale `span / qmax`, rounded to `25 - n` significant bits so
/// that every level times the scale is an exact `f32`. Dequantization then
/// adds no rounding of its own, and re-quantizing a dequantized tensor
/// recovers the same scale and levels.
fn symmetric_scale(span: f32, bit_width: BitWidth) -> f32 {
    let qmax = f64::from(bit_width.symmetric_qmax());
    let significant = 25 - bit_width.bits();
    let exact = f64::from(span) / qmax;
    let dropped = f64::MANTISSA_DIGITS - significant;
    // round half up on the bit pattern; a carry moves into the exponent
    let bits = (exact.to_bits() + (1 << (dropped - 1))) & !((1u64 << dropped) - 1);
    let rounded = f64::from_bits(bits) as f32;
    if rounded.is_normal() && f64::from(rounded) == f64::from_bits(bits) {
        rounded
    } else {
        1.0
    }
}

pub fn quantize(
    x: &FloatTensor,
    bit_width: BitWidth,
    scheme: Scheme,
    granularity: Granularity,
) -> Result<QuantizedTensor> {
    let (rows, cols) = (x.rows(), x.cols());
    granularity.validate(rows, cols)?;
    let units = granularity.unit_count(rows, cols);

    let mut lo_seen = vec![0.0f32; units];
    let mut hi_seen = vec![0.0f32; units];
    for r in 0..rows {
        for c in 0..cols {
            let u = granularity.unit_index(rows, r, c);
            let v = x.get(r, c);
            lo_seen[u] = lo_seen[u].min(v);
            hi_seen[u] = hi_seen[u].max(v);
        }
    }

    let (qlo, qhi) = bit_width.range(scheme);
    let (scales, zero_points) = match scheme {
        Scheme::Symmetric => {
            let scales = lo_seen
                .iter()
                .zip(&hi_seen)
                .map(|(lo, hi)| symmetric_scale(lo.abs().max(*hi), bit_width))
                .collect();
            (scales, Vec::new())
        }
        Scheme::Asymmetric => {
            // Ranges always include zero so the zero point stays representable.
            let levels = qhi as f32;
            let scales: Vec<f32> = lo_seen
                .iter()
                .zip(&hi_seen)
                .map(|(lo, hi)| {
                    let s = (hi - lo) / levels;
                    if s.is_normal() && s > 0.0 {
                        s
                    } else {
                        1.0
                    }
                })
                .collect();
            let zero_points = lo_seen
                .iter()
                .zip(&scales)
                .map(|(lo, s)| {
                    (round_half_away(-f64::from(*lo) / f64::from(*s)) as i32).clamp(qlo, qhi)
                })
                .collect();
            (scales, zero_points)
        }
    };

    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let u = granularity.unit_index(rows, r, c);
            let z = zero_points.get(u).copied().unwrap_or(0);
            values.push(quantize_value(x.get(r, c), scales[u], z, qlo, qhi));
        }
    }

    Ok(QuantizedTensor {
        rows,
        cols,
        values,
        params: QuantParams {
            bit_width,
            scheme,
            granularity,
            scales,
            zero_points,
        },
    })
}

/// `(q - z) * s` per element, using each element's governing unit.
pub fn dequantize(q: &QuantizedTensor) -> FloatTensor {
    let mut data = Vec::with_capacity(q.values.len());
    for r in 0..q.rows {
        for c in 0..q.cols {
            let level = i32::from(q.value(r, c)) - q.zero_point_at(r, c);
            data.push((f64::from(level) * f64::from(q.scale_at(r, c))) as f32);
        }
    }
    FloatTensor::new(q.rows, q.cols, data).expect("dequantized values are finite")
}

/// Mean squared element difference, accumulated in `f64`.
pub fn reconstruction_mse(x: &FloatTensor, x_hat: &FloatTensor) -> Result<f64> {
    if x.rows() != x_hat.rows() || x.cols() != x_hat.cols() {
        return Err(Error::Dimension(format!(
            "cannot compare {}x{} with {}x{}",
            x.rows(),
            x.cols(),
            x_hat.rows(),
            x_hat.cols()
        )));
    }
    let sum: f64 = x
        .data()
        .iter()
        .zip(x_hat.data())
        .map(|(a, b)| {
            let d = f64::from(*a) - f64::from(*b);
            d * d
        })
        .sum();
    Ok(sum / x.data().len() as f64)
}

/// Two-level weight quantization: 8-bit symmetric per-channel, then the
/// resulting integers quantized again to asymmetric 4-bit groups.
#[derive(Debug, Clone, PartialEq)]
pub struct DualQuantized {
    pub outer: QuantizedTensor,
    pub inner: QuantizedTensor,
}

pub fn dual_quantize(w: &FloatTensor, group_size: usize) -> Result<DualQuantized> {
    let outer = quantize(
        w,
        BitWidth::Eight,
        Scheme::Symmetric,
        Granularity::PerChannel,
    )?;
    let as_real = FloatTensor::new(
        outer.rows,
        outer.cols,
        outer.values.iter().map(|&v| f32::from(v)).collect(),
    )?;
    let inner = quantize(
        &as_real,
        BitWidth::Four,
        Scheme::Asymmetric,
        Granularity::group(group_size),
    )?;
    Ok(DualQuantized { outer, inner })
}
