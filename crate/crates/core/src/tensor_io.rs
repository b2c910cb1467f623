//! Dense tensors, the `QTNS` binary file format, and synthetic generators.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! offset  size        field
//! 0       4           magic "QTNS"
//! 4       2           version (u16, currently 1)
//! 6       1           dtype code: 0 = real32, 1 = signed8, 2 = packed-signed4
//! 7       1           ndim (1 or 2)
//! 8       8 * ndim    dims (u64 each)
//! ...                 payload
//! ```
//!
//! Packed 4-bit payloads hold two values per byte; element `i` sits in the
//! low nibble when `i` is even and in the high nibble otherwise. Nibbles are
//! sign-extended on decode.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"QTNS";
pub const FORMAT_VERSION: u16 = 1;

const FIXED_HEADER_LEN: usize = 8;

/// Dense row-major matrix of `f32` values. Always finite, never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatTensor {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FloatTensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "tensor dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Dimension(format!("{rows}x{cols} overflows usize")))?;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} tensor needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Value(format!(
                "non-finite value {} at flat index {pos}",
                data[pos]
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn from_rows(rows: &[&[f32]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
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
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    Real32 = 0,
    Signed8 = 1,
    PackedSigned4 = 2,
}

impl DType {
    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(DType::Real32),
            1 => Ok(DType::Signed8),
            2 => Ok(DType::PackedSigned4),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }

    fn payload_len(self, count: u64) -> u64 {
        match self {
            DType::Real32 => count * 4,
            DType::Signed8 => count,
            DType::PackedSigned4 => count.div_ceil(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorFileHeader {
    pub version: u16,
    pub dtype: DType,
    pub dims: Vec<u64>,
}

impl TensorFileHeader {
    fn for_matrix(dtype: DType, rows: usize, cols: usize) -> Self {
        Self {
            version: FORMAT_VERSION,
            dtype,
            dims: vec![rows as u64, cols as u64],
        }
    }

    pub fn element_count(&self) -> Result<u64> {
        self.dims.iter().try_fold(1u64, |acc, &d| {
            acc.checked_mul(d)
                .ok_or_else(|| Error::Format("product of dims overflows u64".into()))
        })
    }

    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER_LEN + 8 * self.dims.len()
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.push(self.dtype as u8);
        out.push(self.dims.len() as u8);
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < FIXED_HEADER_LEN {
            return Err(Error::Length {
                expected: FIXED_HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        if bytes[..4] != MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected \"QTNS\"",
                String::from_utf8_lossy(&bytes[..4])
            )));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dtype = DType::from_code(bytes[6])?;
        let ndim = bytes[7] as usize;
        if !(1..=2).contains(&ndim) {
            return Err(Error::Format(format!("ndim must be 1 or 2, got {ndim}")));
        }
        let needed = FIXED_HEADER_LEN + 8 * ndim;
        if bytes.len() < needed {
            return Err(Error::Length {
                expected: needed as u64,
                actual: bytes.len() as u64,
            });
        }
        let dims = bytes[FIXED_HEADER_LEN..needed]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect::<Vec<_>>();
        if dims.contains(&0) {
            return Err(Error::Format("zero-length dimension".into()));
        }
        let header = Self {
            version,
            dtype,
            dims,
        };
        header.element_count()?;
        Ok(header)
    }

    /// Matrix view of the dims: a 1-D tensor of length `n` is a `1 x n` row.
    fn matrix_shape(&self) -> Result<(usize, usize)> {
        let to_usize = |d: u64| {
            usize::try_from(d).map_err(|_| Error::Format(format!("dimension {d} too large")))
        };
        match self.dims.as_slice() {
            [n] => Ok((1, to_usize(*n)?)),
            [r, c] => Ok((to_usize(*r)?, to_usize(*c)?)),
            _ => unreachable!("ndim validated in decode"),
        }
    }
}

/// Integer matrix payload of a `signed8` or `packed-signed4` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntTensor {
    pub rows: usize,
    pub cols: usize,
    pub dtype: DType,
    pub values: Vec<i8>,
}

impl IntTensor {
    pub fn new(rows: usize, cols: usize, dtype: DType, values: Vec<i8>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} integer tensor with {} values",
                values.len()
            )));
        }
        match dtype {
            DType::Real32 => {
                return Err(Error::Parameter("integer tensor cannot use real32".into()))
            }
            DType::PackedSigned4 => {
                if let Some(v) = values.iter().find(|v| !(-8..=7).contains(*v)) {
                    return Err(Error::Value(format!("{v} does not fit a signed nibble")));
                }
            }
            DType::Signed8 => {}
        }
        Ok(Self {
            rows,
            cols,
            dtype,
            values,
        })
    }
}

/// Contents of a `QTNS` file.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorPayload {
    Real(FloatTensor),
    Int(IntTensor),
}

impl TensorPayload {
    pub fn into_real(self) -> Result<FloatTensor> {
        match self {
            TensorPayload::Real(t) => Ok(t),
            TensorPayload::Int(t) => Err(Error::Format(format!(
                "expected a real32 tensor, found {:?}",
                t.dtype
            ))),
        }
    }

    pub fn into_int(self) -> Result<IntTensor> {
        match self {
            TensorPayload::Int(t) => Ok(t),
            TensorPayload::Real(_) => Err(Error::Format(
                "expected an integer tensor, found real32".into(),
            )),
        }
    }
}

/// Packs signed 4-bit values two per byte, even index in the low nibble.
pub fn pack_nibbles(values: &[i8]) -> Vec<u8> {
    values
        .chunks(2)
        .map(|pair| {
            let lo = (pair[0] as u8) & 0x0F;
            let hi = pair.get(1).map_or(0, |&v| (v as u8) & 0x0F);
            lo | (hi << 4)
        })
        .collect()
}

/// Inverse of [`pack_nibbles`]; `count` trims the padding nibble of odd counts.
pub fn unpack_nibbles(bytes: &[u8], count: usize) -> Vec<i8> {
    let sign_extend = |n: u8| ((n << 4) as i8) >> 4;
    bytes
        .iter()
        .flat_map(|&b| [sign_extend(b & 0x0F), sign_extend(b >> 4)])
        .take(count)
        .collect()
}

pub fn encode_tensor(payload: &TensorPayload) -> Vec<u8> {
    match payload {
        TensorPayload::Real(t) => {
            let header = TensorFileHeader::for_matrix(DType::Real32, t.rows, t.cols);
            let mut out = Vec::with_capacity(header.encoded_len() + 4 * t.data.len());
            header.encode(&mut out);
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out
        }
        TensorPayload::Int(t) => {
            let header = TensorFileHeader::for_matrix(t.dtype, t.rows, t.cols);
            let mut out = Vec::with_capacity(header.encoded_len() + t.values.len());
            header.encode(&mut out);
            match t.dtype {
                DType::Signed8 => out.extend(t.values.iter().map(|&v| v as u8)),
                DType::PackedSigned4 => out.extend(pack_nibbles(&t.values)),
                DType::Real32 => unreachable!("IntTensor::new rejects real32"),
            }
            out
        }
    }
}

pub fn decode_tensor(bytes: &[u8]) -> Result<TensorPayload> {
    let header = TensorFileHeader::decode(bytes)?;
    let count = header.element_count()?;
    let (rows, cols) = header.matrix_shape()?;
    let payload = &bytes[header.encoded_len()..];
    let expected = header.dtype.payload_len(count);
    if payload.len() as u64 != expected {
        return Err(Error::Length {
            expected,
            actual: payload.len() as u64,
        });
    }
    match header.dtype {
        DType::Real32 => {
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                .collect();
            FloatTensor::new(rows, cols, data).map(TensorPayload::Real)
        }
        DType::Signed8 => {
            let values = payload.iter().map(|&b| b as i8).collect();
            IntTensor::new(rows, cols, DType::Signed8, values).map(TensorPayload::Int)
        }
        DType::PackedSigned4 => {
            let values = unpack_nibbles(payload, count as usize);
            IntTensor::new(rows, cols, DType::PackedSigned4, values).map(TensorPayload::Int)
        }
    }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<TensorPayload> {
    let bytes = fs::read(path)?;
    decode_tensor(&bytes)
}

pub fn write_tensor(payload: &TensorPayload, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_tensor(payload))?;
    Ok(())
}

/// Group length used by the `llama_like` generator.
pub const LLAMA_LIKE_GROUP: usize = 128;

/// Source distribution for [`generate_synthetic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Gaussian {
        sigma: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Weight-like matrix whose 4-bit symmetric scales, over groups of
    /// [`LLAMA_LIKE_GROUP`] rows per column, fall in `[2^-10, 2^-6]` with the
    /// smallest one in `[2^-10, 2^-9]`.
    LlamaLike,
}

impl Distribution {
    fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => Err(
                Error::Parameter(format!("gaussian sigma must be positive, got {sigma}")),
            ),
            Distribution::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite()) => {
                Err(Error::Parameter("uniform bounds must be finite".into()))
            }
            Distribution::Uniform { lo, hi } if lo > hi => Err(Error::Parameter(format!(
                "uniform interval is empty: lo {lo} > hi {hi}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            Distribution::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            Distribution::LlamaLike => f.write_str("llama_like"),
        }
    }
}

impl FromStr for Distribution {
    type Err = Error;

    /// Accepts `gaussian:<sigma>`, `uniform:<lo>:<hi>` and `llama_like`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad number {p:?} in distribution {s:?}")))
        };
        let dist = match parts.as_slice() {
            ["gaussian", sigma] => Distribution::Gaussian { sigma: num(sigma)? },
            ["uniform", lo, hi] => Distribution::Uniform {
                lo: num(lo)?,
                hi: num(hi)?,
            },
            ["llama_like"] | ["llama-like"] => Distribution::LlamaLike,
            _ => return Err(Error::Parameter(format!("unknown distribution {s:?}"))),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Deterministic synthetic matrix: a pure function of shape, distribution and seed.
pub fn generate_synthetic(
    rows: usize,
    cols: usize,
    distribution: Distribution,
    seed: u64,
) -> Result<FloatTensor> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!(
            "synthetic shape must be positive, got {rows}x{cols}"
        )));
    }
    distribution.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows * cols;
    let data = match distribution {
        Distribution::Gaussian { sigma } => {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
            (0..n).map(|_| normal.sample(&mut rng) as f32).collect()
        }
        Distribution::Uniform { lo, hi } if lo == hi => vec![lo as f32; n],
        Distribution::Uniform { lo, hi } => {
            (0..n).map(|_| rng.random_range(lo..hi) as f32).collect()
        }
        Distribution::LlamaLike => llama_like(rows, cols, &mut rng),
    };
    FloatTensor::new(rows, cols, data)
}

fn llama_like(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    // log2 of the target group scale; the margins keep f32 rounding of the
    // recomputed scale well inside the advertised intervals.
    const LOG2_MIN: f64 = -9.95;
    const LOG2_SPAN: f64 = 3.9;
    const PINNED_LOG2_SPAN: f64 = 0.9;
    const QMAX_4BIT: f64 = 7.0;

    let groups_per_col = rows.div_ceil(LLAMA_LIKE_GROUP);
    let pinned = rng.random_range(0..groups_per_col * cols);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut data = vec![0.0f32; rows * cols];
    let mut raw = Vec::with_capacity(LLAMA_LIKE_GROUP);
    for col in 0..cols {
        for group in 0..groups_per_col {
            let span = if col * groups_per_col + group == pinned {
                PINNED_LOG2_SPAN
            } else {
                LOG2_SPAN
            };
            let scale = (LOG2_MIN + span * rng.random::<f64>()).exp2();
            let start = group * LLAMA_LIKE_GROUP;
            let end = (start + LLAMA_LIKE_GROUP).min(rows);
            raw.clear();
            raw.extend((start..end).map(|_| normal.sample(rng)));
            let amax = raw.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
            let gain = if amax > 0.0 {
                QMAX_4BIT * scale / amax
            } else {
                0.0
            };
            for (offset, v) in raw.iter().enumerate() {
                data[(start + offset) * cols + col] = (v * gain) as f32;
            }
        }
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.qtns");
        let t = FloatTensor::new(2, 3, vec![1.0, -2.5, 3.25, 0.0, -0.0, 1e-30]).unwrap();
        write_tensor(&TensorPayload::Real(t.clone()), &path).unwrap();
        let back = read_tensor(&path).unwrap().into_real().unwrap();
        assert_eq!(back.rows(), 2);
        assert_eq!(back.cols(), 3);
        let bits = |t: &FloatTensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&t));
    }

    #[test]
    fn zero_scalar_payload_is_four_zero_bytes() {
        let bytes = encode_tensor(&TensorPayload::Real(FloatTensor::zeros(1, 1).unwrap()));
        assert_eq!(&bytes[..4], b"QTNS");
        assert_eq!(bytes.len(), 8 + 16 + 4);
        assert_eq!(&bytes[24..], &[0, 0, 0, 0]);
    }

    #[test]
    fn header_bytes_are_little_endian() {
        let t = FloatTensor::new(1, 2, vec![1.0, 2.0]).unwrap();
        let bytes = encode_tensor(&TensorPayload::Real(t));
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(bytes[6], 0);
        assert_eq!(bytes[7], 2);
        assert_eq!(&bytes[8..16], &1u64.to_le_bytes());
        assert_eq!(&bytes[16..24], &2u64.to_le_bytes());
        assert_eq!(&bytes[24..28], &1.0f32.to_le_bytes());
    }

    #[test]
    fn bad_magic_is_format_error() {
        let mut bytes = encode_tensor(&TensorPayload::Real(FloatTensor::zeros(1, 1).unwrap()));
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_tensor(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_length_error() {
        let t = FloatTensor::new(2, 2, vec![1.0; 4]).unwrap();
        let bytes = encode_tensor(&TensorPayload::Real(t));
        let err = decode_tensor(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(
            err,
            Error::Length {
                expected: 16,
                actual: 15
            }
        ));
    }

    #[test]
    fn nan_payload_is_value_error() {
        let t = FloatTensor::new(1, 2, vec![1.0, 2.0]).unwrap();
        let mut bytes = encode_tensor(&TensorPayload::Real(t));
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_tensor(&bytes), Err(Error::Value(_))));
        bytes[n - 4..].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(decode_tensor(&bytes), Err(Error::Value(_))));
    }

    #[test]
    fn bad_ndim_and_dtype_rejected() {
        let mut bytes = encode_tensor(&TensorPayload::Real(FloatTensor::zeros(1, 1).unwrap()));
        bytes[7] = 3;
        assert!(matches!(decode_tensor(&bytes), Err(Error::Format(_))));
        bytes[7] = 2;
        bytes[6] = 9;
        assert!(matches!(decode_tensor(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn one_dimensional_file_reads_as_row() {
        let mut bytes = Vec::new();
        TensorFileHeader {
            version: 1,
            dtype: DType::Real32,
            dims: vec![3],
        }
        .encode(&mut bytes);
        for v in [1.0f32, 2.0, 3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let t = decode_tensor(&bytes).unwrap().into_real().unwrap();
        assert_eq!((t.rows(), t.cols()), (1, 3));
    }

    #[test]
    fn dims_product_overflow_rejected() {
        let mut bytes = Vec::new();
        TensorFileHeader {
            version: 1,
            dtype: DType::Signed8,
            dims: vec![u64::MAX, 2],
        }
        .encode(&mut bytes);
        assert!(matches!(decode_tensor(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn nibble_layout_low_first() {
        // -8 = 0b1000 in the low nibble, 7 = 0b0111 in the high nibble.
        assert_eq!(pack_nibbles(&[-8, 7]), vec![0x78]);
        assert_eq!(pack_nibbles(&[7, -8]), vec![0x87]);
        assert_eq!(pack_nibbles(&[-1]), vec![0x0F]);
        assert_eq!(unpack_nibbles(&[0x78], 2), vec![-8, 7]);
    }

    #[test]
    fn packed_signed4_decodes_hand_packed_bytes() {
        // Nibbles for [-8, 7, -1, 0, 3, -3, 1, -2], low nibble first:
        // (0x8, 0x7) -> 0x78, (0xF, 0x0) -> 0x0F, (0x3, 0xD) -> 0xD3, (0x1, 0xE) -> 0xE1
        let mut bytes = Vec::new();
        TensorFileHeader {
            version: 1,
            dtype: DType::PackedSigned4,
            dims: vec![2, 4],
        }
        .encode(&mut bytes);
        bytes.extend_from_slice(&[0x78, 0x0F, 0xD3, 0xE1]);
        let t = decode_tensor(&bytes).unwrap().into_int().unwrap();
        assert_eq!(t.values, vec![-8, 7, -1, 0, 3, -3, 1, -2]);
        assert_eq!(encode_tensor(&TensorPayload::Int(t)), bytes);
    }

    #[test]
    fn odd_nibble_count_pads_last_byte() {
        let t = IntTensor::new(1, 3, DType::PackedSigned4, vec![1, 2, 3]).unwrap();
        let bytes = encode_tensor(&TensorPayload::Int(t.clone()));
        assert_eq!(bytes.len(), 8 + 16 + 2);
        assert_eq!(decode_tensor(&bytes).unwrap().into_int().unwrap(), t);
    }

    #[test]
    fn large_header_size_arithmetic() {
        let header = TensorFileHeader::for_matrix(DType::Real32, 4096, 4096);
        assert_eq!(header.dims, vec![4096, 4096]);
        let count = header.element_count().unwrap();
        assert_eq!(DType::Real32.payload_len(count), 64 * 1024 * 1024);
    }

    #[test]
    fn ingestion_rejects_non_finite() {
        assert!(matches!(
            FloatTensor::new(1, 1, vec![f32::NAN]),
            Err(Error::Value(_))
        ));
        assert!(FloatTensor::new(0, 1, vec![]).is_err());
        assert!(FloatTensor::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn synthetic_is_deterministic() {
        let d = Distribution::Gaussian { sigma: 1.0 };
        let a = generate_synthetic(8, 16, d, 42).unwrap();
        let b = generate_synthetic(8, 16, d, 42).unwrap();
        let c = generate_synthetic(8, 16, d, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_uniform_is_constant() {
        let t = generate_synthetic(3, 5, Distribution::Uniform { lo: 0.0, hi: 0.0 }, 1).unwrap();
        assert!(t.data().iter().all(|&v| v == 0.0));
        let u = generate_synthetic(64, 64, Distribution::Uniform { lo: -2.0, hi: 3.0 }, 1).unwrap();
        assert!(u.data().iter().all(|&v| (-2.0..3.0).contains(&v)));
    }

    #[test]
    fn invalid_distribution_parameters() {
        let bad = [
            Distribution::Gaussian { sigma: 0.0 },
            Distribution::Gaussian { sigma: -1.0 },
            Distribution::Uniform { lo: 1.0, hi: 0.0 },
        ];
        for d in bad {
            assert!(matches!(
                generate_synthetic(2, 2, d, 0),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn distribution_parses() {
        assert_eq!(
            "gaussian:0.5".parse::<Distribution>().unwrap(),
            Distribution::Gaussian { sigma: 0.5 }
        );
        assert_eq!(
            "uniform:-1:2".parse::<Distribution>().unwrap(),
            Distribution::Uniform { lo: -1.0, hi: 2.0 }
        );
        assert_eq!(
            "llama_like".parse::<Distribution>().unwrap(),
            Distribution::LlamaLike
        );
        assert!("gaussian:-1".parse::<Distribution>().is_err());
        assert!("cauchy".parse::<Distribution>().is_err());
    }
}
