//! Instrumented quantized GEMM, `O = X * W` with `X: M x K` and `W: K x N`.
//!
//! Activations are symmetric per-token; weights are symmetric with one scale
//! per `(channel, group)`. The four paths differ only in how group partial
//! products `P_g = X_g . W_g` become the output:
//!
//! - float-scale: `O = s_a * sum_g float(P_g) * s_g`, one conversion per group;
//! - integer-scale: `O = s_a * float(sum_g P_g * int_scale_g) / alpha`, one
//!   conversion per output;
//! - coarse: `O = s_a * float(P) * s_n` with a single group spanning `K`;
//! - dual-quant: each 4-bit weight is reconstructed as `(W - z_g) * s_g`
//!   before the activation product, then scaled by `s_a * s_n`.
//!
//! Group partials accumulate in 32 bits. The scaled cross-group sum runs in
//! 64 bits and every running value is checked against the 32-bit range, so
//! overflow is detected instead of wrapping. Real-valued sums use `f64` and
//! round to `f32` once per output element.

pub mod oracle;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integer_scale::IntegerScaleSet;
use crate::overflow::{accumulator_bound, OverflowReport, I32_LIMIT};
use crate::quantizer::{BitWidth, Granularity, QuantizedTensor, Scheme};
use crate::tensor_io::FloatTensor;

pub use oracle::{gemm_oracle, oracle_trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    FloatScale,
    IntegerScale,
    Coarse,
    DualQuant,
}

impl PathKind {
    pub const ALL: [PathKind; 4] = [
        PathKind::FloatScale,
        PathKind::IntegerScale,
        PathKind::Coarse,
        PathKind::DualQuant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PathKind::FloatScale => "float-scale",
            PathKind::IntegerScale => "integer-scale",
            PathKind::Coarse => "coarse",
            PathKind::DualQuant => "dual-quant",
        }
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PathKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PathKind::ALL
            .into_iter()
            .find(|p| p.name() == s || p.name().replace('-', "_") == s)
            .ok_or_else(|| Error::Parameter(format!("unknown GEMM path {s:?}")))
    }
}

/// A dequantization strategy with the extra operands it needs.
#[derive(Debug, Clone, PartialEq)]
pub enum GemmPath {
    FloatScale,
    IntegerScale(IntegerScaleSet),
    Coarse,
    /// Inner asymmetric 4-bit group quantization of the 8-bit weight passed
    /// alongside it.
    DualQuant(QuantizedTensor),
}

impl GemmPath {
    pub fn kind(&self) -> PathKind {
        match self {
            GemmPath::FloatScale => PathKind::FloatScale,
            GemmPath::IntegerScale(_) => PathKind::IntegerScale,
            GemmPath::Coarse => PathKind::Coarse,
            GemmPath::DualQuant(_) => PathKind::DualQuant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowMode {
    /// Abort with an error naming the first offending output element.
    #[default]
    Strict,
    /// Finish the GEMM and flag the overflow in the stats.
    Permissive,
}

impl FromStr for OverflowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(OverflowMode::Strict),
            "permissive" => Ok(OverflowMode::Permissive),
            _ => Err(Error::Parameter(format!("unknown overflow mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    #[default]
    None,
    /// Run the float-scale path for layers whose static bound exceeds `i32`.
    FloatScaleOnOverflowRisk,
}

impl FromStr for Fallback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Fallback::None),
            "auto" => Ok(Fallback::FloatScaleOnOverflowRisk),
            _ => Err(Error::Parameter(format!("unknown fallback {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub overflow: OverflowMode,
    /// Worker threads; output rows are split between them.
    pub threads: usize,
    /// Keep every integer partial and accumulator in the result.
    pub record_trace: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            overflow: OverflowMode::Strict,
            threads: 1,
            record_trace: false,
        }
    }
}

/// Operation counters collected while a GEMM runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KernelStats {
    pub int_to_float_conversions: u64,
    pub integer_multiply_adds: u64,
    /// Zero-point subtractions on weights (dual-quant only).
    pub elementwise_subs: u64,
    /// Per-weight scale multiplications (dual-quant only).
    pub elementwise_muls: u64,
    pub max_abs_accumulator: i64,
    pub overflow_detected: bool,
    /// The requested integer-scale path was replaced by the float-scale path.
    pub fallback_substituted: bool,
    pub wall_time: Duration,
}

impl KernelStats {
    fn merge(&mut self, other: &KernelStats) {
        self.int_to_float_conversions += other.int_to_float_conversions;
        self.integer_multiply_adds += other.integer_multiply_adds;
        self.elementwise_subs += other.elementwise_subs;
        self.elementwise_muls += other.elementwise_muls;
        self.max_abs_accumulator = self.max_abs_accumulator.max(other.max_abs_accumulator);
        self.overflow_detected |= other.overflow_detected;
    }

    #[inline]
    fn observe(&mut self, value: i64) -> bool {
        let magnitude = value.saturating_abs();
        self.max_abs_accumulator = self.max_abs_accumulator.max(magnitude);
        let escaped = value > I32_LIMIT || value < i64::from(i32::MIN);
        self.overflow_detected |= escaped;
        escaped
    }
}

/// Integer accumulators captured during a run, row-major over outputs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AccumulatorTrace {
    pub groups: usize,
    /// `P_g` for every output `(i, n)` and group `g`, at `(i * N + n) * groups + g`.
    pub group_partials: Vec<i64>,
    /// Final integer accumulator per output; empty for paths that leave the
    /// integer domain per group.
    pub accumulators: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct GemmResult {
    pub output: FloatTensor,
    pub stats: KernelStats,
    /// Path that actually executed.
    pub path: PathKind,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub group_size: usize,
    /// Static bound and observed maximum; `None` for dual-quant, which keeps
    /// no integer accumulator.
    pub overflow: Option<OverflowReport>,
    pub trace: Option<AccumulatorTrace>,
}

/// Checked operands, transposed so each weight column is contiguous.
struct Operands {
    m: usize,
    k: usize,
    n: usize,
    group_size: usize,
    groups: usize,
    act: Vec<i8>,
    act_scales: Vec<f64>,
    act_bits: BitWidth,
    weight_t: Vec<i8>,
    weight_bits: BitWidth,
}

impl Operands {
    #[inline]
    fn act_row(&self, i: usize) -> &[i8] {
        &self.act[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    fn weight_col(&self, n: usize) -> &[i8] {
        &self.weight_t[n * self.k..(n + 1) * self.k]
    }
}

fn check_activation(x: &QuantizedTensor) -> Result<()> {
    let p = x.params();
    if p.scheme != Scheme::Symmetric || p.granularity != Granularity::PerToken {
        return Err(Error::Parameter(format!(
            "activations must be symmetric per-token, got {:?} {}",
            p.scheme, p.granularity
        )));
    }
    // Symmetric max scaling never emits -2^(a-1); the overflow bound relies on it.
    let floor = -(p.bit_width.symmetric_qmax() as i16);
    if let Some(v) = x.values().iter().find(|v| **v < floor) {
        return Err(Error::Value(format!(
            "activation level {v} is below the symmetric limit {floor}"
        )));
    }
    Ok(())
}

fn check_weight(x: &QuantizedTensor, w: &QuantizedTensor, scheme: Scheme) -> Result<usize> {
    if w.rows() != x.cols() {
        return Err(Error::Dimension(format!(
            "activation is {}x{} but weight is {}x{}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols()
        )));
    }
    if w.params().scheme != scheme {
        return Err(Error::Parameter(format!(
            "weight must be {scheme:?}, got {:?}",
            w.params().scheme
        )));
    }
    w.group_size().ok_or_else(|| {
        Error::Parameter(format!(
            "weight granularity {} has no per-channel grouping",
            w.params().granularity
        ))
    })
}

fn transpose(w: &QuantizedTensor) -> Vec<i8> {
    let (k, n) = (w.rows(), w.cols());
    let mut out = vec![0i8; k * n];
    for (idx, &v) in w.values().iter().enumerate() {
        let (row, col) = (idx / n, idx % n);
        out[col * k + row] = v as i8;
    }
    out
}

fn prepare(x: &QuantizedTensor, w: &QuantizedTensor, group_size: usize) -> Operands {
    let (m, k, n) = (x.rows(), x.cols(), w.cols());
    Operands {
        m,
        k,
        n,
        group_size,
        groups: k / group_size,
        act: x.values().iter().map(|&v| v as i8).collect(),
        act_scales: x.params().scales.iter().map(|&s| f64::from(s)).collect(),
        act_bits: x.params().bit_width,
        weight_t: transpose(w),
        weight_bits: w.params().bit_width,
    }
}

/// Longest dot product of `i8` operands that cannot leave the `i32` range.
const SAFE_I32_DOT_LEN: usize = (i32::MAX / (128 * 128)) as usize;

/// Integer dot product. Lengths that might leave `i32` accumulate in `i64`;
/// two's-complement wrapping cannot change a result that fits, so only the
/// final value needs the 32-bit window check.
#[inline]
fn dot(a: &[i8], w: &[i8]) -> i64 {
    if a.len() <= SAFE_I32_DOT_LEN {
        i64::from(
            a.iter()
                .zip(w)
                .map(|(&x, &y)| i32::from(x) * i32::from(y))
                .sum::<i32>(),
        )
    } else {
        a.iter()
            .zip(w)
            .map(|(&x, &y)| i64::from(x) * i64::from(y))
            .sum()
    }
}

/// Per-path scalars looked up inside the kernels.
enum Plan<'a> {
    FloatScale {
        scales: Vec<f64>,
    },
    IntegerScale {
        set: &'a IntegerScaleSet,
        alpha: f64,
    },
    Coarse {
        scales: Vec<f64>,
    },
    DualQuant {
        inner_scales: Vec<f64>,
        zero_points: Vec<i8>,
        outer_scales: Vec<f64>,
    },
}

struct RowOutcome {
    stats: KernelStats,
    partials: Vec<i64>,
    accumulators: Vec<i64>,
    overflow_at: Option<(usize, i64)>,
}

pub struct GemmEngine {
    config: EngineConfig,
    pool: Option<rayon::ThreadPool>,
}

impl Default for GemmEngine {
    fn default() -> Self {
        Self::new(EngineConfig::default()).expect("single-threaded engine")
    }
}

impl GemmEngine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        if config.threads == 0 {
            return Err(Error::Parameter("thread count must be at least 1".into()));
        }
        let pool = if config.threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.threads)
                    .build()
                    .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { config, pool })
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn float_scale(&self, x: &QuantizedTensor, w: &QuantizedTensor) -> Result<GemmResult> {
        self.run(x, w, &GemmPath::FloatScale)
    }

    pub fn integer_scale(
        &self,
        x: &QuantizedTensor,
        w: &QuantizedTensor,
        set: &IntegerScaleSet,
    ) -> Result<GemmResult> {
        check_activation(x)?;
        let g = check_weight(x, w, Scheme::Symmetric)?;
        if set.len() != w.params().scales.len() {
            return Err(Error::Parameter(format!(
                "{} integer scales for {} weight groups",
                set.len(),
                w.params().scales.len()
            )));
        }
        let ops = prepare(x, w, g);
        let bound = accumulator_bound(
            ops.k,
            g,
            i64::from(ops.act_bits.symmetric_qmax()),
            i64::from(ops.weight_bits.symmetric_qmax()) + 1,
            set.int_scales(),
        )?;
        let plan = Plan::IntegerScale {
            set,
            alpha: set.amplifier().as_f64(),
        };
        self.execute(&ops, &plan, PathKind::IntegerScale, Some(bound))
    }

    pub fn coarse(&self, x: &QuantizedTensor, w: &QuantizedTensor) -> Result<GemmResult> {
        self.run(x, w, &GemmPath::Coarse)
    }

    /// `outer` is the 8-bit symmetric per-channel weight and `inner` its
    /// asymmetric 4-bit group quantization.
    pub fn dual_quant(
        &self,
        x: &QuantizedTensor,
        outer: &QuantizedTensor,
        inner: &QuantizedTensor,
    ) -> Result<GemmResult> {
        self.run(x, outer, &GemmPath::DualQuant(inner.clone()))
    }

    /// Runs `path` on `x * w`.
    pub fn run(
        &self,
        x: &QuantizedTensor,
        w: &QuantizedTensor,
        path: &GemmPath,
    ) -> Result<GemmResult> {
        check_activation(x)?;
        match path {
            GemmPath::FloatScale => {
                let g = check_weight(x, w, Scheme::Symmetric)?;
                let ops = prepare(x, w, g);
                let bound = single_group_bound(&ops, g, weight_limit(ops.weight_bits))?;
                let plan = Plan::FloatScale {
                    scales: w.params().scales.iter().map(|&s| f64::from(s)).collect(),
                };
                self.execute(&ops, &plan, PathKind::FloatScale, Some(bound))
            }
            GemmPath::IntegerScale(set) => self.integer_scale(x, w, set),
            GemmPath::Coarse => {
                let g = check_weight(x, w, Scheme::Symmetric)?;
                if g != w.rows() {
                    return Err(Error::Parameter(format!(
                        "coarse path needs a per-channel weight, got {}",
                        w.params().granularity
                    )));
                }
                let ops = prepare(x, w, g);
                let bound = single_group_bound(&ops, g, weight_limit(ops.weight_bits))?;
                let plan = Plan::Coarse {
                    scales: w.params().scales.iter().map(|&s| f64::from(s)).collect(),
                };
                self.execute(&ops, &plan, PathKind::Coarse, Some(bound))
            }
            GemmPath::DualQuant(inner) => {
                let outer = w;
                let outer_g = check_weight(x, outer, Scheme::Symmetric)?;
                if outer_g != outer.rows() || outer.params().bit_width != BitWidth::Eight {
                    return Err(Error::Parameter(
                        "dual-quant outer weight must be 8-bit per-channel".into(),
                    ));
                }
                if inner.rows() != outer.rows() || inner.cols() != outer.cols() {
                    return Err(Error::Dimension(format!(
                        "inner weight {}x{} does not match outer {}x{}",
                        inner.rows(),
                        inner.cols(),
                        outer.rows(),
                        outer.cols()
                    )));
                }
                let p = inner.params();
                let g = match (p.scheme, p.bit_width, p.granularity) {
                    (Scheme::Asymmetric, BitWidth::Four, Granularity::Group { group_size }) => {
                        group_size
                    }
                    _ => {
                        return Err(Error::Parameter(
                            "dual-quant inner weight must be asymmetric 4-bit group-wise".into(),
                        ))
                    }
                };
                let ops = prepare(x, inner, g);
                let plan = Plan::DualQuant {
                    inner_scales: p.scales.iter().map(|&s| f64::from(s)).collect(),
                    zero_points: p.zero_points.iter().map(|&z| z as i8).collect(),
                    outer_scales: outer
                        .params()
                        .scales
                        .iter()
                        .map(|&s| f64::from(s))
                        .collect(),
                };
                self.execute(&ops, &plan, PathKind::DualQuant, None)
            }
        }
    }

    /// Runs `path`, substituting the float-scale path for integer-scale
    /// layers whose static bound leaves the 32-bit range when `fallback`
    /// asks for it.
    pub fn run_layer(
        &self,
        x: &QuantizedTensor,
        w: &QuantizedTensor,
        path: &GemmPath,
        fallback: Fallback,
    ) -> Result<GemmResult> {
        if let (GemmPath::IntegerScale(set), Fallback::FloatScaleOnOverflowRisk) = (path, fallback)
        {
            check_activation(x)?;
            let g = check_weight(x, w, Scheme::Symmetric)?;
            let bound = accumulator_bound(
                w.rows(),
                g,
                i64::from(x.params().bit_width.symmetric_qmax()),
                weight_limit(w.params().bit_width),
                set.int_scales(),
            )?;
            if bound > I32_LIMIT {
                let mut result = self.run(x, w, &GemmPath::FloatScale)?;
                result.stats.fallback_substituted = true;
                return Ok(result);
            }
        }
        self.run(x, w, path)
    }

    fn execute(
        &self,
        ops: &Operands,
        plan: &Plan<'_>,
        kind: PathKind,
        static_bound: Option<i64>,
    ) -> Result<GemmResult> {
        let start = Instant::now();
        let mut output = vec![0.0f32; ops.m * ops.n];
        let record = self.config.record_trace;
        let strict = self.config.overflow == OverflowMode::Strict;

        let outcomes: Vec<RowOutcome> = match &self.pool {
            Some(pool) => pool.install(|| {
                output
                    .par_chunks_mut(ops.n)
                    .enumerate()
                    .map(|(i, row)| run_row(ops, plan, i, row, record, strict))
                    .collect()
            }),
            None => output
                .chunks_mut(ops.n)
                .enumerate()
                .map(|(i, row)| run_row(ops, plan, i, row, record, strict))
                .collect(),
        };

        let mut stats = KernelStats::default();
        let mut trace = record.then(|| AccumulatorTrace {
            groups: ops.groups,
            ..Default::default()
        });
        for (i, outcome) in outcomes.into_iter().enumerate() {
            if let Some((col, value)) = outcome.overflow_at {
                if strict {
                    return Err(Error::Overflow { row: i, col, value });
                }
            }
            stats.merge(&outcome.stats);
            if let Some(t) = trace.as_mut() {
                t.group_partials.extend(outcome.partials);
                t.accumulators.extend(outcome.accumulators);
            }
        }
        stats.wall_time = start.elapsed();

        let overflow = static_bound
            .map(|bound| OverflowReport::new(bound).with_observed(stats.max_abs_accumulator))
            .transpose()?;

        Ok(GemmResult {
            output: FloatTensor::new(ops.m, ops.n, output)?,
            stats,
            path: kind,
            m: ops.m,
            k: ops.k,
            n: ops.n,
            group_size: ops.group_size,
            overflow,
            trace,
        })
    }
}

fn weight_limit(bits: BitWidth) -> i64 {
    i64::from(bits.symmetric_qmax()) + 1
}

/// Bound for paths whose only integer accumulator is one group's partial.
fn single_group_bound(ops: &Operands, group_size: usize, weight_max: i64) -> Result<i64> {
    accumulator_bound(
        group_size,
        group_size,
        i64::from(ops.act_bits.symmetric_qmax()),
        weight_max,
        &[1],
    )
}

fn run_row(
    ops: &Operands,
    plan: &Plan<'_>,
    i: usize,
    out: &mut [f32],
    record: bool,
    strict: bool,
) -> RowOutcome {
    let mut stats = KernelStats::default();
    let mut partials = Vec::new();
    let mut accumulators = Vec::new();
    let mut overflow_at = None;
    let act = ops.act_row(i);
    let s_a = ops.act_scales[i];
    let g = ops.group_size;

    for n in 0..ops.n {
        let wcol = ops.weight_col(n);
        let unit0 = n * ops.groups;
        let mut escaped: Option<i64> = None;
        let value = match plan {
            Plan::FloatScale { scales } => {
                let mut acc = 0.0f64;
                for gi in 0..ops.groups {
                    let span = gi * g..(gi + 1) * g;
                    let p = dot(&act[span.clone()], &wcol[span]);
                    stats.integer_multiply_adds += g as u64;
                    if stats.observe(p) {
                        escaped.get_or_insert(p);
                    }
                    if record {
                        partials.push(p);
                    }
                    stats.int_to_float_conversions += 1;
                    acc += p as f64 * scales[unit0 + gi];
                }
                s_a * acc
            }
            Plan::IntegerScale { set, alpha } => {
                let int_scales = set.int_scales();
                let mut acc = 0i64;
                for gi in 0..ops.groups {
                    let span = gi * g..(gi + 1) * g;
                    let p = dot(&act[span.clone()], &wcol[span]);
                    stats.integer_multiply_adds += g as u64 + 1;
                    if stats.observe(p) {
                        escaped.get_or_insert(p);
                    }
                    if record {
                        partials.push(p);
                    }
                    acc = acc.saturating_add(p * i64::from(int_scales[unit0 + gi]));
                    if stats.observe(acc) {
                        escaped.get_or_insert(acc);
                    }
                }
                if record {
                    accumulators.push(acc);
                }
                stats.int_to_float_conversions += 1;
                s_a * (acc as f64 / alpha)
            }
            Plan::Coarse { scales } => {
                let p = dot(act, wcol);
                stats.integer_multiply_adds += ops.k as u64;
                if stats.observe(p) {
                    escaped.get_or_insert(p);
                }
                if record {
                    partials.push(p);
                    accumulators.push(p);
                }
                stats.int_to_float_conversions += 1;
                s_a * (p as f64 * scales[n])
            }
            Plan::DualQuant {
                inner_scales,
                zero_points,
                outer_scales,
            } => {
                let mut acc = 0.0f64;
                for gi in 0..ops.groups {
                    let z = zero_points[unit0 + gi];
                    let s = inner_scales[unit0 + gi];
                    for kk in gi * g..(gi + 1) * g {
                        let centered = i32::from(wcol[kk]) - i32::from(z);
                        stats.elementwise_subs += 1;
                        stats.int_to_float_conversions += 1;
                        let reconstructed = f64::from(centered) * s;
                        stats.elementwise_muls += 1;
                        acc += f64::from(act[kk]) * reconstructed;
                    }
                }
                s_a * (acc * outer_scales[n])
            }
        };
        out[n] = value as f32;
        if let Some(v) = escaped {
            overflow_at.get_or_insert((n, v));
            if strict {
                break;
            }
        }
    }

    RowOutcome {
        stats,
        partials,
        accumulators,
        overflow_at,
    }
}

/// Float-scale GEMM on a single-threaded strict engine.
pub fn gemm_float_scale(x: &QuantizedTensor, w: &QuantizedTensor) -> Result<GemmResult> {
    GemmEngine::default().float_scale(x, w)
}

/// Integer-scale GEMM on a single-threaded strict engine.
pub fn gemm_integer_scale(
    x: &QuantizedTensor,
    w: &QuantizedTensor,
    set: &IntegerScaleSet,
) -> Result<GemmResult> {
    GemmEngine::default().integer_scale(x, w, set)
}

/// Coarse per-channel GEMM on a single-threaded strict engine.
pub fn gemm_coarse(x: &QuantizedTensor, w: &QuantizedTensor) -> Result<GemmResult> {
    GemmEngine::default().coarse(x, w)
}

/// Dual-quantization GEMM on a single-threaded strict engine.
pub fn gemm_dual_quant(
    x: &QuantizedTensor,
    outer: &QuantizedTensor,
    inner: &QuantizedTensor,
) -> Result<GemmResult> {
    GemmEngine::default().dual_quant(x, outer, inner)
}

/// [`GemmEngine::run_layer`] on a single-threaded strict engine.
pub fn run_layer(
    x: &QuantizedTensor,
    w: &QuantizedTensor,
    path: &GemmPath,
    fallback: Fallback,
) -> Result<GemmResult> {
    GemmEngine::default().run_layer(x, w, path, fallback)
}
