//! Fine-grained group quantization with integer-scale dequantization.
//!
//! The crate quantizes dense matrices at per-tensor, per-token, per-channel
//! and group granularity, converts float group scales into amplified integer
//! scales, and runs instrumented quantized GEMMs under four dequantization
//! strategies:
//!
//! | path            | accumulation                                           |
//! |-----------------|--------------------------------------------------------|
//! | `coarse`        | one integer dot product over all of `K`                |
//! | `float-scale`   | per-group integer partials, each converted and scaled  |
//! | `integer-scale` | per-group partials times integer scales, one convert   |
//! | `dual-quant`    | asymmetric 4-bit groups over an 8-bit per-channel base |
//!
//! Every path reports how many integer-to-float conversions and integer
//! multiply-adds it executed, along with the largest accumulator magnitude it
//! saw, so the conversion savings and the overflow headroom can be checked
//! directly rather than inferred from timings.

pub mod error;
pub mod gemm;
pub mod integer_scale;
pub mod overflow;
pub mod quantizer;
pub mod report;
pub mod tensor_io;

pub use error::{Error, Result};
pub use gemm::{
    gemm_coarse, gemm_dual_quant, gemm_float_scale, gemm_integer_scale, gemm_oracle, run_layer,
    AccumulatorTrace, EngineConfig, Fallback, GemmEngine, GemmPath, GemmResult, KernelStats,
    OverflowMode, PathKind,
};
pub use integer_scale::{
    analyze_scales, default_amplifier, integerize_scales, search_amplifier, Amplifier,
    AmplifierChoice, IntegerScaleSet, ScaleAnalysis,
};
pub use overflow::{overflow_analyzer, OverflowReport};
pub use quantizer::{
    dequantize, dual_quantize, quantize, reconstruction_mse, BitWidth, Granularity, QuantParams,
    QuantizedTensor, Scheme,
};
pub use report::{
    emit_report, render_analysis, run_ablation, run_bench, write_report, AblationRow, BenchConfig,
    BenchReport, GemmRecord, ReportFormat,
};
pub use tensor_io::{generate_synthetic, read_tensor, write_tensor, Distribution, FloatTensor};
