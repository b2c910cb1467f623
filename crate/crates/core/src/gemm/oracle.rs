//! Reference GEMM: a direct triple loop over the quantized operands with
//! `i64` integer sums and `f64` reals, no overflow window and no threading.

use crate::error::{Error, Result};
use crate::quantizer::QuantizedTensor;
use crate::tensor_io::FloatTensor;

use super::{AccumulatorTrace, GemmPath};

fn shape_check(x: &QuantizedTensor, w: &QuantizedTensor) -> Result<()> {
    if x.cols() != w.rows() {
        return Err(Error::Dimension(format!(
            "activation has {} columns but weight has {} rows",
            x.cols(),
            w.rows()
        )));
    }
    Ok(())
}

fn group_of(w: &QuantizedTensor) -> Result<usize> {
    w.group_size()
        .ok_or_else(|| Error::Parameter("weight has no per-channel grouping".into()))
}

fn partial(
    x: &QuantizedTensor,
    w: &QuantizedTensor,
    i: usize,
    n: usize,
    rows: std::ops::Range<usize>,
) -> i64 {
    rows.map(|k| i64::from(x.value(i, k)) * i64::from(w.value(k, n)))
        .sum()
}

struct Reference {
    output: Vec<f64>,
    trace: AccumulatorTrace,
}

fn evaluate(x: &QuantizedTensor, w: &QuantizedTensor, path: &GemmPath) -> Result<Reference> {
    shape_check(x, w)?;
    let (m, k, n_cols) = (x.rows(), x.cols(), w.cols());
    let mut output = Vec::with_capacity(m * n_cols);
    let mut trace = AccumulatorTrace::default();

    match path {
        GemmPath::FloatScale | GemmPath::Coarse | GemmPath::IntegerScale(_) => {
            let g = match path {
                GemmPath::Coarse => k,
                _ => group_of(w)?,
            };
            trace.groups = k / g;
            for i in 0..m {
                let s_a = f64::from(x.scale_at(i, 0));
                for n in 0..n_cols {
                    let mut real = 0.0f64;
                    let mut scaled = 0i64;
                    for gi in 0..k / g {
                        let p = partial(x, w, i, n, gi * g..(gi + 1) * g);
                        trace.group_partials.push(p);
                        match path {
                            GemmPath::IntegerScale(set) => {
                                let unit = w.unit_of(gi * g, n);
                                scaled += p * i64::from(set.int_scales()[unit]);
                            }
                            GemmPath::Coarse => real += p as f64 * f64::from(w.scale_at(0, n)),
                            _ => real += p as f64 * f64::from(w.scale_at(gi * g, n)),
                        }
                    }
                    let value = match path {
                        GemmPath::IntegerScale(set) => {
                            trace.accumulators.push(scaled);
                            s_a * (scaled as f64 / set.amplifier().as_f64())
                        }
                        GemmPath::Coarse => {
                            trace
                                .accumulators
                                .push(trace.group_partials[trace.group_partials.len() - 1]);
                            s_a * real
                        }
                        _ => s_a * real,
                    };
                    output.push(value);
                }
            }
        }
        GemmPath::DualQuant(inner) => {
            if inner.rows() != w.rows() || inner.cols() != w.cols() {
                return Err(Error::Dimension(
                    "inner and outer weights differ in shape".into(),
                ));
            }
            let g = group_of(inner)?;
            trace.groups = k / g;
            for i in 0..m {
                let s_a = f64::from(x.scale_at(i, 0));
                for n in 0..n_cols {
                    let mut real = 0.0f64;
                    for gi in 0..k / g {
                        let z = i64::from(inner.zero_point_at(gi * g, n));
                        let p: i64 = (gi * g..(gi + 1) * g)
                            .map(|kk| {
                                i64::from(x.value(i, kk)) * (i64::from(inner.value(kk, n)) - z)
                            })
                            .sum();
                        trace.group_partials.push(p);
                        real += p as f64 * f64::from(inner.scale_at(gi * g, n));
                    }
                    output.push(s_a * (real * f64::from(w.scale_at(0, n))));
                }
            }
        }
    }
    Ok(Reference { output, trace })
}

/// Evaluates `path`'s defining formula for `x * w`. For
/// [`GemmPath::DualQuant`], `w` is the 8-bit outer weight.
pub fn gemm_oracle(
    x: &QuantizedTensor,
    w: &QuantizedTensor,
    path: &GemmPath,
) -> Result<FloatTensor> {
    let r = evaluate(x, w, path)?;
    FloatTensor::new(
        x.rows(),
        w.cols(),
        r.output.into_iter().map(|v| v as f32).collect(),
    )
}

/// Integer partials and accumulators of the reference evaluation, laid out
/// like [`super::AccumulatorTrace`] from the engine. Dual-quant partials are
/// zero-point-corrected sums `sum a * (w - z)`.
pub fn oracle_trace(
    x: &QuantizedTensor,
    w: &QuantizedTensor,
    path: &GemmPath,
) -> Result<AccumulatorTrace> {
    evaluate(x, w, path).map(|r| r.trace)
}
