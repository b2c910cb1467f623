//! Report rows for GEMM runs, amplifier ablations and benchmarks, rendered
//! as JSON, CSV or an aligned text table.
//!
//! Field order is fixed by the row structs. Timing fields (`wall_ms`,
//! `median_wall_ms`) can be dropped so two runs can be diffed byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::gemm::{EngineConfig, GemmEngine, GemmPath, GemmResult, PathKind};
use crate::integer_scale::{
    integerize_scales, squared_error_vs_float, squared_error_vs_original, Amplifier,
    AmplifierChoice, IntegerScaleSet, ScaleAnalysis,
};
use crate::quantizer::{dual_quantize, quantize, BitWidth, Granularity, Scheme};
use crate::tensor_io::{generate_synthetic, Distribution, FloatTensor};

/// Keys whose values depend on the machine rather than the inputs.
pub const TIMING_FIELDS: [&str; 2] = ["wall_ms", "median_wall_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    TextTable,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" | "text-table" | "table" => Ok(ReportFormat::TextTable),
            _ => Err(Error::Parameter(format!("unknown report format {s:?}"))),
        }
    }
}

/// Milliseconds, rounded to whole microseconds.
fn millis(d: Duration) -> f64 {
    d.as_micros() as f64 / 1e3
}

/// One GEMM execution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GemmRecord {
    pub path: PathKind,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub group: usize,
    pub conversions: u64,
    pub imads: u64,
    pub max_abs_acc: i64,
    pub overflow: bool,
    pub wall_ms: f64,
}

impl From<&GemmResult> for GemmRecord {
    fn from(r: &GemmResult) -> Self {
        Self {
            path: r.path,
            m: r.m,
            n: r.n,
            k: r.k,
            group: r.group_size,
            conversions: r.stats.int_to_float_conversions,
            imads: r.stats.integer_multiply_adds,
            max_abs_acc: r.stats.max_abs_accumulator,
            overflow: r.stats.overflow_detected,
            wall_ms: millis(r.stats.wall_time),
        }
    }
}

/// Reconstruction error of integer-scale dequantization at one amplifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub amplifier: u64,
    /// Mean squared difference from the float-scale reconstruction.
    pub mse_vs_float: f64,
    /// Mean squared difference from the unquantized weights.
    pub mse_vs_original: f64,
}

/// Integer-scale reconstruction MSE of `weights`, quantized symmetric
/// group-wise, for each amplifier. Rows are sorted by amplifier; duplicates
/// are kept.
pub fn run_ablation(
    weights: &[FloatTensor],
    amplifiers: &[Amplifier],
    group_size: usize,
    bit_width: BitWidth,
) -> Result<Vec<AblationRow>> {
    if amplifiers.is_empty() {
        return Err(Error::Parameter("amplifier list is empty".into()));
    }
    if weights.is_empty() {
        return Err(Error::Parameter("no weight matrices to ablate".into()));
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
    let total: usize = weights.iter().map(|w| w.data().len()).sum();

    let mut sorted = amplifiers.to_vec();
    sorted.sort();
    sorted
        .into_iter()
        .map(|amp| {
            let (mut vs_float, mut vs_original) = (0.0, 0.0);
            for (w, q) in weights.iter().zip(&quantized) {
                let set = integerize_scales(&q.params().scales, amp)?;
                vs_float += squared_error_vs_float(q, &set)?;
                vs_original += squared_error_vs_original(w, q, &set)?;
            }
            Ok(AblationRow {
                amplifier: amp.value(),
                mse_vs_float: vs_float / total as f64,
                mse_vs_original: vs_original / total as f64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub group_size: usize,
    pub paths: Vec<PathKind>,
    pub repeats: usize,
    pub seed: u64,
    pub amplifier: AmplifierChoice,
    pub engine: EngineConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            m: 16,
            k: 4096,
            n: 4096,
            group_size: 128,
            paths: PathKind::ALL.to_vec(),
            repeats: 3,
            seed: 0,
            amplifier: AmplifierChoice::default(),
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub path: PathKind,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub group: usize,
    pub conversions: u64,
    pub imads: u64,
    pub max_abs_acc: i64,
    pub overflow: bool,
    pub median_wall_ms: f64,
}

/// A counter comparison; wall-clock times are never checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchCheck {
    pub check: String,
    pub expected: u64,
    pub actual: u64,
    pub pass: bool,
}

impl BenchCheck {
    fn new(check: String, expected: u64, actual: u64) -> Self {
        Self {
            check,
            expected,
            actual,
            pass: expected == actual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub checks: Vec<BenchCheck>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Rows followed by checks. JSON nests them under `results` and `checks`.
    pub fn render(&self, format: ReportFormat, include_timing: bool) -> Result<String> {
        match format {
            ReportFormat::Json => {
                let mut obj = Map::new();
                obj.insert(
                    "results".into(),
                    Value::Array(to_objects(&self.rows, include_timing)?),
                );
                obj.insert(
                    "checks".into(),
                    Value::Array(to_objects(&self.checks, include_timing)?),
                );
                Ok(serde_json::to_string_pretty(&Value::Object(obj))? + "\n")
            }
            _ => Ok(format!(
                "{}\n{}",
                emit_report(&self.rows, format, include_timing)?,
                emit_report(&self.checks, format, include_timing)?
            )),
        }
    }
}

fn expected_counts(kind: PathKind, m: u64, k: u64, n: u64, g: u64) -> (u64, u64) {
    let outputs = m * n;
    match kind {
        PathKind::FloatScale => (outputs * (k / g), outputs * k),
        PathKind::IntegerScale => (outputs, outputs * (k + k / g)),
        PathKind::Coarse => (outputs, outputs * k),
        PathKind::DualQuant => (outputs * k, 0),
    }
}

/// Runs every requested path `repeats` times on seeded Gaussian operands and
/// reports median wall time alongside the operation counters.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.repeats < 3 {
        return Err(Error::Parameter(format!(
            "benchmark needs at least 3 repeats, got {}",
            config.repeats
        )));
    }
    if config.paths.is_empty() {
        return Err(Error::Parameter("no benchmark paths requested".into()));
    }
    let (m, k, n, g) = (config.m, config.k, config.n, config.group_size);
    let x = generate_synthetic(m, k, Distribution::Gaussian { sigma: 1.0 }, config.seed)?;
    let w = generate_synthetic(
        k,
        n,
        Distribution::Gaussian { sigma: 0.02 },
        config.seed.wrapping_add(1),
    )?;
    let xq = quantize(
        &x,
        BitWidth::Eight,
        Scheme::Symmetric,
        Granularity::PerToken,
    )?;
    let engine = GemmEngine::new(config.engine)?;

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &kind in &config.paths {
        let (weight, path) = match kind {
            PathKind::FloatScale => (
                quantize(&w, BitWidth::Four, Scheme::Symmetric, Granularity::group(g))?,
                GemmPath::FloatScale,
            ),
            PathKind::IntegerScale => {
                let wq = quantize(&w, BitWidth::Four, Scheme::Symmetric, Granularity::group(g))?;
                let set = IntegerScaleSet::for_weight(&wq, config.amplifier)?;
                (wq, GemmPath::IntegerScale(set))
            }
            PathKind::Coarse => (
                quantize(
                    &w,
                    BitWidth::Four,
                    Scheme::Symmetric,
                    Granularity::PerChannel,
                )?,
                GemmPath::Coarse,
            ),
            PathKind::DualQuant => {
                let d = dual_quantize(&w, g)?;
                (d.outer, GemmPath::DualQuant(d.inner))
            }
        };

        let mut times = Vec::with_capacity(config.repeats);
        let mut first: Option<GemmResult> = None;
        let mut stable = true;
        for _ in 0..config.repeats {
            let r = engine.run(&xq, &weight, &path)?;
            times.push(millis(r.stats.wall_time));
            match &first {
                None => first = Some(r),
                Some(f) => {
                    stable &= f.stats.int_to_float_conversions == r.stats.int_to_float_conversions
                        && f.stats.integer_multiply_adds == r.stats.integer_multiply_adds
                        && f.output == r.output;
                }
            }
        }
        times.sort_by(f64::total_cmp);
        let r = first.expect("at least one repeat");
        let group = r.group_size;
        rows.push(BenchRow {
            path: kind,
            m,
            n,
            k,
            group,
            conversions: r.stats.int_to_float_conversions,
            imads: r.stats.integer_multiply_adds,
            max_abs_acc: r.stats.max_abs_accumulator,
            overflow: r.stats.overflow_detected,
            median_wall_ms: times[times.len() / 2],
        });
        let (conv, imads) = expected_counts(kind, m as u64, k as u64, n as u64, group as u64);
        checks.push(BenchCheck::new(
            format!("{kind} conversions"),
            conv,
            r.stats.int_to_float_conversions,
        ));
        checks.push(BenchCheck::new(
            format!("{kind} imads"),
            imads,
            r.stats.integer_multiply_adds,
        ));
        checks.push(BenchCheck::new(
            format!("{kind} repeat-stable"),
            1,
            u64::from(stable),
        ));
    }

    let conversions = |kind| rows.iter().find(|r| r.path == kind).map(|r| r.conversions);
    if let (Some(float), Some(int)) = (
        conversions(PathKind::FloatScale),
        conversions(PathKind::IntegerScale),
    ) {
        checks.push(BenchCheck::new(
            "float-scale / integer-scale conversions".into(),
            (k / g) as u64,
            float.checked_div(int).unwrap_or(0),
        ));
    }
    Ok(BenchReport { rows, checks })
}

fn to_objects<T: Serialize>(rows: &[T], include_timing: bool) -> Result<Vec<Value>> {
    rows.iter()
        .map(|row| {
            let mut value = serde_json::to_value(row)?;
            if let (Value::Object(map), false) = (&mut value, include_timing) {
                for key in TIMING_FIELDS {
                    map.shift_remove(key);
                }
            }
            Ok(value)
        })
        .collect()
}

fn cell(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn table<T: Serialize>(
    rows: &[T],
    include_timing: bool,
) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let objects = to_objects(rows, include_timing)?;
    let header: Vec<String> = match objects.first() {
        Some(Value::Object(map)) => map.keys().cloned().collect(),
        _ => return Err(Error::Parameter("report rows must be records".into())),
    };
    let body = objects
        .iter()
        .map(|o| header.iter().map(|k| cell(&o[k.as_str()])).collect())
        .collect();
    Ok((header, body))
}

/// Renders report rows. Empty input is a parameter error.
pub fn emit_report<T: Serialize>(
    rows: &[T],
    format: ReportFormat,
    include_timing: bool,
) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Parameter("nothing to report".into()));
    }
    match format {
        ReportFormat::Json => {
            let objects = to_objects(rows, include_timing)?;
            Ok(serde_json::to_string_pretty(&objects)? + "\n")
        }
        ReportFormat::Csv => {
            let (header, body) = table(rows, include_timing)?;
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(&header)
                .and_then(|_| body.iter().try_for_each(|r| writer.write_record(r)))
                .map_err(|e| Error::Format(e.to_string()))?;
            let bytes = writer
                .into_inner()
                .map_err(|e| Error::Format(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
        }
        ReportFormat::TextTable => {
            let (header, body) = table(rows, include_timing)?;
            Ok(text_table(&header, &body))
        }
    }
}

fn text_table(header: &[String], body: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let joined: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", joined.join("  ").trim_end());
    };
    line(header);
    line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in body {
        line(row);
    }
    out
}

/// Renders `rows` and writes them to `path`.
pub fn write_report<T: Serialize>(
    rows: &[T],
    format: ReportFormat,
    include_timing: bool,
    path: impl AsRef<Path>,
) -> Result<()> {
    let text = emit_report(rows, format, include_timing)?;
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct HistogramRow {
    bit_shift: u32,
    matrices: usize,
}

#[derive(Serialize)]
struct RangeRow {
    amplified_min: i32,
    amplified_max: i32,
    bits: u32,
}

#[derive(Serialize)]
struct MseRow {
    amplifier: u64,
    mse_vs_float: f64,
}

/// Scale analysis as JSON, or as three tables (histogram, amplified range,
/// MSE by amplifier) in CSV or text form.
pub fn render_analysis(analysis: &ScaleAnalysis, format: ReportFormat) -> Result<String> {
    if format == ReportFormat::Json {
        return Ok(serde_json::to_string_pretty(analysis)? + "\n");
    }
    let histogram: Vec<HistogramRow> = analysis
        .bit_shift_histogram
        .iter()
        .map(|(&bit_shift, &matrices)| HistogramRow {
            bit_shift,
            matrices,
        })
        .collect();
    let range = [RangeRow {
        amplified_min: analysis.amplified_range.0,
        amplified_max: analysis.amplified_range.1,
        bits: analysis.amplified_bits(),
    }];
    let mse: Vec<MseRow> = analysis
        .mse_by_amplifier
        .iter()
        .map(|(&amplifier, &mse_vs_float)| MseRow {
            amplifier,
            mse_vs_float,
        })
        .collect();
    let mut out = emit_report(&histogram, format, false)?;
    out.push('\n');
    out += &emit_report(&range, format, false)?;
    if !mse.is_empty() {
        out.push('\n');
        out += &emit_report(&mse, format, false)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::QuantParams;
    use crate::QuantizedTensor;

    fn amps(values: &[u64]) -> Vec<Amplifier> {
        values.iter().map(|&v| Amplifier::new(v).unwrap()).collect()
    }

    fn llama() -> Vec<FloatTensor> {
        vec![generate_synthetic(256, 32, Distribution::LlamaLike, 7).unwrap()]
    }

    fn record() -> GemmRecord {
        let x = QuantizedTensor::from_parts(
            1,
            1,
            vec![3],
            QuantParams {
                bit_width: BitWidth::Eight,
                scheme: Scheme::Symmetric,
                granularity: Granularity::PerToken,
                scales: vec![1.0],
                zero_points: vec![],
            },
        )
        .unwrap();
        let w = quantize(
            &FloatTensor::new(1, 1, vec![1.0]).unwrap(),
            BitWidth::Four,
            Scheme::Symmetric,
            Granularity::PerChannel,
        )
        .unwrap();
        GemmRecord::from(&crate::gemm::gemm_coarse(&x, &w).unwrap())
    }

    #[test]
    fn gemm_record_json_keys() {
        let json = emit_report(&[record()], ReportFormat::Json, true).unwrap();
        let parsed: Vec<Map<String, Value>> = serde_json::from_str(&json).unwrap();
        let keys: Vec<&str> = parsed[0].keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            [
                "path",
                "M",
                "N",
                "K",
                "group",
                "conversions",
                "imads",
                "max_abs_acc",
                "overflow",
                "wall_ms"
            ]
        );
        assert_eq!(parsed[0]["path"], "coarse");
    }

    #[test]
    fn timing_fields_can_be_dropped() {
        let json = emit_report(&[record()], ReportFormat::Json, false).unwrap();
        assert!(!json.contains("wall_ms"));
        let csv = emit_report(&[record()], ReportFormat::Csv, false).unwrap();
        assert_eq!(
            csv.lines().next().unwrap(),
            "path,M,N,K,group,conversions,imads,max_abs_acc,overflow"
        );
    }

    #[test]
    fn ablation_csv_header() {
        let rows = run_ablation(&llama(), &amps(&[1024]), 128, BitWidth::Four).unwrap();
        assert_eq!(rows.len(), 1);
        let csv = emit_report(&rows, ReportFormat::Csv, true).unwrap();
        assert_eq!(
            csv.lines().next().unwrap(),
            "amplifier,mse_vs_float,mse_vs_original"
        );
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn ablation_rows_sorted_and_trending() {
        let rows = run_ablation(
            &llama(),
            &amps(&[4096, 128, 1024, 512]),
            128,
            BitWidth::Four,
        )
        .unwrap();
        let order: Vec<u64> = rows.iter().map(|r| r.amplifier).collect();
        assert_eq!(order, [128, 512, 1024, 4096]);
        assert!(rows[0].mse_vs_float > rows[1].mse_vs_float);
        assert!(rows[1].mse_vs_float >= rows[2].mse_vs_float);
        assert!(rows[2].mse_vs_float >= rows[3].mse_vs_float);
    }

    #[test]
    fn duplicate_amplifiers_give_identical_rows() {
        let rows = run_ablation(&llama(), &amps(&[1024, 1024]), 128, BitWidth::Four).unwrap();
        assert_eq!(rows[0], rows[1]);
    }

    #[test]
    fn ablation_rejects_empty_lists() {
        assert!(matches!(
            run_ablation(&llama(), &[], 128, BitWidth::Four),
            Err(Error::Parameter(_))
        ));
        assert!(run_ablation(&[], &amps(&[8]), 128, BitWidth::Four).is_err());
    }

    #[test]
    fn empty_report_rejected() {
        let rows: Vec<AblationRow> = vec![];
        assert!(matches!(
            emit_report(&rows, ReportFormat::Json, true),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("missing").join("out.json");
        assert!(matches!(
            write_report(&[record()], ReportFormat::Json, true, target),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn text_table_aligns_columns() {
        let rows = run_ablation(&llama(), &amps(&[128, 1024]), 128, BitWidth::Four).unwrap();
        let text = emit_report(&rows, ReportFormat::TextTable, true).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("amplifier"));
        assert!(lines[1].starts_with("---------"));
    }

    #[test]
    fn bench_counter_ratio() {
        let config = BenchConfig {
            m: 2,
            k: 512,
            n: 64,
            group_size: 128,
            paths: vec![PathKind::FloatScale, PathKind::IntegerScale],
            ..Default::default()
        };
        let report = run_bench(&config).unwrap();
        assert!(report.passed(), "{:?}", report.checks);
        assert_eq!(report.rows[0].conversions / report.rows[1].conversions, 4);
    }

    #[test]
    fn bench_single_path_is_one_row() {
        let config = BenchConfig {
            m: 1,
            k: 128,
            n: 8,
            group_size: 32,
            paths: vec![PathKind::DualQuant],
            ..Default::default()
        };
        let report = run_bench(&config).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.passed());
    }

    #[test]
    fn bench_counters_repeatable() {
        let config = BenchConfig {
            m: 2,
            k: 256,
            n: 16,
            group_size: 64,
            repeats: 5,
            seed: 42,
            ..Default::default()
        };
        let a = run_bench(&config)
            .unwrap()
            .render(ReportFormat::Json, false)
            .unwrap();
        let b = run_bench(&config)
            .unwrap()
            .render(ReportFormat::Json, false)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bench_needs_three_repeats() {
        let config = BenchConfig {
            repeats: 2,
            ..Default::default()
        };
        assert!(matches!(run_bench(&config), Err(Error::Parameter(_))));
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!(
            "text-table".parse::<ReportFormat>().unwrap(),
            ReportFormat::TextTable
        );
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
