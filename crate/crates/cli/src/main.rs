//! `intscale` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or configuration,
//! 3 accumulator overflow in strict mode.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use intscale::report::render_analysis;
use intscale::tensor_io::TensorPayload;
use intscale::{
    analyze_scales, dequantize, dual_quantize, emit_report, generate_synthetic, quantize,
    read_tensor, reconstruction_mse, run_ablation, run_bench, write_tensor, Amplifier,
    AmplifierChoice, BenchConfig, BitWidth, Distribution, EngineConfig, Error, Fallback,
    FloatTensor, GemmEngine, GemmPath, GemmRecord, Granularity, IntegerScaleSet, OverflowMode,
    PathKind, QuantizedTensor, ReportFormat, Result, Scheme,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Quantize,
    Dequantize,
    Gemm,
    SearchAmplifier,
    Analyze,
    Ablation,
    Overflow,
    Bench,
}

#[derive(Debug, Parser)]
#[command(
    name = "intscale",
    version,
    about = "Group quantization and integer-scale GEMM analysis"
)]
struct Args {
    #[arg(long, value_enum)]
    command: Command,

    /// Input tensor (QTNS) for quantize and dequantize.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Weight tensors (QTNS, K x N); repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<PathBuf>,

    /// Activation tensor (QTNS, M x K).
    #[arg(long)]
    activations: Option<PathBuf>,

    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,

    #[arg(long, default_value_t = 4, value_parser = parse_bits)]
    bits_w: u8,
    #[arg(long, default_value_t = 8, value_parser = parse_bits)]
    bits_a: u8,

    #[arg(long, default_value = "symmetric")]
    scheme: String,

    #[arg(long, default_value_t = 128)]
    group: usize,

    /// per-tensor, per-token, per-channel or group:N (default: group of --group).
    #[arg(long)]
    granularity: Option<String>,

    /// Power of two, `heuristic`, or `default` (1024).
    #[arg(long, default_value = "default")]
    amplifier: String,

    /// Amplifiers swept by analyze and ablation.
    #[arg(long, value_delimiter = ',', default_value = "128,512,1024,4096")]
    amplifiers: Vec<u64>,

    /// float-scale, integer-scale, coarse or dual-quant; bench accepts a
    /// comma-separated list.
    #[arg(long, value_delimiter = ',')]
    path: Vec<String>,

    #[arg(long, default_value = "strict")]
    overflow: String,

    #[arg(long, default_value = "none")]
    fallback: String,

    /// Integer scale used for every group by overflow when no weights are given
    /// (default: the amplifier, i.e. a float scale of 1).
    #[arg(long)]
    int_scale: Option<i32>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Synthetic source when no tensor file is given: gaussian:SIGMA,
    /// uniform:LO:HI or llama_like.
    #[arg(long)]
    dist: Option<String>,

    /// Number of synthetic weight matrices for analyze and ablation.
    #[arg(long, default_value_t = 1)]
    count: usize,

    #[arg(long, default_value_t = 1)]
    threads: usize,

    #[arg(long, default_value_t = 3)]
    repeats: usize,

    /// Output file; reports go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// json, csv or text.
    #[arg(long, default_value = "json")]
    format: String,

    /// Leave wall-clock fields out of reports.
    #[arg(long)]
    no_timing: bool,
}

fn parse_bits(s: &str) -> std::result::Result<u8, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("bit width must be 4 or 8, got {s}")),
    }
}

fn bit_width(bits: u8) -> BitWidth {
    if bits == 4 {
        BitWidth::Four
    } else {
        BitWidth::Eight
    }
}

impl Args {
    fn format(&self) -> Result<ReportFormat> {
        self.format.parse()
    }

    fn granularity(&self) -> Result<Granularity> {
        match &self.granularity {
            Some(g) => g.parse(),
            None => Ok(Granularity::group(self.group)),
        }
    }

    fn amplifier(&self) -> Result<AmplifierChoice> {
        self.amplifier.parse()
    }

    fn distribution(&self, default: &str) -> Result<Distribution> {
        self.dist.as_deref().unwrap_or(default).parse()
    }

    fn engine(&self) -> Result<GemmEngine> {
        GemmEngine::new(EngineConfig {
            overflow: self.overflow.parse()?,
            threads: self.threads,
            record_trace: false,
        })
    }

    fn path_kinds(&self, default: &[PathKind]) -> Result<Vec<PathKind>> {
        if self.path.is_empty() {
            return Ok(default.to_vec());
        }
        self.path.iter().map(|p| p.parse()).collect()
    }

    /// Weight matrices from `--weights`, or `--count` synthetic K x N matrices.
    fn weight_tensors(&self, default_dist: &str) -> Result<Vec<FloatTensor>> {
        if !self.weights.is_empty() {
            return self
                .weights
                .iter()
                .map(|p| read_tensor(p)?.into_real())
                .collect();
        }
        let dist = self.distribution(default_dist)?;
        let (k, n) = (self.k.unwrap_or(4096), self.n.unwrap_or(4096));
        (0..self.count as u64)
            .map(|i| generate_synthetic(k, n, dist, self.seed.wrapping_add(i)))
            .collect()
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(Error::from),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

/// Real-valued tensors are quantized as requested; integer files are loaded
/// with their parameter sidecar.
fn load_operand(
    path: &Path,
    quantize_as: impl FnOnce(&FloatTensor) -> Result<QuantizedTensor>,
) -> Result<QuantizedTensor> {
    match read_tensor(path)? {
        TensorPayload::Real(t) => quantize_as(&t),
        TensorPayload::Int(_) => QuantizedTensor::load(path),
    }
}

fn cmd_quantize(args: &Args) -> Result<()> {
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| Error::Parameter("quantize needs --out".into()))?;
    let x = match &args.input {
        Some(path) => read_tensor(path)?.into_real()?,
        None => generate_synthetic(
            args.k.unwrap_or(256),
            args.n.unwrap_or(64),
            args.distribution("gaussian:1")?,
            args.seed,
        )?,
    };
    let q = quantize(
        &x,
        bit_width(args.bits_w),
        args.scheme.parse()?,
        args.granularity()?,
    )?;
    q.save(out)?;
    #[derive(Serialize)]
    struct Summary {
        rows: usize,
        cols: usize,
        bits: u32,
        units: usize,
        mse: f64,
    }
    let summary = Summary {
        rows: q.rows(),
        cols: q.cols(),
        bits: q.params().bit_width.bits(),
        units: q.params().scales.len(),
        mse: reconstruction_mse(&x, &dequantize(&q))?,
    };
    print!(
        "{}",
        emit_report(&[summary], args.format()?, !args.no_timing)?
    );
    Ok(())
}

fn cmd_dequantize(args: &Args) -> Result<()> {
    let input = args
        .input
        .as_ref()
        .ok_or_else(|| Error::Parameter("dequantize needs --input".into()))?;
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| Error::Parameter("dequantize needs --out".into()))?;
    let q = QuantizedTensor::load(input)?;
    write_tensor(&TensorPayload::Real(dequantize(&q)), out)
}

enum WeightInput {
    Real(FloatTensor),
    /// Integer file with its parameter sidecar, used as stored.
    Quantized(QuantizedTensor),
}

fn cmd_gemm(args: &Args) -> Result<()> {
    let kinds = args.path_kinds(&[PathKind::IntegerScale])?;
    let [kind] = kinds[..] else {
        return Err(Error::Parameter("gemm runs exactly one --path".into()));
    };
    let loaded = match args.weights.as_slice() {
        [] => None,
        [p] => Some(match read_tensor(p)? {
            TensorPayload::Real(t) => WeightInput::Real(t),
            TensorPayload::Int(_) => WeightInput::Quantized(QuantizedTensor::load(p)?),
        }),
        _ => return Err(Error::Parameter("gemm takes one weight tensor".into())),
    };
    let weight_rows = loaded.as_ref().map(|w| match w {
        WeightInput::Real(t) => t.rows(),
        WeightInput::Quantized(q) => q.rows(),
    });
    let act_bits = bit_width(args.bits_a);
    let quantize_act =
        |t: &FloatTensor| quantize(t, act_bits, Scheme::Symmetric, Granularity::PerToken);
    let x = match &args.activations {
        Some(p) => load_operand(p, quantize_act)?,
        None => quantize_act(&generate_synthetic(
            args.m.unwrap_or(4),
            weight_rows.or(args.k).unwrap_or(256),
            args.distribution("gaussian:1")?,
            args.seed,
        )?)?,
    };
    let weight = match loaded {
        Some(w) => w,
        None => WeightInput::Real(generate_synthetic(
            x.cols(),
            args.n.unwrap_or(64),
            args.distribution("gaussian:0.02")?,
            args.seed.wrapping_add(1),
        )?),
    };
    let quantize_weight = |gran| -> Result<QuantizedTensor> {
        match &weight {
            WeightInput::Real(t) => quantize(t, bit_width(args.bits_w), Scheme::Symmetric, gran),
            WeightInput::Quantized(q) => Ok(q.clone()),
        }
    };
    let (w, path) = match kind {
        PathKind::FloatScale => (quantize_weight(args.granularity()?)?, GemmPath::FloatScale),
        PathKind::IntegerScale => {
            let w = quantize_weight(args.granularity()?)?;
            let set = IntegerScaleSet::for_weight(&w, args.amplifier()?)?;
            (w, GemmPath::IntegerScale(set))
        }
        PathKind::Coarse => (quantize_weight(Granularity::PerChannel)?, GemmPath::Coarse),
        PathKind::DualQuant => {
            let WeightInput::Real(t) = &weight else {
                return Err(Error::Parameter(
                    "dual-quant needs real-valued weights".into(),
                ));
            };
            let d = dual_quantize(t, args.group)?;
            (d.outer, GemmPath::DualQuant(d.inner))
        }
    };
    let fallback: Fallback = args.fallback.parse()?;
    let result = args.engine()?.run_layer(&x, &w, &path, fallback)?;
    args.emit(&emit_report(
        &[GemmRecord::from(&result)],
        args.format()?,
        !args.no_timing,
    )?)
}

fn cmd_search_amplifier(args: &Args) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        matrix: usize,
        amplifier: u64,
        bit_shift: u32,
        min_scale: f32,
        int_scale_min: i32,
        int_scale_max: i32,
    }
    let rows = args
        .weight_tensors("llama_like")?
        .iter()
        .enumerate()
        .map(|(matrix, w)| {
            let q = quantize(
                w,
                bit_width(args.bits_w),
                Scheme::Symmetric,
                args.granularity()?,
            )?;
            let scales = &q.params().scales;
            let set = IntegerScaleSet::for_weight(&q, AmplifierChoice::Heuristic)?;
            let (lo, hi) = set.range();
            Ok(Row {
                matrix,
                amplifier: set.amplifier().value(),
                bit_shift: set.amplifier().exponent(),
                min_scale: scales.iter().copied().fold(f32::INFINITY, f32::min),
                int_scale_min: lo,
                int_scale_max: hi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    args.emit(&emit_report(&rows, args.format()?, !args.no_timing)?)
}

fn amplifier_list(args: &Args) -> Result<Vec<Amplifier>> {
    args.amplifiers.iter().map(|&a| Amplifier::new(a)).collect()
}

fn cmd_analyze(args: &Args) -> Result<()> {
    let weights = args.weight_tensors("llama_like")?;
    let analysis = analyze_scales(
        &weights,
        bit_width(args.bits_w),
        args.group,
        &amplifier_list(args)?,
    )?;
    args.emit(&render_analysis(&analysis, args.format()?)?)
}

fn cmd_ablation(args: &Args) -> Result<()> {
    let weights = args.weight_tensors("llama_like")?;
    let rows = run_ablation(
        &weights,
        &amplifier_list(args)?,
        args.group,
        bit_width(args.bits_w),
    )?;
    args.emit(&emit_report(&rows, args.format()?, !args.no_timing)?)
}

fn cmd_overflow(args: &Args) -> Result<()> {
    let act_bits = bit_width(args.bits_a);
    let weight_bits = bit_width(args.bits_w);
    let report = if args.weights.is_empty() && args.dist.is_none() {
        let k = args.k.unwrap_or(4096);
        if args.group == 0 || !k.is_multiple_of(args.group) {
            return Err(Error::Parameter(format!(
                "group size {} must divide K = {k}",
                args.group
            )));
        }
        let amp = match args.amplifier()? {
            AmplifierChoice::Fixed(a) => a,
            AmplifierChoice::Heuristic => {
                return Err(Error::Parameter(
                    "a heuristic amplifier needs --weights or --dist".into(),
                ))
            }
        };
        let scale = match args.int_scale {
            Some(s) => s,
            None => i32::try_from(amp.value())
                .map_err(|_| Error::Parameter(format!("amplifier {amp} exceeds i32")))?,
        };
        intscale::overflow_analyzer(
            k,
            args.group,
            act_bits,
            weight_bits,
            &vec![scale; k / args.group],
        )?
    } else {
        // static bound plus the largest accumulator seen on a permissive run
        let w = args
            .weight_tensors("llama_like")?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Parameter("no weights".into()))?;
        let wq = quantize(&w, weight_bits, Scheme::Symmetric, args.granularity()?)?;
        let set = IntegerScaleSet::for_weight(&wq, args.amplifier()?)?;
        let x = match &args.activations {
            Some(p) => load_operand(p, |t| {
                quantize(t, act_bits, Scheme::Symmetric, Granularity::PerToken)
            })?,
            None => quantize(
                &generate_synthetic(
                    args.m.unwrap_or(1),
                    wq.rows(),
                    Distribution::Gaussian { sigma: 1.0 },
                    args.seed,
                )?,
                act_bits,
                Scheme::Symmetric,
                Granularity::PerToken,
            )?,
        };
        let engine = GemmEngine::new(EngineConfig {
            overflow: OverflowMode::Permissive,
            threads: args.threads,
            record_trace: false,
        })?;
        let r = engine.integer_scale(&x, &wq, &set)?;
        r.overflow
            .ok_or_else(|| Error::Parameter("no accumulator report".into()))?
    };
    args.emit(&emit_report(&[report], args.format()?, !args.no_timing)?)
}

fn cmd_bench(args: &Args) -> Result<()> {
    let config = BenchConfig {
        m: args.m.unwrap_or(16),
        k: args.k.unwrap_or(4096),
        n: args.n.unwrap_or(4096),
        group_size: args.group,
        paths: args.path_kinds(&PathKind::ALL)?,
        repeats: args.repeats,
        seed: args.seed,
        amplifier: args.amplifier()?,
        engine: EngineConfig {
            overflow: args.overflow.parse()?,
            threads: args.threads,
            record_trace: false,
        },
    };
    let report = run_bench(&config)?;
    args.emit(&report.render(args.format()?, !args.no_timing)?)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Error::Value("benchmark counter checks failed".into()))
    }
}

fn run(args: &Args) -> Result<()> {
    match args.command {
        Command::Quantize => cmd_quantize(args),
        Command::Dequantize => cmd_dequantize(args),
        Command::Gemm => cmd_gemm(args),
        Command::SearchAmplifier => cmd_search_amplifier(args),
        Command::Analyze => cmd_analyze(args),
        Command::Ablation => cmd_ablation(args),
        Command::Overflow => cmd_overflow(args),
        Command::Bench => cmd_bench(args),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("intscale: {e}");
            ExitCode::from(match e {
                Error::Overflow { .. } => 3,
                Error::Io(_) => 1,
                _ => 2,
            })
        }
    }
}
