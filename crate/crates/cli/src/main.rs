use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};

use pess::air::{entropy_grid, gap_sweep_metric, summarize_gap, RateMetric};
use pess::ess::{find_emax, read_trellis, BoundedTrellis, EssTrellis, StoredTrellis};
use pess::paschain::{simulate_point, FerResult, RunConfig, StopRule};
use pess::reports;

mod manifest;

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "pess", version, about = "Enumerative and partial enumerative sphere shaping toolkit")]
struct Cli {
    /// Write the primary output to this file instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Write a JSON run manifest to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MB and partial MB distributions at a target entropy (JSON).
    Fit(FitArgs),
    /// Gap to AWGN capacity over an entropy grid (CSV).
    GapSweep(GapArgs),
    /// Finite-length rate loss of sphere shapers and CCDM (CSV, or JSON with --json).
    RateLoss(RateLossArgs),
    /// Build or inspect a shaping trellis.
    #[command(subcommand)]
    Trellis(TrellisCommand),
    /// Hex indices on stdin to comma-separated amplitude sequences.
    Shape(ShapeArgs),
    /// Comma-separated amplitude sequences on stdin to hex indices.
    Deshape(ShapeArgs),
    /// Frame error rate of a PAS link over AWGN (CSV).
    Simulate(SimulateArgs),
    /// Distribution, shaper and complexity tables of the reference setup (JSON).
    Tables,
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// Bits per ASK symbol.
    #[arg(long, default_value_t = reports::M)]
    m: u32,
    /// Target amplitude entropy in bits.
    #[arg(long, default_value_t = reports::SHAPING_RATE)]
    entropy: f64,
    /// Only the row with this many shaped bits.
    #[arg(long)]
    shaped_bits: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Metric {
    Bit,
    Symbol,
}

#[derive(Args, Serialize)]
struct GapArgs {
    #[arg(long, default_value_t = reports::M)]
    m: u32,
    /// Target rate in bits per dimension.
    #[arg(long, default_value_t = 3.0)]
    rate: f64,
    /// Shaped amplitude bits (default m−1).
    #[arg(long)]
    shaped_bits: Option<u32>,
    /// Entropy grid spacing.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, value_enum, default_value_t = Metric::Bit)]
    metric: Metric,
}

#[derive(Args, Serialize)]
struct RateLossArgs {
    #[arg(long, default_value_t = reports::M)]
    m: u32,
    /// Amplitude rate in bits per amplitude.
    #[arg(long, default_value_t = reports::SHAPING_RATE)]
    rate: f64,
    #[arg(long, default_value_t = 100)]
    from: usize,
    #[arg(long, default_value_t = 500)]
    to: usize,
    #[arg(long, default_value_t = 20)]
    step: usize,
    /// Emit points and asymptotes as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum TrellisCommand {
    /// Build a trellis and write it in binary form to --output.
    Build(TrellisSpec),
    /// Summary of a trellis from parameters or a file (JSON).
    Info(TrellisSource),
}

#[derive(Args, Serialize)]
struct TrellisSpec {
    /// Block length.
    #[arg(short = 'n', long)]
    block_length: Option<usize>,
    /// Amplitude alphabet, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
    amplitudes: Vec<u32>,
    /// Energy bound.
    #[arg(long, conflicts_with = "input_bits")]
    e_max: Option<u64>,
    /// Smallest energy bound carrying this many bits.
    #[arg(long)]
    input_bits: Option<u64>,
    /// Bounded precision: mantissa width.
    #[arg(long, requires = "exponent_bits")]
    mantissa_bits: Option<u32>,
    /// Bounded precision: exponent width.
    #[arg(long, requires = "mantissa_bits")]
    exponent_bits: Option<u32>,
}

#[derive(Args, Serialize)]
struct TrellisSource {
    /// Trellis file written by `trellis build`.
    #[arg(long, conflicts_with_all = ["block_length", "e_max", "input_bits"])]
    trellis: Option<PathBuf>,
    #[command(flatten)]
    spec: TrellisSpec,
}

#[derive(Args, Serialize)]
struct ShapeArgs {
    #[command(flatten)]
    source: TrellisSource,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    shaped_bits: Option<u32>,
    /// LDPC code rate: 1/2, 2/3, 3/4 or 5/6.
    #[arg(long)]
    code_rate: Option<String>,
    #[arg(long)]
    e_max: Option<u64>,
    #[arg(long)]
    input_bits: Option<u64>,
    #[arg(long, requires = "exponent_bits")]
    mantissa_bits: Option<u32>,
    #[arg(long, requires = "mantissa_bits")]
    exponent_bits: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// SNR points in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<pess::Error> for Failure {
    fn from(e: pess::Error) -> Self {
        match e {
            pess::Error::Numerical(_) => Failure::Numerical(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Primary artifact of a command plus what goes into its manifest.
struct Outcome {
    command: &'static str,
    config: Value,
    seed: Option<u64>,
    body: Vec<u8>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable arguments")
}

fn pretty<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Writes via a temporary file so a failed run never leaves a truncated artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn fit(args: &FitArgs) -> CliResult<Outcome> {
    let rows: Vec<_> = reports::pmf_table(args.m, args.entropy)?
        .into_iter()
        .filter(|r| args.shaped_bits.is_none_or(|s| s == r.shaped_bits))
        .collect();
    if rows.is_empty() {
        return Err(Failure::Config(format!("no distribution with {:?} shaped bits", args.shaped_bits)));
    }
    Ok(Outcome {
        command: "fit",
        config: to_value(args),
        seed: None,
        body: pretty(&rows)?,
    })
}

fn gap(args: &GapArgs) -> CliResult<Outcome> {
    let s = args.shaped_bits.unwrap_or(args.m.saturating_sub(1));
    if !(args.step > 0.0) {
        return Err(Failure::Config("step must be positive".into()));
    }
    let metric = match args.metric {
        Metric::Bit => RateMetric::BitMetric,
        Metric::Symbol => RateMetric::SymbolMetric,
    };
    let grid = entropy_grid(args.rate, args.m, args.step);
    let curve = gap_sweep_metric(args.m, s, args.rate, &grid, metric)?;
    if let Some(best) = summarize_gap(&curve) {
        eprintln!(
            "optimum H(X) = {:.2}, gap {:.3} dB, gain over uniform {:.3} dB",
            best.best_h_x, best.best_delta_snr_db, best.gain_db
        );
    }
    Ok(Outcome {
        command: "gap-sweep",
        config: to_value(args),
        seed: None,
        body: reports::gap_csv(&curve).into_bytes(),
    })
}

fn rate_loss(args: &RateLossArgs) -> CliResult<Outcome> {
    if args.step == 0 || args.from == 0 || args.from > args.to {
        return Err(Failure::Config("need 0 < from <= to and a positive step".into()));
    }
    let ns: Vec<usize> = (args.from..=args.to).step_by(args.step).collect();
    let curves = reports::rate_loss_curves(args.m, args.rate, &ns)?;
    let body = if args.json {
        pretty(&curves)?
    } else {
        for (scheme, a) in &curves.asymptotes {
            eprintln!("{scheme} asymptote {}", reports::fmt_sig(*a));
        }
        reports::rate_loss_csv(&curves.points).into_bytes()
    };
    Ok(Outcome {
        command: "rate-loss",
        config: to_value(args),
        seed: None,
        body,
    })
}

fn build_trellis(spec: &TrellisSpec) -> CliResult<StoredTrellis> {
    let n = spec
        .block_length
        .ok_or_else(|| Failure::Config("missing --block-length (or --trellis)".into()))?;
    let e_max = match (spec.e_max, spec.input_bits) {
        (Some(e), None) => e,
        (None, Some(k)) => find_emax(n, &spec.amplitudes, k)?,
        _ => return Err(Failure::Config("give exactly one of --e-max and --input-bits".into())),
    };
    Ok(match (spec.mantissa_bits, spec.exponent_bits) {
        (Some(nm), Some(np)) => StoredTrellis::Bounded(BoundedTrellis::build(n, &spec.amplitudes, e_max, nm, np)?),
        _ => StoredTrellis::Exact(EssTrellis::build(n, &spec.amplitudes, e_max)?),
    })
}

fn load_trellis(source: &TrellisSource) -> CliResult<StoredTrellis> {
    match &source.trellis {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            Ok(read_trellis(io::BufReader::new(file))?)
        }
        None => build_trellis(&source.spec),
    }
}

#[derive(Serialize)]
struct TrellisInfo {
    mode: &'static str,
    block_length: usize,
    amplitudes: Option<Vec<u32>>,
    energies: Vec<u64>,
    e_max: u64,
    levels: usize,
    sequences: String,
    input_bits: u64,
    mantissa_bits: Option<u32>,
    exponent_bits: Option<u32>,
    complexity: pess::ess::ComplexityReport,
}

fn trellis_info(t: &StoredTrellis) -> TrellisInfo {
    let counts = t.as_counts();
    let grid = counts.grid();
    let (mode, nm, np) = match t {
        StoredTrellis::Exact(_) => ("exact", None, None),
        StoredTrellis::Bounded(b) => ("bounded", Some(b.mantissa_bits()), Some(b.exponent_bits())),
    };
    let n = grid.block_length();
    let k = counts.input_bits();
    TrellisInfo {
        mode,
        block_length: n,
        amplitudes: grid.amplitudes().map(<[u32]>::to_vec),
        energies: grid.energies().to_vec(),
        e_max: grid.e_max(),
        levels: grid.levels(),
        sequences: counts.num_sequences().to_string(),
        input_bits: k,
        mantissa_bits: nm,
        exponent_bits: np,
        complexity: pess::ess::complexity_report(
            grid.levels() as u64,
            n as u64,
            u64::from(nm.unwrap_or(0)),
            u64::from(np.unwrap_or(0)),
            grid.alphabet_size() as u64,
            k as f64 / n as f64,
        ),
    }
}

fn trellis(cmd: &TrellisCommand, output: Option<&Path>) -> CliResult<(Outcome, bool)> {
    match cmd {
        TrellisCommand::Build(spec) => {
            let path = output.ok_or_else(|| Failure::Config("trellis build needs --output".into()))?;
            let t = build_trellis(spec)?;
            let mut bytes = Vec::new();
            match &t {
                StoredTrellis::Exact(e) => e.write_to(&mut bytes)?,
                StoredTrellis::Bounded(b) => b.write_to(&mut bytes)?,
            }
            write_atomic(path, &bytes)?;
            io::stdout().write_all(&pretty(&trellis_info(&t))?)?;
            let outcome = Outcome {
                command: "trellis build",
                config: to_value(spec),
                seed: None,
                body: Vec::new(),
            };
            Ok((outcome, true))
        }
        TrellisCommand::Info(source) => {
            let t = load_trellis(source)?;
            let outcome = Outcome {
                command: "trellis info",
                config: to_value(source),
                seed: None,
                body: pretty(&trellis_info(&t))?,
            };
            Ok((outcome, false))
        }
    }
}

fn read_stdin() -> CliResult<String> {
    let mut input = String::new();
    io::stdin().read_to_string(&mut input)?;
    Ok(input)
}

fn lines(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn shape(args: &ShapeArgs) -> CliResult<Outcome> {
    let t = load_trellis(&args.source)?;
    let counts = t.as_counts();
    let mut out = String::new();
    for (no, line) in lines(&read_stdin()?) {
        let digits = line.trim_start_matches("0x");
        let index = BigUint::parse_bytes(digits.as_bytes(), 16)
            .ok_or_else(|| Failure::Config(format!("line {no}: not a hex index: {line}")))?;
        let seq = counts
            .shape(&index)
            .map_err(|e| Failure::Config(format!("line {no}: {e}")))?;
        let text: Vec<String> = seq.iter().map(u32::to_string).collect();
        out.push_str(&text.join(","));
        out.push('\n');
    }
    Ok(Outcome {
        command: "shape",
        config: to_value(args),
        seed: None,
        body: out.into_bytes(),
    })
}

fn deshape(args: &ShapeArgs) -> CliResult<Outcome> {
    let t = load_trellis(&args.source)?;
    let counts = t.as_counts();
    let mut out = String::new();
    for (no, line) in lines(&read_stdin()?) {
        let seq = line
            .split(',')
            .map(|v| v.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Config(format!("line {no}: {e}")))?;
        let index = counts
            .deshape(&seq)
            .map_err(|e| Failure::Config(format!("line {no}: {e}")))?;
        out.push_str(&index.to_str_radix(16));
        out.push('\n');
    }
    Ok(Outcome {
        command: "deshape",
        config: to_value(args),
        seed: None,
        body: out.into_bytes(),
    })
}

/// Config file contents with flag overrides applied.
fn run_config(args: &SimulateArgs) -> CliResult<RunConfig> {
    let mut value = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => json!({}),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Failure::Config("run configuration must be a JSON object".into()))?;
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            obj.insert(key.to_string(), v);
        }
    };
    set("m", args.m.map(Value::from));
    set("shaped_bits", args.shaped_bits.map(Value::from));
    set("code_rate", args.code_rate.clone().map(Value::from));
    set("seed", args.seed.map(Value::from));
    set("max_iter", args.max_iter.map(Value::from));
    set("snr_db", args.snr.clone().map(Value::from));
    if let Some(e) = args.e_max {
        set("e_max", Some(Value::from(e)));
        obj.remove("input_bits");
    }
    if let Some(k) = args.input_bits {
        obj.insert("input_bits".into(), Value::from(k));
        obj.remove("e_max");
    }
    if let (Some(nm), Some(np)) = (args.mantissa_bits, args.exponent_bits) {
        obj.insert(
            "precision".into(),
            json!({"mode": "bounded", "mantissa_bits": nm, "exponent_bits": np}),
        );
    }
    if args.min_errors.is_some() || args.max_frames.is_some() {
        let stop = obj
            .entry("stop")
            .or_insert_with(|| to_value(&StopRule::default()));
        let stop = stop
            .as_object_mut()
            .ok_or_else(|| Failure::Config("stop must be a JSON object".into()))?;
        if let Some(v) = args.min_errors {
            stop.insert("min_frame_errors".into(), Value::from(v));
        }
        if let Some(v) = args.max_frames {
            stop.insert("max_frames".into(), Value::from(v));
        }
    }
    Ok(serde_json::from_value(value)?)
}

fn simulate(args: &SimulateArgs) -> CliResult<Outcome> {
    let run = run_config(args)?;
    let cfg = run.build()?;
    let id = cfg.id();
    let mut results: Vec<FerResult> = Vec::new();
    for (i, &snr) in run.snr_db.iter().enumerate() {
        let r = simulate_point(&cfg, snr, i as u64, &run.stop, run.seed)?;
        eprintln!("{id} {snr} dB: {}/{} frame errors", r.frame_errors, r.frames);
        results.push(r);
    }
    Ok(Outcome {
        command: "simulate",
        config: to_value(&run),
        seed: Some(run.seed),
        body: reports::fer_csv(&results, &id).into_bytes(),
    })
}

fn tables() -> CliResult<Outcome> {
    Ok(Outcome {
        command: "tables",
        config: json!({}),
        seed: None,
        body: pretty(&reports::reference_tables()?)?,
    })
}

fn run(cli: &Cli) -> CliResult<()> {
    let output = cli.output.as_deref();
    let (outcome, written) = match &cli.command {
        Command::Fit(a) => (fit(a)?, false),
        Command::GapSweep(a) => (gap(a)?, false),
        Command::RateLoss(a) => (rate_loss(a)?, false),
        Command::Trellis(c) => trellis(c, output)?,
        Command::Shape(a) => (shape(a)?, false),
        Command::Deshape(a) => (deshape(a)?, false),
        Command::Simulate(a) => (simulate(a)?, false),
        Command::Tables => (tables()?, false),
    };
    let mut outputs = Vec::new();
    match output {
        Some(path) => {
            if !written {
                write_atomic(path, &outcome.body)?;
            }
            outputs.push(path.display().to_string());
        }
        None => io::stdout().write_all(&outcome.body)?,
    }
    if let Some(path) = &cli.manifest {
        let m = RunManifest::new(outcome.command, &outcome.config, outcome.seed, outputs);
        write_atomic(path, &pretty(&m)?)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(3)
        }
    }
}
