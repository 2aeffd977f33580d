//! `hdmi`: marginal screening, simulation, evaluation, conversion and timing.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdmi_core::bench::{run_bench, write_bench_csv};
use hdmi_core::evaluation::{auroc, selection_confusion, LabeledScores};
use hdmi_core::io::{convert_to_binary, open_dataset, read_csv, CsvOptions, DatasetHandle};
use hdmi_core::mi::MarginalMode;
use hdmi_core::screening::{screen_with_outcome, ScreeningConfig};
use hdmi_core::simulation::{simulate, OutcomeVariant, SimulationMode, SimulationSpec, SnrScaling};
use hdmi_core::{BandwidthRule, HdmiError, Kernel, Method, OutcomeKind};

#[derive(Parser)]
#[command(name = "hdmi", version, about = "High-dimensional marginal association screening")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every feature column against one outcome.
    Screen(ScreenArgs),
    /// Draw a synthetic outcome from a design matrix.
    Simulate(SimulateArgs),
    /// AUROC of a screening result against simulated ground truth.
    Evaluate(EvaluateArgs),
    /// Convert a CSV matrix to the memory-mappable binary format.
    Convert(ConvertArgs),
    /// Time screening over growing fractions of the features.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fftkde,
    Binning,
    Knn,
    Pearson,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fftkde => Method::Fftkde,
            MethodArg::Binning => Method::Binning,
            MethodArg::Knn => Method::Knn,
            MethodArg::Pearson => Method::Pearson,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutcomeTypeArg {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Epanechnikov,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum BandwidthArg {
    Isj,
    Silverman,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginalArg {
    Joint,
    Independent,
}

#[derive(Args)]
struct InputArgs {
    /// CSV with a header row, or a binary matrix written by `convert`.
    #[arg(long)]
    input: PathBuf,
    /// CSV field delimiter.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

impl InputArgs {
    fn csv_options(&self) -> Result<CsvOptions, HdmiError> {
        csv_options(self.delimiter)
    }

    fn open(&self) -> Result<DatasetHandle, HdmiError> {
        open_dataset(&self.input, &self.csv_options()?)
    }
}

fn csv_options(delimiter: char) -> Result<CsvOptions, HdmiError> {
    if !delimiter.is_ascii() {
        return Err(HdmiError::InvalidInput(format!("delimiter '{delimiter}' is not ASCII")));
    }
    Ok(CsvOptions { delimiter: delimiter as u8, ..CsvOptions::default() })
}

#[derive(Args)]
struct OutcomeArgs {
    /// Outcome column (name, or zero-based index).
    #[arg(long, required_unless_present = "outcome_file")]
    outcome_col: Option<String>,
    /// CSV holding the outcome instead (column `y`, else the first column).
    #[arg(long, conflicts_with = "outcome_col")]
    outcome_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "continuous")]
    outcome_type: OutcomeTypeArg,
    /// Columns left out of the screen; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
}

#[derive(Args)]
struct EstimatorArgs {
    #[arg(long, env = "HDMI_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid nodes per axis (power of two, at least 16).
    #[arg(long, value_parser = parse_grid)]
    grid_size: Option<usize>,
    /// Neighbour count for the kNN estimator.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long, value_enum, default_value = "epanechnikov")]
    kernel: KernelArg,
    #[arg(long, value_enum, default_value = "isj")]
    bandwidth: BandwidthArg,
    /// Fixed bin count for the binning estimator.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    bins: Option<u32>,
    /// Marginals of the FFT-KDE estimator: summed from the joint, or fitted separately.
    #[arg(long, value_enum, default_value = "joint")]
    marginals: MarginalArg,
}

impl EstimatorArgs {
    fn config(&self, method: Method, outcome: &OutcomeArgs) -> ScreeningConfig {
        let workers = self
            .workers
            .map(|w| w as usize)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        ScreeningConfig {
            method,
            outcome_kind: match outcome.outcome_type {
                OutcomeTypeArg::Continuous => OutcomeKind::Continuous,
                OutcomeTypeArg::Binary => OutcomeKind::Binary,
            },
            outcome_column: outcome.outcome_col.clone(),
            exclude: outcome.exclude.clone(),
            workers,
            seed: self.seed,
            kernel: match self.kernel {
                KernelArg::Epanechnikov => Kernel::Epanechnikov,
                KernelArg::Gaussian => Kernel::Gaussian,
            },
            bandwidth: match self.bandwidth {
                BandwidthArg::Isj => BandwidthRule::Isj,
                BandwidthArg::Silverman => BandwidthRule::Silverman,
            },
            grid_size: self.grid_size,
            k: self.k as usize,
            bins: self.bins.map(|b| b as usize),
            marginals: match self.marginals {
                MarginalArg::Joint => MarginalMode::Joint,
                MarginalArg::Independent => MarginalMode::Independent,
            },
        }
    }
}

#[derive(Args)]
struct ScreenArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    outcome: OutcomeArgs,
    #[arg(long, value_enum, default_value = "fftkde")]
    method: MethodArg,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Score table (CSV).
    #[arg(long)]
    output: PathBuf,
    /// Also write the scores and configuration as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Timing file; defaults to `<output>.timing.json`.
    #[arg(long)]
    timing: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Linear,
    Nonlinear,
    Null,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Continuous,
    BinaryOriginal,
    BinaryTranslated,
}

#[derive(Clone, Copy, ValueEnum)]
enum SnrScalingArg {
    Verbatim,
    PerObservation,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    p_true: u32,
    #[arg(long, value_enum, default_value = "linear")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "continuous")]
    outcome: VariantArg,
    #[arg(long, default_value_t = 3.0)]
    snr: f64,
    #[arg(long, value_enum, default_value = "verbatim")]
    snr_scaling: SnrScalingArg,
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    toeplitz_rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outcome CSV (single column `y`).
    #[arg(long)]
    output: PathBuf,
    /// Ground-truth CSV (`index,name,beta`).
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Score table written by `screen`.
    #[arg(long)]
    scores: PathBuf,
    /// Ground-truth CSV written by `simulate`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

fn parse_grid(s: &str) -> Result<usize, String> {
    let g: usize = s.trim().parse().map_err(|_| format!("'{s}' is not a positive integer"))?;
    if g >= 16 && g.is_power_of_two() {
        Ok(g)
    } else {
        Err(format!("grid size {g} is not a power of two >= 16"))
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if f > 0.0 && f <= 1.0 {
        Ok(f)
    } else {
        Err(format!("fraction {f} outside (0, 1]"))
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    outcome: OutcomeArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fftkde,binning,knn,pearson")]
    methods: Vec<MethodArg>,
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction, default_value = "0.25,0.5,0.75,1")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    replications: u32,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long)]
    output: PathBuf,
}

/// First column named `y`, else the first column, of a headed CSV.
fn read_outcome_file(path: &Path, rows: usize, delimiter: char) -> Result<Vec<f64>, HdmiError> {
    let data = read_csv(path, &csv_options(delimiter)?)?;
    let j = data.column_index("y").unwrap_or(0);
    let y = data.column(j)?;
    if y.len() != rows {
        return Err(HdmiError::InvalidInput(format!(
            "outcome file has {} rows, dataset has {rows}",
            y.len()
        )));
    }
    Ok(y)
}

/// Outcome vector plus the columns kept out of the screen.
fn resolve_outcome(
    data: &DatasetHandle,
    input: &InputArgs,
    outcome: &OutcomeArgs,
) -> Result<(Vec<f64>, Vec<usize>), HdmiError> {
    let mut skip = Vec::new();
    for name in &outcome.exclude {
        let j = data
            .column_index(name)
            .ok_or_else(|| HdmiError::InvalidInput(format!("excluded column '{name}' not found")))?;
        skip.push(j);
    }
    let y = match (&outcome.outcome_col, &outcome.outcome_file) {
        (Some(col), _) => {
            let j = data.resolve_column(col)?;
            skip.push(j);
            data.column(j)?
        }
        (None, Some(path)) => read_outcome_file(path, data.rows(), input.delimiter)?,
        (None, None) => return Err(HdmiError::InvalidInput("no outcome given".into())),
    };
    Ok((y, skip))
}

fn run_screen(args: &ScreenArgs) -> Result<String, HdmiError> {
    let data = args.input.open()?;
    let (y, skip) = resolve_outcome(&data, &args.input, &args.outcome)?;
    let config = args.estimator.config(args.method.into(), &args.outcome);
    let report = screen_with_outcome(&data, &y, &skip, &config)?;
    report.write_csv_file(&args.output)?;
    if let Some(json) = &args.json {
        std::fs::write(json, report.to_json()?)?;
    }
    let timing = args.timing.clone().unwrap_or_else(|| sibling(&args.output, "timing.json"));
    std::fs::write(&timing, report.timing_json()?)?;
    let flagged = report.scores.iter().filter(|s| s.flag != hdmi_core::ScoreFlag::Ok).count();
    Ok(format!(
        "screen: {} features ({} flagged), method {}, {} workers, {:.3} s -> {}",
        report.scores.len(),
        flagged,
        config.method,
        report.workers,
        report.seconds,
        args.output.display()
    ))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, HdmiError> {
    Ok(csv::Writer::from_writer(std::fs::File::create(path)?))
}

fn csv_err(e: csv::Error) -> HdmiError {
    HdmiError::InvalidInput(e.to_string())
}

fn run_simulate(args: &SimulateArgs) -> Result<String, HdmiError> {
    let data = args.input.open()?;
    let spec = SimulationSpec {
        p_true: args.p_true as usize,
        mode: match args.mode {
            ModeArg::Linear => SimulationMode::Linear,
            ModeArg::Nonlinear => SimulationMode::Nonlinear,
            ModeArg::Null => SimulationMode::Null,
        },
        outcome: match args.outcome {
            VariantArg::Continuous => OutcomeVariant::Continuous,
            VariantArg::BinaryOriginal => OutcomeVariant::BinaryOriginal,
            VariantArg::BinaryTranslated => OutcomeVariant::BinaryTranslated,
        },
        snr: args.snr,
        toeplitz_rho: args.toeplitz_rho,
        seed: args.seed,
        snr_scaling: match args.snr_scaling {
            SnrScalingArg::Verbatim => SnrScaling::Verbatim,
            SnrScalingArg::PerObservation => SnrScaling::PerObservation,
        },
    };
    let sim = simulate(&data, &spec)?;

    let mut w = csv_writer(&args.output)?;
    w.write_record(["y"]).map_err(csv_err)?;
    for v in &sim.y {
        w.write_record([v.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv_writer(&args.truth)?;
    w.write_record(["index", "name", "beta"]).map_err(csv_err)?;
    for (&j, b) in sim.true_support.iter().zip(&sim.beta_true) {
        w.write_record([j.to_string(), data.column_names()[j].clone(), b.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;

    let sigma = sim.sigma_true.map_or(String::new(), |s| format!(", sigma {s:.6}"));
    Ok(format!(
        "simulate: {} rows, {} true features{sigma} -> {}, {}",
        sim.y.len(),
        sim.true_support.len(),
        args.output.display(),
        args.truth.display()
    ))
}

fn read_table(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), HdmiError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => HdmiError::Io(io),
        other => HdmiError::InvalidInput(format!("{other:?}")),
    })?;
    let header = r.headers().map_err(csv_err)?.clone();
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| HdmiError::Parse {
        line: e.position().map_or(0, |p| p.line()),
        msg: e.to_string(),
    })?;
    Ok((header, rows))
}

fn field<T: std::str::FromStr>(
    header: &csv::StringRecord,
    row: &csv::StringRecord,
    name: &str,
    path: &Path,
) -> Result<T, HdmiError> {
    let line = row.position().map_or(0, |p| p.line());
    let j = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| HdmiError::Parse { line: 1, msg: format!("{}: no '{name}' column", path.display()) })?;
    let cell = row.get(j).unwrap_or("");
    cell.trim()
        .parse()
        .map_err(|_| HdmiError::Parse { line, msg: format!("{}: bad {name} value '{cell}'", path.display()) })
}

fn run_evaluate(args: &EvaluateArgs) -> Result<String, HdmiError> {
    let (sh, srows) = read_table(&args.scores)?;
    let (th, trows) = read_table(&args.truth)?;
    let truth: HashSet<usize> =
        trows.iter().map(|r| field::<usize>(&th, r, "index", &args.truth)).collect::<Result<_, _>>()?;
    let mut scores = Vec::with_capacity(srows.len());
    let mut labels = Vec::with_capacity(srows.len());
    for r in &srows {
        scores.push(field::<f64>(&sh, r, "score", &args.scores)?);
        labels.push(truth.contains(&field::<usize>(&sh, r, "index", &args.scores)?) as u8);
    }
    let ls = LabeledScores::new(scores, labels)?;
    let area = auroc(&ls)?;
    let k = ls.positives();
    let conf = selection_confusion(&ls, k)?;

    let mut w = csv_writer(&args.output)?;
    w.write_record(["auroc", "n_features", "n_true", "k", "true_positives", "false_positives", "false_negatives"])
        .map_err(csv_err)?;
    w.write_record([
        area.to_string(),
        ls.scores().len().to_string(),
        k.to_string(),
        k.to_string(),
        conf.true_positives.to_string(),
        conf.false_positives.to_string(),
        conf.false_negatives.to_string(),
    ])
    .map_err(csv_err)?;
    w.flush()?;
    println!("{area}");
    Ok(format!(
        "evaluate: AUROC {area:.6} over {} features, {} true, top-{k} hits {} -> {}",
        ls.scores().len(),
        k,
        conf.true_positives,
        args.output.display()
    ))
}

fn run_convert(args: &ConvertArgs) -> Result<String, HdmiError> {
    let header = convert_to_binary(&args.input, &args.output, &csv_options(args.delimiter)?)?;
    Ok(format!(
        "convert: {} rows x {} columns -> {}",
        header.rows,
        header.cols,
        args.output.display()
    ))
}

fn run_bench_cmd(args: &BenchArgs) -> Result<String, HdmiError> {
    let data = args.input.open()?;
    let (y, skip) = resolve_outcome(&data, &args.input, &args.outcome)?;
    let candidates: Vec<usize> = (0..data.cols()).filter(|j| !skip.contains(j)).collect();
    let methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    let config = args.estimator.config(Method::Fftkde, &args.outcome);
    let cells = run_bench(
        &data,
        &y,
        &candidates,
        &methods,
        &args.fractions,
        args.replications as usize,
        &config,
    )?;
    write_bench_csv(&cells, std::fs::File::create(&args.output)?)?;
    Ok(format!(
        "bench: {} cells, {} replications, {} workers -> {}",
        cells.len(),
        args.replications,
        config.workers,
        args.output.display()
    ))
}

fn exit_code(e: &HdmiError) -> u8 {
    match e {
        HdmiError::Numeric(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Screen(a) => run_screen(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Convert(a) => run_convert(a),
        Command::Bench(a) => run_bench_cmd(a),
    };
    match result {
        Ok(line) => {
            eprintln!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hdmi: error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
