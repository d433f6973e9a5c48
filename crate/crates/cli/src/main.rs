//! `stockframe`: partition and tiling tables, basis and frame diagnostics,
//! round trips through the SFR containers, and the acceptance self-test.
//!
//! Exit codes: 0 success, 1 I/O or malformed input, 2 invalid arguments,
//! 3 a frame check failed.

mod report;
mod signal_io;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use stockframe_core::container::{Domain, GridRecord, SignalRecord};
use stockframe_core::dost::{gram_deviation, BasisIndex, DostBasis};
use stockframe_core::frame::{smallest_q_halving, FrameSpec, EIGEN_GRID_LIMIT};
use stockframe_core::partition::signed_band_range;
use stockframe_core::tiling::{nd_from_spectrum, nd_to_spectrum, NdFrameSpec, NdSignal, NdTiling};
use stockframe_core::{
    acceptance, from_spectrum, to_spectrum, Alpha, AlphaPartition, Error, FrequencyGrid, SpectralSignal,
    TimeSamples, Window, WindowStack,
};

use report::{number, render, Format};

/// Largest `--pmax` accepted by `partition`.
const PARTITION_ROWS: usize = 1 << 16;

#[derive(Debug)]
pub enum Failure {
    Io(String),
    Invalid(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Check(_) => 3,
        }
    }

    pub fn from_core(e: Error, path: &Path) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) => Failure::Io(format!("{}: {e}", path.display())),
            other => Failure::from(other),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) => Failure::Io(e.to_string()),
            Error::NonInvertible { .. } => Failure::Check(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) | Failure::Invalid(m) | Failure::Check(m) => f.write_str(m),
        }
    }
}

fn parse_alpha(s: &str) -> Result<Alpha, String> {
    let parsed = match s.split_once('/') {
        Some((a, b)) => {
            let a: u32 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: u32 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            Alpha::rational(a, b)
        }
        None => Alpha::new(s.parse().map_err(|_| format!("not a number: {s:?}"))?),
    };
    parsed.map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> Result<Window<f64>, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "stockframe", version, about = "Alpha-DOST bases and non-stationary DOST frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the alpha-partition table (p, i, s, beta).
    Partition(PartitionArgs),
    /// Export one DOST basis element in time and frequency.
    Basis(BasisArgs),
    /// Gram deviation and minimum concentration of a whole DOST basis.
    BasisCheck(BasisCheckArgs),
    /// Window stack admissibility and sum bounds.
    Stack(StackArgs),
    /// Walnut frame-bound estimate, plus eigenvalue bounds on small grids.
    FrameBounds(FrameBoundsArgs),
    /// Export one frame element in time and frequency.
    Element(ElementArgs),
    /// Analyze and resynthesize an SFR1 or CSV signal with the canonical dual.
    Roundtrip(RoundtripArgs),
    /// Print the alpha = 1 box tiling in d dimensions.
    Tile(TileArgs),
    /// Analyze and resynthesize an SFR2 grid signal with the d-dimensional frame.
    Roundtrip2d(Roundtrip2dArgs),
    /// Run the acceptance checks and print one line per criterion.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct TableFormat {
    /// JSON report.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// CSV table.
    #[arg(long)]
    csv: bool,
}

impl TableFormat {
    fn format(&self) -> Format {
        match (self.json, self.csv) {
            (true, _) => Format::Json,
            (_, true) => Format::Csv,
            _ => Format::Text,
        }
    }
}

#[derive(Args, Debug)]
struct JsonFormat {
    /// JSON report.
    #[arg(long)]
    json: bool,
}

impl JsonFormat {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            Format::Text
        }
    }
}

#[derive(Args, Debug)]
struct FrameParams {
    /// Partition exponent in [0, 1], decimal or a/b.
    #[arg(long, value_parser = parse_alpha)]
    alpha: Alpha,
    /// Window dilation mu > 0.
    #[arg(long, value_parser = parse_positive)]
    mu: f64,
    /// Oversampling q; the translation step is nu = 1/q.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    q: u32,
    /// gaussian or tgauss:EPS.
    #[arg(long, value_parser = parse_window)]
    window: Window<f64>,
    /// Grid size (even, at least 4).
    #[arg(long)]
    n: usize,
}

impl FrameParams {
    fn spec(&self) -> Result<FrameSpec<f64>, Failure> {
        Ok(FrameSpec::new(self.alpha, &self.window, self.mu, self.q as usize, self.n)?)
    }

    fn describe(&self) -> Value {
        json!({
            "alpha": number(self.alpha.value()),
            "mu": number(self.mu),
            "q": self.q,
            "nu": number(1.0 / self.q as f64),
            "window": self.window.label(),
            "n": self.n,
        })
    }
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long, value_parser = parse_alpha)]
    alpha: Alpha,
    /// Largest interval index.
    #[arg(long)]
    pmax: usize,
    #[command(flatten)]
    format: TableFormat,
}

#[derive(Args, Debug)]
struct BasisArgs {
    #[arg(long, value_parser = parse_alpha)]
    alpha: Alpha,
    /// Signed band index.
    #[arg(long, allow_negative_numbers = true)]
    p: i64,
    /// Translation index in 0..beta.
    #[arg(long)]
    tau: u64,
    #[arg(long)]
    n: usize,
    /// Time samples: CSV (t,re,im) or SFR1.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spectrum: CSV (omega,re,im,abs) or SFR1.
    #[arg(long)]
    freq_out: Option<PathBuf>,
    #[command(flatten)]
    format: JsonFormat,
}

#[derive(Args, Debug)]
struct BasisCheckArgs {
    #[arg(long, value_parser = parse_alpha)]
    alpha: Alpha,
    #[arg(long)]
    n: usize,
    /// Gram deviation above which the check fails.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[command(flatten)]
    format: JsonFormat,
}

#[derive(Args, Debug)]
struct StackArgs {
    #[arg(long, value_parser = parse_alpha)]
    alpha: Alpha,
    #[arg(long, value_parser = parse_positive)]
    mu: f64,
    #[arg(long, value_parser = parse_window)]
    window: Window<f64>,
    #[arg(long)]
    n: usize,
    /// Add a per-band table.
    #[arg(long)]
    report: bool,
    /// Write every band as an SFR1 frequency record.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    format: JsonFormat,
}

#[derive(Args, Debug)]
struct FrameBoundsArgs {
    #[command(flatten)]
    params: FrameParams,
    /// Aliasing truncation for the Walnut sum.
    #[arg(long)]
    kmax: Option<usize>,
    /// Skip the dense eigenvalue bounds.
    #[arg(long)]
    no_eigen: bool,
    /// Also report the smallest q <= QMAX with h_tail < h0_inf / 2.
    #[arg(long, value_name = "QMAX")]
    halving_scan: Option<usize>,
    #[command(flatten)]
    format: JsonFormat,
}

#[derive(Args, Debug)]
struct ElementArgs {
    #[command(flatten)]
    params: FrameParams,
    #[arg(long, allow_negative_numbers = true)]
    p: i64,
    /// Translation index in 0..q*beta.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    freq_out: Option<PathBuf>,
    #[command(flatten)]
    format: JsonFormat,
}

#[derive(Args, Debug)]
struct RoundtripArgs {
    #[command(flatten)]
    params: FrameParams,
    /// SFR1 record (time or frequency) or time-domain CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Reconstruction path; defaults to `<in>.recon.<ext>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative error above which the check fails.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[command(flatten)]
    format: JsonFormat,
}

#[derive(Args, Debug)]
struct TileArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    pmax: usize,
    #[command(flatten)]
    format: TableFormat,
}

#[derive(Args, Debug)]
struct Roundtrip2dArgs {
    #[arg(long, value_parser = parse_positive)]
    mu: f64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    q: u32,
    #[arg(long, value_parser = parse_window)]
    window: Window<f64>,
    /// Per-axis grid size.
    #[arg(long)]
    n: usize,
    /// SFR2 grid signal.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[command(flatten)]
    format: JsonFormat,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[arg(long, default_value_t = acceptance::DEFAULT_SEED)]
    seed: u64,
    /// Run only these criteria (repeatable).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=13))]
    only: Vec<u8>,
    /// Count known-unattainable criteria as failures.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    format: JsonFormat,
}

/// A finished report; `check` carries a frame-check failure to exit with
/// after printing.
struct Output {
    report: Value,
    format: Format,
    table: &'static str,
    check: Option<String>,
}

impl Output {
    fn new(report: Value, format: Format) -> Self {
        Self { report, format, table: "", check: None }
    }
}

fn default_out(input: &Path) -> PathBuf {
    let ext = input.extension().and_then(|e| e.to_str()).unwrap_or("sfr");
    input.with_extension(format!("recon.{ext}"))
}

fn check_tolerance(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("tolerance must be positive, got {tol}")))
    }
}

fn partition(args: PartitionArgs) -> Result<Output, Failure> {
    if args.pmax > PARTITION_ROWS {
        return Err(Failure::Invalid(format!("pmax {} exceeds {PARTITION_ROWS}", args.pmax)));
    }
    let part = AlphaPartition::build(args.alpha, args.pmax)?;
    let rows: Vec<Value> = part
        .intervals()
        .iter()
        .map(|iv| json!({"p": iv.p, "i": iv.lower, "s": iv.upper, "beta": iv.width}))
        .collect();
    let report = json!({
        "alpha": number(args.alpha.value()),
        "alpha_exact": args.alpha.as_ratio().map(|(a, b)| format!("{a}/{b}")),
        "p_max": args.pmax,
        "covering_threshold": part.covering_threshold(),
        "intervals": rows,
    });
    Ok(Output { table: "intervals", ..Output::new(report, args.format.format()) })
}

fn basis(args: BasisArgs) -> Result<Output, Failure> {
    let basis = DostBasis::<f64>::new(args.alpha, args.n)?;
    let idx = BasisIndex::new(args.p, args.tau);
    let spectrum = basis.element_spectrum(idx)?;
    let conc = basis.concentration(idx)?;
    let (lo, hi) = signed_band_range(basis.partition(), args.p).expect("validated band");
    if let Some(path) = &args.out {
        signal_io::write_time_profile(path, basis.element(idx)?.values())?;
    }
    if let Some(path) = &args.freq_out {
        signal_io::write_freq_profile(path, basis.grid().min_freq(), spectrum.coeffs())?;
    }
    let report = json!({
        "alpha": number(args.alpha.value()),
        "n": args.n,
        "p": args.p,
        "tau": args.tau,
        "beta": basis.beta(args.p),
        "band_lower": lo,
        "band_upper": hi,
        "norm": number(spectrum.norm()),
        "concentration": {"fraction": number(conc.fraction), "squared": number(conc.squared)},
    });
    Ok(Output::new(report, args.format.format()))
}

fn basis_check(args: BasisCheckArgs) -> Result<Output, Failure> {
    check_tolerance(args.tol)?;
    if args.n > EIGEN_GRID_LIMIT {
        return Err(Error::GridTooLarge { n: args.n, limit: EIGEN_GRID_LIMIT }.into());
    }
    let basis = DostBasis::<f64>::new(args.alpha, args.n)?;
    let deviation = gram_deviation(&basis.gram_matrix()?);
    let conc = basis
        .indices()
        .into_par_iter()
        .map(|i| basis.concentration(i).map(|c| (i, c)))
        .collect::<Result<Vec<_>, _>>()?;
    let (worst, c) = conc
        .into_iter()
        .min_by(|a, b| a.1.fraction.total_cmp(&b.1.fraction))
        .ok_or_else(|| Failure::Invalid("basis has no band elements".into()))?;
    let report = json!({
        "alpha": number(args.alpha.value()),
        "n": args.n,
        "bands": basis.bands().len(),
        "elements": basis.indices().len(),
        "gram_deviation": number(deviation),
        "min_concentration": {
            "fraction": number(c.fraction),
            "squared": number(c.squared),
            "p": worst.p,
            "tau": worst.tau,
        },
    });
    let check = (!(deviation <= args.tol)).then(|| format!("Gram deviation {deviation:e} exceeds {:e}", args.tol));
    Ok(Output { check, ..Output::new(report, args.format.format()) })
}

fn stack(args: StackArgs) -> Result<Output, Failure> {
    let grid = FrequencyGrid::new(args.n)?;
    let stack = WindowStack::for_grid(&args.window, args.alpha, args.mu, grid)?;
    let mut report = json!({
        "alpha": number(args.alpha.value()),
        "mu": number(args.mu),
        "window": args.window.label(),
        "n": args.n,
        "bands": stack.bands().len(),
        "admissibility": serde_json::to_value(stack.admissibility()).expect("report serializes"),
        "stack_bounds": serde_json::to_value(stack.sum_bounds()).expect("report serializes"),
        "wiener_upper_bound": number(stack.wiener_upper_bound()),
    });
    if args.report {
        let rows: Vec<Value> = stack
            .bands()
            .iter()
            .map(|b| {
                let (lo, hi) = b.support.map(|(a, z)| (grid.freq_at(a), grid.freq_at(z))).unzip();
                json!({
                    "p": b.p,
                    "beta": stack.beta(b.p),
                    "support_lower": lo,
                    "support_upper": hi,
                    "peak": number(b.values.iter().copied().fold(0.0, f64::max)),
                })
            })
            .collect();
        report["band_table"] = Value::Array(rows);
    }
    if let Some(path) = &args.dump {
        let records: Vec<SignalRecord> = stack
            .bands()
            .iter()
            .map(|b| SignalRecord {
                domain: Domain::Frequency,
                values: b.values.iter().map(|&v| stockframe_core::Complex::new(v, 0.0)).collect(),
            })
            .collect();
        signal_io::write_records(path, &records)?;
    }
    Ok(Output { table: "band_table", ..Output::new(report, args.format.format()) })
}

fn frame_bounds(args: FrameBoundsArgs) -> Result<Output, Failure> {
    let p = &args.params;
    let mut spec = p.spec()?;
    if let Some(k) = args.kmax {
        spec = spec.with_walnut_k_max(k);
    }
    let w = spec.walnut_bounds();
    let eigen = if args.no_eigen || p.n > EIGEN_GRID_LIMIT { None } else { Some(spec.frame_bounds_eigen()?) };
    let halving = match args.halving_scan {
        Some(q_max) => Some(smallest_q_halving(spec.stack(), q_max)?),
        None => None,
    };
    let mut report = p.describe();
    report["painless"] = json!(spec.is_painless());
    report["walnut"] = json!({
        "h0_inf": number(w.h0_inf),
        "h0_sup": number(w.h0_sup),
        "h_tail": number(w.h_tail),
        "ln_h_tail": number(spec.ln_h_tail()),
        "k_max": w.k_max,
        "a": number(w.a),
        "b": number(w.b),
        "nu_mu_below_one": w.nu_mu_below_one,
    });
    report["eigen"] = match eigen {
        Some(e) => json!({"a": number(e.a_lower), "b": number(e.b_upper)}),
        None => Value::Null,
    };
    if let Some(found) = halving {
        report["q_halving"] = match found {
            Some((q, r)) => json!({"q": q, "h_tail": number(r.h_tail), "h0_inf": number(r.h0_inf)}),
            None => Value::Null,
        };
    }
    // the eigenvalue bound is exact, so it overrides an inconclusive estimate
    let (a, b, source) = match eigen {
        Some(e) => (e.a_lower, e.b_upper, "eigenvalue"),
        None => (w.a, w.b, "Walnut"),
    };
    let check = (!(a > 1e-12 * b)).then(|| format!("{source} lower frame bound A = {a:e} is not positive"));
    Ok(Output { check, ..Output::new(report, args.format.format()) })
}

fn element(args: ElementArgs) -> Result<Output, Failure> {
    let p = &args.params;
    let spec = p.spec()?;
    let e = spec.frame_element(args.p, args.k)?;
    if let Some(path) = &args.out {
        signal_io::write_time_profile(path, from_spectrum(&e).values())?;
    }
    if let Some(path) = &args.freq_out {
        signal_io::write_freq_profile(path, e.grid().min_freq(), e.coeffs())?;
    }
    let mut report = p.describe();
    report["p"] = json!(args.p);
    report["k"] = json!(args.k);
    report["beta"] = json!(spec.beta(args.p));
    report["k_count"] = json!(spec.k_count(args.p));
    report["spectral_norm"] = number(e.norm());
    Ok(Output::new(report, args.format.format()))
}

fn roundtrip(args: RoundtripArgs) -> Result<Output, Failure> {
    check_tolerance(args.tol)?;
    let p = &args.params;
    let grid = FrequencyGrid::new(p.n)?;
    let record = signal_io::read_signal(&args.input)?;
    if record.values.len() != p.n {
        return Err(Error::LengthMismatch { expected: p.n, found: record.values.len() }.into());
    }
    let spec = p.spec()?;
    let f = match record.domain {
        Domain::Time => to_spectrum(&TimeSamples::new(record.values), grid)?,
        Domain::Frequency => SpectralSignal::new(grid, record.values)?,
    };
    let r = spec.reconstruct(&f)?;
    let values = match record.domain {
        Domain::Time => from_spectrum(&r.signal).into_values(),
        Domain::Frequency => r.signal.into_coeffs(),
    };
    let out = args.out.clone().unwrap_or_else(|| default_out(&args.input));
    signal_io::write_signal(&out, &SignalRecord { domain: record.domain, values })?;
    let mut report = p.describe();
    report["output"] = json!(out.display().to_string());
    report["coefficients"] = json!(spec.p_range().iter().map(|&q| spec.k_count(q)).sum::<usize>());
    report["rel_err"] = number(r.rel_err);
    report["tolerance"] = number(args.tol);
    let check = (!(r.rel_err <= args.tol)).then(|| format!("relative error {:e} exceeds {:e}", r.rel_err, args.tol));
    Ok(Output { check, ..Output::new(report, args.format.format()) })
}

fn tile(args: TileArgs) -> Result<Output, Failure> {
    if args.d > 6 {
        return Err(Failure::Invalid(format!("dimension {} exceeds 6", args.d)));
    }
    let tiling = NdTiling::build(args.d, args.pmax)?;
    let rows: Vec<Value> = tiling
        .boxes()
        .iter()
        .map(|b| json!({"p": b.p, "ell": b.ell, "lower": b.lower, "side": b.side, "beta": b.beta}))
        .collect();
    let counts: Vec<Value> =
        (0..=args.pmax).map(|p| json!({"p": p, "boxes": tiling.boxes_at(p).count()})).collect();
    let report = json!({"d": args.d, "p_max": args.pmax, "levels": counts, "boxes": rows});
    Ok(Output { table: "boxes", ..Output::new(report, args.format.format()) })
}

fn roundtrip2d(args: Roundtrip2dArgs) -> Result<Output, Failure> {
    check_tolerance(args.tol)?;
    let grid = FrequencyGrid::new(args.n)?;
    let record = signal_io::read_grid(&args.input)?;
    let d = record.dims.len();
    if record.dims.iter().any(|&m| m != args.n) {
        return Err(Failure::Invalid(format!("grid {:?} does not match --n {}", record.dims, args.n)));
    }
    let spec = NdFrameSpec::<f64>::new(d, &args.window, args.mu, args.q as usize, args.n)?;
    let f = match record.domain {
        Domain::Time => nd_to_spectrum(&record.values, grid, d)?,
        Domain::Frequency => NdSignal::new(grid, d, record.values)?,
    };
    let r = spec.reconstruct(&f)?;
    let values = match record.domain {
        Domain::Time => nd_from_spectrum(&r.signal),
        Domain::Frequency => r.signal.into_values(),
    };
    let out = args.out.clone().unwrap_or_else(|| default_out(&args.input));
    signal_io::write_grid(&out, &GridRecord { domain: record.domain, dims: record.dims.clone(), values })?;
    let report = json!({
        "d": d,
        "mu": number(args.mu),
        "q": args.q,
        "window": args.window.label(),
        "n": args.n,
        "boxes": spec.boxes().len(),
        "output": out.display().to_string(),
        "rel_err": number(r.rel_err),
        "tolerance": number(args.tol),
    });
    let check = (!(r.rel_err <= args.tol)).then(|| format!("relative error {:e} exceeds {:e}", r.rel_err, args.tol));
    Ok(Output { check, ..Output::new(report, args.format.format()) })
}

fn selftest(args: SelftestArgs) -> Result<Output, Failure> {
    let ids: Vec<u8> = if args.only.is_empty() { (1..=13).collect() } else { args.only.clone() };
    let format = args.format.format();
    let mut verdicts = Vec::new();
    for id in ids {
        let v = acceptance::run(id, args.seed);
        if format == Format::Text {
            println!("{}", v.line());
        }
        verdicts.push(v);
    }
    let failed: Vec<u8> = verdicts.iter().filter(|v| !v.passed && (args.strict || !v.waived())).map(|v| v.id).collect();
    let report = match format {
        Format::Text => Value::Null,
        _ => json!({
            "seed": args.seed,
            "criteria": verdicts.iter().map(|v| json!({
                "id": v.id,
                "name": v.name,
                "passed": v.passed,
                "waived": v.waived(),
                "detail": v.detail,
            })).collect::<Vec<_>>(),
        }),
    };
    let check = (!failed.is_empty()).then(|| format!("criteria failed: {failed:?}"));
    Ok(Output { check, ..Output::new(report, format) })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("STOCKFRAME_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Invalid(format!("STOCKFRAME_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Invalid(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let out = match cli.command {
        Command::Partition(a) => partition(a),
        Command::Basis(a) => basis(a),
        Command::BasisCheck(a) => basis_check(a),
        Command::Stack(a) => stack(a),
        Command::FrameBounds(a) => frame_bounds(a),
        Command::Element(a) => element(a),
        Command::Roundtrip(a) => roundtrip(a),
        Command::Tile(a) => tile(a),
        Command::Roundtrip2d(a) => roundtrip2d(a),
        Command::Selftest(a) => selftest(a),
    }?;
    if !out.report.is_null() {
        print!("{}", render(&out.report, out.format, out.table));
    }
    match out.check {
        Some(msg) => Err(Failure::Check(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("stockframe: {f}");
            ExitCode::from(f.code())
        }
    }
}
