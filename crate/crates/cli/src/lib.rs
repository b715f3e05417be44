//! The `landau` command line: argument parsing, configuration layering and
//! the subcommands. `run` returns the process exit code: 0 on success, 1 when
//! a computation fails, 2 on bad usage or configuration.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use landau_core::capacity::{capacity_minus, fekete_diameter, registry_capacity, FeketeConfig};
use landau_core::exterior::{cluster_table, toeplitz_comparison};
use landau_core::fock::MagneticField;
use landau_core::measures::MeasureSpec;
use landau_core::rates::{estimate_limit, rate_sequence, rates_from_values, RateEstimate, Window};
use landau_core::toeplitz::stabilized_spectrum;
use landau_core::verify::{basis_check, run_suite, Suite, VerifyOptions};
use landau_core::Error;

pub mod config;
pub mod output;

use config::{JobConfig, Layers};
use output::{emit, fmt_f64};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "landau", version, about = "Spectral asymptotics of magnetic Toeplitz operators and exterior-disk clusters")]
struct Cli {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stabilized Toeplitz eigenvalues of a shape.
    Spectrum(SpectrumArgs),
    /// Logarithmic capacity by registry or Fekete points.
    Capacity(CapacityArgs),
    /// Rate sequence and limit estimate from a spectrum CSV.
    Rates(RatesArgs),
    /// Eigenvalue cluster of the exterior of a disk.
    ExteriorDisk(ExteriorArgs),
    /// Run acceptance checks.
    Verify(VerifyArgs),
    /// Orthonormality and ladder relations of the Landau basis.
    BasisCheck(BasisArgs),
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    shape: Option<String>,
    #[arg(long = "B")]
    b: Option<f64>,
    /// Landau level, or a comma-separated list of levels.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    prec: Option<u32>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CapacityArgs {
    #[arg(long)]
    shape: Option<String>,
    #[arg(long = "fekete-n")]
    fekete_n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// auto (registry when known), registry or fekete.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// auto, or an inclusive range `lo:hi`.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    prec: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExteriorArgs {
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    nmax: Option<usize>,
    /// Also compare with the Toeplitz spectrum of the disk.
    #[arg(long)]
    compare: Option<bool>,
    #[arg(long)]
    prec: Option<u32>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// basis, theorem2, theorem3, abstract, all, or a criterion number.
    suite: Option<String>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long = "curve-prec")]
    curve_prec: Option<u32>,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BasisArgs {
    #[arg(long)]
    qmax: Option<u32>,
    #[arg(long)]
    kmax: Option<u32>,
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long)]
    prec: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("landau: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Spectrum(a) => spectrum(a, Layers::load(cfg, "spectrum")?),
        Command::Capacity(a) => capacity(a, Layers::load(cfg, "capacity")?),
        Command::Rates(a) => rates(a, Layers::load(cfg, "rates")?),
        Command::ExteriorDisk(a) => exterior(a, Layers::load(cfg, "exterior-disk")?),
        Command::Verify(a) => verify(a, Layers::load(cfg, "verify")?),
        Command::BasisCheck(a) => basis(a, Layers::load(cfg, "basis-check")?),
    }
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn parse_levels(s: &str) -> Result<Vec<u32>, CliError> {
    let levels: Vec<u32> = s
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("q list {s:?}: {e}")))?;
    if levels.is_empty() {
        return Err(CliError::Usage("empty q list".into()));
    }
    Ok(levels)
}

/// `eig.csv` becomes `eig_q1.csv` when several levels are written.
fn level_path(path: &Path, q: u32) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_q{q}.{}", ext.to_string_lossy()),
        None => format!("{stem}_q{q}"),
    };
    path.with_file_name(name)
}

fn check_format(format: &str) -> Result<(), CliError> {
    match format {
        "csv" | "json" => Ok(()),
        other => Err(CliError::Usage(format!("format must be csv or json, got {other:?}"))),
    }
}

fn spectrum(a: SpectrumArgs, l: Layers) -> Result<i32, CliError> {
    let shape: String = l.require("shape", a.shape)?;
    let b: f64 = l.get("B", a.b, 2.0)?;
    let levels = parse_levels(&l.get("q", a.q, "0".to_string())?)?;
    let n: usize = l.get("n", a.n, 40)?;
    let prec = l.prec(a.prec)?;
    let format: String = l.get("format", a.format, "csv".to_string())?;
    check_format(&format)?;
    let out: Option<PathBuf> = l.lookup("out", a.out)?;
    let field = MagneticField::from_f64(b, prec)?;
    let mu = MeasureSpec::parse(&shape, prec)?;
    for &q in &levels {
        let mut job = JobConfig::new("spectrum");
        job.set("shape", &shape);
        job.set("B", b);
        job.set("q", q);
        job.set("n", n);
        job.set("prec", prec);
        job.set("format", &format);
        let seq = stabilized_spectrum(q, &field, &mu, n)?;
        let rates = rate_sequence(&seq)?;
        let text = if format == "csv" {
            output::spectrum_csv(&job, &seq, &rates)
        } else {
            json_text(&serde_json::json!({ "config": job.to_json(), "spectrum": seq }))
        };
        let path = match (&out, levels.len()) {
            (Some(p), 1) => Some(p.clone()),
            (Some(p), _) => Some(level_path(p, q)),
            (None, _) => None,
        };
        emit(path.as_deref(), &text)?;
        if seq.shortfall {
            eprintln!(
                "landau: q={q}: only {} of {n} eigenvalues stabilized",
                seq.stabilized_count
            );
        }
    }
    Ok(0)
}

fn capacity(a: CapacityArgs, l: Layers) -> Result<i32, CliError> {
    let shape: String = l.require("shape", a.shape)?;
    let defaults = FeketeConfig::default();
    let cfg = FeketeConfig {
        n_points: l.get("fekete_n", a.fekete_n, defaults.n_points)?,
        seed: l.get("seed", a.seed, defaults.seed)?,
        restarts: l.get("restarts", a.restarts, defaults.restarts)?,
        ..defaults
    };
    let method: String = l.get("method", a.method, "auto".to_string())?;
    let out: Option<PathBuf> = l.lookup("out", a.out)?;
    let mu = MeasureSpec::parse(&shape, 64)?;
    let estimate = match method.as_str() {
        "fekete" => fekete_diameter(&mu, &cfg)?,
        "registry" | "auto" => match (registry_capacity(&mu), method.as_str()) {
            (Some(_), _) => landau_core::capacity::capacity_of(&mu)?,
            (None, "auto") => fekete_diameter(&mu, &cfg)?,
            (None, _) => {
                return Err(CliError::Usage(format!("no registry value for {shape}")));
            }
        },
        other => {
            return Err(CliError::Usage(format!(
                "method must be auto, registry or fekete, got {other:?}"
            )))
        }
    };
    let minus = capacity_minus(&mu)?;
    let mut job = JobConfig::new("capacity");
    job.set("shape", &shape);
    job.set("method", &method);
    job.set("fekete_n", cfg.n_points);
    job.set("seed", cfg.seed);
    job.set("restarts", cfg.restarts);
    let v = serde_json::json!({
        "config": job.to_json(),
        "capacity": estimate,
        "capacity_minus": minus.value(),
    });
    emit(out.as_deref(), &json_text(&v))?;
    Ok(0)
}

fn parse_window(s: &str) -> Result<Window, CliError> {
    if s == "auto" {
        return Ok(Window::Auto);
    }
    let bad = || CliError::Usage(format!("window must be auto or lo:hi, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(Window::Range(lo, hi))
}

fn rate_json(job: &JobConfig, rates: &RateEstimate, digits: usize) -> serde_json::Value {
    let points: Vec<serde_json::Value> = rates
        .points
        .iter()
        .map(|p| {
            serde_json::json!({
                "n": p.n,
                "s_n": p.s.to_decimal(digits),
                "r_n": p.r.to_decimal(digits),
                "log_r_n": p.log_r,
            })
        })
        .collect();
    serde_json::json!({
        "config": job.to_json(),
        "window": rates.window,
        "limit_est": rates.limit_est,
        "limsup_est": rates.limsup_est,
        "liminf_est": rates.liminf_est,
        "fit": rates.fit,
        "points": points,
    })
}

fn rates(a: RatesArgs, l: Layers) -> Result<i32, CliError> {
    let input: PathBuf = l.require("in", a.input)?;
    let window_raw: String = l.get("window", a.window, "auto".to_string())?;
    let window = parse_window(&window_raw)?;
    let svg: Option<PathBuf> = l.lookup("svg", a.svg)?;
    let fallback = l.prec(a.prec)?;
    let out: Option<PathBuf> = l.lookup("out", a.out)?;
    let text = std::fs::read_to_string(&input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?;
    let (rows, prec) = output::read_spectrum_csv(&text, fallback)?;
    let offset = rows[0].0 as i64;
    let values: Vec<_> = rows.into_iter().map(|(_, s)| s).collect();
    let rates = estimate_limit(&rates_from_values(&values, offset)?, window)?;
    let mut job = JobConfig::new("rates");
    job.set("in", input.display());
    job.set("window", &window_raw);
    job.set("prec", prec);
    if let Some(p) = &svg {
        job.set("svg", p.display());
        emit(Some(p), &output::rate_svg(&rates, &format!("r_n vs 1/n: {}", input.display())))?;
    }
    emit(out.as_deref(), &json_text(&rate_json(&job, &rates, output::digits(prec))))?;
    if rates.fit.is_some_and(|f| f.flagged) {
        eprintln!("landau: fit residual above threshold; limit estimate is unreliable");
    }
    Ok(0)
}

fn exterior(a: ExteriorArgs, l: Layers) -> Result<i32, CliError> {
    let b: f64 = l.get("B", a.b, 2.0)?;
    let r: f64 = l.get("R", a.r, 1.0)?;
    let q: u32 = l.get("q", a.q, 0)?;
    let nmax: usize = l.get("nmax", a.nmax, 10)?;
    let compare: bool = l.get("compare", a.compare, false)?;
    let format: String = l.get("format", a.format, "csv".to_string())?;
    check_format(&format)?;
    let out: Option<PathBuf> = l.lookup("out", a.out)?;
    if nmax > 16 {
        return Err(CliError::Usage(format!(
            "nmax = {nmax} exceeds 16; gaps that deep fall below the double-precision floor"
        )));
    }
    let mut job = JobConfig::new("exterior-disk");
    job.set("B", b);
    job.set("R", r);
    job.set("q", q);
    job.set("nmax", nmax);
    job.set("compare", compare);
    let table = cluster_table(b, r, q, nmax)?;
    let mut extra = Vec::new();
    let mut comparison = None;
    if compare {
        let prec = l.prec(a.prec)?;
        job.set("prec", prec);
        let c = toeplitz_comparison(&table, prec)?;
        extra.push(("resolvent_limit".to_string(), fmt_f64(c.exterior.limit_est)));
        extra.push(("toeplitz_limit".to_string(), fmt_f64(c.toeplitz.limit_est)));
        extra.push(("relative_difference".to_string(), fmt_f64(c.relative_difference)));
        comparison = Some(c);
    }
    if let Ok(est) = table.rate_estimate() {
        if let Some(lim) = est.limit_est {
            extra.push(("limit_est".to_string(), fmt_f64(lim)));
        }
    }
    job.set("format", &format);
    let text = if format == "csv" {
        output::cluster_csv(&job, &table, &extra)
    } else {
        json_text(&serde_json::json!({
            "config": job.to_json(),
            "table": table,
            "comparison": comparison,
        }))
    };
    emit(out.as_deref(), &text)?;
    if table.floor_reached {
        eprintln!(
            "landau: only {} of {nmax} gaps lie above the floor {:e}",
            table.rows.len(),
            table.floor
        );
    }
    Ok(0)
}

fn verify(a: VerifyArgs, l: Layers) -> Result<i32, CliError> {
    let suite_name: String = l.get("suite", a.suite, "all".to_string())?;
    let suite: Suite = suite_name.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let defaults = VerifyOptions::default();
    let options = VerifyOptions {
        seeds: l.get("seeds", a.seeds, defaults.seeds)?,
        curve_prec: l.get("curve_prec", a.curve_prec, defaults.curve_prec)?,
    };
    let out: Option<PathBuf> = l.lookup("out", a.out)?;
    let results = run_suite(suite, options);
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if let Some(p) = out {
        let mut job = JobConfig::new("verify");
        job.set("suite", &suite_name);
        job.set("seeds", options.seeds);
        job.set("curve_prec", options.curve_prec);
        // Timings vary between runs and stay out of the report.
        let rows: Vec<serde_json::Value> = results
            .iter()
            .map(|r| serde_json::json!({ "id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail }))
            .collect();
        emit(Some(&p), &json_text(&serde_json::json!({ "config": job.to_json(), "results": rows })))?;
    }
    Ok(if passed == results.len() { 0 } else { 1 })
}

fn basis(a: BasisArgs, l: Layers) -> Result<i32, CliError> {
    let qmax: u32 = l.get("qmax", a.qmax, 4)?;
    let kmax: u32 = l.get("kmax", a.kmax, 6)?;
    let b: f64 = l.get("B", a.b, 2.0)?;
    let prec = l.prec(a.prec)?;
    let out: Option<PathBuf> = l.lookup("out", a.out)?;
    let field = MagneticField::from_f64(b, prec)?;
    let report = basis_check(&field, qmax, kmax)?;
    let mut job = JobConfig::new("basis-check");
    job.set("qmax", qmax);
    job.set("kmax", kmax);
    job.set("B", b);
    job.set("prec", prec);
    emit(
        out.as_deref(),
        &json_text(&serde_json::json!({ "config": job.to_json(), "report": report })),
    )?;
    Ok(if report.passes { 0 } else { 1 })
}
