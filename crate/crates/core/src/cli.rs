//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_rational::{BigRational, Rational64};
use serde::Serialize;

use crate::body::{ConvexBody, CosineTerm};
use crate::config::{Estimator, ExperimentConfig, Format, OracleConfig, Overrides};
use crate::decomposition::{
    decompose, default_cutoff, residue_integral_check, theorem_sweep, Reference, ReferenceSource, SweepConfig,
};
use crate::error::{Error, Result};
use crate::fourier::{ft_ball, parseval_variance};
use crate::lattice::{moments_from_counts, sample_counts, sample_moments, MomentTable, SamplingScheme};
use crate::oracle::{brute_force_variance, square_stats, BruteForceResult, OracleReport, Variant};
use crate::quadrature::SphereRule;
use crate::report::{csv_preamble, csv_table, json_report, Warning};
use crate::special::{bessel_j, BesselOrder};
use crate::vector::Vect;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_QUALITY: i32 = 2;

/// Two variance estimates further apart than this many combined error bars raise the
/// quality flag.
pub const DISCREPANCY_SIGMAS: f64 = 3.0;

#[derive(Debug, Parser)]
#[command(name = "thin-annuli", version, about = "Lattice point count variance in thin annuli of convex bodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed of random sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Lattice cutoff of the Fourier series.
    #[arg(long, global = true)]
    pub cutoff: Option<u64>,
    /// Offset grid sampling with M points per axis.
    #[arg(long, global = true, conflicts_with = "samples")]
    pub grid: Option<u32>,
    /// Random sampling with N points.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Sweep exponent, t = r^-alpha.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Count lattice points in the translated annulus over a sampling scheme.
    Count,
    /// Variance of the count by the configured estimators.
    Variance,
    /// Split the Parseval sum into the main term and remainders.
    Decompose,
    /// Variance over volume along t = r^-alpha.
    Sweep,
    /// Exact square-annulus statistics.
    Oracle,
    /// Built-in numerical checks.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Count => "count",
            Command::Variance => "variance",
            Command::Decompose => "decompose",
            Command::Sweep => "sweep",
            Command::Oracle => "oracle",
            Command::Selftest => "selftest",
        }
    }
}

/// Bytes to emit and the exit status they carry.
#[derive(Debug)]
pub struct Output {
    pub primary: Vec<u8>,
    /// Extra files written next to `--out`, keyed by suffix.
    pub sidecars: Vec<(&'static str, Vec<u8>)>,
    pub quality_flag: bool,
}

/// Parses arguments, runs the command and writes its output. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NodeBudget { .. } => EXIT_QUALITY,
                _ => EXIT_VALIDATION,
            }
        }
    }
}

fn run_cli(cli: &Cli) -> Result<i32> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let notes = config.apply(&Overrides {
        out: cli.out.clone(),
        format: cli.format,
        workers: cli.workers,
        seed: cli.seed,
        cutoff: cli.cutoff,
        grid: cli.grid,
        samples: cli.samples,
        alpha: cli.alpha,
    });
    let warnings: Vec<Warning> = notes.into_iter().map(|n| Warning::new("ignored_flag", n)).collect();
    let output = match config.workers()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| execute(cli.command, &config, warnings)),
        None => execute(cli.command, &config, warnings),
    }?;
    write_output(&config, &output)?;
    Ok(if output.quality_flag { EXIT_QUALITY } else { EXIT_OK })
}

fn write_output(config: &ExperimentConfig, output: &Output) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("cannot write output: {e}"));
    match &config.out {
        Some(path) => {
            std::fs::write(path, &output.primary).map_err(io)?;
            for (suffix, bytes) in &output.sidecars {
                let mut name = path.clone().into_os_string();
                name.push(suffix);
                std::fs::write(PathBuf::from(name), bytes).map_err(io)?;
            }
        }
        None => std::io::stdout().lock().write_all(&output.primary).map_err(io)?,
    }
    Ok(())
}

/// Runs one command on a resolved config in the current thread pool.
pub fn execute(command: Command, config: &ExperimentConfig, warnings: Vec<Warning>) -> Result<Output> {
    match command {
        Command::Count => cmd_count(config, warnings),
        Command::Variance => cmd_variance(config, warnings),
        Command::Decompose => cmd_decompose(config, warnings),
        Command::Sweep => cmd_sweep(config, warnings),
        Command::Oracle => cmd_oracle(config, warnings),
        Command::Selftest => cmd_selftest(config, warnings),
    }
}

fn emit<T: Serialize, R: Serialize>(
    command: Command,
    config: &ExperimentConfig,
    warnings: &[Warning],
    result: &T,
    rows: &[R],
    extra: &[(&str, String)],
) -> Result<Vec<u8>> {
    match config.format {
        Format::Json => json_report(command.name(), config, warnings, result),
        Format::Csv => csv_table(csv_preamble(command.name(), config, warnings, extra), rows),
    }
}

#[derive(Serialize)]
struct CountReport {
    r: f64,
    t: f64,
    volume: f64,
    moments: MomentTable,
}

fn cmd_count(config: &ExperimentConfig, warnings: Vec<Warning>) -> Result<Output> {
    let annulus = config.annulus("count")?;
    let scheme = config.sampling("count")?;
    let set = sample_counts(&annulus, scheme)?;
    let report = CountReport {
        r: annulus.r(),
        t: annulus.t(),
        volume: annulus.volume(),
        moments: moments_from_counts(&set, config.max_moment_order.unwrap_or(4)),
    };
    let histogram = json_report(Command::Count.name(), config, &warnings, &report)?;
    Ok(match config.format {
        Format::Json => Output { primary: histogram, sidecars: vec![], quality_flag: false },
        Format::Csv => {
            let mut primary = csv_preamble(Command::Count.name(), config, &warnings, &[]);
            set.write_csv(&mut primary)?;
            Output { primary, sidecars: vec![(".histogram.json", histogram)], quality_flag: false }
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateEntry {
    pub estimator: &'static str,
    pub value: f64,
    pub error: f64,
    #[serde(skip)]
    details: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Discrepancy {
    pub first: &'static str,
    pub second: &'static str,
    pub difference: f64,
    pub combined_error: f64,
    /// `|difference| / combined_error`.
    pub sigmas: f64,
}

#[derive(Serialize)]
struct VarianceReport {
    r: f64,
    t: f64,
    volume: f64,
    estimates: Vec<EstimateEntry>,
    details: serde_json::Map<String, serde_json::Value>,
    discrepancies: Vec<Discrepancy>,
}

fn to_value<T: Serialize>(t: &T) -> serde_json::Value {
    serde_json::to_value(t).expect("report value serializes")
}

fn moment_error(m: &MomentTable) -> f64 {
    m.variance_std_error.or(m.variance_discretization).unwrap_or(0.0)
}

fn cmd_variance(config: &ExperimentConfig, mut warnings: Vec<Warning>) -> Result<Output> {
    let annulus = config.annulus("variance")?;
    let estimators = if config.estimators.is_empty() {
        let mut e = vec![Estimator::Parseval];
        if config.sampling.is_some() {
            e.push(Estimator::Sampling);
        }
        e
    } else {
        config.estimators.clone()
    };
    let cutoff = config.cutoff.unwrap_or_else(|| default_cutoff(annulus.t()));
    let mut quality_flag = false;
    let mut estimates = Vec::new();
    for estimator in estimators {
        let entry = match estimator {
            Estimator::Parseval => {
                let p = parseval_variance(&annulus, cutoff)?;
                if p.flagged {
                    quality_flag = true;
                    warnings.push(Warning::new(
                        "quadrature",
                        format!("Parseval quadrature error {} exceeds 1% of the sum {}", p.quadrature_error, p.value),
                    ));
                }
                EstimateEntry { estimator: "parseval", value: p.value, error: p.tail.bound + p.quadrature_error, details: to_value(&p) }
            }
            Estimator::Sampling => {
                let m = sample_moments(&annulus, config.sampling("variance")?, config.max_moment_order.unwrap_or(4))?;
                EstimateEntry { estimator: "sampling", value: m.variance, error: moment_error(&m), details: to_value(&m) }
            }
            Estimator::BruteForce => {
                let m = match config.sampling("variance")? {
                    SamplingScheme::Grid { m } => m,
                    SamplingScheme::Random { .. } => {
                        return Err(Error::Config("the brute_force estimator needs grid sampling".into()))
                    }
                };
                let b = brute_force_variance(&annulus, m)?;
                EstimateEntry { estimator: "brute_force", value: b.variance, error: 0.0, details: to_value(&b) }
            }
        };
        estimates.push(entry);
    }
    let mut discrepancies = Vec::new();
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            let difference = a.value - b.value;
            let combined_error = a.error.hypot(b.error);
            let sigmas = if combined_error > 0.0 {
                difference.abs() / combined_error
            } else if difference == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            if sigmas > DISCREPANCY_SIGMAS {
                quality_flag = true;
                warnings.push(Warning::new(
                    "discrepancy",
                    format!("{} and {} differ by {difference} ({sigmas:.2} combined errors)", a.estimator, b.estimator),
                ));
            }
            discrepancies.push(Discrepancy { first: a.estimator, second: b.estimator, difference, combined_error, sigmas });
        }
    }
    let details = estimates.iter().map(|e| (e.estimator.to_string(), e.details.clone())).collect();
    let report = VarianceReport { r: annulus.r(), t: annulus.t(), volume: annulus.volume(), estimates, details, discrepancies };
    let primary = emit(Command::Variance, config, &warnings, &report, &report.estimates, &[])?;
    Ok(Output { primary, sidecars: vec![], quality_flag })
}

#[derive(Serialize)]
struct QuantityRow {
    quantity: &'static str,
    value: Option<f64>,
}

fn cmd_decompose(config: &ExperimentConfig, mut warnings: Vec<Warning>) -> Result<Output> {
    let annulus = config.annulus("decompose")?;
    let cutoff_x = config.cutoff.unwrap_or_else(|| default_cutoff(annulus.t()));
    let cutoff_y = config.cutoff_y.unwrap_or(cutoff_x);
    let mut quality_flag = false;
    let reference = match config.reference.unwrap_or(ReferenceSource::Parseval) {
        ReferenceSource::Parseval => {
            let p = parseval_variance(&annulus, cutoff_x.max(cutoff_y))?;
            if p.flagged {
                quality_flag = true;
                warnings.push(Warning::new("quadrature", format!("Parseval quadrature error {} exceeds 1%", p.quadrature_error)));
            }
            Reference::from_parseval(&p)
        }
        ReferenceSource::Sampling => {
            Reference::from_moments(&sample_moments(&annulus, config.sampling("decompose")?, 2)?)
        }
    };
    let d = decompose(&annulus, cutoff_x, cutoff_y, Some(reference))?;
    let rows = [
        QuantityRow { quantity: "x", value: Some(d.x.estimate()) },
        QuantityRow { quantity: "x_partial_sum", value: Some(d.x.partial_sum) },
        QuantityRow { quantity: "x_tail_correction", value: Some(d.x.tail_correction) },
        QuantityRow { quantity: "x_tail", value: Some(d.x.tail.bound) },
        QuantityRow { quantity: "y", value: Some(d.y.estimate()) },
        QuantityRow { quantity: "y_tail", value: Some(d.y.tail.bound) },
        QuantityRow { quantity: "main_term", value: Some(d.main_term) },
        QuantityRow { quantity: "w", value: Some(d.w) },
        QuantityRow { quantity: "z", value: d.z },
        QuantityRow { quantity: "reference", value: Some(reference.value) },
        QuantityRow { quantity: "reference_error", value: Some(reference.error) },
        QuantityRow { quantity: "z_cross_terms", value: d.z_cross_terms },
    ];
    let primary = emit(Command::Decompose, config, &warnings, &d, &rows, &[])?;
    Ok(Output { primary, sidecars: vec![], quality_flag })
}

/// Sweep row as written to CSV; `beta_fit` repeats the table's fit on every row.
#[derive(Serialize)]
struct SweepCsvRow {
    r: f64,
    t: f64,
    volume: f64,
    cutoff: u64,
    var_sample: Option<f64>,
    var_sample_error: Option<f64>,
    var_parseval: Option<f64>,
    parseval_tail: Option<f64>,
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
    w: Option<f64>,
    ratio: f64,
    ratio_error: f64,
    beta_fit: Option<f64>,
}

fn cmd_sweep(config: &ExperimentConfig, mut warnings: Vec<Warning>) -> Result<Output> {
    let body = config.body("sweep")?;
    let alpha = config.alpha.ok_or_else(|| Error::Config("`sweep` needs `alpha` (config or --alpha)".into()))?;
    let r_list = config.r_list("sweep")?;
    let wants = |e| config.estimators.is_empty() || config.estimators.contains(&e);
    let sampling = if wants(Estimator::Sampling) { config.sampling } else { None };
    if let Some(s) = sampling {
        s.validate()?;
    }
    let sweep = SweepConfig {
        cutoff: config.cutoff,
        parseval: wants(Estimator::Parseval),
        sampling,
        decomposition: body.is_smooth(),
        allow_outside_hypothesis: config.allow_outside_hypothesis,
    };
    let table = theorem_sweep(&body, alpha, &r_list, &sweep)?;
    warnings.extend(table.warnings.iter().map(|w| Warning::new("sweep", w.clone())));
    let quality_flag = table.rows.iter().any(|r| r.quadrature_flagged);
    let extra = [
        ("beta_fit", table.beta_fit.map_or("none".to_string(), |b| b.to_string())),
        ("beta_rows", table.beta_rows.to_string()),
    ];
    let rows: Vec<SweepCsvRow> = table
        .rows
        .iter()
        .map(|r| SweepCsvRow {
            r: r.r,
            t: r.t,
            volume: r.volume,
            cutoff: r.cutoff,
            var_sample: r.var_sample,
            var_sample_error: r.var_sample_error,
            var_parseval: r.var_parseval,
            parseval_tail: r.parseval_tail,
            x: r.x,
            y: r.y,
            z: r.z,
            w: r.w,
            ratio: r.ratio,
            ratio_error: r.ratio_error,
            beta_fit: table.beta_fit,
        })
        .collect();
    let primary = emit(Command::Sweep, config, &warnings, &table, &rows, &extra)?;
    Ok(Output { primary, sidecars: vec![], quality_flag })
}

#[derive(Serialize)]
struct OracleEntry {
    #[serde(flatten)]
    report: OracleReport,
    exact: bool,
    brute_force: Option<BruteForceResult>,
}

#[derive(Serialize)]
struct OracleRow {
    variant: Variant,
    n: u32,
    t: f64,
    mean: f64,
    variance: f64,
    mean_exact: String,
    variance_exact: String,
    brute_force_variance: Option<f64>,
}

fn cmd_oracle(config: &ExperimentConfig, warnings: Vec<Warning>) -> Result<Output> {
    let oc = config.oracle.clone().unwrap_or_else(OracleConfig::default);
    if oc.variants.is_empty() {
        return Err(Error::Config("oracle needs at least one variant".into()));
    }
    let exact_t = oc.t.exact()?.map(|q| BigRational::new((*q.numer()).into(), (*q.denom()).into()));
    let t = oc.t.as_f64()?;
    let grid = match config.sampling {
        Some(SamplingScheme::Grid { m }) => Some(m),
        Some(SamplingScheme::Random { .. }) => {
            return Err(Error::Config("the oracle brute-force check needs grid sampling".into()))
        }
        None => None,
    };
    let square = ConvexBody::<f64>::box_body(&[1.0, 1.0])?;
    let mut entries = Vec::new();
    for &variant in &oc.variants {
        let report = match &exact_t {
            Some(q) => square_stats::<BigRational>(variant, oc.n, q.clone())?.report(),
            None => square_stats::<f64>(variant, oc.n, t)?.report(),
        };
        let brute_force = match grid {
            Some(m) => {
                let (r, t) = variant.annulus_parameters(oc.n, t);
                Some(brute_force_variance(&crate::lattice::Annulus::new(square.clone(), r, t)?, m)?)
            }
            None => None,
        };
        entries.push(OracleEntry { report, exact: exact_t.is_some(), brute_force });
    }
    let rows: Vec<OracleRow> = entries
        .iter()
        .map(|e| OracleRow {
            variant: e.report.variant,
            n: e.report.n,
            t: e.report.t,
            mean: e.report.mean,
            variance: e.report.variance,
            mean_exact: e.report.mean_exact.clone(),
            variance_exact: e.report.variance_exact.clone(),
            brute_force_variance: e.brute_force.map(|b| b.variance),
        })
        .collect();
    let primary = emit(Command::Oracle, config, &warnings, &entries, &rows, &[])?;
    Ok(Output { primary, sidecars: vec![], quality_flag: false })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    /// Absolute tolerance on `|value - expected|`.
    pub tolerance: f64,
    pub passed: bool,
}

fn check(name: &'static str, value: f64, expected: f64, tolerance: f64) -> Check {
    Check { name, value, expected, tolerance, passed: (value - expected).abs() <= tolerance }
}

/// The selftest checks, in a fixed order.
pub fn selftest_checks() -> Result<Vec<Check>> {
    use std::f64::consts::PI;
    let rule2 = SphereRule::<f64>::standard(2);
    let rule3 = SphereRule::<f64>::standard(3);
    let disk = ConvexBody::<f64>::ball(2, 1.0)?;
    let ellipse = ConvexBody::<f64>::ellipsoid(&[2.0, 1.0])?;
    let ellipsoid = ConvexBody::<f64>::ellipsoid(&[2.0, 1.0, 1.0])?;
    let wobbly = ConvexBody::<f64>::perturbed_disk(1.0, vec![CosineTerm { harmonic: 3, amplitude: 0.05, phase: 0.0 }])?;
    let diagonal = Vect::from_f64(&[1.0, 1.0]).normalized();
    // ellipse (2, 1): K = h^3 / (a b)^2 with h = sqrt(2.5) on the diagonal
    let ellipse_k = 2.5f64.powf(1.5) / 4.0;
    let square = square_stats::<Rational64>(Variant::A, 3, Rational64::new(1, 8))?;
    Ok(vec![
        check("residue_integral", residue_integral_check::<f64>(), PI / 2.0, 1e-8),
        check("curvature_integral_disk", disk.curvature_integral(&rule2), 2.0 * PI, 2.0 * PI * 1e-6),
        check("curvature_integral_ellipse", ellipse.curvature_integral(&rule2), 4.0 * PI, 4.0 * PI * 1e-6),
        check("curvature_integral_ellipsoid", ellipsoid.curvature_integral(&rule3), 8.0 * PI, 8.0 * PI * 1e-6),
        check(
            "curvature_integral_perturbed_disk",
            wobbly.curvature_integral(&rule2),
            2.0 * wobbly.volume(),
            2.0 * wobbly.volume() * 1e-6,
        ),
        check("bessel_j0_1", bessel_j(BesselOrder::integer(0), 1.0)?, 0.765_197_686_557_966_6, 1e-13),
        check("bessel_j1_1", bessel_j(BesselOrder::integer(1), 1.0)?, 0.440_050_585_744_933_5, 1e-13),
        check("bessel_j3half_half_pi", bessel_j(BesselOrder::half(1), PI / 2.0)?, 4.0 / (PI * PI), 1e-13),
        check("ellipse_curvature_closed_form", ellipse.curvature(&diagonal)?, ellipse_k, 1e-12),
        check("ellipse_curvature_finite_difference", ellipse.curvature_finite_difference(&diagonal)?, ellipse_k, 1e-6),
        check("ball3_transform_half", ft_ball(3, 1.0, &Vect::from_f64(&[0.5, 0.0, 0.0]))?, 4.0 / PI, 1e-10),
        check("square_oracle_variance", (*square.variance.numer() as f64) / (*square.variance.denom() as f64), 31.5, 0.0),
    ])
}

fn cmd_selftest(config: &ExperimentConfig, warnings: Vec<Warning>) -> Result<Output> {
    let checks = selftest_checks()?;
    let quality_flag = checks.iter().any(|c| !c.passed);
    let primary = emit(Command::Selftest, config, &warnings, &checks, &checks, &[])?;
    Ok(Output { primary, sidecars: vec![], quality_flag })
}
