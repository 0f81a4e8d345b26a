//! Command-line front end.
//!
//! Every command reads one [`InputDocument`] and prints a JSON report on
//! stdout. Exit status is 0 on success, 1 on invalid input and 2 when a
//! verification fails.

mod json;
mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cardinality::SetFamily;
use crate::document::{DocumentEntry, DocumentError, InputDocument, NumericMode};
use crate::lattice::IndexSet;
use crate::operator::Operator;
use crate::partition::{integrate_density, DiagonalDensity, PartitionError};
use crate::prebasis::{GenericityMode, ProjectorFamily, ProjectorSource};
use crate::quadrature::Quadrature;
use crate::random_sets::{ProbabilityVector, RandomSetDistribution};
use crate::resolution::{FFunction, GridSpec, KernelMode, ResolutionError, ResolutionKernel};
use crate::sampling::{sample_projectors, sample_sets, SamplerConfig, SamplingError, ALGORITHM};
use crate::scalar::{Entry, Field, C64};

pub use json::ToJson;
pub use verify::{verify_document, Check};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "randproj", version, about = "Shapley cardinalities, random projectors and continuous resolutions of the identity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Overlap tables, Shapley cardinalities and random-set probabilities.
    Shapley(InputArgs),
    /// Level operators, kernels and the function F for a density matrix.
    Resolution(ResolutionArgs),
    /// Run every applicable check and compare against `expected` values.
    Verify(VerifyArgs),
    /// Sample random sets and projectors and compare with exact averages.
    Montecarlo(MonteCarloArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input document (JSON).
    pub input: PathBuf,
    /// Numeric mode; defaults to exact when all numbers are integers or text.
    #[arg(long, value_enum)]
    pub mode: Option<NumericMode>,
    /// Reject degenerate pre-bases and kernels whose levels are not density
    /// matrices.
    #[arg(long)]
    pub strict_prebasis: bool,
}

#[derive(Debug, Args)]
pub struct ResolutionArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Grid for the F CSV: x1min,x1max,x2min,x2max,points.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    /// Write F on the grid to this CSV, and its marginal next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Input document (JSON).
    pub input: Option<PathBuf>,
    /// Verify every `*.json` document in this directory.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<NumericMode>,
    #[arg(long)]
    pub strict_prebasis: bool,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Document(#[from] DocumentError),
    #[error("{0}")]
    Resolution(#[from] ResolutionError),
    #[error("{0}")]
    Partition(#[from] PartitionError),
    #[error("{0}")]
    Sampling(#[from] SamplingError),
    #[error("{0}")]
    Other(String),
}

macro_rules! other_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Other(e.to_string())
            }
        }
    )*};
}

other_errors!(crate::prebasis::PrebasisError, crate::operator::OperatorError, crate::random_sets::ProbabilityError, crate::cardinality::FamilyError, crate::quadrature::QuadratureError);

/// A finished command: the report to print and the exit status.
pub struct Outcome {
    pub report: Value,
    pub status: i32,
}

/// Parses arguments, runs the command, writes the report to `out` and
/// returns the exit status.
pub fn main_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return status;
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
            if writeln!(out, "{text}").is_err() {
                return EXIT_INVALID;
            }
            outcome.status
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Shapley(a) => {
            let doc = load(&a.input)?;
            Ok(Outcome { report: shapley(&doc, a.mode.unwrap_or(doc.numeric_mode()))?, status: EXIT_OK })
        }
        Command::Resolution(a) => {
            let doc = load(&a.input.input)?;
            Ok(Outcome { report: resolution(&doc, a)?, status: EXIT_OK })
        }
        Command::Verify(a) => verify_command(a),
        Command::Montecarlo(a) => montecarlo(a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load(path: &Path) -> Result<InputDocument, CliError> {
    Ok(InputDocument::parse(&read(path)?)?)
}

fn genericity_mode(strict: bool) -> GenericityMode {
    if strict {
        GenericityMode::Strict
    } else {
        GenericityMode::Permissive
    }
}

pub fn shapley(doc: &InputDocument, mode: NumericMode) -> Result<Value, CliError> {
    let family = doc.require_family()?;
    let n = family.n();
    let totals = family.increment_totals();
    let mu = family.mu_table();
    let q = |r: &crate::scalar::Rational| json::rational(r, mode);
    let diagonal = DiagonalDensity::from_report(&totals);
    let mut report = json!({
        "mode": mode,
        "family": family.to_spec(),
        "union_cardinality": mu.get(IndexSet::full(n)),
        "mu": json::table(&mu, |v| json!(v)),
        "overlaps": json::table(&family.overlap_table(), |v| q(v)),
        "shapley": totals.shapley.iter().map(q).collect::<Vec<_>>(),
        "increments": family.increments(),
        "increment_averages": totals.increment_averages.iter().map(q).collect::<Vec<_>>(),
        "diagonal_density": diagonal.formula(),
        "diagonal_integral": q(&diagonal.integral()),
    });
    match mode {
        NumericMode::Exact => {
            if let Some(p) = doc.probabilities_exact()? {
                distribution_report(&mut report, &p, &family)?;
            }
        }
        NumericMode::Double => {
            if let Some(p) = doc.probabilities_f64()? {
                distribution_report(&mut report, &p, &family)?;
            }
        }
    }
    if let Some(curve) = doc.curve()? {
        report["curve"] = json!(curve.to_spec());
        report["curve_integral"] = json::float(integrate_density(&family, &curve, &Quadrature::default())?);
    }
    Ok(report)
}

fn distribution_report<F: Field + ToJson>(
    report: &mut Value,
    p: &ProbabilityVector<F>,
    family: &SetFamily,
) -> Result<(), CliError> {
    let dist = RandomSetDistribution::new(p.clone());
    let mu = family.mu_table();
    let rows: Vec<Value> = IndexSet::all(p.n())
        .map(|s| {
            json!({
                "set": s.to_string(),
                "union": family.union_members(s).unwrap_or_default(),
                "mu": mu.get(s),
                "exact": dist.exact().get(s).to_json(),
                "containing": dist.containing().get(s).to_json(),
                "missing": dist.missing().get(s).to_json(),
            })
        })
        .collect();
    let union = dist.average_union_cardinality(family)?;
    report["probabilities"] = json::list(p.values());
    report["distribution"] = Value::Array(rows);
    report["index_cardinality"] = dist.average_index_cardinality().to_json();
    report["union_cardinality_average"] = union.value().to_json();
    report["union_cardinality_routes_discrepancy"] = json::float(union.discrepancy());
    report["gradient"] = json::list(&dist.gradient(family)?);
    Ok(())
}

/// Builds the kernel, falling back to relaxed mode with a warning unless
/// `strict`.
pub fn build_kernel<E: Entry>(
    family: &ProjectorFamily<E>,
    strict: bool,
    warnings: &mut Vec<String>,
) -> Result<ResolutionKernel<E>, ResolutionError> {
    let table = family.dressed_operators();
    match ResolutionKernel::new(&table, KernelMode::Strict) {
        Err(e @ ResolutionError::NotDensity { .. }) if !strict => {
            warnings.push(format!("{e}; using the relaxed kernel"));
            ResolutionKernel::new(&table, KernelMode::Relaxed)
        }
        r => r,
    }
}

pub fn resolution(doc: &InputDocument, args: &ResolutionArgs) -> Result<Value, CliError> {
    let strict = args.input.strict_prebasis;
    let mode = args.input.mode.unwrap_or(doc.numeric_mode());
    let mut warnings = Vec::new();
    let mut genericity = Value::Null;
    if let Some(basis) = doc.prebasis(genericity_mode(strict))? {
        warnings.extend(basis.warnings().iter().cloned());
        let g = basis.genericity();
        genericity = json!({
            "threshold": g.threshold,
            "degenerate": g.degenerate().iter().map(ToString::to_string).collect::<Vec<_>>(),
        });
    }
    let exact = mode == NumericMode::Exact && doc.prebasis.is_none() && doc.projectors.is_some();
    let mut report = if exact {
        let family = doc.projectors_exact()?.expect("projectors section present");
        resolution_report(&family, doc, args, &mut warnings)?
    } else {
        let family = doc.projector_family(genericity_mode(strict))?.ok_or(DocumentError::Missing("prebasis or projectors"))?;
        resolution_report(&family, doc, args, &mut warnings)?
    };
    report["mode"] = json!(if exact { NumericMode::Exact } else { NumericMode::Double });
    report["genericity"] = genericity;
    report["warnings"] = json!(warnings);
    Ok(report)
}

fn resolution_report<E: DocumentEntry + ToJson>(
    family: &ProjectorFamily<E>,
    doc: &InputDocument,
    args: &ResolutionArgs,
    warnings: &mut Vec<String>,
) -> Result<Value, CliError> {
    let (d, n) = (family.dimension(), family.n());
    let laws = family.laws();
    let table = family.dressed_operators();
    let checks = table.checks();
    let kernel = build_kernel(family, args.input.strict_prebasis, warnings)?;
    let ck = kernel.to_complex();
    let q = Quadrature::default();
    let id = Operator::<C64>::identity(d);
    let mobius = family.operator_mobius();
    let mobius_norms: Vec<f64> = (0..=n)
        .map(|k| {
            mobius.iter().filter(|(s, _)| s.len() == k).map(|(_, m)| m.frobenius_norm()).fold(0.0, f64::max)
        })
        .collect();
    let kc = kernel.checks();
    let tau: Vec<Value> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&t| {
            let m = ck.tau_diagonal(&t).expect("t in range");
            json!({"t": t, "trace": m.trace().re, "trace_formula": ck.trace_tau(t), "min_eigenvalue": m.min_eigenvalue()})
        })
        .collect();
    let t_samples: Vec<Value> = [0.0, 1.0, 10.0]
        .iter()
        .map(|&x| json!({"x": x, "matrix": json::matrix(&ck.t_kernel(&x).expect("x >= 0"))}))
        .collect();
    let mut residuals = json!({
        "tau_exact": ck.tau_integral_exact().distance(&id)?,
        "t_quadrature": ck.t_integral(&q)?.distance(&id)?,
    });
    if let Some(curve) = doc.curve()? {
        let cf = family.to_complex();
        residuals["tau_curve"] = json::float(crate::resolution::tau_curve_integral(&cf, &curve, &q)?.distance(&id)?);
    }
    let mut report = json!({
        "dimension": d,
        "n": n,
        "source": match family.source() {
            ProjectorSource::Computed => json!("computed"),
            ProjectorSource::Explicit => json!("explicit"),
            ProjectorSource::Mixed { explicit } => json!({"mixed": {"explicit": explicit}}),
        },
        "laws": {
            "empty_norm": laws.empty_norm,
            "hermiticity": laws.hermiticity,
            "idempotency": laws.idempotency,
            "trace": laws.trace,
            "monotonicity": laws.monotonicity,
            "containment": laws.containment,
        },
        "dressed": {
            "theta_sum": checks.theta_sum,
            "sigma_routes": checks.sigma_routes,
            "sigma_hermiticity": checks.sigma_hermiticity,
            "sigma_trace": checks.sigma_trace,
            "sigma_psd": checks.sigma_psd,
            "lambda_trace": checks.lambda_trace,
        },
        "mobius_norm_by_size": mobius_norms,
        "sigma": table.sigma.iter().map(json::matrix).collect::<Vec<_>>(),
        "increments": table.lambda.iter().map(|row| row.iter().map(json::matrix).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "kernel_mode": format!("{:?}", kernel.mode()).to_lowercase(),
        "level_operators": kernel.level_operators().iter().map(json::matrix).collect::<Vec<_>>(),
        "level_traces": kc.traces,
        "level_sum_residual": kc.sum_residual,
        "tau_samples": tau,
        "t_samples": t_samples,
        "residuals": residuals,
    });
    if let Some(rho) = doc.density::<E>(d)? {
        let f = FFunction::new(&kernel, rho)?;
        let coeffs: Vec<Value> = f.numerator_coefficients().iter().map(|row| json::list(row)).collect();
        let moments: Vec<Value> = [(0, 0), (1, 0), (0, 1), (1, 1)]
            .iter()
            .map(|&(mu, nu)| match f.moment(mu, nu) {
                Ok(v) => json!({"mu": mu, "nu": nu, "value": v.to_json()}),
                Err(e) => json!({"mu": mu, "nu": nu, "error": e.to_string()}),
            })
            .collect();
        report["f_coefficients"] = Value::Array(coeffs);
        report["moments"] = Value::Array(moments);
        let fc = f.to_complex();
        report["marginal"] = json!({"0": fc.marginal(&0.0).re, "1": fc.marginal(&1.0).re});
        if let Some(path) = &args.out {
            let grid = args.grid.unwrap_or_default();
            write_csv(path, |w| grid.write_f_grid(&fc, w))?;
            let marginal = marginal_path(path);
            write_csv(&marginal, |w| grid.write_marginal(&fc, w))?;
            report["outputs"] = json!([path, marginal]);
        }
    } else if args.out.is_some() {
        warnings.push("--out ignored: no `rho` or `state` section".into());
    }
    Ok(report)
}

/// `grid.csv` → `grid.marginal.csv`.
pub fn marginal_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.marginal.csv"))
}

fn write_csv(path: &Path, f: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err)
}

fn verify_command(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let mut docs: Vec<(String, String)> = Vec::new();
    if let Some(dir) = &args.fixtures {
        let entries = fs::read_dir(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            docs.push((p.file_name().expect("file").to_string_lossy().into_owned(), read(&p)?));
        }
    }
    if let Some(p) = &args.input {
        docs.push((p.display().to_string(), read(p)?));
    }
    if docs.is_empty() {
        return Err(CliError::Usage("verify needs an input document or --fixtures <dir>".into()));
    }
    let mut all_passed = true;
    let mut results = Vec::new();
    for (name, text) in &docs {
        let doc = InputDocument::parse(text).map_err(|e| CliError::Other(format!("{name}: {e}")))?;
        let mode = args.mode.unwrap_or(doc.numeric_mode());
        let checks = verify_document(&doc, text, mode, args.strict_prebasis)?;
        let passed = checks.iter().all(|c| c.passed);
        all_passed &= passed;
        results.push(json!({"document": name, "passed": passed, "checks": checks}));
    }
    Ok(Outcome {
        report: json!({"passed": all_passed, "documents": results}),
        status: if all_passed { EXIT_OK } else { EXIT_FAILED },
    })
}

fn montecarlo(args: &MonteCarloArgs) -> Result<Outcome, CliError> {
    let doc = load(&args.input.input)?;
    let p = doc.probabilities_f64()?.ok_or(DocumentError::Missing("probabilities"))?;
    let config = SamplerConfig { seed: args.seed, samples: args.samples };
    let family = doc.family()?;
    let sets = sample_sets(&p, family.as_ref(), config)?;
    let mut within = sets.within_band;
    let mut report = json!({
        "seed": args.seed,
        "algorithm": ALGORITHM,
        "samples": args.samples,
        "sets": sets,
    });
    if let Some(projectors) = doc.projector_family(genericity_mode(args.input.strict_prebasis))? {
        let r = sample_projectors(&projectors, &p, config)?;
        within &= r.within_band;
        report["projectors"] = json!(r);
    }
    report["within_band"] = json!(within);
    Ok(Outcome { report, status: if within { EXIT_OK } else { EXIT_FAILED } })
}
