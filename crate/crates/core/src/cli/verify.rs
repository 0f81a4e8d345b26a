use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{build_kernel, genericity_mode, CliError};
use crate::cardinality::SetFamily;
use crate::document::{parse_subset_key, DocumentEntry, InputDocument, Matrix, NumericMode, Scalar};
use crate::lattice::{cumulative_superset_sum, inverse_mobius, mobius_transform, IndexSet};
use crate::operator::Operator;
use crate::partition::{integrate_density, shapley_via_integral, DiagonalDensity};
use crate::prebasis::ProjectorFamily;
use crate::quadrature::Quadrature;
use crate::random_sets::{ProbabilityVector, RandomSetDistribution};
use crate::resolution::{tau_curve_integral, FFunction, KernelMode, ResolutionKernel};
use crate::scalar::{rational_to_f64, Entry, ExactComplex, Field, Rational, C64};

/// One verification outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Check {
    fn residual(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            passed: measured.is_finite() && measured <= tolerance,
            measured: super::json::float(measured),
            tolerance: Some(tolerance),
        }
    }

    fn exact(name: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), passed, measured: json!(passed), tolerance: None }
    }

    fn failed(name: impl Into<String>, message: String) -> Self {
        Check { name: name.into(), passed: false, measured: json!(message), tolerance: None }
    }
}

#[derive(Debug, Default, Deserialize)]
struct Fixture {
    #[serde(default)]
    expected: Option<Expected>,
}

#[derive(Debug, Default, Deserialize)]
struct Expected {
    shapley: Option<Vec<Scalar>>,
    increments: Option<Vec<Vec<u64>>>,
    increment_averages: Option<Vec<Scalar>>,
    index_cardinality: Option<Scalar>,
    union_cardinality_average: Option<Scalar>,
    distribution: Option<Vec<DistributionRow>>,
    degenerate_subsets: Option<Vec<String>>,
    projectors: Option<Matrices<BTreeMap<String, Matrix>>>,
    increments_operators: Option<Matrices<Vec<Vec<Matrix>>>>,
    sigma: Option<Matrices<Vec<Matrix>>>,
    level_operators: Option<Matrices<Vec<Matrix>>>,
    f_coefficients: Option<Matrices<Vec<Vec<Scalar>>>>,
    moments: Option<Vec<MomentRow>>,
}

#[derive(Debug, Deserialize)]
struct DistributionRow {
    set: String,
    exact: Scalar,
    containing: Scalar,
    missing: Scalar,
}

/// Expected values with an absolute tolerance; zero means exact.
#[derive(Debug, Deserialize)]
struct Matrices<T> {
    #[serde(default)]
    tolerance: f64,
    values: T,
}

#[derive(Debug, Deserialize)]
struct MomentRow {
    mu: usize,
    nu: usize,
    value: Scalar,
    #[serde(default)]
    tolerance: f64,
}

const SEED: u64 = 0x5eed;

/// Runs every check that applies to the sections present, then compares
/// against the document's `expected` section.
pub fn verify_document(doc: &InputDocument, raw: &str, mode: NumericMode, strict: bool) -> Result<Vec<Check>, CliError> {
    let expected = serde_json::from_str::<Fixture>(raw).map_err(|e| CliError::Other(e.to_string()))?.expected.unwrap_or_default();
    let mut checks = Vec::new();
    let family = doc.family()?;
    if let Some(f) = &family {
        family_checks(f, doc, &mut checks)?;
        family_expectations(f, &expected, &mut checks)?;
    }
    match mode {
        NumericMode::Exact => {
            if let Some(p) = doc.probabilities_exact()? {
                probability_checks(&p, family.as_ref(), &mut checks)?;
            }
        }
        NumericMode::Double => {
            if let Some(p) = doc.probabilities_f64()? {
                probability_checks(&p, family.as_ref(), &mut checks)?;
            }
        }
    }
    if let (Some(f), Some(p)) = (&family, doc.probabilities_exact()?) {
        distribution_expectations(f, &p, &expected, &mut checks)?;
    }
    if let Some(basis) = doc.prebasis(genericity_mode(strict))? {
        if let Some(want) = &expected.degenerate_subsets {
            let got: Vec<String> = basis.genericity().degenerate().iter().map(ToString::to_string).collect();
            checks.push(Check { name: "degenerate subsets".into(), passed: &got == want, measured: json!(got), tolerance: None });
        }
    }
    if let Some(pf) = doc.projector_family(genericity_mode(strict))? {
        projector_checks(&pf, doc, strict, &expected, &mut checks)?;
        let exact = mode == NumericMode::Exact && doc.prebasis.is_none();
        if exact {
            if let Some(ef) = doc.projectors_exact()? {
                exact_projector_checks(&ef, doc, strict, &expected, &mut checks)?;
            }
        }
    }
    Ok(checks)
}

fn family_checks(f: &SetFamily, doc: &InputDocument, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let n = f.n();
    let mu = f.mu_rational();
    checks.push(Check::exact("Möbius roundtrip", inverse_mobius(&mobius_transform(&mu)) == mu));
    let totals = f.increment_totals();
    let full = IndexSet::full(n);
    let mut agree = true;
    for i in 0..n {
        let direct = f.shapley_direct(full, i)?;
        agree &= direct == totals.shapley[i]
            && direct == f.shapley_permutation(i)?
            && direct == shapley_via_integral(f, i)?;
    }
    checks.push(Check::exact("Shapley routes agree", agree));
    let union = mu.get(full).clone();
    let sum = totals.shapley.iter().fold(Rational::from_integer(0.into()), |a, b| a + b);
    checks.push(Check::exact("Shapley values sum to union size", sum == union));
    checks.push(Check::exact("diagonal density integrates to union size", DiagonalDensity::from_report(&totals).integral() == union));
    if let Some(curve) = doc.curve()? {
        let v = integrate_density(f, &curve, &Quadrature::default())?;
        checks.push(Check::residual("curve density integrates to union size", (v - rational_to_f64(&union)).abs(), 1e-8));
    }
    Ok(())
}

fn family_expectations(f: &SetFamily, e: &Expected, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let totals = f.increment_totals();
    if let Some(want) = &e.shapley {
        checks.push(Check::exact("expected Shapley values", rationals_equal(want, &totals.shapley)?));
    }
    if let Some(want) = &e.increment_averages {
        checks.push(Check::exact("expected increment averages", rationals_equal(want, &totals.increment_averages)?));
    }
    if let Some(want) = &e.increments {
        checks.push(Check::exact("expected increments", want == &f.increments()));
    }
    Ok(())
}

fn rationals_equal(want: &[Scalar], got: &[Rational]) -> Result<bool, CliError> {
    let want = want.iter().map(Scalar::to_rational).collect::<Result<Vec<_>, _>>()?;
    Ok(want == got)
}

fn distribution_expectations(
    f: &SetFamily,
    p: &ProbabilityVector<Rational>,
    e: &Expected,
    checks: &mut Vec<Check>,
) -> Result<(), CliError> {
    let dist = RandomSetDistribution::new(p.clone());
    if let Some(want) = &e.index_cardinality {
        checks.push(Check::exact("expected index cardinality", want.to_rational()? == dist.average_index_cardinality()));
    }
    if let Some(want) = &e.union_cardinality_average {
        let got = dist.average_union_cardinality(f)?;
        checks.push(Check::exact("expected union cardinality average", &want.to_rational()? == got.value()));
    }
    if let Some(rows) = &e.distribution {
        let mut ok = rows.len() == 1 << p.n();
        for row in rows {
            let s = parse_subset_key(&row.set)?;
            ok &= s.bits() >> p.n() == 0
                && row.exact.to_rational()? == *dist.exact().get(s)
                && row.containing.to_rational()? == *dist.containing().get(s)
                && row.missing.to_rational()? == *dist.missing().get(s);
        }
        checks.push(Check::exact("expected distribution table", ok));
    }
    Ok(())
}

fn diff<F: Field>(a: &F, b: &F) -> f64 {
    (a.clone() - b.clone()).to_f64().abs()
}

fn probability_checks<F: Field>(
    p: &ProbabilityVector<F>,
    family: Option<&SetFamily>,
    checks: &mut Vec<Check>,
) -> Result<(), CliError> {
    let tol = if F::EXACT { 0.0 } else { 1e-12 };
    let n = p.n();
    let dist = RandomSetDistribution::new(p.clone());
    let total = dist.exact().values().iter().cloned().fold(F::zero(), |a, b| a + b);
    checks.push(Check::residual("draw probabilities sum to one", diff(&total, &F::one()), tol));
    let cumulative = cumulative_superset_sum(dist.exact());
    let worst = IndexSet::all(n).map(|s| diff(cumulative.get(s), dist.containing().get(s))).fold(0.0, f64::max);
    checks.push(Check::residual("containing probabilities are cumulative", worst, tol));
    let worst = IndexSet::all(n)
        .map(|a| {
            let ie = a.subsets().fold(F::zero(), |acc, b| {
                let v = dist.containing().get(b).clone();
                if b.len() % 2 == 0 {
                    acc + v
                } else {
                    acc - v
                }
            });
            diff(&ie, dist.missing().get(a))
        })
        .fold(0.0, f64::max);
    checks.push(Check::residual("inclusion-exclusion for missing probabilities", worst, tol));
    if n <= 6 {
        let mut worst = 0.0f64;
        for a in IndexSet::all(n) {
            for b in IndexSet::all(n) {
                let (u, i) = (a.union(b), a.intersection(b));
                for t in [dist.exact(), dist.containing(), dist.missing()] {
                    let lhs = t.get(a).clone() * t.get(b).clone();
                    let rhs = t.get(u).clone() * t.get(i).clone();
                    worst = worst.max(diff(&lhs, &rhs));
                }
            }
        }
        checks.push(Check::residual("modularity", worst, tol));
    }
    if let Some(f) = family {
        let avg = dist.average_union_cardinality(f)?;
        checks.push(Check::residual("union average routes agree", avg.discrepancy(), tol));
        let grad = dist.gradient(f)?;
        checks.push(Check::exact("union average gradient is non-negative", grad.iter().all(|g| *g >= F::zero())));
    }
    Ok(())
}

fn projector_checks(
    pf: &ProjectorFamily<C64>,
    doc: &InputDocument,
    strict: bool,
    e: &Expected,
    checks: &mut Vec<Check>,
) -> Result<(), CliError> {
    let laws = pf.laws();
    checks.push(Check::residual("projector empty set", laws.empty_norm, 1e-12));
    checks.push(Check::residual("projector hermiticity", laws.hermiticity, 1e-12));
    checks.push(Check::residual("projector idempotency", laws.idempotency, 1e-10));
    checks.push(Check::residual("projector trace", laws.trace, 1e-10));
    checks.push(Check::residual("projector monotonicity", laws.monotonicity, 1e-10));
    if let Some(c) = laws.containment {
        checks.push(Check::residual("projector containment", c, 1e-10));
    }
    let table = pf.dressed_operators();
    let dc = table.checks();
    checks.push(Check::residual("dressed operators sum to identity", dc.theta_sum, 1e-10));
    checks.push(Check::residual("density routes agree", dc.sigma_routes, 1e-10));
    checks.push(Check::residual("density hermiticity", dc.sigma_hermiticity, 1e-12));
    checks.push(Check::residual("density positivity", dc.sigma_psd, 1e-10));
    // unit traces need every span to have full rank min(|A|, d)
    let (d, n) = (pf.dimension(), pf.n());
    let generic = IndexSet::all(n).all(|s| (pf.get(s).trace().re - s.len().min(d) as f64).abs() <= 1e-8);
    if generic {
        checks.push(Check::residual("density trace", dc.sigma_trace, 1e-10));
        checks.push(Check::residual("increment traces", dc.lambda_trace, 1e-9));
    }
    if let Some(m) = &e.projectors {
        let mut worst = 0.0f64;
        for (key, want) in &m.values {
            let set = parse_subset_key(key)?;
            if set.bits() >> pf.n() != 0 {
                worst = f64::INFINITY;
                continue;
            }
            worst = worst.max(matrix_distance(want, pf.get(set))?);
        }
        checks.push(Check::residual("expected projectors", worst, m.tolerance));
    }
    if let Some(p) = doc.probabilities_f64()? {
        checks.push(Check::residual("random projector routes agree", pf.random_projector_average(&p)?.discrepancy(), 1e-10));
    }
    let mut warnings = Vec::new();
    let kernel = match build_kernel(pf, strict, &mut warnings) {
        Ok(k) => k,
        Err(err) => {
            checks.push(Check::failed("kernel construction", err.to_string()));
            return Ok(());
        }
    };
    kernel_checks(&kernel, pf, doc, checks)?;
    if let Some(rho) = doc.density::<C64>(pf.dimension())? {
        match FFunction::new(&kernel, rho) {
            Ok(f) => f_checks(&f, checks)?,
            Err(err) => checks.push(Check::failed("density matrix", err.to_string())),
        }
    }
    Ok(())
}

fn matrix_distance<E: Entry>(want: &Matrix, got: &Operator<E>) -> Result<f64, CliError> {
    if want.len() != got.dim() || want.iter().any(|r| r.len() != got.dim()) {
        return Ok(f64::INFINITY);
    }
    let mut worst = 0.0f64;
    for (r, row) in want.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((C64::read(v)? - got.get(r, c).to_c64()).norm());
        }
    }
    Ok(worst)
}

fn matrix_equal(want: &Matrix, got: &Operator<ExactComplex>) -> Result<bool, CliError> {
    if want.len() != got.dim() || want.iter().any(|r| r.len() != got.dim()) {
        return Ok(false);
    }
    for (r, row) in want.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if &ExactComplex::read(v)? != got.get(r, c) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn kernel_checks(
    kernel: &ResolutionKernel<C64>,
    pf: &ProjectorFamily<C64>,
    doc: &InputDocument,
    checks: &mut Vec<Check>,
) -> Result<(), CliError> {
    let d = kernel.dimension();
    let id = Operator::<C64>::identity(d);
    let q = Quadrature::default();
    checks.push(Check::residual("level operators sum to identity", kernel.checks().sum_residual, 1e-12));
    checks.push(Check::residual("diagonal kernel integrates to identity", kernel.tau_integral_exact().distance(&id)?, 1e-12));
    checks.push(Check::residual("semi-axis kernel integrates to identity", kernel.t_integral(&q)?.distance(&id)?, 1e-10));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut reproduce = 0.0f64;
    let mut psd = 0.0f64;
    let mut trace = 0.0f64;
    for k in 0..10 {
        let t: f64 = rng.random_range(0.0..1.0);
        let x = t / (1.0 - t);
        let tk = kernel.t_kernel(&x)?;
        if k < 5 {
            reproduce = reproduce.max(kernel.reproduce(x, &q)?.distance(&tk)?);
        }
        let tau = kernel.tau_diagonal(&t)?;
        for m in [&tau, &tk] {
            psd = psd.max((-m.min_eigenvalue() / (1.0 + m.frobenius_norm())).max(0.0));
        }
        trace = trace.max((tau.trace().re - kernel.trace_tau(t)).abs());
    }
    checks.push(Check::residual("reproducing property", reproduce, 1e-8));
    checks.push(Check::residual("kernel positivity", psd, 1e-10));
    if kernel.mode() == KernelMode::Strict {
        checks.push(Check::residual("kernel trace identity", trace, 1e-12));
    }
    if let Some(curve) = doc.curve()? {
        let v = tau_curve_integral(pf, &curve, &q)?;
        checks.push(Check::residual("curve kernel integrates to identity", v.distance(&id)?, 1e-8));
    }
    Ok(())
}

fn f_checks(f: &FFunction<C64>, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let q = Quadrature::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sym = 0.0f64;
    for _ in 0..100 {
        let (a, b): (f64, f64) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        sym = sym.max((f.eval(&a, &b) - f.eval(&b, &a).conj()).norm());
    }
    checks.push(Check::residual("F conjugate symmetry", sym, 1e-12));
    let total = f.moment_by_quadrature(0, 0, &q)?;
    checks.push(Check::residual("F integrates to one", (total - C64::new(1.0, 0.0)).norm(), 1e-8));
    let mut marg = 0.0f64;
    for alpha in [0.0, 0.2, 1.0, 5.0] {
        let (rowwise, colwise) = f.marginals_by_quadrature(alpha, &q)?;
        let m = f.marginal(&alpha);
        marg = marg.max((rowwise - m).norm()).max((colwise - m).norm());
    }
    checks.push(Check::residual("marginals agree", marg, 1e-8));
    let grid = crate::resolution::GridSpec::axis((1e-3, 1e3), 999);
    let lowest = std::iter::once(0.0).chain(grid).map(|a| f.marginal(&a).re).fold(f64::INFINITY, f64::min);
    checks.push(Check::residual("marginal is non-negative", (-lowest).max(0.0), 1e-12));
    checks.push(Check::residual("marginal integrates to one", (f.marginal_integral(&q)? - 1.0).abs(), 1e-8));
    let mut worst = 0.0f64;
    for (mu, nu) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        if let Ok(exact) = f.moment(mu, nu) {
            worst = worst.max((exact - f.moment_by_quadrature(mu, nu, &q)?).norm());
        }
    }
    checks.push(Check::residual("moments match quadrature", worst, 1e-6));
    Ok(())
}

/// Exact-arithmetic checks and golden comparisons for explicit families.
fn exact_projector_checks(
    ef: &ProjectorFamily<ExactComplex>,
    doc: &InputDocument,
    strict: bool,
    e: &Expected,
    checks: &mut Vec<Check>,
) -> Result<(), CliError> {
    let table = ef.dressed_operators();
    let mut warnings = Vec::new();
    let kernel = match build_kernel(ef, strict, &mut warnings) {
        Ok(k) => k,
        Err(err) => {
            checks.push(Check::failed("exact kernel construction", err.to_string()));
            return Ok(());
        }
    };
    let d = ef.dimension();
    let sum = kernel.level_operators().iter().fold(Operator::zeros(d), |acc, r| acc.add(r).expect("same dimension"));
    checks.push(Check::exact("exact level operators sum to identity", sum == Operator::identity(d)));
    let golden = |name: &str, want: &[Matrix], got: &[Operator<ExactComplex>], tol: f64| -> Result<Check, CliError> {
        if want.len() != got.len() {
            return Ok(Check::failed(name, format!("expected {} matrices, got {}", want.len(), got.len())));
        }
        if tol == 0.0 {
            let mut ok = true;
            for (w, g) in want.iter().zip(got) {
                ok &= matrix_equal(w, g)?;
            }
            Ok(Check::exact(name, ok))
        } else {
            let mut worst = 0.0f64;
            for (w, g) in want.iter().zip(got) {
                worst = worst.max(matrix_distance(w, g)?);
            }
            Ok(Check::residual(name, worst, tol))
        }
    };
    if let Some(m) = &e.increments_operators {
        let want: Vec<Matrix> = m.values.iter().flatten().cloned().collect();
        let got: Vec<Operator<ExactComplex>> = table.lambda.iter().flatten().cloned().collect();
        checks.push(golden("expected increment operators", &want, &got, m.tolerance)?);
    }
    if let Some(m) = &e.sigma {
        checks.push(golden("expected densities", &m.values, &table.sigma, m.tolerance)?);
    }
    if let Some(m) = &e.level_operators {
        checks.push(golden("expected level operators", &m.values, kernel.level_operators(), m.tolerance)?);
    }
    if let Some(rho) = doc.density::<ExactComplex>(d)? {
        let f = FFunction::new(&kernel, rho)?;
        if let Some(m) = &e.f_coefficients {
            let got = f.numerator_coefficients();
            let mut worst = 0.0f64;
            let mut exact = got.len() == m.values.len();
            for (wr, gr) in m.values.iter().zip(&got) {
                exact &= wr.len() == gr.len();
                for (w, g) in wr.iter().zip(gr) {
                    let w = w.to_rational()?;
                    exact &= ExactComplex::from_real(w.clone()) == *g;
                    worst = worst.max((rational_to_f64(&w) - g.to_c64().re).abs() + g.to_c64().im.abs());
                }
            }
            if !exact && worst == 0.0 {
                worst = f64::INFINITY;
            }
            checks.push(if m.tolerance == 0.0 {
                Check::exact("expected F coefficients", exact)
            } else {
                Check::residual("expected F coefficients", worst, m.tolerance)
            });
        }
        for row in e.moments.iter().flatten() {
            let name = format!("expected moment ({}, {})", row.mu, row.nu);
            match f.moment(row.mu, row.nu) {
                Ok(v) => {
                    let want = ExactComplex::from_real(row.value.to_rational()?);
                    checks.push(if row.tolerance == 0.0 {
                        Check::exact(name, v == want)
                    } else {
                        Check::residual(name, (v.to_c64() - want.to_c64()).norm(), row.tolerance)
                    });
                }
                Err(err) => checks.push(Check::failed(name, err.to_string())),
            }
        }
    }
    Ok(())
}
