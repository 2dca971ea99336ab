//! Task execution and report writing.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use calspec::oper::{self, classify_tol};
use calspec::quotient::{project_tol, spectral_set};
use calspec::random::{complex_entry, seeded};
use calspec::spectral::{
    bounded_semigroup_check, calibration_infimum_study, gelfand_trace_tol, lb_radius, neumann_resolvent,
    oracle_radius, p_spectral_radius, radius_arithmetic_suite, resolvent_distance_check, write_traces_csv,
    NeumannStatus,
};
use calspec::{linalg, Calibration, Operator, Tolerances, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::scenario::{Resolved, Task};
use crate::CliError;

/// Default augmentation multipliers for `infimum-study`.
pub const DEFAULT_M_VALUES: [f64; 3] = [1.0, 2.0, 4.0];
/// Default number of random vectors for `properties`.
pub const DEFAULT_SAMPLES: usize = 100;
/// `|λ|/r_P` at or beyond which a Neumann series is expected to converge,
/// and its reciprocal-side counterpart below which it must diverge.
pub const NEUMANN_OUTSIDE: f64 = 1.2;
pub const NEUMANN_INSIDE: f64 = 0.8;
/// Relative margin around `r_P` outside which a semigroup verdict is checked.
pub const SEMIGROUP_MARGIN: f64 = 0.1;

/// Command-line overrides applied on top of the scenario's tolerances.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_neumann: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relax_zero: Option<f64>,
}

impl RunOptions {
    pub fn apply(&self, tols: &mut Tolerances) {
        if let Some(v) = self.tol_radius {
            tols.radius = v;
        }
        if let Some(v) = self.tol_neumann {
            tols.neumann = v;
        }
        if let Some(v) = self.max_terms {
            tols.max_terms = v;
        }
        if let Some(v) = self.relax_zero {
            tols.zero = v;
        }
    }

    fn check(&self) -> Result<(), CliError> {
        let positive = |flag: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => {
                Err(CliError::Usage(format!("--{flag} must be positive and finite, got {x}")))
            }
            _ => Ok(()),
        };
        positive("tol-radius", self.tol_radius)?;
        positive("tol-neumann", self.tol_neumann)?;
        positive("relax-zero", self.relax_zero)?;
        if self.max_terms == Some(0) {
            return Err(CliError::Usage("--max-terms must be positive".into()));
        }
        Ok(())
    }
}

/// A named pass/fail assertion inside a task report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn check(name: impl Into<String>, passed: bool, detail: Option<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// Result of one task before anything is written.
#[derive(Debug, Clone)]
pub struct TaskOutcome {
    pub id: String,
    pub kind: &'static str,
    pub spec: Value,
    pub checks: Vec<Check>,
    pub result: Option<Value>,
    pub error: Option<String>,
    /// `(file suffix, contents)` pairs.
    pub csv: Vec<(&'static str, Vec<u8>)>,
}

impl TaskOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub id: String,
    pub task: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub failed_checks: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub tolerance_overrides: Map<String, Value>,
    pub cli_overrides: RunOptions,
    pub tolerances: Tolerances,
    pub tasks: Vec<SummaryEntry>,
    pub passed: bool,
    pub exit_code: i32,
}

struct Context<'a> {
    resolved: &'a Resolved,
    tols: Tolerances,
    seed: u64,
}

impl Context<'_> {
    fn op(&self, name: &str) -> &Operator {
        &self.resolved.operators[name]
    }

    fn cal(&self, name: &str) -> &Calibration {
        &self.resolved.calibrations[name]
    }
}

type Computed = calspec::Result<(Value, Vec<Check>, Vec<(&'static str, Vec<u8>)>)>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

fn traces_csv(traces: &[calspec::spectral::GelfandTrace]) -> calspec::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_traces_csv(traces, &mut buf)?;
    Ok(buf)
}

fn classify_task(ctx: &Context, operator: &str, calibration: &str) -> Computed {
    let report = classify_tol(ctx.op(operator), ctx.cal(calibration), ctx.tols.zero)?;
    Ok((to_value(&report), Vec::new(), Vec::new()))
}

fn spectrum_task(ctx: &Context, operator: &str, calibration: &str) -> Computed {
    let (t, cal) = (ctx.op(operator), ctx.cal(calibration));
    let set = spectral_set(t, cal, &ctx.tols)?;
    let mut checks = Vec::new();
    let mut eig = None;
    if cal.is_separating() {
        let values = linalg::eigenvalues(t.matrix())?;
        let ok = linalg::sets_match(&set.values(), &values, ctx.tols.spec);
        checks.push(check("matches_eigenvalues", ok, None));
        eig = Some(values);
    }
    let mut csv = Vec::new();
    set.write_csv(&mut csv)?;
    let result = json!({
        "spectral_set": set,
        "radius": set.radius(),
        "separating": cal.is_separating(),
        "eigenvalues": eig,
    });
    Ok((result, checks, vec![("spectrum", csv)]))
}

fn radius_task(ctx: &Context, operator: &str, calibration: &str, terms: Option<usize>, alphas: &[f64]) -> Computed {
    let (t, cal) = (ctx.op(operator), ctx.cal(calibration));
    let n = terms.unwrap_or(ctx.tols.terms);
    let report = p_spectral_radius(t, cal, n, &ctx.tols)?;
    let r = report.r_p_oracle;
    let mut checks = vec![
        check(
            "estimate_matches_oracle",
            report.quality <= ctx.tols.radius * r.max(1.0),
            Some(format!("|estimate - oracle| = {:e}", report.quality)),
        ),
        check(
            "running_inf_monotone",
            report.per_seminorm.iter().all(|tr| tr.running_inf_monotone()),
            None,
        ),
    ];

    let lb = match lb_radius(t, cal, n, &ctx.tols) {
        Ok(lb) => {
            if cal.is_separating() {
                checks.push(check(
                    "lb_below_radius",
                    lb.estimate <= r + ctx.tols.radius,
                    Some(format!("r_lb = {}, r_P = {r}", lb.estimate)),
                ));
            }
            json!(lb)
        }
        Err(e) => json!({ "error": e.to_string() }),
    };

    let mut semigroup = Vec::new();
    for &alpha in alphas {
        let sg = bounded_semigroup_check(t, alpha, cal, n, &ctx.tols)?;
        if alpha > r * (1.0 + SEMIGROUP_MARGIN) {
            checks.push(check(format!("semigroup_bounded[alpha={alpha}]"), sg.is_bounded(), None));
        } else if alpha < r * (1.0 - SEMIGROUP_MARGIN) {
            checks.push(check(format!("semigroup_growth[alpha={alpha}]"), !sg.is_bounded(), None));
        }
        semigroup.push(sg);
    }

    let csv = traces_csv(&report.per_seminorm)?;
    let result = json!({ "radius": report, "lb_radius": lb, "semigroup": semigroup });
    Ok((result, checks, vec![("traces", csv)]))
}

fn gelfand_task(ctx: &Context, operator: &str, calibration: &str, seminorm: Option<usize>, terms: Option<usize>) -> Computed {
    let (t, cal) = (ctx.op(operator), ctx.cal(calibration));
    let n = terms.unwrap_or(ctx.tols.terms);
    let picked: Vec<usize> = match seminorm {
        Some(k) => vec![k - 1],
        None => (0..cal.len()).collect(),
    };
    let mut traces = Vec::new();
    let mut radii = Vec::new();
    let mut checks = Vec::new();
    for k in picked {
        let p = &cal.seminorms()[k];
        let trace = gelfand_trace_tol(t, p, n, &ctx.tols)?;
        let rho = linalg::spectral_radius(project_tol(t, p, ctx.tols.zero)?.matrix())?;
        let gap = (trace.limit_estimate - rho).abs();
        checks.push(check(
            format!("limit_matches_quotient_radius[{}]", p.label()),
            gap <= ctx.tols.radius * rho.max(1.0),
            Some(format!("limit = {}, quotient radius = {rho}", trace.limit_estimate)),
        ));
        checks.push(check(
            format!("running_inf_monotone[{}]", p.label()),
            trace.running_inf_monotone(),
            None,
        ));
        radii.push(rho);
        traces.push(trace);
    }
    let csv = traces_csv(&traces)?;
    let result = json!({ "traces": traces, "quotient_radii": radii });
    Ok((result, checks, vec![("traces", csv)]))
}

fn resolvent_task(ctx: &Context, operator: &str, calibration: &str, lambdas: &[C64], max_terms: Option<usize>) -> Computed {
    let (t, cal) = (ctx.op(operator), ctx.cal(calibration));
    let budget = max_terms.unwrap_or(ctx.tols.max_terms);
    let r = oracle_radius(t, cal, &ctx.tols)?;
    let mut checks = Vec::new();
    let mut entries = Vec::new();
    for (k, &lambda) in lambdas.iter().enumerate() {
        let neumann = neumann_resolvent(t, lambda, cal, budget, &ctx.tols);
        let distance = resolvent_distance_check(t, cal, lambda, &ctx.tols);
        let ratio = if r > 0.0 { lambda.norm() / r } else { f64::INFINITY };
        let expected = if ratio >= NEUMANN_OUTSIDE {
            Some(NeumannStatus::Converged)
        } else if ratio <= NEUMANN_INSIDE {
            Some(NeumannStatus::Diverged)
        } else {
            None
        };
        if let (Some(want), Ok(res)) = (expected, &neumann) {
            checks.push(check(
                format!("neumann_status[{k}]"),
                res.status == want,
                Some(format!("|λ|/r_P = {ratio:.6}, status {:?}", res.status)),
            ));
        }
        if let Ok(d) = &distance {
            if let Some(ok) = d.bound_holds {
                checks.push(check(
                    format!("distance_bound[{k}]"),
                    ok,
                    Some(format!("norm = {:e}, 1/d = {:e}", d.norm, d.lower_bound)),
                ));
            }
        }
        entries.push(json!({
            "lambda": lambda,
            "abs_over_radius": ratio,
            "expected_status": expected,
            "neumann": neumann.map(|v| to_value(&v)).unwrap_or_else(|e| json!({ "error": e.to_string() })),
            "distance_check": distance.map(|v| to_value(&v)).unwrap_or_else(|e| json!({ "error": e.to_string() })),
        }));
    }
    let result = json!({ "r_p_oracle": r, "max_terms": budget, "lambdas": entries });
    Ok((result, checks, Vec::new()))
}

struct Tally {
    name: &'static str,
    trials: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            violations: 0,
            worst: 0.0,
        }
    }

    /// Records `lhs <= rhs` with slack `lin·max(1, |rhs|)`.
    fn le(&mut self, lhs: f64, rhs: f64, lin: f64) {
        if !(lhs.is_finite() && rhs.is_finite()) {
            return;
        }
        self.trials += 1;
        let excess = lhs - rhs - lin * rhs.abs().max(1.0);
        if excess > 0.0 {
            self.violations += 1;
            self.worst = self.worst.max(excess);
        }
    }

    fn eq(&mut self, lhs: f64, rhs: f64, lin: f64) {
        self.le(lhs, rhs, lin);
        self.le(rhs, lhs, lin);
    }

    fn finish(self) -> Check {
        check(
            self.name,
            self.violations == 0,
            Some(format!(
                "{} trials, {} violations, worst excess {:e}",
                self.trials, self.violations, self.worst
            )),
        )
    }
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n).map(|_| complex_entry(rng)).collect()
}

fn properties_task(ctx: &Context, operator: &str, other: &str, calibration: &str, samples: Option<usize>) -> Computed {
    let (t, s, cal) = (ctx.op(operator), ctx.op(other), ctx.cal(calibration));
    let lin = ctx.tols.lin;
    let tau = ctx.tols.zero;
    let suite = radius_arithmetic_suite(t, s, cal, &ctx.tols)?;
    let mut checks: Vec<Check> = suite
        .checks
        .iter()
        .filter_map(|c| c.passed.map(|ok| check(format!("arithmetic.{}", c.name), ok, None)))
        .collect();

    let ts = t.compose(s)?;
    let sum = t.add(s)?;
    let mut submult = Tally::new("p_hat_submultiplicative");
    let mut subadd = Tally::new("p_hat_subadditive");
    let mut chain = Tally::new("m_pq_chain_bound");
    let mut vectors = Tally::new("vector_bound");
    let mut tight = Tally::new("p_hat_attained");
    let mut homogeneity = Tally::new("radius_homogeneity");
    let mut rng = seeded(ctx.seed);
    for p in cal.iter() {
        let (ct, cs) = (oper::p_hat_tol(t, p, tau), oper::p_hat_tol(s, p, tau));
        submult.le(oper::p_hat_tol(&ts, p, tau), ct * cs, lin);
        subadd.le(oper::p_hat_tol(&sum, p, tau), ct + cs, lin);
        for q in cal.iter() {
            for r in cal.iter() {
                let bound = oper::m_pq_tol(t, r, q, tau) * oper::m_pq_tol(s, p, r, tau);
                chain.le(oper::m_pq_tol(&ts, p, q, tau), bound, lin);
            }
        }
        if let Some(x) = oper::norming_vector(t, p) {
            let px = p.eval(&x)?;
            tight.eq(p.eval(&t.apply(&x)?)?, ct * px, lin);
        }
    }
    for _ in 0..samples.unwrap_or(DEFAULT_SAMPLES) {
        let x = random_vector(t.dim(), &mut rng);
        let tx = t.apply(&x)?;
        for p in cal.iter() {
            vectors.le(p.eval(&tx)?, oper::p_hat_tol(t, p, tau) * p.eval(&x)?, lin);
        }
    }
    let r_t = suite.r_t;
    for _ in 0..8 {
        let c = complex_entry(&mut rng) * rng.random_range(0.1..10.0);
        homogeneity.eq(oracle_radius(&t.scale(c), cal, &ctx.tols)?, c.norm() * r_t, lin);
    }
    let c0 = C64::from_polar(1.0, rng.random_range(0.0..TAU));
    homogeneity.eq(oracle_radius(&t.scale(c0), cal, &ctx.tols)?, r_t, lin);
    checks.extend([submult, subadd, chain, vectors, tight, homogeneity].map(Tally::finish));
    let result = json!({ "seed": ctx.seed, "arithmetic": suite });
    Ok((result, checks, Vec::new()))
}

fn infimum_task(ctx: &Context, operator: &str, calibrations: &[String], m_values: Option<&[f64]>, terms: Option<usize>) -> Computed {
    let t = ctx.op(operator);
    let cals: Vec<Calibration> = calibrations.iter().map(|c| ctx.cal(c).clone()).collect();
    let n = terms.unwrap_or(ctx.tols.terms);
    let study = calibration_infimum_study(t, &cals, m_values.unwrap_or(&DEFAULT_M_VALUES), n, &ctx.tols)?;
    let mut checks = Vec::new();
    if let Some(ok) = study.lb_bound_holds {
        checks.push(check("lb_below_separating_radii", ok, None));
    }
    if let Some(ok) = study.principal_inclusion {
        checks.push(check("eigenvalues_in_principal_intersection", ok, None));
    }
    for a in &study.augmented {
        if let Some(ok) = a.floor_respected {
            checks.push(check(format!("augmented_floor[{}]", a.calibration), ok, None));
        }
    }
    Ok((to_value(&study), checks, Vec::new()))
}

fn execute(ctx: &Context, index: usize, task: &Task) -> TaskOutcome {
    let computed = match task {
        Task::Classify { operator, calibration, .. } => classify_task(ctx, operator, calibration),
        Task::Spectrum { operator, calibration, .. } => spectrum_task(ctx, operator, calibration),
        Task::Radius { operator, calibration, terms, alphas, .. } => {
            radius_task(ctx, operator, calibration, *terms, alphas)
        }
        Task::Gelfand { operator, calibration, seminorm, terms, .. } => {
            gelfand_task(ctx, operator, calibration, *seminorm, *terms)
        }
        Task::Resolvent { operator, calibration, lambdas, max_terms, .. } => {
            resolvent_task(ctx, operator, calibration, lambdas, *max_terms)
        }
        Task::Properties { operator, other, calibration, samples, .. } => {
            properties_task(ctx, operator, other, calibration, *samples)
        }
        Task::InfimumStudy { operator, calibrations, m_values, terms, .. } => {
            infimum_task(ctx, operator, calibrations, m_values.as_deref(), *terms)
        }
    };
    let id = task
        .id()
        .map(str::to_string)
        .unwrap_or_else(|| format!("{:02}-{}", index + 1, task.kind()));
    let (result, checks, csv, error) = match computed {
        Ok((r, c, f)) => (Some(r), c, f, None),
        Err(e) => (None, Vec::new(), Vec::new(), Some(e.to_string())),
    };
    TaskOutcome {
        id,
        kind: task.kind(),
        spec: to_value(task),
        checks,
        result,
        error,
        csv,
    }
}

/// Effective tolerances and seed for a validated scenario.
pub fn effective(resolved: &Resolved, opts: &RunOptions) -> (Tolerances, u64) {
    let mut tols = resolved.tolerances;
    opts.apply(&mut tols);
    (tols, opts.seed.or(resolved.scenario.seed).unwrap_or(0))
}

/// Runs every task, concurrently, returning outcomes in task order.
pub fn execute_all(resolved: &Resolved, opts: &RunOptions) -> Vec<TaskOutcome> {
    let (tols, seed) = effective(resolved, opts);
    let ctx = Context { resolved, tols, seed };
    let ctx = &ctx;
    std::thread::scope(|scope| {
        let handles: Vec<_> = resolved
            .scenario
            .tasks
            .iter()
            .enumerate()
            .map(|(i, task)| scope.spawn(move || execute(ctx, i, task)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("task thread panicked"))
            .collect()
    })
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("report types serialize to JSON");
    s.push(b'\n');
    s
}

/// Runs a validated scenario and writes `<id>.json`, `<id>.<kind>.csv` and
/// `summary.json` into `out`.
pub fn run(resolved: &Resolved, out: &Path, opts: &RunOptions) -> Result<RunSummary, CliError> {
    opts.check()?;
    let (tols, seed) = effective(resolved, opts);
    let outcomes = execute_all(resolved, opts);
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;

    let overrides = &resolved.scenario.tolerances;
    let mut tasks = Vec::new();
    for o in &outcomes {
        let mut files = vec![format!("{}.json", o.id)];
        for (suffix, bytes) in &o.csv {
            let name = format!("{}.{suffix}.csv", o.id);
            write(out.join(&name), bytes)?;
            files.push(name);
        }
        let report = json!({
            "id": o.id,
            "task": o.kind,
            "spec": o.spec,
            "tolerance_overrides": overrides,
            "cli_overrides": opts,
            "tolerances": tols,
            "zero_relaxed": tols.zero_relaxed(),
            "passed": o.passed(),
            "checks": o.checks,
            "result": o.result,
            "error": o.error,
        });
        write(out.join(&files[0]), &pretty(&report))?;
        tasks.push(SummaryEntry {
            id: o.id.clone(),
            task: o.kind.to_string(),
            passed: o.passed(),
            error: o.error.clone(),
            failed_checks: o.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect(),
            files,
        });
    }
    let passed = tasks.iter().all(|t| t.passed);
    let summary = RunSummary {
        seed,
        tolerance_overrides: overrides.clone(),
        cli_overrides: opts.clone(),
        tolerances: tols,
        tasks,
        passed,
        exit_code: if passed { 0 } else { 1 },
    };
    write(out.join("summary.json"), &pretty(&summary))?;
    Ok(summary)
}
