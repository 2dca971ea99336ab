//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use calspec::calib::{augmented_calibration, principal_closure};
use calspec::oper::{self, classify};
use calspec::quotient::{project, spectral_set};
use calspec::random::{commuting_partner, complex_entry, generate, impose_invariance, permuted, random_invariant, seeded, GeneratorKind};
use calspec::spectral::{
    calibration_infimum_study, lb_radius, neumann_resolvent, oracle_radius, p_spectral_radius,
    perturbed_resolvent_series, radius_arithmetic_suite, resolvent_distance_check, NeumannStatus,
};
use calspec::{fixtures, linalg, Calibration, CMatrix, Operator, Seminorm, Tolerances, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_partner(t: &Operator, cal: &Calibration, rng: &mut ChaCha8Rng) -> Operator {
    let n = t.dim();
    let mut m = CMatrix::from_fn(n, n, |_, _| complex_entry(rng));
    impose_invariance(&mut m, cal);
    Operator::from_matrix(m).unwrap()
}

fn instance(rng: &mut ChaCha8Rng, k: usize, dims: std::ops::RangeInclusive<usize>) -> calspec::random::Instance {
    let n = rng.random_range(dims);
    let inst = generate(GeneratorKind::ALL[k % 4], n, rng).unwrap();
    permuted(&inst, rng).unwrap()
}

fn fixture_a_end_to_end() -> Outcome {
    let start = Instant::now();
    let tols = Tolerances::default();
    let (t, cal) = (fixtures::fixture_a(), fixtures::nested_unit(3));
    let set = spectral_set(&t, &cal, &tols).unwrap();
    let want = [C64::new(2.0, 0.0), C64::new(3.0, 0.0), C64::new(5.0, 0.0)];
    let set_ok = set.points.len() == 3 && linalg::sets_match(&set.values(), &want, 1e-8);
    let report = p_spectral_radius(&t, &cal, 200, &tols).unwrap();
    let oracle_ok = (report.r_p_oracle - 5.0).abs() <= 1e-8;
    let estimate_ok = (report.r_p_estimate - 5.0).abs() <= 1e-3;
    let elapsed = start.elapsed();
    outcome(
        set_ok && oracle_ok && estimate_ok && elapsed < Duration::from_secs(1),
        format!(
            "σ = {:?}, oracle {}, estimate {} at N=200, {elapsed:.2?}",
            set.values().iter().map(|z| z.re).collect::<Vec<_>>(),
            report.r_p_oracle,
            report.r_p_estimate
        ),
    )
}

fn neumann_dichotomy() -> Outcome {
    let start = Instant::now();
    let tols = Tolerances::default();
    let mut rng = seeded(1000);
    let (mut misclassified, mut inside_cases) = (0, 0);
    let mut worst_residual = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=50);
        let inst = random_invariant(n, &mut rng).unwrap();
        let (t, cal) = (&inst.operator, &inst.calibration);
        let r = oracle_radius(t, cal, &tols).unwrap();
        let theta = rng.random_range(0.0..TAU);
        let outside = neumann_resolvent(t, C64::from_polar(1.2 * r, theta), cal, tols.max_terms, &tols).unwrap();
        worst_residual = worst_residual.max(outside.max_residual());
        if !(outside.converged() && outside.max_residual() < 1e-8) {
            misclassified += 1;
        }
        if r > 1e-3 {
            inside_cases += 1;
            let inside = neumann_resolvent(t, C64::new(0.8 * r, 0.0), cal, tols.max_terms, &tols).unwrap();
            if inside.status != NeumannStatus::Diverged {
                misclassified += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        misclassified == 0 && elapsed < Duration::from_secs(30),
        format!(
            "50 instances, {inside_cases} inside cases, {misclassified} misclassified, worst residual {worst_residual:.1e}, {elapsed:.2?}"
        ),
    )
}

fn gelfand_agreement() -> Outcome {
    let tols = Tolerances::default();
    let mut rng = seeded(3000);
    let (mut traces, mut flags, mut mismatches, mut monotone_violations) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let inst = instance(&mut rng, k, 2..=30);
        let report = p_spectral_radius(&inst.operator, &inst.calibration, 200, &tols).unwrap();
        for (trace, &rho) in report.per_seminorm.iter().zip(&report.quotient_radii) {
            traces += 1;
            if !trace.running_inf_monotone() {
                monotone_violations += 1;
            }
            let rel = (trace.limit_estimate - rho).abs() / rho.max(1e-300);
            let agrees = trace.limit_estimate == rho || rel <= 1e-2;
            if !trace.converged {
                flags += 1;
            } else if !agrees {
                mismatches += 1;
            }
            if agrees {
                worst = worst.max(if rho > 0.0 { rel } else { 0.0 });
            }
        }
    }
    outcome(
        flags <= 5 && mismatches == 0 && monotone_violations == 0,
        format!(
            "{traces} traces over 100 instances, {flags} flagged, {mismatches} unflagged mismatches, worst relative error {worst:.1e}, {monotone_violations} monotonicity violations"
        ),
    )
}

#[derive(Default)]
struct Count {
    trials: usize,
    violations: usize,
}

impl Count {
    fn le(&mut self, lhs: f64, rhs: f64) {
        self.trials += 1;
        if lhs > rhs + 1e-10 * rhs.abs().max(1.0) {
            self.violations += 1;
        }
    }
}

fn inequality_suite() -> Outcome {
    let tols = Tolerances::default();
    let mut rng = seeded(4000);
    let names = ["submultiplicative", "subadditive", "chain", "product", "sum", "powers", "homogeneity"];
    let mut counts: Vec<Count> = names.iter().map(|_| Count::default()).collect();
    let mut skipped = 0;
    for k in 0..1000 {
        let inst = instance(&mut rng, k, 2..=10);
        let (t, cal) = (&inst.operator, &inst.calibration);
        let s = random_partner(t, cal, &mut rng);
        let (ts, sum) = (t.compose(&s).unwrap(), t.add(&s).unwrap());
        for p in cal.iter() {
            let (ct, cs) = (oper::p_hat(t, p), oper::p_hat(&s, p));
            counts[0].le(oper::p_hat(&ts, p), ct * cs);
            counts[1].le(oper::p_hat(&sum, p), ct + cs);
        }
        let pick = |rng: &mut ChaCha8Rng| &cal.seminorms()[rng.random_range(0..cal.len())];
        let (p, q, r) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let bound = oper::m_pq(t, r, q) * oper::m_pq(&s, p, r);
        if bound.is_finite() {
            counts[2].le(oper::m_pq(&ts, p, q), bound);
        }

        let partner = commuting_partner(t, &mut rng);
        let suite = radius_arithmetic_suite(t, &partner, cal, &tols).unwrap();
        if !suite.commuting {
            skipped += 1;
        }
        for c in &suite.checks {
            let slot = match c.name.as_str() {
                "product" => 3,
                "sum" => 4,
                _ => 5,
            };
            counts[slot].trials += 1;
            if c.passed != Some(true) {
                counts[slot].violations += 1;
            }
        }
        let c = complex_entry(&mut rng) * rng.random_range(0.1..10.0);
        let lhs = oracle_radius(&t.scale(c), cal, &tols).unwrap();
        let rhs = c.norm() * suite.r_t;
        counts[6].le(lhs, rhs);
        counts[6].le(rhs, lhs);
    }
    let total: usize = counts.iter().map(|c| c.violations).sum();
    let per: Vec<String> = names
        .iter()
        .zip(&counts)
        .map(|(n, c)| format!("{n} {}/{}", c.violations, c.trials))
        .collect();
    outcome(
        total == 0 && skipped == 0,
        format!("1000 trials; violations {}; non-commuting skips {skipped}", per.join(", ")),
    )
}

fn close_ulp(a: f64, b: f64) -> bool {
    (a - b).abs() <= (4.0 * f64::EPSILON * a.abs().max(b.abs())).max(1e-12)
}

fn homomorphism() -> Outcome {
    let mut rng = seeded(5000);
    let (mut checks, mut failures) = (0, 0);
    for k in 0..500 {
        let inst = instance(&mut rng, k, 1..=12);
        let (t, cal) = (&inst.operator, &inst.calibration);
        let s = random_partner(t, cal, &mut rng);
        let ts = t.compose(&s).unwrap();
        for p in cal.iter() {
            let (qt, qs, qts) = (project(t, p).unwrap(), project(&s, p).unwrap(), project(&ts, p).unwrap());
            let product = qt.matrix() * qs.matrix();
            let same = qts
                .matrix()
                .iter()
                .zip(product.iter())
                .all(|(a, b)| close_ulp(a.re, b.re) && close_ulp(a.im, b.im));
            let norm_ok = close_ulp(qt.norm(), oper::p_hat(t, p));
            checks += 1;
            if !(same && norm_ok) {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("500 trials, {checks} seminorm checks, {failures} failures (4 ulp or 1e-12)"),
    )
}

fn spectral_set_consistency() -> Outcome {
    let tols = Tolerances::default();
    let mut rng = seeded(6000);
    let mut bad = 0;
    for k in 0..100 {
        let inst = instance(&mut rng, k, 2..=40);
        assert!(inst.calibration.is_separating());
        let set = spectral_set(&inst.operator, &inst.calibration, &tols).unwrap();
        let eig = linalg::eigenvalues(inst.operator.matrix()).unwrap();
        if !linalg::sets_match(&set.values(), &eig, 1e-8) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("100 separating instances, {bad} mismatches at 1e-8"))
}

fn lb_for(t: &Operator, cal: &Calibration, tols: &Tolerances) -> Option<f64> {
    match lb_radius(t, cal, 200, tols) {
        Ok(r) => Some(r.estimate),
        Err(_) => {
            let closure = principal_closure(cal, tols.closure_cap);
            lb_radius(t, &closure.calibration, 200, tols).ok().map(|r| r.estimate)
        }
    }
}

fn lb_coherence() -> Outcome {
    let tols = Tolerances::default();
    let mut rng = seeded(7000);
    let weighted = calspec::random::shift(6, &mut rng).unwrap();
    let cases: Vec<(&str, Operator, Vec<Calibration>)> = vec![
        (
            "fixture A",
            fixtures::fixture_a(),
            vec![
                fixtures::nested_unit(3),
                Calibration::new("full", vec![fixtures::full_support(3)]).unwrap(),
            ],
        ),
        (
            "diagonal",
            fixtures::real_diagonal(&[1.0, -0.5, 2.0]),
            vec![
                Calibration::singletons("singletons", 3).unwrap(),
                Calibration::new(
                    "pairs",
                    vec![Seminorm::unit(3, &[0, 1]).unwrap(), Seminorm::unit(3, &[2]).unwrap()],
                )
                .unwrap(),
            ],
        ),
        ("shift", fixtures::fixture_b(), vec![fixtures::nested_unit(4)]),
        ("weighted shift", weighted.operator, vec![weighted.calibration]),
    ];
    let m_values = [0.5, 1.0, 2.0, 4.0];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, t, cals) in &cases {
        let eig = linalg::spectral_radius(t.matrix()).unwrap();
        let mut worst_gap = 0.0f64;
        let mut compared = 0;
        for cal in cals {
            let mut family = vec![cal.clone()];
            if let Some(w) = classify(t, cal).unwrap().witness {
                family.push(augmented_calibration(cal, &cal.seminorms()[w], &m_values).unwrap());
            } else {
                let closure = principal_closure(cal, tols.closure_cap).calibration;
                let w = classify(t, &closure).unwrap().witness.unwrap();
                family.push(augmented_calibration(&closure, &closure.seminorms()[w], &m_values).unwrap());
            }
            for c in &family {
                let Some(lb) = lb_for(t, c, &tols) else {
                    ok = false;
                    notes.push(format!("{name}/{}: no lb", c.name()));
                    continue;
                };
                worst_gap = worst_gap.max((lb - eig).abs());
                if (lb - eig).abs() > 1e-3 {
                    ok = false;
                }
                if c.is_separating() {
                    let r_p = spectral_set(t, c, &tols).unwrap().radius();
                    compared += 1;
                    if lb > r_p + 1e-3 {
                        ok = false;
                        notes.push(format!("{name}/{}: lb {lb} > r_P {r_p}", c.name()));
                    }
                }
            }
        }
        let study = calibration_infimum_study(t, cals, &m_values, 200, &tols).unwrap();
        if study.lb_bound_holds != Some(true) || study.augmented.iter().any(|a| a.floor_respected == Some(false)) {
            ok = false;
            notes.push(format!("{name}: study bound failed"));
        }
        notes.push(format!("{name} |lb-eig| ≤ {worst_gap:.1e} ({compared} r_P comparisons)"));
    }
    outcome(ok, notes.join("; "))
}

fn distance_bound() -> Outcome {
    let tols = Tolerances::default();
    let (t, cal) = (fixtures::fixture_a(), fixtures::nested_unit(3));
    let mut notes = Vec::new();
    let mut ok = true;
    for lambda in [C64::new(10.0, 0.0), C64::new(4.0, 4.0), C64::new(-3.0, 0.0)] {
        let d = resolvent_distance_check(&t, &cal, lambda, &tols).unwrap();
        ok &= d.bound_holds == Some(true);
        notes.push(format!("λ={lambda}: {:.4} ≥ {:.4}", d.norm, d.lower_bound));
    }
    let id = Operator::identity(3);
    let d = resolvent_distance_check(&id, &cal, C64::new(3.0, 0.0), &tols).unwrap();
    let equality = (d.norm - d.lower_bound).abs() <= 1e-12;
    ok &= d.bound_holds == Some(true) && equality;
    notes.push(format!("identity at λ=3: {} = {}", d.norm, d.lower_bound));
    outcome(ok, notes.join("; "))
}

fn openness() -> Outcome {
    let tols = Tolerances::default();
    let mut rng = seeded(9000);
    let cases: Vec<(&str, Operator, Calibration)> = vec![
        ("fixture A", fixtures::fixture_a(), fixtures::nested_unit(3)),
        ("shift", fixtures::fixture_b(), fixtures::nested_unit(4)),
        (
            "diagonal",
            fixtures::real_diagonal(&[1.0, -0.5, 2.0]),
            Calibration::singletons("singletons", 3).unwrap(),
        ),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, t, cal) in &cases {
        let set = spectral_set(t, cal, &tols).unwrap();
        let reach = 2.0 * set.radius().max(1.0) + 1.0;
        let (mut entered, mut series_failures) = (0, 0);
        let mut worst_gap = 0.0f64;
        for _ in 0..200 {
            let lambda = loop {
                let z = C64::new(rng.random_range(-reach..reach), rng.random_range(-reach..reach));
                if set.distance_to(z) > 0.1 {
                    break z;
                }
            };
            let norm = resolvent_distance_check(t, cal, lambda, &tols).unwrap().norm;
            let mu = C64::from_polar(rng.random_range(0.0..0.9) / norm, rng.random_range(0.0..TAU));
            if set.contains(lambda + mu, tols.spec) {
                entered += 1;
            }
            let series = perturbed_resolvent_series(t, cal, lambda, mu, &tols).unwrap();
            worst_gap = worst_gap.max(series.max_gap);
            if !(series.converged && series.max_gap <= 1e-8) {
                series_failures += 1;
            }
        }
        ok &= entered == 0 && series_failures == 0;
        notes.push(format!(
            "{name}: {entered} entered σ, {series_failures} series failures, worst gap {worst_gap:.1e}"
        ));
    }
    outcome(ok, format!("200 pairs each; {}", notes.join("; ")))
}

fn calspec_bin(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_calspec"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut files = 0;
    for (kind, n) in [("random-invariant", "12"), ("triangular-nested", "8"), ("shift", "6"), ("diagonal", "5")] {
        let mut runs = Vec::new();
        for round in 0..2 {
            let scenario = root.path().join(format!("{kind}-{round}.json"));
            let out = root.path().join(format!("{kind}-{round}"));
            let s = scenario.to_str().unwrap();
            let gen = calspec_bin(&["generate", "--kind", kind, "--n", n, "--seed", "2024", "--out", s]);
            let run = calspec_bin(&["run", s, "--out", out.to_str().unwrap(), "--seed", "5"]);
            ok &= gen == 0 && (run == 0 || run == 1);
            runs.push((fs::read(&scenario).unwrap(), dir_bytes(&out)));
        }
        ok &= runs[0] == runs[1];
        files += runs[0].1.len();
    }
    outcome(ok, format!("4 generated scenarios run twice, {files} report files compared byte for byte"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("Fixture A end-to-end", fixture_a_end_to_end),
        ("Neumann dichotomy", neumann_dichotomy),
        ("Gelfand-oracle agreement", gelfand_agreement),
        ("algebraic inequality suite", inequality_suite),
        ("quotient homomorphism and norm identity", homomorphism),
        ("spectral set equals eigenvalues", spectral_set_consistency),
        ("locally bounded radius coherence", lb_coherence),
        ("resolvent distance bound", distance_bound),
        ("resolvent set openness", openness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {}", i + 1, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
