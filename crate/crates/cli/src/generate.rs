//! Seeded scenario generation.

use std::f64::consts::TAU;

use calspec::calib::CalibrationSpec;
use calspec::oper::OperatorSpec;
use calspec::random::{self, commuting_partner, seeded, GeneratorKind};
use calspec::spectral::oracle_radius;
use calspec::{Operator, Tolerances, C64};
use rand::Rng;
use serde_json::Map;

use crate::run::{NEUMANN_INSIDE, NEUMANN_OUTSIDE};
use crate::scenario::{NamedOperator, Scenario, Space, Task};

fn spec_for(kind: GeneratorKind, t: &Operator) -> OperatorSpec {
    let m = t.matrix();
    let n = t.dim();
    let split = |zs: Vec<C64>| {
        let im: Vec<f64> = zs.iter().map(|z| z.im).collect();
        let re = zs.iter().map(|z| z.re).collect();
        (re, im.iter().any(|&v| v != 0.0).then_some(im))
    };
    match kind {
        GeneratorKind::Shift => {
            let (weights, im) = split((0..n.saturating_sub(1)).map(|i| m[(i + 1, i)]).collect());
            OperatorSpec::Shift { dim: n, weights, im }
        }
        GeneratorKind::Diagonal => {
            let (entries, im) = split((0..n).map(|i| m[(i, i)]).collect());
            OperatorSpec::Diagonal { entries, im }
        }
        _ => OperatorSpec::from_operator(t),
    }
}

/// A scenario over a generated `(T, P)` pair with a commuting partner `S`,
/// covering every task kind.
pub fn generate(kind: GeneratorKind, n: usize, seed: u64) -> calspec::Result<Scenario> {
    let mut rng = seeded(seed);
    let inst = random::generate(kind, n, &mut rng)?;
    let partner = commuting_partner(&inst.operator, &mut rng);
    let theta = rng.random_range(0.0..TAU);

    let cal_name = inst.calibration.name().to_string();
    let r = oracle_radius(&inst.operator, &inst.calibration, &Tolerances::default())?;
    let (lambdas, alphas) = if r > 1e-3 {
        (
            vec![C64::from_polar(NEUMANN_OUTSIDE * r, theta), C64::new(NEUMANN_INSIDE * r, 0.0)],
            vec![0.5 * r, 2.0 * r],
        )
    } else {
        (vec![C64::from_polar(1.0, theta)], Vec::new())
    };

    let t = |s: &str| s.to_string();
    let tasks = vec![
        Task::Classify { id: None, operator: t("T"), calibration: cal_name.clone() },
        Task::Spectrum { id: None, operator: t("T"), calibration: cal_name.clone() },
        Task::Radius { id: None, operator: t("T"), calibration: cal_name.clone(), terms: None, alphas },
        Task::Gelfand { id: None, operator: t("T"), calibration: cal_name.clone(), seminorm: None, terms: None },
        Task::Resolvent { id: None, operator: t("T"), calibration: cal_name.clone(), lambdas, max_terms: None },
        Task::Properties { id: None, operator: t("T"), other: t("S"), calibration: cal_name.clone(), samples: None },
        Task::InfimumStudy { id: None, operator: t("T"), calibrations: vec![cal_name], m_values: None, terms: None },
    ];
    Ok(Scenario {
        space: Space { dim: n },
        seed: Some(seed),
        calibrations: vec![CalibrationSpec::from(&inst.calibration)],
        operators: vec![
            NamedOperator { name: t("T"), spec: spec_for(kind, &inst.operator) },
            NamedOperator { name: t("S"), spec: OperatorSpec::from_operator(&partner) },
        ],
        tasks,
        tolerances: Map::new(),
    })
}

/// Pretty JSON with a trailing newline; identical inputs give identical bytes.
pub fn to_json(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(s).expect("scenario serializes to JSON");
    out.push('\n');
    out
}
