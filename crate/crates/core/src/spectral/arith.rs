use serde::Serialize;

use super::gelfand::oracle_radius;
use crate::calib::Calibration;
use crate::error::Result;
use crate::linalg;
use crate::oper::Operator;
use crate::tol::Tolerances;

/// One radius relation. `passed` is `None` when the check was skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArithmeticCheck {
    pub name: String,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub passed: Option<bool>,
    pub notice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArithmeticReport {
    pub calibration: String,
    pub r_t: f64,
    pub r_s: f64,
    pub commuting: bool,
    /// `max |(TS − ST)_ij|`.
    pub commutator: f64,
    pub checks: Vec<ArithmeticCheck>,
    pub all_passed: bool,
}

fn slack(tols: &Tolerances, rhs: f64) -> f64 {
    tols.lin * rhs.abs().max(1.0)
}

fn le(name: &str, relation: &str, lhs: f64, rhs: f64, tols: &Tolerances) -> ArithmeticCheck {
    let slack = slack(tols, rhs);
    ArithmeticCheck {
        name: name.into(),
        relation: relation.into(),
        lhs,
        rhs,
        slack,
        passed: Some(lhs <= rhs + slack),
        notice: None,
    }
}

fn eq(name: &str, relation: &str, lhs: f64, rhs: f64, tols: &Tolerances) -> ArithmeticCheck {
    let slack = slack(tols, rhs);
    ArithmeticCheck {
        name: name.into(),
        relation: relation.into(),
        lhs,
        rhs,
        slack,
        passed: Some((lhs - rhs).abs() <= slack),
        notice: None,
    }
}

fn skipped(name: &str, relation: &str) -> ArithmeticCheck {
    ArithmeticCheck {
        name: name.into(),
        relation: relation.into(),
        lhs: f64::NAN,
        rhs: f64::NAN,
        slack: 0.0,
        passed: None,
        notice: Some("operators do not commute; relation requires TS = ST".into()),
    }
}

/// Product, sum and power relations for `r_P`, all on oracle radii.
pub fn radius_arithmetic_suite(
    t: &Operator,
    s: &Operator,
    cal: &Calibration,
    tols: &Tolerances,
) -> Result<ArithmeticReport> {
    let r_t = oracle_radius(t, cal, tols)?;
    let r_s = oracle_radius(s, cal, tols)?;
    let ts = t.compose(s)?;
    let st = s.compose(t)?;
    let scale = linalg::max_abs(ts.matrix())
        .max(linalg::max_abs(st.matrix()))
        .max(1.0);
    let commutator = linalg::max_abs(&(ts.matrix() - st.matrix()));
    let commuting = commutator <= tols.lin * scale;

    let mut checks = Vec::new();
    if commuting {
        let r_ts = oracle_radius(&ts, cal, tols)?;
        let r_sum = oracle_radius(&t.add(s)?, cal, tols)?;
        checks.push(le("product", "r(TS) <= r(T) r(S)", r_ts, r_t * r_s, tols));
        checks.push(le("sum", "r(T+S) <= r(T) + r(S)", r_sum, r_t + r_s, tols));
    } else {
        checks.push(skipped("product", "r(TS) <= r(T) r(S)"));
        checks.push(skipped("sum", "r(T+S) <= r(T) + r(S)"));
    }
    for (label, op, r) in [("T", t, r_t), ("S", s, r_s)] {
        for k in [2, 3] {
            let rk = oracle_radius(&op.power(k), cal, tols)?;
            checks.push(eq(
                &format!("power_{label}{k}"),
                &format!("r({label}^{k}) = r({label})^{k}"),
                rk,
                r.powi(k as i32),
                tols,
            ));
        }
    }
    let all_passed = checks.iter().all(|c| c.passed != Some(false));
    Ok(ArithmeticReport {
        calibration: cal.name().to_string(),
        r_t,
        r_s,
        commuting,
        commutator,
        checks,
        all_passed,
    })
}
