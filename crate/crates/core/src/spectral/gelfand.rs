use std::io::Write;

use serde::Serialize;

use super::{detect_growth, dyadic_powers, log_of, normalise, weighted};
use crate::calib::{Calibration, Seminorm};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::oper::Operator;
use crate::quotient::{project_tol, spectral_set};
use crate::tol::Tolerances;

/// One entry `a_n = p̂(Tⁿ)^{1/n}` of a Gelfand sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GelfandTerm {
    pub n: u64,
    /// `p̂(Tⁿ)`; may over- or underflow for large `n`, `log_p_hat` does not.
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub p_hat: f64,
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub log_p_hat: f64,
    pub a_n: f64,
    pub running_inf: f64,
    /// Part of the repeated-squaring tail `n = 2^k > N`.
    pub dyadic: bool,
}

/// The sequence `(p̂(Tⁿ)^{1/n})` for `n = 1..N`, followed by `n = 2^k` for
/// `2^k > N` up to the configured number of doublings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GelfandTrace {
    pub seminorm: String,
    pub horizon: usize,
    pub terms: Vec<GelfandTerm>,
    /// Final running infimum.
    pub limit_estimate: f64,
    pub converged: bool,
    /// First `n` with `p̂(Tⁿ) = 0`, after which the limit is 0.
    pub terminated_at: Option<u64>,
}

impl GelfandTrace {
    pub fn a_values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.a_n).collect()
    }

    /// Terms `n = 1..N` only.
    pub fn plain_terms(&self) -> impl Iterator<Item = &GelfandTerm> {
        self.terms.iter().filter(|t| !t.dyadic)
    }

    pub fn running_inf_monotone(&self) -> bool {
        self.terms
            .windows(2)
            .all(|w| w[1].running_inf <= w[0].running_inf)
    }
}

pub fn gelfand_trace(t: &Operator, p: &Seminorm, n: usize) -> Result<GelfandTrace> {
    gelfand_trace_tol(t, p, n, &Tolerances::default())
}

pub fn gelfand_trace_tol(t: &Operator, p: &Seminorm, n: usize, tols: &Tolerances) -> Result<GelfandTrace> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("Gelfand horizon must be at least 2, got {n}")));
    }
    let q = project_tol(t, p, tols.zero)?;
    let w = weighted(q.matrix(), p.weights());
    let mut terms: Vec<GelfandTerm> = Vec::new();
    let mut inf = f64::INFINITY;
    let mut push = |terms: &mut Vec<GelfandTerm>, k: u64, log_p: f64, dyadic: bool| {
        let a = if log_p == f64::NEG_INFINITY { 0.0 } else { (log_p / k as f64).exp() };
        inf = inf.min(a);
        terms.push(GelfandTerm {
            n: k,
            p_hat: log_p.exp(),
            log_p_hat: log_p,
            a_n: a,
            running_inf: inf,
            dyadic,
        });
    };

    let mut terminated_at = None;
    let mut x = linalg::identity(w.nrows());
    let mut s = 0.0;
    for k in 1..=n {
        match normalise(&x * &w, s) {
            Some((nx, ns)) => {
                x = nx;
                s = ns;
                push(&mut terms, k as u64, log_of(linalg::inf_norm(&x), s), false);
            }
            None => {
                push(&mut terms, k as u64, f64::NEG_INFINITY, false);
                terminated_at = Some(k as u64);
                break;
            }
        }
    }

    if terminated_at.is_none() {
        terminated_at = dyadic_tail(&w, n, tols.dyadic_levels, |k, lp| push(&mut terms, k, lp, true));
    }

    let converged = terminated_at.is_some() || {
        let len = terms.len();
        let (a, b) = (terms[len - 2].a_n, terms[len - 1].a_n);
        (a - b).abs() <= tols.gelfand * b
    };
    Ok(GelfandTrace {
        seminorm: p.label(),
        horizon: n,
        limit_estimate: inf,
        terms,
        converged,
        terminated_at,
    })
}

/// `ln ‖w^{2^k}‖_∞` for every `2^k > n` with `k <= levels`. Returns the index
/// at which the power vanished, if any.
fn dyadic_tail(w: &CMatrix, n: usize, levels: u32, mut report: impl FnMut(u64, f64)) -> Option<u64> {
    dyadic_powers(w, n, levels, |idx, power| {
        report(idx, power.map_or(f64::NEG_INFINITY, |(x, s)| log_of(linalg::inf_norm(x), s)))
    })
}

/// `r_P` from quotient eigensolves: `max |λ|` over the spectral set.
pub fn oracle_radius(t: &Operator, cal: &Calibration, tols: &Tolerances) -> Result<f64> {
    Ok(spectral_set(t, cal, tols)?.radius())
}

/// `r_P(T)` as a Gelfand estimate and as an eigensolve oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusReport {
    pub calibration: String,
    /// Sup over seminorms of the Gelfand limits.
    pub r_p_estimate: f64,
    /// Largest modulus over the spectral set.
    pub r_p_oracle: f64,
    /// `|estimate − oracle|`.
    pub quality: f64,
    /// Per seminorm, the spectral radius of its quotient block.
    pub quotient_radii: Vec<f64>,
    pub per_seminorm: Vec<GelfandTrace>,
    /// `r_P(T) < ∞`: always true for a quotient bounded operator here.
    pub bounded_element: bool,
    /// Labels of traces that did not meet the convergence test.
    pub flagged: Vec<String>,
}

pub fn p_spectral_radius(t: &Operator, cal: &Calibration, n: usize, tols: &Tolerances) -> Result<RadiusReport> {
    let set = spectral_set(t, cal, tols)?;
    let per_seminorm = cal
        .iter()
        .map(|p| gelfand_trace_tol(t, p, n, tols))
        .collect::<Result<Vec<_>>>()?;
    let estimate = per_seminorm
        .iter()
        .map(|g| g.limit_estimate)
        .fold(0.0, f64::max);
    let oracle = set.radius();
    let flagged = per_seminorm
        .iter()
        .filter(|g| !g.converged)
        .map(|g| g.seminorm.clone())
        .collect();
    Ok(RadiusReport {
        calibration: cal.name().to_string(),
        r_p_estimate: estimate,
        r_p_oracle: oracle,
        quality: (estimate - oracle).abs(),
        quotient_radii: set.quotient_radii,
        per_seminorm,
        bounded_element: estimate.is_finite(),
        flagged,
    })
}

/// Gelfand traces as CSV rows `n, seminorm, p_hat_Tn, a_n, running_inf`.
pub fn write_traces_csv<W: Write>(traces: &[GelfandTrace], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
    out.write_record(["n", "seminorm", "p_hat_Tn", "a_n", "running_inf"])
        .map_err(io)?;
    for g in traces {
        for t in &g.terms {
            out.write_record([
                t.n.to_string(),
                g.seminorm.clone(),
                t.p_hat.to_string(),
                t.a_n.to_string(),
                t.running_inf.to_string(),
            ])
            .map_err(io)?;
        }
    }
    out.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SemigroupVerdict {
    Bounded,
    Growth { n: usize, seminorm: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupTrace {
    pub seminorm: String,
    /// `sup_{n<=N} p̂((T/α)ⁿ)`.
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub sup: f64,
    pub growth_at: Option<usize>,
}

/// Finite-horizon verdict on whether `α⁻¹T` generates a bounded semigroup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupCheck {
    pub alpha: f64,
    /// The verdict only covers `n <= horizon`.
    pub horizon: usize,
    pub verdict: SemigroupVerdict,
    pub per_seminorm: Vec<SemigroupTrace>,
}

impl SemigroupCheck {
    pub fn is_bounded(&self) -> bool {
        self.verdict == SemigroupVerdict::Bounded
    }
}

pub fn bounded_semigroup_check(
    t: &Operator,
    alpha: f64,
    cal: &Calibration,
    n: usize,
    tols: &Tolerances,
) -> Result<SemigroupCheck> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("α = {alpha} must be positive and finite")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let ln_alpha = alpha.ln();
    let ln_ceiling = tols.divergence_ceiling.ln();
    let mut per_seminorm = Vec::with_capacity(cal.len());
    let mut verdict = SemigroupVerdict::Bounded;
    for p in cal.iter() {
        let q = project_tol(t, p, tols.zero).map_err(|_| Error::NotQuotientBounded { seminorm: p.label() })?;
        let w = weighted(q.matrix(), p.weights());
        let mut logs = Vec::with_capacity(n);
        let mut cur = Some((linalg::identity(w.nrows()), 0.0));
        for k in 1..=n {
            cur = cur.and_then(|(x, s)| normalise(&x * &w, s));
            logs.push(match &cur {
                Some((x, s)) => log_of(linalg::inf_norm(x), *s) - k as f64 * ln_alpha,
                None => f64::NEG_INFINITY,
            });
        }
        let growth_at = detect_growth(&logs, ln_ceiling);
        if let (Some(k), SemigroupVerdict::Bounded) = (growth_at, &verdict) {
            verdict = SemigroupVerdict::Growth { n: k, seminorm: p.label() };
        }
        let sup = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();
        per_seminorm.push(SemigroupTrace {
            seminorm: p.label(),
            sup,
            growth_at,
        });
    }
    Ok(SemigroupCheck {
        alpha,
        horizon: n,
        verdict,
        per_seminorm,
    })
}
