use serde::{Serialize, Serializer};

use super::{compress, detect_growth};
use crate::calib::Calibration;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::oper::{self, Operator, OperatorSpec};
use crate::quotient::{project_tol, quotient_resolvent, spectral_set, weighted_norm};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NeumannStatus {
    Converged,
    Diverged,
    MaxTerms,
}

/// Componentwise comparison of the partial sum with a dense inverse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub max_gap: f64,
    /// `max(1, ‖λI−T‖_∞ ‖(λI−T)⁻¹‖_∞)`.
    pub cond_factor: f64,
    pub passed: bool,
}

fn ser_operator<S: Serializer>(t: &Operator, s: S) -> std::result::Result<S::Ok, S::Error> {
    OperatorSpec::from_operator(t).serialize(s)
}

/// Outcome of summing `Σ_{k<m} Tᵏ/λᵏ⁺¹`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventResult {
    pub lambda: C64,
    #[serde(serialize_with = "ser_operator")]
    pub partial_sum: Operator,
    /// Number of nonzero terms summed.
    pub terms: usize,
    pub seminorms: Vec<String>,
    /// `p̂(Tᵏ/λᵏ⁺¹)` for the last term, per seminorm.
    #[serde(with = "crate::serde_ext::ext_f64_vec")]
    pub tails: Vec<f64>,
    /// `p̂(S(λI−T) − I)` per seminorm; empty unless the tails got small.
    #[serde(with = "crate::serde_ext::ext_f64_vec")]
    pub residuals_left: Vec<f64>,
    /// `p̂((λI−T)S − I)` per seminorm.
    #[serde(with = "crate::serde_ext::ext_f64_vec")]
    pub residuals_right: Vec<f64>,
    pub status: NeumannStatus,
    /// Only for separating calibrations, where `(λI−T)⁻¹` exists whenever
    /// the series converges.
    pub cross_check: Option<CrossCheck>,
    /// The calibration does not see every coordinate; the series was summed
    /// for `T` with unseen rows and columns zeroed.
    pub compressed: bool,
}

impl ResolventResult {
    pub fn converged(&self) -> bool {
        self.status == NeumannStatus::Converged
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals_left
            .iter()
            .chain(&self.residuals_right)
            .copied()
            .fold(0.0, f64::max)
    }
}

fn check_quotient_bounded(t: &Operator, cal: &Calibration, tols: &Tolerances) -> Result<()> {
    if t.dim() != cal.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: cal.dim(),
        });
    }
    for p in cal.iter() {
        if oper::leak(t.matrix(), p, p, tols.zero).is_some() {
            return Err(Error::NotQuotientBounded { seminorm: p.label() });
        }
    }
    Ok(())
}

/// Block norms `p̂` of `m` over the calibration, ignoring `F×F^c`.
fn block_norms(m: &CMatrix, cal: &Calibration) -> Vec<f64> {
    cal.iter().map(|p| oper::block_norm(m, p, p)).collect()
}

/// Sums the Neumann series for `R(λ, T)` with per-seminorm tail monitoring.
pub fn neumann_resolvent(
    t: &Operator,
    lambda: C64,
    cal: &Calibration,
    max_terms: usize,
    tols: &Tolerances,
) -> Result<ResolventResult> {
    if lambda == ZERO {
        return Err(Error::ZeroLambda);
    }
    if max_terms == 0 {
        return Err(Error::InvalidArgument("max_terms must be positive".into()));
    }
    check_quotient_bounded(t, cal, tols)?;
    let m = compress(t.matrix(), cal);
    let compressed = m != *t.matrix();
    let n = m.nrows();
    let a = CMatrix::from_diagonal_element(n, n, lambda) - &m;
    let id = linalg::identity(n);
    let direct = if cal.is_separating() {
        linalg::inverse(&a).ok()
    } else {
        None
    };
    let cond_factor = direct
        .as_ref()
        .map(|d| (linalg::inf_norm(&a) * linalg::inf_norm(d)).max(1.0));
    let ln_ceiling = tols.divergence_ceiling.ln();
    let inv_lambda = ONE / lambda;

    let mut term = &id * inv_lambda;
    let mut sum = term.clone();
    let mut terms = 1;
    let mut logs: Vec<Vec<f64>> = vec![Vec::new(); cal.len()];
    let mut residuals_left = Vec::new();
    let mut residuals_right = Vec::new();
    let mut cross_check = None;
    let mut exhausted = false;

    let status = loop {
        let tails = block_norms(&term, cal);
        for (log, &tail) in logs.iter_mut().zip(&tails) {
            log.push(if tail == 0.0 { f64::NEG_INFINITY } else { tail.ln() });
        }
        if tails.iter().any(|&x| x > tols.divergence_ceiling) {
            break NeumannStatus::Diverged;
        }
        if tails.iter().all(|&x| x < tols.neumann) {
            residuals_left = block_norms(&(&sum * &a - &id), cal);
            residuals_right = block_norms(&(&a * &sum - &id), cal);
            cross_check = match (&direct, cond_factor) {
                (Some(d), Some(c)) => {
                    let gap = linalg::max_abs(&(&sum - d));
                    Some(CrossCheck {
                        max_gap: gap,
                        cond_factor: c,
                        passed: gap < tols.neumann * c,
                    })
                }
                _ => None,
            };
            let residuals_ok = residuals_left
                .iter()
                .chain(&residuals_right)
                .all(|&r| r < tols.neumann);
            if residuals_ok && cross_check.as_ref().is_none_or(|c| c.passed) {
                break NeumannStatus::Converged;
            }
        }
        if exhausted {
            // exact finite sum, yet rounding keeps the residuals above tolerance
            break NeumannStatus::MaxTerms;
        }
        if terms >= max_terms {
            let grows = logs.iter().any(|l| detect_growth(l, ln_ceiling).is_some());
            break if grows {
                NeumannStatus::Diverged
            } else {
                NeumannStatus::MaxTerms
            };
        }
        let next = &m * &term * inv_lambda;
        if next.iter().all(|z| *z == ZERO) {
            // nilpotent: the series is finite and already summed
            term = next;
            exhausted = true;
            continue;
        }
        term = next;
        sum += &term;
        terms += 1;
    };

    let tails = block_norms(&term, cal);
    Ok(ResolventResult {
        lambda,
        partial_sum: Operator::from_matrix(sum)?,
        terms,
        seminorms: cal.iter().map(|p| p.label()).collect(),
        tails,
        residuals_left,
        residuals_right,
        status,
        cross_check,
        compressed,
    })
}

/// `‖R(λ,T)‖_P` against the lower bound `1/d(λ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceCheck {
    pub lambda: C64,
    /// `sup_p p̂(R(λ,T))`.
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub norm: f64,
    #[serde(with = "crate::serde_ext::ext_f64_vec")]
    pub per_seminorm: Vec<f64>,
    /// Distance from `λ` to the spectral set.
    pub d: f64,
    /// `1/d(λ)`.
    pub lower_bound: f64,
    /// `None` when the resolvent is not universally bounded and the check
    /// was skipped.
    pub bound_holds: Option<bool>,
    pub notice: Option<String>,
}

/// Checks `‖R(λ,T)‖_P ≥ 1/d(λ) − tol_radius`. The resolvent preserves every
/// `N^p`, so `p̂(R)` is the weighted norm of the quotient resolvent.
pub fn resolvent_distance_check(
    t: &Operator,
    cal: &Calibration,
    lambda: C64,
    tols: &Tolerances,
) -> Result<DistanceCheck> {
    let set = spectral_set(t, cal, tols)?;
    let d = set.distance_to(lambda);
    if d <= tols.spec {
        return Err(Error::NearSpectrum { lambda, distance: d });
    }
    let per_seminorm = cal
        .iter()
        .map(|p| {
            let q = project_tol(t, p, tols.zero)?;
            let r = quotient_resolvent(&q, lambda, tols.spec)?;
            Ok(weighted_norm(&r, p.weights()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let norm = per_seminorm.iter().copied().fold(0.0, f64::max);
    let lower_bound = 1.0 / d;
    let (bound_holds, notice) = if norm.is_finite() {
        (Some(norm >= lower_bound - tols.radius), None)
    } else {
        (None, Some("resolvent is not universally bounded; check skipped".to_string()))
    };
    Ok(DistanceCheck {
        lambda,
        norm,
        per_seminorm,
        d,
        lower_bound,
        bound_holds,
        notice,
    })
}

/// `Σ_k (−μ)ᵏ R(λ)ᵏ⁺¹` compared with the dense `((λ+μ)I − T)⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedSeries {
    pub lambda: C64,
    pub mu: C64,
    /// `|μ|·‖R(λ,T)‖_P`; the series converges in `‖·‖_P` when below 1.
    pub rate: f64,
    pub terms: usize,
    pub converged: bool,
    /// Largest componentwise gap to the direct inverse.
    pub max_gap: f64,
}

pub fn perturbed_resolvent_series(
    t: &Operator,
    cal: &Calibration,
    lambda: C64,
    mu: C64,
    tols: &Tolerances,
) -> Result<PerturbedSeries> {
    check_quotient_bounded(t, cal, tols)?;
    let r = linalg::shifted_inverse(t.matrix(), lambda)?;
    let rate = mu.norm() * block_norms(&r, cal).into_iter().fold(0.0, f64::max);
    let step = &r * (-mu);
    let mut term = r.clone();
    let mut sum = r;
    let mut terms = 1;
    let mut converged = false;
    while terms < tols.max_terms {
        term = &step * &term;
        sum += &term;
        terms += 1;
        let size = linalg::max_abs(&term);
        if !size.is_finite() {
            break;
        }
        if size <= 1e-3 * tols.neumann * linalg::max_abs(&sum).max(1.0) {
            converged = true;
            break;
        }
    }
    let direct = linalg::shifted_inverse(t.matrix(), lambda + mu)?;
    Ok(PerturbedSeries {
        lambda,
        mu,
        rate,
        terms,
        converged,
        max_gap: linalg::max_abs(&(sum - direct)),
    })
}
