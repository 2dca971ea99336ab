use serde::Serialize;

use super::{detect_growth, dyadic_powers, log_of, scaled_powers};
use crate::calib::Calibration;
use crate::error::{Error, Result};
use crate::linalg;
use crate::oper::{self, Operator};
use crate::tol::Tolerances;

/// One bisection probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbProbe {
    pub nu: f64,
    pub accepted: bool,
}

/// Locally bounded radius by bisection on `ν`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbRadius {
    pub calibration: String,
    pub estimate: f64,
    /// The floor itself was accepted; the true value is at most the floor.
    pub at_floor: bool,
    pub witness: String,
    pub witness_index: usize,
    pub bracket: (f64, f64),
    pub horizon: usize,
    /// `max |eig(T)|` of the full matrix.
    pub oracle: f64,
    pub gap: f64,
    pub method_trace: Vec<LbProbe>,
}

const MAX_DOUBLINGS: usize = 200;

/// Bisects for the least `ν` such that `m_pq(Tⁿ)/νⁿ` stays bounded for the
/// witness `p` and every `q ∈ P`. The verdict comes from `n = 2^k` up to
/// `2^dyadic_levels`, reached by repeated squaring; a finite window `n <= N`
/// mistakes polynomial factors for growth just above the true value. With no
/// dyadic levels the window test over `n <= N` decides.
pub fn lb_radius(t: &Operator, cal: &Calibration, n: usize, tols: &Tolerances) -> Result<LbRadius> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("horizon must be at least 2, got {n}")));
    }
    let report = oper::classify_tol(t, cal, tols.zero)?;
    let Some(wi) = report.witness else {
        return Err(Error::NotLocallyBounded {
            calibration: cal.name().to_string(),
        });
    };
    let p = &cal.seminorms()[wi];

    // ln m_pq(Tⁿ) for every q; T[F_q, F_p^c] = 0 survives in every power
    let powers = scaled_powers(t.matrix(), n);
    let logs: Vec<Vec<f64>> = cal
        .iter()
        .map(|q| {
            powers[1..]
                .iter()
                .map(|entry| match entry {
                    Some((x, s)) => log_of(oper::block_norm(x, p, q), *s),
                    None => f64::NEG_INFINITY,
                })
                .collect()
        })
        .collect();
    // ln m_pq(T^{2^J}) at the deepest dyadic level past N
    let mut deepest: Vec<Option<(u64, f64)>> = vec![None; cal.len()];
    dyadic_powers(t.matrix(), n, tols.dyadic_levels, |idx, power| {
        for (d, q) in deepest.iter_mut().zip(cal.iter()) {
            let v = power.map_or(f64::NEG_INFINITY, |(x, s)| log_of(oper::block_norm(x, p, q), s));
            *d = Some((idx, v));
        }
    });
    let ln_ceiling = tols.divergence_ceiling.ln();
    let mut trace = Vec::new();
    let mut accept = |nu: f64| {
        let ln_nu = nu.ln();
        let ok = logs.iter().zip(&deepest).all(|(l, d)| {
            if let Some((idx, v)) = *d {
                return v == f64::NEG_INFINITY || v - idx as f64 * ln_nu <= ln_ceiling;
            }
            let shifted: Vec<f64> = l
                .iter()
                .enumerate()
                .map(|(k, v)| v - (k + 1) as f64 * ln_nu)
                .collect();
            detect_growth(&shifted, ln_ceiling).is_none()
        });
        trace.push(LbProbe { nu, accepted: ok });
        ok
    };

    let oracle = linalg::spectral_radius(t.matrix())?;
    let floor = tols.lb_floor;
    let (estimate, at_floor, bracket) = if accept(floor) {
        (floor, true, (0.0, floor))
    } else {
        // m_pq(Tⁿ) <= m_pq(T) p̂(T)^{n-1}, so this is usually accepted at once
        let mut hi = cal
            .iter()
            .map(|q| oper::block_norm(t.matrix(), p, q))
            .chain(report.constants.iter().copied())
            .filter(|v| v.is_finite())
            .fold(2.0 * floor, f64::max);
        let mut doublings = 0;
        while !accept(hi) {
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::InvalidArgument("no accepted ν found; operator grows too fast".into()));
            }
        }
        let mut lo = floor;
        while hi - lo > tols.radius {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                // tolerance below float resolution
                break;
            }
            if accept(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (0.5 * (lo + hi), false, (lo, hi))
    };
    Ok(LbRadius {
        calibration: cal.name().to_string(),
        estimate,
        at_floor,
        witness: p.label(),
        witness_index: wi,
        bracket,
        horizon: n,
        oracle,
        gap: (estimate - oracle).abs(),
        method_trace: trace,
    })
}
