//! Gelfand sequences, the P-spectral radius, the locally bounded radius,
//! Neumann-series resolvents and the spectral-radius arithmetic.
//!
//! Power sequences are computed on rescaled matrices with the scale kept in
//! log form, so `p̂(Tⁿ)` never overflows or underflows for the horizons used
//! here. Growth verdicts combine a hard ceiling with a trend test on the last
//! quarter of the log sequence.

mod arith;
mod gelfand;
mod lb;
mod resolvent;
mod study;

pub use arith::{radius_arithmetic_suite, ArithmeticCheck, ArithmeticReport};
pub use gelfand::{
    bounded_semigroup_check, gelfand_trace, gelfand_trace_tol, oracle_radius, p_spectral_radius,
    write_traces_csv, GelfandTerm, GelfandTrace, RadiusReport, SemigroupCheck, SemigroupTrace,
    SemigroupVerdict,
};
pub use lb::{lb_radius, LbProbe, LbRadius};
pub use resolvent::{
    neumann_resolvent, perturbed_resolvent_series, resolvent_distance_check, CrossCheck,
    DistanceCheck, NeumannStatus, PerturbedSeries, ResolventResult,
};
pub use study::{calibration_infimum_study, AugmentedEntry, CalibrationEntry, Dropped, InfimumStudy, APPROXIMATION_NOTE};

use crate::calib::Calibration;
use crate::linalg::{self, CMatrix, ZERO};

/// Least-squares slope above which the last quarter of a log sequence counts
/// as sustained growth. Sits well above rounding noise in `ln` values.
pub const GROWTH_SLOPE: f64 = 1e-9;

/// `Mⁿ = X_n · exp(s_n)` for `n = 0..=n_max`, with `max|X_n| = 1` unless `Mⁿ`
/// vanishes. Entry `n` is `None` once `Mⁿ` is exactly zero.
pub(crate) fn scaled_powers(m: &CMatrix, n_max: usize) -> Vec<Option<(CMatrix, f64)>> {
    let dim = m.nrows();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(Some((linalg::identity(dim), 0.0)));
    for n in 1..=n_max {
        let next = match &out[n - 1] {
            Some((x, s)) => normalise(x * m, *s),
            None => None,
        };
        out.push(next);
    }
    out
}

/// Repeated squaring of `m`, handing the normalised `m^{2^k}` to `visit` for
/// every `2^k > n` with `k <= levels`; `None` marks a power that vanished,
/// after which the squaring stops. Returns that index, if any.
pub(crate) fn dyadic_powers(
    m: &CMatrix,
    n: usize,
    levels: u32,
    mut visit: impl FnMut(u64, Option<(&CMatrix, f64)>),
) -> Option<u64> {
    let mut cur = normalise(m.clone(), 0.0)?;
    for k in 1..=levels.min(62) {
        let (x, s) = &cur;
        let next = normalise(x * x, 2.0 * s);
        let idx = 1u64 << k;
        match next {
            None => {
                if idx > n as u64 {
                    visit(idx, None);
                    return Some(idx);
                }
                // vanished below the horizon; the plain pass already saw it
                return None;
            }
            Some(v) => {
                if idx > n as u64 {
                    visit(idx, Some((&v.0, v.1)));
                }
                cur = v;
            }
        }
    }
    None
}

pub(crate) fn normalise(mut x: CMatrix, log_scale: f64) -> Option<(CMatrix, f64)> {
    let c = linalg::max_abs(&x);
    if c == 0.0 {
        return None;
    }
    x /= ZERO + c;
    Some((x, log_scale + c.ln()))
}

/// `W = D M D⁻¹` with `D = diag(w)`, so that `‖W‖_∞` is the weighted norm.
pub(crate) fn weighted(m: &CMatrix, w: &[f64]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (w[i] / w[j]))
}

/// `ln` of a value carried as `(scaled, log_scale)`; `-∞` for zero.
pub(crate) fn log_of(v: f64, log_scale: f64) -> f64 {
    if v == 0.0 {
        f64::NEG_INFINITY
    } else {
        v.ln() + log_scale
    }
}

/// First `n` (1-based) at which a log sequence shows growth: either the value
/// crosses `ln_ceiling`, or the last quarter has least-squares slope above
/// [`GROWTH_SLOPE`] (reported at the final index). A sequence ending in `-∞`
/// has vanished and counts as bounded.
pub(crate) fn detect_growth(logs: &[f64], ln_ceiling: f64) -> Option<usize> {
    // a sequence that reaches zero stays there, whatever its transient
    if logs.last() == Some(&f64::NEG_INFINITY) {
        return None;
    }
    if let Some(k) = logs.iter().position(|&v| v > ln_ceiling) {
        return Some(k + 1);
    }
    let len = logs.len();
    if len < 2 {
        return None;
    }
    let window = (len / 4).max(2);
    let tail = &logs[len - window..];
    if tail.iter().any(|v| !v.is_finite()) {
        return None;
    }
    (trend_slope(tail) > GROWTH_SLOPE).then_some(len)
}

/// Least-squares slope of `ys` against `0, 1, …`.
pub(crate) fn trend_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// `T` with rows and columns outside `∪ F_p` zeroed. Equal to `T` for a
/// separating calibration. Every block `T[F_p, F_p]` and every power of it
/// is unchanged, since `T` maps nothing from outside the union into it.
pub(crate) fn compress(m: &CMatrix, cal: &Calibration) -> CMatrix {
    let n = m.nrows();
    let mut seen = vec![false; n];
    for p in cal.iter() {
        for &i in p.support() {
            seen[i] = true;
        }
    }
    if seen.iter().all(|&s| s) {
        return m.clone();
    }
    CMatrix::from_fn(n, n, |i, j| if seen[i] && seen[j] { m[(i, j)] } else { ZERO })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn growth_detection() {
        let flat = vec![0.0; 40];
        assert_eq!(detect_growth(&flat, 12.0_f64 * 10f64.ln()), None);
        let up: Vec<f64> = (1..=40).map(|n| n as f64 * 0.01).collect();
        assert_eq!(detect_growth(&up, 1e12_f64.ln()), Some(40));
        let down: Vec<f64> = (1..=40).map(|n| -(n as f64) * 0.01).collect();
        assert_eq!(detect_growth(&down, 1e12_f64.ln()), None);
        let spike = vec![0.0, 30.0, 0.0];
        assert_eq!(detect_growth(&spike, 1e12_f64.ln()), Some(2));
        let zeros = vec![0.0, 30.0, f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert_eq!(detect_growth(&zeros, 1e12_f64.ln()), None);
    }

    #[test]
    fn scaled_powers_match_plain_powers() {
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(2.0, 0.0), C64::new(1.0, 1.0), ZERO, C64::new(0.5, 0.0)]);
        let sp = scaled_powers(&m, 6);
        let mut plain = linalg::identity(2);
        for entry in sp.iter().skip(1) {
            plain = &plain * &m;
            let (x, s) = entry.as_ref().unwrap();
            let back = x * C64::new(s.exp(), 0.0);
            assert!(linalg::max_abs(&(back - &plain)) < 1e-12 * linalg::max_abs(&plain));
        }
        let nil = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, C64::new(1.0, 0.0), ZERO]);
        let sp = scaled_powers(&nil, 3);
        assert!(sp[1].is_some());
        assert!(sp[2].is_none() && sp[3].is_none());
    }
}
