use serde::Serialize;

use super::lb::lb_radius;
use crate::calib::{augmented_calibration, principal_closure, Calibration};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::oper::{self, Operator};
use crate::quotient::spectral_set;
use crate::tol::Tolerances;

pub const APPROXIMATION_NOTE: &str =
    "infimum taken over the supplied calibrations and their augmentations only; an approximation of the infimum over all calibrations";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub name: String,
    pub separating: bool,
    pub principal: bool,
    /// Oracle `r_P`.
    pub r_p: f64,
    pub spectrum: Vec<C64>,
    /// Infimum of `r_P` over this and earlier supplied calibrations.
    pub running_inf: f64,
    /// Locally bounded radius, using the principal closure when the
    /// calibration itself has no witness.
    pub r_lb: Option<f64>,
    pub r_lb_via_closure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentedEntry {
    pub source: String,
    pub calibration: String,
    pub separating: bool,
    pub r_p: f64,
    pub lowers_infimum: bool,
    /// `r_P ≥ r_lb − tol_radius`.
    pub floor_respected: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dropped {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfimumStudy {
    pub approximation: &'static str,
    pub entries: Vec<CalibrationEntry>,
    pub dropped: Vec<Dropped>,
    pub augmented: Vec<AugmentedEntry>,
    /// Min `r_P` over the supplied calibrations.
    pub infimum: f64,
    /// Min `r_P` over supplied and augmented separating calibrations, the
    /// ones the locally bounded radius is compared against.
    pub infimum_separating: Option<f64>,
    /// Points common to every supplied spectral set.
    pub intersection: Vec<C64>,
    /// `eig(T)` lies in the intersection of the spectral sets of the supplied
    /// separating principal calibrations; `None` when there are none.
    pub principal_inclusion: Option<bool>,
    /// Smallest locally bounded radius obtained.
    pub r_lb: Option<f64>,
    /// `max |eig(T)|`.
    pub eig_radius: f64,
    /// Every locally bounded estimate is at most every separating `r_P`
    /// plus `tol_radius`.
    pub lb_bound_holds: Option<bool>,
    pub augmented_lowered: bool,
}

fn lb_for(t: &Operator, cal: &Calibration, n: usize, tols: &Tolerances) -> (Option<f64>, bool) {
    match lb_radius(t, cal, n, tols) {
        Ok(r) => (Some(r.estimate), false),
        Err(Error::NotLocallyBounded { .. }) => {
            let closure = principal_closure(cal, tols.closure_cap);
            if !closure.complete {
                return (None, false);
            }
            (lb_radius(t, &closure.calibration, n, tols).ok().map(|r| r.estimate), true)
        }
        Err(_) => (None, false),
    }
}

/// Radii and spectral sets across a family of calibrations, with augmented
/// calibrations built from each locally bounded witness.
pub fn calibration_infimum_study(
    t: &Operator,
    cals: &[Calibration],
    m_values: &[f64],
    n: usize,
    tols: &Tolerances,
) -> Result<InfimumStudy> {
    let mut entries: Vec<CalibrationEntry> = Vec::new();
    let mut dropped = Vec::new();
    let mut kept: Vec<&Calibration> = Vec::new();
    let mut running = f64::INFINITY;
    for cal in cals {
        let set = match spectral_set(t, cal, tols) {
            Ok(s) => s,
            Err(e) => {
                dropped.push(Dropped {
                    name: cal.name().to_string(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let r_p = set.radius();
        running = running.min(r_p);
        let (r_lb, via) = lb_for(t, cal, n, tols);
        entries.push(CalibrationEntry {
            name: cal.name().to_string(),
            separating: cal.is_separating(),
            principal: cal.is_principal(),
            r_p,
            spectrum: set.values(),
            running_inf: running,
            r_lb,
            r_lb_via_closure: via,
        });
        kept.push(cal);
    }
    if entries.is_empty() {
        return Err(Error::InvalidArgument(
            "no calibration left after dropping quotient-unbounded ones".into(),
        ));
    }

    let mut intersection = entries[0].spectrum.clone();
    for e in &entries[1..] {
        intersection.retain(|z| linalg::distance_to(&e.spectrum, *z) <= tols.spec);
    }

    let eig = linalg::eigenvalues(t.matrix())?;
    let principal: Vec<&CalibrationEntry> = entries.iter().filter(|e| e.separating && e.principal).collect();
    let principal_inclusion = (!principal.is_empty()).then(|| {
        eig.iter()
            .all(|z| principal.iter().all(|e| linalg::distance_to(&e.spectrum, *z) <= tols.spec))
    });

    let mut lbs: Vec<f64> = entries.iter().filter_map(|e| e.r_lb).collect();
    let mut augmented = Vec::new();
    if !m_values.is_empty() {
        for cal in &kept {
            let Some(w) = oper::classify_tol(t, cal, tols.zero)?.witness else {
                continue;
            };
            let aug = augmented_calibration(cal, &cal.seminorms()[w], m_values)?;
            let Ok(set) = spectral_set(t, &aug, tols) else {
                continue;
            };
            if let (Some(r), _) = lb_for(t, &aug, n, tols) {
                lbs.push(r);
            }
            augmented.push(AugmentedEntry {
                source: cal.name().to_string(),
                calibration: aug.name().to_string(),
                separating: aug.is_separating(),
                r_p: set.radius(),
                lowers_infimum: set.radius() < running - tols.spec,
                floor_respected: None,
            });
        }
    }
    let r_lb = lbs.iter().copied().reduce(f64::min);
    for a in &mut augmented {
        a.floor_respected = r_lb.map(|r| a.r_p >= r - tols.radius);
    }

    // non-separating families see only part of the space, so their radius
    // can sit below max|eig(T)|; the comparison uses separating ones
    let infimum_separating = entries
        .iter()
        .filter(|e| e.separating)
        .map(|e| e.r_p)
        .chain(augmented.iter().filter(|a| a.separating).map(|a| a.r_p))
        .reduce(f64::min);
    let lb_bound_holds = match (lbs.iter().copied().reduce(f64::max), infimum_separating) {
        (Some(worst), Some(inf)) => Some(worst <= inf + tols.radius),
        _ => None,
    };
    Ok(InfimumStudy {
        approximation: APPROXIMATION_NOTE,
        augmented_lowered: augmented.iter().any(|a| a.lowers_infimum),
        entries,
        dropped,
        augmented,
        infimum: running,
        infimum_separating,
        intersection,
        principal_inclusion,
        r_lb,
        eig_radius: eig.iter().map(|z| z.norm()).fold(0.0, f64::max),
        lb_bound_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::Seminorm;
    use crate::fixtures;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn study_examples() {
        let tols = Tolerances::default();
        let t = fixtures::fixture_a();
        let pa = fixtures::nested_unit(3);
        let s = calibration_infimum_study(&t, std::slice::from_ref(&pa), &[1.0, 2.0, 4.0], 200, &tols).unwrap();
        assert!((s.infimum - 5.0).abs() < 1e-12);
        assert!(linalg::sets_match(&s.intersection, &[c(2.0), c(3.0), c(5.0)], 1e-8));
        assert_eq!(s.lb_bound_holds, Some(true));
        assert_eq!(s.principal_inclusion, Some(true));
        assert!(!s.augmented.is_empty());

        let full = Calibration::new("full", vec![fixtures::full_support(3)]).unwrap();
        let s = calibration_infimum_study(&t, &[pa, full], &[], 200, &tols).unwrap();
        assert!((s.entries[0].r_p - 5.0).abs() < 1e-12);
        assert!((s.entries[1].r_p - 5.0).abs() < 1e-12);

        let d = fixtures::real_diagonal(&[1.0, 0.5]);
        let p1 = Calibration::new("P1", vec![Seminorm::unit(2, &[0]).unwrap(), fixtures::full_support(2)]).unwrap();
        let p2 = Calibration::new("P2", vec![Seminorm::unit(2, &[1]).unwrap(), fixtures::full_support(2)]).unwrap();
        let s = calibration_infimum_study(&d, &[p1, p2], &[1.0, 2.0], 200, &tols).unwrap();
        assert_eq!(s.entries[0].r_p, 1.0);
        assert_eq!(s.entries[1].r_p, 1.0);
        assert!(linalg::sets_match(&s.intersection, &[c(1.0), c(0.5)], 1e-8));
        assert_eq!(s.lb_bound_holds, Some(true));
    }

    #[test]
    fn study_drops_unbounded() {
        let tols = Tolerances::default();
        let bad = Calibration::new("bad", vec![Seminorm::unit(3, &[1]).unwrap()]).unwrap();
        let s = calibration_infimum_study(&fixtures::fixture_a(), &[bad.clone(), fixtures::nested_unit(3)], &[], 200, &tols).unwrap();
        assert_eq!(s.dropped.len(), 1);
        assert_eq!(s.dropped[0].name, "bad");
        assert!(calibration_infimum_study(&fixtures::fixture_a(), &[bad], &[], 200, &tols).is_err());
    }
}
