//! Seminorms, calibrations and the constructions built from them.
//!
//! Every seminorm here has the weighted coordinate-sup form
//! `p(x) = max_{i∈F} w_i |x_i|`, so orderings between seminorms reduce to
//! support inclusion and weight ratios.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Weighted coordinate-sup seminorm on `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Seminorm {
    dim: usize,
    /// 0-based, strictly increasing.
    support: Vec<usize>,
    /// Parallel to `support`.
    weights: Vec<f64>,
    /// Weight per coordinate, `0.0` off the support.
    dense: Vec<f64>,
}

impl Seminorm {
    /// Builds `max_{i∈support} w_i |x_i|` from 0-based indices. The support is
    /// sorted; duplicates, an empty support and non-positive or non-finite
    /// weights are rejected.
    pub fn new(dim: usize, support: &[usize], weights: &[f64]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidSeminorm("support must be nonempty".into()));
        }
        if support.len() != weights.len() {
            return Err(Error::InvalidSeminorm(format!(
                "{} support indices but {} weights",
                support.len(),
                weights.len()
            )));
        }
        let mut pairs: Vec<(usize, f64)> = support.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by_key(|&(i, _)| i);
        let mut dense = vec![0.0; dim];
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidSeminorm(format!("coordinate {} repeated", w[0].0 + 1)));
            }
        }
        for &(i, w) in &pairs {
            if i >= dim {
                return Err(Error::InvalidSeminorm(format!(
                    "coordinate {} outside 1..={dim}",
                    i + 1
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidSeminorm(format!(
                    "weight {w} at coordinate {} must be positive and finite",
                    i + 1
                )));
            }
            dense[i] = w;
        }
        Ok(Self {
            dim,
            support: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            dense,
        })
    }

    /// Unit weights on `support`.
    pub fn unit(dim: usize, support: &[usize]) -> Result<Self> {
        Self::new(dim, support, &vec![1.0; support.len()])
    }

    /// Unit weights on the leading coordinates `{0, .., k-1}`.
    pub fn leading(dim: usize, k: usize) -> Result<Self> {
        Self::unit(dim, &(0..k).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w_i`, or `None` off the support.
    pub fn weight(&self, i: usize) -> Option<f64> {
        self.dense.get(i).copied().filter(|&w| w > 0.0)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.weight(i).is_some()
    }

    /// Coordinates outside the support, i.e. those spanning `N^p`.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| !self.contains(i)).collect()
    }

    /// `dim N^p = n − |F|`.
    pub fn null_space_dim(&self) -> usize {
        self.dim - self.support.len()
    }

    /// Covers every coordinate.
    pub fn is_full(&self) -> bool {
        self.support.len() == self.dim
    }

    /// `p(x)`.
    pub fn eval(&self, x: &[C64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[C64]) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(&i, &w)| w * x[i].norm())
            .fold(0.0, f64::max)
    }

    /// Pointwise order `p ≤ q`: `F_p ⊆ F_q` and `w^p_i ≤ w^q_i` on `F_p`.
    pub fn pointwise_le(&self, other: &Seminorm) -> bool {
        self.dim == other.dim
            && self
                .support
                .iter()
                .zip(&self.weights)
                .all(|(&i, &w)| other.weight(i).is_some_and(|wq| w <= wq))
    }

    /// `max(p, q)`, again coordinate-sup with merged support and weights.
    pub fn max(&self, other: &Seminorm) -> Result<Seminorm> {
        check_dims(self.dim, other.dim)?;
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for i in 0..self.dim {
            let w = self.dense[i].max(other.dense[i]);
            if w > 0.0 {
                support.push(i);
                weights.push(w);
            }
        }
        Seminorm::new(self.dim, &support, &weights)
    }

    /// `m·p` for `m > 0`.
    pub fn scaled(&self, m: f64) -> Result<Seminorm> {
        let weights: Vec<f64> = self.weights.iter().map(|w| w * m).collect();
        Seminorm::new(self.dim, &self.support, &weights)
    }

    /// Canonical label, e.g. `F={1,2}` or `F={1,2};w=(2,3)` for non-unit weights.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Seminorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.support.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "F={{{}}}", idx.join(","))?;
        if self.weights.iter().any(|&w| w != 1.0) {
            let ws: Vec<String> = self.weights.iter().map(|w| format!("{w}")).collect();
            write!(f, ";w=({})", ws.join(","))?;
        }
        Ok(())
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Outcome of comparing `p` against `q` in the preorder `≺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum Dominance {
    /// `p ≤ ratio·q`, with `ratio` the smallest such constant.
    Dominated { ratio: f64 },
    /// `F_p ⊄ F_q`; `e_witness` has `p > 0 = q` (0-based coordinate).
    NotDominated { witness: usize },
}

impl Dominance {
    pub fn ratio(&self) -> Option<f64> {
        match *self {
            Dominance::Dominated { ratio } => Some(ratio),
            Dominance::NotDominated { .. } => None,
        }
    }
}

/// Decides `p ≺ q`. It holds iff `F_p ⊆ F_q`, with minimal ratio
/// `max_{i∈F_p} w^p_i / w^q_i`.
pub fn compare(p: &Seminorm, q: &Seminorm) -> Result<Dominance> {
    check_dims(p.dim, q.dim)?;
    let mut ratio: f64 = 0.0;
    for (&i, &wp) in p.support.iter().zip(&p.weights) {
        match q.weight(i) {
            Some(wq) => ratio = ratio.max(wp / wq),
            None => return Ok(Dominance::NotDominated { witness: i }),
        }
    }
    Ok(Dominance::Dominated { ratio })
}

/// `p ≈ q`: returns the two minimal ratios `(p ≤ r₁q, q ≤ r₂p)` when both hold.
pub fn equivalence(p: &Seminorm, q: &Seminorm) -> Result<Option<(f64, f64)>> {
    Ok(match (compare(p, q)?, compare(q, p)?) {
        (Dominance::Dominated { ratio: a }, Dominance::Dominated { ratio: b }) => Some((a, b)),
        _ => None,
    })
}

/// Ordered family of seminorms on a common space.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    name: String,
    dim: usize,
    seminorms: Vec<Seminorm>,
}

impl Calibration {
    pub fn new(name: impl Into<String>, seminorms: Vec<Seminorm>) -> Result<Self> {
        let name = name.into();
        let first = seminorms
            .first()
            .ok_or_else(|| Error::InvalidCalibration(format!("{name}: no seminorms")))?;
        let dim = first.dim;
        for p in &seminorms {
            check_dims(dim, p.dim)?;
        }
        Ok(Self {
            name,
            dim,
            seminorms,
        })
    }

    /// Unit-weight chain `F={1}, F={1,2}, …, F={1..n}`.
    pub fn nested(name: impl Into<String>, dim: usize) -> Result<Self> {
        let ps = (1..=dim).map(|k| Seminorm::leading(dim, k)).collect::<Result<Vec<_>>>()?;
        Self::new(name, ps)
    }

    /// One unit seminorm per coordinate.
    pub fn singletons(name: impl Into<String>, dim: usize) -> Result<Self> {
        let ps = (0..dim).map(|i| Seminorm::unit(dim, &[i])).collect::<Result<Vec<_>>>()?;
        Self::new(name, ps)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seminorms(&self) -> &[Seminorm] {
        &self.seminorms
    }

    pub fn len(&self) -> usize {
        self.seminorms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seminorms.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Seminorm> {
        self.seminorms.iter()
    }

    /// Hausdorff condition: the supports cover every coordinate.
    pub fn is_separating(&self) -> bool {
        let mut covered = vec![false; self.dim];
        for p in &self.seminorms {
            for &i in &p.support {
                covered[i] = true;
            }
        }
        covered.into_iter().all(|c| c)
    }

    /// Directedness: every pair has a common pointwise upper bound in the family.
    pub fn is_principal(&self) -> bool {
        self.first_undirected_pair().is_none()
    }

    fn first_undirected_pair(&self) -> Option<(usize, usize)> {
        let ps = &self.seminorms;
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                let bounded = ps
                    .iter()
                    .any(|r| ps[i].pointwise_le(r) && ps[j].pointwise_le(r));
                if !bounded {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Result of a Q-equivalence test with its matchings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QEquivalence {
    pub equivalent: bool,
    /// For each seminorm of the first family, an equivalent one in the second.
    pub forward: Vec<Option<usize>>,
    /// For each seminorm of the second family, an equivalent one in the first.
    pub backward: Vec<Option<usize>>,
}

/// Two families are Q-equivalent when each member of either has an `≈`
/// partner in the other.
pub fn q_equivalent(a: &Calibration, b: &Calibration) -> Result<QEquivalence> {
    check_dims(a.dim, b.dim)?;
    let matching = |xs: &Calibration, ys: &Calibration| -> Result<Vec<Option<usize>>> {
        xs.iter()
            .map(|x| {
                for (k, y) in ys.iter().enumerate() {
                    if equivalence(x, y)?.is_some() {
                        return Ok(Some(k));
                    }
                }
                Ok(None)
            })
            .collect()
    };
    let forward = matching(a, b)?;
    let backward = matching(b, a)?;
    let equivalent = forward.iter().chain(&backward).all(Option::is_some);
    Ok(QEquivalence {
        equivalent,
        forward,
        backward,
    })
}

/// Output of [`principal_closure`].
#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub calibration: Calibration,
    /// The family is directed. False when the cap stopped generation early.
    pub complete: bool,
    pub generated: usize,
}

/// Adds pairwise maxima until the family is directed or `cap` seminorms have
/// been generated. A partial result is flagged through `complete = false`.
pub fn principal_closure(cal: &Calibration, cap: usize) -> Closure {
    let mut out = cal.clone();
    let mut generated = 0;
    loop {
        let Some((i, j)) = out.first_undirected_pair() else {
            return Closure {
                calibration: out,
                complete: true,
                generated,
            };
        };
        if generated >= cap {
            return Closure {
                calibration: out,
                complete: false,
                generated,
            };
        }
        let joined = out.seminorms[i]
            .max(&out.seminorms[j])
            .expect("calibration members share a dimension");
        out.seminorms.push(joined);
        generated += 1;
    }
}

/// The family `{ max(m·p, q) | m ∈ m_values, q ∈ P }`, ordered by `m` then `q`.
pub fn augmented_calibration(cal: &Calibration, p: &Seminorm, m_values: &[f64]) -> Result<Calibration> {
    check_dims(cal.dim, p.dim)?;
    if m_values.is_empty() {
        return Err(Error::InvalidArgument("m_values must be nonempty".into()));
    }
    let mut out = Vec::with_capacity(m_values.len() * cal.len());
    for &m in m_values {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidArgument(format!("m = {m} must be positive and finite")));
        }
        let mp = p.scaled(m)?;
        for q in cal.iter() {
            out.push(mp.max(q)?);
        }
    }
    Calibration::new(format!("{}+aug[{}]", cal.name, p), out)
}

/// JSON form of a seminorm: 1-based support with parallel weights
/// (unit weights when omitted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormSpec {
    pub support: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// JSON form of a calibration: `{"dim": n, "seminorms": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    pub seminorms: Vec<SeminormSpec>,
}

impl SeminormSpec {
    pub fn build(&self, dim: usize) -> Result<Seminorm> {
        let mut support = Vec::with_capacity(self.support.len());
        for &i in &self.support {
            if i == 0 {
                return Err(Error::InvalidSeminorm("indices are 1-based; found 0".into()));
            }
            support.push(i - 1);
        }
        match &self.weights {
            Some(w) => Seminorm::new(dim, &support, w),
            None => Seminorm::unit(dim, &support),
        }
    }
}

impl From<&Seminorm> for SeminormSpec {
    fn from(p: &Seminorm) -> Self {
        Self {
            support: p.support.iter().map(|i| i + 1).collect(),
            weights: Some(p.weights.clone()),
        }
    }
}

impl CalibrationSpec {
    pub fn build(&self, default_name: &str) -> Result<Calibration> {
        let ps = self
            .seminorms
            .iter()
            .map(|s| s.build(self.dim))
            .collect::<Result<Vec<_>>>()?;
        Calibration::new(self.name.clone().unwrap_or_else(|| default_name.to_string()), ps)
    }
}

impl From<&Calibration> for CalibrationSpec {
    fn from(c: &Calibration) -> Self {
        Self {
            name: Some(c.name.clone()),
            dim: c.dim,
            seminorms: c.iter().map(SeminormSpec::from).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sn(dim: usize, support1: &[usize], w: &[f64]) -> Seminorm {
        let s: Vec<usize> = support1.iter().map(|i| i - 1).collect();
        Seminorm::new(dim, &s, w).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p = sn(3, &[1, 2], &[1.0, 1.0]);
        assert_eq!(p.eval(&[c(3.0, 0.0), c(0.0, -4.0), c(99.0, 0.0)]).unwrap(), 4.0);
        let p = sn(3, &[1], &[2.0]);
        assert_eq!(p.eval(&[c(0.0, 0.0), c(7.0, 0.0), c(7.0, 0.0)]).unwrap(), 0.0);
        let p = sn(3, &[1, 2, 3], &[1.0, 1.0, 1.0]);
        assert_eq!(p.eval(&[c(1.0, 0.0); 3]).unwrap(), 1.0);
    }

    #[test]
    fn eval_rejects_wrong_length() {
        let p = sn(3, &[1], &[1.0]);
        assert_eq!(
            p.eval(&[c(1.0, 0.0)]),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        );
    }

    #[test]
    fn construction_errors() {
        assert!(Seminorm::new(3, &[], &[]).is_err());
        assert!(Seminorm::new(3, &[0], &[0.0]).is_err());
        assert!(Seminorm::new(3, &[0], &[f64::INFINITY]).is_err());
        assert!(Seminorm::new(3, &[3], &[1.0]).is_err());
        assert!(Seminorm::new(3, &[1, 1], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn null_space_dimension() {
        assert_eq!(sn(5, &[2, 4], &[1.0, 3.0]).null_space_dim(), 3);
        assert_eq!(sn(5, &[2, 4], &[1.0, 3.0]).complement(), vec![0, 2, 4]);
    }

    #[test]
    fn compare_examples() {
        let p = sn(2, &[1], &[1.0]);
        let q = sn(2, &[1, 2], &[1.0, 1.0]);
        assert_eq!(compare(&p, &q).unwrap(), Dominance::Dominated { ratio: 1.0 });

        let p = sn(2, &[1, 2], &[2.0, 3.0]);
        let q = sn(2, &[1, 2], &[1.0, 1.0]);
        // p ≤ 3q and q ≤ p/2; e1 attains the second ratio (q=1, p=2)
        assert_eq!(equivalence(&p, &q).unwrap(), Some((3.0, 0.5)));

        let p = sn(2, &[1], &[1.0]);
        let q = sn(2, &[2], &[1.0]);
        assert_eq!(compare(&p, &q).unwrap(), Dominance::NotDominated { witness: 0 });
    }

    #[test]
    fn minimal_ratio_is_attained_on_a_basis_vector() {
        let p = sn(3, &[1, 3], &[4.0, 1.5]);
        let q = sn(3, &[1, 2, 3], &[2.0, 9.0, 0.5]);
        let r = compare(&p, &q).unwrap().ratio().unwrap();
        assert_abs_diff_eq!(r, 3.0);
        let mut e3 = vec![c(0.0, 0.0); 3];
        e3[2] = c(1.0, 0.0);
        assert_abs_diff_eq!(p.eval(&e3).unwrap(), r * q.eval(&e3).unwrap());
    }

    #[test]
    fn q_equivalence_examples() {
        let p1 = Calibration::new("P1", vec![sn(2, &[1, 2], &[1.0, 1.0])]).unwrap();
        let p2 = Calibration::new("P2", vec![sn(2, &[1, 2], &[2.0, 3.0])]).unwrap();
        assert!(q_equivalent(&p1, &p2).unwrap().equivalent);

        let a = Calibration::new("A", vec![sn(2, &[1], &[1.0])]).unwrap();
        let b = Calibration::new("B", vec![sn(2, &[1], &[1.0]), sn(2, &[1, 2], &[1.0, 1.0])]).unwrap();
        let qe = q_equivalent(&a, &b).unwrap();
        assert!(!qe.equivalent);
        assert_eq!(qe.forward, vec![Some(0)]);
        assert_eq!(qe.backward, vec![Some(0), None]);

        assert!(q_equivalent(&b, &b).unwrap().equivalent);
    }

    #[test]
    fn separating_flag() {
        assert!(Calibration::nested("N", 3).unwrap().is_separating());
        let c = Calibration::new("C", vec![sn(3, &[1], &[1.0]), sn(3, &[2], &[1.0])]).unwrap();
        assert!(!c.is_separating());
    }

    #[test]
    fn principal_closure_adds_single_max() {
        let cal = Calibration::singletons("S", 2).unwrap();
        assert!(!cal.is_principal());
        let out = principal_closure(&cal, 64);
        assert!(out.complete);
        assert_eq!(out.generated, 1);
        assert_eq!(out.calibration.seminorms()[2], sn(2, &[1, 2], &[1.0, 1.0]));
        assert!(out.calibration.is_principal());
    }

    #[test]
    fn principal_closure_fixpoint() {
        let cal = Calibration::nested("N", 4).unwrap();
        let out = principal_closure(&cal, 64);
        assert!(out.complete);
        assert_eq!(out.calibration, cal);
    }

    #[test]
    fn principal_closure_cap_sets_partial_flag() {
        let cal = Calibration::singletons("S", 3).unwrap();
        let out = principal_closure(&cal, 2);
        assert!(!out.complete);
        assert_eq!(out.generated, 2);
        assert_eq!(out.calibration.len(), 5);
        let full = principal_closure(&cal, 64);
        assert!(full.complete);
        assert!(full.calibration.is_principal());
    }

    #[test]
    fn augmented_direct_merge() {
        let cal = Calibration::new("P", vec![sn(2, &[2], &[1.0])]).unwrap();
        let p = sn(2, &[1], &[1.0]);
        let q = augmented_calibration(&cal, &p, &[2.0]).unwrap();
        assert_eq!(q.seminorms(), &[sn(2, &[1, 2], &[2.0, 1.0])]);
    }

    #[test]
    fn augmented_with_unit_m_is_q_equivalent_when_p_is_dominated() {
        let cal = Calibration::new(
            "P",
            vec![sn(3, &[1, 2], &[1.0, 2.0]), sn(3, &[1, 2, 3], &[1.0, 1.0, 1.0])],
        )
        .unwrap();
        let p = sn(3, &[1], &[3.0]);
        let q = augmented_calibration(&cal, &p, &[1.0]).unwrap();
        assert!(q_equivalent(&cal, &q).unwrap().equivalent);
    }

    #[test]
    fn augmented_cardinality() {
        let cal = Calibration::nested("N", 3).unwrap();
        let p = cal.seminorms()[0].clone();
        let q = augmented_calibration(&cal, &p, &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(q.len(), 9);
        assert!(augmented_calibration(&cal, &p, &[]).is_err());
        assert!(augmented_calibration(&cal, &p, &[-1.0]).is_err());
    }

    #[test]
    fn json_schema_is_one_based() {
        let json = r#"{"dim": 3, "seminorms": [{"support": [1, 3], "weights": [2.0, 5.0]}, {"support": [2]}]}"#;
        let spec: CalibrationSpec = serde_json::from_str(json).unwrap();
        let cal = spec.build("P").unwrap();
        assert_eq!(cal.seminorms()[0].support(), &[0, 2]);
        assert_eq!(cal.seminorms()[0].weights(), &[2.0, 5.0]);
        assert_eq!(cal.seminorms()[1].weights(), &[1.0]);
        let back = CalibrationSpec::from(&cal);
        assert_eq!(back.seminorms[0].support, vec![1, 3]);
        let zero: CalibrationSpec = serde_json::from_str(r#"{"dim": 2, "seminorms": [{"support": [0]}]}"#).unwrap();
        assert!(zero.build("Z").is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(sn(3, &[1, 2], &[1.0, 1.0]).label(), "F={1,2}");
        assert_eq!(sn(3, &[1, 2], &[2.0, 3.0]).label(), "F={1,2};w=(2,3)");
    }
}
