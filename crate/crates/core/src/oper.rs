//! Matrix-backed operators, the operator seminorms `p̂` and `m_pq`, and the
//! calibration-relative boundedness classes.
//!
//! For coordinate-sup seminorms both operator seminorms have closed forms:
//!
//! ```text
//! m_pq(T) = max_{i∈F_q} Σ_{j∈F_p} (w^q_i / w^p_j) |t_ij|   if T[F_q, F_p^c] = 0
//!         = +∞                                           otherwise
//! p̂(T)   = m_pp(T)
//! ```
//!
//! Infinity is an ordinary return value, never an error.

use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::calib::{Calibration, Seminorm};
use crate::error::{Error, Result};
use crate::linalg::{identity, CMatrix, C64, ZERO};

/// Linear operator on `C^n` with a memo of its powers.
///
/// The memo only ever grows to the largest power requested; readers racing to
/// extend it compute identical values, and extension happens under a write
/// lock, so observable behaviour is pure.
pub struct Operator {
    matrix: CMatrix,
    powers: RwLock<Vec<CMatrix>>,
}

impl Clone for Operator {
    fn clone(&self) -> Self {
        let powers = self.powers.read().expect("power cache poisoned").clone();
        Self {
            matrix: self.matrix.clone(),
            powers: RwLock::new(powers),
        }
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("dim", &self.dim())
            .field("matrix", &self.matrix)
            .finish()
    }
}

impl PartialEq for Operator {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl Operator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidOperator(format!(
                "matrix is {}×{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidOperator("dimension must be positive".into()));
        }
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidOperator("entries must be finite".into()));
        }
        Ok(Self::wrap(matrix))
    }

    fn wrap(matrix: CMatrix) -> Self {
        let n = matrix.nrows();
        Self {
            matrix,
            powers: RwLock::new(vec![identity(n)]),
        }
    }

    /// Real row-major matrix.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::dense(rows, None)
    }

    /// Dense matrix from row-major real and (optional) imaginary parts.
    pub fn dense(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        let n = re.len();
        for (i, row) in re.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidOperator(format!(
                    "row {} of re has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
        }
        if let Some(im) = im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidOperator(format!("im must be {n}×{n} like re")));
            }
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            C64::new(re[i][j], im.map_or(0.0, |im| im[i][j]))
        });
        Self::from_matrix(m)
    }

    pub fn identity(n: usize) -> Self {
        Self::wrap(identity(n))
    }

    pub fn zero(n: usize) -> Self {
        Self::wrap(CMatrix::zeros(n, n))
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        Self::from_matrix(CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries)))
    }

    /// Weighted forward shift on `C^{weights.len()+1}`:
    /// `(Sx)_1 = 0`, `(Sx)_{i+1} = w_i x_i`.
    pub fn shift(weights: &[C64]) -> Result<Self> {
        let n = weights.len() + 1;
        Self::from_matrix(CMatrix::from_fn(n, n, |i, j| {
            if i == j + 1 {
                weights[j]
            } else {
                ZERO
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if self.dim() == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            })
        }
    }

    /// `Tx`.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_dim(x.len())?;
        let v = &self.matrix * nalgebra::DVector::from_column_slice(x);
        Ok(v.iter().copied().collect())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Ok(Self::wrap(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Ok(Self::wrap(&self.matrix - &other.matrix))
    }

    /// `self ∘ other`, i.e. the matrix product `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Ok(Self::wrap(&self.matrix * &other.matrix))
    }

    pub fn scale(&self, c: C64) -> Operator {
        Self::wrap(&self.matrix * c)
    }

    /// `λI − T`.
    pub fn shifted(&self, lambda: C64) -> Operator {
        let n = self.dim();
        Self::wrap(CMatrix::from_diagonal_element(n, n, lambda) - &self.matrix)
    }

    /// `T^k` as a fresh operator.
    pub fn power(&self, k: usize) -> Operator {
        Self::wrap(self.with_power(k, Clone::clone))
    }

    /// Runs `f` on the cached `T^k`, extending the cache as needed.
    pub fn with_power<R>(&self, k: usize, f: impl FnOnce(&CMatrix) -> R) -> R {
        {
            let cache = self.powers.read().expect("power cache poisoned");
            if let Some(m) = cache.get(k) {
                return f(m);
            }
        }
        let mut cache = self.powers.write().expect("power cache poisoned");
        while cache.len() <= k {
            let next = cache.last().expect("cache holds T^0") * &self.matrix;
            cache.push(next);
        }
        f(&cache[k])
    }

    /// Number of powers currently memoised (`T^0..T^{len-1}`).
    pub fn cached_powers(&self) -> usize {
        self.powers.read().expect("power cache poisoned").len()
    }

    /// `(λI − T)⁻¹`.
    pub fn resolvent(&self, lambda: C64) -> Result<Operator> {
        Ok(Self::wrap(crate::linalg::shifted_inverse(&self.matrix, lambda)?))
    }
}

/// First entry of `m[F_q, F_p^c]` whose modulus exceeds `tau`, as `(row, col)`.
pub fn leak(m: &CMatrix, p: &Seminorm, q: &Seminorm, tau: f64) -> Option<(usize, usize)> {
    let outside = p.complement();
    for &i in q.support() {
        for &j in &outside {
            if m[(i, j)].norm() > tau {
                return Some((i, j));
            }
        }
    }
    None
}

/// `max_{i∈F_q} Σ_{j∈F_p} (w^q_i/w^p_j)|m_ij|` without the leak test.
pub fn block_norm(m: &CMatrix, p: &Seminorm, q: &Seminorm) -> f64 {
    q.support()
        .iter()
        .zip(q.weights())
        .map(|(&i, &wq)| {
            p.support()
                .iter()
                .zip(p.weights())
                .map(|(&j, &wp)| wq / wp * m[(i, j)].norm())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `m_pq` of a raw matrix with structural-zero threshold `tau`.
pub fn mixed_norm(m: &CMatrix, p: &Seminorm, q: &Seminorm, tau: f64) -> f64 {
    if leak(m, p, q, tau).is_some() {
        f64::INFINITY
    } else {
        block_norm(m, p, q)
    }
}

fn assert_dims(t: &Operator, p: &Seminorm) {
    assert_eq!(t.dim(), p.dim(), "operator and seminorm dimensions differ");
}

/// `T(N^p) ⊂ N^p`, i.e. `T[F, F^c]` vanishes exactly.
pub fn invariant_under(t: &Operator, p: &Seminorm) -> bool {
    invariant_under_tol(t, p, 0.0)
}

/// [`invariant_under`] with entries of modulus `<= tau` treated as zero.
pub fn invariant_under_tol(t: &Operator, p: &Seminorm, tau: f64) -> bool {
    assert_dims(t, p);
    leak(t.matrix(), p, p, tau).is_none()
}

/// `p̂(T)`, `+∞` when `T` does not preserve `N^p`.
pub fn p_hat(t: &Operator, p: &Seminorm) -> f64 {
    p_hat_tol(t, p, 0.0)
}

pub fn p_hat_tol(t: &Operator, p: &Seminorm, tau: f64) -> f64 {
    assert_dims(t, p);
    mixed_norm(t.matrix(), p, p, tau)
}

/// `m_pq(T) = sup_{p(x)≠0} q(Tx)/p(x)`.
pub fn m_pq(t: &Operator, p: &Seminorm, q: &Seminorm) -> f64 {
    m_pq_tol(t, p, q, 0.0)
}

pub fn m_pq_tol(t: &Operator, p: &Seminorm, q: &Seminorm, tau: f64) -> f64 {
    assert_dims(t, p);
    assert_dims(t, q);
    mixed_norm(t.matrix(), p, q, tau)
}

/// A vector with `p(x) = 1` and `p(Tx) = p̂(T)`: supported on `F`, it takes
/// the conjugate phases of the maximising row scaled by `1/w_j`.
pub fn norming_vector(t: &Operator, p: &Seminorm) -> Option<Vec<C64>> {
    if !invariant_under(t, p) {
        return None;
    }
    let m = t.matrix();
    let (row, _) = p
        .support()
        .iter()
        .zip(p.weights())
        .map(|(&i, &wi)| {
            let s: f64 = p
                .support()
                .iter()
                .zip(p.weights())
                .map(|(&j, &wj)| wi / wj * m[(i, j)].norm())
                .sum();
            (i, s)
        })
        .fold((p.support()[0], f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let mut x = vec![ZERO; t.dim()];
    for (&j, &wj) in p.support().iter().zip(p.weights()) {
        let z = m[(row, j)];
        let phase = if z.norm() == 0.0 { C64::new(1.0, 0.0) } else { z.conj() / z.norm() };
        x[j] = phase / wj;
    }
    Some(x)
}

/// Boundedness of `T` relative to a calibration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    /// `p̂(T) < ∞` for every `p`.
    pub quotient_bounded: bool,
    /// `c_p = p̂(T)` per seminorm, in calibration order.
    #[serde(with = "crate::serde_ext::ext_f64_vec")]
    pub constants: Vec<f64>,
    /// `sup_p p̂(T) < ∞`.
    pub universally_bounded: bool,
    /// `‖T‖_P = sup_p p̂(T)`.
    #[serde(with = "crate::serde_ext::ext_f64")]
    pub norm: f64,
    /// Some `p` has `m_pq(T) < ∞` for every `q`.
    pub locally_bounded: bool,
    /// Index of the first such `p`.
    pub witness: Option<usize>,
    pub witness_label: Option<String>,
    /// Structural-zero threshold the classification used.
    pub zero_tol: f64,
}

/// Classifies `T` against `P`. Every linear map on a finite-dimensional space
/// is continuous, so only the calibration-relative classes carry information.
pub fn classify(t: &Operator, cal: &Calibration) -> Result<BoundednessReport> {
    classify_tol(t, cal, 0.0)
}

pub fn classify_tol(t: &Operator, cal: &Calibration, tau: f64) -> Result<BoundednessReport> {
    t.check_dim(cal.dim())?;
    let constants: Vec<f64> = cal.iter().map(|p| p_hat_tol(t, p, tau)).collect();
    let quotient_bounded = constants.iter().all(|c| c.is_finite());
    let norm = constants.iter().copied().fold(0.0, f64::max);
    let witness = cal
        .iter()
        .position(|p| cal.iter().all(|q| m_pq_tol(t, p, q, tau).is_finite()));
    Ok(BoundednessReport {
        quotient_bounded,
        constants,
        universally_bounded: norm.is_finite(),
        norm,
        locally_bounded: witness.is_some(),
        witness,
        witness_label: witness.map(|k| cal.seminorms()[k].label()),
        zero_tol: tau,
    })
}

/// JSON form of an operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// Row-major real and imaginary parts.
    Dense {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
    /// `(Sx)_{i+1} = w_i x_i`, `(Sx)_1 = 0`; `weights` has `dim − 1` entries.
    Shift {
        dim: usize,
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
    Diagonal {
        entries: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
}

fn complexify(re: &[f64], im: Option<&Vec<f64>>, what: &str) -> Result<Vec<C64>> {
    match im {
        Some(im) if im.len() != re.len() => Err(Error::InvalidOperator(format!(
            "{what}: im has {} entries, expected {}",
            im.len(),
            re.len()
        ))),
        Some(im) => Ok(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect()),
        None => Ok(re.iter().map(|&a| C64::new(a, 0.0)).collect()),
    }
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::Dense { re, .. } => re.len(),
            OperatorSpec::Shift { dim, .. } => *dim,
            OperatorSpec::Diagonal { entries, .. } => entries.len(),
        }
    }

    pub fn build(&self) -> Result<Operator> {
        match self {
            OperatorSpec::Dense { re, im } => Operator::dense(re, im.as_deref()),
            OperatorSpec::Shift { dim, weights, im } => {
                if *dim == 0 || weights.len() + 1 != *dim {
                    return Err(Error::InvalidOperator(format!(
                        "shift on dimension {dim} needs {} weights, found {}",
                        dim.saturating_sub(1),
                        weights.len()
                    )));
                }
                Operator::shift(&complexify(weights, im.as_ref(), "shift")?)
            }
            OperatorSpec::Diagonal { entries, im } => {
                Operator::diagonal(&complexify(entries, im.as_ref(), "diagonal")?)
            }
        }
    }

    /// Dense form of any operator.
    pub fn from_operator(t: &Operator) -> Self {
        let m = t.matrix();
        let n = t.dim();
        let re = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
        let has_im = im.iter().flatten().any(|&v| v != 0.0);
        OperatorSpec::Dense {
            re,
            im: has_im.then_some(im),
        }
    }
}
