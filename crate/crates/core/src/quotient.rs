//! Quotient spaces `X_p = X/N^p` and the induced operators `T^p`.
//!
//! When `T` preserves `N^p`, `T^p` acts on the coordinates of `F` (ascending)
//! through the block `T[F, F]`, and the quotient norm `‖x_p‖_p = p(x)` is the
//! weighted sup norm on those coordinates. Spectra are computed on the raw
//! block; weights only enter norms since they act by similarity.

use std::io::Write;

use serde::Serialize;

use crate::calib::{Calibration, Seminorm};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::oper::{self, Operator};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientOperator {
    seminorm: Seminorm,
    matrix: CMatrix,
}

impl QuotientOperator {
    pub fn seminorm(&self) -> &Seminorm {
        &self.seminorm
    }

    /// The block `T[F, F]`.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Quotient-norm weights, parallel to the block's rows.
    pub fn weights(&self) -> &[f64] {
        self.seminorm.weights()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `‖T^p‖_p`, the weighted ∞-operator norm of the block.
    pub fn norm(&self) -> f64 {
        weighted_norm(&self.matrix, self.weights())
    }
}

/// `max_i Σ_j (w_i/w_j)|m_ij|`.
pub fn weighted_norm(m: &CMatrix, w: &[f64]) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| w[i] / w[j] * m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn extract_block(m: &CMatrix, p: &Seminorm) -> CMatrix {
    let f = p.support();
    CMatrix::from_fn(f.len(), f.len(), |a, b| m[(f[a], f[b])])
}

/// `T^p`. Rejects a `T` that leaks out of `N^p`, naming the first leaking
/// entry.
pub fn project(t: &Operator, p: &Seminorm) -> Result<QuotientOperator> {
    project_tol(t, p, 0.0)
}

pub fn project_tol(t: &Operator, p: &Seminorm, tau: f64) -> Result<QuotientOperator> {
    if t.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: p.dim(),
        });
    }
    if let Some((i, j)) = oper::leak(t.matrix(), p, p, tau) {
        return Err(Error::NotInvariant {
            seminorm: p.label(),
            row: i + 1,
            col: j + 1,
            modulus: t.matrix()[(i, j)].norm(),
        });
    }
    Ok(QuotientOperator {
        seminorm: p.clone(),
        matrix: extract_block(t.matrix(), p),
    })
}

/// A merged eigenvalue with its multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub value: C64,
    pub multiplicity: usize,
}

/// `σ(X_p, T^p)` as a set (points within `tol_spec` merged).
pub fn quotient_spectrum(q: &QuotientOperator, tol_spec: f64) -> Result<Vec<SpectrumPoint>> {
    let eig = linalg::eigenvalues(&q.matrix)?;
    Ok(linalg::merge_points(&eig, tol_spec)
        .into_iter()
        .map(|m| SpectrumPoint {
            value: m.value,
            multiplicity: m.multiplicity,
        })
        .collect())
}

/// `R(λ, T^p) = (λI − T^p)⁻¹` on the quotient coordinates.
pub fn quotient_resolvent(q: &QuotientOperator, lambda: C64, tol_spec: f64) -> Result<CMatrix> {
    let spectrum = quotient_spectrum(q, tol_spec)?;
    let values: Vec<C64> = spectrum.iter().map(|s| s.value).collect();
    let d = linalg::distance_to(&values, lambda);
    if d <= tol_spec {
        return Err(Error::NearSpectrum {
            lambda,
            distance: d,
        });
    }
    linalg::shifted_inverse(&q.matrix, lambda).map_err(|_| Error::NearSpectrum {
        lambda,
        distance: d,
    })
}

/// A point of `σ(Q_P, T)` with the seminorms whose quotient spectrum contains it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetPoint {
    pub value: C64,
    /// Indices into the calibration.
    pub seminorms: Vec<usize>,
    pub labels: Vec<String>,
    /// Largest multiplicity among contributing quotient spectra.
    pub multiplicity: usize,
}

/// `σ(Q_P, T) = ∪_p σ(X_p, T^p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSet {
    pub calibration: String,
    pub points: Vec<SetPoint>,
    /// Per seminorm, the spectral radius of its quotient block.
    pub quotient_radii: Vec<f64>,
}

impl SpectralSet {
    pub fn values(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// `|σ|`, the largest modulus (0 for an empty set).
    pub fn radius(&self) -> f64 {
        self.points.iter().map(|p| p.value.norm()).fold(0.0, f64::max)
    }

    pub fn distance_to(&self, z: C64) -> f64 {
        linalg::distance_to(&self.values(), z)
    }

    pub fn contains(&self, z: C64, tol_spec: f64) -> bool {
        self.distance_to(z) <= tol_spec
    }

    /// CSV with columns `re, im, seminorm_labels` (labels `;`-joined).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
        out.write_record(["re", "im", "seminorm_labels"]).map_err(io)?;
        for p in &self.points {
            out.write_record([p.value.re.to_string(), p.value.im.to_string(), p.labels.join(";")])
                .map_err(io)?;
        }
        out.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Union of the quotient spectra over `P`. Requires `T` quotient bounded.
pub fn spectral_set(t: &Operator, cal: &Calibration, tols: &Tolerances) -> Result<SpectralSet> {
    if t.dim() != cal.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: cal.dim(),
        });
    }
    let mut raw: Vec<(C64, usize, usize)> = Vec::new();
    let mut radii = Vec::with_capacity(cal.len());
    for (k, p) in cal.iter().enumerate() {
        let q = project_tol(t, p, tols.zero).map_err(|_| Error::NotQuotientBounded {
            seminorm: p.label(),
        })?;
        let spec = quotient_spectrum(&q, tols.spec)?;
        radii.push(spec.iter().map(|s| s.value.norm()).fold(0.0, f64::max));
        raw.extend(spec.into_iter().map(|s| (s.value, k, s.multiplicity)));
    }
    // merge across seminorms, then attribute each merged point
    let merged = linalg::merge_points(&raw.iter().map(|r| r.0).collect::<Vec<_>>(), tols.spec);
    let points = merged
        .into_iter()
        .map(|m| {
            let mut seminorms: Vec<usize> = Vec::new();
            let mut multiplicity = 0;
            for &(z, k, mult) in &raw {
                if (z - m.value).norm() <= tols.spec {
                    if !seminorms.contains(&k) {
                        seminorms.push(k);
                    }
                    multiplicity = multiplicity.max(mult);
                }
            }
            seminorms.sort_unstable();
            let labels = seminorms.iter().map(|&k| cal.seminorms()[k].label()).collect();
            SetPoint {
                value: m.value,
                seminorms,
                labels,
                multiplicity,
            }
        })
        .collect();
    Ok(SpectralSet {
        calibration: cal.name().to_string(),
        points,
        quotient_radii: radii,
    })
}
