//! Spectral theory of quotient bounded and locally bounded operators on
//! finite-dimensional spaces calibrated by weighted coordinate-sup seminorms.
//!
//! The model space is `C^n`. A [`Seminorm`] is `p(x) = max_{i∈F} w_i |x_i|`
//! for a nonempty support `F` and positive weights, so every operator
//! seminorm (`p̂`, `m_pq`), null space `N^p` and quotient `X_p = X/N^p` has a
//! closed form. A [`Calibration`] is a finite ordered family of such
//! seminorms.
//!
//! Modules:
//! - [`calib`]: seminorms, calibrations, orderings and calibration constructions.
//! - [`oper`]: matrix-backed operators, `p̂`, `m_pq` and boundedness classes.
//! - [`quotient`]: induced quotient operators, their spectra and resolvents.
//! - [`spectral`]: Gelfand traces, `r_P`, `r_lb`, Neumann resolvents and the
//!   spectral-radius arithmetic.
//! - [`random`]: seeded generators for invariance-compatible instances.
//!
//! Coordinates are 0-based in the Rust API and 1-based in every external
//! format (JSON, CSV, labels).

pub mod calib;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod oper;
pub mod quotient;
pub mod random;
pub mod serde_ext;
pub mod spectral;
pub mod tol;

pub use calib::{Calibration, Dominance, Seminorm};
pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use oper::{BoundednessReport, Operator};
pub use quotient::{QuotientOperator, SpectralSet};
pub use tol::Tolerances;
