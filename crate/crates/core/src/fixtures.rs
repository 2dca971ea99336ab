//! Small reference instances with hand-checkable spectra.

use crate::calib::{Calibration, Seminorm};
use crate::linalg::C64;
use crate::oper::Operator;

/// Lower bidiagonal `[[2,0,0],[1,3,0],[0,1,5]]`, spectrum `{2, 3, 5}`.
pub fn fixture_a() -> Operator {
    Operator::from_real_rows(&[
        vec![2.0, 0.0, 0.0],
        vec![1.0, 3.0, 0.0],
        vec![0.0, 1.0, 5.0],
    ])
    .expect("static fixture")
}

/// Unit forward shift on `C^4`; nilpotent with `S^4 = 0`.
pub fn fixture_b() -> Operator {
    Operator::shift(&[C64::new(1.0, 0.0); 3]).expect("static fixture")
}

/// Unit-weight nested chain `F={1}, F={1,2}, …, F={1..n}`.
pub fn nested_unit(n: usize) -> Calibration {
    Calibration::nested("nested", n).expect("n > 0")
}

/// Diagonal operator with real entries.
pub fn real_diagonal(entries: &[f64]) -> Operator {
    let e: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
    Operator::diagonal(&e).expect("finite entries")
}

/// Single seminorm with full support and unit weights.
pub fn full_support(n: usize) -> Seminorm {
    Seminorm::leading(n, n).expect("n > 0")
}
