//! Seeded generators for invariance-compatible `(T, P)` pairs.
//!
//! Every generator fills entries at random and then imposes the zero pattern
//! `T[F, F^c] = 0` for each seminorm, so the operator is quotient bounded by
//! construction. All randomness flows through the caller's RNG; use
//! [`seeded`] for reproducible streams.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calib::{Calibration, Seminorm};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::oper::Operator;

pub const MAX_DIM: usize = 500;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    TriangularNested,
    Diagonal,
    Shift,
    RandomInvariant,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 4] = [
        GeneratorKind::TriangularNested,
        GeneratorKind::Diagonal,
        GeneratorKind::Shift,
        GeneratorKind::RandomInvariant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorKind::TriangularNested => "triangular-nested",
            GeneratorKind::Diagonal => "diagonal",
            GeneratorKind::Shift => "shift",
            GeneratorKind::RandomInvariant => "random-invariant",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unsupported generator kind {s:?}; expected one of triangular-nested, diagonal, shift, random-invariant"
                ))
            })
    }
}

/// A generated operator with a calibration it is quotient bounded for.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub operator: Operator,
    pub calibration: Calibration,
}

/// Entry with real and imaginary parts uniform in `[-1, 1]`.
pub fn complex_entry<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

fn weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.5..=2.0)
}

/// Zeroes `m[F, F^c]` for every seminorm of `cal`.
pub fn impose_invariance(m: &mut CMatrix, cal: &Calibration) {
    for p in cal.iter() {
        let outside = p.complement();
        for &i in p.support() {
            for &j in &outside {
                m[(i, j)] = ZERO;
            }
        }
    }
}

/// Nested chain `F={1..k}` with random weights.
pub fn weighted_nested<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Calibration> {
    let ps = (1..=n)
        .map(|k| {
            let w: Vec<f64> = (0..k).map(|_| weight(rng)).collect();
            Seminorm::new(n, &(0..k).collect::<Vec<_>>(), &w)
        })
        .collect::<Result<Vec<_>>>()?;
    Calibration::new("nested", ps)
}

/// Random supports covering every coordinate, with random weights.
pub fn random_separating<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Calibration> {
    let count = rng.random_range(1..=n.clamp(1, 6));
    let mut supports: Vec<Vec<usize>> = (0..count)
        .map(|_| (0..n).filter(|_| rng.random_bool(0.5)).collect())
        .collect();
    for i in 0..n {
        if !supports.iter().any(|s| s.contains(&i)) {
            let k = rng.random_range(0..count);
            supports[k].push(i);
        }
    }
    for s in &mut supports {
        if s.is_empty() {
            s.push(rng.random_range(0..n));
        }
        s.sort_unstable();
    }
    let ps = supports
        .iter()
        .map(|s| {
            let w: Vec<f64> = s.iter().map(|_| weight(rng)).collect();
            Seminorm::new(n, s, &w)
        })
        .collect::<Result<Vec<_>>>()?;
    Calibration::new("random", ps)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

/// Lower triangular operator under a weighted nested chain. Off-diagonal
/// entries are scaled by `1/√n` to keep non-normal transients moderate.
pub fn triangular_nested<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Instance> {
    check_dim(n)?;
    let calibration = weighted_nested(n, rng)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut m = CMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => complex_entry(rng),
        _ => complex_entry(rng) * scale,
    });
    impose_invariance(&mut m, &calibration);
    Ok(Instance {
        operator: Operator::from_matrix(m)?,
        calibration,
    })
}

/// Complex diagonal operator under the singleton calibration.
pub fn diagonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Instance> {
    check_dim(n)?;
    let entries: Vec<C64> = (0..n).map(|_| complex_entry(rng)).collect();
    Ok(Instance {
        operator: Operator::diagonal(&entries)?,
        calibration: Calibration::singletons("singletons", n)?,
    })
}

/// Forward shift with weights in `[0.5, 2]` under a weighted nested chain.
pub fn shift<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Instance> {
    check_dim(n)?;
    let weights: Vec<C64> = (1..n).map(|_| C64::new(weight(rng), 0.0)).collect();
    Ok(Instance {
        operator: Operator::shift(&weights)?,
        calibration: weighted_nested(n, rng)?,
    })
}

/// Dense random fill under random covering supports.
pub fn random_invariant<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Instance> {
    check_dim(n)?;
    let calibration = random_separating(n, rng)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut m = CMatrix::from_fn(n, n, |_, _| complex_entry(rng) * scale);
    impose_invariance(&mut m, &calibration);
    Ok(Instance {
        operator: Operator::from_matrix(m)?,
        calibration,
    })
}

pub fn generate<R: Rng + ?Sized>(kind: GeneratorKind, n: usize, rng: &mut R) -> Result<Instance> {
    match kind {
        GeneratorKind::TriangularNested => triangular_nested(n, rng),
        GeneratorKind::Diagonal => diagonal(n, rng),
        GeneratorKind::Shift => shift(n, rng),
        GeneratorKind::RandomInvariant => random_invariant(n, rng),
    }
}

/// `c₀I + c₁T + c₂T²` with random coefficients; commutes with `T` and
/// inherits every invariant null space.
pub fn commuting_partner<R: Rng + ?Sized>(t: &Operator, rng: &mut R) -> Operator {
    let n = t.dim();
    let (c0, c1, c2) = (complex_entry(rng), complex_entry(rng), complex_entry(rng));
    let m = CMatrix::from_diagonal_element(n, n, c0) + t.matrix() * c1 + t.power(2).matrix() * c2;
    Operator::from_matrix(m).expect("polynomial of a finite matrix is finite")
}

/// A random permutation of the coordinates applied to both operator and
/// calibration, which keeps the pair invariance-compatible.
pub fn permuted<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Result<Instance> {
    let n = inst.operator.dim();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let src = inst.operator.matrix();
    let m = CMatrix::from_fn(n, n, |i, j| src[(perm[i], perm[j])]);
    // coordinate perm[i] of the source becomes coordinate i
    let mut inverse = vec![0; n];
    for (i, &k) in perm.iter().enumerate() {
        inverse[k] = i;
    }
    let ps = inst
        .calibration
        .iter()
        .map(|p| {
            let support: Vec<usize> = p.support().iter().map(|&k| inverse[k]).collect();
            Seminorm::new(n, &support, p.weights())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance {
        operator: Operator::from_matrix(m)?,
        calibration: Calibration::new(inst.calibration.name(), ps)?,
    })
}
