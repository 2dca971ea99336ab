#![allow(dead_code)]

use calspec::calib::{Calibration, Seminorm};
use calspec::random::{complex_entry, generate, impose_invariance, permuted, seeded, GeneratorKind, Instance};
use calspec::{CMatrix, Operator, C64};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Generated, randomly permuted `(T, P)` pair plus the RNG for further draws.
pub fn instance(seed: u64, kind: usize, n: usize) -> (Instance, ChaCha8Rng) {
    let mut rng = seeded(seed);
    let inst = generate(GeneratorKind::ALL[kind % 4], n, &mut rng).unwrap();
    let inst = permuted(&inst, &mut rng).unwrap();
    (inst, rng)
}

/// Random operator sharing the calibration's zero pattern.
pub fn partner(t: &Operator, cal: &Calibration, rng: &mut ChaCha8Rng) -> Operator {
    let n = t.dim();
    let mut m = CMatrix::from_fn(n, n, |_, _| complex_entry(rng));
    impose_invariance(&mut m, cal);
    Operator::from_matrix(m).unwrap()
}

pub fn vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n)
        .map(|_| complex_entry(rng) * rng.random_range(0.01..100.0))
        .collect()
}

/// Distance in units in the last place between two nonnegative finite floats.
pub fn ulps(a: f64, b: f64) -> u64 {
    a.to_bits().abs_diff(b.to_bits())
}

pub fn arb_c64() -> impl Strategy<Value = C64> {
    (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(re, im)| C64::new(re, im))
}

pub fn arb_vector(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(arb_c64(), n)
}

pub fn arb_seminorm(n: usize) -> impl Strategy<Value = Seminorm> {
    (prop::collection::vec(any::<bool>(), n), 0..n, prop::collection::vec(0.25..4.0f64, n)).prop_map(
        move |(mask, forced, w)| {
            let support: Vec<usize> = (0..n).filter(|&i| mask[i] || i == forced).collect();
            let weights: Vec<f64> = support.iter().map(|&i| w[i]).collect();
            Seminorm::new(n, &support, &weights).unwrap()
        },
    )
}

pub fn arb_calibration(n: usize, max_len: usize) -> impl Strategy<Value = Calibration> {
    prop::collection::vec(arb_seminorm(n), 1..=max_len).prop_map(|ps| Calibration::new("arb", ps).unwrap())
}

/// A family Q-equivalent to `cal`: members reordered, rescaled and
/// duplicated.
pub fn q_variant(cal: &Calibration, rng: &mut ChaCha8Rng) -> Calibration {
    let mut ps: Vec<Seminorm> = Vec::new();
    for p in cal.iter() {
        let copies = rng.random_range(1..=2);
        for _ in 0..copies {
            let w: Vec<f64> = p.weights().iter().map(|&x| x * rng.random_range(0.2..5.0)).collect();
            ps.push(Seminorm::new(p.dim(), p.support(), &w).unwrap());
        }
    }
    for i in (1..ps.len()).rev() {
        ps.swap(i, rng.random_range(0..=i));
    }
    Calibration::new("variant", ps).unwrap()
}
