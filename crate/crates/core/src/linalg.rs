//! Dense complex linear algebra used by the analyses: eigenvalues by
//! Hessenberg reduction plus shifted QR, LU inverses, and point-set helpers.

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Plain ∞-operator norm (max absolute row sum).
pub fn inf_norm(m: &CMatrix) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// Inverse by LU with partial pivoting. Fails on an exactly zero pivot or a
/// non-finite result.
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let inv = m.clone().lu().try_inverse().ok_or(Error::Singular)?;
    if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(inv)
    } else {
        Err(Error::Singular)
    }
}

/// `(λI − M)⁻¹`.
pub fn shifted_inverse(m: &CMatrix, lambda: C64) -> Result<CMatrix> {
    let n = m.nrows();
    let shifted = CMatrix::from_diagonal_element(n, n, lambda) - m;
    inverse(&shifted)
}

/// Eigenvalues of a square complex matrix, with multiplicity. Irreducible
/// diagonal blocks are solved separately by balanced Hessenberg QR.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut out = Vec::with_capacity(n);
    for block in irreducible_blocks(m) {
        if let [i] = block[..] {
            out.push(m[(i, i)]);
            continue;
        }
        let mut h = CMatrix::from_fn(block.len(), block.len(), |a, b| m[(block[a], block[b])]);
        balance(&mut h);
        hessenberg(&mut h);
        out.extend(hessenberg_qr(&mut h)?);
    }
    Ok(out)
}

/// Index sets of the strongly connected components of the sparsity graph
/// (`i → j` when `m_ij ≠ 0`). Ordered along the condensation, they put `m`
/// in block triangular form, so the spectrum is the union of the diagonal
/// blocks' spectra. Singleton blocks give their eigenvalue exactly.
fn irreducible_blocks(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut g = petgraph::Graph::<(), ()>::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != ZERO {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    petgraph::algo::tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut idx: Vec<usize> = c.into_iter().map(|v| v.index()).collect();
            idx.sort_unstable();
            idx
        })
        .collect()
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm())))
}

/// Diagonal similarity scaling with powers of two (Parlett–Reinsch), which
/// leaves eigenvalues unchanged.
fn balance(a: &mut CMatrix) {
    let n = a.nrows();
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].l1_norm();
                    r += a[(i, j)].l1_norm();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut CMatrix) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let alpha_norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        // v = x + phase·‖x‖·e1, reflector H = I − 2vv*/(v*v)
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] += phase * alpha_norm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // Left: A ← H A on rows k+1..n
        for j in 0..n {
            let mut dot = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                dot += vi.conj() * a[(k + 1 + idx, j)];
            }
            let f = dot * (2.0 / vnorm2);
            for (idx, vi) in v.iter().enumerate() {
                a[(k + 1 + idx, j)] -= vi * f;
            }
        }
        // Right: A ← A H on columns k+1..n
        for i in 0..n {
            let mut dot = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                dot += a[(i, k + 1 + idx)] * vi;
            }
            let f = dot * (2.0 / vnorm2);
            for (idx, vi) in v.iter().enumerate() {
                a[(i, k + 1 + idx)] -= f * vi.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Complex Givens rotation `[c s; −s̄ c]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let norm = na.hypot(nb);
    let c = na / norm;
    let s = (a / na) * b.conj() / norm;
    (c, s)
}

/// Both eigenvalues of `[[a, b], [c, d]]`, the larger-modulus root first.
/// The second root comes from the determinant to avoid cancellation.
fn eig2x2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let tr_half = (a + d) * 0.5;
    let root = (((a - d) * 0.5).powi(2) + b * c).sqrt();
    let (p, m) = (tr_half + root, tr_half - root);
    let big = if p.norm() >= m.norm() { p } else { m };
    if big.norm() == 0.0 {
        return (ZERO, ZERO);
    }
    let det = a * d - b * c;
    (big, det / big)
}

/// Eigenvalue of the 2×2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let (l1, l2) = eig2x2(a, b, c, d);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Shifted QR on an upper Hessenberg matrix; only the active window is
/// updated since eigenvectors are not needed.
fn hessenberg_qr(h: &mut CMatrix) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut eig = vec![ZERO; n];
    let max_sweeps = 60 * n.max(1);
    let mut sweeps = 0usize;
    let mut iter_here = 0usize;
    let mut hi = n - 1;
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(n);
    loop {
        // find the deflation point
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].l1_norm() + h[(l, l)].l1_norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(l, l - 1)].l1_norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            iter_here = 0;
            if hi == 0 {
                break;
            }
            hi -= 1;
            continue;
        }
        if l + 1 == hi {
            // 2×2 block: closed form
            let (a, b, c, d) = (h[(l, l)], h[(l, hi)], h[(hi, l)], h[(hi, hi)]);
            let (l1, l2) = eig2x2(a, b, c, d);
            eig[l] = l1;
            eig[hi] = l2;
            iter_here = 0;
            if l == 0 {
                break;
            }
            hi = l - 1;
            continue;
        }
        sweeps += 1;
        iter_here += 1;
        if sweeps > max_sweeps {
            return Err(Error::EigenFailure { iterations: sweeps });
        }
        let shift = if iter_here.is_multiple_of(11) {
            // exceptional shift
            let s = h[(hi, hi - 1)].re.abs() + h[(hi - 1, hi - 2)].re.abs();
            h[(hi, hi)] + C64::new(0.75 * s, 0.4375 * s)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        for k in l..=hi {
            h[(k, k)] -= shift;
        }
        rots.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (offset, &(c, s)) in rots.iter().enumerate() {
            let k = l + offset;
            let last = (k + 2).min(hi);
            for i in l..=last {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[(k, k)] += shift;
        }
    }
    Ok(eig)
}

/// A spectral point with its multiplicity after merging.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedPoint {
    pub value: C64,
    pub multiplicity: usize,
}

/// Greedy single-linkage merge of points within `tol`; each cluster is
/// represented by its mean. Output is sorted by (re, im).
pub fn merge_points(points: &[C64], tol: f64) -> Vec<MergedPoint> {
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for &z in points {
        let hits: Vec<usize> = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|w| (w - z).norm() <= tol))
            .map(|(i, _)| i)
            .collect();
        match hits.first() {
            None => clusters.push(vec![z]),
            Some(&first) => {
                // fold every other touched cluster into the first
                for &other in hits[1..].iter().rev() {
                    let moved = clusters.remove(other);
                    clusters[first].extend(moved);
                }
                clusters[first].push(z);
            }
        }
    }
    let mut out: Vec<MergedPoint> = clusters
        .into_iter()
        .map(|c| {
            let sum: C64 = c.iter().sum();
            MergedPoint {
                value: sum / c.len() as f64,
                multiplicity: c.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| cmp_complex(a.value, b.value));
    out
}

pub fn cmp_complex(a: C64, b: C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Whether two point sets agree as sets: every point of each lies within
/// `tol` of some point of the other.
pub fn sets_match(a: &[C64], b: &[C64], tol: f64) -> bool {
    let covered = |xs: &[C64], ys: &[C64]| {
        xs.iter()
            .all(|x| ys.iter().any(|y| (x - y).norm() <= tol))
    };
    covered(a, b) && covered(b, a)
}

/// Distance from `z` to the nearest point of `points` (`+∞` when empty).
pub fn distance_to(points: &[C64], z: C64) -> f64 {
    points
        .iter()
        .map(|p| (p - z).norm())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| cmp_complex(*a, *b));
        v
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn triangular_eigenvalues_are_the_diagonal() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(2.0), c(0.0), c(0.0), c(1.0), c(3.0), c(0.0), c(0.0), c(1.0), c(5.0)],
        );
        let e = sorted(eigenvalues(&m).unwrap());
        for (got, want) in e.iter().zip([2.0, 3.0, 5.0]) {
            assert_abs_diff_eq!(got.re, want, epsilon = 1e-12);
            assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_has_conjugate_pair() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-1.0), c(1.0), c(0.0)]);
        let e = sorted(eigenvalues(&m).unwrap());
        assert_abs_diff_eq!(e[0].im, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1].im, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn similarity_oracle_recovers_prescribed_spectrum() {
        // A = V D V⁻¹ with known D: independent of the QR path
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 3, 5, 8, 20, 40] {
            let v = random_matrix(&mut rng, n) + identity(n) * C64::new(2.0, 0.0);
            let d: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
                .collect();
            let dm = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone()));
            let a = &v * dm * inverse(&v).unwrap();
            let e = eigenvalues(&a).unwrap();
            assert_eq!(e.len(), n);
            assert!(sets_match(&e, &d, 1e-8), "n={n}: {e:?} vs {d:?}");
        }
    }

    #[test]
    fn nilpotent_shift_has_zero_spectrum() {
        let n = 6;
        let m = CMatrix::from_fn(n, n, |i, j| if i == j + 1 { ONE } else { ZERO });
        let e = eigenvalues(&m).unwrap();
        assert!(e.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn merge_collapses_close_points() {
        let pts = [c(1.0), c(1.0 + 1e-10), c(2.0), c(1.0 - 1e-10)];
        let merged = merge_points(&pts, 1e-8);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].multiplicity, 3);
        assert_abs_diff_eq!(merged[1].value.re, 2.0);
    }

    #[test]
    fn inverse_rejects_singular() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        assert_eq!(inverse(&m), Err(Error::Singular));
    }
}
