//! Tensor embeddings, partial traces, norms and small dense helpers.
//!
//! Site 0 is the most significant tensor factor: basis index bit `n - 1 - s`
//! belongs to site `s`.

use faer::{c64, Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spinsys::Region;

pub type DenseOp = Mat<c64>;

#[inline]
pub fn cx(re: f64) -> c64 {
    c64::new(re, 0.0)
}

pub fn kron(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

#[inline]
fn bit(n: usize, s: usize) -> usize {
    1 << (n - 1 - s)
}

/// Scatter the bits of `local` (over `support`, most significant first) into a
/// full basis index.
#[inline]
fn scatter(local: usize, support: &[usize], n: usize) -> usize {
    let k = support.len();
    let mut x = 0;
    for (p, &s) in support.iter().enumerate() {
        if local & (1 << (k - 1 - p)) != 0 {
            x |= bit(n, s);
        }
    }
    x
}

fn rest_indices(support: &[usize], n: usize) -> Vec<usize> {
    let comp: Vec<usize> = (0..n).filter(|s| !support.contains(s)).collect();
    (0..1usize << comp.len()).map(|r| scatter(r, &comp, n)).collect()
}

/// Embed an operator on `support` (sorted) into the full n-site register.
pub fn embed(op: &Mat<c64>, support: &[usize], n: usize) -> Mat<c64> {
    let k = support.len();
    assert_eq!(op.nrows(), 1 << k, "operator does not match support");
    let d = 1usize << n;
    let mut out = Mat::<c64>::zeros(d, d);
    let rest = rest_indices(support, n);
    let loc: Vec<usize> = (0..1usize << k).map(|l| scatter(l, support, n)).collect();
    for &r0 in &rest {
        for (lc, &xc) in loc.iter().enumerate() {
            for (lr, &xr) in loc.iter().enumerate() {
                out[(r0 | xr, r0 | xc)] = op[(lr, lc)];
            }
        }
    }
    out
}

/// Apply a map defined on the sub-register `support` to an n-site operator,
/// acting as identity on the remaining sites.
pub fn apply_local_map<F>(x: &Mat<c64>, support: &[usize], n: usize, f: F) -> Mat<c64>
where
    F: Fn(&Mat<c64>) -> Mat<c64>,
{
    let k = support.len();
    let dl = 1usize << k;
    let d = 1usize << n;
    let rest = rest_indices(support, n);
    let loc: Vec<usize> = (0..dl).map(|l| scatter(l, support, n)).collect();
    let mut out = Mat::<c64>::zeros(d, d);
    for &ra in &rest {
        for &rb in &rest {
            let block = Mat::from_fn(dl, dl, |i, j| x[(ra | loc[i], rb | loc[j])]);
            let y = f(&block);
            for j in 0..dl {
                for i in 0..dl {
                    out[(ra | loc[i], rb | loc[j])] = y[(i, j)];
                }
            }
        }
    }
    out
}

fn check_region(r: &Region, n: usize) -> Result<()> {
    match r.max_site() {
        Some(s) if s >= n => Err(Error::InvalidRegion(format!("site {s} outside [0, {n})"))),
        _ => Ok(()),
    }
}

/// Trace out `traced`; the kept sites stay in ascending order.
pub fn partial_trace(rho: &Mat<c64>, traced: &Region, n: usize) -> Result<Mat<c64>> {
    check_region(traced, n)?;
    if rho.nrows() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: rho.nrows() });
    }
    let kept = traced.complement(n);
    let dk = 1usize << kept.len();
    let tr: Vec<usize> = (0..1usize << traced.len()).map(|l| scatter(l, traced.sites(), n)).collect();
    let kx: Vec<usize> = (0..dk).map(|l| scatter(l, kept.sites(), n)).collect();
    Ok(Mat::from_fn(dk, dk, |i, j| {
        let mut s = c64::new(0.0, 0.0);
        for &t in &tr {
            s += rho[(kx[i] | t, kx[j] | t)];
        }
        s
    }))
}

/// Reduced state on `keep` (ascending order).
pub fn reduced(rho: &Mat<c64>, keep: &Region, n: usize) -> Result<Mat<c64>> {
    check_region(keep, n)?;
    partial_trace(rho, &keep.complement(n), n)
}

/// Replace region `a` by the maximally mixed state: Tr_A[rho] (x) I_A / 2^|A|.
pub fn discard(rho: &Mat<c64>, a: &Region, n: usize) -> Result<Mat<c64>> {
    check_region(a, n)?;
    if a.is_empty() {
        return Ok(rho.clone());
    }
    let d = 1usize << n;
    let sup = a.sites();
    let loc: Vec<usize> = (0..1usize << a.len()).map(|l| scatter(l, sup, n)).collect();
    let mask = loc.iter().fold(0, |m, &x| m | x);
    let scale = 1.0 / loc.len() as f64;
    Ok(Mat::from_fn(d, d, |r, c| {
        if r & mask != c & mask {
            return c64::new(0.0, 0.0);
        }
        let (r0, c0) = (r & !mask, c & !mask);
        let mut s = c64::new(0.0, 0.0);
        for &t in &loc {
            s += rho[(r0 | t, c0 | t)];
        }
        s * scale
    }))
}

pub fn dagger(a: &Mat<c64>) -> Mat<c64> {
    a.adjoint().to_owned()
}

pub fn commutator(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    a * b - b * a
}

pub fn trace(a: &Mat<c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn scale(a: &Mat<c64>, s: c64) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)] * s)
}

/// max |M - M^dagger| entry
pub fn hermiticity_defect(m: &Mat<c64>) -> f64 {
    let d = m.nrows();
    let mut e: f64 = 0.0;
    for c in 0..d {
        for r in 0..d {
            e = e.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    e
}

pub fn hermitian_part(m: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5)
}

pub fn singular_values(a: &Mat<c64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.singular_values().expect("svd converged")
}

pub fn op_norm(a: &Mat<c64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn trace_norm(a: &Mat<c64>) -> f64 {
    singular_values(a).iter().sum()
}

pub fn frob(a: &Mat<c64>) -> f64 {
    a.norm_l2()
}

pub fn max_abs(a: &Mat<c64>) -> f64 {
    a.norm_max()
}

/// ||a - b||_1
pub fn trace_distance(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    trace_norm(&(a - b))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &Mat<c64>) -> Vec<f64> {
    let e = a.self_adjoint_eigen(Side::Lower).expect("eigensolver converged");
    let s = e.S();
    (0..a.nrows()).map(|i| s[i].re).collect()
}

pub fn random_complex<R: Rng>(r: usize, c: usize, rng: &mut R) -> Mat<c64> {
    Mat::from_fn(r, c, |_, _| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Random operator with unit operator norm.
pub fn random_contraction<R: Rng>(d: usize, rng: &mut R) -> Mat<c64> {
    let g = random_complex(d, d, rng);
    let s = op_norm(&g);
    scale(&g, cx(1.0 / s))
}

pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> Mat<c64> {
    hermitian_part(&random_complex(d, d, rng))
}

/// Random full-rank density matrix G G^dagger / Tr.
pub fn random_density<R: Rng>(d: usize, rng: &mut R) -> Mat<c64> {
    let g = random_complex(d, d, rng);
    let p = &g * g.adjoint();
    let t = trace(&p).re;
    hermitian_part(&scale(&p, cx(1.0 / t)))
}

/// Column-stacking vectorization: entry (r, c) goes to r + c d.
pub fn vec_of(a: &Mat<c64>) -> Vec<c64> {
    let (r, c) = (a.nrows(), a.ncols());
    let mut v = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn unvec(v: &[c64], d: usize) -> Mat<c64> {
    assert_eq!(v.len(), d * d);
    Mat::from_fn(d, d, |i, j| v[i + j * d])
}

/// U^dagger X U
pub fn to_frame(u: &Mat<c64>, x: &Mat<c64>) -> Mat<c64> {
    u.adjoint() * x * u
}

/// U X U^dagger
pub fn from_frame(u: &Mat<c64>, x: &Mat<c64>) -> Mat<c64> {
    u * x * u.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinsys::{pauli_string, Pauli};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ket_bra(d: usize, i: usize, j: usize) -> Mat<c64> {
        Mat::from_fn(d, d, |r, c| if r == i && c == j { cx(1.0) } else { cx(0.0) })
    }

    #[test]
    fn embed_matches_kron() {
        let x = Pauli::X.matrix();
        let z = Pauli::Z.matrix();
        let e = embed(&x, &[1], 3);
        let k = pauli_string(&[Pauli::I, Pauli::X, Pauli::I]);
        assert_eq!((&e - &k).norm_max(), 0.0);
        let xz = kron(&x, &z);
        let e2 = embed(&xz, &[0, 2], 3);
        let k2 = pauli_string(&[Pauli::X, Pauli::I, Pauli::Z]);
        assert_eq!((&e2 - &k2).norm_max(), 0.0);
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_density(2, &mut rng);
        let b = random_density(4, &mut rng);
        let ab = kron(&a, &b);
        let pb = partial_trace(&ab, &Region::new([0]), 3).unwrap();
        assert!((&pb - &b).norm_max() < 1e-15);
        let pa = partial_trace(&ab, &Region::new([1, 2]), 3).unwrap();
        assert!((&pa - &a).norm_max() < 1e-15);
        let none = partial_trace(&ab, &Region::empty(), 3).unwrap();
        assert_eq!((&none - &ab).norm_max(), 0.0);
        assert!(partial_trace(&ab, &Region::new([3]), 3).is_err());
    }

    #[test]
    fn bell_marginal_is_mixed() {
        let mut psi = Mat::<c64>::zeros(4, 1);
        psi[(0, 0)] = cx(0.5f64.sqrt());
        psi[(3, 0)] = cx(0.5f64.sqrt());
        let rho = &psi * psi.adjoint();
        let m = partial_trace(&rho, &Region::new([1]), 2).unwrap();
        let half = scale(&Mat::identity(2, 2), cx(0.5));
        assert!((&m - &half).norm_max() < 1e-15);
    }

    #[test]
    fn trace_distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = random_density(4, &mut rng);
        assert!(trace_distance(&r, &r) < 1e-15);
        assert!((trace_distance(&ket_bra(2, 0, 0), &ket_bra(2, 1, 1)) - 2.0).abs() < 1e-14);
        let p = 0.83;
        let mut d = Mat::<c64>::zeros(2, 2);
        d[(0, 0)] = cx(p);
        d[(1, 1)] = cx(1.0 - p);
        let half = scale(&Mat::identity(2, 2), cx(0.5));
        assert!((trace_distance(&half, &d) - 2.0 * (p - 0.5f64).abs()).abs() < 1e-14);
    }

    #[test]
    fn discard_is_trace_preserving_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random_density(8, &mut rng);
        let a = Region::new([0, 2]);
        let d1 = discard(&rho, &a, 3).unwrap();
        let d2 = discard(&d1, &a, 3).unwrap();
        assert!((trace(&d1).re - 1.0).abs() < 1e-14);
        assert!((&d1 - &d2).norm_max() < 1e-15);
        let marg = partial_trace(&rho, &a, 3).unwrap();
        let rebuilt = embed(&marg, &[1], 3);
        let expect = scale(&rebuilt, cx(0.25));
        assert!((&expect - &d1).norm_max() < 1e-15);
    }

    #[test]
    fn local_map_identity_and_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_complex(16, 16, &mut rng);
        let y = apply_local_map(&x, &[1, 3], 4, |b| b.clone());
        assert_eq!((&x - &y).norm_max(), 0.0);
        let p = random_complex(4, 4, &mut rng);
        let lhs = apply_local_map(&x, &[1, 3], 4, |b| &p * b);
        let rhs = &embed(&p, &[1, 3], 4) * &x;
        assert!((&lhs - &rhs).norm_max() < 1e-12);
    }

    #[test]
    fn vec_round_trip_column_stacking() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_complex(3, 3, &mut rng);
        let v = vec_of(&x);
        assert_eq!(v[1 + 2 * 3], x[(1, 2)]);
        assert_eq!((&unvec(&v, 3) - &x).norm_max(), 0.0);
    }
}
