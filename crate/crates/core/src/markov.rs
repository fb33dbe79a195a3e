//! Entropies, conditional mutual information and CMI decay scans.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gibbs::gibbs;
use crate::linalg::ops::{eigvalsh, reduced, trace};
use crate::linalg::spectrum::hermitian_eig;
use crate::special::binary_entropy;
use crate::spinsys::{Hamiltonian, Region};
use crate::stats::{linear_fit, LinearFit};

/// Eigenvalues below this contribute nothing to the entropy.
pub const ENTROPY_FLOOR: f64 = 1e-14;
/// Largest register for the state-only scans.
pub const MAX_SCAN_QUBITS: usize = 12;
/// CMI values at or below this are left out of the log-linear fit.
pub const FIT_FLOOR: f64 = 1e-12;

/// S(ρ) = -Tr ρ ln ρ
pub fn von_neumann_entropy(rho: &Mat<c64>) -> Result<f64> {
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidState(format!("trace {:.3e}{:+.3e}i is not 1", tr.re, tr.im)));
    }
    let mut s = 0.0;
    for l in eigvalsh(rho) {
        if l < -1e-8 {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:.3e}")));
        }
        if l > ENTROPY_FLOOR {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tripartition {
    pub a: Region,
    pub b: Region,
    pub c: Region,
}

impl Tripartition {
    pub fn new(a: Region, b: Region, c: Region, n: usize) -> Result<Self> {
        let ab = a.union(&b);
        if a.intersects(b.sites()) || a.intersects(c.sites()) || b.intersects(c.sites()) {
            return Err(Error::InvalidRegion("tripartition parts overlap".into()));
        }
        if ab.union(&c) != Region::all(n) {
            return Err(Error::InvalidRegion(format!("tripartition does not cover the {n} sites")));
        }
        Ok(Tripartition { a, b, c })
    }
}

/// I(A:C|B) = S(AB) + S(BC) - S(B) - S(ABC)
pub fn qcmi(rho: &Mat<c64>, p: &Tripartition, n: usize) -> Result<f64> {
    let s = |r: &Region| -> Result<f64> { von_neumann_entropy(&reduced(rho, r, n)?) };
    Ok(s(&p.a.union(&p.b))? + s(&p.b.union(&p.c))? - s(&p.b)? - s(&Region::all(n))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmiBound {
    pub value: f64,
    /// Δ was outside [0, 1] and got clamped
    pub clamped: bool,
}

/// Δ ln dim C + h₂(Δ) in nats.
pub fn cmi_recovery_bound(delta: f64, dim_c: usize) -> CmiBound {
    let d = delta.clamp(0.0, 1.0);
    CmiBound { value: d * (dim_c as f64).ln() + binary_entropy(d), clamped: d != delta }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmiRow {
    /// sites of B between A and C
    pub dist: usize,
    pub qcmi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmiScan {
    pub rows: Vec<CmiRow>,
    /// ln qcmi against dist over values above FIT_FLOOR; None if fewer than two
    pub fit: Option<LinearFit>,
}

/// Chain scan with A = the first `a_size` sites, B the next `k` sites and
/// C the rest, for k = 1 .. n - a_size - 1.
pub fn cmi_decay_scan(h: &Hamiltonian, beta: f64, a_size: usize) -> Result<CmiScan> {
    let n = h.n();
    if n > MAX_SCAN_QUBITS {
        return Err(Error::Capacity { what: format!("CMI scan on {n} qubits"), limit: MAX_SCAN_QUBITS });
    }
    if a_size == 0 || a_size + 2 > n {
        return Err(Error::InvalidParameter(format!("|A| = {a_size} leaves no room for B and C on {n} sites")));
    }
    let gs = gibbs(&hermitian_eig(&h.dense())?, beta)?;
    let mut rows = Vec::new();
    for k in 1..n - a_size {
        let p = Tripartition::new(
            Region::new(0..a_size),
            Region::new(a_size..a_size + k),
            Region::new(a_size + k..n),
            n,
        )?;
        rows.push(CmiRow { dist: k, qcmi: qcmi(&gs.rho, &p, n)? });
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.qcmi > FIT_FLOOR).map(|r| (r.dist as f64, r.qcmi.ln())).unzip();
    Ok(CmiScan { fit: linear_fit(&x, &y), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gibbs::maximally_mixed;
    use crate::linalg::ops::{kron, random_density};
    use crate::spinsys::{build_ising_chain, build_tfim_chain};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn pure(v: &[c64]) -> Mat<c64> {
        Mat::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    #[test]
    fn entropy_examples() {
        let mut v = vec![c64::new(0.0, 0.0); 4];
        v[2] = c64::new(0.6, 0.0);
        v[1] = c64::new(0.0, 0.8);
        assert!(von_neumann_entropy(&pure(&v)).unwrap().abs() < 1e-12);
        assert!((von_neumann_entropy(&maximally_mixed(8)).unwrap() - 3.0 * LN_2).abs() < 1e-12);
        let d = Mat::from_fn(2, 2, |r, c| c64::new(if r == c { [0.25, 0.75][r] } else { 0.0 }, 0.0));
        let want = -0.25 * 0.25f64.ln() - 0.75 * 0.75f64.ln();
        assert!((von_neumann_entropy(&d).unwrap() - want).abs() < 1e-14);
        let bad = Mat::from_fn(2, 2, |r, c| c64::new(if r == c { 0.6 } else { 0.0 }, 0.0));
        assert!(matches!(von_neumann_entropy(&bad), Err(Error::InvalidState(_))));
    }

    #[test]
    fn ghz_and_products() {
        let s = 1.0 / 2f64.sqrt();
        let mut v = vec![c64::new(0.0, 0.0); 8];
        v[0] = c64::new(s, 0.0);
        v[7] = c64::new(s, 0.0);
        let p = Tripartition::new(Region::new([0]), Region::new([1]), Region::new([2]), 3).unwrap();
        assert!((qcmi(&pure(&v), &p, 3).unwrap() - LN_2).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prod = kron(&kron(&random_density(2, &mut rng), &random_density(2, &mut rng)), &random_density(2, &mut rng));
        assert!(qcmi(&prod, &p, 3).unwrap().abs() < 1e-9);
    }

    #[test]
    fn tripartition_validation() {
        assert!(Tripartition::new(Region::new([0]), Region::new([0, 1]), Region::new([2]), 3).is_err());
        assert!(Tripartition::new(Region::new([0]), Region::new([1]), Region::new([2]), 4).is_err());
        assert!(Tripartition::new(Region::new([0]), Region::empty(), Region::new([1]), 2).is_ok());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(cmi_recovery_bound(0.0, 4).value, 0.0);
        let b = cmi_recovery_bound(0.5, 2);
        assert!((b.value - 1.5 * LN_2).abs() < 1e-15 && !b.clamped);
        let c = cmi_recovery_bound(1.3, 2);
        assert!(c.clamped && (c.value - LN_2).abs() < 1e-15);
    }

    #[test]
    fn classical_ising_is_markov() {
        let h = build_ising_chain(6, 1.0, false).unwrap();
        let scan = cmi_decay_scan(&h, 1.0, 1).unwrap();
        assert!(scan.rows.iter().all(|r| r.qcmi.abs() <= 1e-9));
        assert!(scan.fit.is_none());
    }

    #[test]
    fn near_infinite_temperature() {
        let h = build_tfim_chain(6, 1.0, 1.0, false).unwrap();
        assert!(cmi_decay_scan(&h, 1e-6, 1).unwrap().rows.iter().all(|r| r.qcmi <= 1e-6));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn ssa_and_pure_identity(seed in 0u64..1000, cut in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(16, &mut rng);
            let p = Tripartition::new(Region::new(0..1), Region::new(1..1 + cut), Region::new(1 + cut..4), 4).unwrap();
            prop_assert!(qcmi(&rho, &p, 4).unwrap() >= -1e-8);
            let v: Vec<c64> = (0..16).map(|i| rho[(i, 0)]).collect();
            let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let psi = pure(&v.iter().map(|z| z / nv).collect::<Vec<_>>());
            let s = |r: Region| von_neumann_entropy(&reduced(&psi, &r, 4).unwrap()).unwrap();
            let want = s(p.a.clone()) + s(p.c.clone()) - s(p.b.clone());
            prop_assert!((qcmi(&psi, &p, 4).unwrap() - want).abs() < 1e-9);
        }
    }
}
