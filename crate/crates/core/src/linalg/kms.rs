//! Spectral calculus for KMS-symmetric generators.
//!
//! With S(X) = ρ^{1/4} X ρ^{1/4} diagonal in the frame, the Heisenberg
//! generator is conjugated to G = S L† S^{-1}. When G is Hermitian,
//! f(L†) = S^{-1} f(G) S and f(L) = S f(G) S^{-1}.

use std::sync::Arc;

use faer::{c64, Mat, Side};

use crate::error::{Error, Result};
use crate::linalg::ops::{from_frame, to_frame, unvec, vec_of};
use crate::linalg::superop::SuperOp;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Picture {
    Schrodinger,
    Heisenberg,
}

/// φ(z) = (e^z - 1)/z with φ(0) = 1.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

pub struct Symmetrized {
    /// S L† S^{-1}
    pub matrix: Mat<c64>,
    /// ||G - G†||_F / max(1, ||G||_F)
    pub residual: f64,
    /// same measure for S L S^{-1}
    pub residual_other: f64,
}

/// Form the symmetrized Heisenberg generator from a dense Schrödinger matrix.
pub fn symmetrize(op: &SuperOp) -> Result<Symmetrized> {
    let m = op.dense().ok_or_else(|| Error::InvalidParameter("symmetrization needs a dense superoperator".into()))?;
    let s = op.kms().ok_or_else(|| Error::InvalidParameter("superoperator carries no KMS weights".into()))?;
    let n = m.nrows();
    // G[a,b] = s_a conj(L[b,a]) / s_b
    let g = Mat::from_fn(n, n, |a, b| m[(b, a)].conj() * (s[a] / s[b]));
    let mut num = 0.0;
    let mut den = 0.0;
    let mut num_o = 0.0;
    let mut den_o = 0.0;
    for b in 0..n {
        for a in 0..n {
            num += (g[(a, b)] - g[(b, a)].conj()).norm_sqr();
            den += g[(a, b)].norm_sqr();
            // other convention: O[a,b] = s_a L[a,b] / s_b
            let o_ab = m[(a, b)] * (s[a] / s[b]);
            let o_ba = m[(b, a)] * (s[b] / s[a]);
            num_o += (o_ab - o_ba.conj()).norm_sqr();
            den_o += o_ab.norm_sqr();
        }
    }
    Ok(Symmetrized {
        matrix: g,
        residual: num.sqrt() / den.sqrt().max(1.0),
        residual_other: num_o.sqrt() / den_o.sqrt().max(1.0),
    })
}

/// Eigendecomposition of the symmetrized generator.
pub struct KmsSpectral {
    dim: usize,
    frame: Option<Arc<Mat<c64>>>,
    s: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<c64>,
    pub residual: f64,
    pub residual_other: f64,
}

impl KmsSpectral {
    pub fn new(op: &SuperOp) -> Result<Self> {
        let sym = symmetrize(op)?;
        let (residual, residual_other) = (sym.residual, sym.residual_other);
        let mut g = sym.matrix;
        let n = g.nrows();
        for b in 0..n {
            for a in b + 1..n {
                let v = (g[(a, b)] + g[(b, a)].conj()) * 0.5;
                g[(a, b)] = v;
                g[(b, a)] = v.conj();
            }
            let d = g[(b, b)].re;
            g[(b, b)] = c64::new(d, 0.0);
        }
        let e = g.self_adjoint_eigen(Side::Lower).map_err(|e| Error::NumericDomain(format!("{e:?}")))?;
        let sv = e.S();
        let eigenvalues = (0..n).map(|i| sv[i].re).collect();
        let eigenvectors = e.U().to_owned();
        drop(g);
        Ok(KmsSpectral {
            dim: op.dim(),
            frame: op.frame_arc(),
            s: op.kms().unwrap().to_vec(),
            eigenvalues,
            eigenvectors,
            residual,
            residual_other,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self) -> Option<&Mat<c64>> {
        self.frame.as_deref()
    }

    pub fn to_frame(&self, x: &Mat<c64>) -> Mat<c64> {
        match &self.frame {
            Some(u) => to_frame(u, x),
            None => x.clone(),
        }
    }

    pub fn from_frame(&self, x: &Mat<c64>) -> Mat<c64> {
        match &self.frame {
            Some(u) => from_frame(u, x),
            None => x.clone(),
        }
    }

    /// Coefficients of a frame operator in the eigenbasis of G.
    pub fn coeffs(&self, x_frame: &Mat<c64>, pic: Picture) -> Mat<c64> {
        let v = vec_of(x_frame);
        let n = v.len();
        let w = Mat::from_fn(n, 1, |a, _| match pic {
            Picture::Schrodinger => v[a] / self.s[a],
            Picture::Heisenberg => v[a] * self.s[a],
        });
        self.eigenvectors.adjoint() * &w
    }

    /// Apply f(G) to stored coefficients and return the frame operator.
    pub fn apply_coeffs(&self, c: &Mat<c64>, f: impl Fn(f64) -> f64, pic: Picture) -> Mat<c64> {
        let n = c.nrows();
        let fc = Mat::from_fn(n, 1, |a, _| c[(a, 0)] * f(self.eigenvalues[a]));
        let y = &self.eigenvectors * &fc;
        let out: Vec<c64> = (0..n)
            .map(|a| match pic {
                Picture::Schrodinger => y[(a, 0)] * self.s[a],
                Picture::Heisenberg => y[(a, 0)] / self.s[a],
            })
            .collect();
        unvec(&out, self.dim)
    }

    pub fn apply_fn(&self, x: &Mat<c64>, f: impl Fn(f64) -> f64, pic: Picture) -> Mat<c64> {
        let c = self.coeffs(&self.to_frame(x), pic);
        self.from_frame(&self.apply_coeffs(&c, f, pic))
    }

    /// e^{tL}[x]
    pub fn propagate(&self, x: &Mat<c64>, t: f64) -> Mat<c64> {
        self.apply_fn(x, |l| (l * t).exp(), Picture::Schrodinger)
    }

    /// e^{tL†}[x]
    pub fn propagate_heisenberg(&self, x: &Mat<c64>, t: f64) -> Mat<c64> {
        self.apply_fn(x, |l| (l * t).exp(), Picture::Heisenberg)
    }

    /// (1/t) ∫_0^t e^{sL}[x] ds
    pub fn time_average(&self, x: &Mat<c64>, t: f64) -> Mat<c64> {
        self.apply_fn(x, |l| phi1(l * t), Picture::Schrodinger)
    }

    pub fn time_average_heisenberg(&self, x: &Mat<c64>, t: f64) -> Mat<c64> {
        self.apply_fn(x, |l| phi1(l * t), Picture::Heisenberg)
    }

    /// Orthogonal (KMS) projection onto ker L†.
    pub fn kernel_projection_heisenberg(&self, x: &Mat<c64>, tol: f64) -> Mat<c64> {
        self.apply_fn(x, |l| if l.abs() <= tol { 1.0 } else { 0.0 }, Picture::Heisenberg)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest |λ| among eigenvalues with |λ| > tol.
    pub fn gap(&self, tol: f64) -> Option<f64> {
        self.eigenvalues.iter().map(|l| l.abs()).filter(|&a| a > tol).fold(None, |m, a| {
            Some(match m {
                None => a,
                Some(b) => f64::min(a, b),
            })
        })
    }
}
