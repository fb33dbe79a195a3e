//! Bohr decomposition and the Gaussian operator Fourier transform.
//!
//! Everything is evaluated as a finite sum over Bohr components in the
//! energy eigenbasis; no ω-quadrature happens here.

use std::f64::consts::PI;

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::linalg::ops::{from_frame, op_norm, to_frame};
use crate::linalg::spectrum::Spectrum;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OftParams {
    pub sigma: f64,
    /// drop Bohr terms with |ω - ν| > cut
    pub cut: Option<f64>,
}

impl OftParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(OftParams { sigma, cut: None })
    }

    pub fn with_cut(mut self, cut: f64) -> Self {
        self.cut = Some(cut);
        self
    }

    /// ln f̂(x)
    #[inline]
    pub fn log_fhat(&self, x: f64) -> f64 {
        -0.5 * (self.sigma * (2.0 * PI).sqrt()).ln() - x * x / (4.0 * self.sigma * self.sigma)
    }

    #[inline]
    pub fn fhat(&self, x: f64) -> f64 {
        match self.cut {
            Some(c) if x.abs() > c => 0.0,
            _ => self.log_fhat(x).exp(),
        }
    }

    /// ∫ f̂(ω) dω = √(2π) f(0)
    pub fn fhat_integral(&self) -> f64 {
        (2.0 * PI).sqrt() * (self.sigma * (2.0 / PI).sqrt()).sqrt()
    }
}

/// A split into Heisenberg eigenoperators A_ν.
#[derive(Clone, Debug)]
pub struct BohrDecomp {
    pub nu_list: Vec<f64>,
    /// A in the energy eigenbasis
    pub a_eig: Mat<c64>,
    pub vectors: Mat<c64>,
    pub energies: Vec<f64>,
    bohr: Vec<f64>,
    bohr_index: Vec<u32>,
    present: Vec<usize>,
}

pub fn bohr_decompose(spec: &Spectrum, a: &Mat<c64>) -> Result<BohrDecomp> {
    let d = spec.dim();
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: a.nrows() });
    }
    let a_eig = to_frame(&spec.vectors, a);
    let scale = a_eig.norm_max().max(1e-300);
    let mut hit = vec![false; spec.bohr.len()];
    for j in 0..d {
        for i in 0..d {
            if a_eig[(i, j)].norm() > 1e-13 * scale {
                hit[spec.bohr_of(i, j)] = true;
            }
        }
    }
    let present: Vec<usize> = (0..hit.len()).filter(|&b| hit[b]).collect();
    Ok(BohrDecomp {
        nu_list: present.iter().map(|&b| spec.bohr[b]).collect(),
        a_eig,
        vectors: spec.vectors.clone(),
        energies: spec.energies.clone(),
        bohr: spec.bohr.clone(),
        bohr_index: spec.bohr_index.clone(),
        present,
    })
}

impl BohrDecomp {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    #[inline]
    fn nu(&self, i: usize, j: usize) -> f64 {
        self.bohr[self.bohr_index[i + j * self.dim()] as usize]
    }

    /// Eigenbasis matrix with entries A_ij w(ν_ij, E_i, E_j).
    pub fn weighted_eig<F: Fn(f64, usize, usize) -> c64>(&self, w: F) -> Mat<c64> {
        let d = self.dim();
        Mat::from_fn(d, d, |i, j| {
            let a = self.a_eig[(i, j)];
            if a == c64::new(0.0, 0.0) {
                a
            } else {
                a * w(self.nu(i, j), i, j)
            }
        })
    }

    /// A_ν in the computational basis for each ν present.
    pub fn components(&self) -> Vec<(f64, Mat<c64>)> {
        let d = self.dim();
        self.present
            .iter()
            .map(|&b| {
                let m = Mat::from_fn(d, d, |i, j| {
                    if self.bohr_index[i + j * d] as usize == b {
                        self.a_eig[(i, j)]
                    } else {
                        c64::new(0.0, 0.0)
                    }
                });
                (self.bohr[b], from_frame(&self.vectors, &m))
            })
            .collect()
    }

    pub fn original(&self) -> Mat<c64> {
        from_frame(&self.vectors, &self.a_eig)
    }
}

/// Â(ω) = Σ_ν A_ν f̂(ω - ν)
pub fn oft(bd: &BohrDecomp, omega: f64, p: &OftParams) -> Mat<c64> {
    let m = bd.weighted_eig(|nu, _, _| c64::new(p.fhat(omega - nu), 0.0));
    from_frame(&bd.vectors, &m)
}

/// e^{iHt} Â(ω) e^{-iHt} = Σ_ν A_ν e^{iνt} f̂(ω - ν)
pub fn oft_heisenberg(bd: &BohrDecomp, omega: f64, t: f64, p: &OftParams) -> Mat<c64> {
    let m = bd.weighted_eig(|nu, _, _| c64::from_polar(p.fhat(omega - nu), nu * t));
    from_frame(&bd.vectors, &m)
}

/// (2σ√(2π))^{-1/2} ∫ Â(ω) dω with each component integrated analytically.
pub fn oft_reconstruct(bd: &BohrDecomp, p: &OftParams) -> Mat<c64> {
    let c = p.fhat_integral() / (2.0 * p.sigma * (2.0 * PI).sqrt()).sqrt();
    let m = bd.weighted_eig(|_, _, _| c64::new(c, 0.0));
    from_frame(&bd.vectors, &m)
}

/// Both sides of e^{βH} Â(ω) e^{-βH} = e^{βω + σ²β²} Â(ω + 2σ²β), each
/// multiplied by e^{-log_scale}.
#[derive(Clone, Debug)]
pub struct ConjugationPair {
    pub lhs: Mat<c64>,
    pub rhs: Mat<c64>,
    pub log_scale: f64,
}

pub fn conjugate_imaginary(spec: &Spectrum, bd: &BohrDecomp, omega: f64, beta: f64, p: &OftParams) -> ConjugationPair {
    let s2 = p.sigma * p.sigma;
    let prefactor = beta * omega + s2 * beta * beta;
    let log_scale = if prefactor > 700.0 { prefactor } else { 0.0 };
    let e = &spec.energies;
    let lhs = bd.weighted_eig(|nu, i, j| c64::new((beta * (e[i] - e[j]) + p.log_fhat(omega - nu) - log_scale).exp(), 0.0));
    let rhs = bd.weighted_eig(|nu, _, _| {
        c64::new((prefactor + p.log_fhat(omega + 2.0 * s2 * beta - nu) - log_scale).exp(), 0.0)
    });
    ConjugationPair { lhs: from_frame(&bd.vectors, &lhs), rhs: from_frame(&bd.vectors, &rhs), log_scale }
}

/// ‖e^{βH} A e^{-βH}‖
pub fn conjugation_norm(spec: &Spectrum, a: &Mat<c64>, beta: f64) -> f64 {
    let ae = to_frame(&spec.vectors, a);
    let e = &spec.energies;
    let d = spec.dim();
    let m = Mat::from_fn(d, d, |i, j| ae[(i, j)] * (beta * (e[i] - e[j])).exp());
    op_norm(&m)
}
