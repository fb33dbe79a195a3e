use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::linalg::ops::{cx, hermitian_part, trace};
use crate::linalg::spectrum::Spectrum;

const FLOOR: f64 = 1e-300;

/// Gibbs state of a spectrum at inverse temperature `beta`, with its
/// fractional powers cached in both the eigenbasis and the computational
/// basis.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub beta: f64,
    /// log of the populations in the eigenbasis
    pub log_p: Vec<f64>,
    pub log_z: f64,
    pub vectors: Mat<c64>,
    pub rho: Mat<c64>,
    pub rho_q: Mat<c64>,
    pub rho_mq: Mat<c64>,
    pub rho_h: Mat<c64>,
    pub rho_mh: Mat<c64>,
    /// true if some population fell below the floor before inversion
    pub floored: bool,
}

fn func_of(u: &Mat<c64>, vals: &[f64]) -> Mat<c64> {
    let d = vals.len();
    let ud = Mat::from_fn(d, d, |r, c| u[(r, c)] * vals[c]);
    hermitian_part(&(&ud * u.adjoint()))
}

impl GibbsState {
    pub fn new(spec: &Spectrum, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let e0 = spec.min_energy();
        let shifted: Vec<f64> = spec.energies.iter().map(|e| -beta * (e - e0)).collect();
        let zs: f64 = shifted.iter().map(|x| x.exp()).sum();
        let log_zs = zs.ln();
        let log_p: Vec<f64> = shifted.iter().map(|x| x - log_zs).collect();
        let log_z = log_zs - beta * e0;
        let lf = FLOOR.ln();
        let floored = log_p.iter().any(|&l| l < lf);
        let pw = |k: f64| -> Vec<f64> { log_p.iter().map(|&l| (k * l.max(lf)).exp()).collect() };
        let u = &spec.vectors;
        let p: Vec<f64> = log_p.iter().map(|l| l.exp()).collect();
        Ok(GibbsState {
            beta,
            rho: func_of(u, &p),
            rho_q: func_of(u, &pw(0.25)),
            rho_mq: func_of(u, &pw(-0.25)),
            rho_h: func_of(u, &pw(0.5)),
            rho_mh: func_of(u, &pw(-0.5)),
            log_p,
            log_z,
            vectors: u.clone(),
            floored,
        })
    }

    pub fn dim(&self) -> usize {
        self.log_p.len()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.log_p.iter().map(|l| l.exp()).collect()
    }

    /// p_i^k with the floor applied.
    pub fn pop_power(&self, k: f64) -> Vec<f64> {
        let lf = FLOOR.ln();
        self.log_p.iter().map(|&l| (k * l.max(lf)).exp()).collect()
    }

    /// ⟨X, Y⟩_ρ = Tr[X† ρ^{1/2} Y ρ^{1/2}]
    pub fn kms_inner(&self, x: &Mat<c64>, y: &Mat<c64>) -> c64 {
        kms_inner(self, x, y)
    }

    pub fn kms_norm(&self, x: &Mat<c64>) -> f64 {
        self.kms_inner(x, x).re.max(0.0).sqrt()
    }
}

pub fn gibbs(spec: &Spectrum, beta: f64) -> Result<GibbsState> {
    GibbsState::new(spec, beta)
}

pub fn kms_inner(g: &GibbsState, x: &Mat<c64>, y: &Mat<c64>) -> c64 {
    let m = x.adjoint() * &g.rho_h * y * &g.rho_h;
    trace(&m)
}

/// ρ^{1/4} X ρ^{1/4}, whose Frobenius norm is the KMS norm of X.
pub fn kms_half(g: &GibbsState, x: &Mat<c64>) -> Mat<c64> {
    &g.rho_q * x * &g.rho_q
}

pub fn maximally_mixed(d: usize) -> Mat<c64> {
    Mat::from_fn(d, d, |r, c| if r == c { cx(1.0 / d as f64) } else { cx(0.0) })
}
