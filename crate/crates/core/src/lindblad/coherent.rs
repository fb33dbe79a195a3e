//! The coherent term B.
//!
//! Two routes. The closed form works entry-wise in the energy eigenbasis from
//! the decay operator R = Σ_a ∫ γ Â†Â:  B_ij = (i/2) tanh(β(E_i - E_j)/4) R_ij.
//! The kernel route evaluates the b1/b2 time-domain representation, which
//! reduces in the eigenbasis to transforms of b1 at β(E_j - E_i) and of b2
//! at β(E_i - 2E_k + E_j).

use std::f64::consts::{PI, SQRT_2};

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::linalg::ops::{from_frame, to_frame};
use crate::linalg::spectrum::Spectrum;
use crate::quad::gauss_legendre;

/// Constant in front of A†A as printed in the defining equation.
pub const PV_CONSTANT_EQUATION: f64 = 1.0 / (8.0 * SQRT_2 * PI);
/// Constant in front of A†A as used in the locality proof.
pub const PV_CONSTANT_PROOF: f64 = 1.0 / (16.0 * SQRT_2 * PI);

/// With the printed b1 and b2 the kernel route equals π times the closed
/// form; these restore agreement.
pub const KERNEL_SCALE_CONSISTENT: f64 = 1.0 / PI;
pub const PV_CONSTANT_CONSISTENT: f64 = 1.0 / (2.0 * SQRT_2);

/// ∫ b1(t) e^{iyt} dt. The convolution factorizes into the transforms of
/// sech(2πt) and sin(-t) e^{-2t²}.
pub fn b1_hat(y: f64) -> c64 {
    c64::new(0.0, -(PI / SQRT_2) * (y / 4.0).tanh() * (-y * y / 8.0).exp())
}

const T_MAX: f64 = 6.5;

/// ∫ e^{-2t²} e^{iut} / (2t + i) dt; the pole sits off the real axis.
fn regular_part(u: f64) -> Result<c64> {
    let (x, w) = gauss_legendre(32);
    let rule = |panels: usize| {
        let h = 2.0 * T_MAX / panels as f64;
        let mut s = c64::new(0.0, 0.0);
        for p in 0..panels {
            let mid = -T_MAX + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                let t = mid + 0.5 * h * xi;
                s += c64::from_polar(wi * (-2.0 * t * t).exp(), u * t) / c64::new(2.0 * t, 1.0);
            }
        }
        s * (0.5 * h)
    };
    let mut panels = 8 + (u.abs() * T_MAX / PI) as usize / 4;
    let mut prev = rule(panels);
    while panels < 1 << 14 {
        panels *= 2;
        let next = rule(panels);
        if (next - prev).norm() < 1e-14 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence(format!("b2 kernel at argument {u:.6e}")))
}

/// Principal value ∫ b2(t) e^{ixt} dt. With 1/(t(2t+i)) = -i/t + 2i/(2t+i)
/// the singular piece is a Gaussian sine integral, π erf(u/(2√2)).
pub fn b2_hat(x: f64) -> Result<c64> {
    let u = x - 1.0;
    let sing = c64::new(PI * libm::erf(u / (2.0 * SQRT_2)), 0.0);
    let reg = regular_part(u)? * c64::new(0.0, 2.0);
    Ok((sing + reg) / (2.0 * SQRT_2 * PI))
}

/// B for one jump by the kernel route, in the computational basis.
pub fn coherent_term(spec: &Spectrum, jump: &Mat<c64>, beta: f64, constant: f64) -> Result<Mat<c64>> {
    let d = spec.dim();
    if jump.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, got: jump.nrows() });
    }
    let a = to_frame(&spec.vectors, jump);
    Ok(from_frame(&spec.vectors, &coherent_kernel_eig(&spec.energies, &a, beta, constant)?))
}

/// Kernel-route B in the eigenbasis for a jump already in the eigenbasis.
pub fn coherent_kernel_eig(e: &[f64], a: &Mat<c64>, beta: f64, constant: f64) -> Result<Mat<c64>> {
    let d = e.len();
    let arg = |i: usize, k: usize, j: usize| beta * (e[i] - 2.0 * e[k] + e[j]);
    let mut args: Vec<f64> = Vec::with_capacity(d * d * d);
    for j in 0..d {
        for k in 0..d {
            for i in 0..=j {
                args.push(arg(i, k, j));
            }
        }
    }
    args.sort_by(|x, y| x.total_cmp(y));
    args.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    let vals: Vec<c64> = args.iter().map(|&x| b2_hat(x)).collect::<Result<_>>()?;
    let lookup = |x: f64| -> c64 {
        let p = args.partition_point(|&v| v < x - 1e-12 * x.abs().max(1.0));
        let p = p.min(args.len() - 1);
        vals[p]
    };
    let ata = a.adjoint() * a;
    Ok(Mat::from_fn(d, d, |i, j| {
        let mut m = ata[(i, j)] * constant;
        for k in 0..d {
            let w = a[(k, i)].conj() * a[(k, j)];
            if w != c64::new(0.0, 0.0) {
                m += w * lookup(arg(i, k, j));
            }
        }
        b1_hat(-beta * (e[i] - e[j])) * m
    }))
}

/// Closed-form B in the eigenbasis from the decay operator R (eigenbasis).
pub fn coherent_closed_form_eig(e: &[f64], r: &Mat<c64>, beta: f64) -> Mat<c64> {
    let d = e.len();
    Mat::from_fn(d, d, |i, j| r[(i, j)] * c64::new(0.0, 0.5 * (beta * (e[i] - e[j]) / 4.0).tanh()))
}
