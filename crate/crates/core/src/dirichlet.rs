//! Dirichlet form E(X, Y) = -⟨X, L†Y⟩_ρ in three representations: direct,
//! as a bilinear sum over Bohr pairs, and as a (t, ω) integral of squared
//! commutators with the operator Fourier transform.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gibbs::GibbsState;
use crate::linalg::ops::to_frame;
use crate::linalg::spectrum::Spectrum;
use crate::lindblad::{Generator, TransitionCoeffs, Weight, WeightKind};
use crate::oft::OftParams;
use crate::quad::{adaptive, adaptive_upper, gauss_legendre};

/// -⟨X, L†Y⟩_ρ
pub fn dirichlet_pair(g: &Generator, gs: &GibbsState, x: &Mat<c64>, y: &Mat<c64>) -> c64 {
    -gs.kms_inner(x, &g.apply_adjoint(y))
}

/// -Re⟨X, L†X⟩_ρ
pub fn dirichlet_direct(g: &Generator, gs: &GibbsState, x: &Mat<c64>) -> f64 {
    dirichlet_pair(g, gs, x, x).re
}

/// ᾱ_{ν1,ν2} = α e^{β(ν1+ν2)/4} / (2 cosh(β(ν1-ν2)/4))
#[inline]
pub fn alpha_bar(alpha: f64, nu1: f64, nu2: f64, beta: f64) -> f64 {
    alpha * (beta * (nu1 + nu2) / 4.0).exp() / (2.0 * (beta * (nu1 - nu2) / 4.0).cosh())
}

/// Σ_a Σ_{ν1,ν2} ᾱ Tr[√ρ [A_ν1, X]† √ρ [A_ν2, Y]] as an exact finite sum.
/// `jumps` are in the computational basis.
pub fn dirichlet_bilinear(
    spec: &Spectrum,
    gs: &GibbsState,
    jumps: &[Mat<c64>],
    tc: &TransitionCoeffs,
    x: &Mat<c64>,
    y: &Mat<c64>,
) -> Result<c64> {
    let d = spec.dim();
    if gs.dim() != d || x.nrows() != d || y.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.nrows() });
    }
    if tc.len() != spec.bohr.len() {
        return Err(Error::DimensionMismatch { expected: spec.bohr.len(), got: tc.len() });
    }
    let beta = gs.beta;
    let nb = tc.len();
    let mut abar = vec![0.0; nb * nb];
    for b2 in 0..nb {
        for b1 in 0..nb {
            abar[b1 + b2 * nb] = alpha_bar(tc.get(b1, b2), tc.bohr[b1], tc.bohr[b2], beta);
        }
    }
    let u = &spec.vectors;
    let xe = to_frame(u, x);
    let ye = to_frame(u, y);
    let sq = gs.pop_power(0.5);
    let mut total = c64::new(0.0, 0.0);
    let mut cx: Vec<(usize, c64)> = Vec::with_capacity(2 * d);
    let mut cy: Vec<(usize, c64)> = Vec::with_capacity(2 * d);
    for a in jumps {
        let ae = to_frame(u, a);
        for j in 0..d {
            for i in 0..d {
                // ([A_ν, X])_ij split by ν
                cx.clear();
                cy.clear();
                for k in 0..d {
                    let (bik, bkj) = (spec.bohr_of(i, k), spec.bohr_of(k, j));
                    cx.push((bik, ae[(i, k)] * xe[(k, j)]));
                    cx.push((bkj, -(xe[(i, k)] * ae[(k, j)])));
                    cy.push((bik, ae[(i, k)] * ye[(k, j)]));
                    cy.push((bkj, -(ye[(i, k)] * ae[(k, j)])));
                }
                let mut s = c64::new(0.0, 0.0);
                for &(b1, v1) in &cx {
                    if v1 == c64::new(0.0, 0.0) {
                        continue;
                    }
                    let col = &abar[b1 * nb..(b1 + 1) * nb];
                    let mut inner = c64::new(0.0, 0.0);
                    for &(b2, v2) in &cy {
                        inner += v2 * col[b2];
                    }
                    s += v1.conj() * inner;
                }
                total += s * (sq[i] * sq[j]);
            }
        }
    }
    Ok(total)
}

/// Kernels and quadrature settings of the commutator-integral form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletKernels {
    pub weight: Weight,
    pub t_max: f64,
    pub omega_max: f64,
    /// Gauss-Legendre nodes per half-axis before doubling
    pub nodes: usize,
}

impl DirichletKernels {
    /// T_max = 3β, Ω_max = 2‖H‖ + 20σ, 64 nodes.
    pub fn new(weight: Weight, h_norm: f64) -> Self {
        DirichletKernels {
            weight,
            t_max: 3.0 * weight.beta,
            omega_max: 2.0 * h_norm + 20.0 * weight.sigma,
            nodes: 64,
        }
    }

    /// g(t) = 1/(β cosh(2πt/β))
    pub fn g(&self, t: f64) -> f64 {
        let b = self.weight.beta;
        1.0 / (b * (2.0 * PI * t / b).cosh())
    }

    pub fn h(&self, omega: f64) -> f64 {
        let w = &self.weight;
        match w.kind {
            WeightKind::Metropolis => h_metropolis(omega, w.beta, w.sigma),
            WeightKind::Gaussian => {
                let og = w.omega_gamma.unwrap_or(0.0);
                let sg = w.sigma_gamma.unwrap_or(1.0);
                (-w.beta * og / 4.0 - omega * omega / (2.0 * sg * sg)).exp()
            }
        }
    }
}

/// e^{-σ²β²/8} e^{-|ω|β/2}
pub fn h_metropolis(omega: f64, beta: f64, sigma: f64) -> f64 {
    (-sigma * sigma * beta * beta / 8.0 - omega.abs() * beta / 2.0).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorIntegral {
    pub value: f64,
    /// relative change under node doubling
    pub rel_change: f64,
    pub converged: bool,
    /// smallest node contribution (all should be ≥ 0)
    pub min_node: f64,
    /// largest ‖[Â(ω,t), X]‖_ρ over the nodes of the finer rule
    pub max_commutator: f64,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    x.iter().zip(&w).map(|(xi, wi)| (m + r * xi, r * wi)).collect()
}

/// Σ_a ∬ g(t) h(ω) ‖[Â^a(ω,t), X]‖²_ρ dt dω by tensor Gauss-Legendre, with
/// both axes split at 0.
pub fn dirichlet_commutator_integral(
    spec: &Spectrum,
    gs: &GibbsState,
    jumps: &[Mat<c64>],
    k: &DirichletKernels,
    x: &Mat<c64>,
) -> Result<CommutatorIntegral> {
    let d = spec.dim();
    if gs.dim() != d || x.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.nrows() });
    }
    let p = OftParams::new(k.weight.sigma)?;
    let u = &spec.vectors;
    let xe = to_frame(u, x);
    let sq = gs.pop_power(0.5);
    let ae: Vec<Mat<c64>> = jumps.iter().map(|a| to_frame(u, a)).collect();
    let nu = |i: usize, j: usize| spec.bohr[spec.bohr_of(i, j)];
    let mut min_node = f64::INFINITY;
    let mut max_comm: f64 = 0.0;
    let mut rule = |n: usize, track: bool| -> f64 {
        let mut ts = axis(-k.t_max, 0.0, n);
        ts.extend(axis(0.0, k.t_max, n));
        let mut ws = axis(-k.omega_max, 0.0, n);
        ws.extend(axis(0.0, k.omega_max, n));
        let mut total = 0.0;
        for &(om, wo) in &ws {
            let ho = k.h(om);
            for a in &ae {
                let fa = Mat::from_fn(d, d, |i, j| a[(i, j)] * p.fhat(om - nu(i, j)));
                for &(t, wt) in &ts {
                    let at = Mat::from_fn(d, d, |i, j| fa[(i, j)] * c64::from_polar(1.0, nu(i, j) * t));
                    let c = &at * &xe - &xe * &at;
                    let mut q = 0.0;
                    for j in 0..d {
                        for i in 0..d {
                            q += c[(i, j)].norm_sqr() * sq[i] * sq[j];
                        }
                    }
                    let node = k.g(t) * ho * q;
                    if track {
                        min_node = min_node.min(node);
                        max_comm = max_comm.max(q.sqrt());
                    }
                    total += wo * wt * node;
                }
            }
        }
        total
    };
    let coarse = rule(k.nodes, false);
    let fine = rule(2 * k.nodes, true);
    let rel_change = (fine - coarse).abs() / fine.abs().max(1e-300);
    let converged = rel_change <= 1e-6 || (fine - coarse).abs() <= 1e-14;
    Ok(CommutatorIntegral { value: fine, rel_change, converged, min_node, max_commutator: max_comm })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelIdentityReport {
    /// points checked for the h(ω) identity
    pub h_points: usize,
    pub h_max_rel_err: f64,
    pub cosh_points: usize,
    pub cosh_max_abs_err: f64,
    pub pass: bool,
}

/// ∫ g_x γ^G_x-pieces dx over x ≥ βσ²/2 with x = βσ²/2 + u², which removes
/// the 1/√ endpoint singularity.
pub fn h_metropolis_x_integral(omega: f64, beta: f64, sigma: f64) -> Result<f64> {
    let x0 = beta * sigma * sigma / 2.0;
    let c = (beta / PI).sqrt();
    let f = |u: f64| {
        if u == 0.0 {
            return if omega == 0.0 { c * (-beta * x0 / 4.0).exp() } else { 0.0 };
        }
        let x = x0 + u * u;
        c * (-beta * x / 4.0 - omega * omega * beta / (4.0 * u * u)).exp()
    };
    adaptive_upper(f, 0.0, 1e-16, 1e-13)
}

/// ∫ g(t) cos(Δt) dt over the real line.
pub fn cosh_kernel_integral(delta: f64, beta: f64) -> Result<f64> {
    let g = |t: f64| 1.0 / (beta * (2.0 * PI * t / beta).cosh()) * (delta * t).cos();
    // g decays like e^{-2π|t|/β}; 12β leaves e^{-75}
    let half = adaptive(g, 0.0, 12.0 * beta, 1e-16, 1e-13)?;
    Ok(2.0 * half)
}

/// Check the closed-form Metropolis kernel against its x-integral on a
/// 20 × 5 (ω, β) grid at σ ∈ {1/β, 0.5/β}, and the cosh identity.
pub fn metropolis_kernel_identity() -> Result<KernelIdentityReport> {
    let betas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut h_err: f64 = 0.0;
    let mut hp = 0;
    for &b in &betas {
        for s in [1.0 / b, 0.5 / b] {
            for i in 0..20 {
                let omega = -6.0 / b + 12.0 / b * i as f64 / 19.0;
                let q = h_metropolis_x_integral(omega, b, s)?;
                let c = h_metropolis(omega, b, s);
                h_err = h_err.max((q - c).abs() / c);
                hp += 1;
            }
        }
    }
    let mut c_err: f64 = 0.0;
    let mut cp = 0;
    for &b in &betas {
        for delta in [0.0, 0.3, 1.0, 2.5, 7.0] {
            let q = cosh_kernel_integral(delta, b)?;
            c_err = c_err.max((q - 1.0 / (2.0 * (b * delta / 4.0).cosh())).abs());
            cp += 1;
        }
    }
    Ok(KernelIdentityReport {
        h_points: hp,
        h_max_rel_err: h_err,
        cosh_points: cp,
        cosh_max_abs_err: c_err,
        pass: h_err <= 1e-8 && c_err <= 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gibbs::gibbs;
    use crate::linalg::ops::{op_norm, random_complex};
    use crate::linalg::spectrum::hermitian_eig;
    use crate::lindblad::{assemble_ops, transition_coefficients, Coherent};
    use crate::spinsys::{build_random_local, build_tfim_chain, single_site_jumps, Pauli, Region};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(h: &Mat<c64>, jumps: &[Mat<c64>], w: &Weight) -> (Spectrum, GibbsState, Generator) {
        let s = hermitian_eig(h).unwrap();
        let gs = gibbs(&s, w.beta).unwrap();
        let g = assemble_ops(&s, jumps, vec![], w, Coherent::ClosedForm).unwrap();
        (s, gs, g)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn identity_has_zero_form() {
        let w = Weight::metropolis(1.0, 1.0).unwrap();
        let (s, gs, g) = setup(&Pauli::Z.matrix(), &[Pauli::X.matrix()], &w);
        let id = Mat::<c64>::identity(2, 2);
        assert!(dirichlet_direct(&g, &gs, &id).abs() < 1e-14);
        let c = faer::Scale(c64::new(2.0, -1.0)) * &id;
        assert!(dirichlet_direct(&g, &gs, &c).abs() < 1e-13);
        let tc = transition_coefficients(&s, &w).unwrap();
        assert!(dirichlet_bilinear(&s, &gs, &[Pauli::X.matrix()], &tc, &id, &id).unwrap().norm() < 1e-14);
        let k = DirichletKernels::new(w, 1.0);
        let ci = dirichlet_commutator_integral(&s, &gs, &[Pauli::X.matrix()], &k, &c).unwrap();
        assert!(ci.value.abs() < 1e-14 && ci.max_commutator <= 1e-12);
    }

    #[test]
    fn g_integrates_to_half_and_kernels_positive() {
        let k = DirichletKernels::new(Weight::metropolis(1.7, 0.4).unwrap(), 1.0);
        assert!((cosh_kernel_integral(0.0, 1.7).unwrap() - 0.5).abs() < 1e-10);
        for t in [-3.0, 0.0, 0.4, 5.0] {
            assert!(k.g(t) > 0.0 && k.h(t) > 0.0);
        }
        let kg = DirichletKernels::new(Weight::gaussian(1.0, 1.0, 2.0).unwrap(), 1.0);
        assert!(kg.h(0.7) > 0.0);
    }

    #[test]
    fn kernel_identity_examples() {
        assert!((h_metropolis(0.0, 2.0, 0.5) - (-0.125f64).exp()).abs() < 1e-15);
        assert!((h_metropolis(0.0, 1.0, 1.0) - 0.882_496_902_584_595).abs() < 1e-12);
        let b = 1.3;
        let q = h_metropolis_x_integral(4.0 / b, b, 1.0 / b).unwrap();
        assert!((q - (-0.125f64 - 2.0).exp()).abs() < 1e-8 * q);
        let r = metropolis_kernel_identity().unwrap();
        assert_eq!(r.h_points, 200);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn bilinear_coefficients_symmetric_under_negation() {
        let s = hermitian_eig(&build_tfim_chain(3, 1.0, 0.7, false).unwrap().dense()).unwrap();
        for w in [Weight::metropolis(1.0, 1.0).unwrap(), Weight::gaussian(2.0, 0.5, 1.0).unwrap()] {
            let tc = transition_coefficients(&s, &w).unwrap();
            let nb = tc.len();
            for b1 in 0..nb {
                for b2 in 0..nb {
                    let a = alpha_bar(tc.get(b1, b2), tc.bohr[b1], tc.bohr[b2], w.beta);
                    let m = alpha_bar(tc.get(nb - 1 - b1, nb - 1 - b2), tc.bohr[nb - 1 - b1], tc.bohr[nb - 1 - b2], w.beta);
                    assert!((a - m).abs() <= 1e-12 * a.abs().max(1e-300), "{a} vs {m}");
                }
            }
        }
    }

    #[test]
    fn direct_matches_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..6u64 {
            let n = 1 + (seed % 3) as usize;
            let h = build_random_local(n, n.min(2), 2 * n, seed).unwrap().dense();
            let jumps = single_site_jumps(&Region::new([0])).unwrap().dense(n);
            let w = if seed % 2 == 0 {
                Weight::metropolis(1.0, 1.0).unwrap()
            } else {
                Weight::gaussian(0.7, 0.8, 1.0).unwrap()
            };
            let (s, gs, g) = setup(&h, &jumps, &w);
            let tc = transition_coefficients(&s, &w).unwrap();
            let x = random_complex(1 << n, 1 << n, &mut rng);
            let y = random_complex(1 << n, 1 << n, &mut rng);
            let dx = dirichlet_direct(&g, &gs, &x);
            assert!(dx >= -1e-9);
            let bx = dirichlet_bilinear(&s, &gs, &jumps, &tc, &x, &x).unwrap();
            assert!(rel(dx, bx.re) < 1e-7 && bx.im.abs() < 1e-9 * dx.abs().max(1.0));
            let dxy = dirichlet_pair(&g, &gs, &x, &y);
            let bxy = dirichlet_bilinear(&s, &gs, &jumps, &tc, &x, &y).unwrap();
            assert!((dxy - bxy).norm() < 1e-7 * dxy.norm().max(1.0));
        }
    }

    #[test]
    fn commutator_integral_one_qubit() {
        let w = Weight::metropolis(1.0, 1.0).unwrap();
        let (s, gs, g) = setup(&Pauli::Z.matrix(), &[Pauli::X.matrix()], &w);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_complex(2, 2, &mut rng);
        let k = DirichletKernels::new(w, 1.0);
        let ci = dirichlet_commutator_integral(&s, &gs, &[Pauli::X.matrix()], &k, &x).unwrap();
        let dx = dirichlet_direct(&g, &gs, &x);
        assert!(ci.min_node >= 0.0);
        assert!(rel(ci.value, dx) < 1e-5, "{} vs {dx} ({:?})", ci.value, ci);
    }

    #[test]
    fn commutator_integral_two_qubits_gaussian() {
        let h = build_tfim_chain(2, 1.0, 0.6, false).unwrap();
        let w = Weight::gaussian(1.0, 1.0, 1.0).unwrap();
        let jumps = single_site_jumps(&Region::new([1])).unwrap().dense(2);
        let (s, gs, g) = setup(&h.dense(), &jumps, &w);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_complex(4, 4, &mut rng);
        let k = DirichletKernels::new(w, op_norm(&h.dense()));
        let ci = dirichlet_commutator_integral(&s, &gs, &jumps, &k, &x).unwrap();
        assert!(ci.converged);
        assert!(rel(ci.value, dirichlet_direct(&g, &gs, &x)) < 1e-5);
    }
}
