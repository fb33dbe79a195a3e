//! Assembly of L = -i[B, ·] + Σ_a ∫ γ (Â ρ Â† - ½{Â†Â, ρ}) dω.
//!
//! Everything lives in the energy eigenbasis. With K = iB + R/2,
//!   L(ρ) = T(ρ) - Kρ - ρK†,
//!   T(ρ)_ik = Σ_a Σ_jl α(ν_ij, ν_kl) A_ij ρ_jl conj(A_kl),
//!   R_ij    = Σ_a Σ_k conj(A_ki) A_kj α(ν_kj, ν_ki).

use std::sync::Arc;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gibbs::GibbsState;
use crate::linalg::kms::symmetrize;
use crate::linalg::ops::{from_frame, hermitian_part, hermiticity_defect, kron, to_frame, trace_norm};
use crate::linalg::spectrum::Spectrum;
use crate::linalg::superop::{Action, SuperOp};
use crate::spinsys::JumpSet;

use super::coherent::{
    coherent_closed_form_eig, coherent_kernel_eig, KERNEL_SCALE_CONSISTENT, PV_CONSTANT_CONSISTENT, PV_CONSTANT_EQUATION,
    PV_CONSTANT_PROOF,
};
use super::weight::{transition_coefficients, TransitionCoeffs, Weight, WeightKind};

const HALF: faer::Scale<c64> = faer::Scale(c64 { re: 0.5, im: 0.0 });

/// Largest register for dense superoperators.
pub const MAX_DENSE_QUBITS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Coherent {
    ClosedForm,
    /// b1/b2 kernel route, multiplied by `scale`; only defined for the
    /// Metropolis weight at σ = 1/β.
    Kernel { constant: f64, scale: f64 },
    /// ablation: B = 0
    Zero,
}

impl Default for Coherent {
    fn default() -> Self {
        Coherent::ClosedForm
    }
}

struct Parts {
    spec: Arc<Spectrum>,
    frame: Arc<Mat<c64>>,
    jumps: Vec<Mat<c64>>,
    tc: TransitionCoeffs,
    r: Mat<c64>,
    b: Mat<c64>,
    k: Mat<c64>,
    kms: Vec<f64>,
}

impl Parts {
    #[inline]
    fn bi(&self, i: usize, j: usize) -> usize {
        self.spec.bohr_index[i + j * self.spec.dim()] as usize
    }

    fn transition(&self, x: &Mat<c64>) -> Mat<c64> {
        let d = self.spec.dim();
        let mut out = Mat::<c64>::zeros(d, d);
        for a in &self.jumps {
            for l in 0..d {
                for k in 0..d {
                    let akl = a[(k, l)].conj();
                    if akl == c64::new(0.0, 0.0) {
                        continue;
                    }
                    let col = self.tc.column(self.bi(k, l));
                    for j in 0..d {
                        let v = x[(j, l)] * akl;
                        if v == c64::new(0.0, 0.0) {
                            continue;
                        }
                        for i in 0..d {
                            out[(i, k)] += a[(i, j)] * v * col[self.bi(i, j)];
                        }
                    }
                }
            }
        }
        out
    }

    fn transition_adjoint(&self, x: &Mat<c64>) -> Mat<c64> {
        // T†(X)_jl = Σ_a Σ_ik α(ν_ij, ν_kl) conj(A_ij) X_ik A_kl
        let d = self.spec.dim();
        let mut out = Mat::<c64>::zeros(d, d);
        for a in &self.jumps {
            for l in 0..d {
                for k in 0..d {
                    let akl = a[(k, l)];
                    if akl == c64::new(0.0, 0.0) {
                        continue;
                    }
                    let col = self.tc.column(self.bi(k, l));
                    for j in 0..d {
                        let mut s = c64::new(0.0, 0.0);
                        for i in 0..d {
                            s += a[(i, j)].conj() * x[(i, k)] * col[self.bi(i, j)];
                        }
                        out[(j, l)] += s * akl;
                    }
                }
            }
        }
        out
    }

    fn apply(&self, x: &Mat<c64>, coherent: bool) -> Mat<c64> {
        let mut y = self.transition(x);
        if coherent {
            y -= &self.k * x;
            y -= x * self.k.adjoint();
        } else {
            y -= HALF * (&self.r * x);
            y -= HALF * (x * &self.r);
        }
        y
    }

    fn apply_adjoint(&self, x: &Mat<c64>, coherent: bool) -> Mat<c64> {
        let mut y = self.transition_adjoint(x);
        if coherent {
            y -= self.k.adjoint() * x;
            y -= x * &self.k;
        } else {
            y -= HALF * (&self.r * x);
            y -= HALF * (x * &self.r);
        }
        y
    }

    /// Dense matrix in the eigenframe, column stacking.
    fn dense(&self, coherent: bool) -> Mat<c64> {
        let d = self.spec.dim();
        let kk = if coherent { self.k.clone() } else { HALF * &self.r };
        let mut m = Mat::<c64>::zeros(d * d, d * d);
        for a in &self.jumps {
            for l in 0..d {
                for j in 0..d {
                    let col = j + l * d;
                    for k in 0..d {
                        let akl = a[(k, l)].conj();
                        let tcol = self.tc.column(self.bi(k, l));
                        for i in 0..d {
                            m[(i + k * d, col)] += a[(i, j)] * akl * tcol[self.bi(i, j)];
                        }
                    }
                }
            }
        }
        for l in 0..d {
            for j in 0..d {
                // -K_ij δ_kl
                for i in 0..d {
                    m[(i + l * d, j + l * d)] -= kk[(i, j)];
                }
                // -δ_ij conj(K_kl)
                for k in 0..d {
                    m[(j + k * d, j + l * d)] -= kk[(k, l)].conj();
                }
            }
        }
        m
    }
}

/// Assembled generator; immutable.
#[derive(Clone)]
pub struct Generator {
    parts: Arc<Parts>,
    pub weight: Weight,
    pub coherent_method: Coherent,
    pub labels: Vec<String>,
    /// ‖B - B†‖ before symmetrization (kernel route only)
    pub coherent_defect: f64,
}

impl std::fmt::Debug for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Generator")
            .field("dim", &self.dim())
            .field("weight", &self.weight)
            .field("coherent", &self.coherent_method)
            .field("jumps", &self.labels)
            .finish()
    }
}

fn kms_weights(spec: &Spectrum, beta: f64) -> Vec<f64> {
    let e0 = spec.min_energy();
    let d = spec.dim();
    let shifted: Vec<f64> = spec.energies.iter().map(|e| -beta * (e - e0)).collect();
    let lz = shifted.iter().map(|x| x.exp()).sum::<f64>().ln();
    let q: Vec<f64> = shifted.iter().map(|x| (x - lz) / 4.0).collect();
    let mut s = Vec::with_capacity(d * d);
    for k in 0..d {
        for i in 0..d {
            s.push((q[i] + q[k]).exp());
        }
    }
    s
}

/// Decay operator R for one jump (eigenbasis).
fn decay_eig(spec: &Spectrum, tc: &TransitionCoeffs, a: &Mat<c64>) -> Mat<c64> {
    let d = spec.dim();
    let mut r = Mat::<c64>::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            let mut s = c64::new(0.0, 0.0);
            for k in 0..d {
                s += a[(k, i)].conj() * a[(k, j)] * tc.get(spec.bohr_of(k, j), spec.bohr_of(k, i));
            }
            r[(i, j)] = s;
        }
    }
    hermitian_part(&r)
}

/// Generator from explicit jump matrices (computational basis).
pub fn assemble_ops(
    spec: &Spectrum,
    jumps: &[Mat<c64>],
    labels: Vec<String>,
    w: &Weight,
    coherent: Coherent,
) -> Result<Generator> {
    let tc = transition_coefficients(spec, w)?;
    assemble_with_coeffs(spec, jumps, labels, w, tc, coherent)
}

pub fn assemble_with_coeffs(
    spec: &Spectrum,
    jumps: &[Mat<c64>],
    labels: Vec<String>,
    w: &Weight,
    tc: TransitionCoeffs,
    coherent: Coherent,
) -> Result<Generator> {
    let d = spec.dim();
    if tc.len() != spec.bohr.len() {
        return Err(Error::DimensionMismatch { expected: spec.bohr.len(), got: tc.len() });
    }
    for a in jumps {
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: a.nrows() });
        }
    }
    let u = &spec.vectors;
    let jumps_eig: Vec<Mat<c64>> = jumps.iter().map(|a| to_frame(u, a)).collect();
    let mut r = Mat::<c64>::zeros(d, d);
    for a in &jumps_eig {
        r += decay_eig(spec, &tc, a);
    }
    let mut defect = 0.0;
    let b = match coherent {
        Coherent::ClosedForm => coherent_closed_form_eig(&spec.energies, &r, w.beta),
        Coherent::Zero => Mat::zeros(d, d),
        Coherent::Kernel { constant, scale } => {
            if w.kind != WeightKind::Metropolis || (w.beta * w.sigma - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(
                    "kernel route for B needs the Metropolis weight with sigma = 1/beta".into(),
                ));
            }
            let mut b = Mat::<c64>::zeros(d, d);
            for a in &jumps_eig {
                b += coherent_kernel_eig(&spec.energies, a, w.beta, constant)?;
            }
            b = faer::Scale(c64::new(scale, 0.0)) * b;
            defect = hermiticity_defect(&b);
            hermitian_part(&b)
        }
    };
    let k = faer::Scale(c64::new(0.0, 1.0)) * &b + HALF * &r;
    let parts = Parts {
        frame: Arc::new(u.clone()),
        spec: Arc::new(spec.clone()),
        jumps: jumps_eig,
        tc,
        kms: kms_weights(spec, w.beta),
        r,
        b,
        k,
    };
    Ok(Generator { parts: Arc::new(parts), weight: *w, coherent_method: coherent, labels, coherent_defect: defect })
}

/// Generator for a jump set on the register of `spec`.
pub fn assemble(spec: &Spectrum, jumps: &JumpSet, w: &Weight) -> Result<Generator> {
    assemble_with(spec, jumps, w, Coherent::ClosedForm)
}

pub fn assemble_with(spec: &Spectrum, jumps: &JumpSet, w: &Weight, coherent: Coherent) -> Result<Generator> {
    let n = register_size(spec.dim())?;
    let labels = jumps.jumps.iter().map(|j| j.label.clone()).collect();
    assemble_ops(spec, &jumps.dense(n), labels, w, coherent)
}

fn register_size(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::InvalidSize(format!("dimension {d} is not a power of two")));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Dissipative part alone as a matrix-free superoperator.
pub fn dissipative_part(spec: &Spectrum, jumps: &[Mat<c64>], tc: TransitionCoeffs) -> Result<SuperOp> {
    let w = Weight::metropolis(1.0, 1.0)?;
    let g = assemble_with_coeffs(spec, jumps, Vec::new(), &w, tc, Coherent::Zero)?;
    Ok(g.dissipative())
}

/// Kernel route normalized so that it reproduces the closed form.
pub fn consistent_kernel() -> Coherent {
    Coherent::Kernel { constant: PV_CONSTANT_CONSISTENT, scale: KERNEL_SCALE_CONSISTENT }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantScan {
    pub name: String,
    pub coherent: Coherent,
    pub residual: f64,
}

/// Detailed-balance residual of each kernel normalization on one qubit with
/// H = Z and the Hermitian jump [[1, 1/2], [1/2, 0]] / ‖·‖ (A†A is not a
/// multiple of the identity, so the constant matters). Sorted by residual, best first.
pub fn scan_kernel_constants(beta: f64) -> Result<Vec<ConstantScan>> {
    use crate::linalg::gibbs::gibbs;
    use crate::linalg::spectrum::hermitian_eig;
    use crate::spinsys::Pauli;
    let s = hermitian_eig(&Pauli::Z.matrix())?;
    let a = Mat::from_fn(2, 2, |r, c| c64::new([[1.0, 0.5], [0.5, 0.0]][r][c], 0.0));
    let ops = [faer::Scale(c64::new(1.0 / crate::linalg::ops::op_norm(&a), 0.0)) * a];
    let w = Weight::metropolis(beta, 1.0 / beta)?;
    let gs = gibbs(&s, beta)?;
    let candidates = [
        ("equation", Coherent::Kernel { constant: PV_CONSTANT_EQUATION, scale: 1.0 }),
        ("proof", Coherent::Kernel { constant: PV_CONSTANT_PROOF, scale: 1.0 }),
        ("consistent", consistent_kernel()),
    ];
    let mut out = Vec::new();
    for (name, c) in candidates {
        let g = assemble_ops(&s, &ops, vec![], &w, c)?;
        out.push(ConstantScan { name: name.into(), coherent: c, residual: g.detailed_balance_residual(&gs)? });
    }
    out.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbResidual {
    /// symmetrized Heisenberg generator
    pub heisenberg: f64,
    /// same measure with the Schrödinger generator
    pub schrodinger: f64,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.parts.spec.dim()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.parts.spec
    }

    pub fn coeffs(&self) -> &TransitionCoeffs {
        &self.parts.tc
    }

    pub fn jumps_eig(&self) -> &[Mat<c64>] {
        &self.parts.jumps
    }

    /// B in the computational basis.
    pub fn coherent(&self) -> Mat<c64> {
        from_frame(&self.parts.frame, &self.parts.b)
    }

    pub fn coherent_eig(&self) -> &Mat<c64> {
        &self.parts.b
    }

    /// R = Σ_a ∫ γ Â†Â in the computational basis.
    pub fn decay(&self) -> Mat<c64> {
        from_frame(&self.parts.frame, &self.parts.r)
    }

    pub fn kms_weights(&self) -> &[f64] {
        &self.parts.kms
    }

    /// L[x] in the computational basis.
    pub fn apply(&self, x: &Mat<c64>) -> Mat<c64> {
        let u = &self.parts.frame;
        from_frame(u, &self.parts.apply(&to_frame(u, x), true))
    }

    /// L†[x] in the computational basis.
    pub fn apply_adjoint(&self, x: &Mat<c64>) -> Mat<c64> {
        let u = &self.parts.frame;
        from_frame(u, &self.parts.apply_adjoint(&to_frame(u, x), true))
    }

    fn actions(&self, coherent: bool) -> (Action, Action) {
        let p = self.parts.clone();
        let q = self.parts.clone();
        (
            Arc::new(move |x: &Mat<c64>| p.apply(x, coherent)),
            Arc::new(move |x: &Mat<c64>| q.apply_adjoint(x, coherent)),
        )
    }

    fn superop(&self, coherent: bool) -> SuperOp {
        let (a, b) = self.actions(coherent);
        SuperOp::from_action(self.dim(), a, Some(b))
            .with_frame(self.parts.frame.clone())
            .with_kms(self.parts.kms.clone())
    }

    /// Matrix-free L acting in the eigenframe.
    pub fn full(&self) -> SuperOp {
        self.superop(true)
    }

    /// Matrix-free dissipative part T - ½{R, ·}.
    pub fn dissipative(&self) -> SuperOp {
        self.superop(false)
    }

    fn dense_guard(&self) -> Result<()> {
        if self.n_qubits() > MAX_DENSE_QUBITS {
            return Err(Error::Capacity {
                what: format!("dense superoperator on {} qubits", self.n_qubits()),
                limit: MAX_DENSE_QUBITS,
            });
        }
        Ok(())
    }

    /// L with its dense eigenframe matrix attached.
    pub fn dense(&self) -> Result<SuperOp> {
        self.dense_guard()?;
        Ok(self.full().with_dense(self.parts.dense(true)))
    }

    pub fn dense_dissipative(&self) -> Result<SuperOp> {
        self.dense_guard()?;
        Ok(self.dissipative().with_dense(self.parts.dense(false)))
    }

    fn check_state(&self, gs: &GibbsState) -> Result<()> {
        if gs.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: gs.dim() });
        }
        if (gs.beta - self.weight.beta).abs() > 1e-12 * self.weight.beta {
            return Err(Error::InvalidParameter(format!(
                "Gibbs state at beta = {} but generator at beta = {}",
                gs.beta, self.weight.beta
            )));
        }
        Ok(())
    }

    /// ‖G - G†‖_F / max(1, ‖G‖_F) for both conventions.
    pub fn detailed_balance_report(&self, gs: &GibbsState) -> Result<DbResidual> {
        self.check_state(gs)?;
        let d = self.dense()?;
        let s = symmetrize(&d)?;
        Ok(DbResidual { heisenberg: s.residual, schrodinger: s.residual_other })
    }

    pub fn detailed_balance_residual(&self, gs: &GibbsState) -> Result<f64> {
        Ok(self.detailed_balance_report(gs)?.heisenberg)
    }

    /// ‖L[ρ_β]‖_1
    pub fn fixed_point_defect(&self, gs: &GibbsState) -> Result<f64> {
        self.check_state(gs)?;
        Ok(trace_norm(&self.apply(&gs.rho)))
    }

    /// Regression snapshot: B and the dense L, both in the computational basis.
    pub fn snapshot(&self) -> Result<GeneratorSnapshot> {
        self.dense_guard()?;
        let d = self.dim();
        let u = &self.parts.frame;
        let w = kron(&Mat::from_fn(d, d, |r, c| u[(r, c)].conj()), u);
        let dfull = &w * self.parts.dense(false) * w.adjoint();
        Ok(GeneratorSnapshot {
            dim: d,
            weight: self.weight,
            coherent_method: self.coherent_method,
            jumps: self.labels.clone(),
            coherent: row_major(&self.coherent()),
            dissipative: row_major(&dfull),
        })
    }
}

fn row_major(m: &Mat<c64>) -> Vec<[f64; 2]> {
    let mut v = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            v.push([m[(r, c)].re, m[(r, c)].im]);
        }
    }
    v
}

fn from_row_major(v: &[[f64; 2]], n: usize) -> Result<Mat<c64>> {
    if v.len() != n * n {
        return Err(Error::Parse(format!("expected {} entries, found {}", n * n, v.len())));
    }
    Ok(Mat::from_fn(n, n, |r, c| c64::new(v[r * n + c][0], v[r * n + c][1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSnapshot {
    pub dim: usize,
    pub weight: Weight,
    pub coherent_method: Coherent,
    pub jumps: Vec<String>,
    /// row-major [re, im]
    pub coherent: Vec<[f64; 2]>,
    /// dense dissipative superoperator, column-stacking convention, row-major
    pub dissipative: Vec<[f64; 2]>,
}

impl GeneratorSnapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn coherent_matrix(&self) -> Result<Mat<c64>> {
        from_row_major(&self.coherent, self.dim)
    }

    pub fn dissipative_matrix(&self) -> Result<Mat<c64>> {
        from_row_major(&self.dissipative, self.dim * self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gibbs::gibbs;
    use crate::linalg::kms::KmsSpectral;
    use crate::linalg::ops::{max_abs, random_complex, random_density, trace};
    use crate::linalg::spectrum::hermitian_eig;
    use crate::spinsys::{build_ising_chain, build_random_local, build_tfim_chain, single_site_jumps, Pauli, Region};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit(h: Pauli, jump: Pauli, w: &Weight, c: Coherent) -> (Spectrum, Generator) {
        let s = hermitian_eig(&h.matrix()).unwrap();
        let g = assemble_ops(&s, &[jump.matrix()], vec!["A".into()], w, c).unwrap();
        (s, g)
    }

    #[test]
    fn single_qubit_metropolis_is_detailed_balanced() {
        let w = Weight::metropolis(1.0, 1.0).unwrap();
        let (s, g) = qubit(Pauli::Z, Pauli::X, &w, Coherent::ClosedForm);
        let gs = gibbs(&s, 1.0).unwrap();
        assert!(g.fixed_point_defect(&gs).unwrap() <= 1e-12);
        assert!(g.detailed_balance_residual(&gs).unwrap() <= 1e-12);
        let d = g.dense_dissipative().unwrap();
        assert_eq!(d.dense().unwrap().nrows(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(2, &mut rng);
        assert!(trace(&d.apply(&rho)).norm() < 1e-12);
        assert!(trace(&g.apply(&rho)).norm() < 1e-12);
    }

    #[test]
    fn zeroed_coherent_term_breaks_balance() {
        let h = build_tfim_chain(2, 1.0, 0.9, false).unwrap();
        let s = hermitian_eig(&h.dense()).unwrap();
        let jumps = single_site_jumps(&Region::new([0])).unwrap();
        let w = Weight::metropolis(1.0, 1.0).unwrap();
        let gs = gibbs(&s, 1.0).unwrap();
        let good = assemble(&s, &jumps, &w).unwrap();
        let bad = assemble_with(&s, &jumps, &w, Coherent::Zero).unwrap();
        assert!(good.detailed_balance_residual(&gs).unwrap() <= 1e-10);
        assert!(bad.detailed_balance_residual(&gs).unwrap() > 1e-4);
    }

    #[test]
    fn gaussian_weight_is_detailed_balanced() {
        let h = build_random_local(2, 2, 2, 11).unwrap();
        let s = hermitian_eig(&h.dense()).unwrap();
        let jumps = single_site_jumps(&Region::new([1])).unwrap();
        let w = Weight::gaussian(2.0, 0.5, 0.6).unwrap();
        let g = assemble(&s, &jumps, &w).unwrap();
        let gs = gibbs(&s, 2.0).unwrap();
        assert!(g.detailed_balance_residual(&gs).unwrap() <= 1e-10);
        assert!(g.fixed_point_defect(&gs).unwrap() <= 1e-10);
    }

    #[test]
    fn commuting_jump_and_classical_model() {
        let w = Weight::metropolis(1.0, 1.0).unwrap();
        let (s, g) = qubit(Pauli::Z, Pauli::Z, &w, Coherent::ClosedForm);
        let gs = gibbs(&s, 1.0).unwrap();
        assert!(g.detailed_balance_residual(&gs).unwrap() <= 1e-12);
        let h = build_ising_chain(3, 1.0, false).unwrap();
        let s = hermitian_eig(&h.dense()).unwrap();
        let jumps = single_site_jumps(&Region::all(3)).unwrap();
        let g = assemble(&s, &jumps, &w).unwrap();
        let gs = gibbs(&s, 1.0).unwrap();
        assert!(g.fixed_point_defect(&gs).unwrap() <= 1e-10);
    }

    #[test]
    fn empty_and_identity_jumps() {
        let s = hermitian_eig(&build_tfim_chain(2, 1.0, 0.5, false).unwrap().dense()).unwrap();
        let w = Weight::metropolis(1.0, 1.0).unwrap();
        let g = assemble_ops(&s, &[], vec![], &w, Coherent::ClosedForm).unwrap();
        assert_eq!(max_abs(g.dense().unwrap().dense().unwrap()), 0.0);
        let id = assemble_ops(&s, &[Mat::identity(4, 4)], vec!["I".into()], &w, Coherent::ClosedForm).unwrap();
        assert!(max_abs(id.dense_dissipative().unwrap().dense().unwrap()) < 1e-14);
        let tc = TransitionCoeffs::zeros(&s.bohr);
        let z = dissipative_part(&s, &[crate::linalg::ops::embed(&Pauli::X.matrix(), &[0], 2)], tc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(max_abs(&z.apply(&random_complex(4, 4, &mut rng))), 0.0);
    }

    #[test]
    fn dense_action_and_adjoint_agree() {
        let h = build_random_local(3, 2, 3, 4).unwrap();
        let s = hermitian_eig(&h.dense()).unwrap();
        let jumps = single_site_jumps(&Region::new([0, 2])).unwrap();
        let g = assemble(&s, &jumps, &Weight::metropolis(0.7, 1.3).unwrap()).unwrap();
        let dense = g.dense().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_complex(8, 8, &mut rng);
        let y = random_complex(8, 8, &mut rng);
        let xf = dense.to_frame(&x);
        let a = dense.apply_dense_in_frame(&xf).unwrap();
        let b = dense.apply_action_in_frame(&xf).unwrap();
        assert!(max_abs(&(&a - &b)) < 1e-12);
        // ⟨y, L x⟩ = ⟨L† y, x⟩ in Hilbert-Schmidt
        let lhs = trace(&(y.adjoint() * g.apply(&x)));
        let rhs = trace(&(g.apply_adjoint(&y).adjoint() * &x));
        assert!((lhs - rhs).norm() < 1e-11);
        let mut ident = Mat::<c64>::identity(8, 8);
        ident = g.apply_adjoint(&ident);
        assert!(max_abs(&ident) < 1e-12);
    }

    #[test]
    fn negated_symmetrized_generator_is_psd() {
        let h = build_tfim_chain(3, 1.0, 1.0, false).unwrap();
        let s = hermitian_eig(&h.dense()).unwrap();
        let jumps = single_site_jumps(&Region::new([1])).unwrap();
        let g = assemble(&s, &jumps, &Weight::metropolis(1.0, 1.0).unwrap()).unwrap();
        let k = KmsSpectral::new(&g.dense().unwrap()).unwrap();
        assert!(k.residual <= 1e-10);
        assert!(k.max_eigenvalue() <= 1e-8);
    }

    #[test]
    fn snapshot_round_trip() {
        let w = Weight::metropolis(1.0, 1.0).unwrap();
        let (_, g) = qubit(Pauli::Z, Pauli::X, &w, Coherent::ClosedForm);
        let snap = g.snapshot().unwrap();
        let back = GeneratorSnapshot::from_json(&snap.to_json()).unwrap();
        assert_eq!(back, snap);
        assert!(max_abs(&(&back.coherent_matrix().unwrap() - &g.coherent())) == 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_density(2, &mut rng);
        let v = crate::linalg::ops::vec_of(&rho);
        let dm = back.dissipative_matrix().unwrap();
        let out: Vec<c64> = (0..4).map(|r| (0..4).map(|c| dm[(r, c)] * v[c]).sum()).collect();
        let want = g.dissipative().apply(&rho);
        assert!(max_abs(&(&crate::linalg::ops::unvec(&out, 2) - &want)) < 1e-13);
    }

    #[test]
    fn kernel_route_reproduces_closed_form_after_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = crate::linalg::ops::random_contraction(4, &mut rng);
        let ops = vec![a.clone(), a.adjoint().to_owned()];
        let h = build_tfim_chain(2, 1.0, 0.8, false).unwrap();
        let s = hermitian_eig(&h.dense()).unwrap();
        for beta in [0.5, 1.0, 2.0] {
            let w = Weight::metropolis(beta, 1.0 / beta).unwrap();
            let gs = gibbs(&s, beta).unwrap();
            let closed = assemble_ops(&s, &ops, vec![], &w, Coherent::ClosedForm).unwrap();
            let kern = assemble_ops(&s, &ops, vec![], &w, consistent_kernel()).unwrap();
            assert!(kern.coherent_defect < 1e-8);
            assert!(max_abs(&(&kern.coherent() - &closed.coherent())) < 1e-10);
            assert!(kern.detailed_balance_residual(&gs).unwrap() < 1e-8);
            for c in [PV_CONSTANT_EQUATION, PV_CONSTANT_PROOF] {
                let g = assemble_ops(&s, &ops, vec![], &w, Coherent::Kernel { constant: c, scale: 1.0 }).unwrap();
                assert!(g.detailed_balance_residual(&gs).unwrap() > 1e-3);
            }
        }
    }

    #[test]
    fn constant_scan_prefers_consistent_normalization() {
        let scan = scan_kernel_constants(1.0).unwrap();
        assert_eq!(scan[0].name, "consistent");
        assert!(scan[0].residual < 1e-8);
        assert!(scan[1].residual > 1e-3);
    }

    #[test]
    fn kernel_route_rejects_other_weights() {
        let s = hermitian_eig(&Pauli::Z.matrix()).unwrap();
        let w = Weight::metropolis(1.0, 0.5).unwrap();
        assert!(assemble_ops(&s, &[Pauli::X.matrix()], vec![], &w, consistent_kernel()).is_err());
    }
}
