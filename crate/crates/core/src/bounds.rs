//! Numerical checks of the inequality lemmas: Lieb-Robinson truncation,
//! the double-commutator identity, weighted-norm bounds, commutators against
//! Dirichlet forms, and the local gap.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gibbs::{kms_half, GibbsState};
use crate::linalg::kms::KmsSpectral;
use crate::linalg::ops::{commutator, discard, embed, frob, from_frame, max_abs, op_norm, to_frame};
use crate::linalg::spectrum::Spectrum;
use crate::lindblad::Generator;
use crate::oft::conjugation_norm;
use crate::spinsys::{pauli_string, truncate_patch, Hamiltonian, Pauli, Region};
use crate::stats::{loglog_fit, LinearFit};

/// Relative tolerance of the exact-constant inequalities.
pub const REL_TOL: f64 = 1e-10;
/// Denominator floor when a bound is itself tiny.
pub const BOUND_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub instances: usize,
    /// max over instances of (value - bound) / max(bound, BOUND_FLOOR)
    pub max_violation: f64,
    pub margin_min: f64,
    pub margin_median: f64,
    pub pass: bool,
}

impl BoundReport {
    /// Build from (value, bound) pairs.
    pub fn from_pairs(name: impl Into<String>, pairs: &[(f64, f64)], tol: f64) -> Self {
        let mut margins: Vec<f64> = pairs.iter().map(|(v, b)| b - v).collect();
        margins.sort_by(|a, b| a.total_cmp(b));
        let max_violation =
            pairs.iter().map(|(v, b)| (v - b) / b.abs().max(BOUND_FLOOR)).fold(f64::NEG_INFINITY, f64::max);
        let median = if margins.is_empty() { f64::NAN } else { margins[margins.len() / 2] };
        BoundReport {
            name: name.into(),
            instances: pairs.len(),
            max_violation,
            margin_min: margins.first().copied().unwrap_or(f64::NAN),
            margin_median: median,
            pass: !pairs.is_empty() && max_violation <= tol,
        }
    }

    /// Fold another report into this one (same inequality, more instances).
    pub fn merge(&mut self, other: &BoundReport) {
        let n = self.instances + other.instances;
        self.max_violation = self.max_violation.max(other.max_violation);
        self.margin_min = self.margin_min.min(other.margin_min);
        // medians do not merge exactly; keep the smaller one
        self.margin_median = self.margin_median.min(other.margin_median);
        self.instances = n;
        self.pass = self.pass && other.pass;
    }
}

/// e^{iHt} A e^{-iHt}
pub fn heisenberg_evolve(spec: &Spectrum, a: &Mat<c64>, t: f64) -> Mat<c64> {
    let ae = to_frame(&spec.vectors, a);
    let e = &spec.energies;
    let d = spec.dim();
    from_frame(&spec.vectors, &Mat::from_fn(d, d, |i, j| ae[(i, j)] * c64::from_polar(1.0, (e[i] - e[j]) * t)))
}

/// min(2, |A| (2d|t|)^ℓ / ℓ! / (1 - 2/e)) for ‖A‖ ≤ 1.
pub fn lr_bound(region_size: usize, degree: usize, t: f64, ell: usize) -> f64 {
    let x = 2.0 * degree as f64 * t.abs();
    let mut term = 1.0;
    for k in 1..=ell {
        term *= x / k as f64;
    }
    (region_size as f64 * term / (1.0 - 2.0 / std::f64::consts::E)).min(2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrRow {
    pub t: f64,
    pub lhs: f64,
    pub bound: f64,
}

/// ‖e^{iH_ℓt}Ae^{-iH_ℓt} - e^{iHt}Ae^{-iHt}‖ against the proof's bound.
/// Rows with bound = 2 are kept but cannot fail since ‖A‖ ≤ 1.
pub fn lr_truncation_check(
    h: &Hamiltonian,
    region: &Region,
    a: &Mat<c64>,
    ell: usize,
    t_grid: &[f64],
) -> Result<(BoundReport, Vec<LrRow>)> {
    let n = h.n();
    if n > 8 {
        return Err(Error::Capacity { what: format!("Lieb-Robinson check on {n} qubits"), limit: 8 });
    }
    let na = op_norm(a);
    if na > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("‖A‖ = {na} exceeds 1")));
    }
    let hl = truncate_patch(h, region, ell)?;
    let s_full = crate::linalg::spectrum::hermitian_eig(&h.dense())?;
    let s_loc = crate::linalg::spectrum::hermitian_eig(&hl.dense())?;
    let d = h.degree_with_loops().max(1);
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let lhs = if t == 0.0 || hl.terms().len() == h.terms().len() {
            0.0
        } else {
            op_norm(&(&heisenberg_evolve(&s_loc, a, t) - &heisenberg_evolve(&s_full, a, t)))
        };
        rows.push(LrRow { t, lhs, bound: lr_bound(region.len(), d, t, ell) });
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.lhs, r.bound)).collect();
    Ok((BoundReport::from_pairs("lieb_robinson", &pairs, REL_TOL), rows))
}

/// Max-entry deviation of ρ - ρ_{-A} from 2^{-(2|A|+1)} Σ_{S∈P_A} [S,[S,ρ]].
pub fn double_commutator_identity(rho: &Mat<c64>, a: &Region, n: usize) -> Result<f64> {
    if a.len() > 3 {
        return Err(Error::Capacity { what: "Pauli strings on |A| > 3".into(), limit: 3 });
    }
    let lhs = rho - &discard(rho, a, n)?;
    let k = a.len();
    let mut sum = Mat::<c64>::zeros(rho.nrows(), rho.ncols());
    for code in 0..1usize << (2 * k) {
        let ps: Vec<Pauli> = (0..k).map(|i| Pauli::ALL[(code >> (2 * i)) & 3]).collect();
        let s = embed(&pauli_string(&ps), a.sites(), n);
        sum += commutator(&s, &commutator(&s, rho));
    }
    let scale = c64::new(1.0 / (1u64 << (2 * k + 1)) as f64, 0.0);
    Ok(max_abs(&(&lhs - &(faer::Scale(scale) * &sum))))
}

/// ‖ρ^{1/4} X ρ^{-1/4}‖ and ‖ρ^{-1/4} X ρ^{1/4}‖
fn imaginary_pair(gs: &GibbsState, x: &Mat<c64>) -> (f64, f64) {
    (op_norm(&(&gs.rho_q * x * &gs.rho_mq)), op_norm(&(&gs.rho_mq * x * &gs.rho_q)))
}

/// ‖[A,O]‖_ρ ≤ (‖ρ^{1/4}Aρ^{-1/4}‖ + ‖ρ^{-1/4}Aρ^{1/4}‖) ‖O‖_ρ on one instance.
pub fn holder_loose_pair(gs: &GibbsState, a: &Mat<c64>, o: &Mat<c64>) -> (f64, f64) {
    let lhs = frob(&kms_half(gs, &commutator(a, o)));
    let (p, q) = imaginary_pair(gs, a);
    (lhs, (p + q) * frob(&kms_half(gs, o)))
}

pub fn holder_loose_check(gs: &GibbsState, a: &Mat<c64>, o: &Mat<c64>) -> BoundReport {
    BoundReport::from_pairs("holder_loose", &[holder_loose_pair(gs, a, o)], REL_TOL)
}

/// ‖X‖_ρ ≤ ‖X‖
pub fn kms_vs_operator_norm(gs: &GibbsState, x: &Mat<c64>) -> (f64, f64) {
    (gs.kms_norm(x), op_norm(x))
}

/// ‖e^{βH}Pe^{-βH}‖ against (1 - 2d|β|)^{-w} for a Pauli string of weight w
/// (w = 1 is the single-site lemma). Requires 2d|β| < 1, with d from
/// `Hamiltonian::degree_with_loops`.
pub fn imaginary_conjugation_pair(spec: &Spectrum, p: &Mat<c64>, weight: usize, degree: usize, beta: f64) -> Result<(f64, f64)> {
    let x = 2.0 * degree as f64 * beta.abs();
    if x >= 1.0 {
        return Err(Error::InvalidParameter(format!("need |β| < 1/(2d), got 2d|β| = {x}")));
    }
    Ok((conjugation_norm(spec, p, beta), (1.0 - x).powi(-(weight as i32))))
}

/// [A^1 ... A^k, O] against Σ_j A^1..A^{j-1} [A^j, O] A^{j+1}..A^k; returns
/// the max-entry difference.
pub fn leibniz_identity(factors: &[Mat<c64>], o: &Mat<c64>) -> f64 {
    let d = o.nrows();
    let id = Mat::<c64>::identity(d, d);
    let prod = factors.iter().fold(id.clone(), |acc, f| &acc * f);
    let lhs = commutator(&prod, o);
    let mut rhs = Mat::<c64>::zeros(d, d);
    for j in 0..factors.len() {
        let left = factors[..j].iter().fold(id.clone(), |acc, f| &acc * f);
        let right = factors[j + 1..].iter().fold(id.clone(), |acc, f| &acc * f);
        rhs += &left * &commutator(&factors[j], o) * &right;
    }
    max_abs(&(&lhs - &rhs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorDirichletReport {
    /// samples with E_a(X) ≤ 1e-12
    pub kernel_samples: usize,
    /// largest ‖[A,X]‖_ρ among them
    pub kernel_max_commutator: f64,
    pub kernel_pass: bool,
    /// (E_a(X), ‖[A,X]‖_ρ) per sample
    pub scatter: Vec<(f64, f64)>,
    /// ln ‖[A,X]‖_ρ against ln E_a(X) over the upper envelope
    pub envelope: Option<LinearFit>,
}

/// Single-jump generator: E_a(X) = -Re⟨X, L†X⟩_ρ against ‖[A, X]‖_ρ.
pub fn commutator_dirichlet_relation(
    g: &Generator,
    gs: &GibbsState,
    jump: &Mat<c64>,
    samples: &[Mat<c64>],
) -> Result<CommutatorDirichletReport> {
    if g.labels.len() > 1 {
        return Err(Error::InvalidParameter("commutator relation needs a single-jump generator".into()));
    }
    let mut scatter = Vec::with_capacity(samples.len());
    let mut kmax: f64 = 0.0;
    let mut kn = 0;
    for x in samples {
        let e = crate::dirichlet::dirichlet_direct(g, gs, x);
        let c = frob(&kms_half(gs, &commutator(jump, x)));
        if e <= 1e-12 {
            kn += 1;
            kmax = kmax.max(c);
        }
        scatter.push((e, c));
    }
    // upper envelope: running max of the commutator over sorted E
    let mut sorted: Vec<(f64, f64)> = scatter.iter().copied().filter(|(e, c)| *e > 1e-12 && *c > 0.0).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut env: Vec<(f64, f64)> = Vec::new();
    for (e, c) in sorted.into_iter().rev() {
        if env.last().is_none_or(|&(_, m)| c > m) {
            env.push((e, c));
        }
    }
    let (ex, cy): (Vec<f64>, Vec<f64>) = env.into_iter().unzip();
    Ok(CommutatorDirichletReport {
        kernel_samples: kn,
        kernel_max_commutator: kmax,
        kernel_pass: kmax <= 1e-5,
        scatter,
        envelope: loglog_fit(&ex, &cy),
    })
}

/// Smallest nonzero |λ| of the symmetrized generator; None when every
/// eigenvalue is below 1e-10.
pub fn local_gap(g: &Generator) -> Result<Option<f64>> {
    Ok(KmsSpectral::new(&g.dense()?)?.gap(1e-10))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapDecayRow {
    pub t: f64,
    /// ‖e^{L†t}X - P†X‖_ρ
    pub lhs: f64,
    /// e^{-λt}‖X‖_ρ
    pub bound: f64,
}

/// ‖e^{L†t}X - P†X‖_ρ ≤ e^{-λt}‖X‖_ρ, with P† the KMS projection onto ker L†.
pub fn gap_decay_check(g: &Generator, gs: &GibbsState, xs: &[Mat<c64>], times: &[f64]) -> Result<(Option<f64>, Vec<GapDecayRow>)> {
    let k = KmsSpectral::new(&g.dense()?)?;
    let Some(lambda) = k.gap(1e-10) else {
        return Ok((None, Vec::new()));
    };
    let mut rows = Vec::with_capacity(xs.len() * times.len());
    for x in xs {
        let p = k.kernel_projection_heisenberg(x, 1e-10);
        let nx = gs.kms_norm(x);
        for &t in times {
            let y = k.propagate_heisenberg(x, t);
            rows.push(GapDecayRow { t, lhs: gs.kms_norm(&(&y - &p)), bound: (-lambda * t).exp() * nx });
        }
    }
    Ok((Some(lambda), rows))
}

/// Random Pauli string on `w` distinct sites of an n-qubit register.
pub fn random_pauli_string<R: Rng>(n: usize, w: usize, rng: &mut R) -> (Vec<usize>, Vec<Pauli>) {
    let mut sites: Vec<usize> = (0..n).collect();
    for i in 0..w.min(n) {
        let j = rng.random_range(i..n);
        sites.swap(i, j);
    }
    let mut s: Vec<usize> = sites[..w.min(n)].to_vec();
    s.sort_unstable();
    let ps = s.iter().map(|_| Pauli::XYZ[rng.random_range(0..3)]).collect();
    (s, ps)
}

/// Per-instance seed derived from a master seed.
pub fn instance_rng(master: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
