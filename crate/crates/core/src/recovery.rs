//! Time-averaged recovery maps R_{A,t} = (1/t)∫_0^t e^{sL_A} ds, discard and
//! recover experiments, truncated variants and a one-dimensional patching
//! toy.

use std::cell::RefCell;

use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gibbs::{gibbs, maximally_mixed, GibbsState};
use crate::linalg::kms::{KmsSpectral, Picture};
use crate::linalg::ops::{apply_local_map, discard, op_norm, random_contraction, trace_distance, trace_norm, unvec};
use crate::linalg::propagate::{
    propagate_heisenberg_ode, time_average_ode, time_average_ode_heisenberg, Backend,
};
use crate::linalg::spectrum::hermitian_eig;
use crate::linalg::superop::SuperOp;
use crate::lindblad::generator::MAX_DENSE_QUBITS;
use crate::lindblad::{assemble, Generator, Weight};
use crate::spinsys::{single_site_jumps, truncate_patch, Hamiltonian, Region};
use crate::stats::{loglog_fit, LinearFit};

/// Largest register the ODE backend accepts.
pub const MAX_ODE_QUBITS: usize = 10;
/// Gauss-Legendre nodes in s for the ODE time average (doubled once).
pub const ODE_AVERAGE_NODES: usize = 32;

#[derive(Clone, Debug)]
pub struct RecoveryScenario {
    pub h: Hamiltonian,
    pub weight: Weight,
    pub region: Region,
    pub times: Vec<f64>,
    pub ell: Option<usize>,
    pub backend: Backend,
    /// seed of the random contraction used for the Dirichlet column
    pub seed: u64,
}

impl RecoveryScenario {
    pub fn new(h: Hamiltonian, weight: Weight, region: Region, times: Vec<f64>) -> Result<Self> {
        let s = RecoveryScenario { h, weight, region, times, ell: None, backend: Backend::Spectral, seed: 0 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_ell(mut self, ell: usize) -> Result<Self> {
        self.ell = Some(ell);
        self.validate()?;
        Ok(self)
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validated()?;
        if let Some(s) = self.region.max_site() {
            if s >= self.h.n() {
                return Err(Error::InvalidRegion(format!("site {s} outside [0, {})", self.h.n())));
            }
        }
        if self.times.is_empty() {
            return Err(Error::InvalidParameter("times must be nonempty".into()));
        }
        if self.times.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter("times must be positive and finite".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("times must be strictly increasing".into()));
        }
        if self.ell == Some(0) {
            return Err(Error::InvalidParameter("ell must be >= 1".into()));
        }
        Ok(())
    }
}

/// Tr_A[ρ_β] ⊗ I_A / 2^|A|
pub fn discard_region(gs: &GibbsState, a: &Region) -> Result<Mat<c64>> {
    let d = gs.dim();
    if !d.is_power_of_two() {
        return Err(Error::InvalidSize(format!("dimension {d} is not a qubit register")));
    }
    discard(&gs.rho, a, d.trailing_zeros() as usize)
}

/// L_A built on the smallest register holding A and the (possibly truncated)
/// Hamiltonian, lifted to the full system as L_loc ⊗ id.
pub struct RegionDynamics {
    n: usize,
    support: Region,
    generator: Option<Generator>,
    spectral: Option<KmsSpectral>,
    backend: Backend,
    /// number of Hamiltonian terms kept
    pub terms: usize,
}

impl RegionDynamics {
    pub fn new(h: &Hamiltonian, a: &Region, w: &Weight, ell: Option<usize>, backend: Backend) -> Result<Self> {
        let n = h.n();
        if let Some(s) = a.max_site() {
            if s >= n {
                return Err(Error::InvalidRegion(format!("site {s} outside [0, {n})")));
            }
        }
        if a.is_empty() {
            return Ok(RegionDynamics { n, support: Region::empty(), generator: None, spectral: None, backend, terms: 0 });
        }
        let heff = match ell {
            Some(l) => truncate_patch(h, a, l)?,
            None => h.clone(),
        };
        let support = heff.support().union(a);
        let limit = match backend {
            Backend::Spectral => MAX_DENSE_QUBITS,
            Backend::Ode => MAX_ODE_QUBITS,
        };
        if support.len() > limit {
            return Err(Error::Capacity {
                what: format!("{:?} backend on a {}-qubit support", backend, support.len()),
                limit,
            });
        }
        let hloc = heff.restrict(&support)?;
        let jumps = single_site_jumps(a)?.restrict(&support)?;
        let spec = hermitian_eig(&hloc.dense())?;
        let g = assemble(&spec, &jumps, w)?;
        let spectral = match backend {
            Backend::Spectral => Some(KmsSpectral::new(&g.dense()?)?),
            Backend::Ode => None,
        };
        Ok(RegionDynamics { n, support, generator: Some(g), spectral, backend, terms: heff.terms().len() })
    }

    pub fn support(&self) -> &Region {
        &self.support
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The generator on the support register (None for A = ∅).
    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    pub fn spectral(&self) -> Option<&KmsSpectral> {
        self.spectral.as_ref()
    }

    fn lift<F>(&self, x: &Mat<c64>, f: F) -> Result<Mat<c64>>
    where
        F: Fn(&Mat<c64>) -> Result<Mat<c64>>,
    {
        let d = 1usize << self.n;
        if x.nrows() != d || x.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.nrows() });
        }
        if self.support.len() == self.n {
            return f(x);
        }
        let err = RefCell::new(None);
        let out = apply_local_map(x, self.support.sites(), self.n, |b| match f(b) {
            Ok(y) => y,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                b.clone()
            }
        });
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// L_A[x]
    pub fn apply(&self, x: &Mat<c64>) -> Result<Mat<c64>> {
        match &self.generator {
            None => Ok(Mat::zeros(x.nrows(), x.ncols())),
            Some(g) => self.lift(x, |b| Ok(g.apply(b))),
        }
    }

    /// L_A†[x]
    pub fn apply_adjoint(&self, x: &Mat<c64>) -> Result<Mat<c64>> {
        match &self.generator {
            None => Ok(Mat::zeros(x.nrows(), x.ncols())),
            Some(g) => self.lift(x, |b| Ok(g.apply_adjoint(b))),
        }
    }

    /// R_{A,t}[x] (Schrödinger) or R†_{A,t}[x] (Heisenberg).
    pub fn time_average(&self, x: &Mat<c64>, t: f64, pic: Picture) -> Result<Mat<c64>> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("time average needs t > 0, got {t}")));
        }
        let Some(g) = &self.generator else {
            return Ok(x.clone());
        };
        match (&self.spectral, pic) {
            (Some(k), Picture::Schrodinger) => self.lift(x, |b| Ok(k.time_average(b, t))),
            (Some(k), Picture::Heisenberg) => self.lift(x, |b| Ok(k.time_average_heisenberg(b, t))),
            (None, Picture::Schrodinger) => {
                let l = g.full();
                self.lift(x, |b| Ok(time_average_ode(&l, b, t, ODE_AVERAGE_NODES)?.0))
            }
            (None, Picture::Heisenberg) => {
                let l = g.full();
                self.lift(x, |b| Ok(time_average_ode_heisenberg(&l, b, t, ODE_AVERAGE_NODES)?.0))
            }
        }
    }

    /// e^{tL_A†}[x]
    pub fn propagate_heisenberg(&self, x: &Mat<c64>, t: f64) -> Result<Mat<c64>> {
        let Some(g) = &self.generator else {
            return Ok(x.clone());
        };
        match &self.spectral {
            Some(k) => self.lift(x, |b| Ok(k.propagate_heisenberg(b, t))),
            None => {
                let l = g.full();
                self.lift(x, |b| propagate_heisenberg_ode(&l, b, t))
            }
        }
    }

    /// E_A(Y) = -Re⟨Y, L_A†Y⟩_ρ
    pub fn dirichlet(&self, gs: &GibbsState, y: &Mat<c64>) -> Result<f64> {
        Ok(-gs.kms_inner(y, &self.apply_adjoint(y)?).re)
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }
}

/// R_t for a generator as a superoperator. The spectral backend acts
/// through the KMS eigendecomposition; the ODE backend tabulates the map
/// column by column and is limited to 3 qubits.
pub fn time_averaged_map(g: &Generator, t: f64, backend: Backend) -> Result<SuperOp> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time average needs t > 0, got {t}")));
    }
    let d = g.dim();
    match backend {
        Backend::Spectral => {
            let k = std::sync::Arc::new(KmsSpectral::new(&g.dense()?)?);
            let k2 = k.clone();
            Ok(SuperOp::from_action(
                d,
                std::sync::Arc::new(move |x: &Mat<c64>| k.time_average(x, t)),
                Some(std::sync::Arc::new(move |x: &Mat<c64>| k2.time_average_heisenberg(x, t))),
            ))
        }
        Backend::Ode => {
            if g.n_qubits() > 3 {
                return Err(Error::Capacity { what: "tabulated ODE time average".into(), limit: 3 });
            }
            let l = g.full();
            let d2 = d * d;
            let mut m = Mat::<c64>::zeros(d2, d2);
            for col in 0..d2 {
                let mut e = vec![c64::new(0.0, 0.0); d2];
                e[col] = c64::new(1.0, 0.0);
                let (y, _) = time_average_ode(&l, &unvec(&e, d), t, ODE_AVERAGE_NODES)?;
                for c in 0..d {
                    for r in 0..d {
                        m[(r + c * d, col)] = y[(r, c)];
                    }
                }
            }
            Ok(SuperOp::from_dense(d, m))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub t: f64,
    pub ell: Option<usize>,
    /// ‖R_{A,t}[ρ_{β,-A}] - ρ_β‖_1
    pub err: f64,
    /// ‖R_{A,t}[ρ_β] - ρ_β‖_1
    pub fixed_point_defect: f64,
    /// E_A(R†_{A,t}[X])
    pub dirichlet: f64,
    /// ‖L_A† R†_{A,t}[X]‖
    pub stationarity: f64,
    pub bound_2_over_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCurve {
    pub rows: Vec<RecoveryRow>,
    /// -(slope of ln err against ln t); None when fewer than two positive errors
    pub fitted_exponent: Option<f64>,
    pub fit: Option<LinearFit>,
}

pub fn recovery_error_curve(s: &RecoveryScenario) -> Result<RecoveryCurve> {
    s.validate()?;
    let n = s.h.n();
    let spec = hermitian_eig(&s.h.dense())?;
    let gs = gibbs(&spec, s.weight.beta)?;
    let rho_minus = discard_region(&gs, &s.region)?;
    let dynm = RegionDynamics::new(&s.h, &s.region, &s.weight, s.ell, s.backend)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let x = random_contraction(1 << n, &mut rng);
    let mut rows = Vec::with_capacity(s.times.len());
    for &t in &s.times {
        let out = dynm.time_average(&rho_minus, t, Picture::Schrodinger)?;
        let fixed = dynm.time_average(&gs.rho, t, Picture::Schrodinger)?;
        let y = dynm.time_average(&x, t, Picture::Heisenberg)?;
        rows.push(RecoveryRow {
            t,
            ell: s.ell,
            err: trace_distance(&out, &gs.rho),
            fixed_point_defect: trace_distance(&fixed, &gs.rho),
            dirichlet: dynm.dirichlet(&gs, &y)?,
            stationarity: op_norm(&dynm.apply_adjoint(&y)?),
            bound_2_over_t: 2.0 / t,
        });
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let es: Vec<f64> = rows.iter().map(|r| r.err).collect();
    let fit = loglog_fit(&ts, &es);
    Ok(RecoveryCurve { rows, fitted_exponent: fit.map(|f| -f.slope), fit })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub t: f64,
    pub ell: usize,
    pub err_full: f64,
    pub err_trunc: f64,
    /// ‖(R_{A,t} - R_{A,t,ℓ})[ρ_{β,-A}]‖_1
    pub map_gap: f64,
    /// qubits in the truncated support
    pub support: usize,
}

/// Rows for every (ℓ, t) pair, ℓ-major. The full map is built once; a
/// truncation that keeps every term reuses it.
pub fn truncation_scan(
    h: &Hamiltonian,
    w: &Weight,
    a: &Region,
    times: &[f64],
    ells: &[usize],
    backend: Backend,
) -> Result<Vec<TruncationRow>> {
    let spec = hermitian_eig(&h.dense())?;
    let gs = gibbs(&spec, w.beta)?;
    let rho_minus = discard_region(&gs, a)?;
    let full = RegionDynamics::new(h, a, w, None, backend)?;
    let full_out: Vec<Mat<c64>> =
        times.iter().map(|&t| full.time_average(&rho_minus, t, Picture::Schrodinger)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(times.len() * ells.len());
    for &ell in ells {
        if ell == 0 {
            return Err(Error::InvalidParameter("ell must be >= 1".into()));
        }
        let saturated = !a.is_empty() && truncate_patch(h, a, ell)?.terms().len() == h.terms().len();
        let trunc = if saturated { None } else { Some(RegionDynamics::new(h, a, w, Some(ell), backend)?) };
        let support = trunc.as_ref().map_or(full.support().len(), |d| d.support().len());
        for (k, &t) in times.iter().enumerate() {
            let out = match &trunc {
                None => full_out[k].clone(),
                Some(d) => d.time_average(&rho_minus, t, Picture::Schrodinger)?,
            };
            rows.push(TruncationRow {
                t,
                ell,
                err_full: trace_distance(&full_out[k], &gs.rho),
                err_trunc: trace_distance(&out, &gs.rho),
                map_gap: trace_distance(&full_out[k], &out),
                support,
            });
        }
    }
    Ok(rows)
}

pub fn truncated_recovery_error(s: &RecoveryScenario) -> Result<Vec<TruncationRow>> {
    s.validate()?;
    let ell = s.ell.ok_or_else(|| Error::InvalidParameter("truncated recovery needs ell".into()))?;
    truncation_scan(&s.h, &s.weight, &s.region, &s.times, &[ell], s.backend)
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchingResult {
    #[serde(skip)]
    pub state: Mat<c64>,
    /// ‖state - ρ_β‖_1
    pub err: f64,
    /// ‖I/2^n - ρ_β‖_1
    pub initial_err: f64,
    /// regions discarded and recovered, in sweep order
    pub patches: Vec<Region>,
    /// error after each patch update, in sweep order
    pub trace: Vec<f64>,
}

/// Largest chain the patching toy accepts.
pub const MAX_PATCHING_QUBITS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchingOptions {
    pub patch_size: usize,
    pub ell: usize,
    pub t: f64,
    /// full left-to-right sweeps
    pub rounds: usize,
    /// already-prepared sites to the left of each new block that are
    /// discarded and recovered with it
    pub buffer: usize,
    pub backend: Backend,
}

impl PatchingOptions {
    pub fn new(patch_size: usize, ell: usize, t: f64) -> Self {
        PatchingOptions { patch_size, ell, t, rounds: 1, buffer: 0, backend: Backend::Spectral }
    }
}

/// Start from I/2^n and sweep the blocks [0, p), [p, 2p), ... left to right.
/// Block k is updated by F = R_{A,t,ℓ} ∘ (τ_A ⊗ Tr_A), where A is the block
/// plus `buffer` sites to its left. L_{A,ℓ} uses the terms of H inside A_+,
/// the sites within ℓ hops of A in the region prepared so far.
pub fn patching_prepare(h: &Hamiltonian, w: &Weight, o: &PatchingOptions) -> Result<PatchingResult> {
    let n = h.n();
    if n > MAX_PATCHING_QUBITS {
        return Err(Error::Capacity { what: format!("patching on {n} qubits"), limit: MAX_PATCHING_QUBITS });
    }
    if o.patch_size == 0 || o.ell == 0 || o.rounds == 0 {
        return Err(Error::InvalidParameter("patch size, ell and rounds must be >= 1".into()));
    }
    if !(o.t > 0.0) {
        return Err(Error::InvalidParameter(format!("time average needs t > 0, got {}", o.t)));
    }
    let spec = hermitian_eig(&h.dense())?;
    let gs = gibbs(&spec, w.beta)?;
    let mut patches = Vec::new();
    let mut maps = Vec::new();
    for round in 0..o.rounds {
        for s in (0..n).step_by(o.patch_size) {
            let e = (s + o.patch_size).min(n);
            let a = Region::new(s.saturating_sub(o.buffer)..e);
            let built = if round == 0 { Region::new(0..e) } else { Region::all(n) };
            let hx = restrict_terms(h, &built)?;
            let plus = site_ball(&hx, &a, o.ell);
            let hp = restrict_terms(&hx, &plus)?;
            maps.push(RegionDynamics::new(&hp, &a, w, None, o.backend)?);
            patches.push(a);
        }
    }
    let mut state = maximally_mixed(1 << n);
    let initial_err = trace_distance(&state, &gs.rho);
    let mut trace = Vec::with_capacity(patches.len());
    for (a, m) in patches.iter().zip(&maps) {
        let cut = discard(&state, a, n)?;
        state = m.time_average(&cut, o.t, Picture::Schrodinger)?;
        trace.push(trace_distance(&state, &gs.rho));
    }
    Ok(PatchingResult { err: trace_distance(&state, &gs.rho), state, initial_err, patches, trace })
}

/// Sites within `radius` hops of `a` in the interaction graph, where two
/// sites are adjacent when some term acts on both.
pub fn site_ball(h: &Hamiltonian, a: &Region, radius: usize) -> Region {
    let mut reached = a.clone();
    for _ in 0..radius {
        let next = Region::new(
            h.terms()
                .iter()
                .filter(|t| reached.intersects(&t.support))
                .flat_map(|t| t.support.iter().copied())
                .chain(reached.sites().iter().copied()),
        );
        if next == reached {
            break;
        }
        reached = next;
    }
    reached
}

/// Terms of `h` lying entirely inside `sites`, on the same register.
pub fn restrict_terms(h: &Hamiltonian, sites: &Region) -> Result<Hamiltonian> {
    let terms = h.terms().iter().filter(|t| t.support.iter().all(|&q| sites.contains(q))).cloned().collect();
    Hamiltonian::new(h.n(), terms)
}

/// Smallest eigenvalue of the Choi matrix Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|).
pub fn choi_min_eigenvalue(phi: &SuperOp) -> f64 {
    let d = phi.dim();
    let mut c = Mat::<c64>::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let mut e = Mat::<c64>::zeros(d, d);
            e[(i, j)] = c64::new(1.0, 0.0);
            let y = phi.apply(&e);
            for b in 0..d {
                for a in 0..d {
                    c[(i * d + a, j * d + b)] = y[(a, b)];
                }
            }
        }
    }
    crate::linalg::ops::eigvalsh(&c).into_iter().fold(f64::INFINITY, f64::min)
}

/// ‖R[ρ] - ρ‖_1 for a map and a state.
pub fn fixed_point_error(phi: &SuperOp, rho: &Mat<c64>) -> f64 {
    trace_norm(&(&phi.apply(rho) - rho))
}
