//! One function per experiment kind. Each returns rows with the fixed column
//! set of `columns`.

use dbgibbs::bounds::{double_commutator_identity, gap_decay_check, holder_loose_pair, kms_vs_operator_norm, lr_truncation_check};
use dbgibbs::dirichlet::{dirichlet_bilinear, dirichlet_commutator_integral, dirichlet_direct, DirichletKernels};
use dbgibbs::linalg::gibbs::gibbs;
use dbgibbs::linalg::hermitian_eig;
use dbgibbs::linalg::ops::{embed, random_complex, random_contraction};
use dbgibbs::lindblad::{assemble, transition_coefficients};
use dbgibbs::markov::cmi_decay_scan;
use dbgibbs::recovery::{patching_prepare, recovery_error_curve, PatchingOptions, RecoveryScenario};
use dbgibbs::spinsys::{pauli_string, single_site_jumps, Pauli};
use dbgibbs::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Experiment, ModelKind, ScenarioConfig};
use crate::record::{Cell, ResultRecord};

/// CSV columns per experiment, in order.
pub fn columns(e: Experiment) -> &'static [&'static str] {
    match e {
        Experiment::Verify => &["scenario_id", "check", "value", "tolerance"],
        Experiment::Recovery => &["scenario_id", "t", "ell", "err_trace", "dirichlet", "bound_2_over_t"],
        Experiment::Cmi => &["scenario_id", "dist_AC", "qcmi_nats", "fit_slope", "fit_r2"],
        Experiment::Lr => &["scenario_id", "t", "ell", "lhs", "bound"],
        Experiment::Dirichlet => &["scenario_id", "sample", "direct", "bilinear", "integral"],
        Experiment::Patching => &["scenario_id", "t", "ell", "patch_size", "err_trace"],
        Experiment::Gap => &["scenario_id", "t", "sample", "lhs", "bound"],
    }
}

/// Largest register for the commutator-integral quadrature.
pub const MAX_DIRICHLET_QUBITS: usize = 3;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn run(c: &ScenarioConfig) -> Result<Vec<ResultRecord>> {
    let id = c.id();
    let rec = |values: Vec<Cell>, pass: Option<bool>| ResultRecord::new(&id, c.experiment, values, pass);
    match c.experiment {
        Experiment::Verify => verify(c, rec),
        Experiment::Recovery => {
            let mut s = RecoveryScenario::new(c.hamiltonian()?, c.weight()?, c.region_set(), c.time_list())?
                .with_backend(c.backend())
                .with_seed(c.seed);
            if let Some(l) = c.ell {
                s = s.with_ell(l)?;
            }
            let curve = recovery_error_curve(&s)?;
            Ok(curve
                .rows
                .iter()
                .map(|r| {
                    let ok = r.dirichlet <= r.bound_2_over_t + 1e-9 && r.fixed_point_defect <= 1e-8;
                    rec(
                        vec![Cell::Float(r.t), Cell::opt_int(r.ell), Cell::Float(r.err), Cell::Float(r.dirichlet), Cell::Float(r.bound_2_over_t)],
                        Some(ok),
                    )
                })
                .collect())
        }
        Experiment::Cmi => {
            let scan = cmi_decay_scan(&c.hamiltonian()?, c.beta, c.region.len())?;
            let commuting = c.model.kind == ModelKind::Ising;
            let (slope, r2) = scan.fit.map_or((Cell::Empty, Cell::Empty), |f| (Cell::Float(f.slope), Cell::Float(f.r2)));
            Ok(scan
                .rows
                .iter()
                .map(|r| {
                    rec(
                        vec![Cell::Int(r.dist as i64), Cell::Float(r.qcmi), slope.clone(), r2.clone()],
                        commuting.then_some(r.qcmi.abs() <= 1e-9),
                    )
                })
                .collect())
        }
        Experiment::Lr => {
            let h = c.hamiltonian()?;
            let a = c.region_set();
            let op = embed(&pauli_string(&vec![Pauli::X; a.len()]), a.sites(), h.n());
            let ell = c.ell.unwrap_or(1);
            let (_, rows) = lr_truncation_check(&h, &a, &op, ell, &c.time_list())?;
            Ok(rows
                .iter()
                .map(|r| {
                    rec(
                        vec![Cell::Float(r.t), Cell::Int(ell as i64), Cell::Float(r.lhs), Cell::Float(r.bound)],
                        Some(r.lhs <= r.bound * (1.0 + 1e-10)),
                    )
                })
                .collect())
        }
        Experiment::Dirichlet => {
            let h = c.hamiltonian()?;
            let n = h.n();
            if n > MAX_DIRICHLET_QUBITS {
                return Err(Error::Capacity { what: format!("Dirichlet quadrature on {n} qubits"), limit: MAX_DIRICHLET_QUBITS });
            }
            let w = c.weight()?;
            let spec = hermitian_eig(&h.dense())?;
            let gs = gibbs(&spec, w.beta)?;
            let jumps = single_site_jumps(&c.region_set())?;
            let dense = jumps.dense(n);
            let g = assemble(&spec, &jumps, &w)?;
            let tc = transition_coefficients(&spec, &w)?;
            let k = DirichletKernels::new(w, spec.norm);
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            let mut out = Vec::new();
            for i in 0..c.samples.unwrap_or(3) {
                let x = random_complex(1 << n, 1 << n, &mut rng);
                let d = dirichlet_direct(&g, &gs, &x);
                let b = dirichlet_bilinear(&spec, &gs, &dense, &tc, &x, &x)?.re;
                let q = dirichlet_commutator_integral(&spec, &gs, &dense, &k, &x)?.value;
                let ok = rel(d, b) <= 1e-7 && rel(d, q) <= 1e-5;
                out.push(rec(vec![Cell::Int(i as i64), Cell::Float(d), Cell::Float(b), Cell::Float(q)], Some(ok)));
            }
            Ok(out)
        }
        Experiment::Patching => {
            let h = c.hamiltonian()?;
            let w = c.weight()?;
            let ell = c.ell.unwrap_or(1);
            let p = c.patch_size.unwrap_or(2);
            let mut out = Vec::new();
            for t in c.time_list() {
                let mut o = PatchingOptions::new(p, ell, t);
                o.rounds = c.rounds.unwrap_or(1);
                o.buffer = c.buffer.unwrap_or(0);
                o.backend = c.backend();
                let r = patching_prepare(&h, &w, &o)?;
                out.push(rec(vec![Cell::Float(t), Cell::Int(ell as i64), Cell::Int(p as i64), Cell::Float(r.err)], None));
            }
            Ok(out)
        }
        Experiment::Gap => {
            let h = c.hamiltonian()?;
            let n = h.n();
            let w = c.weight()?;
            let spec = hermitian_eig(&h.dense())?;
            let gs = gibbs(&spec, w.beta)?;
            let g = assemble(&spec, &single_site_jumps(&c.region_set())?, &w)?;
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            let count = c.samples.unwrap_or(20);
            let xs: Vec<_> = (0..count).map(|_| random_complex(1 << n, 1 << n, &mut rng)).collect();
            let times = c.time_list();
            let (lambda, rows) = gap_decay_check(&g, &gs, &xs, &times)?;
            if lambda.is_none() {
                return Err(Error::InvalidParameter("generator is gapless; gap experiment needs a gapped instance".into()));
            }
            Ok(rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    rec(
                        vec![Cell::Float(r.t), Cell::Int((i / times.len()) as i64), Cell::Float(r.lhs), Cell::Float(r.bound)],
                        Some(r.lhs <= r.bound + 1e-8),
                    )
                })
                .collect())
        }
    }
}

fn verify(c: &ScenarioConfig, rec: impl Fn(Vec<Cell>, Option<bool>) -> ResultRecord) -> Result<Vec<ResultRecord>> {
    let h = c.hamiltonian()?;
    let n = h.n();
    let w = c.weight()?;
    let spec = hermitian_eig(&h.dense())?;
    let gs = gibbs(&spec, w.beta)?;
    let region = c.region_set();
    let jumps = single_site_jumps(&region)?;
    let g = assemble(&spec, &jumps, &w)?;
    let tc = transition_coefficients(&spec, &w)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut holder = f64::NEG_INFINITY;
    let mut kms = f64::NEG_INFINITY;
    let mut bil = 0.0f64;
    for _ in 0..c.samples.unwrap_or(20) {
        let a = random_contraction(1 << n, &mut rng);
        let o = random_complex(1 << n, 1 << n, &mut rng);
        let (l, r) = holder_loose_pair(&gs, &a, &o);
        holder = holder.max((l - r) / r.max(1e-12));
        let (k, op) = kms_vs_operator_norm(&gs, &o);
        kms = kms.max((k - op) / op.max(1e-12));
        let d = dirichlet_direct(&g, &gs, &o);
        let b = dirichlet_bilinear(&spec, &gs, &jumps.dense(n), &tc, &o, &o)?.re;
        bil = bil.max(rel(d, b));
    }
    let checks = [
        ("detailed_balance", g.detailed_balance_residual(&gs)?, 1e-8),
        ("fixed_point", g.fixed_point_defect(&gs)?, 1e-8),
        ("double_commutator", double_commutator_identity(&gs.rho, &region, n)?, 1e-10),
        ("holder_loose", holder, 1e-10),
        ("kms_vs_operator_norm", kms, 1e-10),
        ("dirichlet_direct_vs_bilinear", bil, 1e-7),
    ];
    Ok(checks
        .iter()
        .map(|&(name, v, tol)| rec(vec![Cell::Str(name.into()), Cell::Float(v), Cell::Float(tol)], Some(v <= tol)))
        .collect())
}
