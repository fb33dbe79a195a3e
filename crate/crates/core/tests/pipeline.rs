//! End-to-end paths through the public API on small models.

use dbgibbs::linalg::gibbs::gibbs;
use dbgibbs::linalg::ops::{eigvalsh, max_abs, trace};
use dbgibbs::linalg::{hermitian_eig, trace_distance, Backend, Picture};
use dbgibbs::lindblad::{assemble, GeneratorSnapshot, Weight};
use dbgibbs::markov::{cmi_decay_scan, cmi_recovery_bound};
use dbgibbs::recovery::{discard_region, recovery_error_curve, truncated_recovery_error, RecoveryScenario, RegionDynamics};
use dbgibbs::spinsys::{build_random_local, build_tfim_chain, single_site_jumps, Hamiltonian, Region};

#[test]
fn spectral_and_ode_curves_agree_on_three_qubits() {
    let h = build_tfim_chain(3, 1.0, 0.9, false).unwrap();
    let w = Weight::metropolis(1.0, 1.0).unwrap();
    let times = vec![0.5, 5.0, 50.0];
    let s = RecoveryScenario::new(h, w, Region::new([1]), times).unwrap();
    let a = recovery_error_curve(&s).unwrap();
    let b = recovery_error_curve(&s.clone().with_backend(Backend::Ode)).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!((x.err - y.err).abs() < 1e-6, "{} vs {}", x.err, y.err);
        assert!(x.dirichlet <= x.bound_2_over_t + 1e-9);
        assert!(x.fixed_point_defect < 1e-8);
    }
    assert!(a.rows[2].err < a.rows[0].err);
}

#[test]
fn truncation_at_large_ell_matches_full() {
    let h = build_tfim_chain(4, 1.0, 0.8, false).unwrap();
    let w = Weight::metropolis(1.0, 1.0).unwrap();
    let s = RecoveryScenario::new(h, w, Region::new([0]), vec![10.0]).unwrap().with_ell(10).unwrap();
    let rows = truncated_recovery_error(&s).unwrap();
    assert_eq!(rows[0].map_gap, 0.0);
    assert_eq!(rows[0].err_full, rows[0].err_trunc);
}

#[test]
fn snapshot_and_hamiltonian_roundtrip() {
    let h = build_random_local(3, 2, 4, 11).unwrap();
    let back = Hamiltonian::from_json(&h.to_json()).unwrap();
    assert!(max_abs(&(&h.dense() - &back.dense())) == 0.0);
    let spec = hermitian_eig(&h.dense()).unwrap();
    let g = assemble(&spec, &single_site_jumps(&Region::new([0, 2])).unwrap(), &Weight::metropolis(0.7, 1.4).unwrap())
        .unwrap();
    let snap = g.snapshot().unwrap();
    let again = GeneratorSnapshot::from_json(&snap.to_json()).unwrap();
    assert!(max_abs(&(&snap.dissipative_matrix().unwrap() - &again.dissipative_matrix().unwrap())) == 0.0);
}

#[test]
fn recovery_output_is_a_state_closer_to_gibbs() {
    let h = build_tfim_chain(3, 1.0, 0.5, false).unwrap();
    let w = Weight::metropolis(2.0, 0.5).unwrap();
    let spec = hermitian_eig(&h.dense()).unwrap();
    let gs = gibbs(&spec, w.beta).unwrap();
    let a = Region::new([2]);
    let minus = discard_region(&gs, &a).unwrap();
    let dynm = RegionDynamics::new(&h, &a, &w, None, Backend::Spectral).unwrap();
    let out = dynm.time_average(&minus, 100.0, Picture::Schrodinger).unwrap();
    assert!((trace(&out).re - 1.0).abs() < 1e-10);
    assert!(eigvalsh(&out).iter().all(|&l| l > -1e-10));
    assert!(trace_distance(&out, &gs.rho) < trace_distance(&minus, &gs.rho));
}

#[test]
fn cmi_bound_consistent_with_scan() {
    let scan = cmi_decay_scan(&build_tfim_chain(6, 1.0, 1.0, false).unwrap(), 1.0, 1).unwrap();
    assert_eq!(scan.rows.len(), 4);
    assert!(scan.rows.iter().all(|r| r.qcmi >= -1e-10));
    let b = cmi_recovery_bound(0.0, 4);
    assert_eq!(b.value, 0.0);
}
