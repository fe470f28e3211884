use std::f64::consts::PI;

use qctrl_core::linalg::{basis_vector, op_norm};
use qctrl_core::models::{molecule_mixed_state, molecule_steer_to_ground};
use qctrl_core::propagate::{density_evolve, fidelity, propagate};
use qctrl_core::spectra::{find_chain, Chain};
use qctrl_core::synthesis::{nu_limit, synth_permutation, synth_transfer};
use qctrl_core::{example_4x4, infinite_well, DensityMatrix, SynthesisParams, SystemSpec, TransferReport, WellParams};

fn well6() -> (SystemSpec, Chain) {
    let spec = infinite_well(&WellParams::new(6)).unwrap();
    let chain = Chain::from_edges(&spec, &[(1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]).unwrap();
    (spec, chain)
}

fn simulated_fidelity(spec: &SystemSpec, eta: f64) -> (f64, TransferReport) {
    let (_, chain) = well6();
    let params = SynthesisParams::for_spec(spec, eta, 6);
    let (u, report) = synth_transfer(spec, &chain, 1, 2, &params).unwrap();
    assert!(u.values_within(0.0, spec.delta));
    let (traj, _) = propagate(&u, spec, 6, &basis_vector(6, 0)).unwrap();
    let fid = fidelity(&basis_vector(6, 1), traj.states.last().unwrap());
    (fid, report)
}

#[test]
fn well_first_transfer() {
    let (spec, _) = well6();
    let (fid, report) = simulated_fidelity(&spec, 0.05);
    assert!(fid >= 0.9, "{fid}");
    assert!((fid - report.fidelities[0]).abs() < 1e-9);
    assert!(report.l1_lower <= report.l1_realized);
    assert!((report.l1_upper - 45.0 * PI.powi(3) / 64.0).abs() < 1e-9);
    assert!((report.l1_lower - 5.5323).abs() < 1e-3 * 5.5323);
    let (finer, _) = simulated_fidelity(&spec, 0.02);
    assert!(finer >= fid, "{finer} < {fid}");
}

#[test]
fn ex4_two_edge_transfer() {
    let spec = example_4x4();
    let chain = find_chain(&spec).unwrap();
    let params = SynthesisParams::for_spec(&spec, 0.05, 4);
    let (u, report) = synth_transfer(&spec, &chain, 1, 4, &params).unwrap();
    assert_eq!(report.edges, vec![(1, 2), (2, 4)]);
    let (traj, _) = propagate(&u, &spec, 4, &basis_vector(4, 0)).unwrap();
    let fid = fidelity(&basis_vector(4, 3), traj.states.last().unwrap());
    assert!(fid >= 0.85, "{fid}");
}

#[test]
fn density_exchange() {
    let (spec, chain) = well6();
    let params = SynthesisParams::for_spec(&spec, 0.05, 6);
    let (u, _) = synth_permutation(&spec, &chain, &[2, 1], &params).unwrap();
    let w = [1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0, 0.0, 0.0];
    let rho0 = DensityMatrix::diagonal(&w).unwrap();
    let target = DensityMatrix::diagonal(&[w[1], w[0], 0.0, 0.0, 0.0, 0.0]).unwrap();
    let rho = density_evolve(&rho0, &u, &spec, 6).unwrap();
    let err = op_norm(&(&rho.rho - &target.rho));
    assert!(err <= 0.2, "{err}");
    let (mut a, mut b) = (rho0.eigenvalues(), rho.eigenvalues());
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
}

#[test]
fn molecule_mixed_state_reaches_ground() {
    let out = molecule_steer_to_ground(&molecule_mixed_state(5), 0.2, 8).unwrap();
    assert!(out.fidelity >= 0.8, "{}", out.fidelity);
    assert!(!out.rounds.is_empty());
}

#[test]
fn swap_duration_formula() {
    let (spec, chain) = well6();
    let s = qctrl_core::synthesis::sigma_swap(&spec, &chain, (1, 2)).unwrap();
    let expect = 9.0 * PI.powi(3) / (32.0 * nu_limit());
    assert!((s.total_duration() - expect).abs() < 1e-12 * expect);
}

#[test]
fn spec_json_round_trip() {
    for spec in [example_4x4(), well6().0, infinite_well(&WellParams::new(5).with_eta(0.3).exact(true)).unwrap()] {
        let text = spec.to_json();
        let back = SystemSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn report_json_round_trip() {
    let spec = example_4x4();
    let chain = find_chain(&spec).unwrap();
    let params = SynthesisParams::for_spec(&spec, 0.2, 4);
    let (_, report) = synth_transfer(&spec, &chain, 1, 2, &params).unwrap();
    let back: TransferReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
}
