use std::f64::consts::TAU;

use jetmech::integrate::{compare_taylor, conservation_report, integrate_eom, IntegratorSpec};
use jetmech::{derive_eom, Convention, JetPoint, LagrangianModel};

fn harmonic_run(spec: IntegratorSpec, t1: f64) -> jetmech::Trajectory {
    let l = LagrangianModel::harmonic(1.0);
    let sys = derive_eom(&l).unwrap();
    let init = JetPoint::scalar(0.0, &[1.0, 0.0]).unwrap();
    integrate_eom(&sys, &init, t1, &spec).unwrap()
}

#[test]
fn free_particle_moves_linearly() {
    let sys = derive_eom(&LagrangianModel::free_particle()).unwrap();
    let init = JetPoint::scalar(0.0, &[0.0, 1.0]).unwrap();
    let traj = integrate_eom(&sys, &init, 5.0, &IntegratorSpec::rk4(0.01)).unwrap();
    let end = traj.last().unwrap();
    assert!((end.t() - 5.0).abs() < 1e-12);
    assert!((end.position()[0] - 5.0).abs() < 1e-10);
}

#[test]
fn harmonic_returns_after_one_period() {
    let traj = harmonic_run(IntegratorSpec::dopri5(1e-9, 1e-12), TAU);
    let end = traj.last().unwrap();
    assert!((end.position()[0] - 1.0).abs() < 1e-6);
    assert!(end.derivs()[1][0].abs() < 1e-6);
}

#[test]
fn pais_uhlenbeck_two_frequency_solution() {
    // r(0)=1 and r'(0)=r''(0)=r'''(0)=0 give r = (w2² cos w1 t − w1² cos w2 t)/(w2² − w1²)
    let (w1, w2) = (1.0_f64, 2.0_f64);
    let sys = derive_eom(&LagrangianModel::pais_uhlenbeck(w1, w2)).unwrap();
    let init = JetPoint::scalar(0.0, &[1.0, 0.0, 0.0, 0.0]).unwrap();
    let traj = integrate_eom(&sys, &init, TAU, &IntegratorSpec::dopri5(1e-11, 1e-13)).unwrap();
    for s in traj.samples() {
        let t = s.t();
        let exact = (w2 * w2 * (w1 * t).cos() - w1 * w1 * (w2 * t).cos()) / (w2 * w2 - w1 * w1);
        assert!((s.position()[0] - exact).abs() < 1e-5, "t={t}");
    }
}

#[test]
fn standard_hamiltonian_is_conserved_and_literal_is_not() {
    let traj = harmonic_run(IntegratorSpec::dopri5(1e-10, 1e-12), 10.0 * TAU);
    let l = LagrangianModel::harmonic(1.0);
    let std = conservation_report(&traj, &l, Convention::Standard).unwrap();
    assert!(std.max_abs_drift < 1e-8, "{}", std.max_abs_drift);
    assert!(std.conserved);
    let lit = conservation_report(&traj, &l, Convention::Paper).unwrap();
    assert!(lit.max_abs_drift > 0.1, "{}", lit.max_abs_drift);
    assert!(!lit.conserved);
}

#[test]
fn conservation_needs_two_samples() {
    let traj = jetmech::Trajectory::new(vec![], "none").unwrap();
    assert!(conservation_report(&traj, &LagrangianModel::harmonic(1.0), Convention::Standard)
        .is_err());
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let steps = [0.1, 0.05, 0.025, 0.0125];
    let t1 = 2.0;
    let points: Vec<(f64, f64)> = steps
        .iter()
        .map(|&h| {
            let traj = harmonic_run(IntegratorSpec::rk4(h), t1);
            let err = (traj.last().unwrap().position()[0] - t1.cos()).abs();
            (h.ln(), err.ln())
        })
        .collect();
    let (slope, _) = jetmech::integrate::least_squares(&points).unwrap();
    assert!((slope - 4.0).abs() < 0.2, "{slope}");
}

#[test]
fn forward_then_backward_returns() {
    let l = LagrangianModel::pais_uhlenbeck(1.0, 2.0);
    let sys = derive_eom(&l).unwrap();
    let init = JetPoint::scalar(0.0, &[1.0, 0.3, -0.2, 0.1]).unwrap();
    let spec = IntegratorSpec::dopri5(1e-10, 1e-12);
    let fwd = integrate_eom(&sys, &init, 3.0, &spec).unwrap();
    let end = fwd.last().unwrap().truncate(3).unwrap();
    let back = integrate_eom(&sys, &end, 0.0, &spec).unwrap();
    let home = back.first().unwrap();
    for k in 0..4 {
        assert!((home.derivs()[k][0] - init.derivs()[k][0]).abs() < 1e-6);
    }
}

#[test]
fn taylor_consistency_slopes() {
    let traj = harmonic_run(IntegratorSpec::rk4(TAU / 4000.0), TAU);
    let free = {
        let sys = derive_eom(&LagrangianModel::free_particle()).unwrap();
        let init = JetPoint::scalar(0.0, &[0.5, -2.0]).unwrap();
        integrate_eom(&sys, &init, 4.0, &IntegratorSpec::rk4(0.01)).unwrap()
    };
    let table = compare_taylor(&free, 2).unwrap();
    assert!(table.rows.iter().all(|r| r.max_error < 1e-12));

    let sys = derive_eom(&LagrangianModel::harmonic(1.0)).unwrap();
    let ext = sys.extend_trajectory(&traj, 4).unwrap();
    for order in [2, 4] {
        let table = compare_taylor(&ext, order).unwrap();
        let slope = table.slope.unwrap();
        assert!((slope - (order + 1) as f64).abs() < 0.2, "order {order}: {slope}");
    }
}
