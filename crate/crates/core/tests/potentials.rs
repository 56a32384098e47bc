use std::collections::BTreeMap;
use std::f64::consts::TAU;

use jetmech::potentials::{series_coeffs_symbolic, shifted_series_coeffs, Regime};
use jetmech::{
    laplacian_residual, newtonian_comparison, orbit_simulate, parse, potential_force,
    potential_value, ExpVariant, IntegratorSpec, OrbitInit, PotentialModel,
};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn force_ratio_is_exponential(
        gm in 1e-3..1e3f64,
        k in 1e-6..1.0f64,
        x in 1e-3..10.0f64,
        raw in any::<bool>(),
    ) {
        let variant = if raw { ExpVariant::Raw } else { ExpVariant::Shifted };
        let r = k / x;
        let p = PotentialModel::exponential(gm, 1.0, k, variant).unwrap();
        let n = PotentialModel::newtonian(gm, 1.0).unwrap();
        let quotient = potential_force(&p, r).unwrap() / potential_force(&n, r).unwrap();
        prop_assert!(rel(quotient, x.exp()) < 1e-12);
    }

    #[test]
    fn raw_and_shifted_differ_by_gm_over_k(gm in 1e-3..1e3f64, k in 1e-3..1.0f64, x in 1e-3..5.0f64) {
        let r = k / x;
        let raw = PotentialModel::exponential(gm, 1.0, k, ExpVariant::Raw).unwrap();
        let shifted = PotentialModel::exponential(gm, 1.0, k, ExpVariant::Shifted).unwrap();
        let gap = potential_value(&raw, r).unwrap() - potential_value(&shifted, r).unwrap();
        let scale = potential_value(&raw, r).unwrap();
        prop_assert!((gap - gm / k).abs() <= 1e-12 * scale);
        prop_assert_eq!(potential_force(&raw, r).unwrap(), potential_force(&shifted, r).unwrap());
    }

    #[test]
    fn shifted_potential_approaches_newton(gm in 1e-3..1e3f64, k in 1e-30..1e-3f64, x in 1e-12..1e-6f64) {
        let r = k / x;
        let p = PotentialModel::exponential(gm, 1.0, k, ExpVariant::Shifted).unwrap();
        let newton = gm / r;
        let gap = (potential_value(&p, r).unwrap() - newton).abs() / newton;
        prop_assert!(gap <= 0.6 * x, "gap {gap:e} at k/r = {x:e}");
        let row = &newtonian_comparison(&p, &[r]).unwrap()[0];
        prop_assert_eq!(row.regime, Regime::NewtonianLimit);
    }

    #[test]
    fn truncated_series_matches_shifted_exponential(k in 1e-6..1.0f64, x in 1e-4..0.1f64) {
        let r = k / x;
        let coeffs = shifted_series_coeffs(k, 6);
        let factorial = |i: usize| (1..=i).map(|j| j as f64).product::<f64>();
        for (i, c) in coeffs.iter().enumerate() {
            prop_assert!(rel(*c, 1.0 / (factorial(i + 1) * k)) < 1e-14);
        }
        let series = PotentialModel::series(1.0, 1.0, k, coeffs).unwrap();
        let full = PotentialModel::exponential(1.0, 1.0, k, ExpVariant::Shifted).unwrap();
        let (s, f) = (potential_value(&series, r).unwrap(), potential_value(&full, r).unwrap());
        // Seven-term remainder x⁷/7! relative to x bounds the truncation gap.
        prop_assert!(rel(s, f) <= 1.1 * x.powi(6) / 5040.0 + 1e-14, "{s} vs {f}");
    }
}

#[test]
fn symbolic_coefficients_of_the_shifted_exponential() {
    for k in [1e-3, 0.5, 2.0] {
        let phi = parse("GM*(exp(k*u) - 1)/k").unwrap();
        let params = BTreeMap::from([("GM".to_string(), 3.0), ("k".to_string(), k)]);
        let symbolic = series_coeffs_symbolic(&phi, &params, 3.0, k, 6).unwrap();
        for (a, b) in symbolic.iter().zip(shifted_series_coeffs(k, 6)) {
            assert!(rel(*a, b) < 1e-10, "k = {k}: {a} vs {b}");
        }
    }
}

#[test]
fn laplacian_vanishes_only_for_newton() {
    for r in [0.3, 1.0, 7.0] {
        assert!(laplacian_residual(&parse("1/r").unwrap(), 0.5, r).unwrap().abs() < 1e-12);
        let exact = 0.5_f64 * 0.5 * (0.5_f64 / r).exp() / r.powi(4);
        let got = laplacian_residual(&parse("exp(k/r)").unwrap(), 0.5, r).unwrap();
        assert!(rel(got, exact) < 1e-12, "{got} vs {exact}");
    }
}

#[test]
fn orbits_conserve_energy_and_angular_momentum() {
    let spec = IntegratorSpec::dopri5(1e-10, 1e-12);
    let init = OrbitInit { position: [1.0, 0.0], velocity: [0.0, 1.1] };
    let newton = PotentialModel::newtonian(1.0, 1.0).unwrap();
    let exponential = PotentialModel::exponential(1.0, 1.0, 1e-2, ExpVariant::Shifted).unwrap();
    for p in [newton, exponential] {
        let run = orbit_simulate(&p, &init, 5.0 * TAU, &spec).unwrap();
        assert!(run.aborted.is_none());
        let orbits = 5.0 * TAU / run.stats.radial_period.unwrap();
        let s = &run.stats;
        assert!(s.energy_drift / orbits < 1e-7, "{}: energy {:e}", p.label(), s.energy_drift);
        assert!(s.angular_momentum_drift / orbits < 1e-9, "{}: L {:e}", p.label(), s.angular_momentum_drift);
    }
}
