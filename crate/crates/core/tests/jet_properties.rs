use jetmech::integrate::least_squares;
use jetmech::JetPoint;
use proptest::prelude::*;

fn jet(dim: usize, order: usize) -> impl Strategy<Value = JetPoint> {
    (-5.0..5.0f64, prop::collection::vec(prop::collection::vec(-2.0..2.0f64, dim), order + 1))
        .prop_map(|(t, derivs)| JetPoint::new(t, derivs).unwrap())
}

fn sized_jet() -> impl Strategy<Value = JetPoint> {
    (1usize..=3, 0usize..=5).prop_flat_map(|(dim, order)| jet(dim, order))
}

proptest! {
    #[test]
    fn propagation_composes(j in sized_jet(), dt1 in -1.0..1.0f64, dt2 in -1.0..1.0f64) {
        let m = j.order();
        let direct = j.taylor_propagate(dt1 + dt2, m).unwrap();
        let stepped = j.taylor_propagate(dt1, m).unwrap().taylor_propagate(dt2, m).unwrap();
        let scale: f64 = j.derivs().iter().flatten().map(|v| v.abs()).sum::<f64>().max(1.0);
        for (a, b) in direct.derivs().iter().flatten().zip(stepped.derivs().iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(scale), "{a} vs {b}");
        }
        prop_assert!((direct.t() - stepped.t()).abs() < 1e-12);
    }

    #[test]
    fn orders_above_propagation_are_frozen(j in sized_jet(), dt in -1.0..1.0f64) {
        for m in 0..=j.order() {
            let moved = j.taylor_propagate(dt, m).unwrap();
            prop_assert_eq!(&moved.derivs()[m + 1..], &j.derivs()[m + 1..]);
        }
    }

    #[test]
    fn zero_step_and_truncation(j in sized_jet()) {
        let same = j.taylor_propagate(0.0, j.order()).unwrap();
        prop_assert_eq!(same.derivs(), j.derivs());
        let top = j.truncate(j.order()).unwrap();
        prop_assert_eq!(top.derivs(), j.derivs());
        let pos = j.truncate(0).unwrap();
        prop_assert_eq!(pos.order(), 0);
        prop_assert_eq!(pos.position(), j.position());
    }
}

/// Jet of `sin(t)` through order `m` at `t`.
fn sine(t: f64, m: usize) -> JetPoint {
    let values: Vec<f64> = (0..=m).map(|k| (t + k as f64 * std::f64::consts::FRAC_PI_2).sin()).collect();
    JetPoint::scalar(t, &values).unwrap()
}

fn error_slope(order: usize, steps: &[f64]) -> f64 {
    let t = 0.7;
    let start = sine(t, order);
    let points: Vec<(f64, f64)> = steps
        .iter()
        .map(|&dt| {
            let err = (start.taylor_propagate(dt, order).unwrap().position()[0] - (t + dt).sin()).abs();
            (dt.ln(), err.ln())
        })
        .collect();
    least_squares(&points).unwrap().0
}

#[test]
fn truncation_error_order() {
    let decades = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    for order in 1..=3 {
        let slope = error_slope(order, &decades);
        assert!((slope - (order + 1) as f64).abs() < 0.2, "order {order}: {slope}");
    }
    // Higher orders reach rounding error before dt = 1e-3.
    let slope = error_slope(4, &[1e-1, 5e-2, 2e-2, 1e-2]);
    assert!((slope - 5.0).abs() < 0.2, "order 4: {slope}");
}
