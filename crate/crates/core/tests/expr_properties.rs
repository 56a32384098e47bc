use std::collections::BTreeMap;

use jetmech::{parse, Bindings, Expr, JetPoint, JetVar, Variable};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("r0".to_string()),
        Just("r1".to_string()),
        Just("r2".to_string()),
        Just("t".to_string()),
        Just("a".to_string()),
        (-2.0..2.0f64).prop_map(|c| format!("{c:.3}")),
    ]
}

/// Random expressions that are finite for jet values in `[-1, 1]` and `a > 0`.
fn expression() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({x} + {y})")),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({x} - {y})")),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({x} * {y})")),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({x} / (2 + cos({y})))")),
            inner.clone().prop_map(|x| format!("sin({x})")),
            inner.clone().prop_map(|x| format!("exp(0.3*sin({x}))")),
            (inner.clone(), 2..4i32).prop_map(|(x, n)| format!("({x})^{n}")),
            inner.prop_map(|x| format!("a^(0.5*sin({x}))")),
        ]
    })
}

#[derive(Debug, Clone)]
struct Point {
    t: f64,
    a: f64,
    derivs: Vec<f64>,
}

impl Point {
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("a".to_string(), self.a)])
    }

    fn jet(&self) -> JetPoint {
        JetPoint::scalar(self.t, &self.derivs).unwrap()
    }

    /// The point moved by `dt` along the polynomial path it seeds.
    fn advanced(&self, dt: f64) -> Point {
        let derivs = (0..self.derivs.len())
            .map(|k| {
                let mut term = 1.0;
                let mut sum = 0.0;
                for (j, v) in self.derivs[k..].iter().enumerate() {
                    if j > 0 {
                        term *= dt / j as f64;
                    }
                    sum += v * term;
                }
                sum
            })
            .collect();
        Point { t: self.t + dt, a: self.a, derivs }
    }

    fn with(&self, var: &Variable, delta: f64) -> Point {
        let mut p = self.clone();
        match var {
            Variable::Jet(v) => p.derivs[v.order] += delta,
            Variable::Param(_) => p.a += delta,
            Variable::Time => p.t += delta,
        }
        p
    }

    fn coordinate(&self, var: &Variable) -> f64 {
        match var {
            Variable::Jet(v) => self.derivs[v.order],
            Variable::Param(_) => self.a,
            Variable::Time => self.t,
        }
    }

    fn eval(&self, e: &Expr) -> f64 {
        e.evaluate(&Bindings::new(&self.params(), Some(&self.jet()))).unwrap()
    }
}

fn point() -> impl Strategy<Value = Point> {
    (-1.0..1.0f64, 0.5..1.5f64, prop::collection::vec(-1.0..1.0f64, 6))
        .prop_map(|(t, a, derivs)| Point { t, a, derivs })
}

fn variables() -> Vec<Variable> {
    vec![
        Variable::Jet(JetVar::plain(0)),
        Variable::Jet(JetVar::plain(1)),
        Variable::Jet(JetVar::plain(2)),
        Variable::Time,
        Variable::Param("a".into()),
    ]
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_are_linear(
        x in expression(),
        y in expression(),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
        p in point(),
    ) {
        let (ex, ey) = (parse(&x).unwrap(), parse(&y).unwrap());
        let combo = Expr::Const(alpha) * ex.clone() + Expr::Const(beta) * ey.clone();
        let scale = 1.0 + p.eval(&ex).abs() + p.eval(&ey).abs();
        for var in variables() {
            let lhs = p.eval(&combo.partial(&var));
            let rhs = alpha * p.eval(&ex.partial(&var)) + beta * p.eval(&ey.partial(&var));
            prop_assert!(rel(lhs, rhs, scale) < 1e-10, "{var:?}: {lhs} vs {rhs}");
        }
        let lhs = p.eval(&combo.time_derivative());
        let rhs = alpha * p.eval(&ex.time_derivative()) + beta * p.eval(&ey.time_derivative());
        prop_assert!(rel(lhs, rhs, scale) < 1e-10, "d/dt: {lhs} vs {rhs}");
    }

    #[test]
    fn mixed_partials_commute(x in expression(), points in prop::collection::vec(point(), 100)) {
        let e = parse(&x).unwrap();
        let vars = variables();
        for (i, u) in vars.iter().enumerate() {
            for v in &vars[i + 1..] {
                let uv = e.partial(u).partial(v);
                let vu = e.partial(v).partial(u);
                for p in &points {
                    let (a, b) = (p.eval(&uv), p.eval(&vu));
                    prop_assert!(rel(a, b, 1.0) < 1e-10, "{u:?},{v:?}: {a} vs {b} for {x}");
                }
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences(
        x in expression(),
        points in prop::collection::vec(point(), 20),
    ) {
        let e = parse(&x).unwrap();
        let dt = e.time_derivative();
        for p in &points {
            let scale = p.eval(&e).abs();
            for var in variables() {
                let h = 1e-6 * p.coordinate(&var).abs().max(1.0);
                let fd = (p.with(&var, h).eval(&e) - p.with(&var, -h).eval(&e)) / (2.0 * h);
                let sym = p.eval(&e.partial(&var));
                prop_assert!(rel(sym, fd, 1e-3 * scale.max(1.0)) < 1e-6, "{var:?}: {sym} vs {fd} for {x}");
            }
            let h = 1e-6;
            let fd = (p.advanced(h).eval(&e) - p.advanced(-h).eval(&e)) / (2.0 * h);
            let sym = p.eval(&dt);
            prop_assert!(rel(sym, fd, 1e-3 * scale.max(1.0)) < 1e-6, "d/dt: {sym} vs {fd} for {x}");
        }
    }

    #[test]
    fn render_round_trips(x in expression(), p in point()) {
        let e = parse(&x).unwrap();
        let text = e.render();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back.render(), text);
        prop_assert_eq!(p.eval(&back).to_bits(), p.eval(&e).to_bits());
    }
}
