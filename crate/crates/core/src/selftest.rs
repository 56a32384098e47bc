//! Deterministic invariant suite. Every check draws its random inputs from a
//! ChaCha stream derived from the run seed and the check index, so a run is
//! reproducible bit for bit and checks can execute in any order.

use std::collections::BTreeMap;
use std::f64::consts::{E, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action::{default_eps_sweep, stationarity_test, PerturbationSpec};
use crate::euler_lagrange::{derive_eom, Convention, Mechanics};
use crate::expr::{Bindings, Expr};
use crate::integrate::{compare_taylor, conservation_report, integrate_eom, IntegratorSpec};
use crate::jet::{JetPoint, Trajectory};
use crate::lagrangian::{ExpressionLagrangian, LagrangianModel};
use crate::potentials::{
    newtonian_comparison, orbit_simulate, potential_force, series_divergence_scan, ExpVariant,
    OrbitInit, PotentialKind, PotentialModel,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity compared against the bound.
    pub value: f64,
    pub bound: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

type CheckFn = fn(&mut ChaCha8Rng) -> CheckResult;

/// Names and entry points of every check, in report order.
pub fn checks() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("el-residual", el_residual_check),
        ("hamiltonian-conventions", hamiltonian_check),
        ("stationarity", stationarity_check),
        ("derivative-oracle", derivative_check),
        ("taylor-order", taylor_check),
        ("potential-limits", potential_check),
        ("series-divergence", series_check),
        ("orbit-circular", orbit_check),
    ]
}

/// Runs check `index` with its own stream.
pub fn run_check(seed: u64, index: usize) -> CheckResult {
    let (_, f) = checks()[index];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    f(&mut rng)
}

pub fn run_selftest(seed: u64) -> SelftestReport {
    let checks: Vec<CheckResult> = (0..checks().len()).map(|i| run_check(seed, i)).collect();
    assemble(seed, checks)
}

pub fn assemble(seed: u64, checks: Vec<CheckResult>) -> SelftestReport {
    SelftestReport { seed, passed: checks.iter().all(|c| c.passed), checks }
}

fn result(name: &'static str, value: f64, bound: f64, ok: bool, detail: String) -> CheckResult {
    CheckResult { name, passed: ok && value.is_finite(), value, bound: format!("{bound:e}"), detail }
}

fn failed(name: &'static str, err: impl std::fmt::Display) -> CheckResult {
    CheckResult {
        name,
        passed: false,
        value: f64::NAN,
        bound: String::new(),
        detail: err.to_string(),
    }
}

fn presets() -> Vec<(&'static str, LagrangianModel, Vec<f64>)> {
    vec![
        ("harmonic", LagrangianModel::harmonic(1.0), vec![1.0, 0.0]),
        ("pais-uhlenbeck", LagrangianModel::pais_uhlenbeck(1.0, 2.0), vec![1.0, 0.0, 0.0, 0.0]),
    ]
}

fn run_preset(l: &LagrangianModel, init: &[f64], t1: f64, spec: IntegratorSpec) -> Result<Trajectory, String> {
    let sys = derive_eom(l).map_err(|e| e.to_string())?;
    let init = JetPoint::scalar(0.0, init).map_err(|e| e.to_string())?;
    integrate_eom(&sys, &init, t1, &spec).map_err(|e| e.to_string())
}

fn el_residual_check(_: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "el-residual";
    let mut worst = 0.0_f64;
    for (_, l, init) in presets() {
        let traj = match run_preset(&l, &init, TAU, IntegratorSpec::dopri5(1e-10, 1e-12)) {
            Ok(t) => t,
            Err(e) => return failed(NAME, e),
        };
        let mech = Mechanics::new(&l);
        for s in traj.samples() {
            match mech.el_residual(s) {
                Ok(r) => worst = r.iter().fold(worst, |m, v| m.max(v.abs())),
                Err(e) => return failed(NAME, e),
            }
        }
    }
    result(NAME, worst, 1e-6, worst < 1e-6, "max |EL residual| on both presets".into())
}

fn hamiltonian_check(_: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "hamiltonian-conventions";
    let mut worst_std = 0.0_f64;
    let mut literal_harmonic = 0.0;
    for (name, l, init) in presets() {
        let traj = match run_preset(&l, &init, TAU, IntegratorSpec::dopri5(1e-10, 1e-12)) {
            Ok(t) => t,
            Err(e) => return failed(NAME, e),
        };
        let std = conservation_report(&traj, &l, Convention::Standard);
        let lit = conservation_report(&traj, &l, Convention::Paper);
        match (std, lit) {
            (Ok(s), Ok(p)) => {
                worst_std = worst_std.max(s.max_abs_drift);
                if name == "harmonic" {
                    literal_harmonic = p.max_abs_drift;
                }
            }
            (Err(e), _) | (_, Err(e)) => return failed(NAME, e),
        }
    }
    result(
        NAME,
        worst_std,
        1e-8,
        worst_std < 1e-8 && literal_harmonic > 1e-2,
        format!("literal harmonic drift {literal_harmonic:e}"),
    )
}

fn uniform_run(l: &LagrangianModel, init: &[f64], t1: f64, steps: usize) -> Result<Trajectory, String> {
    run_preset(l, init, t1, IntegratorSpec::rk4(t1 / steps as f64))
}

fn stationarity_check(_: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "stationarity";
    let mut slopes = Vec::new();
    for (_, l, init) in presets() {
        let traj = match uniform_run(&l, &init, 3.0, 3000) {
            Ok(t) => t,
            Err(e) => return failed(NAME, e),
        };
        let pert = match PerturbationSpec::for_trajectory(&traj, l.order()) {
            Ok(p) => p,
            Err(e) => return failed(NAME, e),
        };
        match stationarity_test(&l, &traj, &pert, &default_eps_sweep()) {
            Ok(rep) => slopes.push(rep.slope.unwrap_or(f64::NAN)),
            Err(e) => return failed(NAME, e),
        }
    }
    let worst = slopes.iter().fold(0.0_f64, |m, s| m.max((s - 2.0).abs()));
    result(NAME, worst, 0.2, worst <= 0.2, format!("slopes {slopes:?}"))
}

fn random_jet(rng: &mut ChaCha8Rng, dim: usize, order: usize) -> JetPoint {
    let derivs = (0..=order).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    JetPoint::new(0.0, derivs).expect("finite jet")
}

/// `|a − b| / max(|a|, |b|, 1e−3·max(1, |scale|))`
pub fn relative_gap(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3 * scale.abs().max(1.0))
}

fn eval(e: &Expr, params: &BTreeMap<String, f64>, jet: &JetPoint) -> f64 {
    e.evaluate(&Bindings::new(params, Some(jet))).unwrap_or(f64::NAN)
}

fn with_entry(jet: &JetPoint, n: usize, c: usize, delta: f64) -> JetPoint {
    let mut derivs = jet.derivs().to_vec();
    derivs[n][c] += delta;
    JetPoint::new(jet.t(), derivs).expect("finite jet")
}

/// Largest relative gap between every partial `∂L/∂r⁽ⁿ⁾` and every time
/// derivative `Dʲ ∂L/∂r⁽ⁿ⁾` (`j ≤ n`) used by the residual, against central
/// differences at `points` random jets.
pub fn derivative_gap(l: &LagrangianModel, rng: &mut ChaCha8Rng, points: usize) -> f64 {
    let mech = Mechanics::new(l);
    let params = mech.params().clone();
    let (order, dim) = (mech.order(), mech.dim());
    let top = 2 * order + 2;
    let mut worst = 0.0_f64;
    for _ in 0..points {
        let jet = random_jet(rng, dim, top);
        let lagrangian = mech.lagrangian();
        for n in 0..=order {
            for c in 0..dim {
                let partial = &mech.partials(n)[c];
                let x = jet.derivs()[n][c];
                let h = 1e-5 * x.abs().max(1.0);
                let fd = (eval(lagrangian, &params, &with_entry(&jet, n, c, h))
                    - eval(lagrangian, &params, &with_entry(&jet, n, c, -h)))
                    / (2.0 * h);
                let f = eval(lagrangian, &params, &jet);
                worst = worst.max(relative_gap(eval(partial, &params, &jet), fd, f));

                let mut e = partial.clone();
                for _ in 0..n {
                    let d = e.time_derivative();
                    let h = 1e-5;
                    let ahead = jet.taylor_propagate(h, top).expect("in range");
                    let behind = jet.taylor_propagate(-h, top).expect("in range");
                    let fd = (eval(&e, &params, &ahead) - eval(&e, &params, &behind)) / (2.0 * h);
                    worst = worst.max(relative_gap(eval(&d, &params, &jet), fd, eval(&e, &params, &jet)));
                    e = d;
                }
            }
        }
    }
    worst
}

fn derivative_check(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "derivative-oracle";
    let params = BTreeMap::from([("a".to_string(), 0.7), ("b".to_string(), 0.3)]);
    let nonlinear = match ExpressionLagrangian::parse(
        "0.5*r2^2 + 0.5*r1^2*(1 + b*r0^2) - a*cos(r0) + b*exp(r1)*r2",
        params,
    ) {
        Ok(l) => LagrangianModel::Expression(l),
        Err(e) => return failed(NAME, e),
    };
    let mut models: Vec<LagrangianModel> = presets().into_iter().map(|p| p.1).collect();
    models.push(nonlinear);
    let worst = models.iter().fold(0.0_f64, |m, l| m.max(derivative_gap(l, rng, 20)));
    result(NAME, worst, 1e-6, worst < 1e-6, "20 random jets per model".into())
}

fn taylor_check(_: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "taylor-order";
    let l = LagrangianModel::harmonic(1.0);
    let sys = match derive_eom(&l) {
        Ok(s) => s,
        Err(e) => return failed(NAME, e),
    };
    let traj = uniform_run(&l, &[1.0, 0.0], TAU, 4000).and_then(|t| {
        sys.extend_trajectory(&t, 4).map_err(|e| e.to_string())
    });
    let traj = match traj {
        Ok(t) => t,
        Err(e) => return failed(NAME, e),
    };
    let mut worst = 0.0_f64;
    let mut slopes = Vec::new();
    for order in [2usize, 4] {
        match compare_taylor(&traj, order) {
            Ok(table) => {
                let s = table.slope.unwrap_or(f64::NAN);
                slopes.push(s);
                worst = worst.max((s - (order + 1) as f64).abs());
            }
            Err(e) => return failed(NAME, e),
        }
    }
    result(NAME, worst, 0.2, worst <= 0.2, format!("slopes {slopes:?}"))
}

fn potential_check(rng: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "potential-limits";
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let k: f64 = 10f64.powf(rng.gen_range(-3.0..0.0));
        let r: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let (exp, newton) = match (
            PotentialModel::exponential(1.0, 1.0, k, ExpVariant::Shifted),
            PotentialModel::newtonian(1.0, 1.0),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return failed(NAME, e),
        };
        match (potential_force(&exp, r), potential_force(&newton, r)) {
            (Ok(a), Ok(b)) => worst = worst.max(((a / b) / (k / r).exp() - 1.0).abs()),
            (Err(e), _) | (_, Err(e)) => return failed(NAME, e),
        }
    }
    let planck = PotentialModel::exponential(1.0, 1.0, 1e-35, ExpVariant::Shifted)
        .and_then(|p| newtonian_comparison(&p, &[1e-10]));
    let nuclear = PotentialModel::exponential(1.0, 1.0, 1e-15, ExpVariant::Shifted)
        .and_then(|p| newtonian_comparison(&p, &[1e-15]));
    let (planck, nuclear) = match (planck, nuclear) {
        (Ok(a), Ok(b)) => (a[0].clone(), b[0].clone()),
        (Err(e), _) | (_, Err(e)) => return failed(NAME, e),
    };
    let ok = worst < 1e-12 && planck.ratio - 1.0 < 1e-24 && (nuclear.ratio - E).abs() < 1e-9;
    result(
        NAME,
        worst,
        1e-12,
        ok,
        format!("planck excess {:e}, nuclear ratio {}", planck.excess, nuclear.ratio),
    )
}

fn series_check(_: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "series-divergence";
    let k = 1.0;
    let diag = PotentialModel::new(PotentialKind::Series { coeffs: vec![1.0; 8] }, 1.0, 1.0, k)
        .and_then(|p| series_divergence_scan(&p, &[2.0 * k, k, 0.5 * k], 8));
    match diag {
        Ok(d) => {
            let flags: Vec<bool> = d.records.iter().map(|r| r.divergent).collect();
            let ok = flags == [false, true, true];
            result(NAME, 0.0, 0.0, ok, format!("divergent at (2k, k, k/2): {flags:?}"))
        }
        Err(e) => failed(NAME, e),
    }
}

fn orbit_check(_: &mut ChaCha8Rng) -> CheckResult {
    const NAME: &str = "orbit-circular";
    let run = PotentialModel::newtonian(1.0, 1.0).and_then(|p| {
        orbit_simulate(&p, &OrbitInit::circular(1.0, 1.0), TAU, &IntegratorSpec::dopri5(1e-12, 1e-12))
    });
    match run {
        Ok(run) => {
            let spread = run.stats.apoapsis - run.stats.periapsis;
            result(NAME, spread, 1e-6, spread < 1e-6, "radius spread over one period".into())
        }
        Err(e) => failed(NAME, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_is_reproducible() {
        let a = run_selftest(7);
        for c in &a.checks {
            assert!(c.passed, "{c:?}");
        }
        let b = run_selftest(7);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn relative_gap_floor() {
        assert_eq!(relative_gap(1.0, 1.0, 5.0), 0.0);
        assert!((relative_gap(0.0, 1e-9, 1.0) - 1e-6).abs() < 1e-18);
    }
}
