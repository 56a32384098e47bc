//! Subcommand implementations. Each returns the artifact paths it wrote.

use std::collections::BTreeMap;
use std::path::PathBuf;

use jetmech::action::{default_eps_sweep, stationarity_test_with, PerturbationSpec};
use jetmech::integrate::{conservation_report_with, integrate_eom, IntegratorSpec};
use jetmech::potentials::{laplacian_residual_text, ComparisonRow};
use jetmech::selftest::{assemble, checks, run_check};
use jetmech::{
    derive_eom, energy_ranks, newtonian_comparison, orbit_simulate, series_divergence_scan,
    Convention, LagrangianModel, Mechanics, PotentialKind,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, TableFormat};
use crate::error::CliError;
use crate::output::{g17, to_json, write_atomic};

fn write(cfg: &RunConfig, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    write_atomic(&cfg.output.dir, name, contents)
}

fn model_json(l: &LagrangianModel) -> serde_json::Value {
    json!({
        "lagrangian": l.expr().to_string(),
        "order": l.order(),
        "dim": l.dim(),
        "params": l.params(),
    })
}

pub fn derive_eom_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let l = cfg.lagrangian()?;
    let sys = derive_eom(&l).map_err(CliError::compute)?;
    let mech = sys.mechanics();
    let render = |es: &[jetmech::Expr]| es.iter().map(|e| e.to_string()).collect::<Vec<_>>();
    let momenta = |c| mech.momenta_exprs(c).iter().map(|v| render(v)).collect::<Vec<_>>();
    let top = match sys.linear_coeffs() {
        Some(k) => json!({ "kind": "linear", "coeffs": k }),
        None => json!({ "kind": "newton" }),
    };
    let doc = json!({
        "model": model_json(&l),
        "stateLayout": "component-major r0..r(2N-1)",
        "residual": render(mech.residual_exprs()),
        "topDerivative": top,
        "momenta": {
            "standard": momenta(Convention::Standard),
            "paper": momenta(Convention::Paper),
        },
        "hamiltonian": {
            "standard": mech.hamiltonian_expr(Convention::Standard).to_string(),
            "paper": mech.hamiltonian_expr(Convention::Paper).to_string(),
        },
        "newtonBalance": render(mech.newton_balance_exprs()),
    });
    Ok(vec![write(cfg, "eom.json", &to_json(&doc)?)?])
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SimulateSummary {
    method: String,
    steps: usize,
    rejects: usize,
    rhs_evals: usize,
    samples: usize,
    t0: f64,
    t1: f64,
    max_el_residual: f64,
    drift: jetmech::ConservationReport,
    paper_drift: jetmech::ConservationReport,
}

pub fn simulate_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let l = cfg.lagrangian()?;
    let init = cfg.initial_jet(&l)?;
    let sys = derive_eom(&l).map_err(CliError::compute)?;
    let spec = cfg.integrator_spec();
    let traj = integrate_eom(&sys, &init, cfg.integrator.tspan[1], &spec).map_err(CliError::compute)?;
    let mech = sys.mechanics();
    let mut max_el_residual = 0.0_f64;
    for s in traj.samples() {
        for r in mech.el_residual(s).map_err(CliError::compute)? {
            max_el_residual = max_el_residual.max(r.abs());
        }
    }
    let summary = SimulateSummary {
        method: traj.method.clone(),
        steps: traj.stats.accepted,
        rejects: traj.stats.rejected,
        rhs_evals: traj.stats.rhs_evals,
        samples: traj.len(),
        t0: cfg.integrator.tspan[0],
        t1: cfg.integrator.tspan[1],
        max_el_residual,
        drift: conservation_report_with(&traj, mech, Convention::Standard).map_err(CliError::compute)?,
        paper_drift: conservation_report_with(&traj, mech, Convention::Paper)
            .map_err(CliError::compute)?,
    };
    Ok(vec![
        write(cfg, "trajectory.csv", &traj.to_csv())?,
        write(cfg, "summary.json", &to_json(&summary)?)?,
    ])
}

/// Initial jet completed through order `2N` by the equation of motion.
fn full_initial_jet(cfg: &RunConfig, l: &LagrangianModel) -> Result<jetmech::JetPoint, CliError> {
    let init = cfg.initial_jet(l)?;
    let sys = derive_eom(l).map_err(CliError::compute)?;
    sys.extend_jet(&init, 2 * l.order()).map_err(CliError::compute)
}

pub fn momenta_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let l = cfg.lagrangian()?;
    let jet = full_initial_jet(cfg, &l)?;
    let mech = Mechanics::new(&l);
    let doc = json!({
        "model": model_json(&l),
        "t": jet.t(),
        "jet": jet.derivs(),
        "momenta": {
            "standard": mech.momenta(&jet, Convention::Standard).map_err(CliError::compute)?,
            "paper": mech.momenta(&jet, Convention::Paper).map_err(CliError::compute)?,
        },
        "forceLadder": mech.force_ladder(&jet).map_err(CliError::compute)?,
        "newtonBalance": mech.newton_balance_residual(&jet).map_err(CliError::compute)?,
        "elResidual": mech.el_residual(&jet).map_err(CliError::compute)?,
    });
    Ok(vec![write(cfg, "momenta.json", &to_json(&doc)?)?])
}

pub fn energy_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let l = cfg.lagrangian()?;
    let jet = full_initial_jet(cfg, &l)?;
    let mech = Mechanics::new(&l);
    let ranks = match &l {
        LagrangianModel::Quadratic(q) => {
            Some(energy_ranks(q, &jet, cfg.grouping()).map_err(CliError::compute)?)
        }
        LagrangianModel::Expression(_) => None,
    };
    let doc = json!({
        "model": model_json(&l),
        "t": jet.t(),
        "lagrangianValue": l.eval(&jet).map_err(CliError::compute)?,
        "hamiltonian": {
            "standard": mech.hamiltonian(&jet, Convention::Standard).map_err(CliError::compute)?,
            "paper": mech.hamiltonian(&jet, Convention::Paper).map_err(CliError::compute)?,
        },
        "ranks": ranks,
    });
    Ok(vec![write(cfg, "energy.json", &to_json(&doc)?)?])
}

pub fn action_check_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let l = cfg.lagrangian()?;
    let init = cfg.initial_jet(&l)?;
    let sys = derive_eom(&l).map_err(CliError::compute)?;
    let [t0, t1] = cfg.integrator.tspan;
    let spec = IntegratorSpec::rk4((t1 - t0) / cfg.action.steps as f64)
        .with_max_steps(cfg.integrator.max_steps);
    let traj = integrate_eom(&sys, &init, t1, &spec).map_err(CliError::compute)?;
    let mut pert = PerturbationSpec::for_trajectory(&traj, l.order())
        .map_err(CliError::compute)?
        .with_component(cfg.action.component);
    if let Some(m) = cfg.action.m {
        pert = pert.with_exponent(m);
    }
    pert.validate(l.order(), l.dim()).map_err(|e| CliError::Config(format!("action: {e}")))?;
    let eps = cfg.action.eps.clone().unwrap_or_else(default_eps_sweep);
    let report =
        stationarity_test_with(sys.mechanics(), &traj, &pert, &eps).map_err(CliError::compute)?;
    Ok(vec![write(cfg, "action.json", &to_json(&report)?)?])
}

fn table_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("r,phi_model,phi_newton,force_model,force_newton,ratio,regime\n");
    for r in rows {
        let cells = [r.r, r.phi_model, r.phi_newton, r.force_model, r.force_newton, r.ratio];
        let nums: Vec<String> = cells.iter().map(|v| g17(*v)).collect();
        out.push_str(&nums.join(","));
        out.push(',');
        out.push_str(r.regime.as_str());
        out.push('\n');
    }
    out
}

pub fn potential_table_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = cfg.potential()?;
    let radii = cfg.radii()?;
    let rows: Vec<ComparisonRow> = radii
        .par_iter()
        .map(|r| newtonian_comparison(&p, std::slice::from_ref(r)).map(|mut v| v.remove(0)))
        .collect::<Result<_, _>>()
        .map_err(CliError::compute)?;
    let mut written = vec![match cfg.output.format {
        TableFormat::Csv => write(cfg, "potential_table.csv", &table_csv(&rows))?,
        TableFormat::Json => write(
            cfg,
            "potential_table.json",
            &to_json(&json!({ "potential": &p, "kappa": cfg.potential.kappa, "rows": rows }))?,
        )?,
    }];
    if let PotentialKind::Series { coeffs } = &p.kind {
        let diag = series_divergence_scan(&p, &radii, coeffs.len().max(2))
            .map_err(CliError::compute)?;
        written.push(write(cfg, "series_scan.json", &to_json(&diag)?)?);
    }
    if matches!(p.kind, PotentialKind::Exponential { .. }) {
        let laplacian: Vec<BTreeMap<&str, f64>> = radii
            .iter()
            .map(|&r| {
                laplacian_residual_text("exp(k/r)", p.k, r)
                    .map(|v| BTreeMap::from([("r", r), ("residual", v)]))
            })
            .collect::<Result<_, _>>()
            .map_err(CliError::compute)?;
        written.push(write(cfg, "laplacian.json", &to_json(&laplacian)?)?);
    }
    Ok(written)
}

pub fn orbit_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = cfg.potential()?;
    let init = cfg.orbit_init(&p);
    let spec = cfg.integrator_spec();
    let [t0, t1] = cfg.integrator.tspan;
    if t0 != 0.0 {
        return Err(CliError::Config("orbit runs start at t = 0; set integrator.tspan = [0, t1]".into()));
    }
    let run = orbit_simulate(&p, &init, t1, &spec).map_err(CliError::compute)?;
    if let Some(reason) = &run.aborted {
        log::warn!("orbit stopped early: {reason}");
    }
    let doc = json!({
        "potential": p.label(),
        "init": init,
        "stats": run.stats,
        "aborted": run.aborted,
        "steps": run.trajectory.stats.accepted,
        "rejects": run.trajectory.stats.rejected,
    });
    Ok(vec![
        write(cfg, "orbit.csv", &run.trajectory.to_csv())?,
        write(cfg, "orbit.json", &to_json(&doc)?)?,
    ])
}

/// Runs the invariant suite; fails with a computation error when any check
/// does not pass, after writing the report.
pub fn selftest_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let seed = cfg.seed;
    let results: Vec<_> = (0..checks().len()).into_par_iter().map(|i| run_check(seed, i)).collect();
    let report = assemble(seed, results);
    let path = write(cfg, "selftest.json", &to_json(&report)?)?;
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        return Err(CliError::Compute(format!("selftest failed: {}", failed.join(", "))));
    }
    Ok(vec![path])
}
