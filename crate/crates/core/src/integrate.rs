//! Explicit Runge–Kutta integration of first-order systems (classical RK4
//! and the Dormand–Prince 5(4) embedded pair), trajectory construction for
//! Euler–Lagrange systems, and conservation / Taylor-consistency checks.

use serde::Serialize;
use thiserror::Error;

use crate::euler_lagrange::{Convention, EomError, EomSystem, Mechanics, MechanicsError};
use crate::jet::{JetError, JetPoint, StepStats, Trajectory};
use crate::lagrangian::LagrangianModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("invalid integrator settings: {0}")]
    InvalidSpec(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("integration stopped at t = {t}: {reason}")]
    Stopped { t: f64, reason: String },
    #[error("too few samples ({0})")]
    TooFewSamples(usize),
    #[error(transparent)]
    Eom(#[from] EomError),
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta. The step is adjusted
    /// down so that a whole number of equal steps spans the interval.
    Rk4 { step: f64 },
    /// Dormand–Prince 5(4) with proportional step control.
    Dopri5 { rel_tol: f64, abs_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorSpec {
    pub method: Method,
    pub max_steps: usize,
}

impl IntegratorSpec {
    pub fn rk4(step: f64) -> Self {
        Self { method: Method::Rk4 { step }, max_steps: 10_000_000 }
    }

    pub fn dopri5(rel_tol: f64, abs_tol: f64) -> Self {
        Self { method: Method::Dopri5 { rel_tol, abs_tol }, max_steps: 10_000_000 }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.method {
            Method::Rk4 { .. } => "rk4",
            Method::Dopri5 { .. } => "dopri5",
        }
    }

    fn validate(&self) -> Result<(), IntegrateError> {
        if self.max_steps == 0 {
            return Err(IntegrateError::InvalidSpec("maxSteps must be at least 1".into()));
        }
        match self.method {
            Method::Rk4 { step } if !(step > 0.0 && step.is_finite()) => {
                Err(IntegrateError::InvalidSpec(format!("step must be positive, got {step}")))
            }
            Method::Dopri5 { rel_tol, abs_tol }
                if !(rel_tol > 0.0 && abs_tol > 0.0 && rel_tol.is_finite() && abs_tol.is_finite()) =>
            {
                Err(IntegrateError::InvalidSpec(format!(
                    "tolerances must be positive, got relTol {rel_tol}, absTol {abs_tol}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A first-order system `y' = f(t, y)`.
#[allow(clippy::len_without_is_empty)]
pub trait OdeSystem {
    fn len(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), IntegrateError>;
}

impl OdeSystem for EomSystem {
    fn len(&self) -> usize {
        self.state_len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), IntegrateError> {
        Ok(EomSystem::rhs(self, t, y, dy)?)
    }
}

/// `y'(s) = −f(−s, y)`: the system run with time reversed.
struct Reflected<'a, S: ?Sized>(&'a S);

impl<S: OdeSystem + ?Sized> OdeSystem for Reflected<'_, S> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), IntegrateError> {
        self.0.rhs(-t, y, dy)?;
        dy.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    }
}

/// Accepted states of an integration run, in integration order (times
/// decrease when integrating backward).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
}

/// An integration that stopped early, with everything accepted before the stop.
#[derive(Debug, Clone, PartialEq)]
pub struct Interrupted {
    pub error: IntegrateError,
    pub partial: Solution,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrates from `(t0, y0)` to `t1`, which may lie before `t0`. `guard`
/// runs after every accepted step and may stop the run by returning an error.
#[allow(clippy::result_large_err)]
pub fn solve<S, G>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    spec: &IntegratorSpec,
    mut guard: G,
) -> Result<Solution, Interrupted>
where
    S: OdeSystem + ?Sized,
    G: FnMut(f64, &[f64]) -> Result<(), IntegrateError>,
{
    let fail = |error| Interrupted { error, partial: Solution::default() };
    spec.validate().map_err(fail)?;
    if t1 == t0 || !t0.is_finite() || !t1.is_finite() {
        return Err(fail(IntegrateError::InvalidSpec(format!(
            "end time {t1} must differ from start time {t0}"
        ))));
    }
    if y0.len() != sys.len() {
        return Err(fail(IntegrateError::InvalidSpec(format!(
            "initial state has {} entries, system needs {}",
            y0.len(),
            sys.len()
        ))));
    }
    if t1 > t0 {
        return forward(sys, t0, y0, t1, spec, &mut guard);
    }
    let flip = |mut sol: Solution| {
        sol.times.iter_mut().for_each(|t| *t = -*t);
        sol
    };
    let mut mirrored = |s: f64, y: &[f64]| guard(-s, y);
    forward(&Reflected(sys), -t0, y0, -t1, spec, &mut mirrored)
        .map(flip)
        .map_err(|i| Interrupted { error: i.error, partial: flip(i.partial) })
}

#[allow(clippy::result_large_err)]
fn forward<S, G>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    spec: &IntegratorSpec,
    guard: &mut G,
) -> Result<Solution, Interrupted>
where
    S: OdeSystem + ?Sized,
    G: FnMut(f64, &[f64]) -> Result<(), IntegrateError>,
{
    let mut sol = Solution { times: vec![t0], states: vec![y0.to_vec()], stats: StepStats::default() };
    let result = match spec.method {
        Method::Rk4 { step } => rk4(sys, t0, t1, step, spec.max_steps, &mut sol, guard),
        Method::Dopri5 { rel_tol, abs_tol } => {
            dopri5(sys, t0, t1, rel_tol, abs_tol, spec.max_steps, &mut sol, guard)
        }
    };
    match result {
        Ok(()) => Ok(sol),
        Err(error) => Err(Interrupted { error, partial: sol }),
    }
}

fn check_finite(t: f64, y: &[f64]) -> Result<(), IntegrateError> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(IntegrateError::NonFinite(t))
    }
}

fn axpy(out: &mut [f64], y: &[f64], terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = y[i];
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] = acc;
    }
}

fn rk4<S, G>(
    sys: &S,
    t0: f64,
    t1: f64,
    step: f64,
    max_steps: usize,
    sol: &mut Solution,
    guard: &mut G,
) -> Result<(), IntegrateError>
where
    S: OdeSystem + ?Sized,
    G: FnMut(f64, &[f64]) -> Result<(), IntegrateError>,
{
    let span = t1 - t0;
    let n = ((span / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    if n > max_steps {
        return Err(IntegrateError::MaxSteps(max_steps));
    }
    let h = span / n as f64;
    let dim = sys.len();
    let mut y = sol.states[0].clone();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for i in 0..n {
        let t = t0 + i as f64 * h;
        sys.rhs(t, &y, &mut k1)?;
        axpy(&mut tmp, &y, &[(0.5 * h, &k1)]);
        sys.rhs(t + 0.5 * h, &tmp, &mut k2)?;
        axpy(&mut tmp, &y, &[(0.5 * h, &k2)]);
        sys.rhs(t + 0.5 * h, &tmp, &mut k3)?;
        axpy(&mut tmp, &y, &[(h, &k3)]);
        sys.rhs(t + h, &tmp, &mut k4)?;
        for j in 0..dim {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t_next = if i + 1 == n { t1 } else { t0 + (i + 1) as f64 * h };
        check_finite(t_next, &y)?;
        sol.stats.accepted += 1;
        sol.stats.rhs_evals += 4;
        sol.times.push(t_next);
        sol.states.push(y.clone());
        guard(t_next, &y)?;
    }
    Ok(())
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn weighted_rms(err: &[f64], y: &[f64], y_new: &[f64], rel: f64, abs: f64) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = abs + rel * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / err.len().max(1) as f64).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn dopri5<S, G>(
    sys: &S,
    t0: f64,
    t1: f64,
    rel: f64,
    abs: f64,
    max_steps: usize,
    sol: &mut Solution,
    guard: &mut G,
) -> Result<(), IntegrateError>
where
    S: OdeSystem + ?Sized,
    G: FnMut(f64, &[f64]) -> Result<(), IntegrateError>,
{
    let dim = sys.len();
    let mut y = sol.states[0].clone();
    let mut t = t0;
    let mut k1 = vec![0.0; dim];
    sys.rhs(t, &y, &mut k1)?;
    sol.stats.rhs_evals += 1;

    // starting step from the scaled norms of y and f
    let h = {
        let d0 = weighted_rms(&y, &y, &y, rel, abs);
        let d1 = weighted_rms(&k1, &y, &y, rel, abs);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(t1 - t0);
        let mut y1 = vec![0.0; dim];
        axpy(&mut y1, &y, &[(h0, &k1)]);
        let mut f1 = vec![0.0; dim];
        sys.rhs(t + h0, &y1, &mut f1)?;
        sol.stats.rhs_evals += 1;
        let diff: Vec<f64> = f1.iter().zip(&k1).map(|(a, b)| a - b).collect();
        let d2 = weighted_rms(&diff, &y, &y, rel, abs) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(t1 - t0)
    };
    let mut h = h;

    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut last_rejected = false;
    let mut steps = 0usize;

    while t < t1 {
        if steps >= max_steps {
            return Err(IntegrateError::MaxSteps(max_steps));
        }
        steps += 1;
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(IntegrateError::StepUnderflow { t, h });
        }

        axpy(&mut tmp, &y, &[(h * A21, &k1)]);
        sys.rhs(t + C2 * h, &tmp, &mut k2)?;
        axpy(&mut tmp, &y, &[(h * A31, &k1), (h * A32, &k2)]);
        sys.rhs(t + C3 * h, &tmp, &mut k3)?;
        axpy(&mut tmp, &y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]);
        sys.rhs(t + C4 * h, &tmp, &mut k4)?;
        axpy(&mut tmp, &y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]);
        sys.rhs(t + C5 * h, &tmp, &mut k5)?;
        axpy(
            &mut tmp,
            &y,
            &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
        );
        sys.rhs(t + h, &tmp, &mut k6)?;
        axpy(&mut y_new, &y, &[(h * B1, &k1), (h * B3, &k3), (h * B4, &k4), (h * B5, &k5), (h * B6, &k6)]);
        let t_new = if last { t1 } else { t + h };
        sys.rhs(t_new, &y_new, &mut k7)?;
        sol.stats.rhs_evals += 6;

        for i in 0..dim {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = weighted_rms(&err, &y, &y_new, rel, abs);
        if !e.is_finite() {
            sol.stats.rejected += 1;
            h *= MIN_FACTOR;
            last_rejected = true;
            continue;
        }
        let mut factor = if e == 0.0 { MAX_FACTOR } else { SAFETY * e.powf(-0.2) };
        factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);

        if e <= 1.0 {
            check_finite(t_new, &y_new)?;
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            sol.stats.accepted += 1;
            sol.times.push(t);
            sol.states.push(y.clone());
            guard(t, &y)?;
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            h *= factor;
        } else {
            sol.stats.rejected += 1;
            last_rejected = true;
            h *= factor.min(1.0);
        }
    }
    Ok(())
}

/// Integrates an Euler–Lagrange system from `init` (orders `0..2N−1` used)
/// to `t1`. Each sample carries orders `0..=2N`, the top one from the solve.
/// Samples are always stored in increasing time, so for `t1 < init.t` the
/// end state is the first sample.
pub fn integrate_eom(
    sys: &EomSystem,
    init: &JetPoint,
    t1: f64,
    spec: &IntegratorSpec,
) -> Result<Trajectory, IntegrateError> {
    let y0 = sys.state_from_jet(init)?;
    let sol = solve(sys, init.t(), &y0, t1, spec, |_, _| Ok(())).map_err(|i| i.error)?;
    solution_to_trajectory(sys, &sol, spec.name())
}

pub(crate) fn solution_to_trajectory(
    sys: &EomSystem,
    sol: &Solution,
    method: &str,
) -> Result<Trajectory, IntegrateError> {
    let mut samples = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| sys.jet_from_state(t, y))
        .collect::<Result<Vec<_>, _>>()?;
    if sol.times.len() > 1 && sol.times[1] < sol.times[0] {
        samples.reverse();
    }
    Ok(Trajectory::new(samples, method)?.with_stats(sol.stats.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConservationReport {
    pub quantity: String,
    pub convention: Convention,
    pub initial: f64,
    pub max_abs_drift: f64,
    pub drift_per_unit_time: f64,
    pub sample_count: usize,
    /// `max_abs_drift ≤ CONSERVATION_TOL · max(1, |initial|)`.
    pub conserved: bool,
}

/// Drift level above which a quantity is reported as not conserved.
pub const CONSERVATION_TOL: f64 = 1e-6;

/// Evaluates the generalized Hamiltonian at every sample of `traj`.
pub fn conservation_report(
    traj: &Trajectory,
    l: &LagrangianModel,
    convention: Convention,
) -> Result<ConservationReport, IntegrateError> {
    conservation_report_with(traj, &Mechanics::new(l), convention)
}

pub fn conservation_report_with(
    traj: &Trajectory,
    mech: &Mechanics,
    convention: Convention,
) -> Result<ConservationReport, IntegrateError> {
    if traj.len() < 2 {
        return Err(IntegrateError::TooFewSamples(traj.len()));
    }
    let values = traj
        .samples()
        .iter()
        .map(|s| mech.hamiltonian(s, convention))
        .collect::<Result<Vec<_>, _>>()?;
    let initial = values[0];
    let max_abs_drift = values.iter().fold(0.0_f64, |m, v| m.max((v - initial).abs()));
    let duration = traj.last().unwrap().t() - traj.first().unwrap().t();
    let quantity = match convention {
        Convention::Standard => "hamiltonian (Ostrogradsky)",
        Convention::Paper => "hamiltonian (literal sum p_a r^(a))",
    };
    Ok(ConservationReport {
        quantity: quantity.into(),
        convention,
        initial,
        max_abs_drift,
        drift_per_unit_time: max_abs_drift / duration,
        sample_count: values.len(),
        conserved: max_abs_drift <= CONSERVATION_TOL * initial.abs().max(1.0),
    })
}

/// Horizons `dt_max / 2ᵏ` for `k = 0..levels`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaylorSweep {
    pub dt_max: f64,
    pub levels: usize,
}

impl TaylorSweep {
    /// A sixteenth of the trajectory span, halved five times.
    pub fn for_trajectory(traj: &Trajectory) -> Self {
        let span = match (traj.first(), traj.last()) {
            (Some(a), Some(b)) => b.t() - a.t(),
            _ => 0.0,
        };
        Self { dt_max: span / 16.0, levels: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaylorRow {
    pub dt: f64,
    /// Mean of the matched sample separations actually used.
    pub mean_horizon: f64,
    pub max_error: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaylorTable {
    pub order: usize,
    pub rows: Vec<TaylorRow>,
    /// Least-squares slope of `ln max_error` against `ln mean_horizon`;
    /// `None` when fewer than two rows have a nonzero error.
    pub slope: Option<f64>,
}

/// Compares Taylor propagation from each sample with the sample nearest to
/// `t_i + dt`, over the default dyadic sweep.
pub fn compare_taylor(traj: &Trajectory, order: usize) -> Result<TaylorTable, IntegrateError> {
    compare_taylor_with(traj, order, TaylorSweep::for_trajectory(traj))
}

pub fn compare_taylor_with(
    traj: &Trajectory,
    order: usize,
    sweep: TaylorSweep,
) -> Result<TaylorTable, IntegrateError> {
    if traj.len() < 2 {
        return Err(IntegrateError::TooFewSamples(traj.len()));
    }
    let samples = traj.samples();
    let t_end = samples.last().unwrap().t();
    let mut rows = Vec::with_capacity(sweep.levels);
    for level in 0..sweep.levels {
        let dt = sweep.dt_max / 2f64.powi(level as i32);
        let (mut max_error, mut horizon_sum, mut pairs) = (0.0_f64, 0.0, 0usize);
        for (i, s) in samples.iter().enumerate() {
            if s.t() + dt > t_end {
                break;
            }
            let j = traj.nearest_index(s.t() + dt).unwrap();
            if j <= i {
                continue;
            }
            let target = &samples[j];
            let horizon = target.t() - s.t();
            let predicted = s.taylor_propagate(horizon, order)?;
            let err = predicted
                .position()
                .iter()
                .zip(target.position())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            max_error = max_error.max(err);
            horizon_sum += horizon;
            pairs += 1;
        }
        if pairs > 0 {
            rows.push(TaylorRow { dt, mean_horizon: horizon_sum / pairs as f64, max_error, pairs });
        }
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.max_error > 0.0)
        .map(|r| (r.mean_horizon.ln(), r.max_error.ln()))
        .collect();
    let slope = least_squares(&points).map(|(slope, _)| slope);
    Ok(TaylorTable { order, rows, slope })
}

/// Ordinary least-squares line through `(x, y)` points: `(slope, intercept)`.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    struct Decay;

    impl OdeSystem for Decay {
        fn len(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), IntegrateError> {
            dy[0] = -y[0];
            Ok(())
        }
    }

    #[test]
    fn free_particle_rk4() {
        let sys = crate::derive_eom(&LagrangianModel::free_particle()).unwrap();
        let init = JetPoint::scalar(0.0, &[0.0, 1.0]).unwrap();
        let traj = integrate_eom(&sys, &init, 5.0, &IntegratorSpec::rk4(0.01)).unwrap();
        let end = traj.last().unwrap();
        assert_eq!(end.t(), 5.0);
        assert!((end.get(0, 0).unwrap() - 5.0).abs() < 1e-10);
        assert_eq!(traj.len(), 501);
        assert_eq!(end.order(), 2);
    }

    #[test]
    fn harmonic_period_dopri() {
        let sys = crate::derive_eom(&LagrangianModel::harmonic(1.0)).unwrap();
        let init = JetPoint::scalar(0.0, &[1.0, 0.0]).unwrap();
        let traj =
            integrate_eom(&sys, &init, 2.0 * PI, &IntegratorSpec::dopri5(1e-9, 1e-9)).unwrap();
        let end = traj.last().unwrap();
        assert_eq!(end.t(), 2.0 * PI);
        assert!((end.get(0, 0).unwrap() - 1.0).abs() < 1e-6);
        assert!(end.get(1, 0).unwrap().abs() < 1e-6);
        assert!(traj.stats.accepted > 10);
    }

    #[test]
    fn exponential_decay_accuracy() {
        let sol = solve(&Decay, 0.0, &[1.0], 3.0, &IntegratorSpec::dopri5(1e-10, 1e-12), |_, _| Ok(()))
            .unwrap();
        let y = sol.states.last().unwrap()[0];
        assert!((y - (-3.0_f64).exp()).abs() < 1e-10);
        let sol = solve(&Decay, 0.0, &[1.0], 3.0, &IntegratorSpec::rk4(1e-3), |_, _| Ok(())).unwrap();
        let y = sol.states.last().unwrap()[0];
        assert!((y - (-3.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            IntegratorSpec::rk4(0.0),
            IntegratorSpec::rk4(-1.0),
            IntegratorSpec::dopri5(0.0, 1e-9),
            IntegratorSpec::rk4(0.1).with_max_steps(0),
        ];
        for spec in bad {
            let e = solve(&Decay, 0.0, &[1.0], 1.0, &spec, |_, _| Ok(())).unwrap_err();
            assert!(matches!(e.error, IntegrateError::InvalidSpec(_)), "{spec:?}");
        }
        let e = solve(&Decay, 1.0, &[1.0], 1.0, &IntegratorSpec::rk4(0.1), |_, _| Ok(())).unwrap_err();
        assert!(matches!(e.error, IntegrateError::InvalidSpec(_)));
    }

    #[test]
    fn max_steps_exceeded() {
        let spec = IntegratorSpec::rk4(0.01).with_max_steps(10);
        let e = solve(&Decay, 0.0, &[1.0], 1.0, &spec, |_, _| Ok(())).unwrap_err();
        assert_eq!(e.error, IntegrateError::MaxSteps(10));
        let spec = IntegratorSpec::dopri5(1e-12, 1e-12).with_max_steps(3);
        let e = solve(&Decay, 0.0, &[1.0], 10.0, &spec, |_, _| Ok(())).unwrap_err();
        assert_eq!(e.error, IntegrateError::MaxSteps(3));
        assert!(!e.partial.times.is_empty());
    }

    #[test]
    fn guard_stops_with_partial_result() {
        let e = solve(&Decay, 0.0, &[1.0], 1.0, &IntegratorSpec::rk4(0.1), |t, _| {
            if t > 0.45 {
                Err(IntegrateError::Stopped { t, reason: "test".into() })
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        assert_eq!(e.partial.times.len(), 6);
    }

    #[test]
    fn conservation_needs_samples() {
        let traj = Trajectory::new(vec![], "none").unwrap();
        assert_eq!(
            conservation_report(&traj, &LagrangianModel::harmonic(1.0), Convention::Standard),
            Err(IntegrateError::TooFewSamples(0))
        );
    }

    #[test]
    fn regression_line() {
        let pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)];
        assert_eq!(least_squares(&pts), Some((2.0, 1.0)));
        assert_eq!(least_squares(&pts[..1]), None);
    }
}
