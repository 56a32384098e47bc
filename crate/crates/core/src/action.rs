//! Action integrals along sampled trajectories and a numerical check of
//! first-order stationarity under endpoint-preserving perturbations.

use serde::Serialize;
use thiserror::Error;

use crate::euler_lagrange::{Convention, Mechanics, MechanicsError};
use crate::integrate::least_squares;
use crate::jet::{JetError, JetPoint, Trajectory};
use crate::lagrangian::{LagrangianError, LagrangianModel};

/// Relative spread of sample spacings accepted as a uniform grid.
const UNIFORM_TOL: f64 = 1e-8;
/// Largest Euler–Lagrange residual for which a trajectory counts as a solution.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Multiple of machine epsilon times the action scale below which `ΔS` is noise.
const NOISE_FACTOR: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActionError {
    #[error("too few samples ({0}); at least 3 are needed")]
    TooFewSamples(usize),
    #[error("sample spacing is not uniform at index {0}; integrate with a fixed step")]
    NonUniform(usize),
    #[error("invalid perturbation: {0}")]
    Perturbation(String),
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Bump `η(t) = (t−t₀)ᵐ(t₁−t)ᵐ / ((t₁−t₀)/2)²ᵐ` on one component, peak 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub t0: f64,
    pub t1: f64,
    pub m: usize,
    pub component: usize,
}

impl PerturbationSpec {
    /// Bump over the span of `traj` with `m = N + 1`.
    pub fn for_trajectory(traj: &Trajectory, order: usize) -> Result<Self, ActionError> {
        let (first, last) = match (traj.first(), traj.last()) {
            (Some(a), Some(b)) if traj.len() >= 3 => (a, b),
            _ => return Err(ActionError::TooFewSamples(traj.len())),
        };
        Ok(Self { t0: first.t(), t1: last.t(), m: order + 1, component: 0 })
    }

    pub fn with_exponent(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_component(mut self, component: usize) -> Self {
        self.component = component;
        self
    }

    /// `η⁽ᵏ⁾(t)`, exact.
    pub fn derivative(&self, k: usize, t: f64) -> f64 {
        let m = self.m;
        let s = t - self.t0;
        let u = self.t1 - t;
        let half = 0.5 * (self.t1 - self.t0);
        // Leibniz rule on sᵐ · uᵐ with du/dt = −1
        let mut acc = 0.0;
        for j in 0..=k.min(m) {
            let i = k - j;
            if i > m {
                continue;
            }
            let a = falling(m, j) * s.powi((m - j) as i32);
            let b = falling(m, i) * u.powi((m - i) as i32);
            let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += binomial(k, j) * a * sign * b;
        }
        acc / half.powi(2 * m as i32)
    }

    /// Checks that `η⁽ᵏ⁾` vanishes at both ends for `k < order`, and that the
    /// component exists.
    pub fn validate(&self, order: usize, dim: usize) -> Result<(), ActionError> {
        if !(self.t1 > self.t0) {
            return Err(ActionError::Perturbation(format!(
                "empty support [{}, {}]",
                self.t0, self.t1
            )));
        }
        if self.component >= dim {
            return Err(ActionError::Perturbation(format!(
                "component {} out of range for dimension {dim}",
                self.component
            )));
        }
        if self.m < order {
            return Err(ActionError::Perturbation(format!(
                "exponent m = {} is below the Lagrangian order {order}",
                self.m
            )));
        }
        for k in 0..order {
            for t in [self.t0, self.t1] {
                let v = self.derivative(k, t);
                if v.abs() > 1e-12 {
                    return Err(ActionError::Perturbation(format!(
                        "derivative {k} is {v:e} at t = {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn falling(m: usize, j: usize) -> f64 {
    (0..j).map(|i| (m - i) as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Uniform spacing of `traj`, or the index of the first offending interval.
fn uniform_step(traj: &Trajectory) -> Result<f64, ActionError> {
    let times: Vec<f64> = traj.times().collect();
    if times.len() < 3 {
        return Err(ActionError::TooFewSamples(times.len()));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > UNIFORM_TOL * h {
            return Err(ActionError::NonUniform(i));
        }
    }
    Ok(h)
}

/// Composite Simpson rule on a uniform grid; an odd interval count closes
/// with a trapezoid on the last cell.
fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    let even = n - n % 2;
    let mut acc = values[0] + values[even];
    for (i, v) in values.iter().enumerate().take(even).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = acc * h / 3.0;
    if even < n {
        total += 0.5 * h * (values[n - 1] + values[n]);
    }
    total
}

/// `S = ∫ L dt` along a uniformly sampled trajectory.
pub fn action_integral(l: &LagrangianModel, traj: &Trajectory) -> Result<f64, ActionError> {
    let h = uniform_step(traj)?;
    let values = traj.samples().iter().map(|s| l.eval(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(simpson(&values, h))
}

/// Default ε sweep `10^{-2}, 10^{-2.5}, …, 10^{-5}`.
pub fn default_eps_sweep() -> Vec<f64> {
    (0..7).map(|i| 10f64.powf(-2.0 - 0.5 * i as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub eps: f64,
    #[serde(rename = "deltaS")]
    pub delta_s: f64,
    /// Excluded from the fit as below the noise floor.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StationarityReport {
    #[serde(rename = "S")]
    pub s: f64,
    /// Slope of `ln|ΔS|` against `ln ε`; `None` when fewer than two points
    /// clear the noise floor.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// The trajectory satisfies the Euler–Lagrange equation to `RESIDUAL_TOL`.
    pub valid: bool,
    pub noise_floor_hit: bool,
    pub max_residual: f64,
    /// Literal `Σ p_α r⁽ᵅ⁾` at the first sample.
    pub paper_action: f64,
    pub points: Vec<SweepPoint>,
}

/// Measures how `S[r + εη] − S[r]` scales with `ε`. The trajectory must be
/// uniformly sampled and carry orders `0..=2N` so the residual can be checked.
pub fn stationarity_test(
    l: &LagrangianModel,
    traj: &Trajectory,
    pert: &PerturbationSpec,
    eps_sweep: &[f64],
) -> Result<StationarityReport, ActionError> {
    let mech = Mechanics::new(l);
    stationarity_test_with(&mech, traj, pert, eps_sweep)
}

pub fn stationarity_test_with(
    mech: &Mechanics,
    traj: &Trajectory,
    pert: &PerturbationSpec,
    eps_sweep: &[f64],
) -> Result<StationarityReport, ActionError> {
    let l = mech.model();
    let n = mech.order();
    let h = uniform_step(traj)?;
    pert.validate(n, l.dim())?;
    let samples = traj.samples();

    let base: Vec<f64> = samples.iter().map(|s| l.eval(s)).collect::<Result<_, _>>()?;
    let s = simpson(&base, h);
    let abs: Vec<f64> = base.iter().map(|v| v.abs()).collect();
    let scale = simpson(&abs, h);
    let floor = NOISE_FACTOR * f64::EPSILON * scale;

    let mut max_residual = 0.0_f64;
    for sample in samples {
        for r in mech.el_residual(sample)? {
            max_residual = max_residual.max(r.abs());
        }
    }

    let bumps: Vec<Vec<f64>> = samples
        .iter()
        .map(|sample| (0..=n).map(|k| pert.derivative(k, sample.t())).collect())
        .collect();

    let mut points = Vec::with_capacity(eps_sweep.len());
    for &eps in eps_sweep {
        let mut delta = Vec::with_capacity(samples.len());
        for ((sample, bump), l0) in samples.iter().zip(&bumps).zip(&base) {
            let mut derivs = sample.truncate(n)?.into_derivs();
            for (k, row) in derivs.iter_mut().enumerate() {
                row[pert.component] += eps * bump[k];
            }
            let perturbed = JetPoint::new(sample.t(), derivs)?;
            delta.push(l.eval(&perturbed)? - l0);
        }
        let delta_s = simpson(&delta, h);
        points.push(SweepPoint { eps, delta_s, excluded: delta_s.abs() <= floor });
    }

    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.excluded)
        .map(|p| (p.eps.ln(), p.delta_s.abs().ln()))
        .collect();
    let line = least_squares(&fit);
    let paper_action = mech.hamiltonian(&samples[0], Convention::Paper)?;

    Ok(StationarityReport {
        s,
        slope: line.map(|l| l.0),
        intercept: line.map(|l| l.1),
        valid: max_residual <= RESIDUAL_TOL,
        noise_floor_hit: points.iter().any(|p| p.excluded),
        max_residual,
        paper_action,
        points,
    })
}

/// Literal `S = Σ_α p_α · r⁽ᵅ⁾`, the same quantity as the paper-convention
/// Hamiltonian. Needs orders `0..2N−1`.
pub fn paper_action(l: &LagrangianModel, jet: &JetPoint) -> Result<f64, ActionError> {
    Ok(Mechanics::new(l).hamiltonian(jet, Convention::Paper)?)
}
