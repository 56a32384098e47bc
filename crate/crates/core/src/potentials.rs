//! Radial gravitational potentials: Newtonian `GM/r`, the exponential family
//! `(GM/k)·exp(k/r)` and a truncated power series in `k/r`, with force laws,
//! comparison against Newton, series diagnostics, a radial-Laplacian check
//! and planar test-particle orbits.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse, Bindings, Expr, ExprError, Variable};
use crate::integrate::{solve, IntegrateError, IntegratorSpec, OdeSystem};
use crate::jet::{JetError, JetPoint, StepStats, Trajectory};

/// Newtonian gravitational constant, m³ kg⁻¹ s⁻².
pub const G_SI: f64 = 6.674_30e-11;
/// Speed of light, m/s.
pub const C_SI: f64 = 299_792_458.0;
/// Planck-scale length used for `k`, m.
pub const PLANCK_LENGTH: f64 = 1e-35;
/// Nuclear length scale used for `k`, m.
pub const NUCLEAR_LENGTH: f64 = 1e-15;

/// `r_g = 2GM/c²`.
pub fn gravitational_radius(g: f64, mass: f64) -> f64 {
    2.0 * g * mass / (C_SI * C_SI)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("radius must be positive, got {0}")]
    Domain(f64),
    #[error("invalid potential model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpVariant {
    /// `(GM/k)·exp(k/r)`
    Raw,
    /// `(GM/k)·(exp(k/r) − 1)`, which tends to `GM/r` for `r ≫ k`.
    #[default]
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialKind {
    Newtonian,
    Exponential { variant: ExpVariant },
    /// `φ = GM · Σᵢ cᵢ (k/r)ⁱ`, `i = 1..`.
    Series { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialModel {
    #[serde(flatten)]
    pub kind: PotentialKind,
    pub g: f64,
    pub mass: f64,
    pub k: f64,
}

impl PotentialModel {
    pub fn new(kind: PotentialKind, g: f64, mass: f64, k: f64) -> Result<Self, PotentialError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(g) || !positive(mass) {
            return Err(PotentialError::Invalid(format!("G and M must be positive, got {g}, {mass}")));
        }
        if !positive(k) {
            return Err(PotentialError::Invalid(format!("k must be positive, got {k}")));
        }
        if let PotentialKind::Series { coeffs } = &kind {
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(PotentialError::Invalid(
                    "series needs at least one finite coefficient".into(),
                ));
            }
        }
        Ok(Self { kind, g, mass, k })
    }

    pub fn newtonian(g: f64, mass: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Newtonian, g, mass, 1.0)
    }

    pub fn exponential(g: f64, mass: f64, k: f64, variant: ExpVariant) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Exponential { variant }, g, mass, k)
    }

    /// `φ₀·exp(k/r)`, the raw exponential with `GM = φ₀·k` and unit `G`.
    pub fn green(phi0: f64, k: f64) -> Result<Self, PotentialError> {
        Self::exponential(1.0, phi0 * k, k, ExpVariant::Raw)
    }

    pub fn series(g: f64, mass: f64, k: f64, coeffs: Vec<f64>) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Series { coeffs }, g, mass, k)
    }

    pub fn gm(&self) -> f64 {
        self.g * self.mass
    }

    /// Amplitude `GM/k` of the exponential form.
    pub fn phi0(&self) -> f64 {
        self.gm() / self.k
    }

    pub fn label(&self) -> String {
        match &self.kind {
            PotentialKind::Newtonian => "newtonian".into(),
            PotentialKind::Exponential { variant: ExpVariant::Raw } => "exponential (raw)".into(),
            PotentialKind::Exponential { variant: ExpVariant::Shifted } => {
                "exponential (shifted)".into()
            }
            PotentialKind::Series { coeffs } => format!("series ({} terms)", coeffs.len()),
        }
    }
}

fn check_radius(r: f64) -> Result<(), PotentialError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(PotentialError::Domain(r))
    }
}

/// `φ(r)`.
pub fn potential_value(p: &PotentialModel, r: f64) -> Result<f64, PotentialError> {
    check_radius(r)?;
    let x = p.k / r;
    Ok(match &p.kind {
        PotentialKind::Newtonian => p.gm() / r,
        PotentialKind::Exponential { variant: ExpVariant::Raw } => p.phi0() * x.exp(),
        PotentialKind::Exponential { variant: ExpVariant::Shifted } => p.phi0() * x.exp_m1(),
        PotentialKind::Series { coeffs } => {
            p.gm() * coeffs.iter().enumerate().map(|(i, c)| c * x.powi(i as i32 + 1)).sum::<f64>()
        }
    })
}

/// Magnitude of the attractive radial force per unit test mass, `−dφ/dr`.
pub fn potential_force(p: &PotentialModel, r: f64) -> Result<f64, PotentialError> {
    check_radius(r)?;
    let x = p.k / r;
    Ok(match &p.kind {
        PotentialKind::Newtonian => p.gm() / (r * r),
        PotentialKind::Exponential { .. } => p.gm() / (r * r) * x.exp(),
        PotentialKind::Series { coeffs } => {
            p.gm() / r
                * coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i + 1) as f64 * c * x.powi(i as i32 + 1))
                    .sum::<f64>()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    NewtonianLimit,
    Modified,
    Strong,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::NewtonianLimit => "newtonian-limit",
            Regime::Modified => "modified",
            Regime::Strong => "strong",
        }
    }

    fn classify(excess: f64, ratio: f64) -> Self {
        if excess.abs() < 1e-6 {
            Regime::NewtonianLimit
        } else if ratio > 10.0 {
            Regime::Strong
        } else {
            Regime::Modified
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonRow {
    pub r: f64,
    pub phi_model: f64,
    pub phi_newton: f64,
    pub force_model: f64,
    pub force_newton: f64,
    /// `F_model / F_newton`.
    pub ratio: f64,
    /// `ratio − 1`, computed without cancellation for the exponential model.
    pub excess: f64,
    pub phi_difference: f64,
    pub regime: Regime,
}

/// Per-radius comparison of a model against `GM/r` with the same `GM`.
pub fn newtonian_comparison(
    p: &PotentialModel,
    radii: &[f64],
) -> Result<Vec<ComparisonRow>, PotentialError> {
    radii
        .iter()
        .map(|&r| {
            let phi_model = potential_value(p, r)?;
            let phi_newton = p.gm() / r;
            let force_model = potential_force(p, r)?;
            let force_newton = p.gm() / (r * r);
            let ratio = force_model / force_newton;
            let excess = match p.kind {
                PotentialKind::Exponential { .. } => (p.k / r).exp_m1(),
                _ => ratio - 1.0,
            };
            Ok(ComparisonRow {
                r,
                phi_model,
                phi_newton,
                force_model,
                force_newton,
                ratio,
                excess,
                phi_difference: phi_model - phi_newton,
                regime: Regime::classify(excess, ratio),
            })
        })
        .collect()
}

/// Coefficients `cᵢ = 1/(i!·k)`, `i = 1..=terms`, of the shifted exponential
/// written as `GM·Σ cᵢ (k/r)ⁱ`.
pub fn shifted_series_coeffs(k: f64, terms: usize) -> Vec<f64> {
    let mut fact = 1.0;
    (1..=terms)
        .map(|i| {
            fact *= i as f64;
            1.0 / (fact * k)
        })
        .collect()
}

/// Series coefficients of a potential expression obtained by repeated
/// symbolic differentiation in `u = 1/r` at `u = 0`: `cᵢ = φ⁽ⁱ⁾(0) / (i!·GM·kⁱ)`.
/// `phi` is written in the variable `u` and may use other bound parameters.
pub fn series_coeffs_symbolic(
    phi: &Expr,
    params: &BTreeMap<String, f64>,
    gm: f64,
    k: f64,
    terms: usize,
) -> Result<Vec<f64>, PotentialError> {
    let u = Variable::Param("u".into());
    let mut bound = params.clone();
    bound.insert("u".into(), 0.0);
    let b = Bindings::new(&bound, None);
    let mut d = phi.clone();
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(terms);
    for i in 1..=terms {
        d = d.partial(&u);
        fact *= i as f64;
        out.push(d.evaluate(&b)? / (fact * gm * k.powi(i as i32)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesRecord {
    pub r: f64,
    pub k_over_r: f64,
    /// `|cᵢ (k/r)ⁱ|`
    pub term_magnitudes: Vec<f64>,
    /// Running sums of `GM·cᵢ (k/r)ⁱ`.
    pub partial_sums: Vec<f64>,
    pub monotone_decreasing: bool,
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesDiagnostics {
    pub terms: usize,
    pub records: Vec<SeriesRecord>,
    /// Radius below which some term outgrows its predecessor,
    /// `k · max |cᵢ₊₁/cᵢ|` over consecutive nonzero coefficients.
    pub threshold_radius: Option<f64>,
}

/// Term-magnitude profile of a series model at each radius, using the
/// first `terms` stored coefficients.
pub fn series_divergence_scan(
    p: &PotentialModel,
    radii: &[f64],
    terms: usize,
) -> Result<SeriesDiagnostics, PotentialError> {
    let coeffs = match &p.kind {
        PotentialKind::Series { coeffs } => &coeffs[..terms.min(coeffs.len())],
        _ => return Err(PotentialError::Invalid("divergence scan needs a series model".into())),
    };
    if terms < 2 {
        return Err(PotentialError::Invalid(format!("need at least 2 terms, got {terms}")));
    }
    let nonvanishing = coeffs.iter().any(|c| *c != 0.0);
    let mut records = Vec::with_capacity(radii.len());
    for &r in radii {
        check_radius(r)?;
        let x = p.k / r;
        let values: Vec<f64> =
            coeffs.iter().enumerate().map(|(i, c)| c * x.powi(i as i32 + 1)).collect();
        let term_magnitudes: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        let partial_sums = values
            .iter()
            .scan(0.0, |acc, v| {
                *acc += p.gm() * v;
                Some(*acc)
            })
            .collect();
        let monotone_decreasing = term_magnitudes.windows(2).all(|w| w[1] < w[0]);
        let non_decreasing =
            term_magnitudes.len() >= 2 && term_magnitudes.windows(2).all(|w| w[1] >= w[0]);
        records.push(SeriesRecord {
            r,
            k_over_r: x,
            term_magnitudes,
            partial_sums,
            monotone_decreasing,
            divergent: nonvanishing && (x >= 1.0 || non_decreasing),
        });
    }
    let threshold_radius = coeffs
        .windows(2)
        .filter(|w| w[0] != 0.0 && w[1] != 0.0)
        .map(|w| (w[1] / w[0]).abs())
        .fold(None, |m: Option<f64>, q| Some(m.map_or(q, |m| m.max(q))))
        .map(|q| p.k * q);
    Ok(SeriesDiagnostics { terms: coeffs.len(), records, threshold_radius })
}

/// Radial Laplacian `φ'' + 2φ'/r` of `phi`, an expression in `r` and `k`,
/// evaluated symbolically at the given point. Zero for vacuum solutions.
pub fn laplacian_residual(phi: &Expr, k: f64, r: f64) -> Result<f64, PotentialError> {
    check_radius(r)?;
    let var = Variable::Param("r".into());
    let d1 = phi.partial(&var);
    let d2 = d1.partial(&var);
    let params = BTreeMap::from([("k".to_string(), k), ("r".to_string(), r)]);
    let b = Bindings::new(&params, None);
    Ok(d2.evaluate(&b)? + 2.0 * d1.evaluate(&b)? / r)
}

/// [`laplacian_residual`] for a textual expression.
pub fn laplacian_residual_text(phi: &str, k: f64, r: f64) -> Result<f64, PotentialError> {
    laplacian_residual(&parse(phi)?, k, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum Density {
    PointMass,
    UniformBall { radius: f64 },
}

/// Mass distribution of a source together with the units factor `κ` of the
/// Poisson source term. `κ` is carried for documentation only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceModel {
    pub density: Density,
    pub mass: f64,
    pub kappa: f64,
}

impl SourceModel {
    pub fn new(density: Density, mass: f64, kappa: f64) -> Result<Self, PotentialError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(PotentialError::Invalid(format!("source mass must be positive, got {mass}")));
        }
        if let Density::UniformBall { radius } = density {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(PotentialError::Invalid(format!(
                    "ball radius must be positive, got {radius}"
                )));
            }
        }
        Ok(Self { density, mass, kappa })
    }

    /// `ρ(r)`; a point mass has no finite density and reports zero off-center.
    pub fn density_at(&self, r: f64) -> f64 {
        match self.density {
            Density::PointMass => 0.0,
            Density::UniformBall { radius } if r <= radius => {
                self.mass / (4.0 / 3.0 * PI * radius.powi(3))
            }
            Density::UniformBall { .. } => 0.0,
        }
    }

    /// Mass enclosed within radius `r`.
    pub fn enclosed_mass(&self, r: f64) -> f64 {
        match self.density {
            Density::PointMass => self.mass,
            Density::UniformBall { radius } => self.mass * (r / radius).clamp(0.0, 1.0).powi(3),
        }
    }
}

/// Planar position and velocity of a unit-mass test particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitInit {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

impl OrbitInit {
    /// Circular Newtonian orbit of radius `r0` for the given `GM`.
    pub fn circular(gm: f64, r0: f64) -> Self {
        Self { position: [r0, 0.0], velocity: [0.0, (gm / r0).sqrt()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OrbitStats {
    pub periapsis: f64,
    pub apoapsis: f64,
    /// Mean time between successive periapsis passages.
    pub radial_period: Option<f64>,
    /// Mean rotation of the periapsis direction per radial period, radians.
    pub advance_per_orbit: f64,
    /// Relative radial variation below `CIRCULAR_TOL`; no periapsis exists.
    pub circular: bool,
    pub periapsis_passages: usize,
    /// Conserved energy `½v² − φ(r)`.
    pub energy: f64,
    pub energy_drift: f64,
    pub angular_momentum: f64,
    pub angular_momentum_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRun {
    pub trajectory: Trajectory,
    pub stats: OrbitStats,
    /// Reason the run stopped before `t1`, if it did.
    pub aborted: Option<String>,
}

const CIRCULAR_TOL: f64 = 1e-6;
const COLLISION_FRACTION: f64 = 1e-12;

struct OrbitSystem<'a> {
    p: &'a PotentialModel,
}

impl OrbitSystem<'_> {
    fn accel(&self, x: f64, y: f64) -> Result<[f64; 2], PotentialError> {
        let r = x.hypot(y);
        let f = potential_force(self.p, r)?;
        Ok([-f * x / r, -f * y / r])
    }
}

impl OdeSystem for OrbitSystem<'_> {
    fn len(&self) -> usize {
        4
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), IntegrateError> {
        let a = self
            .accel(y[0], y[1])
            .map_err(|e| IntegrateError::Stopped { t, reason: e.to_string() })?;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = a[0];
        dy[3] = a[1];
        Ok(())
    }
}

/// Integrates a test particle in the static field of `p` from `t = 0` to `t1`.
/// A radius below `1e−12` of the initial radius stops the run, and the
/// samples gathered so far are returned with the reason.
pub fn orbit_simulate(
    p: &PotentialModel,
    init: &OrbitInit,
    t1: f64,
    spec: &IntegratorSpec,
) -> Result<OrbitRun, PotentialError> {
    let r0 = init.position[0].hypot(init.position[1]);
    check_radius(r0)?;
    let sys = OrbitSystem { p };
    let y0 = [init.position[0], init.position[1], init.velocity[0], init.velocity[1]];
    let floor = COLLISION_FRACTION * r0;
    let guard = |t: f64, y: &[f64]| {
        let r = y[0].hypot(y[1]);
        if r < floor {
            Err(IntegrateError::Stopped { t, reason: format!("collision: r = {r:e}") })
        } else {
            Ok(())
        }
    };
    let (sol, aborted) = match solve(&sys, 0.0, &y0, t1, spec, guard) {
        Ok(sol) => (sol, None),
        Err(stop) => {
            if stop.partial.times.len() < 2 {
                return Err(stop.error.into());
            }
            (stop.partial, Some(stop.error.to_string()))
        }
    };
    let samples = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| {
            let a = sys.accel(y[0], y[1])?;
            Ok(JetPoint::new(t, vec![vec![y[0], y[1]], vec![y[2], y[3]], a.to_vec()])?)
        })
        .collect::<Result<Vec<_>, PotentialError>>()?;
    let stats = orbit_stats(p, &samples)?;
    let trajectory = Trajectory::new(samples, spec.name())?.with_stats(StepStats {
        accepted: sol.stats.accepted,
        rejected: sol.stats.rejected,
        rhs_evals: sol.stats.rhs_evals,
    });
    Ok(OrbitRun { trajectory, stats, aborted })
}

fn orbit_stats(p: &PotentialModel, samples: &[JetPoint]) -> Result<OrbitStats, PotentialError> {
    let radius = |s: &JetPoint| s.position()[0].hypot(s.position()[1]);
    let energy = |s: &JetPoint| -> Result<f64, PotentialError> {
        let v = s.derivs()[1][0].hypot(s.derivs()[1][1]);
        Ok(0.5 * v * v - potential_value(p, radius(s))?)
    };
    let ang = |s: &JetPoint| {
        let (r, v) = (s.position(), &s.derivs()[1]);
        r[0] * v[1] - r[1] * v[0]
    };
    let (mut rmin, mut rmax) = (f64::INFINITY, 0.0_f64);
    let e0 = energy(&samples[0])?;
    let l0 = ang(&samples[0]);
    let (mut de, mut dl) = (0.0_f64, 0.0_f64);
    for s in samples {
        let r = radius(s);
        rmin = rmin.min(r);
        rmax = rmax.max(r);
        de = de.max((energy(s)? - e0).abs());
        dl = dl.max((ang(s) - l0).abs());
    }
    let circular = (rmax - rmin) <= CIRCULAR_TOL * 0.5 * (rmax + rmin);

    let mut passages: Vec<(f64, f64)> = Vec::new();
    if !circular {
        for w in samples.windows(2) {
            let (f0, f1) = (radial_rate(&w[0]), radial_rate(&w[1]));
            if f0 < 0.0 && f1 >= 0.0 {
                passages.push(periapsis_between(&w[0], &w[1]));
            }
        }
    }
    let radial_period = (passages.len() >= 2).then(|| {
        (passages[passages.len() - 1].0 - passages[0].0) / (passages.len() - 1) as f64
    });
    let advance_per_orbit = if passages.len() >= 2 {
        let total: f64 = passages.windows(2).map(|w| wrap_angle(w[1].1 - w[0].1)).sum();
        total / (passages.len() - 1) as f64
    } else {
        0.0
    };
    Ok(OrbitStats {
        periapsis: rmin,
        apoapsis: rmax,
        radial_period,
        advance_per_orbit,
        circular,
        periapsis_passages: passages.len(),
        energy: e0,
        energy_drift: de,
        angular_momentum: l0,
        angular_momentum_drift: dl,
    })
}

/// `r · v`, proportional to `dr/dt`.
fn radial_rate(s: &JetPoint) -> f64 {
    let (r, v) = (s.position(), &s.derivs()[1]);
    r[0] * v[0] + r[1] * v[1]
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Quintic Hermite interpolant on `[0, h]` from value, slope and curvature
/// at both ends. Returns position, velocity at fraction `s`.
fn hermite5(a: &JetPoint, b: &JetPoint, s: f64, c: usize) -> (f64, f64) {
    let h = b.t() - a.t();
    let (p0, v0, a0) = (a.derivs()[0][c], a.derivs()[1][c] * h, a.derivs()[2][c] * h * h);
    let (p1, v1, a1) = (b.derivs()[0][c], b.derivs()[1][c] * h, b.derivs()[2][c] * h * h);
    let (s2, s3) = (s * s, s * s * s);
    let (s4, s5) = (s3 * s, s3 * s2);
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let d3 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let pos = h0 * p0 + h1 * v0 + h2 * a0 + h3 * a1 + h4 * v1 + h5 * p1;
    let vel = (d0 * p0 + d1 * v0 + d2 * a0 + d3 * a1 + d4 * v1 + d5 * p1) / h;
    (pos, vel)
}

/// Time and polar angle of the radius minimum between two samples whose
/// radial rates change sign from negative to non-negative.
fn periapsis_between(a: &JetPoint, b: &JetPoint) -> (f64, f64) {
    let rate = |s: f64| {
        let (x, vx) = hermite5(a, b, s, 0);
        let (y, vy) = hermite5(a, b, s, 1);
        x * vx + y * vy
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut flo, mut fhi) = (radial_rate(a), radial_rate(b));
    for _ in 0..100 {
        // Illinois-style regula falsi, falling back to bisection
        let mid = if fhi != flo { lo - flo * (hi - lo) / (fhi - flo) } else { 0.5 * (lo + hi) };
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        let fm = rate(mid);
        if fm < 0.0 {
            lo = mid;
            flo = fm;
            fhi *= 0.5;
        } else {
            hi = mid;
            fhi = fm;
            flo *= 0.5;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    let x = hermite5(a, b, s, 0).0;
    let y = hermite5(a, b, s, 1).0;
    (a.t() + s * (b.t() - a.t()), y.atan2(x))
}
