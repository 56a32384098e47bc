//! Run configuration: TOML with a fixed schema, dotted-path overrides, and
//! construction of the engine objects it describes.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use jetmech::integrate::IntegratorSpec;
use jetmech::potentials::{shifted_series_coeffs, ExpVariant, OrbitInit, PotentialKind};
use jetmech::{
    ExpressionLagrangian, JetPoint, LagrangianModel, PotentialModel, QuadraticLagrangian,
    RankGrouping,
};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lagrangian: LagrangianSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub action: ActionSection,
    #[serde(default)]
    pub energy: EnergySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagrangianKind {
    #[default]
    Harmonic,
    PaisUhlenbeck,
    FreeParticle,
    Quadratic,
    Expression,
}

impl LagrangianKind {
    pub fn name(self) -> &'static str {
        match self {
            LagrangianKind::Harmonic => "harmonic",
            LagrangianKind::PaisUhlenbeck => "pais-uhlenbeck",
            LagrangianKind::FreeParticle => "free-particle",
            LagrangianKind::Quadratic => "quadratic",
            LagrangianKind::Expression => "expression",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct LagrangianSection {
    #[serde(default)]
    pub kind: LagrangianKind,
    pub coeffs: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub expr: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub omega: Option<f64>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    #[default]
    Dopri5,
    Rk4,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct IntegratorSection {
    #[serde(default)]
    pub method: MethodName,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    pub step: Option<f64>,
    #[serde(default = "default_tspan")]
    pub tspan: [f64; 2],
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_rel_tol() -> f64 {
    1e-10
}

fn default_abs_tol() -> f64 {
    1e-12
}

fn default_tspan() -> [f64; 2] {
    [0.0, TAU]
}

fn default_max_steps() -> usize {
    10_000_000
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            method: MethodName::default(),
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            step: None,
            tspan: default_tspan(),
            max_steps: default_max_steps(),
        }
    }
}

/// Initial derivatives, either one value per order (one-dimensional) or one
/// vector per order.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum JetInput {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct InitialSection {
    pub derivs: Option<JetInput>,
    pub position: Option<[f64; 2]>,
    pub velocity: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKindName {
    Newtonian,
    #[default]
    Exponential,
    Series,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantName {
    Raw,
    #[default]
    Shifted,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct PotentialSection {
    #[serde(default)]
    pub kind: PotentialKindName,
    #[serde(rename = "G", default = "one")]
    pub g: f64,
    #[serde(rename = "M", default = "one")]
    pub m: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub variant: VariantName,
    pub coefficients: Option<Vec<f64>>,
    #[serde(default = "default_terms")]
    pub terms: usize,
    /// Poisson source units factor; recorded in outputs only.
    pub kappa: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn one() -> f64 {
    1.0
}

fn default_k() -> f64 {
    1e-3
}

fn default_terms() -> usize {
    6
}

fn default_points() -> usize {
    41
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            kind: PotentialKindName::default(),
            g: 1.0,
            m: 1.0,
            k: default_k(),
            variant: VariantName::default(),
            coefficients: None,
            terms: default_terms(),
            kappa: None,
            radii: None,
            r_min: None,
            r_max: None,
            points: default_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ActionSection {
    /// Bump exponent; defaults to the Lagrangian order plus one.
    pub m: Option<usize>,
    #[serde(default)]
    pub component: usize,
    pub eps: Option<Vec<f64>>,
    /// Fixed RK4 steps across the time span.
    #[serde(default = "default_action_steps")]
    pub steps: usize,
}

fn default_action_steps() -> usize {
    2000
}

impl Default for ActionSection {
    fn default() -> Self {
        Self { m: None, component: 0, eps: None, steps: default_action_steps() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupingName {
    #[default]
    Paired,
    PerOrder,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct EnergySection {
    #[serde(default)]
    pub grouping: GroupingName,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: TableFormat,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), format: TableFormat::default() }
    }
}

/// Parses `raw` as a TOML value, falling back to a plain string.
fn parse_scalar(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies one `a.b.c=value` override.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Config(format!("override `{assignment}` must have the form key.path=value"))
    })?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override `{assignment}` has an empty key")));
    }
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut table = root;
    for (depth, key) in parents.iter().enumerate() {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("`{}` is not a table", keys[..=depth].join(".")))
        })?;
    }
    table.insert(last.to_string(), parse_scalar(raw.trim()));
    Ok(())
}

/// Reads the config (or starts from defaults), applies overrides, and
/// validates the result against the schema.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let origin = path.map_or_else(|| "<defaults>".to_string(), |p| p.display().to_string());
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{origin}: {}", e.message())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn unused(key: &str, present: bool, kind: &str) -> Result<(), CliError> {
    if present {
        Err(CliError::Config(format!("lagrangian.{key} is not used by kind `{kind}`")))
    } else {
        Ok(())
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let l = &self.lagrangian;
        let kind = l.kind.name();
        match l.kind {
            LagrangianKind::Harmonic => {
                unused("coeffs", l.coeffs.is_some(), kind)?;
                unused("expr", l.expr.is_some(), kind)?;
                unused("omega1", l.omega1.is_some(), kind)?;
                unused("omega2", l.omega2.is_some(), kind)?;
            }
            LagrangianKind::PaisUhlenbeck => {
                unused("coeffs", l.coeffs.is_some(), kind)?;
                unused("expr", l.expr.is_some(), kind)?;
                unused("omega", l.omega.is_some(), kind)?;
            }
            LagrangianKind::FreeParticle => {
                unused("coeffs", l.coeffs.is_some(), kind)?;
                unused("expr", l.expr.is_some(), kind)?;
                unused("omega", l.omega.is_some(), kind)?;
            }
            LagrangianKind::Quadratic => {
                if l.coeffs.is_none() {
                    return Err(CliError::Config("lagrangian.coeffs is required for kind `quadratic`".into()));
                }
                unused("expr", l.expr.is_some(), kind)?;
            }
            LagrangianKind::Expression => {
                if l.expr.is_none() {
                    return Err(CliError::Config("lagrangian.expr is required for kind `expression`".into()));
                }
                unused("coeffs", l.coeffs.is_some(), kind)?;
                unused("dim", l.dim.is_some(), kind)?;
            }
        }
        if !matches!(l.kind, LagrangianKind::Expression) && !l.params.is_empty() {
            return Err(CliError::Config(format!("lagrangian.params is not used by kind `{kind}`")));
        }
        let i = &self.integrator;
        if !(i.tspan[1] > i.tspan[0]) {
            return Err(CliError::Config(format!(
                "integrator.tspan must be increasing, got {:?}",
                i.tspan
            )));
        }
        if let Some(step) = i.step {
            if !(step > 0.0) {
                return Err(CliError::Config(format!("integrator.step must be positive, got {step}")));
            }
        }
        if !(i.rel_tol > 0.0 && i.abs_tol > 0.0) {
            return Err(CliError::Config("integrator.relTol and absTol must be positive".into()));
        }
        if i.max_steps == 0 {
            return Err(CliError::Config("integrator.maxSteps must be at least 1".into()));
        }
        if self.action.steps < 2 {
            return Err(CliError::Config("action.steps must be at least 2".into()));
        }
        Ok(())
    }

    pub fn lagrangian(&self) -> Result<LagrangianModel, CliError> {
        let l = &self.lagrangian;
        let config = |e: jetmech::LagrangianError| CliError::Config(format!("lagrangian: {e}"));
        let with_dim = |coeffs: Vec<f64>| -> Result<LagrangianModel, CliError> {
            Ok(QuadraticLagrangian::new(coeffs, l.dim.unwrap_or(1)).map_err(config)?.into())
        };
        let preset = |m: LagrangianModel| match m {
            LagrangianModel::Quadratic(q) => with_dim(q.coeffs().to_vec()),
            other => Ok(other),
        };
        match l.kind {
            LagrangianKind::Harmonic => preset(LagrangianModel::harmonic(l.omega.unwrap_or(1.0))),
            LagrangianKind::PaisUhlenbeck => preset(LagrangianModel::pais_uhlenbeck(
                l.omega1.unwrap_or(1.0),
                l.omega2.unwrap_or(2.0),
            )),
            LagrangianKind::FreeParticle => preset(LagrangianModel::free_particle()),
            LagrangianKind::Quadratic => with_dim(l.coeffs.clone().unwrap_or_default()),
            LagrangianKind::Expression => {
                let text = l.expr.as_deref().unwrap_or_default();
                Ok(ExpressionLagrangian::parse(text, l.params.clone()).map_err(config)?.into())
            }
        }
    }

    /// Initial jet carrying orders `0..2N−1`; defaults to unit displacement
    /// of the first component at rest.
    pub fn initial_jet(&self, model: &LagrangianModel) -> Result<JetPoint, CliError> {
        let (order, dim) = (model.order(), model.dim());
        let needed = (2 * order).max(1);
        let t0 = self.integrator.tspan[0];
        let derivs = match &self.initial.derivs {
            None => {
                let mut d = vec![vec![0.0; dim]; needed];
                d[0][0] = 1.0;
                d
            }
            Some(JetInput::Flat(v)) if dim == 1 => v.iter().map(|x| vec![*x]).collect(),
            Some(JetInput::Flat(_)) => {
                return Err(CliError::Config(format!(
                    "initial.derivs must list one {dim}-vector per order"
                )))
            }
            Some(JetInput::Nested(v)) => v.clone(),
        };
        if derivs.len() < needed {
            return Err(CliError::Config(format!(
                "initial.derivs has {} orders; the equation of motion needs {needed}",
                derivs.len()
            )));
        }
        JetPoint::new(t0, derivs).map_err(|e| CliError::Config(format!("initial.derivs: {e}")))
    }

    pub fn integrator_spec(&self) -> IntegratorSpec {
        let i = &self.integrator;
        let span = i.tspan[1] - i.tspan[0];
        let spec = match i.method {
            MethodName::Dopri5 => IntegratorSpec::dopri5(i.rel_tol, i.abs_tol),
            MethodName::Rk4 => IntegratorSpec::rk4(i.step.unwrap_or(span / 1000.0)),
        };
        spec.with_max_steps(i.max_steps)
    }

    pub fn potential(&self) -> Result<PotentialModel, CliError> {
        let p = &self.potential;
        let kind = match p.kind {
            PotentialKindName::Newtonian => PotentialKind::Newtonian,
            PotentialKindName::Exponential => PotentialKind::Exponential {
                variant: match p.variant {
                    VariantName::Raw => ExpVariant::Raw,
                    VariantName::Shifted => ExpVariant::Shifted,
                },
            },
            PotentialKindName::Series => PotentialKind::Series {
                coeffs: p.coefficients.clone().unwrap_or_else(|| shifted_series_coeffs(p.k, p.terms)),
            },
        };
        PotentialModel::new(kind, p.g, p.m, p.k).map_err(|e| CliError::Config(format!("potential: {e}")))
    }

    /// Explicit radii, or a logarithmic sweep from `rMin` to `rMax`
    /// (default `k/10` to `1000·k`).
    pub fn radii(&self) -> Result<Vec<f64>, CliError> {
        let p = &self.potential;
        if let Some(r) = &p.radii {
            if r.is_empty() {
                return Err(CliError::Config("potential.radii is empty".into()));
            }
            return Ok(r.clone());
        }
        let lo = p.r_min.unwrap_or(p.k / 10.0);
        let hi = p.r_max.unwrap_or(p.k * 1e3);
        if !(lo > 0.0 && hi >= lo) || p.points == 0 {
            return Err(CliError::Config(format!(
                "potential radius sweep needs 0 < rMin <= rMax and points >= 1, got {lo}, {hi}, {}",
                p.points
            )));
        }
        if p.points == 1 {
            return Ok(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        Ok((0..p.points)
            .map(|i| (a + (b - a) * i as f64 / (p.points - 1) as f64).exp())
            .collect())
    }

    pub fn orbit_init(&self, p: &PotentialModel) -> OrbitInit {
        let position = self.initial.position.unwrap_or([1.0, 0.0]);
        let r0 = position[0].hypot(position[1]);
        let velocity = self.initial.velocity.unwrap_or_else(|| {
            let v = (p.gm() / r0).sqrt();
            [-v * position[1] / r0, v * position[0] / r0]
        });
        OrbitInit { position, velocity }
    }

    pub fn grouping(&self) -> RankGrouping {
        match self.energy.grouping {
            GroupingName::Paired => RankGrouping::Paired,
            GroupingName::PerOrder => RankGrouping::PerOrder,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_text(text: &str, overrides: &[&str]) -> Result<RunConfig, CliError> {
        let mut table: toml::Table = text.parse().unwrap();
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn unknown_key_is_named() {
        let err = from_text("[lagragian]\nkind = \"harmonic\"\n", &[]).unwrap_err();
        assert!(err.to_string().contains("lagragian"), "{err}");
        let err = from_text("[integrator]\nreltol = 1e-9\n", &[]).unwrap_err();
        assert!(err.to_string().contains("reltol"), "{err}");
    }

    #[test]
    fn overrides_apply_after_parse() {
        let cfg = from_text("[integrator]\nrelTol = 1e-6\n", &["integrator.relTol=1e-10", "lagrangian.kind=free-particle"])
            .unwrap();
        assert_eq!(cfg.integrator.rel_tol, 1e-10);
        assert_eq!(cfg.lagrangian.kind, LagrangianKind::FreeParticle);
        let cfg = from_text("", &["potential.radii=[1.0, 2.0]"]).unwrap();
        assert_eq!(cfg.radii().unwrap(), vec![1.0, 2.0]);
        assert!(from_text("", &["nonsense"]).is_err());
        assert!(from_text("", &["seed.x=1"]).is_err());
    }

    #[test]
    fn kind_specific_keys() {
        assert!(from_text("[lagrangian]\nkind = \"quadratic\"\n", &[]).is_err());
        assert!(from_text("[lagrangian]\nkind = \"harmonic\"\ncoeffs = [1.0]\n", &[]).is_err());
        let cfg = from_text(
            "[lagrangian]\nkind = \"expression\"\nexpr = \"0.5*r1^2 - a*r0^4\"\nparams = { a = 0.25 }\n",
            &[],
        )
        .unwrap();
        let l = cfg.lagrangian().unwrap();
        assert_eq!(l.order(), 1);
        assert_eq!(cfg.initial_jet(&l).unwrap().order(), 1);
    }

    #[test]
    fn defaults_build() {
        let cfg = RunConfig::default();
        let l = cfg.lagrangian().unwrap();
        assert_eq!(l.order(), 1);
        assert_eq!(cfg.radii().unwrap().len(), 41);
        let p = cfg.potential().unwrap();
        let init = cfg.orbit_init(&p);
        assert_eq!(init.velocity, [0.0, 1.0]);
    }
}
