//! Lagrangian models: quadratic forms in the derivative orders and general
//! DSL expressions, plus the rank decomposition of the quadratic energy.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError, JetVar, Variable};
use crate::jet::JetPoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LagrangianError {
    #[error("jet carries orders 0..={have} but {need} are needed")]
    InsufficientOrder { need: usize, have: usize },
    #[error("jet dimension {jet} does not match model dimension {model}")]
    DimensionMismatch { jet: usize, model: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `L = Σ_n c_n |r⁽ⁿ⁾|²`, summed over the spatial components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticLagrangian {
    coeffs: Vec<f64>,
    dim: usize,
}

impl QuadraticLagrangian {
    /// Trailing zero coefficients are dropped (with a warning) so that the
    /// top coefficient is nonzero unless the model has order 0.
    pub fn new(coeffs: Vec<f64>, dim: usize) -> Result<Self, LagrangianError> {
        if coeffs.is_empty() {
            return Err(LagrangianError::Invalid("no coefficients".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(LagrangianError::Invalid(format!("coefficient c{i} is not finite")));
        }
        if !(1..=3).contains(&dim) {
            return Err(LagrangianError::Invalid(format!("dimension {dim} not in 1..=3")));
        }
        let mut coeffs = coeffs;
        let declared = coeffs.len() - 1;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.len() - 1 < declared {
            log::warn!(
                "top coefficient c{declared} is zero; reducing Lagrangian order to {}",
                coeffs.len() - 1
            );
        }
        Ok(Self { coeffs, dim })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, jet: &JetPoint) -> Result<f64, LagrangianError> {
        check_jet(jet, self.order(), self.dim)?;
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * jet.derivs()[n].iter().map(|v| v * v).sum::<f64>())
            .sum())
    }

    /// The same polynomial as DSL text, e.g. `0.5*r1^2 + (-0.5)*r0^2`.
    pub fn to_text(&self) -> String {
        let mut terms = Vec::new();
        for (n, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for comp in 0..self.dim {
                let v = JetVar::for_dim(n, comp, self.dim);
                terms.push(if c < 0.0 { format!("({c:?})*{v}^2") } else { format!("{c:?}*{v}^2") });
            }
        }
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }

    pub fn to_expr(&self) -> Expr {
        Expr::sum(self.coeffs.iter().enumerate().flat_map(|(n, &c)| {
            (0..self.dim).map(move |comp| {
                Expr::Const(c) * Expr::Jet(JetVar::for_dim(n, comp, self.dim)).pow(Expr::Const(2.0))
            })
        }))
    }
}

/// A Lagrangian given as a DSL expression over `t` and the jet variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionLagrangian {
    expr: Expr,
    params: BTreeMap<String, f64>,
    order: usize,
    dim: usize,
}

impl ExpressionLagrangian {
    pub fn new(expr: Expr, params: BTreeMap<String, f64>) -> Result<Self, LagrangianError> {
        let vars = expr.jet_vars();
        let plain = vars.iter().any(|v| v.component.is_none());
        let max_comp = vars.iter().filter_map(|v| v.component).max();
        let dim = match (plain, max_comp) {
            (true, Some(_)) => {
                return Err(LagrangianError::Invalid(
                    "plain jet variables cannot be mixed with component variables".into(),
                ))
            }
            (_, Some(c)) => c + 1,
            _ => 1,
        };
        if let Some(missing) = expr.params().into_iter().find(|p| !params.contains_key(p)) {
            return Err(LagrangianError::Invalid(format!("parameter `{missing}` has no value")));
        }
        if let Some((k, _)) = params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(LagrangianError::Invalid(format!("parameter `{k}` is not finite")));
        }
        let order = expr.max_order().unwrap_or(0);
        Ok(Self { expr, params, order, dim })
    }

    pub fn parse(text: &str, params: BTreeMap<String, f64>) -> Result<Self, LagrangianError> {
        Self::new(crate::expr::parse(text)?, params)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, jet: &JetPoint) -> Result<f64, LagrangianError> {
        check_jet(jet, self.order, self.dim)?;
        Ok(self.expr.evaluate(&Bindings::new(&self.params, Some(jet)))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LagrangianModel {
    Quadratic(QuadraticLagrangian),
    Expression(ExpressionLagrangian),
}

impl From<QuadraticLagrangian> for LagrangianModel {
    fn from(q: QuadraticLagrangian) -> Self {
        LagrangianModel::Quadratic(q)
    }
}

impl From<ExpressionLagrangian> for LagrangianModel {
    fn from(e: ExpressionLagrangian) -> Self {
        LagrangianModel::Expression(e)
    }
}

impl LagrangianModel {
    /// `L = ½ṙ² − ½ω²r²`.
    pub fn harmonic(omega: f64) -> Self {
        QuadraticLagrangian::new(vec![-0.5 * omega * omega, 0.5], 1)
            .expect("finite coefficients")
            .into()
    }

    /// `L = ½r̈² − ½(ω₁²+ω₂²)ṙ² + ½ω₁²ω₂²r²`, the Pais–Uhlenbeck oscillator.
    pub fn pais_uhlenbeck(omega1: f64, omega2: f64) -> Self {
        let (a, b) = (omega1 * omega1, omega2 * omega2);
        QuadraticLagrangian::new(vec![0.5 * a * b, -0.5 * (a + b), 0.5], 1)
            .expect("finite coefficients")
            .into()
    }

    /// `L = ½ṙ²`.
    pub fn free_particle() -> Self {
        QuadraticLagrangian::new(vec![0.0, 0.5], 1).expect("finite coefficients").into()
    }

    pub fn order(&self) -> usize {
        match self {
            LagrangianModel::Quadratic(q) => q.order(),
            LagrangianModel::Expression(e) => e.order(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LagrangianModel::Quadratic(q) => q.dim(),
            LagrangianModel::Expression(e) => e.dim(),
        }
    }

    /// The Lagrangian as an expression (quadratic models are expanded).
    pub fn expr(&self) -> Expr {
        match self {
            LagrangianModel::Quadratic(q) => q.to_expr(),
            LagrangianModel::Expression(e) => e.expr().clone(),
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        match self {
            LagrangianModel::Quadratic(_) => BTreeMap::new(),
            LagrangianModel::Expression(e) => e.params().clone(),
        }
    }

    pub fn eval(&self, jet: &JetPoint) -> Result<f64, LagrangianError> {
        match self {
            LagrangianModel::Quadratic(q) => q.eval(jet),
            LagrangianModel::Expression(e) => e.eval(jet),
        }
    }

    /// `∂L/∂r⁽ⁿ⁾`, one expression per spatial component.
    pub fn partial_wrt_order(&self, n: usize) -> Vec<Expr> {
        let dim = self.dim();
        (0..dim)
            .map(|c| {
                let v = JetVar::for_dim(n, c, dim);
                match self {
                    LagrangianModel::Quadratic(q) => match q.coeffs().get(n) {
                        Some(&cn) => Expr::Const(2.0 * cn) * Expr::Jet(v),
                        None => Expr::Const(0.0),
                    },
                    LagrangianModel::Expression(e) => e.expr().partial(&Variable::Jet(v)),
                }
            })
            .collect()
    }
}

/// Free-function form of [`LagrangianModel::eval`].
pub fn eval_lagrangian(l: &LagrangianModel, jet: &JetPoint) -> Result<f64, LagrangianError> {
    l.eval(jet)
}

/// Free-function form of [`LagrangianModel::partial_wrt_order`].
pub fn partial_wrt_order(l: &LagrangianModel, n: usize) -> Vec<Expr> {
    l.partial_wrt_order(n)
}

pub(crate) fn check_jet(jet: &JetPoint, need: usize, dim: usize) -> Result<(), LagrangianError> {
    if jet.dim() != dim {
        return Err(LagrangianError::DimensionMismatch { jet: jet.dim(), model: dim });
    }
    if jet.order() < need {
        return Err(LagrangianError::InsufficientOrder { need, have: jet.order() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankGrouping {
    /// Rank `j` holds orders `2j−2` and `2j−1`.
    #[default]
    Paired,
    /// One rank per derivative order.
    PerOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRanks {
    pub ranks: Vec<f64>,
    pub total: f64,
    pub grouping: RankGrouping,
}

/// Splits the quadratic form `Σ c_n |r⁽ⁿ⁾|²` into ranks.
pub fn energy_ranks(
    q: &QuadraticLagrangian,
    jet: &JetPoint,
    grouping: RankGrouping,
) -> Result<EnergyRanks, LagrangianError> {
    check_jet(jet, q.order(), q.dim())?;
    let per_order: Vec<f64> = q
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| c * jet.derivs()[n].iter().map(|v| v * v).sum::<f64>())
        .collect();
    let ranks: Vec<f64> = match grouping {
        RankGrouping::PerOrder => per_order,
        RankGrouping::Paired => per_order.chunks(2).map(|p| p.iter().sum()).collect(),
    };
    let total = ranks.iter().sum();
    Ok(EnergyRanks { ranks, total, grouping })
}
