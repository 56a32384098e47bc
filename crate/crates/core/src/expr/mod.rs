//! A small expression language for Lagrangians and potentials.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```
//!
//! Identifiers `r<n>` and `r<n>_<x|y|z>` are jet variables (derivative order
//! `n`, optionally a component), `t` is time, a known function name followed
//! by `(` is a call, and everything else is a named parameter.

mod diff;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::jet::{JetPoint, AXES};

pub use parse::parse;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// A jet variable: derivative order plus an optional spatial component.
/// `component: None` is the plain form `r<n>`, only meaningful in one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub order: usize,
    pub component: Option<usize>,
}

impl JetVar {
    pub fn plain(order: usize) -> Self {
        Self { order, component: None }
    }

    pub fn component(order: usize, component: usize) -> Self {
        Self { order, component: Some(component) }
    }

    /// The same component at derivative order `order + 1`.
    pub fn next(self) -> Self {
        Self { order: self.order + 1, ..self }
    }

    pub fn with_order(self, order: usize) -> Self {
        Self { order, ..self }
    }

    /// Component index used when reading a jet of dimension `dim`.
    pub fn index(self, dim: usize) -> Option<usize> {
        match self.component {
            None if dim == 1 => Some(0),
            None => None,
            Some(c) if c < dim => Some(c),
            Some(_) => None,
        }
    }

    /// The variable naming component `c` of order `order` for dimension `dim`:
    /// plain in one dimension, suffixed otherwise.
    pub fn for_dim(order: usize, c: usize, dim: usize) -> Self {
        if dim == 1 {
            Self::plain(order)
        } else {
            Self::component(order, c)
        }
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.component {
            None => write!(f, "r{}", self.order),
            Some(c) => write!(f, "r{}_{}", self.order, AXES[c]),
        }
    }
}

/// Anything an expression can be differentiated with respect to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Jet(JetVar),
    Param(String),
    Time,
}

impl From<JetVar> for Variable {
    fn from(v: JetVar) -> Self {
        Variable::Jet(v)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Jet(v) => v.fmt(f),
            Variable::Param(p) => f.write_str(p),
            Variable::Time => f.write_str("t"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Ln,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> Result<f64, ExprError> {
        match self {
            Func::Exp => Ok(x.exp()),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Ln if x > 0.0 => Ok(x.ln()),
            Func::Ln => Err(ExprError::Domain(format!("ln of non-positive value {x}"))),
            Func::Sqrt if x >= 0.0 => Ok(x.sqrt()),
            Func::Sqrt => Err(ExprError::Domain(format!("sqrt of negative value {x}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Param(String),
    Jet(JetVar),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values for the free variables of an expression: named parameters plus an
/// optional jet supplying `t` and the jet variables.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub params: &'a BTreeMap<String, f64>,
    pub jet: Option<&'a JetPoint>,
}

impl<'a> Bindings<'a> {
    pub fn new(params: &'a BTreeMap<String, f64>, jet: Option<&'a JetPoint>) -> Self {
        Self { params, jet }
    }

    fn jet_value(&self, v: JetVar) -> Result<f64, ExprError> {
        let jet = self.jet.ok_or_else(|| ExprError::Unbound(v.to_string()))?;
        v.index(jet.dim())
            .and_then(|c| jet.get(v.order, c))
            .ok_or_else(|| ExprError::Unbound(v.to_string()))
    }
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn param(name: impl Into<String>) -> Self {
        Expr::Param(name.into())
    }

    pub fn jet(v: JetVar) -> Self {
        Expr::Jet(v)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    pub fn evaluate(&self, b: &Bindings<'_>) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Param(name) => *b
                .params
                .get(name)
                .ok_or_else(|| ExprError::Unbound(name.clone()))?,
            Expr::Jet(v) => b.jet_value(*v)?,
            Expr::Time => b.jet.ok_or_else(|| ExprError::Unbound("t".into()))?.t(),
            Expr::Neg(a) => -a.evaluate(b)?,
            Expr::Add(x, y) => x.evaluate(b)? + y.evaluate(b)?,
            Expr::Sub(x, y) => x.evaluate(b)? - y.evaluate(b)?,
            Expr::Mul(x, y) => x.evaluate(b)? * y.evaluate(b)?,
            Expr::Div(x, y) => {
                let num = x.evaluate(b)?;
                let den = y.evaluate(b)?;
                if den == 0.0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                num / den
            }
            Expr::Pow(base, exp) => {
                let x = base.evaluate(b)?;
                let e = exp.evaluate(b)?;
                pow(x, e)?
            }
            Expr::Call(f, a) => f.apply(a.evaluate(b)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(format!("non-finite result in `{self}`")))
        }
    }

    /// Collects the jet variables appearing in the expression.
    pub fn jet_vars(&self) -> BTreeSet<JetVar> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Jet(v) = e {
                out.insert(*v);
            }
        });
        out
    }

    /// Collects the parameter names appearing in the expression.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(p) = e {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn depends_on_time(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Time));
        found
    }

    /// Highest jet order present, if any jet variable appears.
    pub fn max_order(&self) -> Option<usize> {
        self.jet_vars().iter().map(|v| v.order).max()
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Jet(_) | Expr::Time => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(x, y)
            | Expr::Sub(x, y)
            | Expr::Mul(x, y)
            | Expr::Div(x, y)
            | Expr::Pow(x, y) => {
                x.visit(f);
                y.visit(f);
            }
        }
    }

    /// Replaces every occurrence of `var` with `with`.
    pub fn substitute(&self, var: &Variable, with: &Expr) -> Expr {
        let hit = match (self, var) {
            (Expr::Jet(v), Variable::Jet(w)) => v == w,
            (Expr::Param(p), Variable::Param(q)) => p == q,
            (Expr::Time, Variable::Time) => true,
            _ => false,
        };
        if hit {
            return with.clone();
        }
        let s = |e: &Expr| Box::new(e.substitute(var, with));
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Jet(_) | Expr::Time => self.clone(),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Call(f, a) => Expr::Call(*f, s(a)),
            Expr::Add(x, y) => Expr::Add(s(x), s(y)),
            Expr::Sub(x, y) => Expr::Sub(s(x), s(y)),
            Expr::Mul(x, y) => Expr::Mul(s(x), s(y)),
            Expr::Div(x, y) => Expr::Div(s(x), s(y)),
            Expr::Pow(x, y) => Expr::Pow(s(x), s(y)),
        }
    }

    /// Canonical fully parenthesized text; `parse(render(e)) == e` for parsed trees.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

fn pow(x: f64, e: f64) -> Result<f64, ExprError> {
    if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
        if x == 0.0 && e < 0.0 {
            return Err(ExprError::Domain("zero raised to a negative power".into()));
        }
        return Ok(x.powi(e as i32));
    }
    if x <= 0.0 {
        return Err(ExprError::Domain(format!(
            "non-integer power {e} of non-positive base {x}"
        )));
    }
    Ok(x.powf(e))
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "({c:?})")
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Param(p) => f.write_str(p),
            Expr::Jet(v) => v.fmt(f),
            Expr::Time => f.write_str("t"),
            // `-(...)` always wraps its operand so a negated literal stays a
            // negation rather than folding into a negative constant on reparse
            Expr::Neg(a) => write!(f, "(-({a}))"),
            Expr::Add(x, y) => write!(f, "({x} + {y})"),
            Expr::Sub(x, y) => write!(f, "({x} - {y})"),
            Expr::Mul(x, y) => write!(f, "({x} * {y})"),
            Expr::Div(x, y) => write!(f, "({x} / {y})"),
            Expr::Pow(x, y) => write!(f, "({x} ^ {y})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Evaluates `e` under the given bindings.
pub fn evaluate(e: &Expr, b: &Bindings<'_>) -> Result<f64, ExprError> {
    e.evaluate(b)
}

/// Exact symbolic `∂e/∂var`, lightly simplified.
pub fn partial_derivative(e: &Expr, var: &Variable) -> Expr {
    e.partial(var)
}

/// `d e/dt = ∂e/∂t + Σ (∂e/∂r⁽ⁿ⁾)·r⁽ⁿ⁺¹⁾`, summed over the jet variables of
/// `e` (those of order at most `max_order`, which should cover all of them).
pub fn total_time_derivative(e: &Expr, max_order: usize) -> Expr {
    e.total_time_derivative_upto(max_order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_at(text: &str, params: &[(&str, f64)], jet: &[f64]) -> Result<f64, ExprError> {
        let params: BTreeMap<String, f64> =
            params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let jet = JetPoint::scalar(0.0, jet).unwrap();
        parse(text)?.evaluate(&Bindings::new(&params, Some(&jet)))
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval_at("r0^2", &[], &[3.0]).unwrap(), 9.0);
        assert_eq!(
            eval_at("exp(k/r0)", &[("k", 1.0)], &[1.0]).unwrap(),
            std::f64::consts::E
        );
        assert!(matches!(eval_at("1/r0", &[], &[0.0]), Err(ExprError::Domain(_))));
        assert_eq!(
            eval_at("b*r1^2 - a*r0^2", &[("a", 1.0), ("b", 1.0)], &[1.0, 2.0]).unwrap(),
            3.0
        );
    }

    #[test]
    fn evaluation_errors() {
        assert_eq!(eval_at("q*r0", &[], &[1.0]), Err(ExprError::Unbound("q".into())));
        assert_eq!(eval_at("r3", &[], &[1.0]), Err(ExprError::Unbound("r3".into())));
        assert!(matches!(eval_at("ln(r0)", &[], &[-1.0]), Err(ExprError::Domain(_))));
        assert!(matches!(eval_at("sqrt(r0)", &[], &[-1.0]), Err(ExprError::Domain(_))));
        assert!(matches!(eval_at("r0^0.5", &[], &[-1.0]), Err(ExprError::Domain(_))));
        assert_eq!(eval_at("r0^3", &[], &[-2.0]).unwrap(), -8.0);
        assert!(matches!(eval_at("exp(r0)", &[], &[1000.0]), Err(ExprError::Domain(_))));
    }

    #[test]
    fn plain_variable_needs_one_dimension() {
        let params = BTreeMap::new();
        let jet = JetPoint::new(0.0, vec![vec![1.0, 2.0]]).unwrap();
        let b = Bindings::new(&params, Some(&jet));
        assert!(parse("r0").unwrap().evaluate(&b).is_err());
        assert_eq!(parse("r0_y").unwrap().evaluate(&b).unwrap(), 2.0);
        assert!(parse("r0_z").unwrap().evaluate(&b).is_err());
    }

    #[test]
    fn time_binding() {
        let params = BTreeMap::new();
        let jet = JetPoint::scalar(1.5, &[0.0]).unwrap();
        let b = Bindings::new(&params, Some(&jet));
        assert_eq!(parse("2*t").unwrap().evaluate(&b).unwrap(), 3.0);
    }

    #[test]
    fn render_shapes() {
        assert_eq!(parse("b*r1^2 - a*r0^2").unwrap().render(), "((b * (r1 ^ 2.0)) - (a * (r0 ^ 2.0)))");
        assert_eq!(parse("-2").unwrap().render(), "(-2.0)");
        assert_eq!(parse("-x").unwrap().render(), "(-(x))");
        assert_eq!(parse("exp(-r0_x)").unwrap().render(), "exp((-(r0_x)))");
    }

    #[test]
    fn variable_queries() {
        let e = parse("a*r1_x^2 + sin(t)*r3_y - k").unwrap();
        assert_eq!(e.max_order(), Some(3));
        assert!(e.depends_on_time());
        assert_eq!(
            e.params().into_iter().collect::<Vec<_>>(),
            vec!["a".to_string(), "k".to_string()]
        );
        assert_eq!(e.jet_vars().len(), 2);
    }

    #[test]
    fn substitution() {
        let e = parse("k/r0 + k").unwrap();
        let s = e.substitute(&Variable::Param("k".into()), &Expr::Const(2.0));
        assert_eq!(s, parse("2/r0 + 2").unwrap());
    }
}
