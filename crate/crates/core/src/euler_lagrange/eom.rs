//! First-order reduction of the Euler–Lagrange equation.
//!
//! The state carries `r⁽⁰⁾..r⁽²ᴺ⁻¹⁾` for each component, component-major:
//! `state[c·2N + k] = r⁽ᵏ⁾_c`. The top derivative `r⁽²ᴺ⁾` is obtained by
//! solving the residual for it.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Mechanics, MechanicsError};
use crate::expr::{Bindings, Expr, ExprError, JetVar, Variable};
use crate::jet::JetPoint;
use crate::lagrangian::LagrangianModel;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_STEPS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EomError {
    #[error("degenerate top order: {0}")]
    Degenerate(String),
    #[error("top-order solve did not converge after {steps} Newton steps (residual {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },
    #[error("state has {got} entries, expected {expected}")]
    StateLength { got: usize, expected: usize },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
}

#[derive(Debug, Clone)]
enum TopSolve {
    /// `r⁽²ᴺ⁾_c = Σ_{n<N} coeffs[n] · r⁽²ⁿ⁾_c`
    Linear { coeffs: Vec<f64> },
    /// Damped Newton on the residual; `jacobian[c][k] = ∂R_c/∂r⁽²ᴺ⁾_k`.
    Newton { jacobian: Vec<Vec<Expr>> },
}

/// Equations of motion of a Lagrangian as a first-order system.
#[derive(Debug, Clone)]
pub struct EomSystem {
    mechanics: Mechanics,
    solve: TopSolve,
}

impl EomSystem {
    pub fn mechanics(&self) -> &Mechanics {
        &self.mechanics
    }

    pub fn model(&self) -> &LagrangianModel {
        self.mechanics.model()
    }

    /// Lagrangian order `N`.
    pub fn order(&self) -> usize {
        self.mechanics.order()
    }

    pub fn dim(&self) -> usize {
        self.mechanics.dim()
    }

    /// `2N · dim`.
    pub fn state_len(&self) -> usize {
        2 * self.order() * self.dim()
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.solve, TopSolve::Linear { .. })
    }

    /// Closed-form coefficients of the top derivative for quadratic models.
    pub fn linear_coeffs(&self) -> Option<&[f64]> {
        match &self.solve {
            TopSolve::Linear { coeffs } => Some(coeffs),
            TopSolve::Newton { .. } => None,
        }
    }

    fn params(&self) -> &BTreeMap<String, f64> {
        self.mechanics.params()
    }

    pub fn state_from_jet(&self, jet: &JetPoint) -> Result<Vec<f64>, EomError> {
        let two_n = 2 * self.order();
        if jet.dim() != self.dim() || jet.order() + 1 < two_n {
            return Err(EomError::StateLength {
                got: (jet.order() + 1) * jet.dim(),
                expected: self.state_len(),
            });
        }
        let mut state = vec![0.0; self.state_len()];
        for c in 0..self.dim() {
            for k in 0..two_n {
                state[c * two_n + k] = jet.derivs()[k][c];
            }
        }
        Ok(state)
    }

    /// Jet with orders `0..2N−1` from the state and `top` as order `2N`.
    fn jet_with_top(&self, t: f64, state: &[f64], top: &[f64]) -> Result<JetPoint, EomError> {
        let two_n = 2 * self.order();
        let dim = self.dim();
        let mut derivs = vec![vec![0.0; dim]; two_n + 1];
        for c in 0..dim {
            for k in 0..two_n {
                derivs[k][c] = state[c * two_n + k];
            }
            derivs[two_n][c] = top[c];
        }
        JetPoint::new(t, derivs).map_err(|_| EomError::NonFinite(t))
    }

    fn check_state(&self, state: &[f64]) -> Result<(), EomError> {
        if state.len() != self.state_len() {
            return Err(EomError::StateLength { got: state.len(), expected: self.state_len() });
        }
        Ok(())
    }

    /// Solves the Euler–Lagrange equation for `r⁽²ᴺ⁾`, one value per component.
    pub fn top_derivative(&self, t: f64, state: &[f64]) -> Result<Vec<f64>, EomError> {
        self.check_state(state)?;
        let two_n = 2 * self.order();
        let dim = self.dim();
        match &self.solve {
            TopSolve::Linear { coeffs } => Ok((0..dim)
                .map(|c| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(n, k)| k * state[c * two_n + 2 * n])
                        .sum()
                })
                .collect()),
            TopSolve::Newton { jacobian } => self.newton(t, state, jacobian),
        }
    }

    fn newton(&self, t: f64, state: &[f64], jacobian: &[Vec<Expr>]) -> Result<Vec<f64>, EomError> {
        let dim = self.dim();
        let residual_at = |x: &[f64]| -> Result<(Vec<f64>, JetPoint), EomError> {
            let jet = self.jet_with_top(t, state, x)?;
            let r = self.mechanics.el_residual(&jet)?;
            Ok((r, jet))
        };
        let norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut x = vec![0.0; dim];
        let (mut r, mut jet) = residual_at(&x)?;
        for _ in 0..NEWTON_MAX_STEPS {
            if norm(&r) == 0.0 {
                return Ok(x);
            }
            let b = Bindings::new(self.params(), Some(&jet));
            let mut j = vec![vec![0.0; dim]; dim];
            for (row, exprs) in j.iter_mut().zip(jacobian) {
                for (entry, e) in row.iter_mut().zip(exprs) {
                    *entry = e.evaluate(&b)?;
                }
            }
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let step = solve_dense(j, rhs).ok_or_else(|| {
                EomError::Degenerate(format!("singular top-order Jacobian at t = {t}"))
            })?;
            let mut lambda = 1.0;
            let (next_x, next_r, next_jet) = loop {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
                let (tr, tj) = residual_at(&trial)?;
                if norm(&tr) <= norm(&r) || lambda < 1e-3 {
                    break (trial, tr, tj);
                }
                lambda *= 0.5;
            };
            let converged = lambda * norm(&step) <= NEWTON_TOL * norm(&next_x).max(1.0);
            x = next_x;
            r = next_r;
            jet = next_jet;
            if converged {
                return Ok(x);
            }
        }
        Err(EomError::NoConvergence { steps: NEWTON_MAX_STEPS, residual: norm(&r) })
    }

    /// Time derivative of the state.
    pub fn rhs(&self, t: f64, state: &[f64], out: &mut [f64]) -> Result<(), EomError> {
        let top = self.top_derivative(t, state)?;
        let two_n = 2 * self.order();
        for c in 0..self.dim() {
            let base = c * two_n;
            out[base..base + two_n - 1].copy_from_slice(&state[base + 1..base + two_n]);
            out[base + two_n - 1] = top[c];
        }
        Ok(())
    }

    /// Jet at `t` carrying orders `0..=2N` (the top order from the solve).
    pub fn jet_from_state(&self, t: f64, state: &[f64]) -> Result<JetPoint, EomError> {
        let top = self.top_derivative(t, state)?;
        self.jet_with_top(t, state, &top)
    }

    /// Completes a jet that carries at least orders `0..2N−1` up to `order`
    /// by differentiating the equation of motion.
    pub fn extend_jet(&self, jet: &JetPoint, order: usize) -> Result<JetPoint, EomError> {
        let mut ext = self.extender(order.saturating_sub(2 * self.order()));
        ext.extend(jet, order)
    }

    /// Extends every sample of a trajectory to `order`.
    pub fn extend_trajectory(
        &self,
        traj: &crate::jet::Trajectory,
        order: usize,
    ) -> Result<crate::jet::Trajectory, EomError> {
        let mut ext = self.extender(order.saturating_sub(2 * self.order()));
        let samples = traj
            .samples()
            .iter()
            .map(|s| ext.extend(s, order))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(crate::jet::Trajectory::new(samples, traj.method.clone())
            .expect("extension keeps times and shape")
            .with_stats(traj.stats.clone()))
    }

    fn extender(&self, levels: usize) -> Extender<'_> {
        let derived = match &self.solve {
            TopSolve::Linear { .. } => Vec::new(),
            TopSolve::Newton { .. } => {
                let mut out: Vec<Vec<Expr>> = Vec::with_capacity(levels);
                let mut current = self.mechanics.residual_exprs().to_vec();
                for _ in 0..levels {
                    current = current.iter().map(Expr::time_derivative).collect();
                    out.push(current.clone());
                }
                out
            }
        };
        Extender { sys: self, derived }
    }
}

struct Extender<'a> {
    sys: &'a EomSystem,
    /// `derived[j−1][c] = dʲR_c/dtʲ`
    derived: Vec<Vec<Expr>>,
}

impl Extender<'_> {
    fn extend(&mut self, jet: &JetPoint, order: usize) -> Result<JetPoint, EomError> {
        let sys = self.sys;
        let two_n = 2 * sys.order();
        let dim = sys.dim();
        let mut derivs: Vec<Vec<f64>> = jet.derivs().iter().take(two_n).cloned().collect();
        if derivs.len() < two_n || jet.dim() != dim {
            return Err(EomError::StateLength {
                got: jet.derivs().len() * jet.dim(),
                expected: sys.state_len(),
            });
        }
        let state = sys.state_from_jet(jet)?;
        derivs.push(sys.top_derivative(jet.t(), &state)?);
        for level in 1..=order.saturating_sub(two_n) {
            let target = two_n + level;
            let next = match &sys.solve {
                TopSolve::Linear { coeffs } => (0..dim)
                    .map(|c| {
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(n, k)| k * derivs[2 * n + level][c])
                            .sum()
                    })
                    .collect(),
                TopSolve::Newton { jacobian } => {
                    // dʲR is affine in r⁽²ᴺ⁺ʲ⁾ with the top-order Jacobian as slope
                    let mut trial = derivs.clone();
                    trial.push(vec![0.0; dim]);
                    let probe = JetPoint::new(jet.t(), trial).map_err(|_| EomError::NonFinite(jet.t()))?;
                    let b = Bindings::new(sys.params(), Some(&probe));
                    let rest = self.derived[level - 1]
                        .iter()
                        .map(|e| e.evaluate(&b))
                        .collect::<Result<Vec<_>, _>>()?;
                    let j = jacobian
                        .iter()
                        .map(|row| row.iter().map(|e| e.evaluate(&b)).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()?;
                    let rhs = rest.iter().map(|v| -v).collect();
                    solve_dense(j, rhs).ok_or_else(|| {
                        EomError::Degenerate(format!("singular top-order Jacobian at t = {}", jet.t()))
                    })?
                }
            };
            debug_assert_eq!(derivs.len(), target);
            derivs.push(next);
        }
        derivs.truncate(order.max(two_n) + 1);
        JetPoint::new(jet.t(), derivs).map_err(|_| EomError::NonFinite(jet.t()))
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Builds the first-order system for `l`.
///
/// Quadratic models get the closed-form top derivative
/// `r⁽²ᴺ⁾ = −(1/c_N) Σ_{n<N} (−1)^{N−n} c_n r⁽²ⁿ⁾`; expression models solve
/// the residual for `r⁽²ᴺ⁾` by damped Newton at each evaluation.
pub fn derive_eom(l: &LagrangianModel) -> Result<EomSystem, EomError> {
    let order = l.order();
    if order == 0 {
        return Err(EomError::Degenerate(
            "Lagrangian has no derivative dependence (order 0)".into(),
        ));
    }
    let mechanics = Mechanics::new(l);
    let solve = match l {
        LagrangianModel::Quadratic(q) => {
            let c = q.coeffs();
            let top = c[order];
            if top == 0.0 {
                return Err(EomError::Degenerate("top coefficient is zero".into()));
            }
            let coeffs = (0..order)
                .map(|n| {
                    let sign = if (order - n).is_multiple_of(2) { 1.0 } else { -1.0 };
                    -sign * c[n] / top
                })
                .collect();
            TopSolve::Linear { coeffs }
        }
        LagrangianModel::Expression(e) => {
            let dim = l.dim();
            let expr = e.expr();
            let hessian_zero = (0..dim).all(|c| {
                let v = Variable::Jet(JetVar::for_dim(order, c, dim));
                expr.partial(&v).partial(&v).is_zero()
            });
            if hessian_zero {
                return Err(EomError::Degenerate(format!(
                    "∂²L/∂(r{order})² vanishes identically"
                )));
            }
            let jacobian: Vec<Vec<Expr>> = mechanics
                .residual_exprs()
                .iter()
                .map(|r| {
                    (0..dim)
                        .map(|k| r.partial(&Variable::Jet(JetVar::for_dim(2 * order, k, dim))))
                        .collect()
                })
                .collect();
            if jacobian.iter().flatten().all(Expr::is_zero) {
                return Err(EomError::Degenerate(format!(
                    "residual does not depend on r{}",
                    2 * order
                )));
            }
            TopSolve::Newton { jacobian }
        }
    };
    Ok(EomSystem { mechanics, solve })
}
