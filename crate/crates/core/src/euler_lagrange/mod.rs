//! Euler–Lagrange machinery for Lagrangians depending on derivatives up to
//! order `N`: the residual `Σ_n (−1)ⁿ dⁿ/dtⁿ ∂L/∂r⁽ⁿ⁾`, Ostrogradsky momenta,
//! the generalized Hamilton function, and the force/momentum ladder.
//!
//! Everything is built symbolically once by [`Mechanics::new`] and then
//! evaluated on jets.

mod eom;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError, JetVar};
use crate::jet::JetPoint;
use crate::lagrangian::{check_jet, LagrangianError, LagrangianModel};

pub use eom::{derive_eom, EomError, EomSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanicsError {
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl From<crate::jet::JetError> for MechanicsError {
    fn from(e: crate::jet::JetError) -> Self {
        MechanicsError::Lagrangian(LagrangianError::Invalid(e.to_string()))
    }
}

/// Which momentum/Hamiltonian formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Ostrogradsky: `p_α = Σ_{n=α+1..N} (−d/dt)^{n−α−1} ∂L/∂r⁽ⁿ⁾`,
    /// `H = Σ p_α·r⁽ᵅ⁺¹⁾ − L`.
    #[default]
    Standard,
    /// The literal forms `p_α = Σ_{n=α..N} (−1)^{n−α} d^{n−α}/dt^{n−α} ∂L/∂r⁽ⁿ⁾`
    /// and `H = Σ p_α·r⁽ᵅ⁾`.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentaVector {
    /// `values[α][component]`.
    pub values: Vec<Vec<f64>>,
    pub convention: Convention,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceLadder {
    /// `forces[α] = ∂L/∂r⁽²ᵅ⁾` per component.
    pub forces: Vec<Vec<f64>>,
    /// `momenta[α] = ∂L/∂r⁽²ᵅ⁺¹⁾` per component.
    pub momenta: Vec<Vec<f64>>,
}

/// Symbolic Euler–Lagrange data for one Lagrangian.
#[derive(Debug, Clone)]
pub struct Mechanics {
    model: LagrangianModel,
    lagrangian: Expr,
    params: BTreeMap<String, f64>,
    order: usize,
    dim: usize,
    /// `partials[n][c] = ∂L/∂r⁽ⁿ⁾_c`
    partials: Vec<Vec<Expr>>,
    residual: Vec<Expr>,
    momenta_standard: Vec<Vec<Expr>>,
    momenta_paper: Vec<Vec<Expr>>,
    hamiltonian_standard: Expr,
    hamiltonian_paper: Expr,
    ladder_forces: Vec<Vec<Expr>>,
    ladder_momenta: Vec<Vec<Expr>>,
    newton_balance: Vec<Expr>,
}

fn signed(k: usize, e: Expr) -> Expr {
    if k.is_multiple_of(2) {
        e
    } else {
        -e
    }
}

impl Mechanics {
    pub fn new(model: &LagrangianModel) -> Self {
        let order = model.order();
        let dim = model.dim();
        let lagrangian = model.expr();
        let partials: Vec<Vec<Expr>> = (0..=order).map(|n| model.partial_wrt_order(n)).collect();

        // time_derivs[n][c][j] = dʲ/dtʲ ∂L/∂r⁽ⁿ⁾_c for j = 0..=n
        let time_derivs: Vec<Vec<Vec<Expr>>> = partials
            .iter()
            .enumerate()
            .map(|(n, per_comp)| {
                per_comp
                    .iter()
                    .map(|p| {
                        let mut chain = vec![p.clone()];
                        for j in 0..n {
                            let next = chain[j].time_derivative();
                            chain.push(next);
                        }
                        chain
                    })
                    .collect()
            })
            .collect();
        let d = |n: usize, c: usize, j: usize| time_derivs[n][c][j].clone();

        let residual = (0..dim)
            .map(|c| Expr::sum((0..=order).map(|n| signed(n, d(n, c, n)))))
            .collect();

        let momenta_standard: Vec<Vec<Expr>> = (0..order)
            .map(|alpha| {
                (0..dim)
                    .map(|c| {
                        Expr::sum((alpha + 1..=order).map(|n| {
                            let k = n - alpha - 1;
                            signed(k, d(n, c, k))
                        }))
                    })
                    .collect()
            })
            .collect();

        let momenta_paper: Vec<Vec<Expr>> = (0..order)
            .map(|alpha| {
                (0..dim)
                    .map(|c| {
                        Expr::sum((alpha..=order).map(|n| {
                            let k = n - alpha;
                            signed(k, d(n, c, k))
                        }))
                    })
                    .collect()
            })
            .collect();

        let pairing = |shift: usize| {
            Expr::sum(momenta_standard.iter().enumerate().flat_map(|(alpha, p)| {
                p.iter().enumerate().map(move |(c, pc)| {
                    pc.clone() * Expr::Jet(JetVar::for_dim(alpha + shift, c, dim))
                })
            }))
        };
        let hamiltonian_standard = pairing(1) - lagrangian.simplify();
        let hamiltonian_paper = pairing(0);

        let rungs = (order + 2) / 2;
        let ladder_forces: Vec<Vec<Expr>> =
            (0..rungs).map(|a| model.partial_wrt_order(2 * a)).collect();
        let ladder_momenta: Vec<Vec<Expr>> =
            (0..rungs).map(|a| model.partial_wrt_order(2 * a + 1)).collect();
        let newton_balance = (0..dim)
            .map(|c| {
                let forces = Expr::sum(ladder_forces.iter().map(|f| f[c].clone()));
                let rates = Expr::sum(
                    ladder_momenta
                        .iter()
                        .enumerate()
                        .map(|(a, p)| p[c].nth_time_derivative(a + 1)),
                );
                forces - rates
            })
            .collect();

        Self {
            model: model.clone(),
            lagrangian,
            params: model.params(),
            order,
            dim,
            partials,
            residual,
            momenta_standard,
            momenta_paper,
            hamiltonian_standard,
            hamiltonian_paper,
            ladder_forces,
            ladder_momenta,
            newton_balance,
        }
    }

    pub fn model(&self) -> &LagrangianModel {
        &self.model
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    /// `∂L/∂r⁽ⁿ⁾` per component (empty past the model order).
    pub fn partials(&self, n: usize) -> &[Expr] {
        self.partials.get(n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn residual_exprs(&self) -> &[Expr] {
        &self.residual
    }

    pub fn momenta_exprs(&self, convention: Convention) -> &[Vec<Expr>] {
        match convention {
            Convention::Standard => &self.momenta_standard,
            Convention::Paper => &self.momenta_paper,
        }
    }

    pub fn hamiltonian_expr(&self, convention: Convention) -> &Expr {
        match convention {
            Convention::Standard => &self.hamiltonian_standard,
            Convention::Paper => &self.hamiltonian_paper,
        }
    }

    pub fn newton_balance_exprs(&self) -> &[Expr] {
        &self.newton_balance
    }

    fn eval_all(&self, exprs: &[Expr], jet: &JetPoint) -> Result<Vec<f64>, MechanicsError> {
        let b = Bindings::new(&self.params, Some(jet));
        exprs.iter().map(|e| Ok(e.evaluate(&b)?)).collect()
    }

    fn eval_one(&self, e: &Expr, jet: &JetPoint) -> Result<f64, MechanicsError> {
        Ok(e.evaluate(&Bindings::new(&self.params, Some(jet)))?)
    }

    /// Euler–Lagrange residual per component; needs jet orders up to `2N`.
    pub fn el_residual(&self, jet: &JetPoint) -> Result<Vec<f64>, MechanicsError> {
        check_jet(jet, 2 * self.order, self.dim)?;
        self.eval_all(&self.residual, jet)
    }

    /// Momenta `p_0..p_{N−1}`. The standard convention needs orders up to
    /// `2N−1`, the literal one up to `2N`.
    pub fn momenta(
        &self,
        jet: &JetPoint,
        convention: Convention,
    ) -> Result<MomentaVector, MechanicsError> {
        let need = match convention {
            Convention::Standard => (2 * self.order).saturating_sub(1),
            Convention::Paper => 2 * self.order,
        };
        check_jet(jet, need, self.dim)?;
        let values = self
            .momenta_exprs(convention)
            .iter()
            .map(|p| self.eval_all(p, jet))
            .collect::<Result<_, _>>()?;
        Ok(MomentaVector { values, convention })
    }

    /// Standard: `Σ p_α·r⁽ᵅ⁺¹⁾ − L`. Paper: `Σ p_α·r⁽ᵅ⁾` with the Ostrogradsky
    /// momenta. Both need orders up to `2N−1`.
    pub fn hamiltonian(&self, jet: &JetPoint, convention: Convention) -> Result<f64, MechanicsError> {
        check_jet(jet, (2 * self.order).saturating_sub(1).max(self.order), self.dim)?;
        self.eval_one(self.hamiltonian_expr(convention), jet)
    }

    /// Force/momentum ladder `F⁽ᵅ⁾ = ∂L/∂r⁽²ᵅ⁾`, `p⁽ᵅ⁾ = ∂L/∂r⁽²ᵅ⁺¹⁾`.
    pub fn force_ladder(&self, jet: &JetPoint) -> Result<ForceLadder, MechanicsError> {
        check_jet(jet, self.order, self.dim)?;
        let forces = self
            .ladder_forces
            .iter()
            .map(|f| self.eval_all(f, jet))
            .collect::<Result<_, _>>()?;
        let momenta = self
            .ladder_momenta
            .iter()
            .map(|p| self.eval_all(p, jet))
            .collect::<Result<_, _>>()?;
        Ok(ForceLadder { forces, momenta })
    }

    /// `Σ_α F⁽ᵅ⁾ − Σ_α d^{α+1}p⁽ᵅ⁾/dt^{α+1}` per component; needs orders up to `2N`.
    pub fn newton_balance_residual(&self, jet: &JetPoint) -> Result<Vec<f64>, MechanicsError> {
        let need = self
            .newton_balance
            .iter()
            .filter_map(Expr::max_order)
            .max()
            .unwrap_or(0)
            .max(2 * self.order);
        check_jet(jet, need, self.dim)?;
        self.eval_all(&self.newton_balance, jet)
    }
}

/// Euler–Lagrange residual of `l` at `jet`.
pub fn el_residual(l: &LagrangianModel, jet: &JetPoint) -> Result<Vec<f64>, MechanicsError> {
    Mechanics::new(l).el_residual(jet)
}

pub fn ostrogradsky_momenta(
    l: &LagrangianModel,
    jet: &JetPoint,
    convention: Convention,
) -> Result<MomentaVector, MechanicsError> {
    Mechanics::new(l).momenta(jet, convention)
}

pub fn generalized_hamiltonian(
    l: &LagrangianModel,
    jet: &JetPoint,
    convention: Convention,
) -> Result<f64, MechanicsError> {
    Mechanics::new(l).hamiltonian(jet, convention)
}

pub fn force_ladder(l: &LagrangianModel, jet: &JetPoint) -> Result<ForceLadder, MechanicsError> {
    Mechanics::new(l).force_ladder(jet)
}

pub fn newton_balance_residual(
    l: &LagrangianModel,
    jet: &JetPoint,
) -> Result<Vec<f64>, MechanicsError> {
    Mechanics::new(l).newton_balance_residual(jet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{ExpressionLagrangian, QuadraticLagrangian};

    fn jet(v: &[f64]) -> JetPoint {
        JetPoint::scalar(0.0, v).unwrap()
    }

    fn quad(c: &[f64]) -> LagrangianModel {
        QuadraticLagrangian::new(c.to_vec(), 1).unwrap().into()
    }

    #[test]
    fn residual_examples() {
        let free = LagrangianModel::free_particle();
        assert_eq!(el_residual(&free, &jet(&[1.0, 2.0, 0.0])).unwrap(), vec![0.0]);
        let harmonic = LagrangianModel::harmonic(1.0);
        assert_eq!(el_residual(&harmonic, &jet(&[1.0, 0.0, -1.0])).unwrap(), vec![0.0]);
        let snap = quad(&[0.0, 0.0, 0.5]);
        assert_eq!(el_residual(&snap, &jet(&[1.0, 2.0, 3.0, 4.0, 0.0])).unwrap(), vec![0.0]);
        assert_eq!(el_residual(&snap, &jet(&[1.0, 2.0, 3.0, 4.0, 3.0])).unwrap(), vec![3.0]);
        assert!(matches!(
            el_residual(&snap, &jet(&[1.0, 2.0, 3.0])),
            Err(MechanicsError::Lagrangian(LagrangianError::InsufficientOrder { need: 4, have: 2 }))
        ));
    }

    #[test]
    fn residual_of_quadratic_has_alternating_pattern() {
        // Σ (−1)ⁿ 2 c_n r⁽²ⁿ⁾
        let m = Mechanics::new(&quad(&[1.5, -2.0, 0.25]));
        let j = jet(&[0.3, 9.0, 0.7, -4.0, 1.1]);
        let expected = 2.0 * 1.5 * 0.3 + 2.0 * 2.0 * 0.7 + 2.0 * 0.25 * 1.1;
        assert!((m.el_residual(&j).unwrap()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn momenta_examples() {
        let free = LagrangianModel::free_particle();
        let p = ostrogradsky_momenta(&free, &jet(&[0.0, 3.0]), Convention::Standard).unwrap();
        assert_eq!(p.values, vec![vec![3.0]]);

        let snap = quad(&[0.0, 0.0, 0.5]);
        let p = ostrogradsky_momenta(&snap, &jet(&[0.1, 0.2, 0.3, 0.4]), Convention::Standard)
            .unwrap();
        assert_eq!(p.values, vec![vec![-0.4], vec![0.3]]);

        let harmonic = LagrangianModel::harmonic(1.0);
        let p = ostrogradsky_momenta(&harmonic, &jet(&[1.0, 2.0, -1.0]), Convention::Paper)
            .unwrap();
        assert_eq!(p.values, vec![vec![0.0]]);
        assert!(ostrogradsky_momenta(&harmonic, &jet(&[1.0, 2.0]), Convention::Paper).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let harmonic = LagrangianModel::harmonic(1.0);
        let h = generalized_hamiltonian(&harmonic, &jet(&[1.0, 0.0, -1.0]), Convention::Standard)
            .unwrap();
        assert_eq!(h, 0.5);
        let free = LagrangianModel::free_particle();
        let h = generalized_hamiltonian(&free, &jet(&[-7.0, 3.0]), Convention::Standard).unwrap();
        assert_eq!(h, 4.5);
        let h = generalized_hamiltonian(&free, &jet(&[2.0, 3.0]), Convention::Paper).unwrap();
        assert_eq!(h, 6.0);
    }

    #[test]
    fn pais_uhlenbeck_hamiltonian_closed_form() {
        // H = p0 r1 + p1 r2 − L with p0 = −c1'... checked against a hand expansion
        let (w1, w2) = (1.0_f64, 2.0_f64);
        let m = Mechanics::new(&LagrangianModel::pais_uhlenbeck(w1, w2));
        let j = jet(&[0.3, -0.2, 0.5, 0.7]);
        let (r, v, a, s) = (0.3, -0.2, 0.5, 0.7);
        let c1 = -0.5 * (w1 * w1 + w2 * w2);
        let p0 = 2.0 * c1 * v - s;
        let p1 = a;
        let l = 0.5 * a * a + c1 * v * v + 0.5 * w1 * w1 * w2 * w2 * r * r;
        let h = m.hamiltonian(&j, Convention::Standard).unwrap();
        assert!((h - (p0 * v + p1 * a - l)).abs() < 1e-15);
    }

    #[test]
    fn ladder_examples() {
        let harmonic = LagrangianModel::harmonic(1.0);
        let f = force_ladder(&harmonic, &jet(&[2.0, 5.0])).unwrap();
        assert_eq!(f.forces, vec![vec![-2.0]]);
        assert_eq!(f.momenta, vec![vec![5.0]]);

        let snap = quad(&[0.0, 0.0, 0.5]);
        let f = force_ladder(&snap, &jet(&[1.0, 2.0, 4.0])).unwrap();
        assert_eq!(f.forces, vec![vec![0.0], vec![4.0]]);
        assert_eq!(f.momenta, vec![vec![0.0], vec![0.0]]);
    }

    #[test]
    fn newton_balance_examples() {
        let harmonic = LagrangianModel::harmonic(1.0);
        assert_eq!(newton_balance_residual(&harmonic, &jet(&[1.0, 0.0, -1.0])).unwrap(), vec![0.0]);
        assert_eq!(newton_balance_residual(&harmonic, &jet(&[1.0, 0.0, 0.0])).unwrap(), vec![-1.0]);
        // L = ½r̈²: the ladder sum is F⁽¹⁾ = r̈, unlike the EL residual r⁽⁴⁾
        let snap = quad(&[0.0, 0.0, 0.5]);
        assert_eq!(
            newton_balance_residual(&snap, &jet(&[1.0, 2.0, 0.0, 0.0, 0.0])).unwrap(),
            vec![0.0]
        );
        assert_eq!(
            newton_balance_residual(&snap, &jet(&[1.0, 2.0, 0.5, 0.0, 0.0])).unwrap(),
            vec![0.5]
        );
    }

    #[test]
    fn vector_lagrangian_components_are_independent() {
        let l: LagrangianModel =
            ExpressionLagrangian::parse("0.5*(r1_x^2 + r1_y^2) - 0.5*(r0_x^2 + 4*r0_y^2)", BTreeMap::new())
                .unwrap()
                .into();
        let j = JetPoint::new(0.0, vec![vec![1.0, 1.0], vec![0.0, 0.0], vec![-1.0, -4.0]]).unwrap();
        assert_eq!(el_residual(&l, &j).unwrap(), vec![0.0, 0.0]);
        let h = generalized_hamiltonian(&l, &j, Convention::Standard).unwrap();
        assert_eq!(h, 0.5 + 2.0);
    }
}
