//! Coordinate jets: a time instant together with the coordinate and its
//! time derivatives up to a fixed order, plus Taylor propagation and the
//! sampled [`Trajectory`] type produced by the integrators.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("spatial dimension {0} is not supported (expected 1, 2 or 3)")]
    BadDimension(usize),
    #[error("derivative order {order} has {got} components, expected {dim}")]
    ComponentMismatch { order: usize, got: usize, dim: usize },
    #[error("jet needs at least one derivative order")]
    Empty,
    #[error("non-finite value at order {order}, component {component}")]
    NonFinite { order: usize, component: usize },
    #[error("non-finite time")]
    NonFiniteTime,
    #[error("order {requested} out of range (jet carries orders 0..={max})")]
    OrderOutOfRange { requested: usize, max: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("trajectory samples must be strictly increasing in t (sample {0})")]
    NotIncreasing(usize),
    #[error("trajectory samples must share order and dimension (sample {0})")]
    NonUniformShape(usize),
}

/// A point of the extended phase space: time plus `derivs[n] = r⁽ⁿ⁾(t)`
/// for `n = 0..=order`, each a vector of `dim` components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JetPoint {
    t: f64,
    dim: usize,
    derivs: Vec<Vec<f64>>,
}

impl JetPoint {
    pub fn new(t: f64, derivs: Vec<Vec<f64>>) -> Result<Self, JetError> {
        if !t.is_finite() {
            return Err(JetError::NonFiniteTime);
        }
        let dim = derivs.first().ok_or(JetError::Empty)?.len();
        if !(1..=3).contains(&dim) {
            return Err(JetError::BadDimension(dim));
        }
        for (order, d) in derivs.iter().enumerate() {
            if d.len() != dim {
                return Err(JetError::ComponentMismatch { order, got: d.len(), dim });
            }
            if let Some(component) = d.iter().position(|v| !v.is_finite()) {
                return Err(JetError::NonFinite { order, component });
            }
        }
        Ok(Self { t, dim, derivs })
    }

    /// One-dimensional jet from a list of derivative values `[r, ṙ, r̈, ...]`.
    pub fn scalar(t: f64, values: &[f64]) -> Result<Self, JetError> {
        Self::new(t, values.iter().map(|&v| vec![v]).collect())
    }

    pub fn zeros(t: f64, dim: usize, order: usize) -> Result<Self, JetError> {
        Self::new(t, vec![vec![0.0; dim]; order + 1])
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest derivative order carried.
    pub fn order(&self) -> usize {
        self.derivs.len() - 1
    }

    pub fn derivs(&self) -> &[Vec<f64>] {
        &self.derivs
    }

    pub fn deriv(&self, n: usize) -> Option<&[f64]> {
        self.derivs.get(n).map(Vec::as_slice)
    }

    pub fn position(&self) -> &[f64] {
        &self.derivs[0]
    }

    /// Component `c` of `r⁽ⁿ⁾`.
    pub fn get(&self, n: usize, c: usize) -> Option<f64> {
        self.derivs.get(n).and_then(|d| d.get(c)).copied()
    }

    pub fn into_derivs(self) -> Vec<Vec<f64>> {
        self.derivs
    }

    /// Propagates the jet to `t + dt` with a Taylor polynomial of degree
    /// `order`. Each derivative `n` becomes `Σ_{j=0..order-n} derivs[n+j] dtʲ/j!`;
    /// orders above `order` are copied unchanged.
    pub fn taylor_propagate(&self, dt: f64, order: usize) -> Result<Self, JetError> {
        if order > self.order() {
            return Err(JetError::OrderOutOfRange { requested: order, max: self.order() });
        }
        if !dt.is_finite() {
            return Err(JetError::NonFiniteTime);
        }
        let mut derivs = self.derivs.clone();
        for (n, out) in derivs.iter_mut().enumerate().take(order + 1) {
            for c in 0..self.dim {
                // Horner in dt over the coefficients derivs[n+j]/j!
                let mut acc = 0.0;
                for j in (0..=order - n).rev() {
                    acc = acc * dt / (j as f64 + 1.0) + self.derivs[n + j][c];
                }
                out[c] = acc;
            }
        }
        Ok(Self { t: self.t + dt, dim: self.dim, derivs })
    }

    /// Drops derivative orders above `new_order`.
    pub fn truncate(&self, new_order: usize) -> Result<Self, JetError> {
        if new_order > self.order() {
            return Err(JetError::OrderOutOfRange { requested: new_order, max: self.order() });
        }
        Ok(Self { t: self.t, dim: self.dim, derivs: self.derivs[..=new_order].to_vec() })
    }
}

/// Free-function form of [`JetPoint::taylor_propagate`].
pub fn taylor_propagate(jet: &JetPoint, dt: f64, order: usize) -> Result<JetPoint, JetError> {
    jet.taylor_propagate(dt, order)
}

/// Free-function form of [`JetPoint::truncate`].
pub fn truncate_jet(jet: &JetPoint, new_order: usize) -> Result<JetPoint, JetError> {
    jet.truncate(new_order)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Time-ordered jets sharing one order and dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    samples: Vec<JetPoint>,
    pub method: String,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn new(samples: Vec<JetPoint>, method: impl Into<String>) -> Result<Self, JetError> {
        if let Some(first) = samples.first() {
            for (i, pair) in samples.windows(2).enumerate() {
                if pair[1].t <= pair[0].t {
                    return Err(JetError::NotIncreasing(i + 1));
                }
            }
            if let Some(i) = samples
                .iter()
                .position(|s| s.dim != first.dim || s.order() != first.order())
            {
                return Err(JetError::NonUniformShape(i));
            }
        }
        Ok(Self { samples, method: method.into(), stats: StepStats::default() })
    }

    pub fn with_stats(mut self, stats: StepStats) -> Self {
        self.stats = stats;
        self
    }

    pub fn samples(&self) -> &[JetPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.samples.first().map(JetPoint::dim)
    }

    pub fn order(&self) -> Option<usize> {
        self.samples.first().map(JetPoint::order)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(JetPoint::t)
    }

    pub fn first(&self) -> Option<&JetPoint> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&JetPoint> {
        self.samples.last()
    }

    /// Index of the sample whose time is nearest to `t`.
    pub fn nearest_index(&self, t: f64) -> Option<usize> {
        if self.samples.is_empty() {
            return None;
        }
        let idx = self.samples.partition_point(|s| s.t < t);
        if idx == 0 {
            return Some(0);
        }
        if idx == self.samples.len() {
            return Some(idx - 1);
        }
        let before = t - self.samples[idx - 1].t;
        let after = self.samples[idx].t - t;
        Some(if after < before { idx } else { idx - 1 })
    }

    /// CSV text with header `t,r0_x[,r0_y,r0_z],r1_x,...` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        if let Some(first) = self.samples.first() {
            for n in 0..=first.order() {
                for axis in AXES.iter().take(first.dim) {
                    let _ = write!(out, ",r{n}_{axis}");
                }
            }
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&fmt_g17(s.t));
            for d in &s.derivs {
                for v in d {
                    out.push(',');
                    out.push_str(&fmt_g17(*v));
                }
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) const AXES: [&str; 3] = ["x", "y", "z"];

/// Formats a float with 17 significant digits in scientific notation.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinematic_formula() {
        let jet = JetPoint::scalar(0.0, &[0.0, 1.0, 2.0, 0.0]).unwrap();
        let out = jet.taylor_propagate(1.0, 2).unwrap();
        assert_eq!(out.get(0, 0), Some(2.0));
        assert_eq!(out.get(1, 0), Some(3.0));
        assert_eq!(out.get(2, 0), Some(2.0));
        assert_eq!(out.t(), 1.0);
    }

    #[test]
    fn zero_step_is_identity() {
        let jet = JetPoint::new(0.3, vec![vec![1.0, -2.0], vec![0.5, 0.25], vec![3.0, 7.0]]).unwrap();
        assert_eq!(jet.taylor_propagate(0.0, 2).unwrap(), jet);
    }

    #[test]
    fn cubic_exact_at_order_three() {
        let jet = JetPoint::scalar(0.0, &[0.0, 0.0, 0.0, 6.0, 0.0]).unwrap();
        let out = jet.taylor_propagate(2.0, 3).unwrap();
        assert_eq!(out.get(0, 0), Some(8.0));
        assert_eq!(out.get(1, 0), Some(12.0));
        assert_eq!(out.get(2, 0), Some(12.0));
        // order above the propagation order is frozen
        assert_eq!(out.get(4, 0), Some(0.0));
    }

    #[test]
    fn order_out_of_range() {
        let jet = JetPoint::scalar(0.0, &[1.0, 2.0]).unwrap();
        assert_eq!(
            jet.taylor_propagate(0.1, 2),
            Err(JetError::OrderOutOfRange { requested: 2, max: 1 })
        );
    }

    #[test]
    fn truncation() {
        let jet = JetPoint::scalar(0.0, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let two = jet.truncate(2).unwrap();
        assert_eq!(two.order(), 2);
        assert_eq!(two.derivs(), &[vec![1.0], vec![2.0], vec![3.0]]);
        assert_eq!(jet.truncate(4).unwrap(), jet);
        assert_eq!(jet.truncate(0).unwrap().derivs(), &[vec![1.0]]);
        assert!(jet.truncate(5).is_err());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(JetPoint::new(0.0, vec![]), Err(JetError::Empty));
        assert_eq!(JetPoint::new(0.0, vec![vec![0.0; 4]]), Err(JetError::BadDimension(4)));
        assert_eq!(
            JetPoint::new(0.0, vec![vec![0.0, 1.0], vec![2.0]]),
            Err(JetError::ComponentMismatch { order: 1, got: 1, dim: 2 })
        );
        assert_eq!(
            JetPoint::scalar(0.0, &[0.0, f64::NAN]),
            Err(JetError::NonFinite { order: 1, component: 0 })
        );
    }

    #[test]
    fn trajectory_validation() {
        let a = JetPoint::scalar(0.0, &[0.0, 1.0]).unwrap();
        let b = JetPoint::scalar(1.0, &[1.0, 1.0]).unwrap();
        let c = JetPoint::scalar(2.0, &[1.0]).unwrap();
        assert!(Trajectory::new(vec![a.clone(), b.clone()], "test").is_ok());
        assert_eq!(
            Trajectory::new(vec![b.clone(), a.clone()], "test").unwrap_err(),
            JetError::NotIncreasing(1)
        );
        assert_eq!(
            Trajectory::new(vec![a, b, c], "test").unwrap_err(),
            JetError::NonUniformShape(2)
        );
    }

    #[test]
    fn csv_layout() {
        let a = JetPoint::new(0.0, vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let traj = Trajectory::new(vec![a], "test").unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,r0_x,r0_y,r1_x,r1_y"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(fmt_g17(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn nearest_sample() {
        let samples = (0..5)
            .map(|i| JetPoint::scalar(i as f64, &[0.0]).unwrap())
            .collect();
        let traj = Trajectory::new(samples, "test").unwrap();
        assert_eq!(traj.nearest_index(-1.0), Some(0));
        assert_eq!(traj.nearest_index(2.4), Some(2));
        assert_eq!(traj.nearest_index(2.6), Some(3));
        assert_eq!(traj.nearest_index(9.0), Some(4));
    }
}
