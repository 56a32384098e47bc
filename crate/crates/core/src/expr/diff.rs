//! Symbolic differentiation with conservative simplification: constant
//! folding, additive and multiplicative identities, `x^1 → x`, `x^0 → 1`.

use super::{Expr, Func, JetVar, Variable};

fn is_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        Expr::Mul(x, y) if is_const(&x).is_some() => mul(Expr::Const(-is_const(&x).unwrap()), *y),
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (is_const(&a), is_const(&b)) {
        (Some(x), Some(y)) => return Expr::Const(x + y),
        (Some(x), None) if x == 0.0 => return b,
        (None, Some(y)) if y == 0.0 => return a,
        _ => {}
    }
    match b {
        Expr::Neg(inner) => sub(a, *inner),
        b => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (is_const(&a), is_const(&b)) {
        (Some(x), Some(y)) => return Expr::Const(x - y),
        (Some(x), None) if x == 0.0 => return neg(b),
        (None, Some(y)) if y == 0.0 => return a,
        _ => {}
    }
    match b {
        Expr::Neg(inner) => add(a, *inner),
        b => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (is_const(&a), is_const(&b)) {
        (Some(x), Some(y)) => return Expr::Const(x * y),
        (Some(x), _) if x == 0.0 => return Expr::Const(0.0),
        (_, Some(y)) if y == 0.0 => return Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => return b,
        (_, Some(y)) if y == 1.0 => return a,
        (Some(x), _) if x == -1.0 => return neg(b),
        (_, Some(y)) if y == -1.0 => return neg(a),
        (None, Some(_)) => return mul(b, a),
        _ => {}
    }
    match (a, b) {
        // fold nested leading constants: c1 * (c2 * x) → (c1 c2) * x
        (Expr::Const(x), Expr::Mul(l, r)) if is_const(&l).is_some() => {
            mul(Expr::Const(x * is_const(&l).unwrap()), *r)
        }
        (Expr::Neg(x), Expr::Neg(y)) => mul(*x, *y),
        (Expr::Neg(x), y) | (y, Expr::Neg(x)) => neg(mul(y, *x)),
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (is_const(&a), is_const(&b)) {
        (Some(x), Some(y)) if y != 0.0 => return Expr::Const(x / y),
        (Some(x), _) if x == 0.0 => return Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => return a,
        (_, Some(y)) if y == -1.0 => return neg(a),
        _ => {}
    }
    match a {
        Expr::Neg(x) => neg(Expr::Div(x, Box::new(b))),
        a => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, b: Expr) -> Expr {
    match (is_const(&a), is_const(&b)) {
        (_, Some(y)) if y == 0.0 => return Expr::Const(1.0),
        (_, Some(y)) if y == 1.0 => return a,
        (Some(x), Some(y)) => {
            let v = x.powf(y);
            if v.is_finite() && (y.fract() == 0.0 || x > 0.0) {
                return Expr::Const(v);
            }
        }
        _ => {}
    }
    Expr::Pow(Box::new(a), Box::new(b))
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    if let Some(x) = is_const(&a) {
        let v = match f {
            Func::Exp => Some(x.exp()),
            Func::Sin => Some(x.sin()),
            Func::Cos => Some(x.cos()),
            Func::Ln if x > 0.0 => Some(x.ln()),
            Func::Sqrt if x >= 0.0 => Some(x.sqrt()),
            _ => None,
        };
        if let Some(v) = v.filter(|v| v.is_finite()) {
            return Expr::Const(v);
        }
    }
    Expr::Call(f, Box::new(a))
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl Expr {
    pub fn pow(self, exponent: Expr) -> Expr {
        pow(self, exponent)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        call(f, arg)
    }

    /// Sum of an iterator of expressions, zero when empty.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms.into_iter().fold(Expr::Const(0.0), add)
    }

    /// Rebuilds the tree bottom-up through the simplifying constructors.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Jet(_) | Expr::Time => self.clone(),
            Expr::Neg(a) => neg(a.simplify()),
            Expr::Add(x, y) => add(x.simplify(), y.simplify()),
            Expr::Sub(x, y) => sub(x.simplify(), y.simplify()),
            Expr::Mul(x, y) => mul(x.simplify(), y.simplify()),
            Expr::Div(x, y) => div(x.simplify(), y.simplify()),
            Expr::Pow(x, y) => pow(x.simplify(), y.simplify()),
            Expr::Call(f, a) => call(*f, a.simplify()),
        }
    }

    /// Exact `∂self/∂var`.
    pub fn partial(&self, var: &Variable) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Param(p) => one_if(matches!(var, Variable::Param(q) if q == p)),
            Expr::Jet(v) => one_if(matches!(var, Variable::Jet(w) if w == v)),
            Expr::Time => one_if(matches!(var, Variable::Time)),
            Expr::Neg(a) => neg(a.partial(var)),
            Expr::Add(x, y) => add(x.partial(var), y.partial(var)),
            Expr::Sub(x, y) => sub(x.partial(var), y.partial(var)),
            Expr::Mul(x, y) => add(
                mul(x.partial(var), y.simplify()),
                mul(x.simplify(), y.partial(var)),
            ),
            Expr::Div(x, y) => {
                let dx = x.partial(var);
                let dy = y.partial(var);
                let y = y.simplify();
                if dy.is_zero() {
                    div(dx, y)
                } else {
                    div(
                        sub(mul(dx, y.clone()), mul(x.simplify(), dy)),
                        pow(y, Expr::Const(2.0)),
                    )
                }
            }
            Expr::Pow(base, exp) => {
                let db = base.partial(var);
                let de = exp.partial(var);
                let b = base.simplify();
                let e = exp.simplify();
                if de.is_zero() {
                    // power rule; exponent independent of var
                    let lowered = match is_const(&e) {
                        Some(c) => Expr::Const(c - 1.0),
                        None => sub(e.clone(), Expr::Const(1.0)),
                    };
                    mul(mul(e, pow(b, lowered)), db)
                } else {
                    // d(b^e) = b^e (e' ln b + e b'/b)
                    let whole = pow(b.clone(), e.clone());
                    let rate = add(
                        mul(de, call(Func::Ln, b.clone())),
                        div(mul(e, db), b),
                    );
                    mul(whole, rate)
                }
            }
            Expr::Call(f, a) => {
                let da = a.partial(var);
                if da.is_zero() {
                    return Expr::Const(0.0);
                }
                let a = a.simplify();
                let outer = match f {
                    Func::Exp => call(Func::Exp, a),
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Ln => div(Expr::Const(1.0), a),
                    Func::Sqrt => div(Expr::Const(0.5), call(Func::Sqrt, a)),
                };
                mul(outer, da)
            }
        }
    }

    /// Total time derivative through every jet variable present.
    pub fn time_derivative(&self) -> Expr {
        self.total_time_derivative_upto(usize::MAX)
    }

    pub(crate) fn total_time_derivative_upto(&self, max_order: usize) -> Expr {
        let vars: Vec<JetVar> =
            self.jet_vars().into_iter().filter(|v| v.order <= max_order).collect();
        let explicit = self.partial(&Variable::Time);
        vars.into_iter().fold(explicit, |acc, v| {
            add(acc, mul(self.partial(&Variable::Jet(v)), Expr::Jet(v.next())))
        })
    }

    /// `dⁿ/dtⁿ` by repeated total differentiation.
    pub fn nth_time_derivative(&self, n: usize) -> Expr {
        (0..n).fold(self.simplify(), |e, _| e.time_derivative())
    }
}

fn one_if(hit: bool) -> Expr {
    Expr::Const(if hit { 1.0 } else { 0.0 })
}
