//! Symbolic partial derivatives of field expressions, used to assemble vector
//! fields such as `v |grad phi|^{p-2} grad phi` whose divergence is then taken
//! with forward-mode jets.

use super::expr::FieldExpr;
use crate::space::GrushinSpace;

/// A Euclidean coordinate direction (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
}

impl Var {
    /// The variable for flat index `i` of `(x_1..x_m, y_1..y_k)`.
    pub fn from_flat(space: &GrushinSpace, i: usize) -> Self {
        if i < space.m() {
            Var::X(i)
        } else {
            Var::Y(i - space.m())
        }
    }
}

fn k(v: f64) -> FieldExpr {
    FieldExpr::real(v)
}

pub(crate) fn add(a: FieldExpr, b: FieldExpr) -> FieldExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => FieldExpr::Const(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => a + b,
    }
}

pub(crate) fn sub(a: FieldExpr, b: FieldExpr) -> FieldExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => FieldExpr::Const(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => a - b,
    }
}

pub(crate) fn mul(a: FieldExpr, b: FieldExpr) -> FieldExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => FieldExpr::Const(x * y),
        _ if a.is_zero() || b.is_zero() => k(0.0),
        _ if a.is_one() => b,
        _ if b.is_one() => a,
        _ => a * b,
    }
}

pub(crate) fn div(a: FieldExpr, b: FieldExpr) -> FieldExpr {
    if a.is_zero() {
        return k(0.0);
    }
    if b.is_one() {
        return a;
    }
    a / b
}

pub(crate) fn neg(a: FieldExpr) -> FieldExpr {
    match a {
        FieldExpr::Const(c) => FieldExpr::Const(-c),
        FieldExpr::Neg(inner) => *inner,
        other => -other,
    }
}

pub(crate) fn pow(a: FieldExpr, e: f64) -> FieldExpr {
    if e == 0.0 {
        return k(1.0);
    }
    if e == 1.0 {
        return a;
    }
    a.powf(e)
}

/// `d expr / d var` in the given space; `rho` derivatives depend on `gamma`.
pub fn partial(expr: &FieldExpr, space: &GrushinSpace, var: Var) -> FieldExpr {
    use FieldExpr as F;
    let g = space.gamma();
    match expr {
        F::Const(_) => k(0.0),
        F::X(i) => k(if var == Var::X(*i) { 1.0 } else { 0.0 }),
        F::Y(j) => k(if var == Var::Y(*j) { 1.0 } else { 0.0 }),
        F::AbsX => match var {
            Var::X(i) => div(F::X(i), F::AbsX),
            Var::Y(_) => k(0.0),
        },
        F::Rho => match var {
            Var::X(i) => mul(
                mul(pow(F::AbsX, 2.0 * g), F::X(i)),
                pow(F::Rho, -(2.0 * g + 1.0)),
            ),
            Var::Y(j) => mul(mul(k(1.0 + g), F::Y(j)), pow(F::Rho, -(2.0 * g + 1.0))),
        },
        F::RhoEps(eps) => match var {
            Var::X(i) => {
                let xe2 = (0..space.m()).fold(k(eps * eps), |acc, l| add(acc, pow(F::X(l), 2.0)));
                mul(
                    mul(pow(xe2, g), F::X(i)),
                    pow(F::RhoEps(*eps), -(2.0 * g + 1.0)),
                )
            }
            Var::Y(j) => mul(
                mul(k(1.0 + g), F::Y(j)),
                pow(F::RhoEps(*eps), -(2.0 * g + 1.0)),
            ),
        },
        F::Add(a, b) => add(partial(a, space, var), partial(b, space, var)),
        F::Sub(a, b) => sub(partial(a, space, var), partial(b, space, var)),
        F::Mul(a, b) => add(
            mul(partial(a, space, var), (**b).clone()),
            mul((**a).clone(), partial(b, space, var)),
        ),
        F::Div(a, b) => {
            let da = partial(a, space, var);
            let db = partial(b, space, var);
            if db.is_zero() {
                return div(da, (**b).clone());
            }
            div(
                sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                pow((**b).clone(), 2.0),
            )
        }
        F::Neg(a) => neg(partial(a, space, var)),
        F::Pow(a, e) => {
            let da = partial(a, space, var);
            if da.is_zero() {
                return k(0.0);
            }
            mul(mul(k(*e), pow((**a).clone(), e - 1.0)), da)
        }
        F::Exp(a) => {
            let da = partial(a, space, var);
            mul(expr.clone(), da)
        }
        F::Log(a) => {
            let da = partial(a, space, var);
            div(da, (**a).clone())
        }
        F::Bump(a) => {
            let da = partial(a, space, var);
            if da.is_zero() {
                return k(0.0);
            }
            // bump'(t) = bump(t) * (-2 t / (t^2 - 1)^2)
            let t = (**a).clone();
            let q = pow(sub(pow(t.clone(), 2.0), k(1.0)), 2.0);
            let factor = div(mul(k(-2.0), t), q);
            mul(mul(expr.clone(), factor), da)
        }
    }
}

/// Euclidean gradient `(d/dx_1, .., d/dx_m, d/dy_1, .., d/dy_k)`.
pub fn gradient_exprs(expr: &FieldExpr, space: &GrushinSpace) -> Vec<FieldExpr> {
    (0..space.dim())
        .map(|i| partial(expr, space, Var::from_flat(space, i)))
        .collect()
}

/// Grushin gradient `(grad_x f, |x|^gamma grad_y f)` as expressions.
pub fn grad_gamma_exprs(expr: &FieldExpr, space: &GrushinSpace) -> Vec<FieldExpr> {
    let g = space.gamma();
    gradient_exprs(expr, space)
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if i < space.m() || g == 0.0 {
                d
            } else {
                mul(pow(FieldExpr::AbsX, g), d)
            }
        })
        .collect()
}
