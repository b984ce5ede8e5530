//! Flat postfix tape compiled from a [`FieldExpr`], evaluated over any
//! [`FieldNum`].

use num_complex::Complex64;

use super::expr::FieldExpr;
use super::jet::{with_dim, Dual, FieldNum, Gradient, Jet2, MAX_DIM};
use super::bump_derivatives;
use crate::error::{Error, Result};
use crate::space::{norm_sq, rho_from_sq, GrushinSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(Complex64),
    X(usize),
    Y(usize),
    Rho,
    RhoEps(f64),
    AbsX,
    /// Radial variable: value `rho`, derivative 1 in the single slot.
    RadialVar,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Pow(u32, f64),
    Exp(u32),
    Log(u32),
    Bump(u32),
}

/// A field compiled against a fixed space.
#[derive(Debug, Clone)]
pub struct CompiledField {
    ops: Vec<Op>,
    /// Canonical text of the subexpression rooted at each op, for diagnostics.
    labels: Vec<String>,
    space: GrushinSpace,
    radial: bool,
}

struct Failure {
    op: usize,
    reason: String,
}

type Step<T> = std::result::Result<T, String>;

impl CompiledField {
    pub fn new(expr: &FieldExpr, space: &GrushinSpace) -> Result<Self> {
        let (mx, my) = expr.max_coordinate_indices();
        if let Some(i) = mx.filter(|&i| i >= space.m()) {
            return Err(Error::CoordinateOutOfRange {
                name: format!("x{}", i + 1),
                m: space.m(),
                k: space.k(),
            });
        }
        if let Some(j) = my.filter(|&j| j >= space.k()) {
            return Err(Error::CoordinateOutOfRange {
                name: format!("y{}", j + 1),
                m: space.m(),
                k: space.k(),
            });
        }
        if space.dim() > MAX_DIM {
            return Err(Error::TooManyDimensions {
                dim: space.dim(),
                max: MAX_DIM,
            });
        }
        let mut tape = Self {
            ops: Vec::new(),
            labels: Vec::new(),
            space: *space,
            radial: false,
        };
        tape.emit(expr, false)?;
        Ok(tape)
    }

    /// Compiles a profile `phi(rho)` as a function of one variable; `Rho`
    /// becomes the variable. Any other coordinate leaf is rejected.
    pub fn radial(expr: &FieldExpr, space: &GrushinSpace) -> Result<Self> {
        if !expr.is_radial() {
            return Err(Error::InvalidParameter(format!(
                "`{expr}` is not a function of rho alone"
            )));
        }
        let mut tape = Self {
            ops: Vec::new(),
            labels: Vec::new(),
            space: *space,
            radial: true,
        };
        tape.emit(expr, true)?;
        Ok(tape)
    }

    pub fn space(&self) -> &GrushinSpace {
        &self.space
    }

    /// True for the tape of the literal `0`.
    pub fn is_constant_zero(&self) -> bool {
        matches!(self.ops.as_slice(), [Op::Const(c)] if *c == Complex64::new(0.0, 0.0))
    }

    fn push(&mut self, op: Op, e: &FieldExpr) -> u32 {
        // leaves are shared so rho is computed once per point
        if matches!(
            op,
            Op::Rho | Op::RhoEps(_) | Op::AbsX | Op::RadialVar | Op::X(_) | Op::Y(_)
        ) {
            if let Some(i) = self.ops.iter().position(|o| *o == op) {
                return i as u32;
            }
        }
        self.ops.push(op);
        self.labels.push(e.to_string());
        (self.ops.len() - 1) as u32
    }

    fn emit(&mut self, e: &FieldExpr, radial: bool) -> Result<u32> {
        use FieldExpr as F;
        let op = match e {
            F::Const(c) => Op::Const(*c),
            F::X(i) => Op::X(*i),
            F::Y(j) => Op::Y(*j),
            F::Rho if radial => Op::RadialVar,
            F::Rho => Op::Rho,
            F::RhoEps(eps) => {
                if !(*eps > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "rho_eps requires eps > 0, got {eps}"
                    )));
                }
                Op::RhoEps(*eps)
            }
            F::AbsX => Op::AbsX,
            F::Add(a, b) => Op::Add(self.emit(a, radial)?, self.emit(b, radial)?),
            F::Sub(a, b) => Op::Sub(self.emit(a, radial)?, self.emit(b, radial)?),
            F::Mul(a, b) => Op::Mul(self.emit(a, radial)?, self.emit(b, radial)?),
            F::Div(a, b) => Op::Div(self.emit(a, radial)?, self.emit(b, radial)?),
            F::Neg(a) => Op::Neg(self.emit(a, radial)?),
            F::Pow(a, c) => Op::Pow(self.emit(a, radial)?, *c),
            F::Exp(a) => Op::Exp(self.emit(a, radial)?),
            F::Log(a) => Op::Log(self.emit(a, radial)?),
            F::Bump(a) => Op::Bump(self.emit(a, radial)?),
        };
        Ok(self.push(op, e))
    }

    fn fail(&self, f: Failure) -> Error {
        Error::Domain {
            subexpr: self.labels[f.op].clone(),
            reason: f.reason,
        }
    }

    fn run<T: FieldNum>(&self, coords: &[f64], stack: &mut Vec<T>) -> std::result::Result<T, Failure> {
        stack.clear();
        for (idx, op) in self.ops.iter().enumerate() {
            let r = self.step(op, coords, stack).map_err(|reason| Failure { op: idx, reason })?;
            stack.push(r);
        }
        Ok(*stack.last().expect("tape is never empty"))
    }

    #[inline]
    fn step<T: FieldNum>(&self, op: &Op, coords: &[f64], s: &[T]) -> Step<T> {
        let dim = coords.len();
        Ok(match *op {
            Op::Const(c) => T::constant(c),
            Op::X(i) => unit_leaf(coords[i], i, dim),
            Op::Y(j) => {
                let m = self.space.m();
                unit_leaf(coords[m + j], m + j, dim)
            }
            Op::RadialVar => {
                let r = coords[0];
                T::leaf(r, &[1.0], &[0.0])
            }
            Op::Rho => rho_leaf(&self.space, coords, None)?,
            Op::RhoEps(eps) => rho_leaf(&self.space, coords, Some(eps))?,
            Op::AbsX => abs_x_leaf(&self.space, coords)?,
            Op::Add(a, b) => s[a as usize].add(s[b as usize]),
            Op::Sub(a, b) => s[a as usize].sub(s[b as usize]),
            Op::Mul(a, b) => s[a as usize].mul(s[b as usize]),
            Op::Div(a, b) => {
                let den = s[b as usize];
                let d = den.value();
                if d == Complex64::new(0.0, 0.0) {
                    return Err("division by zero".into());
                }
                let inv = d.inv();
                let recip = den.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
                s[a as usize].mul(recip)
            }
            Op::Neg(a) => s[a as usize].neg(),
            Op::Pow(a, c) => pow(s[a as usize], c)?,
            Op::Exp(a) => {
                let u = s[a as usize];
                let e = u.value().exp();
                u.chain(e, e, e)
            }
            Op::Log(a) => {
                let u = s[a as usize];
                let t = real_arg(u.value()).ok_or("log of a non-real argument")?;
                if t <= 0.0 {
                    return Err(format!("log of nonpositive value {t}"));
                }
                u.chain(c(t.ln()), c(1.0 / t), c(-1.0 / (t * t)))
            }
            Op::Bump(a) => {
                let u = s[a as usize];
                let t = real_arg(u.value()).ok_or("bump of a non-real argument")?;
                let (b0, b1, b2) = bump_derivatives(t);
                u.chain(c(b0), c(b1), c(b2))
            }
        })
    }

    /// Value of the field at flat coordinates `(x, y)`.
    pub fn value(&self, coords: &[f64]) -> Result<Complex64> {
        let mut stack = Vec::with_capacity(self.ops.len());
        self.value_with(coords, &mut stack)
    }

    /// Value, reusing a caller-owned stack.
    pub fn value_with(&self, coords: &[f64], stack: &mut Vec<Complex64>) -> Result<Complex64> {
        self.check_coords(coords)?;
        self.run::<Complex64>(coords, stack).map_err(|f| self.fail(f))
    }

    /// Value and Euclidean gradient.
    pub fn gradient(&self, coords: &[f64]) -> Result<Gradient> {
        self.check_coords(coords)?;
        with_dim!(coords.len(), N => {
            let mut stack: Vec<Dual<N, false>> = Vec::with_capacity(self.ops.len());
            let d = self.run(coords, &mut stack).map_err(|f| self.fail(f))?;
            Ok(Gradient::from_dual(&d))
        })
    }

    /// Value, gradient and diagonal second partials.
    pub fn jet2(&self, coords: &[f64]) -> Result<Jet2> {
        self.check_coords(coords)?;
        with_dim!(coords.len(), N => {
            let mut stack: Vec<Dual<N, true>> = Vec::with_capacity(self.ops.len());
            let d = self.run(coords, &mut stack).map_err(|f| self.fail(f))?;
            Ok(Jet2 { value: d.v, first: d.d.to_vec(), second_diag: d.dd.to_vec() })
        })
    }

    /// For radial tapes: `(phi(r), phi'(r), phi''(r))` as complex values.
    pub fn radial_jet(&self, r: f64) -> Result<(Complex64, Complex64, Complex64)> {
        if !self.radial {
            return Err(Error::InvalidParameter("tape was not compiled as a radial profile".into()));
        }
        let mut stack: Vec<Dual<1, true>> = Vec::with_capacity(self.ops.len());
        let d = self.run(&[r], &mut stack).map_err(|f| self.fail(f))?;
        Ok((d.v, d.d[0], d.dd[0]))
    }

    fn check_coords(&self, coords: &[f64]) -> Result<()> {
        let want = if self.radial { 1 } else { self.space.dim() };
        if coords.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                found: coords.len(),
            });
        }
        Ok(())
    }
}

#[inline]
fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Treats a complex value as real when its imaginary part is at rounding level.
#[inline]
fn real_arg(z: Complex64) -> Option<f64> {
    if z.im.abs() <= 1e-12 * z.re.abs().max(f64::MIN_POSITIVE) || z.im == 0.0 {
        Some(z.re)
    } else {
        None
    }
}

#[inline]
fn unit_leaf<T: FieldNum>(v: f64, i: usize, dim: usize) -> T {
    let mut first = [0.0; MAX_DIM];
    first[i] = 1.0;
    T::leaf(v, &first[..dim], &[0.0; MAX_DIM][..dim])
}

fn abs_x_leaf<T: FieldNum>(space: &GrushinSpace, coords: &[f64]) -> Step<T> {
    let m = space.m();
    let x = &coords[..m];
    let r = norm_sq(x).sqrt();
    if T::ORDER == 0 {
        return Ok(T::leaf(r, &[], &[]));
    }
    if r == 0.0 {
        return Err("|x| is not differentiable on {x = 0}".into());
    }
    let dim = coords.len();
    let mut first = [0.0; MAX_DIM];
    let mut second = [0.0; MAX_DIM];
    for i in 0..m {
        first[i] = x[i] / r;
        second[i] = (r * r - x[i] * x[i]) / (r * r * r);
    }
    Ok(T::leaf(r, &first[..dim], &second[..dim]))
}

/// `rho` or `rho_eps` with its partials:
/// `d rho / dx_i = |x|^{2g} x_i / rho^{2g+1}`, `d rho / dy_j = (1+g) y_j / rho^{2g+1}`
/// (with `|x|` replaced by `|x|_eps` in the regularized case).
fn rho_leaf<T: FieldNum>(space: &GrushinSpace, coords: &[f64], eps: Option<f64>) -> Step<T> {
    let m = space.m();
    let g = space.gamma();
    let (x, y) = coords.split_at(m);
    let xs2 = norm_sq(x) + eps.map_or(0.0, |e| e * e);
    let ys2 = norm_sq(y);
    let rho = rho_from_sq(g, xs2, ys2);
    if T::ORDER == 0 {
        return Ok(T::leaf(rho, &[], &[]));
    }
    if rho == 0.0 {
        return Err("rho is not differentiable at the origin".into());
    }
    if g > 0.0 && xs2 == 0.0 {
        return Err("rho derivatives are not evaluated on {x = 0}".into());
    }
    let dim = coords.len();
    let cg = 1.0 + g;
    let ax2g = if g == 0.0 { 1.0 } else { xs2.powf(g) };
    let rinv = 1.0 / rho.powf(2.0 * g + 1.0);
    let mut first = [0.0; MAX_DIM];
    let mut second = [0.0; MAX_DIM];
    for i in 0..m {
        let d = ax2g * x[i] * rinv;
        first[i] = d;
        if T::ORDER >= 2 {
            let extra = if g == 0.0 { 0.0 } else { 2.0 * g * xs2.powf(g - 1.0) * x[i] * x[i] };
            second[i] = (ax2g + extra) * rinv - (2.0 * g + 1.0) * ax2g * x[i] * rinv / rho * d;
        }
    }
    for j in 0..y.len() {
        let d = cg * y[j] * rinv;
        first[m + j] = d;
        if T::ORDER >= 2 {
            second[m + j] = cg * rinv - (2.0 * g + 1.0) * cg * y[j] * rinv / rho * d;
        }
    }
    Ok(T::leaf(rho, &first[..dim], &second[..dim]))
}

fn pow<T: FieldNum>(u: T, e: f64) -> Step<T> {
    let z = u.value();
    if e == 0.0 {
        return Ok(T::constant(c(1.0)));
    }
    if e == 1.0 {
        return Ok(u);
    }
    let (g0, g1, g2) = if e.fract() == 0.0 && e.abs() < 1024.0 {
        let n = e as i32;
        if z == Complex64::new(0.0, 0.0) && n < 0 {
            return Err(format!("0 raised to negative power {e}"));
        }
        let g0 = z.powi(n);
        let g1 = if T::ORDER >= 1 { e * z.powi(n - 1) } else { c(0.0) };
        let g2 = if T::ORDER >= 2 { e * (e - 1.0) * z.powi(n - 2) } else { c(0.0) };
        (g0, g1, g2)
    } else {
        let t = real_arg(z).ok_or("non-integer power of a non-real value")?;
        if t < 0.0 || (t == 0.0 && e < 0.0) {
            return Err(format!("non-integer power {e} of nonpositive value {t}"));
        }
        let g0 = t.powf(e);
        let g1 = if T::ORDER >= 1 { e * t.powf(e - 1.0) } else { 0.0 };
        let g2 = if T::ORDER >= 2 { e * (e - 1.0) * t.powf(e - 2.0) } else { 0.0 };
        (c(g0), c(g1), c(g2))
    };
    if !(g0.is_finite() && g1.is_finite() && g2.is_finite()) {
        return Err(format!("power {e} is singular at {z}"));
    }
    Ok(u.chain(g0, g1, g2))
}
