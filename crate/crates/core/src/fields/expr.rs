use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Expression tree for a complex scalar field on `R^{m+k}`.
///
/// Coordinate indices are 0-based; the text syntax (`x1`, `y1`, ...) is
/// 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldExpr {
    Const(Complex64),
    X(usize),
    Y(usize),
    /// The quasi-norm `rho`.
    Rho,
    /// The regularized quasi-norm `rho_eps`.
    RhoEps(f64),
    /// Euclidean norm `|x|` of the first block.
    AbsX,
    Add(Box<FieldExpr>, Box<FieldExpr>),
    Sub(Box<FieldExpr>, Box<FieldExpr>),
    Mul(Box<FieldExpr>, Box<FieldExpr>),
    Div(Box<FieldExpr>, Box<FieldExpr>),
    Neg(Box<FieldExpr>),
    /// Power with a real constant exponent.
    Pow(Box<FieldExpr>, f64),
    Exp(Box<FieldExpr>),
    Log(Box<FieldExpr>),
    /// The compactly supported cutoff `exp(1/(t^2 - 1))` on `|t| < 1`.
    Bump(Box<FieldExpr>),
}

impl FieldExpr {
    pub fn real(v: f64) -> Self {
        FieldExpr::Const(Complex64::new(v, 0.0))
    }

    pub fn complex(re: f64, im: f64) -> Self {
        FieldExpr::Const(Complex64::new(re, im))
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        FieldExpr::Const(Complex64::new(0.0, 1.0))
    }

    pub fn x(i: usize) -> Self {
        FieldExpr::X(i)
    }

    pub fn y(j: usize) -> Self {
        FieldExpr::Y(j)
    }

    pub fn rho() -> Self {
        FieldExpr::Rho
    }

    pub fn rho_eps(eps: f64) -> Self {
        FieldExpr::RhoEps(eps)
    }

    pub fn abs_x() -> Self {
        FieldExpr::AbsX
    }

    pub fn powf(self, c: f64) -> Self {
        FieldExpr::Pow(Box::new(self), c)
    }

    pub fn exp(self) -> Self {
        FieldExpr::Exp(Box::new(self))
    }

    pub fn ln(self) -> Self {
        FieldExpr::Log(Box::new(self))
    }

    pub fn bump(self) -> Self {
        FieldExpr::Bump(Box::new(self))
    }

    /// `bump((self - center) / half_width)`, supported on `|self - center| < half_width`.
    pub fn bump_window(self, center: f64, half_width: f64) -> Self {
        ((self - center) / half_width).bump()
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self {
            FieldExpr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        matches!(self, FieldExpr::Const(c) if *c == Complex64::new(0.0, 0.0))
    }

    pub(crate) fn is_one(&self) -> bool {
        matches!(self, FieldExpr::Const(c) if *c == Complex64::new(1.0, 0.0))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn children(&self) -> Vec<&FieldExpr> {
        use FieldExpr::*;
        match self {
            Const(_) | X(_) | Y(_) | Rho | RhoEps(_) | AbsX => vec![],
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => vec![a, b],
            Neg(a) | Pow(a, _) | Exp(a) | Log(a) | Bump(a) => vec![a],
        }
    }

    /// True when the tree references no coordinate-dependent leaf.
    pub fn is_constant(&self) -> bool {
        use FieldExpr::*;
        match self {
            Const(_) => true,
            X(_) | Y(_) | Rho | RhoEps(_) | AbsX => false,
            _ => self.children().iter().all(|c| c.is_constant()),
        }
    }

    /// True when the tree depends on the point only through `rho`.
    pub fn is_radial(&self) -> bool {
        use FieldExpr::*;
        match self {
            Const(_) | Rho => true,
            X(_) | Y(_) | RhoEps(_) | AbsX => false,
            _ => self.children().iter().all(|c| c.is_radial()),
        }
    }

    /// Largest referenced `x` and `y` indices (0-based).
    pub fn max_coordinate_indices(&self) -> (Option<usize>, Option<usize>) {
        fn walk(e: &FieldExpr, acc: &mut (Option<usize>, Option<usize>)) {
            match e {
                FieldExpr::X(i) => acc.0 = Some(acc.0.map_or(*i, |v| v.max(*i))),
                FieldExpr::Y(j) => acc.1 = Some(acc.1.map_or(*j, |v| v.max(*j))),
                _ => e.children().into_iter().for_each(|c| walk(c, acc)),
            }
        }
        let mut acc = (None, None);
        walk(self, &mut acc);
        acc
    }
}

impl From<f64> for FieldExpr {
    fn from(v: f64) -> Self {
        FieldExpr::real(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait for FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: FieldExpr) -> FieldExpr {
                FieldExpr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl $trait<f64> for FieldExpr {
            type Output = FieldExpr;
            fn $method(self, rhs: f64) -> FieldExpr {
                FieldExpr::$variant(Box::new(self), Box::new(FieldExpr::real(rhs)))
            }
        }
        impl $trait<FieldExpr> for f64 {
            type Output = FieldExpr;
            fn $method(self, rhs: FieldExpr) -> FieldExpr {
                FieldExpr::$variant(Box::new(FieldExpr::real(self)), Box::new(rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for FieldExpr {
    type Output = FieldExpr;
    fn neg(self) -> FieldExpr {
        FieldExpr::Neg(Box::new(self))
    }
}
