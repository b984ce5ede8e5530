//! Number types the field tape is evaluated over: plain complex values and
//! forward-mode duals carrying the gradient and, optionally, the diagonal of
//! the Hessian.

use num_complex::Complex64;

/// Largest `m + k` a field can be differentiated in.
pub const MAX_DIM: usize = 8;

pub(crate) trait FieldNum: Copy {
    /// 0 = value only, 1 = gradient, 2 = gradient and diagonal second partials.
    const ORDER: u8;

    fn constant(c: Complex64) -> Self;
    /// A real-valued leaf with known partials. Slices are ignored beyond `ORDER`.
    fn leaf(value: f64, first: &[f64], second: &[f64]) -> Self;
    fn value(&self) -> Complex64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    /// Composition with a scalar function `g`, given `g(u), g'(u), g''(u)`.
    fn chain(self, g0: Complex64, g1: Complex64, g2: Complex64) -> Self;
}

impl FieldNum for Complex64 {
    const ORDER: u8 = 0;

    #[inline]
    fn constant(c: Complex64) -> Self {
        c
    }
    #[inline]
    fn leaf(value: f64, _: &[f64], _: &[f64]) -> Self {
        Complex64::new(value, 0.0)
    }
    #[inline]
    fn value(&self) -> Complex64 {
        *self
    }
    #[inline]
    fn add(self, o: Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(self, o: Self) -> Self {
        self - o
    }
    #[inline]
    fn mul(self, o: Self) -> Self {
        self * o
    }
    #[inline]
    fn neg(self) -> Self {
        -self
    }
    #[inline]
    fn chain(self, g0: Complex64, _: Complex64, _: Complex64) -> Self {
        g0
    }
}

/// Forward-mode dual over `N` real variables. With `SECOND` the pure second
/// partials are propagated as well.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dual<const N: usize, const SECOND: bool> {
    pub v: Complex64,
    pub d: [Complex64; N],
    pub dd: [Complex64; N],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl<const N: usize, const SECOND: bool> FieldNum for Dual<N, SECOND> {
    const ORDER: u8 = if SECOND { 2 } else { 1 };

    #[inline]
    fn constant(c: Complex64) -> Self {
        Self {
            v: c,
            d: [ZERO; N],
            dd: [ZERO; N],
        }
    }

    #[inline]
    fn leaf(value: f64, first: &[f64], second: &[f64]) -> Self {
        let mut out = Self::constant(Complex64::new(value, 0.0));
        for (o, f) in out.d.iter_mut().zip(first) {
            *o = Complex64::new(*f, 0.0);
        }
        if SECOND {
            for (o, s) in out.dd.iter_mut().zip(second) {
                *o = Complex64::new(*s, 0.0);
            }
        }
        out
    }

    #[inline]
    fn value(&self) -> Complex64 {
        self.v
    }

    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.d[i] += o.d[i];
        }
        if SECOND {
            for i in 0..N {
                self.dd[i] += o.dd[i];
            }
        }
        self
    }

    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.d[i] -= o.d[i];
        }
        if SECOND {
            for i in 0..N {
                self.dd[i] -= o.dd[i];
            }
        }
        self
    }

    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..N {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        if SECOND {
            for i in 0..N {
                out.dd[i] = self.dd[i] * o.v + 2.0 * self.d[i] * o.d[i] + self.v * o.dd[i];
            }
        }
        out
    }

    #[inline]
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..N {
            self.d[i] = -self.d[i];
        }
        if SECOND {
            for i in 0..N {
                self.dd[i] = -self.dd[i];
            }
        }
        self
    }

    #[inline]
    fn chain(self, g0: Complex64, g1: Complex64, g2: Complex64) -> Self {
        let mut out = Self::constant(g0);
        for i in 0..N {
            out.d[i] = g1 * self.d[i];
        }
        if SECOND {
            for i in 0..N {
                out.dd[i] = g2 * self.d[i] * self.d[i] + g1 * self.dd[i];
            }
        }
        out
    }
}

/// Value, gradient and diagonal second partials of a field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: Complex64,
    /// `d/dx_1 .. d/dx_m, d/dy_1 .. d/dy_k`.
    pub first: Vec<Complex64>,
    /// Pure second partials in the same order.
    pub second_diag: Vec<Complex64>,
}

/// Value and Euclidean gradient, stored inline to keep quadrature loops
/// allocation free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    pub value: Complex64,
    first: [Complex64; MAX_DIM],
    dim: usize,
}

impl Gradient {
    pub(crate) fn from_dual<const N: usize>(d: &Dual<N, false>) -> Self {
        let mut first = [ZERO; MAX_DIM];
        first[..N].copy_from_slice(&d.d);
        Self {
            value: d.v,
            first,
            dim: N,
        }
    }

    #[inline]
    pub fn first(&self) -> &[Complex64] {
        &self.first[..self.dim]
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Runs `$body` with the const `$n` bound to the runtime dimension `$dim`.
macro_rules! with_dim {
    ($dim:expr, $n:ident => $body:expr) => {
        match $dim {
            1 => {
                const $n: usize = 1;
                $body
            }
            2 => {
                const $n: usize = 2;
                $body
            }
            3 => {
                const $n: usize = 3;
                $body
            }
            4 => {
                const $n: usize = 4;
                $body
            }
            5 => {
                const $n: usize = 5;
                $body
            }
            6 => {
                const $n: usize = 6;
                $body
            }
            7 => {
                const $n: usize = 7;
                $body
            }
            8 => {
                const $n: usize = 8;
                $body
            }
            d => unreachable!("dimension {d} outside 1..=MAX_DIM"),
        }
    };
}
pub(crate) use with_dim;
