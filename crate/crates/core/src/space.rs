//! The Baouendi-Grushin ambient space `R^m x R^k` with degeneracy exponent
//! `gamma`, its quasi-norm, the regularized quasi-norm and anisotropic
//! dilations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ambient space `(m, k, gamma)`.
///
/// Coordinates are split as `z = (x, y)` with `x` in `R^m` and `y` in `R^k`.
/// The vector fields are `d/dx_i` and `|x|^gamma d/dy_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrushinSpace {
    m: usize,
    k: usize,
    gamma: f64,
}

impl GrushinSpace {
    pub fn new(m: usize, k: usize, gamma: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSpace("m must be at least 1".into()));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidSpace(format!(
                "gamma must be a finite nonnegative real, got {gamma}"
            )));
        }
        Ok(Self { m, k, gamma })
    }

    /// The Euclidean space `R^n` seen as the `gamma = 0`, `k = 0` configuration.
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(n, 0, 0.0)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Total Euclidean dimension `m + k`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.m + self.k
    }

    /// Homogeneous dimension `Q = m + (1 + gamma) k`.
    pub fn homogeneous_dimension(&self) -> f64 {
        self.m as f64 + (1.0 + self.gamma) * self.k as f64
    }

    /// Builds a point, checking the block lengths against this space.
    pub fn point(&self, x: &[f64], y: &[f64]) -> Result<Point> {
        if x.len() != self.m || y.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len() + y.len(),
            });
        }
        Ok(Point {
            x: x.to_vec(),
            y: y.to_vec(),
        })
    }

    /// Splits a flat coordinate slice `(x_1..x_m, y_1..y_k)` into a point.
    pub fn point_from_coords(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: coords.len(),
            });
        }
        Ok(Point {
            x: coords[..self.m].to_vec(),
            y: coords[self.m..].to_vec(),
        })
    }

    /// Quasi-norm `rho(z) = (|x|^{2(1+g)} + (1+g)^2 |y|^2)^{1 / (2(1+g))}`.
    ///
    /// Returns exactly 0 at the origin.
    pub fn rho(&self, z: &Point) -> f64 {
        rho_coords(self, &z.coords())
    }

    /// Regularized quasi-norm, with `|x|` replaced by `(eps^2 + |x|^2)^{1/2}`.
    pub fn rho_eps(&self, z: &Point, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regularization eps must be positive, got {eps}"
            )));
        }
        Ok(rho_eps_coords(self, &z.coords(), eps))
    }

    /// Anisotropic dilation `delta_a(x, y) = (a x, a^{1+gamma} y)`.
    pub fn dilate(&self, z: &Point, a: f64) -> Result<Point> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dilation factor must be positive, got {a}"
            )));
        }
        let ay = a.powf(1.0 + self.gamma);
        Ok(Point {
            x: z.x.iter().map(|v| a * v).collect(),
            y: z.y.iter().map(|v| ay * v).collect(),
        })
    }
}

/// A point `z = (x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Point {
    /// Flat coordinates `(x_1..x_m, y_1..y_k)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.x.len() + self.y.len());
        c.extend_from_slice(&self.x);
        c.extend_from_slice(&self.y);
        c
    }

    pub fn abs_x(&self) -> f64 {
        norm(&self.x)
    }
}

#[inline]
pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum()
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

/// `rho` from the squared block norms `|x|^2` and `|y|^2`.
#[inline]
pub(crate) fn rho_from_sq(gamma: f64, xs2: f64, ys2: f64) -> f64 {
    if gamma == 0.0 {
        return (xs2 + ys2).sqrt();
    }
    let c = 1.0 + gamma;
    (xs2.powf(c) + c * c * ys2).powf(1.0 / (2.0 * c))
}

#[inline]
pub(crate) fn rho_coords(space: &GrushinSpace, coords: &[f64]) -> f64 {
    let (x, y) = coords.split_at(space.m);
    rho_from_sq(space.gamma, norm_sq(x), norm_sq(y))
}

#[inline]
pub(crate) fn rho_eps_coords(space: &GrushinSpace, coords: &[f64], eps: f64) -> f64 {
    let (x, y) = coords.split_at(space.m);
    rho_from_sq(space.gamma, eps * eps + norm_sq(x), norm_sq(y))
}
