//! Weight triples `(v, phi, w)` with `-div_gamma(v |grad_gamma phi|^{p-2} grad_gamma phi) = w phi^{p-1}`,
//! the numeric derivation engine and the radial p-Bessel residual.

mod catalog;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{CompiledVectorField, VectorFieldExpr};
use crate::fields::{grad_gamma_exprs, smul, spow, CompiledField, FieldExpr};
use crate::space::{norm, rho_coords, GrushinSpace, Point};
use crate::{Error, Result};

pub use catalog::{catalog_get, reference_config, reference_params, ReferenceConfig, CATALOG_KEYS};

/// Named real parameters of a catalog entry (`alpha`, `beta`, `ell`, `a`, `b`, `R`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Entries of `other` override entries of `self`.
    pub fn merged(&self, other: &Params) -> Params {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.set(k, v);
        }
        out
    }

    /// Parses `alpha=4,beta=2`. An empty string gives no parameters.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Params::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("expected name=value, got `{item}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("`{}` is not a number", v.trim())))?;
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("parameter `{k}` must be finite")));
            }
            out.set(k.trim(), v);
        }
        Ok(out)
    }

    pub(crate) fn require(&self, key: &str, name: &str) -> Result<f64> {
        self.get(name).ok_or_else(|| Error::MissingParameter {
            key: key.to_string(),
            name: name.to_string(),
        })
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Geometric shape of an identity's domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    WholeSpace,
    /// `rho < radius`.
    Ball { radius: f64 },
    /// `|x| < radius`, `y` unconstrained.
    XSlab { radius: f64 },
    /// `x_1 > 1` and `y_1 > 1`.
    HalfQuadrant,
    /// `inner < rho < outer`.
    Annulus { inner: f64, outer: f64 },
}

/// Domain shape plus the singular sets that must be kept out of the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainDescriptor {
    pub kind: DomainKind,
    pub exclude_origin: bool,
    pub exclude_x_axis: bool,
}

impl DomainDescriptor {
    pub fn new(kind: DomainKind, exclude_origin: bool, exclude_x_axis: bool) -> Result<Self> {
        let ok = match kind {
            DomainKind::WholeSpace | DomainKind::HalfQuadrant => true,
            DomainKind::Ball { radius } | DomainKind::XSlab { radius } => radius > 0.0,
            DomainKind::Annulus { inner, outer } => inner >= 0.0 && outer > inner,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("degenerate domain {kind:?}")));
        }
        Ok(Self {
            kind,
            exclude_origin,
            exclude_x_axis,
        })
    }

    pub fn whole_space() -> Self {
        Self {
            kind: DomainKind::WholeSpace,
            exclude_origin: false,
            exclude_x_axis: false,
        }
    }

    /// Open-set membership, ignoring the exclusions.
    pub fn contains(&self, space: &GrushinSpace, coords: &[f64]) -> bool {
        let m = space.m();
        match self.kind {
            DomainKind::WholeSpace => true,
            DomainKind::Ball { radius } => rho_coords(space, coords) < radius,
            DomainKind::XSlab { radius } => norm(&coords[..m]) < radius,
            DomainKind::HalfQuadrant => coords[0] > 1.0 && space.k() > 0 && coords[m] > 1.0,
            DomainKind::Annulus { inner, outer } => {
                let r = rho_coords(space, coords);
                inner < r && r < outer
            }
        }
    }

    /// True when the point lies in an exclusion set of the given radii.
    pub fn excluded(&self, space: &GrushinSpace, coords: &[f64], x_radius: f64, origin_radius: f64) -> bool {
        (self.exclude_x_axis && norm(&coords[..space.m()]) <= x_radius)
            || (self.exclude_origin && rho_coords(space, coords) <= origin_radius)
    }

    /// An axis-aligned box containing the domain, when it is bounded.
    pub fn bounding_box(&self, space: &GrushinSpace) -> Option<Vec<(f64, f64)>> {
        let g = space.gamma();
        let rho_box = |r: f64| {
            let yr = r.powf(1.0 + g) / (1.0 + g);
            (0..space.dim())
                .map(|i| if i < space.m() { (-r, r) } else { (-yr, yr) })
                .collect()
        };
        match self.kind {
            DomainKind::Ball { radius } => Some(rho_box(radius)),
            DomainKind::Annulus { outer, .. } => Some(rho_box(outer)),
            _ => None,
        }
    }
}

/// One additional displayed integral `coefficient * int weight |f|^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtraTerm {
    pub coefficient: f64,
    #[serde(serialize_with = "ser_expr")]
    pub weight: FieldExpr,
}

/// Profiles of a radial entry as functions of `rho`, with the factor
/// `|x|^{gamma p} / rho^{gamma p}` removed from the total weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialParts {
    #[serde(serialize_with = "ser_expr")]
    pub v: FieldExpr,
    #[serde(serialize_with = "ser_expr")]
    pub w: FieldExpr,
    #[serde(serialize_with = "ser_expr")]
    pub phi: FieldExpr,
}

fn ser_expr<S: serde::Serializer>(e: &FieldExpr, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&e.to_string())
}

/// A catalog entry instantiated for one space, exponent and parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTriple {
    pub name: String,
    pub params: Params,
    pub space: GrushinSpace,
    pub p: f64,
    #[serde(serialize_with = "ser_expr")]
    pub v: FieldExpr,
    #[serde(serialize_with = "ser_expr")]
    pub phi: FieldExpr,
    #[serde(serialize_with = "ser_expr")]
    pub w_closed: FieldExpr,
    pub extra_terms: Vec<ExtraTerm>,
    pub domain: DomainDescriptor,
    pub radial: Option<RadialParts>,
    /// The hypotheses force `w_closed + extras >= 0`.
    pub nonnegative_weight: bool,
}

impl WeightTriple {
    /// `w_closed + sum coefficient * weight` as one expression.
    pub fn total_weight(&self) -> FieldExpr {
        self.extra_terms.iter().fold(self.w_closed.clone(), |acc, t| {
            acc + FieldExpr::real(t.coefficient) * t.weight.clone()
        })
    }

    /// Default compactly supported test function for this entry, optionally
    /// multiplied by the phase `exp(i y1)`.
    pub fn reference_test_function(&self, complex_phase: bool) -> FieldExpr {
        catalog::reference_test_function(self, complex_phase)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")))
    }
}

/// `-div_gamma(v |grad_gamma phi|^{p-2} grad_gamma phi) / phi^{p-1}`, compiled
/// once for repeated evaluation. `phi` must be real and positive.
#[derive(Debug, Clone)]
pub struct WeightDeriver {
    phi: CompiledField,
    flux: CompiledVectorField,
    p: f64,
}

impl WeightDeriver {
    pub fn new(space: &GrushinSpace, p: f64, v: &FieldExpr, phi: &FieldExpr) -> Result<Self> {
        check_p(p)?;
        let grad = grad_gamma_exprs(phi, space);
        let norm2 = grad
            .iter()
            .filter(|g| !matches!(g, FieldExpr::Const(c) if *c == Complex64::new(0.0, 0.0)))
            .cloned()
            .map(|g| spow(g, 2.0))
            .reduce(|a, b| a + b);
        let scale = match norm2 {
            Some(n2) => smul(v.clone(), spow(n2, 0.5 * (p - 2.0))),
            None => v.clone(),
        };
        let flux = VectorFieldExpr::new(space, grad)?.scaled(&scale);
        Ok(Self {
            phi: CompiledField::new(phi, space)?,
            flux: CompiledVectorField::new(space, &flux)?,
            p,
        })
    }

    pub fn eval(&self, coords: &[f64]) -> Result<f64> {
        let phi = self.phi.value(coords)?;
        if phi.im.abs() > 1e-12 * phi.re.abs() || phi.re <= 0.0 {
            return Err(Error::Domain {
                subexpr: "phi".into(),
                reason: format!("phi must be positive, got {phi}"),
            });
        }
        let div = self.flux.div_gamma(coords)?;
        Ok(-div.re / phi.re.powf(self.p - 1.0))
    }
}

/// Numeric weight at `z` derived from `(v, phi)`.
pub fn derive_weight(space: &GrushinSpace, p: f64, v: &FieldExpr, phi: &FieldExpr, z: &Point) -> Result<f64> {
    if z.x.len() != space.m() || z.y.len() != space.k() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: z.x.len() + z.y.len(),
        });
    }
    WeightDeriver::new(space, p, v, phi)?.eval(&z.coords())
}

/// Normalized residual of the radial equation
/// `(rho^{Q-1} v |phi'|^{p-2} phi')' + rho^{Q-1} w |phi|^{p-2} phi = 0`
/// over `rho_grid`: the largest pointwise residual divided by the largest
/// magnitude of any of its four terms on the grid.
pub fn bessel_residual(
    space: &GrushinSpace,
    p: f64,
    v: &FieldExpr,
    w: &FieldExpr,
    phi: &FieldExpr,
    rho_grid: &[f64],
) -> Result<f64> {
    check_p(p)?;
    if let Some(r) = rho_grid.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::InvalidParameter(format!("grid points must be positive, got {r}")));
    }
    let tv = CompiledField::radial(v, space)?;
    let tw = CompiledField::radial(w, space)?;
    let tphi = CompiledField::radial(phi, space)?;
    let q = space.homogeneous_dimension();
    let re = |z: Complex64| z.re;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &r in rho_grid {
        let (v0, v1, _) = tv.radial_jet(r)?;
        let (w0, _, _) = tw.radial_jet(r)?;
        let (f0, f1, f2) = tphi.radial_jet(r)?;
        let (v0, v1, w0, f0, f1, f2) = (re(v0), re(v1), re(w0), re(f0), re(f1), re(f2));
        let (slope, curv) = if f1 == 0.0 {
            if p < 2.0 && f2 != 0.0 {
                return Err(Error::Domain {
                    subexpr: phi.to_string(),
                    reason: format!("phi' vanishes at rho={r} with p < 2"),
                });
            }
            (0.0, if p == 2.0 { f2 } else { 0.0 })
        } else {
            let a = f1.abs().powf(p - 2.0);
            (a * f1, a * f2)
        };
        let rq = r.powf(q - 1.0);
        let terms = [
            (q - 1.0) * r.powf(q - 2.0) * v0 * slope,
            rq * v1 * slope,
            rq * v0 * (p - 1.0) * curv,
            rq * w0 * f0.abs().powf(p - 2.0) * f0,
        ];
        let res: f64 = terms.iter().sum();
        if !res.is_finite() {
            return Err(Error::Domain {
                subexpr: phi.to_string(),
                reason: format!("non-finite residual at rho={r}"),
            });
        }
        worst = worst.max(res.abs());
        scale = terms.iter().fold(scale, |s, t| s.max(t.abs()));
    }
    Ok(if scale == 0.0 { 0.0 } else { worst / scale })
}

/// `n` points geometrically spaced on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests;
