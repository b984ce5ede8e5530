use crate::fields::{sdiv, smul, spow, FieldExpr};
use crate::parser::parse;
use crate::space::GrushinSpace;
use crate::{Error, Result};

use super::{check_p, DomainDescriptor, DomainKind, ExtraTerm, Params, RadialParts, WeightTriple};

/// Stable catalog keys.
pub const CATALOG_KEYS: [&str; 9] = [
    "nch",
    "dambrosio",
    "dambrosio-x",
    "log-rho",
    "log-x",
    "hardy-poincare",
    "super",
    "yener-nonradial",
    "hpw-seed",
];

fn rho() -> FieldExpr {
    FieldExpr::rho()
}

fn ax() -> FieldExpr {
    FieldExpr::abs_x()
}

fn k(v: f64) -> FieldExpr {
    FieldExpr::real(v)
}

/// `|x|^{gamma p} / rho^{gamma p}`, or `1` when `gamma = 0`.
fn horizontal(space: &GrushinSpace, p: f64) -> FieldExpr {
    let e = space.gamma() * p;
    smul(spow(ax(), e), spow(rho(), -e))
}

fn inadmissible(key: &str, constraint: &str) -> Error {
    Error::Inadmissible {
        key: key.to_string(),
        constraint: constraint.to_string(),
    }
}

fn require(ok: bool, key: &str, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(inadmissible(key, constraint))
    }
}

struct Builder {
    name: &'static str,
    params: Params,
    space: GrushinSpace,
    p: f64,
}

impl Builder {
    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        v: FieldExpr,
        phi: FieldExpr,
        w_closed: FieldExpr,
        extra_terms: Vec<ExtraTerm>,
        domain: DomainDescriptor,
        radial: Option<RadialParts>,
        nonnegative_weight: bool,
    ) -> WeightTriple {
        WeightTriple {
            name: self.name.to_string(),
            params: self.params,
            space: self.space,
            p: self.p,
            v,
            phi,
            w_closed,
            extra_terms,
            domain,
            radial,
            nonnegative_weight,
        }
    }
}

/// Instantiates a catalog entry, enforcing its admissibility constraints.
pub fn catalog_get(key: &str, space: &GrushinSpace, p: f64, params: &Params) -> Result<WeightTriple> {
    check_p(p)?;
    let name = CATALOG_KEYS
        .iter()
        .copied()
        .find(|k| *k == key)
        .ok_or_else(|| Error::UnknownCatalogKey(key.to_string()))?;
    let b = Builder {
        name,
        params: params.clone(),
        space: *space,
        p,
    };
    match name {
        "nch" => nch(b),
        "dambrosio" => dambrosio(b),
        "dambrosio-x" => dambrosio_x(b),
        "log-rho" => log_rho(b),
        "log-x" => log_x(b),
        "hardy-poincare" => hardy_poincare(b),
        "super" => super_weight(b),
        "yener-nonradial" => yener(b),
        "hpw-seed" => hpw_seed(b),
        _ => unreachable!("key list and dispatch agree"),
    }
}

fn nch(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    let r = b.params.require(b.name, "R")?;
    require(r > 0.0, b.name, "R > 0")?;
    let q = s.homogeneous_dimension();
    let a = (p - 1.0) / p;
    let u = k(r) - rho();
    let h = horizontal(&s, p);
    let phi = spow(u.clone(), a);
    let w0 = sdiv(h.clone(), spow(u.clone(), p));
    let w1 = sdiv(h, smul(spow(u.clone(), p - 1.0), rho()));
    let c0 = a.powf(p);
    let c1 = (q - 1.0) * a.powf(p - 1.0);
    let radial = RadialParts {
        v: k(1.0),
        w: k(c0) / spow(u.clone(), p) + k(c1) / smul(spow(u, p - 1.0), rho()),
        phi: phi.clone(),
    };
    let domain = DomainDescriptor::new(DomainKind::Ball { radius: r }, true, false)?;
    Ok(b.finish(
        k(1.0),
        phi,
        smul(k(c0), w0),
        vec![ExtraTerm { coefficient: c1, weight: w1 }],
        domain,
        Some(radial),
        true,
    ))
}

fn dambrosio(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    let alpha = b.params.require(b.name, "alpha")?;
    let beta = b.params.require(b.name, "beta")?;
    let q = s.homogeneous_dimension();
    let g = s.gamma();
    require(q >= alpha - beta - p, b.name, "Q >= alpha - beta - p")?;
    let c = (q + beta - alpha) / p;
    if c == 0.0 && p < 2.0 {
        return Err(inadmissible(b.name, "Q + beta - alpha != 0 when p < 2"));
    }
    let v = smul(spow(ax(), beta - g * p), spow(rho(), (1.0 + g) * p - alpha));
    let phi = spow(rho(), -c);
    let coef = c.abs().powf(p);
    let w = smul(k(coef), smul(spow(ax(), beta), spow(rho(), -alpha)));
    let radial = (beta == g * p).then(|| RadialParts {
        v: spow(rho(), (1.0 + g) * p - alpha),
        w: smul(k(coef), spow(rho(), g * p - alpha)),
        phi: phi.clone(),
    });
    let singular_x = beta < g * p || beta < 0.0;
    let domain = DomainDescriptor::new(DomainKind::WholeSpace, true, singular_x)?;
    Ok(b.finish(v, phi, w, vec![], domain, radial, true))
}

fn dambrosio_x(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    let alpha = b.params.require(b.name, "alpha")?;
    let m = s.m() as f64;
    require(alpha < -m, b.name, "alpha < -m")?;
    let d = (m + alpha).abs() / p;
    let v = spow(ax(), alpha + p);
    let phi = spow(ax(), d);
    let w = smul(k(d.powf(p)), spow(ax(), alpha));
    let domain = DomainDescriptor::new(DomainKind::WholeSpace, false, true)?;
    Ok(b.finish(v, phi, w, vec![], domain, None, true))
}

fn log_rho(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    let alpha = b.params.require(b.name, "alpha")?;
    let r = b.params.require(b.name, "R")?;
    let q = s.homogeneous_dimension();
    require(alpha < -1.0, b.name, "alpha < -1")?;
    require(q > p, b.name, "Q > p")?;
    require(r > 0.0, b.name, "R > 0")?;
    let d = (alpha + 1.0).abs() / p;
    let l = (k(r) / rho()).ln();
    let h = horizontal(&s, p);
    let v = spow(l.clone(), alpha + p);
    let phi = spow(l.clone(), d);
    let base = sdiv(h, spow(rho(), p));
    let w0 = smul(spow(l.clone(), alpha), base.clone());
    let w1 = smul(spow(l.clone(), alpha + 1.0), base);
    let c0 = d.powf(p);
    let c1 = d.powf(p - 1.0) * (q - p);
    let radial = RadialParts {
        v: v.clone(),
        w: (k(c0) * spow(l.clone(), alpha) + k(c1) * spow(l, alpha + 1.0)) / spow(rho(), p),
        phi: phi.clone(),
    };
    let domain = DomainDescriptor::new(DomainKind::Ball { radius: r }, true, false)?;
    Ok(b.finish(
        v,
        phi,
        smul(k(c0), w0),
        vec![ExtraTerm { coefficient: c1, weight: w1 }],
        domain,
        Some(radial),
        true,
    ))
}

fn log_x(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    let alpha = b.params.require(b.name, "alpha")?;
    let r = b.params.require(b.name, "R")?;
    let m = s.m() as f64;
    require(alpha < -1.0, b.name, "alpha < -1")?;
    require(m > p, b.name, "m > p")?;
    require(r > 0.0, b.name, "R > 0")?;
    let d = (alpha + 1.0).abs() / p;
    let l = (k(r) / ax()).ln();
    let v = spow(l.clone(), alpha + p);
    let phi = spow(l.clone(), d);
    let base = spow(ax(), -p);
    let w0 = smul(spow(l.clone(), alpha), base.clone());
    let w1 = smul(spow(l, alpha + 1.0), base);
    let c0 = d.powf(p);
    let c1 = d.powf(p - 1.0) * (m - p);
    let domain = DomainDescriptor::new(DomainKind::XSlab { radius: r }, false, true)?;
    Ok(b.finish(
        v,
        phi,
        smul(k(c0), w0),
        vec![ExtraTerm { coefficient: c1, weight: w1 }],
        domain,
        None,
        true,
    ))
}

fn hardy_poincare(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    let alpha = b.params.require(b.name, "alpha")?;
    require(alpha > 1.0, b.name, "alpha > 1")?;
    let q = s.homogeneous_dimension();
    let pp = p / (p - 1.0);
    let u = k(1.0) + spow(rho(), pp);
    let v = spow(u.clone(), alpha * (p - 1.0));
    let phi = spow(u.clone(), 1.0 - alpha);
    let coef = q * ((alpha - 1.0) * pp).powf(p - 1.0);
    let wr = smul(k(coef), spow(u, (alpha - 1.0) * (p - 1.0)));
    let w = smul(wr.clone(), horizontal(&s, p));
    let radial = RadialParts {
        v: v.clone(),
        w: wr,
        phi: phi.clone(),
    };
    let domain = DomainDescriptor::new(DomainKind::WholeSpace, true, false)?;
    Ok(b.finish(v, phi, w, vec![], domain, Some(radial), true))
}

fn super_weight(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    let name = b.name;
    let a = b.params.require(name, "a")?;
    let bb = b.params.require(name, "b")?;
    let alpha = b.params.require(name, "alpha")?;
    let beta = b.params.require(name, "beta")?;
    let ell = b.params.require(name, "ell")?;
    let q = s.homogeneous_dimension();
    require(a > 0.0 && bb > 0.0, name, "a > 0 and b > 0")?;
    require(alpha * beta > 0.0, name, "alpha * beta > 0")?;
    require(q >= p * ell + p, name, "Q >= p*ell + p")?;
    let c = (q - p * ell - p) / p;
    let base = k(a) + smul(k(bb), spow(rho(), alpha));
    let v = smul(spow(base.clone(), beta), spow(rho(), -ell * p));
    let phi = spow(rho(), -c);
    let h = horizontal(&s, p);
    let r0 = smul(spow(base.clone(), beta), spow(rho(), -(ell * p + p)));
    let r1 = smul(spow(base, beta - 1.0), spow(rho(), alpha - ell * p - p));
    let c0 = c.powf(p);
    let c1 = c.powf(p - 1.0) * beta * alpha * bb;
    let radial = RadialParts {
        v: v.clone(),
        w: k(c0) * r0.clone() + k(c1) * r1.clone(),
        phi: phi.clone(),
    };
    let domain = DomainDescriptor::new(DomainKind::WholeSpace, true, false)?;
    Ok(b.finish(
        v,
        phi,
        smul(k(c0), smul(r0, h.clone())),
        vec![ExtraTerm {
            coefficient: c1,
            weight: smul(r1, h),
        }],
        domain,
        Some(radial),
        true,
    ))
}

fn yener(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    require(s.k() >= 1, b.name, "k >= 1")?;
    let g = s.gamma();
    let x1 = FieldExpr::x(0);
    let y1 = FieldExpr::y(0);
    let v = smul(
        spow(smul(y1.clone(), spow(ax(), -g)), p - 2.0),
        x1.clone().ln(),
    );
    let phi = y1.clone().ln();
    let w = sdiv(
        smul(spow(ax(), 2.0 * g), x1.ln()),
        smul(spow(y1.clone(), 2.0), spow(y1.ln(), p - 1.0)),
    );
    let domain = DomainDescriptor::new(DomainKind::HalfQuadrant, false, false)?;
    Ok(b.finish(v, phi, w, vec![], domain, None, true))
}

fn hpw_seed(b: Builder) -> Result<WeightTriple> {
    let (s, p) = (b.space, b.p);
    let alpha = b.params.require(b.name, "alpha")?;
    require(alpha > 0.0, b.name, "alpha > 0")?;
    let q = s.homogeneous_dimension();
    let g = s.gamma();
    let pp = p / (p - 1.0);
    let v = smul(spow(rho(), g * p), spow(ax(), -g * p));
    let phi = (k(-alpha) * spow(rho(), pp)).exp();
    let coef = (alpha * pp).powf(p - 1.0);
    let w = smul(k(coef), k(q) - k(alpha * p) * spow(rho(), pp));
    let radial = (g == 0.0).then(|| RadialParts {
        v: k(1.0),
        w: w.clone(),
        phi: phi.clone(),
    });
    let domain = DomainDescriptor::new(DomainKind::WholeSpace, false, g > 0.0)?;
    Ok(b.finish(v, phi, w, vec![], domain, radial, false))
}

/// Parameters used when a run does not specify them.
pub fn reference_params(key: &str) -> Result<Params> {
    let p = Params::new();
    Ok(match key {
        "nch" => p.with("R", 3.0),
        "dambrosio" => p.with("alpha", 3.0).with("beta", 3.0),
        "dambrosio-x" => p.with("alpha", -3.0),
        "log-rho" | "log-x" => p.with("alpha", -2.0).with("R", 3.0),
        "hardy-poincare" => p.with("alpha", 2.0),
        "super" => p
            .with("a", 1.0)
            .with("b", 1.0)
            .with("alpha", 2.0)
            .with("beta", 1.0)
            .with("ell", -1.0),
        "yener-nonradial" => p,
        "hpw-seed" => p.with("alpha", 1.0),
        other => return Err(Error::UnknownCatalogKey(other.to_string())),
    })
}

/// A space, exponent and parameter set at which an entry is admissible.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConfig {
    pub space: GrushinSpace,
    pub p: f64,
    pub params: Params,
}

pub fn reference_config(key: &str) -> Result<ReferenceConfig> {
    let params = reference_params(key)?;
    let space = GrushinSpace::new(2, 1, 1.0)?;
    let p = if key == "log-x" { 1.5 } else { 2.5 };
    Ok(ReferenceConfig { space, p, params })
}

pub(super) fn reference_test_function(t: &WeightTriple, complex_phase: bool) -> FieldExpr {
    let s = &t.space;
    let mut factors: Vec<String> = Vec::new();
    let x_singular = t.domain.exclude_x_axis;
    if t.name == "yener-nonradial" {
        factors.push("bump((x1 - 2)/0.5)".into());
        factors.push("bump((y1 - 2)/0.5)".into());
        factors.extend((2..=s.m()).map(|i| format!("bump(x{i}/0.5)")));
        factors.extend((2..=s.k()).map(|j| format!("bump(y{j}/0.5)")));
    } else if x_singular {
        factors.push("bump((absx - 1.5)/0.5)".into());
        factors.extend((1..=s.k()).map(|j| format!("bump(y{j}/2)")));
    } else {
        factors.push("bump((rho - 1.5)/0.5)".into());
    }
    if complex_phase && s.k() > 0 {
        factors.push("exp(i*y1)".into());
    }
    parse(&factors.join(" * ")).expect("reference test functions are well formed")
}
