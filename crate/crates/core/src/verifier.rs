//! Term-by-term numerical closure of weighted Hardy-type identities and the
//! Heisenberg–Pauli–Weyl deficit.

use std::io::Write;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::cp::cp;
use crate::fields::{CompiledField, FieldExpr};
use crate::quadrature::{check_box, integrate_terms, QuadratureSettings, TermLevels};
use crate::space::{norm, rho_coords, GrushinSpace};
use crate::weights::{catalog_get, DomainDescriptor, Params, WeightTriple};
use crate::{Error, Result};

/// Default relative tolerance on the identity residual.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

/// Half-width of the cube scanned for the support of a test function when
/// no truncation box is given.
pub const SUPPORT_SCAN_HALF_WIDTH: f64 = 8.0;
const SUPPORT_SCAN_POINTS: usize = 65;

/// An identity to check: a catalog triple, a test function and one shared
/// quadrature configuration. The space and exponent are the triple's.
#[derive(Debug, Clone)]
pub struct IdentitySpec {
    pub triple: WeightTriple,
    pub test_function: FieldExpr,
    pub settings: QuadratureSettings,
    pub tolerance: f64,
}

impl IdentitySpec {
    pub fn new(triple: WeightTriple, test_function: FieldExpr) -> Self {
        Self {
            triple,
            test_function,
            settings: QuadratureSettings::default(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn space(&self) -> &GrushinSpace {
        &self.triple.space
    }

    pub fn p(&self) -> f64 {
        self.triple.p
    }
}

/// Rounds to 12 significant digits, the precision used in reports.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round12(*v))
}

fn ser_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| round12(*x)))
}

/// What was checked, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecSummary {
    pub key: String,
    pub params: Params,
    pub m: usize,
    pub k: usize,
    #[serde(serialize_with = "ser_f64")]
    pub gamma: f64,
    #[serde(serialize_with = "ser_f64")]
    pub p: f64,
    pub f: String,
    pub nodes: usize,
    pub panels: usize,
    #[serde(serialize_with = "ser_f64")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEstimates {
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub weighted: f64,
    #[serde(serialize_with = "ser_vec")]
    pub extras: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub remainder: f64,
}

/// Term integrals at the configured panels, the residual there and at
/// doubled panels, and per-term error estimates `|I(2P) - I(P)|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub spec: SpecSummary,
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub weighted: f64,
    #[serde(serialize_with = "ser_vec")]
    pub extras: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub remainder: f64,
    #[serde(serialize_with = "ser_f64")]
    pub residual_rel: f64,
    #[serde(serialize_with = "ser_f64")]
    pub residual_refined: f64,
    pub pass: bool,
    pub error_estimates: ErrorEstimates,
}

impl VerificationReport {
    pub fn extras_sum(&self) -> f64 {
        self.extras.iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Cells of one CSV row (see [`CSV_HEADER`]).
    pub fn csv_record(&self, run: &str) -> Vec<String> {
        let f = |v: f64| serde_json::to_string(&round12(v)).expect("floats serialize");
        vec![
            run.to_string(),
            self.spec.key.clone(),
            f(self.spec.p),
            f(self.lhs),
            f(self.weighted),
            f(self.extras_sum()),
            f(self.remainder),
            f(self.residual_rel),
            self.pass.to_string(),
        ]
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "run",
    "key",
    "p",
    "lhs",
    "weighted",
    "extras_sum",
    "remainder",
    "residual_rel",
    "pass",
];

/// Writes a header and one row per `(run, report)`.
pub fn write_csv<W: Write>(out: W, rows: &[(String, VerificationReport)]) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidParameter(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for (run, r) in rows {
        w.write_record(r.csv_record(run)).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidParameter(format!("csv output failed: {e}")))?;
    Ok(())
}

fn residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.max(1e-30)
}

/// Box around the support of `f`: the explicit box if given, otherwise the
/// cells of a coarse scan where `f` is nonzero, padded by one cell. Axes that
/// straddle zero are made symmetric so that zero is a panel boundary.
pub fn resolve_box(space: &GrushinSpace, f: &CompiledField, settings: &QuadratureSettings) -> Result<Vec<(f64, f64)>> {
    if let Some(b) = &settings.truncation_box {
        let bx: Vec<_> = b.iter().map(|[a, b]| (*a, *b)).collect();
        check_box(space, &bx)?;
        return Ok(bx);
    }
    let dim = space.dim();
    check_box(space, &vec![(0.0, 1.0); dim])?;
    let n = SUPPORT_SCAN_POINTS;
    let h = 2.0 * SUPPORT_SCAN_HALF_WIDTH / (n - 1) as f64;
    let at = |i: usize| -SUPPORT_SCAN_HALF_WIDTH + i as f64 * h;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut z = vec![0.0; dim];
    let mut stack = Vec::new();
    for q in 0..n.pow(dim as u32) {
        let mut r = q;
        for c in z.iter_mut() {
            *c = at(r % n);
            r /= n;
        }
        let v = f.value_with(&z, &mut stack)?;
        if v.norm() > 0.0 {
            for a in 0..dim {
                lo[a] = lo[a].min(z[a]);
                hi[a] = hi[a].max(z[a]);
            }
        }
    }
    if lo[0] > hi[0] {
        return Err(Error::SupportViolation(
            "the test function vanishes on the whole scan grid".into(),
        ));
    }
    let lim = SUPPORT_SCAN_HALF_WIDTH;
    Ok((0..dim)
        .map(|a| {
            let (l, u) = ((lo[a] - h).max(-lim), (hi[a] + h).min(lim));
            if l < 0.0 && u > 0.0 {
                let c = (-l).max(u);
                (-c, c)
            } else {
                (l, u)
            }
        })
        .collect())
}

/// Per-node data shared by the identity and HPW integrands.
struct Node {
    f: Complex64,
    grad_f: [Complex64; crate::fields::MAX_DIM],
    abs_x: f64,
}

/// Evaluates `f` and its Grushin gradient; `None` where `f` vanishes or the
/// node sits exactly on the degenerate set `{x = 0}` for `gamma > 0`.
fn node_data(space: &GrushinSpace, f: &CompiledField, z: &[f64], stack: &mut Vec<Complex64>) -> Result<Option<Node>> {
    let fv = f.value_with(z, stack)?;
    if fv == Complex64::new(0.0, 0.0) {
        return Ok(None);
    }
    let ax = norm(&z[..space.m()]);
    let g = space.gamma();
    if g > 0.0 && ax == 0.0 {
        return Ok(None);
    }
    let grad = f.gradient(z)?;
    let mut grad_f = [Complex64::new(0.0, 0.0); crate::fields::MAX_DIM];
    let scale = if g == 0.0 { 1.0 } else { ax.powf(g) };
    for (i, d) in grad.first().iter().enumerate() {
        grad_f[i] = if i < space.m() { *d } else { d * scale };
    }
    Ok(Some(Node { f: fv, grad_f, abs_x: ax }))
}

fn check_support(space: &GrushinSpace, domain: &DomainDescriptor, settings: &QuadratureSettings, z: &[f64], ax: f64) -> Result<()> {
    let outside = !domain.contains(space, z);
    let in_tube = domain.exclude_x_axis && ax <= settings.exclusion_x;
    let at_origin = domain.exclude_origin && rho_coords(space, z) <= settings.exclusion_origin;
    if outside || in_tube || at_origin {
        let what = if outside {
            "outside the domain"
        } else if in_tube {
            "on the excluded set {x = 0}"
        } else {
            "at the excluded origin"
        };
        return Err(Error::SupportViolation(format!(
            "test function is nonzero at {z:?}, {what}"
        )));
    }
    Ok(())
}

fn real_value(t: &CompiledField, z: &[f64], stack: &mut Vec<Complex64>) -> Result<f64> {
    Ok(t.value_with(z, stack)?.re)
}

/// Checks `int v |grad f|^p = int w |f|^p + sum extras + int v C_p(grad f, phi grad(f/phi))`.
pub fn verify_identity(spec: &IdentitySpec) -> Result<VerificationReport> {
    let t = &spec.triple;
    let s = t.space;
    let p = t.p;
    let dim = s.dim();
    let f = CompiledField::new(&spec.test_function, &s)?;
    let v = CompiledField::new(&t.v, &s)?;
    let phi = CompiledField::new(&t.phi, &s)?;
    let w = CompiledField::new(&t.w_closed, &s)?;
    let extras: Vec<(f64, CompiledField)> = t
        .extra_terms
        .iter()
        .map(|e| Ok((e.coefficient, CompiledField::new(&e.weight, &s)?)))
        .collect::<Result<_>>()?;
    let bx = resolve_box(&s, &f, &spec.settings)?;
    let n_extra = extras.len();
    let n_out = 3 + n_extra;
    let g = s.gamma();
    let levels = integrate_terms(&bx, &spec.settings, n_out, |z, out| {
        let mut stack = Vec::new();
        let Some(node) = node_data(&s, &f, z, &mut stack)? else {
            return Ok(());
        };
        check_support(&s, &t.domain, &spec.settings, z, node.abs_x)?;
        let fa = node.f.norm();
        let fp = fa.powf(p);
        let xi = &node.grad_f[..dim];
        let vv = real_value(&v, z, &mut stack)?;
        let ph = phi.gradient(z)?;
        let phv = ph.value.re;
        let scale = if g == 0.0 { 1.0 } else { node.abs_x.powf(g) };
        let ratio = node.f / phv;
        let mut eta = [Complex64::new(0.0, 0.0); crate::fields::MAX_DIM];
        for i in 0..dim {
            let dphi = if i < s.m() { ph.first()[i] } else { ph.first()[i] * scale };
            eta[i] = xi[i] - ratio * dphi;
        }
        let grad_norm = xi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        out[0] = Complex64::new(vv * grad_norm.powf(p), 0.0);
        out[1] = Complex64::new(real_value(&w, z, &mut stack)? * fp, 0.0);
        for (j, (c, e)) in extras.iter().enumerate() {
            out[2 + j] = Complex64::new(c * real_value(e, z, &mut stack)? * fp, 0.0);
        }
        out[2 + n_extra] = Complex64::new(vv * cp(p, xi, &eta[..dim])?, 0.0);
        Ok(())
    })?;
    Ok(identity_report(spec, &levels, n_extra))
}

fn identity_report(spec: &IdentitySpec, lv: &TermLevels, n_extra: usize) -> VerificationReport {
    let t = &spec.triple;
    let level = |v: &[Complex64]| {
        let lhs = v[0].re;
        let weighted = v[1].re;
        let extras: Vec<f64> = v[2..2 + n_extra].iter().map(|c| c.re).collect();
        let remainder = v[2 + n_extra].re;
        let res = residual(lhs, weighted + extras.iter().sum::<f64>() + remainder);
        (lhs, weighted, extras, remainder, res)
    };
    let (lhs, weighted, extras, remainder, residual_rel) = level(&lv.coarse);
    let (_, _, _, _, residual_refined) = level(&lv.fine);
    let err = |i: usize| (lv.fine[i] - lv.coarse[i]).norm();
    VerificationReport {
        spec: SpecSummary {
            key: t.name.clone(),
            params: t.params.clone(),
            m: t.space.m(),
            k: t.space.k(),
            gamma: t.space.gamma(),
            p: t.p,
            f: spec.test_function.to_string(),
            nodes: spec.settings.nodes_per_axis,
            panels: spec.settings.panels_per_axis,
            tolerance: spec.tolerance,
        },
        lhs,
        weighted,
        extras,
        remainder,
        residual_rel,
        residual_refined,
        pass: residual_rel <= spec.tolerance,
        error_estimates: ErrorEstimates {
            lhs: err(0),
            weighted: err(1),
            extras: (0..n_extra).map(|j| err(2 + j)).collect(),
            remainder: err(2 + n_extra),
        },
    }
}

/// Integrals `M = int |f|^p`, `L = int rho^{p'} |f|^p`, `K = int v |grad f|^p`
/// and `R = int v C_p(...)` for `phi = exp(-alpha rho^{p'})`.
struct HpwLevels {
    levels: TermLevels,
}

fn hpw_integrals(space: &GrushinSpace, p: f64, f: &FieldExpr, settings: &QuadratureSettings, alpha: Option<f64>) -> Result<HpwLevels> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")));
    }
    let s = *space;
    let dim = s.dim();
    let pp = p / (p - 1.0);
    let g = s.gamma();
    let tf = CompiledField::new(f, &s)?;
    let bx = resolve_box(&s, &tf, settings)?;
    let levels = integrate_terms(&bx, settings, 4, |z, out| {
        let mut stack = Vec::new();
        let fv = tf.value_with(z, &mut stack)?;
        if fv == Complex64::new(0.0, 0.0) {
            return Ok(());
        }
        let r = rho_coords(&s, z);
        let fp = fv.norm().powf(p);
        out[0] = Complex64::new(fp, 0.0);
        out[1] = Complex64::new(r.powf(pp) * fp, 0.0);
        let Some(alpha) = alpha else {
            return Ok(());
        };
        let Some(node) = node_data(&s, &tf, z, &mut stack)? else {
            return Ok(());
        };
        if r == 0.0 {
            return Ok(());
        }
        let xi = &node.grad_f[..dim];
        let ax = node.abs_x;
        let v = if g == 0.0 { 1.0 } else { (r / ax).powf(g * p) };
        // phi = exp(-alpha rho^{p'}): grad_gamma phi / phi = -alpha p' rho^{p'-1} grad_gamma rho
        let dr = r.powf(pp - 1.0) * alpha * pp;
        let ratio_scale = fv * dr;
        let denom = r.powf(2.0 * g + 1.0);
        let axg = if g == 0.0 { 1.0 } else { ax.powf(g) };
        let ax2g = if g == 0.0 { 1.0 } else { ax.powf(2.0 * g) };
        let mut eta = [Complex64::new(0.0, 0.0); crate::fields::MAX_DIM];
        for i in 0..dim {
            let drho = if i < s.m() {
                ax2g * z[i] / denom
            } else {
                axg * (1.0 + g) * z[i] / denom
            };
            eta[i] = xi[i] + ratio_scale * drho;
        }
        let grad_norm = xi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        out[2] = Complex64::new(v * grad_norm.powf(p), 0.0);
        out[3] = Complex64::new(v * cp(p, xi, &eta[..dim])?, 0.0);
        Ok(())
    })?;
    Ok(HpwLevels { levels })
}

fn alpha_from(q: f64, p: f64, m: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) || !(m > 0.0) {
        return Err(Error::ZeroDenominator(
            "the moments of f vanish; the HPW parameter is undefined".into(),
        ));
    }
    Ok((q / p) * ((p - 1.0) / p) * m / l)
}

/// `(Q/p) ((p-1)/p) int |f|^p / int rho^{p'} |f|^p`.
pub fn hpw_alpha(space: &GrushinSpace, p: f64, f: &FieldExpr, settings: &QuadratureSettings) -> Result<f64> {
    let lv = hpw_integrals(space, p, f, settings, None)?.levels;
    alpha_from(space.homogeneous_dimension(), p, lv.fine[0].re, lv.fine[1].re)
}

/// HPW identity at the optimal parameter: `lhs = K L^{p-1}`,
/// `weighted = (Q/p)^p M^p`, `remainder = L^{p-1} R`.
pub fn hpw_deficit(space: &GrushinSpace, p: f64, f: &FieldExpr, settings: &QuadratureSettings) -> Result<VerificationReport> {
    let alpha = hpw_alpha(space, p, f, settings)?;
    hpw_deficit_at(space, p, f, settings, alpha)
}

/// As [`hpw_deficit`] with `phi = exp(-alpha rho^{p'})` for a given `alpha`;
/// `weighted` is then `L^{p-1} (alpha p')^{p-1} (Q M - alpha p L)`, which
/// equals `(Q/p)^p M^p` at the optimum.
pub fn hpw_deficit_at(
    space: &GrushinSpace,
    p: f64,
    f: &FieldExpr,
    settings: &QuadratureSettings,
    alpha: f64,
) -> Result<VerificationReport> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    // validates the seed identity's admissibility and records its parameters
    let seed = catalog_get("hpw-seed", space, p, &Params::new().with("alpha", alpha))?;
    let lv = hpw_integrals(space, p, f, settings, Some(alpha))?.levels;
    let q = space.homogeneous_dimension();
    let pp = p / (p - 1.0);
    let level = |v: &[Complex64]| -> Result<(f64, f64, f64, f64)> {
        let (m, l, k, r) = (v[0].re, v[1].re, v[2].re, v[3].re);
        alpha_from(q, p, m, l)?;
        let lp = l.powf(p - 1.0);
        let lhs = k * lp;
        let weighted = lp * (alpha * pp).powf(p - 1.0) * (q * m - alpha * p * l);
        let remainder = lp * r;
        Ok((lhs, weighted, remainder, residual(lhs, weighted + remainder)))
    };
    let (lhs, weighted, remainder, residual_rel) = level(&lv.coarse)?;
    let (lhs_f, weighted_f, remainder_f, residual_refined) = level(&lv.fine)?;
    let tolerance = DEFAULT_TOLERANCE;
    Ok(VerificationReport {
        spec: SpecSummary {
            key: "hpw".into(),
            params: seed.params,
            m: space.m(),
            k: space.k(),
            gamma: space.gamma(),
            p,
            f: f.to_string(),
            nodes: settings.nodes_per_axis,
            panels: settings.panels_per_axis,
            tolerance,
        },
        lhs,
        weighted,
        extras: vec![],
        remainder,
        residual_rel,
        residual_refined,
        pass: residual_rel <= tolerance,
        error_estimates: ErrorEstimates {
            lhs: (lhs_f - lhs).abs(),
            weighted: (weighted_f - weighted).abs(),
            extras: vec![],
            remainder: (remainder_f - remainder).abs(),
        },
    })
}
