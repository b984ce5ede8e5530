//! The remainder functional `C_p` and its extremal constants.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::{Error, Result};

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")))
    }
}

/// `|xi|^p - |xi - eta|^p - p |xi - eta|^{p-2} Re((xi - eta) . conj(eta))`.
///
/// For `p < 2` and `xi = eta` the last term is taken to be zero.
pub fn cp(p: f64, xi: &[Complex64], eta: &[Complex64]) -> Result<f64> {
    check_p(p)?;
    if xi.len() != eta.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.len(),
            found: eta.len(),
        });
    }
    let mut xi2 = 0.0;
    let mut a2 = 0.0;
    let mut eta2 = 0.0;
    let mut inner = 0.0;
    for (x, e) in xi.iter().zip(eta) {
        let a = x - e;
        xi2 += x.norm_sqr();
        a2 += a.norm_sqr();
        eta2 += e.norm_sqr();
        inner += (a * e.conj()).re;
    }
    if a2 == 0.0 {
        return Ok(xi2.powf(0.5 * p));
    }
    // With a = xi - eta: |xi|^2 = |a|^2 (1 + u), u = w + h, w = 2 Re(a.conj(eta)) / |a|^2,
    // h = |eta|^2 / |a|^2, and C_p = |a|^p (g(u) + (p/2) h) where
    // g(u) = (1 + u)^{p/2} - 1 - (p/2) u is second order in u.
    let w = 2.0 * inner / a2;
    let h = eta2 / a2;
    let u = w + h;
    if u.abs() > 0.5 {
        let cross = p * a2.powf(0.5 * p - 1.0) * inner;
        return Ok(xi2.powf(0.5 * p) - a2.powf(0.5 * p) - cross);
    }
    Ok(a2.powf(0.5 * p) * (second_order_remainder(0.5 * p, u) + 0.5 * p * h))
}

/// `(1 + u)^q - 1 - q u` for `|u| <= 0.5`.
fn second_order_remainder(q: f64, u: f64) -> f64 {
    if u.abs() > 0.1 {
        return (q * u.ln_1p()).exp_m1() - q * u;
    }
    let mut coef = q * (q - 1.0) / 2.0;
    let mut pow = u * u;
    let mut sum = 0.0;
    for n in 2..60 {
        let term = coef * pow;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || coef == 0.0 {
            break;
        }
        coef *= (q - n as f64) / (n as f64 + 1.0);
        pow *= u;
    }
    sum
}

/// Which normalization of `C_p(1 + s + it, s + it)` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CpRatioKind {
    /// Divide by `|eta|^p = (s^2 + t^2)^{p/2}`.
    Power,
    /// Divide by `(|xi| + |xi - eta|)^{p-2} |eta|^2`.
    Quotient,
}

/// `(1 + u)^{p/2} - 1 - p s` with `u = 2s + s^2 + t^2`, computed without
/// cancellation for small `u`.
fn ratio_numerator(p: f64, s: f64, t: f64) -> f64 {
    let u = 2.0 * s + s * s + t * t;
    (0.5 * p * u.ln_1p()).exp_m1() - p * s
}

fn ratio_unchecked(p: f64, s: f64, t: f64, kind: CpRatioKind) -> f64 {
    let r2 = s * s + t * t;
    let num = ratio_numerator(p, s, t);
    match kind {
        CpRatioKind::Power => num / r2.powf(0.5 * p),
        CpRatioKind::Quotient => {
            let xi = (1.0 + 2.0 * s + r2).max(0.0).sqrt();
            num / ((xi + 1.0).powf(p - 2.0) * r2)
        }
    }
}

/// The two-variable ratio whose extrema define the constants.
pub fn cp_ratio(p: f64, s: f64, t: f64, kind: CpRatioKind) -> Result<f64> {
    check_p(p)?;
    if s == 0.0 && t == 0.0 {
        return Err(Error::InvalidParameter("the ratio is undefined at (s, t) = (0, 0)".into()));
    }
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::InvalidParameter("(s, t) must be finite".into()));
    }
    Ok(ratio_unchecked(p, s, t, kind))
}

/// Numerical estimates of the extremal constants.
///
/// `c1` is reported for `p >= 2`, `c2_inf` and `c3_sup` for `p < 2`; the
/// others are `None`. Each bracket is the spread between two independent
/// searches at different grid resolutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpConstants {
    pub p: f64,
    pub c1: Option<f64>,
    pub c2_inf: Option<f64>,
    pub c3_sup: Option<f64>,
    pub c1_bracket: Option<f64>,
    pub c2_inf_bracket: Option<f64>,
    pub c3_sup_bracket: Option<f64>,
}

const BRACKET_TARGET: f64 = 1e-4;
const PROBE_ANGLES: usize = 720;
const PROBE_RADII: [f64; 2] = [1e-6, 1e6];

pub fn extremal_constants(p: f64) -> Result<CpConstants> {
    check_p(p)?;
    let mut out = CpConstants {
        p,
        c1: None,
        c2_inf: None,
        c3_sup: None,
        c1_bracket: None,
        c2_inf_bracket: None,
        c3_sup_bracket: None,
    };
    if p >= 2.0 {
        let (v, w) = bracketed(p, CpRatioKind::Power, Goal::Min)?;
        out.c1 = Some(v);
        out.c1_bracket = Some(w);
    }
    if p < 2.0 {
        let (v, w) = bracketed(p, CpRatioKind::Quotient, Goal::Min)?;
        out.c2_inf = Some(v);
        out.c2_inf_bracket = Some(w);
        let (v, w) = bracketed(p, CpRatioKind::Quotient, Goal::Max)?;
        out.c3_sup = Some(v);
        out.c3_sup_bracket = Some(w);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    Min,
    Max,
}

impl Goal {
    fn sign(self) -> f64 {
        match self {
            Goal::Min => 1.0,
            Goal::Max => -1.0,
        }
    }
}

fn bracketed(p: f64, kind: CpRatioKind, goal: Goal) -> Result<(f64, f64)> {
    let mut n = 400;
    let mut coarse = search(p, kind, goal, n);
    loop {
        let fine = search(p, kind, goal, 2 * n);
        let width = (fine - coarse).abs();
        if width <= BRACKET_TARGET {
            let best = match goal {
                Goal::Min => fine.min(coarse),
                Goal::Max => fine.max(coarse),
            };
            return Ok((best, width));
        }
        if n >= 6400 {
            return Err(Error::NonConvergence(format!(
                "constant search for p={p} did not reach bracket {BRACKET_TARGET} (width {width})"
            )));
        }
        n *= 2;
        coarse = fine;
    }
}

/// Analytic limits of the ratio as `r -> 0` (over all directions) and `r -> inf`.
fn limit_values(p: f64, kind: CpRatioKind) -> Vec<f64> {
    match kind {
        // r -> inf gives 1; r -> 0 diverges for p > 2 and is 1 at p = 2.
        CpRatioKind::Power => vec![1.0],
        // r -> 0 gives p (1 + (p-2) cos^2) / 2^{p-1}; r -> inf gives 1.
        CpRatioKind::Quotient => {
            let c = p / 2f64.powf(p - 1.0);
            vec![c, c * (p - 1.0), 1.0]
        }
    }
}

/// Best objective over grid, ray probes and limits, refined locally.
fn search(p: f64, kind: CpRatioKind, goal: Goal, n: usize) -> f64 {
    let sg = goal.sign();
    let obj = |s: f64, t: f64| -> f64 {
        if s == 0.0 && t == 0.0 {
            return f64::INFINITY;
        }
        let v = sg * ratio_unchecked(p, s, t, kind);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let h = std::f64::consts::PI / n as f64;
    let node = |i: usize| (-FRAC_PI_2 + (i as f64 + 0.5) * h).tan();
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = node(i);
            (0..n)
                .map(|j| {
                    let t = node(j);
                    (obj(s, t), s, t)
                })
                .fold((f64::INFINITY, s, 0.0), |a, b| if b.0 < a.0 { b } else { a })
        })
        .collect();
    let mut best = rows
        .into_iter()
        .fold((f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    for &r in &PROBE_RADII {
        for a in 0..PROBE_ANGLES {
            let th = 2.0 * std::f64::consts::PI * a as f64 / PROBE_ANGLES as f64;
            let (s, t) = (r * th.cos(), r * th.sin());
            let v = obj(s, t);
            if v < best.0 {
                best = (v, s, t);
            }
        }
    }
    let refined = nelder_mead(|x| obj(x[0], x[1]), [best.1, best.2], 0.05 * (1.0 + best.1.abs()));
    let mut value = best.0.min(refined);
    for l in limit_values(p, kind) {
        value = value.min(sg * l);
    }
    sg * value
}

/// Minimal Nelder-Mead in two variables; returns the best value found.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: f64) -> f64 {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut vals = simplex.map(&f);
    for _ in 0..2000 {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        if (vals[w] - vals[b]).abs() <= 1e-15 * (1.0 + vals[b].abs()) {
            break;
        }
        let c = [
            0.5 * (simplex[b][0] + simplex[m][0]),
            0.5 * (simplex[b][1] + simplex[m][1]),
        ];
        let along = |k: f64| [c[0] + k * (simplex[w][0] - c[0]), c[1] + k * (simplex[w][1] - c[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[b] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[w] = xe;
                vals[w] = fe;
            } else {
                simplex[w] = xr;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = xr;
            vals[w] = fr;
        } else {
            let xc = if fr < vals[w] { along(-0.5) } else { along(0.5) };
            let fc = f(xc);
            if fc < vals[w].min(fr) {
                simplex[w] = xc;
                vals[w] = fc;
            } else {
                for k in [m, w] {
                    simplex[k] = [
                        0.5 * (simplex[b][0] + simplex[k][0]),
                        0.5 * (simplex[b][1] + simplex[k][1]),
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    vals.into_iter().fold(f64::INFINITY, f64::min)
}
