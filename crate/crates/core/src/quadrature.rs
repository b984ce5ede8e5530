//! Composite tensor-product Gauss–Legendre quadrature over truncated,
//! masked domains, with a panel-doubling error estimate and an
//! epsilon-ladder extrapolation for regularized integrands.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::space::GrushinSpace;
use crate::weights::DomainDescriptor;
use crate::{Error, Result};

/// Largest supported `m + k`.
pub const MAX_QUADRATURE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    /// Gauss–Legendre order on each panel.
    #[serde(rename = "nodes")]
    pub nodes_per_axis: usize,
    #[serde(rename = "panels")]
    pub panels_per_axis: usize,
    /// Per-axis `[lo, hi]`; derived from the domain or test function when absent.
    #[serde(rename = "box")]
    pub truncation_box: Option<Vec<[f64; 2]>>,
    /// Nodes with `|x| <= exclusion_x` are dropped when the domain excludes `{x = 0}`.
    pub exclusion_x: f64,
    /// Nodes with `rho <= exclusion_origin` are dropped when the domain excludes the origin.
    pub exclusion_origin: f64,
    pub eps_ladder: Vec<f64>,
    /// Cap on the total number of integrand evaluations over both levels.
    pub budget: usize,
    pub target_rel_err: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            nodes_per_axis: 8,
            panels_per_axis: 8,
            truncation_box: None,
            exclusion_x: 0.0,
            exclusion_origin: 0.0,
            eps_ladder: vec![1e-2, 1e-3, 1e-4],
            budget: 40_000_000,
            target_rel_err: 1e-3,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.nodes_per_axis < 2 {
            return bad(format!("nodes must be >= 2, got {}", self.nodes_per_axis));
        }
        if self.panels_per_axis < 1 {
            return bad("panels must be >= 1".into());
        }
        if !(self.exclusion_x >= 0.0 && self.exclusion_origin >= 0.0) {
            return bad("exclusion radii must be >= 0".into());
        }
        if self.eps_ladder.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return bad("eps_ladder entries must be positive".into());
        }
        if self.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_ladder must be strictly decreasing".into());
        }
        if let Some(b) = &self.truncation_box {
            if b.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
                return bad("box intervals must satisfy lo < hi".into());
            }
        }
        if !(self.target_rel_err > 0.0) {
            return bad("target_rel_err must be positive".into());
        }
        Ok(())
    }

    /// The same settings with twice as many panels per axis.
    pub fn refined(&self) -> Self {
        Self {
            panels_per_axis: 2 * self.panels_per_axis,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralResult {
    pub value: Complex64,
    /// `|I(2P) - I(P)|` for `P` panels per axis (plus the extrapolation gap for ladders).
    pub error_estimate: f64,
    pub nodes_used: usize,
}

/// Integrals of several terms at `P` and `2P` panels per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TermLevels {
    pub coarse: Vec<Complex64>,
    pub fine: Vec<Complex64>,
    pub nodes_used: usize,
}

impl TermLevels {
    pub fn result(&self, i: usize) -> IntegralResult {
        IntegralResult {
            value: self.fine[i],
            error_estimate: (self.fine[i] - self.coarse[i]).norm(),
            nodes_used: self.nodes_used,
        }
    }
}

pub(crate) fn check_box(space: &GrushinSpace, bx: &[(f64, f64)]) -> Result<()> {
    if space.dim() > MAX_QUADRATURE_DIM {
        return Err(Error::TooManyDimensions {
            dim: space.dim(),
            max: MAX_QUADRATURE_DIM,
        });
    }
    if bx.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: bx.len(),
        });
    }
    Ok(())
}

/// Resolves the box from settings or the domain.
pub(crate) fn settings_box(
    space: &GrushinSpace,
    domain: &DomainDescriptor,
    settings: &QuadratureSettings,
) -> Result<Vec<(f64, f64)>> {
    let bx = match &settings.truncation_box {
        Some(b) => b.iter().map(|[a, b]| (*a, *b)).collect(),
        None => domain.bounding_box(space).ok_or_else(|| {
            Error::InvalidParameter("an unbounded domain needs an explicit truncation box".into())
        })?,
    };
    check_box(space, &bx)?;
    Ok(bx)
}

/// Sum of `n` terms evaluated at every node, one level of refinement.
fn one_level<F>(bx: &[(f64, f64)], nodes: usize, panels: usize, n_out: usize, f: &F) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64], &mut [Complex64]) -> Result<()> + Sync,
{
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes).expect("nodes >= 2"));
    let ref_pairs = rule.as_node_weight_pairs();
    let dim = bx.len();
    // axis -> panel -> [(x, w)]
    let axes: Vec<Vec<Vec<(f64, f64)>>> = bx
        .iter()
        .map(|&(lo, hi)| {
            let h = (hi - lo) / panels as f64;
            (0..panels)
                .map(|j| {
                    let a = lo + j as f64 * h;
                    ref_pairs
                        .iter()
                        .map(|&(t, w)| (a + 0.5 * h * (t + 1.0), 0.5 * h * w))
                        .collect()
                })
                .collect()
        })
        .collect();
    let cells = panels.pow(dim as u32);
    let per_cell: Vec<Result<Vec<Complex64>>> = (0..cells)
        .into_par_iter()
        .map(|c| {
            let mut idx = [0usize; MAX_QUADRATURE_DIM];
            let mut rest = c;
            for slot in idx.iter_mut().take(dim) {
                *slot = rest % panels;
                rest /= panels;
            }
            let mut acc = vec![Complex64::new(0.0, 0.0); n_out];
            let mut out = vec![Complex64::new(0.0, 0.0); n_out];
            let mut coords = vec![0.0; dim];
            let total = nodes.pow(dim as u32);
            for q in 0..total {
                let mut w = 1.0;
                let mut r = q;
                for a in 0..dim {
                    let (x, wa) = axes[a][idx[a]][r % nodes];
                    r /= nodes;
                    coords[a] = x;
                    w *= wa;
                }
                out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                f(&coords, &mut out)?;
                for (s, o) in acc.iter_mut().zip(&out) {
                    *s += o * w;
                }
            }
            Ok(acc)
        })
        .collect();
    let per_cell: Vec<Vec<Complex64>> = per_cell.into_iter().collect::<Result<_>>()?;
    Ok((0..n_out)
        .map(|i| pairwise_sum(&per_cell.iter().map(|v| v[i]).collect::<Vec<_>>()))
        .collect())
}

fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Integrates `n_out` terms at `P` and `2P` panels per axis. The callback
/// writes the term values at a node; nodes it leaves at zero contribute nothing.
pub fn integrate_terms<F>(
    bx: &[(f64, f64)],
    settings: &QuadratureSettings,
    n_out: usize,
    f: F,
) -> Result<TermLevels>
where
    F: Fn(&[f64], &mut [Complex64]) -> Result<()> + Sync,
{
    settings.validate()?;
    if bx.len() > MAX_QUADRATURE_DIM {
        return Err(Error::TooManyDimensions {
            dim: bx.len(),
            max: MAX_QUADRATURE_DIM,
        });
    }
    let n = settings.nodes_per_axis;
    let p = settings.panels_per_axis;
    let dim = bx.len() as u32;
    let coarse_nodes = (n * p).checked_pow(dim).unwrap_or(usize::MAX);
    let fine_nodes = (2 * n * p).checked_pow(dim).unwrap_or(usize::MAX);
    let needed = coarse_nodes.saturating_add(fine_nodes);
    if needed > settings.budget {
        let partial = if coarse_nodes <= settings.budget {
            one_level(bx, n, p, n_out, &f)?.first().map_or(f64::NAN, |v| v.re)
        } else {
            f64::NAN
        };
        return Err(Error::BudgetExceeded {
            needed,
            budget: settings.budget,
            partial,
        });
    }
    let coarse = one_level(bx, n, p, n_out, &f)?;
    let fine = one_level(bx, n, 2 * p, n_out, &f)?;
    Ok(TermLevels {
        coarse,
        fine,
        nodes_used: needed,
    })
}

/// `int_domain integrand` over the truncation box, with the domain mask and
/// exclusion tubes applied.
pub fn integrate<F>(
    space: &GrushinSpace,
    integrand: F,
    domain: &DomainDescriptor,
    settings: &QuadratureSettings,
) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    let bx = settings_box(space, domain, settings)?;
    let levels = integrate_terms(&bx, settings, 1, |z, out| {
        if domain.contains(space, z)
            && !domain.excluded(space, z, settings.exclusion_x, settings.exclusion_origin)
        {
            out[0] = integrand(z)?;
        }
        Ok(())
    })?;
    Ok(levels.result(0))
}

/// Integrates a family indexed by `eps` over the ladder and extrapolates
/// linearly in `eps` from the last two levels.
pub fn integrate_eps_limit<F>(
    space: &GrushinSpace,
    family: F,
    domain: &DomainDescriptor,
    settings: &QuadratureSettings,
) -> Result<IntegralResult>
where
    F: Fn(f64, &[f64]) -> Result<Complex64> + Sync,
{
    settings.validate()?;
    let ladder = &settings.eps_ladder;
    if ladder.is_empty() {
        return Err(Error::InvalidParameter("eps_ladder is empty".into()));
    }
    let mut values = Vec::with_capacity(ladder.len());
    let mut quad_err: f64 = 0.0;
    let mut nodes = 0;
    for &eps in ladder {
        let r = integrate(space, |z| family(eps, z), domain, settings)?;
        quad_err = quad_err.max(r.error_estimate);
        nodes += r.nodes_used;
        values.push(r.value);
    }
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let noise = 1e-13 * scale + quad_err;
    for part in [|c: Complex64| c.re, |c: Complex64| c.im] {
        let steps: Vec<f64> = values.windows(2).map(|w| part(w[1] - w[0])).collect();
        let up = steps.iter().any(|d| *d > noise);
        let down = steps.iter().any(|d| *d < -noise);
        if up && down {
            return Err(Error::NonConvergence(format!(
                "ladder values are not monotone: {values:?}"
            )));
        }
    }
    let n = values.len();
    let (value, gap) = if n == 1 {
        (values[0], 0.0)
    } else {
        let (e1, e2) = (ladder[n - 2], ladder[n - 1]);
        let (v1, v2) = (values[n - 2], values[n - 1]);
        let extrap = v2 + (v2 - v1) * (e2 / (e1 - e2));
        (extrap, (extrap - v2).norm())
    };
    Ok(IntegralResult {
        value,
        error_estimate: quad_err + gap,
        nodes_used: nodes,
    })
}
