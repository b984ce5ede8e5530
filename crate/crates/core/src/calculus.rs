//! Grushin gradient, divergence and the radial p-Grushin operator.

use num_complex::Complex64;

use crate::fields::{CompiledField, FieldExpr};
use crate::space::{GrushinSpace, Point};
use crate::{Error, Result};

/// A vector field with `m` x-components followed by `k` y-components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldExpr {
    components: Vec<FieldExpr>,
}

impl VectorFieldExpr {
    pub fn new(space: &GrushinSpace, components: Vec<FieldExpr>) -> Result<Self> {
        if components.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: components.len(),
            });
        }
        Ok(Self { components })
    }

    /// `grad_gamma f` as a vector field of expressions.
    pub fn grad_gamma(space: &GrushinSpace, f: &FieldExpr) -> Self {
        Self {
            components: crate::fields::grad_gamma_exprs(f, space),
        }
    }

    pub fn components(&self) -> &[FieldExpr] {
        &self.components
    }

    /// Every component multiplied by `g`.
    pub fn scaled(&self, g: &FieldExpr) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| crate::fields::smul(g.clone(), c.clone()))
                .collect(),
        }
    }
}

/// A vector field compiled once for repeated divergence evaluation.
#[derive(Debug, Clone)]
pub struct CompiledVectorField {
    space: GrushinSpace,
    components: Vec<CompiledField>,
}

impl CompiledVectorField {
    pub fn new(space: &GrushinSpace, field: &VectorFieldExpr) -> Result<Self> {
        if field.components.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: field.components.len(),
            });
        }
        let components = field
            .components
            .iter()
            .map(|c| CompiledField::new(c, space))
            .collect::<Result<_>>()?;
        Ok(Self {
            space: *space,
            components,
        })
    }

    /// Component values at flat coordinates.
    pub fn values(&self, coords: &[f64]) -> Result<Vec<Complex64>> {
        self.components.iter().map(|c| c.value(coords)).collect()
    }

    /// `sum_i d_{x_i} F_i + |x|^gamma sum_j d_{y_j} F_{m+j}` at flat coordinates.
    pub fn div_gamma(&self, coords: &[f64]) -> Result<Complex64> {
        let m = self.space.m();
        let mut dx = Complex64::new(0.0, 0.0);
        let mut dy = Complex64::new(0.0, 0.0);
        for (i, comp) in self.components.iter().enumerate() {
            if comp.is_constant_zero() {
                continue;
            }
            let g = comp.gradient(coords)?;
            if i < m {
                dx += g.first()[i];
            } else {
                dy += g.first()[i];
            }
        }
        if dy == Complex64::new(0.0, 0.0) {
            return Ok(dx);
        }
        Ok(dx + abs_x_pow(&coords[..m], self.space.gamma()) * dy)
    }
}

fn abs_x_pow(x: &[f64], gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        crate::space::norm(x).powf(gamma)
    }
}

/// `(grad_x f, |x|^gamma grad_y f)` at `z`.
pub fn grad_gamma(space: &GrushinSpace, f: &FieldExpr, z: &Point) -> Result<Vec<Complex64>> {
    let coords = checked_coords(space, z)?;
    let g = CompiledField::new(f, space)?.gradient(&coords)?;
    let scale = abs_x_pow(&z.x, space.gamma());
    Ok(g
        .first()
        .iter()
        .enumerate()
        .map(|(i, d)| if i < space.m() { *d } else { d * scale })
        .collect())
}

/// Grushin divergence of `field` at `z`.
pub fn div_gamma(space: &GrushinSpace, field: &VectorFieldExpr, z: &Point) -> Result<Complex64> {
    let coords = checked_coords(space, z)?;
    CompiledVectorField::new(space, field)?.div_gamma(&coords)
}

/// `Delta_{gamma,p}` applied to `phi(rho)` at `z`:
/// `(|x|^{gamma p} / rho^{gamma p}) |phi'|^{p-2} [(p-1) phi'' + (Q-1) phi' / rho]`.
///
/// `profile` must depend on the point only through `rho`.
pub fn p_grushin_radial(space: &GrushinSpace, p: f64, profile: &FieldExpr, z: &Point) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")));
    }
    checked_coords(space, z)?;
    let tape = CompiledField::radial(profile, space)?;
    let r = space.rho(z);
    let ax = z.abs_x();
    let g = space.gamma();
    if r == 0.0 || (g > 0.0 && ax == 0.0) {
        return Err(Error::Domain {
            subexpr: profile.to_string(),
            reason: "the radial operator is singular where rho = 0 or x = 0".into(),
        });
    }
    let (_, d1, d2) = tape.radial_jet(r)?;
    let (d1, d2) = (real_part(profile, d1)?, real_part(profile, d2)?);
    let q = space.homogeneous_dimension();
    let bracket = (p - 1.0) * d2 + (q - 1.0) * d1 / r;
    let slope = if d1 == 0.0 {
        if p < 2.0 {
            return Err(Error::Domain {
                subexpr: profile.to_string(),
                reason: "phi' vanishes and p < 2".into(),
            });
        }
        if p == 2.0 {
            1.0
        } else {
            0.0
        }
    } else {
        d1.abs().powf(p - 2.0)
    };
    Ok((ax / r).powf(g * p) * slope * bracket)
}

fn real_part(profile: &FieldExpr, v: Complex64) -> Result<f64> {
    if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
        return Err(Error::InvalidParameter(format!(
            "radial profile `{profile}` must be real-valued"
        )));
    }
    Ok(v.re)
}

fn checked_coords(space: &GrushinSpace, z: &Point) -> Result<Vec<f64>> {
    if z.x.len() != space.m() || z.y.len() != space.k() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: z.x.len() + z.y.len(),
        });
    }
    Ok(z.coords())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sp(m: usize, k: usize, g: f64) -> GrushinSpace {
        GrushinSpace::new(m, k, g).unwrap()
    }

    /// Point with `0.5 <= rho <= 2` and `|x| >= 1e-2 rho`.
    fn sample(rng: &mut ChaCha8Rng, s: &GrushinSpace) -> Point {
        loop {
            let x: Vec<f64> = (0..s.m()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..s.k()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let z = s.point(&x, &y).unwrap();
            let r = s.rho(&z);
            if (0.5..=2.0).contains(&r) && z.abs_x() >= 1e-2 * r {
                return z;
            }
        }
    }

    #[test]
    fn gradient_examples() {
        let s = sp(1, 1, 1.0);
        let z = s.point(&[2.0], &[0.3]).unwrap();
        let g = grad_gamma(&s, &FieldExpr::x(0), &z).unwrap();
        assert_eq!(g, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let g = grad_gamma(&s, &FieldExpr::y(0), &z).unwrap();
        assert_eq!(g, vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)]);
    }

    #[test]
    fn gradient_norm_of_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in [sp(1, 1, 1.0), sp(2, 1, 0.5), sp(2, 3, 2.0)] {
            for _ in 0..500 {
                let z = sample(&mut rng, &s);
                let g = grad_gamma(&s, &FieldExpr::rho(), &z).unwrap();
                let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                let r = s.rho(&z);
                let want = (z.abs_x() / r).powf(s.gamma());
                assert!((norm - want).abs() <= 1e-8 * (1.0 + want), "{norm} vs {want}");
            }
        }
    }

    #[test]
    fn divergence_examples() {
        let s = sp(2, 1, 1.0);
        let z = s.point(&[0.4, -0.7], &[1.1]).unwrap();
        let c = VectorFieldExpr::new(&s, vec![1.0.into(), 2.0.into(), (-3.0).into()]).unwrap();
        assert_eq!(div_gamma(&s, &c, &z).unwrap(), Complex64::new(0.0, 0.0));
        let id = VectorFieldExpr::new(&s, vec![FieldExpr::x(0), FieldExpr::x(1), 0.0.into()]).unwrap();
        assert!((div_gamma(&s, &id, &z).unwrap() - 2.0).norm() < 1e-14);
        assert!(VectorFieldExpr::new(&s, vec![FieldExpr::x(0)]).is_err());
    }

    #[test]
    fn divergence_identity_for_rho_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let exps = [-1.0, 0.0, 1.0, 2.5];
        for s in [sp(1, 1, 1.0), sp(2, 1, 0.5), sp(2, 3, 1.0)] {
            let q = s.homogeneous_dimension();
            let g = s.gamma();
            for &c in &exps {
                for &e in &exps {
                    let factor = FieldExpr::rho().powf(c) * FieldExpr::abs_x().powf(e);
                    let field = VectorFieldExpr::grad_gamma(&s, &FieldExpr::rho()).scaled(&factor);
                    let compiled = CompiledVectorField::new(&s, &field).unwrap();
                    for _ in 0..100 {
                        let z = sample(&mut rng, &s);
                        let got = compiled.div_gamma(&z.coords()).unwrap();
                        let r = s.rho(&z);
                        let term = z.abs_x().powf(2.0 * g + e) / r.powf(2.0 * g + 1.0 - c);
                        let want = (q + c + e - 1.0) * term;
                        let tol = 1e-7 * term * (q + c + e - 1.0).abs().max(1.0);
                        assert!(
                            (got.re - want).abs() <= tol && got.im == 0.0,
                            "m={} c={c} s={e}: {got} vs {want}",
                            s.m()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn radial_operator_examples() {
        let s = sp(2, 1, 1.0);
        let q = s.homogeneous_dimension();
        let z = s.point(&[0.6, 0.3], &[-0.9]).unwrap();
        let r = s.rho(&z);
        let ratio = z.abs_x() / r;
        for p in [1.5, 2.0, 3.0] {
            let got = p_grushin_radial(&s, p, &FieldExpr::rho(), &z).unwrap();
            let want = ratio.powf(s.gamma() * p) * (q - 1.0) / r;
            assert!((got - want).abs() < 1e-12 * want.abs());
        }
        assert_eq!(p_grushin_radial(&s, 3.0, &FieldExpr::real(2.0), &z).unwrap(), 0.0);
        assert!(p_grushin_radial(&s, 1.5, &FieldExpr::real(2.0), &z).is_err());
        assert!(p_grushin_radial(&s, 2.0, &FieldExpr::x(0), &z).is_err());
        let on_axis = s.point(&[0.0, 0.0], &[1.0]).unwrap();
        assert!(p_grushin_radial(&s, 2.0, &FieldExpr::rho(), &on_axis).is_err());
    }

    /// `-Delta_{gamma,p} rho^{-(Q-p)/p} = ((Q-p)/p)^p |x|^{gamma p} / rho^{gamma p + p} * phi^{p-1}`.
    #[test]
    fn radial_operator_on_the_hardy_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (s, p) in [(sp(2, 1, 1.0), 2.5), (sp(1, 1, 1.0), 1.5), (sp(2, 3, 0.5), 3.0)] {
            let q = s.homogeneous_dimension();
            let a = (q - p) / p;
            let phi = FieldExpr::rho().powf(-a);
            for _ in 0..50 {
                let z = sample(&mut rng, &s);
                let r = s.rho(&z);
                let got = -p_grushin_radial(&s, p, &phi, &z).unwrap();
                let w = a.powf(p) * z.abs_x().powf(s.gamma() * p) / r.powf(s.gamma() * p + p);
                let want = w * r.powf(-a * (p - 1.0));
                assert!((got - want).abs() <= 1e-7 * want.abs(), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn radial_operator_at_p2_is_the_grushin_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for s in [sp(1, 1, 1.0), sp(2, 1, 0.5), sp(1, 2, 2.0)] {
            for text in ["exp(-rho^2)", "rho^3 - 2*rho", "log(1 + rho^2)"] {
                let phi = parse(text).unwrap();
                let field = VectorFieldExpr::grad_gamma(&s, &phi);
                let compiled = CompiledVectorField::new(&s, &field).unwrap();
                for _ in 0..50 {
                    let z = sample(&mut rng, &s);
                    let a = p_grushin_radial(&s, 2.0, &phi, &z).unwrap();
                    let b = compiled.div_gamma(&z.coords()).unwrap().re;
                    assert!((a - b).abs() <= 1e-6 * (a.abs().max(b.abs()).max(1e-3)), "{text}: {a} vs {b}");
                }
            }
        }
    }
}
