//! Complex scalar fields on `R^{m+k}` as expression trees, with exact
//! forward-mode derivatives up to the pure second partials.

mod diff;
mod expr;
mod jet;
mod tape;

pub use diff::{grad_gamma_exprs, gradient_exprs, partial, Var};
pub use expr::FieldExpr;
pub use jet::{Gradient, Jet2, MAX_DIM};
pub use tape::CompiledField;

pub(crate) use diff::{div as sdiv, mul as smul, pow as spow};

use num_complex::Complex64;

use crate::error::Result;
use crate::space::{GrushinSpace, Point};

/// Value of `f` at `z`.
pub fn eval(f: &FieldExpr, space: &GrushinSpace, z: &Point) -> Result<Complex64> {
    CompiledField::new(f, space)?.value(&z.coords())
}

/// Value, gradient and diagonal second partials of `f` at `z`.
pub fn jet2(f: &FieldExpr, space: &GrushinSpace, z: &Point) -> Result<Jet2> {
    CompiledField::new(f, space)?.jet2(&z.coords())
}

/// The cutoff `exp(1/(t^2 - 1))` for `|t| < 1`, zero otherwise.
pub fn bump(t: f64) -> f64 {
    bump_derivatives(t).0
}

/// `bump`, its first and its second derivative at `t`.
pub fn bump_derivatives(t: f64) -> (f64, f64, f64) {
    if t.abs() >= 1.0 || !t.is_finite() {
        return (0.0, 0.0, 0.0);
    }
    let q = t * t - 1.0;
    let b = (1.0 / q).exp();
    if b == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let h1 = -2.0 * t / (q * q);
    let h2 = -2.0 / (q * q) + 8.0 * t * t / (q * q * q);
    (b, b * h1, b * (h1 * h1 + h2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sp(m: usize, k: usize, g: f64) -> GrushinSpace {
        GrushinSpace::new(m, k, g).unwrap()
    }

    #[test]
    fn eval_examples() {
        let s = sp(1, 1, 0.0);
        let z = s.point(&[3.0], &[4.0]).unwrap();
        assert_eq!(eval(&FieldExpr::rho(), &s, &z).unwrap(), Complex64::new(5.0, 0.0));

        let f = (FieldExpr::i() * FieldExpr::y(0)).exp();
        let z = s.point(&[0.0], &[PI]).unwrap();
        let v = eval(&f, &s, &z).unwrap();
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-15);

        let f = FieldExpr::rho().bump_window(1.5, 0.5);
        let z = s.point(&[1.5], &[0.0]).unwrap();
        let v = eval(&f, &s, &z).unwrap();
        assert!((v.re - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn eval_domain_errors_name_the_subexpression() {
        let s = sp(1, 1, 0.0);
        let z = s.point(&[-2.0], &[0.0]).unwrap();
        let err = eval(&parse("log(x1)").unwrap(), &s, &z).unwrap_err();
        match err {
            crate::Error::Domain { subexpr, .. } => assert_eq!(subexpr, "log(x1)"),
            e => panic!("unexpected {e:?}"),
        }
        let err = eval(&parse("1/(x1+2)").unwrap(), &s, &z).unwrap_err();
        assert!(matches!(err, crate::Error::Domain { .. }));
        assert!(eval(&parse("y2").unwrap(), &s, &z).is_err());
    }

    #[test]
    fn bump_examples() {
        assert!((bump(0.0) - 0.36787944117144233).abs() < 1e-16);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.0), 0.0);
        assert!((bump(0.5) - (-4.0f64 / 3.0).exp()).abs() < 1e-16);
        assert!((bump(0.5) - 0.2635971381157267).abs() < 1e-15);
    }

    #[test]
    fn bump_is_a_smooth_cutoff() {
        for t in [1.0 - 1e-6, -(1.0 - 1e-6)] {
            let (b0, b1, b2) = bump_derivatives(t);
            assert!(b0.abs() <= 1e-3 && b1.abs() <= 1e-3 && b2.abs() <= 1e-3);
        }
        for t in [1.0, -1.0, 1.5, -7.0, f64::INFINITY] {
            assert_eq!(bump_derivatives(t), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        for &t in &[-0.9, -0.5, -0.1, 0.0, 0.3, 0.7, 0.95] {
            let h = 1e-5;
            let fd1 = (bump(t + h) - bump(t - h)) / (2.0 * h);
            let fd2 = (bump(t + h) - 2.0 * bump(t) + bump(t - h)) / (h * h);
            let (_, d1, d2) = bump_derivatives(t);
            assert!((fd1 - d1).abs() < 1e-7 * (1.0 + d1.abs()), "{t}: {fd1} {d1}");
            assert!((fd2 - d2).abs() < 1e-3 * (1.0 + d2.abs()), "{t}: {fd2} {d2}");
        }
    }

    #[test]
    fn jet_examples() {
        let s = sp(2, 1, 1.0);
        let z = s.point(&[0.3, -0.2], &[0.7]).unwrap();
        let j = jet2(&FieldExpr::x(0), &s, &z).unwrap();
        assert_eq!(j.first[0], Complex64::new(1.0, 0.0));
        assert_eq!(j.first[1], Complex64::new(0.0, 0.0));
        assert!(j.second_diag.iter().all(|v| *v == Complex64::new(0.0, 0.0)));

        let e = sp(2, 1, 0.0);
        let z = e.point(&[1.0, 2.0], &[2.0]).unwrap();
        let j = jet2(&FieldExpr::rho(), &e, &z).unwrap();
        let want = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        for (g, w) in j.first.iter().zip(want) {
            assert!((g.re - w).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_gradient_matches_central_differences() {
        let s = sp(1, 1, 1.0);
        let z = [1.0, 1.0];
        let j = CompiledField::new(&FieldExpr::rho(), &s).unwrap().jet2(&z).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[i] += h;
            zm[i] -= h;
            let fd = (crate::space::rho_coords(&s, &zp) - crate::space::rho_coords(&s, &zm)) / (2.0 * h);
            assert!((j.first[i].re - fd).abs() <= 1e-8, "{} vs {fd}", j.first[i].re);
        }
    }

    #[test]
    fn rho_derivatives_rejected_on_degenerate_set() {
        let s = sp(1, 1, 1.0);
        let z = s.point(&[0.0], &[1.0]).unwrap();
        assert!(eval(&FieldExpr::rho(), &s, &z).is_ok());
        assert!(jet2(&FieldExpr::rho(), &s, &z).is_err());
        assert!(jet2(&FieldExpr::rho_eps(1e-3), &s, &z).is_ok());
        let o = s.point(&[0.0], &[0.0]).unwrap();
        assert!(jet2(&FieldExpr::rho(), &sp(1, 1, 0.0), &o).is_err());
    }

    #[test]
    fn symbolic_partials_agree_with_jets() {
        let s = sp(2, 1, 0.5);
        let f = parse("exp(i*y1) * bump((rho - 1.5)/0.5) * log(1 + absx^2) / (2 + x2)").unwrap();
        let tape = CompiledField::new(&f, &s).unwrap();
        let z = [0.9, -0.6, 0.8];
        let j = tape.jet2(&z).unwrap();
        for (i, want) in j.first.iter().enumerate() {
            let d = partial(&f, &s, Var::from_flat(&s, i));
            let got = CompiledField::new(&d, &s).unwrap().value(&z).unwrap();
            assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()), "{i}: {got} {want}");
            let dd = partial(&d, &s, Var::from_flat(&s, i));
            let got2 = CompiledField::new(&dd, &s).unwrap().value(&z).unwrap();
            let want2 = j.second_diag[i];
            assert!((got2 - want2).norm() <= 1e-10 * (1.0 + want2.norm()), "{i}: {got2} {want2}");
        }
    }

    /// Random expression trees over every node kind, with arguments kept in
    /// the analytic domain of each node on the sample region.
    fn random_tree(rng: &mut ChaCha8Rng, depth: usize) -> FieldExpr {
        use FieldExpr as F;
        if depth == 0 || rng.gen_bool(0.25) {
            return match rng.gen_range(0..7) {
                0 => F::real(rng.gen_range(0.5..2.0)),
                1 => F::x(rng.gen_range(0..2)),
                2 => F::y(0),
                3 => F::rho(),
                4 => F::rho_eps(rng.gen_range(0.01..0.5)),
                5 => F::abs_x(),
                _ => F::i(),
            };
        }
        let a = random_tree(rng, depth - 1);
        match rng.gen_range(0..10) {
            0 => a + random_tree(rng, depth - 1),
            1 => a - random_tree(rng, depth - 1),
            2 => a * random_tree(rng, depth - 1),
            // keep denominators away from zero
            3 => a / (F::real(3.0) + F::rho() * F::rho()),
            4 => -a,
            5 => (F::real(1.5) + F::rho() * F::rho()).powf(rng.gen_range(-1.5..1.5)) * a,
            6 => (a * F::real(0.1)).exp(),
            7 => (F::real(2.0) + F::abs_x() * F::abs_x()).ln() * a,
            8 => (F::rho() * F::real(0.3)).bump() * a,
            _ => a.powf(2.0),
        }
    }

    #[test]
    fn autodiff_matches_central_differences_on_random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = sp(2, 1, 1.0);
        for _ in 0..200 {
            let f = random_tree(&mut rng, 4);
            let tape = CompiledField::new(&f, &s).unwrap();
            let z = [
                rng.gen_range(0.3..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let j = tape.jet2(&z).unwrap();
            for i in 0..3 {
                let at = |dz: f64| {
                    let mut w = z;
                    w[i] += dz;
                    tape.value(&w).unwrap()
                };
                let h1 = 1e-5;
                let fd1 = (at(h1) - at(-h1)) / (2.0 * h1);
                let tol1 = 1e-6 * (1.0 + j.first[i].norm());
                assert!((fd1 - j.first[i]).norm() <= tol1, "{f}: d{i} {fd1} vs {}", j.first[i]);
                let h2 = 1e-4;
                let fd2 = (at(h2) - 2.0 * at(0.0) + at(-h2)) / (h2 * h2);
                let tol2 = 1e-4 * (1.0 + j.second_diag[i].norm());
                assert!(
                    (fd2 - j.second_diag[i]).norm() <= tol2,
                    "{f}: dd{i} {fd2} vs {}",
                    j.second_diag[i]
                );
            }
        }
    }

    #[test]
    fn jets_are_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sp(2, 1, 1.0);
        for _ in 0..50 {
            let a = random_tree(&mut rng, 3);
            let b = random_tree(&mut rng, 3);
            let z = [rng.gen_range(0.3..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let ja = CompiledField::new(&a, &s).unwrap().jet2(&z).unwrap();
            let jb = CompiledField::new(&b, &s).unwrap().jet2(&z).unwrap();
            let js = CompiledField::new(&(a + b), &s).unwrap().jet2(&z).unwrap();
            assert_eq!(js.value, ja.value + jb.value);
            for i in 0..3 {
                assert_eq!(js.first[i], ja.first[i] + jb.first[i]);
                assert_eq!(js.second_diag[i], ja.second_diag[i] + jb.second_diag[i]);
            }
        }
    }
}
