use super::*;
use crate::parser::parse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sp(m: usize, k: usize, g: f64) -> GrushinSpace {
    GrushinSpace::new(m, k, g).unwrap()
}

fn value(e: &FieldExpr, s: &GrushinSpace, z: &[f64]) -> f64 {
    CompiledField::new(e, s).unwrap().value(z).unwrap().re
}

/// A point inside the entry's domain, away from its singular sets and boundary.
fn sample(rng: &mut ChaCha8Rng, t: &WeightTriple) -> Vec<f64> {
    let s = &t.space;
    loop {
        let z: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let r = rho_coords(s, &z);
        let ax = norm(&z[..s.m()]);
        let ok = match t.domain.kind {
            DomainKind::Ball { radius } => r > 0.2 && r < 0.9 * radius && ax > 0.05 * r,
            DomainKind::XSlab { radius } => ax > 0.1 && ax < 0.9 * radius,
            DomainKind::HalfQuadrant => z[0] > 1.2 && z[s.m()] > 1.2,
            _ => r > 0.3 && r < 3.0 && ax > 0.05 * r,
        };
        if ok {
            return z;
        }
    }
}

fn configs() -> Vec<(GrushinSpace, f64)> {
    let mut out = Vec::new();
    for (m, k) in [(1, 1), (2, 1), (1, 2)] {
        for g in [0.0, 1.0, 0.5] {
            for p in [1.5, 2.0, 3.0] {
                out.push((sp(m, k, g), p));
            }
        }
    }
    out
}

#[test]
fn derive_weight_examples() {
    let s = sp(2, 1, 0.0);
    let phi = parse("rho^(-0.5)").unwrap();
    let z = s.point(&[2.0, 0.0], &[0.0]).unwrap();
    let w = derive_weight(&s, 2.0, &FieldExpr::real(1.0), &phi, &z).unwrap();
    assert!((w - 0.0625).abs() < 1e-7, "{w}");

    let z = s.point(&[0.3, -1.0], &[0.7]).unwrap();
    let w = derive_weight(&s, 3.0, &FieldExpr::real(1.0), &FieldExpr::real(1.0), &z).unwrap();
    assert_eq!(w, 0.0);

    let s = sp(1, 1, 1.0);
    let z = s.point(&[1.0], &[0.0]).unwrap();
    let w = derive_weight(&s, 2.0, &FieldExpr::real(1.0), &phi, &z).unwrap();
    assert!((w - 0.25).abs() < 1e-7, "{w}");
}

#[test]
fn derive_weight_rejects_nonpositive_phi() {
    let s = sp(1, 1, 0.0);
    let z = s.point(&[0.5], &[0.5]).unwrap();
    let phi = parse("x1 - 1").unwrap();
    assert!(matches!(
        derive_weight(&s, 2.0, &FieldExpr::real(1.0), &phi, &z),
        Err(Error::Domain { .. })
    ));
    let o = s.point(&[0.0], &[0.0]).unwrap();
    assert!(derive_weight(&s, 2.0, &FieldExpr::real(1.0), &parse("rho^(-1)").unwrap(), &o).is_err());
}

#[test]
fn catalog_examples() {
    let s = sp(1, 1, 1.0);
    let t = catalog_get("dambrosio", &s, 2.0, &Params::new().with("alpha", 4.0).with("beta", 2.0)).unwrap();
    assert!(t.extra_terms.is_empty());
    for z in [[0.7, 0.4], [-1.3, 2.0], [0.2, -0.1]] {
        let r = rho_coords(&s, &z);
        let want = 0.25 * z[0].abs().powi(2) / r.powi(4);
        assert!((value(&t.w_closed, &s, &z) - want).abs() < 1e-14);
    }

    for (m, p) in [(1usize, 2.0), (2, 1.5), (2, 3.0)] {
        let s = sp(m, 1, 0.0);
        let alpha = -(m as f64) - p;
        let t = catalog_get("dambrosio-x", &s, p, &Params::new().with("alpha", alpha)).unwrap();
        let z = vec![1.0; s.dim()];
        let ax = norm(&z[..m]);
        assert!((value(&t.w_closed, &s, &z) - ax.powf(alpha)).abs() < 1e-14);
    }

    let s = sp(2, 1, 0.0);
    let params = Params::new()
        .with("a", 1.0)
        .with("b", 1.0)
        .with("alpha", 2.0)
        .with("beta", 1.0)
        .with("ell", 0.0);
    let s4 = sp(2, 1, 1.0);
    assert_eq!(s4.homogeneous_dimension(), 4.0);
    let t = catalog_get("super", &s4, 2.0, &params).unwrap();
    assert_eq!(t.extra_terms.len(), 1);
    assert!((t.extra_terms[0].coefficient - 2.0).abs() < 1e-15);
    assert!(catalog_get("super", &s, 2.0, &params).is_ok());
}

#[test]
fn admissibility_is_enforced_with_the_constraint_named() {
    let s = sp(1, 1, 1.0);
    let err = catalog_get("log-rho", &s, 2.0, &Params::new().with("alpha", -0.5).with("R", 3.0)).unwrap_err();
    assert!(matches!(&err, Error::Inadmissible { constraint, .. } if constraint == "alpha < -1"), "{err}");
    let err = catalog_get("log-rho", &s, 3.0, &Params::new().with("alpha", -2.0).with("R", 3.0)).unwrap_err();
    assert!(matches!(&err, Error::Inadmissible { constraint, .. } if constraint == "Q > p"), "{err}");
    let err = catalog_get("hardy-poincare", &s, 2.0, &Params::new().with("alpha", 1.0)).unwrap_err();
    assert!(matches!(&err, Error::Inadmissible { constraint, .. } if constraint == "alpha > 1"));
    let err = catalog_get("dambrosio", &s, 2.0, &Params::new().with("alpha", 10.0).with("beta", 0.0)).unwrap_err();
    assert!(err.to_string().contains("Q >= alpha - beta - p"));
    assert!(matches!(
        catalog_get("nosuch", &s, 2.0, &Params::new()),
        Err(Error::UnknownCatalogKey(_))
    ));
    assert!(matches!(
        catalog_get("nch", &s, 2.0, &Params::new()),
        Err(Error::MissingParameter { .. })
    ));
    assert!(catalog_get("nch", &s, 1.0, &Params::new().with("R", 1.0)).is_err());
}

#[test]
fn params_parse_and_display() {
    let p = Params::parse("alpha=4, beta=-2.5").unwrap();
    assert_eq!(p.get("alpha"), Some(4.0));
    assert_eq!(p.get("beta"), Some(-2.5));
    assert_eq!(p.to_string(), "alpha=4,beta=-2.5");
    assert!(Params::parse("").unwrap().iter().next().is_none());
    assert!(Params::parse("alpha").is_err());
    assert!(Params::parse("alpha=x").is_err());
}

/// Every entry's closed-form weight equals the weight derived from `(v, phi)`.
#[test]
fn catalog_matches_derivation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for (s, p) in configs() {
        for key in CATALOG_KEYS {
            let params = reference_params(key).unwrap();
            let Ok(t) = catalog_get(key, &s, p, &params) else {
                continue;
            };
            let deriver = WeightDeriver::new(&s, p, &t.v, &t.phi).unwrap();
            let closed = CompiledField::new(&t.w_closed, &s).unwrap();
            let extras: Vec<_> = t
                .extra_terms
                .iter()
                .map(|e| (e.coefficient, CompiledField::new(&e.weight, &s).unwrap()))
                .collect();
            for _ in 0..50 {
                let z = sample(&mut rng, &t);
                let got = deriver.eval(&z).unwrap();
                let w0 = closed.value(&z).unwrap().re;
                let total = w0 + extras.iter().map(|(c, e)| c * e.value(&z).unwrap().re).sum::<f64>();
                assert!(
                    (got - total).abs() <= 1e-6 * (1.0 + w0.abs()),
                    "{key} m={} k={} g={} p={p} at {z:?}: {got} vs {total}",
                    s.m(),
                    s.k(),
                    s.gamma()
                );
            }
            checked += 1;
        }
    }
    assert!(checked > 100, "{checked}");
}

#[test]
fn weights_are_nonnegative_where_forced() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for (s, p) in configs() {
        for key in CATALOG_KEYS {
            let Ok(t) = catalog_get(key, &s, p, &reference_params(key).unwrap()) else {
                continue;
            };
            if !t.nonnegative_weight {
                continue;
            }
            let total = CompiledField::new(&t.total_weight(), &s).unwrap();
            for _ in 0..50 {
                let z = sample(&mut rng, &t);
                assert!(total.value(&z).unwrap().re >= -1e-10, "{key}");
            }
        }
    }
}

#[test]
fn bessel_examples() {
    let s = sp(1, 1, 1.0);
    let grid = log_grid(0.1, 5.0, 512);
    let r = bessel_residual(
        &s,
        2.0,
        &FieldExpr::real(1.0),
        &parse("0.25 * rho^-2").unwrap(),
        &parse("rho^-0.5").unwrap(),
        &grid,
    )
    .unwrap();
    assert!(r <= 1e-8, "{r}");
    let one = FieldExpr::real(1.0);
    assert_eq!(bessel_residual(&s, 2.0, &one, &FieldExpr::real(0.0), &one, &grid).unwrap(), 0.0);
    assert!(bessel_residual(&s, 2.0, &one, &one, &one, &[1.0, -1.0]).is_err());
    // a wrong weight is detected
    let r = bessel_residual(&s, 2.0, &one, &parse("0.3 * rho^-2").unwrap(), &parse("rho^-0.5").unwrap(), &grid)
        .unwrap();
    assert!(r > 1e-2);
}

#[test]
fn radial_entries_close_the_bessel_equation() {
    let mut seen = 0;
    for (s, p) in configs() {
        let mut keys: Vec<(&str, Params)> = CATALOG_KEYS
            .iter()
            .map(|k| (*k, reference_params(k).unwrap()))
            .collect();
        let g = s.gamma();
        keys.push(("dambrosio", Params::new().with("alpha", (1.0 + g) * p).with("beta", g * p)));
        for (key, params) in keys {
            let Ok(t) = catalog_get(key, &s, p, &params) else {
                continue;
            };
            let Some(rp) = &t.radial else { continue };
            let hi = match t.domain.kind {
                DomainKind::Ball { radius } => 0.95 * radius,
                _ => 5.0,
            };
            let grid = log_grid(0.1, hi, 512);
            let r = bessel_residual(&s, p, &rp.v, &rp.w, &rp.phi, &grid).unwrap();
            assert!(r <= 1e-6, "{key} {params} p={p}: {r}");
            seen += 1;
        }
    }
    assert!(seen > 40, "{seen}");
}

#[test]
fn domain_membership() {
    let s = sp(1, 1, 1.0);
    let ball = DomainDescriptor::new(DomainKind::Ball { radius: 2.0 }, true, false).unwrap();
    assert!(ball.contains(&s, &[1.0, 0.0]));
    assert!(!ball.contains(&s, &[2.0, 0.1]));
    assert!(ball.excluded(&s, &[0.0, 0.0], 0.0, 0.0));
    assert!(!ball.excluded(&s, &[0.0, 0.5], 0.1, 0.0));
    let quad = DomainDescriptor::new(DomainKind::HalfQuadrant, false, false).unwrap();
    assert!(quad.contains(&s, &[1.5, 1.5]) && !quad.contains(&s, &[0.5, 1.5]));
    assert!(DomainDescriptor::new(DomainKind::Ball { radius: 0.0 }, false, false).is_err());
    let bb = ball.bounding_box(&s).unwrap();
    assert_eq!(bb, vec![(-2.0, 2.0), (-2.0, 2.0)]);
}
