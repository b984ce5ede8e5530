use criterion::{black_box, criterion_group, criterion_main, Criterion};
use grushin_core::{
    catalog_get, cp, parse, verify_identity, CompiledField, GrushinSpace, IdentitySpec, Params,
};
use num_complex::Complex64;

fn kernels(c: &mut Criterion) {
    let xi = [Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5), Complex64::new(-0.7, 0.1)];
    let eta = [Complex64::new(0.1, 0.4), Complex64::new(-0.3, 0.2), Complex64::new(0.9, -0.6)];
    c.bench_function("cp p=1.5 n=3", |b| b.iter(|| cp(1.5, black_box(&xi), black_box(&eta))));

    c.bench_function("parse reference bump", |b| {
        b.iter(|| parse(black_box("bump((rho - 1.5)/0.5) * exp(i*y1)")))
    });

    let s = GrushinSpace::new(2, 1, 1.0).unwrap();
    let f = CompiledField::new(&parse("bump((rho - 1.5)/0.5) * exp(i*y1)").unwrap(), &s).unwrap();
    let z = [0.6, -0.8, 0.4];
    c.bench_function("field gradient 3d", |b| b.iter(|| f.gradient(black_box(&z))));
}

fn identity(c: &mut Criterion) {
    let s = GrushinSpace::new(1, 1, 1.0).unwrap();
    let t = catalog_get("dambrosio", &s, 2.0, &Params::new().with("alpha", 4.0).with("beta", 2.0)).unwrap();
    let spec = IdentitySpec::new(t.clone(), t.reference_test_function(true));
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    g.bench_function("dambrosio 2d complex", |b| b.iter(|| verify_identity(black_box(&spec))));
    g.finish();
}

criterion_group!(benches, kernels, identity);
criterion_main!(benches);
