use bessel_pairs::inequality::{
    hardy_deficit, hardy_rellich_deficit, improved_rellich_deficit, ImprovedParams, PolynomialMode,
    TestFunctionSpec, Variant,
};
use bessel_pairs::potentials::default_probe_radii;
use bessel_pairs::special::mu_for_dimension;
use bessel_pairs::spectral::c_k;
use bessel_pairs::{
    lambda_limit, make_potential, weight, PotentialSpec, RadialPotential, WeightOptions,
};
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = PolynomialMode> {
    (0u32..4, 1u32..4, prop::collection::vec(-1.0f64..1.0, 1..4))
        .prop_map(|(k, p, coeffs)| PolynomialMode { k, p, coeffs })
}

fn test_function() -> impl Strategy<Value = TestFunctionSpec> {
    prop::collection::vec(mode(), 1..4)
        .prop_filter("distinct modes", |m| {
            let mut ks: Vec<u32> = m.iter().map(|x| x.k).collect();
            ks.sort();
            ks.dedup();
            ks.len() == m.len()
        })
        .prop_map(|modes| TestFunctionSpec {
            label: "random".into(),
            radius: 1.0,
            modes,
        })
}

fn ckn(n: u32, a: f64) -> (RadialPotential, RadialPotential, f64) {
    let g = (n as f64 - 2.0 * a - 2.0) / 2.0;
    (
        RadialPotential::power(a, 1.0),
        RadialPotential::scaled(g * g, RadialPotential::power(a + 1.0, 1.0)),
        -g,
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn weight_scales_with_potentials(alpha in 0.2f64..5.0, m in -0.5f64..0.5) {
        let opts = WeightOptions::default();
        let v = RadialPotential::power(m, 1.0);
        let w = RadialPotential::constant(1.0, 1.0);
        let base = weight(&v, &w, 4, 1.0, &opts).unwrap().beta;
        let sv = weight(&RadialPotential::scaled(alpha, v.clone()), &w, 4, 1.0, &opts).unwrap().beta;
        let sw = weight(&v, &RadialPotential::scaled(alpha, w.clone()), 4, 1.0, &opts).unwrap().beta;
        prop_assert!((sv / (alpha * base) - 1.0).abs() < 1e-7);
        prop_assert!((sw * alpha / base - 1.0).abs() < 1e-7);
    }

    #[test]
    fn weight_decreases_with_radius(r1 in 0.3f64..1.0, grow in 1.05f64..3.0) {
        let opts = WeightOptions::default();
        let r2 = r1 * grow;
        let b = |r: f64| {
            let v = RadialPotential::constant(1.0, r);
            let w = RadialPotential::sum(vec![RadialPotential::constant(1.0, r), RadialPotential::power(0.5, r)]).unwrap();
            weight(&v, &w, 3, r, &opts).unwrap().beta
        };
        prop_assert!(b(r1) >= b(r2) * (1.0 - 1e-7));
    }

    #[test]
    fn lambda_ignores_scaling(c in 0.1f64..10.0, m in -1.0f64..1.0) {
        let w = RadialPotential::power(m, 1.0);
        let probes = default_probe_radii(1.0);
        let a = lambda_limit(&w, &probes).unwrap().lambda;
        let b = lambda_limit(&RadialPotential::scaled(c, w), &probes).unwrap().lambda;
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((a - 2.0 * m).abs() < 1e-6);
    }

    #[test]
    fn hardy_deficit_is_nonnegative_for_ckn(spec in test_function(), a in -0.5f64..1.0) {
        let u = spec.build().unwrap();
        let (v, w, th) = ckn(5, a);
        let d = hardy_deficit(&v, &w, th, &u, 5).unwrap();
        prop_assert!(d.holds(10.0), "{:?}", d);
    }

    #[test]
    fn deficits_are_additive_and_quadratic(spec in test_function(), s in -3.0f64..3.0) {
        let u = spec.build().unwrap();
        let (v, w, th) = ckn(6, 0.0);
        let whole = hardy_rellich_deficit(&v, &w, &u, 6, th).unwrap();
        let parts: f64 = (0..u.modes.len())
            .map(|i| hardy_rellich_deficit(&v, &w, &u.single_mode(i), 6, th).unwrap().deficit)
            .sum();
        prop_assert!((whole.deficit - parts).abs() <= 1e-10 * (1.0 + whole.lhs.abs()));
        let scaled = hardy_rellich_deficit(&v, &w, &u.scaled(s), 6, th).unwrap();
        prop_assert!((scaled.deficit - s * s * whole.deficit).abs() <= 1e-10 * (1.0 + s * s * whole.lhs.abs()));
    }

    #[test]
    fn refinement_stays_within_error(spec in test_function()) {
        let u = spec.build().unwrap();
        let (v, w, th) = ckn(5, 0.5);
        let a = hardy_deficit(&v, &w, th, &u, 5).unwrap();
        let b = hardy_deficit(&v, &w, th, &u.refined(), 5).unwrap();
        prop_assert!((a.deficit - b.deficit).abs() <= a.quad_error + b.quad_error);
    }

    #[test]
    fn rellich_improvement_holds(spec in test_function(), n in 5u32..9) {
        let u = spec.build().unwrap();
        let chain = make_potential(&PotentialSpec::LogChain { k: 1, rho: 10.0 }, 1.0).unwrap();
        let p = ImprovedParams::new(Variant::Rellich, n, 0.0, chain, 1.0).unwrap();
        let d = improved_rellich_deficit(Variant::Rellich, &u, &p).unwrap();
        prop_assert!(d.holds(10.0), "{:?}", d);
    }
}

#[test]
fn mu_increases_with_dimension() {
    let mus: Vec<f64> = (1..=20).map(|n| mu_for_dimension(n).unwrap().mu).collect();
    assert!(mus.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn harmonic_eigenvalues_increase() {
    for n in 2..10 {
        assert_eq!(c_k(n, 0), 0.0);
        assert!((0..10).all(|k| c_k(n, k + 1) > c_k(n, k)));
    }
}
