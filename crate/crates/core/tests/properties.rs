//! Property tests for the invariants of geometry, fields, obstructions and quivers.

mod common;

use std::f64::consts::PI;

use kymh::cli::{parse_config, serialize_config};
use kymh::fields::{divisor_gcd_degree, saturation_degree, HiggsConfig};
use kymh::forms::{q_int, BinaryForm, Q};
use kymh::geometry::{build_grid, integrate, laplacian, scalar_curvature, AxisymGrid};
use kymh::obstructions::{balancing_condition, futaki_coefficient, futaki_closed_form, stability_check};
use kymh::quiver::{commutator, impose_first_equation, trace_identity_check, ArrowSpec, QuiverBundleSpec};
use kymh::vortex::bundle_curvature;
use kymh::Error;
use num_traits::Zero;
use proptest::prelude::*;
use std::sync::OnceLock;

fn grid() -> &'static AxisymGrid {
    static G: OnceLock<AxisymGrid> = OnceLock::new();
    G.get_or_init(|| build_grid(65).unwrap())
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.4f64..0.4, 6)
}

fn field(c: &[f64]) -> kymh::geometry::Field {
    grid().field_from_fn(|s| {
        let t = s.clamp(-1.0, 1.0).acos();
        c.iter().enumerate().map(|(k, a)| a * ((k as f64) * t).cos()).sum::<f64>()
    })
}

fn rank2() -> impl Strategy<Value = ([u32; 2], [u32; 2], i64, i64)> {
    (1u32..=6, 1u32..=6, 1i64..=60, 1i64..=4).prop_flat_map(|(a, b, p, q)| {
        let (n1, n2) = (a.min(b), a.max(b));
        (Just([n1, n2]), (0..=n1, 0..=n2).prop_map(|(x, y)| [x, y]), Just(p), Just(q))
    })
}

fn rank2_config(d: [u32; 2], l: [u32; 2], p: i64, q: i64) -> HiggsConfig {
    HiggsConfig::rank2_exact(d, l, q_int(p) / q_int(q), 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauss_bonnet_any_metric(c in coeffs()) {
        let m = kymh::geometry::normalize_volume(grid(), &field(&c)).unwrap();
        let total = scalar_curvature(grid(), &m).unwrap().total;
        prop_assert!((total - 8.0 * PI).abs() < 1e-8, "total {}", total);
    }

    #[test]
    fn laplacian_self_adjoint(cu in coeffs(), cf in coeffs(), cg in coeffs()) {
        let m = kymh::geometry::normalize_volume(grid(), &field(&cu)).unwrap();
        let (f, g) = (field(&cf), field(&cg));
        let a = integrate(grid(), &m, &f.component_mul(&laplacian(grid(), &m, &g).unwrap())).unwrap();
        let b = integrate(grid(), &m, &g.component_mul(&laplacian(grid(), &m, &f).unwrap())).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0));
        // non-negativity of the Dirichlet form
        let e = integrate(grid(), &m, &f.component_mul(&laplacian(grid(), &m, &f).unwrap())).unwrap();
        prop_assert!(e >= -1e-10);
    }

    #[test]
    fn chern_number_invariant(cu in coeffs(), cv in coeffs(), n in 1u32..8) {
        let m = kymh::geometry::normalize_volume(grid(), &field(&cu)).unwrap();
        let c = integrate(grid(), &m, &bundle_curvature(grid(), &m, n as f64, &field(&cv)).unwrap()).unwrap();
        prop_assert!((c - 2.0 * PI * n as f64).abs() < 1e-8);
    }

    #[test]
    fn form_gcd_symmetric(a in prop::collection::vec(-3i64..=3, 1..6), b in prop::collection::vec(-3i64..=3, 1..6)) {
        let f = BinaryForm::new(a.iter().map(|&x| q_int(x)).collect()).unwrap();
        let g = BinaryForm::new(b.iter().map(|&x| q_int(x)).collect()).unwrap();
        prop_assert_eq!(f.gcd_degree(&g), g.gcd_degree(&f));
        if let Some(d) = f.gcd_degree(&g) {
            prop_assert!(d <= f.degree().min(g.degree()));
        }
    }

    #[test]
    fn saturation_bounded_by_degrees((d, l, p, q) in rank2()) {
        let cfg = rank2_config(d, l, p, q);
        let sat = saturation_degree(&cfg.form(0).unwrap(), &cfg.form(1).unwrap()).unwrap();
        prop_assert!(sat <= d[0].min(d[1]));
        let (_, min_formula) = divisor_gcd_degree(&cfg).unwrap();
        prop_assert_eq!(sat, min_formula);
    }

    #[test]
    fn balancing_iff_futaki_zero((d, l, p, q) in rank2()) {
        let cfg = rank2_config(d, l, p, q);
        match balancing_condition(&cfg) {
            Err(Error::Pole(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
            Ok(b) => {
                prop_assert_eq!(b.balanced, futaki_coefficient(&cfg).is_zero());
                prop_assert_eq!(b.balanced, futaki_closed_form(&cfg).unwrap() == 0.0);
            }
        }
    }

    #[test]
    fn reduced_iff_nonabelian_window((d, l, p, q) in rank2()) {
        let r = stability_check(&rank2_config(d, l, p, q)).unwrap();
        prop_assert!(r.reduced_window.is_some());
        prop_assert_eq!(r.reduced_window, r.nonabelian_window);
    }

    #[test]
    fn futaki_antisymmetric_under_swap(n in 1u32..=6, l in 0u32..=6, p in 1i64..40) {
        // exchanging the two fixed points sends ℓ to N - ℓ
        prop_assume!(l <= n);
        let tau: Q = q_int(p) / q_int(3);
        let a = HiggsConfig { degrees: vec![n], exponents: vec![l], tau: tau.clone(), alpha: 1.0 };
        let b = HiggsConfig { degrees: vec![n], exponents: vec![n - l], tau, alpha: 1.0 };
        prop_assert_eq!(futaki_coefficient(&a), -futaki_coefficient(&b));
    }

    #[test]
    fn config_round_trip(n in 1u32..9, l in 0u32..9, p in 1i64..100, q in 1i64..7, res in 16usize..64, tol in 1e-12f64..1e-6) {
        prop_assume!(l <= n);
        let tau: Q = q_int(p) / q_int(q);
        let text = format!(
            r#"{{"command":"solve-vortex","degrees":[{n}],"exponents":[{l}],"tau":"{tau}","n":{},"tolerance":{tol:e}}}"#,
            2 * res + 1
        );
        match parse_config(&text) {
            Ok(cfg) => prop_assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg),
            Err(problems) => prop_assert!(
                problems.iter().all(|p| p.contains("N < τ/2") || p.contains("tau")),
                "{:?}", problems
            ),
        }
    }

    #[test]
    fn commutator_hermitian_and_trace_free(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let spec = chain_quiver(&mut rng);
        let model = spec.model().unwrap();
        let p = &common::random_points(&model, 1, &mut rng)[0];
        let comm = commutator(&model, p).unwrap();
        let trace: f64 = comm.iter().map(|m| m.trace().re).sum();
        prop_assert!(trace.abs() < 1e-10);
        for m in &comm {
            prop_assert!((m - m.adjoint()).iter().all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn trace_identity_exact_under_first_equation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let model = chain_quiver(&mut rng).model().unwrap();
        let g = build_grid(33).unwrap();
        let metric = common::random_metric(&g, &mut rng);
        let pts: Vec<_> = common::random_points(&model, g.n(), &mut rng)
            .iter()
            .map(|p| impose_first_equation(&model, p).unwrap())
            .collect();
        let rep = trace_identity_check(&model, &pts, &metric, &g).unwrap();
        prop_assert!(rep.defect.abs() < 1e-11, "{}", rep.defect);
    }
}

/// Linear quiver `v0 → v1 → v2` with random ranks and parameters.
fn chain_quiver(rng: &mut impl rand::Rng) -> QuiverBundleSpec {
    let names = ["v0", "v1", "v2"];
    let arrows = vec![
        ArrowSpec { id: "a".into(), tail: "v0".into(), head: "v1".into(), exponent: None, scale: 1.0 },
        ArrowSpec { id: "b".into(), tail: "v1".into(), head: "v2".into(), exponent: None, scale: 1.0 },
    ];
    QuiverBundleSpec {
        vertices: names.iter().map(|s| s.to_string()).collect(),
        arrows,
        ranks: names.iter().map(|s| (s.to_string(), rng.gen_range(1..=3))).collect(),
        degrees: names.iter().map(|s| (s.to_string(), 0)).collect(),
        sigma: names.iter().map(|s| (s.to_string(), rng.gen_range(0.5..2.0))).collect(),
        tau: names.iter().map(|s| (s.to_string(), rng.gen_range(-2.0..2.0))).collect(),
        rho: 1.0,
    }
}
