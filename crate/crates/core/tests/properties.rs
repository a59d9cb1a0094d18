use std::sync::OnceLock;

use proptest::prelude::*;

use wsobolev_core::douglas::{douglas_energy, feller_form, BoundaryData, Mode};
use wsobolev_core::geometry::Domain;
use wsobolev_core::math;
use wsobolev_core::operator::{Kind, MatrixField};
use wsobolev_core::testfn::{Family, TestFunction};
use wsobolev_core::trend::{classify, Trend};
use wsobolev_core::weights::{self, Family as WFamily, Normalization, WeightTriple};

fn operators() -> Vec<(MatrixField, Domain)> {
    vec![
        (MatrixField::identity(2), Domain::unit_disk()),
        (MatrixField::new(Kind::Constant(vec![2.0, 0.5, 0.5, 1.0]), 2).unwrap(), Domain::unit_disk()),
        (MatrixField::scalar_profile("2 + 0.5*x1", 2).unwrap(), Domain::unit_box(2)),
        (
            MatrixField::new(
                Kind::Custom { entries: vec!["2 + x1*x2".into(), "0.3*x1".into(), "0.3*x1".into(), "1.5".into()] },
                2,
            )
            .unwrap(),
            Domain::unit_box(2),
        ),
    ]
}

fn point_in(domain: &Domain, a: f64, b: f64) -> Vec<f64> {
    match domain {
        Domain::Ball { .. } => {
            let r = 0.99 * math::sqrt(a);
            let t = math::TAU * b;
            vec![r * math::cos(t), r * math::sin(t)]
        }
        _ => vec![a, b],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn a_norm_sandwich(k in 0usize..4, a in 0.0..1.0f64, b in 0.0..1.0f64,
                       xi in prop::array::uniform2(-10.0..10.0f64)) {
        let ops = operators();
        let (field, domain) = &ops[k];
        let e = field.ellipticity_constants(domain, 2000).unwrap();
        let x = point_in(domain, a, b);
        let q = field.a_norm(&x, &xi).unwrap().powi(2);
        let n2 = xi[0] * xi[0] + xi[1] * xi[1];
        prop_assert!(q >= e.c_a * n2 * (1.0 - 1e-12) - 1e-300);
        prop_assert!(q <= e.big_c_a * n2 * (1.0 + 1e-12) + 1e-300);
    }
}

fn test_functions() -> &'static [(TestFunction, Domain, (f64, f64))] {
    static CELL: OnceLock<Vec<(TestFunction, Domain, (f64, f64))>> = OnceLock::new();
    CELL.get_or_init(|| {
        build_functions()
            .into_iter()
            .map(|(u, d)| {
                let r = u.value_range(&d);
                (u, d, r)
            })
            .collect()
    })
}

fn build_functions() -> Vec<(TestFunction, Domain)> {
    let disk = Domain::unit_disk();
    let square = Domain::cuboid(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    vec![
        (TestFunction::new(Family::RadialPower { alpha: -1.0 }, 2).unwrap(), disk.clone()),
        (TestFunction::quadratic(2.0, 1.0, 2), disk.clone()),
        (TestFunction::new(Family::Bump { k: 3, center: vec![0.2, -0.1], radius: 0.7 }, 2).unwrap(), disk.clone()),
        (TestFunction::new(Family::SignedPower1d { eps: 0.25 }, 2).unwrap(), square),
        (TestFunction::new(Family::HarmonicPolynomial { degree: 3, index: 1 }, 2).unwrap(), disk.clone()),
        (TestFunction::custom("exp(x1) * sin(2*x2) + x1^3", 2).unwrap(), disk),
    ]
}

fn weights() -> &'static [WeightTriple] {
    static CELL: OnceLock<Vec<WeightTriple>> = OnceLock::new();
    CELL.get_or_init(|| vec![
        WeightTriple::power(-0.5),
        WeightTriple::new(WFamily::PowerLog { alpha: 2.5, beta: 1.0 }, f64::INFINITY, 0.0).unwrap(),
        WeightTriple::new(WFamily::Exponential { beta: 0.5, alpha: 1.0 }, f64::INFINITY, 0.0).unwrap(),
        weights::weight_from_tau(weights::parse_in_s("1 + s^2").unwrap(), 0.0, f64::INFINITY).unwrap(),
        WeightTriple::new(WFamily::Custom { h: weights::parse_in_s("1 + s").unwrap() }, f64::INFINITY, 0.0).unwrap(),
    ])
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn analytic_jets_match_finite_differences(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        for (u, domain, (lo, hi)) in test_functions() {
            let x = point_in(domain, a, b);
            let step = 1e-4 * u.regular_radius(&x).min(1.0);
            if !(step > 0.0) {
                continue;
            }
            let jet = u.eval_jet(&x).unwrap();
            let (g, h) = u.fd_jet(&x, step).unwrap();
            let dg: Vec<f64> = jet.grad.iter().zip(&g).map(|(p, q)| p - q).collect();
            let dh: Vec<f64> = jet.hess.iter().zip(&h).map(|(p, q)| p - q).collect();
            prop_assert!(norm(&dg) <= 1e-6 * (1.0 + norm(&jet.grad)), "{:?} grad at {:?}", u.family(), x);
            prop_assert!(norm(&dh) <= 1e-4 * (1.0 + norm(&jet.hess)), "{:?} hess at {:?}", u.family(), x);
            prop_assert!((jet.hess[1] - jet.hess[2]).abs() <= 1e-12 * (1.0 + jet.hess[1].abs()));
            prop_assert!(jet.value >= lo - 1e-12 * lo.abs() && jet.value <= hi + 1e-12 * hi.abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn weight_antiderivatives_differentiate_back(s in 0.05..5.0f64, t in 0.05..5.0f64) {
        for w in weights() {
            let d = 1e-5 * s;
            let dh = (w.big_h(s + d).unwrap() - w.big_h(s - d).unwrap()) / (2.0 * d);
            let dht = (w.h_tilde(s + d).unwrap() - w.h_tilde(s - d).unwrap()) / (2.0 * d);
            let h = w.h(s).unwrap();
            let hh = w.big_h(s).unwrap();
            prop_assert!((dh - h).abs() <= 1e-6 * (1.0 + h.abs()), "{w}: H' {dh} vs h {h}");
            prop_assert!((dht - hh).abs() <= 1e-6 * (1.0 + hh.abs()), "{w}: H~' {dht} vs H {hh}");
            let g = w.transform_g(s).unwrap();
            let tt = w.transform_t(s).unwrap();
            prop_assert!((g - tt * tt * h).abs() <= 1e-12 * g.abs().max(1e-300), "{w}: G {g}");
            if s < t {
                prop_assert!(hh < w.big_h(t).unwrap());
            }
        }
    }

    #[test]
    fn h_tilde_normalization_shifts_by_a_constant(s in 0.05..5.0f64, t in 0.05..5.0f64) {
        let f = WFamily::Power { alpha: 0.5 };
        let a = WeightTriple::with_normalization(f.clone(), f64::INFINITY, 0.0, Normalization::Hardy0).unwrap();
        let b = WeightTriple::with_normalization(f, f64::INFINITY, 0.0, Normalization::Anchored { s0: 2.0, value: 3.0 }).unwrap();
        let da = a.h_tilde(s).unwrap() - a.h_tilde(t).unwrap();
        let db = b.h_tilde(s).unwrap() - b.h_tilde(t).unwrap();
        prop_assert!((da - db).abs() <= 1e-12 * (1.0 + da.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trend_classification_is_scale_invariant(c in 0.1..100.0f64, v0 in 0.5..2.0f64) {
        let geometric: Vec<f64> = (0..6).map(|k| c * (v0 + 1.0 - 0.5f64.powi(k))).collect();
        let growing: Vec<f64> = (0..6).map(|k| c * v0 * 1.25f64.powi(k)).collect();
        let settled: Vec<f64> = (0..5).map(|k| c * v0 * (1.0 + 1e-12 * k as f64)).collect();
        prop_assert_ne!(classify(&geometric, 1e-6), Trend::Diverging);
        prop_assert_eq!(classify(&growing, 1e-6), Trend::Diverging);
        prop_assert_eq!(classify(&settled, 1e-6), Trend::Converged);
    }

    #[test]
    fn douglas_energy_invariances(a in prop::collection::vec(-2.0..2.0f64, 1..6),
                                  b in prop::collection::vec(-2.0..2.0f64, 1..6),
                                  c in -3.0..3.0f64, phi in 0.0..6.3f64) {
        let modes: Vec<Mode> = a.iter().zip(&b).enumerate()
            .map(|(i, (a, b))| Mode { k: i as u32 + 1, a: *a, b: *b }).collect();
        let exact: f64 = modes.iter().map(|m| math::PI * m.k as f64 * (m.a * m.a + m.b * m.b)).sum();
        let g = BoundaryData::trig(c, modes);
        let d = douglas_energy(&g, 6).unwrap();
        prop_assert!((d - exact).abs() < 1e-8 * (1.0 + exact));
        let r = douglas_energy(&g.rotated(phi).unwrap(), 6).unwrap();
        prop_assert!((r - d).abs() < 1e-10 * (1.0 + d));
        let f = feller_form(&g, 2.0, 6).unwrap();
        prop_assert!((f - 2.0 * d).abs() < 1e-10 * (1.0 + d));
    }
}
