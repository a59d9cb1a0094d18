//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use wsobolev_core::douglas::{self, BoundaryData};
use wsobolev_core::geometry::Domain;
use wsobolev_core::operator::{self, MatrixField};
use wsobolev_core::testfn::{Family, TestFunction};
use wsobolev_core::trend::Trend;
use wsobolev_core::verifier::{self, Constants, Grading, Problem, QuadSpec};
use wsobolev_core::weights::{Family as WFamily, Normalization, WeightTriple};
use wsobolev_lab::config;
use wsobolev_lab::report::{self, Verdict};
use wsobolev_lab::runner::{self, RunOptions};

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spec(levels: &[usize], grading: Grading) -> QuadSpec {
    QuadSpec::new(levels.to_vec(), grading)
}

fn green() -> Problem {
    Problem::new(TestFunction::quadratic(2.0, 1.0, 2), WeightTriple::power(0.0), MatrixField::identity(2), Domain::unit_disk())
        .unwrap()
}

fn example31() -> Problem {
    Problem::new(
        TestFunction::new(Family::RadialPower { alpha: -1.0 }, 2).unwrap(),
        WeightTriple::power(-3.5),
        MatrixField::identity(2),
        Domain::unit_disk(),
    )
    .unwrap()
}

fn example32() -> Problem {
    let w = WeightTriple::with_normalization(
        WFamily::Power { alpha: 0.0 },
        f64::INFINITY,
        1.0,
        Normalization::Anchored { s0: 1.0, value: 0.0 },
    )
    .unwrap();
    Problem::new(
        TestFunction::new(Family::SignedPower1d { eps: 0.25 }, 2).unwrap(),
        w,
        MatrixField::identity(2),
        Domain::cuboid(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
    )
    .unwrap()
}

fn bump_on_box(profile: &str) -> Problem {
    Problem::new(
        TestFunction::new(Family::Bump { k: 4, center: vec![0.5, 0.5], radius: 0.5 }, 2).unwrap(),
        WeightTriple::power(0.0),
        MatrixField::scalar_profile(profile, 2).unwrap(),
        Domain::unit_box(2),
    )
    .unwrap()
}

fn green_identity() -> Outcome {
    let start = Instant::now();
    let r = verifier::verify_identity(&green(), &spec(&[1, 2, 3], Grading::Auto), false, 1e-8).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let got = [r.term_i2, r.term_jp, r.term_jdiv, r.theta];
    let want = [2.0 * PI, 6.0 * PI, 0.0, -4.0 * PI];
    let worst = got.iter().zip(&want).map(|(g, w)| rel(*g, *w)).fold(0.0, f64::max);
    ensure(
        worst < 1e-8 && r.relative_residual < 1e-8 && secs < 5.0,
        format!(
            "terms ({:.10}, {:.10}, {:.1e}, {:.10}), worst rel {worst:.1e}, residual {:.1e}, {secs:.2} s",
            got[0], got[1], got[2], got[3], r.relative_residual
        ),
    )
}

fn singular_example() -> Outcome {
    let p = example31();
    let gamma = p.boundary_exponent().ok_or("no boundary exponent")?;
    let levels = [1, 2, 3, 4];
    let start = Instant::now();
    let graded = verifier::verify_identity(&p, &spec(&levels, Grading::Auto), false, 1e-3).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let plain = verifier::verify_identity(&p, &spec(&levels, Grading::Fixed(1.0)), false, 1e-3).map_err(|e| e.to_string())?;
    let same_nodes = graded.levels.iter().zip(&plain.levels).all(|(a, b)| a.nodes == b.nodes);
    let ratio = plain.relative_residual / graded.relative_residual.max(f64::MIN_POSITIVE);
    let i2 = graded.trend("I2");
    ensure(
        (gamma + 0.5).abs() < 1e-15
            && graded.relative_residual < 1e-3
            && i2 == Some(Trend::Converged)
            && same_nodes
            && ratio >= 10.0
            && secs < 60.0,
        format!(
            "exponent {gamma}, grading q={}, residual {:.1e}, I2 {:.10} trend {}, ungraded residual {:.1e} ({ratio:.1e}x worse at {} nodes), {secs:.2} s",
            graded.grading,
            graded.relative_residual,
            graded.term_i2,
            i2.map(|t| t.to_string()).unwrap_or_default(),
            plain.relative_residual,
            graded.last().nodes
        ),
    )
}

fn negative_control() -> Outcome {
    let p = example32();
    let r = verifier::verify_identity(&p, &spec(&[1, 2, 3, 4, 5], Grading::Fixed(1.0)), false, 1e-6)
        .map_err(|e| e.to_string())?;
    let hess: Vec<f64> = r.levels.iter().map(|l| l.hess_local).collect();
    let monotone = hess.windows(2).all(|w| w[1] > w[0]);
    let flagged = r.flags.iter().any(|f| f.starts_with("hypothesis likely violated"));
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let text = std::fs::read_to_string(dir.join("example32.json")).map_err(|e| e.to_string())?;
    let text = text.replace(r#"{"check": "identity", "expect": "diverge"}"#, r#""identity""#);
    let exp = config::load_str(&text).map_err(|e| e.to_string())?;
    let suite = runner::run(&exp, RunOptions::default());
    ensure(
        hess.len() >= 4
            && monotone
            && r.trend("int_hess_u_local") == Some(Trend::Diverging)
            && !r.converged
            && flagged
            && suite.verdict == Verdict::Fail,
        format!(
            "local Hessian integral {:?}, converged {}, flagged {flagged}, suite verdict {:?}",
            hess.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>(),
            r.converged,
            suite.verdict
        ),
    )
}

fn douglas_formula() -> Outcome {
    let start = Instant::now();
    let d = douglas::douglas_energy(&BoundaryData::cos(1), 8).map_err(|e| e.to_string())?;
    let mut worst: f64 = (d - PI).abs();
    let mut energies = Vec::new();
    for k in 1..=3 {
        let e = douglas::dirichlet_energy(&BoundaryData::cos(k), 4).map_err(|e| e.to_string())?;
        worst = worst.max((e - k as f64 * PI).abs());
        energies.push(e);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst < 1e-6 && secs < 10.0,
        format!("D(cos) = {d:.12}, Dirichlet energies {energies:.10?}, max error {worst:.1e}, {secs:.2} s"),
    )
}

fn theta_representation() -> Outcome {
    let u = TestFunction::custom("x1", 2).map_err(|e| e.to_string())?;
    let r = douglas::theta_representation_check(&u, 2.0, &[4, 5, 6], 1e-4).map_err(|e| e.to_string())?;
    let l = r.last();
    ensure(
        rel(l.theta_direct, 2.0 * PI) < 1e-4 && r.relative_gap < 1e-4 && r.agrees,
        format!(
            "Theta_direct {:.12}, representation {:.12}, relative gap {:.1e}",
            l.theta_direct, l.representation, r.relative_gap
        ),
    )
}

fn opial_suite() -> Outcome {
    let p = Problem::new(TestFunction::unit_bump(2, 2), WeightTriple::power(0.0), MatrixField::identity(2), Domain::unit_disk())
        .unwrap();
    let c = Constants::compute(&p).map_err(|e| e.to_string())?;
    let c_ht = c.c_ht.ok_or("C_H~ unbounded")?;
    let r = verifier::verify_identity(&p, &spec(&[1, 2, 3, 4], Grading::Auto), true, 1e-6).map_err(|e| e.to_string())?;
    let opial = verifier::verify_opial(&p, &r, &c);
    let gh = verifier::verify_gh_bound(&p, &r, &c);
    let gamma = gh.constants.iter().find(|k| k.name == "Gamma").map(|k| k.value).unwrap_or(f64::NAN);
    let expected_gamma = (c.c_p * c_ht).powi(3) / c.ellipticity.c_a;
    let margins: Vec<f64> = opial.iter().map(|o| o.margin).collect();
    ensure(
        (c_ht - 2.0).abs() < 1e-12
            && c.c_p == 1.0
            && opial.iter().all(|o| o.applicable && o.margin >= 0.0)
            && gh.applicable
            && gh.holds
            && gh.margin >= 0.0
            && gamma == expected_gamma,
        format!(
            "C_H~ {c_ht}, C_P {}, Opial margins {margins:.4?}, int G_H {:.4} <= Gamma I2 = {gamma} x {:.4}",
            c.c_p, gh.lhs, r.term_i2
        ),
    )
}

fn kappa_regime() -> Outcome {
    let small = bump_on_box("2 + 0.01*x1");
    let c = Constants::compute(&small).map_err(|e| e.to_string())?;
    let kappa = c.kappa().ok_or("C_H~ unbounded")?;
    let arithmetic = c.divergence.div_sup / c.ellipticity.c_a * c.c_p * c.c_p * c.c_ht.unwrap().powi(2);
    let r = verifier::verify_identity(&small, &spec(&[1, 2, 3, 4], Grading::Auto), true, 1e-6).map_err(|e| e.to_string())?;
    let simplified = verifier::verify_simplified(&small, &r, &c);
    let kb = simplified.iter().find(|x| x.name == "kappa-bound").ok_or("no kappa-bound")?;

    let large = bump_on_box("2 + 10*x1");
    let cl = Constants::compute(&large).map_err(|e| e.to_string())?;
    let rl = verifier::verify_identity(&large, &spec(&[1, 2, 3, 4], Grading::Auto), true, 1e-6).map_err(|e| e.to_string())?;
    let kl = verifier::verify_simplified(&large, &rl, &cl);
    let kbl = kl.iter().find(|x| x.name == "kappa-bound").ok_or("no kappa-bound")?;
    let kappa_large = cl.kappa().unwrap_or(f64::NAN);
    ensure(
        (kappa - 0.005).abs() <= 1e-12
            && (kappa - arithmetic).abs() <= 1e-12
            && kb.applicable
            && kb.holds
            && kb.margin >= 0.0
            && kappa_large >= 1.0
            && !kbl.applicable,
        format!(
            "kappa {kappa} (margin {:.4}: {:.4} <= {:.4}); large profile kappa {kappa_large}, kappa-bound applicable {}",
            kb.margin, kb.lhs, kb.rhs, kbl.applicable
        ),
    )
}

fn metafune_spina() -> Outcome {
    let u = TestFunction::unit_bump(4, 2);
    let d = Domain::cuboid(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let s = spec(&[2, 3, 4, 5], Grading::Auto);
    let r2 = verifier::verify_metafune_spina(&u, 2.0, &d, &s, None, 1e-8).map_err(|e| e.to_string())?;
    let r3 = verifier::verify_metafune_spina(&u, 3.0, &d, &s, None, 1e-6).map_err(|e| e.to_string())?;
    ensure(
        r2.relative_residual < 1e-8 && r3.relative_residual < 1e-6,
        format!(
            "p=2 residual {:.1e} (lhs {:.10}), p=3 residual {:.1e} (lhs {:.10})",
            r2.relative_residual, r2.lhs, r3.relative_residual, r3.lhs
        ),
    )
}

fn property_suites() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut names: Vec<_> = std::fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    names.sort();

    let mut triples = 0;
    let mut worst_pointwise: f64 = 0.0;
    for path in &names {
        let exp = config::load(path).map_err(|e| e.to_string())?;
        let uses_identity = exp.checks.iter().any(|c| matches!(c.kind, config::CheckKind::Identity { .. }));
        if let (Some(p), true) = (&exp.problem, uses_identity) {
            let r = verifier::verify_pointwise(p, 100, 1e-8).map_err(|e| e.to_string())?;
            triples += 1;
            worst_pointwise = worst_pointwise.max(r.max_relative);
            if !(r.holds && r.points == 100) {
                ok = false;
                notes.push(format!("pointwise fails for {}: {r:?}", path.display()));
            }
        }
    }
    notes.push(format!("pointwise max rel {worst_pointwise:.1e} over {triples} triples"));

    let disk = Domain::unit_disk();
    let square = Domain::cuboid(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let functions = [
        (TestFunction::new(Family::RadialPower { alpha: -1.0 }, 2).unwrap(), &disk),
        (TestFunction::quadratic(2.0, 1.0, 2), &disk),
        (TestFunction::new(Family::Bump { k: 3, center: vec![0.2, -0.1], radius: 0.7 }, 2).unwrap(), &disk),
        (TestFunction::new(Family::SignedPower1d { eps: 0.25 }, 2).unwrap(), &square),
        (TestFunction::new(Family::HarmonicPolynomial { degree: 3, index: 0 }, 2).unwrap(), &disk),
        (TestFunction::custom("exp(x1) * cos(x2) + x1 * x2^2", 2).unwrap(), &disk),
    ];
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut jet_points = 0;
    for (u, domain) in &functions {
        for x in verifier::interior_points(domain, 600).into_iter().filter(|x| u.regular_radius(x) > 1e-6).take(500) {
            let step = 1e-4 * u.regular_radius(&x).min(1.0);
            let jet = u.eval_jet(&x).map_err(|e| e.to_string())?;
            let (g, h) = u.fd_jet(&x, step).map_err(|e| e.to_string())?;
            let dg: Vec<f64> = jet.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
            let dh: Vec<f64> = jet.hess.iter().zip(&h).map(|(a, b)| a - b).collect();
            if norm(&dg) > 1e-6 * (1.0 + norm(&jet.grad)) || norm(&dh) > 1e-4 * (1.0 + norm(&jet.hess)) {
                ok = false;
                notes.push(format!("jet mismatch for {:?} at {x:?}", u.family()));
            }
            jet_points += 1;
        }
    }
    notes.push(format!("{jet_points} jets match FD"));

    let mut p = green();
    let a = verifier::compute_theta(&p, 3, 8, false).map_err(|e| e.to_string())?.0;
    p.w = WeightTriple::with_normalization(
        WFamily::Power { alpha: 0.0 },
        f64::INFINITY,
        0.0,
        Normalization::Anchored { s0: 1.5, value: -7.0 },
    )
    .unwrap();
    let b = verifier::compute_theta(&p, 3, 8, false).map_err(|e| e.to_string())?.0;
    let theta_gap = (a - b).abs();
    ok &= theta_gap <= 1e-12 * a.abs();
    notes.push(format!("Theta normalization gap {theta_gap:.1e}"));

    let fields = [
        (MatrixField::scalar_profile("2 + 0.01*x1", 2).unwrap(), Domain::unit_box(2)),
        (
            MatrixField::new(
                operator::Kind::Custom { entries: vec!["2 + x1*x2".into(), "0.3*x1".into(), "0.3*x1".into(), "1.5".into()] },
                2,
            )
            .unwrap(),
            Domain::unit_box(2),
        ),
    ];
    let mut pairs = 0;
    for (field, domain) in &fields {
        let e = field.ellipticity_constants(domain, operator::DEFAULT_SAMPLES).map_err(|e| e.to_string())?;
        let pts = verifier::interior_points(domain, 1000);
        for (i, x) in pts.iter().enumerate() {
            let t = 0.7 * i as f64 + 0.3;
            let xi = [t.cos() * (1.0 + i as f64 % 7.0), t.sin() * (1.0 + i as f64 % 5.0)];
            let q = field.a_norm(x, &xi).map_err(|e| e.to_string())?.powi(2);
            let n2 = xi[0] * xi[0] + xi[1] * xi[1];
            if q < e.c_a * n2 * (1.0 - 1e-12) || q > e.big_c_a * n2 * (1.0 + 1e-12) {
                ok = false;
                notes.push(format!("A-norm sandwich fails at {x:?}"));
            }
            pairs += 1;
        }
    }
    notes.push(format!("A-norm sandwich on {pairs} pairs"));

    let mut worst_tangential: f64 = 0.0;
    for src in ["1 - x1^2 - x2^2", "(1 - x1^2 - x2^2) * (2 + x1)", "(1 - x1^2 - x2^2)^2"] {
        let v = TestFunction::custom(src, 2).unwrap();
        let r = verifier::verify_tangential_gradient(&v, &disk, 256, 1e-8).map_err(|e| e.to_string())?;
        ok &= r.holds;
        worst_tangential = worst_tangential.max(r.max_tangential);
    }
    notes.push(format!("tangential max {worst_tangential:.1e}"));

    let mut identical = true;
    for path in &names {
        let exp = config::load(path).map_err(|e| e.to_string())?;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| runner::run(&exp, RunOptions::default()));
        let b = runner::run(&exp, RunOptions::default());
        identical &= report::to_json(&a) == report::to_json(&b) && report::to_csv(&a) == report::to_csv(&b);
    }
    ok &= identical;
    notes.push(format!("reports byte-identical across runs: {identical}"));
    ensure(ok, notes.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("green identity reproduction", green_identity),
        ("singular case with graded quadrature", singular_example),
        ("negative control", negative_control),
        ("Douglas formula", douglas_formula),
        ("boundary term representation", theta_representation),
        ("Opial suite", opial_suite),
        ("kappa regime", kappa_regime),
        ("Metafune-Spina identity", metafune_spina),
        ("property suites", property_suites),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
