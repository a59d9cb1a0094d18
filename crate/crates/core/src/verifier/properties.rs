use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{BalanceReport, Grading, Problem, QuadSpec};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{self, Domain};
use crate::linalg::halton;
use crate::math;
use crate::testfn::TestFunction;

const TRACE_RADII: [f64; 2] = [1e-4, 5e-5];
const TRACE_SAMPLES: usize = 32;
const VANISH_TOL: f64 = 1e-6;

/// Surrogate for `H~(u) >= 0` with `H~(u) = 0` on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryVanishing {
    pub min_interior: f64,
    pub nonnegative: bool,
    /// Largest `|trace H~(u)|` over the boundary samples.
    pub max_trace: f64,
    pub vanishes: bool,
}

fn h_tilde_of_u(p: &Problem, x: &[f64]) -> f64 {
    let v = p.u.value(x);
    p.w.h_tilde_extended(v).unwrap_or(f64::NAN)
}

/// Samples `H~(u)` inside and takes Richardson-extrapolated shell averages
/// at boundary points.
pub fn boundary_vanishing(p: &Problem) -> BoundaryVanishing {
    let mut min_interior = f64::INFINITY;
    for x in interior_points(&p.domain, 2000) {
        let v = h_tilde_of_u(p, &x);
        if !v.is_nan() {
            min_interior = min_interior.min(v);
        }
    }
    let mut max_trace: f64 = 0.0;
    for x in p.domain.boundary_samples(TRACE_SAMPLES) {
        let t = match geometry::shell_average(&p.domain, |y| h_tilde_of_u(p, y), &x, &TRACE_RADII) {
            Ok(a) => 2.0 * a[1] - a[0],
            Err(_) => f64::NAN,
        };
        max_trace = if t.is_nan() { f64::INFINITY } else { max_trace.max(math::abs(t)) };
    }
    let scale = 1f64.max(math::abs(min_interior).min(1e300));
    BoundaryVanishing {
        min_interior,
        nonnegative: min_interior >= -VANISH_TOL * scale,
        max_trace,
        vanishes: max_trace <= VANISH_TOL,
    }
}

/// Quasi-random interior points (Halton, rejection on balls).
pub fn interior_points(domain: &Domain, count: usize) -> Vec<Vec<f64>> {
    let n = domain.dim();
    let mut pts = Vec::with_capacity(count);
    let mut k = 1u64;
    while pts.len() < count {
        let h = halton(k, n);
        k += 1;
        match domain {
            Domain::Box { lo, hi } => pts.push((0..n).map(|i| lo[i] + h[i] * (hi[i] - lo[i])).collect()),
            Domain::Ball { center, radius } => {
                let y: Vec<f64> = h.iter().map(|v| 2.0 * v - 1.0).collect();
                if math::dot(&y, &y) < 1.0 {
                    pts.push((0..n).map(|i| center[i] + radius * y[i]).collect());
                }
            }
        }
    }
    pts
}

/// Metafune-Spina identity `int g(u)|g(u)|^{p-2} Lap u = -(p-1) int
/// |grad u|^2 g'(u) |g(u)|^{p-2} chi_{g(u) != 0}`; `g` is an expression in
/// `s`, the identity when absent. `u` must vanish on the boundary.
pub fn verify_metafune_spina(
    u: &TestFunction,
    p: f64,
    domain: &Domain,
    spec: &QuadSpec,
    g: Option<&Expr>,
    tol: f64,
) -> Result<BalanceReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("Metafune-Spina needs p > 1, got {p}")));
    }
    spec.validate()?;
    let edge = domain.boundary_samples(256).iter().map(|x| math::abs(u.value(x))).fold(0.0, f64::max);
    if edge > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "u must vanish on the boundary (max |u| = {edge:e})"
        )));
    }
    let dg = g.map(|e| e.diff(0));
    let grading = match spec.grading {
        Grading::Auto => 1.0,
        Grading::Fixed(q) => q,
    };
    let mut levels = Vec::with_capacity(spec.levels.len());
    for &level in &spec.levels {
        let rule = geometry::interior_rule(domain, level, grading, spec.order)?;
        let [lhs, rhs] = geometry::integrate_many::<2, _>(&rule, |x, _| {
            let jet = u.eval_jet(x)?;
            let gn2 = math::dot(&jet.grad, &jet.grad);
            let (gv, dgv) = match (g, &dg) {
                (Some(g), Some(dg)) => (g.eval(&[jet.value]), dg.eval(&[jet.value])),
                _ => (jet.value, 1.0),
            };
            let l = math::signed_pow(gv, p - 1.0) * jet.laplacian();
            let r = if gv == 0.0 { 0.0 } else { -(p - 1.0) * gn2 * dgv * math::pow(math::abs(gv), p - 2.0) };
            Ok([l, r])
        })?;
        levels.push((level, lhs, rhs));
    }
    let name = if g.is_some() { "metafune-g" } else { "metafune" };
    Ok(BalanceReport::new(name, levels, tol))
}

/// Shell-average boundary values of `u` and their common limit `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceReport {
    /// Per boundary sample, the extrapolated limit (`inf` when diverging).
    pub values: Vec<f64>,
    pub t: f64,
    pub spread: f64,
    pub diverging: bool,
    pub in_interval: bool,
    /// The `H~(u) -> 0` surrogate on the boundary.
    pub condition_holds: bool,
    pub holds: bool,
}

/// Radii used by [`verify_trace_constancy`] when none are configured.
pub const DEFAULT_SHELL_RADII: [f64; 5] = [0.1, 0.025, 0.00625, 0.0015625, 0.000390625];

/// Shell averages of `u` at `samples` boundary points. A point whose
/// averages keep growing as the radius shrinks reports an infinite trace.
pub fn verify_trace_constancy(p: &Problem, samples: usize, radii: &[f64], tol: f64) -> Result<TraceReport> {
    if radii.len() < 3 || radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(String::from(
            "trace constancy needs at least three strictly decreasing radii",
        )));
    }
    let mut values = Vec::with_capacity(samples);
    for x in p.domain.boundary_samples(samples) {
        let a = geometry::shell_average(&p.domain, |y| p.u.value(y), &x, radii)?;
        let k = a.len();
        let inc: Vec<f64> = a.windows(2).map(|w| w[1] - w[0]).collect();
        let growing = a.iter().any(|v| !v.is_finite())
            || (inc.iter().all(|d| *d > 0.0)
                && inc.windows(2).all(|w| w[1] >= 0.6 * w[0])
                && a[k - 1] > 0.0);
        if growing {
            values.push(f64::INFINITY);
            continue;
        }
        let ratio = radii[k - 2] / radii[k - 1];
        values.push(a[k - 1] + (a[k - 1] - a[k - 2]) / (ratio - 1.0));
    }
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let all_inf = finite.is_empty();
    let diverging = values.iter().any(|v| v.is_infinite());
    let (t, spread) = if all_inf {
        (f64::INFINITY, 0.0)
    } else if diverging {
        (f64::NAN, f64::INFINITY)
    } else {
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (geometry::pairwise(&finite) / finite.len() as f64, hi - lo)
    };
    let b = p.w.b();
    let in_interval = if t.is_infinite() { b.is_infinite() } else { t >= -tol && t <= b + tol };
    let condition_holds = boundary_vanishing(p).vanishes;
    let holds = in_interval && spread <= tol * 1f64.max(math::abs(t));
    Ok(TraceReport { values, t, spread, diverging, in_interval, condition_holds, holds })
}

/// Largest tangential component of `grad v` over boundary samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentialReport {
    pub max_tangential: f64,
    pub max_value: f64,
    pub applicable: bool,
    pub holds: bool,
}

pub fn verify_tangential_gradient(
    v: &TestFunction,
    domain: &Domain,
    samples: usize,
    tol: f64,
) -> Result<TangentialReport> {
    let mut max_tangential: f64 = 0.0;
    let mut max_value: f64 = 0.0;
    for x in domain.boundary_samples(samples) {
        let normal = domain
            .outer_normal(&x)
            .ok_or_else(|| Error::Evaluation(String::from("boundary sample without normal")))?;
        let jet = v.eval_jet(&x)?;
        max_value = max_value.max(math::abs(jet.value));
        let gn = math::dot(&jet.grad, &normal);
        let tangential: Vec<f64> = jet.grad.iter().zip(&normal).map(|(g, n)| g - gn * n).collect();
        max_tangential = max_tangential.max(math::norm(&tangential));
    }
    let applicable = max_value <= 1e-12;
    Ok(TangentialReport { max_tangential, max_value, applicable, holds: applicable && max_tangential <= tol })
}

/// Pointwise chain rule `P(H~(u)) = h(u)||grad u||_A^2 + H(u) Pu`, the left
/// side from fourth-order differences of `H(u) grad u`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointwiseReport {
    pub points: usize,
    pub skipped: usize,
    pub max_relative: f64,
    pub holds: bool,
}

pub fn verify_pointwise(p: &Problem, count: usize, tol: f64) -> Result<PointwiseReport> {
    let n = p.domain.dim();
    let field = |y: &[f64]| -> Result<Vec<f64>> {
        let jet = p.u.eval_jet(y)?;
        let hh = p.w.big_h(jet.value)?;
        Ok(jet.grad.iter().map(|g| hh * g).collect())
    };
    let mut points = 0;
    let mut skipped = 0;
    let mut max_relative: f64 = 0.0;
    let mut k = 0;
    let candidates = interior_points(&p.domain, 4 * count);
    while points < count && k < candidates.len() {
        let x = &candidates[k];
        k += 1;
        let delta = 1e-4 * 1f64.min(p.u.regular_radius(x));
        let attempt = (|| -> Result<(f64, f64, f64)> {
            let jet = p.u.eval_jet(x)?;
            let t = p.w.eval(jet.value)?;
            let a = p.a.matrix(x);
            let mut jac = vec![0.0; n * n];
            let mut y = x.clone();
            for j in 0..n {
                let mut shifted = |s: f64| -> Result<Vec<f64>> {
                    y[j] = x[j] + s * delta;
                    let f = field(&y);
                    y[j] = x[j];
                    f
                };
                let (p2, p1, m1, m2) = (shifted(2.0)?, shifted(1.0)?, shifted(-1.0)?, shifted(-2.0)?);
                for i in 0..n {
                    jac[i * n + j] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * delta);
                }
            }
            let lhs: f64 = a.iter().zip(&jac).map(|(s, t)| s * t).sum();
            let q = t.h * p.a.quadratic_form(x, &jet.grad);
            let hp = t.big_h * p.a.apply_p(x, &jet);
            Ok((lhs, q + hp, math::abs(q) + math::abs(hp)))
        })();
        match attempt {
            Ok((lhs, rhs, scale)) => {
                points += 1;
                max_relative = max_relative.max(math::abs(lhs - rhs) / 1f64.max(scale));
            }
            Err(_) => skipped += 1,
        }
    }
    Ok(PointwiseReport { points, skipped, max_relative, holds: points == count && max_relative <= tol })
}
