//! Closed-form test functions with exact value/gradient/Hessian jets and a
//! central-difference oracle.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::geometry::Domain;
use crate::linalg::halton;
use crate::math;
use crate::weights::WeightTriple;

/// Value, gradient and row-major Hessian at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn zero(dim: usize) -> Self {
        Jet { value: 0.0, grad: vec![0.0; dim], hess: vec![0.0; dim * dim] }
    }

    pub fn laplacian(&self) -> f64 {
        let n = self.grad.len();
        (0..n).map(|i| self.hess[i * n + i]).sum()
    }

    fn scaled(mut self, c: f64) -> Self {
        if c != 1.0 {
            self.value *= c;
            self.grad.iter_mut().for_each(|g| *g *= c);
            self.hess.iter_mut().for_each(|h| *h *= c);
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `(1 - |x|)^alpha` on the unit ball.
    RadialPower { alpha: f64 },
    /// `a - b |x|^2`.
    QuadraticRadial { a: f64, b: f64 },
    /// `(1 - |x - c|^2 / rho^2)^k` inside the ball `B(c, rho)`, zero outside.
    Bump { k: u32, center: Vec<f64>, radius: f64 },
    /// `sgn(x1) |x1|^(1/2 + eps) + 1`.
    SignedPower1d { eps: f64 },
    /// `Re (x1 + i x2)^d` (index 0) or `Im (x1 + i x2)^d` (index 1).
    HarmonicPolynomial { degree: u32, index: u32 },
    /// Expression in `x1..xn`.
    Custom { source: String },
}

#[derive(Clone, Debug)]
struct Symbolic {
    value: Expr,
    grad: Vec<Expr>,
    hess: Vec<Expr>,
}

/// A closed-form `u` on a domain of dimension `dim`, times `scale`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    family: Family,
    dim: usize,
    scale: f64,
    symbolic: Option<Symbolic>,
}

impl TestFunction {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim} < 2")));
        }
        let mut symbolic = None;
        match &family {
            Family::Bump { k, center, radius } => {
                if center.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: center.len() });
                }
                if *k < 1 || !(*radius > 0.0) {
                    return Err(Error::InvalidParameter(format!("bump k={k}, radius={radius}")));
                }
            }
            Family::SignedPower1d { eps } => {
                if !(*eps > -0.5) {
                    return Err(Error::InvalidParameter(format!("signed power eps={eps}")));
                }
            }
            Family::HarmonicPolynomial { index, .. } => {
                if *index > 1 {
                    return Err(Error::InvalidParameter(format!("harmonic index {index}")));
                }
            }
            Family::Custom { source } => {
                let value = expr::parse_spatial(source, dim)?;
                let grad: Vec<Expr> = (0..dim).map(|i| value.diff(i)).collect();
                let hess = (0..dim * dim).map(|ij| grad[ij / dim].diff(ij % dim)).collect();
                symbolic = Some(Symbolic { value, grad, hess });
            }
            Family::RadialPower { .. } | Family::QuadraticRadial { .. } => {}
        }
        Ok(TestFunction { family, dim, scale: 1.0, symbolic })
    }

    /// Multiplies the function by `c`.
    pub fn with_scale(mut self, c: f64) -> Self {
        self.scale *= c;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn quadratic(a: f64, b: f64, dim: usize) -> Self {
        Self::new(Family::QuadraticRadial { a, b }, dim).expect("valid quadratic")
    }

    pub fn constant(c: f64, dim: usize) -> Self {
        Self::quadratic(c, 0.0, dim)
    }

    /// `(1 - |x|^2)^k` on the unit ball.
    pub fn unit_bump(k: u32, dim: usize) -> Self {
        Self::new(Family::Bump { k, center: vec![0.0; dim], radius: 1.0 }, dim).expect("valid bump")
    }

    pub fn custom(source: &str, dim: usize) -> Result<Self> {
        Self::new(Family::Custom { source: source.into() }, dim)
    }

    /// Distance from `x` to the set where the closed form is not smooth;
    /// `inf` for everywhere-smooth families.
    pub fn regular_radius(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::RadialPower { .. } => {
                let r = math::norm(x);
                r.min(1.0 - r)
            }
            Family::Bump { center, radius, k } => {
                if *k >= 3 {
                    return f64::INFINITY;
                }
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                math::abs(math::norm(&d) - radius)
            }
            Family::SignedPower1d { .. } => math::abs(x[0]),
            _ => f64::INFINITY,
        }
    }

    /// The value only. Outside the natural domain of a singular family this
    /// may be non-finite.
    pub fn value(&self, x: &[f64]) -> f64 {
        let v = match &self.family {
            Family::RadialPower { alpha } => math::pow(1.0 - math::norm(x), *alpha),
            Family::QuadraticRadial { a, b } => a - b * math::dot(x, x),
            Family::Bump { k, center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                let q = 1.0 - d2 / (radius * radius);
                if q <= 0.0 {
                    0.0
                } else {
                    math::powi(q, *k as i32)
                }
            }
            Family::SignedPower1d { eps } => math::signed_pow(x[0], 0.5 + eps) + 1.0,
            Family::HarmonicPolynomial { degree, index } => {
                let (re, im) = cpow(x[0], x[1], *degree);
                if *index == 0 { re } else { im }
            }
            Family::Custom { .. } => self.symbolic.as_ref().unwrap().value.eval(x),
        };
        self.scale * v
    }

    /// Exact jet at an interior point.
    pub fn eval_jet(&self, x: &[f64]) -> Result<Jet> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        let n = self.dim;
        let jet = match &self.family {
            Family::RadialPower { alpha } => {
                let r = math::norm(x);
                if r == 0.0 || r >= 1.0 {
                    return Err(Error::SingularPoint(format!("radial power at |x| = {r}")));
                }
                let a = *alpha;
                let base = 1.0 - r;
                let value = math::pow(base, a);
                let d1 = -a * math::pow(base, a - 1.0);
                let d2 = a * (a - 1.0) * math::pow(base, a - 2.0);
                radial_jet(x, r, value, d1, d2)
            }
            Family::QuadraticRadial { a, b } => {
                let mut hess = vec![0.0; n * n];
                for i in 0..n {
                    hess[i * n + i] = -2.0 * b;
                }
                Jet {
                    value: a - b * math::dot(x, x),
                    grad: x.iter().map(|v| -2.0 * b * v).collect(),
                    hess,
                }
            }
            Family::Bump { k, center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let rho2 = radius * radius;
                let q = 1.0 - math::dot(&d, &d) / rho2;
                if q <= 0.0 {
                    Jet::zero(n)
                } else {
                    let kf = *k as f64;
                    let gq: Vec<f64> = d.iter().map(|v| -2.0 * v / rho2).collect();
                    let p1 = kf * math::powi(q, *k as i32 - 1);
                    let p2 = if *k >= 2 { kf * (kf - 1.0) * math::powi(q, *k as i32 - 2) } else { 0.0 };
                    let mut hess = vec![0.0; n * n];
                    for i in 0..n {
                        for j in 0..n {
                            hess[i * n + j] = p2 * gq[i] * gq[j];
                        }
                        hess[i * n + i] += p1 * (-2.0 / rho2);
                    }
                    Jet {
                        value: math::powi(q, *k as i32),
                        grad: gq.iter().map(|g| p1 * g).collect(),
                        hess,
                    }
                }
            }
            Family::SignedPower1d { eps } => {
                let t = x[0];
                if t == 0.0 {
                    return Err(Error::SingularPoint("signed power at x1 = 0".into()));
                }
                let p = 0.5 + eps;
                let at = math::abs(t);
                let mut jet = Jet::zero(n);
                jet.value = math::signed_pow(t, p) + 1.0;
                jet.grad[0] = p * math::pow(at, p - 1.0);
                jet.hess[0] = p * (p - 1.0) * math::pow(at, p - 2.0) * math::sign(t);
                jet
            }
            Family::HarmonicPolynomial { degree, index } => {
                let d = *degree;
                let pick = |z: (f64, f64)| if *index == 0 { z.0 } else { z.1 };
                let mut jet = Jet::zero(n);
                jet.value = pick(cpow(x[0], x[1], d));
                if d >= 1 {
                    let (re, im) = cpow(x[0], x[1], d - 1);
                    let c = d as f64;
                    // d/dx1 z^d = d z^(d-1), d/dx2 z^d = i d z^(d-1).
                    jet.grad[0] = pick((c * re, c * im));
                    jet.grad[1] = pick((-c * im, c * re));
                }
                if d >= 2 {
                    let (re, im) = cpow(x[0], x[1], d - 2);
                    let c = (d * (d - 1)) as f64;
                    let h11 = pick((c * re, c * im));
                    let h12 = pick((-c * im, c * re));
                    jet.hess[0] = h11;
                    jet.hess[1] = h12;
                    jet.hess[n] = h12;
                    jet.hess[n + 1] = -h11;
                }
                jet
            }
            Family::Custom { .. } => {
                let s = self.symbolic.as_ref().unwrap();
                Jet {
                    value: s.value.eval(x),
                    grad: s.grad.iter().map(|e| e.eval(x)).collect(),
                    hess: s.hess.iter().map(|e| e.eval(x)).collect(),
                }
            }
        };
        Ok(jet.scaled(self.scale))
    }

    /// `true` iff `u(x)` lies strictly inside `(0, B)`.
    pub fn restricted_indicator(&self, w: &WeightTriple, x: &[f64]) -> bool {
        let v = self.value(x);
        v > 0.0 && v < w.b()
    }

    /// `(inf u, sup u)` over the domain: closed form where the family is
    /// monotone along known directions, else a dense sample.
    pub fn value_range(&self, domain: &Domain) -> (f64, f64) {
        let s = self.scale;
        let order = |a: f64, b: f64| if a <= b { (a, b) } else { (b, a) };
        let origin = vec![0.0; self.dim];
        let (rmin, rmax) = domain.distance_range(&origin);
        let raw = match &self.family {
            Family::RadialPower { alpha } => {
                let near = math::pow(1.0 - rmin, *alpha);
                let far = if rmax >= 1.0 {
                    if *alpha < 0.0 { f64::INFINITY } else { 0.0 }
                } else {
                    math::pow(1.0 - rmax, *alpha)
                };
                Some(order(near, far))
            }
            Family::QuadraticRadial { a, b } => Some(order(a - b * rmin * rmin, a - b * rmax * rmax)),
            Family::Bump { k, center, radius } => {
                let (dmin, dmax) = domain.distance_range(center);
                let f = |d: f64| {
                    let q = 1.0 - d * d / (radius * radius);
                    if q <= 0.0 { 0.0 } else { math::powi(q, *k as i32) }
                };
                Some((f(dmax), f(dmin)))
            }
            Family::SignedPower1d { eps } => match domain {
                Domain::Box { lo, hi } => {
                    let f = |t: f64| math::signed_pow(t, 0.5 + eps) + 1.0;
                    Some((f(lo[0]), f(hi[0])))
                }
                Domain::Ball { center, radius } => {
                    let f = |t: f64| math::signed_pow(t, 0.5 + eps) + 1.0;
                    Some((f(center[0] - radius), f(center[0] + radius)))
                }
            },
            _ => None,
        };
        match raw {
            Some((lo, hi)) => order(s * lo, s * hi),
            None => self.sampled_range(domain),
        }
    }

    fn sampled_range(&self, domain: &Domain) -> (f64, f64) {
        let n = self.dim;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |x: &[f64]| {
            let v = self.value(x);
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        };
        for k in 1..=4096u64 {
            let h = halton(k, n);
            let x: Vec<f64> = match domain {
                Domain::Box { lo, hi } => (0..n).map(|i| lo[i] + h[i] * (hi[i] - lo[i])).collect(),
                Domain::Ball { center, radius } => {
                    let y: Vec<f64> = h.iter().map(|v| 2.0 * v - 1.0).collect();
                    if math::dot(&y, &y) >= 1.0 {
                        continue;
                    }
                    (0..n).map(|i| center[i] + radius * y[i]).collect()
                }
            };
            visit(&x);
        }
        for x in domain.boundary_samples(1024) {
            visit(&x);
        }
        for x in domain.vertices() {
            visit(&x);
        }
        (lo, hi)
    }

    /// Central-difference gradient and Hessian from values only.
    pub fn fd_jet(&self, x: &[f64], step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("step {step}")));
        }
        if 2.0 * step >= self.regular_radius(x) {
            return Err(Error::StencilExitsDomain);
        }
        let n = self.dim;
        let mut y = x.to_vec();
        let eval = |y: &mut Vec<f64>, moves: &[(usize, f64)]| {
            for &(i, d) in moves {
                y[i] += d;
            }
            let v = self.value(y);
            for &(i, d) in moves {
                y[i] -= d;
            }
            v
        };
        let f0 = eval(&mut y, &[]);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        let h = step;
        for i in 0..n {
            let fp = eval(&mut y, &[(i, h)]);
            let fm = eval(&mut y, &[(i, -h)]);
            grad[i] = (fp - fm) / (2.0 * h);
            hess[i * n + i] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in (i + 1)..n {
                let fpp = eval(&mut y, &[(i, h), (j, h)]);
                let fpm = eval(&mut y, &[(i, h), (j, -h)]);
                let fmp = eval(&mut y, &[(i, -h), (j, h)]);
                let fmm = eval(&mut y, &[(i, -h), (j, -h)]);
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                hess[i * n + j] = v;
                hess[j * n + i] = v;
            }
        }
        if grad.iter().chain(&hess).any(|v| !v.is_finite()) {
            return Err(Error::StencilExitsDomain);
        }
        Ok((grad, hess))
    }
}

fn radial_jet(x: &[f64], r: f64, value: f64, d1: f64, d2: f64) -> Jet {
    let n = x.len();
    let e: Vec<f64> = x.iter().map(|v| v / r).collect();
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            hess[i * n + j] = d2 * e[i] * e[j] + d1 / r * (delta - e[i] * e[j]);
        }
    }
    Jet { value, grad: e.iter().map(|v| d1 * v).collect(), hess }
}

/// `(x + i y)^d` as `(re, im)`.
fn cpow(x: f64, y: f64, d: u32) -> (f64, f64) {
    let mut re = 1.0;
    let mut im = 0.0;
    for _ in 0..d {
        let nr = re * x - im * y;
        im = re * y + im * x;
        re = nr;
    }
    (re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_jet() {
        let u = TestFunction::quadratic(2.0, 1.0, 2);
        let j = u.eval_jet(&[0.6, 0.8]).unwrap();
        assert!((j.value - 1.0).abs() < 1e-15);
        assert!((j.grad[0] + 1.2).abs() < 1e-15 && (j.grad[1] + 1.6).abs() < 1e-15);
        assert_eq!(j.hess, vec![-2.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn radial_power_jet() {
        let u = TestFunction::new(Family::RadialPower { alpha: -1.0 }, 2).unwrap();
        let x = [0.3, 0.4];
        let j = u.eval_jet(&x).unwrap();
        assert!((j.value - 2.0).abs() < 1e-14);
        // Radial derivative (1 - r)^-2 = 4, pointing outward.
        let radial = math::dot(&j.grad, &[0.6, 0.8]);
        assert!((radial - 4.0).abs() < 1e-13);
        assert!(matches!(u.eval_jet(&[0.0, 0.0]), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn bump_vanishes_to_second_order_at_boundary() {
        let u = TestFunction::unit_bump(2, 2);
        let j = u.eval_jet(&[1.0, 0.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad, vec![0.0, 0.0]);
        let j = u.eval_jet(&[2.0, 0.0]).unwrap();
        assert_eq!(j, Jet::zero(2));
    }

    #[test]
    fn fd_oracle() {
        let u = TestFunction::quadratic(2.0, 1.0, 2);
        let x = [0.2, -0.4];
        let (g, h) = u.fd_jet(&x, 1e-5).unwrap();
        let j = u.eval_jet(&x).unwrap();
        for (a, b) in g.iter().zip(&j.grad) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in h.iter().zip(&j.hess) {
            assert!((a - b).abs() < 1e-4);
        }
        let c = TestFunction::constant(3.0, 3);
        let (g, h) = c.fd_jet(&[0.1, 0.2, 0.3], 1e-3).unwrap();
        assert!(g.iter().chain(&h).all(|v| *v == 0.0));
        let p = TestFunction::new(Family::HarmonicPolynomial { degree: 2, index: 0 }, 2).unwrap();
        let (_, h) = p.fd_jet(&[0.3, 0.7], 1e-4).unwrap();
        assert!((h[0] + h[3]).abs() < 1e-6);
        let r = TestFunction::new(Family::RadialPower { alpha: 0.5 }, 2).unwrap();
        assert_eq!(r.fd_jet(&[0.999, 0.0], 1e-3), Err(Error::StencilExitsDomain));
    }

    #[test]
    fn harmonic_polynomials() {
        for d in 0..5 {
            for index in 0..2 {
                let u = TestFunction::new(Family::HarmonicPolynomial { degree: d, index }, 2).unwrap();
                let j = u.eval_jet(&[0.3, -0.8]).unwrap();
                assert!(j.laplacian().abs() < 1e-13, "d={d}");
            }
        }
        let u = TestFunction::new(Family::HarmonicPolynomial { degree: 1, index: 0 }, 2).unwrap();
        assert_eq!(u.value(&[0.25, 0.5]), 0.25);
    }

    #[test]
    fn restricted_indicator_cases() {
        let w = WeightTriple::power(0.0);
        let bump = TestFunction::unit_bump(2, 2);
        assert!(!bump.restricted_indicator(&w, &[1.5, 0.0]));
        assert!(bump.restricted_indicator(&w, &[0.5, 0.0]));
        let q = TestFunction::quadratic(2.0, 1.0, 2);
        assert!(q.restricted_indicator(&w, &[0.9, 0.0]));
        let capped = WeightTriple::new(crate::weights::Family::Power { alpha: 0.0 }, 1.0, 0.0).unwrap();
        assert!(!bump.restricted_indicator(&capped, &[0.0, 0.0]));
        assert!(bump.restricted_indicator(&capped, &[0.01, 0.0]));
    }

    #[test]
    fn value_ranges() {
        let disk = Domain::unit_disk();
        assert_eq!(TestFunction::quadratic(2.0, 1.0, 2).value_range(&disk), (1.0, 2.0));
        assert_eq!(TestFunction::unit_bump(2, 2).value_range(&disk), (0.0, 1.0));
        let r = TestFunction::new(Family::RadialPower { alpha: -1.0 }, 2).unwrap();
        assert_eq!(r.value_range(&disk), (1.0, f64::INFINITY));
        let s = TestFunction::new(Family::SignedPower1d { eps: 0.25 }, 2).unwrap();
        let b = Domain::cuboid(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(s.value_range(&b), (0.0, 2.0));
        let h = TestFunction::new(Family::HarmonicPolynomial { degree: 1, index: 0 }, 2).unwrap();
        let (lo, hi) = h.value_range(&disk);
        assert!(lo < -0.99 && hi > 0.99 && lo >= -1.0 && hi <= 1.0);
    }

    #[test]
    fn custom_matches_builtin() {
        let c = TestFunction::custom("(1 - x1^2 - x2^2)^2", 2).unwrap();
        let b = TestFunction::unit_bump(2, 2);
        let x = [0.3, -0.5];
        let (jc, jb) = (c.eval_jet(&x).unwrap(), b.eval_jet(&x).unwrap());
        assert!((jc.value - jb.value).abs() < 1e-15);
        for (p, q) in jc.hess.iter().zip(&jb.hess) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn scale_multiplies_jet() {
        let u = TestFunction::unit_bump(2, 2).with_scale(2.0);
        let j = u.eval_jet(&[0.5, 0.0]).unwrap();
        assert!((j.value - 2.0 * 0.5625).abs() < 1e-15);
        assert!((u.value(&[0.5, 0.0]) - j.value).abs() < 1e-15);
    }
}
