//! Unit-disk potential theory: the Douglas energy of boundary data, the
//! Poisson extension, the Dirichlet energy of the extension, the Feller
//! (Sobolev-Bregman) double form and the boundary-term representation.
//!
//! The Feller kernel of the unit disk is taken as `1 / (pi |z - w|^2)`; with
//! this constant the `p = 2` Feller form of harmonic data equals twice its
//! Douglas energy.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{self, Domain};
use crate::math;
use crate::testfn::TestFunction;

/// One Fourier mode `a cos(k t) + b sin(k t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub k: u32,
    pub a: f64,
    pub b: f64,
}

/// `2 pi`-periodic boundary data on the unit circle.
#[derive(Clone, Debug)]
pub enum BoundaryData {
    /// `constant + sum_k (a_k cos k t + b_k sin k t)`.
    Trig { constant: f64, modes: Vec<Mode> },
    /// An expression in `t`.
    ClosedForm(Expr),
    /// `t -> u(cos t, sin t)` for a planar test function.
    Trace(TestFunction),
}

impl BoundaryData {
    pub fn cos(k: u32) -> Self {
        BoundaryData::Trig { constant: 0.0, modes: alloc::vec![Mode { k, a: 1.0, b: 0.0 }] }
    }

    pub fn trig(constant: f64, modes: Vec<Mode>) -> Self {
        BoundaryData::Trig { constant, modes }
    }

    pub fn closed_form(src: &str) -> Result<Self> {
        Ok(BoundaryData::ClosedForm(Expr::parse(src, &["t"])?))
    }

    pub fn trace(u: TestFunction) -> Result<Self> {
        if u.dim() != 2 {
            return Err(Error::Dimension { expected: 2, got: u.dim() });
        }
        Ok(BoundaryData::Trace(u))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BoundaryData::Trig { constant, modes } => {
                constant
                    + modes
                        .iter()
                        .map(|m| {
                            let kt = m.k as f64 * t;
                            m.a * math::cos(kt) + m.b * math::sin(kt)
                        })
                        .sum::<f64>()
            }
            BoundaryData::ClosedForm(e) => e.eval(&[t]),
            BoundaryData::Trace(u) => u.value(&[math::cos(t), math::sin(t)]),
        }
    }

    /// Copy rotated by `phi`: `t -> g(t + phi)`.
    pub fn rotated(&self, phi: f64) -> Result<Self> {
        match self {
            BoundaryData::Trig { constant, modes } => Ok(BoundaryData::Trig {
                constant: *constant,
                modes: modes
                    .iter()
                    .map(|m| {
                        let (c, s) = (math::cos(m.k as f64 * phi), math::sin(m.k as f64 * phi));
                        Mode { k: m.k, a: m.a * c + m.b * s, b: m.b * c - m.a * s }
                    })
                    .collect(),
            }),
            _ => Err(Error::InvalidParameter(String::from("rotation is implemented for trig data"))),
        }
    }

    /// Trig data as is; other data by the trapezoidal discrete Fourier
    /// transform on `2 n` points, keeping modes `1..n-1`.
    pub fn fourier(&self, n: usize) -> BoundaryData {
        if let BoundaryData::Trig { .. } = self {
            return self.clone();
        }
        let (constant, modes) = dft(|t| self.eval(t), n);
        BoundaryData::Trig { constant, modes }
    }
}

/// Most modes kept when non-trig data is expanded.
const MAX_MODES: usize = 512;

fn dft<F: Fn(f64) -> f64>(f: F, n: usize) -> (f64, Vec<Mode>) {
    let n = n.min(MAX_MODES);
    let m = 2 * n;
    let h = math::TAU / m as f64;
    let vals: Vec<f64> = (0..m).map(|j| f(j as f64 * h)).collect();
    let constant = geometry::pairwise(&vals) / m as f64;
    let mut c = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(m);
    let modes = (1..n as u32)
        .map(|k| {
            c.clear();
            s.clear();
            for (j, v) in vals.iter().enumerate() {
                let a = k as f64 * j as f64 * h;
                c.push(v * math::cos(a));
                s.push(v * math::sin(a));
            }
            Mode { k, a: 2.0 * geometry::pairwise(&c) / m as f64, b: 2.0 * geometry::pairwise(&s) / m as f64 }
        })
        .collect();
    (constant, modes)
}

fn grid_points(level: usize) -> Result<usize> {
    if !(1..=14).contains(&level) {
        return Err(Error::InvalidParameter(format!("circle level {level} outside 1..=14")));
    }
    Ok(8usize << level)
}

/// `h^2 sum_ij F(xi_i, eta_j)` on two interleaved grids of `N = 8 * 2^level`
/// points; `eta` is shifted by half a step so the diagonal is never met.
fn double_circle<F>(g: &BoundaryData, level: usize, pair: F) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let n = grid_points(level)?;
    let h = math::TAU / n as f64;
    let xi: Vec<(f64, f64)> = (0..n).map(|i| {
        let t = i as f64 * h;
        (t, g.eval(t))
    }).collect();
    let eta: Vec<(f64, f64)> = (0..n).map(|j| {
        let t = (j as f64 + 0.5) * h;
        (t, g.eval(t))
    }).collect();
    if xi.iter().chain(&eta).any(|(_, v)| !v.is_finite()) {
        return Err(Error::Evaluation(String::from("boundary data not finite on the grid")));
    }
    let mut rows = Vec::with_capacity(n);
    let mut row = Vec::with_capacity(n);
    for &(s, gs) in &xi {
        row.clear();
        row.extend(eta.iter().map(|&(t, gt)| pair(gs, gt, math::sin(0.5 * (s - t)))));
        rows.push(geometry::pairwise(&row));
    }
    Ok(h * h * geometry::pairwise(&rows))
}

/// `(1 / 8 pi) int int (g(eta) - g(xi))^2 / sin^2((xi - eta) / 2)`.
pub fn douglas_energy(g: &BoundaryData, level: usize) -> Result<f64> {
    let v = double_circle(g, level, |a, b, s| {
        let d = b - a;
        d * d / (s * s)
    })?;
    Ok(v / (8.0 * math::PI))
}

/// `(p / 2) int int (g^<p-1>(z) - g^<p-1>(w)) (g(z) - g(w)) / (pi |z - w|^2)`
/// over the unit circle, `|z - w|^2 = 4 sin^2((s - t) / 2)`.
pub fn feller_form(g: &BoundaryData, p: f64, level: usize) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!("Feller form needs p >= 2, got {p}")));
    }
    let v = double_circle(g, level, |a, b, s| {
        let dp = math::signed_pow(a, p - 1.0) - math::signed_pow(b, p - 1.0);
        dp * (a - b) / (4.0 * s * s)
    })?;
    Ok(0.5 * p * v / math::PI)
}

fn check_inside(x: &[f64]) -> Result<f64> {
    if x.len() != 2 {
        return Err(Error::Dimension { expected: 2, got: x.len() });
    }
    let r = math::norm(x);
    if !(r < 1.0) {
        return Err(Error::Domain { value: r, domain: "|x| < 1" });
    }
    Ok(r)
}

/// `(Re z^j, Im z^j)` for `z = x1 + i x2` and `j = 0..=k`.
fn zpowers(x: &[f64], k: u32) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k as usize + 1);
    let (mut re, mut im) = (1.0, 0.0);
    out.push((re, im));
    for _ in 0..k {
        (re, im) = (re * x[0] - im * x[1], re * x[1] + im * x[0]);
        out.push((re, im));
    }
    out
}

/// Value and gradient of the harmonic polynomial with the given modes.
fn trig_extension(constant: f64, modes: &[Mode], x: &[f64]) -> (f64, [f64; 2]) {
    let top = modes.iter().map(|m| m.k).max().unwrap_or(0);
    let z = zpowers(x, top);
    let mut v = constant;
    let mut g = [0.0, 0.0];
    for m in modes {
        if m.k == 0 {
            v += m.a;
            continue;
        }
        let (re, im) = z[m.k as usize];
        let (re1, im1) = z[m.k as usize - 1];
        let k = m.k as f64;
        v += m.a * re + m.b * im;
        g[0] += k * (m.a * re1 + m.b * im1);
        g[1] += k * (m.b * re1 - m.a * im1);
    }
    (v, g)
}

/// The harmonic extension `P[g](x)` for `|x| < 1`: exact for trig data,
/// else the Poisson integral by the trapezoidal rule.
pub fn poisson_extend(g: &BoundaryData, x: &[f64]) -> Result<f64> {
    let r = check_inside(x)?;
    if let BoundaryData::Trig { constant, modes } = g {
        return Ok(trig_extension(*constant, modes, x).0);
    }
    let theta = math::atan2(x[1], x[0]);
    let m = (64.0 / (1.0 - r)).clamp(512.0, 1_048_576.0) as usize;
    let h = math::TAU / m as f64;
    let terms: Vec<f64> = (0..m)
        .map(|j| {
            let phi = j as f64 * h;
            let kernel = (1.0 - r * r) / (1.0 - 2.0 * r * math::cos(theta - phi) + r * r);
            kernel * g.eval(phi)
        })
        .collect();
    Ok(geometry::pairwise(&terms) * h / math::TAU)
}

/// `int_disk |grad P[g]|^2` on the disk rule of `level`. Non-trig data is
/// first replaced by its discrete Fourier series.
pub fn dirichlet_energy(g: &BoundaryData, level: usize) -> Result<f64> {
    let trig = g.fourier(grid_points(level)?);
    let BoundaryData::Trig { constant, modes } = trig else { unreachable!() };
    let rule = geometry::interior_rule(&Domain::unit_disk(), level, 1.0, geometry::DEFAULT_ORDER)?;
    geometry::integrate(&rule, |x| {
        let (_, gr) = trig_extension(constant, &modes, x);
        gr[0] * gr[0] + gr[1] * gr[1]
    })
}

/// Both sides of the boundary-term representation at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaLevel {
    pub level: usize,
    /// `int_{circle} n . grad(u^p)`.
    pub theta_direct: f64,
    pub feller: f64,
    /// `int_disk Lap u P[u^<p-1>]`.
    pub interior: f64,
    /// `feller + (p / 2) interior`.
    pub representation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaRepresentation {
    pub p: f64,
    pub levels: Vec<ThetaLevel>,
    pub harmonic: bool,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub agrees: bool,
    /// Set on a mismatch for non-harmonic `u`, which is reported as a
    /// finding about the representation rather than a defect.
    pub finding: Option<String>,
}

impl ThetaRepresentation {
    pub fn last(&self) -> &ThetaLevel {
        self.levels.last().expect("at least one level")
    }
}

/// Compares `int n . grad(u^p)` over the unit circle with
/// `feller_form(u, p) + (p / 2) int Lap u P[u^<p-1>]`.
pub fn theta_representation_check(
    u: &TestFunction,
    p: f64,
    levels: &[usize],
    tol: f64,
) -> Result<ThetaRepresentation> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter(String::from("no levels")));
    }
    let trace = BoundaryData::trace(u.clone())?;
    let disk = Domain::unit_disk();
    let mut max_lap: f64 = 0.0;
    for x in crate::verifier::interior_points(&disk, 256) {
        max_lap = max_lap.max(math::abs(u.eval_jet(&x)?.laplacian()));
    }
    let harmonic = max_lap <= 1e-12;
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let n = grid_points(level)?;
        let h = math::TAU / n as f64;
        let mut flux = Vec::with_capacity(n);
        for j in 0..n {
            let t = j as f64 * h;
            let x = [math::cos(t), math::sin(t)];
            let jet = u.eval_jet(&x)?;
            let dn = jet.grad[0] * x[0] + jet.grad[1] * x[1];
            flux.push(p * math::signed_pow(jet.value, p - 1.0) * dn);
        }
        let theta_direct = h * geometry::pairwise(&flux);
        let feller = feller_form(&trace, p, level)?;
        let interior = if harmonic {
            0.0
        } else {
            let series = dft(|t| math::signed_pow(u.value(&[math::cos(t), math::sin(t)]), p - 1.0), n);
            let rule = geometry::interior_rule(&disk, level, 1.0, geometry::DEFAULT_ORDER)?;
            geometry::integrate_many::<1, _>(&rule, |x, _| {
                let lap = u.eval_jet(x)?.laplacian();
                Ok([lap * trig_extension(series.0, &series.1, x).0])
            })?[0]
        };
        out.push(ThetaLevel {
            level,
            theta_direct,
            feller,
            interior,
            representation: feller + 0.5 * p * interior,
        });
    }
    let last = out.last().unwrap();
    let scale = 1f64.max(math::abs(last.theta_direct)).max(math::abs(last.representation));
    let relative_gap = math::abs(last.theta_direct - last.representation) / scale;
    let agrees = relative_gap <= tol;
    let finding = (!agrees && !harmonic).then(|| {
        let alt = last.feller + p * last.interior;
        format!(
            "representation differs from the direct boundary term on non-harmonic u \
             (direct {}, representation {}); with coefficient p on the interior term: {}",
            last.theta_direct, last.representation, alt
        )
    });
    Ok(ThetaRepresentation { p, levels: out, harmonic, relative_gap, tolerance: tol, agrees, finding })
}
