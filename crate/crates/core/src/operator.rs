//! The ellipticity matrix field `A(x)` of `Pu = sum a_ij d_ij u`, its
//! A-norm, first and second divergences and the constants `c_A`, `C_A`,
//! `d_A`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::geometry::Domain;
use crate::linalg::{halton, symmetric_eigenvalues};
use crate::math;
use crate::testfn::Jet;

/// Default number of quasi-random samples for sampled constants.
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    Identity,
    /// Row-major symmetric matrix.
    Constant(Vec<f64>),
    /// `a_ii(x) = base_i + sum_k slopes[i][k] x_k`, off-diagonal zero.
    DiagonalAffine { base: Vec<f64>, slopes: Vec<Vec<f64>> },
    /// `phi(x) Id`.
    ScalarProfile { profile: String },
    /// Row-major entries `a_ij(x)`.
    Custom { entries: Vec<String> },
}

#[derive(Clone, Debug)]
enum Repr {
    Constant(Vec<f64>),
    Affine { base: Vec<f64>, slopes: Vec<Vec<f64>> },
    Profile { phi: Expr, grad: Vec<Expr>, laplacian: Expr, affine: bool },
    Entries { a: Vec<Expr>, da: Vec<Expr>, div2: Expr, affine: bool },
}

/// A symmetric, uniformly elliptic `C^1` matrix field.
#[derive(Clone, Debug)]
pub struct MatrixField {
    kind: Kind,
    dim: usize,
    repr: Repr,
}

/// Ellipticity bounds with the way they were obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipticity {
    pub c_a: f64,
    pub big_c_a: f64,
    pub provenance: String,
}

/// First and second divergence summaries over a domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceData {
    pub div_sup: f64,
    pub d_a: f64,
    pub div2_max: f64,
    pub a2_holds: bool,
    pub div_free: bool,
    pub provenance: String,
}

impl MatrixField {
    pub fn new(kind: Kind, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim} < 2")));
        }
        let repr = match &kind {
            Kind::Identity => {
                let mut m = vec![0.0; dim * dim];
                (0..dim).for_each(|i| m[i * dim + i] = 1.0);
                Repr::Constant(m)
            }
            Kind::Constant(m) => {
                if m.len() != dim * dim {
                    return Err(Error::Dimension { expected: dim * dim, got: m.len() });
                }
                for i in 0..dim {
                    for j in 0..i {
                        if m[i * dim + j] != m[j * dim + i] {
                            return Err(Error::InvalidParameter("constant matrix is not symmetric".into()));
                        }
                    }
                }
                Repr::Constant(m.clone())
            }
            Kind::DiagonalAffine { base, slopes } => {
                if base.len() != dim || slopes.len() != dim || slopes.iter().any(|r| r.len() != dim) {
                    return Err(Error::Dimension { expected: dim, got: base.len() });
                }
                Repr::Affine { base: base.clone(), slopes: slopes.clone() }
            }
            Kind::ScalarProfile { profile } => {
                let phi = expr::parse_spatial(profile, dim)?;
                let grad: Vec<Expr> = (0..dim).map(|i| phi.diff(i)).collect();
                let second: Vec<Expr> = (0..dim).map(|i| grad[i].diff(i)).collect();
                let affine = (0..dim).all(|i| (0..dim).all(|j| grad[i].diff(j).is_zero()));
                let laplacian = sum_exprs(second);
                Repr::Profile { phi, grad, laplacian, affine }
            }
            Kind::Custom { entries } => {
                if entries.len() != dim * dim {
                    return Err(Error::Dimension { expected: dim * dim, got: entries.len() });
                }
                let a: Vec<Expr> = entries
                    .iter()
                    .map(|s| expr::parse_spatial(s, dim))
                    .collect::<Result<_>>()?;
                let mut da = Vec::with_capacity(dim * dim * dim);
                for e in &a {
                    for k in 0..dim {
                        da.push(e.diff(k));
                    }
                }
                let affine = da.iter().all(|e| (0..dim).all(|l| e.diff(l).is_zero()));
                let mut parts = Vec::new();
                for i in 0..dim {
                    for j in 0..dim {
                        parts.push(da[(i * dim + j) * dim + i].diff(j));
                    }
                }
                Repr::Entries { a, da, div2: sum_exprs(parts), affine }
            }
        };
        let field = MatrixField { kind, dim, repr };
        if let Repr::Entries { .. } = field.repr {
            let probe = [0.1234, -0.3141, 0.2718, 0.5772, -0.1618];
            let x: Vec<f64> = (0..dim).map(|i| probe[i % probe.len()]).collect();
            let m = field.matrix(&x);
            for i in 0..dim {
                for j in 0..i {
                    let (p, q) = (m[i * dim + j], m[j * dim + i]);
                    if math::abs(p - q) > 1e-14 * (1.0 + math::abs(p)) {
                        return Err(Error::InvalidParameter(format!(
                            "custom matrix is not symmetric: a{}{} != a{}{}",
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(field)
    }

    pub fn identity(dim: usize) -> Self {
        MatrixField::new(Kind::Identity, dim).expect("identity is valid")
    }

    /// `phi(x) Id` from a closed-form profile.
    pub fn scalar_profile(profile: &str, dim: usize) -> Result<Self> {
        MatrixField::new(Kind::ScalarProfile { profile: profile.into() }, dim)
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `A(x)` row-major.
    pub fn matrix(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        match &self.repr {
            Repr::Constant(m) => m.clone(),
            Repr::Affine { base, slopes } => {
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    m[i * n + i] = base[i] + math::dot(&slopes[i], x);
                }
                m
            }
            Repr::Profile { phi, .. } => {
                let v = phi.eval(x);
                let mut m = vec![0.0; n * n];
                (0..n).for_each(|i| m[i * n + i] = v);
                m
            }
            Repr::Entries { a, .. } => a.iter().map(|e| e.eval(x)).collect(),
        }
    }

    /// `div A(x)` with `(div A)_i = sum_j d_j a_ij`.
    pub fn div(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        match &self.repr {
            Repr::Constant(_) => vec![0.0; n],
            Repr::Affine { slopes, .. } => (0..n).map(|i| slopes[i][i]).collect(),
            Repr::Profile { grad, .. } => grad.iter().map(|g| g.eval(x)).collect(),
            Repr::Entries { da, .. } => (0..n)
                .map(|i| (0..n).map(|j| da[(i * n + j) * n + j].eval(x)).sum())
                .collect(),
        }
    }

    /// `div^2 A(x) = sum_ij d_i d_j a_ij`.
    pub fn div2(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Constant(_) | Repr::Affine { .. } => 0.0,
            Repr::Profile { laplacian, .. } => laplacian.eval(x),
            Repr::Entries { div2, .. } => div2.eval(x),
        }
    }

    /// `d_k a_ij(x)` at index `(i * n + j) * n + k`.
    pub fn partials(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n * n];
        match &self.repr {
            Repr::Constant(_) => {}
            Repr::Affine { slopes, .. } => {
                for i in 0..n {
                    for k in 0..n {
                        out[(i * n + i) * n + k] = slopes[i][k];
                    }
                }
            }
            Repr::Profile { grad, .. } => {
                for i in 0..n {
                    for k in 0..n {
                        out[(i * n + i) * n + k] = grad[k].eval(x);
                    }
                }
            }
            Repr::Entries { da, .. } => {
                for (o, e) in out.iter_mut().zip(da) {
                    *o = e.eval(x);
                }
            }
        }
        out
    }

    /// `Pu(x) = A(x) : D^2 u(x)`.
    pub fn apply_p(&self, x: &[f64], jet: &Jet) -> f64 {
        let a = self.matrix(x);
        a.iter().zip(&jet.hess).map(|(p, q)| p * q).sum()
    }

    /// `xi^T A(x) xi`.
    pub fn quadratic_form(&self, x: &[f64], xi: &[f64]) -> f64 {
        let n = self.dim;
        let a = self.matrix(x);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += xi[i] * a[i * n + j] * xi[j];
            }
        }
        s
    }

    /// `||xi||_{A(x)} = sqrt(xi^T A(x) xi)`.
    pub fn a_norm(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        let q = self.quadratic_form(x, xi);
        if q < 0.0 {
            return Err(Error::Ellipticity { min_eigenvalue: q / math::dot(xi, xi) });
        }
        Ok(math::sqrt(q))
    }

    /// `div(A grad u)(x)` from the product rule.
    pub fn div_a_grad(&self, x: &[f64], jet: &Jet) -> f64 {
        let n = self.dim;
        let da = self.partials(x);
        let mut s = self.apply_p(x, jet);
        for i in 0..n {
            for j in 0..n {
                s += da[(i * n + j) * n + i] * jet.grad[j];
            }
        }
        s
    }

    fn is_affine(&self) -> bool {
        match &self.repr {
            Repr::Constant(_) | Repr::Affine { .. } => true,
            Repr::Profile { affine, .. } | Repr::Entries { affine, .. } => *affine,
        }
    }

    fn diagonal_affine_parts(&self) -> Option<Vec<(f64, Vec<f64>)>> {
        let n = self.dim;
        match &self.repr {
            Repr::Affine { base, slopes } => {
                Some(base.iter().zip(slopes).map(|(b, s)| (*b, s.clone())).collect())
            }
            Repr::Profile { phi, grad, affine: true, .. } => {
                let zero = vec![0.0; n];
                let g: Vec<f64> = grad.iter().map(|e| e.eval(&zero)).collect();
                Some(vec![(phi.eval(&zero), g); n])
            }
            _ => None,
        }
    }

    /// `(c_A, C_A)`: exact for constant and diagonal-affine fields (including
    /// affine scalar profiles), else extremes over `n_samples` quasi-random
    /// points plus boundary samples and box vertices.
    pub fn ellipticity_constants(&self, domain: &Domain, n_samples: usize) -> Result<Ellipticity> {
        self.check_dim(domain)?;
        let n = self.dim;
        let (lo, hi, provenance) = if let Repr::Constant(m) = &self.repr {
            let e = symmetric_eigenvalues(m, n);
            (e[0], e[n - 1], String::from("exact, constant matrix"))
        } else if let Some(parts) = self.diagonal_affine_parts() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (b, g) in &parts {
                let (mn, mx) = affine_extremes(*b, g, domain);
                lo = lo.min(mn);
                hi = hi.max(mx);
            }
            (lo, hi, String::from("exact, affine diagonal extremes"))
        } else {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for x in sample_points(domain, n_samples) {
                let e = symmetric_eigenvalues(&self.matrix(&x), n);
                lo = lo.min(e[0]);
                hi = hi.max(e[n - 1]);
            }
            (lo, hi, format!("sampled, {n_samples} quasi-random points plus boundary"))
        };
        if !(lo > 0.0) {
            return Err(Error::Ellipticity { min_eigenvalue: lo });
        }
        Ok(Ellipticity { c_a: lo, big_c_a: hi, provenance })
    }

    /// `sup |div A|`, `d_A = sup|div A|^2 / c_A` and the `(A2)` check
    /// `div^2 A <= 0` (tolerance 1e-12).
    pub fn divergence_data(&self, domain: &Domain, c_a: f64, n_samples: usize) -> Result<DivergenceData> {
        self.check_dim(domain)?;
        let n = self.dim;
        let (div_sup, div2_max, provenance) = if self.is_affine() {
            let zero = vec![0.0; n];
            let d = math::norm(&self.div(&zero));
            (d, self.div2(&zero), String::from("exact, divergence is constant"))
        } else {
            let mut sup: f64 = 0.0;
            let mut d2: f64 = f64::NEG_INFINITY;
            for x in sample_points(domain, n_samples) {
                sup = sup.max(math::norm(&self.div(&x)));
                d2 = d2.max(self.div2(&x));
            }
            (sup, d2, format!("sampled, {n_samples} quasi-random points plus boundary"))
        };
        Ok(DivergenceData {
            div_sup,
            d_a: div_sup * div_sup / c_a,
            div2_max,
            a2_holds: div2_max <= 1e-12,
            div_free: div_sup == 0.0,
            provenance,
        })
    }

    fn check_dim(&self, domain: &Domain) -> Result<()> {
        if domain.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: domain.dim() });
        }
        Ok(())
    }
}

fn sum_exprs(parts: Vec<Expr>) -> Expr {
    let mut it = parts.into_iter().filter(|e| !e.is_zero());
    match it.next() {
        None => Expr::constant(0.0),
        Some(first) => it.fold(first, |acc, e| Expr::Add(acc.into(), e.into())),
    }
}

/// Extremes of `b + g.x` over the closed domain.
fn affine_extremes(b: f64, g: &[f64], domain: &Domain) -> (f64, f64) {
    match domain {
        Domain::Box { lo, hi } => {
            let mut mn = b;
            let mut mx = b;
            for i in 0..g.len() {
                let (p, q) = (g[i] * lo[i], g[i] * hi[i]);
                mn += p.min(q);
                mx += p.max(q);
            }
            (mn, mx)
        }
        Domain::Ball { center, radius } => {
            let c = b + math::dot(g, center);
            let r = radius * math::norm(g);
            (c - r, c + r)
        }
    }
}

/// Quasi-random interior points plus boundary samples and vertices.
pub fn sample_points(domain: &Domain, n_samples: usize) -> Vec<Vec<f64>> {
    let n = domain.dim();
    let mut pts = Vec::with_capacity(n_samples + 256);
    let mut k = 1u64;
    while pts.len() < n_samples {
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
    pts.extend(domain.boundary_samples(256));
    pts.extend(domain.vertices());
    pts
}
