//! Model domains (balls and axis-aligned boxes), interior and boundary
//! quadrature with optional grading toward the boundary, deterministic
//! integration, Poincare bounds and shell averages for boundary traces.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::quad::gauss_legendre;

/// Default Gauss-Legendre points per panel.
pub const DEFAULT_ORDER: usize = 8;

/// Nodes per summation chunk; fixes the reduction tree.
const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::InvalidParameter(format!("dimension {} < 2", center.len())));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius {radius}")));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Domain::ball(vec![0.0; dim], 1.0).expect("unit ball is valid")
    }

    pub fn unit_disk() -> Self {
        Domain::unit_ball(2)
    }

    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() < 2 || lo.len() != hi.len() {
            return Err(Error::InvalidParameter(format!(
                "box corners of dimensions {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter("box needs lo < hi on every axis".into()));
        }
        Ok(Domain::Box { lo, hi })
    }

    pub fn unit_box(dim: usize) -> Self {
        Domain::cuboid(vec![0.0; dim], vec![1.0; dim]).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    /// Lebesgue measure.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::Ball { center, radius } => {
                let n = center.len();
                unit_ball_volume(n) * math::powi(*radius, n as i32)
            }
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
        }
    }

    /// Surface measure of the boundary.
    pub fn surface_area(&self) -> f64 {
        match self {
            Domain::Ball { center, radius } => {
                let n = center.len();
                n as f64 * unit_ball_volume(n) * math::powi(*radius, n as i32 - 1)
            }
            Domain::Box { lo, hi } => {
                let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
                let vol: f64 = widths.iter().product();
                widths.iter().map(|w| 2.0 * vol / w).sum()
            }
        }
    }

    /// Open-set membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 < radius * radius
            }
            Domain::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| v > a && v < b),
        }
    }

    /// Closed-set membership with absolute slack `tol`.
    pub fn contains_closed(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Domain::Ball { center, radius } => {
                let d: f64 = math::sqrt(x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum());
                d <= radius + tol
            }
            Domain::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
            }
        }
    }

    /// Upper bound for the `W_0^{1,1}` Poincare constant by one-dimensional
    /// slicing: half the smallest box width, or the radius.
    pub fn poincare_constant(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::Box { lo, hi } => {
                0.5 * lo.iter().zip(hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Provenance string for [`Self::poincare_constant`].
    pub fn poincare_provenance(&self) -> alloc::string::String {
        match self {
            Domain::Ball { radius, .. } => format!("upper bound, slicing, ball radius {radius}"),
            Domain::Box { lo, hi } => {
                let w = lo.iter().zip(hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
                format!("upper bound, slicing, box width {w}")
            }
        }
    }

    /// Corners of a box; the empty list for balls.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            Domain::Ball { .. } => Vec::new(),
            Domain::Box { lo, hi } => {
                let n = lo.len();
                (0..(1usize << n))
                    .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect())
                    .collect()
            }
        }
    }

    /// Smallest and largest distance from `p` to points of the closure.
    pub fn distance_range(&self, p: &[f64]) -> (f64, f64) {
        match self {
            Domain::Ball { center, radius } => {
                let d = math::sqrt(p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum());
                ((d - radius).max(0.0), d + radius)
            }
            Domain::Box { lo, hi } => {
                let mut near = 0.0;
                let mut far = 0.0;
                for i in 0..lo.len() {
                    let c = p[i].clamp(lo[i], hi[i]);
                    near += (p[i] - c) * (p[i] - c);
                    let f = (p[i] - lo[i]).abs().max((p[i] - hi[i]).abs());
                    far += f * f;
                }
                (math::sqrt(near), math::sqrt(far))
            }
        }
    }

    /// Largest `t >= 0` with `x + t w` in the closure, for `x` in the closure.
    pub fn ray_exit(&self, x: &[f64], w: &[f64]) -> f64 {
        match self {
            Domain::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let b = math::dot(&d, w);
                let c = math::dot(&d, &d) - radius * radius;
                let disc = b * b - c;
                if disc <= 0.0 {
                    return 0.0;
                }
                (-b + math::sqrt(disc)).max(0.0)
            }
            Domain::Box { lo, hi } => {
                let mut t = f64::INFINITY;
                for i in 0..lo.len() {
                    if w[i] > 0.0 {
                        t = t.min((hi[i] - x[i]) / w[i]);
                    } else if w[i] < 0.0 {
                        t = t.min((lo[i] - x[i]) / w[i]);
                    }
                }
                t.max(0.0)
            }
        }
    }

    /// Outer unit normal at a boundary point (`None` on box edges).
    pub fn outer_normal(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Domain::Ball { center, .. } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let r = math::norm(&d);
                if r == 0.0 {
                    return None;
                }
                Some(d.into_iter().map(|v| v / r).collect())
            }
            Domain::Box { lo, hi } => {
                let n = lo.len();
                let scale = lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max);
                let tol = 1e-12 * scale;
                let mut normal = vec![0.0; n];
                let mut hits = 0;
                for i in 0..n {
                    if (x[i] - lo[i]).abs() <= tol {
                        normal[i] = -1.0;
                        hits += 1;
                    } else if (x[i] - hi[i]).abs() <= tol {
                        normal[i] = 1.0;
                        hits += 1;
                    }
                }
                if hits == 1 {
                    Some(normal)
                } else {
                    None
                }
            }
        }
    }

    /// A reproducible set of boundary points away from box edges.
    pub fn boundary_samples(&self, count: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..count)
            .map(|k| {
                let h = crate::linalg::halton(k as u64 + 1, n);
                match self {
                    Domain::Ball { center, radius } => {
                        let dir = sphere_point_from_cube(&h, n);
                        center.iter().zip(&dir).map(|(c, d)| c + radius * d).collect()
                    }
                    Domain::Box { lo, hi } => {
                        let face = k % (2 * n);
                        let axis = face / 2;
                        (0..n)
                            .map(|i| {
                                if i == axis {
                                    if face % 2 == 0 { lo[i] } else { hi[i] }
                                } else {
                                    let t = 0.1 + 0.8 * h[i];
                                    lo[i] + t * (hi[i] - lo[i])
                                }
                            })
                            .collect()
                    }
                }
            })
            .collect()
    }
}

fn sphere_point_from_cube(h: &[f64], n: usize) -> Vec<f64> {
    // Angles from the cube coordinates; adequate for reproducible sampling.
    if n == 2 {
        let t = math::TAU * h[0];
        return vec![math::cos(t), math::sin(t)];
    }
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let a = math::TAU * h[i];
            math::cos(a) + 0.5 * math::sin(2.0 * a + i as f64)
        })
        .collect();
    let r = math::norm(&v);
    if r == 0.0 {
        v[0] = 1.0;
        return v;
    }
    v.iter_mut().for_each(|c| *c /= r);
    v
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => math::TAU / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Nodes, positive weights and (for boundary rules) outer normals.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    pub level: usize,
    pub grading: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    normals: Option<Vec<f64>>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normal(&self, i: usize) -> Option<&[f64]> {
        self.normals.as_ref().map(|n| &n[i * self.dim..(i + 1) * self.dim])
    }

    pub fn total_weight(&self) -> f64 {
        pairwise(&self.weights)
    }
}

/// Composite Gauss-Legendre rule on `(0, 1)` with `panels` equal panels.
pub fn composite_gl(panels: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    let h = 1.0 / panels as f64;
    let mut t = Vec::with_capacity(panels * m);
    let mut wt = Vec::with_capacity(panels * m);
    for p in 0..panels {
        let a = p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            t.push(a + 0.5 * h * (xi + 1.0));
            wt.push(0.5 * h * wi);
        }
    }
    (t, wt)
}

/// Symmetric grading of `(0, 1)` toward both ends: `x = (2t)^q / 2` on the
/// left half, mirrored on the right. Returns `(x, dx/dt)`.
fn symmetric_grade(t: f64, q: f64) -> (f64, f64) {
    if q == 1.0 {
        return (t, 1.0);
    }
    if t <= 0.5 {
        let u = 2.0 * t;
        (0.5 * math::pow(u, q), q * math::pow(u, q - 1.0))
    } else {
        let u = 2.0 * (1.0 - t);
        (1.0 - 0.5 * math::pow(u, q), q * math::pow(u, q - 1.0))
    }
}

/// Quadrature on the unit sphere `S^{n-1}`: `(points, weights)`.
pub fn sphere_rule(n: usize, level: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = 1usize << level;
    if n == 2 {
        let count = 2 * m * panels;
        let mut pts = Vec::with_capacity(2 * count);
        let w = math::TAU / count as f64;
        for j in 0..count {
            let th = math::TAU * j as f64 / count as f64;
            pts.push(math::cos(th));
            pts.push(math::sin(th));
        }
        return (pts, vec![w; count]);
    }
    let (sub_pts, sub_w) = sphere_rule(n - 1, level, m);
    let sub_count = sub_w.len();
    let (t, wt) = composite_gl(panels, m);
    let mut pts = Vec::new();
    let mut weights = Vec::new();
    for (ti, wi) in t.iter().zip(&wt) {
        let (c, s, w) = if n == 3 {
            // cos(phi) uniform on (-1, 1).
            let z = 2.0 * ti - 1.0;
            (z, math::sqrt(1.0 - z * z), 2.0 * wi)
        } else {
            let phi = math::PI * ti;
            let s = math::sin(phi);
            (math::cos(phi), s, math::PI * wi * math::powi(s, n as i32 - 2))
        };
        for k in 0..sub_count {
            pts.push(c);
            pts.extend(sub_pts[k * (n - 1)..(k + 1) * (n - 1)].iter().map(|v| s * v));
            weights.push(w * sub_w[k]);
        }
    }
    (pts, weights)
}

/// Interior rule: tensor composite Gauss-Legendre on boxes, radial times
/// spherical product on balls. Level `L` uses `2^L` panels of `m` points per
/// direction; `grading >= 1` concentrates nodes toward the boundary.
pub fn interior_rule(domain: &Domain, level: usize, grading: f64, m: usize) -> Result<QuadratureRule> {
    if level < 1 || !(grading >= 1.0) || m < 1 {
        return Err(Error::InvalidParameter(format!(
            "interior rule needs level >= 1, grading >= 1, order >= 1 (got {level}, {grading}, {m})"
        )));
    }
    let n = domain.dim();
    let panels = 1usize << level;
    let (t, wt) = composite_gl(panels, m);
    match domain {
        Domain::Box { lo, hi } => {
            let axis: Vec<(f64, f64)> =
                t.iter().zip(&wt).map(|(ti, wi)| {
                    let (x, d) = symmetric_grade(*ti, grading);
                    (x, wi * d)
                }).collect();
            let per = axis.len();
            let total = per.pow(n as u32);
            let mut nodes = Vec::with_capacity(total * n);
            let mut weights = Vec::with_capacity(total);
            let mut idx = vec![0usize; n];
            for _ in 0..total {
                let mut w = 1.0;
                for d in 0..n {
                    let (x, wx) = axis[idx[d]];
                    let width = hi[d] - lo[d];
                    nodes.push(lo[d] + width * x);
                    w *= wx * width;
                }
                weights.push(w);
                for d in (0..n).rev() {
                    idx[d] += 1;
                    if idx[d] < per {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            Ok(QuadratureRule { dim: n, level, grading, nodes, weights, normals: None })
        }
        Domain::Ball { center, radius } => {
            let (sp, sw) = sphere_rule(n, level, m);
            let ns = sw.len();
            let mut nodes = Vec::with_capacity(t.len() * ns * n);
            let mut weights = Vec::with_capacity(t.len() * ns);
            for (ti, wi) in t.iter().zip(&wt) {
                let one_minus = 1.0 - ti;
                let r = radius * (1.0 - math::pow(one_minus, grading));
                let dr = radius * grading * math::pow(one_minus, grading - 1.0);
                let radial = wi * dr * math::powi(r, n as i32 - 1);
                for k in 0..ns {
                    for d in 0..n {
                        nodes.push(center[d] + r * sp[k * n + d]);
                    }
                    weights.push(radial * sw[k]);
                }
            }
            Ok(QuadratureRule { dim: n, level, grading, nodes, weights, normals: None })
        }
    }
}

/// Boundary rule with outer normals; box edges carry no nodes.
pub fn boundary_rule(domain: &Domain, level: usize, m: usize) -> Result<QuadratureRule> {
    if level < 1 || m < 1 {
        return Err(Error::InvalidParameter(format!("boundary rule level {level}, order {m}")));
    }
    let n = domain.dim();
    match domain {
        Domain::Ball { center, radius } => {
            let (sp, sw) = sphere_rule(n, level, m);
            let scale = math::powi(*radius, n as i32 - 1);
            let nodes = sp
                .chunks(n)
                .flat_map(|p| p.iter().zip(center).map(|(v, c)| c + radius * v).collect::<Vec<_>>())
                .collect();
            let weights = sw.iter().map(|w| w * scale).collect();
            Ok(QuadratureRule { dim: n, level, grading: 1.0, nodes, weights, normals: Some(sp) })
        }
        Domain::Box { lo, hi } => {
            let (t, wt) = composite_gl(1usize << level, m);
            let per = t.len();
            let face_count = per.pow(n as u32 - 1);
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            let mut normals = Vec::new();
            for axis in 0..n {
                for side in [0usize, 1] {
                    let mut idx = vec![0usize; n - 1];
                    for _ in 0..face_count {
                        let mut w = 1.0;
                        let mut k = 0;
                        for d in 0..n {
                            if d == axis {
                                nodes.push(if side == 0 { lo[d] } else { hi[d] });
                                normals.push(if side == 0 { -1.0 } else { 1.0 });
                            } else {
                                let width = hi[d] - lo[d];
                                nodes.push(lo[d] + width * t[idx[k]]);
                                normals.push(0.0);
                                w *= wt[idx[k]] * width;
                                k += 1;
                            }
                        }
                        weights.push(w);
                        for d in (0..n - 1).rev() {
                            idx[d] += 1;
                            if idx[d] < per {
                                break;
                            }
                            idx[d] = 0;
                        }
                    }
                }
            }
            Ok(QuadratureRule { dim: n, level, grading: 1.0, nodes, weights, normals: Some(normals) })
        }
    }
}

/// Grading exponent restoring algebraic convergence for a boundary
/// singularity `dist^gamma`: `ceil(2 / (1 + gamma))` clamped to `[1, 8]`.
pub fn auto_grading(gamma: Option<f64>) -> f64 {
    match gamma {
        Some(g) if g > -1.0 => math::ceil(2.0 / (1.0 + g)).clamp(1.0, 8.0),
        Some(_) => 8.0,
        None => 3.0,
    }
}

/// Pairwise sum with a fixed tree.
pub fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().fold(0.0, |a, b| a + b);
    }
    let mid = v.len() / 2;
    pairwise(&v[..mid]) + pairwise(&v[mid..])
}

/// Integrates `K` fields at once. The integrand receives the node and, for
/// boundary rules, the outer normal. Summation uses fixed chunks and a
/// pairwise tree, so the result is independent of the worker count.
pub fn integrate_many<const K: usize, F>(rule: &QuadratureRule, f: F) -> Result<[f64; K]>
where
    F: Fn(&[f64], Option<&[f64]>) -> Result<[f64; K]> + Sync,
{
    let chunks = rule.len().div_ceil(CHUNK);
    let chunk_sum = |c: usize| -> Result<[f64; K]> {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(rule.len());
        let mut buf: Vec<[f64; K]> = Vec::with_capacity(end - start);
        for i in start..end {
            let vals = f(rule.node(i), rule.normal(i))?;
            if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite { node: i, value: *v });
            }
            let w = rule.weight(i);
            buf.push(vals.map(|v| v * w));
        }
        let mut out = [0.0; K];
        let mut col = Vec::with_capacity(buf.len());
        for (k, o) in out.iter_mut().enumerate() {
            col.clear();
            col.extend(buf.iter().map(|r| r[k]));
            *o = pairwise(&col);
        }
        Ok(out)
    };
    let sums: Vec<[f64; K]> = map_chunks(chunks, chunk_sum)?;
    let mut out = [0.0; K];
    let mut col = Vec::with_capacity(sums.len());
    for (k, o) in out.iter_mut().enumerate() {
        col.clear();
        col.extend(sums.iter().map(|r| r[k]));
        *o = pairwise(&col);
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn map_chunks<T: Send, F>(chunks: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    (0..chunks).into_par_iter().map(|c| f(c)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<T, F>(chunks: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..chunks).map(f).collect()
}

/// Integrates a scalar field.
pub fn integrate<F>(rule: &QuadratureRule, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    integrate_many::<1, _>(rule, |x, _| Ok([f(x)])).map(|[v]| v)
}

/// Means of `f` over `domain ∩ B(x, r)` for each radius, by a polar rule
/// centred at the boundary point `x`.
pub fn shell_average<F>(domain: &Domain, f: F, x: &[f64], radii: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let n = domain.dim();
    let (dirs, dw) = sphere_rule(n, 4, DEFAULT_ORDER);
    let (t, wt) = composite_gl(8, DEFAULT_ORDER);
    let mut out = Vec::with_capacity(radii.len());
    let mut y = vec![0.0; n];
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("shell radius {r}")));
        }
        let mut num = Vec::new();
        let mut den = Vec::new();
        for (k, w_dir) in dw.iter().enumerate() {
            let omega = &dirs[k * n..(k + 1) * n];
            let reach = domain.ray_exit(x, omega).min(r);
            if reach <= 1e-8 * r {
                continue;
            }
            for (ti, wi) in t.iter().zip(&wt) {
                let s = reach * ti;
                for d in 0..n {
                    y[d] = x[d] + s * omega[d];
                }
                let jac = w_dir * wi * reach * math::powi(s, n as i32 - 1);
                num.push(jac * f(&y));
                den.push(jac);
            }
        }
        let vol = pairwise(&den);
        if vol <= 0.0 {
            return Err(Error::Evaluation(format!("empty shell at radius {r}")));
        }
        out.push(pairwise(&num) / vol);
    }
    Ok(out)
}
