//! Principal weights `h` on `(0, B)` with their first and second
//! antiderivatives `H`, `H~`, the transforms `T_H = H/h` and `G_H = H^2/h`,
//! the extension interval of `H~` and the constant of the `(G_H)` condition.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::math;
use crate::quad;

/// Weight families addressable by name.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `h(s) = s^alpha`.
    Power { alpha: f64 },
    /// `H~(s) = s^alpha ln^beta(2 + s)`.
    PowerLog { alpha: f64, beta: f64 },
    /// `H~(s) = exp(beta s^alpha)`.
    Exponential { beta: f64, alpha: f64 },
    /// `T_H = tau`, built by [`weight_from_tau`].
    Tau { tau: Expr, anchor: f64 },
    /// User-supplied `h(s)`.
    Custom { h: Expr },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Power { .. } => "power",
            Family::PowerLog { .. } => "power-log",
            Family::Exponential { .. } => "exponential",
            Family::Tau { .. } => "tau-generated",
            Family::Custom { .. } => "custom",
        }
    }
}

/// Which antiderivative of `H` is meant by `H~`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Normalization {
    /// `H~(s) = int_0^s H`.
    Hardy0,
    /// `H~(s) = -int_s^B H`.
    ConjugateHardyB,
    /// `H~(s0) = value`.
    Anchored { s0: f64, value: f64 },
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::Hardy0 => write!(f, "hardy0"),
            Normalization::ConjugateHardyB => write!(f, "conjugate-hardyB"),
            Normalization::Anchored { s0, value } => write!(f, "anchored({s0}, {value})"),
        }
    }
}

/// Limit of `H~` at an endpoint of `(0, B)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint {
    Finite(f64),
    Infinite,
    Indeterminate,
}

impl Endpoint {
    pub fn is_finite(self) -> bool {
        matches!(self, Endpoint::Finite(_))
    }
}

/// Maximal subinterval of `[0, B]` on which `H~` extends continuously.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtensionInterval {
    pub b: f64,
    pub contains_zero: bool,
    pub contains_b: bool,
    /// Set when a numeric endpoint limit could not be decided.
    pub indeterminate: bool,
}

impl ExtensionInterval {
    pub fn contains(&self, s: f64) -> bool {
        (s > 0.0 && s < self.b) || (s == 0.0 && self.contains_zero) || (s == self.b && self.contains_b)
    }
}

impl fmt::Display for ExtensionInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.contains_zero { '[' } else { '(' };
        let r = if self.contains_b { ']' } else { ')' };
        if self.b.is_infinite() {
            write!(f, "{l}0, inf{r}")
        } else {
            write!(f, "{l}0, {}{r}", self.b)
        }
    }
}

/// `(h, H, H~)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triple {
    pub h: f64,
    pub big_h: f64,
    pub h_tilde: f64,
}

#[derive(Clone, Debug)]
enum Kind {
    Power { alpha: f64 },
    Symbolic { h_tilde: Expr, big_h: Expr, h: Expr },
    Tau { tau: Expr, anchor: f64 },
    Custom { h: Expr, hardy: bool },
}

/// A principal weight with its antiderivatives. Immutable once built.
#[derive(Clone, Debug)]
pub struct WeightTriple {
    family: Family,
    kind: Kind,
    b: f64,
    offset: f64,
    normalization: Normalization,
    shift: f64,
    s_ref: f64,
    left: Endpoint,
    right: Endpoint,
}

const S_VARS: [&str; 1] = ["s"];

impl WeightTriple {
    /// Builds a weight with the default normalization: Hardy transform at 0
    /// when `H` is integrable there, else the conjugate-Hardy transform at
    /// `B`, else `H~(1) = 0`.
    pub fn new(family: Family, b: f64, offset: f64) -> Result<Self> {
        Self::build(family, b, offset, None)
    }

    pub fn with_normalization(
        family: Family,
        b: f64,
        offset: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        Self::build(family, b, offset, Some(normalization))
    }

    /// `h(s) = s^alpha` on `(0, inf)`.
    pub fn power(alpha: f64) -> Self {
        Self::new(Family::Power { alpha }, f64::INFINITY, 0.0).expect("power weights are valid")
    }

    fn build(family: Family, b: f64, offset: f64, norm: Option<Normalization>) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidParameter(format!("B must be positive, got {b}")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter("H offset must be finite".to_string()));
        }
        let s_ref = if b.is_finite() { (0.5 * b).min(1.0) } else { 1.0 };
        let kind = match &family {
            Family::Power { alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::InvalidParameter("alpha must be finite".to_string()));
                }
                Kind::Power { alpha: *alpha }
            }
            Family::PowerLog { alpha, beta } => {
                let src = format!("s^({alpha}) * ln(2 + s)^({beta})");
                symbolic_kind(&src)?
            }
            Family::Exponential { beta, alpha } => {
                let src = format!("exp(({beta}) * s^({alpha}))");
                symbolic_kind(&src)?
            }
            Family::Tau { tau, anchor } => {
                if !(*anchor >= 0.0 && *anchor < b) {
                    return Err(Error::InvalidParameter(format!(
                        "tau anchor {anchor} outside [0, B)"
                    )));
                }
                Kind::Tau { tau: tau.clone(), anchor: *anchor }
            }
            Family::Custom { h } => {
                let hardy = quad::integrate(|s| h.eval(&[s]), 0.0, s_ref).is_ok();
                Kind::Custom { h: h.clone(), hardy }
            }
        };
        let mut w = WeightTriple {
            family,
            kind,
            b,
            offset,
            normalization: Normalization::Anchored { s0: 1.0, value: 0.0 },
            shift: 0.0,
            s_ref,
            left: Endpoint::Indeterminate,
            right: Endpoint::Indeterminate,
        };
        w.check_positive()?;
        w.left = w.raw_limit(false)?;
        w.right = w.raw_limit(true)?;
        let resolved = match norm {
            Some(n) => n,
            None => {
                if w.left.is_finite() {
                    Normalization::Hardy0
                } else if w.right.is_finite() {
                    Normalization::ConjugateHardyB
                } else {
                    Normalization::Anchored { s0: s_ref.min(1.0), value: 0.0 }
                }
            }
        };
        w.shift = match resolved {
            Normalization::Hardy0 => match w.left {
                Endpoint::Finite(v) => -v,
                _ => {
                    return Err(Error::InvalidParameter(
                        "hardy0 normalization needs H integrable near 0".to_string(),
                    ))
                }
            },
            Normalization::ConjugateHardyB => match w.right {
                Endpoint::Finite(v) => -v,
                _ => {
                    return Err(Error::InvalidParameter(
                        "conjugate-hardyB normalization needs H integrable near B".to_string(),
                    ))
                }
            },
            Normalization::Anchored { s0, value } => {
                if !(s0 > 0.0 && s0 < b) {
                    return Err(Error::InvalidParameter(format!(
                        "anchor s0 = {s0} outside (0, B)"
                    )));
                }
                value - w.h_tilde_raw(s0)?
            }
        };
        w.normalization = resolved;
        Ok(w)
    }

    fn check_positive(&self) -> Result<()> {
        let (lo, hi) = self.probe_range();
        for k in 0..64 {
            let s = lo * math::pow(hi / lo, k as f64 / 63.0);
            let h = self.h_raw(s)?;
            if !(h > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{} weight is not positive: h({s}) = {h}",
                    self.family.name()
                )));
            }
        }
        Ok(())
    }

    fn probe_range(&self) -> (f64, f64) {
        if self.b.is_finite() {
            (self.b * 1e-6, self.b * (1.0 - 1e-6))
        } else {
            (1e-6, 1e6)
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// True when all three functions are closed forms.
    pub fn is_closed_form(&self) -> bool {
        matches!(self.kind, Kind::Power { .. } | Kind::Symbolic { .. })
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        if s > 0.0 && s < self.b && s.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain { value: s, domain: "(0, B)" })
        }
    }

    fn h_raw(&self, s: f64) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Power { alpha } => math::pow(s, *alpha),
            Kind::Symbolic { h, .. } => h.eval(&[s]),
            Kind::Tau { tau, .. } => self.tau_big_h(s)? / tau.eval(&[s]),
            Kind::Custom { h, .. } => h.eval(&[s]),
        })
    }

    fn tau_big_h(&self, s: f64) -> Result<f64> {
        let Kind::Tau { tau, anchor } = &self.kind else {
            unreachable!("tau_big_h on non-tau weight")
        };
        let beta = quad::integrate(|t| 1.0 / tau.eval(&[t]), *anchor, s)
            .map_err(|e| Error::Evaluation(format!("int 1/tau diverges: {e}")))?;
        Ok(math::exp(beta))
    }

    fn big_h_raw(&self, s: f64) -> Result<f64> {
        let base = match &self.kind {
            Kind::Power { alpha } => {
                if *alpha == -1.0 {
                    math::ln(s)
                } else {
                    math::pow(s, alpha + 1.0) / (alpha + 1.0)
                }
            }
            Kind::Symbolic { big_h, .. } => big_h.eval(&[s]),
            Kind::Tau { .. } => self.tau_big_h(s)?,
            Kind::Custom { h, hardy } => {
                let lower = if *hardy { 0.0 } else { self.s_ref };
                quad::integrate(|t| h.eval(&[t]), lower, s)
                    .map_err(|e| Error::Evaluation(format!("antiderivative of h: {e}")))?
            }
        };
        Ok(base - self.offset)
    }

    fn h_tilde_raw(&self, s: f64) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Power { alpha } => {
                let a = *alpha;
                let base = if a == -1.0 {
                    s * math::ln(s) - s
                } else if a == -2.0 {
                    -math::ln(s)
                } else {
                    math::pow(s, a + 2.0) / ((a + 1.0) * (a + 2.0))
                };
                base - self.offset * s
            }
            Kind::Symbolic { h_tilde, .. } => h_tilde.eval(&[s]) - self.offset * s,
            Kind::Tau { .. } | Kind::Custom { .. } => {
                quad::integrate(|t| self.big_h_raw(t).unwrap_or(f64::NAN), self.s_ref, s)
                    .map_err(|e| Error::Evaluation(format!("antiderivative of H: {e}")))?
            }
        })
    }

    /// `(h, H, H~)` at `s` in `(0, B)`.
    pub fn eval(&self, s: f64) -> Result<Triple> {
        self.check_domain(s)?;
        Ok(Triple {
            h: self.h_raw(s)?,
            big_h: self.big_h_raw(s)?,
            h_tilde: self.h_tilde_raw(s)? + self.shift,
        })
    }

    pub fn h(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        self.h_raw(s)
    }

    pub fn big_h(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        self.big_h_raw(s)
    }

    pub fn h_tilde(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(self.h_tilde_raw(s)? + self.shift)
    }

    /// `T_H(s) = H(s) / h(s)`.
    pub fn transform_t(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        if let (Kind::Tau { tau, .. }, true) = (&self.kind, self.offset == 0.0) {
            return Ok(tau.eval(&[s]));
        }
        Ok(self.big_h_raw(s)? / self.h_raw(s)?)
    }

    /// `G_H(s) = H(s)^2 / h(s)`.
    pub fn transform_g(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let hh = self.big_h_raw(s)?;
        Ok(hh * hh / self.h_raw(s)?)
    }

    /// Limit of `H~` at 0 (`at_b = false`) or at `B`.
    pub fn endpoint_limit(&self, at_b: bool) -> Endpoint {
        let raw = if at_b { self.right } else { self.left };
        match raw {
            Endpoint::Finite(v) => Endpoint::Finite(v + self.shift),
            other => other,
        }
    }

    /// The maximal interval `I` to which `H~` extends continuously.
    pub fn extension_interval(&self) -> ExtensionInterval {
        ExtensionInterval {
            b: self.b,
            contains_zero: self.left.is_finite(),
            contains_b: self.b.is_finite() && self.right.is_finite(),
            indeterminate: self.left == Endpoint::Indeterminate
                || self.right == Endpoint::Indeterminate,
        }
    }

    /// `H~` on the extension interval, including finite endpoint values.
    pub fn h_tilde_extended(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            if let Endpoint::Finite(v) = self.endpoint_limit(false) {
                return Ok(v);
            }
        }
        if s == self.b {
            if let Endpoint::Finite(v) = self.endpoint_limit(true) {
                return Ok(v);
            }
        }
        self.h_tilde(s)
    }

    fn raw_limit(&self, at_b: bool) -> Result<Endpoint> {
        if let Some(e) = self.closed_form_limit(at_b) {
            return Ok(e);
        }
        if at_b && self.b.is_finite() && self.is_closed_form() {
            let v = self.h_tilde_raw(self.b)?;
            return Ok(if v.is_finite() { Endpoint::Finite(v) } else { Endpoint::Infinite });
        }
        Ok(self.numeric_limit(at_b))
    }

    fn closed_form_limit(&self, at_b: bool) -> Option<Endpoint> {
        let c = self.offset;
        match &self.family {
            Family::Power { alpha } => {
                let a = *alpha;
                if !at_b {
                    return Some(if a > -2.0 { Endpoint::Finite(0.0) } else { Endpoint::Infinite });
                }
                if self.b.is_finite() {
                    return None;
                }
                Some(if a < -2.0 && c == 0.0 { Endpoint::Finite(0.0) } else { Endpoint::Infinite })
            }
            Family::PowerLog { alpha, beta } => {
                let (a, b) = (*alpha, *beta);
                if !at_b {
                    return Some(if a > 0.0 {
                        Endpoint::Finite(0.0)
                    } else if a == 0.0 {
                        Endpoint::Finite(math::pow(math::ln(2.0), b))
                    } else {
                        Endpoint::Infinite
                    });
                }
                if self.b.is_finite() || c != 0.0 {
                    return None;
                }
                Some(if a < 0.0 || (a == 0.0 && b < 0.0) {
                    Endpoint::Finite(0.0)
                } else {
                    Endpoint::Infinite
                })
            }
            Family::Exponential { beta, alpha } => {
                let (b, a) = (*beta, *alpha);
                if !at_b {
                    return Some(if a > 0.0 {
                        Endpoint::Finite(1.0)
                    } else if b < 0.0 {
                        Endpoint::Finite(0.0)
                    } else {
                        Endpoint::Infinite
                    });
                }
                if self.b.is_finite() || c != 0.0 {
                    return None;
                }
                Some(if a < 0.0 {
                    Endpoint::Finite(1.0)
                } else if b < 0.0 {
                    Endpoint::Finite(0.0)
                } else {
                    Endpoint::Infinite
                })
            }
            Family::Tau { .. } | Family::Custom { .. } => None,
        }
    }

    fn numeric_limit(&self, at_b: bool) -> Endpoint {
        let point = |k: i32| -> f64 {
            let f = math::pow(2.0, -(k as f64));
            if !at_b {
                self.s_ref * f
            } else if self.b.is_finite() {
                self.b - (self.b - self.s_ref) * f
            } else {
                self.s_ref / f
            }
        };
        let values: Vec<f64> = (1..=40).filter_map(|k| self.h_tilde_raw(point(k)).ok()).collect();
        let trend = monotone_limit(&values);
        if trend == Endpoint::Infinite {
            return trend;
        }
        let hh = |t: f64| self.big_h_raw(t).unwrap_or(f64::NAN);
        let base = match self.h_tilde_raw(self.s_ref) {
            Ok(v) => v,
            Err(_) => return Endpoint::Indeterminate,
        };
        let direct = if at_b {
            quad::integrate(hh, self.s_ref, self.b).map(|v| base + v)
        } else {
            quad::integrate(hh, 0.0, self.s_ref).map(|v| base - v)
        };
        match direct {
            Ok(v) => Endpoint::Finite(v),
            Err(_) => trend,
        }
    }

    /// Least admissible `C_H~` over `[lo, hi]`: the sampled supremum of
    /// `G_H / |H~|`, or `None` when the ratio is unbounded there.
    pub fn ghc_constant(&self, lo: f64, hi: f64, n_samples: usize) -> Result<Option<f64>> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n_samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "ghc sample range [{lo}, {hi}] with {n_samples} samples"
            )));
        }
        let cap = 1e12;
        let mut ratios = Vec::with_capacity(n_samples);
        let mut sign = 0.0;
        let samples: Vec<f64> = (0..n_samples)
            .map(|k| lo * math::pow(hi / lo, k as f64 / (n_samples - 1) as f64))
            .map(|s| s.min(hi))
            .collect();
        for &s in &samples {
            let ht = self.h_tilde(s)?;
            let g = self.transform_g(s)?;
            if ht == 0.0 {
                if g != 0.0 {
                    return Ok(None);
                }
                ratios.push(0.0);
                continue;
            }
            let sg = math::sign(ht);
            if sign != 0.0 && sg != sign {
                return Ok(None);
            }
            sign = sg;
            ratios.push(g / math::abs(ht));
        }
        let (imax, &rmax) = ratios
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |best, (i, r)| if *r > *best.1 { (i, r) } else { best });
        if !rmax.is_finite() {
            return Ok(None);
        }
        if rmax > cap {
            // Ratio one decade inward from the maximum.
            let s_max = samples[imax];
            let inward = if imax == 0 { s_max * 10.0 } else { s_max / 10.0 };
            let inward = inward.clamp(lo, hi);
            let r_in = self.transform_g(inward)? / math::abs(self.h_tilde(inward)?);
            if r_in < rmax {
                return Ok(None);
            }
        }
        Ok(Some(rmax))
    }
}

fn symbolic_kind(src: &str) -> Result<Kind> {
    let h_tilde = Expr::parse(src, &S_VARS)?;
    let big_h = h_tilde.diff(0);
    let h = big_h.diff(0);
    Ok(Kind::Symbolic { h_tilde, big_h, h })
}

/// Classifies a sequence of values approaching an endpoint.
fn monotone_limit(values: &[f64]) -> Endpoint {
    if values.len() < 6 {
        return Endpoint::Indeterminate;
    }
    if values.iter().any(|v| !v.is_finite() || math::abs(*v) > 1e12) {
        return Endpoint::Infinite;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let last = *values.last().unwrap();
    let dl = *diffs.last().unwrap();
    if math::abs(dl) < 1e-10 * (1.0 + math::abs(last)) {
        return Endpoint::Finite(last);
    }
    let tail = &diffs[diffs.len() - 5..];
    let same_sign = tail.iter().all(|d| math::sign(*d) == math::sign(dl));
    let slow = tail.windows(2).all(|w| math::abs(w[1]) >= 0.999 * math::abs(w[0]));
    if same_sign && slow {
        Endpoint::Infinite
    } else {
        Endpoint::Indeterminate
    }
}

/// Builds the weight with `T_H = tau`: `H = exp(beta)` with
/// `beta' = 1/tau`, `beta(anchor) = 0`.
pub fn weight_from_tau(tau: Expr, anchor: f64, b: f64) -> Result<WeightTriple> {
    let probe = |s: f64| tau.eval(&[s]);
    let upper = if b.is_finite() { b } else { 1e6 };
    for k in 1..64 {
        let s = upper * k as f64 / 64.0;
        let t = probe(s);
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("tau({s}) = {t} is not positive")));
        }
    }
    WeightTriple::new(Family::Tau { tau, anchor }, b, 0.0)
}

/// Parses a `tau(s)` or custom `h(s)` expression.
pub fn parse_in_s(src: &str) -> Result<Expr> {
    Expr::parse(src, &S_VARS)
}

impl fmt::Display for WeightTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam: String = match &self.family {
            Family::Power { alpha } => format!("power(alpha={alpha})"),
            Family::PowerLog { alpha, beta } => format!("power-log(alpha={alpha}, beta={beta})"),
            Family::Exponential { beta, alpha } => format!("exponential(beta={beta}, alpha={alpha})"),
            Family::Tau { tau, anchor } => format!("tau-generated(tau={tau}, anchor={anchor})"),
            Family::Custom { h } => format!("custom(h={h})"),
        };
        write!(f, "{fam}, B={}, C={}, {}", self.b, self.offset, self.normalization)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn identity_weight_triple() {
        let w = WeightTriple::power(0.0);
        let t = w.eval(2.0).unwrap();
        assert_eq!((t.h, t.big_h, t.h_tilde), (1.0, 2.0, 2.0));
        assert_eq!(w.transform_t(7.0).unwrap(), 7.0);
        assert_eq!(w.transform_g(3.0).unwrap(), 9.0);
        assert_eq!(w.normalization(), Normalization::Hardy0);
    }

    #[test]
    fn power_alpha_one() {
        let w = WeightTriple::power(1.0);
        let t = w.eval(2.0).unwrap();
        assert!(rel(t.h, 2.0) < 1e-15);
        assert!(rel(t.big_h, 2.0) < 1e-15);
        assert!(rel(t.h_tilde, 4.0 / 3.0) < 1e-15);
        assert!(rel(w.transform_t(3.0).unwrap(), 1.5) < 1e-15);
    }

    #[test]
    fn strongly_singular_power_uses_conjugate_hardy() {
        let w = WeightTriple::power(-3.5);
        assert_eq!(w.normalization(), Normalization::ConjugateHardyB);
        assert!(rel(w.h_tilde(1.0).unwrap(), 1.0 / 3.75) < 1e-15);
        let i = w.extension_interval();
        assert!(!i.contains_zero && !i.contains_b);
        assert_eq!(i.to_string(), "(0, inf)");
    }

    #[test]
    fn mildly_singular_power() {
        let w = WeightTriple::power(-0.5);
        // G_H = H^2/h with H = 2 s^0.5, h = s^-0.5.
        assert!(rel(w.transform_g(1.0).unwrap(), 4.0) < 1e-15);
        assert_eq!(w.extension_interval().to_string(), "[0, inf)");
        let c = w.ghc_constant(1e-6, 1e3, 200).unwrap().unwrap();
        assert!((c - 3.0).abs() < 1e-12);
        assert_eq!(WeightTriple::power(2.0).extension_interval().to_string(), "[0, inf)");
    }

    #[test]
    fn ghc_identity_weight_is_two() {
        let w = WeightTriple::power(0.0);
        let c = w.ghc_constant(1e-9, 1.0, 100).unwrap().unwrap();
        assert!((c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ghc_detects_interior_zero() {
        let w = WeightTriple::with_normalization(
            Family::Power { alpha: 0.0 },
            f64::INFINITY,
            0.0,
            Normalization::Anchored { s0: 1.0, value: 0.0 },
        )
        .unwrap();
        assert_eq!(w.ghc_constant(0.1, 10.0, 101).unwrap(), None);
    }

    #[test]
    fn ghc_detects_divergence_at_endpoint() {
        // Anchored identity weight sampled from just above its zero at s = 1.
        let w = WeightTriple::with_normalization(
            Family::Power { alpha: 0.0 },
            f64::INFINITY,
            0.0,
            Normalization::Anchored { s0: 1.0, value: 0.0 },
        )
        .unwrap();
        let r = w.ghc_constant(1.0 + 1e-14, 2.0, 50).unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn domain_errors() {
        let w = WeightTriple::power(0.0);
        assert!(matches!(w.eval(0.0), Err(Error::Domain { .. })));
        assert!(matches!(w.eval(-1.0), Err(Error::Domain { .. })));
        let w = WeightTriple::new(Family::Power { alpha: 0.0 }, 2.0, 0.0).unwrap();
        assert!(w.eval(2.0).is_err());
        assert!(w.eval(1.999).is_ok());
        assert_eq!(w.extension_interval().to_string(), "[0, 2]");
    }

    #[test]
    fn tau_generated_weights() {
        let w = weight_from_tau(parse_in_s("1 + s^2").unwrap(), 0.0, f64::INFINITY).unwrap();
        assert!(rel(w.transform_t(2.0).unwrap(), 5.0) < 1e-8);
        // H = exp(atan s).
        assert!(rel(w.big_h(2.0).unwrap(), 2f64.atan().exp()) < 1e-9);
        let w = weight_from_tau(parse_in_s("s").unwrap(), 1.0, f64::INFINITY).unwrap();
        assert!(rel(w.big_h(3.0).unwrap(), 3.0) < 1e-9);
        assert!(rel(w.h(3.0).unwrap(), 1.0) < 1e-9);
        let w = weight_from_tau(parse_in_s("1").unwrap(), 0.0, f64::INFINITY).unwrap();
        assert!(rel(w.big_h(1.5).unwrap(), 1.5f64.exp()) < 1e-9);
        assert!(rel(w.h(1.5).unwrap(), 1.5f64.exp()) < 1e-9);
        assert!(weight_from_tau(parse_in_s("s - 1").unwrap(), 0.5, 4.0).is_err());
    }

    #[test]
    fn tau_with_divergent_reciprocal_fails_to_evaluate() {
        // 1/tau = 1/s^2 is not integrable from the anchor 0.
        let w = WeightTriple::new(
            Family::Tau { tau: parse_in_s("s^2").unwrap(), anchor: 0.0 },
            f64::INFINITY,
            0.0,
        );
        match w {
            Err(_) => {}
            Ok(w) => assert!(matches!(w.big_h(1.0), Err(Error::Evaluation(_)))),
        }
    }

    #[test]
    fn custom_weight_matches_power() {
        let w = WeightTriple::new(Family::Custom { h: parse_in_s("s").unwrap() }, 4.0, 0.0).unwrap();
        let p = WeightTriple::new(Family::Power { alpha: 1.0 }, 4.0, 0.0).unwrap();
        for s in [0.1, 0.7, 2.5, 3.9] {
            let a = w.eval(s).unwrap();
            let b = p.eval(s).unwrap();
            assert!(rel(a.big_h, b.big_h) < 1e-9);
            assert!(rel(a.h_tilde, b.h_tilde) < 1e-9, "{s}: {} {}", a.h_tilde, b.h_tilde);
        }
    }

    #[test]
    fn power_log_and_exponential_closed_forms() {
        let w = WeightTriple::new(Family::PowerLog { alpha: 2.0, beta: 1.0 }, f64::INFINITY, 0.0).unwrap();
        let s: f64 = 1.3;
        let l = (2.0 + s).ln();
        let ht = s * s * l;
        let hh = 2.0 * s * l + s * s / (2.0 + s);
        let h = 2.0 * l + 4.0 * s / (2.0 + s) - s * s / ((2.0 + s) * (2.0 + s));
        let t = w.eval(s).unwrap();
        assert!(rel(t.h_tilde, ht) < 1e-14 && rel(t.big_h, hh) < 1e-14 && rel(t.h, h) < 1e-14);
        assert_eq!(w.extension_interval().to_string(), "[0, inf)");

        let w = WeightTriple::new(Family::Exponential { beta: 1.0, alpha: 1.0 }, f64::INFINITY, 0.0)
            .unwrap();
        let t = w.eval(0.5).unwrap();
        assert!(rel(t.h, 0.5f64.exp()) < 1e-15);
        // Hardy normalization subtracts the limit exp(0) = 1.
        assert!(rel(t.h_tilde, 0.5f64.exp() - 1.0) < 1e-15);
    }

    #[test]
    fn offset_shifts_h_and_tilts_h_tilde() {
        let w = WeightTriple::new(Family::Power { alpha: 0.0 }, f64::INFINITY, 1.0).unwrap();
        let t = w.eval(3.0).unwrap();
        assert_eq!(t.big_h, 2.0);
        assert!(rel(t.h_tilde, 4.5 - 3.0) < 1e-15);
    }

    #[test]
    fn numeric_limits_of_custom_weights() {
        // h = s^-3: H = -s^-2/2 + C0, H~ diverges at 0.
        let w = WeightTriple::new(Family::Custom { h: parse_in_s("s^(-3)").unwrap() }, 1.0, 0.0).unwrap();
        let i = w.extension_interval();
        assert!(!i.contains_zero && i.contains_b, "{i}");
        assert!(monotone_limit(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]) == Endpoint::Infinite);
        let conv: Vec<f64> = (0..50).map(|k| 1.0 - 0.5f64.powi(k)).collect();
        assert!(matches!(monotone_limit(&conv), Endpoint::Finite(_)));
    }
}
