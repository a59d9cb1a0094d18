//! Term-by-term evaluation of the weighted identity, the inequalities built
//! on it, and the auxiliary property checks.
//!
//! Every check runs and reports; hypothesis checks are advisory. A check
//! whose preconditions fail is returned with `applicable = false` and the
//! failing condition named in `note`.

mod identity;
mod inequalities;
mod properties;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{self, Domain};
use crate::math;
use crate::operator::{DivergenceData, Ellipticity, MatrixField, DEFAULT_SAMPLES};
use crate::testfn::{Family as UFamily, TestFunction};
use crate::weights::{Family as WFamily, WeightTriple};

pub use identity::{compute_theta, verify_identity, IdentityReport, LevelTerms, ThetaMethod};
pub use inequalities::{
    verify_chain_rule_bound, verify_gh_bound, verify_inequalities, verify_opial,
    verify_sign_simplification, verify_simplified,
};
pub use properties::{
    boundary_vanishing, verify_metafune_spina, verify_pointwise, verify_tangential_gradient,
    verify_trace_constancy, interior_points, BoundaryVanishing, PointwiseReport, TangentialReport,
    TraceReport, DEFAULT_SHELL_RADII,
};

/// Names of the checks addressable from a configuration.
pub const CHECK_NAMES: [&str; 14] = [
    "identity",
    "identity-restricted",
    "ineq-divfree",
    "ineq-general",
    "theta-trace",
    "sign-simplification",
    "opial",
    "gh-bound",
    "simplified",
    "chain-rule",
    "metafune",
    "trace-constancy",
    "tangential-gradient",
    "pointwise",
];

/// Default relative tolerance for smooth integrands.
pub const TOL_SMOOTH: f64 = 1e-6;
/// Default relative tolerance for singular integrands on graded rules.
pub const TOL_SINGULAR: f64 = 1e-3;
/// Relative tolerance of the pointwise identity.
pub const TOL_POINTWISE: f64 = 1e-8;

/// The data of one experiment: `u`, the weight, the operator and the domain.
#[derive(Clone, Debug)]
pub struct Problem {
    pub u: TestFunction,
    pub w: WeightTriple,
    pub a: MatrixField,
    pub domain: Domain,
}

impl Problem {
    pub fn new(u: TestFunction, w: WeightTriple, a: MatrixField, domain: Domain) -> Result<Self> {
        let n = domain.dim();
        if u.dim() != n {
            return Err(Error::Dimension { expected: n, got: u.dim() });
        }
        if a.dim() != n {
            return Err(Error::Dimension { expected: n, got: a.dim() });
        }
        Ok(Problem { u, w, a, domain })
    }

    /// Power rate `gamma` of the `I^2` integrand near the boundary, when
    /// known in closed form.
    pub fn boundary_exponent(&self) -> Option<f64> {
        match (self.u.family(), self.w.family()) {
            (UFamily::RadialPower { alpha }, WFamily::Power { alpha: beta }) if self.w.offset() == 0.0 => {
                Some(alpha * (beta + 2.0) - 2.0)
            }
            _ => None,
        }
    }

    /// Grading exponent picked by `Grading::Auto`.
    pub fn auto_grading(&self) -> f64 {
        match self.u.family() {
            UFamily::RadialPower { .. } => geometry::auto_grading(self.boundary_exponent()),
            _ => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Grading {
    Auto,
    Fixed(f64),
}

/// Refinement levels, grading and Gauss points per panel.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadSpec {
    pub levels: Vec<usize>,
    pub grading: Grading,
    pub order: usize,
}

impl QuadSpec {
    pub fn new(levels: Vec<usize>, grading: Grading) -> Self {
        QuadSpec { levels, grading, order: geometry::DEFAULT_ORDER }
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.levels[0] < 1 {
            return Err(Error::InvalidParameter("levels must be non-empty and >= 1".to_string()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("levels must be strictly increasing".to_string()));
        }
        if let Grading::Fixed(q) = self.grading {
            if !(q >= 1.0) {
                return Err(Error::InvalidParameter(alloc::format!("grading {q} < 1")));
            }
        }
        Ok(())
    }

    fn grading_for(&self, p: &Problem) -> f64 {
        match self.grading {
            Grading::Auto => p.auto_grading(),
            Grading::Fixed(q) => q,
        }
    }
}

/// A named constant with how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub provenance: String,
}

impl Constant {
    fn new(name: &str, value: f64, provenance: impl Into<String>) -> Self {
        Constant { name: name.to_string(), value, provenance: provenance.into() }
    }
}

/// Problem constants shared by the inequality checks.
#[derive(Clone, Debug, PartialEq)]
pub struct Constants {
    pub ellipticity: Ellipticity,
    pub divergence: DivergenceData,
    pub c_p: f64,
    pub c_p_provenance: String,
    /// `C_H~` over the value range of `u`; `None` when unbounded there.
    pub c_ht: Option<f64>,
    pub c_ht_provenance: String,
}

impl Constants {
    pub fn compute(p: &Problem) -> Result<Self> {
        let ellipticity = p.a.ellipticity_constants(&p.domain, DEFAULT_SAMPLES)?;
        let divergence = p.a.divergence_data(&p.domain, ellipticity.c_a, DEFAULT_SAMPLES)?;
        let (lo, hi) = p.u.value_range(&p.domain);
        let hi_c = hi.min(p.w.b());
        let lo_c = lo.max(1e-12 * hi_c.max(1e-300));
        let (c_ht, c_ht_provenance) = if hi_c.is_finite() && hi_c > 0.0 && lo_c < p.w.b() {
            let hi_s = if hi_c >= p.w.b() { hi_c * (1.0 - 1e-9) } else { hi_c };
            (
                p.w.ghc_constant(lo_c, hi_s, 2000)?,
                alloc::format!("sampled sup of G_H/|H~| on [{lo_c:e}, {hi_s}], 2000 log-spaced points"),
            )
        } else {
            (None, "value range of u is unbounded".to_string())
        };
        Ok(Constants {
            ellipticity,
            divergence,
            c_p: p.domain.poincare_constant(),
            c_p_provenance: p.domain.poincare_provenance(),
            c_ht,
            c_ht_provenance,
        })
    }

    /// `kappa = ||div A||_inf c_A^-1 C_P^2 C_H~^2`.
    pub fn kappa(&self) -> Option<f64> {
        self.c_ht.map(|c| {
            self.divergence.div_sup / self.ellipticity.c_a * self.c_p * self.c_p * c * c
        })
    }

    /// `Gamma = c_A^-1 C_P^3 C_H~^3`.
    pub fn gamma(&self) -> Option<f64> {
        self.c_ht.map(|c| math::powi(self.c_p * c, 3) / self.ellipticity.c_a)
    }

    fn entry_c_a(&self) -> Constant {
        Constant::new("c_A", self.ellipticity.c_a, self.ellipticity.provenance.clone())
    }

    fn entry_d_a(&self) -> Constant {
        Constant::new("d_A", self.divergence.d_a, self.divergence.provenance.clone())
    }

    fn entry_c_p(&self) -> Constant {
        Constant::new("C_P", self.c_p, self.c_p_provenance.clone())
    }

    fn entry_c_ht(&self) -> Option<Constant> {
        self.c_ht.map(|c| Constant::new("C_H~", c, self.c_ht_provenance.clone()))
    }
}

/// Margin check `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub constants: Vec<Constant>,
    pub applicable: bool,
    pub holds: bool,
    pub note: Option<String>,
}

impl InequalityReport {
    fn evaluate(name: &str, lhs: f64, rhs: f64, constants: Vec<Constant>, tol: f64) -> Self {
        let margin = rhs - lhs;
        let scale = 1f64.max(math::abs(lhs)).max(math::abs(rhs));
        let holds = margin >= -tol * scale || (rhs == f64::INFINITY && lhs.is_finite());
        InequalityReport {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            constants,
            applicable: true,
            holds,
            note: None,
        }
    }

    fn not_applicable(name: &str, constants: Vec<Constant>, note: impl Into<String>) -> Self {
        InequalityReport {
            name: name.to_string(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            constants,
            applicable: false,
            holds: false,
            note: Some(note.into()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// `true` unless the check was applicable and failed.
    pub fn passes(&self) -> bool {
        !self.applicable || self.holds
    }
}

/// Two sides of an identity evaluated under refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceReport {
    pub name: String,
    /// `(level, lhs, rhs)` per level.
    pub levels: Vec<(usize, f64, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / max(1, |lhs|, |rhs|)` at the finest level.
    pub relative_residual: f64,
    pub tolerance: f64,
    pub converged: bool,
    pub note: Option<String>,
}

impl BalanceReport {
    pub fn new(name: &str, levels: Vec<(usize, f64, f64)>, tolerance: f64) -> Self {
        let rel = |l: f64, r: f64| math::abs(l - r) / 1f64.max(math::abs(l)).max(math::abs(r));
        let (lhs, rhs) = levels.last().map(|t| (t.1, t.2)).unwrap_or((f64::NAN, f64::NAN));
        let relative_residual = rel(lhs, rhs);
        let tail = &levels[levels.len().saturating_sub(3)..];
        let converged = levels.len() >= 3
            && tail.iter().all(|t| t.1.is_finite() && t.2.is_finite() && rel(t.1, t.2) < tolerance);
        BalanceReport {
            name: name.to_string(),
            levels,
            lhs,
            rhs,
            relative_residual,
            tolerance,
            converged,
            note: None,
        }
    }
}
