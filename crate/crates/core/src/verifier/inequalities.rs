use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::properties::{boundary_vanishing, BoundaryVanishing};
use super::{Constant, Constants, IdentityReport, InequalityReport, Problem};
use crate::trend::Trend;

/// The three consequences of the identity: the divergence-free bound, the
/// general bound with the `d_A int G_H` term, and the trace-type bound on
/// `-Theta`.
pub fn verify_inequalities(report: &IdentityReport, c: &Constants) -> Vec<InequalityReport> {
    let l = report.last();
    let tol = report.tolerance;
    let d_a = c.divergence.d_a;
    let gh_diverges = report.trend("int_G_H") == Some(Trend::Diverging);
    let div_free = c.divergence.div_free;
    let base = vec![c.entry_d_a()];
    if !report.converged {
        let note = "identity not converged";
        return vec![
            InequalityReport::not_applicable("ineq-divfree", base.clone(), note),
            InequalityReport::not_applicable("ineq-general", base.clone(), note),
            InequalityReport::not_applicable("theta-trace", base, note),
        ];
    }

    let divfree = if div_free {
        InequalityReport::evaluate("ineq-divfree", l.i2, l.jp_abs + l.theta, base.clone(), tol)
    } else {
        InequalityReport::not_applicable("ineq-divfree", base.clone(), "div A does not vanish")
    };

    let general = if div_free {
        InequalityReport::not_applicable("ineq-general", base.clone(), "div A vanishes; see ineq-divfree")
    } else if gh_diverges {
        InequalityReport::evaluate("ineq-general", l.i2, f64::INFINITY, base.clone(), tol)
            .with_note("int G_H diverges: trivially true, uninformative")
    } else {
        let rhs = d_a * l.g_h + 2.0 * l.jp_abs + 2.0 * l.theta;
        InequalityReport::evaluate("ineq-general", l.i2, rhs, base.clone(), tol)
    };

    let trace = if gh_diverges && d_a > 0.0 {
        InequalityReport::evaluate("theta-trace", -l.theta, f64::INFINITY, base, tol)
            .with_note("int G_H diverges: trivially true, uninformative")
    } else {
        let gh_term = if d_a == 0.0 { 0.0 } else { 0.25 * d_a * l.g_h };
        InequalityReport::evaluate("theta-trace", -l.theta, gh_term + l.jp_abs, base, tol)
    };
    vec![divfree, general, trace]
}

fn sign_preconditions(p: &Problem, c: &Constants, bv: &BoundaryVanishing) -> Option<String> {
    if !c.divergence.a2_holds {
        return Some(format!("(A2) fails: max div2 A = {}", c.divergence.div2_max));
    }
    if !bv.nonnegative {
        return Some(format!("H~(u) takes negative values (min {})", bv.min_interior));
    }
    if !bv.vanishes {
        return Some(format!(
            "H~(u) does not vanish on the boundary (max trace {:e}, {})",
            bv.max_trace,
            p.w.normalization()
        ));
    }
    None
}

/// Sign-condition simplification: `Theta <= 0`, the divergence term is
/// non-negative, and `I^2 <= int |Pu||H(u)|`. Expects a restricted report.
pub fn verify_sign_simplification(
    p: &Problem,
    report: &IdentityReport,
    c: &Constants,
) -> Vec<InequalityReport> {
    let tol = report.tolerance;
    let bv = boundary_vanishing(p);
    let consts = vec![Constant::new("div2_A_max", c.divergence.div2_max, c.divergence.provenance.clone())];
    let names = ["theta-nonpositive", "div-term-nonnegative", "sign-simplified"];
    let reason = sign_preconditions(p, c, &bv)
        .or_else(|| (!report.converged).then(|| String::from("identity not converged")));
    if let Some(reason) = reason {
        return names.iter().map(|n| InequalityReport::not_applicable(n, consts.clone(), reason.clone())).collect();
    }
    let l = report.last();
    vec![
        InequalityReport::evaluate(names[0], l.theta, 0.0, consts.clone(), tol),
        InequalityReport::evaluate(names[1], 0.0, -l.jdiv, consts.clone(), tol),
        InequalityReport::evaluate(names[2], l.i2, l.jp_abs, consts, tol),
    ]
}

fn opial_preconditions(report: &IdentityReport, c: &Constants, bv: &BoundaryVanishing) -> Option<String> {
    if c.c_ht.is_none() {
        return Some(String::from("C_H~ unbounded on the value range of u"));
    }
    if !bv.vanishes {
        return Some(format!("H~(u) does not vanish on the boundary (max trace {:e})", bv.max_trace));
    }
    if !report.converged {
        return Some(String::from("identity not converged"));
    }
    None
}

fn opial_constants(c: &Constants) -> Vec<Constant> {
    let mut v = vec![c.entry_c_p()];
    v.extend(c.entry_c_ht());
    v
}

/// Both Opial-type inequalities over `{u in (0, B)}`. Expects a restricted
/// report.
pub fn verify_opial(p: &Problem, report: &IdentityReport, c: &Constants) -> Vec<InequalityReport> {
    let bv = boundary_vanishing(p);
    let consts = opial_constants(c);
    if let Some(reason) = opial_preconditions(report, c, &bv) {
        return ["opial-1", "opial-2"]
            .iter()
            .map(|n| InequalityReport::not_applicable(n, consts.clone(), reason.clone()))
            .collect();
    }
    let l = report.last();
    let k = c.c_p * c.c_ht.unwrap();
    let tol = report.tolerance;
    vec![
        InequalityReport::evaluate("opial-1", l.g_h, k * l.grad_h, consts.clone(), tol),
        InequalityReport::evaluate("opial-2", l.grad_h, k * k * l.i2_euclid, consts, tol),
    ]
}

/// `int G_H(u) <= Gamma I^2` with `Gamma = c_A^-1 C_P^3 C_H~^3`.
pub fn verify_gh_bound(p: &Problem, report: &IdentityReport, c: &Constants) -> InequalityReport {
    let bv = boundary_vanishing(p);
    let mut consts = opial_constants(c);
    consts.push(c.entry_c_a());
    if let Some(reason) = opial_preconditions(report, c, &bv) {
        return InequalityReport::not_applicable("gh-bound", consts, reason);
    }
    let gamma = c.gamma().unwrap();
    consts.push(Constant::new("Gamma", gamma, "c_A^-1 C_P^3 C_H~^3"));
    let l = report.last();
    InequalityReport::evaluate("gh-bound", l.g_h, gamma * l.i2, consts, report.tolerance)
}

/// The `kappa`/`Gamma` simplification: the `int G_H` bound always, and
/// `I^2 <= (int |Pu||H(u)| + Theta) / (1 - kappa)` when `0 < kappa < 1`.
pub fn verify_simplified(p: &Problem, report: &IdentityReport, c: &Constants) -> Vec<InequalityReport> {
    let gh = verify_gh_bound(p, report, c);
    let mut consts = opial_constants(c);
    consts.push(c.entry_c_a());
    consts.push(Constant::new("div_A_sup", c.divergence.div_sup, c.divergence.provenance.clone()));
    let kappa_report = match (gh.applicable, c.kappa()) {
        (false, _) | (_, None) => InequalityReport::not_applicable(
            "kappa-bound",
            consts,
            gh.note.clone().unwrap_or_else(|| String::from("C_H~ unavailable")),
        ),
        (true, Some(kappa)) => {
            consts.push(Constant::new("kappa", kappa, "||div A||_inf c_A^-1 C_P^2 C_H~^2"));
            if kappa > 0.0 && kappa < 1.0 {
                let l = report.last();
                let rhs = (l.jp_abs + l.theta) / (1.0 - kappa);
                InequalityReport::evaluate("kappa-bound", l.i2, rhs, consts, report.tolerance)
            } else {
                InequalityReport::not_applicable(
                    "kappa-bound",
                    consts,
                    format!("kappa = {kappa} outside (0, 1)"),
                )
            }
        }
    };
    vec![gh, kappa_report]
}

/// Integral chain-rule bound `int |P(H~(u))| <= int |H(u) Pu| + I^2` with
/// the effective constant `int |P(H~(u))| / int |H(u) Pu|`. Applicable when
/// the sign simplification or the `kappa` simplification applies.
pub fn verify_chain_rule_bound(p: &Problem, report: &IdentityReport, c: &Constants) -> InequalityReport {
    let sign_ok = verify_sign_simplification(p, report, c).iter().all(|r| r.applicable);
    let kappa_ok = verify_simplified(p, report, c).iter().all(|r| r.applicable);
    let l = report.last();
    if !(sign_ok || kappa_ok) {
        return InequalityReport::not_applicable(
            "chain-rule",
            Vec::new(),
            "neither the sign nor the kappa simplification applies",
        );
    }
    let effective = l.p_ht_abs / l.jp_abs;
    let via = if sign_ok { "sign simplification" } else { "kappa simplification" };
    let consts = vec![Constant::new("effective", effective, format!("ratio of quadratures, via {via}"))];
    InequalityReport::evaluate("chain-rule", l.p_ht_abs, l.jp_abs + l.i2, consts, report.tolerance)
}
