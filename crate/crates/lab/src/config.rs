//! Experiment configuration: a strict JSON schema and its resolution into
//! core objects. Every error names the offending key.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use wsobolev_core::douglas::{BoundaryData, Mode};
use wsobolev_core::expr::Expr;
use wsobolev_core::geometry::{Domain, DEFAULT_ORDER};
use wsobolev_core::operator::{Kind, MatrixField};
use wsobolev_core::testfn::{Family as UFamily, TestFunction};
use wsobolev_core::verifier::{
    Grading, Problem, QuadSpec, CHECK_NAMES, DEFAULT_SHELL_RADII, TOL_POINTWISE, TOL_SINGULAR, TOL_SMOOTH,
};
use wsobolev_core::weights::{self, Family as WFamily, Normalization, WeightTriple};

use crate::report::Format;

/// Invalid configuration, located by a dotted key path.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError { pointer: pointer.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pointer.is_empty() || self.pointer == "." {
            write!(f, "invalid config: {}", self.message)
        } else {
            write!(f, "invalid config at `{}`: {}", self.pointer, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = Result<T, ConfigError>;

/// Checks addressable from a configuration beyond the verifier's own.
pub const EXTRA_CHECKS: [&str; 2] = ["douglas", "theta-representation"];

pub const WEIGHT_FAMILIES: [&str; 5] = ["power", "power-log", "exponential", "tau", "custom"];
pub const FUNCTION_FAMILIES: [&str; 6] =
    ["radial-power", "quadratic-radial", "bump", "signed-power", "harmonic-polynomial", "custom"];
pub const OPERATOR_KINDS: [&str; 5] = ["identity", "constant", "diagonal-affine", "scalar-profile", "custom"];
pub const DOMAIN_KINDS: [&str; 2] = ["ball", "box"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub weight: Option<WeightConfig>,
    #[serde(default)]
    pub function: Option<FunctionConfig>,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub checks: Vec<Value>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: String,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub n: Option<usize>,
    pub center: Option<Vec<f64>>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

/// `B`: a positive number or `"inf"`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum NormalizationConfig {
    Name(String),
    Anchored(AnchorConfig),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorConfig {
    pub s0: f64,
    pub value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub family: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub tau: Option<String>,
    pub anchor: Option<f64>,
    pub h: Option<String>,
    #[serde(rename = "B")]
    pub b: Option<Bound>,
    pub offset: Option<f64>,
    pub normalization: Option<NormalizationConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub family: String,
    pub alpha: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub k: Option<u32>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub eps: Option<f64>,
    pub degree: Option<u32>,
    pub index: Option<u32>,
    pub expr: Option<String>,
    pub scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: String,
    pub matrix: Option<Vec<f64>>,
    pub base: Option<Vec<f64>>,
    pub slopes: Option<Vec<Vec<f64>>>,
    pub profile: Option<String>,
    pub entries: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub levels: Option<Vec<usize>>,
    pub grading: Option<Value>,
    pub order: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub identity: Option<f64>,
    pub pointwise: Option<f64>,
    pub metafune: Option<f64>,
    pub douglas: Option<f64>,
    pub trace: Option<f64>,
    pub tangential: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Option<String>,
    pub path: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckConfig {
    check: String,
    expect: Option<String>,
    p: Option<f64>,
    g: Option<Value>,
    levels: Option<Vec<usize>>,
    samples: Option<usize>,
    radii: Option<Vec<f64>>,
    count: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryConfig {
    constant: Option<f64>,
    modes: Option<Vec<ModeConfig>>,
    expr: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeConfig {
    k: u32,
    #[serde(default)]
    a: f64,
    #[serde(default)]
    b: f64,
}

/// Resolved tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub identity: f64,
    pub pointwise: f64,
    pub metafune: f64,
    pub douglas: f64,
    pub trace: f64,
    pub tangential: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Converge,
    Diverge,
}

#[derive(Clone, Debug)]
pub enum CheckKind {
    Identity { restricted: bool },
    /// One of the verifier's inequality groups, by check name.
    Inequality,
    Metafune { p: f64, g: Option<Expr> },
    TraceConstancy { samples: usize, radii: Vec<f64> },
    Tangential { samples: usize },
    Pointwise { count: usize },
    Douglas { g: BoundaryData, p: Option<f64>, levels: Vec<usize> },
    ThetaRepresentation { p: f64, levels: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub expect: Expect,
    pub kind: CheckKind,
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub domain: Domain,
    pub weight: WeightTriple,
    pub function: Option<TestFunction>,
    pub operator: MatrixField,
    pub problem: Option<Problem>,
    pub checks: Vec<Check>,
    pub quad: QuadSpec,
    pub tol: Tolerances,
    pub format: Format,
    pub out: Option<String>,
}

/// Parses JSON text into the raw schema, reporting the path of the first
/// offending key.
pub fn parse(text: &str) -> Res<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError::new(e.path().to_string(), e.inner()))
}

pub fn load(path: &Path) -> Res<Experiment> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    resolve(parse(&text)?)
}

pub fn load_str(text: &str) -> Res<Experiment> {
    resolve(parse(text)?)
}

fn sub<T: DeserializeOwned>(value: &Value, prefix: &str) -> Res<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let pointer = if path == "." { prefix.to_string() } else { format!("{prefix}.{path}") };
        ConfigError::new(pointer, e.inner())
    })
}

fn forbid(section: &str, family: &str, present: &[(&str, bool)]) -> Res<()> {
    match present.iter().find(|(_, p)| *p) {
        Some((key, _)) => Err(ConfigError::new(format!("{section}.{key}"), format!("not a parameter of `{family}`"))),
        None => Ok(()),
    }
}

fn require<T: Clone>(section: &str, key: &str, v: &Option<T>) -> Res<T> {
    v.clone().ok_or_else(|| ConfigError::new(format!("{section}.{key}"), "missing required parameter"))
}

fn core_err(pointer: &str) -> impl Fn(wsobolev_core::Error) -> ConfigError + '_ {
    move |e| ConfigError::new(pointer, e)
}

fn positive(pointer: &str, v: f64) -> Res<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(pointer, format!("must be positive and finite, got {v}")))
    }
}

fn resolve_domain(c: Option<&DomainConfig>) -> Res<Domain> {
    let Some(c) = c else { return Ok(Domain::unit_disk()) };
    match c.kind.as_str() {
        "ball" => {
            forbid("domain", "ball", &[("lo", c.lo.is_some()), ("hi", c.hi.is_some())])?;
            let n = match (&c.center, c.n) {
                (Some(ctr), Some(n)) if ctr.len() != n => {
                    return Err(ConfigError::new("domain.center", format!("length {} but n = {n}", ctr.len())))
                }
                (Some(ctr), _) => ctr.len(),
                (None, n) => n.unwrap_or(2),
            };
            let center = c.center.clone().unwrap_or_else(|| vec![0.0; n]);
            Domain::ball(center, c.r.unwrap_or(1.0)).map_err(core_err("domain"))
        }
        "box" => {
            forbid("domain", "box", &[("R", c.r.is_some()), ("center", c.center.is_some())])?;
            match (&c.lo, &c.hi) {
                (None, None) => Ok(Domain::unit_box(c.n.unwrap_or(2))),
                (Some(lo), Some(hi)) => {
                    if let Some(n) = c.n.filter(|n| *n != lo.len()) {
                        return Err(ConfigError::new("domain.n", format!("{n} but corners have length {}", lo.len())));
                    }
                    Domain::cuboid(lo.clone(), hi.clone()).map_err(core_err("domain"))
                }
                (None, Some(_)) => Err(ConfigError::new("domain.lo", "missing required parameter")),
                (Some(_), None) => Err(ConfigError::new("domain.hi", "missing required parameter")),
            }
        }
        other => Err(ConfigError::new(
            "domain.kind",
            format!("unknown domain kind `{other}`, expected one of {}", DOMAIN_KINDS.join(", ")),
        )),
    }
}

fn resolve_weight(c: Option<&WeightConfig>) -> Res<WeightTriple> {
    let Some(c) = c else { return Ok(WeightTriple::power(0.0)) };
    let s = "weight";
    let family = match c.family.as_str() {
        "power" => {
            forbid(s, "power", &[("beta", c.beta.is_some()), ("tau", c.tau.is_some()), ("anchor", c.anchor.is_some()), ("h", c.h.is_some())])?;
            WFamily::Power { alpha: require(s, "alpha", &c.alpha)? }
        }
        "power-log" => {
            forbid(s, "power-log", &[("tau", c.tau.is_some()), ("anchor", c.anchor.is_some()), ("h", c.h.is_some())])?;
            WFamily::PowerLog { alpha: require(s, "alpha", &c.alpha)?, beta: require(s, "beta", &c.beta)? }
        }
        "exponential" => {
            forbid(s, "exponential", &[("tau", c.tau.is_some()), ("anchor", c.anchor.is_some()), ("h", c.h.is_some())])?;
            WFamily::Exponential { beta: require(s, "beta", &c.beta)?, alpha: require(s, "alpha", &c.alpha)? }
        }
        "tau" => {
            forbid(s, "tau", &[("alpha", c.alpha.is_some()), ("beta", c.beta.is_some()), ("h", c.h.is_some())])?;
            let tau = weights::parse_in_s(&require(s, "tau", &c.tau)?).map_err(core_err("weight.tau"))?;
            WFamily::Tau { tau, anchor: c.anchor.unwrap_or(0.0) }
        }
        "custom" => {
            forbid(s, "custom", &[("alpha", c.alpha.is_some()), ("beta", c.beta.is_some()), ("tau", c.tau.is_some()), ("anchor", c.anchor.is_some())])?;
            WFamily::Custom { h: weights::parse_in_s(&require(s, "h", &c.h)?).map_err(core_err("weight.h"))? }
        }
        other => {
            return Err(ConfigError::new(
                "weight.family",
                format!("unknown weight family `{other}`, expected one of {}", WEIGHT_FAMILIES.join(", ")),
            ))
        }
    };
    let b = match &c.b {
        None => f64::INFINITY,
        Some(Bound::Number(v)) => positive("weight.B", *v)?,
        Some(Bound::Text(t)) if t == "inf" => f64::INFINITY,
        Some(Bound::Text(t)) => return Err(ConfigError::new("weight.B", format!("expected a number or \"inf\", got `{t}`"))),
    };
    let offset = c.offset.unwrap_or(0.0);
    if let WFamily::Tau { tau, anchor } = &family {
        if c.normalization.is_some() || c.offset.is_some() {
            let key = if c.offset.is_some() { "weight.offset" } else { "weight.normalization" };
            return Err(ConfigError::new(key, "not a parameter of `tau`"));
        }
        return weights::weight_from_tau(tau.clone(), *anchor, b).map_err(core_err(s));
    }
    let norm = match &c.normalization {
        None => None,
        Some(NormalizationConfig::Name(n)) => Some(match n.as_str() {
            "hardy0" => Normalization::Hardy0,
            "conjugate-hardyB" => Normalization::ConjugateHardyB,
            other => {
                return Err(ConfigError::new(
                    "weight.normalization",
                    format!("unknown normalization `{other}`, expected hardy0, conjugate-hardyB or {{\"s0\", \"value\"}}"),
                ))
            }
        }),
        Some(NormalizationConfig::Anchored(a)) => Some(Normalization::Anchored { s0: a.s0, value: a.value }),
    };
    match norm {
        None => WeightTriple::new(family, b, offset),
        Some(n) => WeightTriple::with_normalization(family, b, offset, n),
    }
    .map_err(core_err(s))
}

fn resolve_function(c: &FunctionConfig, dim: usize) -> Res<TestFunction> {
    let s = "function";
    let keys = |except: &[&str]| -> Vec<(&'static str, bool)> {
        [
            ("alpha", c.alpha.is_some()),
            ("a", c.a.is_some()),
            ("b", c.b.is_some()),
            ("k", c.k.is_some()),
            ("center", c.center.is_some()),
            ("radius", c.radius.is_some()),
            ("eps", c.eps.is_some()),
            ("degree", c.degree.is_some()),
            ("index", c.index.is_some()),
            ("expr", c.expr.is_some()),
        ]
        .into_iter()
        .filter(|(k, _)| !except.contains(k))
        .collect()
    };
    let family = match c.family.as_str() {
        "radial-power" => {
            forbid(s, "radial-power", &keys(&["alpha"]))?;
            UFamily::RadialPower { alpha: require(s, "alpha", &c.alpha)? }
        }
        "quadratic-radial" => {
            forbid(s, "quadratic-radial", &keys(&["a", "b"]))?;
            UFamily::QuadraticRadial { a: require(s, "a", &c.a)?, b: require(s, "b", &c.b)? }
        }
        "bump" => {
            forbid(s, "bump", &keys(&["k", "center", "radius"]))?;
            UFamily::Bump {
                k: require(s, "k", &c.k)?,
                center: c.center.clone().unwrap_or_else(|| vec![0.0; dim]),
                radius: c.radius.unwrap_or(1.0),
            }
        }
        "signed-power" => {
            forbid(s, "signed-power", &keys(&["eps"]))?;
            UFamily::SignedPower1d { eps: require(s, "eps", &c.eps)? }
        }
        "harmonic-polynomial" => {
            forbid(s, "harmonic-polynomial", &keys(&["degree", "index"]))?;
            UFamily::HarmonicPolynomial { degree: require(s, "degree", &c.degree)?, index: c.index.unwrap_or(0) }
        }
        "custom" => {
            forbid(s, "custom", &keys(&["expr"]))?;
            UFamily::Custom { source: require(s, "expr", &c.expr)? }
        }
        other => {
            return Err(ConfigError::new(
                "function.family",
                format!("unknown function family `{other}`, expected one of {}", FUNCTION_FAMILIES.join(", ")),
            ))
        }
    };
    let u = TestFunction::new(family, dim).map_err(core_err(s))?;
    Ok(match c.scale {
        Some(k) => u.with_scale(k),
        None => u,
    })
}

fn resolve_operator(c: Option<&OperatorConfig>, dim: usize) -> Res<MatrixField> {
    let Some(c) = c else { return Ok(MatrixField::identity(dim)) };
    let s = "operator";
    let all = [
        ("matrix", c.matrix.is_some()),
        ("base", c.base.is_some()),
        ("slopes", c.slopes.is_some()),
        ("profile", c.profile.is_some()),
        ("entries", c.entries.is_some()),
    ];
    let except = |keep: &[&str]| -> Vec<(&str, bool)> { all.iter().copied().filter(|(k, _)| !keep.contains(k)).collect() };
    let kind = match c.kind.as_str() {
        "identity" => {
            forbid(s, "identity", &except(&[]))?;
            Kind::Identity
        }
        "constant" => {
            forbid(s, "constant", &except(&["matrix"]))?;
            Kind::Constant(require(s, "matrix", &c.matrix)?)
        }
        "diagonal-affine" => {
            forbid(s, "diagonal-affine", &except(&["base", "slopes"]))?;
            Kind::DiagonalAffine { base: require(s, "base", &c.base)?, slopes: require(s, "slopes", &c.slopes)? }
        }
        "scalar-profile" => {
            forbid(s, "scalar-profile", &except(&["profile"]))?;
            Kind::ScalarProfile { profile: require(s, "profile", &c.profile)? }
        }
        "custom" => {
            forbid(s, "custom", &except(&["entries"]))?;
            Kind::Custom { entries: require(s, "entries", &c.entries)? }
        }
        other => {
            return Err(ConfigError::new(
                "operator.kind",
                format!("unknown operator kind `{other}`, expected one of {}", OPERATOR_KINDS.join(", ")),
            ))
        }
    };
    MatrixField::new(kind, dim).map_err(core_err(s))
}

fn resolve_quadrature(c: &QuadratureConfig) -> Res<QuadSpec> {
    let levels = c.levels.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
    check_levels("quadrature.levels", &levels)?;
    let grading = match &c.grading {
        None => Grading::Auto,
        Some(Value::String(s)) if s == "auto" => Grading::Auto,
        Some(Value::Number(n)) => {
            let q = n.as_f64().unwrap_or(f64::NAN);
            if !(q >= 1.0) || !q.is_finite() {
                return Err(ConfigError::new("quadrature.grading", format!("grading exponent must be >= 1, got {q}")));
            }
            Grading::Fixed(q)
        }
        Some(other) => {
            return Err(ConfigError::new("quadrature.grading", format!("expected \"auto\" or a number >= 1, got {other}")))
        }
    };
    let order = c.order.unwrap_or(DEFAULT_ORDER);
    if order == 0 {
        return Err(ConfigError::new("quadrature.order", "must be at least 1"));
    }
    Ok(QuadSpec { levels, grading, order })
}

fn check_levels(pointer: &str, levels: &[usize]) -> Res<()> {
    if levels.is_empty() {
        return Err(ConfigError::new(pointer, "must not be empty"));
    }
    if levels[0] < 1 {
        return Err(ConfigError::new(pointer, "levels start at 1"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::new(pointer, "levels must be strictly increasing"));
    }
    Ok(())
}

fn resolve_tolerances(c: &ToleranceConfig, singular: bool) -> Res<Tolerances> {
    let pick = |key: &str, v: Option<f64>, default: f64| -> Res<f64> {
        match v {
            None => Ok(default),
            Some(v) => positive(&format!("tolerances.{key}"), v),
        }
    };
    Ok(Tolerances {
        identity: pick("identity", c.identity, if singular { TOL_SINGULAR } else { TOL_SMOOTH })?,
        pointwise: pick("pointwise", c.pointwise, TOL_POINTWISE)?,
        metafune: pick("metafune", c.metafune, TOL_SMOOTH)?,
        douglas: pick("douglas", c.douglas, TOL_SMOOTH)?,
        trace: pick("trace", c.trace, TOL_SINGULAR)?,
        tangential: pick("tangential", c.tangential, TOL_POINTWISE)?,
    })
}

fn boundary_data(g: &Value, pointer: &str) -> Res<BoundaryData> {
    let c: BoundaryConfig = sub(g, pointer)?;
    match (&c.expr, &c.modes) {
        (Some(_), Some(_)) => Err(ConfigError::new(format!("{pointer}.expr"), "give either modes or expr, not both")),
        (Some(e), None) => {
            if c.constant.is_some() {
                return Err(ConfigError::new(format!("{pointer}.constant"), "not used with expr"));
            }
            BoundaryData::closed_form(e).map_err(|e| ConfigError::new(format!("{pointer}.expr"), e))
        }
        (None, modes) => {
            let modes = modes.as_deref().unwrap_or(&[]);
            if let Some(i) = modes.iter().position(|m| m.k == 0) {
                return Err(ConfigError::new(format!("{pointer}.modes[{i}].k"), "mode index must be >= 1"));
            }
            let modes = modes.iter().map(|m| Mode { k: m.k, a: m.a, b: m.b }).collect();
            Ok(BoundaryData::trig(c.constant.unwrap_or(0.0), modes))
        }
    }
}

fn resolve_check(value: &Value, i: usize, function: Option<&TestFunction>) -> Res<Check> {
    let at = format!("checks[{i}]");
    let c: CheckConfig = match value {
        Value::String(s) => CheckConfig { check: s.clone(), ..Default::default() },
        Value::Object(_) => sub(value, &at)?,
        _ => return Err(ConfigError::new(at, "expected a check name or an object with a `check` key")),
    };
    let name = c.check.as_str();
    let known = CHECK_NAMES.contains(&name) || EXTRA_CHECKS.contains(&name);
    if !known {
        let pointer = if value.is_string() { at.clone() } else { format!("{at}.check") };
        return Err(ConfigError::new(
            pointer,
            format!("unknown check `{name}`; run `wsobolev list-checks` for the accepted names"),
        ));
    }
    let expect = match c.expect.as_deref() {
        None | Some("converge") | Some("hold") => Expect::Converge,
        Some("diverge") => Expect::Diverge,
        Some(other) => {
            return Err(ConfigError::new(format!("{at}.expect"), format!("expected \"converge\" or \"diverge\", got `{other}`")))
        }
    };
    let allowed: &[&str] = match name {
        "metafune" => &["p", "g"],
        "trace-constancy" => &["samples", "radii"],
        "tangential-gradient" => &["samples"],
        "pointwise" => &["count"],
        "douglas" => &["p", "g", "levels"],
        "theta-representation" => &["p", "levels"],
        _ => &[],
    };
    let present = [
        ("p", c.p.is_some()),
        ("g", c.g.is_some()),
        ("levels", c.levels.is_some()),
        ("samples", c.samples.is_some()),
        ("radii", c.radii.is_some()),
        ("count", c.count.is_some()),
    ];
    if let Some((key, _)) = present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
        return Err(ConfigError::new(format!("{at}.{key}"), format!("not a parameter of check `{name}`")));
    }
    let needs_function = name != "douglas" || c.g.is_none();
    if needs_function && function.is_none() {
        return Err(ConfigError::new("function", format!("required by check `{name}`")));
    }
    let levels = |default: &[usize]| -> Res<Vec<usize>> {
        let l = c.levels.clone().unwrap_or_else(|| default.to_vec());
        check_levels(&format!("{at}.levels"), &l)?;
        Ok(l)
    };
    let kind = match name {
        "identity" => CheckKind::Identity { restricted: false },
        "identity-restricted" => CheckKind::Identity { restricted: true },
        "metafune" => {
            let p = c.p.unwrap_or(2.0);
            if !(p > 1.0) {
                return Err(ConfigError::new(format!("{at}.p"), format!("must exceed 1, got {p}")));
            }
            let g = match &c.g {
                None => None,
                Some(Value::String(src)) => {
                    Some(weights::parse_in_s(src).map_err(|e| ConfigError::new(format!("{at}.g"), e))?)
                }
                Some(_) => return Err(ConfigError::new(format!("{at}.g"), "expected an expression in s")),
            };
            CheckKind::Metafune { p, g }
        }
        "trace-constancy" => {
            let radii = c.radii.clone().unwrap_or_else(|| DEFAULT_SHELL_RADII.to_vec());
            if radii.len() < 3 || radii.windows(2).any(|w| !(w[1] < w[0])) || !(radii[radii.len() - 1] > 0.0) {
                return Err(ConfigError::new(format!("{at}.radii"), "need at least three positive, strictly decreasing radii"));
            }
            CheckKind::TraceConstancy { samples: c.samples.unwrap_or(32).max(1), radii }
        }
        "tangential-gradient" => CheckKind::Tangential { samples: c.samples.unwrap_or(64).max(1) },
        "pointwise" => CheckKind::Pointwise { count: c.count.unwrap_or(100).max(1) },
        "douglas" => {
            let g = match &c.g {
                Some(g) => boundary_data(g, &format!("{at}.g"))?,
                None => {
                    let u = function.expect("checked above").clone();
                    BoundaryData::trace(u).map_err(|e| ConfigError::new("function", e))?
                }
            };
            if let Some(p) = c.p.filter(|p| !(*p >= 2.0)) {
                return Err(ConfigError::new(format!("{at}.p"), format!("must be at least 2, got {p}")));
            }
            let levels = levels(&[4, 5, 6, 7, 8, 9])?;
            if let Some(&l) = levels.iter().find(|l| **l > 14) {
                return Err(ConfigError::new(format!("{at}.levels"), format!("level {l} exceeds 14")));
            }
            CheckKind::Douglas { g, p: c.p, levels }
        }
        "theta-representation" => {
            if function.map(|u| u.dim()) != Some(2) {
                return Err(ConfigError::new("function", "theta-representation needs a planar function on the unit disk"));
            }
            let p = c.p.unwrap_or(2.0);
            if !(p >= 2.0) {
                return Err(ConfigError::new(format!("{at}.p"), format!("must be at least 2, got {p}")));
            }
            let levels = levels(&[4, 5, 6])?;
            if let Some(&l) = levels.iter().find(|l| **l > 14) {
                return Err(ConfigError::new(format!("{at}.levels"), format!("level {l} exceeds 14")));
            }
            CheckKind::ThetaRepresentation { p, levels }
        }
        _ => CheckKind::Inequality,
    };
    Ok(Check { name: name.to_string(), expect, kind })
}

pub fn resolve(c: ExperimentConfig) -> Res<Experiment> {
    let domain = resolve_domain(c.domain.as_ref())?;
    let dim = domain.dim();
    let weight = resolve_weight(c.weight.as_ref())?;
    let function = c.function.as_ref().map(|f| resolve_function(f, dim)).transpose()?;
    let operator = resolve_operator(c.operator.as_ref(), dim)?;
    let problem = match &function {
        Some(u) => Some(Problem::new(u.clone(), weight.clone(), operator.clone(), domain.clone()).map_err(core_err("function"))?),
        None => None,
    };
    let checks = c
        .checks
        .iter()
        .enumerate()
        .map(|(i, v)| resolve_check(v, i, function.as_ref()))
        .collect::<Res<Vec<_>>>()?;
    if checks.iter().any(|c| matches!(c.kind, CheckKind::ThetaRepresentation { .. }))
        && domain != Domain::unit_disk()
    {
        return Err(ConfigError::new("domain", "theta-representation runs on the unit disk"));
    }
    let quad = resolve_quadrature(&c.quadrature)?;
    let singular = problem.as_ref().is_some_and(|p| p.boundary_exponent().is_some());
    let tol = resolve_tolerances(&c.tolerances, singular)?;
    let format = match c.output.format.as_deref() {
        None => Format::Json,
        Some(f) => f.parse().map_err(|e| ConfigError::new("output.format", e))?,
    };
    Ok(Experiment {
        domain,
        weight,
        function,
        operator,
        problem,
        checks,
        quad,
        tol,
        format,
        out: c.output.path.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> ConfigError {
        load_str(text).unwrap_err()
    }

    #[test]
    fn unknown_names_point_at_their_key() {
        assert_eq!(err(r#"{"weight": {"family": "powr", "alpha": 0}}"#).pointer, "weight.family");
        assert_eq!(err(r#"{"domain": {"kind": "torus"}}"#).pointer, "domain.kind");
        assert_eq!(err(r#"{"operator": {"kind": "laplace"}}"#).pointer, "operator.kind");
        assert_eq!(err(r#"{"checks": ["identity-x"]}"#).pointer, "checks[0]");
        let e = err(r#"{"function": {"family": "bump", "k": 2}, "checks": ["identity", {"check": "pointwis"}]}"#);
        assert_eq!(e.pointer, "checks[1].check");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert_eq!(err(r#"{"weight": {"family": "power", "alpha": 0, "alpah": 1}}"#).pointer, "weight.alpah");
        assert_eq!(err(r#"{"quadrature": {"level": [1, 2]}}"#).pointer, "quadrature.level");
        assert_eq!(err(r#"{"chekcs": []}"#).pointer, "chekcs");
        let e = err(r#"{"function": {"family": "bump", "k": 2}, "checks": [{"check": "metafune", "q": 3}]}"#);
        assert_eq!(e.pointer, "checks[0].q");
    }

    #[test]
    fn parameters_of_other_families_are_rejected() {
        assert_eq!(err(r#"{"weight": {"family": "power", "alpha": 0, "beta": 1}}"#).pointer, "weight.beta");
        let e = err(r#"{"function": {"family": "bump", "k": 2}, "checks": [{"check": "identity", "p": 3}]}"#);
        assert_eq!(e.pointer, "checks[0].p");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert_eq!(err(r#"{"quadrature": {"levels": [2, 2]}}"#).pointer, "quadrature.levels");
        assert_eq!(err(r#"{"tolerances": {"identity": -1}}"#).pointer, "tolerances.identity");
        assert_eq!(err(r#"{"weight": {"family": "power", "alpha": 0, "B": "big"}}"#).pointer, "weight.B");
        assert_eq!(err(r#"{"checks": ["identity"]}"#).pointer, "function");
    }

    #[test]
    fn defaults_resolve() {
        let e = load_str(r#"{"function": {"family": "quadratic-radial", "a": 2, "b": 1}, "checks": ["identity"]}"#).unwrap();
        assert_eq!(e.domain, Domain::unit_disk());
        assert_eq!(e.quad.levels, vec![1, 2, 3, 4]);
        assert_eq!(e.tol.identity, TOL_SMOOTH);
        assert_eq!(e.format, Format::Json);
        let e = load_str(r#"{"checks": [{"check": "douglas", "g": {"modes": [{"k": 1, "a": 1.0}]}, "p": 2}]}"#).unwrap();
        assert!(matches!(&e.checks[0].kind, CheckKind::Douglas { levels, .. } if levels.len() == 6));
    }
}
