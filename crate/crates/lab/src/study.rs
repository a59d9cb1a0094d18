//! Convergence studies: per-level values of every term and the empirical
//! order of convergence.

use serde::{Deserialize, Serialize};

use wsobolev_core::douglas;
use wsobolev_core::trend::empirical_orders;
use wsobolev_core::verifier::{self, QuadSpec};

use crate::config::{CheckKind, ConfigError, Experiment};
use crate::report::{Format, Num};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub term: String,
    pub level: usize,
    pub value: Num,
    /// Change from the previous level.
    pub increment: Option<Num>,
    /// `log2` of the ratio of successive increments.
    pub order: Option<Num>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub subject: String,
    pub rows: Vec<StudyRow>,
}

fn rows_for(term: &str, levels: &[usize], values: &[f64]) -> Vec<StudyRow> {
    let orders = empirical_orders(values);
    levels
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (l, v))| StudyRow {
            term: term.to_string(),
            level: *l,
            value: Num(*v),
            increment: (i > 0).then(|| Num(v - values[i - 1])),
            order: i.checked_sub(2).and_then(|j| orders.get(j).copied().flatten()).map(Num),
        })
        .collect()
}

/// Runs the first identity, metafune or douglas check of `exp` (the plain
/// identity when none is configured) over `min_level..=max_level`.
pub fn convergence_study(exp: &Experiment, min_level: usize, max_level: usize) -> Result<Study, ConfigError> {
    if min_level < 1 {
        return Err(ConfigError::new("--min-level", "levels start at 1"));
    }
    if max_level <= min_level {
        return Err(ConfigError::new("--max-level", format!("must exceed --min-level ({min_level})")));
    }
    let levels: Vec<usize> = (min_level..=max_level).collect();
    let spec = QuadSpec { levels: levels.clone(), ..exp.quad.clone() };
    let subject = exp.checks.iter().find(|c| {
        matches!(c.kind, CheckKind::Identity { .. } | CheckKind::Metafune { .. } | CheckKind::Douglas { .. })
    });
    let runtime = |e: wsobolev_core::Error| ConfigError::new("", format!("study failed: {e}"));
    let mut rows = Vec::new();
    let name = match subject.map(|c| &c.kind) {
        Some(CheckKind::Douglas { g, p, .. }) => {
            if max_level > 14 {
                return Err(ConfigError::new("--max-level", "douglas levels stop at 14"));
            }
            let d: Vec<f64> = levels.iter().map(|&l| douglas::douglas_energy(g, l)).collect::<Result<_, _>>().map_err(runtime)?;
            rows.extend(rows_for("douglas_energy", &levels, &d));
            if let Some(p) = p {
                let f: Vec<f64> =
                    levels.iter().map(|&l| douglas::feller_form(g, *p, l)).collect::<Result<_, _>>().map_err(runtime)?;
                rows.extend(rows_for("feller_form", &levels, &f));
            }
            "douglas"
        }
        Some(CheckKind::Metafune { p, g }) => {
            let u = exp.function.as_ref().expect("validated");
            let b = verifier::verify_metafune_spina(u, *p, &exp.domain, &spec, g.as_ref(), exp.tol.metafune)
                .map_err(runtime)?;
            let lhs: Vec<f64> = b.levels.iter().map(|t| t.1).collect();
            let rhs: Vec<f64> = b.levels.iter().map(|t| t.2).collect();
            rows.extend(rows_for("lhs", &levels, &lhs));
            rows.extend(rows_for("rhs", &levels, &rhs));
            "metafune"
        }
        other => {
            let restricted = matches!(other, Some(CheckKind::Identity { restricted: true }));
            let p = exp.problem.as_ref().ok_or_else(|| ConfigError::new("function", "required by the identity study"))?;
            let r = verifier::verify_identity(p, &spec, restricted, exp.tol.identity).map_err(runtime)?;
            let first = r.levels[0].named();
            for (k, (term, _)) in first.iter().enumerate() {
                let v: Vec<f64> = r.levels.iter().map(|l| l.named()[k].1).collect();
                rows.extend(rows_for(term, &levels, &v));
            }
            let res: Vec<f64> = r.levels.iter().map(|l| l.relative_residual).collect();
            rows.extend(rows_for("relative_residual", &levels, &res));
            if restricted {
                "identity-restricted"
            } else {
                "identity"
            }
        }
    };
    Ok(Study { subject: name.to_string(), rows })
}

fn opt(v: &Option<Num>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

pub fn render(study: &Study, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(study).expect("studies serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["subject", "term", "level", "value", "increment", "order"]).expect("in-memory write");
            for r in &study.rows {
                w.write_record([
                    study.subject.as_str(),
                    &r.term,
                    &r.level.to_string(),
                    &r.value.to_string(),
                    &opt(&r.increment),
                    &opt(&r.order),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
        }
    }
}
