//! CSV and JSON output. Every real number is written with 15 significant
//! digits, so reports are stable across platforms and thread counts.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::asympt::{AsymptoticCheck, SuiteOutcome};
use crate::error::Result;
use crate::parseval::ExperimentRun;
use crate::ramanujan::Lemma1Report;

pub const SCHEMA_VERSION: &str = "1";

/// `x` in scientific notation with 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.14e}")
    } else {
        x.to_string()
    }
}

pub const EXPERIMENT_COLUMNS: [&str; 12] = [
    "N",
    "h",
    "s",
    "t",
    "actual",
    "main",
    "signed_error",
    "bound_new",
    "bound_old",
    "R",
    "tail",
    "relative_error",
];

/// One row per grid point. `bound_old` is empty where the earlier envelope
/// does not apply.
pub fn write_experiment_csv<W: Write>(run: &ExperimentRun, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EXPERIMENT_COLUMNS)?;
    for r in &run.reports {
        w.write_record([
            r.n.to_string(),
            r.h.to_string(),
            fmt_num(r.s),
            fmt_num(r.t),
            fmt_num(r.actual),
            fmt_num(r.main),
            fmt_num(r.signed_error),
            fmt_num(r.bound_new),
            r.bound_old.map(fmt_num).unwrap_or_default(),
            r.r.to_string(),
            fmt_num(r.tail),
            fmt_num(r.relative_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_asympt_csv<W: Write>(check: &AsymptoticCheck, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "partial", "model", "normalized_deviation"])?;
    for i in 0..check.grid.len() {
        w.write_record([
            check.grid[i].to_string(),
            fmt_num(check.partial_sums[i]),
            fmt_num(check.model_values[i]),
            fmt_num(check.normalized_deviations[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lemma1_csv<W: Write>(report: &Lemma1Report, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "r",
        "s",
        "h",
        "N",
        "sum",
        "predicted",
        "normalized_deviation",
    ])?;
    for e in &report.entries {
        for (i, n) in report.grid.iter().enumerate() {
            w.write_record([
                e.r.to_string(),
                e.s.to_string(),
                e.h.to_string(),
                n.to_string(),
                e.sums[i].to_string(),
                e.predicted[i].to_string(),
                fmt_num(e.deviations[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rounds every float in `v` to 15 significant digits.
fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = fmt_num(x).parse().expect("formatted float parses");
            *v = json!(rounded);
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn document(kind: &str, body: &impl Serialize) -> Result<Value> {
    let mut body = serde_json::to_value(body)?;
    round_numbers(&mut body);
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "library_version": crate::VERSION,
        "kind": kind,
        "report": body,
    }))
}

/// JSON report of an experiment: header (series labels, δ, grid,
/// tolerances), per-`N` rows, fitted scales, exponent fit and gates.
pub fn experiment_json(run: &ExperimentRun) -> Result<Value> {
    let body = json!({
        "header": {
            "pair": run.config.pair.name(),
            "series_f": run.label_f,
            "series_g": run.label_g,
            "delta": run.delta,
            "h": run.config.h,
            "grid": run.config.grid,
            "tail_target": run.config.tail_target,
            "growth_tolerance": crate::parseval::GROWTH_TOLERANCE,
        },
        "rows": run.reports,
        "scale_new": run.scale_new,
        "scale_old": run.scale_old,
        "growth_gate": run.growth,
        "fit": run.fit,
        "fit_note": run.fit_note,
        "cross_check": run.cross_check,
        "passed": run.passed(),
    });
    document("parseval", &body)
}

pub fn suite_json(outcome: &SuiteOutcome) -> Result<Value> {
    let body = json!({
        "suite": outcome.suite,
        "passed": outcome.passed(),
        "verdicts": outcome.verdicts,
        "checks": outcome.checks,
        "lemma1": outcome.lemma1.as_ref().map(|r| json!({
            "grid": r.grid,
            "implied_constants": r.implied_constants,
        })),
    });
    document("verify", &body)
}

pub fn write_json<W: Write>(value: &Value, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asympt::check_mertens;
    use crate::parseval::{run_experiment, ExperimentConfig, PairSpec};

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(2.8125), "2.81250000000000e0");
        assert_eq!(fmt_num(-1.0 / 3.0), "-3.33333333333333e-1");
        assert_eq!(fmt_num(f64::NAN), "NaN");
        assert_eq!(fmt_num(0.0), "0.00000000000000e0");
    }

    #[test]
    fn experiment_outputs() {
        let cfg = ExperimentConfig::new(PairSpec::Sigma { s: 1.0, t: 1.0 }, 2, vec![100, 1000]);
        let run = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_experiment_csv(&run, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], EXPERIMENT_COLUMNS.join(","));
        assert!(lines[1].starts_with("100,2,1.00000000000000e0,"));

        let doc = experiment_json(&run).unwrap();
        assert_eq!(doc["schema_version"], "1");
        assert_eq!(doc["report"]["header"]["pair"], "sigma");
        assert_eq!(
            doc["report"]["cross_check"]["reference_name"],
            "corollary1_constant"
        );
        let mut out = Vec::new();
        write_json(&doc, &mut out).unwrap();
        let back: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn asympt_csv() {
        let mut buf = Vec::new();
        write_asympt_csv(&check_mertens(&[1, 10]).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "x,partial,model,normalized_deviation\n\
             1,1.00000000000000e0,0.00000000000000e0,1.00000000000000e0\n\
             10,-1.00000000000000e0,0.00000000000000e0,1.00000000000000e-1\n"
        );
    }

    #[test]
    fn rounding_applies_inside_documents() {
        let mut v = json!({"a": [1.0 / 3.0, 7], "b": {"c": 0.1 + 0.2}});
        round_numbers(&mut v);
        assert_eq!(v["a"][0].as_f64().unwrap(), 0.333333333333333);
        assert_eq!(v["a"][1], 7);
        assert_eq!(v["b"]["c"].as_f64().unwrap(), 0.3);
    }
}
