//! Corpus-level report rollup: per-validator pass/warn/fail rates, flag
//! frequencies, and a normalized flag co-occurrence matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::stages::{read_json, record_files};

const MATRIX_FLAG_LIMIT: usize = 12;

#[derive(Debug, Default)]
struct ValidatorTally {
    pass: u64,
    warn: u64,
    fail: u64,
}

/// Extract the validator-report map from one file: either a sidecar
/// report object or a record with embedded validator keys.
fn report_map(value: &Value) -> Map<String, Value> {
    let mut out = Map::new();
    if let Some(obj) = value.as_object() {
        for (key, v) in obj {
            if litforge_core::validate::VALIDATOR_NAMES.contains(&key.as_str())
                && v.get("status").is_some()
            {
                out.insert(key.clone(), v.clone());
            }
        }
    }
    out
}

/// Aggregate a directory of reports (sidecar or embedded) into a summary.
pub fn report_rollup(dir: &Path) -> anyhow::Result<Value> {
    let files = record_files(dir)?;
    let mut validators: BTreeMap<String, ValidatorTally> = BTreeMap::new();
    let mut flag_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut record_flags: Vec<BTreeSet<String>> = Vec::new();
    let mut records = 0u64;

    for path in &files {
        let value = read_json(path)?;
        let reports = report_map(&value);
        if reports.is_empty() {
            continue;
        }
        records += 1;
        let mut set_here = BTreeSet::new();
        for (validator, envelope) in &reports {
            let tally = validators.entry(validator.clone()).or_default();
            match envelope["status"].as_str() {
                Some("pass") => tally.pass += 1,
                Some("warn") => tally.warn += 1,
                Some("fail") => tally.fail += 1,
                _ => {}
            }
            if let Some(flags) = envelope.get("flags").and_then(Value::as_object) {
                for (flag, set) in flags {
                    if set.as_bool() == Some(true) {
                        *flag_counts.entry(flag.clone()).or_default() += 1;
                        set_here.insert(flag.clone());
                    }
                }
            }
        }
        record_flags.push(set_here);
    }

    let pct = |n: u64| {
        if records == 0 {
            0.0
        } else {
            (n as f64 / records as f64 * 1000.0).round() / 10.0
        }
    };
    let mut per_validator = Map::new();
    for (name, tally) in &validators {
        per_validator.insert(
            name.clone(),
            json!({
                "pass": tally.pass, "warn": tally.warn, "fail": tally.fail,
                "pass_pct": pct(tally.pass), "warn_pct": pct(tally.warn), "fail_pct": pct(tally.fail),
            }),
        );
    }

    // Top flags by frequency, then by name for determinism.
    let mut top_flags: Vec<(&String, &u64)> = flag_counts.iter().collect();
    top_flags.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let flag_frequencies: Vec<Value> =
        top_flags.iter().map(|(flag, count)| json!({"flag": flag, "count": count})).collect();

    // Jaccard co-occurrence over the most frequent flags: |a∧b| / |a∨b|.
    let matrix_flags: Vec<String> =
        top_flags.iter().take(MATRIX_FLAG_LIMIT).map(|(f, _)| (*f).clone()).collect();
    let mut matrix = Vec::with_capacity(matrix_flags.len());
    for a in &matrix_flags {
        let mut row = Vec::with_capacity(matrix_flags.len());
        for b in &matrix_flags {
            let both = record_flags.iter().filter(|s| s.contains(a) && s.contains(b)).count();
            let either = record_flags.iter().filter(|s| s.contains(a) || s.contains(b)).count();
            let value = if either == 0 { 0.0 } else { both as f64 / either as f64 };
            row.push(json!((value * 1000.0).round() / 1000.0));
        }
        matrix.push(json!(row));
    }

    Ok(json!({
        "records": records,
        "validators": per_validator,
        "flag_frequencies": flag_frequencies,
        "co_occurrence": {"flags": matrix_flags, "matrix": matrix},
    }))
}
