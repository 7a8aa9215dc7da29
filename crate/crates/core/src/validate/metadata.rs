//! Metadata completeness and consistency validation. Hard errors are
//! type mismatches; everything else (missing or empty fields, short
//! titles, date inconsistencies, publication-type problems, open-access
//! records without license evidence) is a warning.

use chrono::{Datelike, NaiveDate, Utc};
use serde_json::{json, Map, Value};

use crate::report::{Status, ValidationReport};

fn py_type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(n) if n.is_i64() || n.is_u64() => "int",
        Value::Number(_) => "float",
        Value::String(_) => "str",
        Value::Array(_) => "list",
        Value::Object(_) => "dict",
    }
}

#[derive(Default)]
struct Outcome {
    errors: Vec<String>,
    warnings: Vec<String>,
    missing_fields: Vec<String>,
    wrong_type_fields: Vec<String>,
    empty_fields: Vec<String>,
    malformed_authors: Vec<usize>,
    title_short: bool,
    year_mismatch: bool,
    future_date: bool,
    date_issue: Option<String>,
    no_chemistry_field: bool,
    oa_missing_licenses: Vec<String>,
}

impl Outcome {
    fn missing(&mut self, field: &str) {
        self.warnings.push(format!("missing:{field}"));
        self.missing_fields.push(field.to_string());
    }

    fn empty(&mut self, field: &str) {
        self.warnings.push(format!("empty:{field}"));
        self.empty_fields.push(field.to_string());
    }

    fn wrong_type(&mut self, field: &str, got: &Value, expected: &str) {
        self.errors.push(format!("type:{field}:{}_to_{expected}", py_type_name(got)));
        self.wrong_type_fields.push(field.to_string());
    }
}

fn is_empty_value(v: &Value) -> bool {
    match v {
        Value::String(s) => s.trim().is_empty(),
        Value::Array(a) => a.is_empty(),
        Value::Object(o) => o.is_empty(),
        _ => false,
    }
}

/// Check presence/typing of one field. Returns the value only when it is
/// present, non-null, and of the expected type.
fn checked<'v>(
    out: &mut Outcome,
    obj: &'v Map<String, Value>,
    field: &str,
    expected: &'static str,
    type_ok: impl Fn(&Value) -> bool,
) -> Option<&'v Value> {
    match obj.get(field) {
        None | Some(Value::Null) => {
            out.missing(field);
            None
        }
        Some(v) if !type_ok(v) => {
            out.wrong_type(field, v, expected);
            None
        }
        Some(v) => {
            if is_empty_value(v) {
                out.empty(field);
                None
            } else {
                Some(v)
            }
        }
    }
}

/// Validate bibliographic metadata on a raw record value.
pub fn validate_metadata(value: &Value) -> ValidationReport {
    let mut out = Outcome::default();
    let metadata = value.get("metadata").and_then(Value::as_object);

    if let Some(meta) = metadata {
        if let Some(title) =
            checked(&mut out, meta, "title", "str", Value::is_string).and_then(Value::as_str)
        {
            if title.chars().count() < 5 {
                out.title_short = true;
                out.warnings.push("title_short".into());
            }
        }

        if let Some(authors) =
            checked(&mut out, meta, "authors", "list", Value::is_array).and_then(Value::as_array)
        {
            for (i, author) in authors.iter().enumerate() {
                let ok = author.as_object().is_some_and(|a| {
                    a.get("name").and_then(Value::as_str).is_some_and(|n| !n.trim().is_empty())
                });
                if !ok {
                    out.malformed_authors.push(i);
                }
            }
            if !out.malformed_authors.is_empty() {
                out.warnings.push("authors_malformed".into());
            }
        }

        checked(&mut out, meta, "venue", "str", Value::is_string);

        let year = checked(&mut out, meta, "year", "int", |v| v.as_i64().is_some())
            .and_then(Value::as_i64);
        if let Some(y) = year {
            let current = Utc::now().year() as i64;
            if y < 1800 || y > current + 1 {
                out.warnings.push("year_out_of_range".into());
            }
        }

        match meta.get("publicationdate") {
            None | Some(Value::Null) => out.missing("publicationdate"),
            Some(Value::String(s)) if s.trim().is_empty() => out.empty("publicationdate"),
            Some(Value::String(s)) => match NaiveDate::parse_from_str(s, "%Y-%m-%d") {
                Ok(date) => {
                    if let Some(y) = year {
                        if date.year() as i64 != y {
                            out.year_mismatch = true;
                            out.warnings.push("year_vs_date".into());
                        }
                    }
                    if date > Utc::now().date_naive() {
                        out.future_date = true;
                        out.warnings.push("date_in_future".into());
                    }
                }
                Err(e) => {
                    out.date_issue = Some(format!("unparseable: {e}"));
                    out.warnings.push("date_bad_format".into());
                }
            },
            Some(other) => out.wrong_type("publicationdate", other, "str"),
        }

        match checked(&mut out, meta, "s2fieldsofstudy", "list", Value::is_array)
            .and_then(Value::as_array)
        {
            Some(fields) => {
                let has_chemistry = fields
                    .iter()
                    .any(|f| f.get("category").and_then(Value::as_str) == Some("Chemistry"));
                if !has_chemistry {
                    out.no_chemistry_field = true;
                    out.warnings.push("fos_no_chemistry".into());
                }
            }
            None => {
                out.no_chemistry_field = true;
                out.warnings.push("fos_no_chemistry".into());
            }
        }

        match meta.get("externalids") {
            None | Some(Value::Null) => {
                out.missing("externalids");
                out.warnings.push("externalids_empty".into());
            }
            Some(Value::Object(ids)) => {
                let all_empty = ids.values().all(|v| v.is_null() || is_empty_value(v));
                if ids.is_empty() || all_empty {
                    out.warnings.push("externalids_empty".into());
                }
            }
            Some(other) => out.wrong_type("externalids", other, "dict"),
        }

        if let Some(types) = meta.get("publicationtypes") {
            let bad = match types {
                Value::Null => false,
                Value::String(s) => s.trim().is_empty(),
                Value::Array(items) => items
                    .iter()
                    .any(|i| !i.as_str().is_some_and(|s| !s.trim().is_empty())),
                _ => true,
            };
            if bad {
                out.warnings.push("pubtypes_bad_item".into());
            }
        }

        for field in ["referencecount", "citationcount", "influentialcitationcount"] {
            if let Some(v) = meta.get(field) {
                if !v.is_null() && v.as_i64().is_none() {
                    out.wrong_type(field, v, "int");
                }
            }
        }

        if meta.get("isopenaccess").and_then(Value::as_bool) == Some(true) {
            let mut absent = Vec::new();
            for (slot, source) in [
                ("unpaywall_license", "unpaywall"),
                ("crossref_license", "crossref"),
                ("openalex_license", "openalex"),
            ] {
                match value.get(slot) {
                    None | Some(Value::Null) => absent.push(source.to_string()),
                    Some(_) => {}
                }
            }
            if absent.len() == 3 {
                out.oa_missing_licenses = absent;
                out.warnings.push("oa_missing_licenses".into());
            }
        }
    } else {
        out.missing("metadata");
    }

    let status = if !out.errors.is_empty() {
        Status::Fail
    } else if !out.warnings.is_empty() {
        Status::Warn
    } else {
        Status::Pass
    };

    let mut report =
        ValidationReport::new("metadata_validation", status, "Metadata field & content validation");
    for name in out.errors.iter().chain(&out.warnings) {
        report.flag(name.clone(), true);
    }
    report.metric("error_count", out.errors.len());
    report.metric("warning_count", out.warnings.len());
    report.metric("errors", json!(out.errors));
    report.metric("warnings", json!(out.warnings));
    report.metric(
        "diagnostics",
        json!({
            "missing_fields": out.missing_fields,
            "wrong_type_fields": out.wrong_type_fields,
            "empty_fields": out.empty_fields,
            "malformed_authors": out.malformed_authors,
            "title_short": out.title_short,
            "year_mismatch": out.year_mismatch,
            "future_date": out.future_date,
            "date_issue": out.date_issue,
            "no_chemistry_field": out.no_chemistry_field,
            "oa_missing_licenses": out.oa_missing_licenses,
        }),
    );
    report
}
