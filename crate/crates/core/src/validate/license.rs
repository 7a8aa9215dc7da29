//! License validation: wraps normalization, the agreement rule, and the
//! retention screen into the report envelope. The metrics object is
//! emitted in a fixed key order so reports diff cleanly.

use serde_json::{json, Value};

use crate::license::{
    resolve_from_slots, screen_record, CanonicalLicense, Screening, Source,
};
use crate::report::{Status, ValidationReport};

pub const SUMMARY: &str = "Checks licence consistency and open-access compliance.";

/// Validate a record's three license slots against the agreement rule and
/// the allowed set.
pub fn validate_license(value: &Value, allowed: &[CanonicalLicense]) -> ValidationReport {
    let slot = |key: &str| match value.get(key) {
        None | Some(Value::Null) => None,
        Some(v) => Some(v),
    };
    let resolved = resolve_from_slots(
        slot("crossref_license"),
        slot("unpaywall_license"),
        slot("openalex_license"),
    );
    let screening = screen_record(&resolved, allowed);
    let status = match screening {
        Screening::Retain => Status::Pass,
        Screening::Exclude => Status::Fail,
    };

    let mut report = ValidationReport::new("license_validation", status, SUMMARY);
    for source in Source::ALL {
        if resolved.inputs.get(source) == CanonicalLicense::Missing {
            report.flag(format!("missing_license_{source}"), true);
        }
    }
    if Source::ALL.iter().any(|s| resolved.inputs.get(*s) == CanonicalLicense::Unknown) {
        report.flag("unknown_license", true);
    }
    report.flag("license_conflict", resolved.conflict);

    report.metric("resolved_license", resolved.resolved.clone());
    report.metric("license_source", resolved.source_expr());
    report.metric("license_conflict", resolved.conflict);
    report.metric(
        "input_licenses",
        json!({
            "crossref": resolved.inputs.crossref.id(),
            "unpaywall": resolved.inputs.unpaywall.id(),
            "openalex": resolved.inputs.openalex.id(),
        }),
    );
    report
}
