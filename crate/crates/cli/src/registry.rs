//! Which subcommand exposes each engine operation.

/// `(module, operation, subcommand)`. Nested subcommands are written with a
/// space, as typed on the command line.
pub const OPERATIONS: &[(&str, &str, &str)] = &[
    ("corpus", "parse_module", "validate"),
    ("corpus", "load_corpus", "validate"),
    ("validator", "validate_completeness", "validate"),
    ("validator", "validate_structure", "validate"),
    ("validator", "validate_parity", "validate"),
    ("validator", "validate_schedules", "validate"),
    ("validator", "validate_all", "validate"),
    ("persona", "persona_for", "inject-context"),
    ("persona", "shift_level", "adapt-boundary"),
    ("engagement", "classify", "observe"),
    ("engagement", "update_profile", "observe"),
    ("engagement", "compute_trend", "observe"),
    ("engagement", "observe", "observe"),
    ("adaptation", "make_note", "inject-context"),
    ("adaptation", "decide_boundary", "adapt-boundary"),
    ("adaptation", "apply_boundary", "adapt-boundary"),
    ("session", "advance", "onboard advance"),
    ("session", "status", "onboard status"),
    ("session", "resume_check", "onboard resume-check"),
    ("session", "record_step", "track-step"),
    ("session", "pre_advance_check", "pre-advance"),
    ("sync", "detect_gap", "sync"),
    ("sync", "triage", "sync"),
    ("sync", "map_entries", "sync"),
    ("sync", "apply_update", "sync"),
    ("sync", "run_sync", "sync"),
];

/// The table as shown at the end of `--help`.
pub fn render() -> String {
    let mut out = String::from("Operations by subcommand:\n");
    for (module, op, sub) in OPERATIONS {
        out.push_str(&format!("  {sub:<22} {module}::{op}\n"));
    }
    out
}
