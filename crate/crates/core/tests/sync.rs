mod common;

use common::syncgen::{payload, snapshot};

use std::fs;

use curricula_core::corpus::module_rel_path;
use curricula_core::sync::{
    load_payloads, sync_root, Outcome, SyncError, SyncOptions, SYNC_LOCK_FILE,
    VERSION_FILE,
};
use curricula_core::{
    load_corpus, validate_all, FeatureMap, PathId, PersonaSchedule, RuleSet, SyncScope,
    UpdatePayload, Version,
};

fn sync_fixtures() -> std::path::PathBuf {
    common::fixtures_dir().join("sync")
}

fn fixture_inputs() -> (String, FeatureMap, Vec<UpdatePayload>) {
    let dir = sync_fixtures();
    (
        fs::read_to_string(dir.join("CHANGELOG.md")).unwrap(),
        FeatureMap::load(&dir.join("feature-map.txt")).unwrap(),
        load_payloads(&dir.join("payloads")).unwrap(),
    )
}

#[test]
fn full_sync_appends_updates_and_records_version() {
    let dir = common::golden_copy();
    let root = dir.path();
    let (changelog, fmap, payloads) = fixture_inputs();
    let before = load_corpus(root).unwrap();

    let plan = sync_root(root, &changelog, &fmap, &payloads, SyncScope::All, &SyncOptions::default()).unwrap();
    assert_eq!(plan.from_version, "2.12.0".parse::<Version>().unwrap());
    assert_eq!(plan.to_version, "2.14.0".parse::<Version>().unwrap());
    // Fixed and out-of-range entries are dropped; the voice entry has no rule.
    let texts: Vec<&str> = plan.entries.iter().map(|e| e.text.as_str()).collect();
    assert_eq!(texts.len(), 4, "{texts:?}");
    assert!(texts[0].ends_with("before context compaction runs"));
    assert_eq!(plan.mapping.unmapped.len(), 1);
    assert!(plan.mapping.unmapped[0].text.starts_with("Voice input"));
    assert_eq!(plan.ignored.len(), 1);
    assert_eq!(plan.ignored[0].name, "040-canvas-voice.md");
    assert_eq!(plan.count(Outcome::Updated), 7, "{}", plan.render_machine());
    assert!(!plan.any_reverted());
    assert_eq!(fs::read_to_string(root.join(VERSION_FILE)).unwrap().trim(), "2.14.0");
    assert!(!root.join(SYNC_LOCK_FILE).exists());

    let after = load_corpus(root).unwrap();
    for path in PathId::ALL {
        let old = before.module(path, 5).unwrap();
        let new = after.module(path, 5).unwrap();
        let at = old.checkpoint_offset.unwrap();
        assert_eq!(&new.raw_text.as_bytes()[..at], &old.raw_text.as_bytes()[..at]);
        assert!(new.raw_text.ends_with(&old.raw_text[at..]));
        assert_eq!(new.steps.len(), old.steps.len() + 1);
        assert_eq!(new.steps.last().unwrap().heading, "Catch compaction with PreCompact");
    }
    let nexus8 = after.module(PathId::Nexus, 8).unwrap();
    let n = before.module(PathId::Nexus, 8).unwrap().steps.len();
    assert_eq!(nexus8.steps.len(), n + 2);
    assert!(fs::read_to_string(root.join("context/hooks.md")).unwrap().contains("PreCompact"));
    let report = validate_all(&after, &PersonaSchedule::builtin(), &RuleSet::all());
    assert!(report.pass, "{}", report.render_text());

    // Second run finds no gap and changes nothing.
    let snap = snapshot(root);
    let again = sync_root(root, &changelog, &fmap, &payloads, SyncScope::All, &SyncOptions::default()).unwrap();
    assert!(again.entries.is_empty());
    assert!(again.files.is_empty());
    assert_eq!(snapshot(root), snap);
}

#[test]
fn scope_limits_module_files() {
    let dir = common::golden_copy();
    let root = dir.path();
    let (changelog, fmap, payloads) = fixture_inputs();
    let plan = sync_root(
        root,
        &changelog,
        &fmap,
        &payloads,
        SyncScope::Path(PathId::Canvas),
        &SyncOptions::default(),
    )
    .unwrap();
    let files: Vec<String> = plan.files.iter().map(|f| f.rel.display().to_string()).collect();
    assert_eq!(files, ["context/hooks.md", "projects/canvas/05-hooks.md"]);
    assert!(plan.ignored.iter().any(|i| i.name == "011-forge-hooks.md"));
    let golden = common::golden_dir();
    let forge = module_rel_path(PathId::Forge, 5);
    assert_eq!(fs::read(root.join(&forge)).unwrap(), fs::read(golden.join(&forge)).unwrap());
}

#[test]
fn dry_run_writes_nothing() {
    let dir = common::golden_copy();
    let root = dir.path();
    let (changelog, fmap, payloads) = fixture_inputs();
    let snap = snapshot(root);
    let opts = SyncOptions {
        dry_run: true,
        ..SyncOptions::default()
    };
    let plan = sync_root(root, &changelog, &fmap, &payloads, SyncScope::All, &opts).unwrap();
    assert_eq!(plan.count(Outcome::Updated), 7);
    assert!(plan.render_machine().lines().any(|l| l.starts_with("summary\t")));
    assert_eq!(snapshot(root), snap);
}

#[test]
fn held_sync_lock_refuses_to_run() {
    let dir = common::golden_copy();
    let root = dir.path();
    fs::write(root.join(SYNC_LOCK_FILE), "").unwrap();
    let (changelog, fmap, payloads) = fixture_inputs();
    let err = sync_root(root, &changelog, &fmap, &payloads, SyncScope::All, &SyncOptions::default()).unwrap_err();
    assert!(matches!(err, SyncError::LockHeld(_)));
}

#[test]
fn randomized_appends_keep_prefix_labels_and_validity() {
    common::syncgen::check_random_appends(7, 200);
}

#[test]
fn invalid_payloads_revert_byte_for_byte() {
    common::syncgen::check_fault_reverts(11, 200);
}

#[test]
fn revert_keeps_version_file() {
    let dir = common::golden_copy();
    let root = dir.path();
    let (changelog, fmap, mut payloads) = fixture_inputs();
    payloads.push(payload("099-bad.md", PathId::Forge, 5, "no heading here\n".into()));
    let plan = sync_root(root, &changelog, &fmap, &payloads, SyncScope::All, &SyncOptions::default()).unwrap();
    assert!(plan.any_reverted());
    let golden = common::golden_dir();
    let forge = module_rel_path(PathId::Forge, 5);
    assert_eq!(fs::read(root.join(&forge)).unwrap(), fs::read(golden.join(&forge)).unwrap());
    assert_eq!(fs::read_to_string(root.join(VERSION_FILE)).unwrap().trim(), "2.12.0");
}
