//! Randomized sync inputs: well-formed appends and payloads that must revert.

use std::fs;
use std::path::{Path, PathBuf};

use curricula_core::corpus::module_rel_path;
use curricula_core::sync::{Outcome, PayloadTarget, RunSpec, VERSION_FILE};
use curricula_core::validator::validate_structure_with;
use curricula_core::{
    load_corpus, run_sync, validate_all, FeatureMap, PathId, PersonaSchedule, RuleSet, SyncScope, UpdatePayload,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

/// Every file under `root` with its bytes, sorted by relative path.
pub fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = walkdir::WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(root).unwrap().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

/// Numbered rules so every module can be targeted from one changelog.
pub fn synthetic_inputs() -> (String, FeatureMap) {
    let mut changelog = String::from("## [9.0.0]\n\n### Added\n");
    let mut fmap = String::new();
    for m in 1..=10 {
        changelog.push_str(&format!("- topic-{m:02} learns a new trick\n"));
        fmap.push_str(&format!("topic-{m:02} | {m} |\n"));
    }
    (changelog, FeatureMap::parse(&fmap).unwrap())
}

const WORDS: [&str; 12] = [
    "hook", "matcher", "agent", "context", "session", "rule", "server", "test", "prompt", "skill", "memory", "guard",
];

fn phrase(rng: &mut StdRng, words: std::ops::Range<usize>) -> String {
    let n = rng.gen_range(words);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

pub fn random_content(rng: &mut StdRng) -> String {
    let mut out = String::new();
    for _ in 0..rng.gen_range(1..=3) {
        out.push_str(&format!("## {}\n\n", phrase(rng, 2..6)));
        for _ in 0..rng.gen_range(0..4) {
            match rng.gen_range(0..4) {
                0 => out.push_str(&format!("```bash\n## {}\necho ok\n```\n\n", phrase(rng, 2..3))),
                1 => out.push_str(&format!("**STOP** -- {}\n\n", phrase(rng, 4..5))),
                _ => out.push_str(&format!("{}.\n\n", phrase(rng, 3..12))),
            }
        }
    }
    out
}

/// Payloads that must never reach disk.
pub fn faulty_content(rng: &mut StdRng, number: u8, bold: bool) -> String {
    match rng.gen_range(0..4) {
        // Prose with no heading to hang a step on.
        0 => format!("{}.\n", phrase(rng, 6..7)),
        // A fence left open swallows the checkpoint.
        1 => format!("## {}\n\n```bash\necho {}\n", phrase(rng, 3..4), phrase(rng, 2..3)),
        // A line that parses as an out-of-sequence step.
        2 if bold => format!("## {}\n\n**{number}.1 again**\n", phrase(rng, 3..4)),
        2 => format!("## {}\n\n### {number}.1 again\n", phrase(rng, 3..4)),
        // A second checkpoint heading ahead of the real one.
        _ => format!("## {}\n\n#### Checkpoint notes\n\n- {}\n", phrase(rng, 3..4), phrase(rng, 2..4)),
    }
}

pub fn payload(name: &str, path: PathId, number: u8, content: String) -> UpdatePayload {
    UpdatePayload {
        name: name.to_string(),
        target: PayloadTarget::Module { path, number },
        version: None,
        section: None,
        entry: None,
        content,
    }
}

pub fn spec() -> RunSpec {
    RunSpec {
        from: "8.0.0".parse().unwrap(),
        to: "9.0.0".parse().unwrap(),
        dry_run: false,
    }
}

/// `pairs` random (module, payload) appends on a golden copy: the prefix up to
/// the checkpoint is untouched, existing labels keep their place and every
/// result validates.
pub fn check_random_appends(seed: u64, pairs: usize) {
    let dir = super::golden_copy();
    let root = dir.path();
    let (changelog, fmap) = synthetic_inputs();
    let schedule = PersonaSchedule::builtin();
    let mut rng = StdRng::seed_from_u64(seed);
    for i in 0..pairs {
        let path = *PathId::ALL.choose(&mut rng).unwrap();
        let number = rng.gen_range(1..=10u8);
        let before = load_corpus(root).unwrap();
        let old = before.module(path, number).unwrap().clone();
        let p = payload(&format!("p{i}"), path, number, random_content(&mut rng));

        let plan = run_sync(&before, &changelog, &fmap, &[p], SyncScope::All, spec()).unwrap();
        assert_eq!(plan.files.len(), 1);
        assert_eq!(plan.files[0].outcome, Outcome::Updated, "{i}: {:?}", plan.files[0].detail);

        let bytes = fs::read(root.join(module_rel_path(path, number))).unwrap();
        let at = old.checkpoint_offset.unwrap();
        assert_eq!(&bytes[..at], &old.raw_text.as_bytes()[..at], "prefix changed in pair {i}");
        assert!(bytes.ends_with(&old.raw_text.as_bytes()[at..]), "checkpoint changed in pair {i}");

        let after = load_corpus(root).unwrap();
        let new = after.module(path, number).unwrap();
        let old_labels: Vec<_> = old.steps.iter().map(|s| (s.label(), s.heading.clone())).collect();
        let new_labels: Vec<_> = new.steps.iter().map(|s| (s.label(), s.heading.clone())).collect();
        assert!(new_labels.len() > old_labels.len());
        assert_eq!(&new_labels[..old_labels.len()], old_labels.as_slice(), "labels moved in pair {i}");
        assert!(new.stop_count >= old.stop_count);
        assert!(validate_structure_with(new, &schedule).is_empty(), "pair {i}");
    }
    let report = validate_all(&load_corpus(root).unwrap(), &schedule, &RuleSet::all());
    assert!(report.pass, "{}", report.render_text());
}

/// `groups` payload groups that each end in a faulty payload: every group is
/// reverted and the tree stays byte-identical.
pub fn check_fault_reverts(seed: u64, groups: usize) {
    let dir = super::golden_copy();
    let root = dir.path();
    let (changelog, fmap) = synthetic_inputs();
    let mut rng = StdRng::seed_from_u64(seed);
    let corpus = load_corpus(root).unwrap();
    let snap = snapshot(root);
    for i in 0..groups {
        let path = *PathId::ALL.choose(&mut rng).unwrap();
        let number = rng.gen_range(1..=10u8);
        let bold = corpus.module(path, number).unwrap().step_style.lead == "**";
        let mut group = Vec::new();
        if rng.gen_bool(0.5) {
            group.push(payload(&format!("a{i}"), path, number, random_content(&mut rng)));
        }
        group.push(payload(&format!("b{i}"), path, number, faulty_content(&mut rng, number, bold)));

        let plan = run_sync(&corpus, &changelog, &fmap, &group, SyncScope::All, spec()).unwrap();
        assert_eq!(plan.files.len(), 1);
        assert_eq!(plan.files[0].outcome, Outcome::Reverted, "{i}: {:?}", group.last().unwrap().content);
        assert!(plan.files[0].detail.is_some());
        assert_eq!(snapshot(root), snap, "group {i} left changes behind");
    }
    let version = root.join(VERSION_FILE);
    assert!(!version.exists() || fs::read_to_string(version).unwrap().trim() == "2.12.0");
}
