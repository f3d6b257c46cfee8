//! Changelog-driven curriculum updates: version gap, triage, feature
//! mapping, safe-append application, verification and revert.

mod changelog;
mod feature_map;
mod payload;
mod version;

pub use changelog::{latest_version, parse_changelog, triage, ChangelogEntry, ChangelogError, Section};
pub use feature_map::{map_entries, FeatureMap, FeatureMapError, FeatureRule, Mapping, Pattern, Targets};
pub use payload::{
    apply_update, load_payloads, Applied, ApplyError, PayloadError, PayloadTarget, UpdatePayload,
};
pub use version::{detect_gap, BadVersion, Version, VersionRange};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{load_corpus, module_rel_path, parse_module, Corpus, CorpusError, ModuleDoc, PathId};
use crate::fsutil::{atomic_write, FileLock, LockAttempt, DEFAULT_STALE_AFTER};
use crate::validator::validate_structure;

/// File under the corpus root holding the last-synced version.
pub const VERSION_FILE: &str = "CURRICULUM_VERSION";
pub const SYNC_LOCK_FILE: &str = ".curricula-sync.lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncScope {
    Path(PathId),
    All,
}

impl SyncScope {
    pub fn includes(self, path: PathId) -> bool {
        match self {
            SyncScope::All => true,
            SyncScope::Path(p) => p == path,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Updated,
    Reverted,
    Unchanged,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Updated => "updated",
            Outcome::Reverted => "reverted",
            Outcome::Unchanged => "unchanged",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileResult {
    /// Path relative to the corpus root.
    pub rel: PathBuf,
    pub outcome: Outcome,
    pub payloads: Vec<String>,
    /// Why the file was reverted.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IgnoredPayload {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncPlan {
    pub from_version: Version,
    pub to_version: Version,
    pub entries: Vec<ChangelogEntry>,
    pub mapping: Mapping,
    pub ignored: Vec<IgnoredPayload>,
    pub files: Vec<FileResult>,
    pub dry_run: bool,
}

impl SyncPlan {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.files.iter().filter(|f| f.outcome == outcome).count()
    }

    pub fn any_reverted(&self) -> bool {
        self.count(Outcome::Reverted) > 0
    }

    /// Tab-separated report, one record per line.
    pub fn render_machine(&self) -> String {
        let mut out = format!("range\t{}\t{}\n", self.from_version, self.to_version);
        for (e, t) in &self.mapping.mapped {
            let modules: Vec<String> = t.modules.iter().map(u8::to_string).collect();
            out.push_str(&format!(
                "entry\t{}\t{}\t{}\tmodules={}\tcontext={}\n",
                e.version,
                e.section,
                clean(&e.text),
                modules.join(","),
                t.context_files.join(",")
            ));
        }
        for e in &self.mapping.unmapped {
            out.push_str(&format!("entry\t{}\t{}\t{}\tunmapped\n", e.version, e.section, clean(&e.text)));
        }
        for i in &self.ignored {
            out.push_str(&format!("ignored\t{}\t{}\n", i.name, clean(&i.reason)));
        }
        for f in &self.files {
            out.push_str(&format!("file\t{}\t{}", slash(&f.rel), f.outcome));
            if let Some(d) = &f.detail {
                out.push('\t');
                out.push_str(&clean(d));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "summary\tupdated={}\treverted={}\tunchanged={}\tdry_run={}\n",
            self.count(Outcome::Updated),
            self.count(Outcome::Reverted),
            self.count(Outcome::Unchanged),
            self.dry_run
        ));
        out
    }
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn slash(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("another sync holds {0}")]
    LockHeld(PathBuf),
    #[error("cannot take sync lock: {0}")]
    Lock(#[source] io::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Changelog(#[from] ChangelogError),
    #[error(transparent)]
    Version(#[from] BadVersion),
    #[error("no last-synced version: {0} is missing and no --from was given")]
    NoFromVersion(PathBuf),
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, #[source] io::Error),
    #[error("cannot write {0}: {1}")]
    Write(PathBuf, #[source] io::Error),
}

/// Resolved version range and mode for one [`run_sync`] call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSpec {
    pub from: Version,
    pub to: Version,
    pub dry_run: bool,
}

/// Caller overrides for [`sync_root`].
#[derive(Debug, Clone, Default)]
pub struct SyncOptions {
    pub from: Option<Version>,
    pub to: Option<Version>,
    pub dry_run: bool,
}

/// Checks that `new` differs from `old` only by text inserted at
/// `inserted` and that the insertion kept the document well formed.
pub fn verify_append(
    old: &ModuleDoc,
    new: &ModuleDoc,
    inserted: &std::ops::Range<usize>,
) -> Result<(), String> {
    let (o, n) = (old.raw_text.as_bytes(), new.raw_text.as_bytes());
    let at = inserted.start;
    if n.len() != o.len() + inserted.len()
        || n[..at] != o[..at]
        || n[inserted.end..] != o[at..]
    {
        return Err("bytes outside the insertion changed".into());
    }
    let key = |v: &crate::validator::Violation| (v.rule_id, v.message.clone());
    let before: BTreeSet<_> = validate_structure(old).iter().map(key).collect();
    if let Some(v) = validate_structure(new).iter().find(|v| !before.contains(&key(v))) {
        return Err(format!("{}: {}", v.rule_id, v.message));
    }
    let prior: Vec<_> = old.steps.iter().map(|s| (s.step_index, &s.heading)).collect();
    let kept: Vec<_> = new.steps.iter().take(prior.len()).map(|s| (s.step_index, &s.heading)).collect();
    if prior != kept {
        return Err("existing step labels changed".into());
    }
    for (i, s) in new.steps.iter().enumerate() {
        if s.module_number != new.number || s.step_index as usize != i + 1 {
            return Err(format!("step numbering broken at {}", s.label()));
        }
    }
    if new.checkpoint_offset != old.checkpoint_offset.map(|c| c + inserted.len()) {
        return Err("checkpoint moved".into());
    }
    if !new.checkpoint_is_terminal() {
        return Err("checkpoint is no longer terminal".into());
    }
    if new.stop_count < old.stop_count {
        return Err("STOP blocks lost".into());
    }
    Ok(())
}

enum Work<'a> {
    Module(&'a ModuleDoc),
    Context,
}

fn file_key(target: &PayloadTarget) -> PathBuf {
    match target {
        PayloadTarget::Module { path, number } => module_rel_path(*path, *number),
        PayloadTarget::Context(name) => Path::new("context").join(name),
    }
}

fn read_optional(path: &Path) -> Result<Option<Vec<u8>>, io::Error> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn restore(path: &Path, original: &Option<Vec<u8>>) -> io::Result<()> {
    match original {
        Some(bytes) => atomic_write(path, bytes),
        None => match fs::remove_file(path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
            _ => Ok(()),
        },
    }
}

/// Applies payloads to the corpus on disk and reports the outcome per file.
///
/// Only payloads whose targets are mapped from in-gap changelog entries and
/// fall inside `scope` are applied; the rest are listed as ignored. Each
/// file is applied and verified in memory, written atomically, re-read and
/// verified again; any failure restores the original bytes.
pub fn run_sync(
    corpus: &Corpus,
    changelog: &str,
    fmap: &FeatureMap,
    payloads: &[UpdatePayload],
    scope: SyncScope,
    run: RunSpec,
) -> Result<SyncPlan, SyncError> {
    let RunSpec { from, to, dry_run } = run;
    let entries = match detect_gap(&from.to_string(), &to.to_string())? {
        Some(gap) => triage(changelog, &gap)?,
        None => {
            parse_changelog(changelog)?;
            Vec::new()
        }
    };
    let mapping = map_entries(&entries, fmap);

    let mut allowed_modules = BTreeSet::new();
    let mut allowed_context = BTreeSet::new();
    for (_, t) in &mapping.mapped {
        allowed_modules.extend(t.modules.iter().copied());
        allowed_context.extend(t.context_files.iter().cloned());
    }

    let mut ignored = Vec::new();
    let mut groups: BTreeMap<PathBuf, Vec<&UpdatePayload>> = BTreeMap::new();
    for p in payloads {
        let reason = match &p.target {
            PayloadTarget::Module { path, number } => {
                if !allowed_modules.contains(number) {
                    Some(format!("module {number} is not mapped from any entry in range"))
                } else if !scope.includes(*path) {
                    Some(format!("path {path} is outside the sync scope"))
                } else {
                    None
                }
            }
            PayloadTarget::Context(name) => (!allowed_context.contains(name))
                .then(|| format!("context file {name} is not mapped from any entry in range")),
        };
        match reason {
            Some(reason) => ignored.push(IgnoredPayload {
                name: p.name.clone(),
                reason,
            }),
            None => groups.entry(file_key(&p.target)).or_default().push(p),
        }
    }

    let mut files = Vec::new();
    for (rel, group) in groups {
        let names = group.iter().map(|p| p.name.clone()).collect();
        let work = match &group[0].target {
            PayloadTarget::Module { path, number } => match corpus.module(*path, *number) {
                Some(doc) => Work::Module(doc),
                None => {
                    files.push(FileResult {
                        rel,
                        outcome: Outcome::Reverted,
                        payloads: names,
                        detail: Some("module file is not loaded".into()),
                    });
                    continue;
                }
            },
            PayloadTarget::Context(_) => Work::Context,
        };
        let abs = corpus.root.join(&rel);
        let (outcome, detail) = match work {
            Work::Module(doc) => sync_module(doc, &group, &abs, dry_run, atomic_write),
            Work::Context => sync_context(&group, &abs, dry_run, atomic_write),
        };
        files.push(FileResult {
            rel,
            outcome,
            payloads: names,
            detail,
        });
    }

    Ok(SyncPlan {
        from_version: from,
        to_version: to,
        entries,
        mapping,
        ignored,
        files,
        dry_run,
    })
}

/// How a verified file reaches disk; swapped out in tests to inject faults.
type Writer = fn(&Path, &[u8]) -> io::Result<()>;

fn sync_module(
    doc: &ModuleDoc,
    group: &[&UpdatePayload],
    abs: &Path,
    dry_run: bool,
    write: Writer,
) -> (Outcome, Option<String>) {
    let mut current = doc.clone();
    for p in group {
        match apply_update(&current, p) {
            Ok(a) => current = a.doc,
            Err(e) => return (Outcome::Reverted, Some(format!("{}: {e}", p.name))),
        }
    }
    if current.raw_text == doc.raw_text {
        return (Outcome::Unchanged, None);
    }
    let at = doc.checkpoint_offset.expect("apply succeeded, so a checkpoint exists");
    let inserted = at..at + (current.raw_text.len() - doc.raw_text.len());
    if let Err(e) = verify_append(doc, &current, &inserted) {
        return (Outcome::Reverted, Some(e));
    }
    if dry_run {
        return (Outcome::Updated, None);
    }
    let original = Some(doc.raw_text.as_bytes().to_vec());
    let check = || -> Result<(), String> {
        write(abs, current.raw_text.as_bytes()).map_err(|e| format!("write failed: {e}"))?;
        let back = fs::read_to_string(abs).map_err(|e| format!("re-read failed: {e}"))?;
        let reparsed = parse_module(&back, doc.path, doc.number).doc;
        verify_append(doc, &reparsed, &inserted)
    };
    match check() {
        Ok(()) => (Outcome::Updated, None),
        Err(e) => revert(abs, &original, e),
    }
}

fn revert(abs: &Path, original: &Option<Vec<u8>>, reason: String) -> (Outcome, Option<String>) {
    match restore(abs, original) {
        Ok(()) => (Outcome::Reverted, Some(reason)),
        Err(e) => (Outcome::Reverted, Some(format!("{reason}; restore failed: {e}"))),
    }
}

fn sync_context(
    group: &[&UpdatePayload],
    abs: &Path,
    dry_run: bool,
    write: Writer,
) -> (Outcome, Option<String>) {
    let original = match read_optional(abs) {
        Ok(o) => o,
        Err(e) => return (Outcome::Reverted, Some(format!("read failed: {e}"))),
    };
    let content = &group.last().expect("groups are non-empty").content;
    if content.trim().is_empty() {
        return (Outcome::Reverted, Some("replacement context text is empty".into()));
    }
    if original.as_deref() == Some(content.as_bytes()) {
        return (Outcome::Unchanged, None);
    }
    if dry_run {
        return (Outcome::Updated, None);
    }
    let check = || -> Result<(), String> {
        write(abs, content.as_bytes()).map_err(|e| format!("write failed: {e}"))?;
        let back = fs::read(abs).map_err(|e| format!("re-read failed: {e}"))?;
        if back != content.as_bytes() {
            return Err("re-read bytes differ".into());
        }
        Ok(())
    };
    match check() {
        Ok(()) => (Outcome::Updated, None),
        Err(e) => revert(abs, &original, e),
    }
}

/// Full sync against a corpus root: takes the sync lock, resolves the
/// version range from the version file and changelog (unless overridden),
/// runs [`run_sync`], and records the new version when nothing reverted.
pub fn sync_root(
    root: &Path,
    changelog: &str,
    fmap: &FeatureMap,
    payloads: &[UpdatePayload],
    scope: SyncScope,
    opts: &SyncOptions,
) -> Result<SyncPlan, SyncError> {
    let lock_path = root.join(SYNC_LOCK_FILE);
    let _lock = match FileLock::try_acquire(&lock_path, DEFAULT_STALE_AFTER) {
        Ok(LockAttempt::Acquired(l)) => l,
        Ok(LockAttempt::Held) => return Err(SyncError::LockHeld(lock_path)),
        Err(e) => return Err(SyncError::Lock(e)),
    };
    let version_path = root.join(VERSION_FILE);
    let from = match &opts.from {
        Some(v) => v.clone(),
        None => match fs::read_to_string(&version_path) {
            Ok(s) => s.trim().parse()?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(SyncError::NoFromVersion(version_path))
            }
            Err(e) => return Err(SyncError::Read(version_path, e)),
        },
    };
    let to = match &opts.to {
        Some(v) => v.clone(),
        None => latest_version(changelog)?,
    };
    let corpus = load_corpus(root)?;
    let run = RunSpec {
        from: from.clone(),
        to: to.clone(),
        dry_run: opts.dry_run,
    };
    let plan = run_sync(&corpus, changelog, fmap, payloads, scope, run)?;
    if !opts.dry_run && !plan.any_reverted() && to > from {
        atomic_write(&version_path, format!("{to}\n").as_bytes())
            .map_err(|e| SyncError::Write(version_path.clone(), e))?;
    }
    Ok(plan)
}
