//! Structural invariant suite over a loaded corpus and a persona schedule.
//!
//! Every rule reports; none mutates. Reports are sorted by
//! `(rule_id, path, module, message)` so output is stable regardless of the
//! order rules ran in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{module_rel_path, Corpus, LoadIssue, ModuleDoc, PathId};
use crate::persona::{persona_for, ExperienceLevel, Persona, PersonaError, PersonaSchedule};

/// Closed registry of rule identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    EmptyContextFile,
    ExtraModule,
    FeatureParity,
    H1Mismatch,
    HookScriptMissing,
    MissingCheckpoint,
    MissingDirectory,
    MissingFeatures,
    MissingH1,
    MissingModule,
    MissingPersona,
    PersonaMismatch,
    PersonaRegression,
    ScheduleGap,
    ScheduleOverlap,
    SkillFrontmatter,
    StepNumbering,
    UnreadableFile,
}

impl RuleId {
    pub const ALL: [RuleId; 18] = [
        RuleId::EmptyContextFile,
        RuleId::ExtraModule,
        RuleId::FeatureParity,
        RuleId::H1Mismatch,
        RuleId::HookScriptMissing,
        RuleId::MissingCheckpoint,
        RuleId::MissingDirectory,
        RuleId::MissingFeatures,
        RuleId::MissingH1,
        RuleId::MissingModule,
        RuleId::MissingPersona,
        RuleId::PersonaMismatch,
        RuleId::PersonaRegression,
        RuleId::ScheduleGap,
        RuleId::ScheduleOverlap,
        RuleId::SkillFrontmatter,
        RuleId::StepNumbering,
        RuleId::UnreadableFile,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::EmptyContextFile => "empty_context_file",
            RuleId::ExtraModule => "extra_module",
            RuleId::FeatureParity => "feature_parity",
            RuleId::H1Mismatch => "h1_mismatch",
            RuleId::HookScriptMissing => "hook_script_missing",
            RuleId::MissingCheckpoint => "missing_checkpoint",
            RuleId::MissingDirectory => "missing_directory",
            RuleId::MissingFeatures => "missing_features",
            RuleId::MissingH1 => "missing_h1",
            RuleId::MissingModule => "missing_module",
            RuleId::MissingPersona => "missing_persona",
            RuleId::PersonaMismatch => "persona_mismatch",
            RuleId::PersonaRegression => "persona_regression",
            RuleId::ScheduleGap => "schedule_gap",
            RuleId::ScheduleOverlap => "schedule_overlap",
            RuleId::SkillFrontmatter => "skill_frontmatter",
            RuleId::StepNumbering => "step_numbering",
            RuleId::UnreadableFile => "unreadable_file",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown rule id {0:?}")]
pub struct UnknownRule(pub String);

impl FromStr for RuleId {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.as_str() == s.trim())
            .ok_or_else(|| UnknownRule(s.to_string()))
    }
}

/// Which rules a run checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet(BTreeSet<RuleId>);

impl Default for RuleSet {
    fn default() -> Self {
        Self::all()
    }
}

impl RuleSet {
    pub fn all() -> Self {
        Self(RuleId::ALL.into_iter().collect())
    }

    pub fn only(rules: impl IntoIterator<Item = RuleId>) -> Self {
        Self(rules.into_iter().collect())
    }

    /// Comma-separated rule ids.
    pub fn parse_list(list: &str) -> Result<Self, UnknownRule> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<BTreeSet<_>, _>>()
            .map(Self)
    }

    pub fn without(mut self, rule: RuleId) -> Self {
        self.0.remove(&rule);
        self
    }

    pub fn contains(&self, rule: RuleId) -> bool {
        self.0.contains(&rule)
    }

    pub fn iter(&self) -> impl Iterator<Item = RuleId> + '_ {
        self.0.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Location {
    pub file: PathBuf,
    /// 1-based; `None` when the violation is about an absence.
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule_id: RuleId,
    pub path: Option<PathId>,
    pub module: Option<u8>,
    pub message: String,
    pub location: Option<Location>,
}

impl Violation {
    fn new(rule_id: RuleId, message: impl Into<String>) -> Self {
        Self {
            rule_id,
            path: None,
            module: None,
            message: message.into(),
            location: None,
        }
    }

    fn at(mut self, path: PathId, module: u8) -> Self {
        self.path = Some(path);
        self.module = Some(module);
        self
    }

    fn located(mut self, file: PathBuf, line: Option<usize>) -> Self {
        self.location = Some(Location { file, line });
        self
    }

    fn sort_key(&self) -> (&'static str, Option<PathId>, Option<u8>, &str, Option<&Location>) {
        (
            self.rule_id.as_str(),
            self.path,
            self.module,
            &self.message,
            self.location.as_ref(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub checked_rules: Vec<RuleId>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn rule_ids(&self) -> Vec<RuleId> {
        self.violations.iter().map(|v| v.rule_id).collect()
    }

    /// One record per line, tab-separated:
    /// `violation <rule> <path|-> <module|-> <file[:line]|-> <message>`,
    /// then `checked <rules>` and `result pass|fail <count>`.
    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            out.push_str(&format!(
                "violation\t{}\t{}\t{}\t{}\t{}\n",
                v.rule_id,
                v.path.map_or("-".to_string(), |p| p.to_string()),
                v.module.map_or("-".to_string(), |m| m.to_string()),
                v.location.as_ref().map_or("-".to_string(), render_location),
                v.message.replace(['\t', '\n'], " "),
            ));
        }
        let checked: Vec<&str> = self.checked_rules.iter().map(|r| r.as_str()).collect();
        out.push_str(&format!("checked\t{}\n", checked.join(",")));
        out.push_str(&format!(
            "result\t{}\t{}\n",
            if self.pass { "pass" } else { "fail" },
            self.violations.len()
        ));
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            let loc = v
                .location
                .as_ref()
                .map_or(String::new(), |l| format!("{}: ", render_location(l)));
            out.push_str(&format!("{loc}[{}] {}\n", v.rule_id, v.message));
        }
        if self.pass {
            out.push_str(&format!("ok: {} rules checked, no violations\n", self.checked_rules.len()));
        } else {
            out.push_str(&format!("FAILED: {} violation(s)\n", self.violations.len()));
        }
        out
    }
}

fn render_location(l: &Location) -> String {
    match l.line {
        Some(n) => format!("{}:{}", l.file.display(), n),
        None => l.file.display().to_string(),
    }
}

/// Missing or unexpected files, unreadable files, and empty context docs.
pub fn validate_completeness(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    for issue in &corpus.issues {
        let v = match issue {
            LoadIssue::MissingModule { path, number } => {
                let rel = module_rel_path(*path, *number);
                Violation::new(
                    RuleId::MissingModule,
                    format!("missing module file {}/{}", path, file_name(&rel)),
                )
                .at(*path, *number)
                .located(rel, None)
            }
            LoadIssue::UnexpectedFile { rel, path } => {
                let mut v = Violation::new(RuleId::ExtraModule, format!("unexpected file {}", rel.display()))
                    .located(rel.clone(), None);
                v.path = *path;
                v
            }
            LoadIssue::Unreadable { rel, message } => {
                Violation::new(RuleId::UnreadableFile, format!("unreadable file {}: {message}", rel.display()))
                    .located(rel.clone(), None)
            }
            LoadIssue::MissingDirectory(rel) => {
                // A missing project directory already yields ten missing_module records.
                if rel.starts_with("projects") && rel != Path::new("projects") {
                    continue;
                }
                Violation::new(RuleId::MissingDirectory, format!("missing directory {}", rel.display()))
                    .located(rel.clone(), None)
            }
        };
        out.push(v);
    }
    for ctx in &corpus.context_files {
        if ctx.len == 0 {
            out.push(
                Violation::new(RuleId::EmptyContextFile, format!("context file {} is empty", ctx.name))
                    .located(Path::new("context").join(&ctx.name), None),
            );
        }
    }
    out
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Per-document checks, with persona defaults taken from the built-in
/// intermediate schedule.
pub fn validate_structure(doc: &ModuleDoc) -> Vec<Violation> {
    validate_structure_with(doc, &PersonaSchedule::builtin())
}

/// Per-document checks; module-file persona defaults follow the
/// intermediate row of `schedule`.
pub fn validate_structure_with(doc: &ModuleDoc, schedule: &PersonaSchedule) -> Vec<Violation> {
    let rel = module_rel_path(doc.path, doc.number);
    let mut out = Vec::new();
    let v = |rule, msg: String, line: Option<usize>| {
        Violation::new(rule, msg)
            .at(doc.path, doc.number)
            .located(rel.clone(), line)
    };

    match doc.heading_number {
        None => out.push(v(
            RuleId::MissingH1,
            format!("{}/{}: no `# Module <n>: <title>` heading", doc.path, doc.number),
            None,
        )),
        Some(n) if n != u32::from(doc.number) => out.push(v(
            RuleId::H1Mismatch,
            format!("H1 says module {n} but file is module {}", doc.number),
            Some(1),
        )),
        Some(_) => {}
    }

    match doc.persona {
        None => out.push(v(
            RuleId::MissingPersona,
            "persona line absent or unrecognized".into(),
            None,
        )),
        Some(actual) => {
            if let Ok(expected) = persona_for(schedule, ExperienceLevel::Intermediate, doc.number) {
                if expected != actual {
                    out.push(v(
                        RuleId::PersonaMismatch,
                        format!("persona {actual} but intermediate schedule says {expected}"),
                        None,
                    ));
                }
            }
        }
    }

    if doc.features.is_none() {
        out.push(v(RuleId::MissingFeatures, "CC features line absent".into(), None));
    }

    let mut expected = 1u32;
    for step in &doc.steps {
        if step.module_number != doc.number {
            out.push(v(
                RuleId::StepNumbering,
                format!("step label {} does not belong to module {}", step.label(), doc.number),
                Some(step.line),
            ));
            continue;
        }
        if step.step_index != expected {
            out.push(v(
                RuleId::StepNumbering,
                format!("non-contiguous step numbering at {}", step.label()),
                Some(step.line),
            ));
        }
        expected = expected.max(step.step_index + 1);
    }

    if doc.checkpoint_items.is_empty() {
        out.push(v(
            RuleId::MissingCheckpoint,
            "no Checkpoint section with items".into(),
            doc.checkpoint_line,
        ));
    }
    out
}

/// Case-folded, whitespace-collapsed form used to compare feature phrases.
pub fn normalize_feature(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// For each module number, every path must list the same feature set.
pub fn validate_parity(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    for number in 1..=10u8 {
        // normalized feature -> (display form, paths that list it)
        let mut seen: BTreeMap<String, (String, BTreeSet<PathId>)> = BTreeMap::new();
        let mut participants = Vec::new();
        for path in PathId::ALL {
            let Some(features) = corpus.module(path, number).and_then(|d| d.features.as_ref()) else {
                continue;
            };
            participants.push(path);
            for f in features {
                seen.entry(normalize_feature(f))
                    .or_insert_with(|| (f.trim().to_string(), BTreeSet::new()))
                    .1
                    .insert(path);
            }
        }
        for (display, present) in seen.values() {
            let missing: Vec<&str> = participants
                .iter()
                .filter(|p| !present.contains(p))
                .map(|p| p.as_str())
                .collect();
            if missing.is_empty() {
                continue;
            }
            let mut v = Violation::new(
                RuleId::FeatureParity,
                format!(
                    "feature {display:?} in module {number} missing in {}",
                    missing.join(",")
                ),
            );
            v.module = Some(number);
            out.push(v);
        }
    }
    out
}

/// Coverage and monotonicity of every level's stage ranges.
pub fn validate_schedules(schedule: &PersonaSchedule) -> Vec<Violation> {
    let mut out = Vec::new();
    for level in ExperienceLevel::ALL {
        let mut previous: Option<(u8, Persona)> = None;
        for module in 1..=10u8 {
            let stages = schedule.stages_covering(level, module);
            let with_module = |rule, msg: String| {
                let mut v = Violation::new(rule, msg);
                v.module = Some(module);
                v
            };
            match stages.as_slice() {
                [] => out.push(with_module(
                    RuleId::ScheduleGap,
                    format!("{level}: module {module} has no persona stage"),
                )),
                [stage] => {
                    if let Some((prev_module, prev)) = previous {
                        if *stage < prev {
                            out.push(with_module(
                                RuleId::PersonaRegression,
                                format!(
                                    "{level}: module {module} is {stage} after module {prev_module} was {prev}"
                                ),
                            ));
                        }
                    }
                    previous = Some((module, *stage));
                }
                many => {
                    let names: Vec<&str> = many.iter().map(|p| p.as_str()).collect();
                    out.push(with_module(
                        RuleId::ScheduleOverlap,
                        format!("{level}: module {module} covered by {}", names.join(",")),
                    ));
                }
            }
        }
    }
    out
}

/// Skills carry frontmatter; hook commands point at scripts that exist.
pub fn validate_support(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    for skill in &corpus.support.skills {
        if !skill.has_frontmatter {
            out.push(
                Violation::new(
                    RuleId::SkillFrontmatter,
                    format!("skill {} has no frontmatter block", skill.name),
                )
                .located(
                    Path::new(".claude/skills").join(&skill.name).join("SKILL.md"),
                    Some(1),
                ),
            );
        }
    }
    for hook in &corpus.support.hook_scripts {
        if !hook.exists {
            out.push(
                Violation::new(
                    RuleId::HookScriptMissing,
                    format!("{} hook runs missing script {}", hook.event, hook.script.display()),
                )
                .located(PathBuf::from(".claude/settings.json"), None),
            );
        }
    }
    out
}

/// Runs every enabled rule and assembles a deterministic report.
pub fn validate_all(corpus: &Corpus, schedule: &PersonaSchedule, rules: &RuleSet) -> ValidationReport {
    let mut violations = validate_completeness(corpus);
    for doc in corpus.modules.values() {
        violations.extend(validate_structure_with(doc, schedule));
    }
    violations.extend(validate_parity(corpus));
    violations.extend(validate_schedules(schedule));
    violations.extend(validate_support(corpus));

    violations.retain(|v| rules.contains(v.rule_id));
    violations.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    ValidationReport {
        pass: violations.is_empty(),
        violations,
        checked_rules: rules.iter().collect(),
    }
}

#[derive(Debug, Error)]
pub enum ScheduleLoadError {
    #[error("cannot read schedule file {0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error(transparent)]
    Parse(#[from] PersonaError),
}

/// Reads a schedule override file and rejects it unless it validates.
pub fn load_schedule(path: &Path) -> Result<PersonaSchedule, ScheduleLoadError> {
    let text = fs::read_to_string(path).map_err(|e| ScheduleLoadError::Io(path.to_path_buf(), e))?;
    let schedule = PersonaSchedule::parse_override(&text)?;
    let violations = validate_schedules(&schedule);
    if violations.is_empty() {
        Ok(schedule)
    } else {
        let msgs: Vec<String> = violations
            .iter()
            .map(|v| format!("{}: {}", v.rule_id, v.message))
            .collect();
        Err(PersonaError::Invalid(msgs.join("; ")).into())
    }
}
