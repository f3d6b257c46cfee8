//! Curriculum data model: module files, steps, and the on-disk repository
//! layout (`projects/<path>/NN-name.md`, `context/*`).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::persona::Persona;

/// One of the five project variants sharing the module sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathId {
    Canvas,
    Forge,
    Nexus,
    Sentinel,
    Byop,
}

impl PathId {
    pub const ALL: [PathId; 5] = [
        PathId::Canvas,
        PathId::Forge,
        PathId::Nexus,
        PathId::Sentinel,
        PathId::Byop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PathId::Canvas => "canvas",
            PathId::Forge => "forge",
            PathId::Nexus => "nexus",
            PathId::Sentinel => "sentinel",
            PathId::Byop => "byop",
        }
    }

    /// Paths whose projects are built with a learner-chosen language.
    pub fn needs_language(self) -> bool {
        !matches!(self, PathId::Canvas | PathId::Byop)
    }
}

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown project path {0:?} (expected canvas, forge, nexus, sentinel or byop)")]
pub struct UnknownPath(pub String);

impl FromStr for PathId {
    type Err = UnknownPath;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PathId::ALL
            .into_iter()
            .find(|p| p.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| UnknownPath(s.to_string()))
    }
}

/// Canonical module filenames, index `n - 1` for module `n`.
pub const MODULE_FILES: [&str; 10] = [
    "01-setup.md",
    "02-blueprint.md",
    "03-rules-memory-context.md",
    "04-skills-commands.md",
    "05-hooks.md",
    "06-mcp-servers.md",
    "07-guard-rails.md",
    "08-subagents.md",
    "09-tasks-tdd.md",
    "10-parallel-plugins-eval.md",
];

/// Files tolerated in a project directory besides the module files.
pub const PROJECT_EXTRA_FILES: [&str; 1] = ["README.md"];

pub fn module_file_name(number: u8) -> Option<&'static str> {
    MODULE_FILES.get(usize::from(number).checked_sub(1)?).copied()
}

pub fn module_number_for_file(name: &str) -> Option<u8> {
    MODULE_FILES
        .iter()
        .position(|f| *f == name)
        .map(|i| i as u8 + 1)
}

/// Repository-relative location of a module file.
pub fn module_rel_path(path: PathId, number: u8) -> PathBuf {
    let name = module_file_name(number).unwrap_or("??-unknown.md");
    Path::new("projects").join(path.as_str()).join(name)
}

/// `<module>.<step>` as printed in step headings and progress markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StepLabel {
    pub module: u8,
    pub step: u32,
}

impl StepLabel {
    pub fn new(module: u8, step: u32) -> Self {
        Self { module, step }
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.module, self.step)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed step label {0:?}")]
pub struct BadStepLabel(pub String);

impl FromStr for StepLabel {
    type Err = BadStepLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadStepLabel(s.to_string());
        let (m, k) = s.trim().split_once('.').ok_or_else(bad)?;
        Ok(Self {
            module: m.parse().map_err(|_| bad())?,
            step: k.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub module_number: u8,
    pub step_index: u32,
    pub heading: String,
    /// Lines between this heading and the next step or checkpoint heading,
    /// LF-normalized, surrounding blank lines trimmed.
    pub body: String,
    /// First STOP block inside the body, if any.
    pub stop_block: Option<String>,
    /// 1-based line of the heading.
    pub line: usize,
}

impl Step {
    pub fn label(&self) -> StepLabel {
        StepLabel::new(self.module_number, self.step_index)
    }
}

/// Markup used by a document's step headings, reused when new steps are
/// appended so inserted headings look like their neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepStyle {
    /// Leading markup, e.g. `"### "` or `"**"`.
    pub lead: String,
    /// Optional word between lead and label, e.g. `"Step "`.
    pub word: String,
}

impl Default for StepStyle {
    fn default() -> Self {
        Self {
            lead: "### ".to_string(),
            word: String::new(),
        }
    }
}

impl StepStyle {
    pub fn render(&self, label: StepLabel, heading: &str) -> String {
        if self.lead == "**" {
            format!("**{}{} {}**", self.word, label, heading)
        } else {
            format!("{}{}{} {}", self.lead, self.word, label, heading)
        }
    }
}

/// Parsed view of one module file. `raw_text` is retained verbatim so the
/// document can be re-emitted byte-for-byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDoc {
    pub path: PathId,
    /// The module slot this file occupies (from its filename).
    pub number: u8,
    /// Number written in the H1, when one was recognised.
    pub heading_number: Option<u32>,
    pub title: String,
    pub persona: Option<Persona>,
    /// `None` when the features metadata line is absent.
    pub features: Option<Vec<String>>,
    pub steps: Vec<Step>,
    pub checkpoint_items: Vec<String>,
    /// 1-based line of the checkpoint heading.
    pub checkpoint_line: Option<usize>,
    /// Byte offset in `raw_text` where the checkpoint heading line starts.
    pub checkpoint_offset: Option<usize>,
    /// Number of STOP markers outside fenced code.
    pub stop_count: usize,
    pub step_style: StepStyle,
    pub raw_text: String,
}

impl ModuleDoc {
    pub fn step_labels(&self) -> Vec<StepLabel> {
        self.steps.iter().map(Step::label).collect()
    }

    pub fn has_step(&self, step: u32) -> bool {
        self.steps.iter().any(|s| s.step_index == step)
    }

    /// `"\r\n"` if the original text used CRLF anywhere, else `"\n"`.
    pub fn line_ending(&self) -> &'static str {
        if self.raw_text.contains("\r\n") {
            "\r\n"
        } else {
            "\n"
        }
    }

    /// Whether no step heading appears after the checkpoint heading.
    pub fn checkpoint_is_terminal(&self) -> bool {
        match self.checkpoint_line {
            Some(cp) => self.steps.iter().all(|s| s.line < cp),
            None => false,
        }
    }
}

/// Re-emits the document exactly as it was read.
pub fn serialize(doc: &ModuleDoc) -> &str {
    &doc.raw_text
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorCode {
    MissingH1,
    H1Mismatch,
    MissingPersona,
    UnknownPersona,
    MissingFeatures,
    StepNumbering,
    MissingCheckpoint,
}

impl ParseErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorCode::MissingH1 => "missing_h1",
            ParseErrorCode::H1Mismatch => "h1_mismatch",
            ParseErrorCode::MissingPersona => "missing_persona",
            ParseErrorCode::UnknownPersona => "unknown_persona",
            ParseErrorCode::MissingFeatures => "missing_features",
            ParseErrorCode::StepNumbering => "step_numbering",
            ParseErrorCode::MissingCheckpoint => "missing_checkpoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub code: ParseErrorCode,
    /// 1-based; 0 when the problem is an absence with no natural line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.code.as_str(), self.message)
    }
}

/// A best-effort document plus everything that was wrong with it.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub doc: ModuleDoc,
    pub errors: Vec<ParseError>,
}

impl Parsed {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<ModuleDoc, Vec<ParseError>> {
        if self.errors.is_empty() {
            Ok(self.doc)
        } else {
            Err(self.errors)
        }
    }
}

static H1_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^#[ \t]+(?i:module)[ \t]+(\d+)[ \t]*(?::|--|—|–|-|\.)?[ \t]*(.*?)[ \t]*$").unwrap()
});
static PERSONA_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\*\*Persona[ \t]*(?:--|—|–|-)[ \t]*([A-Za-z]+)").unwrap());
static FEATURES_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\*\*(?i:cc features):?\*\*:?[ \t]*(.*?)\s*$").unwrap());
static STEP_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(#{2,6}[ \t]+|\*\*)((?i:step)[ \t]+)?(\d+)\.(\d+)(.*)$").unwrap()
});
static CHECKPOINT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(#{1,6})[ \t]+(?i:checkpoint)").unwrap());
static HEADING_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(#{1,6})[ \t]").unwrap());
static BULLET_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*[-*+][ \t]+(?:\[[ xX]\][ \t]+)?(.*?)\s*$").unwrap());

struct Line<'a> {
    number: usize,
    offset: usize,
    text: &'a str,
    in_fence: bool,
}

fn split_lines(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    let mut offset = 0;
    let mut in_fence = false;
    for (idx, chunk) in text.split_inclusive('\n').enumerate() {
        let content = chunk.strip_suffix('\n').unwrap_or(chunk);
        let content = content.strip_suffix('\r').unwrap_or(content);
        let trimmed = content.trim_start();
        let is_fence = trimmed.starts_with("```") || trimmed.starts_with("~~~");
        out.push(Line {
            number: idx + 1,
            offset,
            text: content,
            in_fence: in_fence || is_fence,
        });
        if is_fence {
            in_fence = !in_fence;
        }
        offset += chunk.len();
    }
    out
}

/// Recognises a step heading line, returning (lead, word, module, step, heading).
fn match_step_heading(line: &str) -> Option<(String, String, u32, u32, String)> {
    let caps = STEP_RE.captures(line)?;
    let rest = caps.get(5).map_or("", |m| m.as_str());
    let boundary_ok = rest.is_empty()
        || rest.starts_with("**")
        || rest
            .chars()
            .next()
            .is_some_and(|c| c.is_whitespace() || matches!(c, ':' | '.' | ')' | '-' | '—' | '–'));
    if !boundary_ok {
        return None;
    }
    let module: u32 = caps[3].parse().ok()?;
    let step: u32 = caps[4].parse().ok()?;
    let heading = rest
        .trim()
        .trim_start_matches("**")
        .trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ':' | '.' | ')' | '-' | '—' | '–'))
        .trim_end_matches("**")
        .trim()
        .to_string();
    let word = caps.get(2).map_or(String::new(), |m| m.as_str().to_string());
    Some((caps[1].to_string(), word, module, step, heading))
}

/// Whether a line is a step heading under the same grammar the parser uses.
pub fn is_step_heading(line: &str) -> bool {
    match_step_heading(line).is_some()
}

fn is_stop_marker(line: &str) -> bool {
    line.trim_start().starts_with("**STOP")
}

/// Splits a comma-separated feature line into trimmed, non-empty phrases.
pub fn split_features(line: &str) -> Vec<String> {
    line.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses one module file. Always yields a document; structural problems
/// come back alongside it rather than instead of it.
pub fn parse_module(text: &str, path: PathId, expected_number: u8) -> Parsed {
    let lines = split_lines(text);
    let mut errors = Vec::new();

    let mut heading_number = None;
    let mut title = String::new();
    let mut h1_seen = false;
    let mut persona = None;
    let mut persona_seen = false;
    let mut features = None;
    let mut checkpoint: Option<(usize, usize, usize)> = None; // (line idx, level, offset)
    let mut step_heads: Vec<(usize, String, String, u32, u32, String)> = Vec::new();
    let mut stop_count = 0;

    for (idx, line) in lines.iter().enumerate() {
        if line.in_fence {
            continue;
        }
        let t = line.text;
        if !h1_seen && t.starts_with('#') && !t.starts_with("##") {
            h1_seen = true;
            match H1_RE.captures(t) {
                Some(c) => {
                    heading_number = c[1].parse().ok();
                    title = c[2].to_string();
                    if heading_number != Some(u32::from(expected_number)) {
                        errors.push(ParseError {
                            code: ParseErrorCode::H1Mismatch,
                            line: line.number,
                            message: format!(
                                "H1 module number {} does not match expected module {}",
                                &c[1], expected_number
                            ),
                        });
                    }
                }
                None => {
                    title = t.trim_start_matches('#').trim().to_string();
                    errors.push(ParseError {
                        code: ParseErrorCode::MissingH1,
                        line: line.number,
                        message: "H1 is not of the form `# Module <n>: <title>`".into(),
                    });
                }
            }
            continue;
        }
        if !persona_seen {
            if let Some(c) = PERSONA_RE.captures(t) {
                persona_seen = true;
                match c[1].parse::<Persona>() {
                    Ok(p) => persona = Some(p),
                    Err(_) => errors.push(ParseError {
                        code: ParseErrorCode::UnknownPersona,
                        line: line.number,
                        message: format!("unrecognized persona stage {:?}", &c[1]),
                    }),
                }
                continue;
            }
        }
        if features.is_none() {
            if let Some(c) = FEATURES_RE.captures(t) {
                features = Some(split_features(&c[1]));
                continue;
            }
        }
        if is_stop_marker(t) {
            stop_count += 1;
        }
        if checkpoint.is_none() {
            if let Some(c) = CHECKPOINT_RE.captures(t) {
                checkpoint = Some((idx, c[1].len(), line.offset));
                continue;
            }
        }
        if let Some((lead, word, m, k, heading)) = match_step_heading(t) {
            step_heads.push((idx, lead, word, m, k, heading));
        }
    }

    if !h1_seen {
        errors.push(ParseError {
            code: ParseErrorCode::MissingH1,
            line: 0,
            message: "no H1 heading".into(),
        });
    }
    if !persona_seen {
        errors.push(ParseError {
            code: ParseErrorCode::MissingPersona,
            line: 0,
            message: "no `**Persona -- <stage>**` line".into(),
        });
    }
    if features.is_none() {
        errors.push(ParseError {
            code: ParseErrorCode::MissingFeatures,
            line: 0,
            message: "no `**CC features:**` line".into(),
        });
    }

    // Steps: body runs to the next step heading or the checkpoint heading.
    let mut boundaries: Vec<usize> = step_heads.iter().map(|h| h.0).collect();
    if let Some((cp, _, _)) = checkpoint {
        boundaries.push(cp);
    }
    boundaries.sort_unstable();

    let mut steps = Vec::with_capacity(step_heads.len());
    let mut expected_index = 1u32;
    for (idx, _lead, _word, m, k, heading) in &step_heads {
        let end = boundaries
            .iter()
            .copied()
            .find(|b| b > idx)
            .unwrap_or(lines.len());
        let body_lines: Vec<&Line> = lines[idx + 1..end].iter().collect();
        let body = join_trimmed(&body_lines);
        let stop_block = extract_stop_block(&body_lines);
        let line_no = lines[*idx].number;

        if *m != u32::from(expected_number) {
            errors.push(ParseError {
                code: ParseErrorCode::StepNumbering,
                line: line_no,
                message: format!("step label {m}.{k} does not belong to module {expected_number}"),
            });
        } else if *k != expected_index {
            errors.push(ParseError {
                code: ParseErrorCode::StepNumbering,
                line: line_no,
                message: format!("non-contiguous step numbering at {m}.{k}"),
            });
        }
        if *m == u32::from(expected_number) {
            expected_index = expected_index.max(k + 1);
        }
        steps.push(Step {
            module_number: u8::try_from(*m).unwrap_or(u8::MAX),
            step_index: *k,
            heading: heading.clone(),
            body,
            stop_block,
            line: line_no,
        });
    }

    let mut checkpoint_items = Vec::new();
    if let Some((cp, level, _)) = checkpoint {
        for line in &lines[cp + 1..] {
            if !line.in_fence {
                if let Some(h) = HEADING_RE.captures(line.text) {
                    if h[1].len() <= level {
                        break;
                    }
                }
                if let Some(b) = BULLET_RE.captures(line.text) {
                    if !b[1].is_empty() {
                        checkpoint_items.push(b[1].to_string());
                    }
                }
            }
        }
        if checkpoint_items.is_empty() {
            errors.push(ParseError {
                code: ParseErrorCode::MissingCheckpoint,
                line: lines[cp].number,
                message: "checkpoint section has no items".into(),
            });
        }
    } else {
        errors.push(ParseError {
            code: ParseErrorCode::MissingCheckpoint,
            line: 0,
            message: "no Checkpoint section".into(),
        });
    }

    let step_style = step_heads
        .first()
        .map(|(_, lead, word, ..)| StepStyle {
            lead: lead.clone(),
            word: word.clone(),
        })
        .unwrap_or_default();

    errors.sort_by_key(|e| (e.line, e.code));
    let doc = ModuleDoc {
        path,
        number: expected_number,
        heading_number,
        title,
        persona,
        features,
        steps,
        checkpoint_items,
        checkpoint_line: checkpoint.map(|(cp, _, _)| lines[cp].number),
        checkpoint_offset: checkpoint.map(|(_, _, off)| off),
        stop_count,
        step_style,
        raw_text: text.to_string(),
    };
    Parsed { doc, errors }
}

fn join_trimmed(lines: &[&Line]) -> String {
    let texts: Vec<&str> = lines.iter().map(|l| l.text).collect();
    let start = texts.iter().position(|t| !t.trim().is_empty());
    let end = texts.iter().rposition(|t| !t.trim().is_empty());
    match (start, end) {
        (Some(s), Some(e)) => texts[s..=e].join("\n"),
        _ => String::new(),
    }
}

fn extract_stop_block(lines: &[&Line]) -> Option<String> {
    let start = lines
        .iter()
        .position(|l| !l.in_fence && is_stop_marker(l.text))?;
    let block: Vec<&str> = lines[start..]
        .iter()
        .map(|l| l.text)
        .take_while(|t| !t.trim().is_empty())
        .collect();
    Some(block.join("\n"))
}

// ---------------------------------------------------------------------------
// Repository loading

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextFile {
    pub name: String,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadIssue {
    MissingDirectory(PathBuf),
    MissingModule { path: PathId, number: u8 },
    /// A file or directory that is not part of the canonical layout.
    UnexpectedFile { rel: PathBuf, path: Option<PathId> },
    Unreadable { rel: PathBuf, message: String },
}

impl fmt::Display for LoadIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadIssue::MissingDirectory(p) => write!(f, "missing directory {}", p.display()),
            LoadIssue::MissingModule { path, number } => write!(
                f,
                "missing module file {}/{}",
                path,
                module_file_name(*number).unwrap_or("?")
            ),
            LoadIssue::UnexpectedFile { rel, .. } => write!(f, "unexpected file {}", rel.display()),
            LoadIssue::Unreadable { rel, message } => {
                write!(f, "unreadable file {}: {}", rel.display(), message)
            }
        }
    }
}

/// A skill definition found under `.claude/skills/<name>/SKILL.md`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillFile {
    pub name: String,
    pub has_frontmatter: bool,
}

/// A script referenced by a hook command in `.claude/settings.json`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HookScript {
    pub event: String,
    pub script: PathBuf,
    pub exists: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupportFiles {
    pub skills: Vec<SkillFile>,
    pub hook_scripts: Vec<HookScript>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
    pub modules: BTreeMap<(PathId, u8), ModuleDoc>,
    pub parse_errors: BTreeMap<(PathId, u8), Vec<ParseError>>,
    pub context_files: Vec<ContextFile>,
    pub issues: Vec<LoadIssue>,
    pub support: SupportFiles,
}

impl Corpus {
    pub fn is_complete(&self) -> bool {
        self.modules.len() == PathId::ALL.len() * MODULE_FILES.len()
    }

    pub fn module(&self, path: PathId, number: u8) -> Option<&ModuleDoc> {
        self.modules.get(&(path, number))
    }

    /// The modules of one project path, keyed by number.
    pub fn path_modules(&self, path: PathId) -> impl Iterator<Item = &ModuleDoc> {
        self.modules
            .range((path, 0)..=(path, u8::MAX))
            .map(|(_, doc)| doc)
    }

    pub fn parse_error_count(&self) -> usize {
        self.parse_errors.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} is not a readable directory")]
    BadRoot(PathBuf, #[source] io::Error),
}

/// Walks `root` for the canonical module files and context documents.
///
/// Only an unreadable root aborts; every other problem is collected in
/// [`Corpus::issues`] or [`Corpus::parse_errors`].
pub fn load_corpus(root: &Path) -> Result<Corpus, CorpusError> {
    let meta = fs::metadata(root).map_err(|e| CorpusError::BadRoot(root.to_path_buf(), e))?;
    if !meta.is_dir() {
        return Err(CorpusError::BadRoot(
            root.to_path_buf(),
            io::Error::new(io::ErrorKind::InvalidInput, "not a directory"),
        ));
    }

    let mut corpus = Corpus {
        root: root.to_path_buf(),
        modules: BTreeMap::new(),
        parse_errors: BTreeMap::new(),
        context_files: Vec::new(),
        issues: Vec::new(),
        support: SupportFiles::default(),
    };

    let projects = root.join("projects");
    if projects.is_dir() {
        for name in sorted_entries(&projects) {
            if name.parse::<PathId>().is_err() {
                corpus.issues.push(LoadIssue::UnexpectedFile {
                    rel: Path::new("projects").join(&name),
                    path: None,
                });
            }
        }
    } else {
        corpus
            .issues
            .push(LoadIssue::MissingDirectory(PathBuf::from("projects")));
    }

    for path in PathId::ALL {
        let dir = projects.join(path.as_str());
        let rel_dir = Path::new("projects").join(path.as_str());
        if !dir.is_dir() {
            if projects.is_dir() {
                corpus.issues.push(LoadIssue::MissingDirectory(rel_dir.clone()));
            }
            for number in 1..=10 {
                corpus.issues.push(LoadIssue::MissingModule { path, number });
            }
            continue;
        }
        for name in sorted_entries(&dir) {
            if module_number_for_file(&name).is_none() && !PROJECT_EXTRA_FILES.contains(&name.as_str()) {
                corpus.issues.push(LoadIssue::UnexpectedFile {
                    rel: rel_dir.join(&name),
                    path: Some(path),
                });
            }
        }
        for (i, file) in MODULE_FILES.iter().enumerate() {
            let number = i as u8 + 1;
            let full = dir.join(file);
            let rel = rel_dir.join(file);
            if !full.is_file() {
                corpus.issues.push(LoadIssue::MissingModule { path, number });
                continue;
            }
            match read_utf8(&full) {
                Ok(text) => {
                    let parsed = parse_module(&text, path, number);
                    if !parsed.errors.is_empty() {
                        corpus.parse_errors.insert((path, number), parsed.errors);
                    }
                    corpus.modules.insert((path, number), parsed.doc);
                }
                Err(message) => corpus.issues.push(LoadIssue::Unreadable { rel, message }),
            }
        }
    }

    let context = root.join("context");
    if context.is_dir() {
        for name in sorted_entries(&context) {
            let full = context.join(&name);
            match fs::metadata(&full) {
                Ok(m) if m.is_file() => corpus.context_files.push(ContextFile { name, len: m.len() }),
                Ok(_) => {}
                Err(e) => corpus.issues.push(LoadIssue::Unreadable {
                    rel: Path::new("context").join(&name),
                    message: e.to_string(),
                }),
            }
        }
    } else {
        corpus
            .issues
            .push(LoadIssue::MissingDirectory(PathBuf::from("context")));
    }

    corpus.support = load_support(root);
    Ok(corpus)
}

fn read_utf8(path: &Path) -> Result<String, String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| format!("not valid UTF-8: {e}"))
}

fn sorted_entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(Result::ok)
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| !n.starts_with('.'))
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

fn load_support(root: &Path) -> SupportFiles {
    let mut support = SupportFiles::default();
    let skills = root.join(".claude").join("skills");
    if skills.is_dir() {
        for name in sorted_entries(&skills) {
            let file = skills.join(&name).join("SKILL.md");
            if !file.is_file() {
                continue;
            }
            let has_frontmatter = fs::read_to_string(&file)
                .map(|t| has_frontmatter(&t))
                .unwrap_or(false);
            support.skills.push(SkillFile {
                name,
                has_frontmatter,
            });
        }
    }

    let settings = root.join(".claude").join("settings.json");
    if let Ok(text) = fs::read_to_string(&settings) {
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) {
            if let Some(events) = value.get("hooks").and_then(|h| h.as_object()) {
                for (event, groups) in events {
                    for cmd in hook_commands(groups) {
                        for script in script_tokens(&cmd) {
                            let exists = root.join(&script).is_file();
                            support.hook_scripts.push(HookScript {
                                event: event.clone(),
                                script,
                                exists,
                            });
                        }
                    }
                }
            }
        }
    }
    support
}

/// `---` on the first line and a closing `---` later.
pub fn has_frontmatter(text: &str) -> bool {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some("---") {
        return false;
    }
    lines.any(|l| l.trim_end() == "---")
}

fn hook_commands(groups: &serde_json::Value) -> Vec<String> {
    let mut out = Vec::new();
    for group in groups.as_array().into_iter().flatten() {
        for hook in group.get("hooks").and_then(|h| h.as_array()).into_iter().flatten() {
            if let Some(cmd) = hook.get("command").and_then(|c| c.as_str()) {
                out.push(cmd.to_string());
            }
        }
    }
    out
}

/// Tokens of a hook command that name a repository-relative `.claude/` file.
fn script_tokens(command: &str) -> Vec<PathBuf> {
    command
        .split_whitespace()
        .map(|t| t.trim_matches(|c| c == '"' || c == '\''))
        .map(|t| {
            t.trim_start_matches("$CLAUDE_PROJECT_DIR/")
                .trim_start_matches("${CLAUDE_PROJECT_DIR}/")
                .trim_start_matches("./")
        })
        .filter(|t| t.starts_with(".claude/"))
        .map(PathBuf::from)
        .collect()
}
