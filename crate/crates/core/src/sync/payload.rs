use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use super::changelog::Section;
use super::version::Version;
use crate::corpus::{parse_module, ModuleDoc, PathId, StepLabel};
use crate::persona::{FIRST_MODULE, LAST_MODULE};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PayloadTarget {
    Module { path: PathId, number: u8 },
    Context(String),
}

impl fmt::Display for PayloadTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayloadTarget::Module { path, number } => write!(f, "{path}/{number:02}"),
            PayloadTarget::Context(name) => write!(f, "context/{name}"),
        }
    }
}

/// New module steps or replacement context text, authored outside the
/// engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdatePayload {
    /// File the payload was read from, or a caller-chosen label.
    pub name: String,
    pub target: PayloadTarget,
    pub version: Option<Version>,
    pub section: Option<Section>,
    pub entry: Option<String>,
    pub content: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PayloadError {
    #[error("{name}: {message}")]
    Header { name: String, message: String },
    #[error("cannot read payload {0}: {1}")]
    Io(String, String),
}

fn parse_target(s: &str) -> Option<PayloadTarget> {
    let (head, tail) = s.trim().split_once('/')?;
    if head == "context" {
        let ok = !tail.is_empty() && !tail.contains(['/', '\\']) && tail != "." && tail != "..";
        return ok.then(|| PayloadTarget::Context(tail.to_string()));
    }
    let path: PathId = head.parse().ok()?;
    let number: u8 = tail.parse().ok()?;
    (FIRST_MODULE..=LAST_MODULE)
        .contains(&number)
        .then_some(PayloadTarget::Module { path, number })
}

impl UpdatePayload {
    /// Parses a payload file: `key: value` header lines, a `---` line, then
    /// the content. `target` is required (`canvas/05` or
    /// `context/<file>`); `version`, `section` and `entry` are optional.
    pub fn parse(name: &str, text: &str) -> Result<Self, PayloadError> {
        let err = |message: String| PayloadError::Header {
            name: name.to_string(),
            message,
        };
        let mut target = None;
        let mut version = None;
        let mut section = None;
        let mut entry = None;
        let mut rest = None;
        let mut offset = 0;
        for chunk in text.split_inclusive('\n') {
            offset += chunk.len();
            let line = chunk.trim();
            if line == "---" {
                rest = Some(&text[offset..]);
                break;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| err(format!("malformed header line {line:?}")))?;
            let v = v.trim();
            match k.trim() {
                "target" => {
                    target = Some(parse_target(v).ok_or_else(|| err(format!("bad target {v:?}")))?)
                }
                "version" => {
                    version = Some(v.parse().map_err(|_| err(format!("bad version {v:?}")))?)
                }
                "section" => section = Some(Section::from_heading(v)),
                "entry" => entry = Some(v.to_string()),
                other => return Err(err(format!("unknown header {other:?}"))),
            }
        }
        let content = rest.ok_or_else(|| err("missing `---` separator".into()))?;
        Ok(Self {
            name: name.to_string(),
            target: target.ok_or_else(|| err("missing target".into()))?,
            version,
            section,
            entry,
            content: content.to_string(),
        })
    }
}

/// Reads every regular file in `dir` as a payload, in file-name order.
pub fn load_payloads(dir: &Path) -> Result<Vec<UpdatePayload>, PayloadError> {
    let io = |p: &Path, e: std::io::Error| PayloadError::Io(p.display().to_string(), e.to_string());
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| io(p, e))?;
            let name = p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            UpdatePayload::parse(&name, &text)
        })
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApplyError {
    #[error("payload targets {payload} but the document is {doc}")]
    WrongTarget { payload: String, doc: String },
    #[error("document has no checkpoint to insert before")]
    NoCheckpoint,
    #[error("payload content must start with a heading")]
    ContentWithoutHeading,
}

static HEADING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(#{1,6})[ \t]+(.*?)[ \t#]*$").unwrap());

struct NewStep {
    heading: String,
    body: Vec<String>,
}

/// Splits payload content into steps at headings of the first heading's
/// level. Headings inside code fences do not split.
fn split_steps(content: &str) -> Result<Vec<NewStep>, ApplyError> {
    let mut steps: Vec<NewStep> = Vec::new();
    let mut level = None;
    let mut in_fence = false;
    for line in content.lines() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let trimmed = line.trim_start();
        let is_fence = trimmed.starts_with("```") || trimmed.starts_with("~~~");
        if !in_fence && !is_fence {
            if let Some(c) = HEADING.captures(line) {
                let l = c[1].len();
                if level.is_none_or(|lv| l <= lv) {
                    level.get_or_insert(l);
                    steps.push(NewStep {
                        heading: c[2].to_string(),
                        body: Vec::new(),
                    });
                    continue;
                }
            }
        }
        if is_fence {
            in_fence = !in_fence;
        }
        match steps.last_mut() {
            Some(s) => s.body.push(line.to_string()),
            None if line.trim().is_empty() => {}
            None => return Err(ApplyError::ContentWithoutHeading),
        }
    }
    Ok(steps)
}

fn trim_blank(lines: &[String]) -> &[String] {
    let start = lines.iter().position(|l| !l.trim().is_empty());
    let end = lines.iter().rposition(|l| !l.trim().is_empty());
    match (start, end) {
        (Some(s), Some(e)) => &lines[s..=e],
        _ => &[],
    }
}

/// Result of inserting steps: the new document and the byte range of the
/// inserted text within its raw text.
#[derive(Debug, Clone)]
pub struct Applied {
    pub doc: ModuleDoc,
    pub inserted: std::ops::Range<usize>,
    pub labels: Vec<StepLabel>,
}

/// Appends the payload's steps immediately before the checkpoint heading,
/// numbered after the highest existing step. Bytes before the insertion
/// point are never touched. Empty content returns the document unchanged.
pub fn apply_update(doc: &ModuleDoc, payload: &UpdatePayload) -> Result<Applied, ApplyError> {
    let expected = PayloadTarget::Module {
        path: doc.path,
        number: doc.number,
    };
    if payload.target != expected {
        return Err(ApplyError::WrongTarget {
            payload: payload.target.to_string(),
            doc: expected.to_string(),
        });
    }
    let at = doc.checkpoint_offset.ok_or(ApplyError::NoCheckpoint)?;
    let steps = split_steps(&payload.content)?;
    if steps.is_empty() {
        return Ok(Applied {
            doc: doc.clone(),
            inserted: at..at,
            labels: Vec::new(),
        });
    }

    let eol = doc.line_ending();
    let raw = &doc.raw_text;
    let mut block = String::new();
    let prefix = &raw[..at];
    let blank_before = prefix.is_empty() || prefix.ends_with("\n\n") || prefix.ends_with("\n\r\n");
    if !blank_before {
        if !prefix.ends_with('\n') {
            block.push_str(eol);
        }
        block.push_str(eol);
    }
    let first = doc.steps.iter().map(|s| s.step_index).max().unwrap_or(0) + 1;
    let mut labels = Vec::new();
    for (index, step) in (first..).zip(&steps) {
        let label = StepLabel::new(doc.number, index);
        labels.push(label);
        block.push_str(&doc.step_style.render(label, step.heading.trim()));
        block.push_str(eol);
        let body = trim_blank(&step.body);
        if !body.is_empty() {
            block.push_str(eol);
            for line in body {
                block.push_str(line);
                block.push_str(eol);
            }
        }
        block.push_str(eol);
    }

    let mut text = String::with_capacity(raw.len() + block.len());
    text.push_str(prefix);
    text.push_str(&block);
    text.push_str(&raw[at..]);
    let new_doc = parse_module(&text, doc.path, doc.number).doc;
    Ok(Applied {
        doc: new_doc,
        inserted: at..at + block.len(),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = "# Module 5: Hooks\n\n**Persona -- Collaborator:** x\n\n**CC features:** hooks\n\n## 5.1 One\n\nbody\n\n**STOP -- pause**\n\n## 5.2 Two\n\nmore\n\n## Checkpoint\n\n- 5.1\n- 5.2\n";

    fn doc() -> ModuleDoc {
        parse_module(DOC, PathId::Canvas, 5).doc
    }

    fn payload(content: &str) -> UpdatePayload {
        UpdatePayload {
            name: "p".into(),
            target: PayloadTarget::Module {
                path: PathId::Canvas,
                number: 5,
            },
            version: None,
            section: None,
            entry: None,
            content: content.into(),
        }
    }

    #[test]
    fn appends_before_checkpoint() {
        let d = doc();
        let out = apply_update(&d, &payload("## New thing\n\nDo it.\n\n### Detail\n\nx\n## Another\n")).unwrap();
        let at = d.checkpoint_offset.unwrap();
        assert_eq!(&out.doc.raw_text[..at], &DOC[..at]);
        assert_eq!(&out.doc.raw_text[out.inserted.end..], &DOC[at..]);
        assert_eq!(out.labels, [StepLabel::new(5, 3), StepLabel::new(5, 4)]);
        let headings: Vec<&str> = out.doc.steps.iter().map(|s| s.heading.as_str()).collect();
        assert_eq!(headings, ["One", "Two", "New thing", "Another"]);
        assert!(out.doc.raw_text.contains("## 5.3 New thing\n\nDo it.\n\n### Detail\n\nx\n\n## 5.4 Another\n\n## Checkpoint"));
        assert_eq!(out.doc.stop_count, 1);
    }

    #[test]
    fn empty_content_is_identity_and_reapply_duplicates() {
        let d = doc();
        assert_eq!(apply_update(&d, &payload("\n\n")).unwrap().doc, d);
        let once = apply_update(&d, &payload("## Extra\n")).unwrap().doc;
        let twice = apply_update(&once, &payload("## Extra\n")).unwrap().doc;
        assert_eq!(twice.steps.len(), 4);
        assert_eq!(twice.steps[3].heading, "Extra");
    }

    #[test]
    fn errors() {
        let d = doc();
        let mut p = payload("## X\n");
        p.target = PayloadTarget::Module {
            path: PathId::Forge,
            number: 5,
        };
        assert!(matches!(apply_update(&d, &p), Err(ApplyError::WrongTarget { .. })));
        assert_eq!(
            apply_update(&d, &payload("loose text\n## X\n")).err(),
            Some(ApplyError::ContentWithoutHeading)
        );
        let no_cp = parse_module("# Module 5: H\n\n## 5.1 A\n", PathId::Canvas, 5).doc;
        assert_eq!(apply_update(&no_cp, &payload("## X\n")).err(), Some(ApplyError::NoCheckpoint));
    }

    #[test]
    fn fenced_headings_do_not_split() {
        let out = apply_update(&doc(), &payload("## A\n\n```md\n## not a step\n```\n")).unwrap();
        assert_eq!(out.doc.steps.len(), 3);
    }

    #[test]
    fn parse_payload_files() {
        let p = UpdatePayload::parse(
            "01.md",
            "target: canvas/05\nversion: 2.13.0\nsection: Added\nentry: New hook\n---\n## Step\n",
        )
        .unwrap();
        assert_eq!(p.target, PayloadTarget::Module { path: PathId::Canvas, number: 5 });
        assert_eq!(p.section, Some(Section::Added));
        assert_eq!(p.content, "## Step\n");
        let c = UpdatePayload::parse("c", "target: context/hooks.md\n---\ntext").unwrap();
        assert_eq!(c.target, PayloadTarget::Context("hooks.md".into()));
        for bad in [
            "target: canvas/11\n---\n",
            "target: context/../x\n---\n",
            "target: mars/01\n---\n",
            "---\n",
            "target: canvas/05\n",
            "nonsense\n---\n",
        ] {
            assert!(UpdatePayload::parse("b", bad).is_err(), "{bad}");
        }
    }
}
