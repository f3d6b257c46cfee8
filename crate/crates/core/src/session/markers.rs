use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{ModuleDoc, PathId, StepLabel};
use crate::fsutil::atomic_write;
use crate::persona::{EffectiveLevel, FIRST_MODULE, LAST_MODULE};

pub const REGION_BEGIN: &str = "<!-- curricula:state:begin -->";
pub const REGION_END: &str = "<!-- curricula:state:end -->";

/// Progress markers kept in a delimited region of the learner's local notes
/// file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionMarkers {
    pub project: Option<PathId>,
    pub current_module: u8,
    pub current_step: Option<StepLabel>,
    pub level: EffectiveLevel,
    pub completed: BTreeSet<StepLabel>,
}

impl SessionMarkers {
    pub fn new(project: PathId, level: EffectiveLevel) -> Self {
        Self {
            project: Some(project),
            current_module: FIRST_MODULE,
            current_step: None,
            level,
            completed: BTreeSet::new(),
        }
    }

    /// Region body lines, without delimiters.
    pub fn render_lines(&self) -> Vec<String> {
        let project = self.project.map_or("none", PathId::as_str);
        let step = self.current_step.map_or("none".to_string(), |s| s.to_string());
        let completed: Vec<String> = self.completed.iter().map(StepLabel::to_string).collect();
        vec![
            format!("Project: {project}"),
            format!("Current Module: {}", self.current_module),
            format!("Current Step: {step}"),
            format!("Effective Level: {}", self.level.current),
            format!("Declared Level: {}", self.level.declared),
            format!("Completed Steps: {}", completed.join(", ")),
        ]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MarkerError {
    #[error("markers region has no end delimiter")]
    Unterminated,
    #[error("markers line {0:?} is malformed")]
    BadLine(String),
    #[error("markers region lacks {0}")]
    MissingField(&'static str),
    #[error("current step {step} is not in current module {module}")]
    StepOutsideModule { step: StepLabel, module: u8 },
}

fn find_region(text: &str) -> Result<Option<(usize, usize)>, MarkerError> {
    let Some(start) = text.find(REGION_BEGIN) else {
        return Ok(None);
    };
    let end_rel = text[start..].find(REGION_END).ok_or(MarkerError::Unterminated)?;
    Ok(Some((start, start + end_rel + REGION_END.len())))
}

/// Parses the markers region, or `None` when the text has no region.
pub fn parse_markers(text: &str) -> Result<Option<SessionMarkers>, MarkerError> {
    let Some((start, end)) = find_region(text)? else {
        return Ok(None);
    };
    let body = &text[start + REGION_BEGIN.len()..end - REGION_END.len()];
    let mut project = None;
    let mut module = None;
    let mut step = None;
    let mut current = None;
    let mut declared = None;
    let mut completed = BTreeSet::new();
    for raw in body.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || MarkerError::BadLine(line.to_string());
        let (key, value) = line.split_once(':').ok_or_else(bad)?;
        let value = value.trim();
        match key.trim() {
            "Project" => {
                project = match value {
                    "none" => None,
                    v => Some(v.parse::<PathId>().map_err(|_| bad())?),
                }
            }
            "Current Module" => {
                let n: u8 = value.parse().map_err(|_| bad())?;
                if !(FIRST_MODULE..=LAST_MODULE).contains(&n) {
                    return Err(bad());
                }
                module = Some(n);
            }
            "Current Step" => {
                step = match value {
                    "none" => None,
                    v => Some(v.parse::<StepLabel>().map_err(|_| bad())?),
                }
            }
            "Effective Level" => current = Some(value.parse().map_err(|_| bad())?),
            "Declared Level" => declared = Some(value.parse().map_err(|_| bad())?),
            "Completed Steps" => {
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    completed.insert(item.parse::<StepLabel>().map_err(|_| bad())?);
                }
            }
            _ => return Err(bad()),
        }
    }
    let current_module = module.ok_or(MarkerError::MissingField("Current Module"))?;
    let current = current.ok_or(MarkerError::MissingField("Effective Level"))?;
    if let Some(s) = step {
        if s.module != current_module {
            return Err(MarkerError::StepOutsideModule {
                step: s,
                module: current_module,
            });
        }
    }
    Ok(Some(SessionMarkers {
        project,
        current_module,
        current_step: step,
        level: EffectiveLevel {
            declared: declared.unwrap_or(current),
            current,
        },
        completed,
    }))
}

/// Writes `markers` into `text`, replacing an existing region in place or
/// appending a new one. Bytes outside the region are left untouched.
pub fn write_markers(text: &str, markers: &SessionMarkers) -> Result<String, MarkerError> {
    let eol = if text.contains("\r\n") { "\r\n" } else { "\n" };
    let mut region = String::from(REGION_BEGIN);
    region.push_str(eol);
    for line in markers.render_lines() {
        region.push_str(&line);
        region.push_str(eol);
    }
    region.push_str(REGION_END);

    Ok(match find_region(text)? {
        Some((start, end)) => format!("{}{}{}", &text[..start], region, &text[end..]),
        None => {
            let mut out = text.to_string();
            if !out.is_empty() && !out.ends_with('\n') {
                out.push_str(eol);
            }
            if !out.is_empty() {
                out.push_str(eol);
            }
            out.push_str(&region);
            out.push_str(eol);
            out
        }
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("step {0} does not exist")]
    UnknownStep(StepLabel),
    #[error("module {0} is not available")]
    MissingModule(u8),
    #[error("cannot jump from module {from} to module {to}")]
    SkipsModule { from: u8, to: u8 },
    #[error("module {module} has unfinished steps: {}", list(missing))]
    Incomplete { module: u8, missing: Vec<StepLabel> },
}

fn list(labels: &[StepLabel]) -> String {
    labels.iter().map(StepLabel::to_string).collect::<Vec<_>>().join(", ")
}

/// Step labels of `doc` that are not yet in `completed`, in document order.
pub fn pre_advance_check(markers: &SessionMarkers, doc: &ModuleDoc) -> Vec<StepLabel> {
    doc.step_labels()
        .into_iter()
        .filter(|l| !markers.completed.contains(l))
        .collect()
}

/// Marks `label` as the current and completed step. Moving into the next
/// module requires every step of the current one to be complete; moving
/// further ahead is refused.
pub fn record_step<'a>(
    markers: &SessionMarkers,
    label: StepLabel,
    docs: impl Fn(u8) -> Option<&'a ModuleDoc>,
) -> Result<SessionMarkers, StepError> {
    let doc = docs(label.module).ok_or(StepError::MissingModule(label.module))?;
    if doc.number != label.module || !doc.has_step(label.step) {
        return Err(StepError::UnknownStep(label));
    }
    let from = markers.current_module;
    if label.module > from.saturating_add(1) {
        return Err(StepError::SkipsModule {
            from,
            to: label.module,
        });
    }
    if label.module == from + 1 {
        let current = docs(from).ok_or(StepError::MissingModule(from))?;
        let missing = pre_advance_check(markers, current);
        if !missing.is_empty() {
            return Err(StepError::Incomplete {
                module: from,
                missing,
            });
        }
    }
    let mut next = markers.clone();
    next.current_module = label.module;
    next.current_step = Some(label);
    next.completed.insert(label);
    Ok(next)
}

#[derive(Debug, Error)]
pub enum MarkerFileError {
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, #[source] io::Error),
    #[error("{0}: {1}")]
    Markers(PathBuf, #[source] MarkerError),
    #[error("cannot write {0}: {1}")]
    Write(PathBuf, #[source] io::Error),
}

pub struct MarkerStore;

impl MarkerStore {
    fn read(path: &Path) -> Result<String, MarkerFileError> {
        match fs::read(path) {
            Ok(b) => String::from_utf8(b).map_err(|e| {
                MarkerFileError::Read(path.to_path_buf(), io::Error::new(io::ErrorKind::InvalidData, e))
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(String::new()),
            Err(e) => Err(MarkerFileError::Read(path.to_path_buf(), e)),
        }
    }

    /// Markers in the file, `None` when the file or its region is absent.
    pub fn load(path: &Path) -> Result<Option<SessionMarkers>, MarkerFileError> {
        let text = Self::read(path)?;
        parse_markers(&text).map_err(|e| MarkerFileError::Markers(path.to_path_buf(), e))
    }

    pub fn save(path: &Path, markers: &SessionMarkers) -> Result<(), MarkerFileError> {
        let text = Self::read(path)?;
        let out = write_markers(&text, markers)
            .map_err(|e| MarkerFileError::Markers(path.to_path_buf(), e))?;
        atomic_write(path, out.as_bytes()).map_err(|e| MarkerFileError::Write(path.to_path_buf(), e))
    }
}
