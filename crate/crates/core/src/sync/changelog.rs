use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use super::version::{Version, VersionRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Added,
    Changed,
    Removed,
    Fixed,
    Other,
}

impl Section {
    pub fn as_str(self) -> &'static str {
        match self {
            Section::Added => "added",
            Section::Changed => "changed",
            Section::Removed => "removed",
            Section::Fixed => "fixed",
            Section::Other => "other",
        }
    }

    /// Section from a `###` heading's text; anything unrecognised is `Other`.
    pub fn from_heading(text: &str) -> Section {
        match text.trim().to_ascii_lowercase().as_str() {
            "added" => Section::Added,
            "changed" => Section::Changed,
            "removed" => Section::Removed,
            "fixed" => Section::Fixed,
            _ => Section::Other,
        }
    }

    /// Sections that carry curriculum-relevant feature changes.
    pub fn is_kept(self) -> bool {
        matches!(self, Section::Added | Section::Changed | Section::Removed)
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChangelogEntry {
    pub version: Version,
    pub section: Section,
    pub text: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChangelogError {
    #[error("changelog has no version headings")]
    NoVersions,
}

static VERSION_HEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^##[ \t]+\[?[vV]?(\d+(?:\.\d+)*)\]?(?:[ \t].*)?$").unwrap());
static SECTION_HEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^###[ \t]+(.*?)[ \t]*$").unwrap());
static BULLET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[-*][ \t]+(.*)$").unwrap());

/// Parses every bullet of a changelog laid out as `## [X.Y.Z]` version
/// headings with `### Added` / `### Fixed` style subsections. Bullets under
/// non-version `##` headings (such as "Unreleased") are skipped; indented
/// continuation lines are folded into their bullet.
pub fn parse_changelog(text: &str) -> Result<Vec<ChangelogEntry>, ChangelogError> {
    let mut entries: Vec<ChangelogEntry> = Vec::new();
    let mut version: Option<Version> = None;
    let mut saw_version = false;
    let mut section = Section::Other;
    let mut open_bullet = false;

    for raw in text.lines() {
        let line = raw.trim_end();
        if line.starts_with("## ") || line.starts_with("##\t") {
            open_bullet = false;
            section = Section::Other;
            version = VERSION_HEADING
                .captures(line)
                .and_then(|c| c[1].parse().ok());
            saw_version |= version.is_some();
            continue;
        }
        if line.starts_with('#') {
            open_bullet = false;
            if let Some(c) = SECTION_HEADING.captures(line) {
                section = Section::from_heading(&c[1]);
            }
            continue;
        }
        let Some(v) = &version else { continue };
        if let Some(c) = BULLET.captures(line) {
            entries.push(ChangelogEntry {
                version: v.clone(),
                section,
                text: c[1].trim().to_string(),
            });
            open_bullet = true;
        } else if line.trim().is_empty() {
            open_bullet = false;
        } else if open_bullet && raw.starts_with([' ', '\t']) {
            let last = entries.last_mut().expect("open bullet has an entry");
            last.text.push(' ');
            last.text.push_str(line.trim());
        } else {
            open_bullet = false;
        }
    }
    if !saw_version {
        return Err(ChangelogError::NoVersions);
    }
    Ok(entries)
}

/// Highest version heading in the changelog.
pub fn latest_version(text: &str) -> Result<Version, ChangelogError> {
    text.lines()
        .filter_map(|l| VERSION_HEADING.captures(l.trim_end()))
        .filter_map(|c| c[1].parse::<Version>().ok())
        .max()
        .ok_or(ChangelogError::NoVersions)
}

/// Entries released inside `gap` from the added, changed and removed
/// sections, in document order.
pub fn triage(changelog: &str, gap: &VersionRange) -> Result<Vec<ChangelogEntry>, ChangelogError> {
    Ok(parse_changelog(changelog)?
        .into_iter()
        .filter(|e| e.section.is_kept() && gap.contains(&e.version))
        .collect())
}
