use std::path::Path;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use super::changelog::ChangelogEntry;
use crate::persona::{FIRST_MODULE, LAST_MODULE};

#[derive(Debug, Clone)]
pub enum Pattern {
    /// Case-insensitive substring.
    Keyword(String),
    Regex(Regex),
}

impl Pattern {
    pub fn matches(&self, text: &str) -> bool {
        match self {
            Pattern::Keyword(k) => text.to_lowercase().contains(k.as_str()),
            Pattern::Regex(r) => r.is_match(text),
        }
    }
}

/// Where a matched changelog entry lands.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Targets {
    pub modules: Vec<u8>,
    pub context_files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FeatureRule {
    pub pattern: Pattern,
    pub targets: Targets,
    pub line: usize,
}

/// Ordered keyword rules; the first rule matching an entry decides its
/// targets.
#[derive(Debug, Clone, Default)]
pub struct FeatureMap {
    pub rules: Vec<FeatureRule>,
}

#[derive(Debug, Error)]
pub enum FeatureMapError {
    #[error("cannot read feature map {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("feature map line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl FeatureMap {
    /// Parses lines of the form
    ///
    /// ```text
    /// # pattern | modules | context files
    /// hook      | 5, 7    | hooks.md
    /// re:^mcp\b | 6       |
    /// ```
    ///
    /// Patterns are case-insensitive substrings unless prefixed with `re:`.
    /// The last two columns are split from the right, so a regex may itself
    /// contain `|`.
    pub fn parse(text: &str) -> Result<Self, FeatureMapError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let err = |message: String| FeatureMapError::Syntax { line, message };
            let mut cols = t.rsplitn(3, '|');
            let (files, modules, pattern) = match (cols.next(), cols.next(), cols.next()) {
                (Some(f), Some(m), Some(p)) => (f, m, p),
                _ => return Err(err("expected `pattern | modules | context files`".into())),
            };
            let pattern = pattern.trim();
            let pattern = if let Some(re) = pattern.strip_prefix("re:") {
                let re = Regex::new(&format!("(?i){}", re.trim()))
                    .map_err(|e| err(format!("bad regex: {e}")))?;
                Pattern::Regex(re)
            } else if pattern.is_empty() {
                return Err(err("empty pattern".into()));
            } else {
                Pattern::Keyword(pattern.to_lowercase())
            };

            let mut targets = Targets::default();
            for m in modules.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let n: u8 = m.parse().map_err(|_| err(format!("bad module number {m:?}")))?;
                if !(FIRST_MODULE..=LAST_MODULE).contains(&n) {
                    return Err(err(format!("module {n} is outside 1-10")));
                }
                if !targets.modules.contains(&n) {
                    targets.modules.push(n);
                }
            }
            for f in files.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                if f.contains(['/', '\\']) || f == "." || f == ".." {
                    return Err(err(format!("context file {f:?} must be a bare file name")));
                }
                targets.context_files.push(f.to_string());
            }
            if targets.modules.is_empty() && targets.context_files.is_empty() {
                return Err(err("rule has no targets".into()));
            }
            rules.push(FeatureRule {
                pattern,
                targets,
                line,
            });
        }
        Ok(Self { rules })
    }

    pub fn load(path: &Path) -> Result<Self, FeatureMapError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FeatureMapError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn lookup(&self, text: &str) -> Option<&Targets> {
        self.rules
            .iter()
            .find(|r| r.pattern.matches(text))
            .map(|r| &r.targets)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Mapping {
    pub mapped: Vec<(ChangelogEntry, Targets)>,
    /// Entries no rule matched, kept for human review.
    pub unmapped: Vec<ChangelogEntry>,
}

pub fn map_entries(entries: &[ChangelogEntry], fmap: &FeatureMap) -> Mapping {
    let mut out = Mapping::default();
    for e in entries {
        match fmap.lookup(&e.text) {
            Some(t) => out.mapped.push((e.clone(), t.clone())),
            None => out.unmapped.push(e.clone()),
        }
    }
    out
}
