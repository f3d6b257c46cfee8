use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dotted numeric version such as `2.12.0`. A leading `v` is accepted and
/// dropped. Missing trailing components compare as zero, so `2.1` equals
/// `2.1.0`.
#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Version {
    parts: Vec<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unparseable version {0:?}")]
pub struct BadVersion(pub String);

impl Version {
    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    fn padded(&self, len: usize) -> impl Iterator<Item = u64> + '_ {
        self.parts.iter().copied().chain(std::iter::repeat(0)).take(len)
    }
}

impl FromStr for Version {
    type Err = BadVersion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_prefix(['v', 'V']).unwrap_or(t);
        if t.is_empty() {
            return Err(BadVersion(s.to_string()));
        }
        let parts = t
            .split('.')
            .map(|p| {
                if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(BadVersion(s.to_string()));
                }
                p.parse::<u64>().map_err(|_| BadVersion(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { parts })
    }
}

impl TryFrom<String> for Version {
    type Error = BadVersion;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Version> for String {
    fn from(v: Version) -> Self {
        v.to_string()
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let joined: Vec<String> = self.parts.iter().map(u64::to_string).collect();
        f.write_str(&joined.join("."))
    }
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl std::hash::Hash for Version {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        let len = self.parts.iter().rposition(|&p| p != 0).map_or(0, |i| i + 1);
        self.parts[..len].hash(state);
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let len = self.parts.len().max(other.parts.len());
        self.padded(len).cmp(other.padded(len))
    }
}

/// Half-open version interval `(from, to]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionRange {
    pub from: Version,
    pub to: Version,
}

impl VersionRange {
    pub fn contains(&self, v: &Version) -> bool {
        *v > self.from && *v <= self.to
    }
}

impl fmt::Display for VersionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]", self.from, self.to)
    }
}

/// The range of releases newer than `current` up to `latest`, or `None` when
/// `current` is already at or past `latest`.
pub fn detect_gap(current: &str, latest: &str) -> Result<Option<VersionRange>, BadVersion> {
    let from: Version = current.parse()?;
    let to: Version = latest.parse()?;
    Ok((from < to).then_some(VersionRange { from, to }))
}
