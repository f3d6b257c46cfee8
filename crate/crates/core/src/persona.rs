//! Persona stages, experience levels and the level-to-stage schedule.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FIRST_MODULE: u8 = 1;
pub const LAST_MODULE: u8 = 10;

/// Instructional stance, ordered from most to least scaffolding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Persona {
    Guide,
    Collaborator,
    Peer,
    Launcher,
}

impl Persona {
    pub const ALL: [Persona; 4] = [
        Persona::Guide,
        Persona::Collaborator,
        Persona::Peer,
        Persona::Launcher,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Persona::Guide => "Guide",
            Persona::Collaborator => "Collaborator",
            Persona::Peer => "Peer",
            Persona::Launcher => "Launcher",
        }
    }
}

impl fmt::Display for Persona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Persona {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Persona::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| PersonaError::UnknownPersona(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperienceLevel {
    Beginner,
    Intermediate,
    Advanced,
}

impl ExperienceLevel {
    pub const ALL: [ExperienceLevel; 3] = [
        ExperienceLevel::Beginner,
        ExperienceLevel::Intermediate,
        ExperienceLevel::Advanced,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperienceLevel::Beginner => "beginner",
            ExperienceLevel::Intermediate => "intermediate",
            ExperienceLevel::Advanced => "advanced",
        }
    }

    fn up(self) -> Self {
        match self {
            ExperienceLevel::Beginner => ExperienceLevel::Intermediate,
            _ => ExperienceLevel::Advanced,
        }
    }

    fn down(self) -> Self {
        match self {
            ExperienceLevel::Advanced => ExperienceLevel::Intermediate,
            _ => ExperienceLevel::Beginner,
        }
    }
}

impl fmt::Display for ExperienceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperienceLevel {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperienceLevel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| PersonaError::UnknownLevel(s.to_string()))
    }
}

/// Direction of a one-notch effective-level move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shift {
    Up,
    Down,
    Hold,
}

impl Shift {
    pub fn as_str(self) -> &'static str {
        match self {
            Shift::Up => "up",
            Shift::Down => "down",
            Shift::Hold => "hold",
        }
    }
}

/// The self-reported level next to the runtime-adjusted one used for
/// persona lookup. `declared` is never rewritten by adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectiveLevel {
    pub declared: ExperienceLevel,
    pub current: ExperienceLevel,
}

impl EffectiveLevel {
    pub fn new(declared: ExperienceLevel) -> Self {
        Self {
            declared,
            current: declared,
        }
    }
}

/// Moves `current` one notch, clamping at both ends.
pub fn shift_level(level: EffectiveLevel, direction: Shift) -> EffectiveLevel {
    let current = match direction {
        Shift::Up => level.current.up(),
        Shift::Down => level.current.down(),
        Shift::Hold => level.current,
    };
    EffectiveLevel {
        declared: level.declared,
        current,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PersonaError {
    #[error("module {0} is outside 1..=10")]
    ModuleOutOfRange(u8),
    #[error("no persona stage covers module {module} for {level}")]
    Uncovered { level: ExperienceLevel, module: u8 },
    #[error("module {module} is covered by more than one stage for {level}")]
    Ambiguous { level: ExperienceLevel, module: u8 },
    #[error("unknown persona stage {0:?}")]
    UnknownPersona(String),
    #[error("unknown experience level {0:?}")]
    UnknownLevel(String),
    #[error("schedule line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("schedule fails validation: {0}")]
    Invalid(String),
}

/// Level → stage → inclusive module range. An empty range is written with
/// `start > end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonaSchedule {
    pub table: BTreeMap<ExperienceLevel, BTreeMap<Persona, RangeInclusive<u8>>>,
}

impl Default for PersonaSchedule {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PersonaSchedule {
    /// The compiled-in schedule: beginner 4/3/2/1, intermediate 3/3/3/1,
    /// advanced 1/3/5/1 modules per stage.
    pub fn builtin() -> Self {
        let rows: [(ExperienceLevel, [RangeInclusive<u8>; 4]); 3] = [
            (ExperienceLevel::Beginner, [1..=4, 5..=7, 8..=9, 10..=10]),
            (ExperienceLevel::Intermediate, [1..=3, 4..=6, 7..=9, 10..=10]),
            (ExperienceLevel::Advanced, [1..=1, 2..=4, 5..=9, 10..=10]),
        ];
        let table = rows
            .into_iter()
            .map(|(level, ranges)| (level, Persona::ALL.into_iter().zip(ranges).collect()))
            .collect();
        Self { table }
    }

    /// Parses an override file and layers it over the built-in table.
    ///
    /// ```text
    /// # level = guide, collaborator, peer, launcher
    /// beginner = 1-4, 5-7, 8-9, 10
    /// advanced = 1, 2-4, 5-9, 10
    /// ```
    ///
    /// `none` denotes a stage with no modules. Levels not mentioned keep
    /// their built-in ranges. The result is not validated here; see
    /// [`crate::validator::load_schedule`].
    pub fn parse_override(text: &str) -> Result<Self, PersonaError> {
        let mut schedule = Self::builtin();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| PersonaError::Syntax {
                line: line_no,
                message: "expected `<level> = <four ranges>`".into(),
            })?;
            let level: ExperienceLevel = key.trim().parse()?;
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(PersonaError::Syntax {
                    line: line_no,
                    message: format!("expected 4 ranges, found {}", parts.len()),
                });
            }
            let mut row = BTreeMap::new();
            for (persona, part) in Persona::ALL.into_iter().zip(parts) {
                row.insert(persona, parse_range(part, line_no)?);
            }
            schedule.table.insert(level, row);
        }
        Ok(schedule)
    }

    /// Renders the table in the override format.
    pub fn to_override_text(&self) -> String {
        let mut out = String::new();
        for (level, row) in &self.table {
            let ranges: Vec<String> = Persona::ALL
                .iter()
                .map(|p| match row.get(p) {
                    Some(r) if r.start() > r.end() => "none".to_string(),
                    Some(r) if r.start() == r.end() => r.start().to_string(),
                    Some(r) => format!("{}-{}", r.start(), r.end()),
                    None => "none".to_string(),
                })
                .collect();
            out.push_str(&format!("{} = {}\n", level, ranges.join(", ")));
        }
        out
    }

    /// Stages of `level` whose range contains `module`.
    pub fn stages_covering(&self, level: ExperienceLevel, module: u8) -> Vec<Persona> {
        self.table
            .get(&level)
            .map(|row| {
                row.iter()
                    .filter(|(_, r)| r.contains(&module))
                    .map(|(p, _)| *p)
                    .collect()
            })
            .unwrap_or_default()
    }
}

fn parse_range(part: &str, line: usize) -> Result<RangeInclusive<u8>, PersonaError> {
    let bad = |message: String| PersonaError::Syntax { line, message };
    if part.eq_ignore_ascii_case("none") {
        // A stage the level skips entirely.
        #[allow(clippy::reversed_empty_ranges)]
        return Ok(1..=0);
    }
    let num = |s: &str| -> Result<u8, PersonaError> {
        let n: u8 = s
            .trim()
            .parse()
            .map_err(|_| bad(format!("not a module number: {s:?}")))?;
        if !(FIRST_MODULE..=LAST_MODULE).contains(&n) {
            return Err(bad(format!("module {n} outside 1..=10")));
        }
        Ok(n)
    };
    match part.split_once('-') {
        Some((a, b)) => Ok(num(a)?..=num(b)?),
        None => {
            let n = num(part)?;
            Ok(n..=n)
        }
    }
}

/// The unique stage whose range contains `module` for `level`.
pub fn persona_for(
    schedule: &PersonaSchedule,
    level: ExperienceLevel,
    module: u8,
) -> Result<Persona, PersonaError> {
    if !(FIRST_MODULE..=LAST_MODULE).contains(&module) {
        return Err(PersonaError::ModuleOutOfRange(module));
    }
    match schedule.stages_covering(level, module).as_slice() {
        [only] => Ok(*only),
        [] => Err(PersonaError::Uncovered { level, module }),
        _ => Err(PersonaError::Ambiguous { level, module }),
    }
}
