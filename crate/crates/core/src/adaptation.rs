//! Session-start teaching notes and module-boundary level moves.

use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engagement::{Category, LearnerProfile, ProfileError, ProfileStore, Trend};
use crate::fsutil::{sibling_lock_path, FileLock, LockAttempt, DEFAULT_STALE_AFTER};
use crate::persona::{shift_level, EffectiveLevel, Shift, LAST_MODULE};

/// Fewest lifetime non-neutral interactions before a note is produced.
pub const NOTE_MIN_NON_NEUTRAL: u64 = 5;

pub const STRUGGLE_DIRECTIVE: &str = "Offer more scaffolding NOW";
pub const FLOW_DIRECTIVE: &str = "Student is in flow. Match with deeper content.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Encourage,
    Redirect,
    Structure,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Encourage => "encourage",
            Tier::Redirect => "redirect",
            Tier::Structure => "structure",
        }
    }

    /// Tier for `productive / (productive + unproductive)`, compared exactly:
    /// encourage at 0.7 and above, redirect from 0.4 up to 0.7, structure
    /// below 0.4.
    pub fn for_counts(productive: u64, unproductive: u64) -> Tier {
        let total = productive + unproductive;
        if 10 * productive >= 7 * total {
            Tier::Encourage
        } else if 10 * productive >= 4 * total {
            Tier::Redirect
        } else {
            Tier::Structure
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreakAlert {
    Struggle,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeachingNote {
    pub trend: Trend,
    pub dominant_pattern: Category,
    pub tier: Tier,
    pub streak_alert: Option<StreakAlert>,
    pub productive_ratio: f64,
    pub rendered: String,
}

/// Configurable wording for notes. The two streak directives are fixed and
/// always appended verbatim; everything else can be replaced from TOML.
///
/// `summary` may use `{trend}`, `{pattern}`, `{tier}` and `{ratio}`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoteTemplates {
    pub summary: String,
    pub encourage: String,
    pub redirect: String,
    pub structure: String,
    pub struggle_detail: String,
    pub flow_detail: String,
}

impl Default for NoteTemplates {
    fn default() -> Self {
        Self {
            summary: "Learner engagement: trend {trend}, most frequent pattern {pattern}, \
                      productive ratio {ratio} ({tier})."
                .to_string(),
            encourage: "Keep handing over open questions and let the learner drive the next step."
                .to_string(),
            redirect: "When asked for code, reply with a guiding question first and let the \
                       learner attempt it."
                .to_string(),
            structure: "Work in small explicit steps and confirm each one before moving on."
                .to_string(),
            struggle_detail: "Break the current step into smaller pieces and show a worked example."
                .to_string(),
            flow_detail: "Skip the basics and raise one harder follow-up question.".to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read templates {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("templates are not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
}

impl NoteTemplates {
    pub fn from_toml(text: &str) -> Result<Self, TemplateError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TemplateError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    fn tier_text(&self, tier: Tier) -> &str {
        match tier {
            Tier::Encourage => &self.encourage,
            Tier::Redirect => &self.redirect,
            Tier::Structure => &self.structure,
        }
    }
}

/// Most frequent non-neutral lifetime category; ties go to the higher score,
/// then to the earlier category in declaration order.
pub fn dominant_pattern(profile: &LearnerProfile) -> Option<Category> {
    Category::ALL
        .into_iter()
        .filter(|c| !c.is_neutral())
        .map(|c| (c, profile.lifetime(c)))
        .filter(|(_, n)| *n > 0)
        .fold(None, |best: Option<(Category, u64)>, (c, n)| match best {
            Some((b, bn)) if bn > n || (bn == n && b.score() >= c.score()) => Some((b, bn)),
            _ => Some((c, n)),
        })
        .map(|(c, _)| c)
}

pub fn make_note(profile: &LearnerProfile) -> Option<TeachingNote> {
    make_note_with(profile, &NoteTemplates::default())
}

pub fn make_note_with(profile: &LearnerProfile, templates: &NoteTemplates) -> Option<TeachingNote> {
    let productive = profile.lifetime_productive();
    let unproductive = profile.lifetime_unproductive();
    if productive + unproductive < NOTE_MIN_NON_NEUTRAL {
        return None;
    }
    let dominant = dominant_pattern(profile)?;
    let tier = Tier::for_counts(productive, unproductive);
    let ratio = productive as f64 / (productive + unproductive) as f64;
    let alert = if profile.struggle_streak {
        Some(StreakAlert::Struggle)
    } else if profile.engagement_streak {
        Some(StreakAlert::Flow)
    } else {
        None
    };

    let mut rendered = templates
        .summary
        .replace("{trend}", profile.trend.as_str())
        .replace("{pattern}", dominant.as_str())
        .replace("{tier}", tier.as_str())
        .replace("{ratio}", &format!("{ratio:.2}"));
    rendered.push('\n');
    rendered.push_str(templates.tier_text(tier));
    rendered.push('\n');
    match alert {
        Some(StreakAlert::Struggle) => {
            rendered.push_str(&format!("{STRUGGLE_DIRECTIVE}. {}\n", templates.struggle_detail));
        }
        Some(StreakAlert::Flow) => {
            rendered.push_str(&format!("{FLOW_DIRECTIVE} {}\n", templates.flow_detail));
        }
        None => {}
    }

    Some(TeachingNote {
        trend: profile.trend,
        dominant_pattern: dominant,
        tier,
        streak_alert: alert,
        productive_ratio: ratio,
        rendered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryDecision {
    pub direction: Shift,
    pub module_average: f64,
    pub productive_share: f64,
    pub unproductive_share: f64,
}

/// Decides the effective-level move at a module boundary from the module's
/// counters. Thresholds are compared in integer arithmetic so values sitting
/// exactly on a boundary land on the side the inequality says.
pub fn decide_boundary(profile: &LearnerProfile) -> BoundaryDecision {
    let total = profile.module_total();
    let sum = profile.module_quality_sum;
    let productive = profile.module_productive();
    let unproductive = profile.module_unproductive();
    let non_neutral = productive + unproductive;

    let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let module_average = ratio(sum, total);
    let productive_share = ratio(productive, non_neutral);
    let unproductive_share = ratio(unproductive, non_neutral);

    let direction = if non_neutral == 0 {
        Shift::Hold
    } else if 10 * sum >= 38 * total && 10 * productive > 6 * non_neutral {
        Shift::Up
    } else if sum <= 2 * total && 2 * unproductive > non_neutral {
        Shift::Down
    } else {
        Shift::Hold
    };

    BoundaryDecision {
        direction,
        module_average,
        productive_share,
        unproductive_share,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOutcome {
    pub profile: LearnerProfile,
    pub level: EffectiveLevel,
    pub decision: BoundaryDecision,
}

/// Decides, shifts the level at most one notch, and starts the next module's
/// counters. Lifetime counts, the window and the streak flags carry over.
pub fn apply_boundary(profile: &LearnerProfile, level: EffectiveLevel) -> BoundaryOutcome {
    let decision = decide_boundary(profile);
    let mut next = profile.clone();
    next.reset_module((profile.module_id + 1).min(LAST_MODULE));
    BoundaryOutcome {
        profile: next,
        level: shift_level(level, decision.direction),
        decision,
    }
}

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("profile lock {0} is held")]
    LockHeld(String),
    #[error("cannot take profile lock: {0}")]
    Lock(#[source] std::io::Error),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// [`apply_boundary`] against the stored profile, under the same lock the
/// observer uses.
pub fn apply_boundary_file(
    profile_path: &Path,
    level: EffectiveLevel,
    now: DateTime<Utc>,
) -> Result<BoundaryOutcome, BoundaryError> {
    let lock_path = sibling_lock_path(profile_path);
    let _lock = match FileLock::try_acquire(&lock_path, DEFAULT_STALE_AFTER) {
        Ok(LockAttempt::Acquired(lock)) => lock,
        Ok(LockAttempt::Held) => return Err(BoundaryError::LockHeld(lock_path.display().to_string())),
        Err(e) => return Err(BoundaryError::Lock(e)),
    };
    let profile = ProfileStore::load_or_init(profile_path)?;
    let mut outcome = apply_boundary(&profile, level);
    outcome.profile.last_updated = Some(now);
    ProfileStore::save(profile_path, &outcome.profile)?;
    Ok(outcome)
}
