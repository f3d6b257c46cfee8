use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::markers::SessionMarkers;
use crate::corpus::PathId;
use crate::fsutil::atomic_write;
use crate::persona::ExperienceLevel;
use crate::sync::{detect_gap, BadVersion};

pub const ONBOARDING_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    VersionCheck,
    ProjectSelection,
    CurriculumUpgrade,
    OsDetection,
    LanguageSelection,
    ExperienceLevel,
    ProgressResume,
    EnvVerification,
    Scaffolding,
    Module1Delivery,
    Complete,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::VersionCheck,
        Stage::ProjectSelection,
        Stage::CurriculumUpgrade,
        Stage::OsDetection,
        Stage::LanguageSelection,
        Stage::ExperienceLevel,
        Stage::ProgressResume,
        Stage::EnvVerification,
        Stage::Scaffolding,
        Stage::Module1Delivery,
        Stage::Complete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::VersionCheck => "version_check",
            Stage::ProjectSelection => "project_selection",
            Stage::CurriculumUpgrade => "curriculum_upgrade",
            Stage::OsDetection => "os_detection",
            Stage::LanguageSelection => "language_selection",
            Stage::ExperienceLevel => "experience_level",
            Stage::ProgressResume => "progress_resume",
            Stage::EnvVerification => "env_verification",
            Stage::Scaffolding => "scaffolding",
            Stage::Module1Delivery => "module1_delivery",
            Stage::Complete => "complete",
        }
    }

    fn successor(self) -> Option<Stage> {
        let i = Stage::ALL.iter().position(|s| *s == self)?;
        Stage::ALL.get(i + 1).copied()
    }

    /// What the stage expects as input, for error messages and usage text.
    pub fn expects(self) -> &'static str {
        match self {
            Stage::VersionCheck => "curriculum and latest versions",
            Stage::ProjectSelection => "a project path",
            Stage::OsDetection => "an operating system name",
            Stage::LanguageSelection => "a language",
            Stage::ExperienceLevel => "an experience level",
            Stage::ProgressResume => "a resume decision",
            Stage::CurriculumUpgrade
            | Stage::EnvVerification
            | Stage::Scaffolding
            | Stage::Module1Delivery => "confirmation that the host finished the stage",
            Stage::Complete => "nothing",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s.trim())
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answers {
    pub curriculum_version: Option<String>,
    pub latest_version: Option<String>,
    pub project: Option<PathId>,
    pub os: Option<String>,
    pub language: Option<String>,
    pub experience: Option<ExperienceLevel>,
    pub resume: Option<bool>,
}

/// One answer for the current stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageInput {
    VersionCheck { curriculum: String, latest: String },
    Project(PathId),
    Os(String),
    Language(String),
    Experience(ExperienceLevel),
    Resume(bool),
    /// Host-side stages (upgrade, environment check, scaffolding, module
    /// delivery) only report completion.
    Done,
}

/// Facts about the workspace that decide skips but are not answers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowContext {
    pub prior_markers: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OnboardingError {
    #[error("stage {stage} expects {}", stage.expects())]
    WrongInput { stage: Stage },
    #[error("onboarding is already complete")]
    AlreadyComplete,
    #[error(transparent)]
    Version(#[from] BadVersion),
    #[error("state is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnboardingState {
    pub schema_version: u32,
    pub stage: Stage,
    pub answers: Answers,
    /// Set at version check; decides whether the upgrade stage runs.
    pub version_gap: bool,
    pub updated_at: Option<DateTime<Utc>>,
}

impl Default for OnboardingState {
    fn default() -> Self {
        Self {
            schema_version: ONBOARDING_SCHEMA_VERSION,
            stage: Stage::VersionCheck,
            answers: Answers::default(),
            version_gap: false,
            updated_at: None,
        }
    }
}

impl OnboardingState {
    fn skips(&self, stage: Stage, ctx: FlowContext) -> bool {
        match stage {
            Stage::CurriculumUpgrade => !self.version_gap,
            Stage::LanguageSelection => !self.answers.project.is_some_and(PathId::needs_language),
            Stage::ProgressResume => !ctx.prior_markers,
            _ => false,
        }
    }

    fn next_stage(&self, ctx: FlowContext) -> Stage {
        let mut stage = self.stage;
        loop {
            stage = stage.successor().unwrap_or(Stage::Complete);
            if !self.skips(stage, ctx) {
                return stage;
            }
        }
    }

    /// Records `input` for the current stage and moves to the next stage
    /// that is not skipped. Does not touch the filesystem.
    pub fn advance(
        &self,
        input: StageInput,
        ctx: FlowContext,
        now: DateTime<Utc>,
    ) -> Result<OnboardingState, OnboardingError> {
        if self.stage == Stage::Complete {
            return Err(OnboardingError::AlreadyComplete);
        }
        let mut next = self.clone();
        let a = &mut next.answers;
        match (self.stage, input) {
            (Stage::VersionCheck, StageInput::VersionCheck { curriculum, latest }) => {
                next.version_gap = detect_gap(&curriculum, &latest)?.is_some();
                a.curriculum_version = Some(curriculum);
                a.latest_version = Some(latest);
            }
            (Stage::ProjectSelection, StageInput::Project(p)) => {
                a.project = Some(p);
                if !p.needs_language() {
                    a.language = None;
                }
            }
            (Stage::OsDetection, StageInput::Os(os)) => a.os = Some(os),
            (Stage::LanguageSelection, StageInput::Language(l)) => a.language = Some(l),
            (Stage::ExperienceLevel, StageInput::Experience(e)) => a.experience = Some(e),
            (Stage::ProgressResume, StageInput::Resume(r)) => a.resume = Some(r),
            (
                Stage::CurriculumUpgrade
                | Stage::EnvVerification
                | Stage::Scaffolding
                | Stage::Module1Delivery,
                StageInput::Done,
            ) => {}
            (stage, _) => return Err(OnboardingError::WrongInput { stage }),
        }
        next.stage = self.next_stage(ctx);
        next.updated_at = Some(now);
        Ok(next)
    }

    /// Checks that every answer required by a stage already passed is
    /// present.
    pub fn check_consistency(&self) -> Result<(), OnboardingError> {
        let bad = |m: &str| Err(OnboardingError::Inconsistent(m.to_string()));
        let a = &self.answers;
        if self.schema_version != ONBOARDING_SCHEMA_VERSION {
            return bad("unsupported schema version");
        }
        if self.stage > Stage::VersionCheck
            && (a.curriculum_version.is_none() || a.latest_version.is_none())
        {
            return bad("past version_check without versions");
        }
        if self.stage > Stage::ProjectSelection && a.project.is_none() {
            return bad("past project_selection without a project");
        }
        if self.stage == Stage::CurriculumUpgrade && !self.version_gap {
            return bad("at curriculum_upgrade without a version gap");
        }
        if self.stage > Stage::OsDetection && a.os.is_none() {
            return bad("past os_detection without an os");
        }
        let needs_language = a.project.is_some_and(PathId::needs_language);
        if self.stage == Stage::LanguageSelection && !needs_language {
            return bad("at language_selection for a project without languages");
        }
        if self.stage > Stage::LanguageSelection && needs_language && a.language.is_none() {
            return bad("past language_selection without a language");
        }
        if self.stage > Stage::ExperienceLevel && a.experience.is_none() {
            return bad("past experience_level without a level");
        }
        Ok(())
    }
}

/// Outcome of comparing a prior markers file with the current answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResumeStatus {
    Fresh,
    ResumeValid,
    ResumeConflict,
}

impl ResumeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ResumeStatus::Fresh => "fresh",
            ResumeStatus::ResumeValid => "resume_valid",
            ResumeStatus::ResumeConflict => "resume_conflict",
        }
    }
}

/// Prior progress is valid to resume only when it was made on the same
/// project at the same declared level.
pub fn resume_check(state: &OnboardingState, markers: Option<&SessionMarkers>) -> ResumeStatus {
    let Some(m) = markers else {
        return ResumeStatus::Fresh;
    };
    let same_project = m.project.is_some() && m.project == state.answers.project;
    let same_level = Some(m.level.declared) == state.answers.experience;
    if same_project && same_level {
        ResumeStatus::ResumeValid
    } else {
        ResumeStatus::ResumeConflict
    }
}

#[derive(Debug, Error)]
pub enum StateFileError {
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, #[source] io::Error),
    #[error("{0} is not a valid onboarding state: {1}")]
    Decode(PathBuf, #[source] serde_json::Error),
    #[error("{0}: {1}")]
    Invalid(PathBuf, #[source] OnboardingError),
    #[error("cannot write {0}: {1}")]
    Write(PathBuf, #[source] io::Error),
    #[error(transparent)]
    Advance(#[from] OnboardingError),
}

pub struct OnboardingStore;

impl OnboardingStore {
    /// Loads a saved state, or the initial state when none exists.
    pub fn load(path: &Path) -> Result<OnboardingState, StateFileError> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(OnboardingState::default()),
            Err(e) => return Err(StateFileError::Read(path.to_path_buf(), e)),
        };
        let state: OnboardingState = serde_json::from_slice(&bytes)
            .map_err(|e| StateFileError::Decode(path.to_path_buf(), e))?;
        state
            .check_consistency()
            .map_err(|e| StateFileError::Invalid(path.to_path_buf(), e))?;
        Ok(state)
    }

    pub fn save(path: &Path, state: &OnboardingState) -> Result<(), StateFileError> {
        let mut json = serde_json::to_vec_pretty(state).expect("state serializes");
        json.push(b'\n');
        atomic_write(path, &json).map_err(|e| StateFileError::Write(path.to_path_buf(), e))
    }

    /// Load, advance, and persist before returning.
    pub fn advance(
        path: &Path,
        input: StageInput,
        ctx: FlowContext,
        now: DateTime<Utc>,
    ) -> Result<OnboardingState, StateFileError> {
        let next = Self::load(path)?.advance(input, ctx, now)?;
        Self::save(path, &next)?;
        Ok(next)
    }
}
