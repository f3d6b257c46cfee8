//! Engine for a persona-staged, multi-path coding curriculum.
//!
//! The crate parses the module-file corpus ([`corpus`]), checks its
//! structural rules ([`validator`]), maps learners to persona stages
//! ([`persona`]), classifies their messages into an engagement profile
//! ([`engagement`]), turns that profile into teaching notes and level moves
//! ([`adaptation`]), tracks onboarding and step progress ([`session`]), and
//! appends changelog-driven updates to modules without disturbing existing
//! content ([`sync`]).

pub mod adaptation;
pub mod corpus;
pub mod engagement;
pub mod fsutil;
pub mod persona;
pub mod session;
pub mod sync;
pub mod validator;

pub use adaptation::{
    apply_boundary, decide_boundary, make_note, BoundaryDecision, BoundaryOutcome, NoteTemplates,
    StreakAlert, TeachingNote, Tier,
};
pub use corpus::{
    load_corpus, parse_module, Corpus, ModuleDoc, ParseError, ParseErrorCode, PathId, Step,
    StepLabel,
};
pub use engagement::{
    classify, compute_trend, observe, update_profile, Category, LearnerProfile, Lexicon,
    ObserveStatus, ProfileStore, Trend,
};
pub use persona::{
    persona_for, shift_level, EffectiveLevel, ExperienceLevel, Persona, PersonaSchedule, Shift,
};
pub use session::{
    pre_advance_check, record_step, resume_check, OnboardingState, ResumeStatus, SessionMarkers,
    Stage, StageInput,
};
pub use sync::{
    apply_update, detect_gap, map_entries, run_sync, triage, ChangelogEntry, FeatureMap, SyncPlan,
    SyncScope, UpdatePayload, Version,
};
pub use validator::{
    validate_all, validate_completeness, validate_parity, validate_schedules, validate_structure,
    RuleId, RuleSet, ValidationReport, Violation,
};
