//! Resumable onboarding and cross-session step tracking.

mod markers;
mod onboarding;

pub use markers::{
    parse_markers, pre_advance_check, record_step, write_markers, MarkerError, MarkerFileError,
    MarkerStore, SessionMarkers, StepError, REGION_BEGIN, REGION_END,
};
pub use onboarding::{
    resume_check, Answers, FlowContext, OnboardingError, OnboardingState, OnboardingStore,
    ResumeStatus, Stage, StageInput, StateFileError, ONBOARDING_SCHEMA_VERSION,
};
