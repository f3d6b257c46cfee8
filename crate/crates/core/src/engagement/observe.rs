use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde_json::Value;
use thiserror::Error;

use super::profile::{LearnerProfile, ProfileError, ProfileStore};
use super::{classify, Category, Lexicon};
use crate::fsutil::{sibling_lock_path, FileLock, LockAttempt, DEFAULT_STALE_AFTER};

/// The learner's latest message and the length of the assistant turn it
/// answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LastExchange {
    pub message: String,
    /// Characters of assistant text between the previous learner message and
    /// this one; 0 when the learner spoke first.
    pub prior_assistant_length: usize,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("cannot read transcript {0}: {1}")]
    Unreadable(PathBuf, #[source] io::Error),
}

enum Turn {
    User(String),
    Assistant(usize),
    Other,
}

/// Extracts role and text from one transcript line. Accepts the flat
/// `{"role", "content"}` layout and the nested `{"message": {...}}` layout,
/// with content given either as a string or as an array of typed blocks.
fn parse_turn(line: &str) -> Turn {
    let Ok(record) = serde_json::from_str::<Value>(line) else {
        return Turn::Other;
    };
    let inner = record.get("message").filter(|m| m.is_object()).unwrap_or(&record);
    let role = inner
        .get("role")
        .or_else(|| record.get("role"))
        .or_else(|| record.get("type"))
        .and_then(Value::as_str);
    let text = inner.get("content").and_then(content_text);
    match (role, text) {
        (Some("user"), Some(t)) => Turn::User(t),
        (Some("assistant"), t) => Turn::Assistant(t.map_or(0, |t| t.chars().count())),
        _ => Turn::Other,
    }
}

fn content_text(content: &Value) -> Option<String> {
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(blocks) => {
            let parts: Vec<&str> = blocks
                .iter()
                .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
                .filter_map(|b| b.get("text").and_then(Value::as_str))
                .collect();
            (!parts.is_empty()).then(|| parts.join("\n"))
        }
        _ => None,
    }
}

/// Finds the last learner message in transcript text, scanning from the end
/// so long transcripts only pay for the tail. Malformed lines are ignored.
pub fn last_exchange(transcript: &str) -> Option<LastExchange> {
    let mut lines = transcript.lines().rev();
    let message = lines.by_ref().find_map(|l| match parse_turn(l) {
        Turn::User(t) => Some(t),
        _ => None,
    })?;
    let mut prior_assistant_length = 0;
    for line in lines {
        match parse_turn(line) {
            Turn::User(_) => break,
            Turn::Assistant(n) => prior_assistant_length += n,
            Turn::Other => {}
        }
    }
    Some(LastExchange {
        message,
        prior_assistant_length,
    })
}

/// Outcome of one [`observe`] call. Every variant other than `Applied`
/// leaves the profile untouched.
#[derive(Debug)]
pub enum ObserveStatus {
    Applied(Category),
    LockHeld,
    TranscriptUnreadable(TranscriptError),
    NoLearnerMessage,
    ProfileUnusable(ProfileError),
    LockFailed(io::Error),
}

impl ObserveStatus {
    /// Distinct status code per outcome; 0 only for `Applied`.
    pub fn code(&self) -> u8 {
        match self {
            ObserveStatus::Applied(_) => 0,
            ObserveStatus::LockHeld => 10,
            ObserveStatus::TranscriptUnreadable(_) => 11,
            ObserveStatus::NoLearnerMessage => 12,
            ObserveStatus::ProfileUnusable(_) => 13,
            ObserveStatus::LockFailed(_) => 14,
        }
    }

    pub fn applied(&self) -> Option<Category> {
        match self {
            ObserveStatus::Applied(c) => Some(*c),
            _ => None,
        }
    }

    /// One-line diagnostic for the host's error stream.
    pub fn reason(&self) -> String {
        match self {
            ObserveStatus::Applied(c) => format!("applied: {c}"),
            ObserveStatus::LockHeld => "skipped: lock held".to_string(),
            ObserveStatus::TranscriptUnreadable(e) => format!("skipped: {e}"),
            ObserveStatus::NoLearnerMessage => "skipped: no learner message".to_string(),
            ObserveStatus::ProfileUnusable(e) => format!("skipped: {e}"),
            ObserveStatus::LockFailed(e) => format!("skipped: cannot take lock: {e}"),
        }
    }
}

/// Classifies the latest learner message in `transcript_path` and folds it
/// into the profile at `profile_path` under the profile's lock.
pub fn observe(transcript_path: &Path, profile_path: &Path, lexicon: &Lexicon) -> ObserveStatus {
    observe_at(
        transcript_path,
        profile_path,
        lexicon,
        Utc::now(),
        DEFAULT_STALE_AFTER,
    )
}

pub(crate) fn observe_at(
    transcript_path: &Path,
    profile_path: &Path,
    lexicon: &Lexicon,
    now: DateTime<Utc>,
    stale_after: Duration,
) -> ObserveStatus {
    let text = match fs::read(transcript_path) {
        Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
        Err(e) => {
            return ObserveStatus::TranscriptUnreadable(TranscriptError::Unreadable(
                transcript_path.to_path_buf(),
                e,
            ))
        }
    };
    let Some(exchange) = last_exchange(&text) else {
        return ObserveStatus::NoLearnerMessage;
    };
    let category = classify(&exchange.message, exchange.prior_assistant_length, lexicon);

    let _lock = match FileLock::try_acquire(sibling_lock_path(profile_path), stale_after) {
        Ok(LockAttempt::Acquired(lock)) => lock,
        Ok(LockAttempt::Held) => return ObserveStatus::LockHeld,
        Err(e) => return ObserveStatus::LockFailed(e),
    };
    let mut profile: LearnerProfile = match ProfileStore::load_or_init(profile_path) {
        Ok(p) => p,
        Err(e) => return ObserveStatus::ProfileUnusable(e),
    };
    profile.record(category, now);
    match ProfileStore::save(profile_path, &profile) {
        Ok(()) => ObserveStatus::Applied(category),
        Err(e) => ObserveStatus::ProfileUnusable(e),
    }
}
