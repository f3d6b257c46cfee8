use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Category;
use crate::fsutil::atomic_write;

pub const PROFILE_SCHEMA_VERSION: u32 = 1;
pub const RECENT_SCORES_MAX: usize = 10;
pub const WINDOW_MAX: usize = 5;
pub const STREAK_LENGTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Improving,
    Stable,
    Declining,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Improving => "improving",
            Trend::Stable => "stable",
            Trend::Declining => "declining",
        }
    }
}

/// Persisted engagement state for one learner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerProfile {
    pub schema_version: u32,
    pub lifetime_counts: BTreeMap<Category, u64>,
    pub module_id: u8,
    pub module_counts: BTreeMap<Category, u64>,
    pub module_quality_sum: u64,
    /// Most recent last; at most [`RECENT_SCORES_MAX`] entries.
    pub recent_scores: Vec<u8>,
    /// Last non-neutral categories, most recent last; at most [`WINDOW_MAX`].
    pub window: Vec<Category>,
    pub struggle_streak: bool,
    pub engagement_streak: bool,
    pub trend: Trend,
    pub last_updated: Option<DateTime<Utc>>,
}

impl Default for LearnerProfile {
    fn default() -> Self {
        Self::new(1)
    }
}

fn zeroed() -> BTreeMap<Category, u64> {
    Category::ALL.into_iter().map(|c| (c, 0)).collect()
}

impl LearnerProfile {
    pub fn new(module_id: u8) -> Self {
        Self {
            schema_version: PROFILE_SCHEMA_VERSION,
            lifetime_counts: zeroed(),
            module_id,
            module_counts: zeroed(),
            module_quality_sum: 0,
            recent_scores: Vec::new(),
            window: Vec::new(),
            struggle_streak: false,
            engagement_streak: false,
            trend: Trend::Stable,
            last_updated: None,
        }
    }

    pub fn lifetime(&self, c: Category) -> u64 {
        self.lifetime_counts.get(&c).copied().unwrap_or(0)
    }

    pub fn in_module(&self, c: Category) -> u64 {
        self.module_counts.get(&c).copied().unwrap_or(0)
    }

    pub fn lifetime_total(&self) -> u64 {
        self.lifetime_counts.values().sum()
    }

    pub fn module_total(&self) -> u64 {
        self.module_counts.values().sum()
    }

    fn sum_where(map: &BTreeMap<Category, u64>, pred: impl Fn(Category) -> bool) -> u64 {
        map.iter().filter(|(c, _)| pred(**c)).map(|(_, n)| n).sum()
    }

    pub fn lifetime_productive(&self) -> u64 {
        Self::sum_where(&self.lifetime_counts, Category::is_productive)
    }

    pub fn lifetime_unproductive(&self) -> u64 {
        Self::sum_where(&self.lifetime_counts, Category::is_unproductive)
    }

    pub fn lifetime_non_neutral(&self) -> u64 {
        self.lifetime_productive() + self.lifetime_unproductive()
    }

    pub fn module_productive(&self) -> u64 {
        Self::sum_where(&self.module_counts, Category::is_productive)
    }

    pub fn module_unproductive(&self) -> u64 {
        Self::sum_where(&self.module_counts, Category::is_unproductive)
    }

    /// Mean quality over every interaction recorded since the last
    /// boundary, or `None` before the first one.
    pub fn rolling_average(&self) -> Option<f64> {
        let n = self.module_total();
        (n > 0).then(|| self.module_quality_sum as f64 / n as f64)
    }

    /// Records one classified interaction.
    pub fn record(&mut self, category: Category, now: DateTime<Utc>) {
        *self.lifetime_counts.entry(category).or_insert(0) += 1;
        *self.module_counts.entry(category).or_insert(0) += 1;
        self.module_quality_sum += u64::from(category.score());

        self.recent_scores.push(category.score());
        if self.recent_scores.len() > RECENT_SCORES_MAX {
            let excess = self.recent_scores.len() - RECENT_SCORES_MAX;
            self.recent_scores.drain(..excess);
        }
        if !category.is_neutral() {
            self.window.push(category);
            if self.window.len() > WINDOW_MAX {
                let excess = self.window.len() - WINDOW_MAX;
                self.window.drain(..excess);
            }
        }
        let (struggle, engaged) = streak_flags(&self.window);
        assert!(!(struggle && engaged), "streak groups are disjoint");
        self.struggle_streak = struggle;
        self.engagement_streak = engaged;
        self.trend = compute_trend(&self.recent_scores);
        self.last_updated = Some(now);
    }

    /// Starts a fresh module: per-module counters and sum go to zero,
    /// lifetime counts, window and streaks carry over.
    pub fn reset_module(&mut self, next_module: u8) {
        self.module_counts = zeroed();
        self.module_quality_sum = 0;
        self.module_id = next_module;
    }
}

/// Pure form of [`LearnerProfile::record`] stamped with the current time.
pub fn update_profile(profile: &LearnerProfile, category: Category) -> LearnerProfile {
    let mut next = profile.clone();
    next.record(category, Utc::now());
    next
}

/// `(struggle, engagement)`: whether the last [`STREAK_LENGTH`] window
/// entries all fall in the respective group.
pub fn streak_flags(window: &[Category]) -> (bool, bool) {
    if window.len() < STREAK_LENGTH {
        return (false, false);
    }
    let tail = &window[window.len() - STREAK_LENGTH..];
    (
        tail.iter().all(|c| c.is_struggle()),
        tail.iter().all(|c| c.is_engaged()),
    )
}

/// Compares the mean of the last five scores with the five before them.
/// Fewer than ten scores is always `Stable`.
pub fn compute_trend(recent_scores: &[u8]) -> Trend {
    if recent_scores.len() < 10 {
        return Trend::Stable;
    }
    let last10 = &recent_scores[recent_scores.len() - 10..];
    let earlier: i64 = last10[..5].iter().map(|&s| i64::from(s)).sum();
    let later: i64 = last10[5..].iter().map(|&s| i64::from(s)).sum();
    // mean difference > 0.5  <=>  (later - earlier) / 5 > 0.5  <=>  2 * diff > 5
    let doubled = 2 * (later - earlier);
    if doubled > 5 {
        Trend::Improving
    } else if doubled < -5 {
        Trend::Declining
    } else {
        Trend::Stable
    }
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read profile {0}: {1}")]
    Read(PathBuf, #[source] io::Error),
    #[error("profile {0} is not valid JSON: {1}")]
    Decode(PathBuf, #[source] serde_json::Error),
    #[error("profile {path} has schema version {found}, expected {PROFILE_SCHEMA_VERSION}")]
    Schema { path: PathBuf, found: u32 },
    #[error("cannot write profile {0}: {1}")]
    Write(PathBuf, #[source] io::Error),
}

/// JSON persistence for [`LearnerProfile`].
pub struct ProfileStore;

impl ProfileStore {
    /// Loads the profile, or a fresh one when the file does not exist.
    pub fn load_or_init(path: &Path) -> Result<LearnerProfile, ProfileError> {
        match fs::read(path) {
            Ok(bytes) => {
                let profile: LearnerProfile = serde_json::from_slice(&bytes)
                    .map_err(|e| ProfileError::Decode(path.to_path_buf(), e))?;
                if profile.schema_version != PROFILE_SCHEMA_VERSION {
                    return Err(ProfileError::Schema {
                        path: path.to_path_buf(),
                        found: profile.schema_version,
                    });
                }
                Ok(profile)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(LearnerProfile::default()),
            Err(e) => Err(ProfileError::Read(path.to_path_buf(), e)),
        }
    }

    pub fn save(path: &Path, profile: &LearnerProfile) -> Result<(), ProfileError> {
        let mut json = serde_json::to_vec_pretty(profile).expect("profile serializes");
        json.push(b'\n');
        atomic_write(path, &json).map_err(|e| ProfileError::Write(path.to_path_buf(), e))
    }
}
