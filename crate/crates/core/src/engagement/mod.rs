//! Engagement observation: keyword classification of learner messages and
//! the persisted learner profile they accumulate into.

mod observe;
mod profile;

pub use observe::{last_exchange, observe, LastExchange, ObserveStatus, TranscriptError};
pub use profile::{
    compute_trend, streak_flags, update_profile, LearnerProfile, ProfileError, ProfileStore, Trend,
    PROFILE_SCHEMA_VERSION, RECENT_SCORES_MAX, STREAK_LENGTH, WINDOW_MAX,
};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ConceptQuestion,
    IndependentExploration,
    DebugAttempt,
    Neutral,
    AnswerSeeking,
    PassiveAcceptance,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::ConceptQuestion,
        Category::IndependentExploration,
        Category::DebugAttempt,
        Category::Neutral,
        Category::AnswerSeeking,
        Category::PassiveAcceptance,
    ];

    pub fn score(self) -> u8 {
        match self {
            Category::ConceptQuestion => 5,
            Category::IndependentExploration => 4,
            Category::DebugAttempt | Category::Neutral => 3,
            Category::AnswerSeeking | Category::PassiveAcceptance => 1,
        }
    }

    pub fn is_productive(self) -> bool {
        matches!(
            self,
            Category::ConceptQuestion | Category::IndependentExploration | Category::DebugAttempt
        )
    }

    pub fn is_unproductive(self) -> bool {
        matches!(self, Category::AnswerSeeking | Category::PassiveAcceptance)
    }

    pub fn is_neutral(self) -> bool {
        self == Category::Neutral
    }

    /// Members of the struggle streak group.
    pub fn is_struggle(self) -> bool {
        self.is_unproductive()
    }

    /// Members of the engagement streak group. Debug attempts belong to
    /// neither group and so interrupt both streaks.
    pub fn is_engaged(self) -> bool {
        matches!(self, Category::ConceptQuestion | Category::IndependentExploration)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::ConceptQuestion => "concept_question",
            Category::IndependentExploration => "independent_exploration",
            Category::DebugAttempt => "debug_attempt",
            Category::Neutral => "neutral",
            Category::AnswerSeeking => "answer_seeking",
            Category::PassiveAcceptance => "passive_acceptance",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| LexiconError::UnknownCategory(s.to_string()))
    }
}

/// Keyword phrases per category plus the passive-reply length thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    phrases: BTreeMap<Category, Vec<String>>,
    /// Replies strictly shorter than this many characters may be passive.
    pub passive_short_max: usize,
    /// ...when answering an assistant turn at least this long.
    pub assistant_long_min: usize,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("lexicon is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("category {0} needs at least one phrase")]
    EmptyCategory(Category),
    #[error("category {0} is not keyword-matched and cannot carry phrases")]
    PhrasesNotAllowed(Category),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    passive_short_max: Option<usize>,
    assistant_long_min: Option<usize>,
    #[serde(default)]
    phrases: BTreeMap<String, Vec<String>>,
}

impl Default for Lexicon {
    fn default() -> Self {
        let seed = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut phrases = BTreeMap::new();
        phrases.insert(
            Category::ConceptQuestion,
            seed(&["why does", "why do", "why is", "how does", "how do", "explain"]),
        );
        phrases.insert(
            Category::IndependentExploration,
            seed(&[
                "i tried",
                "i've tried",
                "i have tried",
                "i noticed",
                "i figured out",
                "i figured it out",
            ]),
        );
        phrases.insert(
            Category::DebugAttempt,
            seed(&[
                "error",
                "not working",
                "isn't working",
                "doesn't work",
                "does not work",
                "fails",
                "failing",
            ]),
        );
        phrases.insert(
            Category::AnswerSeeking,
            seed(&[
                "just do it",
                "do it for me",
                "write it for me",
                "give me the code",
                "just give me",
                "just write",
            ]),
        );
        Self {
            phrases,
            passive_short_max: 15,
            assistant_long_min: 500,
        }
    }
}

impl Lexicon {
    /// Layers a TOML lexicon file over the defaults. Categories named in the
    /// file replace the default phrase list wholesale.
    ///
    /// ```toml
    /// passive_short_max = 15
    /// assistant_long_min = 500
    /// [phrases]
    /// answer_seeking = ["just do it", "write it for me"]
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = toml::from_str(text)?;
        let mut lex = Self::default();
        if let Some(n) = file.passive_short_max {
            lex.passive_short_max = n;
        }
        if let Some(n) = file.assistant_long_min {
            lex.assistant_long_min = n;
        }
        for (name, list) in file.phrases {
            let cat: Category = name.parse()?;
            lex.phrases.insert(cat, list);
        }
        lex.normalized()
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LexiconError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    fn normalized(mut self) -> Result<Self, LexiconError> {
        for list in self.phrases.values_mut() {
            *list = list
                .iter()
                .map(|p| normalize_text(p.trim()))
                .filter(|p| !p.is_empty())
                .collect();
        }
        for cat in Category::ALL {
            let has = self.phrases.get(&cat).is_some_and(|l| !l.is_empty());
            let keyword_matched = !matches!(cat, Category::Neutral | Category::PassiveAcceptance);
            if keyword_matched && !has {
                return Err(LexiconError::EmptyCategory(cat));
            }
            if !keyword_matched && has {
                return Err(LexiconError::PhrasesNotAllowed(cat));
            }
        }
        self.phrases.retain(|_, l| !l.is_empty());
        Ok(self)
    }

    pub fn phrases(&self, category: Category) -> &[String] {
        self.phrases.get(&category).map_or(&[], Vec::as_slice)
    }

    fn matches(&self, category: Category, normalized_message: &str) -> bool {
        self.phrases(category)
            .iter()
            .any(|p| normalized_message.contains(p.as_str()))
    }
}

/// Lower-cases and folds typographic apostrophes so phrase matching is
/// insensitive to both.
fn normalize_text(s: &str) -> String {
    s.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'")
}

/// Keyword categories in match precedence order.
const PRECEDENCE: [Category; 4] = [
    Category::AnswerSeeking,
    Category::ConceptQuestion,
    Category::IndependentExploration,
    Category::DebugAttempt,
];

/// Classifies the learner's latest message.
///
/// Explicit answer demands win over any embedded question words, then
/// concept questions, exploration and debugging phrases in that order. An
/// unmatched very short reply to a long assistant turn is passive
/// acceptance; anything else is neutral.
pub fn classify(message: &str, prior_assistant_length: usize, lexicon: &Lexicon) -> Category {
    let normalized = normalize_text(message);
    if let Some(cat) = PRECEDENCE.into_iter().find(|c| lexicon.matches(*c, &normalized)) {
        return cat;
    }
    let len = message.trim().chars().count();
    if len < lexicon.passive_short_max && prior_assistant_length >= lexicon.assistant_long_min {
        return Category::PassiveAcceptance;
    }
    Category::Neutral
}
