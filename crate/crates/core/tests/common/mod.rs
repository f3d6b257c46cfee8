//! Helpers shared by the integration tests of this crate and the CLI's
//! acceptance suite (which includes this file by path).
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

pub mod criteria;
pub mod syncgen;

/// `tests/fixtures` of the core crate, from either crate's test binaries.
pub fn fixtures_dir() -> PathBuf {
    let here = Path::new(env!("CARGO_MANIFEST_DIR"));
    let own = here.join("tests/fixtures");
    if own.join("golden").is_dir() {
        own
    } else {
        here.join("../core/tests/fixtures")
    }
}

pub fn golden_dir() -> PathBuf {
    fixtures_dir().join("golden")
}

pub fn copy_tree(src: &Path, dst: &Path) {
    for entry in walkdir::WalkDir::new(src) {
        let entry = entry.unwrap();
        let rel = entry.path().strip_prefix(src).unwrap();
        let target = dst.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&target).unwrap();
        } else {
            fs::copy(entry.path(), &target).unwrap();
        }
    }
}

/// A fresh copy of the golden corpus in a temporary directory.
pub fn golden_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&golden_dir(), dir.path());
    dir
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    Delete { file: String },
    Create { file: String, text: String },
    Replace { file: String, find: String, with: String },
    Truncate { file: String },
}

impl Mutation {
    pub fn file(&self) -> &str {
        match self {
            Mutation::Delete { file }
            | Mutation::Create { file, .. }
            | Mutation::Replace { file, .. }
            | Mutation::Truncate { file } => file,
        }
    }

    pub fn apply(&self, root: &Path) {
        let path = root.join(self.file());
        match self {
            Mutation::Delete { .. } => {
                if path.is_dir() {
                    fs::remove_dir_all(&path).unwrap();
                } else {
                    fs::remove_file(&path).unwrap();
                }
            }
            Mutation::Create { text, .. } => fs::write(&path, text).unwrap(),
            Mutation::Replace { find, with, .. } => {
                let text = fs::read_to_string(&path).unwrap();
                assert!(text.contains(find.as_str()), "{find:?} not in {}", path.display());
                fs::write(&path, text.replacen(find.as_str(), with, 1)).unwrap();
            }
            Mutation::Truncate { .. } => fs::write(&path, b"").unwrap(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct Case {
    pub name: String,
    pub expect: Vec<String>,
    #[serde(default)]
    pub mutation: Vec<Mutation>,
    pub schedule: Option<String>,
}

impl Case {
    pub fn apply(&self, root: &Path) {
        for m in &self.mutation {
            m.apply(root);
        }
    }

    /// Built-in schedule with this case's override layered on.
    pub fn schedule(&self) -> curricula_core::PersonaSchedule {
        match &self.schedule {
            Some(text) => curricula_core::PersonaSchedule::parse_override(text).unwrap(),
            None => curricula_core::PersonaSchedule::builtin(),
        }
    }

    pub fn sorted_expect(&self) -> Vec<String> {
        let mut e = self.expect.clone();
        e.sort();
        e
    }
}

#[derive(Debug, Deserialize)]
struct Manifest {
    case: Vec<Case>,
}

pub fn mutation_cases() -> Vec<Case> {
    let text = fs::read_to_string(fixtures_dir().join("mutations.toml")).unwrap();
    toml::from_str::<Manifest>(&text).unwrap().case
}

/// `(persona, start, end)` with a half-open module range.
pub type Band = (&'static str, u8, u8);

/// The published persona table, with Python's half-open `range(a, b)`.
pub const PUBLISHED_MAP: [(&str, [Band; 4]); 3] = [
    (
        "beginner",
        [("Guide", 1, 5), ("Collaborator", 5, 8), ("Peer", 8, 10), ("Launcher", 10, 11)],
    ),
    (
        "intermediate",
        [("Guide", 1, 4), ("Collaborator", 4, 7), ("Peer", 7, 10), ("Launcher", 10, 11)],
    ),
    (
        "advanced",
        [("Guide", 1, 2), ("Collaborator", 2, 5), ("Peer", 5, 10), ("Launcher", 10, 11)],
    ),
];

/// Brute-force scan of [`PUBLISHED_MAP`].
pub fn published_persona(level: &str, module: u8) -> &'static str {
    let (_, stages) = PUBLISHED_MAP.iter().find(|(l, _)| *l == level).unwrap();
    let hits: Vec<&str> = stages
        .iter()
        .filter(|(_, lo, hi)| (*lo..*hi).contains(&module))
        .map(|(s, _, _)| *s)
        .collect();
    assert_eq!(hits.len(), 1, "{level} {module}");
    hits[0]
}

/// Independent count of step-heading lines: outside code fences, a heading
/// or bold line whose first token is `<m>.<k>` (optionally after "Step").
pub fn count_step_lines(text: &str) -> usize {
    let mut in_fence = false;
    let mut n = 0;
    for line in text.lines() {
        let t = line.trim_end_matches('\r');
        if t.trim_start().starts_with("```") || t.trim_start().starts_with("~~~") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            continue;
        }
        let rest = if let Some(r) = t.strip_prefix("**") {
            r
        } else if t.starts_with("##") {
            let r = t.trim_start_matches('#');
            if !r.starts_with([' ', '\t']) {
                continue;
            }
            r.trim_start()
        } else {
            continue;
        };
        let rest = rest
            .strip_prefix("Step ")
            .or_else(|| rest.strip_prefix("step "))
            .unwrap_or(rest);
        let token: String = rest.chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
        let token = token.trim_end_matches('.');
        let parts: Vec<&str> = token.split('.').collect();
        let next = rest[token.len()..].chars().next();
        let boundary = next.is_none_or(|c| c.is_whitespace() || ":.)-*".contains(c));
        if parts.len() == 2 && parts.iter().all(|p| !p.is_empty()) && boundary {
            n += 1;
        }
    }
    n
}

/// Streak predicate straight from the definition: replay the window of
/// non-neutral categories and test its last three entries.
pub fn brute_force_streaks(history: &[curricula_core::Category]) -> (bool, bool) {
    let window: Vec<_> = history.iter().copied().filter(|c| !c.is_neutral()).collect();
    let window = &window[window.len().saturating_sub(5)..];
    if window.len() < 3 {
        return (false, false);
    }
    let tail = &window[window.len() - 3..];
    use curricula_core::Category::*;
    (
        tail.iter().all(|c| matches!(c, AnswerSeeking | PassiveAcceptance)),
        tail.iter().all(|c| matches!(c, ConceptQuestion | IndependentExploration)),
    )
}

#[derive(Debug, Clone, Deserialize)]
pub struct ClassifierRow {
    pub message: String,
    pub prior: usize,
    pub category: String,
    pub score: u8,
}

#[derive(Debug, Deserialize)]
struct ClassifierTable {
    row: Vec<ClassifierRow>,
}

pub fn classifier_rows() -> Vec<ClassifierRow> {
    let text = fs::read_to_string(fixtures_dir().join("classifier.toml")).unwrap();
    toml::from_str::<ClassifierTable>(&text).unwrap().row
}

/// Mean of the last five scores minus the mean of the five before, computed
/// in floating point directly from the definition.
pub fn trend_oracle(scores: &[u8]) -> curricula_core::Trend {
    if scores.len() < 10 {
        return curricula_core::Trend::Stable;
    }
    let tail = &scores[scores.len() - 10..];
    let mean = |s: &[u8]| s.iter().map(|&x| f64::from(x)).sum::<f64>() / 5.0;
    let diff = mean(&tail[5..]) - mean(&tail[..5]);
    if diff > 0.5 {
        curricula_core::Trend::Improving
    } else if diff < -0.5 {
        curricula_core::Trend::Declining
    } else {
        curricula_core::Trend::Stable
    }
}

/// One threshold grid point: module average and group shares as written,
/// realised on a 100-interaction module.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub average: f64,
    pub productive_share: f64,
    pub unproductive_share: f64,
}

impl GridPoint {
    /// The decision the boundary inequalities give for the literal values.
    pub fn expected(&self) -> curricula_core::Shift {
        if self.average >= 3.8 && self.productive_share > 0.6 {
            curricula_core::Shift::Up
        } else if self.average <= 2.0 && self.unproductive_share > 0.5 {
            curricula_core::Shift::Down
        } else {
            curricula_core::Shift::Hold
        }
    }

    /// Counts that make every interaction non-neutral, with the quality sum
    /// set directly. No count-consistent profile reaches an average of 3.8
    /// with only 60% productive turns, so the sum is decoupled from the
    /// per-category scores here.
    pub fn profile(&self) -> curricula_core::LearnerProfile {
        use curricula_core::Category::*;
        let total = 100u64;
        let productive = (self.productive_share * total as f64).round() as u64;
        let mut p = curricula_core::LearnerProfile::new(3);
        p.module_counts.insert(ConceptQuestion, productive);
        p.module_counts.insert(AnswerSeeking, total - productive);
        p.module_quality_sum = (self.average * total as f64).round() as u64;
        p
    }
}

pub fn threshold_grid() -> Vec<GridPoint> {
    let mut points = Vec::new();
    for average in [3.79, 3.8, 3.81] {
        for share in [0.59, 0.6, 0.61] {
            points.push(GridPoint {
                average,
                productive_share: share,
                unproductive_share: 1.0 - share,
            });
        }
    }
    for average in [1.99, 2.0, 2.01] {
        for share in [0.49, 0.5, 0.51] {
            points.push(GridPoint {
                average,
                productive_share: 1.0 - share,
                unproductive_share: share,
            });
        }
    }
    points
}

/// Outcome of one scripted module: the alert seen right after the burst, and
/// the stored level before, during and after the boundary.
#[derive(Debug)]
pub struct Timescales {
    pub alert_after_burst: Option<curricula_core::StreakAlert>,
    pub levels_mid_module: Vec<curricula_core::EffectiveLevel>,
    pub start: curricula_core::EffectiveLevel,
    pub after_boundary: curricula_core::EffectiveLevel,
    pub decision: curricula_core::Shift,
}

/// Drives one module through the on-disk path: a warm-up of random
/// non-neutral turns, then three `burst` turns with random neutral chatter
/// between them, each fed to `observe` through a growing transcript, then a
/// module boundary. The effective level lives in the markers file, which
/// only the boundary step rewrites.
pub fn run_timescales(dir: &Path, seed: u64, burst: curricula_core::Category) -> Timescales {
    use curricula_core::adaptation::{apply_boundary_file, make_note};
    use curricula_core::session::MarkerStore;
    use curricula_core::{
        observe, Category, EffectiveLevel, ExperienceLevel, Lexicon, PathId, ProfileStore, SessionMarkers,
    };
    use rand::{Rng, SeedableRng};

    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let profile = dir.join("learner-profile.json");
    let transcript = dir.join("transcript.jsonl");
    let markers = dir.join("CLAUDE.md");
    let _ = fs::remove_file(&profile);
    let start = EffectiveLevel::new(ExperienceLevel::ALL[rng.gen_range(0..3)]);
    MarkerStore::save(&markers, &SessionMarkers::new(PathId::Canvas, start)).unwrap();

    let message = |c: Category| -> (&'static str, usize) {
        match c {
            Category::ConceptQuestion => ("why does this hook run first?", 0),
            Category::IndependentExploration => ("I tried a second matcher", 0),
            Category::DebugAttempt => ("the test fails again", 0),
            Category::Neutral => ("next module", 0),
            Category::AnswerSeeking => ("just do it", 0),
            Category::PassiveAcceptance => ("ok", 900),
        }
    };
    let lexicon = Lexicon::default();
    let mut lines = String::new();
    let mut levels = Vec::new();
    let mut turn = |c: Category| {
        let (text, prior) = message(c);
        lines.push_str(&serde_json::json!({"role": "assistant", "content": "x".repeat(prior)}).to_string());
        lines.push('\n');
        lines.push_str(&serde_json::json!({"role": "user", "content": text}).to_string());
        lines.push('\n');
        fs::write(&transcript, &lines).unwrap();
        assert_eq!(observe(&transcript, &profile, &lexicon).applied(), Some(c));
        levels.push(MarkerStore::load(&markers).unwrap().unwrap().level);
    };

    let non_neutral: Vec<Category> = Category::ALL.into_iter().filter(|c| !c.is_neutral()).collect();
    for _ in 0..rng.gen_range(5..12) {
        turn(non_neutral[rng.gen_range(0..non_neutral.len())]);
    }
    for _ in 0..3 {
        for _ in 0..rng.gen_range(0..3) {
            turn(Category::Neutral);
        }
        turn(burst);
    }
    let alert_after_burst = make_note(&ProfileStore::load_or_init(&profile).unwrap()).and_then(|n| n.streak_alert);

    let mut m = MarkerStore::load(&markers).unwrap().unwrap();
    let outcome = apply_boundary_file(&profile, m.level, chrono::Utc::now()).unwrap();
    m.level = outcome.level;
    MarkerStore::save(&markers, &m).unwrap();
    Timescales {
        alert_after_burst,
        levels_mid_module: levels,
        start,
        after_boundary: MarkerStore::load(&markers).unwrap().unwrap().level,
        decision: outcome.decision.direction,
    }
}

/// The stages one onboarding run must visit, written out from the skip
/// rules: upgrade only on a version gap, language only for paths with a
/// language choice, resume only with earlier progress on disk.
pub fn expected_stages(project: curricula_core::PathId, gap: bool, prior: bool) -> Vec<&'static str> {
    let mut stages = vec!["version_check", "project_selection"];
    if gap {
        stages.push("curriculum_upgrade");
    }
    stages.push("os_detection");
    if !matches!(project, curricula_core::PathId::Canvas | curricula_core::PathId::Byop) {
        stages.push("language_selection");
    }
    stages.push("experience_level");
    if prior {
        stages.push("progress_resume");
    }
    stages.extend(["env_verification", "scaffolding", "module1_delivery", "complete"]);
    stages
}

/// Walks one onboarding path through the state file, re-loading from disk
/// before and after every step as if the process had been killed. Returns
/// the stages visited.
pub fn run_onboarding(
    state_path: &Path,
    project: curricula_core::PathId,
    gap: bool,
    prior: bool,
) -> Vec<&'static str> {
    use curricula_core::session::{FlowContext, OnboardingStore};
    use curricula_core::{ExperienceLevel, Stage, StageInput};

    let _ = fs::remove_file(state_path);
    let ctx = FlowContext { prior_markers: prior };
    let latest = if gap { "2.13.0" } else { "2.12.0" };
    let mut visited = Vec::new();
    let mut t = chrono::DateTime::from_timestamp(1_700_000_000, 0).unwrap();
    loop {
        let state = OnboardingStore::load(state_path).unwrap();
        visited.push(state.stage.as_str());
        if state.stage == Stage::Complete {
            return visited;
        }
        let input = match state.stage {
            Stage::VersionCheck => StageInput::VersionCheck {
                curriculum: "2.12.0".into(),
                latest: latest.into(),
            },
            Stage::ProjectSelection => StageInput::Project(project),
            Stage::OsDetection => StageInput::Os("linux".into()),
            Stage::LanguageSelection => StageInput::Language("rust".into()),
            Stage::ExperienceLevel => StageInput::Experience(ExperienceLevel::Beginner),
            Stage::ProgressResume => StageInput::Resume(true),
            _ => StageInput::Done,
        };
        let reloaded = OnboardingStore::load(state_path).unwrap();
        assert_eq!(reloaded, state, "reload before advancing from {}", state.stage);
        t += chrono::Duration::seconds(1);
        let advanced = OnboardingStore::advance(state_path, input, ctx, t).unwrap();
        let after_kill = OnboardingStore::load(state_path).unwrap();
        assert_eq!(after_kill, advanced, "reload after advancing from {}", state.stage);
        assert!(visited.len() <= Stage::ALL.len(), "onboarding does not terminate");
    }
}
