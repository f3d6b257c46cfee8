//! One asserting function per acceptance criterion. The core tests call these
//! directly; the CLI acceptance target times them and reports each outcome.

use std::collections::BTreeSet;

use curricula_core::{
    classify, decide_boundary, load_corpus, persona_for, shift_level, validate_all, Category, ExperienceLevel,
    LearnerProfile, Lexicon, PathId, PersonaSchedule, RuleSet, Shift, StreakAlert,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Persona assignments for every (level, module) pair against the published
/// map. Returns the number of pairs compared.
pub fn persona_map() -> usize {
    let schedule = PersonaSchedule::builtin();
    let mut checked = 0;
    for level in ExperienceLevel::ALL {
        for module in 1..=10u8 {
            let got = persona_for(&schedule, level, module).unwrap();
            assert_eq!(got.as_str(), super::published_persona(level.as_str(), module), "{level} {module}");
            checked += 1;
        }
    }
    assert_eq!(checked, 30);
    checked
}

/// The classifier fixture table, category and score. Returns the row count.
pub fn classifier_table() -> usize {
    let lexicon = Lexicon::default();
    let rows = super::classifier_rows();
    assert_eq!(rows.len(), 30);
    for row in &rows {
        let got = classify(&row.message, row.prior, &lexicon);
        assert_eq!(got.as_str(), row.category, "{:?}", row.message);
        assert_eq!(got.score(), row.score, "{:?}", row.message);
    }
    rows.len()
}

/// Incremental streak flags against the brute-force window predicate after
/// every step of `sequences` random histories of length at most 40.
pub fn streaks(seed: u64, sequences: usize) -> usize {
    let mut rng = StdRng::seed_from_u64(seed);
    let t = chrono::Utc::now();
    let mut steps = 0;
    for _ in 0..sequences {
        let len = rng.gen_range(0..=40);
        let history: Vec<Category> = (0..len).map(|_| Category::ALL[rng.gen_range(0..Category::ALL.len())]).collect();
        let mut profile = LearnerProfile::default();
        for (i, c) in history.iter().enumerate() {
            profile.record(*c, t);
            let expected = super::brute_force_streaks(&history[..=i]);
            assert_eq!((profile.struggle_streak, profile.engagement_streak), expected, "{history:?}");
            assert!(!(profile.struggle_streak && profile.engagement_streak));
            steps += 1;
        }
    }
    steps
}

/// Boundary decisions on the 18-point threshold grid. Returns (ups, downs).
pub fn threshold_grid() -> (usize, usize) {
    let grid = super::threshold_grid();
    assert_eq!(grid.len(), 18);
    let mut ups = 0;
    let mut downs = 0;
    for point in grid {
        let decision = decide_boundary(&point.profile());
        assert_eq!(decision.direction, point.expected(), "{point:?} -> {decision:?}");
        ups += usize::from(decision.direction == Shift::Up);
        downs += usize::from(decision.direction == Shift::Down);
    }
    // 3.8 and 3.81 with 61% productive; 1.99 and 2.0 with 51% unproductive.
    assert_eq!((ups, downs), (2, 2));
    (ups, downs)
}

/// A burst of three in one group alerts on the next note while the level
/// only moves at the boundary, over `runs` interleavings per burst kind.
pub fn two_timescales(runs: u64) -> u64 {
    let dir = tempfile::tempdir().unwrap();
    for (burst, alert) in [
        (Category::AnswerSeeking, StreakAlert::Struggle),
        (Category::ConceptQuestion, StreakAlert::Flow),
    ] {
        for seed in 0..runs {
            let run = super::run_timescales(dir.path(), seed, burst);
            assert_eq!(run.alert_after_burst, Some(alert), "{burst:?} seed {seed}");
            assert!(run.levels_mid_module.iter().all(|l| *l == run.start), "{burst:?} seed {seed}");
            assert_eq!(run.after_boundary, shift_level(run.start, run.decision), "{burst:?} seed {seed}");
        }
    }
    runs * 2
}

/// Golden corpus passes with zero violations and every seeded mutation is
/// reported with exactly its rule ids. Returns the number of classes seeded.
pub fn validator_fixtures() -> usize {
    let corpus = load_corpus(&super::golden_dir()).unwrap();
    assert_eq!(corpus.modules.len(), 50);
    let report = validate_all(&corpus, &PersonaSchedule::builtin(), &RuleSet::all());
    assert!(report.pass && report.violations.is_empty(), "{}", report.render_text());

    let cases = super::mutation_cases();
    let classes: BTreeSet<&str> = cases.iter().flat_map(|c| c.expect.iter().map(String::as_str)).collect();
    assert!(classes.len() >= 12, "{classes:?}");
    for case in &cases {
        let dir = super::golden_copy();
        case.apply(dir.path());
        let corpus = load_corpus(dir.path()).unwrap();
        let report = validate_all(&corpus, &case.schedule(), &RuleSet::all());
        let mut got: Vec<String> = report.violations.iter().map(|v| v.rule_id.to_string()).collect();
        got.sort();
        assert_eq!(got, case.sorted_expect(), "case {:?}\n{}", case.name, report.render_text());
        assert!(!report.pass);
    }
    classes.len()
}

/// Safe-append properties on random pairs plus revert-on-fault groups.
pub fn safe_append(pairs: usize) -> usize {
    super::syncgen::check_random_appends(7, pairs);
    super::syncgen::check_fault_reverts(11, pairs);
    pairs
}

/// All eight skip combinations reach completion, reloading from disk around
/// every transition.
pub fn onboarding_paths() -> usize {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("onboarding.json");
    let mut seen = BTreeSet::new();
    for project in [PathId::Canvas, PathId::Forge] {
        for gap in [false, true] {
            for prior in [false, true] {
                let visited = super::run_onboarding(&state, project, gap, prior);
                assert_eq!(visited, super::expected_stages(project, gap, prior), "{project} gap={gap} prior={prior}");
                seen.insert(visited);
            }
        }
    }
    assert_eq!(seen.len(), 8);
    seen.len()
}
